//! Command-line front end: CSV audits, synthetic benchmarks, single-set
//! sensitivity indices and rank-based indices, with JSON or CSV output.

pub mod external;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairgsa_core::cvm::{bootstrap_ci, cvm_classical, cvm_independent, input_columns, CvmEstimate};
use fairgsa_core::dataset::{load_table, Column, Schema};
use fairgsa_core::experiments::{
    coverage_study, generate_dag_data, rows_to_csv, run_experiment, run_experiment_with, Coverage,
    DagGraph, ExperimentRow, ExperimentSpec, VARIABLES,
};
use fairgsa_core::fairness::{
    causal_screen, disparate_mistreatment, disparate_treatment, equality_of_odds,
    fair_by_degeneracy, intersectional_audit, loss_parity, statistical_parity, AuditOptions,
    FairnessMeasure, FairnessVerdict, IndexFamily, LossSpec, MeasureKind, ModelAccess,
};
use fairgsa_core::report::{
    to_canonical_json, AuditReport, Fingerprint, NamedCvm, NamedQuartet, Seeds, SCHEMA_VERSION,
    TOOL_NAME,
};
use fairgsa_core::sobol::check_bounds;
use fairgsa_core::{
    BlackBox, DataTable, Error, GaussianModel, IndexKind, LinearModel, Role, TOOL_VERSION,
};
use serde::Serialize;
use thiserror::Error;

use crate::external::{ExternalError, ExternalModel, ExternalModelProtocol};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] Error),
    #[error("{0}")]
    External(#[from] ExternalError),
    #[error("cannot read '{path}': {message}")]
    Read { path: String, message: String },
    #[error("cannot write '{path}': {message}")]
    Write { path: String, message: String },
}

impl CliError {
    /// 1 for invalid input or configuration, 2 for failures while computing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_validation() => 1,
            CliError::Read { .. } => 1,
            _ => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "fairgsa", version, about = "Sensitivity-index fairness audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandKind,
}

#[derive(Debug, Subcommand)]
pub enum CommandKind {
    /// Audit a CSV of predictions against sensitive columns.
    Audit(AuditArgs),
    /// Gaussian benchmarks with known indices, causal-graph data and coverage studies.
    Synthetic(SyntheticArgs),
    /// The four first-order and total indices of one input set.
    Sobol(SobolArgs),
    /// Rank-based indices of every input column, with bootstrap intervals.
    Cvm(CvmArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// JSON file with "mean" and "covariance" of the model inputs.
    #[arg(long)]
    pub model_spec: Option<PathBuf>,
    /// Shell command speaking the line-delimited CSV protocol.
    #[arg(long)]
    pub model_cmd: Option<String>,
    /// Weights of a linear model over the model inputs.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub linear: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub intercept: f64,
    /// Model input columns in call order.
    #[arg(long, value_delimiter = ',')]
    pub model_inputs: Option<Vec<String>>,
    /// Seconds to wait for each batch of replies from --model-cmd.
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    pub input: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub sensitive: Vec<String>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub prediction: Option<String>,
    /// Column holding a precomputed loss.
    #[arg(long)]
    pub loss: Option<String>,
    /// Loss used for disparate mistreatment when no loss column is given.
    #[arg(long, default_value = "zero_one")]
    pub loss_fn: String,
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub measure: Vec<String>,
    #[arg(long, default_value_t = fairgsa_core::fairness::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 10_000)]
    pub n_mc: usize,
    #[arg(long, default_value_t = 200)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SyntheticArgs {
    #[arg(long)]
    pub experiment: Option<u8>,
    /// Emit data from causal graph a, b or c instead.
    #[arg(long)]
    pub graph: Option<String>,
    #[arg(long = "n", visible_alias = "n-mc", default_value_t = 100_000)]
    pub n: usize,
    /// Run a coverage study with this many replicates.
    #[arg(long)]
    pub coverage: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub model_cmd: Option<String>,
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SobolArgs {
    /// CSV used to fit a Gaussian copula when no --model-spec is given.
    pub input: Option<PathBuf>,
    /// Input set whose indices are estimated.
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    #[arg(long, default_value_t = 10_000)]
    pub n_mc: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = fairgsa_core::fairness::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CvmArgs {
    pub input: PathBuf,
    /// Output column whose dependence on the inputs is measured.
    #[arg(long)]
    pub prediction: String,
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub sensitive: Vec<String>,
    #[arg(long, default_value_t = 200)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Parse `args` (including the program name), run, and return the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let target: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: CommandKind, stdout: &mut dyn Write) -> CliResult<()> {
    let (text, out) = match command {
        CommandKind::Audit(a) => (audit(&a)?, a.out),
        CommandKind::Synthetic(a) => (synthetic(&a)?, a.out),
        CommandKind::Sobol(a) => (sobol(&a)?, a.out),
        CommandKind::Cvm(a) => (cvm(&a)?, a.out),
    };
    emit(&text, out.output.as_deref(), stdout)
}

fn emit(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Write {
            path: p.display().to_string(),
            message: e.to_string(),
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Write {
                path: "<stdout>".into(),
                message: e.to_string(),
            }),
    }
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn timeout(seconds: f64) -> CliResult<Duration> {
    Duration::try_from_secs_f64(seconds)
        .map_err(|_| Error::InvalidArgument(format!("invalid timeout {seconds}")).into())
}

/// A model function built from the command line.
enum ModelFn {
    Linear(LinearModel),
    External(Box<ExternalModel>),
}

impl ModelFn {
    fn as_black_box(&mut self) -> &mut dyn BlackBox {
        match self {
            ModelFn::Linear(m) => m,
            ModelFn::External(m) => m.as_mut(),
        }
    }
}

fn model_function(args: &ModelArgs) -> CliResult<Option<ModelFn>> {
    match (&args.linear, &args.model_cmd) {
        (Some(_), Some(_)) => Err(Error::InvalidArgument(
            "give either --linear or --model-cmd, not both".into(),
        )
        .into()),
        (Some(w), None) => Ok(Some(ModelFn::Linear(LinearModel {
            weights: w.clone(),
            intercept: args.intercept,
        }))),
        (None, Some(cmd)) => {
            let mut protocol = ExternalModelProtocol::new(cmd.clone());
            protocol.timeout = timeout(args.timeout)?;
            Ok(Some(ModelFn::External(Box::new(ExternalModel::spawn(
                protocol,
            )?))))
        }
        (None, None) => Ok(None),
    }
}

fn distribution(args: &ModelArgs) -> CliResult<Option<GaussianModel>> {
    args.model_spec
        .as_ref()
        .map(|p| Ok(GaussianModel::from_json(read_bytes(p)?.as_slice())?))
        .transpose()
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

const PREDICTION_COLUMN: &str = "__prediction";

fn audit(a: &AuditArgs) -> CliResult<String> {
    if a.sensitive.is_empty() {
        return Err(Error::Schema("missing --sensitive".into()).into());
    }
    let mut schema = Schema::new();
    for f in &a.features {
        schema.push(f.clone(), Role::Feature);
    }
    for s in &a.sensitive {
        schema.push(s.clone(), Role::Sensitive);
    }
    for (col, role) in [
        (&a.target, Role::Target),
        (&a.prediction, Role::Prediction),
        (&a.loss, Role::Loss),
    ] {
        if let Some(c) = col {
            schema.push(c.clone(), role);
        }
    }
    let model_given = a.model.linear.is_some() || a.model.model_cmd.is_some();
    if a.prediction.is_none() && a.loss.is_none() && !model_given {
        return Err(
            Error::Schema("audit needs --prediction, --loss or a model source".into()).into(),
        );
    }
    let loss_fn = LossSpec::parse(&a.loss_fn)?;
    let requested: Vec<MeasureKind> = a
        .measure
        .iter()
        .map(|m| MeasureKind::parse(m))
        .collect::<Result<_, _>>()?;
    let bytes = read_bytes(&a.input)?;
    let mut table = load_table(bytes.as_slice(), &schema)?;
    let fingerprint = Fingerprint::of(&bytes, &table);

    let inputs: Vec<String> = a
        .model
        .model_inputs
        .clone()
        .unwrap_or_else(|| a.features.iter().chain(&a.sensitive).cloned().collect());
    let mut model = model_function(&a.model)?;
    let dist = distribution(&a.model)?;
    let prediction = match (&a.prediction, model.as_mut()) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(m)) => {
            let x = table.matrix(&strs(&inputs))?;
            let values = m.as_black_box().predict(x.view())?;
            table = table.with_column(Column::new(PREDICTION_COLUMN, Role::Prediction, values))?;
            Some(PREDICTION_COLUMN.to_string())
        }
        (None, None) => None,
    };

    let opts = AuditOptions {
        epsilon: a.epsilon,
        n_mc: a.n_mc,
        seed: a.out.seed,
        replicates: a.replicates,
        level: a.level,
        ..AuditOptions::default()
    };
    let sensitive = strs(&a.sensitive);
    let measures = if requested.is_empty() {
        MeasureKind::ALL
            .into_iter()
            .filter(|m| match m {
                MeasureKind::StatisticalParity => prediction.is_some(),
                MeasureKind::AvoidingDisparateTreatment => model.is_some(),
                MeasureKind::EqualityOfOdds => prediction.is_some() && a.target.is_some(),
                MeasureKind::AvoidingDisparateMistreatment => {
                    a.loss.is_some() || (prediction.is_some() && a.target.is_some())
                }
            })
            .collect()
    } else {
        requested
    };

    let mut report = AuditReport::new("audit", Seeds::all(a.out.seed));
    report.dataset = Some(fingerprint);
    let need_prediction = || -> CliResult<&str> {
        prediction.as_deref().ok_or_else(|| {
            Error::Schema("this measure needs --prediction or a model source".into()).into()
        })
    };
    let need_target = || -> CliResult<&str> {
        a.target
            .as_deref()
            .ok_or_else(|| Error::Schema("this measure needs --target".into()).into())
    };
    for m in measures {
        let degenerate = |kind| {
            fair_by_degeneracy(
                FairnessMeasure::predictor(kind),
                &sensitive,
                table.n_rows(),
                a.epsilon,
            )
        };
        let verdict: Result<FairnessVerdict, Error> = match m {
            MeasureKind::StatisticalParity => {
                let f = need_prediction()?;
                let mut access = model.as_mut().map(|m| ModelAccess {
                    function: m.as_black_box(),
                    inputs: inputs.clone(),
                    distribution: dist.clone(),
                });
                statistical_parity(&table, f, &sensitive, access.as_mut(), &opts)
            }
            MeasureKind::AvoidingDisparateTreatment => {
                let mut access = model.as_mut().map(|m| ModelAccess {
                    function: m.as_black_box(),
                    inputs: inputs.clone(),
                    distribution: dist.clone(),
                });
                disparate_treatment(access.as_mut(), Some(&table), &sensitive, &opts)
            }
            MeasureKind::EqualityOfOdds => equality_of_odds(
                &table,
                need_prediction()?,
                &sensitive,
                need_target()?,
                &opts,
            ),
            MeasureKind::AvoidingDisparateMistreatment => match &a.loss {
                Some(l) => loss_parity(&table, l, &sensitive, &opts),
                None => disparate_mistreatment(
                    &table,
                    need_prediction()?,
                    need_target()?,
                    &sensitive,
                    loss_fn,
                    &opts,
                ),
            },
        };
        report.verdicts.push(match verdict {
            Err(Error::DegenerateVariance) => degenerate(m),
            other => other?,
        });
    }

    if let Some(m) = model.as_mut() {
        let mut access = ModelAccess {
            function: m.as_black_box(),
            inputs: inputs.clone(),
            distribution: dist.clone(),
        };
        let mut sets: Vec<Vec<&str>> = sensitive.iter().map(|s| vec![*s]).collect();
        if sensitive.len() > 1 {
            sets.push(sensitive.clone());
        }
        for set in sets {
            match access.quartet(Some(&table), &set, &opts) {
                Ok(q) => {
                    report.causal.push(causal_screen(&q, a.epsilon));
                    report.quartets.push(NamedQuartet {
                        features: set.iter().map(|s| s.to_string()).collect(),
                        bound_violations: check_bounds(&q, None),
                        quartet: q,
                    });
                }
                Err(Error::DegenerateVariance) => {
                    report.warnings.push("model output is constant".into())
                }
                Err(e) => return Err(e.into()),
            }
        }
        if sensitive.len() > 1 {
            match intersectional_audit(&mut access, Some(&table), &sensitive, &opts) {
                Ok(found) => report.intersectional = Some(found),
                Err(Error::DegenerateVariance) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }

    if let Some(output) = prediction.as_deref().or(a.loss.as_deref()) {
        let all_inputs = input_columns(&table);
        for s in &sensitive {
            let classical = cvm_classical(&table, output, &[s], opts.seed);
            let independent = if all_inputs.len() > 1 {
                Some(cvm_independent(&table, output, s, opts.seed))
            } else {
                None
            };
            for est in std::iter::once(classical).chain(independent) {
                match est {
                    Ok(e) => report.cvm.push(NamedCvm {
                        output: output.to_string(),
                        features: vec![s.to_string()],
                        estimate: e,
                    }),
                    Err(e) => report
                        .warnings
                        .push(format!("rank index for '{s}' unavailable: {e}")),
                }
            }
        }
    }
    if let Some(ModelFn::External(m)) = model {
        m.close()?;
    }

    match a.out.format {
        Format::Json => Ok(report.to_json()?),
        Format::Csv => Ok(verdicts_csv(&report.verdicts)),
    }
}

fn family_name(f: IndexFamily) -> String {
    match f {
        IndexFamily::GroupedVariance => "grouped_variance".into(),
        IndexFamily::Sobol => "sob".into(),
        IndexFamily::SobolTotal => "sob_total".into(),
        IndexFamily::Cvm(k) => format!("cvm_{}", json_name(&k)),
    }
}

fn json_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn verdicts_csv(verdicts: &[FairnessVerdict]) -> String {
    let mut out = String::from(
        "measure,target,sensitive,index,value,stderr,ci_low,ci_high,level,method,n,seed,epsilon,verdict,degenerate,disparate_impact_index\n",
    );
    for v in verdicts {
        let e = &v.index;
        let di = v
            .disparate_impact
            .map(|d| d.identity_index.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            v.measure.kind.name(),
            json_name(&v.measure.target),
            v.sensitive.join("+"),
            family_name(v.index_family),
            e.value,
            e.stderr,
            e.ci_low,
            e.ci_high,
            e.level,
            e.method.name(),
            e.n,
            e.seed,
            v.epsilon,
            json_name(&v.verdict),
            v.degenerate,
            di
        ));
    }
    out
}

#[derive(Serialize)]
struct SyntheticReport<'a> {
    schema_version: u32,
    tool: &'static str,
    tool_version: &'static str,
    command: &'static str,
    seeds: Seeds,
    experiment: u8,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<&'a [ExperimentRow]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coverage: Option<&'a [(String, Vec<Coverage>)]>,
}

fn table_csv(table: &DataTable) -> String {
    let mut out = table.column_names().join(",");
    out.push('\n');
    for i in 0..table.n_rows() {
        let row: Vec<String> = table
            .columns()
            .iter()
            .map(|c| c.values[i].to_string())
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn synthetic(a: &SyntheticArgs) -> CliResult<String> {
    let seed = a.out.seed;
    if let Some(g) = &a.graph {
        if a.out.format == Format::Json {
            return Err(Error::InvalidArgument(
                "graph data is emitted as csv; pass --format csv".into(),
            )
            .into());
        }
        return Ok(table_csv(&generate_dag_data(
            DagGraph::parse(g)?,
            a.n,
            seed,
        )?));
    }
    let id = a
        .experiment
        .ok_or_else(|| Error::InvalidArgument("synthetic needs --experiment or --graph".into()))?;
    let mut spec = ExperimentSpec::new(id, a.n, seed)?;
    spec.level = a.level;
    let base = SyntheticReport {
        schema_version: SCHEMA_VERSION,
        tool: TOOL_NAME,
        tool_version: TOOL_VERSION,
        command: "synthetic",
        seeds: Seeds::all(seed),
        experiment: id,
        n: a.n,
        rows: None,
        coverage: None,
    };
    if let Some(r) = a.coverage {
        let per_variable: Vec<(String, Vec<Coverage>)> = (0..VARIABLES.len())
            .map(|v| {
                Ok((
                    VARIABLES[v].to_string(),
                    coverage_study(&spec, v, r, a.n, a.level)?,
                ))
            })
            .collect::<Result<_, Error>>()?;
        return match a.out.format {
            Format::Json => Ok(to_canonical_json(&SyntheticReport {
                coverage: Some(&per_variable),
                ..base
            })?),
            Format::Csv => {
                let mut out = String::from(
                    "variable,index,theory,covered,replicates,coverage,band_low,band_high\n",
                );
                for (name, rows) in &per_variable {
                    for c in rows {
                        out.push_str(&format!(
                            "{name},{},{},{},{},{},{},{}\n",
                            c.kind.name(),
                            c.theory,
                            c.covered,
                            c.replicates,
                            c.coverage,
                            c.band.0,
                            c.band.1
                        ));
                    }
                }
                Ok(out)
            }
        };
    }
    let rows = match &a.model_cmd {
        Some(cmd) => {
            let mut protocol = ExternalModelProtocol::new(cmd.clone());
            protocol.timeout = timeout(a.timeout)?;
            let mut m = ExternalModel::spawn(protocol)?;
            let rows = run_experiment_with(&spec, &mut m)?;
            m.close()?;
            rows
        }
        None => run_experiment(&spec)?,
    };
    match a.out.format {
        Format::Json => Ok(to_canonical_json(&SyntheticReport {
            rows: Some(&rows),
            ..base
        })?),
        Format::Csv => Ok(rows_to_csv(&rows)?),
    }
}

#[derive(Serialize)]
struct SobolReport {
    schema_version: u32,
    tool: &'static str,
    tool_version: &'static str,
    command: &'static str,
    seeds: Seeds,
    inputs: Vec<String>,
    result: NamedQuartet,
    causal: fairgsa_core::fairness::CausalScreen,
}

fn sobol(a: &SobolArgs) -> CliResult<String> {
    if a.features.is_empty() {
        return Err(Error::Schema("missing --features".into()).into());
    }
    let dist = distribution(&a.model)?;
    let table = match &a.input {
        Some(path) => {
            let names = a
                .model
                .model_inputs
                .clone()
                .ok_or_else(|| Error::Schema("a CSV input needs --model-inputs".into()))?;
            let mut schema = Schema::new();
            for n in &names {
                schema.push(n.clone(), Role::Feature);
            }
            Some(load_table(read_bytes(path)?.as_slice(), &schema)?)
        }
        None => None,
    };
    let inputs: Vec<String> = match (&a.model.model_inputs, &dist) {
        (Some(names), _) => names.clone(),
        (None, Some(m)) => (1..=m.dim()).map(|i| format!("x{i}")).collect(),
        (None, None) => return Err(Error::MissingModel.into()),
    };
    let mut model = model_function(&a.model)?.ok_or(Error::MissingModelFunction)?;
    let opts = AuditOptions {
        epsilon: a.epsilon,
        n_mc: a.n_mc,
        seed: a.out.seed,
        level: a.level,
        ..AuditOptions::default()
    };
    let set = strs(&a.features);
    let q = ModelAccess {
        function: model.as_black_box(),
        inputs: inputs.clone(),
        distribution: dist,
    }
    .quartet(table.as_ref(), &set, &opts)?;
    if let ModelFn::External(m) = model {
        m.close()?;
    }
    let causal = causal_screen(&q, a.epsilon);
    let result = NamedQuartet {
        features: a.features.clone(),
        bound_violations: check_bounds(&q, None),
        quartet: q,
    };
    match a.out.format {
        Format::Json => Ok(to_canonical_json(&SobolReport {
            schema_version: SCHEMA_VERSION,
            tool: TOOL_NAME,
            tool_version: TOOL_VERSION,
            command: "sobol",
            seeds: Seeds::all(a.out.seed),
            inputs,
            result,
            causal,
        })?),
        Format::Csv => {
            let mut out =
                String::from("features,index,value,stderr,ci_low,ci_high,level,method,n,seed\n");
            for k in IndexKind::ALL {
                let e = result.quartet.get(k);
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{}\n",
                    a.features.join("+"),
                    k.name(),
                    e.value,
                    e.stderr,
                    e.ci_low,
                    e.ci_high,
                    e.level,
                    e.method.name(),
                    e.n,
                    e.seed
                ));
            }
            Ok(out)
        }
    }
}

fn cvm(a: &CvmArgs) -> CliResult<String> {
    let mut schema = Schema::new().with(a.prediction.clone(), Role::Prediction);
    for f in &a.features {
        schema.push(f.clone(), Role::Feature);
    }
    for s in &a.sensitive {
        schema.push(s.clone(), Role::Sensitive);
    }
    let bytes = read_bytes(&a.input)?;
    let table = load_table(bytes.as_slice(), &schema)?;
    let inputs: Vec<String> = input_columns(&table)
        .into_iter()
        .map(str::to_string)
        .collect();
    if inputs.is_empty() {
        return Err(Error::Schema("missing --features or --sensitive".into()).into());
    }
    let seed = a.out.seed;
    let mut report = AuditReport::new("cvm", Seeds::all(seed));
    report.dataset = Some(Fingerprint::of(&bytes, &table));
    let y = a.prediction.as_str();
    for name in &inputs {
        let col = name.as_str();
        let mut kinds: Vec<Box<dyn Fn(&DataTable) -> Result<CvmEstimate, Error> + Sync>> =
            vec![Box::new(move |t: &DataTable| {
                cvm_classical(t, y, &[col], seed)
            })];
        if inputs.len() > 1 {
            kinds.push(Box::new(move |t: &DataTable| {
                cvm_independent(t, y, col, seed)
            }));
        }
        for est in kinds {
            let mut e = match est(&table) {
                Ok(e) => e,
                Err(err) => {
                    report
                        .warnings
                        .push(format!("rank index for '{col}' unavailable: {err}"));
                    continue;
                }
            };
            match bootstrap_ci(&table, |t| Ok(est(t)?.value), a.replicates, a.level, seed) {
                Ok(ci) => e.ci = Some(ci),
                Err(err) if err.is_validation() => return Err(err.into()),
                Err(err) => report
                    .warnings
                    .push(format!("no interval for '{col}': {err}")),
            }
            report.cvm.push(NamedCvm {
                output: y.to_string(),
                features: vec![name.clone()],
                estimate: e,
            });
        }
    }
    match a.out.format {
        Format::Json => Ok(report.to_json()?),
        Format::Csv => {
            let mut out =
                String::from("output,feature,kind,value,ci_low,ci_high,level,method,n,seed\n");
            for c in &report.cvm {
                let e = &c.estimate;
                let (lo, hi, level, method) =
                    e.ci.map(|ci| (ci.ci_low, ci.ci_high, ci.level, ci.method.name()))
                        .unwrap_or((f64::NAN, f64::NAN, f64::NAN, "plugin"));
                out.push_str(&format!(
                    "{},{},{},{},{lo},{hi},{level},{method},{},{}\n",
                    c.output,
                    c.features.join("+"),
                    json_name(&e.kind),
                    e.value,
                    e.n,
                    e.tie_seed
                ));
            }
            Ok(out)
        }
    }
}
