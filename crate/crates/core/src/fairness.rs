//! Fairness measures expressed as sensitivity indices of a predictor or a loss
//! with respect to sensitive features, with interval-aware verdicts.

use serde::Serialize;

use crate::cvm::{
    between_group_share, bootstrap_ci, conditional_t_grouped, group_keys,
    grouped_conditional_index_min, is_discrete, unconditional_t_grouped, CvmKind,
};
use crate::dataset::{Column, DataTable, Role};
use crate::error::{Error, Result};
use crate::gaussian::{fit_gaussian_copula, GaussianCopula, GaussianModel};
use crate::model::BlackBox;
use crate::sobol::{sobol_indices, IndexEstimate, Method, PickFreezeSampler, SobolQuartet};

pub const DEFAULT_EPSILON: f64 = 0.02;
const MIN_GROUP_ROWS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    StatisticalParity,
    AvoidingDisparateTreatment,
    EqualityOfOdds,
    AvoidingDisparateMistreatment,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 4] = [
        MeasureKind::StatisticalParity,
        MeasureKind::AvoidingDisparateTreatment,
        MeasureKind::EqualityOfOdds,
        MeasureKind::AvoidingDisparateMistreatment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeasureKind::StatisticalParity => "statistical_parity",
            MeasureKind::AvoidingDisparateTreatment => "avoiding_disparate_treatment",
            MeasureKind::EqualityOfOdds => "equality_of_odds",
            MeasureKind::AvoidingDisparateMistreatment => "avoiding_disparate_mistreatment",
        }
    }

    pub fn parse(name: &str) -> Result<MeasureKind> {
        match name {
            "disparate_treatment" => Ok(MeasureKind::AvoidingDisparateTreatment),
            "disparate_mistreatment" => Ok(MeasureKind::AvoidingDisparateMistreatment),
            _ => MeasureKind::ALL
                .into_iter()
                .find(|m| m.name() == name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown measure '{name}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Predictor,
    Loss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSpec {
    ZeroOne,
    Squared,
}

impl LossSpec {
    pub fn parse(name: &str) -> Result<LossSpec> {
        match name {
            "zero_one" => Ok(LossSpec::ZeroOne),
            "squared" => Ok(LossSpec::Squared),
            _ => Err(Error::InvalidArgument(format!("unknown loss '{name}'"))),
        }
    }

    pub fn apply(self, prediction: f64, target: f64) -> f64 {
        match self {
            LossSpec::ZeroOne => f64::from(u8::from(prediction != target)),
            LossSpec::Squared => (prediction - target) * (prediction - target),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct FairnessMeasure {
    pub kind: MeasureKind,
    pub target: Target,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossSpec>,
}

impl FairnessMeasure {
    pub fn predictor(kind: MeasureKind) -> Self {
        Self {
            kind,
            target: Target::Predictor,
            loss: None,
        }
    }

    pub fn on_loss(kind: MeasureKind, loss: LossSpec) -> Self {
        Self {
            kind,
            target: Target::Loss,
            loss: Some(loss),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Fair,
    ApproximatelyFair,
    Inconclusive,
    Unfair,
}

/// Verdict from an interval: `fair` needs the whole interval at zero (or a
/// degenerate output), `approximately_fair` needs it below `epsilon`, `unfair`
/// needs it strictly above.
pub fn classify(index: &IndexEstimate, epsilon: f64, degenerate: bool) -> Verdict {
    if degenerate {
        return Verdict::Fair;
    }
    if index.ci_high <= epsilon {
        if index.ci_high <= 0.0 {
            Verdict::Fair
        } else {
            Verdict::ApproximatelyFair
        }
    } else if index.ci_low > epsilon {
        Verdict::Unfair
    } else {
        Verdict::Inconclusive
    }
}

/// Group-rate summary for a single binary sensitive column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisparateImpact {
    /// Share of rows in the higher-coded group.
    pub p_hat: f64,
    /// Mean in the higher-coded group minus mean in the lower-coded group.
    pub rate_gap: f64,
    /// `p̂(1 − p̂)·gap² / Var(f)`, which must equal the grouped index.
    pub identity_index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FairnessVerdict {
    pub measure: FairnessMeasure,
    pub sensitive: Vec<String>,
    pub index: IndexEstimate,
    pub index_family: IndexFamily,
    pub epsilon: f64,
    pub verdict: Verdict,
    pub degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disparate_impact: Option<DisparateImpact>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// What kind of quantity the index is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexFamily {
    GroupedVariance,
    Sobol,
    SobolTotal,
    Cvm(CvmKind),
}

/// How continuous sensitive features are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContinuousRoute {
    /// Pick-freeze when a model function is available, rank statistic otherwise.
    #[default]
    Auto,
    PickFreeze,
    Rank,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditOptions {
    pub epsilon: f64,
    pub n_mc: usize,
    pub seed: u64,
    pub replicates: usize,
    pub level: f64,
    pub route: ContinuousRoute,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            n_mc: 10_000,
            seed: 0,
            replicates: 200,
            level: crate::sobol::DEFAULT_LEVEL,
            route: ContinuousRoute::Auto,
        }
    }
}

/// Query access to a model: the function, the names of its input columns in
/// call order, and optionally the input distribution. Without a distribution
/// a Gaussian copula is fitted to the input columns of the audited table.
pub struct ModelAccess<'a> {
    pub function: &'a mut dyn BlackBox,
    pub inputs: Vec<String>,
    pub distribution: Option<GaussianModel>,
}

enum Sampler {
    Gaussian(GaussianModel),
    Copula(GaussianCopula),
}

impl Sampler {
    fn as_dyn(&self) -> &dyn PickFreezeSampler {
        match self {
            Sampler::Gaussian(m) => m,
            Sampler::Copula(c) => c,
        }
    }
}

impl ModelAccess<'_> {
    fn sampler(&self, table: Option<&DataTable>) -> Result<Sampler> {
        match (&self.distribution, table) {
            (Some(m), _) => {
                if m.dim() != self.inputs.len() {
                    return Err(Error::LengthMismatch {
                        expected: self.inputs.len(),
                        got: m.dim(),
                    });
                }
                Ok(Sampler::Gaussian(m.clone()))
            }
            (None, Some(t)) => {
                let names: Vec<&str> = self.inputs.iter().map(String::as_str).collect();
                Ok(Sampler::Copula(fit_gaussian_copula(t, &names)?))
            }
            (None, None) => Err(Error::MissingModel),
        }
    }

    fn positions(&self, names: &[&str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.inputs
                    .iter()
                    .position(|c| c == n)
                    .ok_or_else(|| Error::Schema(format!("'{n}' is not a model input")))
            })
            .collect()
    }

    /// Quartet of the input set `names`.
    pub fn quartet(
        &mut self,
        table: Option<&DataTable>,
        names: &[&str],
        opts: &AuditOptions,
    ) -> Result<SobolQuartet> {
        let set = self.positions(names)?;
        let sampler = self.sampler(table)?;
        sobol_indices(
            self.function,
            sampler.as_dyn(),
            &set,
            opts.n_mc,
            opts.seed,
            opts.level,
        )
    }
}

fn verdict(
    measure: FairnessMeasure,
    sensitive: &[&str],
    index: IndexEstimate,
    family: IndexFamily,
    opts: &AuditOptions,
) -> FairnessVerdict {
    FairnessVerdict {
        measure,
        sensitive: sensitive.iter().map(|s| s.to_string()).collect(),
        verdict: classify(&index, opts.epsilon, false),
        index,
        index_family: family,
        epsilon: opts.epsilon,
        degenerate: false,
        disparate_impact: None,
        note: None,
    }
}

/// Verdict for a constant predictor or loss: independence holds trivially.
pub fn fair_by_degeneracy(
    measure: FairnessMeasure,
    sensitive: &[&str],
    n: usize,
    epsilon: f64,
) -> FairnessVerdict {
    FairnessVerdict {
        measure,
        sensitive: sensitive.iter().map(|s| s.to_string()).collect(),
        index: IndexEstimate::exact(0.0, Method::Plugin, n, 0),
        index_family: IndexFamily::GroupedVariance,
        epsilon,
        verdict: Verdict::Fair,
        degenerate: true,
        disparate_impact: None,
        note: Some("output is constant, so it is independent of every sensitive feature".into()),
    }
}

fn sensitive_discrete(table: &DataTable, sensitive: &[&str]) -> Result<bool> {
    if sensitive.is_empty() {
        return Err(Error::Schema("no sensitive column given".into()));
    }
    for s in sensitive {
        if !is_discrete(table.values(s)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Interval from the bootstrap, or the bare plug-in value when resampling is
/// not stable on this table.
fn with_bootstrap<F>(
    table: &DataTable,
    value: f64,
    estimator: F,
    opts: &AuditOptions,
) -> Result<IndexEstimate>
where
    F: Fn(&DataTable) -> Result<f64> + Sync,
{
    match bootstrap_ci(table, estimator, opts.replicates, opts.level, opts.seed) {
        Ok(e) => Ok(e),
        Err(Error::BootstrapUnstable { .. }) => Ok(IndexEstimate::with_stderr(
            value,
            f64::NAN,
            Method::Plugin,
            table.n_rows(),
            opts.seed,
        )),
        Err(e) => Err(e),
    }
}

/// A resample with a constant output carries no dependence at all.
fn zero_if_constant(r: Result<f64>) -> Result<f64> {
    match r {
        Err(Error::DegenerateVariance) => Ok(0.0),
        other => other,
    }
}

fn grouped_share(table: &DataTable, output: &str, sensitive: &[&str]) -> Result<f64> {
    let cols: Vec<&[f64]> = sensitive
        .iter()
        .map(|s| table.values(s))
        .collect::<Result<_>>()?;
    between_group_share(table.values(output)?, &group_keys(&cols))
}

fn disparate_impact(f: &[f64], s: &[f64]) -> Option<DisparateImpact> {
    let mut levels: Vec<f64> = s.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    if levels.len() != 2 {
        return None;
    }
    let (mut n1, mut sum0, mut sum1) = (0usize, 0.0, 0.0);
    for (v, g) in f.iter().zip(s) {
        if *g == levels[1] {
            n1 += 1;
            sum1 += v;
        } else {
            sum0 += v;
        }
    }
    let n = f.len() as f64;
    let p = n1 as f64 / n;
    let gap = sum1 / n1 as f64 - sum0 / (f.len() - n1) as f64;
    let m = f.iter().sum::<f64>() / n;
    let var = f.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    Some(DisparateImpact {
        p_hat: p,
        rate_gap: gap,
        identity_index: p * (1.0 - p) * gap * gap / var,
    })
}

fn parity_index(
    table: &DataTable,
    output: &str,
    sensitive: &[&str],
    model: Option<&mut ModelAccess<'_>>,
    measure: FairnessMeasure,
    opts: &AuditOptions,
) -> Result<FairnessVerdict> {
    if sensitive_discrete(table, sensitive)? {
        let value = grouped_share(table, output, sensitive)?;
        let index = with_bootstrap(
            table,
            value,
            |t| zero_if_constant(grouped_share(t, output, sensitive)),
            opts,
        )?;
        let mut v = verdict(
            measure,
            sensitive,
            index,
            IndexFamily::GroupedVariance,
            opts,
        );
        if let [s] = sensitive {
            v.disparate_impact = disparate_impact(table.values(output)?, table.values(s)?);
        }
        return Ok(v);
    }
    match (opts.route, model) {
        (ContinuousRoute::PickFreeze, None) => Err(Error::MissingModel),
        (ContinuousRoute::Auto | ContinuousRoute::PickFreeze, Some(m)) => {
            let q = m.quartet(Some(table), sensitive, opts)?;
            Ok(verdict(measure, sensitive, q.sob, IndexFamily::Sobol, opts))
        }
        _ => {
            let rank =
                |t: &DataTable| {
                    let z = t.matrix(sensitive)?;
                    Ok(unconditional_t_grouped(
                        t.values(output)?,
                        z.view(),
                        t.row_origin(),
                        opts.seed,
                    )?
                    .value)
                };
            let value = rank(table)?;
            let index = with_bootstrap(table, value, rank, opts)?;
            Ok(verdict(
                measure,
                sensitive,
                index,
                IndexFamily::Cvm(CvmKind::UnconditionalT),
                opts,
            ))
        }
    }
}

/// Dependence of the predictions on the sensitive features.
///
/// Discrete sensitive features use the grouped variance of group means over
/// the total variance, with a bootstrap interval. Continuous ones use the
/// first-order index through `model`, or the rank statistic without one.
pub fn statistical_parity(
    table: &DataTable,
    prediction: &str,
    sensitive: &[&str],
    model: Option<&mut ModelAccess<'_>>,
    opts: &AuditOptions,
) -> Result<FairnessVerdict> {
    parity_index(
        table,
        prediction,
        sensitive,
        model,
        FairnessMeasure::predictor(MeasureKind::StatisticalParity),
        opts,
    )
}

/// Total index of the sensitive set through the model function.
pub fn disparate_treatment(
    model: Option<&mut ModelAccess<'_>>,
    table: Option<&DataTable>,
    sensitive: &[&str],
    opts: &AuditOptions,
) -> Result<FairnessVerdict> {
    let model = model.ok_or(Error::MissingModelFunction)?;
    let q = model.quartet(table, sensitive, opts)?;
    Ok(verdict(
        FairnessMeasure::predictor(MeasureKind::AvoidingDisparateTreatment),
        sensitive,
        q.sob_total,
        IndexFamily::SobolTotal,
        opts,
    ))
}

fn odds_index(
    table: &DataTable,
    prediction: &str,
    sensitive: &[&str],
    target: &str,
    seed: u64,
    min_group: usize,
) -> Result<(f64, IndexFamily)> {
    let f = table.values(prediction)?;
    let y = table.values(target)?;
    if !is_discrete(y) {
        let x = table.matrix(sensitive)?;
        let z = table.matrix(&[target])?;
        let t = conditional_t_grouped(f, x.view(), z.view(), table.row_origin(), seed)?;
        return Ok((t.value, IndexFamily::Cvm(CvmKind::ConditionalT)));
    }
    if sensitive_discrete(table, sensitive)? {
        let cols: Vec<&[f64]> = sensitive
            .iter()
            .map(|s| table.values(s))
            .collect::<Result<_>>()?;
        let v = grouped_conditional_index_min(f, &group_keys(&cols), y, min_group)?;
        return Ok((v, IndexFamily::GroupedVariance));
    }
    let mut by_y: std::collections::BTreeMap<u64, Vec<usize>> = std::collections::BTreeMap::new();
    for (i, v) in y.iter().enumerate() {
        by_y.entry((v + 0.0).to_bits()).or_default().push(i);
    }
    let n = f.len() as f64;
    let mut acc = 0.0;
    for (key, rows) in by_y {
        if rows.len() < MIN_GROUP_ROWS {
            return Err(Error::GroupTooSmall {
                group: f64::from_bits(key).to_string(),
                size: rows.len(),
                needed: MIN_GROUP_ROWS,
            });
        }
        let sub = table.select_rows(&rows)?;
        let z = sub.matrix(sensitive)?;
        let t = unconditional_t_grouped(sub.values(prediction)?, z.view(), sub.row_origin(), seed)?;
        acc += rows.len() as f64 / n * t.value;
    }
    Ok((acc, IndexFamily::Cvm(CvmKind::UnconditionalT)))
}

/// Dependence of the predictions on the sensitive features given the target.
pub fn equality_of_odds(
    table: &DataTable,
    prediction: &str,
    sensitive: &[&str],
    target: &str,
    opts: &AuditOptions,
) -> Result<FairnessVerdict> {
    let (value, family) = odds_index(
        table,
        prediction,
        sensitive,
        target,
        opts.seed,
        MIN_GROUP_ROWS,
    )?;
    let resampled = |t: &DataTable| {
        let min_group = if family == IndexFamily::GroupedVariance {
            1
        } else {
            MIN_GROUP_ROWS
        };
        zero_if_constant(
            odds_index(t, prediction, sensitive, target, opts.seed, min_group).map(|r| r.0),
        )
    };
    let index = with_bootstrap(table, value, resampled, opts)?;
    Ok(verdict(
        FairnessMeasure::predictor(MeasureKind::EqualityOfOdds),
        sensitive,
        index,
        family,
        opts,
    ))
}

pub const LOSS_COLUMN: &str = "__loss";

/// Statistical parity applied to the rowwise loss of the predictions.
pub fn disparate_mistreatment(
    table: &DataTable,
    prediction: &str,
    target: &str,
    sensitive: &[&str],
    loss: LossSpec,
    opts: &AuditOptions,
) -> Result<FairnessVerdict> {
    let f = table.values(prediction)?;
    let y = table.values(target)?;
    let values: Vec<f64> = f.iter().zip(y).map(|(a, b)| loss.apply(*a, *b)).collect();
    let with_loss = table
        .clone()
        .with_column(Column::new(LOSS_COLUMN, Role::Loss, values))?;
    let measure = FairnessMeasure::on_loss(MeasureKind::AvoidingDisparateMistreatment, loss);
    match parity_index(&with_loss, LOSS_COLUMN, sensitive, None, measure, opts) {
        Err(Error::DegenerateVariance) => Ok(fair_by_degeneracy(
            measure,
            sensitive,
            table.n_rows(),
            opts.epsilon,
        )),
        other => other,
    }
}

/// Statistical parity on an existing loss column.
pub fn loss_parity(
    table: &DataTable,
    loss: &str,
    sensitive: &[&str],
    opts: &AuditOptions,
) -> Result<FairnessVerdict> {
    let measure = FairnessMeasure {
        kind: MeasureKind::AvoidingDisparateMistreatment,
        target: Target::Loss,
        loss: None,
    };
    match parity_index(table, loss, sensitive, None, measure, opts) {
        Err(Error::DegenerateVariance) => Ok(fair_by_degeneracy(
            measure,
            sensitive,
            table.n_rows(),
            opts.epsilon,
        )),
        other => other,
    }
}

/// Consistency of a null total index for one member with the group indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullMemberCheck {
    pub member: String,
    /// First-order index of the group minus that of the group without this member.
    pub interaction: f64,
    pub tolerance: f64,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionalFindings {
    pub sensitive: Vec<String>,
    pub group: SobolQuartet,
    pub group_verdict: Verdict,
    pub group_total_verdict: Verdict,
    pub singletons: Vec<SobolQuartet>,
    pub null_member_checks: Vec<NullMemberCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Group and singleton indices of several sensitive inputs.
///
/// A member whose total index is null cannot take part in any interaction, so
/// adding it to the rest of the group must leave the first-order index
/// unchanged. Null singleton first-order indices alone say nothing about the
/// group, and a warning carries the measured group index in that case.
pub fn intersectional_audit(
    model: &mut ModelAccess<'_>,
    table: Option<&DataTable>,
    sensitive: &[&str],
    opts: &AuditOptions,
) -> Result<IntersectionalFindings> {
    if sensitive.len() < 2 {
        return Err(Error::InvalidArgument(
            "an intersectional audit needs at least two sensitive inputs".into(),
        ));
    }
    let group = model.quartet(table, sensitive, opts)?;
    let singletons: Vec<SobolQuartet> = sensitive
        .iter()
        .map(|s| model.quartet(table, &[s], opts))
        .collect::<Result<_>>()?;
    let mut checks = Vec::new();
    for (i, single) in singletons.iter().enumerate() {
        if single.sob_total.ci_high > opts.epsilon {
            continue;
        }
        let rest: Vec<&str> = sensitive
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, s)| *s)
            .collect();
        let rest_q = if rest.len() == 1 {
            singletons[1 - i].clone()
        } else {
            model.quartet(table, &rest, opts)?
        };
        let interaction = group.sob.value - rest_q.sob.value;
        let combined = (group.sob.stderr.powi(2) + rest_q.sob.stderr.powi(2)).sqrt();
        let tolerance = opts.epsilon.max(3.0 * combined);
        checks.push(NullMemberCheck {
            member: sensitive[i].to_string(),
            interaction,
            tolerance,
            consistent: interaction.abs() <= tolerance,
        });
    }
    let warning = singletons
        .iter()
        .all(|q| q.sob.ci_high <= opts.epsilon)
        .then(|| {
            format!(
                "every single sensitive input has a null first-order index, which does not certify the group; group first-order index is {:.4}",
                group.sob.value
            )
        });
    Ok(IntersectionalFindings {
        sensitive: sensitive.iter().map(|s| s.to_string()).collect(),
        group_verdict: classify(&group.sob, opts.epsilon, false),
        group_total_verdict: classify(&group.sob_total, opts.epsilon, false),
        group,
        singletons,
        null_member_checks: checks,
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalFinding {
    NoPath,
    NoDirectEdge,
    DirectInfluencePossible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalScreen {
    pub features: Vec<usize>,
    pub finding: CausalFinding,
    pub sob_total: IndexEstimate,
    pub sob_total_ind: IndexEstimate,
    pub epsilon: f64,
}

/// Null total index rules out every path to the output; a null independent
/// total index rules out a direct edge. Nothing is ever claimed to exist.
pub fn causal_screen(quartet: &SobolQuartet, epsilon: f64) -> CausalScreen {
    let finding = if quartet.sob_total.ci_high <= epsilon {
        CausalFinding::NoPath
    } else if quartet.sob_total_ind.ci_high <= epsilon {
        CausalFinding::NoDirectEdge
    } else {
        CausalFinding::DirectInfluencePossible
    };
    CausalScreen {
        features: quartet.features.clone(),
        finding,
        sob_total: quartet.sob_total,
        sob_total_ind: quartet.sob_total_ind,
        epsilon,
    }
}
