//! Audit report and its byte-stable JSON rendering.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::cvm::CvmEstimate;
use crate::dataset::DataTable;
use crate::error::{Error, Result};
use crate::fairness::{CausalScreen, FairnessVerdict, IntersectionalFindings};
use crate::sobol::{BoundViolation, SobolQuartet};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "fairgsa";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fingerprint {
    pub rows: usize,
    pub columns: Vec<String>,
    pub sha256: String,
}

impl Fingerprint {
    /// Fingerprint of the raw input bytes and the parsed table.
    pub fn of(bytes: &[u8], table: &DataTable) -> Self {
        let digest = Sha256::digest(bytes);
        Self {
            rows: table.n_rows(),
            columns: table.column_names().iter().map(|c| c.to_string()).collect(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Seeds {
    pub monte_carlo: u64,
    pub tie_break: u64,
    pub bootstrap: u64,
}

impl Seeds {
    pub fn all(seed: u64) -> Self {
        Self {
            monte_carlo: seed,
            tie_break: seed,
            bootstrap: seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedQuartet {
    pub features: Vec<String>,
    pub quartet: SobolQuartet,
    pub bound_violations: Vec<BoundViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedCvm {
    pub output: String,
    pub features: Vec<String>,
    pub estimate: CvmEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<Fingerprint>,
    pub seeds: Seeds,
    pub verdicts: Vec<FairnessVerdict>,
    pub quartets: Vec<NamedQuartet>,
    pub cvm: Vec<NamedCvm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intersectional: Option<IntersectionalFindings>,
    pub causal: Vec<CausalScreen>,
    pub warnings: Vec<String>,
}

impl AuditReport {
    pub fn new(command: impl Into<String>, seeds: Seeds) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: TOOL_NAME,
            tool_version: crate::TOOL_VERSION,
            command: command.into(),
            dataset: None,
            seeds,
            verdicts: Vec::new(),
            quartets: Vec::new(),
            cvm: Vec::new(),
            intersectional: None,
            causal: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(self)
    }
}

/// Pretty JSON in declaration order with every float in 17-significant-digit
/// scientific notation; non-finite floats become `null`.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, Canonical(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidArgument(format!("report serialization failed: {e}")))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("json output is utf-8"))
}

struct Canonical<'a>(PrettyFormatter<'a>);

impl Formatter for Canonical<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}
