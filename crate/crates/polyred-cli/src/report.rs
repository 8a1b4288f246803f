//! Report records and their deterministic JSON serialization.
//!
//! Floats are serialized with 17 significant digits so reruns with the same
//! seed and configuration produce byte-identical files.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;

#[derive(Serialize)]
pub struct Report {
    pub command: String,
    pub meta: Meta,
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct Meta {
    pub version: String,
    pub seed: u64,
    pub samples: usize,
    pub tol_rank: f64,
    pub tol_eq: f64,
    /// Command-specific scalar parameters, keyed by flag name.
    pub parameters: BTreeMap<String, f64>,
    /// Command-specific textual parameters (model names, vector seeds).
    pub labels: BTreeMap<String, String>,
}

/// One named check. `status` is `pass`, `fail` or `measured`; dimensions and
/// residuals are present where the check compares subspaces, `value` carries
/// scalar measurements.
#[derive(Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: String,
    pub lhs_dim: Option<usize>,
    pub rhs_dim: Option<usize>,
    pub residual: Option<f64>,
    pub value: Option<f64>,
}

impl CheckRecord {
    pub fn pass_fail(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            status: if passed { "pass" } else { "fail" }.into(),
            lhs_dim: None,
            rhs_dim: None,
            residual: None,
            value: None,
        }
    }

    pub fn measured(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            status: "measured".into(),
            lhs_dim: None,
            rhs_dim: None,
            residual: None,
            value: Some(value),
        }
    }

    pub fn with_dims(mut self, lhs: usize, rhs: usize) -> Self {
        self.lhs_dim = Some(lhs);
        self.rhs_dim = Some(rhs);
        self
    }

    pub fn with_residual(mut self, residual: f64) -> Self {
        self.residual = Some(residual);
        self
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.value = Some(value);
        self
    }
}

impl Report {
    /// All non-measured checks passed.
    pub fn all_passed(checks: &[CheckRecord]) -> bool {
        checks.iter().all(|c| c.status != "fail")
    }

    pub fn to_json(&self) -> io::Result<Vec<u8>> {
        let mut out = Vec::new();
        let mut serializer =
            serde_json::Serializer::with_formatter(&mut out, SigDigitFormatter::default());
        self.serialize(&mut serializer)
            .map_err(io::Error::other)?;
        out.push(b'\n');
        Ok(out)
    }
}

/// Compact JSON with every float printed as `d.dddddddddddddddde±e`
/// (17 significant digits).
#[derive(Default)]
struct SigDigitFormatter {
    compact: serde_json::ser::CompactFormatter,
}

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", format_f64(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{}", format_f64(value as f64))
    }

    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        serde_json::ser::Formatter::begin_array_value(&mut self.compact, writer, first)
    }

    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        serde_json::ser::Formatter::begin_object_key(&mut self.compact, writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        serde_json::ser::Formatter::begin_object_value(&mut self.compact, writer)
    }
}

/// 17 significant digits, JSON-compatible.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}
