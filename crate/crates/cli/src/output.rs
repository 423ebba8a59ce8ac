use std::io::{self, Write};
use std::path::{Path, PathBuf};

use cmc_core::diagnostics::LeafReport;
use cmc_core::solver::CmcLeaf;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use crate::config::ConfigEcho;
use crate::CliError;

pub const SCHEMA_VERSION: &str = "cmcfol/1";

/// `foliation.csv` header; documented in the `foliate` help text.
pub const CSV_COLUMNS: [&str; 11] = [
    "r",
    "area",
    "H_target",
    "H_achieved",
    "sup_phi",
    "sup_beta",
    "lambda_min",
    "m_hat",
    "kw_norm",
    "lemma_h_residual",
    "gb_residual",
];

/// Pretty JSON with every float written as `{:.16e}` (17 significant
/// digits), which round-trips exactly and never depends on the shortest-repr
/// algorithm.
struct FixedFloats<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).map_err(|e| CliError::Io(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    Ok(buf)
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// `leaf_r<r>.json`, with `r` in its shortest decimal form.
pub fn leaf_file_name(r: f64) -> String {
    format!("leaf_r{r}.json")
}

/// The solver-side record of a leaf.
#[derive(Debug, Clone, Serialize)]
pub struct LeafRecord {
    pub r: f64,
    pub band_limit: usize,
    pub h_achieved: f64,
    pub h_target: f64,
    pub h_deviation_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    pub last_step: f64,
    pub step_history: Vec<f64>,
    pub ball_radius: f64,
    pub max_iterate_sup: f64,
    pub ball_ok: bool,
    pub kernel_degrees: Vec<usize>,
    pub newton: bool,
    pub sup_phi: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub area: f64,
    pub lambda_min: Option<f64>,
    pub stability_lowest: Vec<f64>,
    /// Spectral coefficients of φ in the real orthonormal basis, ordered
    /// `(l, m)` with `m = −l..l`.
    pub phi_coefficients: Vec<f64>,
}

impl LeafRecord {
    pub fn of(leaf: &CmcLeaf) -> Self {
        Self {
            r: leaf.r,
            band_limit: leaf.phi().grid().band_limit(),
            h_achieved: leaf.h_achieved,
            h_target: leaf.h_target,
            h_deviation_sup: leaf.h_deviation_sup,
            iterations: leaf.iterations,
            converged: leaf.converged,
            last_step: leaf.last_step,
            step_history: leaf.step_history.clone(),
            ball_radius: leaf.ball_radius,
            max_iterate_sup: leaf.max_iterate_sup,
            ball_ok: leaf.ball_ok,
            kernel_degrees: leaf.kernel_degrees.clone(),
            newton: leaf.newton,
            sup_phi: leaf.sup_phi(),
            min_rho: leaf.min_rho(),
            max_rho: leaf.max_rho(),
            area: leaf.geometry.area,
            lambda_min: leaf.lambda_min(),
            stability_lowest: leaf.stability.as_ref().map(|s| s.lowest.clone()).unwrap_or_default(),
            phi_coefficients: leaf.phi().coeffs().to_vec(),
        }
    }
}

#[derive(Serialize)]
pub struct LeafArtifact<'a> {
    pub schema_version: &'static str,
    pub config_echo: &'a ConfigEcho,
    pub leaf: LeafRecord,
    pub diagnostics: Option<&'a LeafReport>,
}

fn csv_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

pub fn csv_row(leaf: &CmcLeaf, report: &LeafReport) -> String {
    let values = [
        leaf.r,
        report.area,
        leaf.h_target,
        leaf.h_achieved,
        report.sup_phi,
        report.sup_beta,
        report.lambda_min.unwrap_or(f64::NAN),
        report.m_hat,
        report.kw_centering.norm,
        report.lemma_h_residual,
        report.gauss_bonnet_residual,
    ];
    values.iter().map(|&v| csv_float(v)).collect::<Vec<_>>().join(",")
}

/// Header comment with the schema version, column header, then rows.
pub fn csv_document(rows: &[String]) -> Vec<u8> {
    let mut out = format!("# schema_version={SCHEMA_VERSION}\n{}\n", CSV_COLUMNS.join(","));
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        a: f64,
        b: Vec<f64>,
        n: usize,
        missing: Option<f64>,
        bad: f64,
    }

    #[test]
    fn floats_carry_seventeen_digits() {
        let s = Sample { a: 0.1, b: vec![1.0, -2.5e-300], n: 3, missing: None, bad: f64::NAN };
        let text = String::from_utf8(to_json(&s).unwrap()).unwrap();
        assert!(text.contains("\"a\": 1.0000000000000001e-1"), "{text}");
        assert!(text.contains("-2.5000000000000000e-300"));
        assert!(text.contains("\"n\": 3"));
        assert!(text.contains("\"missing\": null") && text.contains("\"bad\": null"));
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
        assert_eq!(back["b"][1].as_f64(), Some(-2.5e-300));
    }

    #[test]
    fn leaf_names() {
        assert_eq!(leaf_file_name(4.0), "leaf_r4.json");
        assert_eq!(leaf_file_name(4.5), "leaf_r4.5.json");
    }

    #[test]
    fn csv_has_header_and_schema() {
        let doc = String::from_utf8(csv_document(&["1,2".into()])).unwrap();
        let lines: Vec<&str> = doc.lines().collect();
        assert_eq!(lines[0], format!("# schema_version={SCHEMA_VERSION}"));
        assert_eq!(lines[1].split(',').count(), 11);
        assert_eq!(lines[2], "1,2");
    }
}
