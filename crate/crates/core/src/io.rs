//! File formats: operator and spectral-data JSON, kernel and study CSV tables, reports.
//!
//! Everything written here is deterministic: struct fields serialize in declaration order,
//! floats use shortest round-trip (JSON) or 17 significant digits (CSV), and no timestamps
//! are recorded.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::continuum::StudyResults;
use crate::error::{Error, Result};
use crate::gl::TransformKernel;
use crate::grid::Grid;
use crate::operator::JacobiOperator;
use crate::spectral::{Orientation, SpectralData};

/// On-disk operator: `{ "n": N, "v": [...], "u": [...], "u_edge": 0.0 }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    pub n: usize,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    #[serde(default)]
    pub u_edge: f64,
}

impl OperatorFile {
    pub fn from_operator(op: &JacobiOperator) -> Self {
        OperatorFile {
            n: op.len(),
            v: op.v().to_vec(),
            u: op.u().to_vec(),
            u_edge: op.u_edge(),
        }
    }

    pub fn into_operator(self) -> Result<JacobiOperator> {
        let grid = Grid::new(self.n)?;
        JacobiOperator::new(grid, self.v, self.u, self.u_edge)
    }
}

/// On-disk spectral data:
/// `{ "n": N, "delta": Δ, "levels": [...], "weights": [...], "orientation": "left" }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralFile {
    pub n: usize,
    pub delta: f64,
    pub levels: Vec<f64>,
    pub weights: Vec<f64>,
    pub orientation: Orientation,
}

impl SpectralFile {
    pub fn from_data(data: &SpectralData) -> Self {
        SpectralFile {
            n: data.len(),
            delta: data.grid().step(),
            levels: data.levels().to_vec(),
            weights: data.weights().to_vec(),
            orientation: data.orientation(),
        }
    }

    /// Enforces every [`SpectralData`] invariant, plus `delta = π/(n+1)`.
    pub fn into_data(self) -> Result<SpectralData> {
        let grid = Grid::new(self.n)?;
        if ((self.delta - grid.step()) / grid.step()).abs() > 1e-12 {
            return Err(Error::InvalidSpectralData(format!(
                "delta {} does not match π/(n+1) = {}",
                self.delta,
                grid.step()
            )));
        }
        SpectralData::new(grid, self.levels, self.weights, self.orientation)
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_operator(path: &Path) -> Result<JacobiOperator> {
    read_json::<OperatorFile>(path)?
        .into_operator()
        .map_err(|e| Error::InvalidOperator(format!("{}: {e}", path.display())))
}

pub fn save_operator(path: &Path, op: &JacobiOperator) -> Result<()> {
    write_json(path, &OperatorFile::from_operator(op))
}

pub fn load_spectral(path: &Path) -> Result<SpectralData> {
    read_json::<SpectralFile>(path)?
        .into_data()
        .map_err(|e| Error::InvalidSpectralData(format!("{}: {e}", path.display())))
}

pub fn save_spectral(path: &Path, data: &SpectralData) -> Result<()> {
    write_json(path, &SpectralFile::from_data(data))
}

/// `m,n,K` rows for `1 ≤ n ≤ m ≤ N`; the diagonal comes from the kernel's convention.
pub fn kernel_csv(k: &TransformKernel) -> String {
    let mut out = String::from("m,n,K\n");
    for m in 1..=k.len() {
        for j in 1..=m {
            let value = if j == m { k.diag(m) } else { k.get(m, j) };
            writeln!(out, "{m},{j},{value:.16e}").unwrap();
        }
    }
    out
}

pub fn write_kernel_csv(path: &Path, k: &TransformKernel) -> Result<()> {
    fs::write(path, kernel_csv(k))?;
    Ok(())
}

/// Parses a kernel dump back into `(m, n, K)` triples.
pub fn parse_kernel_csv(text: &str) -> Result<Vec<(usize, usize, f64)>> {
    let mut lines = text.lines();
    if lines.next() != Some("m,n,K") {
        return Err(Error::Config(
            "kernel CSV must start with the header m,n,K".into(),
        ));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let mut parts = l.split(',');
            let bad = || Error::Config(format!("malformed kernel row {l:?}"));
            let m = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let n = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let k = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            Ok((m, n, k))
        })
        .collect()
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

/// Study table `N,delta,max_factor2_gap,goursat_residual,cauchy_diff,est_order`.
///
/// Failed sizes leave their metric columns empty.
pub fn study_csv(results: &StudyResults) -> String {
    let mut out = String::from("N,delta,max_factor2_gap,goursat_residual,cauchy_diff,est_order\n");
    for (i, s) in results.sizes.iter().enumerate() {
        let (f2, gr) = match &s.outcome {
            Ok(m) => (Some(m.factor2_gap), Some(m.goursat_residual)),
            Err(_) => (None, None),
        };
        writeln!(
            out,
            "{},{:.16e},{},{},{},{}",
            s.n,
            s.delta,
            opt(f2),
            opt(gr),
            opt(results.cauchy_diff[i]),
            opt(results.est_order[i])
        )
        .unwrap();
    }
    out
}

/// Plot-ready `N,x,v_eff` rows on each size's own lattice.
pub fn v_eff_csv(results: &StudyResults) -> String {
    let mut out = String::from("N,x,v_eff\n");
    for m in results.metrics() {
        let grid = Grid::new(m.n).expect("study sizes are valid");
        for (i, v) in m.v_eff.iter().enumerate() {
            writeln!(out, "{},{:.16e},{:.16e}", m.n, grid.node(i + 1), v).unwrap();
        }
    }
    out
}
