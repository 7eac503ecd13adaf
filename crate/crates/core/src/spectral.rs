//! Forward problem: eigenpairs, regular solutions and spectral weight factors.
//!
//! Eigenvectors are normalized with the grid weight, `Δ Σ_n Ψ_ν(x_n)Ψ_μ(x_n) = δ_νμ`,
//! and signed so that `Ψ_ν(x_1) > 0`. Regular solutions start from `φ(x_0) = 0`,
//! `φ(x_1) = Δ`, so the weight factor is `c_ν = Ψ_ν(x_1)/Δ`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operator::{JacobiOperator, MIN_RECURRENCE_DENOMINATOR};

/// Relative tolerance of the constraint `Δ³ Σ c_ν² = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-8;

/// Levels closer than this (relative) are treated as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

/// Per-pair residual bound, relative to `‖H‖`.
pub const EIGEN_RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Which boundary the weight factors describe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// `c_ν = Ψ_ν(x_1)/Δ`.
    Left,
    /// `γ_ν = |Ψ_ν(x_N)|/Δ`.
    Right,
}

#[derive(Clone, Debug)]
pub struct EigenSystem {
    grid: Grid,
    levels: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

impl EigenSystem {
    /// Wraps precomputed eigenpairs. `vectors[ν]` holds `Ψ_ν(x_1..x_N)`.
    pub fn from_parts(grid: Grid, levels: Vec<f64>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let n = grid.len();
        if levels.len() != n || vectors.len() != n || vectors.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "eigensystem on {n} nodes needs {n} levels and {n} vectors of length {n}"
            )));
        }
        Ok(EigenSystem {
            grid,
            levels,
            vectors,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vectors_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.vectors
    }
}

/// Eigenvalues with their spectral weight factors.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData {
    grid: Grid,
    levels: Vec<f64>,
    weights: Vec<f64>,
    orientation: Orientation,
}

impl SpectralData {
    pub fn new(
        grid: Grid,
        levels: Vec<f64>,
        weights: Vec<f64>,
        orientation: Orientation,
    ) -> Result<Self> {
        let n = grid.len();
        if levels.len() != n || weights.len() != n {
            return Err(Error::InvalidSpectralData(format!(
                "expected {n} levels and weights, got {} and {}",
                levels.len(),
                weights.len()
            )));
        }
        if levels.iter().chain(&weights).any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpectralData("non-finite entry".into()));
        }
        if let Some(i) = levels.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpectralData(format!(
                "levels not strictly ascending at index {}",
                i + 1
            )));
        }
        if let Some(i) = weights.iter().position(|&w| w <= 0.0) {
            return Err(Error::InvalidSpectralData(format!(
                "weight {} is not positive",
                i + 1
            )));
        }
        let defect = weight_sum_defect(&grid, &weights);
        if defect.abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidSpectralData(format!(
                "Δ³Σc² - 1 = {defect:e} exceeds {WEIGHT_SUM_TOLERANCE:e}"
            )));
        }
        Ok(SpectralData {
            grid,
            levels,
            weights,
            orientation,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Same numbers, relabelled orientation.
    pub fn with_orientation(&self, orientation: Orientation) -> SpectralData {
        SpectralData {
            orientation,
            ..self.clone()
        }
    }

    /// Applies level shifts and weight factors (1-based level indices).
    ///
    /// Weights that are not explicitly rescaled share one positive factor chosen so that
    /// `Δ³ Σ c² = 1` holds again. A shift may move a level past its neighbours; the pairs
    /// `(E, c)` are then re-sorted by level, and only coincident levels are rejected.
    pub fn perturbed(
        &self,
        level_shifts: &BTreeMap<usize, f64>,
        weight_factors: &BTreeMap<usize, f64>,
    ) -> Result<SpectralData> {
        let n = self.len();
        let check = |k: usize| {
            if k == 0 || k > n {
                Err(Error::InvalidSpectralData(format!(
                    "level index {k} outside 1..={n}"
                )))
            } else {
                Ok(())
            }
        };
        let mut levels = self.levels.clone();
        for (&k, &shift) in level_shifts {
            check(k)?;
            levels[k - 1] += shift;
        }
        let mut weights = self.weights.clone();
        if !weight_factors.is_empty() {
            for (&k, &f) in weight_factors {
                check(k)?;
                if !(f > 0.0) || !f.is_finite() {
                    return Err(Error::InvalidSpectralData(format!(
                        "weight factor for {k} must be positive"
                    )));
                }
                weights[k - 1] *= f;
            }
            let d3 = self.grid.step().powi(3);
            let touched: f64 = weight_factors.keys().map(|&k| weights[k - 1].powi(2)).sum();
            let rest: f64 = (1..=n)
                .filter(|k| !weight_factors.contains_key(k))
                .map(|k| weights[k - 1].powi(2))
                .sum();
            let remaining = 1.0 / d3 - touched;
            if rest == 0.0 || remaining <= 0.0 {
                return Err(Error::InvalidSpectralData(
                    "weight factors leave no room to restore Δ³Σc² = 1".into(),
                ));
            }
            let s = (remaining / rest).sqrt();
            for k in (1..=n).filter(|k| !weight_factors.contains_key(k)) {
                weights[k - 1] *= s;
            }
        }
        let mut pairs: Vec<(f64, f64)> = levels.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (levels, weights) = pairs.into_iter().unzip();
        SpectralData::new(self.grid, levels, weights, self.orientation)
    }
}

/// `Δ³ Σ w² - 1`.
pub fn weight_sum_defect(grid: &Grid, weights: &[f64]) -> f64 {
    let d = grid.step();
    d * d * d * weights.iter().map(|w| w * w).sum::<f64>() - 1.0
}

/// Regular solutions sampled at several energies; each row covers `x_0..=x_{N+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularSolutionTable {
    pub energies: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl RegularSolutionTable {
    /// `φ(x_m, E_k)` for `m = 0..=N+1`.
    pub fn at(&self, k: usize, m: usize) -> f64 {
        self.values[k][m]
    }
}

/// Steps the three-term recurrence from `φ(x_0) = 0`, `φ(x_1) = Δ` up to `x_{N+1}`.
pub fn regular_solution(op: &JacobiOperator, energy: f64) -> Result<Vec<f64>> {
    let n = op.len();
    let d = op.grid().step();
    let inv = op.grid().inv_step_sq();
    let mut phi = vec![0.0; n + 2];
    phi[1] = d;
    for m in 1..=n {
        let den = inv - op.coupling_at(m);
        if (den / inv).abs() < MIN_RECURRENCE_DENOMINATOR {
            return Err(Error::SingularRecurrence {
                node: m,
                value: (den / inv).abs(),
            });
        }
        phi[m + 1] = ((2.0 * inv + op.potential_at(m) - energy) * phi[m]
            + (op.coupling_at(m - 1) - inv) * phi[m - 1])
            / den;
    }
    Ok(phi)
}

pub fn regular_solutions(op: &JacobiOperator, energies: &[f64]) -> Result<RegularSolutionTable> {
    let values = energies
        .iter()
        .map(|&e| regular_solution(op, e))
        .collect::<Result<Vec<_>>>()?;
    Ok(RegularSolutionTable {
        energies: energies.to_vec(),
        values,
    })
}

/// All eigenpairs of the assembled operator, ascending.
///
/// Levels come from Sturm-sequence bisection, vectors from inverse iteration with
/// reorthogonalization inside clusters.
pub fn eigensolve(op: &JacobiOperator) -> Result<EigenSystem> {
    let diag = op.diagonal();
    let off = op.off_diagonal();
    let n = diag.len();
    let norm = tridiagonal_norm(&diag, &off);
    let levels = sturm_bisection(&diag, &off);

    for i in 1..n {
        let gap = levels[i] - levels[i - 1];
        if gap <= DEGENERACY_TOLERANCE * levels[i].abs().max(levels[i - 1].abs()) {
            return Err(Error::DegenerateSpectrum {
                index: i,
                next: i + 1,
            });
        }
    }

    let cluster_tol = 1e-3 * norm;
    let mut unit: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (k, &lambda) in levels.iter().enumerate() {
        let mut x = inverse_iteration(&diag, &off, lambda, norm, k);
        // Reorthogonalize against close neighbours (two passes of MGS).
        let cluster: Vec<usize> = (0..k)
            .filter(|&j| (levels[k] - levels[j]).abs() < cluster_tol)
            .collect();
        if !cluster.is_empty() {
            for _ in 0..2 {
                for &j in &cluster {
                    let p: f64 = x.iter().zip(&unit[j]).map(|(a, b)| a * b).sum();
                    for (xi, qi) in x.iter_mut().zip(&unit[j]) {
                        *xi -= p * qi;
                    }
                }
                normalize(&mut x);
            }
        }
        let residual = tridiagonal_residual(&diag, &off, lambda, &x);
        if !(residual <= EIGEN_RESIDUAL_TOLERANCE * norm) {
            return Err(Error::EigenConvergence {
                index: k + 1,
                residual,
            });
        }
        unit.push(x);
    }

    let scale = 1.0 / op.grid().step().sqrt();
    let vectors = unit
        .into_iter()
        .map(|x| {
            let sign = if x[0] < 0.0 { -scale } else { scale };
            x.into_iter().map(|v| v * sign).collect()
        })
        .collect();
    Ok(EigenSystem {
        grid: *op.grid(),
        levels,
        vectors,
    })
}

/// Left weight factors `c_ν = Ψ_ν(x_1)/Δ`.
pub fn extract_spectral_data(es: &EigenSystem, grid: &Grid) -> Result<SpectralData> {
    let d = grid.step();
    let weights: Vec<f64> = es.vectors.iter().map(|v| v[0] / d).collect();
    let defect = weight_sum_defect(grid, &weights);
    if defect.abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::InconsistentEigensystem { defect });
    }
    SpectralData::new(*grid, es.levels.clone(), weights, Orientation::Left)
}

/// Right weight factors `γ_ν = |Ψ_ν(x_N)|/Δ`, the left factors of the mirrored operator.
pub fn extract_right_spectral_data(es: &EigenSystem, grid: &Grid) -> Result<SpectralData> {
    let d = grid.step();
    let n = grid.len();
    let weights: Vec<f64> = es.vectors.iter().map(|v| v[n - 1].abs() / d).collect();
    let defect = weight_sum_defect(grid, &weights);
    if defect.abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::InconsistentEigensystem { defect });
    }
    SpectralData::new(*grid, es.levels.clone(), weights, Orientation::Right)
}

/// `max_{m,n} |Δ Σ_ν Ψ_ν(x_m)Ψ_ν(x_n) - δ_mn|`.
pub fn parseval_defect(es: &EigenSystem) -> f64 {
    let n = es.grid.len();
    let d = es.grid.step();
    let mut worst: f64 = 0.0;
    for m in 0..n {
        for k in m..n {
            let s: f64 = es.vectors.iter().map(|v| v[m] * v[k]).sum();
            let target = if m == k { 1.0 } else { 0.0 };
            worst = worst.max((d * s - target).abs());
        }
    }
    worst
}

/// `max_{m,n} |Δ Σ_ν c_ν² φ(x_m,E_ν)φ(x_n,E_ν) - δ_mn|` over interior nodes.
///
/// `solutions` must be sampled at the levels of `data`.
pub fn weighted_orthogonality_defect(solutions: &RegularSolutionTable, data: &SpectralData) -> f64 {
    let n = data.len();
    let d = data.grid().step();
    let w2: Vec<f64> = data.weights().iter().map(|w| w * w).collect();
    let mut worst: f64 = 0.0;
    for m in 1..=n {
        for k in m..=n {
            let s: f64 = (0..n)
                .map(|nu| w2[nu] * solutions.at(nu, m) * solutions.at(nu, k))
                .sum();
            let target = if m == k { 1.0 } else { 0.0 };
            worst = worst.max((d * s - target).abs());
        }
    }
    worst
}

/// Free-well levels `(4/Δ²) sin²(νΔ/2)`, `ν = 1..=N`.
pub fn free_well_levels(grid: &Grid) -> Vec<f64> {
    let d = grid.step();
    (1..=grid.len())
        .map(|nu| 4.0 / (d * d) * (nu as f64 * d / 2.0).sin().powi(2))
        .collect()
}

fn tridiagonal_norm(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { off[i].abs() } else { 0.0 };
            diag[i].abs() + left + right
        })
        .fold(0.0, f64::max)
}

/// Number of eigenvalues strictly below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn sturm_bisection(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r =
            if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let span = (hi - lo).max(hi.abs().max(lo.abs())).max(f64::MIN_POSITIVE);
    lo -= 2.0 * f64::EPSILON * span + f64::MIN_POSITIVE;
    hi += 2.0 * f64::EPSILON * span + f64::MIN_POSITIVE;
    let max_off2 = off.iter().map(|b| b * b).fold(0.0, f64::max);
    let pivmin = (f64::MIN_POSITIVE * max_off2.max(1.0)).max(f64::MIN_POSITIVE);

    (0..n)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if b - a <= 2.0 * f64::EPSILON * a.abs().max(b.abs()) {
                    break;
                }
                if sturm_count(diag, off, mid, pivmin) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// LU factors of a shifted tridiagonal matrix with partial pivoting (LAPACK `dgttrf` layout).
struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(diag: &[f64], off: &[f64], shift: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|x| x - shift).collect();
        let mut dl = off.to_vec();
        let mut du = off.to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        for x in d.iter_mut() {
            if x.abs() < tiny {
                *x = if *x < 0.0 { -tiny } else { tiny };
            }
        }
        TridiagonalLu {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn normalize(x: &mut [f64]) {
    let s = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if s > 0.0 {
        x.iter_mut().for_each(|v| *v /= s);
    }
}

fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64, norm: f64, seed: usize) -> Vec<f64> {
    let n = diag.len();
    let tiny = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
    let lu = TridiagonalLu::factor(diag, off, lambda, tiny);
    // Deterministic, non-degenerate start vector.
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * (((i + 1) * (seed + 3)) as f64 * 0.618_033_988_75).fract())
        .collect();
    normalize(&mut x);
    for _ in 0..4 {
        lu.solve(&mut x);
        normalize(&mut x);
    }
    x
}

fn tridiagonal_residual(diag: &[f64], off: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut r = (diag[i] - lambda) * x[i];
            if i > 0 {
                r += off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                r += off[i] * x[i + 1];
            }
            r * r
        })
        .sum::<f64>()
        .sqrt()
}
