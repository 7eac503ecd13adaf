//! Discrete Gel'fand-Levitan inversion.
//!
//! New regular solutions are written as lower-triangular combinations of the reference ones,
//! `φ(x_m,E) = φ°(x_m,E) + Σ_{n<m} Δ K(x_m,x_n) φ°(x_n,E)`, and the rows of `K` follow from
//! orthogonality under the new spectral measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::Lu;
use crate::operator::JacobiOperator;
use crate::spectral::{
    eigensolve, extract_right_spectral_data, extract_spectral_data, regular_solutions, Orientation,
    RegularSolutionTable, SpectralData,
};

/// Default bound on the per-row residual, relative to `1 + max|Q|`.
pub const GL_RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Default bound on the 1-norm condition estimate of each row system.
pub const GL_CONDITION_LIMIT: f64 = 1e12;

/// A reference system together with old and new spectral data.
#[derive(Clone, Debug)]
pub struct InversionProblem {
    reference: JacobiOperator,
    reference_data: SpectralData,
    target_data: SpectralData,
}

impl InversionProblem {
    pub fn new(
        reference: JacobiOperator,
        reference_data: SpectralData,
        target_data: SpectralData,
    ) -> Result<Self> {
        let n = reference.len();
        if reference_data.len() != n || target_data.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "reference has {n} nodes, reference data {} levels, target data {} levels",
                reference_data.len(),
                target_data.len()
            )));
        }
        if reference_data.orientation() != target_data.orientation() {
            return Err(Error::InvalidSpectralData(
                "reference and target data have different orientations".into(),
            ));
        }
        Ok(InversionProblem {
            reference,
            reference_data,
            target_data,
        })
    }

    /// Derives the reference data by a forward solve of `reference`.
    pub fn from_reference(reference: JacobiOperator, target_data: SpectralData) -> Result<Self> {
        let es = eigensolve(&reference)?;
        let data = match target_data.orientation() {
            Orientation::Left => extract_spectral_data(&es, reference.grid())?,
            Orientation::Right => extract_right_spectral_data(&es, reference.grid())?,
        };
        InversionProblem::new(reference, data, target_data)
    }

    pub fn reference(&self) -> &JacobiOperator {
        &self.reference
    }

    pub fn reference_data(&self) -> &SpectralData {
        &self.reference_data
    }

    pub fn target_data(&self) -> &SpectralData {
        &self.target_data
    }

    pub fn grid(&self) -> &Grid {
        self.reference.grid()
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn orientation(&self) -> Orientation {
        self.target_data.orientation()
    }

    /// Reference regular solutions at the target levels.
    pub fn reference_at_target(&self) -> Result<RegularSolutionTable> {
        regular_solutions(&self.reference, self.target_data.levels())
    }

    /// Reference regular solutions at the reference levels.
    pub fn reference_at_reference(&self) -> Result<RegularSolutionTable> {
        regular_solutions(&self.reference, self.reference_data.levels())
    }
}

/// `Q(x_m,x_n)`, stored row-major with 1-based accessors.
#[derive(Clone, Debug)]
pub struct QKernel {
    grid: Grid,
    q: Vec<f64>,
}

impl QKernel {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `Q(x_m,x_n)`, `1 ≤ m,n ≤ N`.
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.q[(m - 1) * self.grid.len() + (n - 1)]
    }

    pub fn max_abs(&self) -> f64 {
        self.q.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn symmetry_defect(&self) -> f64 {
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        for m in 1..=n {
            for k in 1..m {
                worst = worst.max((self.get(m, k) - self.get(k, m)).abs());
            }
        }
        worst
    }
}

/// How the diagonal `K(x_n,x_n)` is extended from the strictly lower triangle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalConvention {
    /// `K(x_n,x_n) := K(x_{n+1},x_n)`, and `K(x_N,x_N) := K(x_N,x_{N-1})`.
    #[default]
    SubdiagonalCopy,
    /// `K(x_n,x_n) := 2K(x_{n+1},x_n) - K(x_{n+2},x_n)`; near the edge
    /// `2K(x_n,x_{n-1}) - K(x_n,x_{n-2})`.
    LinearExtrapolation,
}

/// Transformation kernel.
///
/// `lead[m]` is the coefficient of `φ°(x_m)` in the new solution at `x_m`. It is 1 for the
/// kernel solved from the GL system and becomes the normalization factor after
/// [`orthonormalize`].
#[derive(Clone, Debug, PartialEq)]
pub struct TransformKernel {
    grid: Grid,
    k_lower: Vec<f64>,
    k_diag: Vec<f64>,
    k_edge_row: Option<[f64; 2]>,
    lead: Vec<f64>,
}

impl TransformKernel {
    /// The identity transformation `K ≡ 0`.
    pub fn identity(grid: Grid) -> Self {
        let n = grid.len();
        TransformKernel {
            grid,
            k_lower: vec![0.0; n * n],
            k_diag: vec![0.0; n],
            k_edge_row: None,
            lead: vec![1.0; n],
        }
    }

    /// Builds a unit-leading kernel from a strictly lower-triangular row-major `N×N` array.
    pub fn from_lower(
        grid: Grid,
        k_lower: Vec<f64>,
        convention: DiagonalConvention,
    ) -> Result<Self> {
        let n = grid.len();
        if k_lower.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "kernel needs {} entries",
                n * n
            )));
        }
        let mut k = TransformKernel {
            k_lower,
            ..TransformKernel::identity(grid)
        };
        for m in 1..=n {
            for j in m..=n {
                k.k_lower[(m - 1) * n + (j - 1)] = 0.0;
            }
        }
        k.apply_convention(convention);
        Ok(k)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `K(x_m,x_n)` for `1 ≤ n < m ≤ N`; zero on and above the diagonal.
    pub fn get(&self, m: usize, n: usize) -> f64 {
        if n >= m {
            0.0
        } else {
            self.k_lower[(m - 1) * self.grid.len() + (n - 1)]
        }
    }

    fn set(&mut self, m: usize, n: usize, value: f64) {
        let len = self.grid.len();
        self.k_lower[(m - 1) * len + (n - 1)] = value;
    }

    /// Extended diagonal `K(x_n,x_n)`.
    pub fn diag(&self, n: usize) -> f64 {
        self.k_diag[n - 1]
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.k_diag
    }

    pub fn lead(&self, m: usize) -> f64 {
        self.lead[m - 1]
    }

    pub fn leads(&self) -> &[f64] {
        &self.lead
    }

    pub fn is_unit_leading(&self) -> bool {
        self.lead.iter().all(|&r| r == 1.0)
    }

    /// `Σ_μ c°_μ² φ(x_{N+1},E°_μ) φ°(x_n,E°_μ)` for `n = N-1, N`, once known.
    pub fn k_edge_row(&self) -> Option<[f64; 2]> {
        self.k_edge_row
    }

    pub fn set_k_edge_row(&mut self, values: [f64; 2]) {
        self.k_edge_row = Some(values);
    }

    /// `max |K(x_m,x_n)|` over the strictly lower triangle.
    pub fn max_abs(&self) -> f64 {
        self.k_lower.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    /// Largest entrywise difference over the strictly lower triangle.
    pub fn max_gap(&self, other: &TransformKernel) -> f64 {
        self.k_lower
            .iter()
            .zip(&other.k_lower)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Recomputes the diagonal from the lower triangle.
    pub fn apply_convention(&mut self, convention: DiagonalConvention) {
        let n = self.grid.len();
        if n == 1 {
            self.k_diag = vec![0.0];
            return;
        }
        self.k_diag = (1..=n)
            .map(|j| match convention {
                DiagonalConvention::SubdiagonalCopy => {
                    if j < n {
                        self.get(j + 1, j)
                    } else {
                        self.get(n, n - 1)
                    }
                }
                DiagonalConvention::LinearExtrapolation => {
                    if j + 2 <= n {
                        2.0 * self.get(j + 1, j) - self.get(j + 2, j)
                    } else if j >= 3 {
                        2.0 * self.get(j, j - 1) - self.get(j, j - 2)
                    } else if j < n {
                        self.get(j + 1, j)
                    } else {
                        self.get(j, j - 1)
                    }
                }
            })
            .collect();
    }

    /// Same triangle with the leading factors reset to 1 (row `m` divided by `lead(m)`).
    pub fn unit_leading(&self) -> TransformKernel {
        let n = self.grid.len();
        let mut k = self.clone();
        for m in 1..=n {
            let r = self.lead(m);
            for j in 1..m {
                k.set(m, j, self.get(m, j) / r);
            }
            k.k_diag[m - 1] = self.k_diag[m - 1] / r;
        }
        k.lead = vec![1.0; n];
        k.k_edge_row = None;
        k
    }
}

/// Diagnostics gathered while solving the GL rows.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GlReport {
    /// Largest row residual `max|(I + ΔQᵀ)k + q|`.
    pub max_residual: f64,
    /// Largest 1-norm condition estimate over the rows.
    pub max_condition: f64,
    /// Row with the largest condition estimate.
    pub worst_row: usize,
}

/// `Q(x_m,x_n) = Σ_ν c_ν² φ°(x_m,E_ν)φ°(x_n,E_ν) - Σ_μ c°_μ² φ°(x_m,E°_μ)φ°(x_n,E°_μ)`.
pub fn build_q(p: &InversionProblem) -> Result<QKernel> {
    let new = p.reference_at_target()?;
    let old = p.reference_at_reference()?;
    Ok(q_from_tables(p, &new, &old))
}

fn q_from_tables(
    p: &InversionProblem,
    new: &RegularSolutionTable,
    old: &RegularSolutionTable,
) -> QKernel {
    let n = p.len();
    let c2: Vec<f64> = p.target_data().weights().iter().map(|c| c * c).collect();
    let c02: Vec<f64> = p.reference_data().weights().iter().map(|c| c * c).collect();
    let mut q = vec![0.0; n * n];
    for m in 1..=n {
        for j in 1..=m {
            let a: f64 = (0..n)
                .map(|nu| c2[nu] * new.at(nu, m) * new.at(nu, j))
                .sum();
            let b: f64 = (0..n)
                .map(|mu| c02[mu] * old.at(mu, m) * old.at(mu, j))
                .sum();
            q[(m - 1) * n + (j - 1)] = a - b;
            q[(j - 1) * n + (m - 1)] = a - b;
        }
    }
    QKernel { grid: *p.grid(), q }
}

/// Solves the GL rows with the default tolerances.
pub fn solve_gl(q: &QKernel) -> Result<TransformKernel> {
    solve_gl_checked(
        q,
        GL_CONDITION_LIMIT,
        GL_RESIDUAL_TOLERANCE,
        DiagonalConvention::default(),
    )
    .map(|(k, _)| k)
}

/// For each `m = 2..N`, solves `(I + ΔQ_subᵀ)k = -q_row` for `K(x_m, x_1..x_{m-1})`.
///
/// Fails with [`Error::NonInvertible`] when a row system is singular, its condition estimate
/// exceeds `max_condition`, or its residual exceeds `residual_tol·(1 + max|Q|)`.
pub fn solve_gl_checked(
    q: &QKernel,
    max_condition: f64,
    residual_tol: f64,
    convention: DiagonalConvention,
) -> Result<(TransformKernel, GlReport)> {
    let grid = *q.grid();
    let n = grid.len();
    let d = grid.step();
    let mut k = TransformKernel::identity(grid);
    let mut report = GlReport {
        max_residual: 0.0,
        max_condition: 1.0,
        worst_row: 1,
    };
    let bound = residual_tol * (1.0 + q.max_abs());
    for m in 2..=n {
        let size = m - 1;
        let mut a = vec![0.0; size * size];
        for row in 0..size {
            for col in 0..size {
                // Row n, column p: δ_np + Δ Q(x_p, x_n).
                a[row * size + col] =
                    if row == col { 1.0 } else { 0.0 } + d * q.get(col + 1, row + 1);
            }
        }
        let rhs: Vec<f64> = (1..m).map(|j| -q.get(m, j)).collect();
        let lu = Lu::factor(size, a.clone()).ok_or(Error::NonInvertible {
            row: m,
            condition: f64::INFINITY,
        })?;
        let condition = lu.condition_estimate();
        if !(condition <= max_condition) {
            return Err(Error::NonInvertible { row: m, condition });
        }
        let x = lu.solve(&rhs);
        let residual = (0..size)
            .map(|row| {
                let ax: f64 = (0..size).map(|col| a[row * size + col] * x[col]).sum();
                (ax - rhs[row]).abs()
            })
            .fold(0.0, f64::max);
        if !(residual <= bound) {
            return Err(Error::NonInvertible { row: m, condition });
        }
        if condition > report.max_condition {
            report.max_condition = condition;
            report.worst_row = m;
        }
        report.max_residual = report.max_residual.max(residual);
        for (j, value) in x.into_iter().enumerate() {
            k.set(m, j + 1, value);
        }
    }
    k.apply_convention(convention);
    Ok((k, report))
}

/// Builds `K` by weighted Gram-Schmidt over the energy index, independently of the GL system.
///
/// Vectors `φ°(x_m,E_ν)` are orthogonalized in the inner product `Σ_ν c_ν² a_ν b_ν` with the
/// target weights (modified Gram-Schmidt with one reorthogonalization pass). The leading
/// coefficient stays 1; `K(x_m,x_n)` is the accumulated coefficient of `φ°(x_n)` divided by `Δ`.
pub fn gram_schmidt_oracle(p: &InversionProblem) -> Result<TransformKernel> {
    let table = p.reference_at_target()?;
    let n = p.len();
    let d = p.grid().step();
    let c2: Vec<f64> = p.target_data().weights().iter().map(|c| c * c).collect();
    let dot = |a: &[f64], b: &[f64]| -> f64 { (0..n).map(|nu| c2[nu] * a[nu] * b[nu]).sum() };

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut norms: Vec<f64> = Vec::with_capacity(n);
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(n);
    for m in 1..=n {
        let mut w: Vec<f64> = (0..n).map(|nu| table.at(nu, m)).collect();
        let start_norm = dot(&w, &w);
        let mut a = vec![0.0; m];
        a[m - 1] = 1.0;
        for _pass in 0..2 {
            for j in 0..m - 1 {
                let proj = dot(&w, &vectors[j]) / norms[j];
                for nu in 0..n {
                    w[nu] -= proj * vectors[j][nu];
                }
                for (i, cj) in coeffs[j].iter().enumerate() {
                    a[i] -= proj * cj;
                }
            }
        }
        let norm = dot(&w, &w);
        if !(norm > 1e-13 * start_norm) {
            return Err(Error::DegenerateGram {
                node: m,
                norm: d * norm,
            });
        }
        vectors.push(w);
        norms.push(norm);
        coeffs.push(a);
    }

    let mut k = TransformKernel::identity(*p.grid());
    for m in 2..=n {
        for j in 1..m {
            k.set(m, j, coeffs[m - 1][j - 1] / d);
        }
    }
    k.apply_convention(DiagonalConvention::default());
    Ok(k)
}

/// Rescales each row so the new solutions are normalized under the target measure,
/// `Δ Σ_ν c_ν² φ(x_m,E_ν)² = 1`. Row 1 is fixed by `Δ³Σc² = 1` and kept at lead 1.
pub fn orthonormalize(k: &TransformKernel, p: &InversionProblem) -> Result<TransformKernel> {
    let n = p.len();
    let d = p.grid().step();
    let table = transformed_solutions(k, p.reference(), p.target_data().levels())?;
    let c2: Vec<f64> = p.target_data().weights().iter().map(|c| c * c).collect();
    let mut out = k.clone();
    for m in 2..=n {
        let s: f64 = d
            * (0..n)
                .map(|nu| c2[nu] * table.at(nu, m).powi(2))
                .sum::<f64>();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::DegenerateGram { node: m, norm: s });
        }
        let r = 1.0 / s.sqrt();
        for j in 1..m {
            out.set(m, j, k.get(m, j) * r);
        }
        out.k_diag[m - 1] = k.k_diag[m - 1] * r;
        out.lead[m - 1] = k.lead[m - 1] * r;
    }
    out.k_edge_row = None;
    Ok(out)
}

/// `φ(x_m,E) = lead_m φ°(x_m,E) + Σ_{n<m} Δ K(x_m,x_n) φ°(x_n,E)` for `m = 0..=N`.
///
/// Rows cover `x_0..=x_N`; the value past the edge depends on the new operator and is not part
/// of the transformation.
pub fn transformed_solutions(
    k: &TransformKernel,
    reference: &JacobiOperator,
    energies: &[f64],
) -> Result<RegularSolutionTable> {
    let base = regular_solutions(reference, energies)?;
    Ok(transform_table(k, &base))
}

pub(crate) fn transform_table(
    k: &TransformKernel,
    base: &RegularSolutionTable,
) -> RegularSolutionTable {
    let n = k.len();
    let d = k.grid.step();
    let values = base
        .values
        .iter()
        .map(|phi0| {
            let mut phi = vec![0.0; n + 1];
            for m in 1..=n {
                let tail: f64 = (1..m).map(|j| k.get(m, j) * phi0[j]).sum();
                phi[m] = k.lead(m) * phi0[m] + d * tail;
            }
            phi
        })
        .collect();
    RegularSolutionTable {
        energies: base.energies.clone(),
        values,
    }
}

/// Largest deviation of `K(x_m,x_n)`, `m > n`, from
/// `-Σ_ν c_ν² φ(x_m,E_ν)φ°(x_n,E_ν) + Σ_μ c°_μ² φ(x_m,E°_μ)φ°(x_n,E°_μ)`.
pub fn k_cross_check(k: &TransformKernel, p: &InversionProblem) -> Result<f64> {
    let n = p.len();
    let new0 = p.reference_at_target()?;
    let old0 = p.reference_at_reference()?;
    let new = transform_table(k, &new0);
    let old = transform_table(k, &old0);
    let c2: Vec<f64> = p.target_data().weights().iter().map(|c| c * c).collect();
    let c02: Vec<f64> = p.reference_data().weights().iter().map(|c| c * c).collect();
    let mut worst: f64 = 0.0;
    for m in 2..=n {
        for j in 1..m {
            let a: f64 = (0..n)
                .map(|nu| c2[nu] * new.at(nu, m) * new0.at(nu, j))
                .sum();
            let b: f64 = (0..n)
                .map(|mu| c02[mu] * old.at(mu, m) * old0.at(mu, j))
                .sum();
            worst = worst.max((k.get(m, j) - (b - a)).abs());
        }
    }
    Ok(worst)
}
