//! Recovering `V` and `u` from the transformation kernel.
//!
//! Two independent routes are provided. Spectral synthesis rebuilds the matrix from the new
//! normalized eigenvectors. The recursion works row by row, from the edge inward, on the
//! overlap table `G(x_m,x_n) = Σ_μ c°_μ² φ(x_m,E°_μ) φ°(x_n,E°_μ)`, which for the normalized
//! kernel equals `lead_m δ_mn/Δ + K(x_m,x_n)` on the lower triangle and vanishes above it.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gl::{
    build_q, k_cross_check, orthonormalize, solve_gl_checked, transformed_solutions,
    DiagonalConvention, InversionProblem, TransformKernel,
};
use crate::linalg::solve2;
use crate::operator::{JacobiOperator, MIN_RECURRENCE_DENOMINATOR};
use crate::spectral::{
    eigensolve, extract_right_spectral_data, extract_spectral_data, regular_solutions,
    weighted_orthogonality_defect, Orientation, RegularSolutionTable, SpectralData,
};
use crate::tolerances::Tolerances;

/// Which recovery route produces the reported operator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Synthesis,
    Recursion,
    /// Both routes; synthesis is reported and the recursion is compared against it.
    #[default]
    Both,
}

impl Method {
    pub fn uses_synthesis(self) -> bool {
        matches!(self, Method::Synthesis | Method::Both)
    }

    pub fn uses_recursion(self) -> bool {
        matches!(self, Method::Recursion | Method::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Synthesis => "synthesis",
            Method::Recursion => "recursion",
            Method::Both => "both",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthesis" => Ok(Method::Synthesis),
            "recursion" => Ok(Method::Recursion),
            "both" => Ok(Method::Both),
            other => Err(Error::Config(format!(
                "unknown method {other:?} (expected synthesis, recursion or both)"
            ))),
        }
    }
}

/// Result of spectral synthesis.
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub operator: JacobiOperator,
    /// `max |H_mn|` over `|m-n| ≥ 2`.
    pub leakage: f64,
    /// `‖H‖∞` of the synthesized matrix.
    pub h_norm: f64,
}

/// Forms `H_mn = Δ Σ_ν E_ν Ψ_ν(x_m)Ψ_ν(x_n)` with `Ψ_ν = c_ν φ_ν` and reads off `V`, `u`.
///
/// Fails with [`Error::NonTridiagonal`] when the leakage exceeds `leakage_tol·‖H‖∞`.
pub fn synthesize_operator(
    solutions: &RegularSolutionTable,
    data: &SpectralData,
    u_edge: f64,
    leakage_tol: f64,
) -> Result<Synthesis> {
    let s = synthesize_unchecked(solutions, data, u_edge)?;
    let bound = leakage_tol * s.h_norm;
    if s.leakage > bound {
        return Err(Error::NonTridiagonal {
            leakage: s.leakage,
            bound,
        });
    }
    Ok(s)
}

fn synthesize_unchecked(
    solutions: &RegularSolutionTable,
    data: &SpectralData,
    u_edge: f64,
) -> Result<Synthesis> {
    let grid = *data.grid();
    let n = grid.len();
    let d = grid.step();
    if solutions.values.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} solution rows for {n} levels",
            solutions.values.len()
        )));
    }
    let psi: Vec<Vec<f64>> = solutions
        .values
        .iter()
        .zip(data.weights())
        .map(|(phi, c)| (1..=n).map(|m| c * phi[m]).collect())
        .collect();
    let levels = data.levels();
    let mut h = vec![0.0; n * n];
    for m in 0..n {
        for k in m..n {
            let s: f64 = d
                * (0..n)
                    .map(|nu| levels[nu] * psi[nu][m] * psi[nu][k])
                    .sum::<f64>();
            h[m * n + k] = s;
            h[k * n + m] = s;
        }
    }
    let mut leakage: f64 = 0.0;
    for m in 0..n {
        for k in m + 2..n {
            leakage = leakage.max(h[m * n + k].abs());
        }
    }
    let h_norm = (0..n)
        .map(|m| h[m * n..(m + 1) * n].iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let inv = grid.inv_step_sq();
    let v = (0..n).map(|m| h[m * n + m] - 2.0 * inv).collect();
    let u = (0..n.saturating_sub(1))
        .map(|m| h[m * n + m + 1] + inv)
        .collect();
    let operator = JacobiOperator::new(grid, v, u, u_edge)?;
    Ok(Synthesis {
        operator,
        leakage,
        h_norm,
    })
}

/// `φ(x_{N+1},E°_μ)` at the reference levels, stepping the new row-`N` equation once:
/// `[(2/Δ² + V(x_N) - E°)φ(x_N) + (u(x_{N-1}) - 1/Δ²)φ(x_{N-1})] / (1/Δ² - u_edge)`.
///
/// `kernel` must be normalized (see [`orthonormalize`]); `u_edge` is the reference value.
pub fn extend_solution_beyond_edge(
    v_last: f64,
    u_prev: f64,
    kernel: &TransformKernel,
    reference: &JacobiOperator,
    reference_data: &SpectralData,
) -> Result<Vec<f64>> {
    let table = transformed_solutions(kernel, reference, reference_data.levels())?;
    extend_table(v_last, u_prev, &table, reference)
}

fn extend_table(
    v_last: f64,
    u_prev: f64,
    table: &RegularSolutionTable,
    reference: &JacobiOperator,
) -> Result<Vec<f64>> {
    let grid = reference.grid();
    let n = grid.len();
    let inv = grid.inv_step_sq();
    let den = inv - reference.u_edge();
    if (den / inv).abs() < MIN_RECURRENCE_DENOMINATOR {
        return Err(Error::SingularEdge {
            value: (den / inv).abs(),
        });
    }
    Ok(table
        .energies
        .iter()
        .zip(&table.values)
        .map(|(&e, phi)| ((2.0 * inv + v_last - e) * phi[n] + (u_prev - inv) * phi[n - 1]) / den)
        .collect())
}

/// `Σ_μ c°_μ² ext_μ φ°(x_n,E°_μ)` for `n = N-1, N`.
fn edge_row(ext: &[f64], old0: &RegularSolutionTable, reference_data: &SpectralData) -> [f64; 2] {
    let n = reference_data.len();
    let w = reference_data.weights();
    let at = |j: usize| -> f64 {
        (0..n)
            .map(|mu| w[mu] * w[mu] * ext[mu] * old0.at(mu, j))
            .sum()
    };
    [if n >= 2 { at(n - 1) } else { 0.0 }, at(n)]
}

/// Diagnostics of the row-by-row recursion.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecursionReport {
    /// Relative determinant of the edge system built from the continuation past `x_N` at the
    /// reference levels. It is degenerate: that system holds for any `V(x_N)`, `u(x_{N-1})`.
    pub boundary_determinant: Option<f64>,
    /// Whether the last row was closed with the Dirichlet condition at the target levels.
    pub dirichlet_closure: bool,
    /// Smallest relative determinant among the 2×2 systems used in the descent.
    pub min_pair_determinant: Option<f64>,
    /// Rows where the `n = m-2, m-3` pair was degenerate and `n = m, m-1` was used instead.
    pub fallback_rows: Vec<usize>,
}

/// Overlap table of a normalized kernel, 0-based indices with zero padding.
struct Overlap<'a> {
    kernel: &'a TransformKernel,
    n: usize,
    d: f64,
}

impl Overlap<'_> {
    fn g(&self, m: usize, j: usize) -> f64 {
        if m == 0 || j == 0 || m > self.n || j > self.n || j > m {
            0.0
        } else if j == m {
            self.kernel.lead(m) / self.d
        } else {
            self.kernel.get(m, j)
        }
    }
}

/// Row identity at `(m, n)`, solved for `(V(x_m), u(x_{m-1}))` given the forward coupling `u_m`:
/// returns `(coefficient of V, coefficient of u, right-hand side)`.
fn row_equation(
    ov: &Overlap,
    reference: &JacobiOperator,
    m: usize,
    j: usize,
    u_m: f64,
) -> (f64, f64, f64) {
    let g = |a: usize, b: usize| ov.g(a, b);
    let inv = 1.0 / (ov.d * ov.d);
    let v0 = if j >= 1 {
        reference.potential_at(j)
    } else {
        0.0
    };
    let u0 = |k: usize| {
        if k <= ov.n {
            reference.coupling_at(k)
        } else {
            0.0
        }
    };
    let rhs = v0 * g(m, j) - u_m * g(m + 1, j)
        + u0(j) * g(m, j + 1)
        + if j >= 1 { u0(j - 1) * g(m, j - 1) } else { 0.0 }
        + (g(m + 1, j) - 2.0 * g(m, j) + g(m - 1, j)) * inv
        - (g(m, j + 1) - 2.0 * g(m, j) + if j >= 1 { g(m, j - 1) } else { 0.0 }) * inv;
    (g(m, j), g(m - 1, j), rhs)
}

/// Recovers `V` and `u` by descending recursion from the edge.
///
/// `u(x_N)` is pinned to the reference `u_edge`. The last row is first attempted from the
/// continuation past the edge at the reference levels; when that system is degenerate the row
/// is closed by `φ(x_{N+1},E_ν) = 0` at the target levels, projected on `φ(x_N)` and
/// `φ(x_{N-1})`. Rows `m = N-1..2` use the identities at `n = m-2, m-3` (or `n = m, m-1` when
/// `m < 4` or the first pair is degenerate); row 1 uses `n = 1`.
pub fn recover_recursive(
    kernel: &TransformKernel,
    problem: &InversionProblem,
    guard: f64,
) -> Result<(JacobiOperator, RecursionReport)> {
    let kn = orthonormalize(&kernel.unit_leading(), problem)?;
    recursive_with_normalized(&kn, problem, guard)
}

fn recursive_with_normalized(
    kn: &TransformKernel,
    problem: &InversionProblem,
    guard: f64,
) -> Result<(JacobiOperator, RecursionReport)> {
    let grid = *problem.grid();
    let n = grid.len();
    let d = grid.step();
    let inv = grid.inv_step_sq();
    let reference = problem.reference();
    let target = problem.target_data();
    let mut report = RecursionReport::default();

    if n == 1 {
        let v1 = target.levels()[0] - 2.0 * inv;
        let op = JacobiOperator::new(grid, vec![v1], vec![], reference.u_edge())?;
        return Ok((op, report));
    }

    let ov = Overlap { kernel: kn, n, d };
    let mut v = vec![0.0; n + 1];
    let mut u = vec![0.0; n + 1];
    u[n] = reference.u_edge();

    // Last row from the continuation past the edge at the reference levels.
    let old = transformed_solutions(kn, reference, problem.reference_data().levels())?;
    let old0 = problem.reference_at_reference()?;
    let boundary_residual = |vn: f64, un1: f64| -> Result<[f64; 2]> {
        let ext = extend_table(vn, un1, &old, reference)?;
        let edge = edge_row(&ext, &old0, problem.reference_data());
        let mut r = [0.0; 2];
        for (slot, j) in [n - 1, n].into_iter().enumerate() {
            let gn1 = edge[slot];
            let g = |a: usize, b: usize| ov.g(a, b);
            let u0 = |k: usize| reference.coupling_at(k.min(n));
            r[slot] = (vn - reference.potential_at(j)) * g(n, j) + u[n] * gn1 - u0(j) * g(n, j + 1)
                + un1 * g(n - 1, j)
                - u0(j - 1) * g(n, j - 1)
                - (gn1 - 2.0 * g(n, j) + g(n - 1, j)) * inv
                + (g(n, j + 1) - 2.0 * g(n, j) + g(n, j - 1)) * inv;
        }
        Ok(r)
    };
    let r0 = boundary_residual(0.0, 0.0)?;
    let rv = boundary_residual(1.0, 0.0)?;
    let ru = boundary_residual(0.0, 1.0)?;
    let jac = [
        [rv[0] - r0[0], ru[0] - r0[0]],
        [rv[1] - r0[1], ru[1] - r0[1]],
    ];
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let scale = (ov.g(n, n) * ov.g(n - 1, n - 1)).abs();
    let boundary_det = if scale > 0.0 { det.abs() / scale } else { 0.0 };
    report.boundary_determinant = Some(boundary_det);
    let boundary = if boundary_det >= guard {
        solve2(jac, [-r0[0], -r0[1]], 0.0).map(|s| s.x)
    } else {
        None
    };

    match boundary {
        Some([vn, un1]) => {
            v[n] = vn;
            u[n - 1] = un1;
        }
        None => {
            report.dirichlet_closure = true;
            let table = transformed_solutions(kn, reference, target.levels())?;
            let c2: Vec<f64> = target.weights().iter().map(|c| c * c).collect();
            let (mut s11, mut s12, mut s22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (nu, &e) in target.levels().iter().enumerate() {
                let pn = table.at(nu, n);
                let pn1 = table.at(nu, n - 1);
                s11 += c2[nu] * pn * pn;
                s12 += c2[nu] * pn * pn1;
                s22 += c2[nu] * pn1 * pn1;
                b1 += c2[nu] * (e - 2.0 * inv) * pn * pn;
                b2 += c2[nu] * (e - 2.0 * inv) * pn * pn1;
            }
            b1 += s12 * inv;
            b2 += s22 * inv;
            let s = solve2([[s11, s12], [s12, s22]], [b1, b2], guard).ok_or(
                Error::RecursionDegenerate {
                    row: n,
                    determinant: (s11 * s22 - s12 * s12).abs()
                        / (s11.abs().max(s12.abs()) * s12.abs().max(s22.abs())),
                },
            )?;
            v[n] = s.x[0];
            u[n - 1] = s.x[1];
        }
    }

    let pair_system = |m: usize, pair: [usize; 2], u_m: f64| {
        let a = row_equation(&ov, reference, m, pair[0], u_m);
        let b = row_equation(&ov, reference, m, pair[1], u_m);
        ([[a.0, a.1], [b.0, b.1]], [a.2, b.2])
    };
    let relative_det = |a: [[f64; 2]; 2]| {
        let scale = a[0][0].abs().max(a[0][1].abs()) * a[1][0].abs().max(a[1][1].abs());
        if scale > 0.0 {
            (a[0][0] * a[1][1] - a[0][1] * a[1][0]).abs() / scale
        } else {
            0.0
        }
    };
    let mut min_det = f64::INFINITY;
    for m in (2..n).rev() {
        let mut solved = None;
        if m >= 4 {
            let (a, b) = pair_system(m, [m - 2, m - 3], u[m]);
            solved = solve2(a, b, guard);
            if solved.is_none() {
                report.fallback_rows.push(m);
            }
        }
        let s = match solved {
            Some(s) => s,
            None => {
                let (a, b) = pair_system(m, [m, m - 1], u[m]);
                solve2(a, b, guard).ok_or(Error::RecursionDegenerate {
                    row: m,
                    determinant: relative_det(a),
                })?
            }
        };
        min_det = min_det.min(s.relative_determinant);
        v[m] = s.x[0];
        u[m - 1] = s.x[1];
    }
    if min_det.is_finite() {
        report.min_pair_determinant = Some(min_det);
    }
    let (c1, _, rhs) = row_equation(&ov, reference, 1, 1, u[1]);
    v[1] = rhs / c1;

    let op = JacobiOperator::new(grid, v[1..].to_vec(), u[1..n].to_vec(), reference.u_edge())?;
    Ok((op, report))
}

/// Operator obtained by orthogonalizing only the first `m_star` nodes.
///
/// Rows beyond `m_star` keep the reference solutions. Each transformed row is solved from the
/// unit-leading identities at `n = m, m-1` with the forward coupling pinned to `u°(x_m)`,
/// giving `V(x_m)` and a backward coupling `w(x_{m-1})`; the pair of off-diagonals is then
/// symmetrized, `(u - 1/Δ²)² = (u° - 1/Δ²)(w - 1/Δ²)`.
pub fn intermediate_operator(
    kernel: &TransformKernel,
    problem: &InversionProblem,
    m_star: usize,
) -> Result<JacobiOperator> {
    let grid = *problem.grid();
    let n = grid.len();
    if m_star == 0 || m_star > n {
        return Err(Error::InvalidOperator(format!(
            "block size {m_star} outside 1..={n}"
        )));
    }
    let d = grid.step();
    let inv = grid.inv_step_sq();
    let reference = problem.reference();
    let unit = kernel.unit_leading();
    let mut lower = vec![0.0; n * n];
    for m in 2..=m_star {
        for j in 1..m {
            lower[(m - 1) * n + (j - 1)] = unit.get(m, j);
        }
    }
    let truncated = TransformKernel::from_lower(grid, lower, DiagonalConvention::default())?;
    let ov = Overlap {
        kernel: &truncated,
        n,
        d,
    };

    let mut v = reference.v().to_vec();
    let mut u = reference.u().to_vec();
    for m in 2..=m_star {
        let u_m = reference.coupling_at(m);
        let a = row_equation(&ov, reference, m, m, u_m);
        let b = row_equation(&ov, reference, m, m - 1, u_m);
        let s = solve2([[a.0, a.1], [b.0, b.1]], [a.2, b.2], 1e-14).ok_or(
            Error::RecursionDegenerate {
                row: m,
                determinant: 0.0,
            },
        )?;
        v[m - 1] = s.x[0];
        let a0 = reference.coupling_at(m - 1) - inv;
        let b0 = s.x[1] - inv;
        if !(a0 * b0 > 0.0) {
            return Err(Error::RecursionDegenerate {
                row: m,
                determinant: 0.0,
            });
        }
        u[m - 2] = a0.signum() * (a0 * b0).sqrt() + inv;
    }
    let (c1, _, rhs) = row_equation(&ov, reference, 1, 1, reference.coupling_at(1));
    v[0] = rhs / c1;
    JacobiOperator::new(grid, v, u, reference.u_edge())
}

/// Options of the inversion pipeline.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InvertOptions {
    pub method: Method,
    pub tolerances: Tolerances,
    pub convention: DiagonalConvention,
}

/// Residuals and conditioning figures of one inversion. All entries are finite.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub gl_residual: f64,
    pub gl_condition: f64,
    pub gl_worst_row: usize,
    /// `max |K|` of the unit-leading kernel.
    pub kernel_max: f64,
    /// Deviation of `K` from its expression through old and new solutions.
    pub kernel_cross_check: f64,
    /// `max_m |lead_m - 1|`: how far the unit-leading solutions are from normalized.
    pub normalization_spread: f64,
    /// Orthonormality of the recovered operator's regular solutions under the target measure.
    pub orthonormality_defect: f64,
    pub leakage: Option<f64>,
    pub h_norm: Option<f64>,
    /// `max` absolute coefficient difference between recursion and synthesis.
    pub recursion_gap: Option<f64>,
    pub recursion: Option<RecursionReport>,
    /// `Σ_μ c°_μ² φ(x_{N+1},E°_μ) φ°(x_n,E°_μ)` at `n = N-1, N`.
    pub edge_values: Option<[f64; 2]>,
    /// Largest relative level error of a forward solve of the recovered operator.
    pub level_error: f64,
    /// Largest relative weight error of a forward solve of the recovered operator.
    pub weight_error: f64,
}

impl Diagnostics {
    /// Human-readable list of thresholds that are not met.
    pub fn violations(&self, tol: &Tolerances) -> Vec<String> {
        let mut out = Vec::new();
        if self.orthonormality_defect > tol.orthonormality {
            out.push(format!(
                "orthonormality defect {:e} exceeds {:e}",
                self.orthonormality_defect, tol.orthonormality
            ));
        }
        if let (Some(l), Some(h)) = (self.leakage, self.h_norm) {
            if l > tol.leakage * h {
                out.push(format!(
                    "synthesis leakage {l:e} exceeds {:e}·‖H‖ = {:e}",
                    tol.leakage,
                    tol.leakage * h
                ));
            }
        }
        if let Some(g) = self.recursion_gap {
            if g > tol.recursion_gap {
                out.push(format!(
                    "recursion-synthesis gap {g:e} exceeds {:e}",
                    tol.recursion_gap
                ));
            }
        }
        out
    }
}

/// Output of the inversion pipeline.
#[derive(Clone, Debug)]
pub struct RecoveredSystem {
    /// The reported operator (synthesis when available).
    pub operator: JacobiOperator,
    pub synthesis: Option<JacobiOperator>,
    pub recursion: Option<JacobiOperator>,
    /// Unit-leading kernel solved from the GL system.
    pub kernel: TransformKernel,
    /// Kernel with rows rescaled to normalized solutions.
    pub normalized_kernel: TransformKernel,
    /// Normalized new regular solutions at the target levels, `x_0..=x_N`.
    pub solutions: RegularSolutionTable,
    /// Frame of `kernel` and `solutions`: for right-edge data they live on the mirrored grid.
    pub frame: Orientation,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

/// Full inversion: Q kernel, GL rows, normalization, then recovery by the selected method(s).
///
/// Right-orientation problems are delegated to [`crate::continuum::invert_right_edge`].
/// Threshold checks on the diagnostics are left to the caller (see [`Diagnostics::violations`]);
/// only a singular or ill-conditioned GL system is an error.
pub fn invert(problem: &InversionProblem, options: &InvertOptions) -> Result<RecoveredSystem> {
    match problem.orientation() {
        Orientation::Left => invert_left(problem, options),
        Orientation::Right => crate::continuum::invert_right_edge(problem, options),
    }
}

pub(crate) fn invert_left(
    problem: &InversionProblem,
    options: &InvertOptions,
) -> Result<RecoveredSystem> {
    let tol = &options.tolerances;
    let q = build_q(problem)?;
    let (mut kernel, gl) =
        solve_gl_checked(&q, tol.gl_condition, tol.gl_residual, options.convention)?;
    let kernel_cross_check = k_cross_check(&kernel, problem)?;
    let mut normalized = orthonormalize(&kernel, problem)?;
    let normalization_spread = normalized
        .leads()
        .iter()
        .map(|r| (r - 1.0).abs())
        .fold(0.0, f64::max);
    let target = problem.target_data();
    let reference = problem.reference();
    let solutions = transformed_solutions(&normalized, reference, target.levels())?;

    let synthesis = if options.method.uses_synthesis() {
        Some(synthesize_unchecked(
            &solutions,
            target,
            reference.u_edge(),
        )?)
    } else {
        None
    };
    let recursion = if options.method.uses_recursion() {
        Some(recursive_with_normalized(
            &normalized,
            problem,
            tol.determinant_guard,
        )?)
    } else {
        None
    };
    let operator = match (&synthesis, &recursion) {
        (Some(s), _) => s.operator.clone(),
        (None, Some((op, _))) => op.clone(),
        (None, None) => unreachable!("every method uses at least one route"),
    };
    let recursion_gap = match (&synthesis, &recursion) {
        (Some(s), Some((op, _))) => Some(s.operator.max_coefficient_gap(op)),
        _ => None,
    };

    let n = problem.len();
    let old = transformed_solutions(&normalized, reference, problem.reference_data().levels())?;
    let old0 = problem.reference_at_reference()?;
    let u_prev = if n >= 2 { operator.u()[n - 2] } else { 0.0 };
    let ext = extend_table(operator.v()[n - 1], u_prev, &old, reference)?;
    let edge = edge_row(&ext, &old0, problem.reference_data());
    normalized.set_k_edge_row(edge);
    kernel.set_k_edge_row(edge);

    let check = regular_solutions(&operator, target.levels())?;
    let orthonormality_defect = weighted_orthogonality_defect(&check, target);
    let (level_error, weight_error) = eigen_consistency(&operator, target)?;

    let diagnostics = Diagnostics {
        gl_residual: gl.max_residual,
        gl_condition: gl.max_condition,
        gl_worst_row: gl.worst_row,
        kernel_max: kernel.max_abs(),
        kernel_cross_check,
        normalization_spread,
        orthonormality_defect,
        leakage: synthesis.as_ref().map(|s| s.leakage),
        h_norm: synthesis.as_ref().map(|s| s.h_norm),
        recursion_gap,
        recursion: recursion.as_ref().map(|(_, r)| r.clone()),
        edge_values: Some(edge),
        level_error,
        weight_error,
    };
    Ok(RecoveredSystem {
        operator,
        synthesis: synthesis.map(|s| s.operator),
        recursion: recursion.map(|(op, _)| op),
        kernel,
        normalized_kernel: normalized,
        solutions,
        frame: Orientation::Left,
        method: options.method,
        diagnostics,
    })
}

/// Largest relative level and weight errors of a forward solve of `op` against `data`.
pub fn eigen_consistency(op: &JacobiOperator, data: &SpectralData) -> Result<(f64, f64)> {
    let es = eigensolve(op)?;
    let got = match data.orientation() {
        Orientation::Left => extract_spectral_data(&es, op.grid()),
        Orientation::Right => extract_right_spectral_data(&es, op.grid()),
    };
    // An operator far from the data may not even give weights meeting the sum constraint.
    let Ok(got) = got else {
        return Ok((f64::MAX, f64::MAX));
    };
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    let level_error = es
        .levels()
        .iter()
        .zip(data.levels())
        .map(|(a, b)| rel(*a, *b))
        .fold(0.0, f64::max);
    let weight_error = got
        .weights()
        .iter()
        .zip(data.weights())
        .map(|(a, b)| rel(*a, *b))
        .fold(0.0, f64::max);
    Ok((level_error, weight_error))
}

/// Free-well reference and its left spectral data on `N` nodes.
pub fn free_reference(n: usize) -> Result<(JacobiOperator, SpectralData)> {
    let op = JacobiOperator::free(n)?;
    let data = extract_spectral_data(&eigensolve(&op)?, op.grid())?;
    Ok((op, data))
}

/// Left spectral data of `op`.
pub fn forward_data(op: &JacobiOperator) -> Result<SpectralData> {
    extract_spectral_data(&eigensolve(op)?, op.grid())
}
