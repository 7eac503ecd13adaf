//! Continuum-limit checks: effective potential, the diagonal-derivative formula, the Goursat
//! residual, right-edge inversion by reflection, and refinement studies on the free well.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gl::{DiagonalConvention, InversionProblem, TransformKernel};
use crate::grid::Grid;
use crate::operator::{reflect, reflect_with_edge, JacobiOperator};
use crate::recovery::{free_reference, invert, invert_left, InvertOptions, RecoveredSystem};
use crate::spectral::{Orientation, SpectralData};

/// Number of interior points of the fixed comparison mesh `kπ/33`.
pub const MESH_POINTS: usize = 32;

/// `V(x_m) + 2u(x_m)` for `m = 1..N`, with `u(x_N) := u_edge`.
pub fn effective_potential(op: &JacobiOperator) -> Vec<f64> {
    (1..=op.len())
        .map(|m| op.potential_at(m) + 2.0 * op.coupling_at(m))
        .collect()
}

/// `2(K(x_{m+1},x_{m+1}) - K(x_m,x_m))/Δ` for `m = 1..N-1`, from the extended diagonal.
pub fn diagonal_derivative(k: &TransformKernel) -> Vec<f64> {
    let d = k.grid().step();
    k.diagonal()
        .windows(2)
        .map(|w| 2.0 * (w[1] - w[0]) / d)
        .collect()
}

/// `max_m |(V_eff - V°_eff)(x_m) - 2ΔK_diag(x_m)/Δ|` over `m = 1..N-2`.
///
/// The last difference `m = N-1` is excluded: it ends on `K(x_N,x_N)`, which the diagonal
/// convention only copies from its neighbour.
pub fn factor2_gap(
    recovered: &JacobiOperator,
    reference: &JacobiOperator,
    k: &TransformKernel,
) -> f64 {
    let new = effective_potential(recovered);
    let old = effective_potential(reference);
    let dd = diagonal_derivative(k);
    let last = recovered.len().saturating_sub(2);
    (0..last)
        .map(|i| ((new[i] - old[i]) - dd[i]).abs())
        .fold(0.0, f64::max)
}

/// Discrete residual of `(V(x) - V°(y))K = ∂²K/∂x² - ∂²K/∂y²` with effective potentials,
/// over `2 ≤ n ≤ m-2`, `m ≤ N-1`, scaled by `1 + max|K|`.
///
/// `k` should be unit-leading. Points with `n = m-1` are left out: there the second
/// difference in `y` reaches the diagonal convention and carries an `O(1/Δ)` term.
pub fn goursat_residual(
    k: &TransformKernel,
    recovered: &JacobiOperator,
    reference: &JacobiOperator,
) -> Result<f64> {
    let n = k.len();
    if n < 6 {
        return Err(Error::InvalidGrid(format!(
            "the Goursat residual needs N ≥ 6, got {n}"
        )));
    }
    let d = k.grid().step();
    let inv = 1.0 / (d * d);
    let v = effective_potential(recovered);
    let v0 = effective_potential(reference);
    let mut worst: f64 = 0.0;
    for m in 4..n {
        for j in 2..=m - 2 {
            let kmn = k.get(m, j);
            let dxx = (k.get(m + 1, j) - 2.0 * kmn + k.get(m - 1, j)) * inv;
            let dyy = (k.get(m, j + 1) - 2.0 * kmn + k.get(m, j - 1)) * inv;
            let r = (v[m - 1] - v0[j - 1]) * kmn - (dxx - dyy);
            worst = worst.max(r.abs());
        }
    }
    Ok(worst / (1.0 + k.max_abs()))
}

/// Inverts right-edge data by mirroring `x → π - x`.
///
/// The reference is reflected (its outer coefficient becomes 0, matching `u(x_0) := 0`), the
/// right weights are read as left weights of the mirrored problem, the left pipeline runs, and
/// the recovered operator is reflected back with the original reference `u_edge`. Kernel and
/// solutions stay in the mirrored frame.
pub fn invert_right_edge(
    problem: &InversionProblem,
    options: &InvertOptions,
) -> Result<RecoveredSystem> {
    if problem.orientation() != Orientation::Right {
        return Err(Error::InvalidSpectralData(
            "right-edge inversion needs right-orientation data".into(),
        ));
    }
    let mirrored = InversionProblem::new(
        reflect(problem.reference()),
        problem.reference_data().with_orientation(Orientation::Left),
        problem.target_data().with_orientation(Orientation::Left),
    )?;
    let mut r = invert_left(&mirrored, options)?;
    let edge = problem.reference().u_edge();
    r.operator = reflect_with_edge(&r.operator, edge);
    r.synthesis = r.synthesis.map(|op| reflect_with_edge(&op, edge));
    r.recursion = r.recursion.map(|op| reflect_with_edge(&op, edge));
    r.frame = Orientation::Right;
    Ok(r)
}

/// Same physical perturbation at every size: absolute level shifts and multiplicative weight
/// factors, keyed by 1-based level index.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Perturbation {
    pub level_shifts: BTreeMap<usize, f64>,
    pub weight_factors: BTreeMap<usize, f64>,
}

impl Perturbation {
    pub fn is_empty(&self) -> bool {
        self.level_shifts.is_empty() && self.weight_factors.is_empty()
    }

    /// Largest level index touched.
    pub fn max_index(&self) -> usize {
        self.level_shifts
            .keys()
            .chain(self.weight_factors.keys())
            .copied()
            .max()
            .unwrap_or(0)
    }

    pub fn apply(&self, data: &SpectralData) -> Result<SpectralData> {
        data.perturbed(&self.level_shifts, &self.weight_factors)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefinementStudy {
    pub sizes: Vec<usize>,
    pub perturbation: Perturbation,
    pub convention: DiagonalConvention,
}

impl RefinementStudy {
    pub fn new(sizes: Vec<usize>, perturbation: Perturbation) -> Result<Self> {
        let s = RefinementStudy {
            sizes,
            perturbation,
            convention: DiagonalConvention::default(),
        };
        s.validate()?;
        Ok(s)
    }

    /// Sizes at least 8 and strictly increasing; only levels up to `⌊N/4⌋` perturbed; levels
    /// still ascending after the shifts at every size.
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::InvalidStudy("no sizes given".into()));
        }
        if let Some(&n) = self.sizes.iter().find(|&&n| n < 8) {
            return Err(Error::InvalidStudy(format!(
                "size {n} is below the minimum of 8"
            )));
        }
        if self.sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidStudy(
                "sizes must be strictly increasing".into(),
            ));
        }
        let p = &self.perturbation;
        if p.level_shifts.contains_key(&0) || p.weight_factors.contains_key(&0) {
            return Err(Error::InvalidStudy("level indices are 1-based".into()));
        }
        let limit = self.sizes[0] / 4;
        if p.max_index() > limit {
            return Err(Error::InvalidStudy(format!(
                "level {} is perturbed but only levels up to ⌊N/4⌋ = {limit} have a continuum counterpart at N = {}",
                p.max_index(),
                self.sizes[0]
            )));
        }
        if p.level_shifts
            .values()
            .chain(p.weight_factors.values())
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidStudy("non-finite perturbation".into()));
        }
        if p.weight_factors.values().any(|&f| f <= 0.0) {
            return Err(Error::InvalidStudy(
                "weight factors must be positive".into(),
            ));
        }
        for &n in &self.sizes {
            let grid = Grid::new(n)?;
            let mut levels = crate::spectral::free_well_levels(&grid);
            for (&k, &s) in &p.level_shifts {
                levels[k - 1] += s;
            }
            if levels.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidStudy(format!(
                    "perturbed levels are not ascending at N = {n}"
                )));
            }
        }
        Ok(())
    }
}

/// Figures for one size of a refinement study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeMetrics {
    pub n: usize,
    pub delta: f64,
    /// Recovered effective potential on `x_1..x_N`.
    pub v_eff: Vec<f64>,
    pub factor2_gap: f64,
    pub goursat_residual: f64,
    pub gl_condition: f64,
    pub recursion_gap: Option<f64>,
    pub kernel_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SizeResult {
    pub n: usize,
    pub delta: f64,
    pub outcome: std::result::Result<SizeMetrics, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResults {
    pub sizes: Vec<SizeResult>,
    /// Max difference between successive successful profiles on the comparison mesh,
    /// aligned with `sizes` (None for the first and for failed sizes).
    pub cauchy_diff: Vec<Option<f64>>,
    /// `log₂` of successive Cauchy-difference ratios, aligned with `sizes`.
    pub est_order: Vec<Option<f64>>,
}

/// Pass/fail line of a study-level check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl StudyResults {
    pub fn metrics(&self) -> impl Iterator<Item = &SizeMetrics> {
        self.sizes.iter().filter_map(|s| s.outcome.as_ref().ok())
    }

    /// All sizes succeeded, and both the factor-2 gap and the Goursat residual decrease with
    /// `N` (values below `noise_floor` count as converged).
    pub fn criteria(&self, noise_floor: f64) -> Vec<Criterion> {
        let failed: Vec<usize> = self
            .sizes
            .iter()
            .filter(|s| s.outcome.is_err())
            .map(|s| s.n)
            .collect();
        let decreasing = |values: Vec<f64>| {
            values
                .windows(2)
                .all(|w| w[1] <= noise_floor || w[1] < w[0])
        };
        let f2: Vec<f64> = self.metrics().map(|m| m.factor2_gap).collect();
        let gr: Vec<f64> = self.metrics().map(|m| m.goursat_residual).collect();
        vec![
            Criterion {
                name: "all_sizes",
                passed: failed.is_empty(),
                detail: if failed.is_empty() {
                    "every size inverted".into()
                } else {
                    format!("failed sizes: {failed:?}")
                },
            },
            Criterion {
                name: "factor2_decreasing",
                passed: decreasing(f2.clone()),
                detail: format!("{f2:?}"),
            },
            Criterion {
                name: "goursat_decreasing",
                passed: decreasing(gr.clone()),
                detail: format!("{gr:?}"),
            },
        ]
    }
}

/// Interior comparison mesh `kπ/33`, `k = 1..=32`.
pub fn comparison_mesh() -> Vec<f64> {
    (1..=MESH_POINTS)
        .map(|k| k as f64 * PI / (MESH_POINTS + 1) as f64)
        .collect()
}

/// Piecewise-linear interpolation; `None` outside `[x[0], x[last]]`.
pub fn interpolate(x: &[f64], y: &[f64], at: f64) -> Option<f64> {
    let last = *x.last()?;
    if at < x[0] || at > last {
        return None;
    }
    let i = x.partition_point(|&xi| xi <= at);
    if i == 0 {
        return Some(y[0]);
    }
    if i >= x.len() {
        return Some(y[x.len() - 1]);
    }
    let t = (at - x[i - 1]) / (x[i] - x[i - 1]);
    Some(y[i - 1] + t * (y[i] - y[i - 1]))
}

/// Effective-potential profile on the comparison mesh, from lattice points `m = 1..N-1`.
///
/// `V(x_N) + 2u_edge` is left out since it carries the pinned reference coupling.
pub fn mesh_profile(v_eff: &[f64], grid: &Grid) -> Vec<Option<f64>> {
    let n = grid.len();
    let x: Vec<f64> = (1..n).map(|m| grid.node(m)).collect();
    comparison_mesh()
        .into_iter()
        .map(|at| interpolate(&x, &v_eff[..n - 1], at))
        .collect()
}

/// Max difference over mesh points covered by both profiles.
pub fn cauchy_difference(a: &[Option<f64>], b: &[Option<f64>]) -> Option<f64> {
    a.iter()
        .zip(b)
        .filter_map(|(x, y)| Some((x.as_ref()? - y.as_ref()?).abs()))
        .reduce(f64::max)
}

fn run_size(n: usize, study: &RefinementStudy, options: &InvertOptions) -> Result<SizeMetrics> {
    let (reference, data0) = free_reference(n)?;
    let target = study.perturbation.apply(&data0)?;
    let problem = InversionProblem::new(reference, data0, target)?;
    let opts = InvertOptions {
        convention: study.convention,
        ..*options
    };
    let r = invert(&problem, &opts)?;
    Ok(SizeMetrics {
        n,
        delta: problem.grid().step(),
        v_eff: effective_potential(&r.operator),
        factor2_gap: factor2_gap(&r.operator, problem.reference(), &r.kernel),
        goursat_residual: goursat_residual(&r.kernel, &r.operator, problem.reference())?,
        gl_condition: r.diagnostics.gl_condition,
        recursion_gap: r.diagnostics.recursion_gap,
        kernel_max: r.diagnostics.kernel_max,
    })
}

/// Runs every size of the study on the free-well family (sizes in parallel).
///
/// Per-size failures are recorded and the remaining sizes still run.
pub fn run_refinement_study(
    study: &RefinementStudy,
    options: &InvertOptions,
) -> Result<StudyResults> {
    study.validate()?;
    let outcomes: Vec<std::result::Result<SizeMetrics, String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = study
            .sizes
            .iter()
            .map(|&n| scope.spawn(move || run_size(n, study, options).map_err(|e| e.to_string())))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err("worker panicked".into())))
            .collect()
    });
    let sizes: Vec<SizeResult> = study
        .sizes
        .iter()
        .zip(outcomes)
        .map(|(&n, outcome)| SizeResult {
            n,
            delta: PI / (n as f64 + 1.0),
            outcome,
        })
        .collect();

    let profiles: Vec<Option<Vec<Option<f64>>>> = sizes
        .iter()
        .map(|s| {
            let m = s.outcome.as_ref().ok()?;
            Some(mesh_profile(&m.v_eff, &Grid::new(s.n).ok()?))
        })
        .collect();
    let mut cauchy_diff = vec![None; sizes.len()];
    let mut prev: Option<usize> = None;
    for i in 0..sizes.len() {
        if let Some(p) = &profiles[i] {
            if let Some(j) = prev {
                cauchy_diff[i] = cauchy_difference(profiles[j].as_ref().unwrap(), p);
            }
            prev = Some(i);
        }
    }
    let mut est_order = vec![None; sizes.len()];
    let mut last_diff: Option<f64> = None;
    for i in 0..sizes.len() {
        if let Some(cd) = cauchy_diff[i] {
            if let Some(prev_cd) = last_diff {
                let o = (prev_cd / cd).log2();
                est_order[i] = o.is_finite().then_some(o);
            }
            last_diff = Some(cd);
        }
    }
    Ok(StudyResults {
        sizes,
        cauchy_diff,
        est_order,
    })
}

/// Continuum free-well level `ν²`.
pub fn continuum_free_level(nu: usize) -> f64 {
    (nu * nu) as f64
}

/// Continuum free-well norming constant `ν√(2/π)` (the slope of `√(2/π) sin νx` at 0).
pub fn continuum_free_weight(nu: usize) -> f64 {
    nu as f64 * (2.0 / PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gl::{build_q, solve_gl};
    use crate::recovery::forward_data;
    use crate::spectral::{eigensolve, extract_right_spectral_data};

    #[test]
    fn effective_potential_of_constant_coefficients() {
        let grid = Grid::new(5).unwrap();
        let op = JacobiOperator::new(grid, vec![0.3; 5], vec![0.1; 4], 0.1).unwrap();
        for x in effective_potential(&op) {
            assert!((x - 0.5).abs() < 1e-15);
        }
        assert!(effective_potential(&JacobiOperator::free(7).unwrap())
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn derivative_of_linear_diagonal() {
        let grid = Grid::new(6).unwrap();
        let alpha = 0.75;
        let mut lower = vec![0.0; 36];
        // K(x_m,x_n) = αx_n makes the copied diagonal K(x_n,x_n) = αx_n for n < N.
        for m in 1..=6 {
            for j in 1..m {
                lower[(m - 1) * 6 + (j - 1)] = alpha * grid.node(j);
            }
        }
        let k =
            TransformKernel::from_lower(grid, lower, DiagonalConvention::SubdiagonalCopy).unwrap();
        let dd = diagonal_derivative(&k);
        assert_eq!(dd.len(), 5);
        for x in &dd[..4] {
            assert!((x - 2.0 * alpha).abs() < 1e-12);
        }
        assert!(diagonal_derivative(&TransformKernel::identity(grid))
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn zero_kernel_has_zero_residuals() {
        let op = JacobiOperator::free(8).unwrap();
        let k = TransformKernel::identity(*op.grid());
        assert_eq!(goursat_residual(&k, &op, &op).unwrap(), 0.0);
        assert_eq!(factor2_gap(&op, &op, &k), 0.0);
        assert!(
            goursat_residual(&TransformKernel::identity(Grid::new(5).unwrap()), &op, &op).is_err()
        );
    }

    #[test]
    fn mirror_of_symmetric_fixture() {
        let (reference, data0) = free_reference(10).unwrap();
        let target = data0
            .perturbed(&BTreeMap::from([(1, 0.6)]), &BTreeMap::from([(2, 1.05)]))
            .unwrap();
        let left = InversionProblem::new(reference.clone(), data0.clone(), target.clone()).unwrap();
        let right = InversionProblem::new(
            reference,
            data0.with_orientation(Orientation::Right),
            target.with_orientation(Orientation::Right),
        )
        .unwrap();
        let opts = InvertOptions::default();
        let l = invert(&left, &opts).unwrap();
        let r = invert(&right, &opts).unwrap();
        assert_eq!(r.frame, Orientation::Right);
        assert!(r.operator.max_coefficient_gap(&reflect(&l.operator)) < 1e-10);
    }

    #[test]
    fn right_edge_roundtrip() {
        let n = 10;
        let grid = Grid::new(n).unwrap();
        let v: Vec<f64> = (0..n)
            .map(|i| 0.5 * ((i as f64) * 0.9).sin() + 0.1 * i as f64)
            .collect();
        let u: Vec<f64> = (0..n - 1)
            .map(|i| 0.05 * ((i as f64) * 1.7).cos())
            .collect();
        let target = JacobiOperator::new(grid, v, u, 0.0).unwrap();
        let right = extract_right_spectral_data(&eigensolve(&target).unwrap(), &grid).unwrap();
        let p = InversionProblem::from_reference(JacobiOperator::free(n).unwrap(), right).unwrap();
        let r = invert(&p, &InvertOptions::default()).unwrap();
        assert!(r.operator.max_coefficient_gap(&target) < 1e-5);
        assert!(r.recursion.unwrap().max_coefficient_gap(&target) < 1e-5);
        // Identity right data recovers the reference.
        let free = JacobiOperator::free(n).unwrap();
        let right0 = extract_right_spectral_data(&eigensolve(&free).unwrap(), &grid).unwrap();
        let p0 = InversionProblem::from_reference(free.clone(), right0).unwrap();
        let r0 = invert(&p0, &InvertOptions::default()).unwrap();
        assert!(r0.operator.max_coefficient_gap(&free) < 1e-10);
    }

    #[test]
    fn interpolation_and_coverage() {
        let x = [1.0, 2.0, 4.0];
        let y = [0.0, 1.0, 5.0];
        assert_eq!(interpolate(&x, &y, 3.0), Some(3.0));
        assert_eq!(interpolate(&x, &y, 1.0), Some(0.0));
        assert_eq!(interpolate(&x, &y, 4.0), Some(5.0));
        assert_eq!(interpolate(&x, &y, 0.5), None);
        assert_eq!(
            cauchy_difference(
                &[Some(1.0), None, Some(2.0)],
                &[Some(1.5), Some(9.0), Some(2.0)]
            ),
            Some(0.5)
        );
        assert_eq!(comparison_mesh().len(), 32);
    }

    #[test]
    fn study_validation() {
        assert!(RefinementStudy::new(vec![8, 16], Perturbation::default()).is_ok());
        assert!(RefinementStudy::new(vec![4, 16], Perturbation::default()).is_err());
        assert!(RefinementStudy::new(vec![16, 16], Perturbation::default()).is_err());
        let high = Perturbation {
            level_shifts: BTreeMap::from([(3, 0.5)]),
            ..Default::default()
        };
        assert!(RefinementStudy::new(vec![8, 16], high.clone()).is_err());
        assert!(RefinementStudy::new(vec![12, 16], high).is_ok());
        let crossing = Perturbation {
            level_shifts: BTreeMap::from([(1, 50.0)]),
            ..Default::default()
        };
        assert!(RefinementStudy::new(vec![40], crossing).is_err());
    }

    #[test]
    fn zero_perturbation_study_is_flat() {
        let study = RefinementStudy::new(vec![8, 16, 24], Perturbation::default()).unwrap();
        let res = run_refinement_study(&study, &InvertOptions::default()).unwrap();
        for m in res.metrics() {
            assert!(m.v_eff.iter().all(|x| x.abs() < 1e-9));
            assert!(m.factor2_gap < 1e-9 && m.goursat_residual < 1e-9);
        }
        assert_eq!(res.cauchy_diff[0], None);
        assert!(res.cauchy_diff[1].unwrap() < 1e-9);
        assert!(res.criteria(1e-9).iter().all(|c| c.passed));
    }

    #[test]
    fn single_size_study_has_no_orders() {
        let study = RefinementStudy::new(vec![8], Perturbation::default()).unwrap();
        let res = run_refinement_study(&study, &InvertOptions::default()).unwrap();
        assert_eq!(res.cauchy_diff, vec![None]);
        assert_eq!(res.est_order, vec![None]);
    }

    #[test]
    fn goursat_small_for_smooth_perturbation() {
        let (reference, data0) = free_reference(40).unwrap();
        let target = data0
            .perturbed(&BTreeMap::from([(1, 1.0)]), &BTreeMap::new())
            .unwrap();
        let p = InversionProblem::new(reference.clone(), data0, target).unwrap();
        let k = solve_gl(&build_q(&p).unwrap()).unwrap();
        let r = invert(&p, &InvertOptions::default()).unwrap();
        let g = goursat_residual(&k, &r.operator, &reference).unwrap();
        assert!(g.is_finite() && g < 1.0, "{g}");
        let _ = forward_data(&r.operator).unwrap();
    }
}
