//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use jacobi_gl::continuum::{continuum_free_level, continuum_free_weight, SizeMetrics};
use jacobi_gl::recovery::{forward_data, free_reference};
use jacobi_gl::spectral::free_well_levels;
use jacobi_gl::{
    build_q, eigensolve, extract_right_spectral_data, extract_spectral_data, gram_schmidt_oracle,
    invert, reflect, run_refinement_study, solve_gl, Grid, InversionProblem, InvertOptions,
    JacobiOperator, Orientation, Perturbation, RecoveredSystem, RefinementStudy,
};

use common::{free_problem, random_target};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

struct Fixture {
    target: JacobiOperator,
    problem: InversionProblem,
    recovered: RecoveredSystem,
}

fn fixtures() -> Vec<Fixture> {
    (0..20)
        .map(|seed| {
            let target = random_target(seed, 12);
            let problem = free_problem(&target);
            let recovered = invert(&problem, &InvertOptions::default()).unwrap();
            Fixture {
                target,
                problem,
                recovered,
            }
        })
        .collect()
}

fn identity_inversion() -> Outcome {
    let start = Instant::now();
    let mut worst_k: f64 = 0.0;
    let mut worst_op: f64 = 0.0;
    for n in [4, 12, 40] {
        let (reference, data) = free_reference(n).unwrap();
        let p = InversionProblem::new(reference.clone(), data.clone(), data).unwrap();
        let r = invert(&p, &InvertOptions::default()).unwrap();
        worst_k = worst_k.max(r.kernel.max_abs());
        for op in [
            Some(&r.operator),
            r.synthesis.as_ref(),
            r.recursion.as_ref(),
        ]
        .into_iter()
        .flatten()
        {
            worst_op = worst_op.max(op.max_coefficient_gap(&reference));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_k <= 1e-10 && worst_op <= 1e-10 && secs < 1.0,
        format!("max|K| = {worst_k:.2e}, max coefficient error = {worst_op:.2e}, {secs:.2} s"),
    )
}

fn round_trip(fx: &[Fixture], secs: f64) -> Outcome {
    let (mut syn, mut rec, mut between): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for f in fx {
        let s = f.recovered.synthesis.as_ref().unwrap();
        let r = f.recovered.recursion.as_ref().unwrap();
        syn = syn.max(s.max_coefficient_gap(&f.target));
        rec = rec.max(r.max_coefficient_gap(&f.target));
        between = between.max(s.max_coefficient_gap(r));
    }
    outcome(
        syn <= 1e-5 && rec <= 1e-5 && between <= 1e-5 && secs < 10.0,
        format!(
            "synthesis {syn:.2e}, recursion {rec:.2e}, methods apart {between:.2e}, {} targets in {secs:.2} s",
            fx.len()
        ),
    )
}

fn oracle_equivalence(fx: &[Fixture]) -> Outcome {
    let mut worst: f64 = 0.0;
    for f in fx {
        let k = solve_gl(&build_q(&f.problem).unwrap()).unwrap();
        let oracle = gram_schmidt_oracle(&f.problem).unwrap();
        worst = worst.max(k.max_gap(&oracle) / (1.0 + k.max_abs()));
    }
    outcome(
        worst <= 1e-8,
        format!("max |K - K_oracle| / (1 + max|K|) = {worst:.2e}"),
    )
}

fn orthonormality(fx: &[Fixture]) -> Outcome {
    let worst = fx
        .iter()
        .map(|f| f.recovered.diagnostics.orthonormality_defect)
        .fold(0.0, f64::max);
    outcome(worst <= 1e-6, format!("max defect = {worst:.2e}"))
}

fn tridiagonality(fx: &[Fixture]) -> Outcome {
    let worst = fx
        .iter()
        .map(|f| {
            let d = &f.recovered.diagnostics;
            d.leakage.unwrap() / d.h_norm.unwrap()
        })
        .fold(0.0, f64::max);
    outcome(worst <= 1e-6, format!("max leakage / ‖H‖ = {worst:.2e}"))
}

fn sweep() -> (Vec<SizeMetrics>, f64) {
    let start = Instant::now();
    let study = RefinementStudy::new(
        vec![40, 80, 160],
        Perturbation {
            level_shifts: BTreeMap::from([(1, 1.0)]),
            weight_factors: BTreeMap::new(),
        },
    )
    .unwrap();
    let results = run_refinement_study(&study, &InvertOptions::default()).unwrap();
    let metrics = results.metrics().cloned().collect::<Vec<_>>();
    assert_eq!(metrics.len(), 3, "every sweep size must succeed");
    (metrics, start.elapsed().as_secs_f64())
}

fn factor_two(m: &[SizeMetrics], secs: f64) -> Outcome {
    let (first, last) = (m[0].factor2_gap, m[2].factor2_gap);
    outcome(
        last < 0.5 * first && secs < 30.0,
        format!(
            "gap {:.3} / {:.3} / {:.3} at N = 40 / 80 / 160, last/first = {:.3}, {secs:.2} s",
            first,
            m[1].factor2_gap,
            last,
            last / first
        ),
    )
}

fn goursat(m: &[SizeMetrics]) -> Outcome {
    let ratios: Vec<f64> = m
        .windows(2)
        .map(|w| w[0].goursat_residual / w[1].goursat_residual)
        .collect();
    outcome(
        ratios.iter().all(|r| (1.4..=2.8).contains(r)),
        format!(
            "residual {:.3e} / {:.3e} / {:.3e}, ratios {:.3}, {:.3}",
            m[0].goursat_residual,
            m[1].goursat_residual,
            m[2].goursat_residual,
            ratios[0],
            ratios[1]
        ),
    )
}

fn mirror() -> Outcome {
    let n = 11;
    let grid = Grid::new(n).unwrap();
    let v: Vec<f64> = (1..=n)
        .map(|i| {
            let x = grid.node(i);
            (2.0 * x).cos() + 0.3 * (x - std::f64::consts::FRAC_PI_2).powi(2)
        })
        .collect();
    let u: Vec<f64> = (1..n)
        .map(|i| 0.05 * ((grid.node(i) + grid.node(i + 1)) / 2.0 - 1.0).cos())
        .collect();
    let u_sym: Vec<f64> = (0..n - 1).map(|i| 0.5 * (u[i] + u[n - 2 - i])).collect();
    let target = JacobiOperator::new(grid, v, u_sym, 0.0).unwrap();
    let es = eigensolve(&target).unwrap();
    let left = extract_spectral_data(&es, &grid).unwrap();
    let right = extract_right_spectral_data(&es, &grid).unwrap();
    let free = JacobiOperator::free(n).unwrap();
    let opts = InvertOptions::default();
    let l = invert(
        &InversionProblem::from_reference(free.clone(), left).unwrap(),
        &opts,
    )
    .unwrap();
    let r = invert(
        &InversionProblem::from_reference(free, right).unwrap(),
        &opts,
    )
    .unwrap();
    let gap = r.operator.max_coefficient_gap(&reflect(&l.operator));
    outcome(
        gap <= 1e-6 && r.frame == Orientation::Right,
        format!("max |right - reflect(left)| = {gap:.2e}"),
    )
}

fn order(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn free_well() -> Outcome {
    let free = JacobiOperator::free(100).unwrap();
    let computed = eigensolve(&free).unwrap();
    let exact = free_well_levels(free.grid());
    let rel = computed
        .levels()
        .iter()
        .zip(&exact)
        .map(|(a, b)| ((a - b) / b).abs())
        .fold(0.0, f64::max);

    let nus = [1, 2, 3];
    let mut level_orders = Vec::new();
    let mut weight_orders = Vec::new();
    for &nu in &nus {
        let mut le = Vec::new();
        let mut we = Vec::new();
        for n in [40, 80, 160] {
            let data = forward_data(&JacobiOperator::free(n).unwrap()).unwrap();
            le.push((data.levels()[nu - 1] - continuum_free_level(nu)).abs());
            we.push((data.weights()[nu - 1] - continuum_free_weight(nu)).abs());
        }
        level_orders.extend(order(&le));
        weight_orders.extend(order(&we));
    }
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let (lo, wo) = (min(&level_orders), min(&weight_orders));
    // Levels must show second order. Weights must converge at least at first order.
    outcome(
        rel <= 1e-10 && (1.8..=2.2).contains(&lo) && wo >= 0.8,
        format!(
            "N = 100 relative level error {rel:.2e}; lowest-level order ≥ {lo:.2}, weight order ≥ {wo:.2} over ν = 1..3"
        ),
    )
}

fn ill_posedness() -> Outcome {
    let measure = |n: usize| {
        let (reference, data) = free_reference(n).unwrap();
        let target = data
            .perturbed(&BTreeMap::from([(1, 5.0)]), &BTreeMap::new())
            .unwrap();
        let p = InversionProblem::new(reference, data, target).unwrap();
        let d = invert(&p, &InvertOptions::default()).unwrap().diagnostics;
        (d.gl_condition, d.recursion_gap.unwrap())
    };
    let (c12, g12) = measure(12);
    let (c60, g60) = measure(60);
    outcome(
        c60 > c12 && g60 > g12,
        format!("condition {c12:.1} → {c60:.1}, recursion gap {g12:.2e} → {g60:.2e} (N = 12 → 60)"),
    )
}

fn main() {
    let start = Instant::now();
    let fx = fixtures();
    let fixture_secs = start.elapsed().as_secs_f64();
    let (metrics, sweep_secs) = sweep();

    let results = [
        ("1 identity inversion", identity_inversion()),
        ("2 round-trip reconstruction", round_trip(&fx, fixture_secs)),
        ("3 oracle equivalence", oracle_equivalence(&fx)),
        ("4 orthonormality restoration", orthonormality(&fx)),
        ("5 tridiagonality of synthesis", tridiagonality(&fx)),
        ("6 factor-2 continuum gap", factor_two(&metrics, sweep_secs)),
        ("7 Goursat residual order", goursat(&metrics)),
        ("8 mirror consistency", mirror()),
        ("9 free-well analytics", free_well()),
        ("10 ill-posedness diagnostics", ill_posedness()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!(
            "{} criterion {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
