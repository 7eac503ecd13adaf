mod common;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use jacobi_gl::io::{kernel_csv, parse_kernel_csv};
use jacobi_gl::recovery::{forward_data, free_reference};
use jacobi_gl::spectral::weight_sum_defect;
use jacobi_gl::{
    assemble, build_q, eigensolve, gram_schmidt_oracle, invert, reflect, solve_gl, Grid,
    InversionProblem, InvertOptions, JacobiOperator,
};

use common::max_abs_diff;

fn operator(n: usize, v_amp: f64, u_amp: f64) -> impl Strategy<Value = JacobiOperator> {
    (
        prop::collection::vec(-v_amp..=v_amp, n),
        prop::collection::vec(-u_amp..=u_amp, n - 1),
    )
        .prop_map(move |(v, u)| JacobiOperator::new(Grid::new(n).unwrap(), v, u, 0.0).unwrap())
}

fn sized_operator(v_amp: f64, u_amp: f64) -> impl Strategy<Value = JacobiOperator> {
    (2usize..=16).prop_flat_map(move |n| operator(n, v_amp, u_amp))
}

/// Shifts that keep every level within a fraction of the smallest free-well gap.
fn small_perturbation(
    n: usize,
) -> impl Strategy<Value = (BTreeMap<usize, f64>, BTreeMap<usize, f64>)> {
    (
        prop::collection::btree_map(1..=n, -0.4f64..0.4, 0..=n.min(3)),
        prop::collection::btree_map(1..=n, 0.8f64..1.25, 0..=n.min(2)),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigensolver_matches_dense_oracle(op in sized_operator(3.0, 0.3)) {
        let n = op.len();
        let h = assemble(&op);
        let dense = DMatrix::from_row_slice(n, n, h.as_slice());
        let oracle = SymmetricEigen::new(dense);
        let mut expected: Vec<f64> = oracle.eigenvalues.iter().copied().collect();
        expected.sort_by(f64::total_cmp);
        let es = eigensolve(&op).unwrap();
        let scale = 1.0 + h.norm_inf();
        prop_assert!(max_abs_diff(es.levels(), &expected) <= 1e-10 * scale);
        let delta = op.grid().step();
        for (k, psi) in es.vectors().iter().enumerate() {
            prop_assert!(psi[0] > 0.0);
            let norm: f64 = delta * psi.iter().map(|x| x * x).sum::<f64>();
            prop_assert!((norm - 1.0).abs() < 1e-10);
            let residual = (0..n)
                .map(|i| {
                    let hv: f64 = (0..n).map(|j| h.get(i, j) * psi[j]).sum();
                    (hv - es.levels()[k] * psi[i]).abs()
                })
                .fold(0.0, f64::max);
            prop_assert!(residual <= 1e-10 * scale * psi.iter().map(|x| x.abs()).fold(0.0, f64::max));
        }
    }

    #[test]
    fn forward_data_satisfies_weight_constraint(op in sized_operator(3.0, 0.3)) {
        let data = forward_data(&op).unwrap();
        prop_assert!(weight_sum_defect(op.grid(), data.weights()).abs() < 1e-10);
        prop_assert!(data.levels().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(data.weights().iter().all(|&c| c > 0.0));
    }

    #[test]
    fn round_trip_recovers_target(op in sized_operator(1.0, 0.1)) {
        let p = common::free_problem(&op);
        let r = invert(&p, &InvertOptions::default()).unwrap();
        prop_assert!(r.synthesis.as_ref().unwrap().max_coefficient_gap(&op) <= 1e-5);
        prop_assert!(r.recursion.as_ref().unwrap().max_coefficient_gap(&op) <= 1e-5);
        prop_assert!(r.diagnostics.orthonormality_defect <= 1e-6);
        prop_assert!(r.diagnostics.leakage.unwrap() <= 1e-6 * r.diagnostics.h_norm.unwrap());
    }

    #[test]
    fn recovered_operator_reproduces_data(
        (n, (shifts, factors)) in (3usize..=12).prop_flat_map(|n| (Just(n), small_perturbation(n)))
    ) {
        let (reference, data) = free_reference(n).unwrap();
        let target = data.perturbed(&shifts, &factors).unwrap();
        let p = InversionProblem::new(reference, data, target.clone()).unwrap();
        let r = invert(&p, &InvertOptions::default()).unwrap();
        let again = forward_data(&r.operator).unwrap();
        let scale = 1.0 + target.levels().iter().map(|x| x.abs()).fold(0.0, f64::max);
        prop_assert!(max_abs_diff(again.levels(), target.levels()) <= 1e-8 * scale);
        let cmax = target.weights().iter().copied().fold(0.0, f64::max);
        prop_assert!(max_abs_diff(again.weights(), target.weights()) <= 1e-8 * cmax);
    }

    #[test]
    fn q_is_symmetric_and_gl_matches_oracle(
        (n, (shifts, factors)) in (2usize..=12).prop_flat_map(|n| (Just(n), small_perturbation(n)))
    ) {
        let (reference, data) = free_reference(n).unwrap();
        let target = data.perturbed(&shifts, &factors).unwrap();
        let p = InversionProblem::new(reference, data, target).unwrap();
        let q = build_q(&p).unwrap();
        prop_assert!(q.symmetry_defect() <= 1e-10 * (1.0 + q.max_abs()));
        let k = solve_gl(&q).unwrap();
        prop_assert!(k.is_unit_leading());
        let oracle = gram_schmidt_oracle(&p).unwrap();
        prop_assert!(k.max_gap(&oracle) <= 1e-8 * (1.0 + k.max_abs()));
    }

    #[test]
    fn reflection_is_an_involution_and_preserves_levels(op in sized_operator(3.0, 0.3)) {
        let back = reflect(&reflect(&op));
        prop_assert_eq!(back.v(), op.v());
        prop_assert_eq!(back.u(), op.u());
        let a = eigensolve(&op).unwrap();
        let b = eigensolve(&reflect(&op)).unwrap();
        prop_assert!(max_abs_diff(a.levels(), b.levels()) <= 1e-9 * (1.0 + assemble(&op).norm_inf()));
    }

    #[test]
    fn kernel_csv_round_trips(op in sized_operator(1.0, 0.1)) {
        let r = invert(&common::free_problem(&op), &InvertOptions::default()).unwrap();
        let rows = parse_kernel_csv(&kernel_csv(&r.kernel)).unwrap();
        for (m, n, value) in rows {
            let expected = if m == n { r.kernel.diag(m) } else { r.kernel.get(m, n) };
            prop_assert_eq!(value, expected);
        }
    }
}
