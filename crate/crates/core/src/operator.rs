//! The three-diagonal Sturm-Liouville operator `H = T + J`.
//!
//! `T` is the Dirichlet finite-difference kinetic term (`2/Δ²` on the diagonal,
//! `-1/Δ²` beside it). `J` carries the local potential `V(x_n)` on the diagonal and
//! the coupling `u(x_n)` on both off-diagonals, where `u[n-1]` couples `x_n` with
//! `x_{n+1}` (it multiplies `Ψ(x_{n+1})` in row `n`).
//!
//! `u_edge` is the outer coefficient `u(x_N)`. It never enters the matrix but fixes
//! how regular solutions are continued past the last interior node.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Smallest admissible `|1 - Δ²u|` for any coupling.
pub const MIN_RECURRENCE_DENOMINATOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct JacobiOperator {
    grid: Grid,
    v: Vec<f64>,
    u: Vec<f64>,
    u_edge: f64,
}

impl JacobiOperator {
    pub fn new(grid: Grid, v: Vec<f64>, u: Vec<f64>, u_edge: f64) -> Result<Self> {
        let n = grid.len();
        if v.len() != n {
            return Err(Error::InvalidOperator(format!(
                "v has length {} but the grid has {n} interior nodes",
                v.len()
            )));
        }
        if u.len() != n - 1 {
            return Err(Error::InvalidOperator(format!(
                "u has length {} but N - 1 = {}",
                u.len(),
                n - 1
            )));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidOperator(format!("v[{i}] is not finite")));
        }
        if let Some(i) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidOperator(format!("u[{i}] is not finite")));
        }
        if !u_edge.is_finite() {
            return Err(Error::InvalidOperator("u_edge is not finite".into()));
        }
        let dd = grid.step() * grid.step();
        for (i, &c) in u.iter().chain(std::iter::once(&u_edge)).enumerate() {
            let den = (1.0 - dd * c).abs();
            if den < MIN_RECURRENCE_DENOMINATOR {
                return Err(Error::InvalidOperator(format!(
                    "|1 - Δ²u(x_{})| = {den:e} is below {MIN_RECURRENCE_DENOMINATOR:e}",
                    i + 1
                )));
            }
        }
        Ok(JacobiOperator { grid, v, u, u_edge })
    }

    /// The free well: `V ≡ 0`, `u ≡ 0`, `u_edge = 0`.
    pub fn free(n: usize) -> Result<Self> {
        let grid = Grid::new(n)?;
        Ok(JacobiOperator {
            grid,
            v: vec![0.0; n],
            u: vec![0.0; n - 1],
            u_edge: 0.0,
        })
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

    /// `V(x_1..x_N)`.
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// `u(x_1..x_{N-1})`.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn u_edge(&self) -> f64 {
        self.u_edge
    }

    /// `V(x_n)` for `n = 1..=N`.
    pub fn potential_at(&self, n: usize) -> f64 {
        self.v[n - 1]
    }

    /// `u(x_n)` for `n = 0..=N`, with `u(x_0) := 0` and `u(x_N) := u_edge`.
    pub fn coupling_at(&self, n: usize) -> f64 {
        let big_n = self.len();
        if n == 0 {
            0.0
        } else if n == big_n {
            self.u_edge
        } else {
            self.u[n - 1]
        }
    }

    pub fn with_u_edge(mut self, u_edge: f64) -> Result<Self> {
        let den = (1.0 - self.grid.step().powi(2) * u_edge).abs();
        if !u_edge.is_finite() || den < MIN_RECURRENCE_DENOMINATOR {
            return Err(Error::InvalidOperator(format!(
                "inadmissible u_edge {u_edge}"
            )));
        }
        self.u_edge = u_edge;
        Ok(self)
    }

    /// Diagonal `2/Δ² + V(x_n)` of the assembled matrix.
    pub fn diagonal(&self) -> Vec<f64> {
        let t = 2.0 * self.grid.inv_step_sq();
        self.v.iter().map(|v| t + v).collect()
    }

    /// Off-diagonal `u(x_n) - 1/Δ²` of the assembled matrix.
    pub fn off_diagonal(&self) -> Vec<f64> {
        let t = self.grid.inv_step_sq();
        self.u.iter().map(|u| u - t).collect()
    }

    /// Largest absolute coefficient difference against `other` over `V` and `u`.
    pub fn max_coefficient_gap(&self, other: &JacobiOperator) -> f64 {
        let dv = self
            .v
            .iter()
            .zip(&other.v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let du = self
            .u
            .iter()
            .zip(&other.u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        dv.max(du)
    }
}

/// Square dense matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(order: usize) -> Self {
        DenseMatrix {
            order,
            entries: vec![0.0; order * order],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.order + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.entries[row * self.order + col] = value;
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.order);
        for i in 0..self.order {
            for j in 0..self.order {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.entries
            .chunks(self.order)
            .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }
}

/// Builds `H = T + J`. `u_edge` does not enter.
pub fn assemble(op: &JacobiOperator) -> DenseMatrix {
    let n = op.len();
    let mut h = DenseMatrix::zeros(n);
    for (i, d) in op.diagonal().into_iter().enumerate() {
        h.set(i, i, d);
    }
    for (i, e) in op.off_diagonal().into_iter().enumerate() {
        h.set(i, i + 1, e);
        h.set(i + 1, i, e);
    }
    h
}

/// Mirror image `x → π - x`: `V` and `u` reversed, reflected `u_edge = 0`.
///
/// The reflected outer coefficient corresponds to the original operator's
/// (nonexistent) `u(x_0)`; use [`reflect_with_edge`] to supply it.
pub fn reflect(op: &JacobiOperator) -> JacobiOperator {
    reflect_with_edge(op, 0.0)
}

pub fn reflect_with_edge(op: &JacobiOperator, left_edge: f64) -> JacobiOperator {
    let mut v = op.v.clone();
    v.reverse();
    let mut u = op.u.clone();
    u.reverse();
    JacobiOperator {
        grid: op.grid,
        v,
        u,
        u_edge: left_edge,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample(n: usize) -> JacobiOperator {
        let grid = Grid::new(n).unwrap();
        let v = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let u = (0..n - 1).map(|i| 0.05 * (i as f64 * 1.3).cos()).collect();
        JacobiOperator::new(grid, v, u, 0.02).unwrap()
    }

    #[test]
    fn one_by_one_free() {
        let op = JacobiOperator::free(1).unwrap();
        let h = assemble(&op);
        let d = PI / 2.0;
        assert_eq!(h.order(), 1);
        assert!((h.get(0, 0) - 2.0 / (d * d)).abs() < 1e-15);
        assert!((h.get(0, 0) - 0.810569).abs() < 1e-6);
    }

    #[test]
    fn two_by_two_free() {
        let op = JacobiOperator::free(2).unwrap();
        let h = assemble(&op);
        let inv = 1.0 / (PI / 3.0_f64).powi(2);
        assert!((inv - 0.911891).abs() < 1e-6);
        assert_eq!(h.get(0, 0), 2.0 * inv);
        assert_eq!(h.get(1, 1), 2.0 * inv);
        assert_eq!(h.get(0, 1), -inv);
        assert_eq!(h.get(1, 0), -inv);
    }

    #[test]
    fn assembled_matrix_is_symmetric_and_tridiagonal() {
        let h = assemble(&sample(9));
        assert_eq!(h, h.transpose());
        for i in 0..9usize {
            for j in 0..9 {
                if i.abs_diff(j) >= 2 {
                    assert_eq!(h.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn u_edge_does_not_enter_matrix() {
        let a = sample(5);
        let b = a.clone().with_u_edge(3.0).unwrap();
        assert_eq!(assemble(&a), assemble(&b));
    }

    #[test]
    fn reflection_reverses_coefficients() {
        let grid = Grid::new(3).unwrap();
        let op = JacobiOperator::new(grid, vec![1.0, 2.0, 3.0], vec![0.1, 0.2], 0.0).unwrap();
        let r = reflect(&op);
        assert_eq!(r.v(), &[3.0, 2.0, 1.0]);
        assert_eq!(r.u(), &[0.2, 0.1]);
    }

    #[test]
    fn reflection_is_an_involution_on_the_matrix() {
        let op = sample(8);
        assert_eq!(assemble(&reflect(&reflect(&op))), assemble(&op));
    }

    #[test]
    fn symmetric_operator_is_its_own_mirror() {
        let grid = Grid::new(4).unwrap();
        let op = JacobiOperator::new(grid, vec![0.5; 4], vec![0.1, 0.3, 0.1], 0.0).unwrap();
        assert_eq!(reflect(&op), op);
    }

    #[test]
    fn rejects_length_mismatch() {
        let grid = Grid::new(3).unwrap();
        assert!(JacobiOperator::new(grid, vec![0.0; 2], vec![0.0; 2], 0.0).is_err());
        assert!(JacobiOperator::new(grid, vec![0.0; 3], vec![0.0; 3], 0.0).is_err());
    }

    #[test]
    fn rejects_vanishing_denominator() {
        let grid = Grid::new(3).unwrap();
        let bad = grid.inv_step_sq();
        assert!(JacobiOperator::new(grid, vec![0.0; 3], vec![bad, 0.0], 0.0).is_err());
        assert!(JacobiOperator::new(grid, vec![0.0; 3], vec![0.0, 0.0], bad).is_err());
        assert!(JacobiOperator::new(grid, vec![f64::NAN, 0.0, 0.0], vec![0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn coupling_boundary_conventions() {
        let op = sample(4);
        assert_eq!(op.coupling_at(0), 0.0);
        assert_eq!(op.coupling_at(4), 0.02);
        assert_eq!(op.coupling_at(2), op.u()[1]);
    }
}
