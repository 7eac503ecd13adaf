//! Uniform partition of `[0, π]` with `N` interior nodes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes `x_n = nΔ`, `n = 0..=N+1`, with `Δ = π/(N+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n_interior: usize,
    step: f64,
}

impl Grid {
    pub fn new(n_interior: usize) -> Result<Self> {
        if n_interior == 0 {
            return Err(Error::InvalidGrid(
                "at least one interior node is required".into(),
            ));
        }
        Ok(Grid {
            n_interior,
            step: PI / (n_interior as f64 + 1.0),
        })
    }

    /// Number of interior nodes `N`.
    pub fn len(&self) -> usize {
        self.n_interior
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid step `Δ`.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Node `x_n` for `n = 0..=N+1`. The last node is exactly `π`.
    pub fn node(&self, n: usize) -> f64 {
        assert!(n <= self.n_interior + 1, "node index {n} out of range");
        if n == self.n_interior + 1 {
            PI
        } else {
            n as f64 * self.step
        }
    }

    /// All nodes `x_0..=x_{N+1}`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_interior + 1).map(|n| self.node(n)).collect()
    }

    /// Interior nodes `x_1..=x_N`.
    pub fn interior(&self) -> Vec<f64> {
        (1..=self.n_interior).map(|n| self.node(n)).collect()
    }

    /// `1/Δ²`, the kinetic coupling.
    pub fn inv_step_sq(&self) -> f64 {
        1.0 / (self.step * self.step)
    }
}
