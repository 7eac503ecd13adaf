//! Small dense linear-algebra kernels: LU with partial pivoting, the Hager-Higham
//! 1-norm condition estimator, and guarded 2×2 solves.

/// Row-major `n × n` LU factorization `PA = LU` with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    norm1: f64,
}

impl Lu {
    /// Factors `a` (row-major). Returns `None` when a pivot is exactly zero.
    pub fn factor(n: usize, mut a: Vec<f64>) -> Option<Lu> {
        assert_eq!(a.len(), n * n);
        let norm1 = (0..n)
            .map(|j| (0..n).map(|i| a[i * n + j].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 || !pmax.is_finite() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / pivot;
                a[i * n + k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        a[i * n + j] -= l * a[k * n + j];
                    }
                }
            }
        }
        Some(Lu {
            n,
            lu: a,
            perm,
            norm1,
        })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ z = y, x = Pᵀ z.
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[j * n + i] * y[j]).sum();
            y[i] = (y[i] - s) / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[j * n + i] * y[j]).sum();
            y[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    /// Estimate of `κ₁(A) = ‖A‖₁ ‖A⁻¹‖₁` (Hager's method with Higham's safeguard).
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let norm1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = norm1(&y);
            let xi: Vec<f64> = y
                .iter()
                .map(|v| if *v >= 0.0 { 1.0 } else { -1.0 })
                .collect();
            let z = self.solve_transpose(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.abs()))
                .fold((0, -1.0), |acc, t| if t.1 > acc.1 { t } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = vec![0.0; n];
            x[j] = 1.0;
        }
        let alt: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                let frac = if n > 1 {
                    i as f64 / (n - 1) as f64
                } else {
                    0.0
                };
                s * (1.0 + frac)
            })
            .collect();
        let alt_est = 2.0 * norm1(&self.solve(&alt)) / (3.0 * n as f64);
        self.norm1 * est.max(alt_est)
    }
}

/// Solution of a 2×2 system together with its scale-relative determinant
/// `|det| / (‖row₁‖∞ ‖row₂‖∞)`.
#[derive(Clone, Copy, Debug)]
pub struct Solve2 {
    pub x: [f64; 2],
    pub relative_determinant: f64,
}

/// Closed-form 2×2 solve. Returns `None` when the relative determinant is below `guard`.
pub fn solve2(a: [[f64; 2]; 2], b: [f64; 2], guard: f64) -> Option<Solve2> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a[0][0].abs().max(a[0][1].abs()) * a[1][0].abs().max(a[1][1].abs());
    let rel = if scale > 0.0 { det.abs() / scale } else { 0.0 };
    if !(rel >= guard) || det == 0.0 {
        return None;
    }
    let x0 = (b[0] * a[1][1] - a[0][1] * b[1]) / det;
    let x1 = (a[0][0] * b[1] - a[1][0] * b[0]) / det;
    Some(Solve2 {
        x: [x0, x1],
        relative_determinant: rel,
    })
}
