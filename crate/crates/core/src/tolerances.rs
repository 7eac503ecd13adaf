//! Default numerical thresholds, in one place.
//!
//! | key                 | default | meaning                                                        |
//! |---------------------|---------|----------------------------------------------------------------|
//! | `gl_residual`       | 1e-10   | GL row residual, relative to `1 + max|Q|`                      |
//! | `gl_condition`      | 1e12    | 1-norm condition estimate of a GL row system                   |
//! | `orthonormality`    | 1e-6    | `max|ΔΣc²φ(x_m)φ(x_n) - δ_mn|` of the recovered system         |
//! | `leakage`           | 1e-6    | off-band mass of the synthesized matrix, relative to `‖H‖∞`    |
//! | `recursion_gap`     | 1e-5    | recursion vs synthesis, absolute                               |
//! | `roundtrip`         | 1e-5    | recovered vs known coefficients, absolute                      |
//! | `determinant_guard` | 1e-10   | relative determinant below which a 2×2 row system is degenerate|
//! | `noise_floor`       | 1e-9    | values below this count as zero in monotonicity checks         |

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub gl_residual: f64,
    pub gl_condition: f64,
    pub orthonormality: f64,
    pub leakage: f64,
    pub recursion_gap: f64,
    pub roundtrip: f64,
    pub determinant_guard: f64,
    pub noise_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gl_residual: 1e-10,
            gl_condition: 1e12,
            orthonormality: 1e-6,
            leakage: 1e-6,
            recursion_gap: 1e-5,
            roundtrip: 1e-5,
            determinant_guard: 1e-10,
            noise_floor: 1e-9,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 8] = [
        "gl_residual",
        "gl_condition",
        "orthonormality",
        "leakage",
        "recursion_gap",
        "roundtrip",
        "determinant_guard",
        "noise_floor",
    ];

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "gl_residual" => &mut self.gl_residual,
            "gl_condition" => &mut self.gl_condition,
            "orthonormality" => &mut self.orthonormality,
            "leakage" => &mut self.leakage,
            "recursion_gap" => &mut self.recursion_gap,
            "roundtrip" => &mut self.roundtrip,
            "determinant_guard" => &mut self.determinant_guard,
            "noise_floor" => &mut self.noise_floor,
            _ => return None,
        })
    }

    /// Sets one threshold by name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::Config(format!(
                "tolerance {key} must be positive and finite"
            )));
        }
        let slot = self
            .slot(key)
            .ok_or_else(|| Error::Config(format!("unknown tolerance key {key:?}")))?;
        *slot = value;
        Ok(())
    }

    /// Entries that differ from the defaults, keyed by name.
    pub fn overrides(&self) -> BTreeMap<String, f64> {
        let mut defaults = Tolerances::default();
        let mut this = *self;
        Self::KEYS
            .iter()
            .filter_map(|&k| {
                let v = *this.slot(k)?;
                (v != *defaults.slot(k)?).then(|| (k.to_string(), v))
            })
            .collect()
    }
}
