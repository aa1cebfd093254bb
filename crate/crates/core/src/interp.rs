//! Reading value tables at off-grid qualities.

use crate::error::{ModelError, Result};
use crate::params::{GridSpec, Interpolation};

/// Equally spaced quality axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityAxis {
    pub q_min: f64,
    pub q_max: f64,
    pub n: usize,
    step: f64,
}

/// Bracketing node and weight: the value is `(1 - w) t[lo] + w t[lo + 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: usize,
    pub w: f64,
}

impl Bracket {
    #[inline]
    pub fn apply(self, table: &[f64]) -> f64 {
        let a = table[self.lo];
        if self.w == 0.0 {
            a
        } else {
            a + self.w * (table[self.lo + 1] - a)
        }
    }
}

impl QualityAxis {
    pub fn new(q_min: f64, q_max: f64, n: usize) -> Self {
        assert!(n >= 2 && q_max > q_min, "degenerate quality axis");
        Self {
            q_min,
            q_max,
            n,
            step: (q_max - q_min) / (n - 1) as f64,
        }
    }

    pub fn from_grid(grid: &GridSpec) -> Self {
        Self::new(grid.q_min, grid.q_max, grid.n_q)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Brackets `q`, which must already be clamped into `[q_min, q_max]`.
    #[inline]
    pub fn bracket(&self, q: f64, mode: Interpolation) -> Bracket {
        let pos = ((q - self.q_min) / self.step).clamp(0.0, (self.n - 1) as f64);
        let last = self.n - 2;
        match mode {
            Interpolation::Linear => {
                let lo = (pos.floor() as usize).min(last);
                Bracket { lo, w: pos - lo as f64 }
            }
            Interpolation::Nearest => {
                let idx = (pos + 0.5).floor() as usize;
                if idx > last {
                    Bracket { lo: last, w: 1.0 }
                } else {
                    Bracket { lo: idx, w: 0.0 }
                }
            }
        }
    }
}

/// Piecewise-linear (or nearest-node) read of `table` at quality `q`.
///
/// `table` holds one value per node of the grid's quality axis. Off-range
/// qualities are rejected; callers clamp transitions first.
pub fn interpolate_value(table: &[f64], grid: &GridSpec, q: f64, mode: Interpolation) -> Result<f64> {
    if table.len() != grid.n_q {
        return Err(ModelError::InvalidGrid {
            field: "n_q",
            reason: format!("table has {} entries, grid has {}", table.len(), grid.n_q),
        });
    }
    if !(q >= grid.q_min && q <= grid.q_max) {
        return Err(ModelError::OutOfRange {
            value: q,
            lo: grid.q_min,
            hi: grid.q_max,
        });
    }
    Ok(QualityAxis::from_grid(grid).bracket(q, mode).apply(table))
}
