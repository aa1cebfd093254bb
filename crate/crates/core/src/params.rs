//! Structural parameters, state newtypes and discretization settings.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Structural parameters of the model.
///
/// `Default` yields the baseline calibration used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EconParams {
    /// Time discount factor.
    pub beta: f64,
    /// Decay rate of AI compatibility along the producer line.
    pub gamma: f64,
    /// Curvature of the production function.
    pub alpha: f64,
    /// Firm size: mass of producers owned by the firm, located on `[0, m]`.
    pub m: f64,
    /// Quality gained per unit of compute used internally.
    pub psi: f64,
    /// Quality gained per unit of compute used by the open-source ecosystem.
    pub phi: f64,
    /// Development improvement factor: a new model has quality `lambda^u * q_b`, `u ~ U[0,1]`.
    pub lambda_dev: f64,
    /// Development cost per unit of rival quality.
    pub c_dev: f64,
    /// Cost per unit of rival quality of abandoning the own model for the rival open model.
    pub c_switch: f64,
}

impl Default for EconParams {
    fn default() -> Self {
        Self::baseline()
    }
}

impl EconParams {
    pub const fn baseline() -> Self {
        Self {
            beta: 0.9,
            gamma: 1.0,
            alpha: 0.45,
            m: 0.2,
            psi: 0.5,
            phi: 0.5,
            lambda_dev: 5.0,
            c_dev: 0.4,
            c_switch: 0.5,
        }
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    /// Checks every parameter against its admissible range.
    pub fn validate(&self) -> Result<()> {
        fn check(field: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<()> {
            if value.is_finite() && ok {
                Ok(())
            } else {
                Err(ModelError::InvalidParam { field, value, reason })
            }
        }
        let p = self;
        check("alpha", p.alpha, p.alpha > 0.0 && p.alpha < 1.0, "must lie in (0, 1)")?;
        check("beta", p.beta, p.beta >= 0.0 && p.beta < 1.0, "must lie in [0, 1)")?;
        check("gamma", p.gamma, p.gamma > 0.0, "must be positive")?;
        check("m", p.m, p.m > 0.0 && p.m < 1.0, "must lie in (0, 1)")?;
        check("psi", p.psi, p.psi > 0.0 && p.psi <= 1.0, "must lie in (0, 1]")?;
        check("phi", p.phi, p.phi > 0.0 && p.phi <= 1.0, "must lie in (0, 1]")?;
        check("lambda_dev", p.lambda_dev, p.lambda_dev > 1.0, "must exceed 1")?;
        check("c_dev", p.c_dev, p.c_dev >= 0.0, "must be non-negative")?;
        check("c_switch", p.c_switch, p.c_switch >= 0.0, "must be non-negative")?;
        Ok(())
    }

    /// `alpha / (1 - alpha)`, the exponent on quality in optimal compute.
    #[inline]
    pub(crate) fn quality_exponent(&self) -> f64 {
        self.alpha / (1.0 - self.alpha)
    }
}

/// Model quality, a non-negative scalar.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Quality(f64);

impl Quality {
    pub const ZERO: Quality = Quality(0.0);

    pub fn new(q: f64) -> Result<Self> {
        if q.is_finite() && q >= 0.0 {
            Ok(Self(q))
        } else {
            Err(ModelError::OutOfRange {
                value: q,
                lo: 0.0,
                hi: f64::INFINITY,
            })
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Position of a software producer on the unit interval.
///
/// Producers at `x <= m` belong to the firm, the rest are external.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ProducerLocation(f64);

impl ProducerLocation {
    pub fn new(x: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&x) {
            Ok(Self(x))
        } else {
            Err(ModelError::OutOfRange {
                value: x,
                lo: 0.0,
                hi: 1.0,
            })
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_internal(self, p: &EconParams) -> bool {
        self.0 <= p.m
    }
}

/// Discretization of the state and control spaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    /// Number of quality nodes (shared by `q_a` and `q_b`).
    pub n_q: usize,
    /// Upper end of the compute grid in the open-model solve.
    pub k_max_open: f64,
    pub n_k_open: usize,
    pub n_k_closed: usize,
    /// The closed-model compute grid spans `[0, k_adapt_factor * K*(q_max)]`.
    pub k_adapt_factor: f64,
    /// Number of equal segments of the per-state price grid (`n_p + 1` nodes).
    pub n_p: usize,
    /// Producer grid used by quadrature checks.
    pub n_x: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            q_min: 0.0,
            q_max: 500.0,
            n_q: 101,
            k_max_open: 20.0,
            n_k_open: 100,
            n_k_closed: 50,
            k_adapt_factor: 3.0,
            n_p: 20,
            n_x: 1000,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: String| Err(ModelError::InvalidGrid { field, reason });
        if !(self.q_min.is_finite() && self.q_max.is_finite()) || self.q_min < 0.0 {
            return bad(
                "q_min",
                format!("quality bounds must be finite and non-negative, got {}", self.q_min),
            );
        }
        if self.q_min >= self.q_max {
            return bad(
                "q_max",
                format!("q_max ({}) must exceed q_min ({})", self.q_max, self.q_min),
            );
        }
        if !(self.k_max_open.is_finite() && self.k_max_open > 0.0) {
            return bad("k_max_open", format!("must be positive, got {}", self.k_max_open));
        }
        if !(self.k_adapt_factor.is_finite() && self.k_adapt_factor > 0.0) {
            return bad(
                "k_adapt_factor",
                format!("must be positive, got {}", self.k_adapt_factor),
            );
        }
        for (field, n) in [
            ("n_q", self.n_q),
            ("n_k_open", self.n_k_open),
            ("n_k_closed", self.n_k_closed),
            ("n_x", self.n_x),
        ] {
            if n < 2 {
                return bad(field, format!("needs at least 2 points, got {n}"));
            }
        }
        if self.n_p < 1 {
            return bad("n_p", "needs at least one price segment".to_string());
        }
        Ok(())
    }

    pub fn q_grid(&self) -> Vec<f64> {
        linspace(self.q_min, self.q_max, self.n_q)
    }

    pub fn q_step(&self) -> f64 {
        (self.q_max - self.q_min) / (self.n_q - 1) as f64
    }

    pub fn k_grid_open(&self) -> Vec<f64> {
        linspace(0.0, self.k_max_open, self.n_k_open)
    }

    /// Index of the grid node equal to `q`, if `q` lies on the grid.
    pub fn q_index(&self, q: f64) -> Option<usize> {
        let pos = (q - self.q_min) / self.q_step();
        let idx = pos.round();
        if idx < 0.0 || idx as usize >= self.n_q || (pos - idx).abs() > 1e-9 {
            None
        } else {
            Some(idx as usize)
        }
    }
}

/// How continuation values are read off the quality grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    #[default]
    Linear,
    /// Snap to the nearest node (ties go to the upper node).
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Sup-norm stopping tolerance, in profit units.
    pub tol: f64,
    pub max_iter: usize,
    pub interpolation: Interpolation,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 10_000,
            interpolation: Interpolation::Linear,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(ModelError::InvalidGrid {
                field: "tol",
                reason: format!("must be positive, got {}", self.tol),
            });
        }
        if self.max_iter == 0 {
            return Err(ModelError::InvalidGrid {
                field: "max_iter",
                reason: "must be at least 1".to_string(),
            });
        }
        Ok(())
    }
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}
