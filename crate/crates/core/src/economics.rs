//! Static, closed-form pieces of the model: producer profits, the API demand
//! curve, the firm's aggregate production profit and the compute used by
//! external producers.
//!
//! A producer at location `x` using a model of quality `q` with compute `k`
//! and licence fee `P` earns
//!
//! ```text
//! pi(x, q, k, P) = exp(-gamma x) (q k)^alpha - k - P
//! ```
//!
//! Everything here is a pure function of its arguments. States with zero
//! quality produce zero compute and zero profit.

use crate::error::{ModelError, Result};
use crate::params::{EconParams, ProducerLocation, Quality};

/// Compute that maximizes `exp(-gamma x) (q k)^alpha - k` over `k >= 0`:
/// `(alpha exp(-gamma x) q^alpha)^(1/(1-alpha))`.
pub fn optimal_compute(x: ProducerLocation, q: Quality, p: &EconParams) -> f64 {
    optimal_compute_raw(x.get(), q.get(), p)
}

#[inline]
pub(crate) fn optimal_compute_raw(x: f64, q: f64, p: &EconParams) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    (p.alpha * (-p.gamma * x).exp() * q.powf(p.alpha)).powf(1.0 / (1.0 - p.alpha))
}

pub fn producer_profit(x: ProducerLocation, q: Quality, compute: f64, price: f64, p: &EconParams) -> f64 {
    (-p.gamma * x.get()).exp() * (q.get() * compute).powf(p.alpha) - compute - price
}

fn check_order(q_a: f64, q_b: f64) -> Result<()> {
    if q_a < q_b {
        Err(ModelError::QualityOrder { q_a, q_b })
    } else {
        Ok(())
    }
}

/// Licence fee at which the producer at `x` is indifferent between paying
/// for model A and using model B for free, each at its own optimal compute.
pub fn indifference_price(x: ProducerLocation, q_a: Quality, q_b: Quality, p: &EconParams) -> Result<f64> {
    check_order(q_a.get(), q_b.get())?;
    Ok(indifference_price_raw(x.get(), q_a.get(), q_b.get(), p))
}

#[inline]
pub(crate) fn indifference_price_raw(x: f64, q_a: f64, q_b: f64, p: &EconParams) -> f64 {
    let e = p.quality_exponent();
    let lead = q_a.powf(e) - q_b.powf(e);
    if lead <= 0.0 {
        return 0.0;
    }
    (1.0 - p.alpha) / p.alpha * (p.alpha * (-p.gamma * x).exp()).powf(1.0 / (1.0 - p.alpha)) * lead
}

/// Demand for model A's API before clamping to the external producer mass.
///
/// Returns `-inf` when the qualities coincide. `price` must be positive.
pub fn api_demand_unclamped(q_a: Quality, q_b: Quality, price: f64, p: &EconParams) -> Result<f64> {
    check_order(q_a.get(), q_b.get())?;
    if !(price > 0.0) {
        return Err(ModelError::OutOfRange {
            value: price,
            lo: f64::MIN_POSITIVE,
            hi: f64::INFINITY,
        });
    }
    Ok(api_demand_unclamped_raw(q_a.get(), q_b.get(), price, p))
}

#[inline]
fn api_demand_unclamped_raw(q_a: f64, q_b: f64, price: f64, p: &EconParams) -> f64 {
    let a = p.alpha;
    let e = p.quality_exponent();
    let lead = q_a.powf(e) - q_b.powf(e);
    if lead <= 0.0 {
        return f64::NEG_INFINITY;
    }
    ((a * lead.powf(1.0 - a)).ln() - (1.0 - a) * (a * price / (1.0 - a)).ln()) / p.gamma - p.m
}

/// Mass of external producers buying model A's API at `price`, clamped to
/// `[0, 1 - m]`. A zero price means open access: every external producer
/// uses A.
pub fn api_demand(q_a: Quality, q_b: Quality, price: f64, p: &EconParams) -> Result<f64> {
    check_order(q_a.get(), q_b.get())?;
    if price < 0.0 || price.is_nan() {
        return Err(ModelError::OutOfRange {
            value: price,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(api_demand_raw(q_a.get(), q_b.get(), price, p))
}

#[inline]
pub(crate) fn api_demand_raw(q_a: f64, q_b: f64, price: f64, p: &EconParams) -> f64 {
    if price <= 0.0 {
        return 1.0 - p.m;
    }
    api_demand_unclamped_raw(q_a, q_b, price, p).clamp(0.0, 1.0 - p.m)
}

/// API revenue `P * Q_A(P)`; zero for a free API.
pub fn api_profit(q_a: Quality, q_b: Quality, price: f64, p: &EconParams) -> Result<f64> {
    let demand = api_demand(q_a, q_b, price, p)?;
    Ok(if price > 0.0 { price * demand } else { 0.0 })
}

/// One-period revenue-maximizing licence fee.
///
/// Interior optimum has demand `(1 - alpha) / gamma`; when that exceeds the
/// external mass the optimum is the highest price that still serves everyone.
pub fn revenue_max_price(q_a: Quality, q_b: Quality, p: &EconParams) -> Result<f64> {
    check_order(q_a.get(), q_b.get())?;
    Ok(revenue_max_price_raw(q_a.get(), q_b.get(), p))
}

#[inline]
pub(crate) fn revenue_max_price_raw(q_a: f64, q_b: f64, p: &EconParams) -> f64 {
    let cut = (p.m + (1.0 - p.alpha) / p.gamma).min(1.0);
    indifference_price_raw(cut, q_a, q_b, p)
}

/// Constant collapsing the firm's producer-level profit integral into
/// `Theta (q K)^alpha - K` when aggregate compute `K` is split optimally.
pub fn theta(p: &EconParams) -> f64 {
    let s = 1.0 - p.alpha;
    (1.0 - (-p.gamma * p.m / s).exp()).powf(s) / (p.gamma / s).powf(s)
}

/// Aggregate production profit of the firm's own producers.
pub fn firm_profit(q: Quality, k_total: f64, p: &EconParams) -> f64 {
    firm_profit_raw(q.get(), k_total, theta(p), p.alpha)
}

#[inline]
pub(crate) fn firm_profit_raw(q: f64, k_total: f64, theta: f64, alpha: f64) -> f64 {
    if q <= 0.0 || k_total <= 0.0 {
        return -k_total;
    }
    theta * (q * k_total).powf(alpha) - k_total
}

/// Aggregate compute maximizing the one-period firm profit:
/// `(alpha Theta q^alpha)^(1/(1-alpha))`.
pub fn firm_static_compute(q: Quality, p: &EconParams) -> f64 {
    firm_static_compute_raw(q.get(), theta(p), p)
}

#[inline]
pub(crate) fn firm_static_compute_raw(q: f64, theta: f64, p: &EconParams) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    (p.alpha * theta * q.powf(p.alpha)).powf(1.0 / (1.0 - p.alpha))
}

/// Total optimal compute of producers on `(lo, hi]` all using a model of quality `q`.
#[inline]
pub(crate) fn compute_mass_raw(q: f64, lo: f64, hi: f64, p: &EconParams) -> f64 {
    if q <= 0.0 || hi <= lo {
        return 0.0;
    }
    let s = 1.0 - p.alpha;
    (p.alpha * q.powf(p.alpha)).powf(1.0 / s) * (s / p.gamma) * ((-p.gamma * lo / s).exp() - (-p.gamma * hi / s).exp())
}

/// Compute contributed by all external producers `(m, 1]` to an open model of quality `q`.
pub fn external_compute_open(q: Quality, p: &EconParams) -> f64 {
    compute_mass_raw(q.get(), p.m, 1.0, p)
}

/// Compute of external producers on `(adopter_cut, 1]`, i.e. those staying
/// with the free model B while `(m, adopter_cut]` buy A's API.
pub fn external_compute_b(q_b: Quality, adopter_cut: f64, p: &EconParams) -> Result<f64> {
    if !(adopter_cut >= p.m && adopter_cut <= 1.0) {
        return Err(ModelError::OutOfRange {
            value: adopter_cut,
            lo: p.m,
            hi: 1.0,
        });
    }
    Ok(compute_mass_raw(q_b.get(), adopter_cut, 1.0, p))
}
