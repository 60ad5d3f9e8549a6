//! Throughput-optimal fixed rate.
//!
//! `R -> C_E(gamma, theta, R, kappa)` rises from zero at `R = 0`, peaks, and
//! decays to zero once outages dominate. The maximizer is located by
//! golden-section search on `[0, R_max]` and cross-checked against the root of
//! the first-order condition
//!
//! ```text
//! gamma*xi - gamma*(theta*R + kappa) + 2*gamma*nu - 2*R*nu*ln(2)*2^R = 0
//! ```
//!
//! which is positive below the optimum and negative above it. Unimodality is
//! observed rather than proven, so a coarse scan certifies the golden-section
//! answer and takes over when the two disagree.

use serde::{Deserialize, Serialize};

use crate::capacity::{effective_capacity, QosExponent};
use crate::channel::{derive_chain, ChannelSpec};
use crate::error::{Error, Result};
use crate::numeric::{bisect, golden_max};

/// Upper tail probability of the channel gain that bounds the rate search.
const GAIN_TAIL: f64 = 1e-12;
const RATE_TOL: f64 = 1e-9;
const SCAN_POINTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimumRate {
    pub r_star: f64,
    pub c_e_star: f64,
    pub foc_residual: f64,
    /// Largest magnitude among the first-order-condition terms at `r_star`.
    pub foc_scale: f64,
    pub bracket: (f64, f64),
    /// Set when the certification scan found a better point than golden
    /// section and the optimum was refined locally around it instead.
    pub fallback: bool,
}

fn validate(gamma: f64, kappa: f64) -> Result<()> {
    ChannelSpec::new(gamma, 0.0, kappa).map(|_| ())
}

fn capacity_at(gamma: f64, kappa: f64, theta: QosExponent, r: f64) -> f64 {
    effective_capacity(&ChannelSpec { gamma, rate: r.max(0.0), kappa }, theta)
        .map(|c| c.value)
        .unwrap_or(0.0)
}

/// `log2(1 + gamma * z_hi)` with `z_hi` the `1 - 1e-12` quantile of the
/// unit exponential gain; beyond it the ON probability is below `1e-12`.
pub fn rate_search_limit(gamma: f64) -> f64 {
    let z_hi = -GAIN_TAIL.ln();
    (gamma * z_hi).ln_1p() / std::f64::consts::LN_2
}

fn foc_terms(gamma: f64, kappa: f64, theta: f64, r: f64) -> Result<[f64; 4]> {
    let chain = derive_chain(&ChannelSpec::new(gamma, r, kappa)?)?;
    let x = theta * r;
    let d = x + chain.mu - chain.nu;
    let xi = (d * d + 4.0 * chain.nu * chain.mu).sqrt();
    Ok([
        gamma * xi,
        -gamma * (x + kappa),
        2.0 * gamma * chain.nu,
        -2.0 * r * chain.nu * std::f64::consts::LN_2 * r.exp2(),
    ])
}

/// First-order-condition residual at rate `r`; zero at interior optima.
pub fn foc_residual(gamma: f64, kappa: f64, theta: QosExponent, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("rate must be positive, got {r}")));
    }
    let t = foc_terms(gamma, kappa, theta.get(), r)?;
    // gamma*xi and gamma*(theta R + kappa) nearly cancel; add the small terms last
    Ok((t[0] + t[1]) + (t[2] + t[3]))
}

/// Root of the first-order condition on `(0, R_max]` by bisection.
pub fn foc_root(gamma: f64, kappa: f64, theta: QosExponent) -> Result<f64> {
    validate(gamma, kappa)?;
    let hi = rate_search_limit(gamma);
    let lo = hi * 1e-9;
    let f = |r: f64| foc_residual(gamma, kappa, theta, r).unwrap_or(f64::NAN);
    Ok(bisect(f, lo, hi, 0.0, 300)?.x)
}

/// Maximizes effective capacity over the fixed rate.
pub fn optimize_rate(gamma: f64, kappa: f64, theta: QosExponent) -> Result<OptimumRate> {
    validate(gamma, kappa)?;
    let r_max = rate_search_limit(gamma);
    let objective = |r: f64| capacity_at(gamma, kappa, theta, r);

    let golden = golden_max(objective, 0.0, r_max, RATE_TOL * r_max.max(1.0), 500);

    // certification scan
    let step = r_max / SCAN_POINTS as f64;
    let (best_i, best_c) = (0..=SCAN_POINTS)
        .map(|i| (i, objective(i as f64 * step)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, c)| if c > acc.1 { (i, c) } else { acc });

    let (r_star, c_e_star, fallback) = if best_c > golden.fx * (1.0 + 1e-12) {
        let lo = best_i.saturating_sub(1) as f64 * step;
        let hi = ((best_i + 1) as f64 * step).min(r_max);
        let local = golden_max(objective, lo, hi, RATE_TOL * r_max.max(1.0), 500);
        (local.x, local.fx, true)
    } else {
        (golden.x, golden.fx, false)
    };

    if c_e_star <= 1e-12 {
        return Err(Error::DegenerateOptimum { r_star, c_e: c_e_star });
    }
    let terms = foc_terms(gamma, kappa, theta.get(), r_star)?;
    let foc_scale = terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    Ok(OptimumRate {
        r_star,
        c_e_star,
        foc_residual: foc_residual(gamma, kappa, theta, r_star)?,
        foc_scale,
        bracket: (0.0, r_max),
        fallback,
    })
}
