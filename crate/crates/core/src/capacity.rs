//! Effective capacity of the fixed-rate ON/OFF service process.
//!
//! For a service chain that delivers `R` bits per unit time while ON, the
//! effective capacity at QoS exponent `theta` is
//!
//! ```text
//! C_E = (theta*R + kappa - xi) / (2*theta)
//! xi  = sqrt((theta*R + kappa)^2 - 4*nu*theta*R)
//! ```
//!
//! The difference `theta*R + kappa - xi` cancels catastrophically when
//! `theta*R` is small relative to `kappa`, so it is evaluated as the
//! equivalent `C_E = 2*nu*R / (theta*R + kappa + xi)`.

use serde::{Deserialize, Serialize};

use crate::channel::{derive_chain, ChannelSpec};
use crate::error::{Error, Result};

/// Decay rate `theta` of the buffer/delay tail (1/bits). Always positive;
/// the loose-QoS limit is reached through dedicated limit functions.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QosExponent(f64);

impl QosExponent {
    pub fn new(theta: f64) -> Result<Self> {
        if theta > 0.0 && theta.is_finite() {
            Ok(QosExponent(theta))
        } else {
            Err(Error::invalid(format!("QoS exponent must be positive and finite, got {theta}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCapacityResult {
    /// Effective capacity in bits/block.
    pub value: f64,
    /// Discriminant root `xi`.
    pub xi: f64,
    /// `R * exp(-psi)`, the mean service rate.
    pub upper_bound: f64,
}

/// Closed-form effective capacity of the ON/OFF service chain.
pub fn effective_capacity(spec: &ChannelSpec, theta: QosExponent) -> Result<EffectiveCapacityResult> {
    let chain = derive_chain(spec)?;
    let th = theta.get();
    let r = spec.rate;
    let xi = discriminant_root(th * r, chain.nu, chain.mu);
    let denom = th * r + spec.kappa + xi;
    let value = if r == 0.0 { 0.0 } else { 2.0 * chain.nu * r / denom };
    let upper_bound = r * chain.p_on;
    Ok(EffectiveCapacityResult { value: value.min(upper_bound), xi, upper_bound })
}

/// `sqrt((x + kappa)^2 - 4 nu x)` written as `sqrt((x + mu - nu)^2 + 4 nu mu)`,
/// a sum of non-negative terms.
fn discriminant_root(x: f64, nu: f64, mu: f64) -> f64 {
    let d = x + mu - nu;
    (d * d + 4.0 * nu * mu).sqrt()
}

/// Effective capacity as `theta -> 0` or `kappa -> infinity`: the mean
/// service rate `R * exp(-psi)`.
pub fn capacity_upper_bound(spec: &ChannelSpec) -> Result<f64> {
    let chain = derive_chain(spec)?;
    Ok(spec.rate * chain.p_on)
}

/// Effective capacity as `kappa -> 0`, which is zero for every channel.
pub fn capacity_lower_limit(spec: &ChannelSpec, _theta: QosExponent) -> Result<f64> {
    spec.validate()?;
    Ok(0.0)
}

/// Analytic derivative `dC_E/dR` holding `gamma`, `kappa`, `theta` fixed.
pub fn capacity_rate_derivative(spec: &ChannelSpec, theta: QosExponent) -> Result<f64> {
    let chain = derive_chain(spec)?;
    let th = theta.get();
    let r = spec.rate;
    let xi = discriminant_root(th * r, chain.nu, chain.mu);
    // d(nu)/dR = -nu * 2^R ln2 / gamma
    let dnu = -chain.nu * r.exp2() * std::f64::consts::LN_2 / spec.gamma;
    let dxi = (th * (th * r + spec.kappa) - 2.0 * th * chain.nu - 2.0 * th * r * dnu) / xi;
    Ok((th - dxi) / (2.0 * th))
}
