//! Two-state ON/OFF Markov arrival models and their effective bandwidths.
//!
//! All three families emit `lambda` (bits/block, or Poisson intensity for
//! MMPS) while ON and nothing while OFF:
//!
//! * DTMS: discrete-time chain with stay-OFF probability `p11` and stay-ON
//!   probability `p22`; `lambda` bits arrive in every ON block.
//! * MFS: continuous-time chain (OFF->ON rate `alpha`, ON->OFF rate `beta`)
//!   feeding fluid at rate `lambda` while ON.
//! * MMPS: the same chain modulating a Poisson stream of unit-bit arrivals
//!   with intensity `lambda` while ON.
//!
//! The effective bandwidths are dominant eigenvalues of tilted 2x2 matrices,
//! i.e. roots of quadratics. Each `b + sqrt(b^2 + c)` style root is rewritten
//! so that no two like-magnitude terms are subtracted, which keeps the
//! `theta -> 0` limit accurate.

use serde::{Deserialize, Serialize};

use crate::capacity::QosExponent;
use crate::error::{Error, Result};

/// Above this tilt the DTMS root is evaluated with `exp(theta*lambda)` factored out.
const LOG_DOMAIN_TILT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SourceModel {
    Dtms { p11: f64, p22: f64, lambda_on: f64 },
    Mfs { alpha: f64, beta: f64, lambda_on: f64 },
    Mmps { alpha: f64, beta: f64, lambda_on: f64 },
}

/// Source family without parameters, used where the family is chosen
/// separately from its shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFamily {
    Dtms,
    Mfs,
    Mmps,
}

impl SourceFamily {
    pub const ALL: [SourceFamily; 3] = [SourceFamily::Dtms, SourceFamily::Mfs, SourceFamily::Mmps];

    pub fn name(self) -> &'static str {
        match self {
            SourceFamily::Dtms => "dtms",
            SourceFamily::Mfs => "mfs",
            SourceFamily::Mmps => "mmps",
        }
    }
}

/// Shape of the modulating chain, independent of the ON-state rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChainShape {
    Discrete { p11: f64, p22: f64 },
    Continuous { alpha: f64, beta: f64 },
}

/// Single-parameter DTMS with `p11 = 1 - s` and `p22 = s`; smaller `s` is burstier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BurstinessParam(f64);

impl BurstinessParam {
    pub fn new(s: f64) -> Result<Self> {
        if s > 0.0 && s <= 1.0 {
            Ok(BurstinessParam(s))
        } else {
            Err(Error::invalid(format!("burstiness s must lie in (0, 1], got {s}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn source(self, lambda_on: f64) -> SourceModel {
        SourceModel::Dtms { p11: 1.0 - self.0, p22: self.0, lambda_on }
    }
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in [0, 1], got {p}")))
    }
}

fn check_rates(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::invalid(format!("beta must be non-negative, got {beta}")));
    }
    Ok(())
}

impl SourceModel {
    pub fn new(family: SourceFamily, shape: ChainShape, lambda_on: f64) -> Result<Self> {
        let model = match (family, shape) {
            (SourceFamily::Dtms, ChainShape::Discrete { p11, p22 }) => SourceModel::Dtms { p11, p22, lambda_on },
            (SourceFamily::Mfs, ChainShape::Continuous { alpha, beta }) => SourceModel::Mfs { alpha, beta, lambda_on },
            (SourceFamily::Mmps, ChainShape::Continuous { alpha, beta }) => SourceModel::Mmps { alpha, beta, lambda_on },
            (f, s) => return Err(Error::invalid(format!("{} source cannot use chain shape {s:?}", f.name()))),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SourceModel::Dtms { p11, p22, .. } => {
                check_probability("p11", p11)?;
                check_probability("p22", p22)?;
                if p11 == 1.0 && p22 == 1.0 {
                    return Err(Error::DegenerateChain);
                }
            }
            SourceModel::Mfs { alpha, beta, .. } | SourceModel::Mmps { alpha, beta, .. } => check_rates(alpha, beta)?,
        }
        let lambda = self.lambda_on();
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must be non-negative and finite, got {lambda}")));
        }
        Ok(())
    }

    pub fn family(&self) -> SourceFamily {
        match self {
            SourceModel::Dtms { .. } => SourceFamily::Dtms,
            SourceModel::Mfs { .. } => SourceFamily::Mfs,
            SourceModel::Mmps { .. } => SourceFamily::Mmps,
        }
    }

    pub fn shape(&self) -> ChainShape {
        match *self {
            SourceModel::Dtms { p11, p22, .. } => ChainShape::Discrete { p11, p22 },
            SourceModel::Mfs { alpha, beta, .. } | SourceModel::Mmps { alpha, beta, .. } => {
                ChainShape::Continuous { alpha, beta }
            }
        }
    }

    pub fn lambda_on(&self) -> f64 {
        match *self {
            SourceModel::Dtms { lambda_on, .. }
            | SourceModel::Mfs { lambda_on, .. }
            | SourceModel::Mmps { lambda_on, .. } => lambda_on,
        }
    }

    /// Same chain with a different ON-state rate.
    pub fn with_lambda(&self, lambda_on: f64) -> SourceModel {
        let mut m = *self;
        match &mut m {
            SourceModel::Dtms { lambda_on: l, .. }
            | SourceModel::Mfs { lambda_on: l, .. }
            | SourceModel::Mmps { lambda_on: l, .. } => *l = lambda_on,
        }
        m
    }

    /// Source of the given family whose modulating chain has stationary ON
    /// probability `p_on`: DTMS uses `s = p_on`, MFS/MMPS split a total
    /// switching rate `rate_sum` as `alpha = p_on * rate_sum`.
    pub fn with_p_on(family: SourceFamily, p_on: f64, rate_sum: f64, lambda_on: f64) -> Result<Self> {
        if !(p_on > 0.0 && p_on <= 1.0) {
            return Err(Error::invalid(format!("P_ON must lie in (0, 1], got {p_on}")));
        }
        let shape = match family {
            SourceFamily::Dtms => ChainShape::Discrete { p11: 1.0 - p_on, p22: p_on },
            _ => ChainShape::Continuous { alpha: p_on * rate_sum, beta: (1.0 - p_on) * rate_sum },
        };
        SourceModel::new(family, shape, lambda_on)
    }
}

/// Stationary probability of the ON state.
pub fn steady_state_on(source: &SourceModel) -> Result<f64> {
    source.validate()?;
    Ok(chain_p_on(&source.shape()))
}

pub(crate) fn chain_p_on(shape: &ChainShape) -> f64 {
    match *shape {
        ChainShape::Discrete { p11, p22 } => (1.0 - p11) / ((1.0 - p11) + (1.0 - p22)),
        ChainShape::Continuous { alpha, beta } => alpha / (alpha + beta),
    }
}

/// Long-run mean arrival rate `lambda * P_ON`.
pub fn mean_rate(source: &SourceModel) -> Result<f64> {
    Ok(source.lambda_on() * steady_state_on(source)?)
}

/// Effective bandwidth `a(theta)` in bits/block.
pub fn effective_bandwidth(source: &SourceModel, theta: QosExponent) -> Result<f64> {
    source.validate()?;
    let th = theta.get();
    let a = match *source {
        SourceModel::Dtms { p11, p22, lambda_on } => dtms_bandwidth(p11, p22, lambda_on, th),
        SourceModel::Mfs { alpha, beta, lambda_on } => fluid_root(alpha, beta, th * lambda_on) / th,
        SourceModel::Mmps { alpha, beta, lambda_on } => {
            // Poisson tilt over a unit block: (e^theta - 1) * lambda
            let tilt = th.exp_m1() * lambda_on;
            if !tilt.is_finite() {
                return Err(Error::Overflow(format!("MMPS tilt (e^{th} - 1) * {lambda_on} overflows")));
            }
            fluid_root(alpha, beta, tilt) / th
        }
    };
    if a.is_finite() {
        Ok(a.max(0.0))
    } else {
        Err(Error::Overflow(format!("effective bandwidth of {source:?} at theta = {th}")))
    }
}

/// Dominant eigenvalue of `Q + diag(0, x)` for the ON/OFF generator with
/// rates `alpha` (OFF->ON) and `beta` (ON->OFF):
/// `((x - k) + sqrt((x - k)^2 + 4 alpha x)) / 2` with `k = alpha + beta`.
fn fluid_root(alpha: f64, beta: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let k = alpha + beta;
    let d = x - k;
    // (x - k)^2 + 4 alpha x == (x + alpha - beta)^2 + 4 alpha beta
    let e = x + alpha - beta;
    let disc = (e * e + 4.0 * alpha * beta).sqrt();
    if d >= 0.0 {
        0.5 * (d + disc)
    } else {
        2.0 * alpha * x / (disc - d)
    }
}

/// `ln(rho) / theta` for the spectral radius `rho` of `P diag(1, e^{theta lambda})`.
fn dtms_bandwidth(p11: f64, p22: f64, lambda: f64, theta: f64) -> f64 {
    let tilt = theta * lambda;
    if tilt == 0.0 {
        return 0.0;
    }
    let c = p11 + p22 - 1.0;
    if tilt > LOG_DOMAIN_TILT {
        // rho = e^{tilt} * rho_u with u = e^{-tilt}
        let u = (-tilt).exp();
        let b = p11 * u + p22;
        // b^2 - 4cu rewritten as a sum of non-negative terms
        let disc = ((p22 - p11 * u).powi(2) + 4.0 * u * (1.0 - p11) * (1.0 - p22)).sqrt();
        return lambda + (0.5 * (b + disc)).ln() / theta;
    }
    let e = tilt.exp_m1();
    // rho = 1 + 2 E (1 - p11) / (sqrt(D) + w) with w = 1 - c - p22 E and
    // D = w^2 + 4 E (1 - p11)
    let w = (1.0 - c) - p22 * e;
    let g = 4.0 * e * (1.0 - p11);
    let disc = (w * w + g).sqrt();
    let rho_minus_one = if w > 0.0 { 0.5 * g / (disc + w) } else { 0.5 * (disc - w) };
    rho_minus_one.ln_1p() / theta
}
