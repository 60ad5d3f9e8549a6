//! Maximum supportable arrival rates from the matching condition
//! `a(theta; lambda) = C_E`.
//!
//! DTMS and MFS have closed forms. For MMPS the authoritative answer comes
//! from numerically inverting the bandwidth in `lambda`; the often-quoted
//! closed form with denominator `(e^theta - 1) theta C + alpha` is still
//! evaluated and its residual reported, since it does not satisfy the
//! matching condition (it even sends the average rate to zero as
//! `theta -> 0`).

use serde::{Deserialize, Serialize};

use crate::capacity::QosExponent;
use crate::error::{Error, Result};
use crate::numeric::bisect;
use crate::source::{chain_p_on, effective_bandwidth, BurstinessParam, ChainShape, SourceFamily, SourceModel};

/// Relative residual at which inversion stops; small enough that the
/// bracket usually collapses to adjacent floats first.
const INVERSION_TOL: f64 = 1e-14;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMethod {
    ClosedForm,
    Bisection,
}

/// A closed form that was evaluated alongside the authoritative answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlternativeForm {
    pub lambda_avg_star: f64,
    /// `a(theta; lambda_avg / P_ON) - C_E` for this alternative.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// Maximum ON-state arrival rate (bits/block).
    pub lambda_on_star: f64,
    pub lambda_avg_star: f64,
    /// `a(theta; lambda_on_star) - C_E`.
    pub residual: f64,
    pub method: MatchMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub printed_closed_form: Option<AlternativeForm>,
}

fn check_capacity(c_e: f64) -> Result<()> {
    if c_e >= 0.0 && c_e.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("effective capacity must be non-negative and finite, got {c_e}")))
    }
}

fn finish(source: SourceModel, lambda_on: f64, c_e: f64, theta: QosExponent, method: MatchMethod) -> Result<MatchResult> {
    let model = source.with_lambda(lambda_on);
    let residual = effective_bandwidth(&model, theta)? - c_e;
    let p_on = chain_p_on(&source.shape());
    Ok(MatchResult {
        lambda_on_star: lambda_on,
        lambda_avg_star: lambda_on * p_on,
        residual,
        method,
        printed_closed_form: None,
    })
}

/// Closed-form DTMS maximum arrival rate.
pub fn max_arrival_dtms(p11: f64, p22: f64, c_e: f64, theta: QosExponent) -> Result<MatchResult> {
    let source = SourceModel::Dtms { p11, p22, lambda_on: 0.0 };
    source.validate()?;
    check_capacity(c_e)?;
    if c_e == 0.0 {
        return finish(source, 0.0, c_e, theta, MatchMethod::ClosedForm);
    }
    let th = theta.get();
    let e = (th * c_e).exp_m1();
    // lambda* = C + (1/theta) ln[(e^{theta C} - p11) / ((1 - p11) + p22 (e^{theta C} - 1))]
    let num = (1.0 - p11) + e;
    let den = (1.0 - p11) + p22 * e;
    if !(num > 0.0 && den > 0.0) {
        return Err(Error::NoSolution(format!(
            "DTMS matching log argument {num}/{den} is not positive (p11={p11}, p22={p22}, C_E={c_e})"
        )));
    }
    let lambda = c_e + (num.ln() - den.ln()) / th;
    if !lambda.is_finite() {
        return Err(Error::Overflow(format!("DTMS maximum arrival rate at C_E={c_e}, theta={th}")));
    }
    finish(source, lambda, c_e, theta, MatchMethod::ClosedForm)
}

/// Burstiness-parameter DTMS: `lambda_avg* = (s/theta) ln(1 + (e^{theta C} - 1)/s)`.
pub fn max_arrival_dtms_simplified(s: BurstinessParam, c_e: f64, theta: QosExponent) -> Result<MatchResult> {
    check_capacity(c_e)?;
    let source = s.source(0.0);
    let s = s.get();
    if c_e == 0.0 {
        return finish(source, 0.0, c_e, theta, MatchMethod::ClosedForm);
    }
    let th = theta.get();
    let avg = s / th * ((th * c_e).exp_m1() / s).ln_1p();
    if !avg.is_finite() {
        return Err(Error::Overflow(format!("DTMS(s={s}) maximum arrival rate at C_E={c_e}, theta={th}")));
    }
    let mut r = finish(source, avg / s, c_e, theta, MatchMethod::ClosedForm)?;
    r.lambda_avg_star = avg;
    Ok(r)
}

/// Closed-form MFS maximum arrival rate:
/// `lambda* = C (theta C + alpha + beta) / (theta C + alpha)`.
pub fn max_arrival_mfs(alpha: f64, beta: f64, c_e: f64, theta: QosExponent) -> Result<MatchResult> {
    let source = SourceModel::Mfs { alpha, beta, lambda_on: 0.0 };
    source.validate()?;
    check_capacity(c_e)?;
    let x = theta.get() * c_e;
    let lambda = c_e * (x + alpha + beta) / (x + alpha);
    finish(source, lambda, c_e, theta, MatchMethod::ClosedForm)
}

/// MMPS maximum arrival rate by inversion of its effective bandwidth.
pub fn max_arrival_mmps(alpha: f64, beta: f64, c_e: f64, theta: QosExponent) -> Result<MatchResult> {
    let source = SourceModel::Mmps { alpha, beta, lambda_on: 0.0 };
    source.validate()?;
    check_capacity(c_e)?;
    let mut r = invert_bandwidth(&source, c_e, theta)?;
    let printed = printed_mmps_average(alpha, beta, c_e, theta.get());
    let p_on = alpha / (alpha + beta);
    let residual = if printed.is_finite() {
        effective_bandwidth(&source.with_lambda(printed / p_on), theta)? - c_e
    } else {
        f64::NAN
    };
    r.printed_closed_form = Some(AlternativeForm { lambda_avg_star: printed, residual });
    Ok(r)
}

/// `P_ON * C * theta (theta C + alpha + beta) / ((e^theta - 1) theta C + alpha)`.
fn printed_mmps_average(alpha: f64, beta: f64, c_e: f64, theta: f64) -> f64 {
    let p_on = alpha / (alpha + beta);
    let x = theta * c_e;
    p_on * c_e * theta * (x + alpha + beta) / (theta.exp_m1() * x + alpha)
}

/// Generic matching by bisection on `lambda`: finds `lambda*` with
/// `a(theta; lambda*) = C_E` to within `1e-14 * C_E` or float resolution.
///
/// Only the chain shape of `source` is used; its `lambda_on` is ignored.
pub fn invert_bandwidth(source: &SourceModel, c_e: f64, theta: QosExponent) -> Result<MatchResult> {
    source.validate()?;
    check_capacity(c_e)?;
    if c_e == 0.0 {
        return finish(*source, 0.0, c_e, theta, MatchMethod::Bisection);
    }
    let g = |lambda: f64| -> f64 {
        match effective_bandwidth(&source.with_lambda(lambda), theta) {
            Ok(a) => a - c_e,
            Err(_) => f64::INFINITY,
        }
    };
    // a(lambda) >= P_ON lambda for every family, so the root is below C / P_ON;
    // grow geometrically rather than trusting that bound when P_ON is tiny.
    let mut hi = c_e.max(1e-300);
    let mut g_hi = g(hi);
    let mut doublings = 0;
    while g_hi < 0.0 {
        hi *= 2.0;
        g_hi = g(hi);
        doublings += 1;
        if doublings > 2100 || !hi.is_finite() {
            return Err(Error::NoSolution(format!(
                "bandwidth of {:?} stays below C_E={c_e} up to lambda={hi:e}",
                source.shape()
            )));
        }
    }
    if g_hi.is_infinite() {
        // the tilt overflowed; back off until the bandwidth is finite
        let mut lo = hi / 2.0;
        while lo > 0.0 && g(lo).is_infinite() {
            lo /= 2.0;
        }
        hi = lo * 2.0;
    }
    let tol = INVERSION_TOL * c_e;
    let root = bisect(g, 0.0, hi, tol, MAX_BISECTIONS)?;
    finish(*source, root.x, c_e, theta, MatchMethod::Bisection)
}

/// Family-dispatching matching: closed form for DTMS and MFS, inversion for MMPS.
pub fn max_arrival(source: &SourceModel, c_e: f64, theta: QosExponent) -> Result<MatchResult> {
    match source.shape() {
        ChainShape::Discrete { p11, p22 } => max_arrival_dtms(p11, p22, c_e, theta),
        ChainShape::Continuous { alpha, beta } => match source.family() {
            SourceFamily::Mfs => max_arrival_mfs(alpha, beta, c_e, theta),
            _ => max_arrival_mmps(alpha, beta, c_e, theta),
        },
    }
}
