//! Delay-violation model `Pr{D >= d} ~ zeta * exp(-theta * a(theta) * d)` and
//! the reliability/latency tradeoffs built on it.

use serde::{Deserialize, Serialize};

use crate::capacity::{effective_capacity, QosExponent};
use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::matching::max_arrival;
use crate::numeric::bisect;
use crate::optimizer::optimize_rate;
use crate::source::{effective_bandwidth, SourceFamily, SourceModel};

pub const THETA_MIN: f64 = 1e-8;
pub const THETA_MAX: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayModel {
    /// Probability that the buffer is non-empty.
    pub zeta: f64,
    pub theta: QosExponent,
    /// Effective bandwidth `a(theta)` in bits/block.
    pub bandwidth: f64,
}

impl DelayModel {
    pub fn new(zeta: f64, theta: QosExponent, bandwidth: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&zeta) {
            return Err(Error::invalid(format!("zeta must lie in [0, 1], got {zeta}")));
        }
        if !(bandwidth >= 0.0) {
            return Err(Error::invalid(format!("bandwidth must be non-negative, got {bandwidth}")));
        }
        Ok(DelayModel { zeta, theta, bandwidth })
    }

    /// Decay rate of the delay tail per block, `theta * a(theta)`.
    pub fn decay_rate(&self) -> f64 {
        self.theta.get() * self.bandwidth
    }
}

/// Approximate `Pr{D >= d}`, clamped to `[0, 1]`.
pub fn delay_violation(model: &DelayModel, d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::invalid(format!("delay threshold must be non-negative, got {d}")));
    }
    if d == 0.0 || model.bandwidth == 0.0 {
        return Ok(model.zeta.min(1.0));
    }
    Ok((model.zeta * (-model.decay_rate() * d).exp()).min(1.0))
}

/// Smallest QoS exponent with `zeta * exp(-theta C_E(theta) d) <= epsilon`,
/// searched on `[1e-8, 1e4]`.
///
/// `theta * C_E(theta)` saturates at the OFF->ON rate `nu`, so small targets
/// can be out of reach; that case is reported as [`Error::Infeasible`].
pub fn required_theta(spec: &ChannelSpec, d: f64, epsilon: f64, zeta: f64) -> Result<QosExponent> {
    spec.validate()?;
    if !(d > 0.0) {
        return Err(Error::invalid(format!("delay threshold must be positive, got {d}")));
    }
    if !(epsilon > 0.0 && epsilon <= zeta && zeta <= 1.0) {
        return Err(Error::invalid(format!("need 0 < epsilon <= zeta <= 1, got epsilon={epsilon}, zeta={zeta}")));
    }
    // compare in log space: ln zeta - theta C_E d - ln epsilon
    let target = (zeta / epsilon).ln();
    let g = |ln_theta: f64| -> f64 {
        let theta = QosExponent::new(ln_theta.exp()).expect("theta in bracket");
        let c = effective_capacity(spec, theta).map(|r| r.value).unwrap_or(0.0);
        target - theta.get() * c * d
    };
    let (lo, hi) = (THETA_MIN.ln(), THETA_MAX.ln());
    if g(lo) <= 0.0 {
        return QosExponent::new(THETA_MIN);
    }
    if g(hi) > 0.0 {
        return Err(Error::Infeasible(format!(
            "violation {epsilon:e} at delay {d} needs theta*C_E > {target:.6}, but it saturates near {:.6}",
            THETA_MAX * effective_capacity(spec, QosExponent::new(THETA_MAX)?)?.value
        )));
    }
    let root = bisect(g, lo, hi, 0.0, 400)?;
    QosExponent::new(root.x.exp())
}

/// Operating QoS exponent of a given arrival process on a given link: the
/// `theta` where `a(theta) = C_E(theta)`.
///
/// Fails with [`Error::Infeasible`] when the mean arrival rate reaches the
/// mean service rate (no positive exponent exists).
pub fn operating_theta(spec: &ChannelSpec, source: &SourceModel) -> Result<QosExponent> {
    spec.validate()?;
    source.validate()?;
    let h = |ln_theta: f64| -> f64 {
        let theta = QosExponent::new(ln_theta.exp()).expect("theta in bracket");
        let a = effective_bandwidth(source, theta).unwrap_or(f64::INFINITY);
        let c = effective_capacity(spec, theta).map(|r| r.value).unwrap_or(0.0);
        a - c
    };
    let (lo, hi) = (THETA_MIN.ln(), THETA_MAX.ln());
    if h(lo) >= 0.0 {
        return Err(Error::Infeasible(format!(
            "source {source:?} saturates the link {spec:?}: no positive operating exponent"
        )));
    }
    if h(hi) < 0.0 {
        return Err(Error::NoSolution(format!("operating exponent exceeds {THETA_MAX:e}")));
    }
    let root = bisect(h, lo, hi, 0.0, 400)?;
    QosExponent::new(root.x.exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeoffAxis {
    Gamma,
    Theta,
    POn,
}

impl TradeoffAxis {
    pub fn name(&self) -> &'static str {
        match self {
            TradeoffAxis::Gamma => "gamma",
            TradeoffAxis::Theta => "theta",
            TradeoffAxis::POn => "p_on",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMode {
    Fixed(f64),
    /// Re-optimize the rate at every grid point.
    Optimized,
}

/// Base operating point shared by all three tradeoff panels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffConfig {
    pub gamma: f64,
    pub kappa: f64,
    pub theta: f64,
    pub rate: RateMode,
    pub d: f64,
    pub zeta: f64,
    pub family: SourceFamily,
    /// Source ON probability for the gamma and theta panels.
    pub p_on: f64,
    /// `alpha + beta` for MFS/MMPS sources.
    pub rate_sum: f64,
    /// Average arrival rate held fixed across the P_ON panel (bits/block).
    pub arrival_avg: f64,
}

impl Default for TradeoffConfig {
    fn default() -> Self {
        TradeoffConfig {
            gamma: 10.0,
            kappa: 50.0,
            theta: 1.0,
            rate: RateMode::Optimized,
            d: 3.0,
            zeta: 1.0,
            family: SourceFamily::Dtms,
            p_on: 0.5,
            rate_sum: 10.0,
            arrival_avg: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub axis_value: f64,
    pub gamma: f64,
    pub rate: f64,
    /// QoS exponent entering the violation bound.
    pub theta: f64,
    pub c_e: f64,
    pub bandwidth: f64,
    pub lambda_avg: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffTable {
    pub axis: TradeoffAxis,
    pub family: SourceFamily,
    pub rows: Vec<TradeoffRow>,
    /// Whether the violation probability is nonincreasing along the
    /// (ascending) axis grid.
    pub monotone: bool,
}

fn link_rate(cfg: &TradeoffConfig, gamma: f64, theta: QosExponent) -> Result<f64> {
    match cfg.rate {
        RateMode::Fixed(r) => Ok(r),
        RateMode::Optimized => Ok(optimize_rate(gamma, cfg.kappa, theta)?.r_star),
    }
}

fn matched_row(cfg: &TradeoffConfig, axis_value: f64, gamma: f64, theta: f64) -> Result<TradeoffRow> {
    let th = QosExponent::new(theta)?;
    let rate = link_rate(cfg, gamma, th)?;
    let spec = ChannelSpec::new(gamma, rate, cfg.kappa)?;
    let c_e = effective_capacity(&spec, th)?.value;
    let shape = SourceModel::with_p_on(cfg.family, cfg.p_on, cfg.rate_sum, 0.0)?;
    let lambda_avg = max_arrival(&shape, c_e, th)?.lambda_avg_star;
    // at the matched operating point a(theta) = C_E
    let model = DelayModel::new(cfg.zeta, th, c_e)?;
    Ok(TradeoffRow {
        axis_value,
        gamma,
        rate,
        theta,
        c_e,
        bandwidth: c_e,
        lambda_avg,
        violation: delay_violation(&model, cfg.d)?,
    })
}

fn fixed_source_row(cfg: &TradeoffConfig, p_on: f64) -> Result<TradeoffRow> {
    let provision = QosExponent::new(cfg.theta)?;
    let rate = link_rate(cfg, cfg.gamma, provision)?;
    let spec = ChannelSpec::new(cfg.gamma, rate, cfg.kappa)?;
    let source = SourceModel::with_p_on(cfg.family, p_on, cfg.rate_sum, cfg.arrival_avg / p_on)?;
    let th = operating_theta(&spec, &source)?;
    let c_e = effective_capacity(&spec, th)?.value;
    let bandwidth = effective_bandwidth(&source, th)?;
    let model = DelayModel::new(cfg.zeta, th, bandwidth)?;
    Ok(TradeoffRow {
        axis_value: p_on,
        gamma: cfg.gamma,
        rate,
        theta: th.get(),
        c_e,
        bandwidth,
        lambda_avg: cfg.arrival_avg,
        violation: delay_violation(&model, cfg.d)?,
    })
}

/// Delay-violation probability along one axis.
///
/// * `Gamma` / `Theta`: the source runs at its maximum supportable rate, so
///   `a(theta) = C_E(theta)` and the bound uses the swept or fixed `theta`.
/// * `POn`: the average arrival rate is held at `cfg.arrival_avg` while the
///   source becomes burstier; the link rate is provisioned at `cfg.theta` and
///   the bound uses the operating exponent solving `a(theta) = C_E(theta)`.
pub fn tradeoff_curve(cfg: &TradeoffConfig, axis: TradeoffAxis, grid: &[f64]) -> Result<TradeoffTable> {
    if grid.is_empty() {
        return Err(Error::invalid("tradeoff grid is empty"));
    }
    let rows = grid
        .iter()
        .map(|&v| match axis {
            TradeoffAxis::Gamma => matched_row(cfg, v, v, cfg.theta),
            TradeoffAxis::Theta => matched_row(cfg, v, cfg.gamma, v),
            TradeoffAxis::POn => fixed_source_row(cfg, v),
        })
        .collect::<Result<Vec<_>>>()?;
    let ascending = grid.windows(2).all(|w| w[0] <= w[1]);
    let monotone = ascending && rows.windows(2).all(|w| w[1].violation <= w[0].violation * (1.0 + 1e-9));
    Ok(TradeoffTable { axis, family: cfg.family, rows, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn th(x: f64) -> QosExponent {
        QosExponent::new(x).unwrap()
    }

    #[test]
    fn violation_examples() {
        let m = DelayModel::new(0.7, th(1.0), 1.4449).unwrap();
        assert_eq!(delay_violation(&m, 0.0).unwrap(), 0.7);
        let m = DelayModel::new(1.0, th(1.0), 1.4449).unwrap();
        let p = delay_violation(&m, 3.0).unwrap();
        assert!((p - (-4.3347f64).exp()).abs() < 1e-12);
        assert!((p - 0.01311).abs() < 1e-5);
        let m = DelayModel::new(0.4, th(2.0), 0.0).unwrap();
        assert_eq!(delay_violation(&m, 100.0).unwrap(), 0.4);
        assert!(delay_violation(&m, -1.0).is_err());
        assert!(DelayModel::new(1.5, th(1.0), 1.0).is_err());
    }

    #[test]
    fn required_theta_inverts_reference_point() {
        let spec = ChannelSpec::new(10.0, 3.0, 50.0).unwrap();
        let t = required_theta(&spec, 3.0, 0.01311, 1.0).unwrap();
        assert!((t.get() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn required_theta_edge_cases() {
        let spec = ChannelSpec::new(10.0, 3.0, 50.0).unwrap();
        assert_eq!(required_theta(&spec, 3.0, 0.5, 0.5).unwrap().get(), THETA_MIN);
        let slow = ChannelSpec::new(10.0, 3.0, 1e-3).unwrap();
        assert!(matches!(required_theta(&slow, 3.0, 1e-30, 1.0), Err(Error::Infeasible(_))));
        assert!(required_theta(&spec, 3.0, 0.6, 0.5).is_err());
    }

    #[test]
    fn operating_theta_balances_bandwidth_and_capacity() {
        let spec = ChannelSpec::new(10.0, 3.0, 50.0).unwrap();
        let src = SourceModel::Dtms { p11: 0.5, p22: 0.5, lambda_on: 1.5 };
        let t = operating_theta(&spec, &src).unwrap();
        let a = effective_bandwidth(&src, t).unwrap();
        let c = effective_capacity(&spec, t).unwrap().value;
        assert!((a - c).abs() < 1e-9);
        let heavy = SourceModel::Dtms { p11: 0.5, p22: 0.5, lambda_on: 4.0 };
        assert!(matches!(operating_theta(&spec, &heavy), Err(Error::Infeasible(_))));
    }

    #[test]
    fn empty_grid_is_rejected() {
        assert!(tradeoff_curve(&TradeoffConfig::default(), TradeoffAxis::Gamma, &[]).is_err());
    }

    #[test]
    fn zero_delay_column_is_zeta() {
        let cfg = TradeoffConfig { d: 0.0, zeta: 0.8, ..TradeoffConfig::default() };
        let t = tradeoff_curve(&cfg, TradeoffAxis::Theta, &[0.1, 1.0, 3.0]).unwrap();
        assert!(t.rows.iter().all(|r| r.violation == 0.8));
    }
}
