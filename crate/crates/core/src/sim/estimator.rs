//! Monte Carlo estimators of effective capacity and effective bandwidth.
//!
//! Both quantities are growth rates of an exponential moment,
//!
//! ```text
//! a(theta)   =  lim (1/(theta t)) log E[exp( theta A(t))]
//! C_E(theta) = -lim (1/(theta t)) log E[exp(-theta S(t))]
//! ```
//!
//! and at useful horizons the plain sample mean of `exp(+-theta X(t))` is
//! dominated by paths that never occur in a feasible sample (the second
//! moment grows like `exp(t * const)`). The estimators therefore sample from
//! an exponentially tilted version of the modulating chain and reweight by
//! the likelihood ratio, which keeps the estimator unbiased for every
//! proposal. The proposal is fitted by cross-entropy: starting from the
//! nominal law, transition rates (or probabilities) and the Poisson intensity
//! are re-estimated from weighted pilot paths over doubling horizons. No
//! closed-form bandwidth or eigenvector enters the procedure.
//!
//! The finite-horizon moment carries a constant prefactor,
//! `log E[..] = t * Lambda + log c + o(1)`, which biases `(1/t) log E[..]` by
//! `log(c)/t`. The reported value is the increment between a burn-in
//! horizon `t0` and `t`, where the prefactor cancels:
//!
//! ```text
//! value = (log E[W(t)] - log E[W(t0)]) / (tilt * (t - t0))
//! ```
//!
//! The plain `(1/(tilt t)) log E[W(t)]` is reported alongside.
//!
//! Paths are exact: continuous-time chains are simulated event by event with
//! fluid accumulated over the exact ON time and Poisson counts drawn over
//! each ON sojourn. The horizon is measured in unit-duration blocks.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::QosExponent;
use crate::channel::{derive_chain, ChannelSpec, OFF, ON};
use crate::error::{Error, Result};
use crate::sim::paths::{bernoulli, exp_sample, poisson_sample, replica_rng, OnOffCtmc};
use crate::source::{chain_p_on, SourceModel};

/// Seed perturbation separating pilot streams from the main replicas.
const PILOT_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;
const PILOT_HORIZON_CAP: usize = 256;
const RATE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    /// Horizon `t` in blocks.
    pub blocks: usize,
    /// Burn-in horizon `t0`; defaults to `blocks / 5`.
    pub burn_in: Option<usize>,
    pub replicas: usize,
    pub seed: u64,
    pub pilot_replicas: usize,
    /// `false` samples from the nominal law (plain Monte Carlo).
    pub importance_sampling: bool,
}

impl EstimatorOptions {
    pub fn new(blocks: usize, replicas: usize, seed: u64) -> Self {
        EstimatorOptions { blocks, burn_in: None, replicas, seed, pilot_replicas: 4000, importance_sampling: true }
    }

    fn burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.blocks / 5)
    }

    fn validate(&self) -> Result<()> {
        if self.blocks == 0 || self.replicas < 2 {
            return Err(Error::invalid("estimator needs blocks >= 1 and replicas >= 2"));
        }
        if self.burn_in() >= self.blocks {
            return Err(Error::invalid(format!("burn-in {} must be below the horizon {}", self.burn_in(), self.blocks)));
        }
        Ok(())
    }
}

/// Point estimate with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    /// 95% normal-approximation half width.
    pub ci_halfwidth: f64,
    /// `(1/(tilt t)) log mean W(t)` without the burn-in correction.
    pub plain_value: f64,
    pub plain_std_error: f64,
    pub horizon: usize,
    pub burn_in: usize,
    pub replicas: usize,
    /// Kish effective sample size of the final-horizon weights.
    pub effective_sample_size: f64,
    pub warnings: Vec<String>,
}

impl Estimate {
    fn exact(value: f64, opts: &EstimatorOptions) -> Self {
        Estimate {
            value,
            std_error: 0.0,
            ci_halfwidth: 0.0,
            plain_value: value,
            plain_std_error: 0.0,
            horizon: opts.blocks,
            burn_in: opts.burn_in(),
            replicas: opts.replicas,
            effective_sample_size: opts.replicas as f64,
            warnings: Vec::new(),
        }
    }

    /// Whether `reference` lies within `k` standard errors of the estimate.
    pub fn brackets(&self, reference: f64, k: f64) -> bool {
        (self.value - reference).abs() <= k * self.std_error
    }
}

/// Monte Carlo estimate of the effective capacity of the ON/OFF link.
pub fn estimate_effective_capacity(
    channel: &ChannelSpec,
    theta: QosExponent,
    blocks: usize,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    estimate_effective_capacity_with(channel, theta, &EstimatorOptions::new(blocks, replicas, seed))
}

pub fn estimate_effective_capacity_with(
    channel: &ChannelSpec,
    theta: QosExponent,
    opts: &EstimatorOptions,
) -> Result<Estimate> {
    opts.validate()?;
    let chain = derive_chain(channel)?;
    if channel.rate == 0.0 {
        return Ok(Estimate::exact(0.0, opts));
    }
    let process = AdditiveProcess {
        nominal: Law {
            modulator: Modulator::Continuous(OnOffCtmc { up: chain.nu, down: chain.mu }),
            poisson_on: 0.0,
            initial_on: chain.p_on,
        },
        reward: Reward::Fluid(channel.rate),
        tilt: -theta.get(),
    };
    let mut est = run(&process, opts)?;
    let exponent = theta.get() * channel.rate * opts.blocks as f64;
    if exponent > 700.0 {
        est.warnings.push(format!(
            "theta*R*t = {exponent:.1} exceeds 700: per-replica moments are only representable in log domain"
        ));
    }
    Ok(est)
}

/// Monte Carlo estimate of a source's effective bandwidth.
pub fn estimate_effective_bandwidth(
    source: &SourceModel,
    theta: QosExponent,
    blocks: usize,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    estimate_effective_bandwidth_with(source, theta, &EstimatorOptions::new(blocks, replicas, seed))
}

pub fn estimate_effective_bandwidth_with(
    source: &SourceModel,
    theta: QosExponent,
    opts: &EstimatorOptions,
) -> Result<Estimate> {
    opts.validate()?;
    source.validate()?;
    let lambda = source.lambda_on();
    if lambda == 0.0 {
        return Ok(Estimate::exact(0.0, opts));
    }
    let initial_on = chain_p_on(&source.shape());
    let (nominal, reward) = match *source {
        SourceModel::Dtms { p11, p22, .. } => (
            Law {
                modulator: Modulator::Discrete([[p11, 1.0 - p11], [1.0 - p22, p22]]),
                poisson_on: 0.0,
                initial_on,
            },
            Reward::PerOnBlock(lambda),
        ),
        SourceModel::Mfs { alpha, beta, .. } => (
            Law { modulator: Modulator::Continuous(OnOffCtmc { up: alpha, down: beta }), poisson_on: 0.0, initial_on },
            Reward::Fluid(lambda),
        ),
        SourceModel::Mmps { alpha, beta, .. } => (
            Law { modulator: Modulator::Continuous(OnOffCtmc { up: alpha, down: beta }), poisson_on: lambda, initial_on },
            Reward::Poisson,
        ),
    };
    let mut est = run(&AdditiveProcess { nominal, reward, tilt: theta.get() }, opts)?;
    let peak = match reward {
        Reward::Poisson => f64::NAN,
        _ => theta.get() * lambda * opts.blocks as f64,
    };
    if peak > 700.0 {
        est.warnings.push(format!("theta*lambda*t = {peak:.1} exceeds 700: moments kept in log domain"));
    }
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Modulator {
    /// Row-stochastic matrix over `{OFF, ON}`.
    Discrete([[f64; 2]; 2]),
    Continuous(OnOffCtmc),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Reward {
    /// Fixed amount in every ON block of a discrete chain.
    PerOnBlock(f64),
    /// Fluid at the given rate while ON.
    Fluid(f64),
    /// Unit arrivals at the law's `poisson_on` intensity while ON.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Law {
    modulator: Modulator,
    poisson_on: f64,
    initial_on: f64,
}

impl Law {
    fn initial_prob(&self, state: usize) -> f64 {
        if state == ON {
            self.initial_on
        } else {
            1.0 - self.initial_on
        }
    }
}

struct AdditiveProcess {
    nominal: Law,
    reward: Reward,
    /// `+theta` for arrivals, `-theta` for service.
    tilt: f64,
}

/// Cross-entropy sufficient statistics of one path.
#[derive(Debug, Clone, Copy, Default)]
struct PathStats {
    x0: usize,
    transitions: [[f64; 2]; 2],
    time: [f64; 2],
    events: f64,
}

#[derive(Debug, Clone, Copy)]
struct PathOut {
    logw_burn: f64,
    logw: f64,
    stats: PathStats,
}

fn ln_ratio(p: f64, q: f64) -> f64 {
    if p == q {
        0.0
    } else {
        (p / q).ln()
    }
}

impl AdditiveProcess {
    fn sample_path<R: Rng>(&self, proposal: &Law, horizon: usize, burn_in: usize, rng: &mut R) -> PathOut {
        let nominal = &self.nominal;
        let mut x = if bernoulli(rng, proposal.initial_on) { ON } else { OFF };
        let mut logw = ln_ratio(nominal.initial_prob(x), proposal.initial_prob(x));
        let mut stats = PathStats { x0: x, ..PathStats::default() };
        let mut logw_burn = logw;

        match (nominal.modulator, proposal.modulator) {
            (Modulator::Discrete(p), Modulator::Discrete(q)) => {
                let amount = match self.reward {
                    Reward::PerOnBlock(a) => a,
                    _ => unreachable!("discrete chains carry per-block rewards"),
                };
                for k in 0..horizon {
                    if k > 0 {
                        let y = if bernoulli(rng, q[x][ON]) { ON } else { OFF };
                        logw += ln_ratio(p[x][y], q[x][y]);
                        stats.transitions[x][y] += 1.0;
                        x = y;
                    }
                    if x == ON {
                        logw += self.tilt * amount;
                    }
                    stats.time[x] += 1.0;
                    if k + 1 == burn_in {
                        logw_burn = logw;
                    }
                }
            }
            (Modulator::Continuous(p), Modulator::Continuous(q)) => {
                let end = horizon as f64;
                let burn = burn_in as f64;
                let mut t = 0.0;
                while t < end {
                    let hold = exp_sample(rng, q.exit_rate(x));
                    let stop = (t + hold).min(end);
                    if t < burn && stop >= burn {
                        logw += self.segment(&p, &q, proposal, x, burn - t, rng, &mut stats);
                        logw_burn = logw;
                        logw += self.segment(&p, &q, proposal, x, stop - burn, rng, &mut stats);
                    } else {
                        logw += self.segment(&p, &q, proposal, x, stop - t, rng, &mut stats);
                    }
                    t = stop;
                    if t < end {
                        logw += ln_ratio(p.exit_rate(x), q.exit_rate(x));
                        stats.transitions[x][1 - x] += 1.0;
                        x = 1 - x;
                    }
                }
            }
            _ => unreachable!("proposal shares the nominal modulator kind"),
        }
        PathOut { logw_burn, logw, stats }
    }

    /// Log-weight contribution of a sojourn of length `len` in `state`.
    #[allow(clippy::too_many_arguments)]
    fn segment<R: Rng>(
        &self,
        p: &OnOffCtmc,
        q: &OnOffCtmc,
        proposal: &Law,
        state: usize,
        len: f64,
        rng: &mut R,
        stats: &mut PathStats,
    ) -> f64 {
        if len <= 0.0 {
            return 0.0;
        }
        stats.time[state] += len;
        let mut lw = -(p.exit_rate(state) - q.exit_rate(state)) * len;
        if state == ON {
            match self.reward {
                Reward::Fluid(rate) => lw += self.tilt * rate * len,
                Reward::Poisson => {
                    let (lp, lq) = (self.nominal.poisson_on, proposal.poisson_on);
                    let n = poisson_sample(rng, lq * len) as f64;
                    stats.events += n;
                    lw += n * (self.tilt + ln_ratio(lp, lq)) - (lp - lq) * len;
                }
                Reward::PerOnBlock(_) => unreachable!(),
            }
        }
        lw
    }

    /// One cross-entropy refit of the proposal from weighted pilot paths.
    fn refit(&self, current: &Law, paths: &[PathOut]) -> Law {
        let m = paths.iter().map(|p| p.logw).fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = paths.iter().map(|p| (p.logw - m).exp()).collect();
        let total: f64 = w.iter().sum();
        let wsum = |f: &dyn Fn(&PathStats) -> f64| -> f64 { paths.iter().zip(&w).map(|(p, wi)| wi * f(&p.stats)).sum() };

        let mut next = *current;
        let on0 = wsum(&|s| if s.x0 == ON { 1.0 } else { 0.0 }) / total;
        next.initial_on = floor_probability(self.nominal.initial_on, on0);

        match (self.nominal.modulator, current.modulator) {
            (Modulator::Discrete(p), Modulator::Discrete(q)) => {
                let mut fitted = q;
                for i in 0..2 {
                    let row = wsum(&|s| s.transitions[i][0] + s.transitions[i][1]);
                    if row > 0.0 {
                        let to_on = wsum(&|s| s.transitions[i][ON]) / row;
                        let to_on = floor_probability(p[i][ON], to_on);
                        fitted[i] = [1.0 - to_on, to_on];
                    }
                }
                next.modulator = Modulator::Discrete(fitted);
            }
            (Modulator::Continuous(p), Modulator::Continuous(q)) => {
                let fit = |nominal: f64, old: f64, jumps: f64, time: f64| -> f64 {
                    if nominal == 0.0 {
                        0.0
                    } else if jumps > 0.0 && time > 0.0 {
                        (jumps / time).max(RATE_FLOOR * nominal)
                    } else {
                        old
                    }
                };
                let up = fit(p.up, q.up, wsum(&|s| s.transitions[OFF][ON]), wsum(&|s| s.time[OFF]));
                let down = fit(p.down, q.down, wsum(&|s| s.transitions[ON][OFF]), wsum(&|s| s.time[ON]));
                next.modulator = Modulator::Continuous(OnOffCtmc { up, down });
                if matches!(self.reward, Reward::Poisson) {
                    next.poisson_on = fit(
                        self.nominal.poisson_on,
                        current.poisson_on,
                        wsum(&|s| s.events),
                        wsum(&|s| s.time[ON]),
                    );
                }
            }
            _ => unreachable!(),
        }
        next
    }
}

/// Keeps a fitted probability strictly inside `(0, 1)` wherever the nominal
/// one is, so the likelihood ratio stays finite.
fn floor_probability(nominal: f64, fitted: f64) -> f64 {
    if nominal <= 0.0 {
        0.0
    } else if nominal >= 1.0 {
        1.0
    } else {
        fitted.clamp(1e-9, 1.0 - 1e-9)
    }
}

fn fit_proposal(process: &AdditiveProcess, opts: &EstimatorOptions) -> Law {
    let mut law = process.nominal;
    let cap = opts.blocks.min(PILOT_HORIZON_CAP);
    let mut horizons = Vec::new();
    let mut h = 8.min(cap);
    loop {
        horizons.extend([h, h]);
        if h >= cap {
            break;
        }
        h = (h * 2).min(cap);
    }
    horizons.push(cap);
    let pilot_seed = opts.seed ^ PILOT_SEED_MIX;
    for (round, &h) in horizons.iter().enumerate() {
        let base = (round * opts.pilot_replicas) as u64;
        let paths: Vec<PathOut> = (0..opts.pilot_replicas)
            .into_par_iter()
            .map(|i| {
                let mut rng = replica_rng(pilot_seed, base + i as u64);
                process.sample_path(&law, h, 0, &mut rng)
            })
            .collect();
        law = process.refit(&law, &paths);
    }
    law
}

fn run(process: &AdditiveProcess, opts: &EstimatorOptions) -> Result<Estimate> {
    let proposal = if opts.importance_sampling { fit_proposal(process, opts) } else { process.nominal };
    let burn_in = opts.burn_in();
    let outs: Vec<(f64, f64)> = (0..opts.replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(opts.seed, i as u64);
            let p = process.sample_path(&proposal, opts.blocks, burn_in, &mut rng);
            (p.logw, p.logw_burn)
        })
        .collect();
    let (full, burn): (Vec<f64>, Vec<f64>) = outs.into_iter().unzip();
    if full.iter().chain(&burn).any(|v| !v.is_finite()) {
        return Err(Error::Overflow("non-finite path weight".into()));
    }

    let n = full.len() as f64;
    let (log_full, var_full, ess) = log_mean_exp(&full);
    let (log_burn, var_burn, _) = log_mean_exp(&burn);
    let cov = rel_covariance(&full, &burn);
    let var_ratio = ((var_full + var_burn - 2.0 * cov) / n).max(0.0);

    let span = process.tilt * (opts.blocks - burn_in) as f64;
    let value = (log_full - log_burn) / span;
    let std_error = var_ratio.sqrt() / span.abs();
    let whole = process.tilt * opts.blocks as f64;
    let mut warnings = Vec::new();
    if ess < 0.01 * n {
        warnings.push(format!("weight degeneracy: effective sample size {ess:.1} of {n}"));
    }
    Ok(Estimate {
        value,
        std_error,
        ci_halfwidth: 1.96 * std_error,
        plain_value: log_full / whole,
        plain_std_error: (var_full / n).sqrt() / whole.abs(),
        horizon: opts.blocks,
        burn_in,
        replicas: opts.replicas,
        effective_sample_size: ess,
        warnings,
    })
}

/// `(log mean exp(v), relative variance of exp(v), Kish ESS)`.
fn log_mean_exp(v: &[f64]) -> (f64, f64, f64) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = v.len() as f64;
    let xs: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let mean = xs.iter().sum::<f64>() / n;
    let sq = xs.iter().map(|x| x * x).sum::<f64>();
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let ess = (mean * n).powi(2) / sq;
    (m + mean.ln(), var / (mean * mean), ess)
}

/// Covariance of `exp(a)` and `exp(b)` relative to their means.
fn rel_covariance(a: &[f64], b: &[f64]) -> f64 {
    let ma = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mb = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = a.len() as f64;
    let xa: Vec<f64> = a.iter().map(|x| (x - ma).exp()).collect();
    let xb: Vec<f64> = b.iter().map(|x| (x - mb).exp()).collect();
    let mean_a = xa.iter().sum::<f64>() / n;
    let mean_b = xb.iter().sum::<f64>() / n;
    let cov = xa.iter().zip(&xb).map(|(x, y)| (x - mean_a) * (y - mean_b)).sum::<f64>() / (n - 1.0);
    cov / (mean_a * mean_b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_and_silent_source_are_exact() {
        let th = QosExponent::new(1.0).unwrap();
        let c = estimate_effective_capacity(&ChannelSpec::new(10.0, 0.0, 2.0).unwrap(), th, 100, 10, 1).unwrap();
        assert_eq!(c.value, 0.0);
        let s = SourceModel::Mmps { alpha: 1.0, beta: 1.0, lambda_on: 0.0 };
        assert_eq!(estimate_effective_bandwidth(&s, th, 100, 10, 1).unwrap().value, 0.0);
    }

    #[test]
    fn options_are_validated() {
        let th = QosExponent::new(1.0).unwrap();
        let spec = ChannelSpec::new(10.0, 3.0, 2.0).unwrap();
        let mut o = EstimatorOptions::new(100, 10, 1);
        o.burn_in = Some(100);
        assert!(estimate_effective_capacity_with(&spec, th, &o).is_err());
        assert!(estimate_effective_capacity(&spec, th, 0, 10, 1).is_err());
    }

    #[test]
    fn iid_source_recovers_bernoulli_mgf() {
        // p11 = p22 = 0.5: i.i.d. arrivals of 2 bits w.p. 1/2
        let s = SourceModel::Dtms { p11: 0.5, p22: 0.5, lambda_on: 2.0 };
        let th = QosExponent::new(1.0).unwrap();
        let est = estimate_effective_bandwidth(&s, th, 200, 20_000, 11).unwrap();
        let want = (0.5 * (1.0 + 2f64.exp())).ln();
        assert!((est.value - want).abs() <= 4.0 * est.std_error + 1e-9, "{est:?}");
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let s = SourceModel::Mfs { alpha: 1.0, beta: 1.0, lambda_on: 2.0 };
        let th = QosExponent::new(0.5).unwrap();
        let a = estimate_effective_bandwidth(&s, th, 50, 2000, 5).unwrap();
        let b = estimate_effective_bandwidth(&s, th, 50, 2000, 5).unwrap();
        assert_eq!(a, b);
    }
}
