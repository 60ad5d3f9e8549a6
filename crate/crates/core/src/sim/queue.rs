//! Slotted FIFO queue fed by a Markov source and drained by the ON/OFF link.
//!
//! Per block `k`: `Q_{k+1} = max(0, Q_k + A_k - S_k)`. The delay of block
//! `k`'s arrivals is the virtual waiting time
//! `D_k = min{D >= 0 : S_k + ... + S_{k+D-1} >= Q_k}`. Targets
//! `C_k + Q_k` (with `C_k` the service delivered before block `k`) never
//! decrease, so pending arrivals resolve in FIFO order with one pass.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{derive_chain, discretize, BlockKernel, ChannelSpec, OFF, ON};
use crate::error::{Error, Result};
use crate::sim::paths::{bernoulli, initial_state, poisson_sample, replica_rng, OnOffCtmc};
use crate::source::{chain_p_on, SourceModel};

const EMPTY_QUEUE: f64 = 1e-9;
const SERVICE_TOL: f64 = 1e-6;
/// Minimum pooled count for a tail point to enter the decay fit.
const FIT_MIN_COUNT: u64 = 30;
/// Upper end of the fitted band; the body of the distribution is excluded.
const FIT_MAX_PROB: f64 = 0.1;

/// How continuous-time service and arrivals are mapped onto blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discretization {
    /// The state at the start of each block holds for the whole block.
    #[default]
    BlockStart,
    /// Service and fluid arrivals follow the exact ON time inside each block.
    ExactOccupancy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub channel: ChannelSpec,
    pub source: SourceModel,
    pub blocks: usize,
    pub warmup: usize,
    pub replicas: usize,
    pub seed: u64,
    pub block_duration: f64,
    #[serde(default)]
    pub discretization: Discretization,
}

impl SimConfig {
    pub fn new(channel: ChannelSpec, source: SourceModel, blocks: usize, replicas: usize, seed: u64) -> Self {
        SimConfig {
            channel,
            source,
            blocks,
            warmup: blocks / 10,
            replicas,
            seed,
            block_duration: 1.0,
            discretization: Discretization::BlockStart,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.source.validate()?;
        if self.blocks == 0 || self.replicas == 0 {
            return Err(Error::invalid("blocks and replicas must be positive"));
        }
        if self.warmup >= self.blocks {
            return Err(Error::invalid(format!("warmup {} must be below blocks {}", self.warmup, self.blocks)));
        }
        if !(self.block_duration > 0.0 && self.block_duration.is_finite()) {
            return Err(Error::invalid(format!("block duration must be positive, got {}", self.block_duration)));
        }
        Ok(())
    }
}

/// One point of an empirical complementary distribution `Pr{X >= level}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub level: f64,
    pub prob: f64,
    /// Standard error across replicas.
    pub std_error: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    /// Mean arrivals per block after warmup.
    pub mean_arrival: f64,
    /// Mean service offered per block after warmup.
    pub mean_service: f64,
    pub channel_on_fraction: f64,
    pub source_on_fraction: f64,
    /// Fraction of post-warmup blocks that start with a non-empty buffer.
    pub zeta_hat: f64,
    pub delay_samples: u64,
    /// Arrivals still waiting when the horizon ended.
    pub censored: u64,
    /// `Pr{D >= d}` for integer `d` in blocks.
    pub delay_tail: Vec<TailPoint>,
    /// `Pr{Q >= q}` with `q` in multiples of one ON block of service.
    pub queue_tail: Vec<TailPoint>,
    pub queue_unit: f64,
    /// Least-squares decay of `ln Pr{D >= d}` per block.
    pub fitted_decay: Option<f64>,
    pub decay_ci_halfwidth: Option<f64>,
    /// Delay range `[lo, hi]` used by the fit.
    pub fit_band: Option<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl SimReport {
    /// Tail points inside the fitted band.
    pub fn fitted_points(&self) -> impl Iterator<Item = &TailPoint> {
        let band = self.fit_band;
        self.delay_tail
            .iter()
            .filter(move |p| band.is_some_and(|(lo, hi)| p.level >= lo && p.level <= hi))
    }
}

#[derive(Debug, Clone, Default)]
struct ReplicaOut {
    delay_hist: Vec<u64>,
    queue_hist: Vec<u64>,
    delay_samples: u64,
    censored: u64,
    blocks: u64,
    non_empty: u64,
    arrivals: f64,
    service: f64,
    channel_on: f64,
    source_on: f64,
}

fn bump(hist: &mut Vec<u64>, bin: usize) {
    if hist.len() <= bin {
        hist.resize(bin + 1, 0);
    }
    hist[bin] += 1;
}

enum SourceStepper {
    Discrete { p: [[f64; 2]; 2] },
    Continuous { ctmc: OnOffCtmc, kernel: BlockKernel, poisson: bool },
}

struct Stepper {
    channel: OnOffCtmc,
    channel_kernel: BlockKernel,
    source: SourceStepper,
    rate: f64,
    lambda: f64,
    t: f64,
    mode: Discretization,
}

impl Stepper {
    fn new(cfg: &SimConfig) -> Result<Self> {
        let chain = derive_chain(&cfg.channel)?;
        let t = cfg.block_duration;
        let source = match cfg.source {
            SourceModel::Dtms { p11, p22, .. } => SourceStepper::Discrete { p: [[p11, 1.0 - p11], [1.0 - p22, p22]] },
            SourceModel::Mfs { alpha, beta, .. } | SourceModel::Mmps { alpha, beta, .. } => {
                let ctmc = OnOffCtmc { up: alpha, down: beta };
                SourceStepper::Continuous {
                    ctmc,
                    kernel: ctmc_kernel(&ctmc, t),
                    poisson: matches!(cfg.source, SourceModel::Mmps { .. }),
                }
            }
        };
        Ok(Stepper {
            channel: OnOffCtmc { up: chain.nu, down: chain.mu },
            channel_kernel: discretize(&chain, t)?,
            source,
            rate: cfg.channel.rate,
            lambda: cfg.source.lambda_on(),
            t,
            mode: cfg.discretization,
        })
    }

    /// Service of the block starting in `state`; returns `(S, ON time, next state)`.
    fn service<R: Rng>(&self, rng: &mut R, state: usize) -> (f64, f64, usize) {
        match self.mode {
            Discretization::BlockStart => {
                let on = if state == ON { self.t } else { 0.0 };
                let next = if bernoulli(rng, self.channel_kernel.p[state][ON]) { ON } else { OFF };
                (self.rate * on, on, next)
            }
            Discretization::ExactOccupancy => {
                let (next, on) = self.channel.advance(rng, state, self.t);
                (self.rate * on, on, next)
            }
        }
    }

    /// Arrivals of the block starting in `state`; returns `(A, ON time, next state)`.
    fn arrivals<R: Rng>(&self, rng: &mut R, state: usize) -> (f64, f64, usize) {
        match &self.source {
            SourceStepper::Discrete { p } => {
                let on = if state == ON { self.t } else { 0.0 };
                let next = if bernoulli(rng, p[state][ON]) { ON } else { OFF };
                (self.lambda * on, on, next)
            }
            SourceStepper::Continuous { ctmc, kernel, poisson } => {
                let (next, on) = match self.mode {
                    Discretization::BlockStart => {
                        let on = if state == ON { self.t } else { 0.0 };
                        (if bernoulli(rng, kernel.p[state][ON]) { ON } else { OFF }, on)
                    }
                    Discretization::ExactOccupancy => ctmc.advance(rng, state, self.t),
                };
                let a = if *poisson { poisson_sample(rng, self.lambda * on) as f64 } else { self.lambda * on };
                (a, on, next)
            }
        }
    }
}

/// Exact kernel of a two-state chain over duration `t`.
fn ctmc_kernel(c: &OnOffCtmc, t: f64) -> BlockKernel {
    let total = c.up + c.down;
    let mix = -(-total * t).exp_m1();
    let p_on = c.up / total;
    let up = p_on * mix;
    let down = (1.0 - p_on) * mix;
    BlockKernel { p: [[1.0 - up, up], [down, 1.0 - down]], block_duration: t }
}

fn run_replica(cfg: &SimConfig, stepper: &Stepper, queue_unit: f64, replica: u64) -> ReplicaOut {
    let mut rng = replica_rng(cfg.seed, replica);
    let chain = derive_chain(&cfg.channel).expect("validated");
    let mut ch = initial_state(&mut rng, chain.p_on);
    let mut src = initial_state(&mut rng, chain_p_on(&cfg.source.shape()));
    let mut out = ReplicaOut::default();
    let mut q = 0.0f64;
    let mut served = 0.0f64;
    let mut pending: VecDeque<(usize, f64)> = VecDeque::new();

    for k in 0..cfg.blocks {
        let measured = k >= cfg.warmup;
        let (a, src_on, src_next) = stepper.arrivals(&mut rng, src);
        let (s, ch_on, ch_next) = stepper.service(&mut rng, ch);
        src = src_next;
        ch = ch_next;

        if measured {
            out.blocks += 1;
            out.arrivals += a;
            out.service += s;
            out.channel_on += ch_on;
            out.source_on += src_on;
            if q > EMPTY_QUEUE {
                out.non_empty += 1;
            }
            bump(&mut out.queue_hist, (q / queue_unit).floor() as usize);
            if a > 0.0 {
                if q <= EMPTY_QUEUE {
                    out.delay_samples += 1;
                    bump(&mut out.delay_hist, 0);
                } else {
                    pending.push_back((k, served + q));
                }
            }
        }

        served += s;
        q = (q + a - s).max(0.0);
        while let Some(&(start, target)) = pending.front() {
            if served < target - SERVICE_TOL {
                break;
            }
            pending.pop_front();
            out.delay_samples += 1;
            bump(&mut out.delay_hist, k + 1 - start);
        }
    }
    out.censored = pending.len() as u64;
    out
}

/// Complementary cumulative counts `#{X >= i}` from a histogram.
fn survival(hist: &[u64]) -> Vec<u64> {
    let mut acc = 0;
    let mut s: Vec<u64> = hist
        .iter()
        .rev()
        .map(|c| {
            acc += c;
            acc
        })
        .collect();
    s.reverse();
    s
}

fn tail_points(hists: &[&[u64]], totals: &[u64], scale: f64) -> Vec<TailPoint> {
    let len = hists.iter().map(|h| h.len()).max().unwrap_or(0);
    let survs: Vec<Vec<u64>> = hists.iter().map(|h| survival(h)).collect();
    let total: u64 = totals.iter().sum();
    let r = hists.len() as f64;
    (0..len)
        .map(|i| {
            let count: u64 = survs.iter().map(|s| s.get(i).copied().unwrap_or(0)).sum();
            let prob = count as f64 / total.max(1) as f64;
            let std_error = if hists.len() >= 2 {
                let per: Vec<f64> = survs
                    .iter()
                    .zip(totals)
                    .map(|(s, &n)| s.get(i).copied().unwrap_or(0) as f64 / n.max(1) as f64)
                    .collect();
                let m = per.iter().sum::<f64>() / r;
                (per.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (r - 1.0) / r).sqrt()
            } else {
                (prob * (1.0 - prob) / total.max(1) as f64).sqrt()
            };
            TailPoint { level: i as f64 * scale, prob, std_error, count }
        })
        .collect()
}

/// Least-squares slope of `ln y` on `x`, returned as a positive decay.
fn log_linear_decay(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > 0.0).map(|&(x, y)| (x, y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// Runs `replicas` independent queue paths and pools their tails.
pub fn simulate(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let stepper = Stepper::new(cfg)?;
    let queue_unit = if cfg.channel.rate > 0.0 { cfg.channel.rate * cfg.block_duration } else { 1.0 };
    let outs: Vec<ReplicaOut> =
        (0..cfg.replicas).into_par_iter().map(|r| run_replica(cfg, &stepper, queue_unit, r as u64)).collect();

    let blocks: u64 = outs.iter().map(|o| o.blocks).sum();
    let nb = blocks as f64;
    let t = cfg.block_duration;
    let delay_totals: Vec<u64> = outs.iter().map(|o| o.delay_samples).collect();
    let block_totals: Vec<u64> = outs.iter().map(|o| o.blocks).collect();
    let delay_hists: Vec<&[u64]> = outs.iter().map(|o| o.delay_hist.as_slice()).collect();
    let queue_hists: Vec<&[u64]> = outs.iter().map(|o| o.queue_hist.as_slice()).collect();
    let delay_tail = tail_points(&delay_hists, &delay_totals, 1.0);
    let queue_tail = tail_points(&queue_hists, &block_totals, queue_unit);

    let mut warnings = Vec::new();
    let band: Vec<&TailPoint> =
        delay_tail.iter().filter(|p| p.count >= FIT_MIN_COUNT && p.prob <= FIT_MAX_PROB && p.prob > 0.0).collect();
    let fit_band = (band.len() >= 2).then(|| (band[0].level, band[band.len() - 1].level));
    let fitted_decay = log_linear_decay(&band.iter().map(|p| (p.level, p.prob)).collect::<Vec<_>>());
    if fitted_decay.is_none() {
        warnings.push("delay tail too short for a decay fit".to_string());
    }

    let decay_ci_halfwidth = fit_band.and_then(|(lo, hi)| {
        if outs.len() < 2 {
            return None;
        }
        let per: Vec<f64> = outs
            .iter()
            .filter_map(|o| {
                let s = survival(&o.delay_hist);
                let n = o.delay_samples.max(1) as f64;
                let pts: Vec<(f64, f64)> = (lo as usize..=hi as usize)
                    .filter_map(|i| s.get(i).map(|&c| (i as f64, c as f64 / n)))
                    .collect();
                log_linear_decay(&pts)
            })
            .collect();
        if per.len() < 2 {
            return None;
        }
        let r = per.len() as f64;
        let m = per.iter().sum::<f64>() / r;
        let sd = (per.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (r - 1.0)).sqrt();
        Some(1.96 * sd / r.sqrt())
    });

    let censored: u64 = outs.iter().map(|o| o.censored).sum();
    let mean_arrival = outs.iter().map(|o| o.arrivals).sum::<f64>() / nb;
    let mean_service = outs.iter().map(|o| o.service).sum::<f64>() / nb;
    if mean_arrival >= mean_service {
        warnings.push(format!("offered load {mean_arrival:.6} is not below service {mean_service:.6}: queue unstable"));
    }
    if censored > 0 {
        warnings.push(format!("{censored} arrival blocks still queued at the horizon were dropped"));
    }

    Ok(SimReport {
        config: cfg.clone(),
        mean_arrival,
        mean_service,
        channel_on_fraction: outs.iter().map(|o| o.channel_on).sum::<f64>() / (nb * t),
        source_on_fraction: outs.iter().map(|o| o.source_on).sum::<f64>() / (nb * t),
        zeta_hat: outs.iter().map(|o| o.non_empty).sum::<u64>() as f64 / nb,
        delay_samples: delay_totals.iter().sum(),
        censored,
        delay_tail,
        queue_tail,
        queue_unit,
        fitted_decay,
        decay_ci_halfwidth,
        fit_band,
        warnings,
    })
}
