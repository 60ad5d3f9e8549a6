//! Command-line front end.
//!
//! Every point query prints one JSON record on standard output that echoes
//! the resolved parameters next to the result. Parameters resolve as
//! command-line flag, then `--config` JSON file, then built-in default.
//! Failures print a JSON error record on standard error and exit with
//! 2 (usage), 3 (infeasible or no solution) or 4 (numerical failure).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::capacity::{effective_capacity, QosExponent};
use crate::channel::{derive_chain, ChannelSpec};
use crate::error::{Error, Result};
use crate::matching::{max_arrival, max_arrival_dtms_simplified, MatchResult};
use crate::optimizer::optimize_rate;
use crate::qos::{delay_violation, operating_theta, required_theta, DelayModel};
use crate::sim::{self, Discretization, SimConfig, SimReport};
use crate::source::{effective_bandwidth, mean_rate, steady_state_on, BurstinessParam, ChainShape, SourceFamily, SourceModel};
use crate::sweep::{self, format_sig, Experiment, Grid, OutputFormat, SweepAxis, SweepParams, SweepSpec};

#[derive(Debug, Parser)]
#[command(name = "qosprov", version, about = "QoS provisioning over a two-state Markov fading channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Effective capacity of the ON/OFF link.
    Capacity,
    /// Effective bandwidth of a source.
    Bandwidth,
    /// Maximum supportable arrival rate of a source on the link.
    Match,
    /// Rate that maximizes effective capacity.
    Optimize,
    /// Delay-violation probability, or the QoS exponent meeting `--epsilon`.
    Delay,
    /// Monte Carlo queue simulation or effective capacity/bandwidth estimate.
    Simulate,
    /// Regenerate a figure's data table.
    Sweep {
        /// fig2_rate_sweep, fig3_kappa_sweep, fig4_gamma_sweep, fig5_theta_sweep,
        /// fig6_delay_tradeoff, fig7_arrival_vs_pon or custom.
        experiment: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Estimator {
    Queue,
    Capacity,
    Bandwidth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DiscretizationArg {
    BlockStart,
    ExactOccupancy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum FamilyArg {
    Dtms,
    Mfs,
    Mmps,
}

impl From<FamilyArg> for SourceFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Dtms => SourceFamily::Dtms,
            FamilyArg::Mfs => SourceFamily::Mfs,
            FamilyArg::Mmps => SourceFamily::Mmps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum AxisArg {
    Rate,
    Gamma,
    Kappa,
    Theta,
    POn,
}

impl From<AxisArg> for SweepAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Rate => SweepAxis::Rate,
            AxisArg::Gamma => SweepAxis::Gamma,
            AxisArg::Kappa => SweepAxis::Kappa,
            AxisArg::Theta => SweepAxis::Theta,
            AxisArg::POn => SweepAxis::POn,
        }
    }
}

/// Flags shared by all subcommands. The config file uses the same keys in
/// snake_case (`gamma_db`, `block_duration`, ...), plus `grid`,
/// `gamma_series`, `theta_series` and `p_on_series`.
#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct Flags {
    /// Average SNR, linear.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Average SNR in dB.
    #[arg(long, global = true)]
    gamma_db: Option<f64>,
    /// Fixed transmission rate R (bits/block); omitted means optimized where applicable.
    #[arg(long, global = true)]
    rate: Option<f64>,
    /// Channel memory decay rate (1/block).
    #[arg(long, global = true)]
    kappa: Option<f64>,
    /// QoS exponent.
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true, value_enum)]
    source: Option<FamilyArg>,
    #[arg(long, global = true)]
    p11: Option<f64>,
    #[arg(long, global = true)]
    p22: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// DTMS burstiness (p11 = 1 - s, p22 = s).
    #[arg(long, global = true)]
    s: Option<f64>,
    /// Source ON probability when no chain parameters are given.
    #[arg(long, global = true)]
    p_on: Option<f64>,
    /// alpha + beta for MFS/MMPS sources built from `--p-on`.
    #[arg(long, global = true)]
    rate_sum: Option<f64>,
    /// ON-state arrival rate (bits/block).
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    zeta: Option<f64>,
    /// Delay threshold (blocks).
    #[arg(long, global = true)]
    d: Option<f64>,
    /// Effective bandwidth for `delay`, bypassing the source model.
    #[arg(long, global = true)]
    bandwidth: Option<f64>,
    /// Target violation probability for `delay`.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Average arrival rate held fixed in the P_ON tradeoff panel.
    #[arg(long, global = true)]
    arrival_avg: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    blocks: Option<usize>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    #[arg(long, global = true)]
    warmup: Option<usize>,
    #[arg(long, global = true)]
    block_duration: Option<f64>,
    #[arg(long, global = true, value_enum)]
    discretization: Option<DiscretizationArg>,
    #[arg(long, global = true, value_enum)]
    estimator: Option<Estimator>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated families for sweeps.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    families: Option<Vec<FamilyArg>>,
    #[arg(long, global = true, value_enum)]
    axis: Option<AxisArg>,
    /// Explicit comma-separated grid for sweeps.
    #[arg(long, global = true, value_delimiter = ',', num_args = 0..)]
    grid: Option<Vec<f64>>,
    /// Log grid `lo,hi,n`.
    #[arg(long, global = true, value_delimiter = ',')]
    grid_log: Option<Vec<f64>>,
    /// Linear grid `lo,hi,n`.
    #[arg(long, global = true, value_delimiter = ',')]
    grid_linear: Option<Vec<f64>>,
    /// Stepped grid `start,stop,step`.
    #[arg(long, global = true, value_delimiter = ',')]
    grid_step: Option<Vec<f64>>,
    #[arg(skip)]
    experiment: Option<String>,
    #[arg(skip)]
    grid_spec: Option<Grid>,
    #[arg(skip)]
    gamma_series: Option<Vec<f64>>,
    #[arg(skip)]
    theta_series: Option<Vec<f64>>,
    #[arg(skip)]
    p_on_series: Option<Vec<f64>>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Flags {
    /// Fills unset fields from `config`.
    fn or(mut self, config: Flags) -> Flags {
        // an SNR given in either unit on the command line shadows both config keys
        let cli_gamma = self.gamma.is_some() || self.gamma_db.is_some();
        merge_fields!(self, config;
            rate, kappa, theta, source, p11, p22, alpha, beta, s, p_on, rate_sum, lambda, zeta, d,
            bandwidth, epsilon, arrival_avg, seed, blocks, replicas, warmup, block_duration,
            discretization, estimator, out, format, families, axis, grid, grid_log, grid_linear,
            grid_step, experiment, grid_spec, gamma_series, theta_series, p_on_series);
        if !cli_gamma {
            self.gamma = config.gamma;
            self.gamma_db = config.gamma_db;
        }
        self
    }

    fn gamma(&self) -> Result<f64> {
        match (self.gamma, self.gamma_db) {
            (Some(_), Some(_)) => Err(Error::invalid("give either --gamma or --gamma-db, not both")),
            (Some(g), None) => Ok(g),
            (None, Some(db)) => Ok(10f64.powf(db / 10.0)),
            (None, None) => Ok(DEFAULT_GAMMA),
        }
    }

    fn kappa(&self) -> f64 {
        self.kappa.unwrap_or(DEFAULT_KAPPA)
    }

    fn theta(&self) -> Result<QosExponent> {
        QosExponent::new(self.theta.unwrap_or(DEFAULT_THETA))
    }

    fn zeta(&self) -> f64 {
        self.zeta.unwrap_or(1.0)
    }

    fn channel(&self) -> Result<ChannelSpec> {
        ChannelSpec::new(self.gamma()?, self.rate.unwrap_or(DEFAULT_RATE), self.kappa())
    }

    fn family(&self) -> SourceFamily {
        self.source.map_or(SourceFamily::Dtms, Into::into)
    }

    /// Source model from whichever chain parameters were given.
    fn source_model(&self) -> Result<SourceModel> {
        let family = self.family();
        let lambda = self.lambda.unwrap_or(DEFAULT_LAMBDA);
        match family {
            SourceFamily::Dtms => match (self.p11, self.p22, self.s) {
                (Some(p11), Some(p22), None) => SourceModel::new(family, ChainShape::Discrete { p11, p22 }, lambda),
                (None, None, Some(s)) => Ok(BurstinessParam::new(s)?.source(lambda)),
                (None, None, None) => self.p_on_source(family, lambda),
                _ => Err(Error::invalid("DTMS takes either both --p11 and --p22, or --s")),
            },
            _ => match (self.alpha, self.beta) {
                (Some(alpha), Some(beta)) => SourceModel::new(family, ChainShape::Continuous { alpha, beta }, lambda),
                (None, None) => self.p_on_source(family, lambda),
                _ => Err(Error::invalid("MFS/MMPS take both --alpha and --beta")),
            },
        }
    }

    fn p_on_source(&self, family: SourceFamily, lambda: f64) -> Result<SourceModel> {
        SourceModel::with_p_on(family, self.p_on.unwrap_or(0.5), self.rate_sum.unwrap_or(DEFAULT_RATE_SUM), lambda)
    }

    fn format(&self) -> OutputFormat {
        match self.format {
            Some(FormatArg::Json) => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }

    fn grid(&self) -> Result<Option<Grid>> {
        let triple = |v: &[f64], what: &str| -> Result<[f64; 3]> {
            <[f64; 3]>::try_from(v).map_err(|_| Error::invalid(format!("--{what} takes three comma-separated numbers")))
        };
        let count = |x: f64| -> Result<usize> {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(Error::invalid(format!("grid point count must be a non-negative integer, got {x}")))
            }
        };
        let mut grids = Vec::new();
        if let Some(v) = &self.grid {
            grids.push(Grid::List(v.clone()));
        }
        if let Some(v) = &self.grid_log {
            let [lo, hi, n] = triple(v, "grid-log")?;
            grids.push(Grid::Log { lo, hi, n: count(n)? });
        }
        if let Some(v) = &self.grid_linear {
            let [lo, hi, n] = triple(v, "grid-linear")?;
            grids.push(Grid::Linear { lo, hi, n: count(n)? });
        }
        if let Some(v) = &self.grid_step {
            let [start, stop, step] = triple(v, "grid-step")?;
            grids.push(Grid::Step { start, stop, step });
        }
        match grids.len() {
            0 => Ok(self.grid_spec.clone()),
            1 => Ok(grids.pop()),
            _ => Err(Error::invalid("give at most one of --grid, --grid-log, --grid-linear, --grid-step")),
        }
    }
}

const DEFAULT_GAMMA: f64 = 10.0;
const DEFAULT_KAPPA: f64 = 50.0;
const DEFAULT_THETA: f64 = 1.0;
const DEFAULT_RATE: f64 = 3.0;
const DEFAULT_LAMBDA: f64 = 1.0;
const DEFAULT_RATE_SUM: f64 = 10.0;
const DEFAULT_SEED: u64 = 1;

fn load_config(path: &Path) -> Result<Flags> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| Error::invalid(format!("config {}: {e}", path.display()));
    let mut map: serde_json::Map<String, Value> = serde_json::from_str(&text).map_err(bad)?;
    if map.contains_key("config") {
        return Err(Error::invalid("config files cannot include other config files"));
    }
    // `grid` may be a plain list or a structured grid object
    let grid_spec = match map.remove("grid") {
        None => None,
        Some(Value::Array(a)) => {
            map.insert("grid".into(), Value::Array(a));
            None
        }
        Some(v) => Some(serde_json::from_value::<Grid>(v).map_err(bad)?),
    };
    map.remove("grid_spec");
    let mut flags: Flags = serde_json::from_value(Value::Object(map)).map_err(bad)?;
    flags.grid_spec = grid_spec;
    Ok(flags)
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let code = e.exit_code();
            let _ = writeln!(err, "{}", json!({ "error": e.to_string(), "exit_code": code }));
            code
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn emit(out: &mut dyn Write, record: Value) -> Result<()> {
    writeln!(out, "{record}")?;
    Ok(())
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let flags = match cli.flags.config.clone() {
        Some(path) => {
            let cfg = load_config(&path)?;
            cli.flags.or(cfg)
        }
        None => cli.flags,
    };
    match cli.command {
        Command::Capacity => capacity(&flags, out),
        Command::Bandwidth => bandwidth(&flags, out),
        Command::Match => matching(&flags, out),
        Command::Optimize => optimize(&flags, out),
        Command::Delay => delay(&flags, out),
        Command::Simulate => simulate(&flags, out),
        Command::Sweep { experiment } => run_sweep(&flags, experiment, out),
    }
}

fn channel_json(spec: &ChannelSpec) -> Value {
    json!({ "gamma": spec.gamma, "rate": spec.rate, "kappa": spec.kappa })
}

fn capacity(flags: &Flags, out: &mut dyn Write) -> Result<()> {
    let spec = flags.channel()?;
    let theta = flags.theta()?;
    let c = effective_capacity(&spec, theta)?;
    let chain = derive_chain(&spec)?;
    emit(
        out,
        json!({
            "command": "capacity",
            "params": { "gamma": spec.gamma, "rate": spec.rate, "kappa": spec.kappa, "theta": theta.get() },
            "value": c.value,
            "xi": c.xi,
            "upper_bound": c.upper_bound,
            "nu": chain.nu,
            "mu": chain.mu,
            "p_on": chain.p_on,
        }),
    )
}

fn bandwidth(flags: &Flags, out: &mut dyn Write) -> Result<()> {
    let source = flags.source_model()?;
    let theta = flags.theta()?;
    emit(
        out,
        json!({
            "command": "bandwidth",
            "params": { "source": source, "theta": theta.get() },
            "value": effective_bandwidth(&source, theta)?,
            "mean_rate": mean_rate(&source)?,
            "p_on": steady_state_on(&source)?,
        }),
    )
}

fn link(flags: &Flags, theta: QosExponent) -> Result<(ChannelSpec, bool)> {
    let gamma = flags.gamma()?;
    match flags.rate {
        Some(r) => Ok((ChannelSpec::new(gamma, r, flags.kappa())?, false)),
        None => {
            let o = optimize_rate(gamma, flags.kappa(), theta)?;
            Ok((ChannelSpec::new(gamma, o.r_star, flags.kappa())?, true))
        }
    }
}

fn matching(flags: &Flags, out: &mut dyn Write) -> Result<()> {
    let theta = flags.theta()?;
    let (spec, optimized) = link(flags, theta)?;
    let c_e = effective_capacity(&spec, theta)?.value;
    let shape = flags.source_model()?;
    let result: MatchResult = match (shape.family(), flags.s) {
        (SourceFamily::Dtms, Some(s)) if flags.p11.is_none() => max_arrival_dtms_simplified(BurstinessParam::new(s)?, c_e, theta)?,
        _ => max_arrival(&shape, c_e, theta)?,
    };
    emit(
        out,
        json!({
            "command": "match",
            "params": { "channel": channel_json(&spec), "rate_optimized": optimized, "theta": theta.get(), "source": shape.with_lambda(0.0) },
            "c_e": c_e,
            "result": result,
        }),
    )
}

fn optimize(flags: &Flags, out: &mut dyn Write) -> Result<()> {
    let gamma = flags.gamma()?;
    let theta = flags.theta()?;
    let o = optimize_rate(gamma, flags.kappa(), theta)?;
    emit(
        out,
        json!({
            "command": "optimize",
            "params": { "gamma": gamma, "kappa": flags.kappa(), "theta": theta.get() },
            "r_star": o.r_star,
            "c_e_star": o.c_e_star,
            "foc_residual": o.foc_residual,
            "foc_scale": o.foc_scale,
            "bracket": [o.bracket.0, o.bracket.1],
            "fallback": o.fallback,
        }),
    )
}

fn delay(flags: &Flags, out: &mut dyn Write) -> Result<()> {
    let zeta = flags.zeta();
    let d = flags.d.unwrap_or(0.0);
    if let Some(epsilon) = flags.epsilon {
        let spec = flags.channel()?;
        let theta = required_theta(&spec, d, epsilon, zeta)?;
        return emit(
            out,
            json!({
                "command": "delay",
                "params": { "channel": channel_json(&spec), "d": d, "epsilon": epsilon, "zeta": zeta },
                "required_theta": theta.get(),
                "c_e": effective_capacity(&spec, theta)?.value,
            }),
        );
    }
    if let Some(a) = flags.bandwidth {
        let theta = flags.theta()?;
        let model = DelayModel::new(zeta, theta, a)?;
        return emit(
            out,
            json!({
                "command": "delay",
                "params": { "theta": theta.get(), "bandwidth": a, "zeta": zeta, "d": d },
                "violation": delay_violation(&model, d)?,
                "decay_rate": model.decay_rate(),
            }),
        );
    }
    let spec = flags.channel()?;
    if flags.source.is_some() || flags.lambda.is_some() {
        // operating point of the given source on the given link
        let source = flags.source_model()?;
        let theta = operating_theta(&spec, &source)?;
        let a = effective_bandwidth(&source, theta)?;
        let model = DelayModel::new(zeta, theta, a)?;
        return emit(
            out,
            json!({
                "command": "delay",
                "params": { "channel": channel_json(&spec), "source": source, "zeta": zeta, "d": d },
                "operating_theta": theta.get(),
                "bandwidth": a,
                "violation": delay_violation(&model, d)?,
                "decay_rate": model.decay_rate(),
            }),
        );
    }
    // source matched to the link: a(theta) = C_E(theta)
    let theta = flags.theta()?;
    let c_e = effective_capacity(&spec, theta)?.value;
    let model = DelayModel::new(zeta, theta, c_e)?;
    emit(
        out,
        json!({
            "command": "delay",
            "params": { "channel": channel_json(&spec), "theta": theta.get(), "zeta": zeta, "d": d },
            "bandwidth": c_e,
            "violation": delay_violation(&model, d)?,
            "decay_rate": model.decay_rate(),
        }),
    )
}

fn tail_csv(report: &SimReport) -> String {
    let mut s = String::from("tail,level,prob,std_error,count\n");
    for (name, tail) in [("delay", &report.delay_tail), ("queue", &report.queue_tail)] {
        for p in tail {
            s.push_str(&format!(
                "{name},{},{},{},{}\n",
                format_sig(p.level, 12),
                format_sig(p.prob, 12),
                format_sig(p.std_error, 12),
                p.count
            ));
        }
    }
    s
}

fn simulate(flags: &Flags, out: &mut dyn Write) -> Result<()> {
    let seed = flags.seed.unwrap_or(DEFAULT_SEED);
    let theta = flags.theta()?;
    match flags.estimator.unwrap_or(Estimator::Queue) {
        Estimator::Capacity => {
            let spec = flags.channel()?;
            let mut opts = sim::EstimatorOptions::new(flags.blocks.unwrap_or(500), flags.replicas.unwrap_or(100_000), seed);
            opts.burn_in = flags.warmup;
            let est = sim::estimate_effective_capacity_with(&spec, theta, &opts)?;
            let exact = effective_capacity(&spec, theta)?.value;
            emit(
                out,
                json!({
                    "command": "simulate",
                    "params": { "estimator": "capacity", "channel": channel_json(&spec), "theta": theta.get(), "options": opts },
                    "estimate": est,
                    "closed_form": exact,
                }),
            )
        }
        Estimator::Bandwidth => {
            let source = flags.source_model()?;
            let mut opts = sim::EstimatorOptions::new(flags.blocks.unwrap_or(200), flags.replicas.unwrap_or(200_000), seed);
            opts.burn_in = flags.warmup;
            let est = sim::estimate_effective_bandwidth_with(&source, theta, &opts)?;
            emit(
                out,
                json!({
                    "command": "simulate",
                    "params": { "estimator": "bandwidth", "source": source, "theta": theta.get(), "options": opts },
                    "estimate": est,
                    "closed_form": effective_bandwidth(&source, theta)?,
                }),
            )
        }
        Estimator::Queue => {
            let spec = flags.channel()?;
            let source = flags.source_model()?;
            let mut cfg = SimConfig::new(spec, source, flags.blocks.unwrap_or(100_000), flags.replicas.unwrap_or(10), seed);
            if let Some(w) = flags.warmup {
                cfg.warmup = w;
            }
            if let Some(t) = flags.block_duration {
                cfg.block_duration = t;
            }
            if let Some(DiscretizationArg::ExactOccupancy) = flags.discretization {
                cfg.discretization = Discretization::ExactOccupancy;
            }
            let report = sim::simulate(&cfg)?;
            let theory = operating_theta(&spec, &source).ok().map(|th| {
                let c = effective_capacity(&spec, th).map(|c| c.value).unwrap_or(f64::NAN);
                json!({ "operating_theta": th.get(), "decay_rate": th.get() * c })
            });
            if let Some(path) = &flags.out {
                let text = match flags.format() {
                    OutputFormat::Csv => tail_csv(&report),
                    OutputFormat::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
                };
                std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            emit(out, json!({ "command": "simulate", "params": cfg, "report": report, "theory": theory }))
        }
    }
}

fn sweep_spec(flags: &Flags, experiment: Option<String>) -> Result<SweepSpec> {
    let name = experiment
        .or_else(|| flags.experiment.clone())
        .ok_or_else(|| Error::invalid("sweep needs an experiment name"))?;
    let experiment = Experiment::parse(&name).ok_or_else(|| Error::invalid(format!("unknown experiment {name}")))?;
    let defaults = SweepParams::default();
    let params = SweepParams {
        gamma: flags.gamma()?,
        kappa: flags.kappa(),
        theta: flags.theta.unwrap_or(defaults.theta),
        rate: flags.rate,
        p_on: flags.p_on.unwrap_or(defaults.p_on),
        rate_sum: flags.rate_sum.unwrap_or(defaults.rate_sum),
        d: flags.d.unwrap_or(defaults.d),
        zeta: flags.zeta.unwrap_or(defaults.zeta),
        arrival_avg: flags.arrival_avg.unwrap_or(defaults.arrival_avg),
        families: flags.families.as_ref().map_or(defaults.families, |f| f.iter().map(|&x| x.into()).collect()),
        gamma_series: flags.gamma_series.clone(),
        theta_series: flags.theta_series.clone(),
        p_on_series: flags.p_on_series.clone(),
    };
    Ok(SweepSpec { experiment, params, grid: flags.grid()?, axis: flags.axis.map(Into::into), format: flags.format() })
}

fn run_sweep(flags: &Flags, experiment: Option<String>, out: &mut dyn Write) -> Result<()> {
    let spec = sweep_spec(flags, experiment)?;
    match &flags.out {
        Some(path) => {
            let result = sweep::write_sweep(&spec, path)?;
            emit(
                out,
                json!({
                    "command": "sweep",
                    "params": spec,
                    "output": path.display().to_string(),
                    "rows": result.table.rows.len(),
                }),
            )
        }
        None => {
            let result = sweep::run_sweep(&spec)?;
            out.write_all(sweep::render(&result.table, spec.format).as_bytes())?;
            match result.failures.first() {
                None => Ok(()),
                Some(f) => Err(Error::NoSolution(format!(
                    "{} grid points failed; first at {}: {}",
                    result.failures.len(),
                    f.point,
                    f.error
                ))),
            }
        }
    }
}
