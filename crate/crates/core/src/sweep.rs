//! Parameter sweeps that regenerate the figure data as CSV or JSON tables.
//!
//! Each experiment evaluates a grid (in parallel, rows kept in grid order)
//! and produces a [`Table`]. Points that fail are collected instead of
//! aborting the sweep; [`write_sweep`] flushes the rows that succeeded and a
//! `<out>.failures.json` manifest next to them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::capacity::{capacity_upper_bound, effective_capacity, QosExponent};
use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::matching::max_arrival;
use crate::numeric::{linspace, logspace};
use crate::optimizer::optimize_rate;
use crate::qos::{tradeoff_curve, RateMode, TradeoffAxis, TradeoffConfig};
use crate::source::{SourceFamily, SourceModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Fig2RateSweep,
    Fig3KappaSweep,
    Fig4GammaSweep,
    Fig5ThetaSweep,
    Fig6DelayTradeoff,
    Fig7ArrivalVsPon,
    Custom,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Fig2RateSweep,
        Experiment::Fig3KappaSweep,
        Experiment::Fig4GammaSweep,
        Experiment::Fig5ThetaSweep,
        Experiment::Fig6DelayTradeoff,
        Experiment::Fig7ArrivalVsPon,
        Experiment::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig2RateSweep => "fig2_rate_sweep",
            Experiment::Fig3KappaSweep => "fig3_kappa_sweep",
            Experiment::Fig4GammaSweep => "fig4_gamma_sweep",
            Experiment::Fig5ThetaSweep => "fig5_theta_sweep",
            Experiment::Fig6DelayTradeoff => "fig6_delay_tradeoff",
            Experiment::Fig7ArrivalVsPon => "fig7_arrival_vs_pon",
            Experiment::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Experiment> {
        Experiment::ALL.into_iter().find(|e| e.name() == s)
    }
}

/// Axis swept by a custom experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Rate,
    Gamma,
    Kappa,
    Theta,
    POn,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Rate => "rate",
            SweepAxis::Gamma => "gamma",
            SweepAxis::Kappa => "kappa",
            SweepAxis::Theta => "theta",
            SweepAxis::POn => "p_on",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// A grid of parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grid {
    List(Vec<f64>),
    /// `start, start + step, ...` up to and including `stop`.
    Step { start: f64, stop: f64, step: f64 },
    Linear { lo: f64, hi: f64, n: usize },
    Log { lo: f64, hi: f64, n: usize },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match *self {
            Grid::List(ref v) => v.clone(),
            Grid::Step { start, stop, step } => {
                if !(step > 0.0 && start <= stop) {
                    return Err(Error::invalid(format!("step grid needs start <= stop and step > 0, got {start}..{stop} by {step}")));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| start + i as f64 * step).collect()
            }
            Grid::Linear { lo, hi, n } => {
                if !(lo <= hi) {
                    return Err(Error::invalid(format!("linear grid needs lo <= hi, got {lo}..{hi}")));
                }
                linspace(lo, hi, n)
            }
            Grid::Log { lo, hi, n } => {
                if !(lo > 0.0 && lo <= hi) {
                    return Err(Error::invalid(format!("log grid needs 0 < lo <= hi, got {lo}..{hi}")));
                }
                logspace(lo, hi, n)
            }
        };
        if v.is_empty() {
            return Err(Error::invalid("grid is empty"));
        }
        if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("grid contains non-finite value {bad}")));
        }
        Ok(v)
    }
}

/// Scalar inputs shared by all experiments. Unset series fall back to the
/// per-experiment defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepParams {
    pub gamma: f64,
    pub kappa: f64,
    pub theta: f64,
    /// Fixed link rate; `None` optimizes it per grid point where relevant.
    pub rate: Option<f64>,
    pub p_on: f64,
    /// `alpha + beta` for MFS/MMPS sources.
    pub rate_sum: f64,
    pub d: f64,
    pub zeta: f64,
    pub arrival_avg: f64,
    pub families: Vec<SourceFamily>,
    pub gamma_series: Option<Vec<f64>>,
    pub theta_series: Option<Vec<f64>>,
    pub p_on_series: Option<Vec<f64>>,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            gamma: 10.0,
            kappa: 50.0,
            theta: 1.0,
            rate: None,
            p_on: 0.5,
            rate_sum: 10.0,
            d: 3.0,
            zeta: 1.0,
            arrival_avg: 1.0,
            families: SourceFamily::ALL.to_vec(),
            gamma_series: None,
            theta_series: None,
            p_on_series: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub experiment: Experiment,
    #[serde(default)]
    pub params: SweepParams,
    /// Overrides the experiment's primary grid.
    #[serde(default)]
    pub grid: Option<Grid>,
    /// Swept quantity of a custom experiment.
    #[serde(default)]
    pub axis: Option<SweepAxis>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl SweepSpec {
    pub fn new(experiment: Experiment) -> Self {
        SweepSpec { experiment, params: SweepParams::default(), grid: None, axis: None, format: OutputFormat::Csv }
    }

    /// Primary grid, defaulting per experiment.
    pub fn grid_values(&self) -> Result<Vec<f64>> {
        if let Some(g) = &self.grid {
            return g.values();
        }
        let g = match self.experiment {
            Experiment::Fig2RateSweep => Grid::Step { start: 0.1, stop: 8.0, step: 0.05 },
            Experiment::Fig3KappaSweep => Grid::Log { lo: 0.1, hi: 1e4, n: 61 },
            Experiment::Fig4GammaSweep => Grid::Log { lo: 1.0, hi: 1e3, n: 31 },
            Experiment::Fig5ThetaSweep => Grid::Log { lo: 1e-3, hi: 1e2, n: 51 },
            Experiment::Fig6DelayTradeoff => Grid::Log { lo: 1.0, hi: 1e3, n: 31 },
            Experiment::Fig7ArrivalVsPon => Grid::Linear { lo: 0.05, hi: 0.95, n: 19 },
            Experiment::Custom => return Err(Error::invalid("custom experiment needs an explicit grid")),
        };
        g.values()
    }

    fn series(given: &Option<Vec<f64>>, default: &[f64], what: &str) -> Result<Vec<f64>> {
        let v = given.clone().unwrap_or_else(|| default.to_vec());
        if v.is_empty() {
            return Err(Error::invalid(format!("{what} series is empty")));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Column {
    pub name: &'static str,
    /// Empty for dimensionless quantities.
    pub unit: &'static str,
}

const fn col(name: &'static str, unit: &'static str) -> Column {
    Column { name, unit }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Text(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            Cell::Num(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub experiment: Experiment,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Numeric column by name; text cells map to NaN.
    pub fn numbers(&self, name: &str) -> Vec<f64> {
        let i = self.column_index(name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn texts(&self, name: &str) -> Vec<String> {
        let i = self.column_index(name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i].as_str().unwrap_or_default().to_string()).collect()
    }

    /// Rows whose text column `name` equals `value`.
    pub fn filter(&self, name: &str, value: &str) -> Table {
        let i = self.column_index(name).unwrap_or_else(|| panic!("no column {name}"));
        Table {
            experiment: self.experiment,
            columns: self.columns.clone(),
            rows: self.rows.iter().filter(|r| r[i].as_str() == Some(value)).cloned().collect(),
        }
    }

    /// CSV with a `name[unit]` header and 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self
            .columns
            .iter()
            .map(|c| if c.unit.is_empty() { c.name.to_string() } else { format!("{}[{}]", c.name, c.unit) })
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format_sig(*x, 12),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let units: Map<String, Value> =
            self.columns.iter().map(|c| (c.name.to_string(), Value::String(c.unit.to_string()))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let m: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| (c.name.to_string(), serde_json::to_value(v).unwrap_or(Value::Null)))
                    .collect();
                Value::Object(m)
            })
            .collect();
        json!({ "experiment": self.experiment.name(), "units": units, "rows": rows })
    }
}

/// `%.{digits}g`-style formatting independent of locale.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A grid point that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFailure {
    pub index: usize,
    pub point: String,
    pub error: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutput {
    pub table: Table,
    pub failures: Vec<PointFailure>,
}

impl SweepOutput {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Evaluates `points` in parallel; rows stay in point order.
fn evaluate<P, L, F>(points: &[P], label: L, eval: F) -> (Vec<Vec<Cell>>, Vec<PointFailure>)
where
    P: Sync,
    L: Fn(&P) -> String + Sync,
    F: Fn(&P) -> Result<Vec<Cell>> + Sync,
{
    let results: Vec<Result<Vec<Cell>>> = points.par_iter().map(&eval).collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (index, (p, r)) in points.iter().zip(results).enumerate() {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(PointFailure { index, point: label(p), error: e.to_string(), exit_code: e.exit_code() }),
        }
    }
    (rows, failures)
}

fn theta(x: f64) -> Result<QosExponent> {
    QosExponent::new(x)
}

/// Maximum supportable arrival rates of a family at ON probability `p_on`.
fn matched(family: SourceFamily, p_on: f64, rate_sum: f64, c_e: f64, th: QosExponent) -> Result<(f64, f64)> {
    let shape = SourceModel::with_p_on(family, p_on, rate_sum, 0.0)?;
    let m = max_arrival(&shape, c_e, th)?;
    Ok((m.lambda_on_star, m.lambda_avg_star))
}

fn provisioned(gamma: f64, kappa: f64, th: QosExponent, rate: Option<f64>) -> Result<(f64, f64)> {
    match rate {
        Some(r) => Ok((r, effective_capacity(&ChannelSpec::new(gamma, r, kappa)?, th)?.value)),
        None => {
            let o = optimize_rate(gamma, kappa, th)?;
            Ok((o.r_star, o.c_e_star))
        }
    }
}

/// Evaluates the sweep without touching the filesystem.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    let grid = spec.grid_values()?;
    let p = &spec.params;
    if p.families.is_empty() {
        return Err(Error::invalid("family list is empty"));
    }
    let (table, failures) = match spec.experiment {
        Experiment::Fig2RateSweep => fig2(p, &grid)?,
        Experiment::Fig3KappaSweep => fig3(p, &grid)?,
        Experiment::Fig4GammaSweep => fig4_5(spec.experiment, p, &grid)?,
        Experiment::Fig5ThetaSweep => fig4_5(spec.experiment, p, &grid)?,
        Experiment::Fig6DelayTradeoff => fig6(p, &grid)?,
        Experiment::Fig7ArrivalVsPon => fig7(p, &grid)?,
        Experiment::Custom => {
            let axis = spec.axis.ok_or_else(|| Error::invalid("custom experiment needs an axis"))?;
            custom(p, axis, &grid)?
        }
    };
    Ok(SweepOutput { table, failures })
}

type Built = (Table, Vec<PointFailure>);

fn fig2(p: &SweepParams, grid: &[f64]) -> Result<Built> {
    let th = theta(p.theta)?;
    let points: Vec<(SourceFamily, f64)> =
        p.families.iter().flat_map(|&f| grid.iter().map(move |&r| (f, r))).collect();
    let (mut rows, failures) = evaluate(
        &points,
        |(f, r)| format!("family={} rate={}", f.name(), format_sig(*r, 12)),
        |&(f, r)| {
            let c_e = effective_capacity(&ChannelSpec::new(p.gamma, r, p.kappa)?, th)?.value;
            let (lon, lavg) = matched(f, p.p_on, p.rate_sum, c_e, th)?;
            Ok(vec![f.name().into(), r.into(), p.gamma.into(), p.kappa.into(), p.theta.into(), p.p_on.into(), c_e.into(), lon.into(), lavg.into(), f64::NAN.into()])
        },
    );
    // per-family argmax of lambda_avg
    for f in &p.families {
        let idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][0].as_str() == Some(f.name())).collect();
        let best = idx
            .iter()
            .copied()
            .max_by(|&a, &b| rows[a][8].as_f64().unwrap().total_cmp(&rows[b][8].as_f64().unwrap()));
        if let Some(b) = best {
            let r = rows[b][1].clone();
            for &i in &idx {
                rows[i][9] = r.clone();
            }
        }
    }
    let columns = vec![
        col("family", ""),
        col("rate", "bits/block"),
        col("gamma", ""),
        col("kappa", "1/block"),
        col("theta", "1/bit"),
        col("p_on", ""),
        col("c_e", "bits/block"),
        col("lambda_on_star", "bits/block"),
        col("lambda_avg_star", "bits/block"),
        col("argmax_rate", "bits/block"),
    ];
    Ok((Table { experiment: Experiment::Fig2RateSweep, columns, rows }, failures))
}

fn fig3(p: &SweepParams, grid: &[f64]) -> Result<Built> {
    let gammas = SweepSpec::series(&p.gamma_series, &[10.0, 30.0], "gamma")?;
    let thetas = SweepSpec::series(&p.theta_series, &[0.1, 1.0], "theta")?;
    let rate = p.rate.unwrap_or(3.0);
    let mut points = Vec::new();
    for &g in &gammas {
        for &t in &thetas {
            points.extend(grid.iter().map(|&k| (g, t, k)));
        }
    }
    let (rows, failures) = evaluate(
        &points,
        |(g, t, k)| format!("gamma={g} theta={t} kappa={k}"),
        |&(g, t, k)| {
            let spec = ChannelSpec::new(g, rate, k)?;
            let c = effective_capacity(&spec, theta(t)?)?.value;
            Ok(vec![g.into(), t.into(), k.into(), rate.into(), c.into(), capacity_upper_bound(&spec)?.into()])
        },
    );
    let columns = vec![
        col("gamma", ""),
        col("theta", "1/bit"),
        col("kappa", "1/block"),
        col("rate", "bits/block"),
        col("c_e", "bits/block"),
        col("upper_bound", "bits/block"),
    ];
    Ok((Table { experiment: Experiment::Fig3KappaSweep, columns, rows }, failures))
}

/// Gamma (fig4) or theta (fig5) on the x axis, one curve per family and P_ON.
fn fig4_5(experiment: Experiment, p: &SweepParams, grid: &[f64]) -> Result<Built> {
    let p_ons = SweepSpec::series(&p.p_on_series, &[0.1, 0.5, 0.9], "p_on")?;
    let mut points = Vec::new();
    for &f in &p.families {
        for &q in &p_ons {
            points.extend(grid.iter().map(|&x| (f, q, x)));
        }
    }
    let by_gamma = experiment == Experiment::Fig4GammaSweep;
    let (rows, failures) = evaluate(
        &points,
        |(f, q, x)| format!("family={} p_on={q} {}={}", f.name(), if by_gamma { "gamma" } else { "theta" }, format_sig(*x, 12)),
        |&(f, q, x)| {
            let (g, t) = if by_gamma { (x, p.theta) } else { (p.gamma, x) };
            let th = theta(t)?;
            let (r, c_e) = provisioned(g, p.kappa, th, p.rate)?;
            let (lon, lavg) = matched(f, q, p.rate_sum, c_e, th)?;
            Ok(vec![f.name().into(), q.into(), g.into(), (10.0 * g.log10()).into(), t.into(), p.kappa.into(), r.into(), c_e.into(), lon.into(), lavg.into()])
        },
    );
    let columns = vec![
        col("family", ""),
        col("p_on", ""),
        col("gamma", ""),
        col("gamma_db", "dB"),
        col("theta", "1/bit"),
        col("kappa", "1/block"),
        col("rate", "bits/block"),
        col("c_e", "bits/block"),
        col("lambda_on_star", "bits/block"),
        col("lambda_avg_star", "bits/block"),
    ];
    Ok((Table { experiment, columns, rows }, failures))
}

/// Three panels: violation against gamma, theta and P_ON.
///
/// The primary grid is the gamma panel; theta and P_ON panels use
/// `theta_series` and `p_on_series` (defaults: log grid `[1e-3, 10]` and
/// `[0.1, 0.9]`). The P_ON panel holds the average arrival rate fixed and
/// provisions the link at [`P_ON_PANEL_THETA`].
fn fig6(p: &SweepParams, gamma_grid: &[f64]) -> Result<Built> {
    let theta_grid = SweepSpec::series(&p.theta_series, &logspace(1e-3, 10.0, 41), "theta")?;
    let p_on_grid = SweepSpec::series(&p.p_on_series, &linspace(0.1, 0.9, 17), "p_on")?;
    let rate = p.rate.map_or(RateMode::Optimized, RateMode::Fixed);
    let base = |family| TradeoffConfig {
        gamma: p.gamma,
        kappa: p.kappa,
        theta: p.theta,
        rate,
        d: p.d,
        zeta: p.zeta,
        family,
        p_on: p.p_on,
        rate_sum: p.rate_sum,
        arrival_avg: p.arrival_avg,
    };
    let mut points = Vec::new();
    for &f in &p.families {
        points.extend(gamma_grid.iter().map(|&v| (TradeoffAxis::Gamma, f, v)));
        points.extend(theta_grid.iter().map(|&v| (TradeoffAxis::Theta, f, v)));
        points.extend(p_on_grid.iter().map(|&v| (TradeoffAxis::POn, f, v)));
    }
    let (mut rows, failures) = evaluate(
        &points,
        |(a, f, v)| format!("axis={} family={} value={}", a.name(), f.name(), format_sig(*v, 12)),
        |(a, f, v)| {
            let mut cfg = base(*f);
            if *a == TradeoffAxis::POn {
                cfg.theta = P_ON_PANEL_THETA;
            }
            let t = tradeoff_curve(&cfg, a.clone(), &[*v])?;
            let r = t.rows[0];
            Ok(vec![
                a.name().into(),
                f.name().into(),
                r.axis_value.into(),
                r.gamma.into(),
                r.rate.into(),
                r.theta.into(),
                r.c_e.into(),
                r.bandwidth.into(),
                r.lambda_avg.into(),
                r.violation.into(),
            ])
        },
    );
    // flag curves whose violation is not nonincreasing along the axis
    let mut monotone = vec![1.0; rows.len()];
    for a in ["gamma", "theta", "p_on"] {
        for f in &p.families {
            let idx: Vec<usize> = (0..rows.len())
                .filter(|&i| rows[i][0].as_str() == Some(a) && rows[i][1].as_str() == Some(f.name()))
                .collect();
            let v: Vec<f64> = idx.iter().map(|&i| rows[i][9].as_f64().unwrap()).collect();
            let ok = v.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
            for &i in &idx {
                monotone[i] = if ok { 1.0 } else { 0.0 };
            }
        }
    }
    for (row, m) in rows.iter_mut().zip(monotone) {
        row.push(m.into());
    }
    let columns = vec![
        col("axis", ""),
        col("family", ""),
        col("axis_value", ""),
        col("gamma", ""),
        col("rate", "bits/block"),
        col("theta", "1/bit"),
        col("c_e", "bits/block"),
        col("bandwidth", "bits/block"),
        col("lambda_avg", "bits/block"),
        col("violation", ""),
        col("monotone", ""),
    ];
    Ok((Table { experiment: Experiment::Fig6DelayTradeoff, columns, rows }, failures))
}

/// QoS exponent at which the P_ON panel of the tradeoff provisions its link.
pub const P_ON_PANEL_THETA: f64 = 0.01;

fn fig7(p: &SweepParams, grid: &[f64]) -> Result<Built> {
    let th = theta(p.theta)?;
    let (r, c_e) = provisioned(p.gamma, p.kappa, th, p.rate)?;
    let points: Vec<(SourceFamily, f64)> =
        p.families.iter().flat_map(|&f| grid.iter().map(move |&q| (f, q))).collect();
    let (rows, failures) = evaluate(
        &points,
        |(f, q)| format!("family={} p_on={q}", f.name()),
        |&(f, q)| {
            let (lon, lavg) = matched(f, q, p.rate_sum, c_e, th)?;
            Ok(vec![f.name().into(), q.into(), p.gamma.into(), p.kappa.into(), p.theta.into(), r.into(), c_e.into(), lon.into(), lavg.into()])
        },
    );
    let columns = vec![
        col("family", ""),
        col("p_on", ""),
        col("gamma", ""),
        col("kappa", "1/block"),
        col("theta", "1/bit"),
        col("rate", "bits/block"),
        col("c_e", "bits/block"),
        col("lambda_on_star", "bits/block"),
        col("lambda_avg_star", "bits/block"),
    ];
    Ok((Table { experiment: Experiment::Fig7ArrivalVsPon, columns, rows }, failures))
}

fn custom(p: &SweepParams, axis: SweepAxis, grid: &[f64]) -> Result<Built> {
    let points: Vec<(SourceFamily, f64)> =
        p.families.iter().flat_map(|&f| grid.iter().map(move |&x| (f, x))).collect();
    let (rows, failures) = evaluate(
        &points,
        |(f, x)| format!("family={} {}={}", f.name(), axis.name(), format_sig(*x, 12)),
        |&(f, x)| {
            let (mut g, mut k, mut t, mut q, mut r) = (p.gamma, p.kappa, p.theta, p.p_on, p.rate);
            match axis {
                SweepAxis::Rate => r = Some(x),
                SweepAxis::Gamma => g = x,
                SweepAxis::Kappa => k = x,
                SweepAxis::Theta => t = x,
                SweepAxis::POn => q = x,
            }
            let th = theta(t)?;
            let (rate, c_e) = provisioned(g, k, th, r)?;
            let (lon, lavg) = matched(f, q, p.rate_sum, c_e, th)?;
            Ok(vec![f.name().into(), x.into(), g.into(), k.into(), t.into(), q.into(), rate.into(), c_e.into(), lon.into(), lavg.into()])
        },
    );
    let columns = vec![
        col("family", ""),
        col("axis_value", ""),
        col("gamma", ""),
        col("kappa", "1/block"),
        col("theta", "1/bit"),
        col("p_on", ""),
        col("rate", "bits/block"),
        col("c_e", "bits/block"),
        col("lambda_on_star", "bits/block"),
        col("lambda_avg_star", "bits/block"),
    ];
    Ok((Table { experiment: Experiment::Custom, columns, rows }, failures))
}

/// Path of the failure manifest written next to `out`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".failures.json");
    PathBuf::from(s)
}

pub fn render(table: &Table, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&table.to_json()).expect("table serializes");
            s.push('\n');
            s
        }
    }
}

/// Runs the sweep and writes the table to `out`.
///
/// Invalid specs fail before any file is created. If some grid points fail,
/// the remaining rows and a failure manifest are written and the first
/// failure's error is returned.
pub fn write_sweep(spec: &SweepSpec, out: &Path) -> Result<SweepOutput> {
    let result = run_sweep(spec)?;
    std::fs::write(out, render(&result.table, spec.format))?;
    if let Some(first) = result.failures.first() {
        let manifest = json!({
            "experiment": spec.experiment.name(),
            "output": out.display().to_string(),
            "rows_written": result.table.rows.len(),
            "failures": result.failures,
        });
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(manifest_path(out), text)?;
        let mut msg = String::new();
        let _ = write!(msg, "{} of {} grid points failed; first: {}", result.failures.len(), result.failures.len() + result.table.rows.len(), first.error);
        return Err(match first.exit_code {
            2 => Error::InvalidParameter(msg),
            3 => Error::NoSolution(msg),
            _ => Error::Overflow(msg),
        });
    }
    Ok(result)
}
