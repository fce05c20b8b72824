//! Experiment sweeps over the power budget or the detection threshold,
//! Monte Carlo validation of the detection probability, CSV output and SVG
//! plots.
//!
//! Grid points are evaluated concurrently but rows are always returned in
//! grid order (then scheme order), and every random draw comes from a
//! counter-derived substream, so the output depends only on the scenario
//! and its seed.

mod csv_io;
mod plot;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

pub use csv_io::{emit_csv, read_csv, write_csv, CSV_COLUMNS};
pub use plot::{render_plots, render_svg, Series};

use crate::allocator::{epa, optimize_ppa_default, rpa, AllocationResult};
use crate::channel::{self, ChannelRealization};
use crate::config::ScenarioConfig;
use crate::detection::{simulate_detection, DetectionSetup};
use crate::error::{Error, Result};
use crate::rng::{self, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Ppa,
    Epa,
    Rpa,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Ppa, Scheme::Epa, Scheme::Rpa];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Ppa => "ppa",
            Scheme::Epa => "epa",
            Scheme::Rpa => "rpa",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ppa" => Ok(Scheme::Ppa),
            "epa" => Ok(Scheme::Epa),
            "rpa" => Ok(Scheme::Rpa),
            other => Err(Error::config(
                "schemes",
                format!("unknown scheme `{other}` (expected ppa, epa or rpa)"),
            )),
        }
    }
}

/// Parse a comma-separated scheme list, dropping duplicates but keeping
/// the first-seen order.
pub fn parse_schemes(list: &str) -> Result<Vec<Scheme>> {
    let mut out = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let s: Scheme = part.parse()?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    if out.is_empty() {
        return Err(Error::config("schemes", "at least one scheme is required"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    PowerBudgetDb,
    PodThreshold,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVariable::PowerBudgetDb => "power_budget_db",
            SweepVariable::PodThreshold => "pod_threshold",
        }
    }

    /// The scenario with this variable set to `value`.
    pub fn apply(self, config: &ScenarioConfig, value: f64) -> ScenarioConfig {
        match self {
            SweepVariable::PowerBudgetDb => config.with_power_budget_db(value),
            SweepVariable::PodThreshold => config.with_pod_threshold(value),
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power_budget_db" => Ok(SweepVariable::PowerBudgetDb),
            "pod_threshold" => Ok(SweepVariable::PodThreshold),
            other => Err(Error::config("variable", format!("unknown sweep variable `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Closed-form against Monte Carlo detection probability.
    ValidatePod,
    /// Sum rate of each scheme.
    Rate,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::ValidatePod => "validate_pod",
            Experiment::Rate => "rate",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "validate_pod" => Ok(Experiment::ValidatePod),
            "rate" => Ok(Experiment::Rate),
            other => Err(Error::config("experiment", format!("unknown experiment `{other}`"))),
        }
    }
}

/// Inclusive arithmetic grid `start, start + step, …, <= stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !start.is_finite() {
            return Err(Error::config("start", "must be finite"));
        }
        if !stop.is_finite() {
            return Err(Error::config("stop", "must be finite"));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::config(
                "step",
                format!("must be positive and finite, got {step}"),
            ));
        }
        if stop < start {
            return Err(Error::config(
                "stop",
                format!("grid is empty: stop {stop} < start {start}"),
            ));
        }
        Ok(Grid { start, stop, step })
    }

    /// A single point.
    pub fn point(value: f64) -> Result<Self> {
        Grid::new(value, value, 1.0)
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

/// How channel snapshots are drawn for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotPolicy {
    /// Snapshot 0 of the scenario seed at every grid point.
    Fixed,
    /// Snapshots `0..M`; a point is feasible only if it is feasible on
    /// every snapshot, and reported quantities are snapshot means.
    Average(usize),
}

impl SnapshotPolicy {
    fn count(self) -> usize {
        match self {
            SnapshotPolicy::Fixed => 1,
            SnapshotPolicy::Average(m) => m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Grid,
    pub schemes: Vec<Scheme>,
    /// Monte Carlo experiments per target for the empirical detection
    /// probability (validation runs only).
    pub trials: u64,
    pub snapshots: SnapshotPolicy,
    /// Record wall time per row. Off by default since it breaks
    /// byte-for-byte reproducibility of the CSV.
    pub timing: bool,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, grid: Grid, schemes: Vec<Scheme>) -> Self {
        SweepSpec {
            variable,
            grid,
            schemes,
            trials: 10_000,
            snapshots: SnapshotPolicy::Fixed,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "at least one scheme is required"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if let SnapshotPolicy::Average(0) = self.snapshots {
            return Err(Error::config("snapshots", "must be >= 1"));
        }
        if self.variable == SweepVariable::PodThreshold {
            if let Some(v) = self.grid.points().into_iter().find(|v| !(0.0..1.0).contains(v)) {
                return Err(Error::config("stop", format!("detection threshold {v} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

/// One emitted line: a scheme evaluated at one grid point.
///
/// Rate fields are `None` on infeasible rows. Detection probabilities are
/// reported whenever the scheme produced a power vector (EPA always does).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: Experiment,
    pub variable: SweepVariable,
    pub value: f64,
    pub scheme: Scheme,
    pub feasible: bool,
    pub sum_rate: Option<f64>,
    pub rates: Option<Vec<f64>>,
    pub pod_closed: Option<Vec<f64>>,
    pub pod_empirical: Option<Vec<f64>>,
    pub pod_stderr: Option<Vec<f64>>,
    pub iterations: usize,
    pub wall_time: Option<f64>,
}

/// Closed-form and empirical detection probability under EPA (or any
/// listed scheme) at each budget point.
pub fn run_pod_validation(config: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    if spec.variable != SweepVariable::PowerBudgetDb {
        return Err(Error::config(
            "variable",
            "detection validation sweeps the power budget",
        ));
    }
    run(config, spec, Experiment::ValidatePod)
}

/// Sum rate, per-user rates and detection probabilities of each scheme
/// along the grid.
pub fn run_rate_sweep(config: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    run(config, spec, Experiment::Rate)
}

/// True if at least one row of a sweep is feasible.
pub fn any_feasible(rows: &[ResultRow]) -> bool {
    rows.iter().any(|r| r.feasible)
}

fn run(config: &ScenarioConfig, spec: &SweepSpec, experiment: Experiment) -> Result<Vec<ResultRow>> {
    config.validate()?;
    spec.validate()?;
    let snapshots = (0..spec.snapshots.count() as u64)
        .map(|m| channel::snapshot(config, m))
        .collect::<Result<Vec<_>>>()?;
    let points = spec.grid.points();
    let jobs: Vec<(usize, f64, Scheme)> = points
        .iter()
        .enumerate()
        .flat_map(|(k, &v)| spec.schemes.iter().map(move |&s| (k, v, s)))
        .collect();
    let rows: Vec<Result<ResultRow>> = jobs
        .par_iter()
        .map(|&(k, value, scheme)| {
            let started = Instant::now();
            let scenario = spec.variable.apply(config, value);
            let empirical = experiment == Experiment::ValidatePod;
            let mut row = evaluate_point(
                &scenario,
                &snapshots,
                scheme,
                empirical.then_some((spec.trials, k as u64)),
            )?;
            row.experiment = experiment;
            row.variable = spec.variable;
            row.value = value;
            row.wall_time = spec.timing.then(|| started.elapsed().as_secs_f64());
            Ok(row)
        })
        .collect();
    // first error in grid order, independent of the schedule
    rows.into_iter().collect()
}

fn allocate(
    config: &ScenarioConfig,
    realization: &ChannelRealization,
    scheme: Scheme,
) -> Result<Option<AllocationResult>> {
    let outcome = match scheme {
        Scheme::Ppa => optimize_ppa_default(config, realization),
        Scheme::Epa => epa(config, realization),
        Scheme::Rpa => rpa(config, realization, config.solver.rpa_seed),
    };
    match outcome {
        Ok(res) => Ok(Some(res)),
        Err(Error::Infeasible { .. } | Error::SamplingExhausted { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn mean_of(columns: &[Vec<f64>]) -> Vec<f64> {
    let m = columns.len() as f64;
    let width = columns.first().map_or(0, Vec::len);
    (0..width)
        .map(|i| columns.iter().map(|c| c[i]).sum::<f64>() / m)
        .collect()
}

fn evaluate_point(
    config: &ScenarioConfig,
    snapshots: &[ChannelRealization],
    scheme: Scheme,
    empirical: Option<(u64, u64)>,
) -> Result<ResultRow> {
    let mut feasible = true;
    let mut iterations = 0;
    let mut rates = Vec::new();
    let mut pods = Vec::new();
    let mut emp = Vec::new();
    let mut var = Vec::new();
    for (m, realization) in snapshots.iter().enumerate() {
        let Some(res) = allocate(config, realization, scheme)? else {
            feasible = false;
            pods.clear();
            break;
        };
        feasible &= res.feasible;
        iterations += res.outer_iterations;
        rates.push(res.per_user_rate.clone());
        pods.push(res.per_target_pod.iter().map(|p| p.value()).collect());
        if let Some((trials, point)) = empirical {
            let mut hat = Vec::with_capacity(config.cells);
            let mut v = Vec::with_capacity(config.cells);
            for target in 0..config.cells {
                let setup = DetectionSetup::for_target(config, target)?;
                let index = (point * snapshots.len() as u64 + m as u64) * config.cells as u64 + target as u64;
                let seed = rng::derive_seed(config.seed, Domain::Sweep, index);
                let est = simulate_detection(&setup, &res.powers, realization, target, trials, seed)?;
                hat.push(est.pod_hat);
                v.push(est.pod_stderr * est.pod_stderr);
            }
            emp.push(hat);
            var.push(v);
        }
    }
    let m = snapshots.len() as f64;
    let have_pods = pods.len() == snapshots.len();
    let rates_mean = mean_of(&rates);
    Ok(ResultRow {
        experiment: Experiment::Rate,
        variable: SweepVariable::PowerBudgetDb,
        value: f64::NAN,
        scheme,
        feasible,
        sum_rate: feasible.then(|| rates_mean.iter().sum()),
        rates: feasible.then_some(rates_mean),
        pod_closed: have_pods.then(|| mean_of(&pods)),
        pod_empirical: (have_pods && empirical.is_some()).then(|| mean_of(&emp)),
        // standard error of a mean of independent estimates
        pod_stderr: (have_pods && empirical.is_some())
            .then(|| mean_of(&var).iter().map(|v| (v * m).sqrt() / m).collect()),
        iterations,
        wall_time: None,
    })
}
