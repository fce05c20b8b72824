//! Scenario configuration and its TOML ingestion.
//!
//! Every key is optional; missing keys fall back to [`ScenarioConfig::default`].
//! Per-user quantities accept either a scalar (applied to every cell) or a
//! list of length `cells`. Matrices are lists of rows, row `l` being the
//! transmitting BS and column `i` the receiving user or target.
//!
//! ```toml
//! cells = 3
//! samples = 100
//! pfa_target = 1e-6
//! noise_comm_db = 1.0
//! noise_sense_db = 15.0
//! power_budget_db = 15.0
//! rate_thresholds = 1.0
//! pod_thresholds = 0.7
//! channel_mode = "direct"        # or "geometry"
//! modulation = "qpsk"            # or "gaussian"
//! seed = 0
//!
//! [direct]
//! mean_rho = [[1.0, 0.1, 0.1], [0.1, 1.0, 0.1], [0.1, 0.1, 1.0]]
//! mean_g = [[1.0, 0.1, 0.1], [0.1, 1.0, 0.1], [0.1, 0.1, 1.0]]
//! fading = true
//!
//! [geometry]
//! radius = 100.0
//! pathloss_exponent = 2.0
//! rcs = 1.0
//! inter_site_distance = 200.0
//! min_distance = 1.0
//! fading = true
//!
//! [solver]
//! starts = 8
//! outer_tol = 1e-6
//! max_outer = 100
//! rpa_seed = 2
//! ```

use std::path::Path;

use serde::Serialize;
use toml::{Table, Value};

use crate::channel::db_to_linear;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    Qpsk,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectParams {
    pub mean_rho: Vec<Vec<f64>>,
    pub mean_g: Vec<Vec<f64>>,
    pub fading: bool,
}

impl DirectParams {
    /// Mean gain 1 on serving links and 0.1 on cross links.
    pub fn serving_dominant(cells: usize) -> Self {
        let m: Vec<Vec<f64>> = (0..cells)
            .map(|l| (0..cells).map(|i| if l == i { 1.0 } else { 0.1 }).collect())
            .collect();
        DirectParams {
            mean_rho: m.clone(),
            mean_g: m,
            fading: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryParams {
    /// Cell radius in meters.
    pub radius: f64,
    pub pathloss_exponent: f64,
    /// Radar cross-section multiplier on the two-round gain.
    pub rcs: f64,
    pub inter_site_distance: f64,
    /// Distances are clamped to at least this before the pathloss power.
    pub min_distance: f64,
    pub fading: bool,
}

impl Default for GeometryParams {
    fn default() -> Self {
        GeometryParams {
            radius: 100.0,
            pathloss_exponent: 2.0,
            rcs: 1.0,
            inter_site_distance: 200.0,
            min_distance: 1.0,
            fading: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    Direct(DirectParams),
    Geometry(GeometryParams),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Random feasible starts in addition to EPA.
    pub starts: usize,
    pub outer_tol: f64,
    pub max_outer: usize,
    pub rpa_seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            starts: 8,
            outer_tol: 1e-6,
            max_outer: 100,
            rpa_seed: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub cells: usize,
    pub samples: usize,
    pub pfa_target: f64,
    pub noise_comm_db: Vec<f64>,
    pub noise_sense_db: Vec<f64>,
    pub power_budget_db: f64,
    pub rate_thresholds: Vec<f64>,
    pub pod_thresholds: Vec<f64>,
    pub channel_mode: ChannelMode,
    pub modulation: Modulation,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let cells = 3;
        ScenarioConfig {
            cells,
            samples: 100,
            pfa_target: 1e-6,
            noise_comm_db: vec![1.0; cells],
            noise_sense_db: vec![15.0; cells],
            power_budget_db: 15.0,
            rate_thresholds: vec![1.0; cells],
            pod_thresholds: vec![0.7; cells],
            channel_mode: ChannelMode::Direct(DirectParams::serving_dominant(cells)),
            modulation: Modulation::Qpsk,
            seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn power_budget(&self) -> f64 {
        db_to_linear(self.power_budget_db)
    }

    pub fn sigma_c2(&self) -> Vec<f64> {
        self.noise_comm_db.iter().copied().map(db_to_linear).collect()
    }

    pub fn sigma_s2(&self) -> Vec<f64> {
        self.noise_sense_db.iter().copied().map(db_to_linear).collect()
    }

    /// Same scenario with every per-target PoD threshold set to `xi`.
    pub fn with_pod_threshold(&self, xi: f64) -> Self {
        ScenarioConfig {
            pod_thresholds: vec![xi; self.cells],
            ..self.clone()
        }
    }

    pub fn with_power_budget_db(&self, budget_db: f64) -> Self {
        ScenarioConfig {
            power_budget_db: budget_db,
            ..self.clone()
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
        let config = Reader::new(&table, "").read_scenario()?;
        config.validate()?;
        Ok(config)
    }

    /// Check every invariant, naming the first offending key.
    pub fn validate(&self) -> Result<()> {
        let cells = self.cells;
        if cells < 1 {
            return Err(Error::config("cells", "must be >= 1"));
        }
        if self.samples < cells {
            return Err(Error::config("samples", "must be >= cells for the projection to exist"));
        }
        if !(self.pfa_target > 0.0 && self.pfa_target < 1.0) {
            return Err(Error::config("pfa_target", "must lie in (0, 1)"));
        }
        let per_cell = [
            ("noise_comm_db", &self.noise_comm_db),
            ("noise_sense_db", &self.noise_sense_db),
            ("rate_thresholds", &self.rate_thresholds),
            ("pod_thresholds", &self.pod_thresholds),
        ];
        for (key, v) in per_cell {
            if v.len() != cells {
                return Err(Error::config(key, format!("expected {cells} entries, got {}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::config(key, "entries must be finite"));
            }
        }
        if !self.power_budget_db.is_finite() {
            return Err(Error::config("power_budget_db", "must be finite"));
        }
        if self.rate_thresholds.iter().any(|&r| r < 0.0) {
            return Err(Error::config("rate_thresholds", "must be >= 0"));
        }
        if self.pod_thresholds.iter().any(|&p| !(0.0..1.0).contains(&p)) {
            return Err(Error::config("pod_thresholds", "must lie in [0, 1)"));
        }
        match &self.channel_mode {
            ChannelMode::Direct(direct) => {
                for (key, m) in [("direct.mean_rho", &direct.mean_rho), ("direct.mean_g", &direct.mean_g)] {
                    if m.len() != cells || m.iter().any(|r| r.len() != cells) {
                        return Err(Error::config(key, format!("must be a {cells}×{cells} matrix")));
                    }
                    if m.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
                        return Err(Error::config(key, "entries must be finite and >= 0"));
                    }
                }
            }
            ChannelMode::Geometry(geo) => {
                if !(geo.radius > 0.0) {
                    return Err(Error::config("geometry.radius", "must be > 0"));
                }
                if !(geo.pathloss_exponent > 0.0) {
                    return Err(Error::config("geometry.pathloss_exponent", "must be > 0"));
                }
                if !(geo.rcs > 0.0) {
                    return Err(Error::config("geometry.rcs", "must be > 0"));
                }
                if !(geo.inter_site_distance > 0.0) {
                    return Err(Error::config("geometry.inter_site_distance", "must be > 0"));
                }
                if !(geo.min_distance > 0.0) {
                    return Err(Error::config("geometry.min_distance", "must be > 0"));
                }
            }
        }
        if !(self.solver.outer_tol > 0.0) {
            return Err(Error::config("solver.outer_tol", "must be > 0"));
        }
        if self.solver.max_outer < 1 {
            return Err(Error::config("solver.max_outer", "must be >= 1"));
        }
        Ok(())
    }
}

struct Reader<'a> {
    table: &'a Table,
    prefix: &'a str,
}

impl<'a> Reader<'a> {
    fn new(table: &'a Table, prefix: &'a str) -> Self {
        Reader { table, prefix }
    }

    fn key(&self, name: &str) -> String {
        if self.prefix.is_empty() {
            name.to_string()
        } else {
            format!("{}.{}", self.prefix, name)
        }
    }

    fn check_known(&self, known: &[&str]) -> Result<()> {
        match self.table.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(Error::config(self.key(k), "unknown key")),
            None => Ok(()),
        }
    }

    fn float(&self, name: &str, default: f64) -> Result<f64> {
        match self.table.get(name) {
            None => Ok(default),
            Some(v) => as_float(v).ok_or_else(|| Error::config(self.key(name), "expected a number")),
        }
    }

    fn uint(&self, name: &str, default: u64) -> Result<u64> {
        match self.table.get(name) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
            Some(_) => Err(Error::config(self.key(name), "expected a nonnegative integer")),
        }
    }

    fn boolean(&self, name: &str, default: bool) -> Result<bool> {
        match self.table.get(name) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(Error::config(self.key(name), "expected true or false")),
        }
    }

    fn string(&self, name: &str) -> Result<Option<&'a str>> {
        match self.table.get(name) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(Error::config(self.key(name), "expected a string")),
        }
    }

    fn per_cell(&self, name: &str, cells: usize, default: f64) -> Result<Vec<f64>> {
        match self.table.get(name) {
            None => Ok(vec![default; cells]),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| as_float(v).ok_or_else(|| Error::config(self.key(name), "expected a list of numbers")))
                .collect(),
            Some(v) => as_float(v)
                .map(|x| vec![x; cells])
                .ok_or_else(|| Error::config(self.key(name), "expected a number or a list of numbers")),
        }
    }

    fn matrix(&self, name: &str) -> Result<Option<Vec<Vec<f64>>>> {
        let err = || Error::config(self.key(name), "expected a list of numeric rows");
        match self.table.get(name) {
            None => Ok(None),
            Some(Value::Array(rows)) => rows
                .iter()
                .map(|row| match row {
                    Value::Array(items) => items.iter().map(|v| as_float(v).ok_or_else(err)).collect(),
                    _ => Err(err()),
                })
                .collect::<Result<Vec<Vec<f64>>>>()
                .map(Some),
            Some(_) => Err(err()),
        }
    }

    fn section(&self, name: &str) -> Result<Option<&'a Table>> {
        match self.table.get(name) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(t)),
            Some(_) => Err(Error::config(self.key(name), "expected a table")),
        }
    }

    fn read_scenario(&self) -> Result<ScenarioConfig> {
        self.check_known(&[
            "cells",
            "samples",
            "pfa_target",
            "noise_comm_db",
            "noise_sense_db",
            "power_budget_db",
            "rate_thresholds",
            "pod_thresholds",
            "channel_mode",
            "modulation",
            "seed",
            "direct",
            "geometry",
            "solver",
        ])?;
        let base = ScenarioConfig::default();
        let cells = self.uint("cells", base.cells as u64)? as usize;
        if cells < 1 {
            return Err(Error::config("cells", "must be >= 1"));
        }

        let channel_mode = match self.string("channel_mode")?.unwrap_or("direct") {
            "direct" => {
                let defaults = DirectParams::serving_dominant(cells);
                match self.section("direct")? {
                    None => ChannelMode::Direct(defaults),
                    Some(t) => {
                        let r = Reader::new(t, "direct");
                        r.check_known(&["mean_rho", "mean_g", "fading"])?;
                        ChannelMode::Direct(DirectParams {
                            mean_rho: r.matrix("mean_rho")?.unwrap_or(defaults.mean_rho),
                            mean_g: r.matrix("mean_g")?.unwrap_or(defaults.mean_g),
                            fading: r.boolean("fading", true)?,
                        })
                    }
                }
            }
            "geometry" => {
                let t = self
                    .section("geometry")?
                    .ok_or_else(|| Error::config("geometry", "geometry mode needs a [geometry] table"))?;
                let r = Reader::new(t, "geometry");
                r.check_known(&[
                    "radius",
                    "pathloss_exponent",
                    "rcs",
                    "inter_site_distance",
                    "min_distance",
                    "fading",
                ])?;
                let d = GeometryParams::default();
                let radius = match t.get("radius") {
                    Some(_) => r.float("radius", d.radius)?,
                    None => return Err(Error::config("geometry.radius", "required in geometry mode")),
                };
                let pathloss_exponent = match t.get("pathloss_exponent") {
                    Some(_) => r.float("pathloss_exponent", d.pathloss_exponent)?,
                    None => return Err(Error::config("geometry.pathloss_exponent", "required in geometry mode")),
                };
                ChannelMode::Geometry(GeometryParams {
                    radius,
                    pathloss_exponent,
                    rcs: r.float("rcs", d.rcs)?,
                    inter_site_distance: r.float("inter_site_distance", 2.0 * radius)?,
                    min_distance: r.float("min_distance", d.min_distance)?,
                    fading: r.boolean("fading", d.fading)?,
                })
            }
            other => {
                return Err(Error::config(
                    "channel_mode",
                    format!("unknown mode `{other}` (expected direct or geometry)"),
                ))
            }
        };

        let modulation = match self.string("modulation")?.unwrap_or("qpsk") {
            "qpsk" => Modulation::Qpsk,
            "gaussian" => Modulation::Gaussian,
            other => {
                return Err(Error::config(
                    "modulation",
                    format!("unknown modulation `{other}` (expected qpsk or gaussian)"),
                ))
            }
        };

        let solver = match self.section("solver")? {
            None => SolverOptions::default(),
            Some(t) => {
                let r = Reader::new(t, "solver");
                r.check_known(&["starts", "outer_tol", "max_outer", "rpa_seed"])?;
                let d = SolverOptions::default();
                SolverOptions {
                    starts: r.uint("starts", d.starts as u64)? as usize,
                    outer_tol: r.float("outer_tol", d.outer_tol)?,
                    max_outer: r.uint("max_outer", d.max_outer as u64)? as usize,
                    rpa_seed: r.uint("rpa_seed", d.rpa_seed)?,
                }
            }
        };

        Ok(ScenarioConfig {
            cells,
            samples: self.uint("samples", base.samples as u64)? as usize,
            pfa_target: self.float("pfa_target", base.pfa_target)?,
            noise_comm_db: self.per_cell("noise_comm_db", cells, base.noise_comm_db[0])?,
            noise_sense_db: self.per_cell("noise_sense_db", cells, base.noise_sense_db[0])?,
            power_budget_db: self.float("power_budget_db", base.power_budget_db)?,
            rate_thresholds: self.per_cell("rate_thresholds", cells, base.rate_thresholds[0])?,
            pod_thresholds: self.per_cell("pod_thresholds", cells, base.pod_thresholds[0])?,
            channel_mode,
            modulation,
            seed: self.uint("seed", base.seed)?,
            solver,
        })
    }
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}
