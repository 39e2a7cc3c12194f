//! Experiment configuration and the small textual formats used by the CLI.
//!
//! A config file is a JSON object. Keys may be nested (`{"system": {"L": 20}}`)
//! or dotted (`{"system.L": 20}`); both flatten to the same dotted names.
//! Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::receivers::{DetectorOptions, DetectorStrategy, Method, BLOCK_ENUMERATION_BUDGET_LOG2};
use crate::scene::{Constellation, SystemConfig};

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Snapshots,
    RadarPowerDb,
    ReceiveAntennas,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Snapshots => "L",
            SweepVar::RadarPowerDb => "P_r_dB",
            SweepVar::ReceiveAntennas => "M_r",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "L" => Ok(SweepVar::Snapshots),
            "P_r_dB" => Ok(SweepVar::RadarPowerDb),
            "M_r" => Ok(SweepVar::ReceiveAntennas),
            other => Err(Error::config(format!(
                "unknown sweep variable '{other}' (expected L, P_r_dB or M_r)"
            ))),
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, SweepVar::RadarPowerDb)
    }
}

/// `VAR=START:STOP:STEP`, inclusive of `STOP` when it lies on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// Grid points beyond this are rejected.
const MAX_SWEEP_POINTS: usize = 10_000;

impl SweepSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let (var, range) = s.split_once('=').ok_or_else(|| {
            Error::config(format!(
                "sweep '{s}' is not of the form VAR=START:STOP:STEP"
            ))
        })?;
        let var = SweepVar::parse(var)?;
        let parts: Vec<&str> = range.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(Error::config(format!(
                "sweep range '{range}' needs exactly START:STOP:STEP"
            )));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::config(format!("'{t}' is not a finite number")))
        };
        let spec = Self {
            var,
            start: num(start)?,
            stop: num(stop)?,
            step: num(step)?,
        };
        spec.values()?;
        Ok(spec)
    }

    /// A single point at `value`.
    pub fn single(var: SweepVar, value: f64) -> Self {
        Self {
            var,
            start: value,
            stop: value,
            step: 1.0,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) {
            return Err(Error::config("sweep step must be positive"));
        }
        if self.stop < self.start {
            return Err(Error::config(format!(
                "empty sweep: stop {} is below start {}",
                self.stop, self.start
            )));
        }
        let span = (self.stop - self.start) / self.step;
        if !(span < MAX_SWEEP_POINTS as f64) {
            return Err(Error::config(format!(
                "sweep has more than {MAX_SWEEP_POINTS} points"
            )));
        }
        let count = (span + 1e-9).floor() as usize + 1;
        let values: Vec<f64> = (0..count)
            .map(|i| self.start + i as f64 * self.step)
            .collect();
        if self.var.is_integer() {
            if let Some(v) = values.iter().find(|v| v.fract() != 0.0 || **v < 1.0) {
                return Err(Error::config(format!(
                    "{} takes positive integer values, sweep reaches {v}",
                    self.var.name()
                )));
            }
        }
        Ok(values)
    }

    /// System configuration at one sweep value.
    pub fn apply(&self, base: &SystemConfig, value: f64) -> SystemConfig {
        let mut cfg = base.clone();
        match self.var {
            SweepVar::Snapshots => cfg.snapshots = value as usize,
            SweepVar::ReceiveAntennas => cfg.m_r = value as usize,
            SweepVar::RadarPowerDb => cfg.p_r = db_to_linear(value),
        }
        cfg
    }
}

impl fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}={}:{}:{}",
            self.var.name(),
            self.start,
            self.stop,
            self.step
        )
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Comma-separated scheme names; duplicates are dropped, order is kept.
pub fn parse_schemes(s: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        if part.trim().is_empty() {
            return Err(Error::config(format!("empty entry in scheme list '{s}'")));
        }
        let m = Method::parse(part)?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::config(format!("unknown output format '{other}'"))),
        }
    }
}

/// How per-trial NMSE values are combined at a sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NmseAggregation {
    /// Mean of `‖ĥ − h‖² / ‖h‖²` over trials.
    #[default]
    MeanOfRatios,
    /// `Σ‖ĥ − h‖² / Σ‖h‖²`.
    RatioOfMeans,
}

impl NmseAggregation {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean_of_ratios" => Ok(NmseAggregation::MeanOfRatios),
            "ratio_of_means" => Ok(NmseAggregation::RatioOfMeans),
            other => Err(Error::config(format!(
                "unknown NMSE aggregation '{other}' (expected mean_of_ratios or ratio_of_means)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub sweep: SweepSpec,
    pub trials: usize,
    pub master_seed: u64,
    pub schemes: Vec<Method>,
    pub detector: DetectorOptions,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub nmse_aggregation: NmseAggregation,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let system = SystemConfig::default();
        Self {
            sweep: SweepSpec::single(SweepVar::Snapshots, system.snapshots as f64),
            system,
            trials: 100,
            master_seed: 0,
            schemes: vec![Method::Sic, Method::Projection],
            detector: DetectorOptions::default(),
            output: None,
            format: OutputFormat::Csv,
            nmse_aggregation: NmseAggregation::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("config is not valid JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(Error::config("config must be a JSON object"));
        };
        let mut flat = Vec::new();
        flatten("", map, &mut flat)?;

        let mut cfg = Self::default();
        let mut sweep = None;
        for (key, v) in flat {
            let sys = &mut cfg.system;
            match key.as_str() {
                "system.M_t" => sys.m_t = count(&key, &v)?,
                "system.M_r" => sys.m_r = count(&key, &v)?,
                "system.N_t" => sys.n_t = count(&key, &v)?,
                "system.L" => sys.snapshots = count(&key, &v)?,
                "system.P_c" => sys.p_c = number(&key, &v)?,
                "system.P_r" => sys.p_r = number(&key, &v)?,
                "system.P_r_dB" => sys.p_r = db_to_linear(number(&key, &v)?),
                "system.sigma2" => sys.sigma2 = number(&key, &v)?,
                "system.d_over_lambda" => sys.d_over_lambda = number(&key, &v)?,
                "system.constellation" => {
                    sys.constellation = Constellation::parse(string(&key, &v)?)?
                }
                "scene.paths" => sys.target.paths = count(&key, &v)?,
                "scene.angle_limit_deg" => sys.target.angle_limit_deg = number(&key, &v)?,
                "scene.gain_variance" => sys.target.gain_variance = number(&key, &v)?,
                "sweep" => sweep = Some(SweepSpec::parse(string(&key, &v)?)?),
                "trials" => cfg.trials = count(&key, &v)?,
                "seed" => {
                    cfg.master_seed = v
                        .as_u64()
                        .ok_or_else(|| Error::config("seed must be an unsigned 64-bit integer"))?
                }
                "out" => cfg.output = Some(PathBuf::from(string(&key, &v)?)),
                "format" => cfg.format = OutputFormat::parse(string(&key, &v)?)?,
                "schemes" => {
                    cfg.schemes = match &v {
                        Value::Array(items) => {
                            let names: Result<Vec<&str>> =
                                items.iter().map(|i| string(&key, i)).collect();
                            parse_schemes(&names?.join(","))?
                        }
                        other => parse_schemes(string(&key, other)?)?,
                    }
                }
                "nmse.aggregation" => {
                    cfg.nmse_aggregation = NmseAggregation::parse(string(&key, &v)?)?
                }
                "detector" => cfg.detector.strategy = DetectorStrategy::parse(string(&key, &v)?)?,
                "sdr.rounds" => cfg.detector.sdr.rounds = count(&key, &v)?,
                "sdr.tol" => cfg.detector.sdr.tolerance = number(&key, &v)?,
                "sdr.max_sweeps" => cfg.detector.sdr.max_sweeps = count(&key, &v)?,
                "sdr.rank" => {
                    cfg.detector.sdr.rank = match v {
                        Value::Null => None,
                        _ => Some(count(&key, &v)?),
                    }
                }
                _ => return Err(Error::config(format!("unknown config key '{key}'"))),
            }
        }
        cfg.sweep = sweep
            .unwrap_or_else(|| SweepSpec::single(SweepVar::Snapshots, cfg.system.snapshots as f64));
        cfg.validate()?;
        Ok(cfg)
    }

    /// System configuration of every sweep point, in sweep order.
    pub fn points(&self) -> Result<Vec<(f64, SystemConfig)>> {
        Ok(self
            .sweep
            .values()?
            .into_iter()
            .map(|v| (v, self.sweep.apply(&self.system, v)))
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("no schemes selected"));
        }
        let sdr = &self.detector.sdr;
        if sdr.rounds == 0 || sdr.max_sweeps == 0 || sdr.rank == Some(0) {
            return Err(Error::config(
                "sdr.rounds, sdr.max_sweeps and sdr.rank must be at least 1",
            ));
        }
        if !(sdr.tolerance.is_finite() && sdr.tolerance >= 0.0) {
            return Err(Error::config("sdr.tol must be a non-negative number"));
        }
        for (value, cfg) in self.points()? {
            let at = |e: Error| Error::config(format!("at {}={value}: {e}", self.sweep.var.name()));
            cfg.validate().map_err(at)?;
            if !(cfg.sigma2 > 0.0) {
                return Err(at(Error::invalid("simulation needs sigma2 > 0")));
            }
            let log2 = cfg.log2_block_candidates();
            if self.schemes.contains(&Method::JointMl)
                && log2 > BLOCK_ENUMERATION_BUDGET_LOG2 as f64
            {
                return Err(at(Error::Capacity {
                    log2_candidates: log2,
                    log2_budget: BLOCK_ENUMERATION_BUDGET_LOG2,
                }));
            }
        }
        Ok(())
    }
}

fn flatten(prefix: &str, map: Map<String, Value>, out: &mut Vec<(String, Value)>) -> Result<()> {
    for (k, v) in map {
        let key = if prefix.is_empty() {
            k
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Object(inner) => flatten(&key, inner, out)?,
            other => {
                if out.iter().any(|(seen, _)| *seen == key) {
                    return Err(Error::config(format!("config key '{key}' given twice")));
                }
                out.push((key, other));
            }
        }
    }
    Ok(())
}

fn number(key: &str, v: &Value) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::config(format!("{key} must be a number")))
}

fn count(key: &str, v: &Value) -> Result<usize> {
    v.as_u64()
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| Error::config(format!("{key} must be a non-negative integer")))
}

fn string<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| Error::config(format!("{key} must be a string")))
}
