//! Experiment specifications in flat `key = value` text.
//!
//! ```text
//! # fig4-like run
//! M = 4
//! K = 2
//! N = 8
//! N_s = 16
//! sweep.power_dbm = 0:5:20
//! baselines = regular-nece, irregular-nece
//! drops = 100
//! ```
//!
//! Powers are given in dBm and gains in dB; conversion to linear units
//! happens here and nowhere else.

use std::fmt;
use std::path::{Path, PathBuf};

use irris_core::ats::PSchedule;
use irris_core::config::{db_to_linear, dbm_to_watts, NeceParams};
use irris_core::oracle::{predict_complexity, DEFAULT_CAP};
use irris_core::power::SinrTargets;
use irris_core::SystemConfig;
use num_bigint::BigUint;
use serde::Serialize;

use crate::error::{spec_err, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    RegularNece,
    IrregularNece,
    RegularSr,
    IrregularSr,
    Exhaustive,
}

impl Baseline {
    pub const ALL: [Baseline; 5] = [
        Baseline::RegularNece,
        Baseline::IrregularNece,
        Baseline::RegularSr,
        Baseline::IrregularSr,
        Baseline::Exhaustive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::RegularNece => "regular-nece",
            Baseline::IrregularNece => "irregular-nece",
            Baseline::RegularSr => "regular-sr",
            Baseline::IrregularSr => "irregular-sr",
            Baseline::Exhaustive => "exhaustive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Baseline::ALL.into_iter().find(|b| b.name() == s)
    }

    pub fn is_irregular(self) -> bool {
        !matches!(self, Baseline::RegularNece | Baseline::RegularSr)
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The single swept variable of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    PowerDbm(Vec<f64>),
    GridPoints(Vec<usize>),
    Elements(Vec<usize>),
    /// Per-user SINR target in dB; switches the experiment to power
    /// minimization.
    TargetDb(Vec<f64>),
}

impl Sweep {
    pub fn axis(&self) -> &'static str {
        match self {
            Sweep::PowerDbm(_) => "power_dbm",
            Sweep::GridPoints(_) => "N_s",
            Sweep::Elements(_) => "N",
            Sweep::TargetDb(_) => "mu_db",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::PowerDbm(v) | Sweep::TargetDb(v) => v.len(),
            Sweep::GridPoints(v) | Sweep::Elements(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize) -> f64 {
        match self {
            Sweep::PowerDbm(v) | Sweep::TargetDb(v) => v[i],
            Sweep::GridPoints(v) | Sweep::Elements(v) => v[i] as f64,
        }
    }

    pub fn label(&self, i: usize) -> String {
        format!("{}", self.value(i))
    }

    pub fn minimizes_power(&self) -> bool {
        matches!(self, Sweep::TargetDb(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub scenario: SystemConfig,
    pub sweep: Sweep,
    pub drops: usize,
    pub baselines: Vec<Baseline>,
    pub output: Option<PathBuf>,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    /// Record wall-clock seconds per row. Off gives byte-reproducible CSVs.
    pub timing: bool,
    /// Write one topology bitmap per irregular solution.
    pub topologies: bool,
    pub oracle_cap: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let scenario = SystemConfig::default();
        ExperimentSpec {
            name: "experiment".into(),
            sweep: Sweep::PowerDbm(vec![10.0]),
            scenario,
            drops: 100,
            baselines: vec![Baseline::RegularNece, Baseline::IrregularNece],
            output: None,
            workers: 0,
            timing: true,
            topologies: false,
            oracle_cap: DEFAULT_CAP,
        }
    }
}

fn parse_list<T>(key: &str, value: &str, one: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| one(s).ok_or_else(|| spec_err(key, format!("cannot parse `{s}`"))))
        .collect()
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| spec_err(key, format!("expected a number, got `{value}`")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse()
        .map_err(|_| spec_err(key, format!("expected a nonnegative integer, got `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        v => Err(spec_err(key, format!("expected true or false, got `{v}`"))),
    }
}

/// Numbers as a comma list or `start:step:end` (inclusive).
fn parse_floats(key: &str, value: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    let out = match parts.as_slice() {
        [start, step, end] => {
            let (start, step, end) = (parse_f64(key, start)?, parse_f64(key, step)?, parse_f64(key, end)?);
            if step <= 0.0 || end < start {
                return Err(spec_err(key, "range needs start <= end and a positive step"));
            }
            let count = ((end - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| start + step * i as f64).collect()
        }
        [_] => parse_list(key, value, |s| s.parse::<f64>().ok().filter(|v| v.is_finite()))?,
        _ => return Err(spec_err(key, "expected a list or start:step:end")),
    };
    if out.is_empty() {
        return Err(spec_err(key, "empty list"));
    }
    Ok(out)
}

fn parse_sizes(key: &str, value: &str) -> Result<Vec<usize>> {
    let floats = parse_floats(key, value)?;
    floats
        .into_iter()
        .map(|f| {
            if f >= 0.0 && f.fract() == 0.0 {
                Ok(f as usize)
            } else {
                Err(spec_err(key, format!("{f} is not a nonnegative integer")))
            }
        })
        .collect()
}

fn parse_point(key: &str, value: &str) -> Result<[f64; 2]> {
    let v = parse_list(key, value, |s| s.parse::<f64>().ok())?;
    match v.as_slice() {
        [x, y] => Ok([*x, *y]),
        _ => Err(spec_err(key, "expected `x, y`")),
    }
}

/// `adaptive`, a constant `p`, or steps `iter:p, iter:p`.
fn parse_schedule(key: &str, value: &str) -> Result<Option<PSchedule>> {
    let value = value.trim();
    if value == "adaptive" {
        return Ok(None);
    }
    if let Ok(p) = value.parse::<usize>() {
        return Ok(Some(PSchedule::constant(p)));
    }
    let steps = value
        .split(',')
        .map(|s| {
            let (i, p) = s
                .split_once(':')
                .ok_or_else(|| spec_err(key, format!("bad step `{s}`, expected iteration:p")))?;
            Ok((parse_usize(key, i)?, parse_usize(key, p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    PSchedule::from_steps(steps)
        .map(Some)
        .map_err(|e| spec_err(key, e.to_string()))
}

/// Splits text into `(line, key, value)` triples, rejecting duplicates.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| HarnessError::Syntax {
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let k = k.trim().to_string();
        if k.is_empty() {
            return Err(HarnessError::Syntax {
                line: i + 1,
                message: "empty key".into(),
            });
        }
        if out.iter().any(|(_, prev, _)| *prev == k) {
            return Err(HarnessError::Syntax {
                line: i + 1,
                message: format!("duplicate key `{k}`"),
            });
        }
        out.push((i + 1, k, v.trim().to_string()));
    }
    Ok(out)
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = ExperimentSpec::default();
        let mut sweep: Option<Sweep> = None;
        let mut weights: Option<Vec<f64>> = None;
        let mut screening: Option<NeceParams> = None;
        for (_, key, value) in parse_pairs(text)? {
            let k = key.as_str();
            let v = value.as_str();
            let s = &mut spec.scenario;
            match k {
                "name" => spec.name = v.to_string(),
                "seed" => s.seed = v.parse().map_err(|_| spec_err(k, "expected an unsigned integer"))?,
                "drops" => spec.drops = parse_usize(k, v)?,
                "workers" => spec.workers = parse_usize(k, v)?,
                "output" => spec.output = Some(PathBuf::from(v)),
                "timing" => spec.timing = parse_bool(k, v)?,
                "topologies" => spec.topologies = parse_bool(k, v)?,
                "oracle.cap" => spec.oracle_cap = v.parse().map_err(|_| spec_err(k, "expected an integer"))?,
                "baselines" => {
                    let mut list = parse_list(k, v, Baseline::parse)?;
                    list.sort();
                    list.dedup();
                    spec.baselines = list;
                }
                "M" => s.antennas = parse_usize(k, v)?,
                "K" => s.users = parse_usize(k, v)?,
                "N" => s.elements = parse_usize(k, v)?,
                "N_s" => s.grid_points = parse_usize(k, v)?,
                "b" => s.phase_bits = parse_usize(k, v)? as u32,
                "power_dbm" => s.max_power = dbm_to_watts(parse_f64(k, v)?),
                "noise_dbm" => s.noise_power = dbm_to_watts(parse_f64(k, v)?),
                "weights" => weights = Some(parse_floats(k, v)?),
                "redraw_positions" => s.redraw_positions = parse_bool(k, v)?,
                "grid" => {
                    let (r, c) = v
                        .split_once('x')
                        .ok_or_else(|| spec_err(k, "expected `rows x cols`"))?;
                    s.grid_shape = Some((parse_usize(k, r)?, parse_usize(k, c)?));
                }
                "geometry.bs" => s.geometry.bs = parse_point(k, v)?,
                "geometry.ris" => s.geometry.ris = parse_point(k, v)?,
                "geometry.ue_center" => s.geometry.ue_center = parse_point(k, v)?,
                "geometry.ue_radius" => s.geometry.ue_radius = parse_f64(k, v)?,
                "pathloss.c_ris_db" => s.path_loss.c_ris = db_to_linear(parse_f64(k, v)?),
                "pathloss.c_direct_db" => s.path_loss.c_direct = db_to_linear(parse_f64(k, v)?),
                "pathloss.alpha_br" => s.path_loss.alpha_bs_ris = parse_f64(k, v)?,
                "pathloss.alpha_ru" => s.path_loss.alpha_ris_ue = parse_f64(k, v)?,
                "pathloss.alpha_bu" => s.path_loss.alpha_bs_ue = parse_f64(k, v)?,
                "ats.Q" => s.ats.neighbors = parse_usize(k, v)?,
                "ats.I_T" => s.ats.iterations = parse_usize(k, v)?,
                "ats.H_size" => s.ats.tabu_size = parse_usize(k, v)?,
                "ats.p" => s.ats.schedule = parse_schedule(k, v)?,
                "ats.retry" => s.ats.retry_factor = parse_usize(k, v)?,
                "nece.I_N" => s.nece.iterations = parse_usize(k, v)?,
                "nece.C" => s.nece.candidates = parse_usize(k, v)?,
                "nece.C_pr" => s.nece.primary_elites = parse_usize(k, v)?,
                "nece.epsilon" => s.nece.smoothing = parse_f64(k, v)?,
                "ats.screen.I_N" | "ats.screen.C" | "ats.screen.C_pr" => {
                    let p = screening.get_or_insert_with(|| NeceParams {
                        iterations: 3,
                        candidates: 50,
                        primary_elites: 10,
                        ..NeceParams::default()
                    });
                    let n = parse_usize(k, v)?;
                    match k {
                        "ats.screen.I_N" => p.iterations = n,
                        "ats.screen.C" => p.candidates = n,
                        _ => p.primary_elites = n,
                    }
                }
                "sweep.power_dbm" | "sweep.N_s" | "sweep.N" | "sweep.mu_db" => {
                    if let Some(prev) = &sweep {
                        return Err(spec_err(
                            k,
                            format!("only one sweep axis allowed, already sweeping {}", prev.axis()),
                        ));
                    }
                    sweep = Some(match k {
                        "sweep.power_dbm" => Sweep::PowerDbm(parse_floats(k, v)?),
                        "sweep.N_s" => Sweep::GridPoints(parse_sizes(k, v)?),
                        "sweep.N" => Sweep::Elements(parse_sizes(k, v)?),
                        _ => Sweep::TargetDb(parse_floats(k, v)?),
                    });
                }
                _ => return Err(spec_err(k, "unknown key")),
            }
        }
        let s = &mut spec.scenario;
        s.weights = weights.unwrap_or_else(|| vec![1.0; s.users]);
        if screening.is_some() {
            s.ats.screening = screening;
        }
        if let Some(sw) = sweep {
            spec.sweep = sw;
        } else {
            spec.sweep = Sweep::PowerDbm(vec![irris_core::config::watts_to_dbm(s.max_power)]);
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ExperimentSpec::parse(&text)
    }

    /// Scenario at sweep point `i`.
    pub fn config_at(&self, i: usize) -> SystemConfig {
        let mut cfg = self.scenario.clone();
        match &self.sweep {
            Sweep::PowerDbm(v) => cfg.max_power = dbm_to_watts(v[i]),
            Sweep::GridPoints(v) => {
                cfg.grid_points = v[i];
                if cfg.grid_shape.is_some_and(|(r, c)| r * c != v[i]) {
                    cfg.grid_shape = None;
                }
            }
            Sweep::Elements(v) => cfg.elements = v[i],
            Sweep::TargetDb(_) => {}
        }
        cfg
    }

    /// SINR targets at sweep point `i`, in power-minimization experiments.
    pub fn targets_at(&self, i: usize) -> Option<SinrTargets> {
        match &self.sweep {
            Sweep::TargetDb(v) => SinrTargets::uniform_db(self.scenario.users, v[i]).ok(),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.drops == 0 {
            return Err(spec_err("drops", "must be at least 1"));
        }
        if self.baselines.is_empty() {
            return Err(spec_err("baselines", "no baselines selected"));
        }
        if self.sweep.is_empty() {
            return Err(spec_err(&format!("sweep.{}", self.sweep.axis()), "empty sweep"));
        }
        let sweep_key = format!("sweep.{}", self.sweep.axis());
        for i in 0..self.sweep.len() {
            let cfg = self.config_at(i);
            cfg.validate().map_err(|e| spec_err(&sweep_key, format!("at {}: {e}", self.sweep.label(i))))?;
            if let Some((r, c)) = cfg.grid_shape {
                if r * c != cfg.grid_points {
                    return Err(spec_err("grid", format!("{r}x{c} does not hold N_s = {}", cfg.grid_points)));
                }
            }
            if self.baselines.contains(&Baseline::Exhaustive) {
                let predicted = predict_complexity(&cfg).exhaustive;
                if predicted > BigUint::from(self.oracle_cap) {
                    return Err(spec_err(
                        "baselines",
                        format!(
                            "exhaustive search needs {predicted} evaluations at {} = {}, above the cap {}",
                            self.sweep.axis(),
                            self.sweep.label(i),
                            self.oracle_cap
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}
