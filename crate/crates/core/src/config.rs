//! Run configuration: a flat `key = value` file merged with command-line
//! overrides, then validated into a fully resolved [`RunConfig`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::presets;
use crate::specfun::MAX_ORDER;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Profile,
    Scatter,
    Dn,
    Resonance,
    Quantum,
    Fig1Left,
    Fig1Right,
    Fig2,
}

impl Task {
    pub const ALL: [Task; 8] = [
        Task::Profile,
        Task::Scatter,
        Task::Dn,
        Task::Resonance,
        Task::Quantum,
        Task::Fig1Left,
        Task::Fig1Right,
        Task::Fig2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Profile => "profile",
            Task::Scatter => "scatter",
            Task::Dn => "dn",
            Task::Resonance => "resonance",
            Task::Quantum => "quantum",
            Task::Fig1Left => "fig1-left",
            Task::Fig1Right => "fig1-right",
            Task::Fig2 => "fig2",
        }
    }

    fn needs_positive_energy(self) -> bool {
        matches!(self, Task::Scatter | Task::Quantum | Task::Fig1Left | Task::Fig2)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| config_err("task", format!("unknown task `{s}`")))
    }
}

fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub task: Task,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "R")]
    pub r_trunc: f64,
    pub n_fine_layers: usize,
    pub l_max: usize,
    #[serde(rename = "Q_in")]
    pub q_in: f64,
    pub m: f64,
    /// Radius of the region carrying `Q_in`; defaults to `R`.
    #[serde(rename = "R_Q")]
    pub q_radius: Option<f64>,
    pub out_dir: PathBuf,
    /// Manifest path; defaults to `<out_dir>/manifest.json`.
    pub manifest: Option<PathBuf>,
    pub q_scan: (f64, f64),
    pub e_scan: (f64, f64),
    pub points_per_unit: usize,
    pub scan_l_max: usize,
    pub segment_samples: usize,
    pub angle_samples: usize,
}

impl RunConfig {
    pub fn new(task: Task) -> Self {
        RunConfig {
            task,
            energy: presets::DESIGN_ENERGY,
            r_trunc: 1.005,
            n_fine_layers: presets::DEFAULT_FINE_LAYERS,
            l_max: 7,
            q_in: presets::CLOAKING_Q,
            m: 1e8,
            q_radius: None,
            out_dir: PathBuf::from("out"),
            manifest: None,
            q_scan: (-3.2, -1.8),
            e_scan: (1.5, 2.5),
            points_per_unit: 2000,
            scan_l_max: 2,
            segment_samples: 301,
            angle_samples: 181,
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "task" => self.task = value.parse()?,
            "E" => self.energy = parse(key, value)?,
            "R" => self.r_trunc = parse(key, value)?,
            "n_fine_layers" => self.n_fine_layers = parse(key, value)?,
            "l_max" => self.l_max = parse(key, value)?,
            "Q_in" => self.q_in = parse(key, value)?,
            "m" => self.m = parse(key, value)?,
            "R_Q" => self.q_radius = Some(parse(key, value)?),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "manifest" => self.manifest = Some(PathBuf::from(value)),
            "q_scan" => self.q_scan = parse_pair(key, value)?,
            "e_scan" => self.e_scan = parse_pair(key, value)?,
            "points_per_unit" => self.points_per_unit = parse(key, value)?,
            "scan_l_max" => self.scan_l_max = parse(key, value)?,
            "segment_samples" => self.segment_samples = parse(key, value)?,
            "angle_samples" => self.angle_samples = parse(key, value)?,
            other => return Err(config_err(other, "unknown key")),
        }
        Ok(())
    }

    /// Applies a flat config text: one `key = value` per line, `#` comments.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config_err("config", format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.apply_text(&text)
    }

    pub fn interior_radius(&self) -> f64 {
        self.q_radius.unwrap_or(self.r_trunc)
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.manifest.clone().unwrap_or_else(|| self.out_dir.join("manifest.json"))
    }

    /// Checks every range and returns the resolved config.
    pub fn validate(mut self) -> Result<Self> {
        if !(self.energy.is_finite()) {
            return Err(config_err("E", "must be finite"));
        }
        if self.task.needs_positive_energy() && self.energy <= 0.0 {
            return Err(config_err("E", format!("task {} needs E > 0", self.task)));
        }
        if !(self.r_trunc > 1.0 && self.r_trunc < 2.0) {
            return Err(config_err("R", format!("must lie in (1, 2), got {}", self.r_trunc)));
        }
        if self.n_fine_layers == 0 || !self.n_fine_layers.is_multiple_of(2) {
            return Err(config_err(
                "n_fine_layers",
                format!("two-phase cells need a positive even count, got {}", self.n_fine_layers),
            ));
        }
        if self.l_max > MAX_ORDER {
            return Err(config_err("l_max", format!("must not exceed {MAX_ORDER}")));
        }
        if !self.q_in.is_finite() {
            return Err(config_err("Q_in", "must be finite"));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(config_err("m", "must be positive"));
        }
        let rq = self.interior_radius();
        if !(rq > 0.0 && rq <= self.r_trunc) {
            return Err(config_err("R_Q", format!("must lie in (0, R], got {rq}")));
        }
        self.q_radius = Some(rq);
        for (name, (lo, hi)) in [("q_scan", self.q_scan), ("e_scan", self.e_scan)] {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(config_err(name, format!("need lo < hi, got ({lo}, {hi})")));
            }
        }
        if self.points_per_unit < 10 {
            return Err(config_err("points_per_unit", "must be at least 10"));
        }
        if self.scan_l_max > MAX_ORDER {
            return Err(config_err("scan_l_max", format!("must not exceed {MAX_ORDER}")));
        }
        if self.segment_samples < 2 || self.angle_samples < 2 {
            return Err(config_err("segment_samples", "sample counts must be at least 2"));
        }
        Ok(self)
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| config_err(key.trim(), format!("cannot parse `{value}`")))
}

fn parse_pair(key: &str, value: &str) -> Result<(f64, f64)> {
    let (a, b) = value
        .split_once(',')
        .ok_or_else(|| config_err(key.trim(), "expected `lo,hi`"))?;
    Ok((parse(key, a.trim())?, parse(key, b.trim())?))
}
