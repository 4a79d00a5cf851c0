//! INI-style scenario configuration.
//!
//! ```text
//! # comment
//! [grid]
//! xmin = -128
//! ...
//! [run]
//! scenario = renninger1960
//! ```
//!
//! Sections: `[grid]`, `[source]`, `[detector]`, `[obstacle]`, `[mzi]`,
//! `[run]`. Unknown sections and keys are rejected, as are repeated keys.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::error::Result;
use crate::field::Grid;
use crate::propagator::{ArcMode, ArcProfile, ArcSpec, DEFAULT_BARRIER_STRENGTH};
use crate::states::{SpacetimePoint, TRAVELING_K, TRAVELING_S};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },

    #[error("line {line}: unknown key '{key}' in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },

    #[error("line {line}: key '{key}' repeated in [{section}]")]
    DuplicateKey { line: usize, section: String, key: String },

    #[error("missing section [{0}]")]
    MissingSection(String),

    #[error("missing key '{key}' in [{section}]")]
    MissingKey { section: String, key: String },

    #[error("invalid value for '{key}' in [{section}]: {message}")]
    InvalidValue {
        section: String,
        key: String,
        message: String,
    },

    #[error("unknown scenario '{0}' (expected renninger1960, renninger1953, squarewell or angular_ensemble)")]
    UnknownScenario(String),

    /// A cross-field rule failed; the message starts with the block at fault.
    #[error("{block}: {message}")]
    Invalid { block: String, message: String },
}

fn invalid(block: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        block: block.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Renninger1960,
    Renninger1953,
    SquareWell,
    AngularEnsemble,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Renninger1960 => "renninger1960",
            ScenarioKind::Renninger1953 => "renninger1953",
            ScenarioKind::SquareWell => "squarewell",
            ScenarioKind::AngularEnsemble => "angular_ensemble",
        }
    }

    fn parse(s: &str) -> std::result::Result<Self, ConfigError> {
        Ok(match s {
            "renninger1960" => ScenarioKind::Renninger1960,
            "renninger1953" => ScenarioKind::Renninger1953,
            "squarewell" => ScenarioKind::SquareWell,
            "angular_ensemble" => ScenarioKind::AngularEnsemble,
            other => return Err(ConfigError::UnknownScenario(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    /// Closed-form states.
    Analytic,
    /// Numerically evolved states under the obstacle potential.
    Diffraction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleConfig {
    pub arc: ArcSpec,
    /// Radius of an optional full-circle absorbing ring (outer detector).
    pub outer_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MziConfig {
    pub arm: f64,
    pub k: f64,
    pub width: f64,
    pub block_upper: bool,
    /// Detector at the end of the rendered lower-arm path.
    pub render_detector: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: RunMode,
    pub dt: f64,
    pub residual_dt: f64,
    pub sample_times: Vec<f64>,
    /// Length of the absorber run in the ensemble scenario.
    pub duration: f64,
    /// Number of ring detectors in the ensemble scenario.
    pub ring_count: usize,
    /// Radius of the ensemble's detector ring around the source.
    pub ring_radius: f64,
    pub output_dir: PathBuf,
    pub emit_csv: bool,
    pub emit_images: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub grid: Grid,
    pub source: SpacetimePoint,
    pub detector: SpacetimePoint,
    pub obstacle: Option<ObstacleConfig>,
    pub mzi: Option<MziConfig>,
    pub run: RunConfig,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("grid", &["xmin", "xmax", "nx", "ymin", "ymax", "ny"]),
    ("source", &["x", "y", "t"]),
    ("detector", &["x", "y", "t", "ring_radius", "ring_count"]),
    (
        "obstacle",
        &[
            "radius",
            "theta_start",
            "theta_end",
            "thickness",
            "mode",
            "strength",
            "profile",
            "outer_radius",
        ],
    ),
    ("mzi", &["arm", "k", "width", "block_upper", "render_detector"]),
    (
        "run",
        &[
            "scenario",
            "mode",
            "dt",
            "residual_dt",
            "sample_times",
            "snapshots",
            "duration",
            "output_dir",
            "emit_csv",
            "emit_images",
        ],
    ),
];

/// Raw `key = value` pairs grouped by section.
#[derive(Debug, Default)]
struct Document {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Document {
    fn parse(text: &str) -> std::result::Result<Self, ConfigError> {
        let mut doc = Document::default();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax {
                        line,
                        message: format!("malformed section header '{content}'"),
                    })?
                    .trim();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(ConfigError::UnknownSection {
                        line,
                        name: name.to_string(),
                    });
                }
                doc.sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected 'key = value', got '{content}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let section = current.clone().ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("key '{key}' appears before any section"),
            })?;
            let allowed = SECTIONS
                .iter()
                .find(|(s, _)| *s == section)
                .map(|(_, k)| *k)
                .unwrap_or(&[]);
            if !allowed.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    section,
                    key: key.to_string(),
                });
            }
            let entries = doc.sections.get_mut(&section).expect("section registered");
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(ConfigError::DuplicateKey {
                    line,
                    section,
                    key: key.to_string(),
                });
            }
        }
        Ok(doc)
    }

    fn has(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|s| s.get(key)).map(String::as_str)
    }

    fn bad(section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::InvalidValue {
            section: section.into(),
            key: key.into(),
            message: message.into(),
        }
    }

    fn float(&self, section: &str, key: &str) -> std::result::Result<Option<f64>, ConfigError> {
        self.raw(section, key)
            .map(|v| match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(Self::bad(section, key, format!("'{v}' is not a finite number"))),
            })
            .transpose()
    }

    fn float_or(&self, section: &str, key: &str, default: f64) -> std::result::Result<f64, ConfigError> {
        Ok(self.float(section, key)?.unwrap_or(default))
    }

    fn require_float(&self, section: &str, key: &str) -> std::result::Result<f64, ConfigError> {
        self.float(section, key)?.ok_or_else(|| ConfigError::MissingKey {
            section: section.into(),
            key: key.into(),
        })
    }

    fn count(&self, section: &str, key: &str) -> std::result::Result<Option<usize>, ConfigError> {
        self.raw(section, key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Self::bad(section, key, format!("'{v}' is not a non-negative integer")))
            })
            .transpose()
    }

    fn flag(&self, section: &str, key: &str, default: bool) -> std::result::Result<bool, ConfigError> {
        match self.raw(section, key) {
            None => Ok(default),
            Some("true" | "yes" | "on" | "1") => Ok(true),
            Some("false" | "no" | "off" | "0") => Ok(false),
            Some(v) => Err(Self::bad(section, key, format!("'{v}' is not a boolean"))),
        }
    }

    fn float_list(&self, section: &str, key: &str) -> std::result::Result<Option<Vec<f64>>, ConfigError> {
        self.raw(section, key)
            .map(|v| {
                v.split(',')
                    .map(|item| match item.trim().parse::<f64>() {
                        Ok(x) if x.is_finite() => Ok(x),
                        _ => Err(Self::bad(
                            section,
                            key,
                            format!("'{}' is not a finite number", item.trim()),
                        )),
                    })
                    .collect()
            })
            .transpose()
    }

    fn point(
        &self,
        section: &str,
        default: Option<SpacetimePoint>,
    ) -> std::result::Result<SpacetimePoint, ConfigError> {
        match (self.has(section), default) {
            (false, Some(p)) => Ok(p),
            (false, None) => Err(ConfigError::MissingSection(section.into())),
            (true, _) => Ok(SpacetimePoint::new(
                self.require_float(section, "x")?,
                self.require_float(section, "y")?,
                self.require_float(section, "t")?,
            )),
        }
    }
}

/// Default anchors of the 1960 experiment.
pub const DEFAULT_SOURCE: SpacetimePoint = SpacetimePoint::new(0.0, 0.0, 0.0);
pub const DEFAULT_DETECTOR: SpacetimePoint = SpacetimePoint::new(0.0, -60.0, 28.0);
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_SNAPSHOTS: usize = 5;

/// Parses and validates a configuration; relative output directories are
/// kept as written.
pub fn parse_config(text: &str) -> std::result::Result<ScenarioConfig, ConfigError> {
    let doc = Document::parse(text)?;
    if !doc.has("run") {
        return Err(ConfigError::MissingSection("run".into()));
    }
    let scenario = ScenarioKind::parse(doc.raw("run", "scenario").ok_or_else(|| ConfigError::MissingKey {
        section: "run".into(),
        key: "scenario".into(),
    })?)?;

    let grid = parse_grid(&doc, scenario)?;
    let (source_default, detector_default) = match scenario {
        ScenarioKind::Renninger1960 => (None, None),
        _ => (Some(DEFAULT_SOURCE), Some(DEFAULT_DETECTOR)),
    };
    let source = doc.point("source", source_default)?;
    let detector = doc.point("detector", detector_default)?;
    let obstacle = if doc.has("obstacle") {
        Some(parse_obstacle(&doc)?)
    } else {
        None
    };
    let mzi = match (scenario, doc.has("mzi")) {
        (ScenarioKind::Renninger1953, false) => return Err(ConfigError::MissingSection("mzi".into())),
        (_, true) => Some(parse_mzi(&doc)?),
        _ => None,
    };

    let mode = match doc.raw("run", "mode") {
        None if obstacle.is_some() && scenario == ScenarioKind::Renninger1960 => RunMode::Diffraction,
        None | Some("analytic") => RunMode::Analytic,
        Some("diffraction") => RunMode::Diffraction,
        Some(v) => {
            return Err(Document::bad(
                "run",
                "mode",
                format!("'{v}' is not analytic or diffraction"),
            ))
        }
    };
    let dt = doc.float_or("run", "dt", DEFAULT_DT)?;
    if dt <= 0.0 {
        return Err(Document::bad("run", "dt", "must be positive"));
    }
    let residual_dt = doc.float_or("run", "residual_dt", crate::transition::DEFAULT_RESIDUAL_DT)?;
    if residual_dt <= 0.0 {
        return Err(Document::bad("run", "residual_dt", "must be positive"));
    }
    let explicit_times = doc.float_list("run", "sample_times")?;
    let snapshots = doc.count("run", "snapshots")?;
    if explicit_times.is_some() && snapshots.is_some() {
        return Err(invalid("run", "give either sample_times or snapshots, not both"));
    }
    if explicit_times.is_some() && scenario == ScenarioKind::Renninger1953 {
        return Err(invalid(
            "run",
            "renninger1953 derives its times from the path length; use snapshots",
        ));
    }
    let snapshots = snapshots.unwrap_or(DEFAULT_SNAPSHOTS);
    let sample_times = match explicit_times {
        Some(t) => t,
        None if scenario == ScenarioKind::SquareWell => evenly_spaced(0.0, 1.0, snapshots),
        None => evenly_spaced(source.t, detector.t, snapshots),
    };
    let duration = doc.float_or("run", "duration", 160.0)?;
    if duration <= 0.0 {
        return Err(Document::bad("run", "duration", "must be positive"));
    }
    let ring_count = doc.count("detector", "ring_count")?.unwrap_or(64);
    let ring_radius = doc
        .float("detector", "ring_radius")?
        .unwrap_or_else(|| (detector.x - source.x).hypot(detector.y - source.y));
    if ring_radius <= 0.0 {
        return Err(Document::bad("detector", "ring_radius", "must be positive"));
    }
    let run = RunConfig {
        mode,
        dt,
        residual_dt,
        sample_times,
        duration,
        ring_count,
        ring_radius,
        output_dir: PathBuf::from(doc.raw("run", "output_dir").unwrap_or("out")),
        emit_csv: doc.flag("run", "emit_csv", true)?,
        emit_images: doc.flag("run", "emit_images", true)?,
    };
    let cfg = ScenarioConfig {
        scenario,
        grid,
        source,
        detector,
        obstacle,
        mzi,
        run,
    };
    validate(&cfg)?;
    Ok(cfg)
}

/// Reads a configuration file. A relative `output_dir` is resolved against
/// the directory holding the file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::error::Error::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    if cfg.run.output_dir.is_relative() {
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        cfg.run.output_dir = base.join(&cfg.run.output_dir);
    }
    Ok(cfg)
}

fn evenly_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|j| a + (b - a) * j as f64 / (n - 1) as f64).collect(),
    }
}

fn parse_grid(doc: &Document, scenario: ScenarioKind) -> std::result::Result<Grid, ConfigError> {
    let has_y = ["ymin", "ymax", "ny"].iter().any(|k| doc.raw("grid", k).is_some());
    let grid = if scenario == ScenarioKind::SquareWell {
        if has_y {
            return Err(invalid(
                "grid",
                "the square-well scenario uses a 1D grid; drop ymin/ymax/ny",
            ));
        }
        let nx = doc.count("grid", "nx")?.unwrap_or(2048);
        Grid::new_1d(
            doc.float_or("grid", "xmin", 0.0)?,
            doc.float_or("grid", "xmax", 1.0)?,
            nx,
        )
    } else {
        if !doc.has("grid") {
            return Err(ConfigError::MissingSection("grid".into()));
        }
        let n = |k: &str| {
            doc.count("grid", k)?.ok_or_else(|| ConfigError::MissingKey {
                section: "grid".into(),
                key: k.into(),
            })
        };
        Grid::new_2d(
            doc.require_float("grid", "xmin")?,
            doc.require_float("grid", "xmax")?,
            n("nx")?,
            doc.require_float("grid", "ymin")?,
            doc.require_float("grid", "ymax")?,
            n("ny")?,
        )
    };
    grid.map_err(|e| invalid("grid", e.to_string()))
}

fn parse_obstacle(doc: &Document) -> std::result::Result<ObstacleConfig, ConfigError> {
    let s = "obstacle";
    let mode = match doc.raw(s, "mode").unwrap_or("barrier") {
        "barrier" => ArcMode::Barrier,
        "absorber" => ArcMode::Absorber,
        v => return Err(Document::bad(s, "mode", format!("'{v}' is not barrier or absorber"))),
    };
    let profile = match doc.raw(s, "profile") {
        None => match mode {
            ArcMode::Barrier => ArcProfile::Flat,
            ArcMode::Absorber => ArcProfile::QuadraticRamp,
        },
        Some("flat") => ArcProfile::Flat,
        Some("ramp") => ArcProfile::QuadraticRamp,
        Some(v) => return Err(Document::bad(s, "profile", format!("'{v}' is not flat or ramp"))),
    };
    let default_strength = match mode {
        ArcMode::Barrier => DEFAULT_BARRIER_STRENGTH,
        ArcMode::Absorber => 1.0,
    };
    let arc = ArcSpec {
        radius: doc.float_or(s, "radius", 30.0)?,
        theta_start: doc.float_or(s, "theta_start", 0.0)?,
        theta_end: doc.float_or(s, "theta_end", PI / 2.0)?,
        thickness: doc.float_or(s, "thickness", 2.0)?,
        mode,
        strength: doc.float_or(s, "strength", default_strength)?,
        profile,
    };
    if arc.radius <= 0.0 {
        return Err(Document::bad(s, "radius", "must be positive"));
    }
    if arc.thickness <= 0.0 {
        return Err(Document::bad(s, "thickness", "must be positive"));
    }
    if arc.strength <= 0.0 {
        return Err(Document::bad(s, "strength", "must be positive"));
    }
    if arc.theta_end <= arc.theta_start {
        return Err(invalid(s, "theta_end must be greater than theta_start"));
    }
    if arc.theta_start < 0.0 || arc.theta_end > 2.0 * PI {
        return Err(invalid(s, "angles must lie in [0, 2π]"));
    }
    let outer_radius = doc.float(s, "outer_radius")?;
    if let Some(r) = outer_radius {
        if r <= arc.radius + arc.thickness {
            return Err(Document::bad(s, "outer_radius", "must clear the arc"));
        }
    }
    Ok(ObstacleConfig { arc, outer_radius })
}

fn parse_mzi(doc: &Document) -> std::result::Result<MziConfig, ConfigError> {
    let s = "mzi";
    let cfg = MziConfig {
        arm: doc.float_or(s, "arm", 400.0)?,
        k: doc.float_or(s, "k", TRAVELING_K)?,
        width: doc.float_or(s, "width", TRAVELING_S)?,
        block_upper: doc.flag(s, "block_upper", true)?,
        render_detector: doc.raw(s, "render_detector").unwrap_or("D2").to_string(),
    };
    for (key, v) in [("arm", cfg.arm), ("k", cfg.k), ("width", cfg.width)] {
        if v <= 0.0 {
            return Err(Document::bad(s, key, "must be positive"));
        }
    }
    if !matches!(cfg.render_detector.as_str(), "D1" | "D2") {
        return Err(Document::bad(s, "render_detector", "must be D1 or D2"));
    }
    Ok(cfg)
}

fn validate(cfg: &ScenarioConfig) -> std::result::Result<(), ConfigError> {
    let g = &cfg.grid;
    let two_d = g.dims() == 2;
    if two_d && cfg.scenario != ScenarioKind::Renninger1953 {
        for (name, p) in [("source", cfg.source), ("detector", cfg.detector)] {
            if !g.contains(p.x, p.y) {
                return Err(invalid(name, format!("({}, {}) lies outside the grid box", p.x, p.y)));
            }
        }
        if cfg.detector.t <= cfg.source.t {
            return Err(invalid(
                "detector",
                "detection time must be later than the emission time",
            ));
        }
    }
    let times = &cfg.run.sample_times;
    if cfg.scenario != ScenarioKind::Renninger1953 {
        let mut distinct = times.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 3 {
            return Err(invalid("run", "need at least 3 distinct sample times"));
        }
    }
    if matches!(
        cfg.scenario,
        ScenarioKind::Renninger1960 | ScenarioKind::AngularEnsemble
    ) {
        if let Some(t) = times.iter().find(|t| **t < cfg.source.t || **t > cfg.detector.t) {
            return Err(invalid(
                "run",
                format!("sample time {t} lies outside the emission-detection window"),
            ));
        }
    }
    match cfg.scenario {
        ScenarioKind::Renninger1960 => match (cfg.run.mode, cfg.obstacle) {
            (RunMode::Analytic, Some(_)) => {
                return Err(invalid(
                    "obstacle",
                    "closed-form states ignore obstacles; use mode = diffraction or drop [obstacle]",
                ));
            }
            (RunMode::Diffraction, None) => return Err(ConfigError::MissingSection("obstacle".into())),
            (RunMode::Diffraction, Some(o)) => {
                if o.arc.mode != ArcMode::Barrier || o.outer_radius.is_some() {
                    return Err(invalid(
                        "obstacle",
                        "diffraction runs need a barrier arc without an outer ring",
                    ));
                }
                let span = cfg.detector.t - cfg.source.t;
                for t in times.iter().chain([cfg.detector.t].iter()) {
                    let steps = (t - cfg.source.t) / cfg.run.dt;
                    if (steps - steps.round()).abs() > 1e-6 {
                        return Err(invalid(
                            "run",
                            format!("time {t} is not a whole number of dt steps from the source"),
                        ));
                    }
                }
                if span / cfg.run.dt > 1.0e6 {
                    return Err(invalid("run", "too many time steps"));
                }
            }
            (RunMode::Analytic, None) => {}
        },
        ScenarioKind::AngularEnsemble => {
            let o = cfg
                .obstacle
                .ok_or_else(|| ConfigError::MissingSection("obstacle".into()))?;
            if o.arc.mode != ArcMode::Absorber {
                return Err(invalid("obstacle", "the ensemble scenario needs mode = absorber"));
            }
            if cfg.run.ring_count < 4 {
                return Err(Document::bad(
                    "detector",
                    "ring_count",
                    "need at least 4 ring detectors",
                ));
            }
            let (r, c) = (cfg.run.ring_radius, cfg.source);
            if !(g.contains(c.x - r, c.y - r) && g.contains(c.x + r, c.y + r)) {
                return Err(invalid(
                    "detector",
                    "the detector ring does not fit inside the grid box",
                ));
            }
        }
        ScenarioKind::Renninger1953 => {
            let a = cfg.mzi.as_ref().expect("checked when parsing").arm;
            if !(g.contains(0.0, 0.0) && g.contains(3.0 * a, 2.0 * a)) {
                return Err(invalid(
                    "mzi",
                    format!(
                        "the interferometer spans [0, {}] x [0, {}], outside the grid box",
                        3.0 * a,
                        2.0 * a
                    ),
                ));
            }
            if cfg.run.sample_times.len() < 2 {
                return Err(invalid("run", "need at least 2 snapshots"));
            }
        }
        ScenarioKind::SquareWell => {
            if g.x_axis().min != 0.0 {
                return Err(invalid("grid", "the well occupies [0, a]; set xmin = 0"));
            }
        }
    }
    if cfg.run.mode == RunMode::Diffraction && cfg.scenario != ScenarioKind::Renninger1960 {
        return Err(Document::bad(
            "run",
            "mode",
            "diffraction mode only applies to renninger1960",
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL_1960: &str = "
        [grid]
        xmin = -128
        xmax = 128
        nx = 256
        ymin = -128
        ymax = 128
        ny = 256
        [source]
        x = 0
        y = 0
        t = 0
        [detector]
        x = 0   # default anchor
        y = -60
        t = 28
        [run]
        scenario = renninger1960
    ";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL_1960).unwrap();
        assert_eq!(cfg.scenario, ScenarioKind::Renninger1960);
        assert_eq!(cfg.run.dt, 0.01);
        assert_eq!(cfg.run.sample_times, vec![0.0, 7.0, 14.0, 21.0, 28.0]);
        assert_eq!(cfg.run.mode, RunMode::Analytic);
        assert_eq!(cfg.detector, DEFAULT_DETECTOR);
        assert!(cfg.run.emit_csv && cfg.run.emit_images);
    }

    #[test]
    fn detector_outside_grid_is_named() {
        let text = MINIMAL_1960.replace("y = -60", "y = -600");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().starts_with("detector:"), "{err}");
    }

    #[test]
    fn reversed_arc_is_rejected() {
        let text = format!("{MINIMAL_1960}\n[obstacle]\ntheta_start = 1.0\ntheta_end = 0.5\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("theta_end"), "{err}");
    }

    #[test]
    fn unknown_keys_sections_and_scenarios() {
        let err = parse_config(&MINIMAL_1960.replace("t = 28", "t = 28\ncolour = red")).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { ref key, .. } if key == "colour"));
        let err = parse_config(&format!("{MINIMAL_1960}\n[extras]\n")).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownSection { .. }));
        let err = parse_config(&MINIMAL_1960.replace("renninger1960", "renninger1961")).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownScenario(_)));
        let err = parse_config(&MINIMAL_1960.replace("t = 28", "t = 28\nt = 29")).unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { .. }));
    }

    #[test]
    fn missing_pieces_are_named() {
        let err = parse_config(&MINIMAL_1960.replace("nx = 256", "")).unwrap_err();
        assert_eq!(
            err,
            ConfigError::MissingKey {
                section: "grid".into(),
                key: "nx".into()
            }
        );
        let err = parse_config("[grid]\n").unwrap_err();
        assert_eq!(err, ConfigError::MissingSection("run".into()));
        let err = parse_config("[run]\nscenario = renninger1953\n[grid]\nxmin=0\nxmax=1\nnx=4\nymin=0\nymax=1\nny=4\n")
            .unwrap_err();
        assert_eq!(err, ConfigError::MissingSection("mzi".into()));
    }

    #[test]
    fn bad_values_are_reported() {
        let err = parse_config(&MINIMAL_1960.replace("nx = 256", "nx = lots")).unwrap_err();
        assert!(matches!(err, ConfigError::InvalidValue { ref key, .. } if key == "nx"));
        let err = parse_config(&MINIMAL_1960.replace("t = 28", "t = -1")).unwrap_err();
        assert!(err.to_string().starts_with("detector:"));
        let err = parse_config(&format!("{MINIMAL_1960}dt = 0\n")).unwrap_err();
        assert!(matches!(err, ConfigError::InvalidValue { ref key, .. } if key == "dt"));
        let err = parse_config("x = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1, .. }));
    }

    #[test]
    fn obstacle_selects_diffraction_and_rejects_analytic() {
        let with_arc = format!("{MINIMAL_1960}\n[obstacle]\nradius = 30\n");
        assert_eq!(parse_config(&with_arc).unwrap().run.mode, RunMode::Diffraction);
        let forced = format!("{MINIMAL_1960}mode = analytic\n[obstacle]\nradius = 30\n");
        let err = parse_config(&forced).unwrap_err();
        assert!(err.to_string().starts_with("obstacle:"));
    }

    #[test]
    fn square_well_defaults() {
        let cfg = parse_config("[run]\nscenario = squarewell\nemit_images = no\n").unwrap();
        assert_eq!(cfg.grid, Grid::new_1d(0.0, 1.0, 2048).unwrap());
        assert!(!cfg.run.emit_images);
        assert_eq!(cfg.run.sample_times.len(), 5);
    }
}
