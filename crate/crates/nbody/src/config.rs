//! Run configuration: a flat `key = value` text format and its validation.
//!
//! One assignment per line; `#` starts a comment. Scalar values are plain
//! numbers, per-body vectors are bracketed comma-separated groups
//! (`positions = [x, y, z], [x, y, z]`), masses are a bare comma-separated
//! list, and `softening` is either one scalar for every pair or a full
//! symmetric matrix written as bracketed rows. Keys not listed below are
//! rejected so that typos fail loudly.
//!
//! Recognized keys: `kind`, `g`, `masses`, `positions`, `velocities`,
//! `softening`, `order`, `tol`, `t_end`, `b`, `out`, `samples`, `cadence`,
//! `box`.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::forces::{BodySystem, ForceModel, ModelKind, Softening, State};

/// Default series truncation order.
pub const DEFAULT_ORDER: usize = 20;

/// Smallest and largest accepted truncation orders.
pub const ORDER_RANGE: (usize, usize) = (4, 60);

/// Default step-control tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default sample count for sampling probes.
pub const DEFAULT_SAMPLES: usize = 100;

/// Default half-width of the sampling box.
pub const DEFAULT_BOX: f64 = 1.0;

/// Softening as given in a config file: one length for all pairs or a full
/// symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum SofteningSpec {
    Uniform(f64),
    Matrix(Vec<Vec<f64>>),
}

/// Parsed and validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kind: ModelKind,
    pub g: Option<f64>,
    pub masses: Option<Vec<f64>>,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Option<Vec<Vec<f64>>>,
    pub softening: Option<SofteningSpec>,
    pub order: usize,
    pub tol: f64,
    pub t_end: Option<f64>,
    pub b: Option<f64>,
    pub out: Option<PathBuf>,
    pub samples: usize,
    pub cadence: Option<f64>,
    pub box_half_width: f64,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_f64(key: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| config_err(format!("{key}: expected a number, got `{}`", raw.trim())))
}

fn parse_usize(key: &str, raw: &str) -> Result<usize> {
    raw.trim()
        .parse::<usize>()
        .map_err(|_| config_err(format!("{key}: expected a non-negative integer, got `{}`", raw.trim())))
}

/// Parses a bare comma-separated list of numbers.
fn parse_number_list(key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|piece| parse_f64(key, piece))
        .collect()
}

/// Parses a sequence of bracketed groups: `[a, b, c], [d, e, f]`.
fn parse_groups(key: &str, raw: &str) -> Result<Vec<Vec<f64>>> {
    let mut groups = Vec::new();
    let mut rest = raw.trim();
    while !rest.is_empty() {
        let Some(open) = rest.find('[') else {
            return Err(config_err(format!(
                "{key}: expected `[`, got `{rest}`"
            )));
        };
        if !rest[..open].trim().is_empty() && !rest[..open].trim_matches(|c: char| c == ',' || c.is_whitespace()).is_empty() {
            return Err(config_err(format!(
                "{key}: unexpected text `{}` before `[`",
                &rest[..open]
            )));
        }
        let Some(close) = rest[open..].find(']') else {
            return Err(config_err(format!("{key}: unclosed `[`")));
        };
        let inner = &rest[open + 1..open + close];
        groups.push(parse_number_list(key, inner)?);
        rest = rest[open + close + 1..].trim_start();
        if let Some(stripped) = rest.strip_prefix(',') {
            rest = stripped.trim_start();
        } else if !rest.is_empty() && !rest.starts_with('[') {
            return Err(config_err(format!(
                "{key}: expected `,` between groups, got `{rest}`"
            )));
        }
    }
    if groups.is_empty() {
        return Err(config_err(format!("{key}: no bracketed groups found")));
    }
    Ok(groups)
}

impl RunConfig {
    /// Parses the flat `key = value` format. Unknown and duplicate keys are
    /// rejected; each value must parse for its key's type.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut g = None;
        let mut masses = None;
        let mut positions = None;
        let mut velocities = None;
        let mut softening = None;
        let mut order = None;
        let mut tol = None;
        let mut t_end = None;
        let mut b = None;
        let mut out = None;
        let mut samples = None;
        let mut cadence = None;
        let mut box_half_width = None;

        macro_rules! set_once {
            ($slot:ident, $key:expr, $value:expr) => {{
                if $slot.is_some() {
                    return Err(config_err(format!("duplicate key `{}`", $key)));
                }
                $slot = Some($value);
            }};
        }

        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_err(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if value.is_empty() {
                return Err(config_err(format!("{key}: empty value")));
            }
            match key {
                "kind" => {
                    let k = match value {
                        "newtonian" => ModelKind::Newtonian,
                        "softened" => ModelKind::Softened,
                        "pendulum" => ModelKind::Pendulum,
                        other => {
                            return Err(config_err(format!(
                                "kind: expected newtonian, softened, or pendulum, got `{other}`"
                            )))
                        }
                    };
                    set_once!(kind, "kind", k);
                }
                "g" => set_once!(g, "g", parse_f64("g", value)?),
                "masses" => set_once!(masses, "masses", parse_number_list("masses", value)?),
                "positions" => {
                    set_once!(positions, "positions", parse_groups("positions", value)?)
                }
                "velocities" => {
                    set_once!(velocities, "velocities", parse_groups("velocities", value)?)
                }
                "softening" => {
                    let spec = if value.contains('[') {
                        SofteningSpec::Matrix(parse_groups("softening", value)?)
                    } else {
                        SofteningSpec::Uniform(parse_f64("softening", value)?)
                    };
                    set_once!(softening, "softening", spec);
                }
                "order" => set_once!(order, "order", parse_usize("order", value)?),
                "tol" => set_once!(tol, "tol", parse_f64("tol", value)?),
                "t_end" => set_once!(t_end, "t_end", parse_f64("t_end", value)?),
                "b" => set_once!(b, "b", parse_f64("b", value)?),
                "out" => set_once!(out, "out", PathBuf::from(value)),
                "samples" => set_once!(samples, "samples", parse_usize("samples", value)?),
                "cadence" => set_once!(cadence, "cadence", parse_f64("cadence", value)?),
                "box" => set_once!(box_half_width, "box", parse_f64("box", value)?),
                other => return Err(config_err(format!("unknown key `{other}`"))),
            }
        }

        let config = RunConfig {
            kind: kind.ok_or_else(|| config_err("missing required key `kind`"))?,
            g,
            masses,
            positions: positions
                .ok_or_else(|| config_err("missing required key `positions`"))?,
            velocities,
            softening,
            order: order.unwrap_or(DEFAULT_ORDER),
            tol: tol.unwrap_or(DEFAULT_TOL),
            t_end,
            b,
            out,
            samples: samples.unwrap_or(DEFAULT_SAMPLES),
            cadence,
            box_half_width: box_half_width.unwrap_or(DEFAULT_BOX),
        };
        config.validate()?;
        Ok(config)
    }

    /// Reads and parses a config file.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.order < ORDER_RANGE.0 || self.order > ORDER_RANGE.1 {
            return Err(config_err(format!(
                "order: {} outside supported range {}..={}",
                self.order, ORDER_RANGE.0, ORDER_RANGE.1
            )));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(config_err(format!(
                "tol: must be positive and finite, got {}",
                self.tol
            )));
        }
        if self.samples == 0 {
            return Err(config_err("samples: must be at least 1"));
        }
        if let Some(c) = self.cadence {
            if !(c > 0.0) || !c.is_finite() {
                return Err(config_err(format!(
                    "cadence: must be positive and finite, got {c}"
                )));
            }
        }
        if !(self.box_half_width > 0.0) || !self.box_half_width.is_finite() {
            return Err(config_err(format!(
                "box: must be positive and finite, got {}",
                self.box_half_width
            )));
        }
        if let Some(b) = self.b {
            if !(b > 0.0) || !b.is_finite() {
                return Err(config_err(format!("b: must be positive and finite, got {b}")));
            }
        }
        if let Some(t) = self.t_end {
            if !t.is_finite() {
                return Err(config_err(format!("t_end: must be finite, got {t}")));
            }
        }

        match self.kind {
            ModelKind::Pendulum => {
                if self.masses.is_some() || self.g.is_some() || self.softening.is_some() {
                    return Err(config_err(
                        "pendulum configs take no masses, g, or softening",
                    ));
                }
                if self.positions.len() != 1 || self.positions[0].len() != 1 {
                    return Err(config_err(
                        "pendulum positions must be a single one-entry group `[theta]`",
                    ));
                }
            }
            ModelKind::Newtonian | ModelKind::Softened => {
                let masses = self
                    .masses
                    .as_ref()
                    .ok_or_else(|| config_err("missing required key `masses`"))?;
                let n = masses.len();
                if self.positions.len() != n {
                    return Err(config_err(format!(
                        "positions: expected {n} groups to match the masses, got {}",
                        self.positions.len()
                    )));
                }
                if let Some(bad) = self.positions.iter().find(|p| p.len() != 3) {
                    return Err(config_err(format!(
                        "positions: each group needs 3 entries, got {bad:?}"
                    )));
                }
                match (self.kind, &self.softening) {
                    (ModelKind::Newtonian, Some(_)) => {
                        return Err(config_err(
                            "softening is only valid for kind = softened",
                        ));
                    }
                    (ModelKind::Softened, None) => {
                        return Err(config_err(
                            "kind = softened requires a `softening` key",
                        ));
                    }
                    _ => {}
                }
            }
        }

        if let Some(v) = &self.velocities {
            if v.len() != self.positions.len() {
                return Err(config_err(format!(
                    "velocities: expected {} groups to match the positions, got {}",
                    self.positions.len(),
                    v.len()
                )));
            }
            for (p, vel) in self.positions.iter().zip(v) {
                if p.len() != vel.len() {
                    return Err(config_err(
                        "velocities: group shapes must match the positions",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Builds the configured force model.
    pub fn build_model(&self) -> Result<ForceModel> {
        match self.kind {
            ModelKind::Pendulum => Ok(ForceModel::pendulum()),
            ModelKind::Newtonian | ModelKind::Softened => {
                let masses = self.masses.clone().expect("validated");
                let n = masses.len();
                let softening = match &self.softening {
                    None => None,
                    Some(SofteningSpec::Uniform(eps)) => Some(Softening::uniform(n, *eps)?),
                    Some(SofteningSpec::Matrix(rows)) => {
                        if rows.len() != n {
                            return Err(config_err(format!(
                                "softening: matrix has {} rows for {n} bodies",
                                rows.len()
                            )));
                        }
                        Some(Softening::from_matrix(rows)?)
                    }
                };
                let system = BodySystem::new(masses, self.g.unwrap_or(1.0), softening)?;
                match self.kind {
                    ModelKind::Newtonian => ForceModel::newtonian(system),
                    _ => ForceModel::softened(system),
                }
            }
        }
    }

    /// Flat initial positions.
    pub fn flat_positions(&self) -> Vec<f64> {
        self.positions.iter().flatten().copied().collect()
    }

    /// Flat initial velocities (zero when the key is absent).
    pub fn flat_velocities(&self) -> Vec<f64> {
        match &self.velocities {
            Some(v) => v.iter().flatten().copied().collect(),
            None => vec![0.0; self.flat_positions().len()],
        }
    }

    /// Initial state at `t = 0`.
    pub fn initial_state(&self) -> Result<State> {
        State::new(0.0, self.flat_positions(), self.flat_velocities())
    }

    /// `t_end`, required for commands that integrate.
    pub fn require_t_end(&self) -> Result<f64> {
        self.t_end
            .ok_or_else(|| config_err("missing required key `t_end`"))
    }
}
