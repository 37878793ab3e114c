//! Run configuration.
//!
//! ```toml
//! phase_convention = "oracle_minus_i"   # or "paper_plus_i"
//!
//! [model]
//! kind = "harmonic"        # harmonic | morse_class | scaling_class
//! omega = 1.0              # harmonic: omega; morse_class: c1, c2; scaling_class: r1, q
//!
//! [coupling]
//! Omega = 1.0
//! Delta = 0.3
//!
//! [constants]
//! hbar = 1.0               # optional, default 1
//!
//! [truncation]
//! N = 10
//!
//! [time]
//! start = 0.0
//! stop = 1.0
//! steps = 20
//!
//! [series]
//! order = 40               # optional
//!
//! [initial_state]          # channel + level, or amplitudes
//! channel = "down"
//! level = 1
//!
//! [tolerances]             # optional overrides, see `TOLERANCES`
//! identity = 1e-12
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Every error names the offending field by its dotted path.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use sijc_core::{Coupling, LadderSpectrum, Layout, ModelFamily, Phase, ShapeInvariantModel, C64};
use toml::{Table, Value};

/// Tolerance names with their defaults.
pub const TOLERANCES: [(&str, f64); 15] = [
    ("spectrum_residual", 1e-10),
    ("spectrum_pairing", 1e-10),
    ("orthonormality", 1e-12),
    ("eigenvector_residual", 1e-10),
    ("identity", 1e-12),
    ("propagator_second_order", 1e-6),
    ("propagator_unitarity", 1e-10),
    ("propagator_oracle", 1e-9),
    ("f_matrix_dual_path", 1e-10),
    ("product_expansion", 1e-10),
    ("particular_initial_value", 1e-14),
    ("particular_initial_slope", 1e-9),
    ("particular_ode", 1e-5),
    ("resonant_inversion_oracle", 1e-8),
    ("series_tail", 1e-10),
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config is not valid TOML: {0}")]
    Syntax(String),
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
}

impl ConfigError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Field {
            field: field.into(),
            message: message.into(),
        }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// `steps + 1` equally spaced samples including both ends.
    pub fn samples(&self) -> Vec<f64> {
        let h = (self.stop - self.start) / self.steps as f64;
        (0..=self.steps)
            .map(|k| if k == self.steps { self.stop } else { self.start + k as f64 * h })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ShapeInvariantModel,
    pub ladder: LadderSpectrum,
    pub levels: usize,
    pub time: TimeGrid,
    pub series_order: usize,
    pub phase: Phase,
    /// Normalized, in the two-channel basis.
    pub initial_state: Option<DVector<C64>>,
    pub initial_label: Option<String>,
    pub tolerances: BTreeMap<String, f64>,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn coupling(&self) -> &Coupling {
        &self.model.coupling
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
        let root = Fields::new("", &root);
        root.only(&[
            "model",
            "coupling",
            "constants",
            "truncation",
            "time",
            "series",
            "phase_convention",
            "initial_state",
            "tolerances",
            "output",
        ])?;

        let coupling_t = root.table("coupling")?;
        coupling_t.only(&["Omega", "Delta"])?;
        let hbar = match root.opt_table("constants")? {
            Some(c) => {
                c.only(&["hbar"])?;
                c.opt_float("hbar")?.unwrap_or(1.0)
            }
            None => 1.0,
        };
        let rabi = coupling_t.float("Omega")?;
        let detuning = coupling_t.float("Delta")?;
        let coupling = Coupling::new(rabi, detuning, hbar).map_err(|e| {
            let field = match &e {
                sijc_core::Error::InvalidParameter { name: "hbar", .. } => "constants.hbar",
                sijc_core::Error::InvalidParameter { name: "Delta", .. } => "coupling.Delta",
                _ => "coupling.Omega",
            };
            ConfigError::field(field, e.to_string())
        })?;

        let model_t = root.table("model")?;
        let kind = model_t.string("kind")?;
        let family = match kind.as_str() {
            "harmonic" => {
                model_t.only(&["kind", "omega"])?;
                ModelFamily::Harmonic {
                    omega: model_t.float("omega")?,
                }
            }
            "morse_class" => {
                model_t.only(&["kind", "c1", "c2"])?;
                ModelFamily::MorseClass {
                    c1: model_t.float("c1")?,
                    c2: model_t.float("c2")?,
                }
            }
            "scaling_class" => {
                model_t.only(&["kind", "r1", "q"])?;
                ModelFamily::ScalingClass {
                    r1: model_t.float("r1")?,
                    q: model_t.float("q")?,
                }
            }
            other => {
                return Err(ConfigError::field(
                    "model.kind",
                    format!("unknown model `{other}`, expected harmonic, morse_class or scaling_class"),
                ))
            }
        };
        let model = ShapeInvariantModel::new(family, coupling).map_err(|e| match &e {
            sijc_core::Error::InvalidParameter { name, .. } => ConfigError::field(format!("model.{name}"), e.to_string()),
            _ => ConfigError::field("model", e.to_string()),
        })?;

        let trunc = root.table("truncation")?;
        trunc.only(&["N"])?;
        let levels = trunc.count("N")?;
        if levels < 3 {
            return Err(ConfigError::field("truncation.N", format!("need N ≥ 3, got {levels}")));
        }
        let ladder = model
            .build_ladder(levels)
            .map_err(|e| ConfigError::field("truncation.N", e.to_string()))?;

        let time_t = root.table("time")?;
        time_t.only(&["start", "stop", "steps"])?;
        let time = TimeGrid {
            start: time_t.float("start")?,
            stop: time_t.float("stop")?,
            steps: time_t.count("steps")?,
        };
        if !(time.start >= 0.0) {
            return Err(ConfigError::field("time.start", "must be ≥ 0"));
        }
        if !(time.stop > time.start) || !time.stop.is_finite() {
            return Err(ConfigError::field("time.stop", "must be finite and greater than time.start"));
        }
        if time.steps < 1 {
            return Err(ConfigError::field("time.steps", "must be ≥ 1"));
        }

        let series_order = match root.opt_table("series")? {
            Some(s) => {
                s.only(&["order"])?;
                s.opt_count("order")?.unwrap_or(40)
            }
            None => 40,
        };
        if series_order < 1 {
            return Err(ConfigError::field("series.order", "must be ≥ 1"));
        }

        let phase = match root.opt_string("phase_convention")?.as_deref() {
            None | Some("oracle_minus_i") => Phase::MinusI,
            Some("paper_plus_i") => Phase::PlusI,
            Some(other) => {
                return Err(ConfigError::field(
                    "phase_convention",
                    format!("unknown convention `{other}`, expected paper_plus_i or oracle_minus_i"),
                ))
            }
        };

        let layout = Layout::of(&ladder);
        let (initial_state, initial_label) = match root.opt_table("initial_state")? {
            Some(s) => {
                let (v, label) = parse_state(&s, layout)?;
                (Some(v), Some(label))
            }
            None => (None, None),
        };

        let mut tolerances: BTreeMap<String, f64> =
            TOLERANCES.iter().map(|&(k, v)| (k.to_string(), v)).collect();
        if let Some(t) = root.opt_table("tolerances")? {
            for key in t.table.keys() {
                if !tolerances.contains_key(key) {
                    return Err(ConfigError::field(t.path(key), "unknown tolerance name"));
                }
                let v = t.float(key)?;
                if !(v >= 0.0) {
                    return Err(ConfigError::field(t.path(key), "tolerance must be ≥ 0"));
                }
                tolerances.insert(key.clone(), v);
            }
        }

        let output_dir = match root.opt_table("output")? {
            Some(o) => {
                o.only(&["dir"])?;
                PathBuf::from(o.string("dir")?)
            }
            None => return Err(ConfigError::field("output.dir", "missing field")),
        };

        Ok(RunConfig {
            model,
            ladder,
            levels,
            time,
            series_order,
            phase,
            initial_state,
            initial_label,
            tolerances,
            output_dir,
        })
    }
}

fn parse_state(s: &Fields, layout: Layout) -> Result<(DVector<C64>, String)> {
    if s.table.contains_key("amplitudes") {
        s.only(&["amplitudes"])?;
        let field = s.path("amplitudes");
        let arr = s.table["amplitudes"]
            .as_array()
            .ok_or_else(|| ConfigError::field(&field, "expected an array"))?;
        if arr.len() != layout.dim() {
            return Err(ConfigError::field(
                &field,
                format!("expected {} amplitudes (2N − 1), got {}", layout.dim(), arr.len()),
            ));
        }
        let mut v = DVector::zeros(layout.dim());
        for (k, a) in arr.iter().enumerate() {
            let at = format!("{field}[{k}]");
            v[k] = match a {
                Value::Array(pair) if pair.len() == 2 => C64::new(number(&pair[0], &at)?, number(&pair[1], &at)?),
                Value::Array(_) => return Err(ConfigError::field(at, "complex amplitude must be [re, im]")),
                other => C64::new(number(other, &at)?, 0.0),
            };
        }
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(ConfigError::field(field, "amplitudes must have a finite nonzero norm"));
        }
        Ok((v.unscale(norm), "amplitudes".to_string()))
    } else {
        s.only(&["channel", "level"])?;
        let channel = match s.string("channel")?.as_str() {
            "up" => Channel::Up,
            "down" => Channel::Down,
            other => {
                return Err(ConfigError::field(
                    s.path("channel"),
                    format!("unknown channel `{other}`, expected up or down"),
                ))
            }
        };
        let level = s.count("level")?;
        let upper = channel == Channel::Up;
        let v = sijc_core::inversion::basis_state(layout, upper, level)
            .map_err(|e| ConfigError::field(s.path("level"), e.to_string()))?;
        let name = if upper { "up" } else { "down" };
        Ok((v, format!("{name},{level}")))
    }
}

fn number(v: &Value, field: &str) -> Result<f64> {
    match v {
        Value::Float(x) if x.is_finite() => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        Value::Float(_) => Err(ConfigError::field(field, "must be finite")),
        _ => Err(ConfigError::field(field, format!("expected a number, found {}", v.type_str()))),
    }
}

/// A table together with its dotted path.
struct Fields<'a> {
    prefix: String,
    table: &'a Table,
}

impl<'a> Fields<'a> {
    fn new(prefix: &str, table: &'a Table) -> Self {
        Self {
            prefix: prefix.to_string(),
            table,
        }
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        match self.table.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(ConfigError::field(self.path(k), "unknown field")),
            None => Ok(()),
        }
    }

    fn get(&self, key: &str) -> Result<&'a Value> {
        self.table
            .get(key)
            .ok_or_else(|| ConfigError::field(self.path(key), "missing field"))
    }

    fn opt_table(&self, key: &str) -> Result<Option<Fields<'a>>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Fields::new(&self.path(key), t))),
            Some(v) => Err(ConfigError::field(self.path(key), format!("expected a table, found {}", v.type_str()))),
        }
    }

    fn table(&self, key: &str) -> Result<Fields<'a>> {
        self.opt_table(key)?
            .ok_or_else(|| ConfigError::field(self.path(key), "missing field"))
    }

    fn float(&self, key: &str) -> Result<f64> {
        number(self.get(key)?, &self.path(key))
    }

    fn opt_float(&self, key: &str) -> Result<Option<f64>> {
        self.table.get(key).map(|v| number(v, &self.path(key))).transpose()
    }

    fn count(&self, key: &str) -> Result<usize> {
        let v = self.get(key)?;
        match v {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            Value::Integer(_) => Err(ConfigError::field(self.path(key), "must be ≥ 0")),
            _ => Err(ConfigError::field(self.path(key), format!("expected an integer, found {}", v.type_str()))),
        }
    }

    fn opt_count(&self, key: &str) -> Result<Option<usize>> {
        if self.table.contains_key(key) {
            self.count(key).map(Some)
        } else {
            Ok(None)
        }
    }

    fn string(&self, key: &str) -> Result<String> {
        match self.get(key)? {
            Value::String(s) => Ok(s.clone()),
            v => Err(ConfigError::field(self.path(key), format!("expected a string, found {}", v.type_str()))),
        }
    }

    fn opt_string(&self, key: &str) -> Result<Option<String>> {
        if self.table.contains_key(key) {
            self.string(key).map(Some)
        } else {
            Ok(None)
        }
    }
}
