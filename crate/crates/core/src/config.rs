//! Experiment configuration: a TOML file of flat dotted keys, e.g.
//!
//! ```toml
//! run.seed = 7
//! run.realizations = 10
//! train.learning_rate = 0.002
//! grid.n_per_axis = 25
//! ```
//!
//! Nested tables are accepted and flattened to the same keys. Unknown keys
//! are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::data::{FuelClass, GapPolicy, SynthDatasetSpec, SynthProfile, DEFAULT_SENSOR_CAP};
use crate::error::{Error, Result};
use crate::nn::Architecture;
use crate::train::{TrainConfig, ValidationSelection};
use crate::transfer::{GridSpec, TransferMethod};

pub const N_INPUTS: usize = crate::data::N_FEATURES;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Dataset CSV. When unset, `<out>/dataset.csv` (as written by `synth`).
    pub data_path: Option<PathBuf>,
    pub gaps: GapPolicy,
    pub synth: SynthDatasetSpec,
    pub train_rows: usize,
    pub arch: Architecture,
    pub train: TrainConfig,
    pub grid: GridSpec,
    pub seed: u64,
    pub realizations: usize,
    pub jobs: usize,
    pub methods: Vec<TransferMethod>,
    pub source_class: FuelClass,
    pub target_classes: Vec<FuelClass>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data_path: None,
            gaps: GapPolicy::Reject,
            synth: SynthDatasetSpec::default(),
            train_rows: crate::data::SplitSpec::DEFAULT_TRAIN_ROWS,
            arch: Architecture::new(N_INPUTS),
            train: TrainConfig::default(),
            grid: GridSpec::default(),
            seed: 0,
            realizations: 100,
            jobs: 1,
            methods: TransferMethod::ALL.to_vec(),
            source_class: FuelClass::Fm10,
            target_classes: vec![FuelClass::Fm1, FuelClass::Fm10, FuelClass::Fm100, FuelClass::Fm1000],
            out: PathBuf::from("out"),
        }
    }
}

/// Every accepted key.
pub const KEYS: [&str; 30] = [
    "data.path",
    "data.fill",
    "synth.seed",
    "synth.n_days",
    "synth.rain_rate",
    "synth.cap",
    "synth.sparse_hours",
    "split.train_rows",
    "model.hidden",
    "model.dense",
    "train.learning_rate",
    "train.batch_length",
    "train.chunk_segments",
    "train.max_epochs",
    "train.patience",
    "train.clip_norm",
    "train.shuffle",
    "train.validation",
    "train.holdout_fraction",
    "grid.lo",
    "grid.hi",
    "grid.n_per_axis",
    "run.seed",
    "run.realizations",
    "run.jobs",
    "run.methods",
    "run.source_class",
    "run.target_classes",
    "run.out",
    "synth.start",
];

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn bad(key: &str, want: &str) -> Error {
    Error::config(format!("{key}: expected {want}"))
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(bad(key, "a number")),
    }
}

fn as_usize(key: &str, v: &toml::Value) -> Result<usize> {
    v.as_integer()
        .and_then(|i| usize::try_from(i).ok())
        .ok_or_else(|| bad(key, "a non-negative integer"))
}

fn as_str<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| bad(key, "a string"))
}

fn as_list<'a>(key: &str, v: &'a toml::Value) -> Result<&'a [toml::Value]> {
    v.as_array().map(Vec::as_slice).ok_or_else(|| bad(key, "an array"))
}

fn parse_class(key: &str, s: &str) -> Result<FuelClass> {
    FuelClass::parse(s).ok_or_else(|| Error::config(format!("{key}: unknown fuel class {s:?}")))
}

fn parse_method(key: &str, s: &str) -> Result<TransferMethod> {
    TransferMethod::parse(s).ok_or_else(|| Error::config(format!("{key}: unknown method {s:?}")))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::config(format!("config: {e}")))?;
        let mut flat = BTreeMap::new();
        flatten("", &table, &mut flat);
        let mut cfg = Self::default();
        for (k, v) in &flat {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Sets one dotted key.
    pub fn set(&mut self, key: &str, v: &toml::Value) -> Result<()> {
        match key {
            "data.path" => self.data_path = Some(PathBuf::from(as_str(key, v)?)),
            "data.fill" => {
                self.gaps = match as_str(key, v)? {
                    "reject" => GapPolicy::Reject,
                    "hold" => GapPolicy::Hold,
                    _ => return Err(bad(key, "\"reject\" or \"hold\"")),
                }
            }
            "synth.seed" => self.synth.seed = as_usize(key, v)? as u64,
            "synth.n_days" => self.synth.n_days = as_usize(key, v)?,
            "synth.rain_rate" => self.synth.profile.rain_rate = as_f64(key, v)?,
            "synth.cap" => {
                self.synth.fm10_cap = match v {
                    toml::Value::Boolean(false) => None,
                    toml::Value::Boolean(true) => Some(DEFAULT_SENSOR_CAP),
                    other => Some(as_f64(key, other)?),
                }
            }
            "synth.sparse_hours" => {
                self.synth.sparse_hours = as_list(key, v)?
                    .iter()
                    .map(|h| as_usize(key, h).map(|h| h as u32))
                    .collect::<Result<_>>()?
            }
            "synth.start" => {
                let s = as_str(key, v)?;
                self.synth.profile.start = chrono::DateTime::parse_from_rfc3339(s)
                    .map_err(|_| bad(key, "an RFC 3339 timestamp"))?
                    .with_timezone(&chrono::Utc);
            }
            "split.train_rows" => self.train_rows = as_usize(key, v)?,
            "model.hidden" => self.arch.hidden_size = as_usize(key, v)?,
            "model.dense" => {
                let l = as_list(key, v)?;
                if l.len() != 2 {
                    return Err(bad(key, "two layer widths"));
                }
                self.arch.dense_sizes = [as_usize(key, &l[0])?, as_usize(key, &l[1])?];
            }
            "train.learning_rate" => self.train.learning_rate = as_f64(key, v)?,
            "train.batch_length" => self.train.batch_length = as_usize(key, v)?,
            "train.chunk_segments" => self.train.chunk_segments = as_usize(key, v)?,
            "train.max_epochs" => self.train.max_epochs = as_usize(key, v)?,
            "train.patience" => self.train.patience = as_usize(key, v)?,
            "train.clip_norm" => {
                self.train.clip_norm = match v {
                    toml::Value::Boolean(false) => None,
                    other => Some(as_f64(key, other)?),
                }
            }
            "train.shuffle" => self.train.shuffle = v.as_bool().ok_or_else(|| bad(key, "a boolean"))?,
            "train.validation" => {
                self.train.validation = match as_str(key, v)? {
                    "fixed" => ValidationSelection::Fixed,
                    "holdout" => ValidationSelection::RandomHoldout {
                        fraction: match self.train.validation {
                            ValidationSelection::RandomHoldout { fraction } => fraction,
                            ValidationSelection::Fixed => 0.2,
                        },
                    },
                    _ => return Err(bad(key, "\"fixed\" or \"holdout\"")),
                }
            }
            "train.holdout_fraction" => {
                // Setting a fraction implies holdout validation.
                self.train.validation = ValidationSelection::RandomHoldout {
                    fraction: as_f64(key, v)?,
                };
            }
            "grid.lo" => self.grid.lo = as_f64(key, v)?,
            "grid.hi" => self.grid.hi = as_f64(key, v)?,
            "grid.n_per_axis" => self.grid.n_per_axis = as_usize(key, v)?,
            "run.seed" => self.seed = as_usize(key, v)? as u64,
            "run.realizations" => self.realizations = as_usize(key, v)?,
            "run.jobs" => self.jobs = as_usize(key, v)?,
            "run.methods" => {
                self.methods = as_list(key, v)?
                    .iter()
                    .map(|m| parse_method(key, as_str(key, m)?))
                    .collect::<Result<_>>()?
            }
            "run.source_class" => self.source_class = parse_class(key, as_str(key, v)?)?,
            "run.target_classes" => {
                self.target_classes = as_list(key, v)?
                    .iter()
                    .map(|c| parse_class(key, as_str(key, c)?))
                    .collect::<Result<_>>()?
            }
            "run.out" => self.out = PathBuf::from(as_str(key, v)?),
            _ => return Err(Error::config(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::config("run.realizations must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("run.methods must not be empty"));
        }
        if self.target_classes.is_empty() {
            return Err(Error::config("run.target_classes must not be empty"));
        }
        if self.arch.input_size != N_INPUTS {
            return Err(Error::config(format!("the model takes {N_INPUTS} inputs")));
        }
        if self.synth.sparse_hours.iter().any(|&h| h > 23) {
            return Err(Error::config("synth.sparse_hours must lie in 0..=23"));
        }
        self.arch.validate().map_err(|e| Error::config(e.to_string()))?;
        self.train.validate()?;
        self.grid.validate()?;
        SynthProfile::validate(&self.synth.profile).map_err(|e| Error::config(e.to_string()))?;
        Ok(())
    }

    /// Dataset location: `data.path` or the file `synth` writes.
    pub fn dataset_path(&self) -> PathBuf {
        self.data_path.clone().unwrap_or_else(|| self.out.join("dataset.csv"))
    }

    /// Training settings for realization `k`.
    pub fn train_for(&self, k: usize) -> TrainConfig {
        TrainConfig {
            seed: self.seed + k as u64,
            ..self.train.clone()
        }
    }

    /// Resolved configuration, one `key = value` line per key, in TOML syntax.
    pub fn to_text(&self) -> String {
        let q = |s: &str| format!("{s:?}");
        let list = |items: Vec<String>| format!("[{}]", items.join(", "));
        let num = |x: f64| {
            let s = x.to_string();
            if s.contains(['.', 'e', 'i', 'N']) {
                s
            } else {
                format!("{s}.0")
            }
        };
        let mut lines = Vec::new();
        if let Some(p) = &self.data_path {
            lines.push(format!("data.path = {}", q(&p.display().to_string())));
        }
        lines.push(format!(
            "data.fill = {}",
            q(if self.gaps == GapPolicy::Hold { "hold" } else { "reject" })
        ));
        lines.push(format!("synth.seed = {}", self.synth.seed));
        lines.push(format!("synth.n_days = {}", self.synth.n_days));
        lines.push(format!("synth.rain_rate = {}", num(self.synth.profile.rain_rate)));
        lines.push(match self.synth.fm10_cap {
            Some(c) => format!("synth.cap = {}", num(c)),
            None => "synth.cap = false".into(),
        });
        lines.push(format!(
            "synth.sparse_hours = {}",
            list(self.synth.sparse_hours.iter().map(u32::to_string).collect())
        ));
        lines.push(format!(
            "synth.start = {}",
            q(&self.synth.profile.start.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        ));
        lines.push(format!("split.train_rows = {}", self.train_rows));
        lines.push(format!("model.hidden = {}", self.arch.hidden_size));
        lines.push(format!(
            "model.dense = [{}, {}]",
            self.arch.dense_sizes[0], self.arch.dense_sizes[1]
        ));
        let t = &self.train;
        lines.push(format!("train.learning_rate = {}", num(t.learning_rate)));
        lines.push(format!("train.batch_length = {}", t.batch_length));
        lines.push(format!("train.chunk_segments = {}", t.chunk_segments));
        lines.push(format!("train.max_epochs = {}", t.max_epochs));
        lines.push(format!("train.patience = {}", t.patience));
        lines.push(match t.clip_norm {
            Some(c) => format!("train.clip_norm = {}", num(c)),
            None => "train.clip_norm = false".into(),
        });
        lines.push(format!("train.shuffle = {}", t.shuffle));
        match t.validation {
            ValidationSelection::Fixed => lines.push("train.validation = \"fixed\"".into()),
            ValidationSelection::RandomHoldout { fraction } => {
                lines.push("train.validation = \"holdout\"".into());
                lines.push(format!("train.holdout_fraction = {}", num(fraction)));
            }
        }
        lines.push(format!("grid.lo = {}", num(self.grid.lo)));
        lines.push(format!("grid.hi = {}", num(self.grid.hi)));
        lines.push(format!("grid.n_per_axis = {}", self.grid.n_per_axis));
        lines.push(format!("run.seed = {}", self.seed));
        lines.push(format!("run.realizations = {}", self.realizations));
        lines.push(format!("run.methods = {}", list(self.methods.iter().map(|m| q(m.as_str())).collect())));
        lines.push(format!("run.source_class = {}", q(self.source_class.column())));
        lines.push(format!(
            "run.target_classes = {}",
            list(self.target_classes.iter().map(|c| q(c.column())).collect())
        ));
        lines.join("\n") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_and_nested_keys_agree() {
        let a = ExperimentConfig::from_toml_str("train.learning_rate = 0.01\nrun.methods = [\"time-warp\"]\n").unwrap();
        let b = ExperimentConfig::from_toml_str("[train]\nlearning_rate = 0.01\n[run]\nmethods = [\"TimeWarp\"]\n")
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.train.learning_rate, 0.01);
        assert_eq!(a.methods, vec![TransferMethod::TimeWarp]);
    }

    #[test]
    fn resolved_text_round_trips() {
        let text = "synth.cap = false\ntrain.holdout_fraction = 0.25\nmodel.hidden = 8\nrun.target_classes = [\"fm1\", \"FM100\"]\n";
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.synth.fm10_cap, None);
        assert_eq!(cfg.train.validation, ValidationSelection::RandomHoldout { fraction: 0.25 });
        let again = ExperimentConfig::from_toml_str(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
        let default = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml_str(&default.to_text()).unwrap(), default);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "train.learning_rat = 1.0",
            "run.realizations = 0",
            "run.methods = []",
            "run.methods = [\"warp\"]",
            "model.dense = [1]",
            "grid.n_per_axis = 1",
            "train.shuffle = 3",
            "not toml [",
        ] {
            assert!(matches!(ExperimentConfig::from_toml_str(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn every_key_is_accepted() {
        let mut cfg = ExperimentConfig::default();
        let text = cfg.to_text();
        for key in KEYS {
            if matches!(key, "data.path" | "run.jobs" | "run.out" | "train.holdout_fraction") {
                continue;
            }
            assert!(text.contains(&format!("{key} = ")), "{key}");
        }
        cfg.set("run.jobs", &toml::Value::Integer(4)).unwrap();
        cfg.set("run.out", &toml::Value::String("x".into())).unwrap();
        cfg.set("data.path", &toml::Value::String("d.csv".into())).unwrap();
        assert_eq!(cfg.dataset_path(), PathBuf::from("d.csv"));
    }
}
