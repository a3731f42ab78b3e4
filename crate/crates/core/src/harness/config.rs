use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::DEFAULT_TOL;
use crate::selfstab::{Recipe, DEFAULT_BUFFER_D, DEFAULT_DEADLINE_C};
use crate::vector_loc::LabelRecipe;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown protocol `{0}` (expected kcontact, leaderloc, improved1d, selfstab or vector)")]
    UnknownProtocol(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    KContact,
    LeaderLoc,
    Improved1d,
    SelfStab,
    Vector,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] = [
        ProtocolKind::KContact,
        ProtocolKind::LeaderLoc,
        ProtocolKind::Improved1d,
        ProtocolKind::SelfStab,
        ProtocolKind::Vector,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::KContact => "kcontact",
            ProtocolKind::LeaderLoc => "leaderloc",
            ProtocolKind::Improved1d => "improved1d",
            ProtocolKind::SelfStab => "selfstab",
            ProtocolKind::Vector => "vector",
        }
    }

    /// Whether the protocol places agents, as opposed to only spreading.
    pub fn is_localisation(self) -> bool {
        self != ProtocolKind::KContact
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ConfigError::UnknownProtocol(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PositionSource {
    /// I.i.d. uniform points in the unit cube.
    Uniform,
    File(PathBuf),
}

impl FromStr for PositionSource {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "uniform" => PositionSource::Uniform,
            path => PositionSource::File(PathBuf::from(path)),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub protocol: ProtocolKind,
    pub n_grid: Vec<usize>,
    /// Dimension of the space.
    pub k: usize,
    /// Contact threshold for the epidemic.
    pub k_contact: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub tol: f64,
    /// Budget in units of the protocol's theoretical time bound.
    pub budget_multiplier: f64,
    pub buffer_d: u32,
    pub deadline_c: f64,
    /// Adversarial recipe (selfstab) or initial label recipe (vector).
    pub recipe: Option<String>,
    pub positions: PositionSource,
    pub output: Option<PathBuf>,
    /// Largest population for which the `O(n^2)` silence scan runs.
    pub silence_max_n: usize,
}

/// Label range for the vector protocol's random initial labels.
pub const LABEL_RANGE: f64 = 1e3;

impl ExperimentConfig {
    pub fn new(protocol: ProtocolKind) -> Self {
        ExperimentConfig {
            protocol,
            n_grid: vec![1024],
            k: 1,
            k_contact: 2,
            trials: 10,
            base_seed: 1,
            tol: DEFAULT_TOL,
            budget_multiplier: 64.0,
            buffer_d: DEFAULT_BUFFER_D,
            deadline_c: DEFAULT_DEADLINE_C,
            recipe: None,
            positions: PositionSource::Uniform,
            output: None,
            silence_max_n: 1 << 14,
        }
    }

    /// Sets one field from its textual `key = value` form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |reason: &dyn fmt::Display| ConfigError::BadValue {
            key: key.to_owned(),
            value: value.to_owned(),
            reason: reason.to_string(),
        };
        match key.replace('_', "-").as_str() {
            "protocol" => self.protocol = value.parse()?,
            "n" | "n-grid" => self.n_grid = parse_n_grid(value).map_err(|e| bad(&e))?,
            "k" => self.k = value.parse().map_err(|e| bad(&e))?,
            "k-contact" => self.k_contact = value.parse().map_err(|e| bad(&e))?,
            "trials" => self.trials = value.parse().map_err(|e| bad(&e))?,
            "seed" | "base-seed" => self.base_seed = value.parse().map_err(|e| bad(&e))?,
            "tol" => self.tol = value.parse().map_err(|e| bad(&e))?,
            "budget-mult" | "budget-multiplier" => self.budget_multiplier = value.parse().map_err(|e| bad(&e))?,
            "buffer-d" | "d" => self.buffer_d = value.parse().map_err(|e| bad(&e))?,
            "deadline-c" | "c-d" => self.deadline_c = value.parse().map_err(|e| bad(&e))?,
            "recipe" => self.recipe = Some(value.to_owned()),
            "positions" => self.positions = value.parse().unwrap_or(PositionSource::Uniform),
            "out" | "output" => self.output = Some(PathBuf::from(value)),
            "silence-max-n" => self.silence_max_n = value.parse().map_err(|e| bad(&e))?,
            _ => return Err(ConfigError::UnknownKey(key.to_owned())),
        }
        Ok(())
    }

    /// Applies a `key = value` config file. Blank lines and `#` comments are
    /// ignored.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (key, value) in parse_key_values(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn min_n(&self) -> usize {
        if self.protocol.is_localisation() {
            2.max(self.k + 2)
        } else {
            2
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.n_grid.is_empty() {
            return invalid("empty n grid".into());
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < self.min_n()) {
            return invalid(format!("n = {n} is below the minimum {} for {}", self.min_n(), self.protocol));
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1".into());
        }
        if self.k == 0 {
            return invalid("k must be at least 1".into());
        }
        if self.protocol == ProtocolKind::KContact && self.k_contact == 0 {
            return invalid("k-contact must be at least 1".into());
        }
        if self.protocol == ProtocolKind::Improved1d && self.k != 1 {
            return invalid("improved1d runs on the line only (k = 1)".into());
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return invalid(format!("tolerance {} must be finite and non-negative", self.tol));
        }
        if !(self.budget_multiplier.is_finite() && self.budget_multiplier > 0.0) {
            return invalid(format!("budget multiplier {} must be positive", self.budget_multiplier));
        }
        if self.buffer_d == 0 {
            return invalid("buffer D must be at least 1".into());
        }
        if !(self.deadline_c.is_finite() && self.deadline_c > 0.0) {
            return invalid(format!("deadline constant {} must be positive", self.deadline_c));
        }
        match self.protocol {
            ProtocolKind::SelfStab => {
                self.selfstab_recipe()?;
            }
            ProtocolKind::Vector => {
                self.label_recipe()?;
            }
            _ => {
                if let Some(r) = &self.recipe {
                    return invalid(format!("recipe `{r}` given but {} takes none", self.protocol));
                }
            }
        }
        Ok(())
    }

    pub fn selfstab_recipe(&self) -> Result<Recipe, ConfigError> {
        match &self.recipe {
            None => Ok(Recipe::Random),
            Some(r) => r.parse().map_err(|e: crate::selfstab::UnknownRecipe| ConfigError::BadValue {
                key: "recipe".into(),
                value: r.clone(),
                reason: e.to_string(),
            }),
        }
    }

    pub fn label_recipe(&self) -> Result<LabelRecipe, ConfigError> {
        match &self.recipe {
            None => Ok(LabelRecipe::Uniform),
            Some(r) => LabelRecipe::parse(r).ok_or_else(|| ConfigError::BadValue {
                key: "recipe".into(),
                value: r.clone(),
                reason: "expected uniform, all-equal or single-outlier".into(),
            }),
        }
    }

    /// The `k` reported in result rows: the contact threshold for the
    /// epidemic, the dimension otherwise.
    pub fn reported_k(&self) -> usize {
        match self.protocol {
            ProtocolKind::KContact => self.k_contact,
            _ => self.k,
        }
    }
}

/// Comma-separated sizes. `2^10` is accepted as shorthand for 1024.
pub fn parse_n_grid(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_size)
        .collect()
}

fn parse_size(s: &str) -> Result<usize, String> {
    if let Some((base, exp)) = s.split_once('^') {
        let base: usize = base.trim().parse().map_err(|e| format!("`{s}`: {e}"))?;
        let exp: u32 = exp.trim().parse().map_err(|e| format!("`{s}`: {e}"))?;
        return base.checked_pow(exp).ok_or_else(|| format!("`{s}` overflows"));
    }
    s.parse().map_err(|e| format!("`{s}`: {e}"))
}

pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_owned(),
            });
        };
        out.push((key.trim().to_owned(), value.trim().to_owned()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_override() {
        let mut cfg = ExperimentConfig::new(ProtocolKind::KContact);
        cfg.apply_file_text("# grid\nprotocol = leaderloc\nn = 2^10, 2048\nk=2\ntrials = 3 # few\n")
            .unwrap();
        assert_eq!(cfg.protocol, ProtocolKind::LeaderLoc);
        assert_eq!(cfg.n_grid, vec![1024, 2048]);
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.trials, 3);
        cfg.set("trials", "7").unwrap();
        assert_eq!(cfg.trials, 7);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        let mut cfg = ExperimentConfig::new(ProtocolKind::KContact);
        assert!(matches!(cfg.set("colour", "blue"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(cfg.set("trials", "many"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(cfg.set("protocol", "gossip"), Err(ConfigError::UnknownProtocol(_))));
        assert!(matches!(
            cfg.apply_file_text("trials 3"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::new(ProtocolKind::LeaderLoc);
        cfg.k = 3;
        cfg.n_grid = vec![4];
        assert!(cfg.validate().is_err());
        cfg.n_grid = vec![5];
        cfg.validate().unwrap();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::new(ProtocolKind::Improved1d);
        cfg.k = 2;
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::new(ProtocolKind::SelfStab);
        cfg.recipe = Some("two-leaders".into());
        cfg.validate().unwrap();
        cfg.recipe = Some("chaos".into());
        assert!(cfg.validate().is_err());
    }
}
