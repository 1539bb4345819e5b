//! Flat `key = value` run configuration.
//!
//! Missing keys take the reference defaults. Later assignments win, so
//! `--set` overrides applied after the file beat the file's values.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use symbiosis_core::{AlgorithmPair, DesignKind, RecommenderKind, SimParams};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown configuration key `{key}`")]
    UnknownKey { key: String },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Malformed { line: usize, text: String },
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    Validation(#[from] symbiosis_core::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Inputs of the theory and verify commands.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryConfig {
    pub graph: Option<PathBuf>,
    pub clusters: Option<PathBuf>,
    /// `gamma[z_i][z_j]`.
    pub gamma: [[f64; 2]; 2],
    pub beta: [f64; 2],
    pub delta: [f64; 2],
    pub corpus_size: u64,
    pub verify_instances: usize,
    pub verify_tolerance: f64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            graph: None,
            clusters: None,
            gamma: [[0.0; 2]; 2],
            beta: [0.0; 2],
            delta: [0.0; 2],
            corpus_size: 0,
            verify_instances: 100,
            verify_tolerance: 1e-9,
        }
    }
}

/// Fully resolved configuration of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SimParams,
    pub designs: Vec<DesignKind>,
    pub pairs: Vec<AlgorithmPair>,
    pub replications: usize,
    /// Empty means the single value in `params`.
    pub sweep_gamma_pref: Vec<f64>,
    /// Empty means the single value in `params`.
    pub sweep_p: Vec<f64>,
    pub out: PathBuf,
    pub theory: TheoryConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        use RecommenderKind::*;
        Self {
            params: SimParams::default(),
            designs: DesignKind::ALL.to_vec(),
            pairs: vec![
                AlgorithmPair::new(ItemCf, Random),
                AlgorithmPair::new(UserCf, Random),
                AlgorithmPair::new(UserCf, ItemCf),
            ],
            replications: 200,
            sweep_gamma_pref: Vec::new(),
            sweep_p: Vec::new(),
            out: PathBuf::from("results"),
            theory: TheoryConfig::default(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Parses a configuration file's text on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }

    /// Applies every `key = value` line; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line: k + 1,
                text: line.to_string(),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| ConfigError::Malformed {
            line: 0,
            text: assignment.to_string(),
        })?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let p = &mut self.params;
        let th = &mut self.theory;
        match key {
            "p" => p.p = parse_value(key, value)?,
            "N_Ci" => p.n_item_clusters = parse_value(key, value)?,
            "N_Cu" => p.n_user_clusters = parse_value(key, value)?,
            "alpha_u" => p.alpha_u = parse_value(key, value)?,
            "alpha_i" => p.alpha_i = parse_value(key, value)?,
            "gamma_pref" => p.gamma_pref = parse_value(key, value)?,
            "gamma_item" => p.gamma_item = parse_value(key, value)?,
            "T" => p.periods = parse_value(key, value)?,
            "t_init" => p.t_init = parse_value(key, value)?,
            "d" => p.d = parse_value(key, value)?,
            "f" => p.f = parse_value(key, value)?,
            "n_items" => p.n_items = parse_value(key, value)?,
            "n_users" => p.n_users = parse_value(key, value)?,
            "sigma" => p.sigma_util = parse_value(key, value)?,
            "seed" => p.seed = parse_value(key, value)?,
            "post_randomization_only" => p.post_randomization_only = parse_value(key, value)?,
            "replications" => self.replications = parse_value(key, value)?,
            "designs" => self.designs = parse_list(key, value)?,
            "pairs" => self.pairs = parse_list(key, value)?,
            "sweep_gamma_pref" => self.sweep_gamma_pref = parse_list(key, value)?,
            "sweep_p" => self.sweep_p = parse_list(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "graph" => th.graph = (!value.is_empty()).then(|| PathBuf::from(value)),
            "clusters" => th.clusters = (!value.is_empty()).then(|| PathBuf::from(value)),
            "gamma_00" => th.gamma[0][0] = parse_value(key, value)?,
            "gamma_01" => th.gamma[0][1] = parse_value(key, value)?,
            "gamma_10" => th.gamma[1][0] = parse_value(key, value)?,
            "gamma_11" => th.gamma[1][1] = parse_value(key, value)?,
            "beta_0" => th.beta[0] = parse_value(key, value)?,
            "beta_1" => th.beta[1] = parse_value(key, value)?,
            "delta_0" => th.delta[0] = parse_value(key, value)?,
            "delta_1" => th.delta[1] = parse_value(key, value)?,
            "M" => th.corpus_size = parse_value(key, value)?,
            "verify_instances" => th.verify_instances = parse_value(key, value)?,
            "verify_tolerance" => th.verify_tolerance = parse_value(key, value)?,
            _ => return Err(ConfigError::UnknownKey { key: key.to_string() }),
        }
        Ok(())
    }

    /// Checks the simulation parameters, every sweep point and the run settings.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, value: String, reason: &str| ConfigError::InvalidValue {
            key: key.to_string(),
            value,
            reason: reason.to_string(),
        };
        self.params.validate()?;
        for params in self.grid() {
            params.validate()?;
        }
        if self.replications == 0 {
            return Err(invalid("replications", "0".into(), "at least 1 is needed"));
        }
        if self.designs.is_empty() {
            return Err(invalid("designs", String::new(), "at least one design is needed"));
        }
        if self.pairs.is_empty() {
            return Err(invalid("pairs", String::new(), "at least one pair is needed"));
        }
        if self.theory.verify_tolerance.is_nan() || self.theory.verify_tolerance < 0.0 {
            return Err(invalid(
                "verify_tolerance",
                self.theory.verify_tolerance.to_string(),
                "must be >= 0",
            ));
        }
        Ok(())
    }

    pub fn gamma_pref_values(&self) -> Vec<f64> {
        if self.sweep_gamma_pref.is_empty() {
            vec![self.params.gamma_pref]
        } else {
            self.sweep_gamma_pref.clone()
        }
    }

    pub fn p_values(&self) -> Vec<f64> {
        if self.sweep_p.is_empty() {
            vec![self.params.p]
        } else {
            self.sweep_p.clone()
        }
    }

    /// Simulation parameters of every sweep point, `gamma_pref` outermost.
    pub fn grid(&self) -> Vec<SimParams> {
        let mut points = Vec::new();
        for gamma_pref in self.gamma_pref_values() {
            for p in self.p_values() {
                points.push(SimParams {
                    gamma_pref,
                    p,
                    ..self.params.clone()
                });
            }
        }
        points
    }

    /// Every key with its resolved value, one `key = value` per line.
    /// Parsing the output yields an identical configuration.
    pub fn resolved(&self) -> String {
        let p = &self.params;
        let th = &self.theory;
        let path = |x: &Option<PathBuf>| x.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let entries: Vec<(&str, String)> = vec![
            ("p", p.p.to_string()),
            ("N_Ci", p.n_item_clusters.to_string()),
            ("N_Cu", p.n_user_clusters.to_string()),
            ("alpha_u", p.alpha_u.to_string()),
            ("alpha_i", p.alpha_i.to_string()),
            ("gamma_pref", p.gamma_pref.to_string()),
            ("gamma_item", p.gamma_item.to_string()),
            ("T", p.periods.to_string()),
            ("t_init", p.t_init.to_string()),
            ("d", p.d.to_string()),
            ("f", p.f.to_string()),
            ("n_items", p.n_items.to_string()),
            ("n_users", p.n_users.to_string()),
            ("sigma", p.sigma_util.to_string()),
            ("seed", p.seed.to_string()),
            ("post_randomization_only", p.post_randomization_only.to_string()),
            ("replications", self.replications.to_string()),
            ("designs", join(&self.designs.iter().map(|d| d.name()).collect::<Vec<_>>())),
            ("pairs", join(&self.pairs)),
            ("sweep_gamma_pref", join(&self.sweep_gamma_pref)),
            ("sweep_p", join(&self.sweep_p)),
            ("out", self.out.display().to_string()),
            ("graph", path(&th.graph)),
            ("clusters", path(&th.clusters)),
            ("gamma_00", th.gamma[0][0].to_string()),
            ("gamma_01", th.gamma[0][1].to_string()),
            ("gamma_10", th.gamma[1][0].to_string()),
            ("gamma_11", th.gamma[1][1].to_string()),
            ("beta_0", th.beta[0].to_string()),
            ("beta_1", th.beta[1].to_string()),
            ("delta_0", th.delta[0].to_string()),
            ("delta_1", th.delta[1].to_string()),
            ("M", th.corpus_size.to_string()),
            ("verify_instances", th.verify_instances.to_string()),
            ("verify_tolerance", th.verify_tolerance.to_string()),
        ];
        let mut out = String::new();
        for (key, value) in entries {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}
