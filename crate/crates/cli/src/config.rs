//! Flat `key = value` configuration shared by config files and command-line
//! flags.
//!
//! Times (`t_max`, `t_max_grid`, search bounds) are given in units of `π/J₀`
//! and `gamma` in units of `J₀`. Everything else uses the internal units
//! (`J = 1`).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExperimentKind {
    Spectrum,
    EigenFlow,
    OperatorFidelity,
    Adiabaticity,
    Evolve,
    FidelitySweep,
    MinTimeVsDistance,
    Robustness,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Spectrum,
        ExperimentKind::EigenFlow,
        ExperimentKind::OperatorFidelity,
        ExperimentKind::Adiabaticity,
        ExperimentKind::Evolve,
        ExperimentKind::FidelitySweep,
        ExperimentKind::MinTimeVsDistance,
        ExperimentKind::Robustness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::EigenFlow => "eigen-flow",
            ExperimentKind::OperatorFidelity => "operator-fidelity",
            ExperimentKind::Adiabaticity => "adiabaticity",
            ExperimentKind::Evolve => "evolve",
            ExperimentKind::FidelitySweep => "fidelity-sweep",
            ExperimentKind::MinTimeVsDistance => "min-time-vs-distance",
            ExperimentKind::Robustness => "robustness",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let norm = s.trim().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| CliError::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::Config(format!("unknown format '{other}'"))),
        }
    }
}

/// Which propagation model(s) a sweep runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    Full,
    Effective,
    #[default]
    Both,
}

impl Method {
    pub fn includes_full(self) -> bool {
        matches!(self, Method::Full | Method::Both)
    }

    pub fn includes_effective(self) -> bool {
        matches!(self, Method::Effective | Method::Both)
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "full" => Ok(Method::Full),
            "effective" => Ok(Method::Effective),
            "both" => Ok(Method::Both),
            other => Err(CliError::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Keys accepted in config files and as `--flag` names (with `-` for `_`).
pub const KEYS: &[&str] = &[
    "experiment",
    "n_sites",
    "mu0",
    "j0",
    "j0_over_mu0",
    "distance",
    "d",
    "l",
    "t_max",
    "t_max_grid",
    "gamma",
    "delta",
    "realizations",
    "seed",
    "jobs",
    "format",
    "out",
    "no_timestamp",
    "samples",
    "method",
    "target_error",
    "search_lower",
    "search_upper",
];

/// Fully resolved experiment description.
///
/// List-valued fields left as `None` fall back to per-experiment defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_sites: usize,
    pub mu0: Option<Vec<f64>>,
    /// Absolute pulse amplitude; takes precedence over `j0_over_mu0`.
    pub j0: Option<f64>,
    pub j0_over_mu0: Option<Vec<f64>>,
    pub distance: Option<Vec<usize>>,
    /// Single protocol duration in `π/J₀`.
    pub t_max: Option<f64>,
    /// Duration grid in `π/J₀`.
    pub t_max_grid: Option<Vec<f64>>,
    /// Dephasing rates in units of `J₀`.
    pub gamma: Option<Vec<f64>>,
    pub delta: Option<Vec<f64>>,
    pub realizations: usize,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub no_timestamp: bool,
    pub samples: usize,
    pub method: Method,
    pub target_error: f64,
    /// Minimal-time search window in `π/J₀`.
    pub search_lower: f64,
    pub search_upper: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Evolve,
            n_sites: 39,
            mu0: None,
            j0: None,
            j0_over_mu0: None,
            distance: None,
            t_max: None,
            t_max_grid: None,
            gamma: None,
            delta: None,
            realizations: 100,
            seed: 0,
            jobs: None,
            format: OutputFormat::Csv,
            out: None,
            no_timestamp: false,
            samples: qst_core::dynamics::DEFAULT_SAMPLES,
            method: Method::Both,
            target_error: 0.005,
            search_lower: 2.0,
            search_upper: 400.0,
        }
    }
}

pub const DEFAULT_MU0: f64 = 1.0;
pub const DEFAULT_J0: f64 = 0.1;
pub const DEFAULT_DISTANCE: usize = 5;
pub const DEFAULT_T_MAX: f64 = 19.0;

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            ..Self::default()
        }
    }

    /// Parses config-file text, then applies `overrides` on top.
    pub fn from_sources(
        file_text: Option<&str>,
        overrides: &[(String, String)],
    ) -> Result<Self, CliError> {
        let mut map = match file_text {
            Some(text) => parse_key_values(text)?,
            None => BTreeMap::new(),
        };
        for (k, v) in overrides {
            let key = normalize_key(k)?;
            map.insert(key, v.clone());
        }
        Self::from_map(&map)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (key, raw) in map {
            let key = normalize_key(key)?;
            let value = raw.trim();
            match key.as_str() {
                "experiment" => cfg.experiment = value.parse()?,
                "n_sites" => cfg.n_sites = scalar(&key, value)?,
                "mu0" => cfg.mu0 = Some(list(&key, value)?),
                "j0" => cfg.j0 = Some(scalar(&key, value)?),
                "j0_over_mu0" => cfg.j0_over_mu0 = Some(list(&key, value)?),
                "distance" | "d" => cfg.distance = Some(list(&key, value)?),
                "l" => {
                    let ls: Vec<usize> = list(&key, value)?;
                    cfg.distance = Some(ls.into_iter().map(|l| 2 * l + 3).collect());
                }
                "t_max" => cfg.t_max = Some(scalar(&key, value)?),
                "t_max_grid" => cfg.t_max_grid = Some(grid(&key, value)?),
                "gamma" => cfg.gamma = Some(list(&key, value)?),
                "delta" => cfg.delta = Some(list(&key, value)?),
                "realizations" => cfg.realizations = scalar(&key, value)?,
                "seed" => cfg.seed = scalar(&key, value)?,
                "jobs" => cfg.jobs = Some(scalar(&key, value)?),
                "format" => cfg.format = value.parse()?,
                "out" => cfg.out = Some(PathBuf::from(value)),
                "no_timestamp" => cfg.no_timestamp = boolean(&key, value)?,
                "samples" => cfg.samples = scalar(&key, value)?,
                "method" => cfg.method = value.parse()?,
                "target_error" => cfg.target_error = scalar(&key, value)?,
                "search_lower" => cfg.search_lower = scalar(&key, value)?,
                "search_upper" => cfg.search_upper = scalar(&key, value)?,
                _ => unreachable!("normalize_key admits only known keys"),
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.realizations == 0 {
            return bad("realizations must be at least 1".into());
        }
        if self.samples < 2 {
            return bad("samples must be at least 2".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        if !(self.target_error > 0.0 && self.target_error < 1.0) {
            return bad(format!("target_error {} outside (0, 1)", self.target_error));
        }
        if !(self.search_lower > 0.0 && self.search_upper > self.search_lower) {
            return bad("search window must satisfy 0 < search_lower < search_upper".into());
        }
        let non_negative = |name: &str, v: &Option<Vec<f64>>| -> Result<(), CliError> {
            if let Some(v) = v {
                if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(CliError::Config(format!(
                        "{name} values must be finite and >= 0"
                    )));
                }
            }
            Ok(())
        };
        non_negative("gamma", &self.gamma)?;
        non_negative("delta", &self.delta)?;
        non_negative("j0_over_mu0", &self.j0_over_mu0)?;
        if let Some(t) = self.t_max {
            if !(t.is_finite() && t > 0.0) {
                return bad(format!("t_max {t} must be positive"));
            }
        }
        if let Some(g) = &self.t_max_grid {
            if g.is_empty() || g.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                return bad("t_max_grid values must be positive".into());
            }
        }
        for (name, empty) in [
            ("mu0", self.mu0.as_ref().is_some_and(|v| v.is_empty())),
            (
                "distance",
                self.distance.as_ref().is_some_and(|v| v.is_empty()),
            ),
            ("gamma", self.gamma.as_ref().is_some_and(|v| v.is_empty())),
            ("delta", self.delta.as_ref().is_some_and(|v| v.is_empty())),
        ] {
            if empty {
                return bad(format!("{name} list is empty"));
            }
        }
        Ok(())
    }

    /// Key-value pairs that rebuild this configuration through
    /// [`ExperimentConfig::from_map`].
    pub fn to_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        m.insert("experiment".into(), self.experiment.name().into());
        m.insert("n_sites".into(), self.n_sites.to_string());
        if let Some(v) = &self.mu0 {
            m.insert("mu0".into(), join(v));
        }
        if let Some(v) = self.j0 {
            m.insert("j0".into(), v.to_string());
        }
        if let Some(v) = &self.j0_over_mu0 {
            m.insert("j0_over_mu0".into(), join(v));
        }
        if let Some(v) = &self.distance {
            let s = v
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",");
            m.insert("distance".into(), s);
        }
        if let Some(v) = self.t_max {
            m.insert("t_max".into(), v.to_string());
        }
        if let Some(v) = &self.t_max_grid {
            m.insert("t_max_grid".into(), join(v));
        }
        if let Some(v) = &self.gamma {
            m.insert("gamma".into(), join(v));
        }
        if let Some(v) = &self.delta {
            m.insert("delta".into(), join(v));
        }
        m.insert("realizations".into(), self.realizations.to_string());
        m.insert("seed".into(), self.seed.to_string());
        if let Some(v) = self.jobs {
            m.insert("jobs".into(), v.to_string());
        }
        m.insert(
            "format".into(),
            match self.format {
                OutputFormat::Csv => "csv",
                OutputFormat::Json => "json",
            }
            .into(),
        );
        if let Some(p) = &self.out {
            m.insert("out".into(), p.display().to_string());
        }
        m.insert("no_timestamp".into(), self.no_timestamp.to_string());
        m.insert("samples".into(), self.samples.to_string());
        m.insert(
            "method".into(),
            match self.method {
                Method::Full => "full",
                Method::Effective => "effective",
                Method::Both => "both",
            }
            .into(),
        );
        m.insert("target_error".into(), self.target_error.to_string());
        m.insert("search_lower".into(), self.search_lower.to_string());
        m.insert("search_upper".into(), self.search_upper.to_string());
        m
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// repeated keys and unknown keys are errors.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("line {}: expected key = value", lineno + 1))
        })?;
        let key = normalize_key(k)?;
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Config(format!(
                "line {}: duplicate key '{key}'",
                lineno + 1
            )));
        }
    }
    Ok(map)
}

fn normalize_key(k: &str) -> Result<String, CliError> {
    let key = k.trim().trim_start_matches("--").replace('-', "_");
    if KEYS.contains(&key.as_str()) {
        Ok(key)
    } else {
        Err(CliError::Config(format!("unknown key '{}'", k.trim())))
    }
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse '{value}'")))
}

fn boolean(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "" | "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Config(format!(
            "{key}: expected a boolean, got '{value}'"
        ))),
    }
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| scalar(key, s))
        .collect()
}

/// Either a comma list or an inclusive `start:stop:step` range.
fn grid(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = value.split(':').collect();
    match parts.as_slice() {
        [_] => list(key, value),
        [a, b, s] => {
            let (a, b, s): (f64, f64, f64) = (
                scalar(key, a.trim())?,
                scalar(key, b.trim())?,
                scalar(key, s.trim())?,
            );
            if !(s > 0.0 && b >= a && a.is_finite() && b.is_finite()) {
                return Err(CliError::Config(format!("{key}: bad range '{value}'")));
            }
            let n = ((b - a) / s + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + i as f64 * s).collect())
        }
        _ => Err(CliError::Config(format!(
            "{key}: expected list or start:stop:step"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_headline_case() {
        let c = ExperimentConfig::default();
        assert_eq!(c.n_sites, 39);
        assert_eq!(c.realizations, 100);
        assert_eq!(c.format, OutputFormat::Csv);
    }

    #[test]
    fn rejects_unknown_key() {
        let err = parse_key_values("n_sites = 39\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, CliError::Config(m) if m.contains("bogus")));
    }

    #[test]
    fn rejects_duplicate_key() {
        assert!(parse_key_values("seed = 1\nseed = 2").is_err());
    }

    #[test]
    fn flags_override_file() {
        let cfg = ExperimentConfig::from_sources(
            Some("seed = 3\nmu0 = 0.5 # comment\n"),
            &[("--seed".into(), "9".into())],
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.mu0, Some(vec![0.5]));
    }

    #[test]
    fn l_maps_to_distance() {
        let cfg = ExperimentConfig::from_sources(Some("l = 1,3"), &[]).unwrap();
        assert_eq!(cfg.distance, Some(vec![5, 9]));
    }

    #[test]
    fn range_grid_is_inclusive() {
        let g = grid("t_max_grid", "2:50:1").unwrap();
        assert_eq!(g.len(), 49);
        assert_eq!(*g.last().unwrap(), 50.0);
        assert_eq!(grid("g", "5,10").unwrap(), vec![5.0, 10.0]);
        assert!(grid("g", "5:1:1").is_err());
    }

    #[test]
    fn experiment_names_roundtrip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
    }

    #[test]
    fn map_roundtrip() {
        let cfg = ExperimentConfig::from_sources(
            Some("experiment = robustness\ndelta = 0.1,0.3\nt_max_grid = 20:30:5\ngamma=0.001\nout=x.csv"),
            &[],
        )
        .unwrap();
        assert_eq!(ExperimentConfig::from_map(&cfg.to_map()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            "realizations = 0",
            "gamma = -1",
            "format = xml",
            "t_max = 0",
            "n_sites = x",
        ] {
            assert!(
                ExperimentConfig::from_sources(Some(bad), &[]).is_err(),
                "{bad}"
            );
        }
    }
}
