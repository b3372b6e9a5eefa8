//! Run configuration: JSON schema, loading, and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rmarket_core::forecast::SigmaMode;
use rmarket_core::market::{validate, EsrSpec, GeneratorSpec, MarketConfig};
use rmarket_core::pricing::PriceScheme;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid configuration:\n{0}")]
    Invalid(String),
}

/// Which pricing schemes a run settles under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    Lmp,
    Tlmp,
    Both,
}

impl SchemeChoice {
    pub fn schemes(self) -> Vec<PriceScheme> {
        match self {
            SchemeChoice::Lmp => vec![PriceScheme::Lmp],
            SchemeChoice::Tlmp => vec![PriceScheme::Tlmp],
            SchemeChoice::Both => vec![PriceScheme::Lmp, PriceScheme::Tlmp],
        }
    }
}

impl std::str::FromStr for SchemeChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lmp" => Ok(SchemeChoice::Lmp),
            "tlmp" => Ok(SchemeChoice::Tlmp),
            "both" => Ok(SchemeChoice::Both),
            other => Err(format!("unknown scheme {other:?} (want lmp, tlmp, or both)")),
        }
    }
}

/// Demand model: a mean profile (inline or CSV) plus noise scales.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemandConfig {
    /// Inline mean profile, MW per interval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<Vec<f64>>,
    /// CSV profile (interval index, MW), relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_csv: Option<PathBuf>,
    pub sigma_load: f64,
    pub sigma_step: f64,
    #[serde(default)]
    pub sigma_mode: SigmaMode,
}

/// Experiment block: scenario batch shape and scheme selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scheme: SchemeChoice,
    pub scenarios: usize,
    pub base_seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Index of the ESR whose bids the perturb command sweeps.
    #[serde(default)]
    pub perturbed_esr: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_epsilon() -> f64 {
    0.01
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Everything a run needs: market, participants, demand model, experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub market: MarketConfig,
    pub generators: Vec<GeneratorSpec>,
    #[serde(default)]
    pub esrs: Vec<EsrSpec>,
    pub demand: DemandConfig,
    pub experiment: ExperimentConfig,
}

impl RunConfig {
    /// The mean demand profile, with any CSV reference resolved.
    pub fn mean_profile(&self) -> &[f64] {
        self.demand.mean.as_deref().unwrap_or(&[])
    }
}

fn read_mean_csv(path: &Path) -> Result<Vec<f64>, ConfigError> {
    let io = |source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => io(source),
            other => ConfigError::Invalid(format!("{}: {other:?}", path.display())),
        })?;
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        let parse = |k: usize| {
            rec.get(k)
                .ok_or_else(|| {
                    ConfigError::Invalid(format!("{}: row needs 2 fields", path.display()))
                })?
                .trim()
                .parse()
                .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))
        };
        let t: f64 = parse(0)?;
        rows.push((t as usize, parse(1)?));
    }
    rows.sort_by_key(|&(t, _)| t);
    for (k, &(t, _)) in rows.iter().enumerate() {
        if t != k {
            return Err(ConfigError::Invalid(format!(
                "{}: interval indices must be 0..n contiguous, found {t} at position {k}",
                path.display()
            )));
        }
    }
    Ok(rows.into_iter().map(|(_, mw)| mw).collect())
}

/// Load, resolve the demand profile, and validate; violations are rendered
/// with their field paths.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg: RunConfig =
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;

    if let Some(csv_path) = &cfg.demand.mean_csv {
        if cfg.demand.mean.is_some() {
            return Err(ConfigError::Invalid(
                "demand.mean: give either an inline profile or mean_csv, not both".into(),
            ));
        }
        let resolved = path.parent().unwrap_or(Path::new(".")).join(csv_path);
        cfg.demand.mean = Some(read_mean_csv(&resolved)?);
    }

    let mut problems: Vec<String> = validate(&cfg.market, &cfg.generators, &cfg.esrs)
        .into_iter()
        .map(|v| v.to_string())
        .collect();
    let mean = cfg.mean_profile();
    if mean.is_empty() {
        problems.push("demand.mean: profile is required (inline or mean_csv)".into());
    } else if mean.len() != cfg.market.horizon {
        problems.push(format!(
            "demand.mean: profile has {} intervals, market.horizon is {}",
            mean.len(),
            cfg.market.horizon
        ));
    }
    if mean.iter().any(|&d| !(d > 0.0)) {
        problems.push("demand.mean: every interval must be positive".into());
    }
    if cfg.demand.sigma_load < 0.0 || cfg.demand.sigma_step < 0.0 {
        problems.push("demand.sigma_load/sigma_step: must be nonnegative".into());
    }
    if cfg.experiment.scenarios == 0 {
        problems.push("experiment.scenarios: must be at least 1".into());
    }
    if cfg.experiment.epsilon < 0.0 {
        problems.push("experiment.epsilon: must be nonnegative".into());
    }
    if !cfg.esrs.is_empty() && cfg.experiment.perturbed_esr >= cfg.esrs.len() {
        problems.push(format!(
            "experiment.perturbed_esr: index {} out of range ({} ESRs)",
            cfg.experiment.perturbed_esr,
            cfg.esrs.len()
        ));
    }
    if !problems.is_empty() {
        return Err(ConfigError::Invalid(problems.join("\n")));
    }
    Ok(cfg)
}
