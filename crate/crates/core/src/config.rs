//! Run configuration and dataset manifests.
//!
//! A config file is a flat JSON object whose keys are the long names of the
//! command-line flags. Flags given on the command line win over the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::DEFAULT_DECOMPOSE_CAP;
use crate::centrality::Metric;
use crate::error::{Error, Result};
use crate::structure::{BandThresholds, DEFAULT_DENSITY_THRESHOLD, DEFAULT_POOLS, DEFAULT_THETA};
use crate::template::{TemplateParams, DEFAULT_LOOKAHEAD};

pub const DEFAULT_EPSILONS: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 2.5];
pub const DEFAULT_KS: [usize; 5] = [2, 4, 6, 8, 10];
pub const DEFAULT_TRIALS: usize = 10;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Vec<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub metric: Vec<Metric>,
    pub epsilon: Vec<f64>,
    pub k: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub theta: f64,
    pub pool: Vec<usize>,
    pub density_threshold: f64,
    pub band_high: f64,
    pub band_medium: f64,
    pub out: PathBuf,
    pub lcc_only: bool,
    pub decompose_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bands = BandThresholds::default();
        RunConfig {
            input: Vec::new(),
            manifest: None,
            metric: Metric::ALL.to_vec(),
            epsilon: DEFAULT_EPSILONS.to_vec(),
            k: DEFAULT_KS.to_vec(),
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            theta: DEFAULT_THETA,
            pool: DEFAULT_POOLS.to_vec(),
            density_threshold: DEFAULT_DENSITY_THRESHOLD,
            band_high: bands.high,
            band_medium: bands.medium,
            out: PathBuf::from("out"),
            lcc_only: false,
            decompose_cap: DEFAULT_DECOMPOSE_CAP,
        }
    }
}

/// Command-line flags. Every field mirrors a [`RunConfig`] key.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct ConfigOverrides {
    /// JSON config file; flags given here override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Edge-list file (repeatable).
    #[arg(long)]
    pub input: Vec<PathBuf>,
    /// Dataset manifest: lines of `name path expected_n expected_m`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Comma-separated metrics: degree, closeness, betweenness.
    #[arg(long, value_delimiter = ',')]
    pub metric: Option<Vec<Metric>>,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Option<Vec<f64>>,
    /// Comma-separated top-k sizes.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    /// Perturbed copies per noise level.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed for all noise draws.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative gap that separates stable clusters.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Comma-separated neighbor pool sizes.
    #[arg(long, value_delimiter = ',')]
    pub pool: Option<Vec<usize>>,
    /// Top-k subgraph density needed for the structure condition.
    #[arg(long)]
    pub density_threshold: Option<f64>,
    /// Common-neighbor JI at pool N = 10 for the High band.
    #[arg(long)]
    pub band_high: Option<f64>,
    /// Common-neighbor JI at pool N = 10 for the Medium band.
    #[arg(long)]
    pub band_medium: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep only the largest connected component.
    #[arg(long)]
    pub lcc_only: bool,
    /// Largest graph the betweenness decomposition accepts.
    #[arg(long)]
    pub decompose_cap: Option<usize>,
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
    }

    /// Config file (if any) overlaid with the flags that were set.
    pub fn resolve(flags: &ConfigOverrides) -> Result<Self> {
        let mut cfg = match &flags.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        if !flags.input.is_empty() {
            cfg.input = flags.input.clone();
        }
        if flags.manifest.is_some() {
            cfg.manifest = flags.manifest.clone();
        }
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &flags.$field {
                    cfg.$field = v.clone();
                })*
            };
        }
        take!(
            metric,
            epsilon,
            k,
            trials,
            seed,
            theta,
            pool,
            density_threshold,
            band_high,
            band_medium,
            out,
            decompose_cap
        );
        cfg.lcc_only |= flags.lcc_only;
        Ok(cfg)
    }

    /// Usage-level checks; graph-dependent ones happen later.
    pub fn validate(&self) -> Result<()> {
        let usage = |msg: &str| Err(Error::Usage(msg.to_string()));
        if self.input.is_empty() && self.manifest.is_none() {
            return usage("no input: give --input or --manifest");
        }
        if self.metric.is_empty() {
            return usage("no metrics selected");
        }
        if self.epsilon.is_empty() {
            return usage("no noise levels given");
        }
        if self.k.is_empty() {
            return usage("no values of k given");
        }
        if self.pool.is_empty() || self.pool.contains(&0) {
            return usage("pool sizes must be positive");
        }
        if self.trials == 0 {
            return usage("trials must be positive");
        }
        if !(self.theta > 0.0) {
            return usage("theta must be positive");
        }
        if self.band_medium > self.band_high {
            return usage("band-medium must not exceed band-high");
        }
        Ok(())
    }

    pub fn template_params(&self) -> TemplateParams {
        TemplateParams {
            theta: self.theta,
            density_threshold: self.density_threshold,
            bands: BandThresholds {
                high: self.band_high,
                medium: self.band_medium,
            },
            pools: self.pool.clone(),
            lookahead: DEFAULT_LOOKAHEAD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub path: PathBuf,
    pub expected_n: Option<usize>,
    pub expected_m: Option<usize>,
}

/// Reads `name path [expected_n expected_m]` lines. Relative paths are taken
/// from the manifest's directory; `-` leaves an expectation unset.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse_error = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        if fields.len() < 2 {
            return Err(parse_error("expected `name path [n m]`".into()));
        }
        let count = |j: usize| -> Result<Option<usize>> {
            match fields.get(j) {
                None | Some(&"-") => Ok(None),
                Some(s) => s
                    .parse()
                    .map(Some)
                    .map_err(|_| parse_error(format!("bad count {s:?}"))),
            }
        };
        entries.push(ManifestEntry {
            name: fields[0].to_string(),
            path: base.join(fields[1]),
            expected_n: count(2)?,
            expected_m: count(3)?,
        });
    }
    Ok(entries)
}
