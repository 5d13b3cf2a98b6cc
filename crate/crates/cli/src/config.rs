use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use coexposure::calibration::CalibrationConfig;
use coexposure::monte_carlo::SimConfig;
use coexposure::scenario::{Ds1Config, Ds2Config};
use coexposure::{Capital, Coexposure, StepWeightParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    Step,
    Pd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GenKind {
    Ds1,
    Ds2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// Exposure CSV files, relative to the config file.
    pub exposures: Vec<PathBuf>,
    pub weight_scheme: WeightScheme,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig { exposures: Vec::new(), weight_scheme: WeightScheme::Step }
    }
}

/// Monte Carlo settings as written in the config. The run seed is supplied
/// separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub iterations: usize,
    pub q: f64,
    /// Apply `pd -> sqrt(A pd)` before simulating.
    pub downturn: bool,
    pub downturn_a: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let d = SimConfig::default();
        SimulationConfig { iterations: d.iterations, q: d.q, downturn: true, downturn_a: 0.3 }
    }
}

impl SimulationConfig {
    pub fn to_sim(&self, seed: u64) -> SimConfig {
        SimConfig {
            iterations: self.iterations,
            q: self.q,
            seed,
            downturn_a: self.downturn.then_some(self.downturn_a),
            keep_samples: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub trials: usize,
    pub bins: usize,
    pub steps: usize,
    pub factor: f64,
    pub top_k: usize,
    pub downgrade_borrowers: Vec<String>,
    pub downgrade_to: u32,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            trials: 1000,
            bins: 50,
            steps: 50,
            factor: 5.0,
            top_k: 50,
            downgrade_borrowers: Vec::new(),
            downgrade_to: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub kind: GenKind,
    /// Issuers in the random loan book behind a DS2-like system.
    pub issuers: usize,
    pub ds1: Ds1Config,
    pub ds2: Ds2Config,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { kind: GenKind::Ds1, issuers: 500, ds1: Ds1Config::default(), ds2: Ds2Config::default() }
    }
}

/// Everything a run depends on. The seed and every command-line override are
/// folded in before hashing, so the hash identifies the run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub input: InputConfig,
    pub weights: StepWeightParams<f64>,
    pub capital: Capital,
    pub coexposure: Coexposure,
    pub simulation: SimulationConfig,
    pub calibration: CalibrationConfig,
    pub scenario: ScenarioConfig,
    pub gen: GenConfig,
}

impl RunConfig {
    /// Reads a TOML config; input paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in &mut cfg.input.exposures {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.capital.validate()?;
        self.coexposure.validate()?;
        self.simulation.to_sim(self.seed).validate()?;
        self.calibration.validate()?;
        for p in &self.input.exposures {
            if !p.is_file() {
                bail!("input file {} does not exist", p.display());
            }
        }
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON form of the
    /// config followed by the digest of each input file.
    pub fn hash(&self) -> Result<String> {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self)?);
        for p in &self.input.exposures {
            let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            h.update(Sha256::digest(&bytes));
        }
        Ok(hex::encode(h.finalize())[..16].to_string())
    }
}

/// Rewrites `alpha` and `eta` in the `[coexposure]` table of a config file,
/// keeping a copy of the original next to it with a `.bak` suffix. Other
/// content and formatting are left as they were.
pub fn write_params(path: &Path, alpha: f64, eta: f64) -> Result<PathBuf> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut doc: toml_edit::DocumentMut = text.parse().with_context(|| format!("parsing config {}", path.display()))?;
    let mut backup = path.as_os_str().to_owned();
    backup.push(".bak");
    let backup = PathBuf::from(backup);
    fs::copy(path, &backup).with_context(|| format!("writing backup {}", backup.display()))?;

    let table = doc
        .entry("coexposure")
        .or_insert_with(|| toml_edit::Item::Table(toml_edit::Table::new()))
        .as_table_mut()
        .context("`coexposure` in the config is not a table")?;
    table["alpha"] = toml_edit::value(alpha);
    table["eta"] = toml_edit::value(eta);
    fs::write(path, doc.to_string()).with_context(|| format!("writing config {}", path.display()))?;
    Ok(backup)
}
