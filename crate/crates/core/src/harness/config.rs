use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::central::CentralKind;
use crate::decentral::DecentralKind;
use crate::error::{invalid, Error, Result};
use crate::instance::{generate_instance, RewardMatrix};

/// Parameters for the rejection-sampling instance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    #[serde(rename = "M")]
    pub num_agents: usize,
    #[serde(rename = "K")]
    pub num_arms: usize,
    pub gap_min: f64,
    pub gap_max: f64,
    pub seed: u64,
}

impl GeneratorParams {
    pub fn generate(&self, offset: u64) -> Result<RewardMatrix> {
        generate_instance(
            self.num_agents,
            self.num_arms,
            self.gap_min,
            self.gap_max,
            self.seed.wrapping_add(offset),
        )
    }
}

/// Where the reward matrix comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    /// An instance file; relative paths resolve against the config file.
    File(PathBuf),
    /// One generated instance shared by all replications.
    Generate(GeneratorParams),
    /// A fresh generated instance per replication, seeded `seed + i`.
    Family(GeneratorParams),
}

impl InstanceSource {
    /// The instance used by replication `rep`.
    pub fn instance_for(&self, rep: u64) -> Result<RewardMatrix> {
        match self {
            Self::File(path) => RewardMatrix::load(path),
            Self::Generate(params) => params.generate(0),
            Self::Family(params) => params.generate(rep),
        }
    }

    pub fn varies_per_replication(&self) -> bool {
        matches!(self, Self::Family(_))
    }
}

/// Every runnable policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyId {
    Hcla,
    Ghcla,
    Gphcla,
    /// Edge-level learner with the hint condition switched off.
    GphclaNohint,
    Hdetc,
    Ebhdetc,
}

impl PolicyId {
    pub const ALL: [PolicyId; 6] = [
        Self::Hcla,
        Self::Ghcla,
        Self::Gphcla,
        Self::GphclaNohint,
        Self::Hdetc,
        Self::Ebhdetc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Hcla => "hcla",
            Self::Ghcla => "ghcla",
            Self::Gphcla => "gphcla",
            Self::GphclaNohint => "gphcla-nohint",
            Self::Hdetc => "hdetc",
            Self::Ebhdetc => "ebhdetc",
        }
    }

    pub fn is_decentralized(self) -> bool {
        matches!(self, Self::Hdetc | Self::Ebhdetc)
    }

    pub fn central_kind(self) -> Option<CentralKind> {
        match self {
            Self::Hcla => Some(CentralKind::Hcla),
            Self::Ghcla => Some(CentralKind::Ghcla),
            Self::Gphcla | Self::GphclaNohint => Some(CentralKind::Gphcla),
            Self::Hdetc | Self::Ebhdetc => None,
        }
    }

    pub fn decentral_kind(self, gap: Option<f64>) -> Result<Option<DecentralKind>> {
        match self {
            Self::Hdetc | Self::Ebhdetc => DecentralKind::parse(self.name(), gap).map(Some),
            _ => Ok(None),
        }
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| invalid(format!("unknown policy {s:?}")))
    }
}

/// A full experiment description; mirrors the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    pub policy: PolicyId,
    /// Known minimum gap, required by `hdetc`.
    #[serde(default)]
    pub gap: Option<f64>,
    pub horizon: u64,
    pub replications: u64,
    #[serde(default)]
    pub base_seed: u64,
    /// CSV destination; stdout when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Round-by-round JSONL trace of replication 0.
    #[serde(default)]
    pub trace: Option<PathBuf>,
    /// Overrides the default geometric checkpoint grid.
    #[serde(default)]
    pub checkpoints: Option<Vec<u64>>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(invalid("horizon must be at least 1"));
        }
        if self.replications == 0 {
            return Err(invalid("replications must be at least 1"));
        }
        if self.policy == PolicyId::Hdetc && !self.gap.is_some_and(|g| g > 0.0) {
            return Err(invalid("hdetc requires a positive gap"));
        }
        if let Some(cps) = &self.checkpoints {
            if cps.is_empty() || cps.iter().any(|&c| c == 0 || c > self.horizon) {
                return Err(invalid("checkpoints must lie in 1..=horizon"));
            }
        }
        Ok(())
    }

    /// Reads a JSON config. Relative paths inside it resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let InstanceSource::File(p) = &mut cfg.instance {
            resolve(p);
        }
        if let Some(p) = &mut cfg.output {
            resolve(p);
        }
        if let Some(p) = &mut cfg.trace {
            resolve(p);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
