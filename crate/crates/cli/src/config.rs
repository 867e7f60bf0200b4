//! Serializable experiment descriptions: every `gen` and `report` run can be
//! saved and replayed byte-identically.

use std::path::PathBuf;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use ptfprg_core::harness::experiments::{SuiteName, SuiteParams};
use ptfprg_core::harness::output::SampleFormat;
use ptfprg_core::GeneratorConfig;

/// How to build the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum GeneratorSpec {
    /// Parameters derived from `(n, ε, C)`.
    Theorem {
        n: usize,
        epsilon: f64,
        #[serde(rename = "C")]
        c: f64,
    },
    /// Desk-scale parameters set directly.
    Empirical {
        n: usize,
        delta: f64,
        ell: usize,
        delta1: f64,
        delta2: f64,
        #[serde(rename = "M")]
        memory_bits: u32,
    },
}

impl GeneratorSpec {
    pub fn build(&self) -> ptfprg_core::Result<GeneratorConfig> {
        match *self {
            GeneratorSpec::Theorem { n, epsilon, c } => GeneratorConfig::derive(n, epsilon, c),
            GeneratorSpec::Empirical {
                n,
                delta,
                ell,
                delta1,
                delta2,
                memory_bits,
            } => GeneratorConfig::empirical(n, delta, ell, delta1, delta2, memory_bits),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum ExperimentConfig {
    Gen {
        generator: GeneratorSpec,
        count: u64,
        seed: u64,
        /// Explicit master seed for a single sample, instead of `seed`.
        seed_hex: Option<String>,
        format: SampleFormat,
        output: Option<PathBuf>,
    },
    Report {
        generator: GeneratorSpec,
        suite: SuiteName,
        params: SuiteParams,
        out_dir: PathBuf,
    },
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, path: &std::path::Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn expect_command(&self, name: &str) -> anyhow::Result<()> {
        let actual = match self {
            ExperimentConfig::Gen { .. } => "gen",
            ExperimentConfig::Report { .. } => "report",
        };
        if actual != name {
            bail!("config file describes a `{actual}` run, not `{name}`");
        }
        Ok(())
    }
}
