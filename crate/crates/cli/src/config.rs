use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::Args;
use contlogic::scalar::{parse_f64, parse_rational};
use contlogic::Rational;
use serde::Deserialize;

/// Run settings shared by every subcommand. A TOML file given by `--config`
/// supplies values that flags then override.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Model description file (JSON).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Formula text.
    #[arg(long, global = true)]
    pub formula: Option<String>,
    /// File holding the formula text.
    #[arg(long, global = true)]
    pub formula_file: Option<PathBuf>,
    #[arg(long, global = true)]
    pub epsilon: Option<String>,
    /// Admission threshold for sampled points; defaults to epsilon / 3.
    #[arg(long, global = true)]
    pub gate: Option<String>,
    #[arg(long, global = true)]
    pub tolerance: Option<String>,
    /// Covering radius of certified quantifier nets.
    #[arg(long, global = true)]
    pub delta: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Largest candidate family.
    #[arg(long, global = true)]
    pub candidates: Option<usize>,
    /// Term depth for enumeration and scheme depth for axioms.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Step of the coefficient grid.
    #[arg(long, global = true)]
    pub mesh: Option<String>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

macro_rules! merge {
    ($flags:expr, $file:expr, $($field:ident),*) => {
        RunConfig { $($field: $flags.$field.or($file.$field)),* }
    };
}

impl RunConfig {
    pub fn load(flags: RunConfig, path: Option<&Path>) -> Result<RunConfig> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => RunConfig::default(),
        };
        Ok(merge!(
            flags,
            file,
            model,
            formula,
            formula_file,
            epsilon,
            gate,
            tolerance,
            delta,
            seed,
            samples,
            candidates,
            depth,
            mesh,
            output,
            workers
        ))
    }

    pub fn model_path(&self) -> Result<&Path> {
        self.model
            .as_deref()
            .ok_or_else(|| anyhow!("no model given (use --model or the config file)"))
    }

    pub fn formula_text(&self, positional: Option<&str>) -> Result<String> {
        if let Some(t) = positional.or(self.formula.as_deref()) {
            return Ok(t.to_string());
        }
        let path = self
            .formula_file
            .as_deref()
            .ok_or_else(|| anyhow!("no formula given"))?;
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(text.trim().to_string())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn tolerance(&self) -> Result<f64> {
        decimal(self.tolerance.as_deref(), 1e-9, "tolerance")
    }

    pub fn epsilon(&self) -> Result<f64> {
        let text = self
            .epsilon
            .as_deref()
            .ok_or_else(|| anyhow!("no epsilon given"))?;
        let eps = decimal(Some(text), 0.0, "epsilon")?;
        if eps <= 0.0 {
            return Err(anyhow!("epsilon must be positive"));
        }
        Ok(eps)
    }

    pub fn gate(&self, eps: f64) -> Result<f64> {
        decimal(self.gate.as_deref(), eps / 3.0, "gate")
    }

    pub fn delta(&self) -> Result<Option<f64>> {
        self.delta
            .as_deref()
            .map(|d| decimal(Some(d), 0.0, "delta"))
            .transpose()
    }

    pub fn mesh(&self) -> Result<Rational> {
        match self.mesh.as_deref() {
            None => Ok(Rational::new(1.into(), 4.into())),
            Some(t) => {
                let q = parse_rational(t).ok_or_else(|| anyhow!("bad mesh `{t}`"))?;
                if q <= Rational::default() {
                    return Err(anyhow!("mesh must be positive"));
                }
                Ok(q)
            }
        }
    }
}

fn decimal(text: Option<&str>, default: f64, what: &str) -> Result<f64> {
    match text {
        None => Ok(default),
        Some(t) => parse_f64(t).ok_or_else(|| anyhow!("bad {what} `{t}`")),
    }
}
