//! Experiment configuration: a TOML file of top-level keys, `[[layer]]` rows
//! and optional per-subcommand tables.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use kerr1d::solvers::NewtonConfig;
use kerr1d::{Grid, MaterialProfile, ProblemSpec, SchemeKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRow {
    pub nu: f64,
    pub eps: f64,
    /// Omit on every row for equal thicknesses.
    pub thickness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Defaults to 20 for `omega = 1` and 60 otherwise.
    pub max_iter: Option<usize>,
    #[serde(default = "default_divergence")]
    pub divergence_factor: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { omega: 1.0, tol: default_tol(), max_iter: None, divergence_factor: default_divergence() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub from: f64,
    pub to: f64,
    pub points: usize,
    #[serde(default = "default_direction")]
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub eps_start: f64,
    pub increments: Vec<f64>,
    /// Residual reduction that counts as success.
    #[serde(default = "default_probe_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSection {
    pub m: Vec<usize>,
    #[serde(default = "default_timing_iterations")]
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffsSection {
    pub nu: Vec<f64>,
    pub h_tilde: Vec<f64>,
}

/// Linear step medium used instead of the slab by `convergence`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSection {
    #[serde(default = "one")]
    pub nu_left: f64,
    pub nu_right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k0: f64,
    pub z_max: f64,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    /// Node counts.
    #[serde(default)]
    pub m: Vec<usize>,
    /// Dimensionless spacings; each is rounded to the nearest admissible grid.
    #[serde(default)]
    pub h_tilde: Vec<f64>,
    /// Spacings `h_tilde_base * 10^e` for each listed `e`.
    pub h_tilde_base: Option<f64>,
    #[serde(default)]
    pub h_tilde_exponents: Vec<f64>,
    /// `linear`, `oracle` or `file:PATH`.
    #[serde(default = "default_seed")]
    pub seed: String,
    /// `|T|` near which the continuum reference is sought.
    #[serde(default = "one")]
    pub oracle_t_guess: f64,
    /// Reach the target nonlinearity by adaptive continuation from the seed.
    #[serde(default)]
    pub continuation: bool,
    /// Orders of the convergence fit; one entry for `C h^p`, two for `a h^p + b h^q`.
    #[serde(default)]
    pub fit: Vec<f64>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(rename = "layer", default)]
    pub layers: Vec<LayerRow>,
    pub sweep: Option<SweepSection>,
    pub probe: Option<ProbeSection>,
    pub timing: Option<TimingSection>,
    pub coeffs: Option<CoeffsSection>,
    pub step: Option<StepSection>,
}

fn one() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-10
}
fn default_probe_tol() -> f64 {
    1e-6
}
fn default_divergence() -> f64 {
    1e6
}
fn default_direction() -> Direction {
    Direction::Up
}
fn default_timing_iterations() -> usize {
    5
}
fn default_scheme() -> String {
    "fv4".into()
}
fn default_seed() -> String {
    "linear".into()
}

/// Initial guess policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeedPolicy {
    Linear,
    Oracle,
    File(PathBuf),
}

impl std::str::FromStr for SeedPolicy {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(SeedPolicy::Linear),
            "oracle" => Ok(SeedPolicy::Oracle),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(SeedPolicy::File(PathBuf::from(p))),
                _ => bail!("seed must be linear, oracle or file:PATH, got {s:?}"),
            },
        }
    }
}

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub scheme: Option<String>,
    pub omega: Option<f64>,
    pub seed: Option<String>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("parsing config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = &o.scheme {
            self.scheme = s.clone();
        }
        if let Some(w) = o.omega {
            self.solver.omega = w;
        }
        if let Some(s) = &o.seed {
            self.seed = s.clone();
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string()
    }

    pub fn scheme_kind(&self) -> Result<SchemeKind> {
        self.scheme.parse().map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn seed_policy(&self) -> Result<SeedPolicy> {
        self.seed.parse()
    }

    pub fn newton(&self) -> Result<NewtonConfig> {
        let s = &self.solver;
        let cfg = NewtonConfig {
            omega: s.omega,
            tol_rel: s.tol,
            max_iter: s.max_iter.unwrap_or(if s.omega == 1.0 { 20 } else { 60 }),
            divergence_factor: s.divergence_factor,
            ..NewtonConfig::plain()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn material(&self) -> Result<MaterialProfile> {
        if self.layers.is_empty() {
            bail!("config needs at least one [[layer]] row");
        }
        let pairs: Vec<(f64, f64)> = self.layers.iter().map(|l| (l.nu, l.eps)).collect();
        let given = self.layers.iter().filter(|l| l.thickness.is_some()).count();
        if given == 0 {
            return Ok(MaterialProfile::equal_layers(self.z_max, &pairs)?);
        }
        if given != self.layers.len() {
            bail!("give a thickness on every [[layer]] row or on none");
        }
        let mut bps = vec![0.0];
        for l in &self.layers {
            bps.push(bps.last().unwrap() + l.thickness.unwrap());
        }
        let total = *bps.last().unwrap();
        if (total - self.z_max).abs() > 1e-12 * self.z_max {
            bail!("layer thicknesses sum to {total}, expected z_max = {}", self.z_max);
        }
        *bps.last_mut().unwrap() = self.z_max;
        Ok(MaterialProfile::new(bps, pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())?)
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        Ok(ProblemSpec::new(self.k0, self.material()?)?)
    }

    /// Requested spacings, including the base/exponent form.
    pub fn h_tilde_list(&self) -> Vec<f64> {
        let mut out = self.h_tilde.clone();
        if let Some(base) = self.h_tilde_base {
            out.extend(self.h_tilde_exponents.iter().map(|e| base * 10f64.powf(*e)));
        }
        out
    }

    /// One grid per requested size, node counts first.
    pub fn grids(&self, spec: &ProblemSpec) -> Result<Vec<Grid>> {
        let mut grids = Vec::new();
        for &m in &self.m {
            grids.push(kerr1d::build_grid(spec, m)?);
        }
        for h in self.h_tilde_list() {
            grids.push(Grid::for_h_tilde(spec, h)?);
        }
        if grids.is_empty() {
            bail!("config needs grid sizes: m, h_tilde or h_tilde_base with h_tilde_exponents");
        }
        Ok(grids)
    }
}
