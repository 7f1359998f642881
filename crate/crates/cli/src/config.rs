use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

use senergy_core::apps::opinion::SqueezePolicy;
use senergy_core::{PolicyKind, StochasticKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dynamics {
    /// Undirected graphs with a built-in policy.
    Averaging,
    TypeSymmetric,
    CutBalanced,
}

impl Dynamics {
    pub fn stochastic(self) -> Option<StochasticKind> {
        match self {
            Dynamics::Averaging => None,
            Dynamics::TypeSymmetric => Some(StochasticKind::TypeSymmetric),
            Dynamics::CutBalanced => Some(StochasticKind::CutBalanced),
        }
    }
}

/// Flat experiment configuration; every key is optional.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub n: usize,
    pub rho: f64,
    pub s: Vec<f64>,
    /// When absent, `lowerbound` uses `rho^(2n)` and the other commands use [`DEFAULT_EPS`].
    pub eps: Option<Vec<f64>>,
    pub policy: PolicyKind,
    pub dynamics: Dynamics,
    /// Smallest matrix entry for the stochastic dynamics.
    pub floor: f64,
    pub edge_probability: f64,
    pub tolerance: f64,
    pub steps_cap: usize,
    pub diameter_cutoff: f64,
    pub seed: u64,
    pub trials: usize,
    pub d: usize,
    pub alpha: f64,
    pub squeeze: SqueezePolicy,
    pub coupling: f64,
    pub dt: f64,
    pub alpha_margin: f64,
}

pub const DEFAULT_EPS: [f64; 3] = [1e-2, 1e-4, 1e-6];

impl Default for Config {
    fn default() -> Self {
        Config {
            n: 4,
            rho: 0.25,
            s: vec![0.25, 0.5, 1.0],
            eps: None,
            policy: PolicyKind::Midpoint,
            dynamics: Dynamics::Averaging,
            floor: 0.1,
            edge_probability: 0.5,
            tolerance: senergy_core::DEFAULT_TOLERANCE,
            steps_cap: 10_000,
            diameter_cutoff: senergy_core::simulate::DEFAULT_DIAMETER_CUTOFF,
            seed: 0,
            trials: 1,
            d: 2,
            alpha: 0.5,
            squeeze: SqueezePolicy::CenterCollapse,
            coupling: 1.0,
            dt: 0.5,
            alpha_margin: 0.2,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn eps_or_default(&self) -> Vec<f64> {
        self.eps.clone().unwrap_or_else(|| DEFAULT_EPS.to_vec())
    }
}
