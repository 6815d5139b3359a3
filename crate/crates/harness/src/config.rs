//! Experiment configuration, read from TOML.
//!
//! ```toml
//! algorithm = "known_g"
//! comparator = [1.0]
//! seeds = [0, 1]
//! output_path = "out/trace.csv"
//!
//! [adversary]
//! kind = "sign_flip_window"
//! horizon = 400
//! k = 20
//!
//! [protocol]
//! epsilon = 1.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use robust_oco::adversary::AdversarySpec;
use robust_oco::protocol::{ProtocolConfig, ProtocolMode};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    KtBettor,
    KnownG,
    UnknownGCase1,
    UnknownGCase2,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KtBettor => "kt_bettor",
            Algorithm::KnownG => "known_g",
            Algorithm::UnknownGCase1 => "unknown_g_case1",
            Algorithm::UnknownGCase2 => "unknown_g_case2",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        [
            Algorithm::KtBettor,
            Algorithm::KnownG,
            Algorithm::UnknownGCase1,
            Algorithm::UnknownGCase2,
        ]
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| HarnessError::Config(format!("unknown algorithm `{s}`")))
    }
}

fn default_epsilon() -> f64 {
    1.0
}

/// Learner parameters. Unset fields fall back to the preset of the chosen algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSettings {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Corruption budget the learner is tuned for; defaults to the adversary's `k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// `G` for `known_g`; defaults to the adversary's gradient scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    /// Initial FILTER threshold for the unknown-G presets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_beta: Option<f64>,
}

impl Default for ProtocolSettings {
    fn default() -> Self {
        ProtocolSettings {
            epsilon: 1.0,
            k: None,
            lipschitz: None,
            tau_g: None,
            tau_d: None,
            c: None,
            p: None,
            alpha: None,
            gamma_alpha: None,
            gamma_beta: None,
        }
    }
}

impl ProtocolSettings {
    /// The core configuration for `algorithm` against `adversary`.
    ///
    /// Unknown-G presets are built without reading the adversary's `G`.
    pub fn resolve(&self, algorithm: Algorithm, adversary: &AdversarySpec) -> Result<ProtocolConfig> {
        let k = self.k.unwrap_or(adversary.k);
        let (dim, horizon, eps) = (adversary.dim, adversary.horizon, self.epsilon);
        let tau_g = self.tau_g.unwrap_or(1.0);
        let mut cfg = match algorithm {
            Algorithm::KtBettor => return Err(HarnessError::Config("kt_bettor has no protocol configuration".into())),
            Algorithm::KnownG => {
                ProtocolConfig::known_g(dim, horizon, eps, k, self.lipschitz.unwrap_or(adversary.lipschitz))
            }
            Algorithm::UnknownGCase1 => ProtocolConfig::unknown_g_case1(dim, horizon, eps, k, tau_g),
            Algorithm::UnknownGCase2 => ProtocolConfig::unknown_g_case2(dim, horizon, eps, k, tau_g),
        };
        if let Some(c) = self.c {
            cfg.c = c;
        }
        if let Some(p) = self.p {
            cfg.p = p;
        }
        if let Some(alpha) = self.alpha {
            cfg.alpha = alpha;
        }
        if let ProtocolMode::UnknownG {
            tau_d,
            gamma_alpha,
            gamma_beta,
            ..
        } = &mut cfg.mode
        {
            if let Some(v) = self.tau_d {
                *tau_d = v;
            }
            if let Some(v) = self.gamma_alpha {
                *gamma_alpha = v;
            }
            if let Some(v) = self.gamma_beta {
                *gamma_beta = v;
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonRule {
    /// `T = k^2`
    Square,
    /// The adversary's own horizon.
    Fixed,
}

/// Grid for `sweep`: one cell per (algorithm, k, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    pub ks: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_rule")]
    pub horizon: HorizonRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_path: Option<PathBuf>,
}

fn default_rule() -> HorizonRule {
    HorizonRule::Square
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    /// Comparator `u`; defaults to the adversary's own comparator, else the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparator: Option<Vec<f64>>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    pub adversary: AdversarySpec,
    #[serde(default)]
    pub protocol: ProtocolSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSettings>,
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm, adversary: AdversarySpec) -> Self {
        ExperimentConfig {
            algorithm,
            comparator: None,
            seeds: vec![adversary.seed],
            output_path: None,
            adversary,
            protocol: ProtocolSettings::default(),
            sweep: None,
        }
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|source| HarnessError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use robust_oco::adversary::AdversaryKind;

    #[test]
    fn parses_the_documented_example() {
        let text = r#"
            algorithm = "known_g"
            comparator = [1.0]
            seeds = [0, 1]
            output_path = "out/trace.csv"

            [adversary]
            kind = "sign_flip_window"
            horizon = 400
            k = 20

            [protocol]
            epsilon = 1.0
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.algorithm, Algorithm::KnownG);
        assert_eq!(cfg.adversary.kind, AdversaryKind::SignFlipWindow);
        assert_eq!(cfg.adversary.effective_window_start(), 300);
        assert_eq!(cfg.seeds, vec![0, 1]);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = "algorithm = \"known_g\"\nbogus = 1\n[adversary]\nkind = \"iid_random\"\nhorizon = 5\nk = 0\n";
        assert!(ExperimentConfig::from_toml(text).is_err());
    }

    #[test]
    fn overrides_apply_to_presets() {
        let adv = AdversarySpec::new(AdversaryKind::IidRandom, 100, 4);
        let settings = ProtocolSettings {
            c: Some(7.0),
            gamma_beta: Some(0.5),
            ..ProtocolSettings::default()
        };
        let cfg = settings.resolve(Algorithm::UnknownGCase1, &adv).unwrap();
        assert_eq!(cfg.c, 7.0);
        match cfg.mode {
            ProtocolMode::UnknownG {
                gamma_beta,
                gamma_alpha,
                ..
            } => {
                assert_eq!((gamma_alpha, gamma_beta), (1.0, 0.5))
            }
            _ => panic!("expected unknown-G mode"),
        }
        assert!(settings.resolve(Algorithm::KtBettor, &adv).is_err());
    }
}
