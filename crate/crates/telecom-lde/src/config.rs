//! Experiment configuration: a TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use telecom_core::lde::Method;
use telecom_core::simulator::{Residual, DEFAULT_JUMP_BUDGET};
use telecom_core::{DurationLaw, Error, RewardLaw, RewardMarginal, TelecomParams};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    LimitCheck,
    LdModerate,
    LdIntermediate,
    LdMultisession,
    LdUltra,
    Constants,
    MeasureSelftest,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::LimitCheck => "limit-check",
            Experiment::LdModerate => "ld-moderate",
            Experiment::LdIntermediate => "ld-intermediate",
            Experiment::LdMultisession => "ld-multisession",
            Experiment::LdUltra => "ld-ultra",
            Experiment::Constants => "constants",
            Experiment::MeasureSelftest => "measure-selftest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Omitted for `limit-check` runs with a service system, where `Q = L c_U γ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub gamma: f64,
}

/// How the level `ρ` follows the horizon `t`. Exactly one field is set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoRule {
    /// `ρ = t^β`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// `ρ = κ t`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Fixed levels, one per horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Simulation {
    #[serde(default = "default_method")]
    pub method: Method,
    /// Big-jump threshold as a fraction of `ρ` (moderate, ultra) or of `t`.
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_budget")]
    pub jump_budget: f64,
    #[serde(default)]
    pub residual: Residual,
    #[serde(default)]
    pub marginal: RewardMarginal,
    /// Conditioning depth; defaults to one more than the sessions needed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

impl Default for Simulation {
    fn default() -> Self {
        Self {
            method: default_method(),
            h: default_h(),
            jump_budget: default_budget(),
            residual: Residual::default(),
            marginal: RewardMarginal::default(),
            n_max: None,
        }
    }
}

fn default_method() -> Method {
    Method::Conditional
}

fn default_h() -> f64 {
    0.1
}

fn default_budget() -> f64 {
    DEFAULT_JUMP_BUDGET
}

/// Infinite-source service system compared against the limit in `limit-check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSystem {
    /// Time scale `a`; the arrival rate is `a^(γ-1) L`.
    pub a: f64,
    pub l: f64,
    pub u_min: f64,
    /// Times in `(0, 1]` at which `Z_a(t)` is compared with `Y(t)`.
    #[serde(default = "default_service_t")]
    pub t: Vec<f64>,
    /// Expected number of exactly simulated sessions per replicate.
    #[serde(default = "default_session_budget")]
    pub session_budget: f64,
    #[serde(default = "default_session_cap")]
    pub session_cap: f64,
}

fn default_service_t() -> Vec<f64> {
    vec![1.0]
}

fn default_session_budget() -> f64 {
    1e4
}

fn default_session_cap() -> f64 {
    1e7
}

impl ServiceSystem {
    pub fn duration(&self, gamma: f64) -> Result<DurationLaw, Error> {
        DurationLaw::pareto(gamma, self.u_min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Experiment,
    pub seed: u64,
    pub replicates: u64,
    pub params: Params,
    pub reward: RewardLaw,
    /// Horizons `t`.
    #[serde(default)]
    pub t: Vec<f64>,
    #[serde(default)]
    pub rho: RhoRule,
    /// Levels `κ` for `constants`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kappa: Vec<f64>,
    /// Normalised thresholds for `limit-check`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x: Vec<f64>,
    #[serde(default)]
    pub simulation: Simulation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service: Option<ServiceSystem>,
    /// Not echoed into summaries, which must not depend on where they live.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    pub out: Option<PathBuf>,
}

fn config_error(msg: impl Into<String>) -> Failure {
    Failure::Core(Error::Config(msg.into()))
}

impl Config {
    pub fn load(path: &Path, experiment: Experiment, overrides: &Overrides) -> Result<Self, Failure> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
        let mut config: Config = toml::from_str(&text).map_err(|e| config_error(e.message().to_string()))?;
        if config.experiment != experiment {
            return Err(config_error(format!("config is for {}, not {}", config.experiment.name(), experiment.name())));
        }
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        if let Some(n) = overrides.replicates {
            config.replicates = n;
        }
        if overrides.out.is_some() {
            config.out = overrides.out.clone();
        }
        config.validate()?;
        Ok(config)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// `(Q, γ)`, taking `Q` from the service system when one is given.
    pub fn telecom_params(&self) -> Result<TelecomParams, Failure> {
        let gamma = self.params.gamma;
        let derived = match &self.service {
            Some(s) => Some(TelecomParams::from_service(s.l, s.duration(gamma)?.tail_constant(), gamma)?),
            None => None,
        };
        match (self.params.q, derived) {
            (Some(q), Some(d)) if (q - d.q).abs() > 1e-9 * d.q => Err(config_error(format!(
                "params.q = {q} disagrees with Q = L c_U gamma = {} of the service system",
                d.q
            ))),
            (_, Some(d)) => Ok(d),
            (Some(q), None) => Ok(TelecomParams::new(q, gamma)?),
            (None, None) => Err(config_error("params.q is required without a service system")),
        }
    }

    fn validate(&self) -> Result<(), Failure> {
        self.reward.validate()?;
        self.telecom_params()?;
        if self.replicates < 2 {
            return Err(config_error("replicates must be at least 2"));
        }
        if self.t.iter().any(|&t| !(t.is_finite() && t > 0.0)) {
            return Err(config_error("horizons t must be positive and finite"));
        }
        let s = &self.simulation;
        if !(s.h > 0.0 && s.h.is_finite() && s.jump_budget >= 1.0 && s.jump_budget.is_finite()) {
            return Err(config_error("simulation.h must be positive and jump_budget at least 1"));
        }
        use Experiment::*;
        match self.experiment {
            LdModerate | LdIntermediate | LdMultisession | LdUltra => {
                if self.t.is_empty() {
                    return Err(config_error("t must list at least one horizon"));
                }
                let set = [self.rho.beta.is_some(), self.rho.kappa.is_some(), self.rho.values.is_some()];
                if set.iter().filter(|&&b| b).count() != 1 {
                    return Err(config_error("rho needs exactly one of beta, kappa, values"));
                }
                if let Some(v) = &self.rho.values {
                    if v.len() != self.t.len() || v.iter().any(|&r| !(r.is_finite() && r > 0.0)) {
                        return Err(config_error("rho.values needs one positive level per horizon"));
                    }
                }
                if matches!(self.experiment, LdIntermediate | LdMultisession) && self.rho.kappa.is_none() {
                    return Err(config_error("intermediate experiments need rho.kappa"));
                }
            }
            LimitCheck => {
                if self.t.is_empty() || self.x.is_empty() {
                    return Err(config_error("limit-check needs t and x"));
                }
            }
            Constants => {
                if self.kappa.is_empty() || self.kappa.iter().any(|&k| !(k.is_finite() && k > 0.0)) {
                    return Err(config_error("constants needs positive kappa levels"));
                }
            }
            MeasureSelftest => {}
        }
        if let Some(s) = &self.service {
            if self.experiment != LimitCheck {
                return Err(config_error("a service system is only used by limit-check"));
            }
            if s.t.is_empty() || s.t.windows(2).any(|w| w[1] <= w[0]) || s.t.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
                return Err(config_error("service.t must be increasing within (0, 1]"));
            }
        }
        Ok(())
    }

    /// Levels `ρ` paired with the horizons.
    pub fn levels(&self) -> Vec<(f64, f64)> {
        self.t
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let rho = if let Some(b) = self.rho.beta {
                    t.powf(b)
                } else if let Some(k) = self.rho.kappa {
                    k * t
                } else {
                    self.rho.values.as_ref().map_or(f64::NAN, |v| v[i])
                };
                (t, rho)
            })
            .collect()
    }
}
