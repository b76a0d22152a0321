//! Experiment configuration (JSON).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::AgentSpec;
use crate::belief::{Belief, ConjugateBelief, FiniteSupportBelief};
use crate::error::{Error, Result};
use crate::mdp::{build_named_env, heaven_hell, load_model, two_point_bandit, EnvParams, FiniteHorizonMDP, MdpDocument, Model};

/// A prior over MDPs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    /// One state, one action, deterministic reward 1 with probability `p`
    /// and 0 otherwise.
    TwoPointBandit { p: f64 },
    /// Heaven is state 1 with probability `p` and state 2 otherwise.
    HeavenHell {
        p: f64,
        #[serde(default = "yes")]
        arrival_reward: bool,
    },
    /// Independent Dirichlet rows and Beta reward means.
    Conjugate {
        n_states: usize,
        n_actions: usize,
        #[serde(default = "one")]
        dirichlet: f64,
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "one")]
        beta: f64,
    },
    FiniteSupport { atoms: Vec<MdpDocument>, weights: Vec<f64> },
    /// All mass on a named environment.
    PointMass {
        name: String,
        #[serde(default)]
        params: EnvParams,
    },
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::config("prior.p", format!("{p} outside [0, 1]")))
    }
}

impl PriorSpec {
    pub fn build(&self) -> Result<Belief> {
        let two = |a, b, p: f64| -> Result<Belief> {
            Ok(Belief::FiniteSupport(FiniteSupportBelief::new(vec![Arc::new(a), Arc::new(b)], vec![1.0 - p, p])?))
        };
        match self {
            PriorSpec::TwoPointBandit { p } => {
                check_p(*p)?;
                two(two_point_bandit(0.0)?, two_point_bandit(1.0)?, *p)
            }
            PriorSpec::HeavenHell { p, arrival_reward } => {
                check_p(*p)?;
                two(heaven_hell(2, *arrival_reward)?, heaven_hell(1, *arrival_reward)?, *p)
            }
            PriorSpec::Conjugate {
                n_states,
                n_actions,
                dirichlet,
                alpha,
                beta,
            } => Ok(Belief::Conjugate(ConjugateBelief::symmetric(*n_states, *n_actions, *dirichlet, *alpha, *beta)?)),
            PriorSpec::FiniteSupport { atoms, weights } => {
                let atoms = atoms
                    .iter()
                    .enumerate()
                    .map(|(i, doc)| {
                        if doc.horizon.is_some() || doc.initial_dist.is_some() {
                            return Err(Error::config(format!("prior.atoms[{i}]"), "atoms cannot carry a horizon"));
                        }
                        doc.clone().try_into().map(Arc::new).map_err(|e: Error| {
                            Error::config(format!("prior.atoms[{i}]"), e.to_string())
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Belief::FiniteSupport(FiniteSupportBelief::new(atoms, weights.clone())?))
            }
            PriorSpec::PointMass { name, params } => {
                let model = build_named_env(name, params)?;
                if model.horizon().is_some() {
                    return Err(Error::config("prior.params.horizon", "priors are over continuing MDPs"));
                }
                Ok(Belief::point_mass(model.mdp().clone()))
            }
        }
    }
}

/// Exactly one of `named`, `file` or `prior`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub named: Option<String>,
    #[serde(default, skip_serializing_if = "EnvParams::is_empty")]
    pub params: EnvParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Bayesian setting: the true MDP is drawn from this prior per seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSpec>,
    /// With `prior`: make the drawn MDP finite-horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<usize>,
}

impl EnvironmentSpec {
    pub fn named(name: &str, params: EnvParams) -> Self {
        EnvironmentSpec {
            named: Some(name.to_string()),
            params,
            file: None,
            prior: None,
            horizon: None,
            initial_state: None,
        }
    }

    pub fn prior(prior: PriorSpec, horizon: Option<usize>) -> Self {
        EnvironmentSpec {
            named: None,
            params: EnvParams::new(),
            file: None,
            prior: Some(prior),
            horizon,
            initial_state: None,
        }
    }
}

/// A resolved environment.
#[derive(Debug, Clone)]
pub enum Environment {
    Fixed(Model),
    Prior {
        belief: Belief,
        horizon: Option<usize>,
        initial_state: usize,
    },
}

impl Environment {
    pub fn n_states(&self) -> usize {
        match self {
            Environment::Fixed(m) => m.mdp().n_states(),
            Environment::Prior { belief, .. } => belief.n_states(),
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            Environment::Fixed(m) => m.mdp().n_actions(),
            Environment::Prior { belief, .. } => belief.n_actions(),
        }
    }

    pub fn horizon(&self) -> Option<usize> {
        match self {
            Environment::Fixed(m) => m.horizon(),
            Environment::Prior { horizon, .. } => *horizon,
        }
    }

    pub fn is_bayesian(&self) -> bool {
        matches!(self, Environment::Prior { .. })
    }

    /// The true model for one run; draws from the prior when there is one.
    pub fn instantiate<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<Model> {
        match self {
            Environment::Fixed(m) => Ok(m.clone()),
            Environment::Prior {
                belief,
                horizon,
                initial_state,
            } => {
                let m = (*belief.sample_mdp(rng)).clone();
                match horizon {
                    None => Ok(Model::Continuing(m)),
                    Some(h) => Ok(Model::Episodic(FiniteHorizonMDP::with_start_state(m, *h, *initial_state)?)),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range { base: u64, count: u64 },
}

impl SeedSpec {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedSpec::List(v) => v.clone(),
            SeedSpec::Range { base, count } => (0..*count).map(|i| base.wrapping_add(i)).collect(),
        }
    }
}

pub const DEFAULT_TRACK_EPISODES: usize = 10;

fn default_track() -> usize {
    DEFAULT_TRACK_EPISODES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: EnvironmentSpec,
    pub agent: AgentSpec,
    /// The agent's prior. Defaults to the environment prior in the Bayesian
    /// setting and to Dirichlet(1)/Beta(1, 1) otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorSpec>,
    #[serde(rename = "T")]
    pub t: usize,
    /// Defaults to state 0, or a draw from the initial distribution of a
    /// finite-horizon environment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_state: Option<usize>,
    pub seeds: SeedSpec,
    /// Episodes per seed whose decomposition is summarised.
    #[serde(default = "default_track")]
    pub track_episodes: usize,
    /// Write one CSV per seed.
    #[serde(default = "yes")]
    pub write_trajectories: bool,
    /// Directory relative file paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// Deserializes `text` as `T`, reporting the JSON path and position.
pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::config(path, format!("{inner} (line {}, column {})", inner.line(), inner.column()))
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = parse_json(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), format!("cannot read: {e}")))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::config("T", "must be at least 1"));
        }
        let seeds = self.seeds.seeds();
        if seeds.is_empty() {
            return Err(Error::config("seeds", "must not be empty"));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::config("seeds", format!("duplicate seed {dup}")));
        }
        self.agent.validate("agent")?;
        let env = &self.environment;
        let given = [env.named.is_some(), env.file.is_some(), env.prior.is_some()];
        if given.iter().filter(|x| **x).count() != 1 {
            return Err(Error::config("environment", "give exactly one of named, file, prior"));
        }
        if env.prior.is_none() && (env.horizon.is_some() || env.initial_state.is_some()) {
            return Err(Error::config(
                "environment",
                "horizon and initial_state go in params (named) or the MDP file",
            ));
        }
        if env.named.is_none() && !env.params.is_empty() {
            return Err(Error::config("environment.params", "only used with named"));
        }
        Ok(())
    }

    /// Resolves the environment description.
    pub fn environment(&self) -> Result<Environment> {
        let env = &self.environment;
        if let Some(name) = &env.named {
            return build_named_env(name, &env.params).map(Environment::Fixed).map_err(|e| match e {
                Error::Config { path, message } => Error::config(format!("environment.{path}"), message),
                Error::Argument(m) => Error::config("environment.named", m),
                other => other,
            });
        }
        if let Some(file) = &env.file {
            let path = match &self.base_dir {
                Some(dir) if file.is_relative() => dir.join(file),
                _ => file.clone(),
            };
            return load_model(&path).map(Environment::Fixed);
        }
        let prior = env.prior.as_ref().ok_or_else(|| Error::config("environment", "missing"))?;
        let belief = prior.build()?;
        let initial_state = env.initial_state.unwrap_or(0);
        if initial_state >= belief.n_states() {
            return Err(Error::config("environment.initial_state", "out of range"));
        }
        if env.horizon == Some(0) {
            return Err(Error::config("environment.horizon", "must be at least 1"));
        }
        Ok(Environment::Prior {
            belief,
            horizon: env.horizon,
            initial_state,
        })
    }

    /// The agent's prior.
    pub fn agent_prior(&self, env: &Environment) -> Result<Belief> {
        let belief = match (&self.prior, env) {
            (Some(p), _) => p.build()?,
            (None, Environment::Prior { belief, .. }) => belief.clone(),
            (None, Environment::Fixed(m)) => Belief::Conjugate(ConjugateBelief::uniform(m.mdp().n_states(), m.mdp().n_actions())?),
        };
        if belief.n_states() != env.n_states() || belief.n_actions() != env.n_actions() {
            return Err(Error::config("prior", "prior and environment disagree on (S, A)"));
        }
        Ok(belief)
    }

    /// SHA-256 of the canonical serialisation.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("configs always serialize");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE2: &str = r#"{
        "environment": {"prior": {"kind": "two_point_bandit", "p": 0.5}},
        "agent": {"agent": "lazy_psrl", "signal": {"kind": "reward_threshold", "threshold": 1, "H_max": 1000}},
        "T": 1000,
        "seeds": {"base": 0, "count": 4}
    }"#;

    #[test]
    fn parses_example() {
        let cfg = ExperimentConfig::parse(EXAMPLE2).unwrap();
        assert_eq!(cfg.seeds.seeds(), vec![0, 1, 2, 3]);
        assert!(cfg.environment().unwrap().is_bayesian());
        assert_eq!(cfg.hash(), ExperimentConfig::parse(EXAMPLE2).unwrap().hash());
    }

    #[test]
    fn path_diagnostics() {
        let bad = EXAMPLE2.replace("\"H_max\": 1000", "\"H_max\": -3");
        let err = ExperimentConfig::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("agent.signal"), "{err}");
        assert!(err.to_string().contains("line 3"), "{err}");
        let bad = EXAMPLE2.replace("\"T\": 1000", "\"T\": 0");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(Error::Config { .. })));
        let bad = EXAMPLE2.replace("\"count\": 4}", "\"count\": 4}, \"bogus\": 1");
        assert!(ExperimentConfig::parse(&bad).unwrap_err().is_usage());
        let dup = EXAMPLE2.replace("{\"base\": 0, \"count\": 4}", "[1, 2, 1]");
        assert!(ExperimentConfig::parse(&dup).unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn priors() {
        let b = PriorSpec::HeavenHell { p: 1.0, arrival_reward: true }.build().unwrap();
        let fs = b.as_finite_support().unwrap();
        assert_eq!(fs.weights(), &[0.0, 1.0]);
        assert!(PriorSpec::TwoPointBandit { p: 1.5 }.build().is_err());
        let spec: PriorSpec = serde_json::from_str(r#"{"kind":"conjugate","n_states":3,"n_actions":2}"#).unwrap();
        assert_eq!(spec.build().unwrap().n_states(), 3);
        assert!(serde_json::from_str::<PriorSpec>(r#"{"kind":"two_point_bandit","p":0.5,"q":1}"#).is_err());
    }
}
