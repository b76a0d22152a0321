//! JSON document format for MDPs.
//!
//! ```json
//! {"n_states": 2, "n_actions": 1,
//!  "transitions": [[[0.0, 1.0]], [[1.0, 0.0]]],
//!  "rewards": [[{"kind": "point", "value": 0.0}], [{"kind": "bernoulli", "value": 0.5}]],
//!  "horizon": 4, "initial_dist": [1.0, 0.0]}
//! ```
//!
//! `horizon` and `initial_dist` are optional; when `horizon` is present the
//! document describes a finite-horizon MDP (with `initial_dist` defaulting to
//! a point mass on state 0).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FiniteHorizonMDP, Model, RewardModel, TabularMDP};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    Bernoulli,
    Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardDocument {
    pub kind: RewardKind,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpDocument {
    pub n_states: usize,
    pub n_actions: usize,
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub rewards: Vec<Vec<RewardDocument>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_dist: Option<Vec<f64>>,
}

impl From<RewardModel> for RewardDocument {
    fn from(r: RewardModel) -> Self {
        match r {
            RewardModel::Bernoulli(p) => RewardDocument {
                kind: RewardKind::Bernoulli,
                value: p,
            },
            RewardModel::PointMass(v) => RewardDocument {
                kind: RewardKind::Point,
                value: v,
            },
        }
    }
}

impl From<TabularMDP> for MdpDocument {
    fn from(m: TabularMDP) -> Self {
        MdpDocument::from(&m)
    }
}

impl From<&TabularMDP> for MdpDocument {
    fn from(m: &TabularMDP) -> Self {
        let (s_n, a_n) = (m.n_states(), m.n_actions());
        MdpDocument {
            n_states: s_n,
            n_actions: a_n,
            transitions: (0..s_n)
                .map(|s| (0..a_n).map(|a| m.row(s, a).to_vec()).collect())
                .collect(),
            rewards: (0..s_n)
                .map(|s| (0..a_n).map(|a| m.reward(s, a).into()).collect())
                .collect(),
            horizon: None,
            initial_dist: None,
        }
    }
}

impl From<&FiniteHorizonMDP> for MdpDocument {
    fn from(fh: &FiniteHorizonMDP) -> Self {
        let mut doc = MdpDocument::from(fh.base());
        doc.horizon = Some(fh.horizon());
        doc.initial_dist = Some(fh.initial_dist().to_vec());
        doc
    }
}

impl TryFrom<MdpDocument> for TabularMDP {
    type Error = Error;

    fn try_from(doc: MdpDocument) -> Result<Self> {
        doc.base()
    }
}

impl MdpDocument {
    fn base(&self) -> Result<TabularMDP> {
        if self.transitions.len() != self.n_states {
            return Err(Error::invalid_mdp(
                "transitions",
                format!("n_states is {} but {} rows given", self.n_states, self.transitions.len()),
            ));
        }
        if self.rewards.len() != self.n_states {
            return Err(Error::invalid_mdp(
                "rewards",
                format!("n_states is {} but {} rows given", self.n_states, self.rewards.len()),
            ));
        }
        let mut rewards = Vec::with_capacity(self.n_states);
        for (s, row) in self.rewards.iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            for (a, r) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&r.value) {
                    return Err(Error::invalid_mdp(
                        format!("rewards[{s}][{a}].value"),
                        format!("{} outside [0, 1]", r.value),
                    ));
                }
                out.push(match r.kind {
                    RewardKind::Bernoulli => RewardModel::Bernoulli(r.value),
                    RewardKind::Point => RewardModel::PointMass(r.value),
                });
            }
            rewards.push(out);
        }
        for (s, rows) in self.transitions.iter().enumerate() {
            if rows.len() != self.n_actions {
                return Err(Error::invalid_mdp(
                    format!("transitions[{s}]"),
                    format!("n_actions is {} but {} rows given", self.n_actions, rows.len()),
                ));
            }
        }
        TabularMDP::new(self.transitions.clone(), rewards)
    }

    /// Validates the document and builds the model it describes.
    pub fn into_model(self) -> Result<Model> {
        let base = self.base()?;
        match (self.horizon, self.initial_dist) {
            (None, None) => Ok(Model::Continuing(base)),
            (None, Some(_)) => Err(Error::invalid_mdp(
                "initial_dist",
                "given without a horizon",
            )),
            (Some(h), rho) => {
                let rho = rho.unwrap_or_else(|| {
                    let mut v = vec![0.0; base.n_states()];
                    v[0] = 1.0;
                    v
                });
                Ok(Model::Episodic(FiniteHorizonMDP::new(base, h, rho)?))
            }
        }
    }
}

/// Parses and validates an MDP document. Syntax errors report the JSON path
/// together with line and column.
pub fn parse_model(text: &str) -> Result<Model> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: MdpDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::invalid_mdp(
            path,
            format!("{inner} (line {}, column {})", inner.line(), inner.column()),
        )
    })?;
    doc.into_model()
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text)
}

pub fn model_to_json(model: &Model) -> String {
    let doc = match model {
        Model::Continuing(m) => MdpDocument::from(m),
        Model::Episodic(fh) => MdpDocument::from(fh),
    };
    serde_json::to_string_pretty(&doc).expect("MDP documents always serialize")
}
