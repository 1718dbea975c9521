//! JSON document format for stochastic game structures.
//!
//! ```json
//! {
//!   "agents": ["Rocket", "Environment"],
//!   "actions": ["continue", "disengage", "nop"],
//!   "props": ["GoodState"],
//!   "states": [{"id": "t0_G", "labels": ["GoodState"], "obs_class": {"Rocket": 0, "Environment": 0}}],
//!   "legal": [{"state": "t0_G", "actions": {"Rocket": ["continue"], "Environment": ["nop"]}}],
//!   "transitions": [{"state": "t0_G", "joint_action": ["continue", "nop"], "distribution": {"t1_G": "3/4", "t1_N": "1/4"}}],
//!   "initial": "t0_G"
//! }
//! ```
//!
//! Probabilities are exact rational strings `num/den`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::distribution::{format_prob, parse_prob, Distribution};
use super::game::{Game, Icgs, Move, StateInfo};
use super::ModelError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDoc {
    pub agents: Vec<String>,
    pub actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub props: Option<Vec<String>>,
    pub states: Vec<StateDoc>,
    pub legal: Vec<LegalDoc>,
    pub transitions: Vec<TransitionDoc>,
    pub initial: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateDoc {
    pub id: String,
    #[serde(default)]
    pub labels: Vec<String>,
    /// Missing agents get an identity class (the state's position).
    #[serde(default)]
    pub obs_class: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LegalDoc {
    pub state: String,
    pub actions: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionDoc {
    pub state: String,
    pub joint_action: Vec<String>,
    pub distribution: BTreeMap<String, String>,
}

pub fn to_doc(model: &Icgs) -> ModelDoc {
    let name = |s: usize| model.states[s].name.clone();
    let states = model
        .states
        .iter()
        .map(|info| StateDoc {
            id: info.name.clone(),
            labels: info.labels.iter().cloned().collect(),
            obs_class: model
                .agents
                .iter()
                .zip(&info.obs)
                .map(|(a, c)| (a.clone(), *c))
                .collect(),
        })
        .collect();
    let legal = model
        .legal
        .iter()
        .enumerate()
        .map(|(s, row)| LegalDoc {
            state: name(s),
            actions: model
                .agents
                .iter()
                .zip(row)
                .map(|(a, acts)| {
                    (
                        a.clone(),
                        acts.iter().map(|&x| model.actions[x].clone()).collect(),
                    )
                })
                .collect(),
        })
        .collect();
    let mut transitions = Vec::new();
    for (s, row) in model.moves.iter().enumerate() {
        for m in row {
            transitions.push(TransitionDoc {
                state: name(s),
                joint_action: model.joint_action_names(&m.joint),
                distribution: m
                    .outcome
                    .iter()
                    .map(|(t, p)| (name(t), format_prob(p)))
                    .collect(),
            });
        }
    }
    ModelDoc {
        agents: model.agents.clone(),
        actions: model.actions.clone(),
        props: Some(model.props.clone()),
        states,
        legal,
        transitions,
        initial: name(model.initial),
        meta: model.meta.clone(),
    }
}

pub fn from_doc(doc: &ModelDoc) -> Result<Icgs, ModelError> {
    let fmt = |msg: String| ModelError::Format(msg);
    let agent_ix: HashMap<&str, usize> = doc
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i))
        .collect();
    let action_ix: HashMap<&str, usize> = doc
        .actions
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i))
        .collect();
    let mut state_ix: HashMap<&str, usize> = HashMap::new();
    for (i, s) in doc.states.iter().enumerate() {
        if state_ix.insert(s.id.as_str(), i).is_some() {
            return Err(fmt(format!("duplicate state id {}", s.id)));
        }
    }
    let lookup_state = |id: &str| {
        state_ix
            .get(id)
            .copied()
            .ok_or_else(|| fmt(format!("unknown state {id}")))
    };
    let lookup_action = |id: &str| {
        action_ix
            .get(id)
            .copied()
            .ok_or_else(|| fmt(format!("unknown action {id}")))
    };

    let mut states = Vec::with_capacity(doc.states.len());
    for (i, s) in doc.states.iter().enumerate() {
        let mut obs = vec![i; doc.agents.len()];
        for (agent, class) in &s.obs_class {
            let a = agent_ix
                .get(agent.as_str())
                .ok_or_else(|| fmt(format!("unknown agent {agent}")))?;
            obs[*a] = *class;
        }
        states.push(StateInfo {
            name: s.id.clone(),
            labels: s.labels.iter().cloned().collect(),
            obs,
        });
    }

    let mut legal = vec![vec![Vec::new(); doc.agents.len()]; doc.states.len()];
    for entry in &doc.legal {
        let s = lookup_state(&entry.state)?;
        for (agent, acts) in &entry.actions {
            let a = agent_ix
                .get(agent.as_str())
                .ok_or_else(|| fmt(format!("unknown agent {agent}")))?;
            let mut ids = acts
                .iter()
                .map(|x| lookup_action(x))
                .collect::<Result<Vec<_>, _>>()?;
            ids.sort_unstable();
            ids.dedup();
            legal[s][*a] = ids;
        }
    }

    let mut moves: Vec<Vec<Move<Distribution>>> = vec![Vec::new(); doc.states.len()];
    for t in &doc.transitions {
        let s = lookup_state(&t.state)?;
        let joint = t
            .joint_action
            .iter()
            .map(|x| lookup_action(x))
            .collect::<Result<Vec<_>, _>>()?;
        let mut dist = Distribution::new();
        for (target, p) in &t.distribution {
            let target = lookup_state(target)?;
            let p = parse_prob(p).ok_or_else(|| {
                fmt(format!(
                    "bad probability {p:?} in transition from {}",
                    t.state
                ))
            })?;
            dist.add(target, p);
        }
        moves[s].push(Move {
            joint,
            outcome: dist,
        });
    }
    for row in &mut moves {
        row.sort_by(|a, b| a.joint.cmp(&b.joint));
    }

    let props = match &doc.props {
        Some(p) => p.clone(),
        None => {
            let set: BTreeSet<String> = states
                .iter()
                .flat_map(|s| s.labels.iter().cloned())
                .collect();
            set.into_iter().collect()
        }
    };
    Ok(Game {
        agents: doc.agents.clone(),
        actions: doc.actions.clone(),
        props,
        states,
        legal,
        moves,
        initial: lookup_state(&doc.initial)?,
        meta: doc.meta.clone(),
    })
}

pub fn to_json(model: &Icgs) -> String {
    let mut s = serde_json::to_string_pretty(&to_doc(model)).expect("model document serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<Icgs, ModelError> {
    let doc: ModelDoc =
        serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
    from_doc(&doc)
}
