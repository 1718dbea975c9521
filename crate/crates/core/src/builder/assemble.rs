use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::counts::{Action, Counts, Estimates, NodeKey};
use super::{BuildConfig, Variant};
use crate::model::{Distribution, Game, Icgs, Move, Prob, StateInfo};
use crate::trajectory::{quantize, Class, Signature};

pub const ROCKET: &str = "Rocket";
pub const ENVIRONMENT: &str = "Environment";

const CONTINUE: usize = 0;
const DISENGAGE: usize = 1;

/// A uniformity fix applied to one observation class of the Rocket.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Repair {
    pub states: Vec<String>,
    pub kind: RepairKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairKind {
    /// Legal sets intersected; these `(state, action)` pairs were dropped.
    Intersected { dropped: Vec<(String, String)> },
    /// Empty intersection: the class was split by legal set.
    Split { parts: usize },
}

impl fmt::Display for Repair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RepairKind::Intersected { dropped } => {
                let d: Vec<String> = dropped.iter().map(|(s, a)| format!("{a}@{s}")).collect();
                write!(
                    f,
                    "class {{{}}}: intersected legal actions, dropped {}",
                    self.states.join(","),
                    d.join(",")
                )
            }
            RepairKind::Split { parts } => {
                write!(
                    f,
                    "class {{{}}}: no common action, split into {parts}",
                    self.states.join(",")
                )
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Assembled {
    pub model: Icgs,
    pub repairs: Vec<Repair>,
    /// Quantized observation per state (variant C only).
    pub signatures: Vec<Option<Signature>>,
}

fn labels_of(node: &NodeKey) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    match node {
        NodeKey::Step(k) => {
            match k.class {
                Class::Good => out.insert("GoodState".to_string()),
                Class::Bad => out.insert("BadState".to_string()),
                Class::Neutral => false,
            };
            if k.disengaged {
                out.insert("Disengaged".to_string());
            }
            if k.finish {
                out.insert("Finish".to_string());
            }
        }
        NodeKey::Abort => {
            out.insert("Disengaged".to_string());
        }
    }
    out
}

fn is_terminal(node: &NodeKey) -> bool {
    match node {
        NodeKey::Step(k) => k.finish,
        NodeKey::Abort => true,
    }
}

/// Builds the A/B/C structure from estimated rows.
pub fn assemble(counts: &Counts, est: &Estimates, cfg: &BuildConfig) -> Assembled {
    let mut nodes: BTreeSet<NodeKey> = counts.states.clone();
    let mut rows: BTreeMap<NodeKey, Vec<(Action, BTreeMap<NodeKey, Prob>)>> = BTreeMap::new();
    for ((s, a), row) in est {
        rows.entry(*s).or_default().push((*a, row.clone()));
    }
    if cfg.always_allow_disengage {
        for node in counts.states.iter() {
            let NodeKey::Step(k) = node else { continue };
            if k.finish || k.disengaged {
                continue;
            }
            let r = rows.entry(*node).or_default();
            if !r.iter().any(|(a, _)| *a == Action::Disengage) {
                r.push((
                    Action::Disengage,
                    BTreeMap::from([(NodeKey::Abort, Prob::from_integer(1.into()))]),
                ));
                r.sort_by_key(|(a, _)| *a);
                nodes.insert(NodeKey::Abort);
            }
        }
    }
    let nodes: Vec<NodeKey> = nodes.into_iter().collect();
    let index: BTreeMap<NodeKey, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let n = nodes.len();

    // rocket rows per state in action order; terminals self-loop
    let mut rocket: Vec<Vec<(usize, Distribution)>> = Vec::with_capacity(n);
    for (i, node) in nodes.iter().enumerate() {
        match rows.get(node) {
            Some(r) if !is_terminal(node) => rocket.push(
                r.iter()
                    .map(|(a, dist)| {
                        let act = match a {
                            Action::Continue => CONTINUE,
                            Action::Disengage => DISENGAGE,
                        };
                        (
                            act,
                            Distribution::from_pairs(
                                dist.iter().map(|(t, p)| (index[t], p.clone())),
                            ),
                        )
                    })
                    .collect(),
            ),
            _ => rocket.push(vec![(CONTINUE, Distribution::dirac(i))]),
        }
    }

    let mut repairs = Vec::new();
    let mut signatures = vec![None; n];
    let mut rocket_obs: Vec<usize> = (0..n).collect();
    if cfg.variant == Variant::C {
        let mut groups: BTreeMap<(usize, Option<Signature>, bool, bool), Vec<usize>> =
            BTreeMap::new();
        for (i, node) in nodes.iter().enumerate() {
            let key = match node {
                NodeKey::Step(k) => {
                    let sig = quantize(
                        &counts.samples[k].mean(k.time_index as f64 * cfg.k),
                        &cfg.quantization,
                    );
                    signatures[i] = Some(sig);
                    (k.time_index, Some(sig), k.disengaged, k.finish)
                }
                NodeKey::Abort => (usize::MAX, None, true, false),
            };
            groups.entry(key).or_default().push(i);
        }
        for members in groups.into_values() {
            for (class, part) in repair_class(&members, &nodes, &mut rocket, &mut repairs) {
                for s in part {
                    rocket_obs[s] = class;
                }
            }
        }
    }

    let width = match cfg.variant {
        Variant::A => rocket
            .iter()
            .flat_map(|r| r.iter().map(|(_, d)| d.len()))
            .max()
            .unwrap_or(1)
            .max(1),
        _ => 1,
    };
    let mut actions = vec!["continue".to_string(), "disengage".to_string()];
    match cfg.variant {
        Variant::A => actions.extend((0..width).map(|j| format!("b{j}"))),
        _ => actions.push("nop".to_string()),
    }

    let mut states = Vec::with_capacity(n);
    let mut legal = Vec::with_capacity(n);
    let mut moves = Vec::with_capacity(n);
    for (i, node) in nodes.iter().enumerate() {
        states.push(StateInfo {
            name: node.to_string(),
            labels: labels_of(node),
            obs: vec![rocket_obs[i], i],
        });
        let rocket_legal: Vec<usize> = rocket[i].iter().map(|(a, _)| *a).collect();
        let mut row = Vec::new();
        let env_legal: Vec<usize> = match cfg.variant {
            Variant::A => {
                let m = rocket[i]
                    .iter()
                    .map(|(_, d)| d.len())
                    .max()
                    .unwrap_or(1)
                    .max(1);
                for (a, dist) in &rocket[i] {
                    let succ: Vec<usize> = dist.support().collect();
                    for j in 0..m {
                        let t = succ[j.min(succ.len() - 1)];
                        row.push(Move {
                            joint: vec![*a, 2 + j],
                            outcome: Distribution::dirac(t),
                        });
                    }
                }
                (2..2 + m).collect()
            }
            _ => {
                for (a, dist) in &rocket[i] {
                    row.push(Move {
                        joint: vec![*a, 2],
                        outcome: dist.clone(),
                    });
                }
                vec![2]
            }
        };
        legal.push(vec![rocket_legal, env_legal]);
        moves.push(row);
    }

    let mut meta = BTreeMap::new();
    meta.insert("variant".to_string(), json!(cfg.variant.to_string()));
    meta.insert("k".to_string(), json!(cfg.k));
    meta.insert("horizon_steps".to_string(), json!(counts.horizon_index));
    meta.insert("trajectories".to_string(), json!(counts.n_trajectories));
    meta.insert(
        "legality".to_string(),
        json!(if cfg.always_allow_disengage {
            "always-allow-disengage"
        } else {
            "data-driven"
        }),
    );
    if cfg.variant == Variant::C {
        meta.insert("uniformity_repairs".to_string(), json!(repairs.len()));
    }
    let model = Game {
        agents: vec![ROCKET.to_string(), ENVIRONMENT.to_string()],
        actions,
        props: ["BadState", "Disengaged", "Finish", "GoodState"]
            .map(String::from)
            .to_vec(),
        states,
        legal,
        moves,
        initial: index[&counts.initial],
        meta,
    };
    Assembled {
        model,
        repairs,
        signatures,
    }
}

/// Enforces a common Rocket action set on one observation class. Returns
/// `(class id, members)` parts; the id is the smallest member index.
fn repair_class(
    members: &[usize],
    nodes: &[NodeKey],
    rocket: &mut [Vec<(usize, Distribution)>],
    repairs: &mut Vec<Repair>,
) -> Vec<(usize, Vec<usize>)> {
    let legal_of =
        |r: &Vec<(usize, Distribution)>| -> BTreeSet<usize> { r.iter().map(|(a, _)| *a).collect() };
    let mut common = legal_of(&rocket[members[0]]);
    for &s in &members[1..] {
        common = common
            .intersection(&legal_of(&rocket[s]))
            .copied()
            .collect();
    }
    let names = || {
        members
            .iter()
            .map(|&s| nodes[s].to_string())
            .collect::<Vec<_>>()
    };
    if !common.is_empty() {
        let mut dropped = Vec::new();
        for &s in members {
            for (a, _) in rocket[s].iter().filter(|(a, _)| !common.contains(a)) {
                dropped.push((
                    nodes[s].to_string(),
                    if *a == CONTINUE {
                        "continue"
                    } else {
                        "disengage"
                    }
                    .to_string(),
                ));
            }
            rocket[s].retain(|(a, _)| common.contains(a));
        }
        if !dropped.is_empty() {
            repairs.push(Repair {
                states: names(),
                kind: RepairKind::Intersected { dropped },
            });
        }
        return vec![(members[0], members.to_vec())];
    }
    let mut parts: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for &s in members {
        parts
            .entry(legal_of(&rocket[s]).into_iter().collect())
            .or_default()
            .push(s);
    }
    repairs.push(Repair {
        states: names(),
        kind: RepairKind::Split { parts: parts.len() },
    });
    let mut out: Vec<(usize, Vec<usize>)> = parts.into_values().map(|p| (p[0], p)).collect();
    out.sort();
    out
}
