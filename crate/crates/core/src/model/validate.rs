use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed};

use super::distribution::{Distribution, Prob};
use super::game::{Game, Icgs};

/// A single violated structural invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoStates,
    NoAgents,
    InitialOutOfRange {
        initial: usize,
    },
    ObservationArity {
        state: String,
        expected: usize,
        found: usize,
    },
    LegalShape {
        state: String,
    },
    EmptyLegal {
        state: String,
        agent: String,
    },
    UnknownAction {
        state: String,
        agent: String,
        action: usize,
    },
    UnknownProp {
        state: String,
        prop: String,
    },
    Uniformity {
        agent: String,
        state: String,
        other: String,
    },
    MissingTransition {
        state: String,
        joint: Vec<String>,
    },
    IllegalTransition {
        state: String,
        joint: Vec<String>,
    },
    DuplicateTransition {
        state: String,
        joint: Vec<String>,
    },
    NoSuccessor {
        state: String,
        joint: Vec<String>,
    },
    UnknownSuccessor {
        state: String,
        joint: Vec<String>,
        target: usize,
    },
    NonPositiveMass {
        state: String,
        joint: Vec<String>,
        target: String,
    },
    NotNormalized {
        state: String,
        joint: Vec<String>,
        total: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "model has no states"),
            Violation::NoAgents => write!(f, "model has no agents"),
            Violation::InitialOutOfRange { initial } => write!(f, "initial state index {initial} out of range"),
            Violation::ObservationArity { state, expected, found } => {
                write!(f, "state {state}: {found} observation classes given, {expected} agents declared")
            }
            Violation::LegalShape { state } => write!(f, "state {state}: legal table does not cover every agent"),
            Violation::EmptyLegal { state, agent } => write!(f, "state {state}: agent {agent} has no legal action"),
            Violation::UnknownAction { state, agent, action } => {
                write!(f, "state {state}: agent {agent} lists unknown action #{action}")
            }
            Violation::UnknownProp { state, prop } => write!(f, "state {state}: label {prop} is not a declared proposition"),
            Violation::Uniformity { agent, state, other } => write!(
                f,
                "uniformity violated for agent {agent}: {state} and {other} are indistinguishable but have different legal actions"
            ),
            Violation::MissingTransition { state, joint } => {
                write!(f, "state {state}: no transition for legal joint action ({})", joint.join(","))
            }
            Violation::IllegalTransition { state, joint } => {
                write!(f, "state {state}: transition for non-legal joint action ({})", joint.join(","))
            }
            Violation::DuplicateTransition { state, joint } => {
                write!(f, "state {state}: duplicate transition for ({})", joint.join(","))
            }
            Violation::NoSuccessor { state, joint } => {
                write!(f, "state {state}: joint action ({}) has no successor", joint.join(","))
            }
            Violation::UnknownSuccessor { state, joint, target } => {
                write!(f, "state {state}: joint action ({}) targets unknown state #{target}", joint.join(","))
            }
            Violation::NonPositiveMass { state, joint, target } => write!(
                f,
                "state {state}: joint action ({}) assigns non-positive probability to {target}",
                joint.join(",")
            ),
            Violation::NotNormalized { state, joint, total } => write!(
                f,
                "state {state}: distribution for ({}) sums to {total} ≠ 1",
                joint.join(",")
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of a stochastic game structure.
pub fn validate(model: &Icgs) -> ValidationReport {
    let mut out = Vec::new();
    check_structure(model, &mut out, |state, joint, dist: &Distribution, out| {
        check_distribution(model, state, joint, dist, out)
    });
    ValidationReport { violations: out }
}

/// Same checks for the nondeterministic projection.
pub fn validate_nondet(model: &Game<Vec<usize>>) -> ValidationReport {
    let mut out = Vec::new();
    check_structure(model, &mut out, |state, joint, succ: &Vec<usize>, out| {
        let name = &model.states[state].name;
        if succ.is_empty() {
            out.push(Violation::NoSuccessor {
                state: name.clone(),
                joint: model.joint_action_names(joint),
            });
        }
        for &t in succ {
            if t >= model.n_states() {
                out.push(Violation::UnknownSuccessor {
                    state: name.clone(),
                    joint: model.joint_action_names(joint),
                    target: t,
                });
            }
        }
    });
    ValidationReport { violations: out }
}

fn check_distribution(
    model: &Icgs,
    state: usize,
    joint: &[usize],
    dist: &Distribution,
    out: &mut Vec<Violation>,
) {
    let name = &model.states[state].name;
    let joint_names = || model.joint_action_names(joint);
    if dist.is_empty() {
        out.push(Violation::NoSuccessor {
            state: name.clone(),
            joint: joint_names(),
        });
        return;
    }
    for (t, p) in dist.iter() {
        if t >= model.n_states() {
            out.push(Violation::UnknownSuccessor {
                state: name.clone(),
                joint: joint_names(),
                target: t,
            });
        } else if !p.is_positive() {
            out.push(Violation::NonPositiveMass {
                state: name.clone(),
                joint: joint_names(),
                target: model.states[t].name.clone(),
            });
        }
    }
    let total: Prob = dist.total();
    if !total.is_one() {
        out.push(Violation::NotNormalized {
            state: name.clone(),
            joint: joint_names(),
            total: total.to_string(),
        });
    }
}

fn check_structure<T>(
    model: &Game<T>,
    out: &mut Vec<Violation>,
    mut check_outcome: impl FnMut(usize, &[usize], &T, &mut Vec<Violation>),
) {
    if model.states.is_empty() {
        out.push(Violation::NoStates);
        return;
    }
    if model.agents.is_empty() {
        out.push(Violation::NoAgents);
    }
    if model.initial >= model.n_states() {
        out.push(Violation::InitialOutOfRange {
            initial: model.initial,
        });
    }
    let props: BTreeSet<&str> = model.props.iter().map(String::as_str).collect();
    let n_agents = model.n_agents();
    let mut shape_ok =
        model.legal.len() == model.n_states() && model.moves.len() == model.n_states();
    for (s, info) in model.states.iter().enumerate() {
        if info.obs.len() != n_agents {
            out.push(Violation::ObservationArity {
                state: info.name.clone(),
                expected: n_agents,
                found: info.obs.len(),
            });
            shape_ok = false;
        }
        for l in &info.labels {
            if !props.contains(l.as_str()) {
                out.push(Violation::UnknownProp {
                    state: info.name.clone(),
                    prop: l.clone(),
                });
            }
        }
        match model.legal.get(s) {
            Some(row) if row.len() == n_agents => {
                for (a, acts) in row.iter().enumerate() {
                    if acts.is_empty() {
                        out.push(Violation::EmptyLegal {
                            state: info.name.clone(),
                            agent: model.agents[a].clone(),
                        });
                    }
                    for &act in acts {
                        if act >= model.actions.len() {
                            out.push(Violation::UnknownAction {
                                state: info.name.clone(),
                                agent: model.agents[a].clone(),
                                action: act,
                            });
                            shape_ok = false;
                        }
                    }
                }
            }
            _ => {
                out.push(Violation::LegalShape {
                    state: info.name.clone(),
                });
                shape_ok = false;
            }
        }
    }
    if !shape_ok {
        return;
    }

    // uniformity: compare each state against the first member of its class
    for a in 0..n_agents {
        for (_, members) in model.classes(a) {
            let first = members[0];
            for &other in &members[1..] {
                if sorted_set(&model.legal[first][a]) != sorted_set(&model.legal[other][a]) {
                    out.push(Violation::Uniformity {
                        agent: model.agents[a].clone(),
                        state: model.states[first].name.clone(),
                        other: model.states[other].name.clone(),
                    });
                }
            }
        }
    }

    for s in 0..model.n_states() {
        let name = &model.states[s].name;
        let legal_joints = model.legal_joint_actions(s);
        let mut seen: BTreeSet<&[usize]> = BTreeSet::new();
        for m in &model.moves[s] {
            if !seen.insert(m.joint.as_slice()) {
                out.push(Violation::DuplicateTransition {
                    state: name.clone(),
                    joint: names_or_ids(model, &m.joint),
                });
                continue;
            }
            let legal = m.joint.len() == n_agents
                && m.joint
                    .iter()
                    .enumerate()
                    .all(|(a, act)| model.legal[s][a].contains(act));
            if !legal {
                out.push(Violation::IllegalTransition {
                    state: name.clone(),
                    joint: names_or_ids(model, &m.joint),
                });
                continue;
            }
            check_outcome(s, &m.joint, &m.outcome, out);
        }
        for joint in legal_joints {
            if !seen.contains(joint.as_slice()) {
                out.push(Violation::MissingTransition {
                    state: name.clone(),
                    joint: model.joint_action_names(&joint),
                });
            }
        }
    }
}

fn sorted_set(v: &[usize]) -> BTreeSet<usize> {
    v.iter().copied().collect()
}

fn names_or_ids<T>(model: &Game<T>, joint: &[usize]) -> Vec<String> {
    joint
        .iter()
        .map(|&a| {
            model
                .actions
                .get(a)
                .cloned()
                .unwrap_or_else(|| format!("#{a}"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::game::IcgsBuilder;
    use num_rational::BigRational;

    fn r(n: i64, d: i64) -> Prob {
        BigRational::new(n.into(), d.into())
    }

    fn one_state() -> IcgsBuilder {
        let mut b = IcgsBuilder::new(&["a"], &["alpha", "beta"]);
        let s = b.state("s", &[]);
        b.legal(s, 0, &[0]);
        b
    }

    #[test]
    fn minimal_model_is_valid() {
        let mut b = one_state();
        b.trans(0, &[0], Distribution::dirac(0));
        assert!(validate(&b.build()).is_valid());
    }

    #[test]
    fn reports_half_mass() {
        let mut b = one_state();
        b.trans(0, &[0], Distribution::from_pairs([(0, r(1, 2))]));
        let report = validate(&b.build());
        assert_eq!(report.violations.len(), 1);
        assert!(report.to_string().contains("sums to 1/2 ≠ 1"), "{report}");
    }

    #[test]
    fn reports_uniformity() {
        let mut b = IcgsBuilder::new(&["a"], &["alpha", "beta"]);
        let s = b.state("s", &[]);
        let t = b.state("t", &[]);
        b.obs(t, 0, s);
        b.legal(s, 0, &[0]).legal(t, 0, &[0, 1]);
        b.trans(s, &[0], Distribution::dirac(s));
        b.trans(t, &[0], Distribution::dirac(t));
        b.trans(t, &[1], Distribution::dirac(t));
        let report = validate(&b.build());
        assert!(
            matches!(report.violations[..], [Violation::Uniformity { .. }]),
            "{report}"
        );
        assert!(report
            .to_string()
            .contains("uniformity violated for agent a"));
    }

    #[test]
    fn reports_empty_legal() {
        let mut b = IcgsBuilder::new(&["a"], &["alpha"]);
        b.state("s", &[]);
        b.legal(0, 0, &[]);
        let report = validate(&b.build());
        assert!(report.violations.contains(&Violation::EmptyLegal {
            state: "s".into(),
            agent: "a".into()
        }));
    }

    #[test]
    fn reports_missing_and_empty_successors() {
        let mut b = IcgsBuilder::new(&["a"], &["alpha", "beta"]);
        b.state("s", &[]);
        b.legal(0, 0, &[0, 1]);
        b.trans(0, &[0], Distribution::new());
        let report = validate(&b.build());
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NoSuccessor { .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::MissingTransition { .. })));
    }

    #[test]
    fn reports_illegal_transition_and_zero_mass() {
        let mut b = one_state();
        b.trans(0, &[1], Distribution::dirac(0));
        b.trans(
            0,
            &[0],
            Distribution::from_pairs([(0, r(1, 1)), (0, r(0, 1))]),
        );
        let mut m = b.build();
        m.moves[0][0].outcome.insert(0, r(1, 1));
        m.moves[0][0].outcome.insert(1, r(0, 1));
        let report = validate(&m);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::IllegalTransition { .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::UnknownSuccessor { .. })));
    }

    #[test]
    fn reports_unknown_prop_and_bad_initial() {
        let mut b = one_state();
        b.trans(0, &[0], Distribution::dirac(0));
        let mut m = b.build();
        m.states[0].labels.insert("ghost".into());
        m.initial = 4;
        let report = validate(&m);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::UnknownProp { .. })));
        assert!(report
            .violations
            .contains(&Violation::InitialOutOfRange { initial: 4 }));
    }
}
