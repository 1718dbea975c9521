use super::distribution::Distribution;
use super::game::{Game, Icgs, NondetCgs};
use super::strategy::StrategyProfile;
use super::validate::validate;
use super::ModelError;

/// Drops probabilities: `(s, m, s')` is a transition iff `trans(s, m)(s') > 0`.
pub fn project_nondeterministic(model: &Icgs) -> Result<NondetCgs, ModelError> {
    let report = validate(model);
    if !report.is_valid() {
        return Err(ModelError::Invalid(report));
    }
    Ok(project_unchecked(model))
}

pub(crate) fn project_unchecked(model: &Icgs) -> NondetCgs {
    model.map_outcomes(|d: &Distribution| d.support().collect())
}

/// Decision process left to the opponents once the coalition strategy is fixed.
///
/// Choices are indices into the source model's move table, so the MDP borrows
/// its rows instead of copying them.
#[derive(Debug, Clone)]
pub struct Mdp<'a> {
    model: &'a Icgs,
    strategy: StrategyProfile,
    choices: Vec<Vec<usize>>,
}

impl<'a> Mdp<'a> {
    pub fn model(&self) -> &'a Icgs {
        self.model
    }

    /// Coalition strategy that induced this MDP.
    pub fn source(&self) -> &StrategyProfile {
        &self.strategy
    }

    pub fn n_states(&self) -> usize {
        self.model.n_states()
    }

    /// Move indices available at `state`.
    pub fn choices(&self, state: usize) -> &[usize] {
        &self.choices[state]
    }

    pub fn all_choices(&self) -> &[Vec<usize>] {
        &self.choices
    }

    pub fn row(&self, state: usize, move_idx: usize) -> &'a Distribution {
        &self.model.moves[state][move_idx].outcome
    }

    /// Opponent part of the joint action behind a choice, in agent order.
    pub fn opponent_action(&self, state: usize, move_idx: usize) -> Vec<usize> {
        let joint = &self.model.moves[state][move_idx].joint;
        joint
            .iter()
            .enumerate()
            .filter(|(a, _)| self.strategy.coalition.binary_search(a).is_err())
            .map(|(_, act)| *act)
            .collect()
    }

    /// True when every state has exactly one choice.
    pub fn is_markov_chain(&self) -> bool {
        self.choices.iter().all(|c| c.len() == 1)
    }

    /// Every state has a choice and every row sums to one.
    pub fn is_well_formed(&self) -> bool {
        self.choices
            .iter()
            .enumerate()
            .all(|(s, cs)| !cs.is_empty() && cs.iter().all(|&m| self.row(s, m).is_normalized()))
    }
}

/// Fixes the coalition's actions and keeps every legal opponent completion.
pub fn induce_mdp<'a>(model: &'a Icgs, strategy: &StrategyProfile) -> Result<Mdp<'a>, ModelError> {
    let choices = induced_choices(model, strategy)?;
    Ok(Mdp {
        model,
        strategy: strategy.clone(),
        choices,
    })
}

pub(crate) fn induced_choices<T>(
    model: &Game<T>,
    strategy: &StrategyProfile,
) -> Result<Vec<Vec<usize>>, ModelError> {
    let mut prescribed = vec![0usize; strategy.coalition.len()];
    let mut out = Vec::with_capacity(model.n_states());
    for s in 0..model.n_states() {
        for (pos, &agent) in strategy.coalition.iter().enumerate() {
            let class = model.class_of(s, agent);
            let act =
                strategy
                    .action(model, pos, s)
                    .ok_or_else(|| ModelError::IllegalStrategy {
                        agent: model.agents[agent].clone(),
                        class,
                        action: None,
                    })?;
            if !model.legal[s][agent].contains(&act) {
                return Err(ModelError::IllegalStrategy {
                    agent: model.agents[agent].clone(),
                    class,
                    action: Some(
                        model
                            .actions
                            .get(act)
                            .cloned()
                            .unwrap_or_else(|| format!("#{act}")),
                    ),
                });
            }
            prescribed[pos] = act;
        }
        let row: Vec<usize> = model.moves[s]
            .iter()
            .enumerate()
            .filter(|(_, m)| {
                strategy
                    .coalition
                    .iter()
                    .zip(&prescribed)
                    .all(|(&agent, &act)| m.joint[agent] == act)
            })
            .map(|(i, _)| i)
            .collect();
        out.push(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::game::IcgsBuilder;
    use crate::model::strategy::enumerate_strategies;
    use num_rational::BigRational;

    fn r(n: i64, d: i64) -> crate::model::Prob {
        BigRational::new(n.into(), d.into())
    }

    /// Two agents with actions {alpha, beta} each over states s, good, bad.
    fn two_agent() -> Icgs {
        let mut b = IcgsBuilder::new(&["one", "two"], &["alpha", "beta"]);
        let s = b.state("s", &[]);
        let good = b.state("good", &["g"]);
        let bad = b.state("bad", &[]);
        b.legal(s, 0, &[0, 1]).legal(s, 1, &[0, 1]);
        b.trans(s, &[0, 0], Distribution::dirac(good));
        b.trans(
            s,
            &[0, 1],
            Distribution::from_pairs([(good, r(1, 3)), (bad, r(2, 3))]),
        );
        b.trans(s, &[1, 0], Distribution::dirac(bad));
        b.trans(
            s,
            &[1, 1],
            Distribution::from_pairs([(good, r(1, 2)), (bad, r(1, 2))]),
        );
        for t in [good, bad] {
            b.legal(t, 0, &[0]).legal(t, 1, &[0]);
            b.trans(t, &[0, 0], Distribution::dirac(t));
        }
        b.build()
    }

    #[test]
    fn projection_extracts_support() {
        let m = two_agent();
        let p = project_nondeterministic(&m).unwrap();
        assert_eq!(p.find_move(0, &[0, 1]).unwrap().outcome, vec![1, 2]);
        assert_eq!(p.find_move(0, &[0, 0]).unwrap().outcome, vec![1]);
        assert_eq!(p.states, m.states);
        assert_eq!(p.legal, m.legal);
    }

    #[test]
    fn projection_rejects_invalid() {
        let mut m = two_agent();
        m.moves[0][0].outcome = Distribution::from_pairs([(1, r(1, 2))]);
        assert!(matches!(
            project_nondeterministic(&m),
            Err(ModelError::Invalid(_))
        ));
    }

    #[test]
    fn coalition_fixes_first_agent() {
        let m = two_agent();
        let alpha_everywhere = enumerate_strategies(&m, &[0]).into_iter().next().unwrap();
        let mdp = induce_mdp(&m, &alpha_everywhere).unwrap();
        assert_eq!(mdp.choices(0).len(), 2);
        // hand-checked against trans(s, (alpha, .))
        assert_eq!(mdp.row(0, mdp.choices(0)[0]), &Distribution::dirac(1));
        assert_eq!(
            mdp.row(0, mdp.choices(0)[1]),
            &Distribution::from_pairs([(1, r(1, 3)), (2, r(2, 3))])
        );
        assert_eq!(mdp.opponent_action(0, mdp.choices(0)[1]), vec![1]);
        assert!(mdp.is_well_formed());
    }

    #[test]
    fn full_coalition_gives_markov_chain() {
        let m = two_agent();
        for strat in enumerate_strategies(&m, &[0, 1]) {
            let mdp = induce_mdp(&m, &strat).unwrap();
            assert!(mdp.is_markov_chain());
        }
    }

    #[test]
    fn empty_coalition_keeps_all_moves() {
        let m = two_agent();
        let mdp = induce_mdp(&m, &StrategyProfile::empty()).unwrap();
        assert_eq!(mdp.choices(0), &[0, 1, 2, 3]);
    }

    #[test]
    fn illegal_strategy_is_rejected() {
        let m = two_agent();
        let bad = StrategyProfile {
            coalition: vec![0],
            choice: vec![vec![(0, 0), (1, 1), (2, 0)]],
        };
        match induce_mdp(&m, &bad) {
            Err(ModelError::IllegalStrategy { agent, class, .. }) => {
                assert_eq!(agent, "one");
                assert_eq!(class, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
