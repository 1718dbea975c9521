//! Random models and a brute-force exact oracle, independent of the checker.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{One, Zero};
use patlcheck::formula::{PathFormula, ProbabilityBound, Relation, StateFormula};
use patlcheck::model::{Distribution, Icgs, IcgsBuilder, Prob, StrategyProfile};
use rand::Rng;

pub const AGENTS: [&str; 2] = ["a", "b"];

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_states: usize,
    pub agents: usize,
    /// Every agent observes the full state.
    pub identity: bool,
    /// Edges only go to higher indices; the last reachable layer self-loops.
    pub acyclic: bool,
    /// Every action legal everywhere, so observation classes can be merged.
    pub full_legal: bool,
}

fn rat(n: i64, d: i64) -> Prob {
    Prob::new(BigInt::from(n), BigInt::from(d))
}

fn random_dist<R: Rng>(rng: &mut R, targets: &[usize]) -> Distribution {
    let k = rng.random_range(1..=targets.len().min(3));
    let mut picked: Vec<usize> = Vec::new();
    while picked.len() < k {
        let t = targets[rng.random_range(0..targets.len())];
        if !picked.contains(&t) {
            picked.push(t);
        }
    }
    let weights: Vec<i64> = picked.iter().map(|_| rng.random_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    Distribution::from_pairs(
        picked
            .into_iter()
            .zip(weights)
            .map(|(t, w)| (t, rat(w, total))),
    )
}

pub fn random_icgs<R: Rng>(rng: &mut R, shape: Shape) -> Icgs {
    let n = rng.random_range(1..=shape.max_states);
    let agents = &AGENTS[..shape.agents];
    let mut b = IcgsBuilder::new(agents, &["x", "y"]);
    for s in 0..n {
        let mut labels = Vec::new();
        if rng.random_bool(0.5) {
            labels.push("p");
        }
        if rng.random_bool(0.4) {
            labels.push("q");
        }
        b.state(&format!("s{s}"), &labels);
    }
    let mut legal = vec![vec![Vec::new(); agents.len()]; n];
    for a in 0..agents.len() {
        let classes = if shape.identity {
            n
        } else {
            rng.random_range(1..=n)
        };
        let class_of: Vec<usize> = (0..n)
            .map(|s| {
                if shape.identity {
                    s
                } else {
                    rng.random_range(0..classes)
                }
            })
            .collect();
        let class_legal: Vec<Vec<usize>> = (0..classes)
            .map(|_| {
                if shape.full_legal {
                    vec![0, 1]
                } else {
                    [vec![0], vec![1], vec![0, 1]][rng.random_range(0..3)].clone()
                }
            })
            .collect();
        for s in 0..n {
            b.obs(s, a, class_of[s]);
            b.legal(s, a, &class_legal[class_of[s]]);
            legal[s][a] = class_legal[class_of[s]].clone();
        }
    }
    for (s, legal_s) in legal.iter().enumerate() {
        let targets: Vec<usize> = if shape.acyclic {
            if s + 1 == n || rng.random_bool(0.15) {
                vec![s]
            } else {
                (s + 1..n).collect()
            }
        } else {
            (0..n).collect()
        };
        let self_loop_only = targets == [s];
        for joint in patlcheck::model::cartesian(legal_s) {
            let d = if self_loop_only {
                Distribution::dirac(s)
            } else {
                random_dist(rng, &targets)
            };
            b.trans(s, &joint, d);
        }
    }
    b.initial(rng.random_range(0..n));
    let mut model = b.build();
    model.props = vec!["p".into(), "q".into()];
    model
}

#[derive(Debug, Clone, PartialEq)]
pub enum Obj {
    Next(Vec<bool>),
    Until(Vec<bool>, Vec<bool>),
    Release(Vec<bool>, Vec<bool>),
}

pub fn label_set(model: &Icgs, f: &StateFormula) -> Vec<bool> {
    (0..model.n_states())
        .map(|s| match f {
            StateFormula::True => true,
            StateFormula::False => false,
            StateFormula::Atom(p) => model.has_label(s, p),
            StateFormula::Not(g) => match g.as_ref() {
                StateFormula::Atom(p) => !model.has_label(s, p),
                _ => panic!("oracle handles literals only"),
            },
            _ => panic!("oracle handles literals only"),
        })
        .collect()
}

pub fn objective(model: &Icgs, path: &PathFormula) -> Obj {
    match path {
        PathFormula::Next(a) => Obj::Next(label_set(model, a)),
        PathFormula::Until(a, b) => Obj::Until(label_set(model, a), label_set(model, b)),
        PathFormula::Release(a, b) => Obj::Release(label_set(model, a), label_set(model, b)),
        PathFormula::Finally(b) => Obj::Until(vec![true; model.n_states()], label_set(model, b)),
        PathFormula::Globally(b) => {
            Obj::Release(vec![false; model.n_states()], label_set(model, b))
        }
    }
}

/// Solves `A x = b` exactly; `None` when singular.
pub fn solve_exact(mut a: Vec<Vec<Prob>>, mut b: Vec<Prob>) -> Option<Vec<Prob>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = Prob::one() / a[col][col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() * inv.clone();
            for c in col..n {
                let delta = f.clone() * a[col][c].clone();
                a[r][c] -= delta;
            }
            let delta = f * b[col].clone();
            b[r] -= delta;
        }
    }
    Some((0..n).map(|i| b[i].clone() / a[i][i].clone()).collect())
}

/// Probability of reaching `goal` through `stay` states in a Markov chain.
fn reach(rows: &[&Distribution], stay: &[bool], goal: &[bool]) -> Vec<Prob> {
    let n = rows.len();
    // backward reachability restricted to `stay`
    let mut can = goal.to_vec();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !can[s] && stay[s] && rows[s].support().any(|t| can[t]) {
                can[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let unknown: Vec<usize> = (0..n).filter(|&s| can[s] && !goal[s]).collect();
    let pos: Vec<Option<usize>> = (0..n)
        .map(|s| unknown.iter().position(|&u| u == s))
        .collect();
    let m = unknown.len();
    let mut a = vec![vec![Prob::zero(); m]; m];
    let mut b = vec![Prob::zero(); m];
    for (i, &s) in unknown.iter().enumerate() {
        a[i][i] += Prob::one();
        for (t, p) in rows[s].iter() {
            if goal[t] {
                b[i] += p.clone();
            } else if let Some(j) = pos[t] {
                a[i][j] -= p.clone();
            }
        }
    }
    let x = solve_exact(a, b).expect("reachability system is non-singular");
    (0..n)
        .map(|s| {
            if goal[s] {
                Prob::one()
            } else if let Some(i) = pos[s] {
                x[i].clone()
            } else {
                Prob::zero()
            }
        })
        .collect()
}

/// Exact event probability from every state of the chain picking `moves[s]`.
pub fn chain_value(model: &Icgs, moves: &[usize], obj: &Obj) -> Vec<Prob> {
    let rows: Vec<&Distribution> = moves
        .iter()
        .enumerate()
        .map(|(s, &m)| &model.moves[s][m].outcome)
        .collect();
    match obj {
        Obj::Next(t) => rows
            .iter()
            .map(|r| {
                r.iter()
                    .filter(|(s, _)| t[*s])
                    .fold(Prob::zero(), |acc, (_, p)| acc + p.clone())
            })
            .collect(),
        Obj::Until(a, b) => reach(&rows, a, b),
        Obj::Release(a, b) => {
            // fails exactly when a !b state is reached through b & !a states
            let stay: Vec<bool> = (0..a.len()).map(|s| b[s] && !a[s]).collect();
            let bad: Vec<bool> = b.iter().map(|x| !x).collect();
            reach(&rows, &stay, &bad)
                .into_iter()
                .map(|p| Prob::one() - p)
                .collect()
        }
    }
}

/// Coalition strategy: action per (coalition position, class).
pub type Sigma = Vec<Vec<(usize, usize)>>;

pub fn coalition_strategies(model: &Icgs, coalition: &[usize]) -> Vec<Sigma> {
    let mut slots: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    for (pos, &a) in coalition.iter().enumerate() {
        let mut seen = std::collections::BTreeMap::new();
        for s in 0..model.n_states() {
            seen.entry(model.states[s].obs[a])
                .or_insert_with(|| model.legal[s][a].clone());
        }
        for (class, acts) in seen {
            slots.push((pos, class, acts));
        }
    }
    let mut out: Vec<Sigma> = vec![vec![Vec::new(); coalition.len()]];
    for (pos, class, acts) in &slots {
        let mut next = Vec::new();
        for sigma in &out {
            for &act in acts {
                let mut s2 = sigma.clone();
                s2[*pos].push((*class, act));
                next.push(s2);
            }
        }
        out = next;
    }
    out
}

pub fn sigma_of_profile(p: &StrategyProfile) -> Sigma {
    p.choice.clone()
}

fn sigma_action(sigma: &Sigma, pos: usize, class: usize) -> usize {
    sigma[pos]
        .iter()
        .find(|(c, _)| *c == class)
        .expect("class covered")
        .1
}

/// Extremal value per state of a fixed coalition strategy: minimum over
/// deterministic memoryless opponents when `minimize`, maximum otherwise.
pub fn strategy_value(
    model: &Icgs,
    coalition: &[usize],
    sigma: &Sigma,
    obj: &Obj,
    minimize: bool,
) -> Vec<Prob> {
    let n = model.n_states();
    let options: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            (0..model.moves[s].len())
                .filter(|&m| {
                    coalition.iter().enumerate().all(|(pos, &a)| {
                        model.moves[s][m].joint[a]
                            == sigma_action(sigma, pos, model.states[s].obs[a])
                    })
                })
                .collect()
        })
        .collect();
    let mut best: Option<Vec<Prob>> = None;
    let mut pick = vec![0usize; n];
    loop {
        let moves: Vec<usize> = (0..n).map(|s| options[s][pick[s]]).collect();
        let v = chain_value(model, &moves, obj);
        best = Some(match best {
            None => v,
            Some(b) => b
                .into_iter()
                .zip(v)
                .map(|(x, y)| if (y < x) == minimize { y } else { x })
                .collect(),
        });
        let mut i = 0;
        loop {
            if i == n {
                return best.expect("at least one opponent choice");
            }
            pick[i] += 1;
            if pick[i] < options[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

pub fn holds(rel: Relation, v: &Prob, d: &Prob) -> bool {
    match rel {
        Relation::Ge => v >= d,
        Relation::Gt => v > d,
        Relation::Le => v <= d,
        Relation::Lt => v < d,
    }
}

pub fn check_set(model: &Icgs, coalition: &[usize], init: usize, subjective: bool) -> Vec<usize> {
    if !subjective {
        return vec![init];
    }
    (0..model.n_states())
        .filter(|&s| {
            s == init
                || coalition
                    .iter()
                    .any(|&a| model.states[s].obs[a] == model.states[init].obs[a])
        })
        .collect()
}

#[derive(Debug)]
pub struct OracleAnswer {
    pub truth: bool,
    /// Per coalition strategy: worst value over the check set.
    pub values: Vec<(Sigma, Prob)>,
}

/// Brute force over deterministic memoryless uniform coalition strategies.
pub fn oracle(
    model: &Icgs,
    coalition: &[usize],
    bound: &ProbabilityBound,
    obj: &Obj,
    subjective: bool,
) -> OracleAnswer {
    let lower = bound.relation.is_lower_bound();
    let set = check_set(model, coalition, model.initial, subjective);
    let mut values = Vec::new();
    let mut truth = false;
    for sigma in coalition_strategies(model, coalition) {
        let v = strategy_value(model, coalition, &sigma, obj, lower);
        let worst = set
            .iter()
            .map(|&s| v[s].clone())
            .reduce(|a, b| if (b < a) == lower { b } else { a })
            .expect("non-empty check set");
        truth |= set
            .iter()
            .all(|&s| holds(bound.relation, &v[s], &bound.threshold));
        values.push((sigma, worst));
    }
    OracleAnswer { truth, values }
}

pub fn prob_formula(
    coalition: &[usize],
    rel: Relation,
    d: Prob,
    path: PathFormula,
) -> StateFormula {
    StateFormula::StrategicProb {
        coalition: coalition.iter().map(|&a| AGENTS[a].to_string()).collect(),
        bound: ProbabilityBound {
            relation: rel,
            threshold: d,
        },
        path: Box::new(path),
    }
}

pub fn plain_formula(coalition: &[usize], path: PathFormula) -> StateFormula {
    StateFormula::StrategicPlain {
        coalition: coalition.iter().map(|&a| AGENTS[a].to_string()).collect(),
        path: Box::new(path),
    }
}

fn literal<R: Rng>(rng: &mut R) -> StateFormula {
    match rng.random_range(0..5) {
        0 => StateFormula::atom("p"),
        1 => StateFormula::atom("q"),
        2 => StateFormula::not(StateFormula::atom("p")),
        3 => StateFormula::not(StateFormula::atom("q")),
        _ => StateFormula::True,
    }
}

/// Random path formula of the given kind over literals: 0 = X, 1 = U, 2 = R.
pub fn random_path<R: Rng>(rng: &mut R, kind: usize) -> PathFormula {
    let (a, b) = (literal(rng), literal(rng));
    match kind {
        0 => PathFormula::Next(Box::new(a)),
        1 => PathFormula::Until(Box::new(a), Box::new(b)),
        _ => PathFormula::Release(Box::new(a), Box::new(b)),
    }
}

pub fn random_coalition<R: Rng>(rng: &mut R, agents: usize) -> Vec<usize> {
    (0..agents).filter(|_| rng.random_bool(0.5)).collect()
}

pub fn quarter(i: i64) -> Prob {
    rat(i, 4)
}
