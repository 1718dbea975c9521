use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::{BuildConfig, BuildError};
use crate::model::Prob;
use crate::trajectory::{classify, deviation, resample, Class, TelemetrySample, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StateKey {
    pub time_index: usize,
    pub class: Class,
    pub disengaged: bool,
    pub finish: bool,
}

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}_{}", self.time_index, self.class.letter())?;
        if self.disengaged {
            f.write_str("_D")?;
        }
        if self.finish {
            f.write_str("_F")?;
        }
        Ok(())
    }
}

/// A layered state, or the absorbing sink reached by a synthesized disengage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKey {
    Step(StateKey),
    Abort,
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKey::Step(k) => k.fmt(f),
            NodeKey::Abort => f.write_str("abort"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Continue,
    Disengage,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Continue => "continue",
            Action::Disengage => "disengage",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `N(s, a, s')` transition counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable<K: Ord = NodeKey>(pub BTreeMap<(K, Action, K), u64>);

impl<K: Ord> Default for CountTable<K> {
    fn default() -> Self {
        Self(BTreeMap::new())
    }
}

impl<K: Ord + Clone> CountTable<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, from: K, action: Action, to: K, n: u64) {
        *self.0.entry((from, action, to)).or_insert(0) += n;
    }

    /// Associative, commutative merge.
    pub fn merge(&mut self, other: &Self) {
        for ((s, a, t), n) in &other.0 {
            self.add(s.clone(), *a, t.clone(), *n);
        }
    }

    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }
}

/// Estimated rows: `(s, a) -> {s': N(s,a,s') / sum N(s,a,.)}`.
pub type Estimates<K = NodeKey> = BTreeMap<(K, Action), BTreeMap<K, Prob>>;

/// Frequentist estimate with exact rational arithmetic.
pub fn estimate<K: Ord + Clone + fmt::Display>(
    counts: &CountTable<K>,
) -> Result<Estimates<K>, BuildError> {
    let mut totals: BTreeMap<(K, Action), u64> = BTreeMap::new();
    for ((s, a, _), n) in &counts.0 {
        *totals.entry((s.clone(), *a)).or_insert(0) += n;
    }
    let mut out: Estimates<K> = BTreeMap::new();
    for ((s, a), total) in &totals {
        if *total == 0 {
            return Err(BuildError::NoData {
                state: s.to_string(),
                action: a.name().to_string(),
            });
        }
        out.insert((s.clone(), *a), BTreeMap::new());
    }
    for ((s, a, t), n) in &counts.0 {
        if *n == 0 {
            continue;
        }
        let total = totals[&(s.clone(), *a)];
        let p = Prob::new(BigInt::from(*n), BigInt::from(total));
        out.get_mut(&(s.clone(), *a))
            .expect("row exists")
            .insert(t.clone(), p);
    }
    Ok(out)
}

/// Running sums of the samples mapped to one state.
#[derive(Debug, Clone, Default)]
pub struct SampleSum {
    pub n: u64,
    pub v: [f64; 3],
    pub lat: f64,
    pub lon: f64,
    pub alt: f64,
    /// `(sin, cos)` sums per attitude angle.
    pub angles: [(f64, f64); 3],
}

impl SampleSum {
    fn add(&mut self, s: &TelemetrySample) {
        self.n += 1;
        for i in 0..3 {
            self.v[i] += s.v[i];
        }
        self.lat += s.lat;
        self.lon += s.lon;
        self.alt += s.alt;
        for (acc, a) in self.angles.iter_mut().zip([s.pitch, s.roll, s.yaw]) {
            acc.0 += a.sin();
            acc.1 += a.cos();
        }
    }

    /// Component-wise mean; angles by circular mean.
    pub fn mean(&self, t: f64) -> TelemetrySample {
        let n = self.n.max(1) as f64;
        let ang = |i: usize| self.angles[i].0.atan2(self.angles[i].1);
        TelemetrySample {
            t,
            v: [self.v[0] / n, self.v[1] / n, self.v[2] / n],
            lat: self.lat / n,
            lon: self.lon / n,
            alt: self.alt / n,
            pitch: ang(0),
            roll: ang(1),
            yaw: ang(2),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Counts {
    pub table: CountTable,
    pub states: BTreeSet<NodeKey>,
    pub initial: NodeKey,
    /// Index of the final layer.
    pub horizon_index: usize,
    pub samples: BTreeMap<StateKey, SampleSum>,
    pub n_trajectories: usize,
}

/// Resolved horizon in steps of `k`.
pub fn horizon_steps(
    trajs: &[Trajectory],
    reference: &Trajectory,
    cfg: &BuildConfig,
) -> Result<usize, BuildError> {
    match cfg.horizon {
        Some(h) => Ok((h / cfg.k).round() as usize),
        None => {
            let shortest = trajs
                .iter()
                .chain(std::iter::once(reference))
                .map(Trajectory::duration)
                .fold(f64::INFINITY, f64::min);
            let steps = ((shortest + 1e-9) / cfg.k).floor() as usize;
            if steps == 0 {
                return Err(BuildError::Config(format!(
                    "inputs shorter than one step of {} s",
                    cfg.k
                )));
            }
            Ok(steps)
        }
    }
}

type Path = Vec<(StateKey, TelemetrySample)>;

fn key_path(
    traj: &Trajectory,
    reference: &[TelemetrySample],
    h: usize,
    cfg: &BuildConfig,
    index: usize,
) -> Result<Path, BuildError> {
    let samples =
        resample(traj, cfg.k).map_err(|source| BuildError::Trajectory { index, source })?;
    if samples.len() <= h {
        return Err(BuildError::Short {
            index,
            steps: samples.len().saturating_sub(1),
            horizon: h,
        });
    }
    let mut out = Vec::with_capacity(h + 1);
    for (i, s) in samples.into_iter().take(h + 1).enumerate() {
        let score = deviation(&s, &reference[i], &cfg.weights)
            .map_err(|source| BuildError::Trajectory { index, source })?;
        let key = StateKey {
            time_index: i,
            class: classify(score, &cfg.thresholds),
            disengaged: traj.disengaged_at(s.t),
            finish: i == h,
        };
        out.push((key, s));
    }
    Ok(out)
}

fn key_paths(
    trajs: &[Trajectory],
    reference: &[TelemetrySample],
    h: usize,
    cfg: &BuildConfig,
) -> Vec<Result<Path, BuildError>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        trajs
            .par_iter()
            .enumerate()
            .map(|(i, t)| key_path(t, reference, h, cfg, i))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        trajs
            .iter()
            .enumerate()
            .map(|(i, t)| key_path(t, reference, h, cfg, i))
            .collect()
    }
}

/// Maps every trajectory to a state sequence and counts transitions.
pub fn build_counts(
    trajs: &[Trajectory],
    reference: &Trajectory,
    cfg: &BuildConfig,
) -> Result<Counts, BuildError> {
    cfg.validate()?;
    if trajs.is_empty() {
        return Err(BuildError::NoTrajectories);
    }
    let h = horizon_steps(trajs, reference, cfg)?;
    let reference_samples = resample(reference, cfg.k).map_err(BuildError::Reference)?;
    if reference_samples.len() <= h {
        return Err(BuildError::ReferenceShort {
            steps: reference_samples.len().saturating_sub(1),
            horizon: h,
        });
    }
    let mut table = CountTable::new();
    let mut states = BTreeSet::new();
    let mut samples: BTreeMap<StateKey, SampleSum> = BTreeMap::new();
    let mut initial: Option<StateKey> = None;
    // merged in input order so floating-point sums are reproducible
    for path in key_paths(trajs, &reference_samples, h, cfg) {
        let path = path?;
        let first = path[0].0;
        match initial {
            None => initial = Some(first),
            Some(k) if k != first => {
                return Err(BuildError::NonUniqueInitial(
                    k.to_string(),
                    first.to_string(),
                ))
            }
            Some(_) => {}
        }
        for (key, s) in &path {
            states.insert(NodeKey::Step(*key));
            samples.entry(*key).or_default().add(s);
        }
        for w in path.windows(2) {
            let (a, b) = (w[0].0, w[1].0);
            let action = if b.disengaged && !a.disengaged {
                Action::Disengage
            } else {
                Action::Continue
            };
            table.add(NodeKey::Step(a), action, NodeKey::Step(b), 1);
        }
    }
    Ok(Counts {
        table,
        states,
        initial: NodeKey::Step(initial.expect("at least one trajectory")),
        horizon_index: h,
        samples,
        n_trajectories: trajs.len(),
    })
}
