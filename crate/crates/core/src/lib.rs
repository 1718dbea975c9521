//! Probabilistic alternating-time temporal logic over stochastic multi-agent
//! models, plus the pipeline that turns flight telemetry into such models.
//!
//! * [`model`]: game structures, strategies, induced MDPs, JSON format.
//! * [`formula`]: PATL/ATL syntax, parser and normalizer.
//! * [`atl`]: qualitative ATL on the nondeterministic projection.
//! * [`patl`]: quantitative checking via extremal path probabilities.
//! * [`trajectory`]: telemetry ingestion, resampling, deviation scoring.
//! * [`builder`]: frequentist model construction and DOT export.
//! * [`simgen`]: synthetic ballistic flight ensembles.

pub mod atl;
pub mod builder;
pub mod clock;
pub mod formula;
pub mod model;
pub mod patl;
pub mod semantics;
pub mod simgen;
pub mod trajectory;
