//! Probabilistic lookahead for strong branching.
//!
//! The crate is organised bottom-up:
//!
//! - [`gains`]: dual-gain observations and their ε-shifted geometric means.
//! - [`abstract_tree`]: the abstract branch-and-bound model (tree dual gaps,
//!   single-variable trees, Pandora instances with hidden gains).
//! - [`distributions`]: mixed point-mass/continuous gain distributions, MLE fits
//!   and the Kolmogorov-Smirnov test.
//! - [`lookahead`]: fixed and probabilistic stopping rules for strong branching.
//! - [`simulator`]: Monte-Carlo comparison of stopping rules on Pandora instances.
//! - [`mini_bnb`]: a small dense-simplex branch-and-bound solver that runs the
//!   probabilistic rule inside reliability branching.
//! - [`stats`]: benchmark aggregates (shifted geometric mean).

pub mod abstract_tree;
pub mod distributions;
pub mod gains;
pub mod lookahead;
pub mod mini_bnb;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use abstract_tree::{Depth, PvbInstance, TreeCost};
pub use distributions::{Family, FitReport, GainAccumulator, MixedGainDistribution, Tail};
pub use gains::{GainPair, GainSeries, GeomGain, DEFAULT_EPSILON};
pub use lookahead::{
    Decision, FixedLookaheadConfig, ProbLookaheadConfig, SbSession, StopReason,
};
pub use simulator::{CampaignSpec, CampaignTable, Strategy, TrialResult};
pub use mini_bnb::{MiniMip, SolveConfig, SolveMode, SolveResult, SolveStatus};
