//! Monte-Carlo comparison of strong-branching stopping rules on Pandora instances.
//!
//! Each trial reveals the pool in a fresh uniform random order. A strategy decides after
//! every reveal whether to stop and build the single-variable tree of the best gain seen.
//! The cost of a trial is that tree plus two nodes per reveal.

use std::fmt;
use std::io;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::abstract_tree::{Depth, PvbInstance, TreeCost, TreeError};
use crate::distributions::{Family, Tail};
use crate::gains::GeomGain;
use crate::lookahead::{
    expected_nodes_if_continue, nodes_if_stop, should_continue, Decision, FixedLookaheadConfig,
    LookaheadError, ProbLookaheadConfig, SbSession, StopReason,
};
use crate::rng::trial_rng;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("the gain pool is empty")]
    EmptyPool,
    #[error("every gain in the pool is zero; no tree can close the gap")]
    Unclosable,
    #[error("invalid campaign: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Lookahead(#[from] LookaheadError),
    #[error("cannot build worker pool: {0}")]
    Workers(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A stopping rule for the Pandora simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Stop after `L` consecutive reveals without a new best gain.
    Fixed(FixedLookaheadConfig),
    /// Stop as soon as one more reveal is not expected to use fewer nodes.
    Probabilistic(ProbLookaheadConfig),
    /// Reveal the whole pool.
    Full,
}

impl Strategy {
    pub fn name(&self) -> String {
        match self {
            Strategy::Fixed(_) => "fixed".into(),
            Strategy::Full => "full".into(),
            Strategy::Probabilistic(p) if !p.mixed => "prob-exp".into(),
            Strategy::Probabilistic(p) => {
                let short = match p.family {
                    Family::Exponential => "exp",
                    other => other.name(),
                };
                format!("prob-mixed-{short}")
            }
        }
    }

    /// The default strategy list: fixed, the three fitted rules, and full.
    pub fn defaults() -> Vec<Strategy> {
        ["fixed", "prob-exp", "prob-mixed-exp", "prob-mixed-pareto", "full"]
            .iter()
            .map(|s| s.parse().expect("built-in strategy name"))
            .collect()
    }

    fn decide(&self, session: &SbSession, remaining: usize) -> Decision {
        match self {
            Strategy::Full if remaining == 0 => Decision::Stop(StopReason::CandidatesExhausted),
            Strategy::Full => Decision::Continue,
            Strategy::Fixed(config) => should_continue(session, config, None, None),
            Strategy::Probabilistic(config) => probabilistic_decision(session, config, remaining),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let prob = |family, mixed| {
            Strategy::Probabilistic(ProbLookaheadConfig {
                family,
                mixed,
                ..ProbLookaheadConfig::default()
            })
        };
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" => Ok(Strategy::Fixed(FixedLookaheadConfig::default())),
            "full" => Ok(Strategy::Full),
            "prob-exp" => Ok(prob(Family::Exponential, false)),
            other => match other.strip_prefix("prob-mixed-") {
                Some(family) => {
                    let family: Family = family.parse()?;
                    if family.is_control() {
                        return Err(format!("`{family}` cannot drive the stopping rule"));
                    }
                    Ok(prob(family, true))
                }
                None => Err(format!("unknown strategy `{other}`")),
            },
        }
    }
}

/// The expected-size test on its own, run after every reveal.
///
/// There is no lookahead cap here: in the abstract model the rule replaces the fixed
/// lookahead rather than refining it.
fn probabilistic_decision(
    session: &SbSession,
    config: &ProbLookaheadConfig,
    remaining: usize,
) -> Decision {
    if remaining == 0 {
        return Decision::Stop(StopReason::CandidatesExhausted);
    }
    match session.d_min() {
        Depth::Unbounded => return Decision::Continue,
        // one more reveal costs two nodes and cannot shrink a depth-1 tree
        Depth::Finite(d) if d <= 1 => return Decision::Stop(StopReason::NoExpectedImprovement),
        Depth::Finite(_) => {}
    }
    if session.samples().nonzero_count() < config.min_nonzero_samples {
        return Decision::Continue;
    }
    let Ok(dist) = config.fit(session.samples()) else {
        return Decision::Continue;
    };
    match (nodes_if_stop(session), expected_nodes_if_continue(session, &dist)) {
        (Ok(stop), Ok(cont)) if cont >= stop.total as f64 => {
            Decision::Stop(StopReason::NoExpectedImprovement)
        }
        _ => Decision::Continue,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialResult {
    pub strategy: String,
    pub total_nodes: u64,
    pub sb_nodes: u64,
    pub reveals: u64,
    pub stop_reason: StopReason,
}

fn check_pool(pool: &[GeomGain]) -> Result<(), SimError> {
    if pool.is_empty() {
        return Err(SimError::EmptyPool);
    }
    if pool.iter().all(|g| g.is_zero()) {
        return Err(SimError::Unclosable);
    }
    Ok(())
}

/// Runs one trial revealing `pool` in a uniform random order drawn from `rng`.
pub fn run_trial<R: Rng + ?Sized>(
    pool: &[GeomGain],
    gap: f64,
    strategy: &Strategy,
    rng: &mut R,
) -> Result<TrialResult, SimError> {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(rng);
    run_trial_with_order(pool, gap, strategy, &order)
}

/// Runs one trial revealing `pool[order[0]], pool[order[1]], ...`.
///
/// A stop requested while no nonzero gain has been seen is deferred until one appears.
pub fn run_trial_with_order(
    pool: &[GeomGain],
    gap: f64,
    strategy: &Strategy,
    order: &[usize],
) -> Result<TrialResult, SimError> {
    check_pool(pool)?;
    if order.len() != pool.len() {
        return Err(TreeError::InvalidOrder.into());
    }
    let mut instance = PvbInstance::new(gap, pool.to_vec())?;
    let mut session = SbSession::new(gap)?.with_candidates(pool.len());
    let mut deferred = None;
    let reason = loop {
        let candidate = order[instance.revealed_count()];
        let gain = instance.reveal_next(order)?;
        session.record(candidate, gain.value());
        let bounded = session.d_min().finite().is_some();
        if let (Some(reason), true) = (deferred, bounded) {
            break reason;
        }
        if let Decision::Stop(reason) = strategy.decide(&session, instance.remaining()) {
            if bounded {
                break reason;
            }
            deferred.get_or_insert(reason);
        }
    };
    let depth = session.d_min().finite().ok_or(SimError::Unclosable)?;
    let cost = instance.cost_if_stop(depth)?;
    Ok(TrialResult {
        strategy: strategy.name(),
        total_nodes: cost.total,
        sb_nodes: cost.sb_nodes,
        reveals: instance.revealed_count() as u64,
        stop_reason: reason,
    })
}

/// A seeded pool of `size` gains: exactly `round(zero_fraction · size)` zeros, the rest
/// drawn from `tail`, in shuffled order.
pub fn synthetic_pool(
    seed: u64,
    size: usize,
    zero_fraction: f64,
    tail: &Tail,
) -> Result<Vec<GeomGain>, SimError> {
    if !(0.0..=1.0).contains(&zero_fraction) {
        return Err(SimError::InvalidSpec(format!(
            "zero fraction must lie in [0, 1], got {zero_fraction}"
        )));
    }
    let mut rng = trial_rng(seed, u64::MAX);
    let zeros = (zero_fraction * size as f64).round() as usize;
    let mut values = vec![0.0; zeros];
    while values.len() < size {
        let v = tail
            .sample(&mut rng)
            .map_err(|e| SimError::InvalidSpec(e.to_string()))?;
        if !crate::gains::is_zero_gain(v) {
            values.push(v);
        }
    }
    values.shuffle(&mut rng);
    values
        .into_iter()
        .map(|v| {
            GeomGain::new(v).ok_or_else(|| SimError::InvalidSpec(format!("tail produced {v}")))
        })
        .collect()
}

/// Cost of revealing only what is needed: the best tree of the pool, no reveal charges.
pub fn omniscient_tree_nodes(pool: &[GeomGain], gap: f64) -> Result<u64, SimError> {
    check_pool(pool)?;
    let instance = PvbInstance::new(gap, pool.to_vec())?;
    let depth = instance.best_depth().finite().ok_or(SimError::Unclosable)?;
    Ok(TreeCost::at_depth(depth, 0)?.final_tree_nodes)
}

#[derive(Debug, Clone)]
pub struct CampaignSpec {
    pub pool: Vec<GeomGain>,
    pub gaps: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    /// Worker threads; `None` uses every core. The output does not depend on it.
    pub workers: Option<usize>,
}

impl CampaignSpec {
    pub fn new(pool: Vec<GeomGain>, gaps: Vec<f64>, seed: u64) -> Self {
        Self {
            pool,
            gaps,
            trials: 1000,
            seed,
            strategies: Strategy::defaults(),
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        check_pool(&self.pool)?;
        if self.trials == 0 {
            return Err(SimError::InvalidSpec("trials must be at least 1".into()));
        }
        if self.gaps.is_empty() {
            return Err(SimError::InvalidSpec("no gaps given".into()));
        }
        if let Some(g) = self.gaps.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(SimError::InvalidSpec(format!("gap must be positive, got {g}")));
        }
        if self.strategies.is_empty() {
            return Err(SimError::InvalidSpec("no strategies given".into()));
        }
        for s in &self.strategies {
            if let Strategy::Probabilistic(p) = s {
                p.validate().map_err(SimError::InvalidSpec)?;
            }
        }
        if self.workers == Some(0) {
            return Err(SimError::InvalidSpec("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignRow {
    pub gap: f64,
    pub strategy: String,
    pub mean_total_nodes: f64,
    pub mean_sb_nodes: f64,
}

/// Per-(gap, strategy) means, gaps in input order, strategies in input order within a gap.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignTable {
    pub rows: Vec<CampaignRow>,
}

impl CampaignTable {
    pub const HEADER: [&'static str; 4] = ["gap", "strategy", "mean_total_nodes", "mean_sb_nodes"];

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(Self::HEADER)?;
        for row in &self.rows {
            w.write_record([
                row.gap.to_string(),
                row.strategy.clone(),
                format!("{:.3}", row.mean_total_nodes),
                format!("{:.3}", row.mean_sb_nodes),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn get(&self, gap: f64, strategy: &str) -> Option<&CampaignRow> {
        self.rows
            .iter()
            .find(|r| r.gap == gap && r.strategy == strategy)
    }
}

/// Runs every (gap, strategy) cell for `spec.trials` trials.
///
/// Trial `t` draws one reveal order from the stream `seed ⊕ t` and replays it for every
/// cell, so cells are compared on the same orders. Sums are reduced in trial order.
pub fn run_campaign(spec: &CampaignSpec) -> Result<CampaignTable, SimError> {
    spec.validate()?;
    let cells: Vec<(f64, &Strategy)> = spec
        .gaps
        .iter()
        .flat_map(|&g| spec.strategies.iter().map(move |s| (g, s)))
        .collect();
    let run_one = |t: u64| -> Result<Vec<TrialResult>, SimError> {
        let mut rng = trial_rng(spec.seed, t);
        let mut order: Vec<usize> = (0..spec.pool.len()).collect();
        order.shuffle(&mut rng);
        cells
            .iter()
            .map(|&(gap, s)| run_trial_with_order(&spec.pool, gap, s, &order))
            .collect()
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = spec.workers {
        builder = builder.num_threads(n);
    }
    let workers = builder
        .build()
        .map_err(|e| SimError::Workers(e.to_string()))?;
    let per_trial: Vec<Result<Vec<TrialResult>, SimError>> =
        workers.install(|| (0..spec.trials).into_par_iter().map(run_one).collect());

    let mut totals = vec![(0u128, 0u128); cells.len()];
    for trial in per_trial {
        for (acc, r) in totals.iter_mut().zip(trial?) {
            acc.0 += r.total_nodes as u128;
            acc.1 += r.sb_nodes as u128;
        }
    }
    let n = spec.trials as f64;
    let rows = cells
        .iter()
        .zip(totals)
        .map(|(&(gap, s), (total, sb))| CampaignRow {
            gap,
            strategy: s.name(),
            mean_total_nodes: total as f64 / n,
            mean_sb_nodes: sb as f64 / n,
        })
        .collect();
    Ok(CampaignTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstract_tree::svb_tree_size;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, prop_assume, prop_oneof, proptest, Just, ProptestConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pool(values: &[f64]) -> Vec<GeomGain> {
        values.iter().map(|&v| GeomGain::new(v).unwrap()).collect()
    }

    #[test]
    fn synthetic_pool_shape() {
        let tail = Tail::Pareto { scale: 100.0, shape: 1.5 };
        let p = synthetic_pool(3, 500, 0.3, &tail).unwrap();
        assert_eq!(p.len(), 500);
        assert_eq!(p.iter().filter(|g| g.is_zero()).count(), 150);
        assert!(p.iter().filter(|g| !g.is_zero()).all(|g| g.value() >= 100.0));
        assert_eq!(p, synthetic_pool(3, 500, 0.3, &tail).unwrap());
        assert!(synthetic_pool(3, 10, 1.5, &tail).is_err());
    }

    fn first_reveal() -> Strategy {
        Strategy::Fixed(FixedLookaheadConfig {
            lookahead: 0,
            ..FixedLookaheadConfig::default()
        })
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    /// Cost of the first-reveal rule on one order: reveal up to the first nonzero gain.
    fn first_reveal_cost(values: &[f64], gap: f64, order: &[usize]) -> u64 {
        let k = order.iter().position(|&j| values[j] > 0.0).unwrap();
        let d = (gap / values[order[k]]).ceil() as u64;
        svb_tree_size(d).unwrap() + 2 * (k as u64 + 1)
    }

    #[test]
    fn strategy_names_round_trip() {
        for name in [
            "fixed",
            "prob-exp",
            "prob-mixed-exp",
            "prob-mixed-pareto",
            "prob-mixed-lognormal",
            "full",
        ] {
            let s: Strategy = name.parse().unwrap();
            assert_eq!(s.name(), name);
        }
        assert!("prob-mixed-normal".parse::<Strategy>().is_err());
        assert!("greedy".parse::<Strategy>().is_err());
    }

    #[test]
    fn single_candidate() {
        let p = pool(&[1.0]);
        for s in Strategy::defaults() {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let r = run_trial(&p, 3.0, &s, &mut rng).unwrap();
            assert_eq!(r.total_nodes, 17);
            assert_eq!(r.sb_nodes, 2);
        }
    }

    #[test]
    fn all_zero_pool_is_unclosable() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = run_trial(&pool(&[0.0; 3]), 5.0, &Strategy::Full, &mut rng).unwrap_err();
        assert!(matches!(err, SimError::Unclosable));
    }

    #[test]
    fn full_reveals_everything() {
        let values: Vec<f64> = (0..483).map(|i| (i % 7) as f64).collect();
        let p = pool(&values);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = run_trial(&p, 100.0, &Strategy::Full, &mut rng).unwrap();
        assert_eq!(r.sb_nodes, 966);
        assert_eq!(r.reveals, 483);
        assert_eq!(r.total_nodes, svb_tree_size(17).unwrap() + 966);
        assert_eq!(r.stop_reason, StopReason::CandidatesExhausted);
    }

    #[test]
    fn forced_stop_waits_for_nonzero_gain() {
        let p = pool(&[0.0, 0.0, 0.0, 2.0]);
        let r = run_trial_with_order(&p, 4.0, &first_reveal(), &[0, 1, 2, 3]).unwrap();
        assert_eq!(r.reveals, 4);
        assert_eq!(r.total_nodes, 7 + 8);
    }

    #[test]
    fn first_reveal_matches_enumeration() {
        let pools: [&[f64]; 4] = [
            &[1.0, 2.0, 3.0],
            &[0.0, 0.5, 4.0, 4.0],
            &[0.0, 0.0, 1.5, 2.5, 7.0],
            &[0.0, 0.3, 0.9, 1.1, 2.0, 6.0],
        ];
        let gap = 6.0;
        for values in pools {
            let perms = permutations(values.len());
            let exact: f64 = perms
                .iter()
                .map(|o| first_reveal_cost(values, gap, o) as f64)
                .sum::<f64>()
                / perms.len() as f64;
            let p = pool(values);
            let mut simulated = 0.0;
            for o in &perms {
                let r = run_trial_with_order(&p, gap, &first_reveal(), o).unwrap();
                assert_eq!(r.total_nodes, first_reveal_cost(values, gap, o));
                simulated += r.total_nodes as f64;
            }
            assert_eq!(simulated / perms.len() as f64, exact);
        }
    }

    #[test]
    fn first_reveal_formula_without_zeros() {
        // E = Σ_g P(first = g) (2^(⌈G/g⌉+1) + 1) when every gain is nonzero
        let values = [1.0, 2.0, 3.0, 5.0, 8.0];
        let gap: f64 = 10.0;
        let formula: f64 = values
            .iter()
            .map(|&g| (2f64.powf((gap / g).ceil() + 1.0) + 1.0) / values.len() as f64)
            .sum();
        let perms = permutations(values.len());
        let p = pool(&values);
        let mean = perms
            .iter()
            .map(|o| run_trial_with_order(&p, gap, &first_reveal(), o).unwrap().total_nodes as f64)
            .sum::<f64>()
            / perms.len() as f64;
        assert!((mean - formula).abs() < 1e-9);
    }

    #[test]
    fn probabilistic_stops_at_depth_one() {
        let p = pool(&[10.0, 1.0, 1.0, 1.0]);
        let s: Strategy = "prob-mixed-pareto".parse().unwrap();
        let r = run_trial_with_order(&p, 5.0, &s, &[0, 1, 2, 3]).unwrap();
        assert_eq!(r.reveals, 1);
        assert_eq!(r.total_nodes, 3 + 2);
    }

    fn heavy_pool(seed: u64, n: usize) -> Vec<GeomGain> {
        synthetic_pool(seed, n, 0.3, &Tail::Pareto { scale: 100.0, shape: 2.5 }).unwrap()
    }

    #[test]
    fn campaign_is_deterministic_across_workers() {
        let mut spec = CampaignSpec::new(heavy_pool(3, 120), vec![500.0, 1500.0], 7);
        spec.trials = 40;
        spec.workers = Some(1);
        let a = run_campaign(&spec).unwrap();
        spec.workers = Some(4);
        let b = run_campaign(&spec).unwrap();
        assert_eq!(a, b);
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        a.write_csv(&mut csv_a).unwrap();
        b.write_csv(&mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
        let text = String::from_utf8(csv_a).unwrap();
        assert!(text.starts_with("gap,strategy,mean_total_nodes,mean_sb_nodes\n"));
        assert_eq!(text.lines().count(), 1 + 2 * 5);
    }

    #[test]
    fn full_sb_nodes_constant_across_gaps() {
        let p = heavy_pool(11, 90);
        let mut spec = CampaignSpec::new(p, vec![300.0, 600.0, 900.0], 5);
        spec.trials = 10;
        spec.strategies = vec![Strategy::Full];
        let table = run_campaign(&spec).unwrap();
        assert!(table.rows.iter().all(|r| r.mean_sb_nodes == 180.0));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let p = pool(&[1.0]);
        let mut spec = CampaignSpec::new(p.clone(), vec![1.0], 0);
        spec.trials = 0;
        assert!(run_campaign(&spec).is_err());
        let spec = CampaignSpec::new(p.clone(), vec![], 0);
        assert!(run_campaign(&spec).is_err());
        let spec = CampaignSpec::new(p, vec![-1.0], 0);
        assert!(run_campaign(&spec).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn trial_invariants(
            values in proptest::collection::vec(prop_oneof![Just(0.0), 1.0f64..50.0], 1..40),
            gap in 1.0f64..200.0,
            seed in any::<u64>(),
        ) {
            prop_assume!(values.iter().any(|&v| v > 0.0));
            let p = pool(&values);
            let floor = omniscient_tree_nodes(&p, gap).unwrap();
            let mut full_reveals = 0;
            let mut others = Vec::new();
            for s in Strategy::defaults() {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let r = run_trial(&p, gap, &s, &mut rng).unwrap();
                prop_assert_eq!(r.sb_nodes, 2 * r.reveals);
                prop_assert!(r.total_nodes >= r.sb_nodes);
                prop_assert!(r.total_nodes - r.sb_nodes >= floor);
                if s == Strategy::Full {
                    full_reveals = r.reveals;
                } else {
                    others.push(r.reveals);
                }
            }
            prop_assert_eq!(full_reveals, values.len() as u64);
            prop_assert!(others.iter().all(|&r| r <= full_reveals));
        }
    }
}
