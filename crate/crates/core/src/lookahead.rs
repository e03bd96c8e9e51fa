//! Stopping rules for strong branching.
//!
//! The fixed rule stops after a number of consecutive evaluations without a new best
//! candidate. The probabilistic rule compares the nodes used if strong branching stops
//! now, `t_i = 2^(d_min+1) - 1 + 2i`, with the expected nodes used after one more
//! evaluation, `Σ_d (2^(d+1) - 1) p_d + 2(i+1)`, where `p_d` is the probability that
//! the next sample brings the best depth to `d` under the fitted gain distribution.

use thiserror::Error;

use crate::abstract_tree::{depth_for, svb_tree_size, Depth, TreeCost, TreeError, MAX_DEPTH};
use crate::distributions::{DistError, Family, GainAccumulator, MixedGainDistribution};

#[derive(Debug, Error, PartialEq)]
pub enum LookaheadError {
    #[error("no candidate with a nonzero gain has been revealed yet")]
    NoUsableCandidate,
    #[error("improvement probabilities need d_min >= 2, got {0}")]
    DepthTooSmall(u64),
    #[error("gap must be positive and finite, got {0}")]
    InvalidGap(f64),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedLookaheadConfig {
    /// Lookahead parameter `L`.
    pub lookahead: u32,
    /// Extra strong-branching simplex iterations `K`.
    pub extra_iterations: u64,
    /// Fraction of candidates with uninitialised pseudocosts.
    pub uninit_fraction: f64,
}

impl Default for FixedLookaheadConfig {
    fn default() -> Self {
        Self {
            lookahead: 9,
            extra_iterations: 1_000_000,
            uninit_fraction: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbLookaheadConfig {
    /// Fraction of the maximum lookahead after which the expected-size test is run.
    pub phi: f64,
    /// Nonzero gains required before a fit is trusted.
    pub min_nonzero_samples: usize,
    pub family: Family,
    /// Mixed fit (point mass at zero plus tail) or a plain fit over all gains.
    /// Only the exponential family has a plain variant.
    pub mixed: bool,
}

impl Default for ProbLookaheadConfig {
    fn default() -> Self {
        Self {
            phi: 0.6,
            min_nonzero_samples: 5,
            family: Family::Pareto,
            mixed: true,
        }
    }
}

impl ProbLookaheadConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return Err(format!("phi must lie in (0, 1], got {}", self.phi));
        }
        if !self.mixed && self.family != Family::Exponential {
            return Err("only the exponential family has a plain (unmixed) fit".into());
        }
        Ok(())
    }

    /// Fits the configured model to the gains seen so far.
    pub fn fit(&self, samples: &GainAccumulator) -> Result<MixedGainDistribution, DistError> {
        if self.mixed {
            samples.fit(self.family)
        } else {
            samples.fit_plain_exponential()
        }
    }
}

/// `L^max = (1 + c_uninit / c_all) · L`.
pub fn max_lookahead(config: &FixedLookaheadConfig) -> f64 {
    (1.0 + config.uninit_fraction) * config.lookahead as f64
}

/// `γ^max = γ^node + K`.
pub fn iteration_budget(node_lp_iterations: u64, extra_iterations: u64) -> u64 {
    node_lp_iterations.saturating_add(extra_iterations)
}

/// State of one strong-branching scan.
#[derive(Debug, Clone)]
pub struct SbSession {
    gap: f64,
    iteration: u64,
    d_min: Depth,
    best: Option<(usize, f64)>,
    samples: GainAccumulator,
    no_improvement_streak: u64,
    work_used: u64,
    work_limit: u64,
    candidates_left: Option<usize>,
}

impl SbSession {
    pub fn new(gap: f64) -> Result<Self, LookaheadError> {
        if !(gap.is_finite() && gap > 0.0) {
            return Err(LookaheadError::InvalidGap(gap));
        }
        Ok(Self {
            gap,
            iteration: 0,
            d_min: Depth::Unbounded,
            best: None,
            samples: GainAccumulator::new(),
            no_improvement_streak: 0,
            work_used: 0,
            work_limit: u64::MAX,
            candidates_left: None,
        })
    }

    /// Limits the scan to `limit` units of work (simplex iterations, or reveals).
    pub fn with_work_limit(mut self, used: u64, limit: u64) -> Self {
        self.work_used = used;
        self.work_limit = limit;
        self
    }

    pub fn with_candidates(mut self, count: usize) -> Self {
        self.candidates_left = Some(count);
        self
    }

    /// Records an evaluated candidate's gain; returns whether it became the new best.
    pub fn record(&mut self, candidate: usize, gain: f64) -> bool {
        self.iteration += 1;
        self.samples.push(gain);
        if let Some(left) = self.candidates_left.as_mut() {
            *left = left.saturating_sub(1);
        }
        self.d_min = self.d_min.min(depth_for(self.gap, gain));
        let improved = self.best.is_none_or(|(_, s)| gain > s);
        if improved {
            self.best = Some((candidate, gain));
            self.no_improvement_streak = 0;
        } else {
            self.no_improvement_streak += 1;
        }
        improved
    }

    pub fn add_work(&mut self, amount: u64) {
        self.work_used = self.work_used.saturating_add(amount);
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn d_min(&self) -> Depth {
        self.d_min
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }

    pub fn best_candidate(&self) -> Option<usize> {
        self.best.map(|(c, _)| c)
    }

    pub fn samples(&self) -> &GainAccumulator {
        &self.samples
    }

    pub fn no_improvement_streak(&self) -> u64 {
        self.no_improvement_streak
    }

    pub fn work_used(&self) -> u64 {
        self.work_used
    }

    pub fn work_limit(&self) -> u64 {
        self.work_limit
    }
}

/// `t_i(G) = 2^(d_min+1) - 1 + 2i`.
pub fn nodes_if_stop(session: &SbSession) -> Result<TreeCost, LookaheadError> {
    let d = session.d_min.finite().ok_or(LookaheadError::NoUsableCandidate)?;
    Ok(TreeCost::at_depth(d, session.iteration)?)
}

/// `[p_1, ..., p_{d_min}]`: distribution of the best depth after one more sample.
///
/// `p_d` for `d < d_min` is the probability that the sample lands in `[G/d, G/(d-1))`;
/// `p_{d_min}` collects ties and every non-improving outcome, zero gains included.
pub fn improvement_probabilities(
    dist: &MixedGainDistribution,
    gap: f64,
    d_min: u64,
) -> Result<Vec<f64>, LookaheadError> {
    if !(gap.is_finite() && gap > 0.0) {
        return Err(LookaheadError::InvalidGap(gap));
    }
    if d_min < 2 {
        return Err(LookaheadError::DepthTooSmall(d_min));
    }
    if d_min > MAX_DEPTH {
        return Err(TreeError::DepthCapacity(d_min).into());
    }
    if dist.tail().is_degenerate() {
        return Err(DistError::DegenerateTail.into());
    }
    let mut probs = Vec::with_capacity(d_min as usize);
    probs.push(dist.survival(gap)?);
    // cdf at the previous threshold G/(d-1)
    let mut upper = dist.cdf(gap)?;
    for d in 2..d_min {
        let lower = dist.cdf(gap / d as f64)?;
        probs.push((upper - lower).max(0.0));
        upper = lower;
    }
    probs.push(upper);
    Ok(probs)
}

/// Expected nodes used if exactly one more candidate is evaluated before stopping.
pub fn expected_nodes_if_continue(
    session: &SbSession,
    dist: &MixedGainDistribution,
) -> Result<f64, LookaheadError> {
    let d_min = session.d_min.finite().ok_or(LookaheadError::NoUsableCandidate)?;
    let probs = improvement_probabilities(dist, session.gap, d_min)?;
    let tree: f64 = probs
        .iter()
        .enumerate()
        .map(|(k, p)| svb_tree_size(k as u64 + 1).map(|s| s as f64 * p))
        .sum::<Result<f64, _>>()?;
    Ok(tree + 2.0 * (session.iteration + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    LookaheadExhausted,
    BudgetExhausted,
    NoExpectedImprovement,
    CandidatesExhausted,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::LookaheadExhausted => "lookahead_exhausted",
            StopReason::BudgetExhausted => "budget_exhausted",
            StopReason::NoExpectedImprovement => "no_expected_improvement",
            StopReason::CandidatesExhausted => "candidates_exhausted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop(StopReason),
}

/// Decides whether to evaluate another candidate.
///
/// The lookahead and work limits always apply. With a probabilistic config and a
/// distribution, once the streak reaches `phi · L^max` with enough nonzero samples and
/// `d_min >= 2`, the scan also stops when one more evaluation is not expected to use
/// strictly fewer nodes. A distribution that cannot be evaluated disables that test.
pub fn should_continue(
    session: &SbSession,
    fixed: &FixedLookaheadConfig,
    prob: Option<&ProbLookaheadConfig>,
    dist: Option<&MixedGainDistribution>,
) -> Decision {
    let l_max = max_lookahead(fixed);
    let streak = session.no_improvement_streak as f64;
    if streak >= l_max {
        return Decision::Stop(StopReason::LookaheadExhausted);
    }
    if session.work_used > session.work_limit {
        return Decision::Stop(StopReason::BudgetExhausted);
    }
    if session.candidates_left == Some(0) {
        return Decision::Stop(StopReason::CandidatesExhausted);
    }
    if let (Some(prob), Some(dist)) = (prob, dist) {
        let ready = streak >= prob.phi * l_max
            && session.samples.nonzero_count() >= prob.min_nonzero_samples
            && matches!(session.d_min, Depth::Finite(d) if d >= 2);
        if ready {
            if let (Ok(stop), Ok(cont)) = (
                nodes_if_stop(session),
                expected_nodes_if_continue(session, dist),
            ) {
                if cont >= stop.total as f64 {
                    return Decision::Stop(StopReason::NoExpectedImprovement);
                }
            }
        }
    }
    Decision::Continue
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstract_tree::{build_svb_tree, AbstractVariable};
    use crate::distributions::Tail;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exp_dist(p0: f64, rate: f64) -> MixedGainDistribution {
        MixedGainDistribution::new(p0, Tail::Exponential { rate }).unwrap()
    }

    /// Session with `iteration` reveals whose best gain gives exactly `d_min` at `gap`.
    fn session_at(gap: f64, d_min: u64, iteration: u64) -> SbSession {
        let mut s = SbSession::new(gap).unwrap();
        let best = gap / d_min as f64 * (1.0 + 1e-12);
        s.record(0, best);
        for k in 1..iteration {
            s.record(k as usize, 0.0);
        }
        assert_eq!(s.d_min(), Depth::Finite(d_min));
        assert_eq!(s.iteration(), iteration);
        s
    }

    #[test]
    fn max_lookahead_formula() {
        let mut c = FixedLookaheadConfig::default();
        assert_eq!(max_lookahead(&c), 9.0);
        c.uninit_fraction = 1.0;
        assert_eq!(max_lookahead(&c), 18.0);
        c.uninit_fraction = 0.5;
        assert_eq!(max_lookahead(&c), 13.5);
    }

    #[test]
    fn budget_formula() {
        assert_eq!(iteration_budget(1000, 1_000_000), 1_001_000);
        assert_eq!(iteration_budget(0, 0), 0);
        let default_k = FixedLookaheadConfig::default().extra_iterations;
        assert_eq!(iteration_budget(42, default_k), 42 + 1_000_000);
    }

    #[test]
    fn stop_cost_examples() {
        assert_eq!(nodes_if_stop(&session_at(9.0, 3, 5)).unwrap().total, 25);
        let mut s = SbSession::new(5.0).unwrap();
        // depth 1, no reveals: perfect tree of depth one
        s.d_min = Depth::Finite(1);
        assert_eq!(nodes_if_stop(&s).unwrap().total, 3);

        let s = session_at(8.0, 4, 32);
        let oracle = build_svb_tree(8.0, &AbstractVariable::new("x", 2.0, 2.0)).unwrap() + 64;
        assert_eq!(nodes_if_stop(&s).unwrap().total, 95);
        assert_eq!(oracle, 95);

        let empty = SbSession::new(1.0).unwrap();
        assert_eq!(nodes_if_stop(&empty), Err(LookaheadError::NoUsableCandidate));
    }

    #[test]
    fn probabilities_with_certain_zero() {
        let d = exp_dist(1.0, 1.0);
        let p = improvement_probabilities(&d, 4.0, 5).unwrap();
        assert_eq!(p, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn depth_one_probability_is_survival() {
        let (rate, gap) = (0.7, 3.0);
        let p = improvement_probabilities(&exp_dist(0.0, rate), gap, 6).unwrap();
        assert!((p[0] - (-rate * gap).exp()).abs() < 1e-15);
    }

    #[test]
    fn probability_errors() {
        let d = exp_dist(0.2, 1.0);
        assert_eq!(
            improvement_probabilities(&d, 4.0, 1),
            Err(LookaheadError::DepthTooSmall(1))
        );
        let degenerate = GainAccumulator::from_values([0.0]).fit(Family::Pareto).unwrap();
        assert!(improvement_probabilities(&degenerate, 4.0, 3).is_err());
    }

    #[test]
    fn probabilities_match_sampling() {
        // 10^7 draws of ceil(G/g), 3 standard errors per component
        let dist = exp_dist(0.3, 1.0);
        let (gap, d_min) = (4.0, 4u64);
        let p = improvement_probabilities(&dist, gap, d_min).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 10_000_000u64;
        let mut counts = vec![0u64; d_min as usize];
        for _ in 0..n {
            let g = dist.sample(&mut rng).unwrap();
            let d = if g > 0.0 { ((gap / g).ceil() as u64).min(d_min) } else { d_min };
            counts[d as usize - 1] += 1;
        }
        for (k, &c) in counts.iter().enumerate() {
            let est = c as f64 / n as f64;
            let se = (p[k] * (1.0 - p[k]) / n as f64).sqrt().max(1e-12);
            assert!((est - p[k]).abs() <= 3.0 * se, "d={} est {est} p {}", k + 1, p[k]);
        }
    }

    #[test]
    fn continuing_without_hope_costs_one_sb() {
        let s = session_at(10.0, 4, 3);
        let cont = expected_nodes_if_continue(&s, &exp_dist(1.0, 2.0)).unwrap();
        let stop = nodes_if_stop(&s).unwrap().total as f64;
        assert_eq!(cont, stop + 2.0);
    }

    #[test]
    fn two_term_expansion() {
        let s = session_at(6.0, 2, 4);
        let dist = exp_dist(0.1, 0.4);
        let q = 0.9 * (-0.4f64 * 6.0).exp();
        let want = 3.0 * q + 7.0 * (1.0 - q) + 2.0 * 5.0;
        let got = expected_nodes_if_continue(&s, &dist).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn expected_nodes_match_sampling() {
        let s = session_at(6.0, 3, 4);
        let dist = exp_dist(0.2, 0.5);
        let analytic = expected_nodes_if_continue(&s, &dist).unwrap();
        let stop_tree = 15.0;
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        let n = 10_000_000u64;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let g = dist.sample(&mut rng).unwrap();
            let tree = if g > 0.0 {
                let d = (6.0 / g).ceil();
                if d < 3.0 { 2f64.powf(d + 1.0) - 1.0 } else { stop_tree }
            } else {
                stop_tree
            };
            let v = tree + 2.0 * 5.0;
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - analytic).abs() <= 3.0 * se, "{mean} vs {analytic} (se {se})");
    }

    #[test]
    fn fixed_rule_stops_on_streak() {
        let mut s = SbSession::new(10.0).unwrap();
        s.record(0, 5.0);
        for k in 1..=9 {
            s.record(k, 1.0);
        }
        assert_eq!(s.no_improvement_streak(), 9);
        let fixed = FixedLookaheadConfig::default();
        assert_eq!(
            should_continue(&s, &fixed, None, None),
            Decision::Stop(StopReason::LookaheadExhausted)
        );
    }

    #[test]
    fn budget_and_candidates_stop() {
        let fixed = FixedLookaheadConfig::default();
        let mut s = SbSession::new(10.0).unwrap().with_work_limit(0, 100);
        s.record(0, 1.0);
        s.add_work(101);
        assert_eq!(
            should_continue(&s, &fixed, None, None),
            Decision::Stop(StopReason::BudgetExhausted)
        );
        let mut s = SbSession::new(10.0).unwrap().with_candidates(1);
        s.record(0, 1.0);
        assert_eq!(
            should_continue(&s, &fixed, None, None),
            Decision::Stop(StopReason::CandidatesExhausted)
        );
    }

    #[test]
    fn depth_one_never_stops_early() {
        let fixed = FixedLookaheadConfig::default();
        let prob = ProbLookaheadConfig::default();
        let mut s = SbSession::new(1.0).unwrap();
        s.record(0, 5.0);
        for k in 1..=8 {
            s.record(k, 2.0);
        }
        let dist = s.samples().fit(Family::Pareto).unwrap();
        assert_eq!(should_continue(&s, &fixed, Some(&prob), Some(&dist)), Decision::Continue);
    }

    #[test]
    fn probabilistic_rule_stops_without_expected_gain() {
        // best gain 3 against G = 20 gives d_min = 7; everything after it is tiny
        let fixed = FixedLookaheadConfig::default();
        let prob = ProbLookaheadConfig {
            family: Family::Exponential,
            ..Default::default()
        };
        // streak of 6 with 7 nonzero samples
        let mut s6 = SbSession::new(20.0).unwrap();
        s6.record(0, 3.0);
        for k in 1..=6 {
            s6.record(k, 0.05 + 0.01 * k as f64);
        }
        let dist = prob.fit(s6.samples()).unwrap();
        let stop = nodes_if_stop(&s6).unwrap().total as f64;
        let cont = expected_nodes_if_continue(&s6, &dist).unwrap();
        assert!(cont > stop, "{cont} <= {stop}");
        assert_eq!(
            should_continue(&s6, &fixed, Some(&prob), Some(&dist)),
            Decision::Stop(StopReason::NoExpectedImprovement)
        );
        // one step earlier the test is not armed yet (streak 5 < 0.6 * 9)
        let mut s5 = SbSession::new(20.0).unwrap();
        s5.record(0, 3.0);
        for k in 1..=5 {
            s5.record(k, 0.05 + 0.01 * k as f64);
        }
        assert_eq!(should_continue(&s5, &fixed, Some(&prob), Some(&dist)), Decision::Continue);
    }

    fn arb_dist() -> impl Strategy<Value = MixedGainDistribution> {
        let tail = prop_oneof![
            (0.001f64..10.0).prop_map(|rate| Tail::Exponential { rate }),
            (0.01f64..10.0, 0.1f64..5.0).prop_map(|(scale, shape)| Tail::Pareto { scale, shape }),
            (-3.0f64..3.0, 0.05f64..3.0).prop_map(|(mu, sigma)| Tail::LogNormal { mu, sigma }),
        ];
        (0.0f64..=1.0, tail).prop_map(|(p0, t)| MixedGainDistribution::new(p0, t).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn probabilities_close(dist in arb_dist(), gap in 0.01f64..1e4, d_min in 2u64..=62) {
            let p = improvement_probabilities(&dist, gap, d_min).unwrap();
            prop_assert_eq!(p.len() as u64, d_min);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        }
    }

    proptest! {
        #[test]
        fn continuing_costs_at_least_a_depth_one_tree(
            dist in arb_dist(), gap in 0.1f64..100.0, d_min in 2u64..=30, i in 1u64..50,
        ) {
            let s = session_at(gap, d_min, i);
            let cont = expected_nodes_if_continue(&s, &dist).unwrap();
            prop_assert!(cont >= 2.0 * (i + 1) as f64 + 3.0 - 1e-9);
        }

        #[test]
        fn heavier_tail_never_costs_more(
            p0 in 0.0f64..0.9, rate in 0.01f64..5.0, shrink in 0.1f64..1.0,
            gap in 0.5f64..50.0, d_min in 2u64..=20, i in 1u64..20,
        ) {
            let s = session_at(gap, d_min, i);
            let base = expected_nodes_if_continue(&s, &exp_dist(p0, rate)).unwrap();
            let heavier = expected_nodes_if_continue(&s, &exp_dist(p0, rate * shrink)).unwrap();
            prop_assert!(heavier <= base * (1.0 + 1e-12) + 1e-9);
        }

        #[test]
        fn stop_decision_is_consistent(
            dist in arb_dist(), gap in 0.5f64..50.0, d_min in 2u64..=20, extra in 6u64..12,
        ) {
            let mut s = session_at(gap, d_min, 1);
            for k in 0..extra {
                s.record(k as usize + 1, gap / (d_min as f64 + 1.0 + k as f64));
            }
            let fixed = FixedLookaheadConfig { lookahead: 100, ..Default::default() };
            let prob = ProbLookaheadConfig { phi: 0.01, ..Default::default() };
            if should_continue(&s, &fixed, Some(&prob), Some(&dist))
                == Decision::Stop(StopReason::NoExpectedImprovement)
            {
                let stop = nodes_if_stop(&s).unwrap().total as f64;
                prop_assert!(stop <= expected_nodes_if_continue(&s, &dist).unwrap());
            }
        }

        #[test]
        fn fixed_mode_ignores_distribution(
            dist in arb_dist(), gains in proptest::collection::vec(0.0f64..10.0, 1..40),
            lookahead in 1u32..12,
        ) {
            let fixed = FixedLookaheadConfig { lookahead, ..Default::default() };
            let mut s = SbSession::new(7.0).unwrap();
            for (k, g) in gains.iter().enumerate() {
                s.record(k, *g);
                prop_assert_eq!(
                    should_continue(&s, &fixed, None, None),
                    should_continue(&s, &fixed, None, Some(&dist))
                );
            }
        }
    }
}
