//! One-sample Kolmogorov-Smirnov test with the asymptotic p-value.
//!
//! The p-value ignores that the tested parameters were estimated from the same data
//! (no Lilliefors correction) and is approximate for small samples (n < 35).

use std::f64::consts::PI;

use super::DistError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2k²λ²)`.
///
/// For `λ < 1.18` the alternating series converges slowly, so the equivalent
/// Jacobi-theta form `1 - sqrt(2π)/λ Σ exp(-(2k-1)²π²/(8λ²))` is summed instead.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    const TERM_CUTOFF: f64 = 1e-10;
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let a = -PI * PI / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for k in 1u32.. {
            let odd = (2 * k - 1) as f64;
            let term = (a * odd * odd).exp();
            sum += term;
            if term < TERM_CUTOFF {
                break;
            }
        }
        return (1.0 - (2.0 * PI).sqrt() / lambda * sum).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1u32.. {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < TERM_CUTOFF {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Tests `samples` against the continuous CDF `cdf`.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult, DistError> {
    if samples.is_empty() {
        return Err(DistError::EmptySample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let above = (i + 1) as f64 / n - f;
            let below = f - i as f64 / n;
            above.max(below)
        })
        .fold(0.0f64, f64::max);
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_q(n.sqrt() * statistic),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Tail;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// sup |ECDF - F| over sample points, counting ECDF on both sides of each jump.
    fn brute_force_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
        let n = xs.len() as f64;
        let mut best = 0.0f64;
        for &x in xs {
            let at = xs.iter().filter(|&&y| y <= x).count() as f64 / n;
            let before = xs.iter().filter(|&&y| y < x).count() as f64 / n;
            let f = cdf(x);
            best = best.max((at - f).abs()).max((before - f).abs());
        }
        best
    }

    #[test]
    fn q_matches_series() {
        // 30-digit sums of the defining series
        let table = [
            (0.3, 0.999990694198665433),
            (0.5, 0.963945243664875094),
            (1.0, 0.269999671677354521),
            (1.18, 0.123453809429765678),
            (1.36, 0.049485876755377910),
            (2.0, 0.000670925255779695),
        ];
        for (lambda, want) in table {
            let got = kolmogorov_q(lambda);
            assert!((got - want).abs() < 1e-9, "Q({lambda}) = {got}, want {want}");
        }
        assert_eq!(kolmogorov_q(0.0), 1.0);
    }

    #[test]
    fn exact_quantiles_give_half_step() {
        let tail = Tail::Exponential { rate: 1.7 };
        let n = 100;
        let xs: Vec<f64> = (1..=n)
            .map(|i| tail.quantile((i as f64 - 0.5) / n as f64).unwrap())
            .collect();
        let r = ks_test(&xs, |x| tail.cdf(x).unwrap()).unwrap();
        assert!((r.statistic - 0.005).abs() < 1e-12);
    }

    #[test]
    fn single_sample_at_median() {
        let tail = Tail::Pareto { scale: 1.0, shape: 2.0 };
        let median = tail.quantile(0.5).unwrap();
        let r = ks_test(&[median], |x| tail.cdf(x).unwrap()).unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_sample_is_error() {
        assert_eq!(ks_test(&[], |x| x), Err(DistError::EmptySample));
    }

    #[test]
    fn calibrated_under_the_null() {
        let tail = Tail::Exponential { rate: 1.0 };
        let mut not_rejected = 0;
        for rep in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + rep);
            let xs: Vec<f64> = (0..1000).map(|_| tail.sample(&mut rng).unwrap()).collect();
            let r = ks_test(&xs, |x| tail.cdf(x).unwrap()).unwrap();
            not_rejected += (r.p_value > 0.05) as usize;
        }
        assert!(not_rejected >= 186, "{not_rejected}/200");
    }

    proptest! {
        #[test]
        fn statistic_matches_brute_force(
            xs in proptest::collection::vec(0.0f64..20.0, 1..=200),
            rate in 0.05f64..3.0,
        ) {
            let tail = Tail::Exponential { rate };
            let cdf = |x: f64| tail.cdf(x).unwrap();
            let fast = ks_test(&xs, cdf).unwrap().statistic;
            prop_assert!((fast - brute_force_statistic(&xs, cdf)).abs() < 1e-12);
        }

        #[test]
        fn statistic_with_ties(
            xs in proptest::collection::vec(0u8..6, 1..=60),
        ) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            let tail = Tail::Uniform { upper: 6.0 };
            let cdf = |x: f64| tail.cdf(x).unwrap();
            let fast = ks_test(&xs, cdf).unwrap().statistic;
            prop_assert!((fast - brute_force_statistic(&xs, cdf)).abs() < 1e-12);
        }
    }
}
