//! Mixed discrete-continuous models of geometric-mean dual gains.
//!
//! A gain is zero with probability `p0` and otherwise follows a continuous tail `F_D`:
//! `P[g' <= g] = p0 + (1 - p0) F_D(g)`. Tails are fitted by closed-form maximum
//! likelihood on the nonzero gains only, and screened with a one-sample
//! Kolmogorov-Smirnov test.

mod ks;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal, Pareto, Uniform};
use statrs::function::erf::{erfc, erfc_inv};
use thiserror::Error;

use crate::gains::{is_zero_gain, GainSeries, GeomGain};

pub use ks::{kolmogorov_q, ks_test, KsResult};

/// Series with fewer nonzero gains than this are reported as insufficient.
pub const MIN_SCREENING_SAMPLES: usize = 10;

/// Significance level of the screening test.
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("cannot fit a distribution to an empty sample")]
    Empty,
    #[error("{family} fit needs at least {needed} nonzero samples, got {got}")]
    InsufficientSamples {
        family: Family,
        needed: usize,
        got: usize,
    },
    #[error("{0} fit is degenerate for this sample")]
    DegenerateFit(Family),
    #[error("the tail is degenerate (no nonzero gains were observed)")]
    DegenerateTail,
    #[error("invalid distribution parameters: {0}")]
    InvalidParameters(String),
    #[error("empty sample")]
    EmptySample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Exponential,
    Pareto,
    LogNormal,
    Uniform,
    Normal,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Exponential,
        Family::Pareto,
        Family::LogNormal,
        Family::Uniform,
        Family::Normal,
    ];

    /// Families whose support strictly contains every `[0, g_max]`, usable by the stopping rule.
    pub const STOPPING: [Family; 3] = [Family::Exponential, Family::Pareto, Family::LogNormal];

    pub fn name(self) -> &'static str {
        match self {
            Family::Exponential => "exponential",
            Family::Pareto => "pareto",
            Family::LogNormal => "lognormal",
            Family::Uniform => "uniform",
            Family::Normal => "normal",
        }
    }

    /// Normal and uniform are kept as controls only.
    pub fn is_control(self) -> bool {
        matches!(self, Family::Uniform | Family::Normal)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exponential" | "exp" => Ok(Family::Exponential),
            "pareto" => Ok(Family::Pareto),
            "lognormal" | "log-normal" => Ok(Family::LogNormal),
            "uniform" => Ok(Family::Uniform),
            "normal" => Ok(Family::Normal),
            other => Err(format!("unknown distribution family `{other}`")),
        }
    }
}

/// Continuous part of a mixed gain distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    Exponential { rate: f64 },
    Pareto { scale: f64, shape: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Uniform { upper: f64 },
    Normal { mean: f64, std_dev: f64 },
    /// No nonzero gain was ever observed; the tail is unusable.
    Degenerate,
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

impl Tail {
    pub fn family(&self) -> Option<Family> {
        Some(match self {
            Tail::Exponential { .. } => Family::Exponential,
            Tail::Pareto { .. } => Family::Pareto,
            Tail::LogNormal { .. } => Family::LogNormal,
            Tail::Uniform { .. } => Family::Uniform,
            Tail::Normal { .. } => Family::Normal,
            Tail::Degenerate => return None,
        })
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Tail::Degenerate)
    }

    /// Parameter vector in the family's conventional order.
    pub fn theta(&self) -> Vec<f64> {
        match *self {
            Tail::Exponential { rate } => vec![rate],
            Tail::Pareto { scale, shape } => vec![scale, shape],
            Tail::LogNormal { mu, sigma } => vec![mu, sigma],
            Tail::Uniform { upper } => vec![upper],
            Tail::Normal { mean, std_dev } => vec![mean, std_dev],
            Tail::Degenerate => vec![],
        }
    }

    fn validate(&self) -> Result<(), DistError> {
        let ok = match *self {
            Tail::Exponential { rate } => rate.is_finite() && rate > 0.0,
            Tail::Pareto { scale, shape } => {
                scale.is_finite() && scale > 0.0 && shape.is_finite() && shape > 0.0
            }
            Tail::LogNormal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma > 0.0,
            Tail::Uniform { upper } => upper.is_finite() && upper > 0.0,
            Tail::Normal { mean, std_dev } => {
                mean.is_finite() && std_dev.is_finite() && std_dev > 0.0
            }
            Tail::Degenerate => true,
        };
        if ok {
            Ok(())
        } else {
            Err(DistError::InvalidParameters(format!("{self:?}")))
        }
    }

    /// `F_D(g)`.
    pub fn cdf(&self, g: f64) -> Result<f64, DistError> {
        Ok(match *self {
            Tail::Exponential { rate } => {
                if g <= 0.0 {
                    0.0
                } else {
                    -(-rate * g).exp_m1()
                }
            }
            Tail::Pareto { scale, shape } => {
                if g <= scale {
                    0.0
                } else {
                    1.0 - (scale / g).powf(shape)
                }
            }
            Tail::LogNormal { mu, sigma } => {
                if g <= 0.0 {
                    0.0
                } else {
                    std_normal_cdf((g.ln() - mu) / sigma)
                }
            }
            Tail::Uniform { upper } => (g / upper).clamp(0.0, 1.0),
            Tail::Normal { mean, std_dev } => std_normal_cdf((g - mean) / std_dev),
            Tail::Degenerate => {
                if g > 0.0 {
                    return Err(DistError::DegenerateTail);
                }
                0.0
            }
        })
    }

    /// `1 - F_D(g)`, computed without cancellation where the family allows it.
    pub fn survival(&self, g: f64) -> Result<f64, DistError> {
        Ok(match *self {
            Tail::Exponential { rate } => {
                if g <= 0.0 {
                    1.0
                } else {
                    (-rate * g).exp()
                }
            }
            Tail::Pareto { scale, shape } => {
                if g <= scale {
                    1.0
                } else {
                    (scale / g).powf(shape)
                }
            }
            Tail::LogNormal { mu, sigma } => {
                if g <= 0.0 {
                    1.0
                } else {
                    std_normal_cdf(-(g.ln() - mu) / sigma)
                }
            }
            Tail::Normal { mean, std_dev } => std_normal_cdf(-(g - mean) / std_dev),
            Tail::Uniform { .. } | Tail::Degenerate => 1.0 - self.cdf(g)?,
        })
    }

    /// Inverse of [`Tail::cdf`] for `p` in `(0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64, DistError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DistError::InvalidParameters(format!("quantile level {p}")));
        }
        Ok(match *self {
            Tail::Exponential { rate } => -(-p).ln_1p() / rate,
            Tail::Pareto { scale, shape } => scale * (1.0 - p).powf(-1.0 / shape),
            Tail::LogNormal { mu, sigma } => (mu + sigma * std_normal_quantile(p)).exp(),
            Tail::Uniform { upper } => p * upper,
            Tail::Normal { mean, std_dev } => mean + std_dev * std_normal_quantile(p),
            Tail::Degenerate => return Err(DistError::DegenerateTail),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, DistError> {
        let bad = |e: String| DistError::InvalidParameters(e);
        Ok(match *self {
            Tail::Exponential { rate } => Exp::new(rate).map_err(|e| bad(e.to_string()))?.sample(rng),
            Tail::Pareto { scale, shape } => Pareto::new(scale, shape)
                .map_err(|e| bad(e.to_string()))?
                .sample(rng),
            Tail::LogNormal { mu, sigma } => LogNormal::new(mu, sigma)
                .map_err(|e| bad(e.to_string()))?
                .sample(rng),
            Tail::Uniform { upper } => Uniform::new(0.0, upper)
                .map_err(|e| bad(e.to_string()))?
                .sample(rng),
            Tail::Normal { mean, std_dev } => Normal::new(mean, std_dev)
                .map_err(|e| bad(e.to_string()))?
                .sample(rng),
            Tail::Degenerate => return Err(DistError::DegenerateTail),
        })
    }
}

/// Point mass `p0` at zero plus a continuous tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedGainDistribution {
    p0: f64,
    tail: Tail,
}

impl MixedGainDistribution {
    pub fn new(p0: f64, tail: Tail) -> Result<Self, DistError> {
        if !(0.0..=1.0).contains(&p0) {
            return Err(DistError::InvalidParameters(format!("p0 = {p0}")));
        }
        tail.validate()?;
        if tail.is_degenerate() && p0 != 1.0 {
            return Err(DistError::InvalidParameters(
                "a degenerate tail requires p0 = 1".into(),
            ));
        }
        Ok(Self { p0, tail })
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn family(&self) -> Option<Family> {
        self.tail.family()
    }

    /// `P[gain <= g]`.
    ///
    /// Below zero this is 0 except for the normal control tail, which leaks mass onto
    /// negative gains as `(1 - p0) Φ`.
    pub fn cdf(&self, g: f64) -> Result<f64, DistError> {
        if g < 0.0 {
            return match self.tail {
                Tail::Normal { .. } => Ok((1.0 - self.p0) * self.tail.cdf(g)?),
                _ => Ok(0.0),
            };
        }
        if g == 0.0 && !matches!(self.tail, Tail::Normal { .. }) {
            return Ok(self.p0);
        }
        Ok(self.p0 + (1.0 - self.p0) * self.tail.cdf(g)?)
    }

    /// `P[gain > g]` for `g >= 0`.
    pub fn survival(&self, g: f64) -> Result<f64, DistError> {
        if g < 0.0 {
            return Ok(1.0 - self.cdf(g)?);
        }
        Ok((1.0 - self.p0) * self.tail.survival(g)?)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, DistError> {
        if rng.random::<f64>() < self.p0 {
            Ok(0.0)
        } else {
            self.tail.sample(rng)
        }
    }
}

/// Running sums over observed gains; any fit is O(1) from these.
#[derive(Debug, Clone, Default)]
pub struct GainAccumulator {
    n_zero: usize,
    n_pos: usize,
    sum_all: f64,
    min_pos: f64,
    max_pos: f64,
    // Welford state for the nonzero gains and for their logs
    mean: f64,
    m2: f64,
    log_mean: f64,
    log_m2: f64,
}

impl GainAccumulator {
    pub fn new() -> Self {
        Self {
            min_pos: f64::INFINITY,
            max_pos: 0.0,
            ..Default::default()
        }
    }

    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut acc = Self::new();
        for v in values {
            acc.push(v);
        }
        acc
    }

    /// Adds a gain. Values below the zero tolerance count toward `p0` only.
    pub fn push(&mut self, value: f64) {
        debug_assert!(value >= 0.0 && value.is_finite());
        if is_zero_gain(value) {
            self.n_zero += 1;
            return;
        }
        self.n_pos += 1;
        self.sum_all += value;
        self.min_pos = self.min_pos.min(value);
        self.max_pos = self.max_pos.max(value);
        let k = self.n_pos as f64;
        let delta = value - self.mean;
        self.mean += delta / k;
        self.m2 += delta * (value - self.mean);
        let lv = value.ln();
        let ldelta = lv - self.log_mean;
        self.log_mean += ldelta / k;
        self.log_m2 += ldelta * (lv - self.log_mean);
    }

    pub fn count(&self) -> usize {
        self.n_zero + self.n_pos
    }

    pub fn zero_count(&self) -> usize {
        self.n_zero
    }

    pub fn nonzero_count(&self) -> usize {
        self.n_pos
    }

    pub fn max_nonzero(&self) -> Option<f64> {
        (self.n_pos > 0).then_some(self.max_pos)
    }

    /// Mixed fit: `p0` is the zero fraction, the tail is the MLE on nonzero gains.
    pub fn fit(&self, family: Family) -> Result<MixedGainDistribution, DistError> {
        let n = self.count();
        if n == 0 {
            return Err(DistError::Empty);
        }
        let p0 = self.n_zero as f64 / n as f64;
        if self.n_pos == 0 {
            return Ok(MixedGainDistribution {
                p0: 1.0,
                tail: Tail::Degenerate,
            });
        }
        let k = self.n_pos as f64;
        let need = |needed: usize| {
            if self.n_pos < needed {
                Err(DistError::InsufficientSamples {
                    family,
                    needed,
                    got: self.n_pos,
                })
            } else {
                Ok(())
            }
        };
        let tail = match family {
            Family::Exponential => Tail::Exponential { rate: 1.0 / self.mean },
            Family::Pareto => {
                need(2)?;
                let denom = self.log_mean - self.min_pos.ln();
                if self.max_pos == self.min_pos || !(denom > 0.0) {
                    return Err(DistError::DegenerateFit(family));
                }
                Tail::Pareto {
                    scale: self.min_pos,
                    shape: 1.0 / denom,
                }
            }
            Family::LogNormal => {
                need(2)?;
                let sigma = (self.log_m2 / k).max(0.0).sqrt();
                if !(sigma > 0.0) {
                    return Err(DistError::DegenerateFit(family));
                }
                Tail::LogNormal {
                    mu: self.log_mean,
                    sigma,
                }
            }
            Family::Uniform => Tail::Uniform { upper: self.max_pos },
            Family::Normal => {
                let std_dev = (self.m2 / k).max(0.0).sqrt();
                if !(std_dev > 0.0) {
                    return Err(DistError::DegenerateFit(family));
                }
                Tail::Normal {
                    mean: self.mean,
                    std_dev,
                }
            }
        };
        MixedGainDistribution::new(p0, tail)
    }

    /// Plain exponential over all gains, zeros included, with no point mass.
    pub fn fit_plain_exponential(&self) -> Result<MixedGainDistribution, DistError> {
        let n = self.count();
        if n == 0 {
            return Err(DistError::Empty);
        }
        if self.n_pos == 0 {
            return Err(DistError::DegenerateFit(Family::Exponential));
        }
        MixedGainDistribution::new(
            0.0,
            Tail::Exponential {
                rate: n as f64 / self.sum_all,
            },
        )
    }
}

pub fn fit(samples: &[GeomGain], family: Family) -> Result<MixedGainDistribution, DistError> {
    GainAccumulator::from_values(samples.iter().map(|g| g.value())).fit(family)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    NotRejected,
    Rejected,
    Insufficient,
    Degenerate,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::NotRejected => "not-rejected",
            Verdict::Rejected => "rejected",
            Verdict::Insufficient => "insufficient",
            Verdict::Degenerate => "degenerate",
        }
    }
}

/// Outcome of fitting one family to one series.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub family: Family,
    /// `None` when the family cannot be fitted to this sample.
    pub distribution: Option<MixedGainDistribution>,
    pub n_zero: usize,
    pub n_nonzero: usize,
    pub ks: Option<KsResult>,
    pub verdict: Verdict,
}

/// Fits each family to the series and screens the nonzero gains with the KS test.
pub fn fit_report(
    series: &GainSeries,
    families: &[Family],
    epsilon: f64,
    alpha: f64,
) -> Result<Vec<FitReport>, DistError> {
    let gains = series
        .geomeans(epsilon)
        .map_err(|e| DistError::InvalidParameters(e.to_string()))?;
    if gains.is_empty() {
        return Err(DistError::Empty);
    }
    let acc = GainAccumulator::from_values(gains.iter().map(|g| g.value()));
    let nonzero: Vec<f64> = gains
        .iter()
        .filter(|g| !g.is_zero())
        .map(|g| g.value())
        .collect();

    families
        .iter()
        .map(|&family| {
            let fitted = match acc.fit(family) {
                Ok(d) => Some(d),
                Err(DistError::DegenerateFit(_) | DistError::InsufficientSamples { .. }) => None,
                Err(e) => return Err(e),
            };
            let ks = match fitted {
                Some(d) if !d.tail.is_degenerate() => {
                    let tail = d.tail;
                    Some(ks_test(&nonzero, |x| tail.cdf(x).unwrap_or(f64::NAN))?)
                }
                _ => None,
            };
            let verdict = match (&fitted, &ks) {
                (_, _) if nonzero.len() < MIN_SCREENING_SAMPLES => Verdict::Insufficient,
                (Some(_), Some(ks)) if ks.p_value < alpha => Verdict::Rejected,
                (Some(_), Some(_)) => Verdict::NotRejected,
                _ => Verdict::Degenerate,
            };
            Ok(FitReport {
                family,
                distribution: fitted,
                n_zero: acc.zero_count(),
                n_nonzero: acc.nonzero_count(),
                ks,
                verdict,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gains::GainPair;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gains(values: &[f64]) -> Vec<GeomGain> {
        values.iter().map(|&v| GeomGain::new(v).unwrap()).collect()
    }

    #[test]
    fn half_zero_exponential() {
        let d = fit(&gains(&[0.0, 0.0, 2.0, 2.0]), Family::Exponential).unwrap();
        assert_eq!(d.p0(), 0.5);
        assert_eq!(*d.tail(), Tail::Exponential { rate: 0.5 });
    }

    #[test]
    fn pareto_hand_mle() {
        let d = fit(&gains(&[1.0, 2.0, 4.0, 8.0]), Family::Pareto).unwrap();
        let Tail::Pareto { scale, shape } = *d.tail() else { panic!() };
        assert_eq!(scale, 1.0);
        // 4 / ln 64
        assert!((shape - 0.961_796_693_925_975_6).abs() < 1e-12);
        assert_eq!(d.p0(), 0.0);
    }

    #[test]
    fn exponential_rate_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let truth = Tail::Exponential { rate: 3.0 };
        let xs: Vec<f64> = (0..10_000).map(|_| truth.sample(&mut rng).unwrap()).collect();
        let d = GainAccumulator::from_values(xs).fit(Family::Exponential).unwrap();
        let Tail::Exponential { rate } = *d.tail() else { panic!() };
        assert!((2.85..=3.15).contains(&rate), "{rate}");
    }

    #[test]
    fn fit_errors() {
        assert_eq!(fit(&[], Family::Exponential), Err(DistError::Empty));
        assert_eq!(
            fit(&gains(&[3.0, 3.0, 3.0]), Family::Pareto),
            Err(DistError::DegenerateFit(Family::Pareto))
        );
        assert!(matches!(
            fit(&gains(&[0.0, 3.0]), Family::LogNormal),
            Err(DistError::InsufficientSamples { got: 1, .. })
        ));
        let all_zero = fit(&gains(&[0.0, 0.0]), Family::Pareto).unwrap();
        assert_eq!(all_zero.p0(), 1.0);
        assert!(all_zero.tail().is_degenerate());
    }

    #[test]
    fn other_family_mles() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let logs: Vec<f64> = xs.iter().map(|x: &f64| x.ln()).collect();
        let mu = logs.iter().sum::<f64>() / 4.0;
        let sigma = (logs.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / 4.0).sqrt();
        let d = fit(&gains(&xs), Family::LogNormal).unwrap();
        let Tail::LogNormal { mu: m, sigma: s } = *d.tail() else { panic!() };
        assert!((m - mu).abs() < 1e-12 && (s - sigma).abs() < 1e-12);

        let d = fit(&gains(&xs), Family::Uniform).unwrap();
        assert_eq!(*d.tail(), Tail::Uniform { upper: 8.0 });

        let d = fit(&gains(&xs), Family::Normal).unwrap();
        let Tail::Normal { mean, std_dev } = *d.tail() else { panic!() };
        assert!((mean - 3.75).abs() < 1e-12);
        let var = xs.iter().map(|x| (x - 3.75f64).powi(2)).sum::<f64>() / 4.0;
        assert!((std_dev - var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn plain_exponential_counts_zeros() {
        let acc = GainAccumulator::from_values([0.0, 0.0, 2.0, 2.0]);
        let d = acc.fit_plain_exponential().unwrap();
        assert_eq!(d.p0(), 0.0);
        assert_eq!(*d.tail(), Tail::Exponential { rate: 1.0 });
    }

    #[test]
    fn cdf_examples() {
        let e = MixedGainDistribution::new(0.5, Tail::Exponential { rate: 1.0 }).unwrap();
        assert_eq!(e.cdf(0.0).unwrap(), 0.5);
        let e0 = MixedGainDistribution::new(0.0, Tail::Exponential { rate: 1.0 }).unwrap();
        assert!((e0.cdf(std::f64::consts::LN_2).unwrap() - 0.5).abs() < 1e-15);
        let p = MixedGainDistribution::new(0.25, Tail::Pareto { scale: 1.0, shape: 2.0 }).unwrap();
        assert!((p.cdf(2.0).unwrap() - 0.8125).abs() < 1e-15);
        assert_eq!(p.cdf(-1.0).unwrap(), 0.0);
    }

    #[test]
    fn normal_control_leaks_below_zero() {
        let n = MixedGainDistribution::new(0.2, Tail::Normal { mean: 0.0, std_dev: 1.0 }).unwrap();
        assert!((n.cdf(-50.0).unwrap()).abs() < 1e-12);
        assert!((n.cdf(-1e-12).unwrap() - 0.4).abs() < 1e-9);
    }

    #[test]
    fn degenerate_tail_queries() {
        let d = fit(&gains(&[0.0]), Family::Exponential).unwrap();
        assert_eq!(d.cdf(0.0).unwrap(), 1.0);
        assert_eq!(d.cdf(1.0), Err(DistError::DegenerateTail));
        assert!(MixedGainDistribution::new(1.5, Tail::Exponential { rate: 1.0 }).is_err());
        assert!(MixedGainDistribution::new(0.5, Tail::Pareto { scale: 0.0, shape: 1.0 }).is_err());
    }

    #[test]
    fn survival_positive_beyond_max() {
        let tails = [
            Tail::Exponential { rate: 2.0 },
            Tail::Pareto { scale: 1.0, shape: 3.0 },
            Tail::LogNormal { mu: 0.0, sigma: 0.5 },
        ];
        for tail in tails {
            let d = MixedGainDistribution::new(0.3, tail).unwrap();
            for g in [1.0, 10.0, 50.0] {
                assert!(d.survival(g).unwrap() > 0.0, "{tail:?} at {g}");
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let tails = [
            Tail::Exponential { rate: 2.0 },
            Tail::Pareto { scale: 1.5, shape: 3.0 },
            Tail::LogNormal { mu: 0.3, sigma: 0.5 },
            Tail::Uniform { upper: 4.0 },
            Tail::Normal { mean: 1.0, std_dev: 2.0 },
        ];
        for tail in tails {
            for p in [0.01, 0.3, 0.5, 0.9, 0.999] {
                let x = tail.quantile(p).unwrap();
                assert!((tail.cdf(x).unwrap() - p).abs() < 1e-9, "{tail:?} {p}");
            }
        }
    }

    #[test]
    fn report_flags() {
        let entries = |vals: &[f64]| {
            vals.iter()
                .enumerate()
                .map(|(i, &v)| (format!("x{i}"), GainPair::new(v, v).unwrap()))
                .collect::<Vec<_>>()
        };
        let small = GainSeries::new("n", entries(&[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        let reps = fit_report(&small, &Family::ALL, 1e-6, DEFAULT_ALPHA).unwrap();
        assert_eq!(reps.len(), 5);
        assert!(reps.iter().all(|r| r.verdict == Verdict::Insufficient));

        let zeros = GainSeries::new("z", entries(&[0.0; 12])).unwrap();
        let reps = fit_report(&zeros, &Family::ALL, 1e-6, DEFAULT_ALPHA).unwrap();
        for r in reps {
            let d = r.distribution.unwrap();
            assert_eq!(d.p0(), 1.0);
            assert!(d.tail().is_degenerate());
            assert_eq!(r.n_zero, 12);
        }
    }

    #[test]
    fn report_on_exponential_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let truth = MixedGainDistribution::new(0.3, Tail::Exponential { rate: 2.0 }).unwrap();
        let entries: Vec<_> = (0..500)
            .map(|i| {
                let g = truth.sample(&mut rng).unwrap();
                (format!("x{i}"), GainPair::new(g, g).unwrap())
            })
            .collect();
        let series = GainSeries::new("root", entries).unwrap();
        let reps = fit_report(&series, &[Family::Exponential], 1e-6, DEFAULT_ALPHA).unwrap();
        let r = &reps[0];
        let p0 = r.distribution.unwrap().p0();
        assert!((0.24..=0.36).contains(&p0), "{p0}");
        assert!(r.ks.unwrap().p_value > 0.05);
        assert_eq!(r.verdict, Verdict::NotRejected);
        assert_eq!(r.n_zero + r.n_nonzero, 500);
    }

    fn arb_dist() -> impl Strategy<Value = MixedGainDistribution> {
        let tail = prop_oneof![
            (0.01f64..10.0).prop_map(|rate| Tail::Exponential { rate }),
            (0.01f64..10.0, 0.1f64..5.0).prop_map(|(scale, shape)| Tail::Pareto { scale, shape }),
            (-2.0f64..2.0, 0.05f64..2.0).prop_map(|(mu, sigma)| Tail::LogNormal { mu, sigma }),
            (0.1f64..10.0).prop_map(|upper| Tail::Uniform { upper }),
            (-2.0f64..5.0, 0.1f64..3.0).prop_map(|(mean, std_dev)| Tail::Normal { mean, std_dev }),
        ];
        (0.0f64..=1.0, tail).prop_map(|(p0, t)| MixedGainDistribution::new(p0, t).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn cdf_is_monotone_and_bounded(d in arb_dist(), a in -5.0f64..50.0, w in 0.0f64..50.0) {
            let lo = d.cdf(a).unwrap();
            let hi = d.cdf(a + w).unwrap();
            prop_assert!(0.0 <= lo && lo <= hi + 1e-15 && hi <= 1.0);
        }

        #[test]
        fn mass_point_identity(d in arb_dist()) {
            if d.family() != Some(Family::Normal) {
                prop_assert_eq!(d.cdf(0.0).unwrap(), d.p0());
            }
        }
    }
}
