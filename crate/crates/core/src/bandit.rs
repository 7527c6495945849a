//! Multi-armed bandit action selection over a finite arm set.
//!
//! Arms are identified by their index into a statistics slice. Every
//! selection routine takes the list of currently legal arm indices; arms not
//! in that list are never read and never returned.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::model::ActionId;
use crate::{Error, Result};

/// Running sufficient statistics of the returns observed for one arm.
///
/// `variance` is the biased sample variance (division by `count`), which is
/// the quantity the Normal-Gamma posterior consumes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmStatistics {
    count: u64,
    mean: f64,
    variance: f64,
}

impl ArmStatistics {
    pub const EMPTY: Self = Self {
        count: 0,
        mean: 0.0,
        variance: 0.0,
    };

    pub fn from_parts(count: u64, mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::NonFinite(mean));
        }
        if !variance.is_finite() {
            return Err(Error::NonFinite(variance));
        }
        if variance < 0.0 {
            return Err(Error::NegativeVariance(variance));
        }
        if count == 0 {
            return Ok(Self::EMPTY);
        }
        Ok(Self {
            count,
            mean,
            variance,
        })
    }

    #[inline]
    pub fn count(&self) -> u64 {
        self.count
    }

    #[inline]
    pub fn mean(&self) -> f64 {
        self.mean
    }

    #[inline]
    pub fn variance(&self) -> f64 {
        self.variance
    }

    #[inline]
    pub fn is_visited(&self) -> bool {
        self.count > 0
    }

    /// Folds one observed return into the statistics.
    ///
    /// Mean and biased variance follow the incremental recurrences
    /// `m' = m + (v - m) / n` and `s' = s + ((v - m)(v - m') - s) / n`,
    /// where `n` is the count after the increment.
    pub fn update(&mut self, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFinite(value));
        }
        self.count += 1;
        let n = self.count as f64;
        let old_mean = self.mean;
        self.mean = old_mean + (value - old_mean) / n;
        let spread = (value - old_mean) * (value - self.mean);
        // spread is non-negative in exact arithmetic; the clamp absorbs
        // rounding when consecutive values coincide.
        self.variance = (self.variance + (spread - self.variance) / n).max(0.0);
        Ok(())
    }
}

/// Value-returning form of [`ArmStatistics::update`].
pub fn update_arm(stats: ArmStatistics, value: f64) -> Result<ArmStatistics> {
    let mut next = stats;
    next.update(value)?;
    Ok(next)
}

/// Parameters `(mu, lambda, alpha, beta)` of a Normal-Gamma distribution
/// over the mean and precision of a Normal likelihood.
///
/// The precision follows `Gamma(alpha, beta)` with `beta` a rate, so its
/// expectation is `alpha / beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalGammaParams {
    mu: f64,
    lambda: f64,
    alpha: f64,
    beta: f64,
}

impl NormalGammaParams {
    /// Requires `lambda > 0`, `alpha >= 1` and `beta >= 0`, all finite.
    pub fn new(mu: f64, lambda: f64, alpha: f64, beta: f64) -> Result<Self> {
        let finite = mu.is_finite() && lambda.is_finite() && alpha.is_finite() && beta.is_finite();
        if !finite || lambda <= 0.0 || alpha < 1.0 || beta < 0.0 {
            return Err(Error::InvalidPrior {
                mu,
                lambda,
                alpha,
                beta,
            });
        }
        Ok(Self {
            mu,
            lambda,
            alpha,
            beta,
        })
    }

    /// The uninformative prior used throughout the experiments:
    /// `mu = 0`, `lambda = 0.01`, `alpha = 1` and the given `beta`.
    pub fn uninformative(beta: f64) -> Result<Self> {
        Self::new(0.0, 0.01, 1.0, beta)
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Closed-form conjugate posterior of `prior` after the observations
/// summarized by `stats`. With no observations the prior is returned as is.
pub fn posterior(prior: &NormalGammaParams, stats: &ArmStatistics) -> NormalGammaParams {
    if stats.count == 0 {
        return *prior;
    }
    let n = stats.count as f64;
    let lambda0 = prior.lambda;
    let lambda1 = lambda0 + n;
    let deviation = stats.mean - prior.mu;
    NormalGammaParams {
        mu: (lambda0 * prior.mu + n * stats.mean) / lambda1,
        lambda: lambda1,
        alpha: prior.alpha + 0.5 * n,
        beta: prior.beta
            + 0.5 * (n * stats.variance + lambda0 * n * deviation * deviation / lambda1),
    }
}

/// Draws `(mu, tau)` from `NG(mu, lambda, alpha, beta)`: first
/// `tau ~ Gamma(alpha, rate = beta)`, then `mu ~ Normal(mu, 1 / (lambda tau))`.
///
/// A zero rate puts all precision mass at infinity; the sample is then
/// `(mu, +inf)`.
pub fn sample_normal_gamma<R: Rng + ?Sized>(params: &NormalGammaParams, rng: &mut R) -> (f64, f64) {
    let scale = 1.0 / params.beta;
    if !scale.is_finite() {
        return (params.mu, f64::INFINITY);
    }
    let tau = match Gamma::new(params.alpha, scale) {
        Ok(gamma) => gamma.sample(rng),
        // alpha >= 1 and a finite positive scale are always accepted.
        Err(_) => unreachable!("validated Normal-Gamma parameters"),
    };
    let z: f64 = StandardNormal.sample(rng);
    let precision = params.lambda * tau;
    (params.mu + z / libm::sqrt(precision), tau)
}

#[inline]
fn check_arm(arm: ActionId, arms: usize) -> Result<()> {
    if arm >= arms {
        return Err(Error::ArmOutOfRange { arm, arms });
    }
    Ok(())
}

/// Thompson Sampling over the legal arms: infer each arm's posterior, draw a
/// mean from it and return the arm with the largest draw. Exact ties go to
/// the lowest arm index.
pub fn thompson_select<R: Rng + ?Sized>(
    arms: &[ArmStatistics],
    legal: &[ActionId],
    prior: &NormalGammaParams,
    rng: &mut R,
) -> Result<ActionId> {
    let mut best: Option<(ActionId, f64)> = None;
    for &arm in legal {
        check_arm(arm, arms.len())?;
        let (mu, _) = sample_normal_gamma(&posterior(prior, &arms[arm]), rng);
        best = match best {
            Some((best_arm, best_mu)) if best_mu > mu || (best_mu == mu && best_arm < arm) => {
                Some((best_arm, best_mu))
            }
            _ => Some((arm, mu)),
        };
    }
    best.map(|(arm, _)| arm).ok_or(Error::EmptyLegalSet)
}

/// Exploration constant `c` of UCB1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UcbConfig {
    exploration: f64,
}

impl UcbConfig {
    pub fn new(exploration: f64) -> Result<Self> {
        if !exploration.is_finite() || exploration < 0.0 {
            return Err(Error::InvalidExploration(exploration));
        }
        Ok(Self { exploration })
    }

    #[inline]
    pub fn exploration(&self) -> f64 {
        self.exploration
    }

    /// `mean + c * sqrt(ln(total) / count)`; unvisited arms score `+inf`.
    pub fn score(&self, stats: &ArmStatistics, total_count: u64) -> f64 {
        if stats.count == 0 {
            return f64::INFINITY;
        }
        let total = total_count.max(1) as f64;
        stats.mean + self.exploration * libm::sqrt(libm::log(total) / stats.count as f64)
    }
}

/// UCB1 over the legal arms. Unvisited legal arms are always preferred;
/// ties (including among unvisited arms) are broken uniformly at random.
pub fn ucb1_select<R: Rng + ?Sized>(
    arms: &[ArmStatistics],
    legal: &[ActionId],
    config: &UcbConfig,
    total_count: u64,
    rng: &mut R,
) -> Result<ActionId> {
    let mut best = f64::NEG_INFINITY;
    let mut chosen = None;
    let mut ties = 0u32;
    for &arm in legal {
        check_arm(arm, arms.len())?;
        let score = config.score(&arms[arm], total_count);
        if chosen.is_none() || score > best {
            best = score;
            chosen = Some(arm);
            ties = 1;
        } else if score == best {
            // reservoir sampling keeps each tied arm with probability 1/ties
            ties += 1;
            if rng.random_range(0..ties) == 0 {
                chosen = Some(arm);
            }
        }
    }
    chosen.ok_or(Error::EmptyLegalSet)
}

/// Selection rule applied at a bandit node. `arms` holds statistics for
/// every action of the node; `legal` lists the arms admissible right now.
pub trait ArmSelector {
    fn select<R: Rng + ?Sized>(
        &self,
        arms: &[ArmStatistics],
        legal: &[ActionId],
        rng: &mut R,
    ) -> Result<ActionId>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThompsonSampling {
    pub prior: NormalGammaParams,
}

impl ArmSelector for ThompsonSampling {
    fn select<R: Rng + ?Sized>(
        &self,
        arms: &[ArmStatistics],
        legal: &[ActionId],
        rng: &mut R,
    ) -> Result<ActionId> {
        thompson_select(arms, legal, &self.prior, rng)
    }
}

/// UCB1 where `N_total` is the node's visit count, i.e. the sum of all arm
/// counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ucb1 {
    pub config: UcbConfig,
}

impl ArmSelector for Ucb1 {
    fn select<R: Rng + ?Sized>(
        &self,
        arms: &[ArmStatistics],
        legal: &[ActionId],
        rng: &mut R,
    ) -> Result<ActionId> {
        let total = arms.iter().map(ArmStatistics::count).sum();
        ucb1_select(arms, legal, &self.config, total, rng)
    }
}
