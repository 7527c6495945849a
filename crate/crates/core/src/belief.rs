//! Belief tracking: a rejection particle filter for generative models and an
//! exact Bayes filter for models small enough to enumerate.

use alloc::vec::Vec;
use rand::Rng;

use crate::model::{ActionId, GenerativeModel, ObservationId};
use crate::{Error, Result};

/// Simulation attempts granted per accepted particle by
/// [`default_max_attempts`].
pub const ATTEMPTS_PER_PARTICLE: usize = 100;

pub fn default_max_attempts(capacity: usize) -> usize {
    capacity.saturating_mul(ATTEMPTS_PER_PARTICLE)
}

/// A multiset of at most `capacity` sampled states approximating the
/// belief of the current history.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefParticles<S> {
    particles: Vec<S>,
    capacity: usize,
}

impl<S: Clone> BeliefParticles<S> {
    /// Draws `capacity` particles from the model's initial belief.
    pub fn from_initial<M, R>(model: &M, capacity: usize, rng: &mut R) -> Result<Self>
    where
        M: GenerativeModel<State = S>,
        R: Rng + ?Sized,
    {
        if capacity == 0 {
            return Err(Error::InvalidConfig("particle capacity must be positive"));
        }
        let particles = (0..capacity).map(|_| model.sample_initial(rng)).collect();
        Ok(Self {
            particles,
            capacity,
        })
    }

    pub fn from_particles(particles: Vec<S>, capacity: usize) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::EmptyBelief);
        }
        if particles.len() > capacity {
            return Err(Error::InvalidConfig("more particles than capacity"));
        }
        Ok(Self {
            particles,
            capacity,
        })
    }
}

impl<S> BeliefParticles<S> {
    pub fn particles(&self) -> &[S] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Uniform draw from the multiset.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&S> {
        if self.particles.is_empty() {
            return Err(Error::EmptyBelief);
        }
        Ok(&self.particles[rng.random_range(0..self.particles.len())])
    }
}

/// Rejection update after executing `action` and receiving `observed`.
///
/// Particles are drawn from `belief` with replacement and simulated with
/// `action`; a successor is kept only when its simulated observation equals
/// `observed`. Sampling stops once `belief.capacity()` successors are kept
/// or `max_attempts` simulations have been spent. Particles in which
/// `action` is illegal count as rejected attempts.
pub fn particle_update<M, R>(
    belief: &BeliefParticles<M::State>,
    action: ActionId,
    observed: ObservationId,
    model: &M,
    rng: &mut R,
    max_attempts: usize,
) -> Result<BeliefParticles<M::State>>
where
    M: GenerativeModel,
    R: Rng + ?Sized,
{
    if belief.is_empty() {
        return Err(Error::EmptyBelief);
    }
    let capacity = belief.capacity;
    let mut accepted = Vec::with_capacity(capacity);
    let mut attempts = 0;
    while accepted.len() < capacity && attempts < max_attempts {
        attempts += 1;
        let mut state = belief.sample(rng)?.clone();
        match model.step(&mut state, action, rng) {
            Ok(t) if t.observation == observed => accepted.push(state),
            _ => {}
        }
    }
    if accepted.is_empty() {
        return Err(Error::ParticleDeprivation {
            observation: observed,
            attempts,
        });
    }
    Ok(BeliefParticles {
        particles: accepted,
        capacity,
    })
}

/// Explicit transition and observation probabilities of a finite model,
/// indexed by dense state ids.
pub trait EnumerableModel {
    fn state_count(&self) -> usize;

    /// `P(to | from, action)`.
    fn transition_probability(&self, from: usize, action: ActionId, to: usize) -> f64;

    /// `Omega(observation | to, action)`.
    fn observation_probability(&self, to: usize, action: ActionId, observation: ObservationId) -> f64;
}

/// Dense tables for small hand-specified models.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTables {
    states: usize,
    actions: usize,
    observations: usize,
    /// `[from][action][to]`
    transition: Vec<f64>,
    /// `[to][action][observation]`
    observation: Vec<f64>,
}

impl ModelTables {
    /// Rows of both tables must sum to one within `1e-9`.
    pub fn new(
        states: usize,
        actions: usize,
        observations: usize,
        transition: Vec<f64>,
        observation: Vec<f64>,
    ) -> Result<Self> {
        if transition.len() != states * actions * states
            || observation.len() != states * actions * observations
        {
            return Err(Error::InvalidConfig("table dimensions do not match"));
        }
        let rows_ok = |table: &[f64], width: usize| {
            table.chunks(width).all(|row| {
                row.iter().all(|&p| p >= 0.0 && p.is_finite())
                    && libm::fabs(row.iter().sum::<f64>() - 1.0) <= 1e-9
            })
        };
        if !rows_ok(&transition, states) || !rows_ok(&observation, observations) {
            return Err(Error::InvalidConfig("table rows must be probability vectors"));
        }
        Ok(Self {
            states,
            actions,
            observations,
            transition,
            observation,
        })
    }
}

impl EnumerableModel for ModelTables {
    fn state_count(&self) -> usize {
        self.states
    }

    fn transition_probability(&self, from: usize, action: ActionId, to: usize) -> f64 {
        self.transition[(from * self.actions + action) * self.states + to]
    }

    fn observation_probability(&self, to: usize, action: ActionId, observation: ObservationId) -> f64 {
        self.observation[(to * self.actions + action) * self.observations + observation]
    }
}

/// A normalized probability vector over the states of an enumerable model.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactBelief {
    probabilities: Vec<f64>,
}

impl ExactBelief {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        let valid = !probabilities.is_empty()
            && probabilities.iter().all(|&p| p >= 0.0 && p.is_finite())
            && libm::fabs(probabilities.iter().sum::<f64>() - 1.0) <= 1e-9;
        if !valid {
            return Err(Error::InvalidConfig("belief must be a probability vector"));
        }
        Ok(Self { probabilities })
    }

    pub fn uniform(states: usize) -> Result<Self> {
        if states == 0 {
            return Err(Error::InvalidConfig("belief needs at least one state"));
        }
        Ok(Self {
            probabilities: alloc::vec![1.0 / states as f64; states],
        })
    }

    /// Empirical distribution of `state_ids` over `states` states.
    pub fn from_samples<I: IntoIterator<Item = usize>>(states: usize, state_ids: I) -> Result<Self> {
        let mut counts = alloc::vec![0usize; states];
        let mut total = 0usize;
        for id in state_ids {
            if id >= states {
                return Err(Error::InvalidConfig("state id out of range"));
            }
            counts[id] += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::EmptyBelief);
        }
        Ok(Self {
            probabilities: counts.into_iter().map(|c| c as f64 / total as f64).collect(),
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, state: usize) -> f64 {
        self.probabilities.get(state).copied().unwrap_or(0.0)
    }

    /// `0.5 * sum |p - q|` over the union of both supports.
    pub fn total_variation(&self, other: &ExactBelief) -> f64 {
        let n = self.probabilities.len().max(other.probabilities.len());
        0.5 * (0..n)
            .map(|s| libm::fabs(self.probability(s) - other.probability(s)))
            .sum::<f64>()
    }
}

/// Bayes filter: `b'(s') ∝ Omega(o | s', a) * sum_s P(s' | s, a) b(s)`.
pub fn exact_belief_update<M: EnumerableModel + ?Sized>(
    belief: &ExactBelief,
    action: ActionId,
    observed: ObservationId,
    model: &M,
) -> Result<ExactBelief> {
    let states = model.state_count();
    if belief.probabilities.len() != states {
        return Err(Error::InvalidConfig("belief size does not match the model"));
    }
    let mut next: Vec<f64> = (0..states)
        .map(|to| {
            let predicted: f64 = belief
                .probabilities
                .iter()
                .enumerate()
                .map(|(from, &p)| model.transition_probability(from, action, to) * p)
                .sum();
            model.observation_probability(to, action, observed) * predicted
        })
        .collect();
    let normalizer: f64 = next.iter().sum();
    if normalizer <= 0.0 || !normalizer.is_finite() {
        return Err(Error::ImpossibleObservation(observed));
    }
    for p in &mut next {
        *p /= normalizer;
    }
    Ok(ExactBelief {
        probabilities: next,
    })
}
