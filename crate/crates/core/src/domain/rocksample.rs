//! RockSample(n, k): a rover on an `n x n` grid with `k` rocks of unknown
//! quality, a long-range noisy sensor and an exit on the east edge.

use alloc::vec::Vec;
use rand::Rng;

use crate::model::{ActionId, GenerativeModel, ObservationId, ObservationSpace, Transition};
use crate::{Error, Result};

pub const NORTH: ActionId = 0;
pub const EAST: ActionId = 1;
pub const SOUTH: ActionId = 2;
pub const WEST: ActionId = 3;
pub const SAMPLE: ActionId = 4;
/// Action `CHECK_BASE + i` checks rock `i`.
pub const CHECK_BASE: ActionId = 5;

pub const OBS_NONE: ObservationId = 0;
pub const OBS_GOOD: ObservationId = 1;
pub const OBS_BAD: ObservationId = 2;

/// Distance at which the sensor is right with probability 0.75.
pub const DEFAULT_HALF_EFFICIENCY: f64 = 20.0;

const MAX_ROCKS: usize = 32;

const LAYOUT_11: [(u8, u8); 11] = [
    (0, 3),
    (0, 7),
    (1, 8),
    (2, 4),
    (3, 3),
    (3, 8),
    (4, 3),
    (5, 8),
    (6, 1),
    (9, 3),
    (9, 9),
];

const LAYOUT_15: [(u8, u8); 15] = [
    (1, 7),
    (1, 8),
    (5, 4),
    (6, 4),
    (7, 9),
    (7, 10),
    (8, 6),
    (9, 14),
    (10, 0),
    (11, 5),
    (11, 14),
    (12, 13),
    (13, 5),
    (14, 6),
    (14, 7),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RockSampleState {
    pub x: u8,
    pub y: u8,
    /// Bit `i` set when rock `i` is good.
    pub good: u32,
    /// Bit `i` set once rock `i` has been sampled; sampled rocks are bad.
    pub collected: u32,
    /// Set after leaving through the east edge.
    pub exited: bool,
}

impl RockSampleState {
    pub fn is_good(&self, rock: usize) -> bool {
        self.good & (1 << rock) != 0
    }

    pub fn is_collected(&self, rock: usize) -> bool {
        self.collected & (1 << rock) != 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RockSample {
    size: u8,
    start: (u8, u8),
    rocks: Vec<(u8, u8)>,
    half_efficiency: f64,
    discount: f64,
}

impl RockSample {
    /// Generic RockSample with an explicit layout; `rocks` must be distinct
    /// on-grid cells, at most 32 of them.
    pub fn new(size: u8, start: (u8, u8), rocks: &[(u8, u8)]) -> Result<Self> {
        if size == 0 || start.0 >= size || start.1 >= size {
            return Err(Error::InvalidConfig("start must lie on the grid"));
        }
        if rocks.len() > MAX_ROCKS {
            return Err(Error::InvalidConfig("at most 32 rocks"));
        }
        for (i, &(x, y)) in rocks.iter().enumerate() {
            if x >= size || y >= size {
                return Err(Error::InvalidConfig("rocks must lie on the grid"));
            }
            if rocks[..i].contains(&(x, y)) {
                return Err(Error::InvalidConfig("rocks must occupy distinct cells"));
            }
        }
        Ok(Self {
            size,
            start,
            rocks: rocks.to_vec(),
            half_efficiency: DEFAULT_HALF_EFFICIENCY,
            discount: 0.95,
        })
    }

    /// RockSample(11, 11) starting at `(0, 5)`.
    pub fn eleven_eleven() -> Self {
        Self::new(11, (0, 5), &LAYOUT_11).unwrap_or_else(|_| unreachable!("fixed layout is valid"))
    }

    /// RockSample(15, 15) starting at `(0, 7)`.
    pub fn fifteen_fifteen() -> Self {
        Self::new(15, (0, 7), &LAYOUT_15).unwrap_or_else(|_| unreachable!("fixed layout is valid"))
    }

    pub fn with_half_efficiency(mut self, distance: f64) -> Result<Self> {
        if !(distance.is_finite() && distance > 0.0) {
            return Err(Error::InvalidConfig("half-efficiency distance must be positive"));
        }
        self.half_efficiency = distance;
        Ok(self)
    }

    pub fn with_discount(mut self, discount: f64) -> Self {
        self.discount = discount;
        self
    }

    pub fn size(&self) -> u8 {
        self.size
    }

    pub fn rock_count(&self) -> usize {
        self.rocks.len()
    }

    pub fn rocks(&self) -> &[(u8, u8)] {
        &self.rocks
    }

    pub fn start(&self) -> (u8, u8) {
        self.start
    }

    /// `n^2 * 2^k`: every position combined with every rock-quality vector.
    pub fn state_count(&self) -> u64 {
        let cells = u64::from(self.size) * u64::from(self.size);
        cells << self.rocks.len()
    }

    /// Probability that a check reports the true quality of a rock at
    /// Euclidean distance `distance`.
    pub fn sensor_accuracy(&self, distance: f64) -> f64 {
        0.5 * (1.0 + libm::exp2(-distance / self.half_efficiency))
    }

    fn rock_at(&self, x: u8, y: u8) -> Option<usize> {
        self.rocks.iter().position(|&r| r == (x, y))
    }

    fn distance(&self, state: &RockSampleState, rock: usize) -> f64 {
        let (rx, ry) = self.rocks[rock];
        let dx = f64::from(rx) - f64::from(state.x);
        let dy = f64::from(ry) - f64::from(state.y);
        libm::sqrt(dx * dx + dy * dy)
    }

    fn is_legal(&self, state: &RockSampleState, action: ActionId) -> bool {
        if state.exited {
            return false;
        }
        match action {
            NORTH => state.y + 1 < self.size,
            EAST => true,
            SOUTH => state.y > 0,
            WEST => state.x > 0,
            SAMPLE => self.rock_at(state.x, state.y).is_some(),
            a => a - CHECK_BASE < self.rocks.len(),
        }
    }

    fn random_qualities<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let mask = if self.rocks.len() == MAX_ROCKS {
            u32::MAX
        } else {
            (1u32 << self.rocks.len()) - 1
        };
        rng.random::<u32>() & mask
    }
}

impl GenerativeModel for RockSample {
    type State = RockSampleState;

    fn action_count(&self) -> usize {
        CHECK_BASE + self.rocks.len()
    }

    fn observation_space(&self) -> ObservationSpace {
        ObservationSpace::Finite(3)
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn reward_range(&self) -> f64 {
        20.0
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> RockSampleState {
        RockSampleState {
            x: self.start.0,
            y: self.start.1,
            good: self.random_qualities(rng),
            collected: 0,
            exited: false,
        }
    }

    fn is_terminal(&self, state: &RockSampleState) -> bool {
        state.exited
    }

    fn legal_actions(&self, state: &RockSampleState, out: &mut Vec<ActionId>) {
        out.clear();
        out.extend((0..self.action_count()).filter(|&a| self.is_legal(state, a)));
    }

    fn step<R: Rng + ?Sized>(
        &self,
        state: &mut RockSampleState,
        action: ActionId,
        rng: &mut R,
    ) -> Result<Transition> {
        if !self.is_legal(state, action) {
            return Err(Error::IllegalAction(action));
        }
        let mut t = Transition {
            observation: OBS_NONE,
            reward: 0.0,
            terminal: false,
        };
        match action {
            NORTH => state.y += 1,
            SOUTH => state.y -= 1,
            WEST => state.x -= 1,
            EAST if state.x + 1 == self.size => {
                state.exited = true;
                t.reward = 10.0;
                t.terminal = true;
            }
            EAST => state.x += 1,
            SAMPLE => {
                let rock = self
                    .rock_at(state.x, state.y)
                    .unwrap_or_else(|| unreachable!("legality checked"));
                t.reward = if state.is_good(rock) { 10.0 } else { -10.0 };
                state.good &= !(1 << rock);
                state.collected |= 1 << rock;
            }
            check => {
                let rock = check - CHECK_BASE;
                let correct = rng.random::<f64>() < self.sensor_accuracy(self.distance(state, rock));
                t.observation = if state.is_good(rock) == correct {
                    OBS_GOOD
                } else {
                    OBS_BAD
                };
            }
        }
        Ok(t)
    }

    /// Keeps the position reached by `action` and the sampled rocks, and
    /// redraws every other quality. A checked rock is redrawn from its
    /// posterior under a uniform prior given the reported quality.
    fn recover_particle<R: Rng + ?Sized>(
        &self,
        previous: &RockSampleState,
        action: ActionId,
        observation: ObservationId,
        rng: &mut R,
    ) -> Option<RockSampleState> {
        let mut state = *previous;
        self.step(&mut state, action, rng).ok()?;
        state.good = self.random_qualities(rng) & !state.collected;
        if let Some(rock) = action.checked_sub(CHECK_BASE) {
            if !state.is_collected(rock) && observation != OBS_NONE {
                let accuracy = self.sensor_accuracy(self.distance(&state, rock));
                let matches = rng.random::<f64>() < accuracy;
                let good = (observation == OBS_GOOD) == matches;
                state.good = (state.good & !(1 << rock)) | (u32::from(good) << rock);
            }
        }
        Some(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn at(x: u8, y: u8, good: u32) -> RockSampleState {
        RockSampleState {
            x,
            y,
            good,
            collected: 0,
            exited: false,
        }
    }

    #[test]
    fn cardinalities() {
        let small = RockSample::eleven_eleven();
        assert_eq!(small.action_count(), 16);
        assert_eq!(small.observation_space(), ObservationSpace::Finite(3));
        assert_eq!(small.state_count(), 247_808);
        let large = RockSample::fifteen_fifteen();
        assert_eq!(large.action_count(), 20);
        assert_eq!(large.observation_space(), ObservationSpace::Finite(3));
        assert_eq!(large.state_count(), 7_372_800);
    }

    #[test]
    fn sensor_accuracy_decays_to_chance() {
        let m = RockSample::eleven_eleven();
        assert_eq!(m.sensor_accuracy(0.0), 1.0);
        assert!((m.sensor_accuracy(20.0) - 0.75).abs() < 1e-15);
        let mut last = 1.0;
        for i in 1..200 {
            let a = m.sensor_accuracy(f64::from(i) * 0.5);
            assert!(a <= last && a > 0.5);
            last = a;
        }
        assert!((m.sensor_accuracy(1e4) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sampling_rewards_and_spoils_rocks() {
        let m = RockSample::eleven_eleven();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // rock 0 sits at (0, 3)
        let mut s = at(0, 3, 0b1);
        let t = m.step(&mut s, SAMPLE, &mut rng).unwrap();
        assert_eq!((t.reward, t.observation, t.terminal), (10.0, OBS_NONE, false));
        assert!(!s.is_good(0) && s.is_collected(0));
        assert_eq!(m.step(&mut s, SAMPLE, &mut rng).unwrap().reward, -10.0);
        let mut off = at(1, 1, 0);
        assert_eq!(m.step(&mut off, SAMPLE, &mut rng), Err(Error::IllegalAction(SAMPLE)));
    }

    #[test]
    fn movement_and_east_exit() {
        let m = RockSample::eleven_eleven();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut legal = Vec::new();
        m.legal_actions(&at(0, 0, 0), &mut legal);
        assert!(!legal.contains(&SOUTH) && !legal.contains(&WEST));
        assert!(legal.contains(&NORTH) && legal.contains(&EAST));
        m.legal_actions(&at(0, 10, 0), &mut legal);
        assert!(!legal.contains(&NORTH));
        let mut s = at(10, 4, 0);
        let t = m.step(&mut s, EAST, &mut rng).unwrap();
        assert_eq!((t.reward, t.terminal), (10.0, true));
        assert!(m.is_terminal(&s));
        m.legal_actions(&s, &mut legal);
        assert!(legal.is_empty());
        let mut s = at(3, 4, 0);
        for (a, (x, y)) in [(NORTH, (3, 5)), (EAST, (4, 5)), (SOUTH, (4, 4)), (WEST, (3, 4))] {
            let t = m.step(&mut s, a, &mut rng).unwrap();
            assert_eq!((s.x, s.y, t.reward), (x, y, 0.0));
        }
    }

    #[test]
    fn adjacent_check_is_nearly_exact() {
        let m = RockSample::eleven_eleven();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut right = 0;
        for _ in 0..10_000 {
            let mut s = at(0, 3, 0b1);
            let t = m.step(&mut s, CHECK_BASE, &mut rng).unwrap();
            right += usize::from(t.observation == OBS_GOOD);
        }
        assert_eq!(right, 10_000);
        // rock 10 at (9, 9) from (0, 3): d = sqrt(117)
        let p = m.sensor_accuracy(117f64.sqrt());
        let mut right = 0;
        for _ in 0..20_000 {
            let mut s = at(0, 3, 0);
            right += usize::from(m.step(&mut s, CHECK_BASE + 10, &mut rng).unwrap().observation == OBS_BAD);
        }
        let sd = (20_000.0 * p * (1.0 - p)).sqrt();
        assert!((right as f64 - 20_000.0 * p).abs() < 4.0 * sd);
    }

    #[test]
    fn recovery_keeps_known_facts() {
        let m = RockSample::eleven_eleven();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut prev = at(0, 3, 0b111);
        prev.collected = 0b10;
        prev.good &= !0b10;
        for _ in 0..100 {
            let s = m.recover_particle(&prev, NORTH, OBS_NONE, &mut rng).unwrap();
            assert_eq!((s.x, s.y, s.collected), (0, 4, 0b10));
            assert!(!s.is_good(1));
        }
        assert!(m.recover_particle(&at(0, 0, 0), SOUTH, OBS_NONE, &mut rng).is_none());
    }

    #[test]
    fn layouts_are_valid() {
        assert!(RockSample::new(3, (0, 0), &[(1, 1), (1, 1)]).is_err());
        assert!(RockSample::new(3, (0, 0), &[(3, 1)]).is_err());
        assert!(RockSample::new(3, (3, 0), &[]).is_err());
        assert_eq!(RockSample::eleven_eleven().start(), (0, 5));
        assert_eq!(RockSample::fifteen_fifteen().start(), (0, 7));
    }
}
