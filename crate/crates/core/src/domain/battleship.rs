//! Battleship: five hidden ships of lengths 1 to 5 on a 10 x 10 grid.
//!
//! Cells are numbered `y * 10 + x`; the action firing at a cell has the
//! cell's number as id.

use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{ActionId, GenerativeModel, ObservationId, ObservationSpace, Transition};
use crate::{Error, Result};

pub const GRID: u8 = 10;
pub const CELLS: usize = 100;
pub const SHIP_LENGTHS: [u8; 5] = [5, 4, 3, 2, 1];
pub const SHIP_CELLS: u32 = 15;

pub const OBS_MISS: ObservationId = 0;
pub const OBS_HIT: ObservationId = 1;

/// Search steps one recovery attempt may spend before giving up.
const RECOVERY_STEPS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Ship {
    pub x: u8,
    pub y: u8,
    pub horizontal: bool,
    pub length: u8,
}

impl Ship {
    /// Cell mask; the ship must fit on the grid.
    pub fn mask(&self) -> u128 {
        let mut m = 0u128;
        for i in 0..self.length {
            let (x, y) = if self.horizontal {
                (self.x + i, self.y)
            } else {
                (self.x, self.y + i)
            };
            m |= 1u128 << cell(x, y);
        }
        m
    }

    fn fits(&self) -> bool {
        if self.horizontal {
            self.x + self.length <= GRID && self.y < GRID
        } else {
            self.y + self.length <= GRID && self.x < GRID
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BattleshipState {
    pub ships: [Ship; 5],
    /// Union of the ship masks.
    pub occupied: u128,
    pub fired: u128,
}

impl BattleshipState {
    pub fn hits(&self) -> u128 {
        self.occupied & self.fired
    }

    pub fn misses(&self) -> u128 {
        self.fired & !self.occupied
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Battleship {
    /// Forbid ships from touching, diagonals included.
    pub no_adjacent_ships: bool,
}

fn cell(x: u8, y: u8) -> usize {
    usize::from(y) * usize::from(GRID) + usize::from(x)
}

/// Every cell of `mask` together with its eight neighbours.
fn dilate(mask: u128) -> u128 {
    let mut out = 0u128;
    for c in 0..CELLS {
        if mask & (1u128 << c) == 0 {
            continue;
        }
        let (x, y) = ((c % 10) as i32, (c / 10) as i32);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if (0..10).contains(&nx) && (0..10).contains(&ny) {
                    out |= 1u128 << (ny * 10 + nx);
                }
            }
        }
    }
    out
}

/// Every on-grid placement of a ship of `length`.
fn placements(length: u8) -> impl Iterator<Item = Ship> {
    (0..GRID).flat_map(move |y| {
        (0..GRID).flat_map(move |x| {
            [true, false].into_iter().filter_map(move |horizontal| {
                let ship = Ship { x, y, horizontal, length };
                (ship.fits() && (length > 1 || horizontal)).then_some(ship)
            })
        })
    })
}

impl Battleship {
    pub fn new(no_adjacent_ships: bool) -> Self {
        Self { no_adjacent_ships }
    }

    /// Cells a new ship may not touch given the ships in `occupied`.
    fn blocked(&self, occupied: u128) -> u128 {
        if self.no_adjacent_ships {
            dilate(occupied)
        } else {
            occupied
        }
    }

    fn random_ship<R: Rng + ?Sized>(length: u8, rng: &mut R) -> Ship {
        let horizontal = length == 1 || rng.random::<bool>();
        let (w, h) = if horizontal { (GRID - length + 1, GRID) } else { (GRID, GRID - length + 1) };
        Ship {
            x: rng.random_range(0..w),
            y: rng.random_range(0..h),
            horizontal,
            length,
        }
    }

    /// Joint rejection sampling: all five ships are redrawn until the whole
    /// placement is valid, which makes it uniform over valid placements.
    pub fn sample_ships<R: Rng + ?Sized>(&self, rng: &mut R) -> ([Ship; 5], u128) {
        'retry: loop {
            let mut ships = [Ship { x: 0, y: 0, horizontal: true, length: 0 }; 5];
            let mut occupied = 0u128;
            for (slot, &length) in ships.iter_mut().zip(SHIP_LENGTHS.iter()) {
                let ship = Self::random_ship(length, rng);
                let mask = ship.mask();
                if mask & self.blocked(occupied) != 0 {
                    continue 'retry;
                }
                occupied |= mask;
                *slot = ship;
            }
            return (ships, occupied);
        }
    }

    /// Randomized depth-first search for a placement that covers every cell
    /// of `hits`, avoids every cell of `misses` and respects the adjacency
    /// rule. Uncovered hits are resolved first, each by a ship through it.
    pub fn sample_consistent<R: Rng + ?Sized>(
        &self,
        hits: u128,
        misses: u128,
        rng: &mut R,
    ) -> Option<([Ship; 5], u128)> {
        let mut search = Search {
            game: self,
            hits,
            misses,
            ships: [None; 5],
            steps: 0,
        };
        if !search.run(0, rng) {
            return None;
        }
        let mut ships = [Ship { x: 0, y: 0, horizontal: true, length: 0 }; 5];
        let mut occupied = 0u128;
        for (slot, ship) in ships.iter_mut().zip(search.ships) {
            let ship = ship?;
            occupied |= ship.mask();
            *slot = ship;
        }
        Some((ships, occupied))
    }
}

struct Search<'a> {
    game: &'a Battleship,
    hits: u128,
    misses: u128,
    ships: [Option<Ship>; 5],
    steps: usize,
}

impl Search<'_> {
    fn occupied(&self) -> u128 {
        self.ships.iter().flatten().fold(0, |m, s| m | s.mask())
    }

    fn run<R: Rng + ?Sized>(&mut self, placed: usize, rng: &mut R) -> bool {
        self.steps += 1;
        if self.steps > RECOVERY_STEPS {
            return false;
        }
        let occupied = self.occupied();
        let uncovered = self.hits & !occupied;
        if placed == SHIP_LENGTHS.len() {
            return uncovered == 0;
        }
        let free: Vec<usize> = (0..5).filter(|&i| self.ships[i].is_none()).collect();
        let capacity: u32 = free.iter().map(|&i| u32::from(SHIP_LENGTHS[i])).sum();
        if uncovered.count_ones() > capacity {
            return false;
        }
        let forbidden = self.misses | self.game.blocked(occupied);
        let mut options: Vec<(usize, Ship)> = Vec::new();
        if uncovered != 0 {
            let target = uncovered.trailing_zeros() as usize;
            for &i in &free {
                options.extend(
                    placements(SHIP_LENGTHS[i])
                        .filter(|s| s.mask() & (1u128 << target) != 0)
                        .filter(|s| s.mask() & forbidden == 0)
                        .map(|s| (i, s)),
                );
            }
        } else {
            let i = free[0];
            options.extend(
                placements(SHIP_LENGTHS[i])
                    .filter(|s| s.mask() & forbidden == 0)
                    .map(|s| (i, s)),
            );
        }
        options.shuffle(rng);
        for (i, ship) in options {
            self.ships[i] = Some(ship);
            if self.run(placed + 1, rng) {
                return true;
            }
            self.ships[i] = None;
            if self.steps > RECOVERY_STEPS {
                return false;
            }
        }
        false
    }
}

impl GenerativeModel for Battleship {
    type State = BattleshipState;

    fn action_count(&self) -> usize {
        CELLS
    }

    fn observation_space(&self) -> ObservationSpace {
        ObservationSpace::Finite(2)
    }

    fn discount(&self) -> f64 {
        1.0
    }

    fn reward_range(&self) -> f64 {
        101.0
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> BattleshipState {
        let (ships, occupied) = self.sample_ships(rng);
        BattleshipState {
            ships,
            occupied,
            fired: 0,
        }
    }

    fn is_terminal(&self, state: &BattleshipState) -> bool {
        state.occupied & !state.fired == 0
    }

    fn legal_actions(&self, state: &BattleshipState, out: &mut Vec<ActionId>) {
        out.clear();
        if self.is_terminal(state) {
            return;
        }
        out.extend((0..CELLS).filter(|&c| state.fired & (1u128 << c) == 0));
    }

    fn step<R: Rng + ?Sized>(
        &self,
        state: &mut BattleshipState,
        action: ActionId,
        _rng: &mut R,
    ) -> Result<Transition> {
        if action >= CELLS || state.fired & (1u128 << action) != 0 || self.is_terminal(state) {
            return Err(Error::IllegalAction(action));
        }
        let bit = 1u128 << action;
        state.fired |= bit;
        let hit = state.occupied & bit != 0;
        let terminal = self.is_terminal(state);
        let mut reward = -1.0;
        if hit {
            reward += 1.0;
        }
        if terminal {
            reward += 100.0;
        }
        Ok(Transition {
            observation: if hit { OBS_HIT } else { OBS_MISS },
            reward,
            terminal,
        })
    }

    /// Redraws the ships consistently with every shot fired so far,
    /// including `action` with outcome `observation`.
    fn recover_particle<R: Rng + ?Sized>(
        &self,
        previous: &BattleshipState,
        action: ActionId,
        observation: ObservationId,
        rng: &mut R,
    ) -> Option<BattleshipState> {
        if action >= CELLS {
            return None;
        }
        let bit = 1u128 << action;
        let mut hits = previous.hits() & !bit;
        let mut misses = previous.misses() & !bit;
        if observation == OBS_HIT {
            hits |= bit;
        } else {
            misses |= bit;
        }
        let (ships, occupied) = self.sample_consistent(hits, misses, rng)?;
        Some(BattleshipState {
            ships,
            occupied,
            fired: previous.fired | bit,
        })
    }
}
