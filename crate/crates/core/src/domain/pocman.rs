//! PocMan: a partially observable Pac-Man on a 17 x 19 maze with four
//! ghosts. The agent perceives only a local 10-bit percept each step.

use alloc::vec::Vec;
use rand::Rng;

use crate::model::{ActionId, GenerativeModel, ObservationId, ObservationSpace, Transition};
use crate::{Error, Result};

pub const WIDTH: usize = 17;
pub const HEIGHT: usize = 19;
const CELLS: usize = WIDTH * HEIGHT;
const FOOD_WORDS: usize = CELLS.div_ceil(64);

pub const NORTH: ActionId = 0;
pub const EAST: ActionId = 1;
pub const SOUTH: ActionId = 2;
pub const WEST: ActionId = 3;

pub const GHOSTS: usize = 4;
pub const PERCEPTS: usize = 1 << 10;

/// `#` wall, `.` corridor that may hold food, `o` power pill, `G` ghost
/// home, `P` agent start and ` ` empty corridor. Row 0 is the north edge.
const MAZE: [&str; HEIGHT] = [
    "o.......#.......o",
    ".##.###.#.###.##.",
    ".................",
    ".##.#.#####.#.##.",
    "....#...#...#....",
    "###.###.#.###.###",
    "###.#.......#.###",
    "###.#.##G##.#.###",
    "....#.#GGG#.#....",
    "###.#.#####.#.###",
    "###.#.......#.###",
    "###.#.#####.#.###",
    "........#........",
    ".##.###.#.###.##.",
    "o.#.....P.....#.o",
    "#.#.#.#####.#.#.#",
    "....#...#...#....",
    ".######.#.######.",
    ".................",
];

const NO_CELL: u16 = u16::MAX;
const NO_DIRECTION: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PocManParams {
    /// Manhattan distance within which a ghost notices the agent.
    pub chase_range: u32,
    pub chase_probability: f64,
    /// Probability that a ghost flees a powered agent.
    pub flee_probability: f64,
    /// Manhattan distance within which the agent hears a ghost.
    pub hearing_range: u32,
    pub power_steps: u8,
    pub food_probability: f64,
    pub discount: f64,
}

impl Default for PocManParams {
    fn default() -> Self {
        Self {
            chase_range: 5,
            chase_probability: 0.75,
            flee_probability: 0.5,
            hearing_range: 2,
            power_steps: 15,
            food_probability: 0.5,
            discount: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PocManState {
    /// Cell index `y * WIDTH + x` of the agent.
    pub agent: u16,
    pub ghosts: [u16; GHOSTS],
    /// Last move of each ghost; 4 when it has not moved since spawning.
    pub ghost_directions: [u8; GHOSTS],
    /// Bit per cell; power pills are food on pill cells.
    pub food: [u64; FOOD_WORDS],
    pub food_left: u16,
    /// Steps of power remaining, at most `power_steps`.
    pub power: u8,
    pub dead: bool,
}

impl PocManState {
    pub fn has_food(&self, cell: usize) -> bool {
        self.food[cell / 64] & (1 << (cell % 64)) != 0
    }

    fn clear_food(&mut self, cell: usize) {
        self.food[cell / 64] &= !(1 << (cell % 64));
    }

    fn set_food(&mut self, cell: usize) {
        self.food[cell / 64] |= 1 << (cell % 64);
    }
}

/// The 10-bit local observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Percept {
    /// Wall (or grid edge) directly north, east, south, west.
    pub walls: [bool; 4],
    /// A ghost along the corridor to the north, east, south, west.
    pub ghost_seen: [bool; 4],
    /// Food in one of the eight surrounding cells.
    pub food_smell: bool,
    /// A ghost within hearing range.
    pub ghost_heard: bool,
}

impl Percept {
    /// Bits 0..4 walls, 4..8 ghost sightings, 8 smell, 9 hearing.
    pub fn encode(&self) -> ObservationId {
        let mut id = 0;
        for d in 0..4 {
            id |= usize::from(self.walls[d]) << d;
            id |= usize::from(self.ghost_seen[d]) << (4 + d);
        }
        id | usize::from(self.food_smell) << 8 | usize::from(self.ghost_heard) << 9
    }

    pub fn decode(id: ObservationId) -> Option<Self> {
        if id >= PERCEPTS {
            return None;
        }
        let bit = |i: usize| id & (1 << i) != 0;
        Some(Self {
            walls: [bit(0), bit(1), bit(2), bit(3)],
            ghost_seen: [bit(4), bit(5), bit(6), bit(7)],
            food_smell: bit(8),
            ghost_heard: bit(9),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PocMan {
    params: PocManParams,
    passable: Vec<bool>,
    /// Neighbour per cell and direction, `NO_CELL` for walls and edges.
    neighbours: Vec<[u16; 4]>,
    corridor: Vec<u16>,
    pills: Vec<u16>,
    homes: [u16; GHOSTS],
    start: u16,
}

fn xy(cell: u16) -> (i32, i32) {
    (i32::from(cell) % WIDTH as i32, i32::from(cell) / WIDTH as i32)
}

fn manhattan(a: u16, b: u16) -> u32 {
    let ((ax, ay), (bx, by)) = (xy(a), xy(b));
    ax.abs_diff(bx) + ay.abs_diff(by)
}

fn reverse(direction: u8) -> u8 {
    (direction + 2) % 4
}

impl Default for PocMan {
    fn default() -> Self {
        Self::new(PocManParams::default())
    }
}

impl PocMan {
    pub fn new(params: PocManParams) -> Self {
        let mut passable = alloc::vec![false; CELLS];
        let mut corridor = Vec::new();
        let mut pills = Vec::new();
        let mut homes = Vec::new();
        let mut start = 0;
        for (y, row) in MAZE.iter().enumerate() {
            for (x, ch) in row.bytes().enumerate() {
                let c = (y * WIDTH + x) as u16;
                passable[usize::from(c)] = ch != b'#';
                match ch {
                    b'.' => corridor.push(c),
                    b'o' => pills.push(c),
                    b'G' => homes.push(c),
                    b'P' => start = c,
                    _ => {}
                }
            }
        }
        let neighbours = (0..CELLS)
            .map(|c| {
                let (x, y) = xy(c as u16);
                let mut out = [NO_CELL; 4];
                for (d, (dx, dy)) in [(0, -1), (1, 0), (0, 1), (-1, 0)].into_iter().enumerate() {
                    let (nx, ny) = (x + dx, y + dy);
                    if (0..WIDTH as i32).contains(&nx) && (0..HEIGHT as i32).contains(&ny) {
                        let n = (ny * WIDTH as i32 + nx) as usize;
                        if passable[n] {
                            out[d] = n as u16;
                        }
                    }
                }
                out
            })
            .collect();
        let homes = [homes[0], homes[1], homes[2], homes[3]];
        Self {
            params,
            passable,
            neighbours,
            corridor,
            pills,
            homes,
            start,
        }
    }

    pub fn params(&self) -> &PocManParams {
        &self.params
    }

    pub fn is_passable(&self, cell: usize) -> bool {
        cell < CELLS && self.passable[cell]
    }

    pub fn passable_cells(&self) -> impl Iterator<Item = u16> + '_ {
        (0..CELLS as u16).filter(|&c| self.passable[usize::from(c)])
    }

    pub fn ghost_homes(&self) -> [u16; GHOSTS] {
        self.homes
    }

    pub fn start(&self) -> u16 {
        self.start
    }

    pub fn neighbour(&self, cell: u16, direction: usize) -> Option<u16> {
        match self.neighbours[usize::from(cell)][direction] {
            NO_CELL => None,
            n => Some(n),
        }
    }

    pub fn percept(&self, state: &PocManState) -> Percept {
        let mut p = Percept::default();
        for d in 0..4 {
            p.walls[d] = self.neighbour(state.agent, d).is_none();
            let mut cell = state.agent;
            while let Some(next) = self.neighbour(cell, d) {
                if state.ghosts.contains(&next) {
                    p.ghost_seen[d] = true;
                    break;
                }
                cell = next;
            }
        }
        let (x, y) = xy(state.agent);
        'smell: for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if (dx, dy) == (0, 0) || !(0..WIDTH as i32).contains(&nx) || !(0..HEIGHT as i32).contains(&ny) {
                    continue;
                }
                if state.has_food((ny * WIDTH as i32 + nx) as usize) {
                    p.food_smell = true;
                    break 'smell;
                }
            }
        }
        p.ghost_heard = state
            .ghosts
            .iter()
            .any(|&g| manhattan(g, state.agent) <= self.params.hearing_range);
        p
    }

    fn random_move<R: Rng + ?Sized>(&self, ghost: u16, direction: u8, rng: &mut R) -> Option<u8> {
        let mut options = [0u8; 4];
        let mut n = 0;
        for d in 0..4u8 {
            let back = direction != NO_DIRECTION && d == reverse(direction);
            if !back && self.neighbour(ghost, usize::from(d)).is_some() {
                options[n] = d;
                n += 1;
            }
        }
        if n == 0 {
            // dead end: turning back is the only move
            return (direction != NO_DIRECTION && self.neighbour(ghost, usize::from(reverse(direction))).is_some())
                .then(|| reverse(direction));
        }
        Some(options[rng.random_range(0..n)])
    }

    /// Move that minimises (`toward`) or maximises the Manhattan distance to
    /// `agent`; the first such direction wins ties.
    fn directed_move(&self, ghost: u16, agent: u16, toward: bool) -> Option<u8> {
        let mut best: Option<(u8, u32)> = None;
        for d in 0..4u8 {
            if let Some(n) = self.neighbour(ghost, usize::from(d)) {
                let dist = manhattan(n, agent);
                let better = match best {
                    None => true,
                    Some((_, b)) => (toward && dist < b) || (!toward && dist > b),
                };
                if better {
                    best = Some((d, dist));
                }
            }
        }
        best.map(|(d, _)| d)
    }

    fn move_ghost<R: Rng + ?Sized>(&self, state: &mut PocManState, g: usize, rng: &mut R) {
        let ghost = state.ghosts[g];
        let dir = state.ghost_directions[g];
        let near = manhattan(ghost, state.agent) <= self.params.chase_range;
        let choice = if state.power > 0 {
            if rng.random::<f64>() < self.params.flee_probability {
                self.directed_move(ghost, state.agent, false)
            } else {
                self.random_move(ghost, dir, rng)
            }
        } else if near && rng.random::<f64>() < self.params.chase_probability {
            self.directed_move(ghost, state.agent, true)
        } else {
            self.random_move(ghost, dir, rng)
        };
        if let Some(d) = choice {
            if let Some(n) = self.neighbour(ghost, usize::from(d)) {
                state.ghosts[g] = n;
                state.ghost_directions[g] = d;
            }
        }
    }

    /// Resolves agent-ghost contact; returns the reward it pays.
    fn collide(&self, state: &mut PocManState) -> f64 {
        let mut reward = 0.0;
        for g in 0..GHOSTS {
            if state.ghosts[g] != state.agent {
                continue;
            }
            if state.power > 0 {
                reward += 25.0;
                state.ghosts[g] = self.homes[g];
                state.ghost_directions[g] = NO_DIRECTION;
            } else {
                state.dead = true;
                return reward - 100.0;
            }
        }
        reward
    }

    /// Moves the agent and eats whatever food lies on its new cell.
    fn advance_agent(&self, state: &mut PocManState, action: ActionId) -> Result<f64> {
        if state.dead || state.food_left == 0 || action >= 4 {
            return Err(Error::IllegalAction(action));
        }
        let next = self
            .neighbour(state.agent, action)
            .ok_or(Error::IllegalAction(action))?;
        state.agent = next;
        state.power = state.power.saturating_sub(1);
        Ok(0.0)
    }

    fn eat(&self, state: &mut PocManState) -> f64 {
        let cell = usize::from(state.agent);
        if !state.has_food(cell) {
            return 0.0;
        }
        state.clear_food(cell);
        state.food_left -= 1;
        if self.pills.contains(&state.agent) {
            state.power = self.params.power_steps;
        }
        10.0
    }
}

impl GenerativeModel for PocMan {
    type State = PocManState;

    fn action_count(&self) -> usize {
        4
    }

    fn observation_space(&self) -> ObservationSpace {
        ObservationSpace::Finite(PERCEPTS)
    }

    fn discount(&self) -> f64 {
        self.params.discount
    }

    fn reward_range(&self) -> f64 {
        125.0
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> PocManState {
        let mut state = PocManState {
            agent: self.start,
            ghosts: self.homes,
            ghost_directions: [NO_DIRECTION; GHOSTS],
            food: [0; FOOD_WORDS],
            food_left: 0,
            power: 0,
            dead: false,
        };
        for &c in &self.corridor {
            if rng.random::<f64>() < self.params.food_probability {
                state.set_food(usize::from(c));
                state.food_left += 1;
            }
        }
        for &c in &self.pills {
            state.set_food(usize::from(c));
            state.food_left += 1;
        }
        state
    }

    fn is_terminal(&self, state: &PocManState) -> bool {
        state.dead || state.food_left == 0
    }

    fn legal_actions(&self, state: &PocManState, out: &mut Vec<ActionId>) {
        out.clear();
        if self.is_terminal(state) {
            return;
        }
        out.extend((0..4).filter(|&d| self.neighbour(state.agent, d).is_some()));
    }

    /// Order within a step: the agent moves and the power timer ticks,
    /// contact is resolved, ghosts move, contact is resolved again, then
    /// the agent eats.
    fn step<R: Rng + ?Sized>(
        &self,
        state: &mut PocManState,
        action: ActionId,
        rng: &mut R,
    ) -> Result<Transition> {
        let mut reward = -1.0 + self.advance_agent(state, action)?;
        reward += self.collide(state);
        if !state.dead {
            for g in 0..GHOSTS {
                self.move_ghost(state, g, rng);
            }
            reward += self.collide(state);
        }
        if !state.dead {
            reward += self.eat(state);
        }
        Ok(Transition {
            observation: self.percept(state).encode(),
            reward,
            terminal: self.is_terminal(state),
        })
    }

    /// Replays the agent's move, then re-places the ghosts uniformly on
    /// passable cells until the percept matches `observation`; the last
    /// candidate is kept when no match is found.
    fn recover_particle<R: Rng + ?Sized>(
        &self,
        previous: &PocManState,
        action: ActionId,
        observation: ObservationId,
        rng: &mut R,
    ) -> Option<PocManState> {
        const TRIES: usize = 100;
        let mut state = *previous;
        self.advance_agent(&mut state, action).ok()?;
        self.eat(&mut state);
        let cells: Vec<u16> = self.passable_cells().filter(|&c| c != state.agent).collect();
        for _ in 0..TRIES {
            for g in 0..GHOSTS {
                state.ghosts[g] = cells[rng.random_range(0..cells.len())];
                state.ghost_directions[g] = NO_DIRECTION;
            }
            if self.percept(&state).encode() == observation {
                break;
            }
        }
        Some(state)
    }
}
