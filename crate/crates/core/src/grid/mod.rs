//! Tile maps, movement and the observation vectors built from what the
//! tracker can see.
//!
//! Map text uses one character per tile:
//!
//! | char | meaning |
//! |------|---------|
//! | `#`  | wall |
//! | `.`  | floor |
//! | `P`  | player start (floor) |
//! | `A`  | AI start (floor) |
//! | `G`  | goal (floor) |
//! | `C`  | camera (floor) |
//!
//! Floor tiles become HMM states in row-major order.

mod visibility;

pub use visibility::{has_line_of_sight, visible_set, VisibilitySpec};

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::hmm::{HmmError, ObservationVector, TransitionMatrix};

/// The map shipped with the crate.
pub const ISLAND_MAP: &str = include_str!("../../maps/island.map");

/// Names accepted by [`bundled_map`].
pub const BUNDLED_MAPS: &[&str] = &["island"];

/// Text of a map shipped with the crate.
pub fn bundled_map(name: &str) -> Option<&'static str> {
    match name {
        "island" => Some(ISLAND_MAP),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("map is empty")]
    Empty,
    #[error("line {line}, column {column}: unexpected character {ch:?}")]
    BadChar {
        line: usize,
        column: usize,
        ch: char,
    },
    #[error("line {line}: expected {expected} columns, found {found}")]
    Ragged {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: trailing whitespace")]
    TrailingWhitespace { line: usize, column: usize },
    #[error("missing start tile {0:?}")]
    MissingStart(char),
    #[error("line {line}, column {column}: duplicate start tile {ch:?}")]
    DuplicateStart {
        line: usize,
        column: usize,
        ch: char,
    },
    #[error("map has no goal tile")]
    NoGoal,
    #[error("line {line}, column {column}: floor tile unreachable from the player start")]
    Disconnected { line: usize, column: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("{0} is not a floor tile")]
    NotFloor(Position),
    #[error("move {action:?} from {from} is illegal")]
    IllegalMove { from: Position, action: MoveAction },
    #[error(transparent)]
    Hmm(#[from] HmmError),
}

/// Tile coordinate: `x` grows rightward, `y` downward, both from 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Position {
    pub x: usize,
    pub y: usize,
}

impl Position {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn euclidean(self, other: Position) -> f64 {
        let dx = self.x as f64 - other.x as f64;
        let dy = self.y as f64 - other.y as f64;
        dx.hypot(dy)
    }

    pub fn manhattan(self, other: Position) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn chebyshev(self, other: Position) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }
}

// Row-major ordering so position sets iterate like the state index.
impl Ord for Position {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Position {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveAction {
    North,
    East,
    South,
    West,
    Stay,
}

impl MoveAction {
    /// Cardinal directions in the fixed exploration order.
    pub const CARDINALS: [MoveAction; 4] = [Self::North, Self::East, Self::South, Self::West];
    pub const ALL: [MoveAction; 5] = [Self::North, Self::East, Self::South, Self::West, Self::Stay];

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'N' => Some(Self::North),
            'E' => Some(Self::East),
            'S' => Some(Self::South),
            'W' => Some(Self::West),
            '.' => Some(Self::Stay),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Self::North => 'N',
            Self::East => 'E',
            Self::South => 'S',
            Self::West => 'W',
            Self::Stay => '.',
        }
    }

    fn offset(self) -> (isize, isize) {
        match self {
            Self::North => (0, -1),
            Self::East => (1, 0),
            Self::South => (0, 1),
            Self::West => (-1, 0),
            Self::Stay => (0, 0),
        }
    }
}

/// A validated, immutable map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    goals: BTreeSet<Position>,
    cameras: BTreeSet<Position>,
    player_start: Position,
    ai_start: Position,
    state_of: Vec<Option<usize>>,
    positions: Vec<Position>,
}

impl GridMap {
    pub fn parse(text: &str) -> Result<Self, MapError> {
        parse_map(text)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of floor tiles, i.e. HMM states.
    pub fn n_states(&self) -> usize {
        self.positions.len()
    }

    pub fn goals(&self) -> &BTreeSet<Position> {
        &self.goals
    }

    pub fn cameras(&self) -> &BTreeSet<Position> {
        &self.cameras
    }

    pub fn player_start(&self) -> Position {
        self.player_start
    }

    pub fn ai_start(&self) -> Position {
        self.ai_start
    }

    pub fn in_bounds(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn is_floor(&self, p: Position) -> bool {
        p.x < self.width && p.y < self.height && !self.walls[p.y * self.width + p.x]
    }

    pub fn is_wall(&self, p: Position) -> bool {
        !self.is_floor(p)
    }

    pub fn state_index(&self, p: Position) -> Option<usize> {
        if p.x < self.width && p.y < self.height {
            self.state_of[p.y * self.width + p.x]
        } else {
            None
        }
    }

    pub fn position(&self, state: usize) -> Position {
        self.positions[state]
    }

    /// Floor positions in state order.
    pub fn floor_positions(&self) -> &[Position] {
        &self.positions
    }

    fn step(&self, p: Position, action: MoveAction) -> Option<Position> {
        let (dx, dy) = action.offset();
        let x = p.x as isize + dx;
        let y = p.y as isize + dy;
        if !self.in_bounds(x, y) {
            return None;
        }
        let q = Position::new(x as usize, y as usize);
        self.is_floor(q).then_some(q)
    }

    /// Floor neighbours in N, E, S, W order.
    pub fn neighbors(&self, p: Position) -> impl Iterator<Item = (MoveAction, Position)> + '_ {
        MoveAction::CARDINALS
            .into_iter()
            .filter_map(move |a| self.step(p, a).map(|q| (a, q)))
    }

    /// Legal actions at a floor tile, `Stay` last.
    pub fn legal_moves(&self, pos: Position) -> Vec<MoveAction> {
        let mut moves: Vec<MoveAction> = self.neighbors(pos).map(|(a, _)| a).collect();
        moves.push(MoveAction::Stay);
        moves
    }

    pub fn apply_move(&self, pos: Position, action: MoveAction) -> Result<Position, GridError> {
        if !self.is_floor(pos) {
            return Err(GridError::NotFloor(pos));
        }
        self.step(pos, action)
            .ok_or(GridError::IllegalMove { from: pos, action })
    }

    /// Each row uniform over the tiles reachable in one action, `Stay`
    /// included; the support is exactly that adjacency.
    pub fn uniform_transition(&self) -> TransitionMatrix {
        let n = self.n_states();
        let mut support = vec![false; n * n];
        for (i, &p) in self.positions.iter().enumerate() {
            for action in self.legal_moves(p) {
                let q = self.step(p, action).expect("legal move stays on floor");
                let j = self.state_of[q.y * self.width + q.x].expect("floor is indexed");
                support[i * n + j] = true;
            }
        }
        TransitionMatrix::uniform_on_support(n, support).expect("every floor tile can stay put")
    }

    /// `b_i = 0` on the visible tiles when the agent is not among them, or a
    /// one-hot vector on the agent's tile when it was sighted.
    pub fn observation_vector(
        &self,
        visible: &BTreeSet<Position>,
        sighting: Option<Position>,
    ) -> Result<ObservationVector, GridError> {
        let n = self.n_states();
        if let Some(p) = sighting {
            let s = self.state_index(p).ok_or(GridError::NotFloor(p))?;
            return Ok(ObservationVector::sighting(n, s)?);
        }
        let mut zeros = Vec::with_capacity(visible.len());
        for &p in visible {
            zeros.push(self.state_index(p).ok_or(GridError::NotFloor(p))?);
        }
        Ok(ObservationVector::negative(n, zeros)?)
    }

    pub fn tile_char(&self, p: Position) -> char {
        if self.is_wall(p) {
            '#'
        } else if p == self.player_start {
            'P'
        } else if p == self.ai_start {
            'A'
        } else if self.goals.contains(&p) {
            'G'
        } else if self.cameras.contains(&p) {
            'C'
        } else {
            '.'
        }
    }

    /// Map text in the same format [`parse_map`] reads.
    pub fn serialize(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(self.tile_char(Position::new(x, y)));
            }
            out.push('\n');
        }
        out
    }

    /// Hex SHA-256 of the serialized map.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.serialize().as_bytes()))
    }
}

pub fn parse_map(text: &str) -> Result<GridMap, MapError> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.is_empty() || lines[0].is_empty() {
        return Err(MapError::Empty);
    }
    let width = lines[0].chars().count();
    let height = lines.len();
    let mut walls = Vec::with_capacity(width * height);
    let mut goals = BTreeSet::new();
    let mut cameras = BTreeSet::new();
    let mut player = None;
    let mut ai = None;

    for (y, line) in lines.iter().enumerate() {
        let n = line.chars().count();
        if let Some(last) = line.chars().last() {
            if last.is_whitespace() {
                return Err(MapError::TrailingWhitespace {
                    line: y + 1,
                    column: n,
                });
            }
        }
        if n != width {
            return Err(MapError::Ragged {
                line: y + 1,
                expected: width,
                found: n,
            });
        }
        for (x, ch) in line.chars().enumerate() {
            let p = Position::new(x, y);
            walls.push(ch == '#');
            match ch {
                '#' | '.' => {}
                'G' => {
                    goals.insert(p);
                }
                'C' => {
                    cameras.insert(p);
                }
                'P' | 'A' => {
                    let slot = if ch == 'P' { &mut player } else { &mut ai };
                    if slot.is_some() {
                        return Err(MapError::DuplicateStart {
                            line: y + 1,
                            column: x + 1,
                            ch,
                        });
                    }
                    *slot = Some(p);
                }
                _ => {
                    return Err(MapError::BadChar {
                        line: y + 1,
                        column: x + 1,
                        ch,
                    })
                }
            }
        }
    }
    let player_start = player.ok_or(MapError::MissingStart('P'))?;
    let ai_start = ai.ok_or(MapError::MissingStart('A'))?;
    if goals.is_empty() {
        return Err(MapError::NoGoal);
    }

    let mut state_of = vec![None; width * height];
    let mut positions = Vec::new();
    for (cell, &wall) in walls.iter().enumerate() {
        if !wall {
            state_of[cell] = Some(positions.len());
            positions.push(Position::new(cell % width, cell / width));
        }
    }

    let map = GridMap {
        width,
        height,
        walls,
        goals,
        cameras,
        player_start,
        ai_start,
        state_of,
        positions,
    };
    check_connected(&map)?;
    Ok(map)
}

fn check_connected(map: &GridMap) -> Result<(), MapError> {
    let mut seen = vec![false; map.n_states()];
    let start = map.state_index(map.player_start).expect("start is floor");
    seen[start] = true;
    let mut queue = VecDeque::from([map.player_start]);
    while let Some(p) = queue.pop_front() {
        for (_, q) in map.neighbors(p) {
            let s = map.state_index(q).expect("neighbor is floor");
            if !seen[s] {
                seen[s] = true;
                queue.push_back(q);
            }
        }
    }
    match seen.iter().position(|&s| !s) {
        Some(s) => {
            let p = map.position(s);
            Err(MapError::Disconnected {
                line: p.y + 1,
                column: p.x + 1,
            })
        }
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const OPEN: &str = "P..\n...\nA.G\n";

    #[test]
    fn row_major_indexing() {
        let m = parse_map(OPEN).unwrap();
        assert_eq!(m.n_states(), 9);
        assert_eq!(m.state_index(Position::new(0, 0)), Some(0));
        assert_eq!(m.state_index(Position::new(2, 1)), Some(5));
        assert_eq!(m.position(7), Position::new(1, 2));
    }

    #[test]
    fn border_walls_are_excluded() {
        let m = parse_map("#####\n#P.G#\n#..A#\n#####\n").unwrap();
        assert_eq!(m.n_states(), 6);
        assert_eq!(m.state_index(Position::new(0, 0)), None);
        assert_eq!(m.state_index(Position::new(1, 1)), Some(0));
    }

    #[test]
    fn parse_errors_carry_location() {
        assert_eq!(parse_map(""), Err(MapError::Empty));
        assert_eq!(
            parse_map("P.x\nA.G\n"),
            Err(MapError::BadChar {
                line: 1,
                column: 3,
                ch: 'x'
            })
        );
        assert_eq!(
            parse_map("P..\nA.\n"),
            Err(MapError::Ragged {
                line: 2,
                expected: 3,
                found: 2
            })
        );
        assert_eq!(
            parse_map("P.G \nA...\n"),
            Err(MapError::TrailingWhitespace { line: 1, column: 4 })
        );
        assert_eq!(parse_map("...\nA.G\n"), Err(MapError::MissingStart('P')));
        assert_eq!(
            parse_map("P.P\nA.G\n"),
            Err(MapError::DuplicateStart {
                line: 1,
                column: 3,
                ch: 'P'
            })
        );
        assert_eq!(parse_map("P..\nA..\n"), Err(MapError::NoGoal));
        assert_eq!(
            parse_map("P#.\nA#G\n"),
            Err(MapError::Disconnected { line: 1, column: 3 })
        );
    }

    #[test]
    fn legal_moves_interior_and_dead_end() {
        let m = parse_map(OPEN).unwrap();
        assert_eq!(m.legal_moves(Position::new(1, 1)).len(), 5);
        let corridor = parse_map("#####\n#P..#\n###A#\n###G#\n#####\n").unwrap();
        assert_eq!(
            corridor.legal_moves(Position::new(1, 1)),
            vec![MoveAction::East, MoveAction::Stay]
        );
    }

    #[test]
    fn apply_move_rules() {
        let m = parse_map("......\n......\n......\n..P...\nA....G\n").unwrap();
        let p = Position::new(2, 3);
        assert_eq!(m.apply_move(p, MoveAction::Stay).unwrap(), p);
        assert_eq!(
            m.apply_move(p, MoveAction::East).unwrap(),
            Position::new(3, 3)
        );
        assert!(matches!(
            m.apply_move(Position::new(0, 0), MoveAction::North),
            Err(GridError::IllegalMove { .. })
        ));
    }

    #[test]
    fn uniform_rows() {
        let m = parse_map(OPEN).unwrap();
        let a = m.uniform_transition();
        let centre = m.state_index(Position::new(1, 1)).unwrap();
        assert_eq!(a.row(centre).iter().filter(|&&v| v == 0.2).count(), 5);
        let corner = m.state_index(Position::new(0, 0)).unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(a.row(corner).iter().filter(|&&v| v == third).count(), 3);
    }

    #[test]
    fn observation_vectors() {
        let m = parse_map(OPEN).unwrap();
        let none = m.observation_vector(&BTreeSet::new(), None).unwrap();
        assert!(none.weights().iter().all(|&v| v == 1.0));

        let w: BTreeSet<_> = [m.position(3), m.position(7)].into();
        let obs = m.observation_vector(&w, None).unwrap();
        assert_eq!(obs.zero_states(), vec![3, 7]);

        let seen = m.observation_vector(&w, Some(m.position(5))).unwrap();
        assert_eq!(seen.sighted_state(), Some(5));
        assert_eq!(seen.weights().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn move_chars_round_trip() {
        for a in MoveAction::ALL {
            assert_eq!(MoveAction::from_char(a.to_char()), Some(a));
        }
        assert_eq!(MoveAction::from_char('x'), None);
    }

    #[test]
    fn serialize_round_trips() {
        let m = parse_map(ISLAND_MAP).unwrap();
        assert_eq!(m.serialize(), ISLAND_MAP);
        assert_eq!(parse_map(&m.serialize()).unwrap(), m);
        assert_eq!(m.hash().len(), 64);
    }
}
