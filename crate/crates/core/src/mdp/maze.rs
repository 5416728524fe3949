//! ASCII gridworld mazes.
//!
//! `#` wall, `.` free, `S` start, `G` goal. Moves are deterministic; bumping
//! into a wall or the border leaves the agent in place. Entering `G` pays 1
//! and puts the agent back on `S`, so the goal cell itself is never occupied.

use std::collections::VecDeque;
use std::fmt::Write as _;

use super::TabularMdp;
use crate::error::{Error, Result};

/// Bundled benchmark map (48 free cells).
pub const DEFAULT_MAP: &str = include_str!("../../maps/default.txt");

pub const DEFAULT_DISCOUNT: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    Free,
    Wall,
    Start,
    Goal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Up,
    Down,
    Left,
    Right,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Up, Move::Down, Move::Left, Move::Right];

    fn delta(self) -> (isize, isize) {
        match self {
            Move::Up => (-1, 0),
            Move::Down => (1, 0),
            Move::Left => (0, -1),
            Move::Right => (0, 1),
        }
    }

    fn glyph(self) -> char {
        match self {
            Move::Up => '^',
            Move::Down => 'v',
            Move::Left => '<',
            Move::Right => '>',
        }
    }
}

#[derive(Clone, Debug)]
pub struct MazeSpec {
    grid: Vec<Vec<Cell>>,
    start: (usize, usize),
    goal: (usize, usize),
    state_of: Vec<Vec<Option<usize>>>,
    cells: Vec<(usize, usize)>,
}

impl MazeSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.trim().is_empty())
            .collect();
        if lines.is_empty() {
            return Err(Error::InvalidMaze("map is empty".into()));
        }
        let width = lines[0].chars().count();
        let mut grid = Vec::with_capacity(lines.len());
        let mut starts = Vec::new();
        let mut goals = Vec::new();
        for (r, line) in lines.iter().enumerate() {
            if line.chars().count() != width {
                return Err(Error::InvalidMaze(format!(
                    "row {r} has {} cells, expected {width} (map must be rectangular)",
                    line.chars().count()
                )));
            }
            let mut row = Vec::with_capacity(width);
            for (c, ch) in line.chars().enumerate() {
                let cell = match ch {
                    '.' => Cell::Free,
                    '#' => Cell::Wall,
                    'S' => {
                        starts.push((r, c));
                        Cell::Start
                    }
                    'G' => {
                        goals.push((r, c));
                        Cell::Goal
                    }
                    other => {
                        return Err(Error::InvalidMaze(format!(
                            "unexpected character {other:?} at row {r}, column {c}"
                        )))
                    }
                };
                row.push(cell);
            }
            grid.push(row);
        }
        let start = match starts.as_slice() {
            [one] => *one,
            [] => return Err(Error::InvalidMaze("no start cell 'S'".into())),
            _ => return Err(Error::InvalidMaze(format!("{} start cells 'S'", starts.len()))),
        };
        let goal = match goals.as_slice() {
            [one] => *one,
            [] => return Err(Error::InvalidMaze("no goal cell 'G'".into())),
            _ => return Err(Error::InvalidMaze(format!("{} goal cells 'G'", goals.len()))),
        };

        let mut state_of = vec![vec![None; width]; grid.len()];
        let mut cells = Vec::new();
        for (r, row) in grid.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if *cell != Cell::Wall {
                    state_of[r][c] = Some(cells.len());
                    cells.push((r, c));
                }
            }
        }

        let maze = Self {
            grid,
            start,
            goal,
            state_of,
            cells,
        };
        maze.check_reachable()?;
        Ok(maze)
    }

    fn check_reachable(&self) -> Result<()> {
        let mut seen = vec![false; self.cells.len()];
        let mut queue = VecDeque::from([self.start]);
        seen[self.state(self.start)] = true;
        while let Some(pos) = queue.pop_front() {
            for m in Move::ALL {
                let next = self.step(pos, m);
                let id = self.state(next);
                if !seen[id] {
                    seen[id] = true;
                    queue.push_back(next);
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            let (r, c) = self.cells[missing];
            let what = if (r, c) == self.goal { "goal" } else { "cell" };
            return Err(Error::InvalidMaze(format!(
                "{what} at row {r}, column {c} is unreachable from the start"
            )));
        }
        Ok(())
    }

    /// Raw grid move with bump semantics (ignores the goal restart).
    fn step(&self, (r, c): (usize, usize), m: Move) -> (usize, usize) {
        let (dr, dc) = m.delta();
        let (nr, nc) = (r as isize + dr, c as isize + dc);
        if nr < 0 || nc < 0 {
            return (r, c);
        }
        let (nr, nc) = (nr as usize, nc as usize);
        match self.grid.get(nr).and_then(|row| row.get(nc)) {
            Some(Cell::Wall) | None => (r, c),
            Some(_) => (nr, nc),
        }
    }

    fn state(&self, (r, c): (usize, usize)) -> usize {
        self.state_of[r][c].expect("free cell")
    }

    pub fn n_states(&self) -> usize {
        self.cells.len()
    }

    pub fn rows(&self) -> usize {
        self.grid.len()
    }

    pub fn cols(&self) -> usize {
        self.grid[0].len()
    }

    pub fn cell(&self, r: usize, c: usize) -> Cell {
        self.grid[r][c]
    }

    pub fn start_state(&self) -> usize {
        self.state(self.start)
    }

    pub fn goal_state(&self) -> usize {
        self.state(self.goal)
    }

    pub fn start_cell(&self) -> (usize, usize) {
        self.start
    }

    pub fn goal_cell(&self) -> (usize, usize) {
        self.goal
    }

    /// Grid coordinates of every state, in state order.
    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn state_at(&self, r: usize, c: usize) -> Option<usize> {
        self.state_of.get(r)?.get(c).copied().flatten()
    }

    pub fn to_mdp(&self, discount: f64) -> Result<TabularMdp> {
        let n = self.cells.len();
        let start = self.start_state();
        let goal = self.goal_state();
        let mut transitions = vec![vec![vec![0.0; n]; Move::ALL.len()]; n];
        let mut rewards = vec![vec![0.0; Move::ALL.len()]; n];
        let mut ends = vec![false; n * Move::ALL.len()];
        for (s, &pos) in self.cells.iter().enumerate() {
            for (a, &m) in Move::ALL.iter().enumerate() {
                let next = if s == goal {
                    // never occupied; restarts without reward
                    start
                } else {
                    let target = self.state(self.step(pos, m));
                    if target == goal {
                        rewards[s][a] = 1.0;
                        ends[s * Move::ALL.len() + a] = true;
                        start
                    } else {
                        target
                    }
                };
                transitions[s][a][next] = 1.0;
            }
        }
        let mut initial = vec![0.0; n];
        initial[start] = 1.0;
        TabularMdp::new(transitions, rewards, discount, initial)?.with_episode_ends(ends)
    }

    /// Draw an action per state as arrows on the grid.
    pub fn render_actions(&self, actions: &[usize]) -> String {
        let mut out = String::new();
        for (r, row) in self.grid.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                let ch = match cell {
                    Cell::Wall => '#',
                    Cell::Goal => 'G',
                    _ => Move::ALL[actions[self.state((r, c))]].glyph(),
                };
                out.push(ch);
            }
            let _ = writeln!(out);
        }
        out
    }
}

/// Parse a map and build its MDP with `gamma = 0.99`.
pub fn load_maze(ascii_map: &str) -> Result<TabularMdp> {
    MazeSpec::parse(ascii_map)?.to_mdp(DEFAULT_DISCOUNT)
}

/// The bundled benchmark maze.
pub fn default_maze() -> TabularMdp {
    load_maze(DEFAULT_MAP).expect("bundled map is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_map_has_48_states() {
        let mdp = default_maze();
        assert_eq!(mdp.n_states(), 48);
        assert_eq!(mdp.n_actions(), 4);
        assert_eq!(mdp.discount(), 0.99);
    }

    #[test]
    fn smallest_maze() {
        let mdp = load_maze("SG").unwrap();
        assert_eq!(mdp.n_states(), 2);
        let right = 3;
        assert_eq!(mdp.reward(0, right), 1.0);
        assert_eq!(mdp.transition(0, right, 0), 1.0);
        assert!(mdp.is_episode_end(0, right));
        // bumping left stays put
        assert_eq!(mdp.transition(0, 2, 0), 1.0);
        assert_eq!(mdp.reward(0, 2), 0.0);
    }

    #[test]
    fn malformed_maps_are_rejected() {
        for (map, needle) in [
            ("S#G", "unreachable"),
            ("S.\n.G.", "rectangular"),
            ("..G", "no start"),
            ("S..", "no goal"),
            ("SSG", "2 start"),
            ("SGG", "2 goal"),
            ("S.xG", "unexpected character"),
            ("", "empty"),
        ] {
            let err = load_maze(map).unwrap_err().to_string();
            assert!(err.contains(needle), "{map:?}: {err}");
        }
    }

    #[test]
    fn unreachable_free_cell_is_rejected() {
        let err = load_maze("S.G#\n###.").unwrap_err().to_string();
        assert!(err.contains("row 1, column 3"), "{err}");
    }

    #[test]
    fn start_is_point_mass() {
        let spec = MazeSpec::parse(DEFAULT_MAP).unwrap();
        let mdp = spec.to_mdp(0.99).unwrap();
        let rho = mdp.initial_dist();
        assert_eq!(rho[spec.start_state()], 1.0);
        assert_eq!(rho.iter().sum::<f64>(), 1.0);
    }
}
