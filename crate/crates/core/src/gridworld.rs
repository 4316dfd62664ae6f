//! Grid-world maze with four movement actions.
//!
//! Cells are addressed as `(x, y)` with column `x` in `1..=width` and row `y`
//! in `1..=height`, row 1 at the top. The goal cell is terminal and has no
//! percept; every other free cell maps to one percept index in row-major
//! order.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Percept reported on entering the goal. Never a valid network row.
pub const TERMINAL_PERCEPT: usize = usize::MAX;

/// The 6x9 maze: start at (1,3), goal in the top-right corner.
pub const DEFAULT_MAZE: &str = "\
.......#G
..#....#.
S.#....#.
..#......
.....#...
.........
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridAction {
    Left,
    Right,
    Up,
    Down,
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [
        GridAction::Left,
        GridAction::Right,
        GridAction::Up,
        GridAction::Down,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    fn delta(self) -> (isize, isize) {
        match self {
            GridAction::Left => (-1, 0),
            GridAction::Right => (1, 0),
            GridAction::Up => (0, -1),
            GridAction::Down => (0, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridStep {
    pub percept: usize,
    pub reward: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    percepts: Vec<Option<usize>>,
    n_percepts: usize,
    start: Cell,
    goal: Cell,
    agent: Cell,
    done: bool,
}

impl GridWorld {
    /// The built-in 6x9 maze.
    pub fn default_maze() -> Self {
        DEFAULT_MAZE.parse().expect("built-in maze is well formed")
    }

    /// Build from a wall set. Cells are 1-based.
    pub fn new(
        width: usize,
        height: usize,
        walls: &[Cell],
        start: Cell,
        goal: Cell,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Layout("grid must be at least 1x1".into()));
        }
        let inside = |c: Cell| (1..=width).contains(&c.x) && (1..=height).contains(&c.y);
        for (name, cell) in [("start", start), ("goal", goal)] {
            if !inside(cell) {
                return Err(Error::Layout(format!("{name} {cell} outside the grid")));
            }
        }
        if start == goal {
            return Err(Error::Layout("start and goal coincide".into()));
        }
        let mut wall_mask = vec![false; width * height];
        for &w in walls {
            if !inside(w) {
                return Err(Error::Layout(format!("wall {w} outside the grid")));
            }
            if w == start || w == goal {
                return Err(Error::Layout(format!("wall {w} on start or goal")));
            }
            wall_mask[(w.y - 1) * width + (w.x - 1)] = true;
        }

        let mut percepts = vec![None; width * height];
        let mut n_percepts = 0;
        for y in 1..=height {
            for x in 1..=width {
                let i = (y - 1) * width + (x - 1);
                if !wall_mask[i] && Cell::new(x, y) != goal {
                    percepts[i] = Some(n_percepts);
                    n_percepts += 1;
                }
            }
        }

        Ok(Self {
            width,
            height,
            walls: wall_mask,
            percepts,
            n_percepts,
            start,
            goal,
            agent: start,
            done: false,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn goal(&self) -> Cell {
        self.goal
    }

    pub fn agent(&self) -> Cell {
        self.agent
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Number of free non-goal cells.
    pub fn n_percepts(&self) -> usize {
        self.n_percepts
    }

    pub fn walls(&self) -> Vec<Cell> {
        self.cells().filter(|&c| self.is_wall(c)).collect()
    }

    fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (1..=self.height).flat_map(move |y| (1..=self.width).map(move |x| Cell::new(x, y)))
    }

    fn slot(&self, cell: Cell) -> usize {
        (cell.y - 1) * self.width + (cell.x - 1)
    }

    pub fn is_wall(&self, cell: Cell) -> bool {
        self.walls[self.slot(cell)]
    }

    /// Percept index of a cell; `None` for walls and the goal.
    pub fn percept_of(&self, cell: Cell) -> Option<usize> {
        self.percepts[self.slot(cell)]
    }

    /// Inverse of [`percept_of`](Self::percept_of).
    pub fn cell_of(&self, percept: usize) -> Option<Cell> {
        self.cells().find(|&c| self.percept_of(c) == Some(percept))
    }

    /// Cell reached by `action` from `from`; blocked moves stay put.
    pub fn neighbor(&self, from: Cell, action: GridAction) -> Cell {
        let (dx, dy) = action.delta();
        let x = from.x as isize + dx;
        let y = from.y as isize + dy;
        if x < 1 || y < 1 || x > self.width as isize || y > self.height as isize {
            return from;
        }
        let target = Cell::new(x as usize, y as usize);
        if self.is_wall(target) {
            from
        } else {
            target
        }
    }

    fn percept_here(&self) -> usize {
        self.percept_of(self.agent).unwrap_or(TERMINAL_PERCEPT)
    }

    /// Place the agent on an arbitrary free, non-goal cell and start a live episode.
    pub fn place_agent(&mut self, cell: Cell) -> Result<usize> {
        let inside = (1..=self.width).contains(&cell.x) && (1..=self.height).contains(&cell.y);
        if !inside || self.is_wall(cell) || cell == self.goal {
            return Err(Error::Layout(format!("cannot place agent on {cell}")));
        }
        self.agent = cell;
        self.done = false;
        Ok(self.percept_here())
    }

    /// Put the agent back on the start cell.
    pub fn reset(&mut self) -> usize {
        self.agent = self.start;
        self.done = false;
        self.percept_here()
    }

    pub fn step(&mut self, action: GridAction) -> Result<GridStep> {
        if self.done {
            return Err(Error::EpisodeFinished);
        }
        self.agent = self.neighbor(self.agent, action);
        self.done = self.agent == self.goal;
        Ok(GridStep {
            percept: self.percept_here(),
            reward: if self.done { 1.0 } else { 0.0 },
            done: self.done,
        })
    }

    /// Minimal number of moves from start to goal, by breadth-first search.
    pub fn shortest_path_length(&self) -> Result<usize> {
        let mut dist = vec![usize::MAX; self.width * self.height];
        let mut queue = VecDeque::new();
        dist[self.slot(self.start)] = 0;
        queue.push_back(self.start);
        while let Some(cell) = queue.pop_front() {
            let d = dist[self.slot(cell)];
            if cell == self.goal {
                return Ok(d);
            }
            for action in GridAction::ALL {
                let next = self.neighbor(cell, action);
                let slot = self.slot(next);
                if dist[slot] == usize::MAX {
                    dist[slot] = d + 1;
                    queue.push_back(next);
                }
            }
        }
        Err(Error::Unreachable)
    }
}

impl FromStr for GridWorld {
    type Err = Error;

    /// Plain-text layout: `#` wall, `.` free, `S` start, `G` goal. Blank lines
    /// are ignored; all rows must have equal length.
    fn from_str(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut walls = Vec::new();
        let mut start = None;
        let mut goal = None;
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::Layout(format!(
                    "row {} has a different width",
                    y + 1
                )));
            }
            for (x, ch) in row.chars().enumerate() {
                let cell = Cell::new(x + 1, y + 1);
                match ch {
                    '#' => walls.push(cell),
                    '.' => {}
                    'S' if start.is_none() => start = Some(cell),
                    'G' if goal.is_none() => goal = Some(cell),
                    'S' | 'G' => return Err(Error::Layout(format!("duplicate `{ch}` at {cell}"))),
                    other => return Err(Error::Layout(format!("unexpected `{other}` at {cell}"))),
                }
            }
        }
        let start = start.ok_or_else(|| Error::Layout("missing start `S`".into()))?;
        let goal = goal.ok_or_else(|| Error::Layout("missing goal `G`".into()))?;
        GridWorld::new(width, height, &walls, start, goal)
    }
}
