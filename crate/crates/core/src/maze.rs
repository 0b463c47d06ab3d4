//! Grid mazes: the text format, dihedral symmetries, Four Rooms, and the
//! conversion to a [`TabularMdp`].
//!
//! File format, one row per line:
//!
//! ```text
//! // optional comment line
//! G..#
//! .#..
//! ...S
//! ```
//!
//! `#` is a wall, `.` open, `S` the start and `G` the goal. Lines end in LF and
//! carry no trailing whitespace.
//!
//! MDP states are the open cells in row-major order (row 0 is the top row).
//! Actions are `UP`, `DOWN`, `LEFT`, `RIGHT`. Moving into a wall or off the grid
//! leaves the agent in place. Every action pays the step reward; entering the
//! goal additionally pays the goal reward, and the goal is terminal.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, MazeParseError, Result};
use crate::mdp::{Outcome, TabularMdp};

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;
pub const N_ACTIONS: usize = 4;
pub const ACTION_NAMES: [&str; N_ACTIONS] = ["up", "down", "left", "right"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    /// Neighbor in direction `action`, or `None` when it would leave a `width x height` grid.
    pub fn step(self, action: usize, width: usize, height: usize) -> Option<Cell> {
        match action {
            UP if self.row > 0 => Some(Cell::new(self.row - 1, self.col)),
            DOWN if self.row + 1 < height => Some(Cell::new(self.row + 1, self.col)),
            LEFT if self.col > 0 => Some(Cell::new(self.row, self.col - 1)),
            RIGHT if self.col + 1 < width => Some(Cell::new(self.row, self.col + 1)),
            _ => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridMaze {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    start: Cell,
    goal: Cell,
    comment: Option<String>,
}

impl GridMaze {
    /// Validates that start and goal are open and the goal is reachable.
    pub fn new(width: usize, height: usize, walls: Vec<bool>, start: Cell, goal: Cell) -> Result<Self> {
        if width == 0 || height == 0 || walls.len() != width * height {
            return Err(Error::InvalidMaze(format!(
                "{width}x{height} maze needs {} wall flags, got {}",
                width * height,
                walls.len()
            )));
        }
        let maze = Self { width, height, walls, start, goal, comment: None };
        for (name, c) in [("start", start), ("goal", goal)] {
            if !maze.in_bounds(c) || maze.is_wall(c) {
                return Err(Error::InvalidMaze(format!("{name} {c} is not an open cell")));
            }
        }
        if start == goal {
            return Err(Error::InvalidMaze("start and goal coincide".into()));
        }
        if !maze.is_solvable() {
            return Err(MazeParseError::UnreachableGoal.into());
        }
        Ok(maze)
    }

    /// Wall-free `width x height` grid.
    pub fn open(width: usize, height: usize, start: Cell, goal: Cell) -> Result<Self> {
        Self::new(width, height, vec![false; width * height], start, goal)
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

    pub fn comment(&self) -> Option<&str> {
        self.comment.as_deref()
    }

    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        let c: String = comment.into();
        self.comment = Some(c.lines().next().unwrap_or("").trim_end().to_string());
        self
    }

    pub fn without_comment(mut self) -> Self {
        self.comment = None;
        self
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.row < self.height && c.col < self.width
    }

    pub fn is_wall(&self, c: Cell) -> bool {
        self.walls[c.row * self.width + c.col]
    }

    pub fn walls(&self) -> &[bool] {
        &self.walls
    }

    pub fn wall_count(&self) -> usize {
        self.walls.iter().filter(|w| **w).count()
    }

    /// Open cells in row-major order; index `i` is MDP state `i`.
    pub fn open_cells(&self) -> Vec<Cell> {
        (0..self.height)
            .flat_map(|r| (0..self.width).map(move |c| Cell::new(r, c)))
            .filter(|&c| !self.is_wall(c))
            .collect()
    }

    /// Open 4-neighbors of `c`.
    pub fn neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        (0..N_ACTIONS)
            .filter_map(move |a| c.step(a, self.width, self.height))
            .filter(|&n| !self.is_wall(n))
    }

    /// Open cells reachable from `from`, in row-major order.
    pub fn connected_cells(&self, from: Cell) -> Vec<Cell> {
        let mut seen = vec![false; self.width * self.height];
        if !self.in_bounds(from) || self.is_wall(from) {
            return Vec::new();
        }
        let mut queue = VecDeque::from([from]);
        seen[from.row * self.width + from.col] = true;
        while let Some(c) = queue.pop_front() {
            for n in self.neighbors(c) {
                let i = n.row * self.width + n.col;
                if !seen[i] {
                    seen[i] = true;
                    queue.push_back(n);
                }
            }
        }
        self.open_cells().into_iter().filter(|c| seen[c.row * self.width + c.col]).collect()
    }

    fn is_solvable(&self) -> bool {
        self.connected_cells(self.start).contains(&self.goal)
    }
}

/// Parses the text maze format.
pub fn parse_maze(text: &str) -> std::result::Result<GridMaze, MazeParseError> {
    if text.contains('\r') {
        return Err(MazeParseError::CarriageReturn);
    }
    let mut lines: Vec<&str> = text.split('\n').collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    let mut comment = None;
    if let Some(first) = lines.first() {
        if let Some(rest) = first.strip_prefix("//") {
            comment = Some(rest.to_string());
            lines.remove(0);
        }
    }
    if lines.is_empty() || lines[0].is_empty() {
        return Err(MazeParseError::Empty);
    }
    let width = lines[0].chars().count();
    let height = lines.len();
    let mut walls = Vec::with_capacity(width * height);
    let (mut start, mut goal) = (None, None);
    for (row, line) in lines.iter().enumerate() {
        if line.ends_with(|c: char| c.is_whitespace()) {
            return Err(MazeParseError::TrailingWhitespace { row });
        }
        let found = line.chars().count();
        if found != width {
            return Err(MazeParseError::RaggedRow { row, expected: width, found });
        }
        for (col, ch) in line.chars().enumerate() {
            let cell = Cell::new(row, col);
            match ch {
                '#' => walls.push(true),
                '.' => walls.push(false),
                'S' => {
                    if start.replace(cell).is_some() {
                        return Err(MazeParseError::DuplicateStart);
                    }
                    walls.push(false);
                }
                'G' => {
                    if goal.replace(cell).is_some() {
                        return Err(MazeParseError::DuplicateGoal);
                    }
                    walls.push(false);
                }
                _ => return Err(MazeParseError::BadChar { row, col, ch }),
            }
        }
    }
    let start = start.ok_or(MazeParseError::MissingStart)?;
    let goal = goal.ok_or(MazeParseError::MissingGoal)?;
    let maze = GridMaze { width, height, walls, start, goal, comment };
    if !maze.is_solvable() {
        return Err(MazeParseError::UnreachableGoal);
    }
    Ok(maze)
}

/// Writes the text maze format; `parse_maze(&serialize_maze(m)) == m`.
pub fn serialize_maze(maze: &GridMaze) -> String {
    let mut out = String::with_capacity((maze.width + 1) * (maze.height + 1));
    if let Some(c) = &maze.comment {
        out.push_str("//");
        out.push_str(c);
        out.push('\n');
    }
    for r in 0..maze.height {
        for c in 0..maze.width {
            let cell = Cell::new(r, c);
            out.push(if cell == maze.start {
                'S'
            } else if cell == maze.goal {
                'G'
            } else if maze.is_wall(cell) {
                '#'
            } else {
                '.'
            });
        }
        out.push('\n');
    }
    out
}

impl fmt::Display for GridMaze {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_maze(self))
    }
}

impl std::str::FromStr for GridMaze {
    type Err = MazeParseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        parse_maze(s)
    }
}

/// The eight elements of the dihedral group of the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symmetry {
    Identity,
    /// Quarter turn clockwise.
    Rot90,
    Rot180,
    Rot270,
    /// Mirror across the vertical axis (left-right).
    FlipHorizontal,
    /// Mirror across the horizontal axis (top-bottom).
    FlipVertical,
    /// Mirror across the main diagonal.
    Transpose,
    /// Mirror across the anti-diagonal.
    AntiTranspose,
}

impl Symmetry {
    pub const ALL: [Symmetry; 8] = [
        Symmetry::Identity,
        Symmetry::Rot90,
        Symmetry::Rot180,
        Symmetry::Rot270,
        Symmetry::FlipHorizontal,
        Symmetry::FlipVertical,
        Symmetry::Transpose,
        Symmetry::AntiTranspose,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Symmetry::Identity => "identity",
            Symmetry::Rot90 => "rot90",
            Symmetry::Rot180 => "rot180",
            Symmetry::Rot270 => "rot270",
            Symmetry::FlipHorizontal => "flip_h",
            Symmetry::FlipVertical => "flip_v",
            Symmetry::Transpose => "transpose",
            Symmetry::AntiTranspose => "anti_transpose",
        }
    }

    /// Image of `c` in an `n x n` grid.
    pub fn map(self, c: Cell, n: usize) -> Cell {
        let m = n - 1;
        let (r, k) = (c.row, c.col);
        match self {
            Symmetry::Identity => Cell::new(r, k),
            Symmetry::Rot90 => Cell::new(k, m - r),
            Symmetry::Rot180 => Cell::new(m - r, m - k),
            Symmetry::Rot270 => Cell::new(m - k, r),
            Symmetry::FlipHorizontal => Cell::new(r, m - k),
            Symmetry::FlipVertical => Cell::new(m - r, k),
            Symmetry::Transpose => Cell::new(k, r),
            Symmetry::AntiTranspose => Cell::new(m - k, m - r),
        }
    }
}

/// Maps walls, start and goal of a square maze under `sym`. The comment is dropped.
pub fn apply_symmetry(maze: &GridMaze, sym: Symmetry) -> Result<GridMaze> {
    if maze.width != maze.height {
        return Err(Error::NonSquare { width: maze.width, height: maze.height });
    }
    let n = maze.width;
    let mut walls = vec![false; n * n];
    for r in 0..n {
        for c in 0..n {
            let to = sym.map(Cell::new(r, c), n);
            walls[to.row * n + to.col] = maze.is_wall(Cell::new(r, c));
        }
    }
    Ok(GridMaze {
        width: n,
        height: n,
        walls,
        start: sym.map(maze.start, n),
        goal: sym.map(maze.goal, n),
        comment: None,
    })
}

/// Rewards and discount used to turn a maze into an MDP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MazeRewards {
    pub step_reward: f64,
    pub goal_reward: f64,
    pub discount: f64,
}

impl Default for MazeRewards {
    fn default() -> Self {
        Self { step_reward: -0.1, goal_reward: 100.0, discount: 0.99 }
    }
}

/// Bidirectional map between open cells and MDP state ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateIndex {
    width: usize,
    cells: Vec<Cell>,
    state_of: Vec<Option<usize>>,
}

impl StateIndex {
    pub fn new(maze: &GridMaze) -> Self {
        let cells = maze.open_cells();
        let mut state_of = vec![None; maze.width * maze.height];
        for (s, c) in cells.iter().enumerate() {
            state_of[c.row * maze.width + c.col] = Some(s);
        }
        Self { width: maze.width, cells, state_of }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, state: usize) -> Cell {
        self.cells[state]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn state(&self, cell: Cell) -> Option<usize> {
        if cell.col >= self.width {
            return None;
        }
        self.state_of.get(cell.row * self.width + cell.col).copied().flatten()
    }
}

/// Deterministic 4-action MDP over the open cells of `maze` (see module docs).
pub fn maze_to_mdp(maze: &GridMaze, step_reward: f64, goal_reward: f64, discount: f64) -> Result<TabularMdp> {
    if !(0.0..1.0).contains(&discount) {
        return Err(Error::InvalidDiscount(discount));
    }
    let index = StateIndex::new(maze);
    let n = index.len();
    let mut outcomes = Vec::with_capacity(n * N_ACTIONS);
    let mut terminal = vec![false; n];
    for (s, &cell) in index.cells().iter().enumerate() {
        terminal[s] = cell == maze.goal;
        for a in 0..N_ACTIONS {
            let target = cell
                .step(a, maze.width, maze.height)
                .filter(|&c| !maze.is_wall(c))
                .unwrap_or(cell);
            let next = index.state(target).expect("open cell has a state");
            let reward = if target == maze.goal && cell != maze.goal {
                step_reward + goal_reward
            } else {
                step_reward
            };
            outcomes.push(vec![Outcome { next, prob: 1.0, reward }]);
        }
    }
    TabularMdp::new(n, N_ACTIONS, outcomes, discount, terminal)
}

/// A maze together with its MDP and state index.
#[derive(Debug, Clone)]
pub struct GridWorld {
    pub maze: GridMaze,
    pub mdp: TabularMdp,
    pub index: StateIndex,
}

impl GridWorld {
    pub fn new(maze: GridMaze, rewards: MazeRewards) -> Result<Self> {
        let mdp = maze_to_mdp(&maze, rewards.step_reward, rewards.goal_reward, rewards.discount)?;
        let index = StateIndex::new(&maze);
        Ok(Self { maze, mdp, index })
    }

    pub fn start_state(&self) -> usize {
        self.index.state(self.maze.start).expect("start is open")
    }

    pub fn goal_state(&self) -> usize {
        self.index.state(self.maze.goal).expect("goal is open")
    }

    pub fn state(&self, cell: Cell) -> Option<usize> {
        self.index.state(cell)
    }

    pub fn cell(&self, state: usize) -> Cell {
        self.index.cell(state)
    }
}

/// Standard Four Rooms interior (11 x 11). Start lower-left, goal upper-right.
pub const FOUR_ROOMS_LAYOUT: &str = "\
.....#....G
.....#.....
...........
.....#.....
.....#.....
#.####.....
.....###.##
.....#.....
.....#.....
...........
S....#.....
";

/// The four doorway cells of [`FOUR_ROOMS_LAYOUT`].
pub const FOUR_ROOMS_DOORWAYS: [Cell; 4] = [Cell::new(2, 5), Cell::new(9, 5), Cell::new(5, 1), Cell::new(6, 8)];

pub fn four_rooms_maze() -> GridMaze {
    parse_maze(FOUR_ROOMS_LAYOUT).expect("built-in layout is valid")
}

/// Four Rooms with step reward -0.1, goal bonus +100 and discount 0.99.
pub fn build_four_rooms() -> (TabularMdp, GridMaze) {
    let maze = four_rooms_maze();
    let r = MazeRewards::default();
    let mdp = maze_to_mdp(&maze, r.step_reward, r.goal_reward, r.discount).expect("valid discount");
    (mdp, maze)
}

/// Four Rooms as a [`GridWorld`].
pub fn four_rooms() -> GridWorld {
    GridWorld::new(four_rooms_maze(), MazeRewards::default()).expect("valid discount")
}

/// Cells of the room containing the goal (upper-right room, doorways excluded).
pub fn four_rooms_goal_room() -> Vec<Cell> {
    (0..=5).flat_map(|r| (6..=10).map(move |c| Cell::new(r, c))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_rooms_has_104_open_cells() {
        let (mdp, maze) = build_four_rooms();
        assert_eq!(mdp.n_states(), 104);
        assert_eq!(maze.open_cells().len(), 104);
        assert_eq!(mdp.discount(), 0.99);
        for d in FOUR_ROOMS_DOORWAYS {
            assert!(!maze.is_wall(d));
        }
        assert_eq!(maze.start(), Cell::new(10, 0));
        assert_eq!(maze.goal(), Cell::new(0, 10));
    }

    #[test]
    fn four_rooms_rewards() {
        let w = four_rooms();
        let goal = w.goal_state();
        let left_of_goal = w.state(Cell::new(0, 9)).unwrap();
        assert!(w.mdp.is_terminal(goal));
        assert_eq!(w.mdp.reward(left_of_goal, RIGHT, goal), -0.1 + 100.0);
        assert_eq!(w.mdp.reward(left_of_goal, LEFT, w.state(Cell::new(0, 8)).unwrap()), -0.1);
        for s in 0..w.mdp.n_states() {
            for a in 0..N_ACTIONS {
                let sum: f64 = (0..w.mdp.n_states()).map(|n| w.mdp.transition(s, a, n)).sum();
                assert_eq!(sum, 1.0);
            }
        }
    }

    #[test]
    fn open_three_by_three() {
        let m = parse_maze("G..\n...\n..S\n").unwrap();
        assert_eq!((m.width(), m.height(), m.wall_count()), (3, 3, 0));
        let mdp = maze_to_mdp(&m, -0.1, 100.0, 0.99).unwrap();
        assert_eq!((mdp.n_states(), mdp.n_actions()), (9, 4));
        assert!(mdp.is_terminal(0));
        assert_eq!(mdp.outcomes(0, LEFT)[0].reward, 0.0);
    }

    #[test]
    fn bump_is_self_transition() {
        let m = parse_maze("G#.\n..S\n").unwrap();
        let idx = StateIndex::new(&m);
        let mdp = maze_to_mdp(&m, -0.1, 100.0, 0.9).unwrap();
        let s = idx.state(Cell::new(0, 2)).unwrap();
        assert_eq!(mdp.outcomes(s, LEFT), &[Outcome { next: s, prob: 1.0, reward: -0.1 }]);
        assert_eq!(mdp.outcomes(s, UP), &[Outcome { next: s, prob: 1.0, reward: -0.1 }]);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse_maze("G.x\n..S\n"), Err(MazeParseError::BadChar { row: 0, col: 2, ch: 'x' }));
        assert!(matches!(parse_maze("G..\n.S\n"), Err(MazeParseError::RaggedRow { .. })));
        assert_eq!(parse_maze("G..\n...\n"), Err(MazeParseError::MissingStart));
        assert_eq!(parse_maze("S..\n...\n"), Err(MazeParseError::MissingGoal));
        assert_eq!(parse_maze("GS.\n..S\n"), Err(MazeParseError::DuplicateStart));
        assert_eq!(parse_maze("GG.\n..S\n"), Err(MazeParseError::DuplicateGoal));
        assert_eq!(parse_maze("G#.\n##.\n..S\n"), Err(MazeParseError::UnreachableGoal));
        assert_eq!(parse_maze("G.. \n..S\n"), Err(MazeParseError::TrailingWhitespace { row: 0 }));
        assert_eq!(parse_maze("G..\r\n..S\r\n"), Err(MazeParseError::CarriageReturn));
        assert_eq!(parse_maze(""), Err(MazeParseError::Empty));
    }

    #[test]
    fn comment_round_trips() {
        let text = "// maze 7, density 0.3\nG.#\n..S\n";
        let m = parse_maze(text).unwrap();
        assert_eq!(m.comment(), Some(" maze 7, density 0.3"));
        assert_eq!(serialize_maze(&m), text);
    }

    #[test]
    fn symmetries() {
        let m = parse_maze("G.#\n#..\n..S\n").unwrap().without_comment();
        assert_eq!(apply_symmetry(&m, Symmetry::Identity).unwrap(), m);
        let mut r = m.clone();
        for _ in 0..4 {
            r = apply_symmetry(&r, Symmetry::Rot90).unwrap();
        }
        assert_eq!(r, m);
        let rot = apply_symmetry(&m, Symmetry::Rot90).unwrap();
        assert_eq!(rot.goal(), Cell::new(0, 2));
        let wide = parse_maze("G..\n..S\n").unwrap();
        assert!(matches!(apply_symmetry(&wide, Symmetry::Rot90), Err(Error::NonSquare { .. })));
    }

    #[test]
    fn invalid_discount() {
        let m = parse_maze("G.S\n").unwrap();
        assert!(matches!(maze_to_mdp(&m, -0.1, 100.0, 1.0), Err(Error::InvalidDiscount(_))));
    }
}
