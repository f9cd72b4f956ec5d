//! World representation shared by all tasks: coordinates, meshes, the full
//! environment snapshot, cell lookup and ASCII rendering.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};
use rand_chacha::ChaCha8Rng;

use crate::gen::TaskKind;
use crate::tasks::TaskState;

/// Grid coordinate. `i` grows downward, `j` grows rightward. Unbounded;
/// "inside the map" means `0 <= i < H` and `0 <= j < W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord {
    pub i: i32,
    pub j: i32,
}

impl Coord {
    pub const fn new(i: i32, j: i32) -> Self {
        Coord { i, j }
    }

    pub fn offset(self, di: i32, dj: i32) -> Self {
        Coord::new(self.i + di, self.j + dj)
    }

    pub fn step(self, dir: Direction) -> Self {
        let (di, dj) = dir.delta();
        self.offset(di, dj)
    }

    pub fn manhattan(self, other: Coord) -> i32 {
        (self.i - other.i).abs() + (self.j - other.j).abs()
    }
}

/// The four push/movement directions. Commit priority during cross-direction
/// arbitration follows this declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

pub const DIRECTIONS: [Direction; 4] = [
    Direction::Up,
    Direction::Down,
    Direction::Left,
    Direction::Right,
];

impl Direction {
    /// (di, dj) with i increasing downward.
    pub const fn delta(self) -> (i32, i32) {
        match self {
            Direction::Up => (-1, 0),
            Direction::Down => (1, 0),
            Direction::Left => (0, -1),
            Direction::Right => (0, 1),
        }
    }

    pub const fn name(self) -> &'static str {
        match self {
            Direction::Up => "UP",
            Direction::Down => "DOWN",
            Direction::Left => "LEFT",
            Direction::Right => "RIGHT",
        }
    }
}

pub type MeshId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    Wall,
    Obstacle,
    Agent,
    Prey,
    Nest,
    Food,
}

impl MeshKind {
    /// Static meshes never move; only agents and obstacles are pushable.
    pub fn is_static(self) -> bool {
        !matches!(self, MeshKind::Agent | MeshKind::Obstacle)
    }
}

/// A discrete physical object: an anchor (top-left of the bounding box), a
/// boolean occupancy mask, and a kind. Mass is derived from the occupied
/// area, never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mesh {
    pub id: MeshId,
    pub anchor: Coord,
    /// Row-major occupancy mask; true cells are occupied.
    pub shape: Vec<Vec<bool>>,
    pub kind: MeshKind,
    /// Meshes sharing a rigid group id move as one unit; the contact graph
    /// links them with mutual edges so SCC condensation fuses them.
    pub rigid_group: Option<u32>,
    /// Task-level mass override (the Transport obstacle carries m=5
    /// regardless of its area).
    pub mass_override: Option<u32>,
}

impl Mesh {
    pub fn unit(id: MeshId, pos: Coord, kind: MeshKind) -> Self {
        Mesh {
            id,
            anchor: pos,
            shape: vec![vec![true]],
            kind,
            rigid_group: None,
            mass_override: None,
        }
    }

    pub fn mask(id: MeshId, anchor: Coord, shape: Vec<Vec<bool>>, kind: MeshKind) -> Self {
        Mesh {
            id,
            anchor,
            shape,
            kind,
            rigid_group: None,
            mass_override: None,
        }
    }

    pub fn is_static(&self) -> bool {
        self.kind.is_static()
    }

    /// Count of occupied cells in the mask.
    pub fn area(&self) -> u32 {
        self.shape
            .iter()
            .map(|row| row.iter().filter(|&&b| b).count() as u32)
            .sum()
    }

    /// m = floor(sqrt(area)), unless overridden.
    pub fn mass(&self) -> u32 {
        self.mass_override.unwrap_or_else(|| isqrt(self.area()))
    }

    /// Global coordinates of all occupied cells.
    pub fn cells(&self) -> Vec<Coord> {
        let mut out = Vec::new();
        for (di, row) in self.shape.iter().enumerate() {
            for (dj, &occ) in row.iter().enumerate() {
                if occ {
                    out.push(self.anchor.offset(di as i32, dj as i32));
                }
            }
        }
        out
    }

    pub fn occupies(&self, c: Coord) -> bool {
        let di = c.i - self.anchor.i;
        let dj = c.j - self.anchor.j;
        if di < 0 || dj < 0 {
            return false;
        }
        self.shape
            .get(di as usize)
            .and_then(|row| row.get(dj as usize))
            .copied()
            .unwrap_or(false)
    }
}

/// Integer floor square root.
pub fn isqrt(n: u32) -> u32 {
    if n == 0 {
        return 0;
    }
    let mut r = libm::sqrt(n as f64) as u32;
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    while r * r > n {
        r -= 1;
    }
    r
}

/// Per-agent mutable status. `flagged` backs both the Foraging carrying
/// state and the Synchronization light; it renders as `$<id>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    pub id: u32,
    pub mesh: MeshId,
    pub flagged: bool,
}

impl AgentState {
    pub fn name(&self) -> String {
        format!("Agent_{}", self.id)
    }
}

/// Content of one rendered cell, by precedence: agent > prey > food/nest >
/// obstacle > wall > empty. Off-map cells render `*` in egocentric views.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellContent {
    OffMap,
    Empty,
    Agent { id: u32, flagged: bool },
    Prey,
    Nest,
    Food,
    Obstacle,
    Wall,
}

impl CellContent {
    pub fn token(&self) -> String {
        match self {
            CellContent::OffMap => String::from("*"),
            CellContent::Empty => String::from("."),
            CellContent::Agent { id, flagged: false } => format!("{id}"),
            CellContent::Agent { id, flagged: true } => format!("${id}"),
            CellContent::Prey => String::from("P"),
            CellContent::Nest => String::from("N"),
            CellContent::Food => String::from("F"),
            CellContent::Obstacle => String::from("B"),
            CellContent::Wall => String::from("W"),
        }
    }
}

/// Full world snapshot. Immutable between rounds; mutation happens only
/// inside the single-threaded round-commit step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentState {
    pub height: i32,
    pub width: i32,
    pub meshes: BTreeMap<MeshId, Mesh>,
    /// Sorted by agent id. Agents leave this list when their mesh is
    /// removed (e.g. a Transport escape).
    pub agents: Vec<AgentState>,
    pub round: u32,
    pub max_round: u32,
    pub score: f64,
    pub task: TaskKind,
    pub task_state: TaskState,
    pub rng: ChaCha8Rng,
    next_mesh_id: MeshId,
}

impl EnvironmentState {
    pub fn new(
        height: i32,
        width: i32,
        max_round: u32,
        task: TaskKind,
        task_state: TaskState,
        rng: ChaCha8Rng,
    ) -> Self {
        EnvironmentState {
            height,
            width,
            meshes: BTreeMap::new(),
            agents: Vec::new(),
            round: 0,
            max_round,
            score: 0.0,
            task,
            task_state,
            rng,
            next_mesh_id: 0,
        }
    }

    pub fn add_mesh(&mut self, mut mesh: Mesh) -> MeshId {
        let id = self.next_mesh_id;
        self.next_mesh_id += 1;
        mesh.id = id;
        self.meshes.insert(id, mesh);
        id
    }

    pub fn in_bounds(&self, c: Coord) -> bool {
        c.i >= 0 && c.i < self.height && c.j >= 0 && c.j < self.width
    }

    pub fn agent(&self, agent_id: u32) -> Option<&AgentState> {
        self.agents.iter().find(|a| a.id == agent_id)
    }

    pub fn agent_mut(&mut self, agent_id: u32) -> Option<&mut AgentState> {
        self.agents.iter_mut().find(|a| a.id == agent_id)
    }

    /// Position of an agent's (1x1) mesh.
    pub fn agent_pos(&self, agent_id: u32) -> Option<Coord> {
        let a = self.agent(agent_id)?;
        self.meshes.get(&a.mesh).map(|m| m.anchor)
    }

    /// Agent whose mesh occupies `c`, if any.
    pub fn agent_at(&self, c: Coord) -> Option<&AgentState> {
        self.agents.iter().find(|a| {
            self.meshes
                .get(&a.mesh)
                .map(|m| m.occupies(c))
                .unwrap_or(false)
        })
    }

    /// Highest-precedence occupant of a cell; `*` off-map.
    pub fn cell_at(&self, c: Coord) -> CellContent {
        if !self.in_bounds(c) {
            return CellContent::OffMap;
        }
        let mut best: Option<CellContent> = None;
        for mesh in self.meshes.values() {
            if !mesh.occupies(c) {
                continue;
            }
            let content = match mesh.kind {
                MeshKind::Agent => {
                    let a = self
                        .agents
                        .iter()
                        .find(|a| a.mesh == mesh.id)
                        .expect("agent mesh without agent state");
                    CellContent::Agent {
                        id: a.id,
                        flagged: a.flagged,
                    }
                }
                MeshKind::Prey => CellContent::Prey,
                MeshKind::Nest => CellContent::Nest,
                MeshKind::Food => CellContent::Food,
                MeshKind::Obstacle => CellContent::Obstacle,
                MeshKind::Wall => CellContent::Wall,
            };
            if precedence(&content) > best.as_ref().map(precedence).unwrap_or(-1) {
                best = Some(content);
            }
        }
        best.unwrap_or(CellContent::Empty)
    }

    pub fn is_empty_cell(&self, c: Coord) -> bool {
        self.in_bounds(c) && self.cell_at(c) == CellContent::Empty
    }

    /// Symbol tokens of the whole map, row-major.
    pub fn symbol_grid(&self) -> Vec<Vec<String>> {
        (0..self.height)
            .map(|i| {
                (0..self.width)
                    .map(|j| self.cell_at(Coord::new(i, j)).token())
                    .collect()
            })
            .collect()
    }

    /// Full-map ASCII view with row/column coordinate headers, in the same
    /// style as the egocentric prompt views.
    pub fn render_ascii(&self) -> String {
        let rows: Vec<i32> = (0..self.height).collect();
        let cols: Vec<i32> = (0..self.width).collect();
        let grid = self.symbol_grid();
        render_grid(&rows, &cols, &grid, &|_i, _j, tok| tok.clone())
    }

    /// Occupied cells of all meshes, with owning mesh ids.
    pub fn occupancy(&self) -> BTreeMap<Coord, MeshId> {
        let mut occ = BTreeMap::new();
        for mesh in self.meshes.values() {
            for c in mesh.cells() {
                occ.insert(c, mesh.id);
            }
        }
        occ
    }

    /// Occupancy disjointness over non-wall meshes (walls may share a mask
    /// with nothing anyway; the check covers every mesh pair).
    pub fn occupancy_disjoint(&self) -> bool {
        let mut seen: BTreeMap<Coord, MeshId> = BTreeMap::new();
        for mesh in self.meshes.values() {
            for c in mesh.cells() {
                if let Some(prev) = seen.insert(c, mesh.id) {
                    if prev != mesh.id {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn remove_mesh(&mut self, id: MeshId) {
        self.meshes.remove(&id);
        self.agents.retain(|a| a.mesh != id);
    }
}

fn precedence(c: &CellContent) -> i32 {
    match c {
        CellContent::Agent { .. } => 5,
        CellContent::Prey => 4,
        CellContent::Nest | CellContent::Food => 3,
        CellContent::Obstacle => 2,
        CellContent::Wall => 1,
        CellContent::Empty | CellContent::OffMap => 0,
    }
}

/// Render a labeled grid: a header row of column labels, then one line per
/// row with its label. Cells are left-justified in 4-char fields, the row
/// label sits right-justified in 3 chars plus 2 spaces, and trailing
/// whitespace is stripped — matching the prompt's view style.
pub fn render_grid<F>(rows: &[i32], cols: &[i32], grid: &[Vec<String>], cell: &F) -> String
where
    F: Fn(usize, usize, &String) -> String,
{
    let mut out = String::new();
    let mut header = String::from("     ");
    for c in cols {
        header.push_str(&format!("{:<4}", c));
    }
    out.push_str(header.trim_end());
    out.push('\n');
    for (ri, r) in rows.iter().enumerate() {
        let mut line = format!("{:>3}  ", r);
        for (ci, _) in cols.iter().enumerate() {
            line.push_str(&format!("{:<4}", cell(ri, ci, &grid[ri][ci])));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Parse a labeled ASCII grid back into its symbol tokens. Inverse of
/// [`EnvironmentState::render_ascii`] on the symbol level; used by replay
/// tooling and as the rendering round-trip oracle.
pub fn parse_ascii_grid(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    let _header = lines.next();
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_whitespace()
                .skip(1) // row label
                .map(String::from)
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isqrt_matches_float_floor() {
        for n in 0..10_000u32 {
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n, "isqrt({n}) = {r}");
        }
    }

    #[test]
    fn mesh_cells_respect_mask() {
        let mesh = Mesh {
            id: 0,
            anchor: Coord::new(2, 3),
            shape: vec![vec![true, false], vec![true, true]],
            kind: MeshKind::Obstacle,
            rigid_group: None,
            mass_override: None,
        };
        assert_eq!(mesh.area(), 3);
        assert_eq!(mesh.mass(), 1);
        assert_eq!(
            mesh.cells(),
            vec![Coord::new(2, 3), Coord::new(3, 3), Coord::new(3, 4)]
        );
        assert!(mesh.occupies(Coord::new(3, 4)));
        assert!(!mesh.occupies(Coord::new(2, 4)));
    }
}
