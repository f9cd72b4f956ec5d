//! Seeded environment generation: map geometry, obstacle placement, and
//! initial agent positions for each task.

use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{AgentState, Coord, EnvironmentState, Mesh, MeshKind};
use crate::tasks::{flocking_distance, TaskState};

/// The five benchmark tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TaskKind {
    Pursuit,
    Synchronization,
    Foraging,
    Flocking,
    Transport,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::Pursuit,
        TaskKind::Synchronization,
        TaskKind::Foraging,
        TaskKind::Flocking,
        TaskKind::Transport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Pursuit => "Pursuit",
            TaskKind::Synchronization => "Synchronization",
            TaskKind::Foraging => "Foraging",
            TaskKind::Flocking => "Flocking",
            TaskKind::Transport => "Transport",
        }
    }

    pub fn parse(s: &str) -> Option<TaskKind> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
    }
}

/// Generation parameters. Defaults match the standard benchmark setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvConfig {
    pub height: i32,
    pub width: i32,
    pub num_agents: u32,
    pub view_size: u32,
    pub memory_size: u32,
    pub max_round: u32,
    /// Candidate cells sampled when the prey respawns.
    pub respawn_candidates: u32,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            height: 14,
            width: 14,
            num_agents: 12,
            view_size: 5,
            memory_size: 5,
            max_round: 100,
            respawn_candidates: 8,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("map {height}x{width} too small for this task (minimum interior 4x4)")]
    MapTooSmall { height: i32, width: i32 },
    #[error("view size {0} must be odd and at least 3")]
    BadViewSize(u32),
    #[error("not enough empty interior cells to place {needed} entities")]
    NotEnoughSpace { needed: u32 },
    #[error("max_round must be positive")]
    ZeroRounds,
}

fn validate(cfg: &EnvConfig) -> Result<(), GenError> {
    if cfg.height < 6 || cfg.width < 6 {
        return Err(GenError::MapTooSmall {
            height: cfg.height,
            width: cfg.width,
        });
    }
    if cfg.view_size < 3 || cfg.view_size.is_multiple_of(2) {
        return Err(GenError::BadViewSize(cfg.view_size));
    }
    if cfg.max_round == 0 {
        return Err(GenError::ZeroRounds);
    }
    Ok(())
}

/// Full-perimeter wall ring as a single static mesh mask.
fn wall_ring(height: i32, width: i32) -> Vec<Vec<bool>> {
    (0..height)
        .map(|i| {
            (0..width)
                .map(|j| i == 0 || j == 0 || i == height - 1 || j == width - 1)
                .collect()
        })
        .collect()
}

/// Wall ring with a one-cell gap at the given perimeter coordinate.
fn wall_ring_with_gap(height: i32, width: i32, gap: Coord) -> Vec<Vec<bool>> {
    let mut m = wall_ring(height, width);
    m[gap.i as usize][gap.j as usize] = false;
    m
}

fn sample_empty_cells(
    state: &EnvironmentState,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> Result<Vec<Coord>, GenError> {
    let mut empties: Vec<Coord> = (0..state.height)
        .flat_map(|i| (0..state.width).map(move |j| Coord::new(i, j)))
        .filter(|&c| state.is_empty_cell(c))
        .collect();
    if empties.len() < count {
        return Err(GenError::NotEnoughSpace {
            needed: count as u32,
        });
    }
    empties.shuffle(rng);
    empties.truncate(count);
    Ok(empties)
}

fn place_agents(
    state: &mut EnvironmentState,
    rng: &mut ChaCha8Rng,
    n: u32,
) -> Result<(), GenError> {
    let cells = sample_empty_cells(state, rng, n as usize)?;
    for (id, c) in (0..n).zip(cells) {
        let mesh = state.add_mesh(Mesh::unit(0, c, MeshKind::Agent));
        state.agents.push(AgentState {
            id,
            mesh,
            flagged: false,
        });
    }
    Ok(())
}

/// Hollow-square target formation for Flocking: the smallest square
/// perimeter holding `n` points, taking the first `n` cells clockwise from
/// the top-left corner, centered on the map.
fn flocking_target(height: i32, width: i32, n: u32) -> Vec<Coord> {
    let mut side = 2i32;
    while 4 * side - 4 < n as i32 {
        side += 1;
    }
    let top = (height - side) / 2;
    let left = (width - side) / 2;
    let mut perimeter = Vec::new();
    for j in 0..side {
        perimeter.push(Coord::new(top, left + j));
    }
    for i in 1..side {
        perimeter.push(Coord::new(top + i, left + side - 1));
    }
    for j in (0..side - 1).rev() {
        perimeter.push(Coord::new(top + side - 1, left + j));
    }
    for i in (1..side - 1).rev() {
        perimeter.push(Coord::new(top + i, left));
    }
    perimeter.truncate(n as usize);
    perimeter
}

/// Build the initial environment for `task` from `seed`. Identical
/// (task, seed, cfg) triples produce identical states.
pub fn generate_environment(
    task: TaskKind,
    seed: u64,
    cfg: &EnvConfig,
) -> Result<EnvironmentState, GenError> {
    validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let placeholder = TaskState::Foraging;
    let mut state = EnvironmentState::new(
        cfg.height,
        cfg.width,
        cfg.max_round,
        task,
        placeholder,
        ChaCha8Rng::seed_from_u64(seed.wrapping_add(1)),
    );

    match task {
        TaskKind::Pursuit => {
            state.add_mesh(Mesh::mask(
                0,
                Coord::new(0, 0),
                wall_ring(cfg.height, cfg.width),
                MeshKind::Wall,
            ));
            place_agents(&mut state, &mut rng, cfg.num_agents)?;
            let prey_cell = sample_empty_cells(&state, &mut rng, 1)?[0];
            let prey = state.add_mesh(Mesh::unit(0, prey_cell, MeshKind::Prey));
            state.task_state = TaskState::Pursuit { prey: Some(prey) };
        }
        TaskKind::Synchronization => {
            state.add_mesh(Mesh::mask(
                0,
                Coord::new(0, 0),
                wall_ring(cfg.height, cfg.width),
                MeshKind::Wall,
            ));
            place_agents(&mut state, &mut rng, cfg.num_agents)?;
            // Lights start in a seeded mixed state.
            for a in &mut state.agents {
                a.flagged = rng.gen_bool(0.5);
            }
            state.task_state = TaskState::Synchronization { prev_state: None };
        }
        TaskKind::Foraging => {
            state.add_mesh(Mesh::mask(
                0,
                Coord::new(0, 0),
                wall_ring(cfg.height, cfg.width),
                MeshKind::Wall,
            ));
            // A few interior wall segments to route around.
            let segs = 2 + (rng.gen_range(0..2u32)) as i32;
            for _ in 0..segs {
                let len = rng.gen_range(2..=3i32);
                let horizontal = rng.gen_bool(0.5);
                let (h, w) = if horizontal { (1, len) } else { (len, 1) };
                let i = rng.gen_range(2..cfg.height - 1 - h);
                let j = rng.gen_range(2..cfg.width - 1 - w);
                let cells: Vec<Coord> = (0..h)
                    .flat_map(|di| (0..w).map(move |dj| Coord::new(i + di, j + dj)))
                    .collect();
                if cells.iter().all(|&c| state.is_empty_cell(c)) {
                    let mask = vec![vec![true; w as usize]; h as usize];
                    state.add_mesh(Mesh::mask(0, Coord::new(i, j), mask, MeshKind::Wall));
                }
            }
            // 2x2 food cluster and 2x2 nest cluster, well separated.
            let block = |state: &mut EnvironmentState,
                         rng: &mut ChaCha8Rng,
                         kind: MeshKind,
                         avoid: Option<Coord>|
             -> Result<Coord, GenError> {
                for _ in 0..1000 {
                    let i = rng.gen_range(1..state.height - 2);
                    let j = rng.gen_range(1..state.width - 2);
                    let anchor = Coord::new(i, j);
                    let cells =
                        [anchor, anchor.offset(0, 1), anchor.offset(1, 0), anchor.offset(1, 1)];
                    if !cells.iter().all(|&c| state.is_empty_cell(c)) {
                        continue;
                    }
                    if let Some(a) = avoid {
                        if anchor.manhattan(a) < (state.height + state.width) / 3 {
                            continue;
                        }
                    }
                    let mask = vec![vec![true, true], vec![true, true]];
                    state.add_mesh(Mesh::mask(0, anchor, mask, kind));
                    return Ok(anchor);
                }
                Err(GenError::NotEnoughSpace { needed: 4 })
            };
            let food = block(&mut state, &mut rng, MeshKind::Food, None)?;
            block(&mut state, &mut rng, MeshKind::Nest, Some(food))?;
            place_agents(&mut state, &mut rng, cfg.num_agents)?;
            state.task_state = TaskState::Foraging;
        }
        TaskKind::Flocking => {
            state.add_mesh(Mesh::mask(
                0,
                Coord::new(0, 0),
                wall_ring(cfg.height, cfg.width),
                MeshKind::Wall,
            ));
            place_agents(&mut state, &mut rng, cfg.num_agents)?;
            let target = flocking_target(cfg.height, cfg.width, cfg.num_agents);
            let positions: Vec<Coord> = state
                .agents
                .iter()
                .filter_map(|a| state.meshes.get(&a.mesh).map(|m| m.anchor))
                .collect();
            let init = flocking_distance(&positions, &target).expect("equal sizes");
            state.task_state = TaskState::Flocking {
                target,
                init_dis: init,
                cur_dis: init,
            };
        }
        TaskKind::Transport => {
            // Gap on a seeded side, away from the corners; the exit bar
            // docks inside the map with its first cell plugging the gap.
            let side = rng.gen_range(0..4u32);
            let gap = match side {
                0 => Coord::new(0, rng.gen_range(2..cfg.width - 2)),
                1 => Coord::new(cfg.height - 1, rng.gen_range(2..cfg.width - 2)),
                2 => Coord::new(rng.gen_range(2..cfg.height - 2), 0),
                _ => Coord::new(rng.gen_range(2..cfg.height - 2), cfg.width - 1),
            };
            state.add_mesh(Mesh::mask(
                0,
                Coord::new(0, 0),
                wall_ring_with_gap(cfg.height, cfg.width, gap),
                MeshKind::Wall,
            ));
            // 1x4 bar pointing inward from the gap; mass fixed at 5 so a
            // chain of at least five pushers is required to move it.
            let (anchor, mask) = match side {
                0 => (gap, vec![vec![true]; 4]),
                1 => (gap.offset(-3, 0), vec![vec![true]; 4]),
                2 => (gap, vec![vec![true, true, true, true]]),
                _ => (gap.offset(0, -3), vec![vec![true, true, true, true]]),
            };
            let mut bar = Mesh::mask(0, anchor, mask, MeshKind::Obstacle);
            bar.mass_override = Some(5);
            state.add_mesh(bar);
            place_agents(&mut state, &mut rng, cfg.num_agents)?;
            state.task_state = TaskState::Transport {
                escaped: Vec::new(),
            };
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CellContent;

    #[test]
    fn deterministic_generation() {
        for task in TaskKind::ALL {
            let cfg = EnvConfig::default();
            let a = generate_environment(task, 7, &cfg).unwrap();
            let b = generate_environment(task, 7, &cfg).unwrap();
            assert_eq!(a.render_ascii(), b.render_ascii(), "{task:?}");
            let c = generate_environment(task, 8, &cfg).unwrap();
            assert_ne!(a.render_ascii(), c.render_ascii(), "{task:?} seed-sensitive");
        }
    }

    #[test]
    fn agent_count_and_bounds() {
        for task in TaskKind::ALL {
            let cfg = EnvConfig::default();
            let s = generate_environment(task, 3, &cfg).unwrap();
            assert_eq!(s.agents.len(), cfg.num_agents as usize);
            for a in &s.agents {
                let pos = s.meshes[&a.mesh].anchor;
                assert!(pos.i > 0 && pos.i < cfg.height - 1);
                assert!(pos.j > 0 && pos.j < cfg.width - 1);
            }
        }
    }

    #[test]
    fn flocking_target_shape() {
        let t = flocking_target(14, 14, 12);
        // 12 points need side 4 (perimeter 12): exactly the hollow square.
        assert_eq!(t.len(), 12);
        let set: alloc::collections::BTreeSet<_> = t.iter().map(|c| (c.i, c.j)).collect();
        assert_eq!(set.len(), 12);
        for c in &t {
            assert!(c.i >= 5 && c.i <= 8 && c.j >= 5 && c.j <= 8);
            assert!(c.i == 5 || c.i == 8 || c.j == 5 || c.j == 8);
        }
    }

    #[test]
    fn transport_has_gap_and_bar() {
        let cfg = EnvConfig::default();
        for seed in 0..8 {
            let s = generate_environment(TaskKind::Transport, seed, &cfg).unwrap();
            let bar = s
                .meshes
                .values()
                .find(|m| m.kind == MeshKind::Obstacle)
                .expect("bar");
            assert_eq!(bar.area(), 4);
            assert_eq!(bar.mass(), 5);
            // Exactly one perimeter cell is not a wall, and the bar plugs it.
            let mut gaps = Vec::new();
            for i in 0..s.height {
                for j in 0..s.width {
                    let edge = i == 0 || j == 0 || i == s.height - 1 || j == s.width - 1;
                    if edge && !matches!(s.cell_at(Coord::new(i, j)), CellContent::Wall) {
                        gaps.push(Coord::new(i, j));
                    }
                }
            }
            assert_eq!(gaps.len(), 1, "seed {seed}");
            assert!(matches!(s.cell_at(gaps[0]), CellContent::Obstacle));
        }
    }

    #[test]
    fn bad_configs_rejected() {
        let cfg = EnvConfig { view_size: 4, ..Default::default() };
        assert!(matches!(
            generate_environment(TaskKind::Pursuit, 0, &cfg),
            Err(GenError::BadViewSize(4))
        ));
        let cfg = EnvConfig { height: 4, ..Default::default() };
        assert!(matches!(
            generate_environment(TaskKind::Pursuit, 0, &cfg),
            Err(GenError::MapTooSmall { .. })
        ));
    }
}
