//! The five task definitions: per-round dynamics, scoring events, and
//! termination.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use rand::Rng;
use thiserror::Error;

use crate::assignment::solve_min_assignment;
use crate::grid::{CellContent, Coord, EnvironmentState, Mesh, MeshId, MeshKind, DIRECTIONS};

/// Wall weight in the prey's threat heuristic.
pub const THREAT_WALL_WEIGHT: f64 = 0.9;
/// Side of the square subview the threat heuristic scans.
pub const THREAT_SUBVIEW: i32 = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaskError {
    #[error("source and target point sets differ in size ({src} vs {tgt})")]
    SizeMismatch { src: usize, tgt: usize },
}

/// Task-specific mutable state carried inside the environment.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskState {
    Pursuit {
        prey: Option<MeshId>,
    },
    Synchronization {
        /// Last scored unanimous light state; null until the first score.
        prev_state: Option<bool>,
    },
    Foraging,
    Flocking {
        target: Vec<Coord>,
        init_dis: f64,
        cur_dis: f64,
    },
    Transport {
        /// (agent id, round of escape), in escape order.
        escaped: Vec<(u32, u32)>,
    },
}

/// Threat heuristic H(c) = N_A(V) + 0.9 * N_W(V) over the 8x8 subview V
/// around `c`. The even-sized window spans offsets -3..=+4 on both axes.
pub fn threat_heuristic(state: &EnvironmentState, c: Coord) -> f64 {
    let lo = -(THREAT_SUBVIEW / 2 - 1);
    let hi = THREAT_SUBVIEW / 2;
    let mut agents = 0u32;
    let mut walls = 0u32;
    for di in lo..=hi {
        for dj in lo..=hi {
            match state.cell_at(c.offset(di, dj)) {
                CellContent::Agent { .. } => agents += 1,
                CellContent::Wall => walls += 1,
                _ => {}
            }
        }
    }
    agents as f64 + THREAT_WALL_WEIGHT * walls as f64
}

/// Prey movement: among all two-step sequences whose intermediate and final
/// cells are both empty, move along the one whose destination minimizes H.
/// Ties go to the first sequence in the fixed UP/DOWN/LEFT/RIGHT x same
/// enumeration order. With no valid sequence the prey stays.
pub fn pursuit_prey_step(state: &mut EnvironmentState) {
    let prey_id = match &state.task_state {
        TaskState::Pursuit { prey: Some(id) } => *id,
        _ => return,
    };
    let start = match state.meshes.get(&prey_id) {
        Some(m) => m.anchor,
        None => return,
    };
    let mut best: Option<(f64, Coord)> = None;
    for first in DIRECTIONS {
        for second in DIRECTIONS {
            let mid = start.step(first);
            let end = mid.step(second);
            if !state.is_empty_cell(mid) || !state.is_empty_cell(end) {
                continue;
            }
            let h = threat_heuristic(state, end);
            if best.map(|(bh, _)| h < bh).unwrap_or(true) {
                best = Some((h, end));
            }
        }
    }
    if let Some((_, dest)) = best {
        state.meshes.get_mut(&prey_id).expect("prey mesh").anchor = dest;
    }
}

/// Outcome of the per-round capture check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaptureOutcome {
    NotCaught,
    /// Caught; prey respawned at the given cell.
    CaughtRespawned(Coord),
    /// Caught but no empty cell remains; the episode ends here.
    CaughtNoRespawn,
}

/// If all four cells adjacent to the prey are occupied by agents or walls,
/// score one point, remove the prey, and respawn it at the candidate empty
/// cell (drawn seeded) minimizing H. Equal-H candidates resolve in
/// row-major order.
pub fn pursuit_check_and_respawn(state: &mut EnvironmentState, candidates: u32) -> CaptureOutcome {
    let prey_id = match &state.task_state {
        TaskState::Pursuit { prey: Some(id) } => *id,
        _ => return CaptureOutcome::NotCaught,
    };
    let pos = match state.meshes.get(&prey_id) {
        Some(m) => m.anchor,
        None => return CaptureOutcome::NotCaught,
    };
    let caught = DIRECTIONS.iter().all(|d| {
        matches!(
            state.cell_at(pos.step(*d)),
            CellContent::Agent { .. } | CellContent::Wall
        )
    });
    if !caught {
        return CaptureOutcome::NotCaught;
    }

    state.score += 1.0;
    state.meshes.remove(&prey_id);

    let empties: Vec<Coord> = (0..state.height)
        .flat_map(|i| (0..state.width).map(move |j| Coord::new(i, j)))
        .filter(|&c| state.is_empty_cell(c))
        .collect();
    if empties.is_empty() {
        state.task_state = TaskState::Pursuit { prey: None };
        return CaptureOutcome::CaughtNoRespawn;
    }
    let mut best: Option<(f64, Coord)> = None;
    for _ in 0..candidates.max(1) {
        let c = empties[state.rng.gen_range(0..empties.len())];
        let h = threat_heuristic(state, c);
        let better = match best {
            None => true,
            Some((bh, bc)) => h < bh || (h == bh && (c.i, c.j) < (bc.i, bc.j)),
        };
        if better {
            best = Some((h, c));
        }
    }
    let (_, spawn) = best.expect("at least one candidate");
    let id = state.add_mesh(Mesh::unit(0, spawn, MeshKind::Prey));
    state.task_state = TaskState::Pursuit { prey: Some(id) };
    CaptureOutcome::CaughtRespawned(spawn)
}

/// Synchronization scoring: scored iff all lights are equal AND (no
/// previous scored state, or the new unanimous state differs from it).
pub fn sync_update(lights: &[bool], prev_state: Option<bool>) -> (Option<bool>, bool) {
    if lights.is_empty() {
        return (prev_state, false);
    }
    let first = lights[0];
    if !lights.iter().all(|&l| l == first) {
        return (prev_state, false);
    }
    match prev_state {
        Some(p) if p == first => (prev_state, false),
        _ => (Some(first), true),
    }
}

/// Foraging pickup/drop pass. Non-carrying agents 4-adjacent to food start
/// carrying; agents that were already carrying at round entry and are
/// 4-adjacent to the nest deliver (score += 1 each). An agent adjacent to
/// both in the same round therefore picks up now and delivers next round.
pub fn foraging_update(state: &mut EnvironmentState) -> u32 {
    let carriers_before: BTreeSet<u32> = state
        .agents
        .iter()
        .filter(|a| a.flagged)
        .map(|a| a.id)
        .collect();

    let adjacent_to = |state: &EnvironmentState, pos: Coord, kind: MeshKind| {
        DIRECTIONS.iter().any(|d| {
            let c = pos.step(*d);
            state
                .meshes
                .values()
                .any(|m| m.kind == kind && m.occupies(c))
        })
    };

    let ids: Vec<u32> = state.agents.iter().map(|a| a.id).collect();
    for id in &ids {
        let pos = state.agent_pos(*id).expect("live agent");
        if !state.agent(*id).unwrap().flagged && adjacent_to(state, pos, MeshKind::Food) {
            state.agent_mut(*id).unwrap().flagged = true;
        }
    }
    let mut delivered = 0;
    for id in &ids {
        if !carriers_before.contains(id) {
            continue;
        }
        let pos = state.agent_pos(*id).expect("live agent");
        if state.agent(*id).unwrap().flagged && adjacent_to(state, pos, MeshKind::Nest) {
            state.agent_mut(*id).unwrap().flagged = false;
            state.score += 1.0;
            delivered += 1;
        }
    }
    delivered
}

/// Translation-invariant assignment cost between two equally-sized point
/// sets: minimum over candidate translations (all pairwise src-tgt
/// differences) of the optimal matching under the half-Manhattan entry
/// cost. Exact; solved via the Hungarian method on doubled integer costs.
pub fn flocking_distance(src: &[Coord], tgt: &[Coord]) -> Result<f64, TaskError> {
    if src.len() != tgt.len() {
        return Err(TaskError::SizeMismatch {
            src: src.len(),
            tgt: tgt.len(),
        });
    }
    if src.is_empty() {
        return Ok(0.0);
    }
    let mut translations: BTreeSet<(i32, i32)> = BTreeSet::new();
    for s in src {
        for t in tgt {
            translations.insert((s.i - t.i, s.j - t.j));
        }
    }
    let mut best: Option<i64> = None;
    for (di, dj) in translations {
        // Doubled cost keeps the half-unit entries integral.
        let cost: Vec<Vec<i64>> = src
            .iter()
            .map(|s| {
                tgt.iter()
                    .map(|t| {
                        ((s.i - t.i - di).abs() + (s.j - t.j - dj).abs()) as i64
                    })
                    .collect()
            })
            .collect();
        let (total, _) = solve_min_assignment(&cost);
        if best.map(|b| total < b).unwrap_or(true) {
            best = Some(total);
        }
    }
    Ok(best.expect("nonempty translation set") as f64 / 2.0)
}

/// Recompute `cur_dis` and fold it into the non-decreasing score. Returns
/// true when the formation matches the target exactly (task complete).
pub fn flocking_update_score(state: &mut EnvironmentState) -> bool {
    let positions: Vec<Coord> = state
        .agents
        .iter()
        .filter_map(|a| state.meshes.get(&a.mesh).map(|m| m.anchor))
        .collect();
    let (target, init_dis) = match &state.task_state {
        TaskState::Flocking {
            target, init_dis, ..
        } => (target.clone(), *init_dis),
        _ => return false,
    };
    let cur = flocking_distance(&positions, &target).unwrap_or(f64::INFINITY);
    if init_dis - cur > state.score {
        state.score = init_dis - cur;
    }
    if let TaskState::Flocking { cur_dis, .. } = &mut state.task_state {
        *cur_dis = cur;
    }
    cur == 0.0
}

/// Transport escape bonus for one agent leaving the map at `round`:
/// (max_round - round) / max_round.
pub fn transport_escape_bonus(round: u32, max_round: u32) -> f64 {
    debug_assert!(max_round > 0);
    (max_round.saturating_sub(round)) as f64 / max_round as f64
}

/// Credit newly escaped agents and record them. Returns the score delta;
/// the task is done when no agents remain.
pub fn transport_update(state: &mut EnvironmentState, escapees: &[u32], round: u32) -> f64 {
    let mut delta = 0.0;
    let max_round = state.max_round;
    if let TaskState::Transport { escaped } = &mut state.task_state {
        for &agent in escapees {
            if escaped.iter().any(|(a, _)| *a == agent) {
                continue;
            }
            escaped.push((agent, round));
            delta += transport_escape_bonus(round, max_round);
        }
    }
    state.score += delta;
    delta
}

/// Prompt task descriptions shown to agents.
pub fn task_description(task: crate::gen::TaskKind) -> &'static str {
    use crate::gen::TaskKind;
    match task {
        TaskKind::Pursuit => {
            "A prey (denoted as P) moves around the map. The goal is to surround it: the prey is caught when all four of its adjacent cells (up, down, left, right) are occupied by agents or walls. Each capture scores 1 point and the prey respawns elsewhere."
        }
        TaskKind::Synchronization => {
            "Each agent has an internal light that is either on or off. An agent whose light is on appears as $Number, otherwise as Number. Use the SWITCH action to toggle your own light. The group scores 1 point whenever every agent's light is in the same state and that state differs from the last scored unanimous state.\nAdditional action:\n7. SWITCH: Toggle your own light."
        }
        TaskKind::Foraging => {
            "Food (denoted as F) and a nest (denoted as N) are placed in the map. Move next to F to pick up food (you will appear as $Number while carrying), then move next to N to drop it. Each delivery scores 1 point."
        }
        TaskKind::Flocking => {
            "The goal is to arrange yourselves into a target shape: a hollow square. Move together with the other agents; the score reflects how closely the formation matches the target shape, regardless of where it sits on the map."
        }
        TaskKind::Transport => {
            "The boundary of the map is surrounded by walls (denoted as W), with a gap leading to the outside of the map (denoted as '*'). The gap is blocked by an obstacle (denoted as B).\nThe goal is to first locate the obstacle (B), then have five robots simultaneously push it through the exit, and finally escape to the outside of the map (denoted as '*')."
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sync_truth_table() {
        // (all-equal value or None for mixed, prev) -> scored
        assert_eq!(sync_update(&[false, false], None), (Some(false), true));
        assert_eq!(sync_update(&[false, false], Some(false)), (Some(false), false));
        assert_eq!(sync_update(&[true, true], Some(false)), (Some(true), true));
        assert_eq!(sync_update(&[true, false], Some(false)), (Some(false), false));
        assert_eq!(sync_update(&[true, false], None), (None, false));
    }

    #[test]
    fn flocking_distance_identity_and_translation() {
        let src = [Coord::new(1, 1), Coord::new(2, 5), Coord::new(7, 3)];
        assert_eq!(flocking_distance(&src, &src).unwrap(), 0.0);
        let shifted: Vec<Coord> = src.iter().map(|c| c.offset(3, -2)).collect();
        assert_eq!(flocking_distance(&src, &shifted).unwrap(), 0.0);
    }

    #[test]
    fn flocking_distance_spec_example() {
        let src = [Coord::new(0, 0), Coord::new(0, 3)];
        let tgt = [Coord::new(0, 0), Coord::new(0, 1)];
        assert_eq!(flocking_distance(&src, &tgt).unwrap(), 1.0);
    }

    #[test]
    fn flocking_distance_size_mismatch() {
        let src = [Coord::new(0, 0)];
        let tgt = [Coord::new(0, 0), Coord::new(0, 1)];
        assert!(flocking_distance(&src, &tgt).is_err());
    }

    #[test]
    fn transport_bonus_boundaries() {
        assert_eq!(transport_escape_bonus(0, 100), 1.0);
        assert_eq!(transport_escape_bonus(42, 100), 0.58);
        assert_eq!(transport_escape_bonus(100, 100), 0.0);
    }
}
