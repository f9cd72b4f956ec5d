//! Per-round coordination and communication metrics, plus run-level
//! aggregation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use libm::{log2, sqrt};

use crate::agent::Action;
use crate::grid::{Coord, Direction};

/// Everything a round's metrics are computed from.
#[derive(Debug, Clone, Default)]
pub struct RoundRecord {
    /// Action chosen by each agent that was on the map this round.
    pub actions: BTreeMap<u32, Action>,
    /// Agent positions when decisions were made.
    pub positions_before: BTreeMap<u32, Coord>,
    /// Agent positions after the round committed (absent if escaped).
    pub positions_after: BTreeMap<u32, Coord>,
    /// Direction each agent actually travelled, if it was displaced.
    pub displaced: BTreeMap<u32, Direction>,
    /// Non-empty broadcast messages.
    pub messages: Vec<String>,
}

/// Metrics of a single round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundMetrics {
    /// Shannon entropy (bits) of the UP/DOWN/LEFT/RIGHT action distribution.
    pub directional_entropy: f64,
    /// Length of the mean heading vector over coordination actors (agents
    /// choosing a direction or STAY; STAY contributes the zero vector).
    pub polarization: f64,
    /// Fraction of all agents choosing STAY.
    pub stillness: f64,
    /// Share of the most common action (STAY included) among coordination
    /// actors.
    pub dominant_action_prop: f64,
    /// Mean Manhattan displacement per agent.
    pub avg_moving_distance: f64,
    /// Cumulative count of distinct cells any agent has occupied.
    pub exploration: f64,
    /// Agent pairs that were 4-adjacent both before and after the round.
    pub local_structure: f64,
    /// Successful pushes: pusher and pushee both displaced along the intent.
    pub push_events: f64,
    /// Fraction of non-empty messages containing a question mark.
    pub msg_question_prop: f64,
    /// Mean character length of non-empty messages.
    pub msg_len_mean: f64,
    /// Population standard deviation of message lengths.
    pub msg_len_std: f64,
    /// Digit characters over all characters of non-empty messages.
    pub msg_digit_prop: f64,
    /// Reserved: semantic similarity needs an embedding model, which the
    /// engine does not ship. Always absent.
    pub info_homogeneity: Option<f64>,
}

fn heading(d: Direction) -> (f64, f64) {
    // (x, y) with y growing downward, matching the grid.
    match d {
        Direction::Up => (0.0, -1.0),
        Direction::Down => (0.0, 1.0),
        Direction::Left => (-1.0, 0.0),
        Direction::Right => (1.0, 0.0),
    }
}

/// Tracks every cell any agent has ever occupied, across rounds.
#[derive(Debug, Clone, Default)]
pub struct ExplorationTracker {
    visited: BTreeSet<Coord>,
}

impl ExplorationTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record the positions of one round and return the cumulative count.
    pub fn record<'a, I: IntoIterator<Item = &'a Coord>>(&mut self, positions: I) -> usize {
        for &c in positions {
            self.visited.insert(c);
        }
        self.visited.len()
    }

    pub fn count(&self) -> usize {
        self.visited.len()
    }
}

/// Compute one round's metrics. `exploration` must already have been fed
/// this round's (pre-step and post-step) positions.
pub fn compute_round_metrics(rec: &RoundRecord, exploration: &ExplorationTracker) -> RoundMetrics {
    let total_agents = rec.actions.len();

    let mut dir_counts: BTreeMap<Direction, usize> = BTreeMap::new();
    let mut stay = 0usize;
    for a in rec.actions.values() {
        match a.direction() {
            Some(d) => *dir_counts.entry(d).or_insert(0) += 1,
            None => {
                if *a == Action::Stay {
                    stay += 1;
                }
            }
        }
    }
    let movers: usize = dir_counts.values().sum();
    // "Coordination actors": agents choosing a direction or STAY.
    let coord = movers + stay;

    let directional_entropy = if movers == 0 {
        0.0
    } else {
        -dir_counts
            .values()
            .map(|&c| {
                let p = c as f64 / movers as f64;
                p * log2(p)
            })
            .sum::<f64>()
    };

    let polarization = if coord == 0 {
        0.0
    } else {
        let (mut x, mut y) = (0.0, 0.0);
        for (&d, &c) in &dir_counts {
            let (hx, hy) = heading(d);
            x += hx * c as f64;
            y += hy * c as f64;
        }
        // STAY contributes the zero vector but counts in the denominator.
        let mx = x / coord as f64;
        let my = y / coord as f64;
        sqrt(mx * mx + my * my)
    };

    let stillness = if total_agents == 0 {
        0.0
    } else {
        stay as f64 / total_agents as f64
    };

    let dominant_action_prop = if coord == 0 {
        0.0
    } else {
        let top = dir_counts.values().copied().max().unwrap_or(0).max(stay);
        top as f64 / coord as f64
    };

    let avg_moving_distance = if total_agents == 0 {
        0.0
    } else {
        let total: i32 = rec
            .positions_before
            .iter()
            .filter_map(|(id, before)| {
                rec.positions_after.get(id).map(|after| before.manhattan(*after))
            })
            .sum();
        total as f64 / total_agents as f64
    };

    let adjacent_pairs = |positions: &BTreeMap<u32, Coord>| -> BTreeSet<(u32, u32)> {
        let mut pairs = BTreeSet::new();
        let ids: Vec<u32> = positions.keys().copied().collect();
        for (x, &a) in ids.iter().enumerate() {
            for &b in &ids[x + 1..] {
                if positions[&a].manhattan(positions[&b]) == 1 {
                    pairs.insert((a, b));
                }
            }
        }
        pairs
    };
    let before_pairs = adjacent_pairs(&rec.positions_before);
    let after_pairs = adjacent_pairs(&rec.positions_after);
    let local_structure = before_pairs.intersection(&after_pairs).count() as f64;

    // A push event: agent A intended direction d, actually moved along d,
    // and the agent in the cell A faced also moved along d.
    let mut push_events = 0usize;
    for (&a, action) in &rec.actions {
        let d = match action.direction() {
            Some(d) => d,
            None => continue,
        };
        if rec.displaced.get(&a) != Some(&d) {
            continue;
        }
        let front = match rec.positions_before.get(&a) {
            Some(p) => p.step(d),
            None => continue,
        };
        let pushee = rec
            .positions_before
            .iter()
            .find(|(id, &p)| **id != a && p == front)
            .map(|(id, _)| *id);
        if let Some(b) = pushee {
            if rec.displaced.get(&b) == Some(&d) {
                push_events += 1;
            }
        }
    }

    let lens: Vec<f64> = rec
        .messages
        .iter()
        .filter(|m| !m.is_empty())
        .map(|m| m.chars().count() as f64)
        .collect();
    let msg_question_prop = if lens.is_empty() {
        0.0
    } else {
        rec.messages
            .iter()
            .filter(|m| !m.is_empty() && m.contains('?'))
            .count() as f64
            / lens.len() as f64
    };

    let (msg_len_mean, msg_len_std, msg_digit_prop) = if lens.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let mean = lens.iter().sum::<f64>() / lens.len() as f64;
        let var = lens.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / lens.len() as f64;
        let mut digits = 0usize;
        let mut chars = 0usize;
        for m in rec.messages.iter().filter(|m| !m.is_empty()) {
            for c in m.chars() {
                chars += 1;
                if c.is_ascii_digit() {
                    digits += 1;
                }
            }
        }
        (mean, sqrt(var), digits as f64 / chars as f64)
    };

    RoundMetrics {
        directional_entropy,
        polarization,
        stillness,
        dominant_action_prop,
        avg_moving_distance,
        exploration: exploration.count() as f64,
        local_structure,
        push_events: push_events as f64,
        msg_question_prop,
        msg_len_mean,
        msg_len_std,
        msg_digit_prop,
        info_homogeneity: None,
    }
}

/// Arithmetic mean of each metric across a run's rounds.
pub fn run_summary(rounds: &[RoundMetrics]) -> Option<RoundMetrics> {
    if rounds.is_empty() {
        return None;
    }
    let n = rounds.len() as f64;
    let mean = |f: fn(&RoundMetrics) -> f64| rounds.iter().map(f).sum::<f64>() / n;
    Some(RoundMetrics {
        directional_entropy: mean(|m| m.directional_entropy),
        polarization: mean(|m| m.polarization),
        stillness: mean(|m| m.stillness),
        dominant_action_prop: mean(|m| m.dominant_action_prop),
        avg_moving_distance: mean(|m| m.avg_moving_distance),
        exploration: mean(|m| m.exploration),
        local_structure: mean(|m| m.local_structure),
        push_events: mean(|m| m.push_events),
        msg_question_prop: mean(|m| m.msg_question_prop),
        msg_len_mean: mean(|m| m.msg_len_mean),
        msg_len_std: mean(|m| m.msg_len_std),
        msg_digit_prop: mean(|m| m.msg_digit_prop),
        info_homogeneity: None,
    })
}

/// Metric column order used by tabular exports.
pub const METRIC_NAMES: [&str; 13] = [
    "directional_entropy",
    "polarization",
    "stillness",
    "dominant_action_prop",
    "avg_moving_distance",
    "exploration",
    "local_structure",
    "push_events",
    "msg_question_prop",
    "msg_len_mean",
    "msg_len_std",
    "msg_digit_prop",
    "info_homogeneity",
];

impl RoundMetrics {
    /// Values in [`METRIC_NAMES`] order; `info_homogeneity` is NaN when
    /// absent.
    pub fn values(&self) -> [f64; 13] {
        [
            self.directional_entropy,
            self.polarization,
            self.stillness,
            self.dominant_action_prop,
            self.avg_moving_distance,
            self.exploration,
            self.local_structure,
            self.push_events,
            self.msg_question_prop,
            self.msg_len_mean,
            self.msg_len_std,
            self.msg_digit_prop,
            self.info_homogeneity.unwrap_or(f64::NAN),
        ]
    }
}
