//! Round loop: prompts out, intents in, one synchronized commit per round.
//!
//! Round commit order: light toggles, physics, escape credit, foraging
//! pickup/delivery, capture check and respawn, prey movement, unanimity
//! scoring, formation scoring, then message delivery for the next round.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use crate::agent::{
    deliver_messages, history_str, level_obs_str, messages_str, render_prompt, render_view,
    truncate_message, view_str, Action, ActionIntent, HistoryEntry,
};
use crate::gen::{generate_environment, EnvConfig, GenError, TaskKind};
use crate::grid::{Coord, Direction, EnvironmentState, MeshId};
use crate::metrics::RoundRecord;
use crate::physics::apply_movement;
use crate::tasks::{
    flocking_update_score, foraging_update, pursuit_check_and_respawn, pursuit_prey_step,
    sync_update, transport_update, CaptureOutcome, TaskState,
};

/// Start-of-round world snapshot, as recorded by run logs.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSnapshot {
    /// Cell tokens, row-major.
    pub grid: Vec<Vec<String>>,
    pub score: f64,
    /// (agent id, position) for agents still on the map.
    pub agents: Vec<(u32, Coord)>,
    /// Messages broadcast during the preceding round.
    pub messages: Vec<String>,
}

/// Everything one committed round produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// 1-based index of the round just played.
    pub round: u32,
    /// World as it stood when decisions were made.
    pub snapshot: RoundSnapshot,
    pub actions: BTreeMap<u32, Action>,
    /// Non-empty outgoing messages, already capped.
    pub messages_sent: BTreeMap<u32, String>,
    pub positions_before: BTreeMap<u32, Coord>,
    /// Missing entries are agents that left the map this round.
    pub positions_after: BTreeMap<u32, Coord>,
    /// Direction each agent was displaced, whether walking or being pushed.
    pub displaced: BTreeMap<u32, Direction>,
    /// Agents that escaped the map this round.
    pub escapes: Vec<u32>,
    /// Prey captures this round (0 or 1).
    pub captures: u32,
    /// Food deliveries this round.
    pub delivered: u32,
    pub score_after: f64,
    pub done: bool,
}

impl StepOutcome {
    /// Input row for the round-metrics computation.
    pub fn to_round_record(&self) -> RoundRecord {
        RoundRecord {
            actions: self.actions.clone(),
            positions_before: self.positions_before.clone(),
            positions_after: self.positions_after.clone(),
            displaced: self.displaced.clone(),
            messages: self.messages_sent.values().cloned().collect(),
        }
    }
}

/// A live benchmark episode. The engine never talks to models: callers
/// fetch prompts, produce intents however they like, and commit them with
/// [`Episode::step`], which takes the full intent vector at once — a
/// structural barrier, so no agent can act on a round before every
/// decision of that round exists.
#[derive(Debug, Clone)]
pub struct Episode {
    pub state: EnvironmentState,
    pub cfg: EnvConfig,
    /// Per-agent past views, newest first, capped at memory - 1.
    frames: BTreeMap<u32, VecDeque<String>>,
    history: BTreeMap<u32, Vec<HistoryEntry>>,
    /// Messages delivered at the end of the previous round.
    inboxes: BTreeMap<u32, Vec<String>>,
    /// Broadcasts of the previous round, for start-of-round snapshots.
    last_broadcast: Vec<String>,
    done: bool,
}

impl Episode {
    pub fn new(task: TaskKind, seed: u64, cfg: EnvConfig) -> Result<Self, GenError> {
        let state = generate_environment(task, seed, &cfg)?;
        let mut frames = BTreeMap::new();
        let mut history = BTreeMap::new();
        let mut inboxes = BTreeMap::new();
        for a in &state.agents {
            frames.insert(a.id, VecDeque::new());
            history.insert(a.id, Vec::new());
            inboxes.insert(a.id, Vec::new());
        }
        Ok(Episode {
            state,
            cfg,
            frames,
            history,
            inboxes,
            last_broadcast: Vec::new(),
            done: false,
        })
    }

    pub fn done(&self) -> bool {
        self.done
    }

    /// 1-based number of the round about to be played.
    pub fn current_round(&self) -> u32 {
        self.state.round + 1
    }

    pub fn score(&self) -> f64 {
        self.state.score
    }

    /// Ids of agents still on the map, ascending.
    pub fn live_agents(&self) -> Vec<u32> {
        self.state.agents.iter().map(|a| a.id).collect()
    }

    /// Current egocentric view of one agent.
    pub fn view(&self, agent_id: u32) -> Option<String> {
        self.state.agent_pos(agent_id)?;
        Some(render_view(&self.state, agent_id, self.cfg.view_size))
    }

    /// Decision prompts for every live agent.
    pub fn prompts(&self) -> BTreeMap<u32, String> {
        let mut out = BTreeMap::new();
        for a in &self.state.agents {
            let current = render_view(&self.state, a.id, self.cfg.view_size);
            let mut all_frames = Vec::with_capacity(self.cfg.memory_size as usize);
            all_frames.push(current);
            if let Some(past) = self.frames.get(&a.id) {
                all_frames.extend(past.iter().cloned());
            }
            let inbox = self.inboxes.get(&a.id).cloned().unwrap_or_default();
            let hist = self.history.get(&a.id).cloned().unwrap_or_default();
            let hist_window: Vec<HistoryEntry> = hist
                .iter()
                .rev()
                .take(self.cfg.memory_size as usize)
                .rev()
                .cloned()
                .collect();
            let prompt = render_prompt(
                self.state.task,
                &a.name(),
                self.current_round(),
                self.cfg.memory_size,
                self.cfg.view_size,
                &view_str(&all_frames),
                level_obs_str(),
                &messages_str(&inbox),
                &history_str(&hist_window),
            );
            out.insert(a.id, prompt);
        }
        out
    }

    /// World snapshot as of decision time this round.
    pub fn snapshot(&self) -> RoundSnapshot {
        RoundSnapshot {
            grid: self.state.symbol_grid(),
            score: self.state.score,
            agents: self
                .state
                .agents
                .iter()
                .filter_map(|a| self.state.agent_pos(a.id).map(|p| (a.id, p)))
                .collect(),
            messages: self.last_broadcast.clone(),
        }
    }

    /// Commit one round. Intents for escaped agents are ignored; live
    /// agents without an intent stay in place silently.
    pub fn step(&mut self, intents: &BTreeMap<u32, ActionIntent>) -> StepOutcome {
        let round = self.current_round();
        let snapshot = self.snapshot();
        let allow_switch = self.state.task == TaskKind::Synchronization;

        let live: Vec<u32> = self.live_agents();
        let stay = ActionIntent::stay();
        let mut actions: BTreeMap<u32, Action> = BTreeMap::new();
        let mut messages_sent: BTreeMap<u32, String> = BTreeMap::new();
        for &id in &live {
            let intent = intents.get(&id).unwrap_or(&stay);
            let mut action = intent.action;
            if action == Action::Switch && !allow_switch {
                action = Action::Stay;
            }
            actions.insert(id, action);
            if !intent.message.is_empty() {
                messages_sent.insert(id, truncate_message(&intent.message));
            }
        }

        let positions_before: BTreeMap<u32, Coord> = live
            .iter()
            .filter_map(|&id| self.state.agent_pos(id).map(|p| (id, p)))
            .collect();

        // Decision-time views become memory frames for later prompts.
        for &id in &live {
            let view = render_view(&self.state, id, self.cfg.view_size);
            let frames = self.frames.entry(id).or_default();
            frames.push_front(view);
            while frames.len() > self.cfg.memory_size.saturating_sub(1) as usize {
                frames.pop_back();
            }
        }

        // Light toggles commit before anything else this round.
        if allow_switch {
            for (&id, &a) in &actions {
                if a == Action::Switch {
                    if let Some(agent) = self.state.agent_mut(id) {
                        agent.flagged = !agent.flagged;
                    }
                }
            }
        }

        // Physics.
        let mesh_to_agent: BTreeMap<MeshId, u32> =
            self.state.agents.iter().map(|a| (a.mesh, a.id)).collect();
        let dir_intents: BTreeMap<u32, Direction> = actions
            .iter()
            .filter_map(|(&id, a)| a.direction().map(|d| (id, d)))
            .collect();
        let movement = apply_movement(&mut self.state, &dir_intents);
        let displaced: BTreeMap<u32, Direction> = movement
            .displaced
            .iter()
            .filter_map(|(mesh, &d)| mesh_to_agent.get(mesh).map(|&id| (id, d)))
            .collect();
        let escapes: Vec<u32> = movement
            .escaped
            .iter()
            .filter_map(|mesh| mesh_to_agent.get(mesh).copied())
            .collect();

        // Task scoring.
        let mut captures = 0;
        let mut delivered = 0;
        match self.state.task {
            TaskKind::Transport => {
                transport_update(&mut self.state, &escapes, round);
                if self.state.agents.is_empty() {
                    self.done = true;
                }
            }
            TaskKind::Foraging => {
                delivered = foraging_update(&mut self.state);
            }
            TaskKind::Pursuit => {
                match pursuit_check_and_respawn(&mut self.state, self.cfg.respawn_candidates) {
                    CaptureOutcome::NotCaught => {}
                    CaptureOutcome::CaughtRespawned(_) => captures = 1,
                    CaptureOutcome::CaughtNoRespawn => {
                        captures = 1;
                        self.done = true;
                    }
                }
                pursuit_prey_step(&mut self.state);
            }
            TaskKind::Synchronization => {
                let lights: Vec<bool> = self.state.agents.iter().map(|a| a.flagged).collect();
                if let TaskState::Synchronization { prev_state } = &self.state.task_state {
                    let (next, scored) = sync_update(&lights, *prev_state);
                    self.state.task_state = TaskState::Synchronization { prev_state: next };
                    if scored {
                        self.state.score += 1.0;
                    }
                }
            }
            TaskKind::Flocking => {
                if flocking_update_score(&mut self.state) {
                    self.done = true;
                }
            }
        }

        let positions_after: BTreeMap<u32, Coord> = live
            .iter()
            .filter_map(|&id| self.state.agent_pos(id).map(|p| (id, p)))
            .collect();

        // History lines for next round's prompts.
        for &id in &live {
            let entry = HistoryEntry {
                round,
                action: actions[&id],
                message: messages_sent.get(&id).cloned().unwrap_or_default(),
            };
            self.history.entry(id).or_default().push(entry);
        }

        // Message delivery uses decision-time positions; agents no longer
        // on the map receive nothing.
        let inboxes = deliver_messages(&positions_before, &messages_sent, self.cfg.view_size);
        self.inboxes.clear();
        for a in &self.state.agents {
            self.inboxes
                .insert(a.id, inboxes.get(&a.id).cloned().unwrap_or_default());
        }
        self.last_broadcast = messages_sent.values().cloned().collect();

        self.state.round += 1;
        if self.state.round >= self.state.max_round {
            self.done = true;
        }

        StepOutcome {
            round,
            snapshot,
            actions,
            messages_sent,
            positions_before,
            positions_after,
            displaced,
            escapes,
            captures,
            delivered,
            score_after: self.state.score,
            done: self.done,
        }
    }
}
