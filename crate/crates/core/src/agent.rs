//! Agent-facing surface: egocentric views, the decision prompt, response
//! parsing, and message delivery.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::format;

use crate::gen::TaskKind;
use crate::grid::{render_grid, Coord, Direction, EnvironmentState};
use crate::tasks::task_description;

/// Maximum message length; longer messages are cut and suffixed "...".
pub const MSG_CAP: usize = 120;

/// One decoded agent decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
    Switch,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "UP",
            Action::Down => "DOWN",
            Action::Left => "LEFT",
            Action::Right => "RIGHT",
            Action::Stay => "STAY",
            Action::Switch => "SWITCH",
        }
    }

    pub fn parse(token: &str) -> Option<Action> {
        match token.to_ascii_uppercase().as_str() {
            "UP" => Some(Action::Up),
            "DOWN" => Some(Action::Down),
            "LEFT" => Some(Action::Left),
            "RIGHT" => Some(Action::Right),
            "STAY" => Some(Action::Stay),
            "SWITCH" => Some(Action::Switch),
            _ => None,
        }
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            Action::Up => Some(Direction::Up),
            Action::Down => Some(Direction::Down),
            Action::Left => Some(Direction::Left),
            Action::Right => Some(Direction::Right),
            Action::Stay | Action::Switch => None,
        }
    }
}

/// Parsed decision plus any outgoing message. `parse_failure` marks
/// responses with no recognizable action (the agent then stays silent
/// and in place).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionIntent {
    pub action: Action,
    pub message: String,
    pub parse_failure: bool,
}

impl ActionIntent {
    pub fn stay() -> Self {
        ActionIntent {
            action: Action::Stay,
            message: String::new(),
            parse_failure: false,
        }
    }
}

/// One line of an agent's action history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryEntry {
    pub round: u32,
    pub action: Action,
    pub message: String,
}

/// Egocentric square view of side `k` (odd) centered on the agent, with
/// global coordinate labels. The agent renders as `Y` (or `$Y` when its
/// flag is lit); off-map cells render `*`.
pub fn render_view(state: &EnvironmentState, agent_id: u32, k: u32) -> String {
    let center = state.agent_pos(agent_id).expect("agent on map");
    let flagged = state.agent(agent_id).map(|a| a.flagged).unwrap_or(false);
    let r = (k / 2) as i32;
    let rows: Vec<i32> = (center.i - r..=center.i + r).collect();
    let cols: Vec<i32> = (center.j - r..=center.j + r).collect();
    let grid: Vec<Vec<String>> = rows
        .iter()
        .map(|&i| {
            cols.iter()
                .map(|&j| {
                    let c = Coord::new(i, j);
                    if c == center {
                        if flagged {
                            String::from("$Y")
                        } else {
                            String::from("Y")
                        }
                    } else {
                        state.cell_at(c).token()
                    }
                })
                .collect()
        })
        .collect();
    render_grid(&rows, &cols, &grid, &|_i, _j, tok: &String| tok.clone())
}

/// Stack memory frames (newest first) under their step labels. Each frame
/// already ends with a newline; blocks are separated by a blank line.
pub fn view_str(frames: &[String]) -> String {
    let mut blocks = Vec::new();
    for (age, frame) in frames.iter().enumerate() {
        let label = if age == 0 {
            String::from("Current Step:")
        } else {
            format!("{age} Steps Before:")
        };
        blocks.push(format!("{label}\n{frame}"));
    }
    blocks.join("\n")
}

/// Inbox lines; messages are printed verbatim (they carry their own
/// quoting, if any).
pub fn messages_str(inbox: &[String]) -> String {
    let mut out = String::new();
    for m in inbox {
        out.push_str(&format!("Message: {m}\n"));
    }
    out
}

pub fn history_str(entries: &[HistoryEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!(
            "Round {}: Action: {}, Message: {}\n",
            e.round,
            e.action.name(),
            e.message
        ));
    }
    out
}

/// Assemble the full decision prompt.
#[allow(clippy::too_many_arguments)]
pub fn render_prompt(
    task: TaskKind,
    agent_name: &str,
    round: u32,
    memory: u32,
    view_size: u32,
    view: &str,
    level_obs: &str,
    messages: &str,
    history: &str,
) -> String {
    let task_desc = task_description(task);
    let k = view_size;
    format!(
        "You are Agent {agent_name}, operating in a multi-agent environment. Your goal is to complete the task through exploration and collaboration.\n\
         \n\
         Task description:\n\
         {task_desc}\n\
         \n\
         Round: {round}\n\
         \n\
         Your recent {memory}-step vision (not the entire map):\n\
         {view}\n\
         \n\
         Your current observation:\n\
         {level_obs}\n\
         \n\
         Message you received:\n\
         {messages}\n\
         \n\
         Your action history:\n\
         {history}\n\
         \n\
         Symbol legend:\n\
         - Number: An agent whose id is this number (do not mistake column no. and line no. as agent id).\n\
         - Y: Yourself. Others see you as your id instead of \"Y\".\n\
         - W: Wall.\n\
         - B: Pushable obstacle (requires at least 5 agents pushing in the same direction).\n\
         - .: Empty space (you can move to this area).\n\
         - *: Area outside the map.\n\
         And other symbols given in task description (if any).\n\
         \n\
         Available actions:\n\
         1. UP: Move up\n\
         2. DOWN: Move down\n\
         3. LEFT: Move left\n\
         4. RIGHT: Move right\n\
         5. STAY: Stay in place\n\
         6. MSG: Send a message\n\
         And other actions given in task description (if any).\n\
         \n\
         Physics rules:\n\
         1. Your own weight is 1, and you can exert a force of up to 2.\n\
         2. An object (including yourself) can only be pushed if the total force in one direction is greater than or equal to its weight.\n\
         3. Static objects like W (walls) cannot be pushed; only B can be pushed.\n\
         4. Force can be transmitted, but only between directly adjacent objects. That means, if an agent is applying force in a direction, you can push that agent from behind to help.\n\
         5. Only pushing is allowed - there is no pulling or lateral dragging. In other words, to push an object to the right, you must be on its left side and take the RIGHT action to apply force.\n\
         \n\
         Message rules:\n\
         1. A message is a string including things you want to tell other agents.\n\
         2. Your message can be received by all agents within your view, and you can receive messages from all agents within your view.\n\
         3. Messages are broadcast-based. The source of a message is anonymous.\n\
         4. Write only what's necessary in your message. Avoid any ambiguity in your message.\n\
         5. Messages is capped to no more than 120 characters, exceeding part will be replaced by \"...\".\n\
         \n\
         Other rules:\n\
         1. Coordinates are represented as (i, j), where i is the row index and j is the column index. Your {k}x{k} vision uses global coordinates, so please use global coordinates.\n\
         2. The direction of increasing i is downward, and increasing j is to the right.\n\
         3. Objects that are completely outside the map (marked with \"*\") will be removed.\n\
         \n\
         Please think carefully and choose your next action. You will need to collaborate with other agents to successfully complete the task.\n\
         \n\
         Your response should include:\n\
         1. Analysis of the current situation\n\
         2. Your decision and reasoning\n\
         3. The message to be left (if any)\n\
         \n\
         End your response clearly with your chosen action: \"ACTION: [YOUR_ACTION]\" and/or \"MSG: [Your message (no line breaks).]\" "
    )
}

/// Cap a message at [`MSG_CAP`] characters, replacing the excess with "...".
pub fn truncate_message(msg: &str) -> String {
    let chars: Vec<char> = msg.chars().collect();
    if chars.len() <= MSG_CAP {
        msg.to_string()
    } else {
        let mut out: String = chars[..MSG_CAP - 3].iter().collect();
        out.push_str("...");
        out
    }
}

fn clean_action_token(raw: &str) -> String {
    raw.trim()
        .trim_matches(|c: char| {
            matches!(c, '[' | ']' | '(' | ')' | '"' | '\'' | '*' | '`' | '.' | ',' | '!' | ':')
        })
        .trim()
        .to_string()
}

/// Strip one layer of enclosing brackets, as in `MSG: [hello]`.
fn strip_brackets(raw: &str) -> &str {
    let t = raw.trim();
    if t.len() >= 2 && t.starts_with('[') && t.ends_with(']') {
        t[1..t.len() - 1].trim()
    } else {
        t
    }
}

/// Decode a raw model response. All case-insensitive `ACTION:` markers are
/// scanned and the last valid action wins (`SWITCH` only counts when
/// `allow_switch`); likewise the last `MSG:` payload becomes the outgoing
/// message, capped at 120 characters. A response with no valid action
/// yields STAY with no message and the parse-failure flag set.
pub fn parse_response(text: &str, allow_switch: bool) -> ActionIntent {
    let mut action: Option<Action> = None;
    let mut message: Option<String> = None;

    for line in text.lines() {
        let upper = line.to_ascii_uppercase();
        if let Some(pos) = upper.rfind("ACTION:") {
            let rest = &line[pos + "ACTION:".len()..];
            // The token is the first word of the cleaned remainder.
            let cleaned = clean_action_token(rest);
            let first = cleaned.split_whitespace().next().unwrap_or("");
            if let Some(a) = Action::parse(&clean_action_token(first)) {
                if a != Action::Switch || allow_switch {
                    action = Some(a);
                }
            }
        }
        if let Some(pos) = upper.find("MSG:") {
            let rest = strip_brackets(line[pos + "MSG:".len()..].trim());
            if !rest.is_empty() {
                message = Some(truncate_message(rest));
            }
        }
    }

    match action {
        Some(a) => ActionIntent {
            action: a,
            message: message.unwrap_or_default(),
            parse_failure: false,
        },
        None => ActionIntent {
            action: Action::Stay,
            message: String::new(),
            parse_failure: true,
        },
    }
}

/// Deliver round messages: receiver `j` hears sender `i` iff both are on
/// the map, `i != j`, the message is non-empty, and `i` sits within `j`'s
/// view (Chebyshev distance at most `k/2`) at decision-time positions.
/// Inboxes list messages in ascending sender id.
pub fn deliver_messages(
    positions: &BTreeMap<u32, Coord>,
    outgoing: &BTreeMap<u32, String>,
    view_size: u32,
) -> BTreeMap<u32, Vec<String>> {
    let radius = (view_size / 2) as i32;
    let mut inboxes: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    for (&recv, &rpos) in positions {
        let mut inbox = Vec::new();
        for (&send, msg) in outgoing {
            if send == recv || msg.is_empty() {
                continue;
            }
            let spos = match positions.get(&send) {
                Some(&p) => p,
                None => continue,
            };
            let cheb = (spos.i - rpos.i).abs().max((spos.j - rpos.j).abs());
            if cheb <= radius {
                inbox.push(msg.clone());
            }
        }
        inboxes.insert(recv, inbox);
    }
    inboxes
}

/// The current-observation section; unused by the standard tasks.
pub fn level_obs_str() -> &'static str {
    " "
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{generate_environment, EnvConfig};
    use crate::grid::parse_ascii_grid;
    use alloc::vec;

    #[test]
    fn parse_basic_action_and_message() {
        let r = parse_response("thinking...\nACTION: UP\nMSG: hello there", false);
        assert_eq!(r.action, Action::Up);
        assert_eq!(r.message, "hello there");
        assert!(!r.parse_failure);
    }

    #[test]
    fn parse_last_valid_action_wins() {
        let r = parse_response("ACTION: LEFT\nno wait\nACTION: [RIGHT]", false);
        assert_eq!(r.action, Action::Right);
    }

    #[test]
    fn parse_decorated_tokens() {
        assert_eq!(parse_response("action: \"down\".", false).action, Action::Down);
        assert_eq!(parse_response("ACTION: [STAY]", false).action, Action::Stay);
        assert_eq!(parse_response("**ACTION: UP**", false).action, Action::Up);
    }

    #[test]
    fn parse_switch_gated() {
        assert_eq!(parse_response("ACTION: SWITCH", true).action, Action::Switch);
        let r = parse_response("ACTION: SWITCH", false);
        assert_eq!(r.action, Action::Stay);
        assert!(r.parse_failure);
    }

    #[test]
    fn parse_failure_defaults_to_stay() {
        let r = parse_response("I have no idea what to do.", false);
        assert_eq!(r.action, Action::Stay);
        assert!(r.message.is_empty());
        assert!(r.parse_failure);
    }

    #[test]
    fn parse_msg_keeps_quotes_and_brackets_stripped() {
        let r = parse_response("ACTION: UP\nMSG: [\"come here\"]", false);
        assert_eq!(r.message, "\"come here\"");
    }

    #[test]
    fn truncation_exactly_120() {
        let long: String = core::iter::repeat_n('x', 200).collect();
        let t = truncate_message(&long);
        assert_eq!(t.chars().count(), 120);
        assert!(t.ends_with("..."));
        assert_eq!(&t[..117], &long[..117]);
        let short = "short";
        assert_eq!(truncate_message(short), "short");
        let exact: String = core::iter::repeat_n('y', 120).collect();
        assert_eq!(truncate_message(&exact), exact);
    }

    #[test]
    fn view_has_global_labels_and_self_marker() {
        let cfg = EnvConfig::default();
        let s = generate_environment(TaskKind::Pursuit, 11, &cfg).unwrap();
        let id = s.agents[0].id;
        let pos = s.agent_pos(id).unwrap();
        let v = render_view(&s, id, 5);
        let parsed = parse_ascii_grid(&v);
        assert_eq!(parsed.len(), 5);
        // Center cell is the self marker.
        assert_eq!(parsed[2][2], "Y");
        // Labels are absolute coordinates.
        let first_row_label: i32 = v
            .lines()
            .nth(1)
            .unwrap()
            .split_whitespace()
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(first_row_label, pos.i - 2);
    }

    #[test]
    fn view_str_labels_frames() {
        let frames = vec![String::from("A\n"), String::from("B\n"), String::from("C\n")];
        let v = view_str(&frames);
        assert_eq!(v, "Current Step:\nA\n\n1 Steps Before:\nB\n\n2 Steps Before:\nC\n");
    }

    #[test]
    fn delivery_window_and_order() {
        let mut positions = BTreeMap::new();
        positions.insert(0u32, Coord::new(5, 5));
        positions.insert(1u32, Coord::new(5, 7)); // within radius 2
        positions.insert(2u32, Coord::new(5, 8)); // outside
        positions.insert(3u32, Coord::new(3, 3)); // corner of window
        let mut outgoing = BTreeMap::new();
        outgoing.insert(1u32, String::from("one"));
        outgoing.insert(2u32, String::from("two"));
        outgoing.insert(3u32, String::from("three"));
        outgoing.insert(0u32, String::from("zero"));
        let inboxes = deliver_messages(&positions, &outgoing, 5);
        assert_eq!(inboxes[&0], vec![String::from("one"), String::from("three")]);
        // Sender 2 is out of range of 0 but in range of 1.
        assert!(inboxes[&1].contains(&String::from("two")));
        // No self-delivery.
        assert!(!inboxes[&0].contains(&String::from("zero")));
    }

    #[test]
    fn empty_messages_not_delivered() {
        let mut positions = BTreeMap::new();
        positions.insert(0u32, Coord::new(5, 5));
        positions.insert(1u32, Coord::new(5, 6));
        let mut outgoing = BTreeMap::new();
        outgoing.insert(1u32, String::new());
        let inboxes = deliver_messages(&positions, &outgoing, 5);
        assert!(inboxes[&0].is_empty());
    }

    #[test]
    fn prompt_section_seams() {
        let p = render_prompt(
            TaskKind::Transport,
            "Agent_5",
            62,
            5,
            5,
            "Current Step:\nGRID\n",
            level_obs_str(),
            "Message: \"hi\"\n",
            "Round 61: Action: UP, Message: \"m\"\n",
        );
        assert!(p.starts_with("You are Agent Agent_5, operating"));
        // view ends with \n, so the seam to the next section is 3 newlines.
        assert!(p.contains("GRID\n\n\nYour current observation:\n \n\nMessage you received:\n"));
        assert!(p.contains("Message: \"hi\"\n\n\nYour action history:\n"));
        assert!(p.contains("Your 5x5 vision uses global coordinates"));
        assert!(p.contains("Your recent 5-step vision (not the entire map):\nCurrent Step:\n"));
        assert!(p.ends_with("\"MSG: [Your message (no line breaks).]\" "));
    }
}
