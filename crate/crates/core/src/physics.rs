//! Push physics: contact chains, rigid-body fusion, and exact resolution
//! of which bodies move each round.
//!
//! Per direction, pushing agents and everything ahead of them form a
//! directed contact graph. Strongly connected components (including
//! rigid-group fusions) condense to a DAG whose nodes carry aggregate mass
//! and internally generated force. A set of nodes may move only if it is
//! closed under successors, contains no immovable body, and admits a force
//! flow that covers every node's mass. Among feasible sets we move the one
//! covering the most bodies, breaking ties toward the lexicographically
//! smallest node set.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{isqrt, Direction, EnvironmentState, MeshId, MeshKind, DIRECTIONS};

/// Force a single pushing agent exerts.
pub const PUSH_FORCE: u32 = 2;
/// Mass of one agent.
pub const AGENT_MASS: u32 = 1;

/// One node of the condensed contact DAG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagNode {
    /// Underlying mesh ids, ascending.
    pub members: Vec<MeshId>,
    /// Aggregate mass the force flow must cover.
    pub mass: u32,
    /// Force generated inside the node (pushing agents x PUSH_FORCE).
    pub force: u32,
    /// True when the node contains a body that can never move.
    pub pinned: bool,
}

/// Condensed contact DAG for one push direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondensedDag {
    pub nodes: Vec<DagNode>,
    /// Adjacency: edges[v] = successors of v (bodies v would displace into).
    pub edges: Vec<BTreeSet<usize>>,
}

/// Aggregate mass of one strongly connected component: each agent counts
/// its unit mass; a single non-agent body keeps its own mass; several
/// non-agent bodies fused together weigh floor(sqrt(total area)).
fn component_mass(state: &EnvironmentState, members: &[MeshId]) -> u32 {
    let mut mass = 0u32;
    let non_agents: Vec<MeshId> = members
        .iter()
        .copied()
        .filter(|id| state.meshes[id].kind != MeshKind::Agent)
        .collect();
    mass += (members.len() - non_agents.len()) as u32 * AGENT_MASS;
    match non_agents.len() {
        0 => {}
        1 => mass += state.meshes[&non_agents[0]].mass(),
        _ => {
            let area: u32 = non_agents.iter().map(|id| state.meshes[id].area()).sum();
            mass += isqrt(area);
        }
    }
    mass
}

/// Build the condensed contact DAG for `dir`, seeded by the meshes of the
/// pushing agents. Also returns, per DAG node index, the member mesh ids
/// (inside `DagNode`), so callers can map a node choice back to meshes.
pub fn build_contact_dag(
    state: &EnvironmentState,
    dir: Direction,
    pushers: &[MeshId],
) -> CondensedDag {
    let occupancy = state.occupancy();
    let ids: Vec<MeshId> = state.meshes.keys().copied().collect();
    let index: BTreeMap<MeshId, usize> = ids.iter().copied().enumerate().map(|(k, v)| (v, k)).collect();
    let n = ids.len();

    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (&id, mesh) in &state.meshes {
        let u = index[&id];
        for cell in mesh.cells() {
            let ahead = cell.step(dir);
            if let Some(&other) = occupancy.get(&ahead) {
                if other != id {
                    adj[u].insert(index[&other]);
                }
            }
        }
    }
    // Rigid groups move as one body: fuse with mutual edges.
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (&id, mesh) in &state.meshes {
        if let Some(g) = mesh.rigid_group {
            groups.entry(g).or_default().push(index[&id]);
        }
    }
    for members in groups.values() {
        for &a in members {
            for &b in members {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }

    let comp = tarjan_scc(&adj);
    let num_comps = comp.iter().copied().max().map(|m| m + 1).unwrap_or(0);
    let pusher_set: BTreeSet<MeshId> = pushers.iter().copied().collect();

    let mut members: Vec<Vec<MeshId>> = vec![Vec::new(); num_comps];
    for (u, &c) in comp.iter().enumerate() {
        members[c].push(ids[u]);
    }
    let mut nodes = Vec::with_capacity(num_comps);
    for m in &mut members {
        m.sort_unstable();
        let force = m.iter().filter(|id| pusher_set.contains(id)).count() as u32 * PUSH_FORCE;
        let pinned = m.iter().any(|id| state.meshes[id].kind.is_static());
        nodes.push(DagNode {
            members: m.clone(),
            mass: component_mass(state, m),
            force,
            pinned,
        });
    }
    let mut edges: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); num_comps];
    for u in 0..n {
        for &v in &adj[u] {
            if comp[u] != comp[v] {
                edges[comp[u]].insert(comp[v]);
            }
        }
    }
    CondensedDag { nodes, edges }
}

/// Iterative Tarjan; returns the component index of each vertex.
fn tarjan_scc(adj: &[BTreeSet<usize>]) -> Vec<usize> {
    let n = adj.len();
    let succ: Vec<Vec<usize>> = adj.iter().map(|s| s.iter().copied().collect()).collect();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut next_comp = 0usize;

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        // Explicit call stack: (vertex, next successor position).
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&(v, pos)) = call.last() {
            if pos < succ[v].len() {
                call.last_mut().expect("nonempty").1 += 1;
                let w = succ[v][pos];
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] && index[w] < low[v] {
                    low[v] = index[w];
                }
            } else {
                call.pop();
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
                if let Some(&(p, _)) = call.last() {
                    if low[v] < low[p] {
                        low[p] = low[v];
                    }
                }
            }
        }
    }
    comp
}

const INF: i64 = i64::MAX / 4;

/// Edmonds-Karp max-flow on a small dense graph.
struct FlowNet {
    n: usize,
    cap: Vec<Vec<i64>>,
}

impl FlowNet {
    fn new(n: usize) -> Self {
        FlowNet {
            n,
            cap: vec![vec![0; n]; n],
        }
    }

    fn add(&mut self, u: usize, v: usize, c: i64) {
        self.cap[u][v] += c;
    }

    fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut flow = 0;
        loop {
            let mut parent = vec![usize::MAX; self.n];
            parent[s] = s;
            let mut queue = VecDeque::new();
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                #[allow(clippy::needless_range_loop)]
                for v in 0..self.n {
                    if parent[v] == usize::MAX && self.cap[u][v] > 0 {
                        parent[v] = u;
                        queue.push_back(v);
                    }
                }
            }
            if parent[t] == usize::MAX {
                return flow;
            }
            let mut bottleneck = INF;
            let mut v = t;
            while v != s {
                let u = parent[v];
                bottleneck = bottleneck.min(self.cap[u][v]);
                v = u;
            }
            let mut v = t;
            while v != s {
                let u = parent[v];
                self.cap[u][v] -= bottleneck;
                self.cap[v][u] += bottleneck;
                v = u;
            }
            flow += bottleneck;
        }
    }
}

/// Can the node set `s` be powered? Force enters at each node (internal
/// plus external), flows only along DAG edges inside the set, and every
/// node must absorb its full mass.
pub fn flow_feasible(dag: &CondensedDag, external: &[u32], s: &BTreeSet<usize>) -> bool {
    let total_mass: i64 = s.iter().map(|&v| dag.nodes[v].mass as i64).sum();
    if total_mass == 0 {
        return true;
    }
    let order: Vec<usize> = s.iter().copied().collect();
    let slot: BTreeMap<usize, usize> = order.iter().copied().enumerate().map(|(k, v)| (v, k)).collect();
    let n = order.len();
    let source = n;
    let sink = n + 1;
    let mut net = FlowNet::new(n + 2);
    for (k, &v) in order.iter().enumerate() {
        let supply = dag.nodes[v].force as i64 + *external.get(v).unwrap_or(&0) as i64;
        if supply > 0 {
            net.add(source, k, supply);
        }
        net.add(k, sink, dag.nodes[v].mass as i64);
        for &u in &dag.edges[v] {
            if let Some(&ku) = slot.get(&u) {
                net.add(k, ku, INF);
            }
        }
    }
    net.max_flow(source, sink) == total_mass
}

/// Pick the set of DAG nodes that moves: maximal total member count among
/// feasible successor-closed pin-free sets, ties broken toward the
/// lexicographically smallest node-index set. `external[v]` is extra force
/// applied from outside the system directly at node v.
pub fn resolve_dag(dag: &CondensedDag, external: &[u32]) -> BTreeSet<usize> {
    let n = dag.nodes.len();
    // A node is viable only if every node reachable from it is unpinned.
    let mut viable = vec![true; n];
    #[allow(clippy::needless_range_loop)]
    for v in 0..n {
        if dag.nodes[v].pinned {
            viable[v] = false;
        }
    }
    // Propagate non-viability backward to a fixpoint.
    loop {
        let mut changed = false;
        for v in 0..n {
            if viable[v] && dag.edges[v].iter().any(|&u| !viable[u]) {
                viable[v] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // Only nodes reachable from a force source can ever be powered;
    // excluding the rest keeps the search tiny on real maps.
    let mut reachable = vec![false; n];
    let mut queue: Vec<usize> = (0..n)
        .filter(|&v| dag.nodes[v].force > 0 || *external.get(v).unwrap_or(&0) > 0)
        .collect();
    while let Some(v) = queue.pop() {
        if !reachable[v] {
            reachable[v] = true;
            queue.extend(dag.edges[v].iter().copied());
        }
    }
    let candidates: Vec<usize> = (0..n).filter(|&v| viable[v] && reachable[v]).collect();

    // Successor closure of one node within the viable set.
    let closure = |v: usize| -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut queue = vec![v];
        while let Some(u) = queue.pop() {
            if out.insert(u) {
                queue.extend(dag.edges[u].iter().copied());
            }
        }
        out
    };

    let weight = |s: &BTreeSet<usize>| -> usize {
        s.iter().map(|&v| dag.nodes[v].members.len()).sum()
    };

    // Depth-first branch and bound over include/exclude per candidate.
    // Including a node pulls in its whole closure.
    let mut best: BTreeSet<usize> = BTreeSet::new();
    let mut best_w = 0usize;

    #[allow(clippy::too_many_arguments)]
    fn search(
        idx: usize,
        candidates: &[usize],
        current: &BTreeSet<usize>,
        closure: &dyn Fn(usize) -> BTreeSet<usize>,
        weight: &dyn Fn(&BTreeSet<usize>) -> usize,
        dag: &CondensedDag,
        external: &[u32],
        best: &mut BTreeSet<usize>,
        best_w: &mut usize,
    ) {
        // Upper bound: everything still addable.
        let mut bound = current.clone();
        for &v in &candidates[idx..] {
            bound.extend(closure(v));
        }
        let bw = weight(&bound);
        if bw < *best_w {
            return;
        }
        if idx == candidates.len() {
            if flow_feasible(dag, external, current) {
                let w = weight(current);
                if w > *best_w || (w == *best_w && w > 0 && current < best) {
                    *best = current.clone();
                    *best_w = w;
                }
            }
            return;
        }
        let v = candidates[idx];
        // Branch 1: include v (and its closure).
        let mut with_v = current.clone();
        with_v.extend(closure(v));
        search(idx + 1, candidates, &with_v, closure, weight, dag, external, best, best_w);
        // Branch 2: exclude v (it may still enter via another closure).
        search(idx + 1, candidates, current, closure, weight, dag, external, best, best_w);
    }

    search(
        0,
        &candidates,
        &BTreeSet::new(),
        &closure,
        &weight,
        dag,
        external,
        &mut best,
        &mut best_w,
    );
    best
}

/// Everything that moved in one resolved round.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MovementOutcome {
    /// Meshes displaced, with the direction each travelled.
    pub displaced: BTreeMap<MeshId, Direction>,
    /// Meshes that left the map entirely (removed from the state).
    pub escaped: Vec<MeshId>,
}

/// Resolve and commit all four directions for one round.
///
/// Each direction is resolved against the pre-step state; commits happen
/// in the fixed priority order UP, DOWN, LEFT, RIGHT. If a lower-priority
/// direction would move a mesh that already moved, or step into a cell
/// vacated-and-refilled by a higher-priority commit, that whole direction
/// is cancelled.
pub fn apply_movement(
    state: &mut EnvironmentState,
    intents: &BTreeMap<u32, Direction>,
) -> MovementOutcome {
    let mut resolved: BTreeMap<Direction, BTreeSet<MeshId>> = BTreeMap::new();
    for dir in DIRECTIONS {
        let pushers: Vec<MeshId> = intents
            .iter()
            .filter(|(_, d)| **d == dir)
            .filter_map(|(id, _)| state.agent(*id).map(|a| a.mesh))
            .collect();
        if pushers.is_empty() {
            continue;
        }
        let dag = build_contact_dag(state, dir, &pushers);
        let external = vec![0u32; dag.nodes.len()];
        let chosen = resolve_dag(&dag, &external);
        let meshes: BTreeSet<MeshId> = chosen
            .iter()
            .flat_map(|&v| dag.nodes[v].members.iter().copied())
            .collect();
        if !meshes.is_empty() {
            resolved.insert(dir, meshes);
        }
    }

    let mut outcome = MovementOutcome::default();
    let mut moved: BTreeSet<MeshId> = BTreeSet::new();
    // Cells occupied by committed meshes at their new positions.
    let mut claimed: BTreeSet<(i32, i32)> = BTreeSet::new();

    for dir in DIRECTIONS {
        let meshes = match resolved.get(&dir) {
            Some(m) => m.clone(),
            None => continue,
        };
        if meshes.iter().any(|id| moved.contains(id)) {
            continue;
        }
        // Destination footprint must not hit cells claimed by a
        // higher-priority commit (cells of unmoved meshes were already
        // excluded during resolution).
        let mut dest: BTreeSet<(i32, i32)> = BTreeSet::new();
        for id in &meshes {
            for c in state.meshes[id].cells() {
                let d = c.step(dir);
                dest.insert((d.i, d.j));
            }
        }
        if dest.iter().any(|p| claimed.contains(p)) {
            continue;
        }
        for id in &meshes {
            let mesh = state.meshes.get_mut(id).expect("resolved mesh");
            mesh.anchor = mesh.anchor.step(dir);
            moved.insert(*id);
            outcome.displaced.insert(*id, dir);
        }
        claimed.extend(dest);
    }

    // Meshes fully off-map are gone (e.g. bodies pushed out an exit).
    let gone: Vec<MeshId> = state
        .meshes
        .iter()
        .filter(|(_, m)| m.cells().iter().all(|c| !state.in_bounds(*c)))
        .map(|(id, _)| *id)
        .collect();
    for id in gone {
        state.remove_mesh(id);
        outcome.escaped.push(id);
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Coord, Mesh};
    use crate::tasks::TaskState;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dag(nodes: Vec<(Vec<MeshId>, u32, u32, bool)>, edges: &[(usize, usize)]) -> CondensedDag {
        let n = nodes.len();
        let mut e: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            e[u].insert(v);
        }
        CondensedDag {
            nodes: nodes
                .into_iter()
                .map(|(members, mass, force, pinned)| DagNode {
                    members,
                    mass,
                    force,
                    pinned,
                })
                .collect(),
            edges: e,
        }
    }

    /// Independent feasibility oracle via Hall's condition instead of
    /// max-flow: a covering flow exists iff every subset T of s that is
    /// predecessor-closed within s (no edge from s\T into T, so nothing
    /// outside T can feed it force) has supply(T) >= mass(T). Exponential
    /// in |s| but exact for these tiny DAGs.
    fn oracle_feasible(d: &CondensedDag, external: &[u32], s: &BTreeSet<usize>) -> bool {
        let sv: Vec<usize> = s.iter().copied().collect();
        let n = sv.len();
        for bits in 0..(1u32 << n) {
            let t: BTreeSet<usize> = (0..n).filter(|k| bits >> k & 1 == 1).map(|k| sv[k]).collect();
            if t.is_empty() {
                continue;
            }
            let closed = t.iter().all(|&v| {
                s.iter()
                    .all(|&u| !d.edges[u].contains(&v) || t.contains(&u))
            });
            if !closed {
                continue;
            }
            let supply_t: i64 = t
                .iter()
                .map(|&v| d.nodes[v].force as i64 + *external.get(v).unwrap_or(&0) as i64)
                .sum();
            let mass_t: i64 = t.iter().map(|&v| d.nodes[v].mass as i64).sum();
            if supply_t < mass_t {
                return false;
            }
        }
        true
    }

    #[test]
    fn oracle_matches_flow_on_random_dags() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..300 {
            let n = rng.gen_range(1..=6usize);
            let mut nodes = Vec::new();
            for v in 0..n {
                nodes.push((vec![v as MeshId], rng.gen_range(0..4u32), rng.gen_range(0..5u32), false));
            }
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.4) {
                        edges.push((u, v));
                    }
                }
            }
            let d = dag(nodes, &edges);
            let ext = vec![0u32; n];
            for bits in 0..(1u32 << n) {
                let s: BTreeSet<usize> = (0..n).filter(|k| bits >> k & 1 == 1).collect();
                assert_eq!(
                    flow_feasible(&d, &ext, &s),
                    oracle_feasible(&d, &ext, &s),
                    "n={n} edges={edges:?} s={s:?}"
                );
            }
        }
    }

    #[test]
    fn external_force_chain_moves() {
        // External force 2 applied to an agent (mass 1) pressing on a
        // body of mass 1: both move. Masses 1 and 1, system covers 2.
        let d = dag(
            vec![(vec![0], 1, 0, false), (vec![1], 1, 0, false)],
            &[(0, 1)],
        );
        let mut ext = vec![0u32; 2];
        ext[0] = 2;
        let s = resolve_dag(&d, &ext);
        assert_eq!(s, BTreeSet::from([0, 1]));
    }

    #[test]
    fn single_pusher_cannot_move_fused_block() {
        // Pushing agent (force 2, mass 1) against a 2x2 rigid fusion of
        // four unit bodies (aggregate mass 2): leftover force 1 < 2.
        let d = dag(
            vec![(vec![0], 1, 2, false), (vec![1, 2, 3, 4], 2, 0, false)],
            &[(0, 1)],
        );
        let s = resolve_dag(&d, &[0, 0]);
        assert!(s.is_empty());
    }

    #[test]
    fn two_pushers_move_heavy_block() {
        // Two agents (total force 4, mass 2) plus a block of mass 2:
        // system mass 4 = total force; everything moves.
        let d = dag(
            vec![
                (vec![0], 1, 2, false),
                (vec![1], 1, 2, false),
                (vec![2], 2, 0, false),
            ],
            &[(0, 2), (1, 2)],
        );
        let s = resolve_dag(&d, &[0, 0, 0]);
        assert_eq!(s, BTreeSet::from([0, 1, 2]));
    }

    #[test]
    fn pinned_successor_blocks_chain() {
        let d = dag(
            vec![(vec![0], 1, 2, false), (vec![1], 1, 0, true)],
            &[(0, 1)],
        );
        assert!(resolve_dag(&d, &[0, 0]).is_empty());
    }

    #[test]
    fn resolve_matches_exhaustive_oracle() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        for case in 0..200 {
            let n = rng.gen_range(1..=6usize);
            let mut nodes = Vec::new();
            for v in 0..n {
                nodes.push((
                    vec![v as MeshId],
                    rng.gen_range(1..4u32),
                    if rng.gen_bool(0.5) { PUSH_FORCE } else { 0 },
                    rng.gen_bool(0.2),
                ));
            }
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.35) {
                        edges.push((u, v));
                    }
                }
            }
            let d = dag(nodes, &edges);
            let ext = vec![0u32; n];
            // Exhaustive best: max cardinality (all members are singletons)
            // over closed, pin-free, feasible sets; lexicographically
            // smallest among ties.
            let mut best: Option<BTreeSet<usize>> = None;
            for bits in 0..(1u32 << n) {
                let s: BTreeSet<usize> = (0..n).filter(|k| bits >> k & 1 == 1).collect();
                if s.iter().any(|&v| d.nodes[v].pinned) {
                    continue;
                }
                if !s.iter().all(|&v| d.edges[v].iter().all(|u| s.contains(u))) {
                    continue;
                }
                if !oracle_feasible(&d, &ext, &s) {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some(b) => s.len() > b.len() || (s.len() == b.len() && s < *b),
                };
                if better {
                    best = Some(s);
                }
            }
            assert_eq!(resolve_dag(&d, &ext), best.unwrap(), "case {case}");
        }
    }

    fn bare_state(h: i32, w: i32) -> EnvironmentState {
        EnvironmentState::new(
            h,
            w,
            100,
            crate::gen::TaskKind::Foraging,
            TaskState::Foraging,
            ChaCha8Rng::seed_from_u64(0),
        )
    }

    #[test]
    fn apply_movement_simple_push() {
        let mut s = bare_state(8, 8);
        let a = s.add_mesh(Mesh::unit(0, Coord::new(3, 3), MeshKind::Agent));
        s.agents.push(crate::grid::AgentState { id: 0, mesh: a, flagged: false });
        let block = s.add_mesh(Mesh::unit(0, Coord::new(3, 4), MeshKind::Obstacle));
        let mut intents = BTreeMap::new();
        intents.insert(0u32, Direction::Right);
        let out = apply_movement(&mut s, &intents);
        assert_eq!(out.displaced.len(), 2);
        assert_eq!(s.meshes[&a].anchor, Coord::new(3, 4));
        assert_eq!(s.meshes[&block].anchor, Coord::new(3, 5));
    }

    #[test]
    fn apply_movement_wall_blocks() {
        let mut s = bare_state(8, 8);
        let a = s.add_mesh(Mesh::unit(0, Coord::new(3, 3), MeshKind::Agent));
        s.agents.push(crate::grid::AgentState { id: 0, mesh: a, flagged: false });
        s.add_mesh(Mesh::unit(0, Coord::new(3, 4), MeshKind::Wall));
        let mut intents = BTreeMap::new();
        intents.insert(0u32, Direction::Right);
        let out = apply_movement(&mut s, &intents);
        assert!(out.displaced.is_empty());
        assert_eq!(s.meshes[&a].anchor, Coord::new(3, 3));
    }

    #[test]
    fn opposing_pushers_up_wins_nothing_contested() {
        // Two agents pushing toward each other: UP/DOWN ordering means
        // each direction's chain includes both agents head-on; the first
        // resolved direction (whichever is feasible) moves, the other is
        // cancelled because its meshes already moved.
        let mut s = bare_state(8, 8);
        let a = s.add_mesh(Mesh::unit(0, Coord::new(2, 3), MeshKind::Agent));
        let b = s.add_mesh(Mesh::unit(0, Coord::new(3, 3), MeshKind::Agent));
        s.agents.push(crate::grid::AgentState { id: 0, mesh: a, flagged: false });
        s.agents.push(crate::grid::AgentState { id: 1, mesh: b, flagged: false });
        let mut intents = BTreeMap::new();
        intents.insert(0u32, Direction::Down);
        intents.insert(1u32, Direction::Up);
        let out = apply_movement(&mut s, &intents);
        // UP commits first: agent 1 pushes agent 0 upward; DOWN then finds
        // its meshes already moved and is cancelled.
        assert_eq!(out.displaced.get(&b), Some(&Direction::Up));
        assert_eq!(out.displaced.get(&a), Some(&Direction::Up));
        assert_eq!(s.meshes[&a].anchor, Coord::new(1, 3));
        assert_eq!(s.meshes[&b].anchor, Coord::new(2, 3));
    }

    #[test]
    fn five_agent_chain_moves_mass_five_bar() {
        let mut s = bare_state(12, 12);
        // Bar of mass 5 at row 3, cols 5..9, pushed up by a vertical
        // column of five agents below its leftmost cell.
        let mut bar = Mesh::mask(
            0,
            Coord::new(3, 5),
            vec![vec![true, true, true, true]],
            MeshKind::Obstacle,
        );
        bar.mass_override = Some(5);
        let bar = s.add_mesh(bar);
        let mut intents = BTreeMap::new();
        for k in 0..5 {
            let m = s.add_mesh(Mesh::unit(0, Coord::new(4 + k, 5), MeshKind::Agent));
            s.agents.push(crate::grid::AgentState { id: k as u32, mesh: m, flagged: false });
            intents.insert(k as u32, Direction::Up);
        }
        let out = apply_movement(&mut s, &intents);
        assert_eq!(out.displaced.len(), 6, "bar and all five agents move");
        assert_eq!(s.meshes[&bar].anchor, Coord::new(2, 5));

        // Four agents are not enough: total force 8, system mass 4+5=9.
        let mut s = bare_state(12, 12);
        let mut bar = Mesh::mask(
            0,
            Coord::new(3, 5),
            vec![vec![true, true, true, true]],
            MeshKind::Obstacle,
        );
        bar.mass_override = Some(5);
        s.add_mesh(bar);
        let mut intents = BTreeMap::new();
        for k in 0..4 {
            let m = s.add_mesh(Mesh::unit(0, Coord::new(4 + k, 5), MeshKind::Agent));
            s.agents.push(crate::grid::AgentState { id: k as u32, mesh: m, flagged: false });
            intents.insert(k as u32, Direction::Up);
        }
        let out = apply_movement(&mut s, &intents);
        assert!(out.displaced.is_empty());
    }

    #[test]
    fn off_map_mesh_removed() {
        let mut s = bare_state(6, 6);
        let a = s.add_mesh(Mesh::unit(0, Coord::new(1, 0), MeshKind::Agent));
        s.agents.push(crate::grid::AgentState { id: 0, mesh: a, flagged: false });
        // No wall here; agent walks off the left edge.
        let mut intents = BTreeMap::new();
        intents.insert(0u32, Direction::Left);
        let out = apply_movement(&mut s, &intents);
        assert_eq!(out.escaped, vec![a]);
        assert!(!s.meshes.contains_key(&a));
    }
}
