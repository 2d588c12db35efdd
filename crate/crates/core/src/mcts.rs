//! UCT search for the helper, with optional rule-guided rollouts.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::planner::heuristic_sequence;
use crate::rng::Rng;
use crate::task::{goal_satisfied, Goal};
use crate::world::{apply_action, AgentId, Capability, IntentionalAction, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MctsParams {
    pub n_sim: usize,
    pub depth: usize,
    pub c_ucb: f64,
    /// Chance that a rollout step is random rather than rule-driven.
    /// 1 gives plain random rollouts.
    pub p_sample: f64,
    /// Value of reaching the goal at depth d is `value_scale / d`.
    pub value_scale: f64,
}

impl Default for MctsParams {
    fn default() -> Self {
        MctsParams {
            n_sim: 500,
            depth: 5,
            c_ucb: std::f64::consts::SQRT_2,
            p_sample: 1.0,
            value_scale: 50.0,
        }
    }
}

impl MctsParams {
    pub fn heuristic() -> Self {
        MctsParams {
            p_sample: 0.5,
            ..Default::default()
        }
    }
}

struct Node {
    state: WorldState,
    depth: usize,
    /// Goal holds in this node's state.
    solved: bool,
    /// Child node per action index, once expanded.
    children: Vec<Option<usize>>,
    untried: Vec<usize>,
    n: f64,
    w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub action: IntentionalAction,
    /// Visits and mean value per root action, in action order.
    pub visits: Vec<u32>,
    pub values: Vec<f64>,
}

fn new_node(state: WorldState, depth: usize, goal: &Goal, n_actions: usize) -> Node {
    let solved = goal_satisfied(goal, &state);
    Node {
        state,
        depth,
        solved,
        children: vec![None; n_actions],
        untried: (0..n_actions).collect(),
        n: 0.0,
        w: 0.0,
    }
}

fn rollout_action(
    state: &WorldState,
    goal: &Goal,
    actions: &[IntentionalAction],
    params: &MctsParams,
    catalog: Option<&Catalog>,
    rng: &mut Rng,
) -> IntentionalAction {
    if params.p_sample < 1.0 {
        if let Some(c) = catalog {
            if rng.gen::<f64>() >= params.p_sample {
                let h = heuristic_sequence(goal, state, AgentId::Helper, c);
                if let Some(a) = h.actions.first() {
                    return *a;
                }
            }
        }
    }
    actions[rng.gen_range(0..actions.len())]
}

/// Search over the helper's actions toward `goal`, with the main agent frozen
/// and the helper at full capability. Rule-guided rollouts are used when a
/// catalog is given and `p_sample < 1`.
pub fn search(
    root: &WorldState,
    goal: &Goal,
    actions: &[IntentionalAction],
    params: &MctsParams,
    catalog: Option<&Catalog>,
    rng: &mut Rng,
) -> SearchResult {
    let na = actions.len();
    let wait = SearchResult {
        action: IntentionalAction::WAIT,
        visits: vec![0; na],
        values: vec![0.0; na],
    };
    if na == 0 || goal_satisfied(goal, root) {
        return wait;
    }
    let mut start = root.clone();
    start.agents[AgentId::Helper.index()].capability = Capability::FULL;
    start.step = 0;
    start.max_steps = u32::MAX;
    let mut nodes = vec![new_node(start, 0, goal, na)];
    nodes[0].solved = false;

    for _ in 0..params.n_sim.max(1) {
        let mut path = vec![0usize];
        let mut cur = 0usize;
        // selection
        loop {
            let node = &nodes[cur];
            if node.solved || node.depth >= params.depth || !node.untried.is_empty() {
                break;
            }
            let ln = node.n.max(1.0).ln();
            // exploitation on values rescaled to [0, 1]
            let scale = if params.value_scale > 0.0 { params.value_scale } else { 1.0 };
            let mut best = None;
            let mut best_u = f64::NEG_INFINITY;
            for (i, ch) in node.children.iter().enumerate() {
                let Some(ch) = *ch else { continue };
                let c = &nodes[ch];
                let u = if c.n == 0.0 {
                    f64::INFINITY
                } else {
                    c.w / c.n / scale + params.c_ucb * (ln / c.n).sqrt()
                };
                if u > best_u {
                    best_u = u;
                    best = Some((i, ch));
                }
            }
            let Some((_, ch)) = best else { break };
            cur = ch;
            path.push(cur);
        }
        // expansion
        if !nodes[cur].solved && nodes[cur].depth < params.depth && !nodes[cur].untried.is_empty() {
            let k = rng.gen_range(0..nodes[cur].untried.len());
            let ai = nodes[cur].untried.swap_remove(k);
            let (next, _) = apply_action(&nodes[cur].state, AgentId::Helper, actions[ai]);
            let child = new_node(next, nodes[cur].depth + 1, goal, na);
            nodes.push(child);
            let id = nodes.len() - 1;
            nodes[cur].children[ai] = Some(id);
            cur = id;
            path.push(cur);
        }
        // rollout
        let leaf = &nodes[cur];
        let value = if leaf.solved {
            params.value_scale / leaf.depth.max(1) as f64
        } else {
            let mut s = leaf.state.clone();
            let mut d = leaf.depth;
            let mut v = 0.0;
            while d < params.depth {
                let a = rollout_action(&s, goal, actions, params, catalog, rng);
                s.step_action(AgentId::Helper, a);
                d += 1;
                if goal_satisfied(goal, &s) {
                    v = params.value_scale / d as f64;
                    break;
                }
            }
            v
        };
        for id in path {
            nodes[id].n += 1.0;
            nodes[id].w += value;
        }
    }

    let root = &nodes[0];
    let mut visits = vec![0u32; na];
    let mut values = vec![0.0; na];
    for (i, ch) in root.children.iter().enumerate() {
        if let Some(ch) = *ch {
            visits[i] = nodes[ch].n as u32;
            values[i] = if nodes[ch].n > 0.0 { nodes[ch].w / nodes[ch].n } else { 0.0 };
        }
    }
    let mut best = 0;
    for i in 1..na {
        if visits[i] > visits[best] {
            best = i;
        }
    }
    SearchResult {
        action: actions[best],
        visits,
        values,
    }
}

pub fn mcts_plan(
    root: &WorldState,
    goal: &Goal,
    actions: &[IntentionalAction],
    params: &MctsParams,
    rng: &mut Rng,
) -> IntentionalAction {
    let p = MctsParams {
        p_sample: 1.0,
        ..*params
    };
    search(root, goal, actions, &p, None, rng).action
}

pub fn mcts_heuristic_plan(
    root: &WorldState,
    goal: &Goal,
    actions: &[IntentionalAction],
    params: &MctsParams,
    catalog: &Catalog,
    rng: &mut Rng,
) -> IntentionalAction {
    search(root, goal, actions, params, Some(catalog), rng).action
}

/// Fewest helper actions reaching `goal`, up to `limit`, by exhaustive search.
pub fn exhaustive_depth(root: &WorldState, goal: &Goal, actions: &[IntentionalAction], limit: usize) -> Option<usize> {
    let mut start = root.clone();
    start.agents[AgentId::Helper.index()].capability = Capability::FULL;
    start.max_steps = u32::MAX;
    if goal_satisfied(goal, &start) {
        return Some(0);
    }
    let mut frontier = vec![start];
    for d in 1..=limit {
        let mut next = Vec::new();
        for s in &frontier {
            for a in actions {
                let (n, out) = apply_action(s, AgentId::Helper, *a);
                if goal_satisfied(goal, &n) {
                    return Some(d);
                }
                if out.success && !a.is_wait() && !next.contains(&n) {
                    next.push(n);
                }
            }
        }
        frontier = next;
    }
    None
}

/// Actions that start a shortest solution.
pub fn optimal_first_actions(
    root: &WorldState,
    goal: &Goal,
    actions: &[IntentionalAction],
    limit: usize,
) -> Vec<IntentionalAction> {
    let Some(best) = exhaustive_depth(root, goal, actions, limit) else {
        return vec![];
    };
    if best == 0 {
        return vec![IntentionalAction::WAIT];
    }
    let mut start = root.clone();
    start.agents[AgentId::Helper.index()].capability = Capability::FULL;
    start.max_steps = u32::MAX;
    actions
        .iter()
        .filter(|a| {
            let (n, _) = apply_action(&start, AgentId::Helper, **a);
            exhaustive_depth(&n, goal, actions, best - 1) == Some(best - 1)
        })
        .copied()
        .collect()
}
