//! Navigation, low-level expansion, the main agent's expert policy and the
//! helper's goal-conditioned action sequences.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, TypeId};
use crate::task::{goal_satisfied, Goal, TargetState, TaskPlan};
use crate::world::{apply_action, AgentId, Cell, IntentionalAction, NavMode, ObjectState, Predicate, Reason, WorldState};

/// 4-neighbours in lexicographic (x, y) order.
fn neighbours(c: Cell) -> [Cell; 4] {
    [
        Cell::new(c.x - 1, c.y),
        Cell::new(c.x, c.y - 1),
        Cell::new(c.x, c.y + 1),
        Cell::new(c.x + 1, c.y),
    ]
}

/// Breadth-first path over free cells; the cells to step through, ending at
/// `to` (empty when already there).
pub fn shortest_path(state: &WorldState, from: Cell, to: Cell) -> Option<Vec<Cell>> {
    if !state.is_free(from) || !state.is_free(to) {
        return None;
    }
    let w = state.width as usize;
    let idx = |c: Cell| c.y as usize * w + c.x as usize;
    let mut prev: Vec<Option<Cell>> = vec![None; w * state.height as usize];
    let mut seen = vec![false; prev.len()];
    let mut queue = VecDeque::from([from]);
    seen[idx(from)] = true;
    while let Some(c) = queue.pop_front() {
        if c == to {
            let mut path = vec![];
            let mut cur = c;
            while let Some(p) = prev[idx(cur)] {
                path.push(cur);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for n in neighbours(c) {
            if state.is_free(n) && !seen[idx(n)] {
                seen[idx(n)] = true;
                prev[idx(n)] = Some(c);
                queue.push_back(n);
            }
        }
    }
    None
}

fn is_stand_cell(state: &WorldState, agent: AgentId, c: Cell, target: Cell) -> bool {
    (c.touches(target) || c == target)
        && state.is_free(c)
        && state.agent(agent.other()).cell != c
}

/// Where the agent ends up to interact with something at `target`, and how
/// many cells it walks. Staying put when already adjacent.
pub fn approach(state: &WorldState, agent: AgentId, target: Cell) -> Option<(Cell, u32)> {
    let here = state.agent(agent).cell;
    if here == target || here.touches(target) {
        return Some((here, 0));
    }
    match state.nav {
        NavMode::Teleport => {
            let mut best: Option<Cell> = None;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let c = Cell::new(target.x + dx, target.y + dy);
                    if !is_stand_cell(state, agent, c, target) {
                        continue;
                    }
                    let better = match best {
                        None => true,
                        Some(b) => c.dist(here).total_cmp(&b.dist(here)).then(c.cmp(&b)).is_lt(),
                    };
                    if better {
                        best = Some(c);
                    }
                }
            }
            best.map(|c| (c, 0))
        }
        NavMode::Grid => {
            let w = state.width as usize;
            let idx = |c: Cell| c.y as usize * w + c.x as usize;
            let mut dist = vec![u32::MAX; w * state.height as usize];
            if !state.is_free(here) {
                return None;
            }
            dist[idx(here)] = 0;
            let mut queue = VecDeque::from([here]);
            while let Some(c) = queue.pop_front() {
                if is_stand_cell(state, agent, c, target) {
                    return Some((c, dist[idx(c)]));
                }
                for n in neighbours(c) {
                    if state.is_free(n) && dist[idx(n)] == u32::MAX {
                        dist[idx(n)] = dist[idx(c)] + 1;
                        queue.push_back(n);
                    }
                }
            }
            None
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LowLevelStep {
    MoveTo(Cell),
    Interact(Predicate, usize),
}

/// Expand an intentional action into navigation and interaction steps.
pub fn plan_low_level(
    state: &WorldState,
    agent: AgentId,
    action: &IntentionalAction,
) -> Result<Vec<LowLevelStep>, Reason> {
    if action.is_wait() {
        return Ok(vec![]);
    }
    let target = state.resolve_target(agent, action)?;
    let tcell = state.objects[target].cell;
    let (dest, _) = approach(state, agent, tcell).ok_or(Reason::Unreachable)?;
    let mut steps = Vec::new();
    let here = state.agent(agent).cell;
    if dest != here {
        match state.nav {
            NavMode::Teleport => steps.push(LowLevelStep::MoveTo(dest)),
            NavMode::Grid => {
                let path = shortest_path(state, here, dest).ok_or(Reason::Unreachable)?;
                steps.extend(path.into_iter().map(LowLevelStep::MoveTo));
            }
        }
    }
    steps.push(LowLevelStep::Interact(action.predicate, target));
    Ok(steps)
}

/// Type of a receptacle to drop an unwanted held object into.
pub fn drop_spot(state: &WorldState, catalog: &Catalog) -> Option<TypeId> {
    ["Counter", "Table", "Shelf", "Sink"]
        .iter()
        .filter_map(|n| catalog.id(n))
        .find(|t| state.has_type(*t))
}

fn keep_action(g: &Goal) -> Option<IntentionalAction> {
    match g.target {
        TargetState::KeepOpen
        | TargetState::KeepClose
        | TargetState::KeepOn
        | TargetState::KeepOff => g.completing_action(),
        _ => None,
    }
}

/// The expert's action toward a goal, given what it holds. Does not repair
/// closed receptacles on its own; retrying is how it waits for help.
pub fn expert_action(goal: &Goal, held: Option<TypeId>, drop: Option<TypeId>, satisfied: bool) -> IntentionalAction {
    if satisfied {
        return IntentionalAction::WAIT;
    }
    let put_down = || {
        drop.map(|d| IntentionalAction::new(Predicate::Put, d))
            .unwrap_or(IntentionalAction::WAIT)
    };
    match (goal.target, goal.object) {
        (TargetState::Wait, _) | (_, None) => IntentionalAction::WAIT,
        (TargetState::Get, Some(o)) => match held {
            Some(h) if h == o => IntentionalAction::WAIT,
            Some(_) => put_down(),
            None => IntentionalAction::new(Predicate::PickUp, o),
        },
        (TargetState::In | TargetState::On, Some(o)) => match held {
            Some(h) if h == o => goal
                .receptacle
                .map(|r| IntentionalAction::new(Predicate::Put, r))
                .unwrap_or(IntentionalAction::WAIT),
            Some(_) => put_down(),
            None => IntentionalAction::new(Predicate::PickUp, o),
        },
        _ => keep_action(goal).unwrap_or(IntentionalAction::WAIT),
    }
}

/// Main agent's policy: act on the first unfinished goal.
pub fn expert_policy(state: &WorldState, plan: &TaskPlan, catalog: &Catalog) -> IntentionalAction {
    let goal = plan.current_goal();
    expert_action(
        &goal,
        state.held_type(AgentId::Main),
        drop_spot(state, catalog),
        goal_satisfied(&goal, state),
    )
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HeuristicPlan {
    pub actions: Vec<IntentionalAction>,
    /// The goal cannot be reached by this agent from here.
    pub unachievable: bool,
}

fn nearest_free(state: &WorldState, agent: AgentId, t: TypeId) -> Option<&ObjectState> {
    let here = state.agent(agent).cell;
    state
        .instances(t)
        .filter(|o| !o.picked_up)
        .min_by(|a, b| a.cell.dist(here).total_cmp(&b.cell.dist(here)).then(a.id.cmp(&b.id)))
}

/// Shortest intentional sequence that makes `goal` true for `agent`,
/// repairing obstacles (closed or running receptacles, a full hand) on the way.
pub fn heuristic_sequence(goal: &Goal, state: &WorldState, agent: AgentId, catalog: &Catalog) -> HeuristicPlan {
    let mut out = HeuristicPlan::default();
    if goal_satisfied(goal, state) {
        return out;
    }
    let act = |p, t| IntentionalAction::new(p, t);
    let held = state.held_type(agent);
    let drop = drop_spot(state, catalog);
    let seq = &mut out.actions;

    // Ready a receptacle to accept an object: stop it, then open it.
    let ready = |seq: &mut Vec<IntentionalAction>, r: TypeId| {
        if let Some(o) = state.instances(r).next() {
            if o.affordances.openable && !state.instances(r).any(|i| i.open) {
                if o.affordances.toggleable && state.instances(r).all(|i| i.toggled_on) {
                    seq.push(act(Predicate::ToggleOff, r));
                }
                seq.push(act(Predicate::Open, r));
            }
        }
    };
    let fetch = |seq: &mut Vec<IntentionalAction>, o: TypeId| -> bool {
        let Some(inst) = nearest_free(state, agent, o) else {
            return false;
        };
        if held.is_some() {
            match drop {
                Some(d) => seq.push(act(Predicate::Put, d)),
                None => return false,
            }
        }
        if state.is_enclosed(inst) {
            let p = inst.parent.expect("enclosed implies parent");
            let pr = &state.objects[p];
            if pr.toggled_on {
                seq.push(act(Predicate::ToggleOff, pr.type_id));
            }
            seq.push(act(Predicate::Open, pr.type_id));
        }
        seq.push(act(Predicate::PickUp, o));
        true
    };

    match (goal.target, goal.object) {
        (TargetState::Wait, _) | (_, None) => {}
        (TargetState::Get, Some(o)) => {
            if held != Some(o) && !fetch(seq, o) {
                out.unachievable = true;
            }
        }
        (TargetState::In | TargetState::On, Some(o)) => {
            let r = goal.receptacle.expect("placement goal has a receptacle");
            if held != Some(o) && !fetch(seq, o) {
                out.unachievable = true;
            } else {
                ready(seq, r);
                seq.push(act(Predicate::Put, r));
            }
        }
        (TargetState::KeepOpen, Some(o)) => {
            if state.instances(o).all(|i| i.toggled_on) {
                seq.push(act(Predicate::ToggleOff, o));
            }
            seq.push(act(Predicate::Open, o));
        }
        (TargetState::KeepOn, Some(o)) => {
            let inst = state.instances(o).next();
            if inst.map(|i| i.affordances.openable).unwrap_or(false) && state.instances(o).all(|i| i.open) {
                seq.push(act(Predicate::Close, o));
            }
            seq.push(act(Predicate::ToggleOn, o));
        }
        (TargetState::KeepClose, Some(o)) => {
            for _ in state.instances(o).filter(|i| i.open) {
                seq.push(act(Predicate::Close, o));
            }
        }
        (TargetState::KeepOff, Some(o)) => {
            for _ in state.instances(o).filter(|i| i.toggled_on) {
                seq.push(act(Predicate::ToggleOff, o));
            }
        }
    }
    out
}

/// Run a sequence; returns the final state and whether every action succeeded.
pub fn simulate(state: &WorldState, agent: AgentId, actions: &[IntentionalAction]) -> (WorldState, bool) {
    let mut s = state.clone();
    let mut ok = true;
    for a in actions {
        let (n, out) = apply_action(&s, agent, *a);
        ok &= out.success;
        s = n;
    }
    (s, ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::{parse_task, TaskKind};
    use crate::world::fixtures::kitchen_room;
    use crate::world::Capability;

    #[test]
    fn grid_path_is_shortest() {
        let c = Catalog::kitchen();
        let mut s = kitchen_room(&c);
        s.nav = NavMode::Grid;
        let p = shortest_path(&s, Cell::new(1, 1), Cell::new(4, 4)).unwrap();
        assert_eq!(p.len(), 6);
        assert_eq!(p.last(), Some(&Cell::new(4, 4)));
        assert!(shortest_path(&s, Cell::new(1, 1), Cell::new(1, 1)).unwrap().is_empty());
        assert!(shortest_path(&s, Cell::new(1, 1), Cell::new(0, 2)).is_none());
        let mut full = vec![Cell::new(1, 1)];
        full.extend(p);
        for w in full.windows(2) {
            assert_eq!((w[0].x - w[1].x).abs() + (w[0].y - w[1].y).abs(), 1);
        }
    }

    #[test]
    fn approach_stands_adjacent() {
        let c = Catalog::kitchen();
        let s = kitchen_room(&c);
        let (dest, walked) = approach(&s, AgentId::Main, Cell::new(0, 4)).unwrap();
        assert!(dest.touches(Cell::new(0, 4)));
        assert!(s.is_free(dest));
        assert_eq!(walked, 0);
        let mut g = s.clone();
        g.nav = NavMode::Grid;
        let (dest, walked) = approach(&g, AgentId::Main, Cell::new(0, 4)).unwrap();
        assert!(dest.touches(Cell::new(0, 4)));
        assert_eq!(walked, 2);
    }

    #[test]
    fn low_level_expansion() {
        let c = Catalog::kitchen();
        let mut s = kitchen_room(&c);
        s.nav = NavMode::Grid;
        let a = IntentionalAction::new(Predicate::Open, c.id("Fridge").unwrap());
        let steps = plan_low_level(&s, AgentId::Main, &a).unwrap();
        assert!(matches!(steps.last(), Some(LowLevelStep::Interact(Predicate::Open, _))));
        let moves = steps.iter().filter(|s| matches!(s, LowLevelStep::MoveTo(_))).count();
        assert_eq!(moves, 2);
        s.nav = NavMode::Teleport;
        assert_eq!(plan_low_level(&s, AgentId::Main, &a).unwrap().len(), 2);
        assert!(plan_low_level(&s, AgentId::Main, &IntentionalAction::WAIT).unwrap().is_empty());
        let put = IntentionalAction::new(Predicate::Put, c.id("Fridge").unwrap());
        assert_eq!(plan_low_level(&s, AgentId::Main, &put), Err(Reason::EmptyHand));
    }

    #[test]
    fn expert_completes_every_task_alone() {
        let c = Catalog::kitchen();
        for t in TaskKind::ALL {
            let mut s = kitchen_room(&c);
            let mut plan = parse_task(t, &s, &c).unwrap();
            for _ in 0..30 {
                if plan.is_complete() {
                    break;
                }
                let a = expert_policy(&s, &plan, &c);
                let (n, _) = apply_action(&s, AgentId::Main, a);
                plan.record_transition(&s, &n, AgentId::Main);
                s = n;
                s.step += 1;
                plan.advance(&s);
            }
            assert!(plan.is_complete(), "{t:?}");
        }
    }

    #[test]
    fn expert_drops_wrong_object() {
        let c = Catalog::kitchen();
        let s = kitchen_room(&c);
        let (s, _) = apply_action(&s, AgentId::Main, IntentionalAction::new(Predicate::PickUp, c.id("Cup").unwrap()));
        let plan = parse_task(TaskKind::ArrangeRoom, &s, &c).unwrap();
        let a = expert_policy(&s, &plan, &c);
        assert_eq!(a, IntentionalAction::new(Predicate::Put, c.id("Counter").unwrap()));
    }

    #[test]
    fn heuristic_sequences_reach_their_goals() {
        let c = Catalog::kitchen();
        let s = kitchen_room(&c);
        let (p, m) = (c.id("Potato").unwrap(), c.id("Microwave").unwrap());
        let h = heuristic_sequence(&Goal::put_in(p, m), &s, AgentId::Helper, &c);
        assert_eq!(
            h.actions,
            vec![
                IntentionalAction::new(Predicate::PickUp, p),
                IntentionalAction::new(Predicate::Open, m),
                IntentionalAction::new(Predicate::Put, m),
            ]
        );
        for t in TaskKind::ALL {
            let mut st = s.clone();
            st.agents[1].capability = Capability::FULL;
            for g in parse_task(t, &st, &c).unwrap().goals {
                let h = heuristic_sequence(&g, &st, AgentId::Helper, &c);
                assert!(!h.unachievable);
                let (n, ok) = simulate(&st, AgentId::Helper, &h.actions);
                assert!(ok && goal_satisfied(&g, &n), "{}", g.describe(&c));
                st = n;
            }
        }
    }

    #[test]
    fn taken_object_is_unachievable() {
        let c = Catalog::kitchen();
        let s = kitchen_room(&c);
        let p = c.id("Potato").unwrap();
        let (s, _) = apply_action(&s, AgentId::Main, IntentionalAction::new(Predicate::PickUp, p));
        let h = heuristic_sequence(&Goal::put_in(p, c.id("Fridge").unwrap()), &s, AgentId::Helper, &c);
        assert!(h.unachievable);
    }
}
