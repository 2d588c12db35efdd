//! Helper policies: the baselines and the capability-aware smart helper.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, TypeId};
use crate::episode::Move;
use crate::error::{Error, Result};
use crate::inference::{BeliefState, FilterParams, Support};
use crate::mcts::{mcts_heuristic_plan, mcts_plan, MctsParams};
use crate::planner::{expert_action, heuristic_sequence, simulate};
use crate::reward::RewardConfig;
use crate::rng::{self, Rng};
use crate::scene::public_view;
use crate::task::{goal_satisfied, parse_task, required_capability, Goal, TaskKind, TaskPlan};
use crate::world::{enumerate_actions, AgentId, Cell, IntentionalAction, Observation, Predicate, Reason, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Always waits.
    Passive,
    Random,
    Mcts,
    MctsHeuristic,
    /// Heuristic MCTS toward the true current goal.
    MctsTg,
    /// Heuristic MCTS toward one random goal per episode.
    MctsRg,
    Smart,
}

impl PolicyKind {
    pub const BASELINES: [PolicyKind; 5] = [
        PolicyKind::Random,
        PolicyKind::Mcts,
        PolicyKind::MctsHeuristic,
        PolicyKind::MctsTg,
        PolicyKind::MctsRg,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::Passive => "passive",
            PolicyKind::Random => "random",
            PolicyKind::Mcts => "mcts",
            PolicyKind::MctsHeuristic => "mcts-heuristic",
            PolicyKind::MctsTg => "mcts-tg",
            PolicyKind::MctsRg => "mcts-rg",
            PolicyKind::Smart => "smart",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            PolicyKind::Passive,
            PolicyKind::Random,
            PolicyKind::Mcts,
            PolicyKind::MctsHeuristic,
            PolicyKind::MctsTg,
            PolicyKind::MctsRg,
            PolicyKind::Smart,
        ]
        .into_iter()
        .find(|p| p.label().eq_ignore_ascii_case(s))
    }

    /// Policies that choose actions by the helper reward.
    pub fn reward_aware(self) -> bool {
        self == PolicyKind::Smart
    }

    fn uses_belief(self) -> bool {
        matches!(self, PolicyKind::Mcts | PolicyKind::MctsHeuristic | PolicyKind::Smart)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub mcts: MctsParams,
    pub filter: FilterParams<f64>,
    pub rewards: RewardConfig<f64>,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, lambda_e: f64) -> Self {
        let mcts = match kind {
            PolicyKind::Mcts => MctsParams::default(),
            _ => MctsParams::heuristic(),
        };
        PolicyConfig {
            kind,
            mcts,
            filter: FilterParams::default(),
            rewards: RewardConfig::with_lambda(lambda_e),
        }
    }
}

/// The helper's picture of the room: the public scene, overwritten with
/// whatever it has seen most recently.
#[derive(Clone, Debug, PartialEq)]
pub struct KnownWorld {
    pub state: WorldState,
}

fn cell_of(p: &[f64; 3]) -> Cell {
    Cell::new(p[0].round() as i32, p[1].round() as i32)
}

impl KnownWorld {
    pub fn new(scene: &WorldState) -> Self {
        KnownWorld {
            state: public_view(scene),
        }
    }

    pub fn update(&mut self, obs: &Observation) {
        let s = &mut self.state;
        s.step = obs.step;
        for o in &obs.objects {
            if let Some(k) = s.objects.get_mut(o.id) {
                *k = o.clone();
            }
        }
        for a in &obs.agents {
            let i = a.id.index();
            let prev_held = s.agents[i].held;
            s.agents[i].cell = cell_of(&a.position);
            s.agents[i].held = a.held_object;
            s.agents[i].last_action = a.last_action;
            s.agents[i].last_success = a.last_success;
            if let Some(h) = a.held_object {
                let o = &mut s.objects[h];
                o.picked_up = true;
                o.parent = None;
                o.cell = s.agents[i].cell;
            }
            if let Some(h) = prev_held.filter(|h| Some(*h) != a.held_object) {
                if obs.object(h).is_none() {
                    // put down out of sight: assume it went where the agent said
                    let o = &mut s.objects[h];
                    o.picked_up = false;
                    let here = s.agents[i].cell;
                    let dest = a
                        .last_action
                        .arg
                        .filter(|_| a.last_success && a.last_action.predicate == Predicate::Put)
                        .and_then(|t| {
                            s.objects
                                .iter()
                                .filter(|r| r.type_id == t)
                                .min_by(|x, y| x.cell.dist(here).total_cmp(&y.cell.dist(here)).then(x.id.cmp(&y.id)))
                                .map(|r| (r.id, r.cell, r.height))
                        });
                    let o = &mut s.objects[h];
                    if let Some((rid, rc, rh)) = dest {
                        o.parent = Some(rid);
                        o.cell = rc;
                        o.height = rh;
                    }
                }
            }
        }
        // effects of actions seen to succeed, on instances out of sight
        for a in &obs.agents {
            if a.last_success {
                if let Some(state) = effect_of(a.last_action.predicate) {
                    self.set_nearest(a.last_action, cell_of(&a.position), state, obs);
                }
            }
        }
        let me = obs.observer.index();
        let own = self.state.agents[me].last_action;
        if let Some(state) = already_state(obs.own_reason) {
            let here = self.state.agents[me].cell;
            self.set_nearest(own, here, state, obs);
        }
        let s = &mut self.state;
        // nobody else can hold what the observed agents hold
        for i in 0..s.objects.len() {
            let held = s.agents.iter().any(|a| a.held == Some(i));
            if s.objects[i].picked_up && !held {
                s.objects[i].picked_up = false;
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Effect {
    Open(bool),
    On(bool),
}

fn effect_of(p: Predicate) -> Option<Effect> {
    match p {
        Predicate::Open => Some(Effect::Open(true)),
        Predicate::Close => Some(Effect::Open(false)),
        Predicate::ToggleOn => Some(Effect::On(true)),
        Predicate::ToggleOff => Some(Effect::On(false)),
        // putting something inside means the receptacle was open
        Predicate::Put => Some(Effect::Open(true)),
        _ => None,
    }
}

/// A failure that reveals the target was already in the wanted state.
fn already_state(r: Reason) -> Option<Effect> {
    match r {
        Reason::AlreadyOpen => Some(Effect::Open(true)),
        Reason::AlreadyClosed => Some(Effect::Open(false)),
        Reason::AlreadyOn => Some(Effect::On(true)),
        Reason::AlreadyOff => Some(Effect::On(false)),
        _ => None,
    }
}

impl KnownWorld {
    fn set_nearest(&mut self, action: IntentionalAction, from: Cell, effect: Effect, obs: &Observation) {
        let Some(t) = action.arg else { return };
        let s = &mut self.state;
        let Some(id) = s
            .instances(t)
            .min_by(|a, b| a.cell.dist(from).total_cmp(&b.cell.dist(from)).then(a.id.cmp(&b.id)))
            .map(|o| o.id)
        else {
            return;
        };
        if obs.object(id).is_some() {
            return;
        }
        match effect {
            Effect::Open(v) => {
                if s.objects[id].affordances.openable {
                    s.objects[id].open = v;
                }
            }
            Effect::On(v) => s.objects[id].toggled_on = v,
        }
    }
}

/// Why the smart helper did what it did.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmartNote {
    pub goal: Option<Goal>,
    pub p_incapable: f64,
    pub expected_value: f64,
}

/// Expected helper reward of taking on a goal the main agent is incapable
/// of with probability `p`, by a plan of `plan_len` actions.
pub fn expected_help_value(p: f64, plan_len: usize, cfg: &RewardConfig<f64>) -> f64 {
    p * cfg.goal_reward + (1.0 - p) * (cfg.goal_reward + cfg.lambda_e * cfg.emo_penalty) + cfg.step_cost * plan_len as f64
}

pub struct Helper {
    pub config: PolicyConfig,
    rng: Rng,
    actions: Vec<IntentionalAction>,
    pub known: KnownWorld,
    pub belief: Option<BeliefState<f64>>,
    support: Arc<Support>,
    rg_goal: Option<Goal>,
    pub note: Option<SmartNote>,
    /// Target types already looked at while the main agent was out of sight.
    searched: Vec<TypeId>,
}

/// Parse every task on the public scene; the helper's candidate goals.
pub fn public_plans(scene: &WorldState, catalog: &Catalog) -> Result<Vec<TaskPlan>> {
    TaskKind::ALL.iter().map(|t| parse_task(*t, scene, catalog)).collect()
}

impl Helper {
    pub fn new(config: &PolicyConfig, scene: &WorldState, catalog: &Catalog, seed: u64) -> Result<Self> {
        let public = public_view(scene);
        let plans = public_plans(&public, catalog)?;
        let support = Arc::new(Support::new(&public, &plans, catalog)?);
        let mut rng = rng::stream(seed, &[0x4E1F]);
        let rg_goal = if config.kind == PolicyKind::MctsRg {
            let mut goals: Vec<Goal> = Vec::new();
            for c in &support.candidates {
                if !goals.contains(&c.goal) {
                    goals.push(c.goal);
                }
            }
            goals.choose(&mut rng).copied()
        } else {
            None
        };
        let belief = config
            .kind
            .uses_belief()
            .then(|| BeliefState::new(support.clone(), config.filter));
        Ok(Helper {
            config: config.clone(),
            rng,
            actions: enumerate_actions(catalog),
            known: KnownWorld::new(&public),
            belief,
            support,
            rg_goal,
            note: None,
            searched: Vec::new(),
        })
    }

    pub fn random_goal(&self) -> Option<Goal> {
        self.rg_goal
    }

    /// One decision. `true_goal` is read by the true-goal baseline only.
    pub fn decide(&mut self, obs: &Observation, true_goal: Option<Goal>, catalog: &Catalog) -> Result<Move> {
        if obs.observer != AgentId::Helper {
            return Err(Error::Config("helper got another agent's observation".into()));
        }
        self.known.update(obs);
        if obs.agent(AgentId::Main).is_some() {
            self.searched.clear();
        }
        if let Some(b) = &self.belief {
            self.belief = Some(b.update(obs)?);
        }
        self.note = None;
        let mv = match self.config.kind {
            PolicyKind::Passive => Move::Act(IntentionalAction::WAIT),
            PolicyKind::Random => Move::Act(self.actions[self.rng.gen_range(0..self.actions.len())]),
            PolicyKind::Mcts | PolicyKind::MctsHeuristic => {
                let goal = self.belief.as_ref().and_then(|b| b.map_goal());
                match goal {
                    Some(g) => Move::Act(self.plan_toward(&g, catalog)),
                    None => Move::Act(IntentionalAction::WAIT),
                }
            }
            PolicyKind::MctsTg => match true_goal {
                Some(g) => Move::Act(self.plan_toward(&g, catalog)),
                None => Move::Act(IntentionalAction::WAIT),
            },
            PolicyKind::MctsRg => match self.rg_goal {
                Some(g) => Move::Act(self.plan_toward(&g, catalog)),
                None => Move::Act(IntentionalAction::WAIT),
            },
            PolicyKind::Smart => self.smart(catalog),
        };
        Ok(mv)
    }

    fn plan_toward(&mut self, goal: &Goal, catalog: &Catalog) -> IntentionalAction {
        let s = &self.known.state;
        if self.config.kind == PolicyKind::Mcts {
            mcts_plan(s, goal, &self.actions, &self.config.mcts, &mut self.rng)
        } else {
            mcts_heuristic_plan(s, goal, &self.actions, &self.config.mcts, catalog, &mut self.rng)
        }
    }

    /// Stay where the main agent's next action can be seen; without a
    /// prediction, go to where it was last known to be.
    /// Look for a main agent that has not been seen for a while. It is
    /// always next to the object it last acted on, so stand where the most
    /// probable targets not yet checked are within sight.
    fn explore(&mut self) -> Move {
        let s = &self.known.state;
        let main_held = s.held_type(AgentId::Main);
        let mut mass: Vec<(TypeId, f64)> = Vec::new();
        if let Some(b) = &self.belief {
            for (g, p) in b.goal_marginal() {
                let Some(t) = expert_action(&g, main_held, self.support.drop, goal_satisfied(&g, s)).arg else {
                    continue;
                };
                match mass.iter_mut().find(|(x, _)| *x == t) {
                    Some(e) => e.1 += p,
                    None => mass.push((t, p)),
                }
            }
        }
        let reach = (s.visibility.agent_radius - 1.5).max(1.0);
        let covers = |c: Cell, t: TypeId| s.instances(t).any(|o| o.cell.dist(c) <= reach);
        let best = |searched: &[TypeId]| -> Option<(Cell, f64)> {
            let mut best: Option<(Cell, f64)> = None;
            for y in 0..s.height {
                for x in 0..s.width {
                    let c = Cell::new(x, y);
                    if !s.is_free(c) {
                        continue;
                    }
                    let score: f64 = mass
                        .iter()
                        .filter(|(t, _)| !searched.contains(t) && covers(c, *t))
                        .map(|(_, p)| *p)
                        .sum();
                    if score > 0.0 && best.map(|(_, b)| score > b).unwrap_or(true) {
                        best = Some((c, score));
                    }
                }
            }
            best
        };
        let pick = best(&self.searched).or_else(|| {
            self.searched.clear();
            best(&[])
        });
        match pick {
            Some((c, _)) => {
                self.searched.extend(mass.iter().filter(|(t, _)| covers(c, *t)).map(|(t, _)| *t));
                Move::Reposition(c)
            }
            None => Move::Reposition(s.agent(AgentId::Main).cell),
        }
    }

    fn shadow(&self, predicted: Option<&Goal>) -> Move {
        let s = &self.known.state;
        let main = s.agent(AgentId::Main);
        let target: Option<TypeId> = predicted.and_then(|g| {
            expert_action(g, s.held_type(AgentId::Main), self.support.drop, goal_satisfied(g, s)).arg
        });
        let spot = target
            .and_then(|t| {
                s.instances(t)
                    .min_by(|a, b| a.cell.dist(main.cell).total_cmp(&b.cell.dist(main.cell)).then(a.id.cmp(&b.id)))
                    .map(|o| o.cell)
            })
            .unwrap_or(main.cell);
        Move::Reposition(spot)
    }

    fn smart(&mut self, catalog: &Catalog) -> Move {
        let Some(b) = self.belief.as_ref() else {
            return Move::Act(IntentionalAction::WAIT);
        };
        if b.none_flag {
            return self.explore();
        }
        let cand = b.map_candidate();
        let Some(task) = cand.task else {
            return self.shadow(None);
        };
        let all: &[Goal] = self
            .support
            .plans
            .iter()
            .find(|(t, _)| *t == task)
            .map(|(_, g)| g.as_slice())
            .unwrap_or_default();
        let goals = &all[cand.index.min(all.len())..];
        let s = &self.known.state;
        let cfg = &self.config.rewards;
        // goals that must stay true until the plan moves past them
        let mut earlier: Vec<Goal> = cand
            .index
            .checked_sub(1)
            .and_then(|i| all.get(i))
            .filter(|g| g.is_keep())
            .copied()
            .into_iter()
            .collect();
        let mut values: Vec<(Goal, f64, f64)> = Vec::new();
        let mut chosen: Option<(Goal, f64, f64)> = None;
        for g in goals {
            if earlier.iter().any(|e| g.conflicts_with(e)) {
                break;
            }
            earlier.push(*g);
            if goal_satisfied(g, s) {
                continue;
            }
            let p = b.p_incapable(&required_capability(g, s));
            let h = heuristic_sequence(g, s, AgentId::Helper, catalog);
            let ev = expected_help_value(p, h.actions.len().max(1), cfg);
            if !h.unachievable && ev > 0.0 {
                // doing this goal must not finish an earlier one the main agent should do itself
                let (after, _) = simulate(s, AgentId::Helper, &h.actions);
                let takes_over = values
                    .iter()
                    .any(|(e, _, v)| *v <= 0.0 && goal_satisfied(e, &after));
                if !takes_over {
                    chosen = Some((*g, p, ev));
                    break;
                }
            }
            values.push((*g, p, ev));
        }
        let predicted = goals.iter().find(|g| !goal_satisfied(g, s)).copied();
        match chosen {
            Some((g, p, ev)) => {
                self.note = Some(SmartNote {
                    goal: Some(g),
                    p_incapable: p,
                    expected_value: ev,
                });
                Move::Act(self.plan_toward(&g, catalog))
            }
            None => {
                if let Some((g, p, ev)) = values.first() {
                    self.note = Some(SmartNote {
                        goal: Some(*g),
                        p_incapable: *p,
                        expected_value: *ev,
                    });
                }
                self.shadow(predicted.as_ref())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::fixtures::kitchen_room;

    #[test]
    fn help_value_rule() {
        let c = RewardConfig::<f64>::with_lambda(1.0);
        assert!(expected_help_value(0.0, 1, &c) < 0.0);
        assert!((expected_help_value(0.9, 1, &c) - 16.88).abs() < 1e-9);
        let z = RewardConfig::<f64>::with_lambda(0.0);
        assert!((expected_help_value(0.0, 1, &z) - 19.88).abs() < 1e-9);
    }

    #[test]
    fn random_is_seeded() {
        let c = Catalog::kitchen();
        let s = kitchen_room(&c);
        let cfg = PolicyConfig::new(PolicyKind::Random, 1.0);
        let run = || {
            let mut h = Helper::new(&cfg, &s, &c, 5).unwrap();
            (0..20)
                .map(|_| h.decide(&s.observe(AgentId::Helper), None, &c).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn known_world_tracks_sightings() {
        let c = Catalog::kitchen();
        let mut s = kitchen_room(&c);
        let mut k = KnownWorld::new(&s);
        let f = s.instances(c.id("Fridge").unwrap()).next().unwrap().id;
        s.objects[f].open = true;
        s.visibility = crate::world::Visibility::full();
        s.refresh_visibility();
        k.update(&s.observe(AgentId::Helper));
        assert!(k.state.objects[f].open);
        assert_eq!(k.state.agents[0].capability, crate::world::Capability::FULL);
    }
}
