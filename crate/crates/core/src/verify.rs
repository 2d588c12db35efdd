//! Self-checks against independent oracles: capability thresholds, reward
//! constants, the filter against direct enumeration, UCT against exhaustive
//! search, and recognition accuracy on expert traces.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, CapabilityType};
use crate::episode::{run_episode, EpisodeSpec, RunConfig};
use crate::error::Result;
use crate::helpers::{public_plans, PolicyConfig, PolicyKind};
use crate::inference::{brute_force_posterior, BeliefState, FilterParams, Support};
use crate::mcts::{exhaustive_depth, mcts_plan, optimal_first_actions, search, MctsParams};
use crate::planner::{heuristic_sequence, simulate};
use crate::reward::{helper_reward, RewardConfig, StepFacts};
use crate::rng::{derive_seed, stream};
use crate::scene::{generate_scene, public_view, GenConfig, TRAIN_SEEDS};
use crate::task::{goal_satisfied, parse_task, Goal, TaskKind};
use crate::world::{
    can_perform, enumerate_actions, AgentId, Capability, IntentionalAction, ObjectState, Predicate, Reason,
    Visibility, WorldState,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(suite: &str, name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        suite: suite.into(),
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

/// A free-standing instance of a catalog type at floor height.
pub fn loose_object(catalog: &Catalog, name: &str) -> Result<ObjectState> {
    let t = catalog.require(name)?;
    let ty = catalog.get(t);
    Ok(ObjectState {
        id: 0,
        type_id: t,
        cell: crate::world::Cell::new(0, 0),
        weight: ty.weight,
        height: 0.0,
        picked_up: false,
        open: false,
        toggled_on: false,
        cooked: false,
        visible_to: [true; 2],
        parent: None,
        affordances: ty.affordances,
        solid: ty.solid,
    })
}

pub fn capability_suite(catalog: &Catalog) -> Result<Vec<Check>> {
    let with = |f: fn(&mut Capability, f64), v: f64| {
        let mut c = Capability::FULL;
        f(&mut c, v);
        c
    };
    let beta = |c: &mut Capability, v| c.beta = v;
    let gamma = |c: &mut Capability, v| c.gamma = v;
    let delta = |c: &mut Capability, v| c.delta = v;
    let cases: [(&str, Capability, Predicate, &str, bool); 8] = [
        ("beta 0.1 lifts potato", with(beta, 0.1), Predicate::PickUp, "Potato", false),
        ("beta 0.18 lifts potato", with(beta, 0.18), Predicate::PickUp, "Potato", true),
        ("beta 0.18 lifts tomato", with(beta, 0.18), Predicate::PickUp, "Tomato", false),
        ("beta 0.7 lifts bread", with(beta, 0.7), Predicate::PickUp, "Bread", true),
        ("beta 0.7 lifts cup", with(beta, 0.7), Predicate::PickUp, "Cup", false),
        ("gamma 0.49 opens fridge", with(gamma, 0.49), Predicate::Open, "Fridge", false),
        ("gamma 0.5 opens fridge", with(gamma, 0.5), Predicate::Open, "Fridge", true),
        ("delta 0.49 closes fridge", with(delta, 0.49), Predicate::Close, "Fridge", false),
    ];
    let mut out = Vec::new();
    for (name, cap, pred, obj, want) in cases {
        let o = loose_object(catalog, obj)?;
        let got = can_perform(&cap, &IntentionalAction::new(pred, o.type_id), &o);
        out.push(check("capability", name, got == want, format!("expected {want}, got {got}")));
    }
    Ok(out)
}

pub fn reward_suite() -> Vec<Check> {
    let r1 = RewardConfig::<f64>::with_lambda(1.0);
    let facts = |done: Vec<bool>, illegal, fail| StepFacts {
        helper_completed: done,
        helper_illegal: illegal,
        final_incomplete: fail,
    };
    let cases = [
        ("necessary completion", facts(vec![true], false, false), 19.88),
        ("unnecessary completion, lambda 1", facts(vec![false], false, false), -10.12),
        ("illegal step", facts(vec![], true, false), -0.5),
        ("plain step", facts(vec![], false, false), -0.12),
        ("terminal failure", facts(vec![], false, true), -20.12),
    ];
    cases
        .into_iter()
        .map(|(name, f, want)| {
            let got = helper_reward(&f, &r1).total();
            check("reward", name, (got - want).abs() < 1e-9, format!("expected {want}, got {got}"))
        })
        .collect()
}

/// Traced frames from expert/random episodes on training scenes.
fn traced_windows(catalog: &Catalog, episodes: usize, seed: u64) -> Result<Vec<(WorldState, Vec<crate::world::Observation>)>> {
    let run = RunConfig {
        trace: true,
        oracle_budget: 1,
        ..Default::default()
    };
    let policy = PolicyConfig::new(PolicyKind::Random, 0.0);
    let mut out = Vec::new();
    for i in 0..episodes {
        let spec = EpisodeSpec {
            scene_seed: TRAIN_SEEDS.start + (i as u64 % 20),
            task: TaskKind::ALL[i % TaskKind::ALL.len()],
            ctype: CapabilityType::ALL[i % 7],
            episode_seed: derive_seed(seed, &[i as u64]),
            test_mode: false,
        };
        let r = run_episode(&spec, &policy, &run, catalog)?;
        let scene = generate_scene(spec.scene_seed, &run.scene, catalog)?;
        out.push((scene, r.frames.into_iter().map(|f| f.obs).collect()));
    }
    Ok(out)
}

fn support_for(scene: &WorldState, catalog: &Catalog) -> Result<Arc<Support>> {
    let public = public_view(scene);
    let plans = public_plans(&public, catalog)?;
    Ok(Arc::new(Support::new(&public, &plans, catalog)?))
}

/// Largest absolute difference between the recursive filter and direct
/// enumeration over `n` windows.
pub fn filter_vs_enumeration(catalog: &Catalog, n: usize, seed: u64) -> Result<(usize, f64)> {
    let params = FilterParams::<f64>::default();
    let mut worst = 0.0f64;
    let mut count = 0;
    for (scene, frames) in traced_windows(catalog, n.div_ceil(4).max(1), seed)? {
        let sup = support_for(&scene, catalog)?;
        let mut b = BeliefState::new(sup.clone(), params);
        for (k, f) in frames.iter().enumerate() {
            b = b.update(f)?;
            if k % 3 != 2 || count >= n {
                continue;
            }
            let w: Vec<_> = frames[..=k].to_vec();
            let bf = brute_force_posterior(&w, &sup, &params)?;
            for (x, y) in bf.iter().zip(&b.table) {
                worst = worst.max((x - y).abs());
            }
            count += 1;
        }
    }
    Ok((count, worst))
}

pub fn belief_suite(catalog: &Catalog) -> Result<Vec<Check>> {
    let (n, worst) = filter_vs_enumeration(catalog, 100, 0xBE1)?;
    Ok(vec![check(
        "belief",
        "filter matches enumeration",
        n >= 100 && worst <= 1e-9,
        format!("{n} windows, max |diff| {worst:.3e}"),
    )])
}

/// A small solvable instance: a scene after a few random main-agent steps and
/// one of its task goals.
#[derive(Clone, Debug)]
pub struct TinyInstance {
    pub state: WorldState,
    pub goal: Goal,
    pub actions: Vec<IntentionalAction>,
    pub depth: usize,
}

/// A 6x6 room holding one instance of each required type.
pub fn tiny_config() -> GenConfig {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
    GenConfig {
        width: 6,
        height: 6,
        fixtures: s(&["Counter", "Cabinet", "Fridge", "Microwave", "CoffeeMachine"]),
        items: s(&["Potato", "Mug", "Tomato", "Bread", "Cup"]),
        n_extra: 0,
        ..Default::default()
    }
}

/// Intentional actions over the types `goal` touches: its object and
/// receptacle, whatever holds them, and what the helper carries.
pub fn goal_actions(state: &WorldState, goal: &Goal, catalog: &Catalog) -> Vec<IntentionalAction> {
    let mut types: Vec<_> = goal.object.into_iter().chain(goal.receptacle).collect();
    for t in types.clone() {
        for o in state.instances(t) {
            if let Some(p) = o.parent {
                types.push(state.objects[p].type_id);
            }
        }
    }
    types.extend(state.held_type(AgentId::Helper));
    enumerate_actions(catalog)
        .into_iter()
        .filter(|a| a.arg.is_none_or(|t| types.contains(&t)))
        .collect()
}

/// Instances on tiny rooms whose goal the helper can reach in one to
/// `max_depth` actions.
pub fn tiny_instances(catalog: &Catalog, n: usize, max_depth: usize, seed: u64) -> Result<Vec<TinyInstance>> {
    use rand::Rng as _;
    let cfg = tiny_config();
    let mut out = Vec::new();
    let mut rng = stream(seed, &[0x71]);
    let mut k = 0u64;
    while out.len() < n && k < 50 * n as u64 + 100 {
        k += 1;
        let mut s = generate_scene(k, &cfg, catalog)?;
        let all = enumerate_actions(catalog);
        for _ in 0..rng.gen_range(0..3) {
            let a = all[rng.gen_range(0..all.len())];
            s.step_action(AgentId::Main, a);
        }
        let task = TaskKind::ALL[rng.gen_range(0..TaskKind::ALL.len())];
        let goals = parse_task(task, &s, catalog)?.goals;
        let goal = goals[rng.gen_range(0..goals.len())];
        if goal_satisfied(&goal, &s) {
            continue;
        }
        let actions = goal_actions(&s, &goal, catalog);
        if let Some(depth) = exhaustive_depth(&s, &goal, &actions, max_depth) {
            out.push(TinyInstance { state: s, goal, actions, depth });
        }
    }
    Ok(out)
}

/// Fraction of instances where UCT picks an optimal first action.
pub fn mcts_optimality(instances: &[TinyInstance], params: &MctsParams, seed: u64) -> f64 {
    let hits: usize = instances
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let acts = &t.actions;
            let best = optimal_first_actions(&t.state, &t.goal, acts, t.depth);
            let a = mcts_plan(&t.state, &t.goal, acts, params, &mut stream(seed, &[i as u64]));
            usize::from(best.contains(&a))
        })
        .sum();
    hits as f64 / instances.len().max(1) as f64
}

pub fn mcts_suite(catalog: &Catalog) -> Result<Vec<Check>> {
    let inst = tiny_instances(catalog, 200, 3, 0x3C75)?;
    let rate = mcts_optimality(&inst, &MctsParams::default(), 0x3C76);
    let one = MctsParams {
        p_sample: 1.0,
        n_sim: 200,
        ..Default::default()
    };
    let same = inst.iter().take(30).enumerate().all(|(i, t)| {
        let acts = &t.actions;
        let x = search(&t.state, &t.goal, acts, &one, Some(catalog), &mut stream(9, &[i as u64]));
        let y = search(&t.state, &t.goal, acts, &one, None, &mut stream(9, &[i as u64]));
        x == y
    });
    Ok(vec![
        check(
            "mcts",
            "optimal first action",
            inst.len() == 200 && rate >= 0.95,
            format!("{} instances, rate {rate:.3}", inst.len()),
        ),
        check("mcts", "rule rollouts off reduce to plain search", same, "30 instances"),
    ])
}

/// Rule plans for every task goal on every training scene complete in the
/// world, at full capability.
pub fn planner_suite(catalog: &Catalog) -> Result<Vec<Check>> {
    let mut bad = Vec::new();
    let mut n = 0;
    for seed in TRAIN_SEEDS {
        let s = generate_scene(seed, &GenConfig::default(), catalog)?;
        for task in TaskKind::ALL {
            for g in parse_task(task, &s, catalog)?.goals {
                n += 1;
                let h = heuristic_sequence(&g, &s, AgentId::Main, catalog);
                let (end, _) = simulate(&s, AgentId::Main, &h.actions);
                if h.unachievable || !goal_satisfied(&g, &end) {
                    bad.push(format!("s{seed} {}", g.describe(catalog)));
                }
            }
        }
    }
    Ok(vec![check(
        "planner",
        "rule plans complete goals",
        bad.is_empty(),
        format!("{n} goals, failures: {bad:?}"),
    )])
}

/// Every suite above, in a fixed order.
pub fn run_all(catalog: &Catalog) -> Result<Vec<Check>> {
    let mut out = capability_suite(catalog)?;
    out.extend(reward_suite());
    out.extend(planner_suite(catalog)?);
    out.extend(belief_suite(catalog)?);
    out.extend(mcts_suite(catalog)?);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceStats {
    /// Windows of five frames in which the main agent appears.
    pub windows: usize,
    pub goal_hits: usize,
    /// Windows containing a failure caused by the main agent's capability.
    pub revealing: usize,
    /// Of those, windows whose MAP cell has the limited dimension right.
    pub class_hits: usize,
    /// Of those, windows whose MAP cell is the true cell.
    pub cell_hits: usize,
}

impl InferenceStats {
    pub fn goal_accuracy(&self) -> f64 {
        self.goal_hits as f64 / self.windows.max(1) as f64
    }

    pub fn class_accuracy(&self) -> f64 {
        self.class_hits as f64 / self.revealing.max(1) as f64
    }

    pub fn cell_accuracy(&self) -> f64 {
        self.cell_hits as f64 / self.revealing.max(1) as f64
    }

    fn add(mut self, o: InferenceStats) -> Self {
        self.windows += o.windows;
        self.goal_hits += o.goal_hits;
        self.revealing += o.revealing;
        self.class_hits += o.class_hits;
        self.cell_hits += o.cell_hits;
        self
    }
}

/// Dimension a capability falls short in, 0..6 for alpha..zeta; `None`
/// when every dimension is at or above what the scene can test.
fn limited_dim(cap: &Capability, sup: &Support) -> Option<usize> {
    let top = Capability::FULL;
    let cell = sup.cell_of(cap);
    let full = sup.cell_of(&top);
    if cell.alpha < full.alpha {
        return Some(0);
    }
    if cell.beta < full.beta {
        return Some(1);
    }
    (0..4).find(|b| cell.abilities & (1 << b) == 0).map(|b| b + 2)
}

/// Recognition accuracy of the filter on expert episodes with a passive
/// helper, over training scenes and all capability types.
pub fn inference_accuracy(
    catalog: &Catalog,
    visibility: Visibility,
    min_windows: usize,
    seed: u64,
) -> Result<InferenceStats> {
    let mut run = RunConfig {
        trace: true,
        oracle_budget: 1,
        ..Default::default()
    };
    run.scene.visibility = visibility;
    let policy = PolicyConfig::new(PolicyKind::Passive, 0.0);
    let params = FilterParams::<f64>::default();
    let one = |i: u64| -> Result<InferenceStats> {
        let spec = EpisodeSpec {
            scene_seed: TRAIN_SEEDS.start + i % 20,
            task: TaskKind::ALL[(i / 20) as usize % TaskKind::ALL.len()],
            ctype: CapabilityType::ALL[(i / 60) as usize % 7],
            episode_seed: derive_seed(seed, &[i]),
            test_mode: false,
        };
        let r = run_episode(&spec, &policy, &run, catalog)?;
        let scene = generate_scene(spec.scene_seed, &run.scene, catalog)?;
        let sup = support_for(&scene, catalog)?;
        let truth = spec.capability();
        let true_cell = sup.cell_of(&truth);
        let true_dim = limited_dim(&truth, &sup);
        let mut st = InferenceStats {
            windows: 0,
            goal_hits: 0,
            revealing: 0,
            class_hits: 0,
            cell_hits: 0,
        };
        let mut b = BeliefState::new(sup.clone(), params);
        for (k, f) in r.frames.iter().enumerate() {
            b = b.update(&f.obs)?;
            if k + 1 < params.window || b.none_flag {
                continue;
            }
            st.windows += 1;
            st.goal_hits += usize::from(b.map_goal() == Some(f.goal));
            let lo = k + 1 - params.window;
            let revealed = (lo..=k).any(|j| {
                r.log.steps[j].main_reason == Reason::Capability && r.frames[j].obs.agent(AgentId::Main).is_some()
            });
            if revealed {
                let cell = b.map_cell();
                st.revealing += 1;
                st.cell_hits += usize::from(cell == true_cell);
                st.class_hits += usize::from(limited_dim(&sup.representative(&cell), &sup) == true_dim);
            }
        }
        Ok(st)
    };
    let mut total = InferenceStats {
        windows: 0,
        goal_hits: 0,
        revealing: 0,
        class_hits: 0,
        cell_hits: 0,
    };
    let batch = 64u64;
    let mut next = 0u64;
    while total.windows < min_windows {
        let got: Vec<Result<InferenceStats>> = (next..next + batch).into_par_iter().map(one).collect();
        next += batch;
        for g in got {
            total = total.add(g?);
        }
        if next > 100_000 {
            break;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_suites_pass() {
        let c = Catalog::kitchen();
        for ch in capability_suite(&c).unwrap().into_iter().chain(reward_suite()) {
            assert!(ch.pass, "{ch:?}");
        }
    }
}
