//! One global step of the two-agent loop, and the episode runner.

use serde::{Deserialize, Serialize};

use crate::catalog::{sample_capability, Catalog, CapabilityType};
use crate::error::{Error, Result};
use crate::helpers::{Helper, PolicyConfig};
use crate::metrics::{oracle_steps, Completion, EpisodeLog, OracleSteps, StepRecord};
use crate::planner::expert_policy;
use crate::reward::{helper_reward, StepFacts};
use crate::rng;
use crate::scene::{generate_scene, GenConfig};
use crate::task::{is_necessary, parse_task, AdvanceEvent, Completer, Goal, TaskKind, TaskPlan};
use crate::world::{AgentId, Capability, Cell, IntentionalAction, Observation, Outcome, Reason, WorldState};

/// What the helper does in a step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Move {
    Act(IntentionalAction),
    /// Walk next to a cell without interacting; counts as a Wait.
    Reposition(Cell),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointOutcome {
    pub main: Outcome,
    pub helper: Outcome,
    pub helper_action: IntentionalAction,
    pub helper_moved: bool,
    pub event: AdvanceEvent,
}

/// The main agent acts, then the helper acts on the resulting state; the
/// step counter ticks and the plan advances once.
pub fn joint_step(state: &mut WorldState, plan: &mut TaskPlan, main: IntentionalAction, helper: Move) -> JointOutcome {
    joint_step_with(state, plan, main, |_, _| Ok(helper)).expect("fixed helper move")
}

/// As [`joint_step`], with the helper choosing its move after seeing the
/// main agent's action.
pub fn joint_step_with<F>(
    state: &mut WorldState,
    plan: &mut TaskPlan,
    main: IntentionalAction,
    helper: F,
) -> Result<JointOutcome>
where
    F: FnOnce(&WorldState, &TaskPlan) -> Result<Move>,
{
    let before = state.clone();
    let m = state.step_action(AgentId::Main, main);
    plan.record_transition(&before, state, AgentId::Main);

    let mv = helper(state, plan)?;
    let before = state.clone();
    let (h, helper_action, moved) = match mv {
        Move::Act(a) => (state.step_action(AgentId::Helper, a), a, false),
        Move::Reposition(c) => {
            let moved = state.reposition(AgentId::Helper, c);
            let out = state.step_action(AgentId::Helper, IntentionalAction::WAIT);
            (out, IntentionalAction::WAIT, moved)
        }
    };
    plan.record_transition(&before, state, AgentId::Helper);

    state.step += 1;
    let event = plan.advance(state);
    Ok(JointOutcome {
        main: m,
        helper: h,
        helper_action,
        helper_moved: moved,
        event,
    })
}

pub fn is_illegal(out: &Outcome) -> bool {
    !out.success && out.reason.is_illegal() && out.reason != Reason::Ok
}

/// Which episode to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub scene_seed: u64,
    pub task: TaskKind,
    pub ctype: CapabilityType,
    pub episode_seed: u64,
    /// Pin the limited capability dimension to its lowest value.
    pub test_mode: bool,
}

impl EpisodeSpec {
    pub fn scenario_id(&self) -> String {
        format!("s{}-{}-{}", self.scene_seed, self.task.label(), self.ctype.label())
    }

    pub fn capability(&self) -> Capability {
        sample_capability(self.ctype, self.test_mode, &mut rng::stream(self.episode_seed, &[1]))
    }

    pub fn helper_seed(&self) -> u64 {
        rng::derive_seed(self.episode_seed, &[2])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub scene: GenConfig,
    /// Node budget of the shortest-solution search.
    pub oracle_budget: usize,
    /// Record the helper's observations with ground-truth labels.
    pub trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scene: GenConfig::default(),
            oracle_budget: 200_000,
            trace: false,
        }
    }
}

/// A helper observation with what the main agent was really doing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub obs: Observation,
    /// The main agent's goal when the frame was taken.
    pub goal: Goal,
    pub capability: Capability,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRun {
    pub log: EpisodeLog<f64>,
    pub frames: Vec<Frame>,
}

/// The scene with the main agent's capability set and its parsed task.
pub fn setup(spec: &EpisodeSpec, cfg: &RunConfig, catalog: &Catalog) -> Result<(WorldState, TaskPlan)> {
    let mut scene = generate_scene(spec.scene_seed, &cfg.scene, catalog)?;
    scene.agents[AgentId::Main.index()].capability = spec.capability();
    let plan = parse_task(spec.task, &scene, catalog)?;
    Ok((scene, plan))
}

pub fn run_episode(spec: &EpisodeSpec, policy: &PolicyConfig, cfg: &RunConfig, catalog: &Catalog) -> Result<EpisodeRun> {
    let (scene, plan) = setup(spec, cfg, catalog)?;
    let oracle = oracle_steps(&scene, &plan, catalog, cfg.oracle_budget);
    run_in_scene(spec, &scene, plan, policy, oracle, cfg.trace, catalog)
}

/// Run one episode on a prepared scene whose main agent already carries its
/// true capability.
pub fn run_in_scene(
    spec: &EpisodeSpec,
    scene: &WorldState,
    mut plan: TaskPlan,
    policy: &PolicyConfig,
    oracle: OracleSteps,
    trace: bool,
    catalog: &Catalog,
) -> Result<EpisodeRun> {
    let id = spec.scenario_id();
    let fail = |e: Error| Error::Episode {
        id: id.clone(),
        msg: e.to_string(),
    };
    let cap = scene.agent(AgentId::Main).capability;
    let necessary: Vec<bool> = plan.goals.iter().map(|g| is_necessary(g, &cap, scene)).collect();
    let mut helper = Helper::new(policy, scene, catalog, spec.helper_seed()).map_err(&fail)?;
    let mut state = scene.clone();
    let horizon = state.max_steps;
    let mut needed = vec![false; plan.goals.len()];
    let mark_need = |plan: &TaskPlan, needed: &mut Vec<bool>| {
        if let Some(c) = plan.current_index() {
            if necessary[c] {
                needed[c] = true;
            }
        }
    };
    mark_need(&plan, &mut needed);

    let mut steps = Vec::new();
    let mut frames = Vec::new();
    while !plan.is_complete() && state.step < horizon {
        let main = expert_policy(&state, &plan, catalog);
        let step = state.step;
        let out = joint_step_with(&mut state, &mut plan, main, |s, p| {
            let obs = s.observe(AgentId::Helper);
            let goal = p.next_unsatisfied(s);
            if trace {
                frames.push(Frame {
                    obs: obs.clone(),
                    goal,
                    capability: cap,
                });
            }
            helper.decide(&obs, Some(goal), catalog)
        })
        .map_err(&fail)?;
        mark_need(&plan, &mut needed);

        let completed: Vec<Completion> = out
            .event
            .completed
            .map(|(i, who)| Completion {
                index: i,
                goal: plan.goals[i],
                completer: who,
                necessary: necessary[i],
            })
            .into_iter()
            .collect();
        let facts = StepFacts {
            helper_completed: completed
                .iter()
                .filter(|c| c.completer == Completer::Helper)
                .map(|c| c.necessary)
                .collect(),
            helper_illegal: is_illegal(&out.helper),
            final_incomplete: state.step >= horizon && !plan.is_complete(),
        };
        steps.push(StepRecord {
            step,
            main_action: main,
            main_success: out.main.success,
            main_reason: out.main.reason,
            helper_action: out.helper_action,
            helper_success: out.helper.success,
            helper_reason: out.helper.reason,
            helper_moved: out.helper_moved,
            completed,
            regressed: out.event.regressed,
            reward: helper_reward(&facts, &policy.rewards),
        });
    }

    let need_help = needed.iter().filter(|n| **n).count() as u32;
    let helped = needed
        .iter()
        .zip(&plan.completer)
        .zip(&plan.status)
        .filter(|((n, c), s)| **n && **c == Some(Completer::Helper) && **s == crate::task::GoalStatus::Done)
        .count() as u32;
    let log = EpisodeLog {
        scenario_id: id.clone(),
        scene_seed: spec.scene_seed,
        episode_seed: spec.episode_seed,
        task: spec.task,
        capability_type: spec.ctype,
        capability: cap,
        policy: policy.kind.label().to_string(),
        lambda_e: policy.rewards.lambda_e,
        reward_aware: policy.kind.reward_aware(),
        goals: plan.goals.clone(),
        necessary,
        final_status: plan.status.clone(),
        final_completer: plan.completer.clone(),
        success: plan.is_complete(),
        length: steps.len() as u32,
        steps,
        oracle_steps: oracle.steps.max(1),
        oracle_bounded: oracle.bounded,
        need_help,
        helped,
    };
    log.check().map_err(|m| Error::Episode { id, msg: m })?;
    Ok(EpisodeRun { log, frames })
}
