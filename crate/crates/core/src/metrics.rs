//! Episode logs, the evaluation metrics, and the shortest joint solution
//! length used by SPL.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, CapabilityType};
use crate::episode::{joint_step, Move};
use crate::error::{Error, Result};
use crate::reward::RewardBreakdown;
use crate::scalar::Scalar;
use crate::task::{Completer, Goal, GoalStatus, TaskKind, TaskPlan};
use crate::world::{enumerate_actions, Capability, IntentionalAction, Predicate, Reason, WorldState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub index: usize,
    pub goal: Goal,
    pub completer: Completer,
    pub necessary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct StepRecord<S: Scalar> {
    pub step: u32,
    pub main_action: IntentionalAction,
    pub main_success: bool,
    pub main_reason: Reason,
    pub helper_action: IntentionalAction,
    pub helper_success: bool,
    pub helper_reason: Reason,
    /// The helper only repositioned itself this step.
    #[serde(default)]
    pub helper_moved: bool,
    pub completed: Vec<Completion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regressed: Option<usize>,
    pub reward: RewardBreakdown<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EpisodeLog<S: Scalar> {
    pub scenario_id: String,
    pub scene_seed: u64,
    pub episode_seed: u64,
    pub task: TaskKind,
    pub capability_type: CapabilityType,
    pub capability: Capability,
    pub policy: String,
    pub lambda_e: S,
    pub reward_aware: bool,
    pub goals: Vec<Goal>,
    pub necessary: Vec<bool>,
    pub final_status: Vec<GoalStatus>,
    pub final_completer: Vec<Option<Completer>>,
    pub steps: Vec<StepRecord<S>>,
    pub success: bool,
    pub length: u32,
    pub oracle_steps: u32,
    /// Oracle search hit its bound; `oracle_steps` is a lower bound.
    pub oracle_bounded: bool,
    /// Necessary goals that became the main agent's current goal.
    pub need_help: u32,
    /// Of those, the ones the helper completed.
    pub helped: u32,
}

impl<S: Scalar> EpisodeLog<S> {
    pub fn total_reward(&self) -> S {
        self.steps.iter().map(|s| s.reward.total()).sum()
    }

    pub fn goal_success(&self) -> S {
        if self.goals.is_empty() {
            return S::one();
        }
        let done = self.final_status.iter().filter(|s| **s == GoalStatus::Done).count();
        S::from_count(done) / S::from_count(self.goals.len())
    }

    fn done_by(&self, who: Completer) -> impl Iterator<Item = usize> + '_ {
        self.final_status
            .iter()
            .zip(&self.final_completer)
            .enumerate()
            .filter(move |(_, (s, c))| **s == GoalStatus::Done && **c == Some(who))
            .map(|(i, _)| i)
    }

    /// (goals the helper finished, of which necessary)
    pub fn helper_goals(&self) -> (usize, usize) {
        let idx: Vec<usize> = self.done_by(Completer::Helper).collect();
        let nec = idx.iter().filter(|i| self.necessary[**i]).count();
        (idx.len(), nec)
    }

    pub fn main_goals(&self) -> usize {
        self.done_by(Completer::Main).count()
    }

    /// Structural consistency of the log.
    pub fn check(&self) -> Result<(), String> {
        let n = self.goals.len();
        if self.necessary.len() != n || self.final_status.len() != n || self.final_completer.len() != n {
            return Err("goal vectors differ in length".into());
        }
        let complete = self.final_status.iter().all(|s| *s == GoalStatus::Done);
        if complete != self.success {
            return Err("success flag disagrees with goal status".into());
        }
        if self.length as usize != self.steps.len() {
            return Err("length disagrees with step count".into());
        }
        if self.helped > self.need_help {
            return Err("helped exceeds need-help count".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EpisodeMetrics<S: Scalar> {
    pub scenario_id: String,
    pub success: bool,
    pub gs: S,
    pub hn: S,
    pub length: u32,
    pub oracle_steps: u32,
    pub spl: S,
    pub reward: S,
    pub need_help: u32,
    pub helped: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MetricsReport<S: Scalar> {
    pub episodes: usize,
    pub sr: S,
    pub gsr: S,
    pub hn: S,
    /// Undefined when no episode needed help.
    pub hr: Option<S>,
    pub el: S,
    pub spl: S,
    /// Only for reward-aware policies.
    pub avg_reward: Option<S>,
    /// Mean helper return regardless of policy type.
    pub mean_return: S,
    pub need_help: u32,
    pub helped: u32,
    pub per_episode: Vec<EpisodeMetrics<S>>,
}

pub const TABLE_HEADER: &str = "SR,GSR,HN,HR,Reward,EL,SPL";

impl<S: Scalar> MetricsReport<S> {
    /// One row in the column order of [`TABLE_HEADER`]; undefined cells as `/`.
    pub fn table_row(&self) -> String {
        let f = |x: S| format!("{:.3}", x.as_f64());
        let o = |x: Option<S>| x.map(f).unwrap_or_else(|| "/".into());
        format!(
            "{},{},{},{},{},{:.2},{}",
            f(self.sr),
            f(self.gsr),
            f(self.hn),
            o(self.hr),
            o(self.avg_reward),
            self.el.as_f64(),
            f(self.spl)
        )
    }
}

pub fn episode_metrics<S: Scalar>(log: &EpisodeLog<S>) -> Result<EpisodeMetrics<S>> {
    if log.oracle_steps == 0 {
        return Err(Error::Metrics(format!("{}: oracle steps must be positive", log.scenario_id)));
    }
    let r = if log.success { S::one() } else { S::zero() };
    let (nh, nec) = log.helper_goals();
    let hn = if nh == 0 {
        S::zero()
    } else {
        r * S::from_count(nec) / S::from_count(nh)
    };
    let d = S::from_count(log.oracle_steps as usize);
    let l = S::from_count(log.length as usize);
    Ok(EpisodeMetrics {
        scenario_id: log.scenario_id.clone(),
        success: log.success,
        gs: log.goal_success(),
        hn,
        length: log.length,
        oracle_steps: log.oracle_steps,
        spl: r * d / d.max(l),
        reward: log.total_reward(),
        need_help: log.need_help,
        helped: log.helped,
    })
}

pub fn compute_metrics<S: Scalar>(logs: &[EpisodeLog<S>]) -> Result<MetricsReport<S>> {
    if logs.is_empty() {
        return Err(Error::Metrics("no episodes".into()));
    }
    let per: Vec<EpisodeMetrics<S>> = logs.iter().map(episode_metrics).collect::<Result<_>>()?;
    let n = S::from_count(per.len());
    let mean = |f: &dyn Fn(&EpisodeMetrics<S>) -> S| per.iter().map(f).sum::<S>() / n;
    let need_help: u32 = per.iter().map(|e| e.need_help).sum();
    let helped: u32 = per.iter().map(|e| e.helped).sum();
    let mean_return = mean(&|e| e.reward);
    Ok(MetricsReport {
        episodes: per.len(),
        sr: mean(&|e| if e.success { S::one() } else { S::zero() }),
        gsr: mean(&|e| e.gs),
        hn: mean(&|e| e.hn),
        hr: (need_help > 0).then(|| S::from_count(helped as usize) / S::from_count(need_help as usize)),
        el: mean(&|e| S::from_count(e.length as usize)),
        spl: mean(&|e| e.spl),
        avg_reward: logs.iter().all(|l| l.reward_aware).then_some(mean_return),
        mean_return,
        need_help,
        helped,
        per_episode: per,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSteps {
    pub steps: u32,
    /// Search exhausted its node budget; `steps` is a lower bound.
    pub bounded: bool,
}

/// Actions that can matter for a plan's goals, plus Wait.
fn relevant_actions(plan: &TaskPlan, scene: &WorldState, catalog: &Catalog) -> Vec<IntentionalAction> {
    let mut types: HashSet<usize> = HashSet::new();
    for g in &plan.goals {
        types.extend(g.object);
        types.extend(g.receptacle);
    }
    if let Some(d) = crate::planner::drop_spot(scene, catalog) {
        types.insert(d);
    }
    for o in &scene.objects {
        if plan.goals.iter().any(|g| g.object == Some(o.type_id)) {
            if let Some(p) = o.parent {
                types.insert(scene.objects[p].type_id);
            }
        }
    }
    enumerate_actions(catalog)
        .into_iter()
        .filter(|a| a.predicate == Predicate::Wait || a.arg.map(|t| types.contains(&t)).unwrap_or(false))
        .collect()
}

fn state_key(s: &WorldState, p: &TaskPlan) -> Vec<u32> {
    let mut k = Vec::with_capacity(s.objects.len() * 2 + p.status.len() + 8);
    for o in &s.objects {
        let bits = u32::from(o.picked_up) | u32::from(o.open) << 1 | u32::from(o.toggled_on) << 2;
        k.push(bits);
        k.push(o.parent.map(|x| x as u32 + 1).unwrap_or(0));
    }
    for a in &s.agents {
        k.push(a.held.map(|x| x as u32 + 1).unwrap_or(0));
        k.push(a.cell.x as u32);
        k.push(a.cell.y as u32);
    }
    for (st, f) in p.status.iter().zip(&p.flipped_by) {
        k.push(*st as u32);
        k.push(f.map(|c| c as u32 + 1).unwrap_or(0));
    }
    k
}

/// Fewest global steps in which the two agents together, both fully informed
/// and the helper at full capability, can finish the task. Breadth-first over
/// joint actions, with states deduplicated.
pub fn oracle_steps(scene: &WorldState, plan: &TaskPlan, catalog: &Catalog, node_budget: usize) -> OracleSteps {
    let lower = plan.status.iter().filter(|s| **s != GoalStatus::Done).count() as u32;
    if plan.is_complete() {
        return OracleSteps { steps: 0, bounded: false };
    }
    let mut start = scene.clone();
    start.agents[1].capability = Capability::FULL;
    let acts = relevant_actions(plan, &start, catalog);
    let mut seen = HashSet::new();
    seen.insert(state_key(&start, plan));
    let mut queue = VecDeque::from([(start, plan.clone(), 0u32)]);
    while let Some((s, p, depth)) = queue.pop_front() {
        if s.step >= s.max_steps {
            continue;
        }
        for m in &acts {
            for h in &acts {
                let mut ns = s.clone();
                let mut np = p.clone();
                joint_step(&mut ns, &mut np, *m, Move::Act(*h));
                if np.is_complete() {
                    return OracleSteps {
                        steps: depth + 1,
                        bounded: false,
                    };
                }
                if seen.insert(state_key(&ns, &np)) {
                    if seen.len() > node_budget {
                        return OracleSteps {
                            steps: lower.max(depth + 1),
                            bounded: true,
                        };
                    }
                    queue.push_back((ns, np, depth + 1));
                }
            }
        }
    }
    OracleSteps {
        steps: lower.max(1),
        bounded: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::{parse_task, TargetState};
    use crate::world::fixtures::kitchen_room;

    pub(crate) fn log(goals: usize, status: &[(bool, Option<Completer>, bool)], length: u32, d: u32) -> EpisodeLog<f64> {
        assert_eq!(goals, status.len());
        let success = status.iter().all(|s| s.0);
        EpisodeLog {
            scenario_id: "x".into(),
            scene_seed: 0,
            episode_seed: 0,
            task: TaskKind::MakeCoffee,
            capability_type: CapabilityType::Full,
            capability: Capability::FULL,
            policy: "test".into(),
            lambda_e: 1.0,
            reward_aware: false,
            goals: vec![Goal::WAIT; goals],
            necessary: status.iter().map(|s| s.2).collect(),
            final_status: status
                .iter()
                .map(|s| if s.0 { GoalStatus::Done } else { GoalStatus::Pending })
                .collect(),
            final_completer: status.iter().map(|s| s.1).collect(),
            steps: vec![],
            success,
            length,
            oracle_steps: d,
            oracle_bounded: false,
            need_help: 0,
            helped: 0,
        }
    }

    const M: Option<Completer> = Some(Completer::Main);
    const H: Option<Completer> = Some(Completer::Helper);

    #[test]
    fn formula_examples() {
        let e = episode_metrics(&log(1, &[(true, M, false)], 20, 10)).unwrap();
        assert_eq!((e.success, e.spl, e.length), (true, 0.5, 20));
        let e = episode_metrics(&log(4, &[(true, M, false), (true, M, false), (true, H, false), (false, None, false)], 30, 4)).unwrap();
        assert_eq!((e.gs, e.hn, e.spl), (0.75, 0.0, 0.0));
        let e = episode_metrics(&log(3, &[(true, H, true), (true, H, false), (true, M, false)], 8, 3)).unwrap();
        assert_eq!(e.hn, 0.5);
    }

    #[test]
    fn empty_set_and_zero_oracle_rejected() {
        assert!(compute_metrics::<f64>(&[]).is_err());
        assert!(compute_metrics(&[log(1, &[(true, M, false)], 3, 0)]).is_err());
    }

    #[test]
    fn hr_and_table_row() {
        let mut a = log(2, &[(true, H, true), (true, M, false)], 5, 2);
        a.need_help = 1;
        a.helped = 1;
        let mut b = log(2, &[(false, None, true), (false, None, false)], 30, 2);
        b.need_help = 1;
        let r = compute_metrics(&[a, b]).unwrap();
        assert_eq!(r.hr, Some(0.5));
        assert_eq!(r.avg_reward, None);
        assert!(r.table_row().contains(",/,"));
        let none = compute_metrics(&[log(1, &[(true, M, false)], 3, 1)]).unwrap();
        assert_eq!(none.hr, None);
    }

    #[test]
    fn oracle_lengths() {
        let c = Catalog::kitchen();
        let s = kitchen_room(&c);
        let plan = parse_task(TaskKind::MakeCoffee, &s, &c).unwrap();
        assert_eq!(oracle_steps(&s, &plan, &c, 200_000), OracleSteps { steps: 4, bounded: false });

        let mut pre = s.clone();
        let mug = pre.instances(c.id("Mug").unwrap()).next().unwrap().id;
        let cm = pre.instances(c.id("CoffeeMachine").unwrap()).next().unwrap().id;
        pre.objects[mug].parent = Some(cm);
        let plan = parse_task(TaskKind::MakeCoffee, &pre, &c).unwrap();
        assert_eq!(oracle_steps(&pre, &plan, &c, 200_000).steps, 2);

        let mut g = s.clone();
        g.agents[0].capability.gamma = 0.0;
        let plan = parse_task(TaskKind::ArrangeRoom, &g, &c).unwrap();
        assert_eq!(plan.goals[1].target, TargetState::KeepOpen);
        assert_eq!(oracle_steps(&g, &plan, &c, 200_000).steps, 4);
    }
}
