//! Tasks, goals, ordered goal tracking with maintenance, and capability
//! requirements of goals.

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, TypeId};
use crate::error::{Error, Result};
use crate::world::{AgentId, Capability, IntentionalAction, Predicate, WorldState, ABILITY_THRESHOLD};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TargetState {
    Wait,
    Get,
    On,
    In,
    KeepOpen,
    KeepClose,
    KeepOn,
    KeepOff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Goal {
    pub target: TargetState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<TypeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receptacle: Option<TypeId>,
}

impl Goal {
    pub const WAIT: Goal = Goal {
        target: TargetState::Wait,
        object: None,
        receptacle: None,
    };

    pub fn get(object: TypeId) -> Self {
        Goal {
            target: TargetState::Get,
            object: Some(object),
            receptacle: None,
        }
    }

    pub fn put_in(object: TypeId, receptacle: TypeId) -> Self {
        Goal {
            target: TargetState::In,
            object: Some(object),
            receptacle: Some(receptacle),
        }
    }

    pub fn keep(target: TargetState, object: TypeId) -> Self {
        Goal {
            target,
            object: Some(object),
            receptacle: None,
        }
    }

    pub fn is_well_formed(&self) -> bool {
        match self.target {
            TargetState::Wait => self.object.is_none() && self.receptacle.is_none(),
            TargetState::In | TargetState::On => self.object.is_some() && self.receptacle.is_some(),
            _ => self.object.is_some() && self.receptacle.is_none(),
        }
    }

    pub fn is_keep(&self) -> bool {
        matches!(
            self.target,
            TargetState::KeepOpen | TargetState::KeepClose | TargetState::KeepOn | TargetState::KeepOff
        )
    }

    /// Keep goals on the same object with opposite polarity.
    pub fn conflicts_with(&self, other: &Goal) -> bool {
        use TargetState::*;
        self.object == other.object
            && matches!(
                (self.target, other.target),
                (KeepOpen, KeepClose) | (KeepClose, KeepOpen) | (KeepOn, KeepOff) | (KeepOff, KeepOn)
            )
    }

    /// The single action whose success establishes this goal.
    pub fn completing_action(&self) -> Option<IntentionalAction> {
        let a = |p| self.object.map(|o| IntentionalAction::new(p, o));
        match self.target {
            TargetState::Wait => None,
            TargetState::Get => a(Predicate::PickUp),
            TargetState::In | TargetState::On => self.receptacle.map(|r| IntentionalAction::new(Predicate::Put, r)),
            TargetState::KeepOpen => a(Predicate::Open),
            TargetState::KeepClose => a(Predicate::Close),
            TargetState::KeepOn => a(Predicate::ToggleOn),
            TargetState::KeepOff => a(Predicate::ToggleOff),
        }
    }

    pub fn describe(&self, catalog: &Catalog) -> String {
        let n = |t: Option<TypeId>| t.map(|t| catalog.name(t).to_string());
        match (n(self.object), n(self.receptacle)) {
            (Some(o), Some(r)) => format!("({:?}, {o}, {r})", self.target),
            (Some(o), None) => format!("({:?}, {o})", self.target),
            _ => format!("({:?})", self.target),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKind {
    MakeBreakfast,
    ArrangeRoom,
    MakeCoffee,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::MakeBreakfast, TaskKind::ArrangeRoom, TaskKind::MakeCoffee];

    pub fn label(self) -> &'static str {
        match self {
            TaskKind::MakeBreakfast => "make-breakfast",
            TaskKind::ArrangeRoom => "arrange-room",
            TaskKind::MakeCoffee => "make-coffee",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.label().eq_ignore_ascii_case(s) || format!("{t:?}").eq_ignore_ascii_case(s))
    }

    /// Full goal list before scene-conditional pruning.
    pub fn template(self, catalog: &Catalog) -> Result<Vec<Goal>> {
        let id = |n: &str| {
            catalog
                .id(n)
                .ok_or_else(|| Error::TaskParse(format!("catalog has no `{n}`")))
        };
        use TargetState::*;
        Ok(match self {
            TaskKind::MakeBreakfast => {
                let (p, m) = (id("Potato")?, id("Microwave")?);
                vec![
                    Goal::get(p),
                    Goal::keep(KeepOff, m),
                    Goal::keep(KeepOpen, m),
                    Goal::put_in(p, m),
                    Goal::keep(KeepClose, m),
                    Goal::keep(KeepOn, m),
                    Goal::keep(KeepOff, m),
                ]
            }
            TaskKind::ArrangeRoom => {
                let (p, f) = (id("Potato")?, id("Fridge")?);
                vec![
                    Goal::get(p),
                    Goal::keep(KeepOpen, f),
                    Goal::put_in(p, f),
                    Goal::keep(KeepClose, f),
                ]
            }
            TaskKind::MakeCoffee => {
                let (m, c) = (id("Mug")?, id("CoffeeMachine")?);
                vec![
                    Goal::get(m),
                    Goal::put_in(m, c),
                    Goal::keep(KeepOn, c),
                    Goal::keep(KeepOff, c),
                ]
            }
        })
    }
}

pub fn goal_satisfied(goal: &Goal, state: &WorldState) -> bool {
    let Some(obj) = goal.object else {
        return true;
    };
    let mut inst = state.instances(obj).peekable();
    if inst.peek().is_none() {
        return false;
    }
    match goal.target {
        TargetState::Wait => true,
        TargetState::Get => state
            .agents
            .iter()
            .any(|a| a.held.map(|h| state.objects[h].type_id) == Some(obj)),
        TargetState::In | TargetState::On => inst.any(|o| {
            o.parent.map(|p| state.objects[p].type_id) == goal.receptacle && goal.receptacle.is_some()
        }),
        TargetState::KeepOpen => inst.any(|o| o.open),
        TargetState::KeepClose => inst.all(|o| !o.open),
        TargetState::KeepOn => inst.any(|o| o.toggled_on),
        TargetState::KeepOff => inst.all(|o| !o.toggled_on),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GoalStatus {
    Pending,
    Done,
    /// Was done, its maintained condition broke; pending again.
    Regressed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Completer {
    Main,
    Helper,
    PreSatisfied,
}

impl From<AgentId> for Completer {
    fn from(a: AgentId) -> Self {
        match a {
            AgentId::Main => Completer::Main,
            AgentId::Helper => Completer::Helper,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdvanceEvent {
    pub completed: Option<(usize, Completer)>,
    pub regressed: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskPlan {
    pub task: TaskKind,
    pub goals: Vec<Goal>,
    pub status: Vec<GoalStatus>,
    pub completer: Vec<Option<Completer>>,
    /// Agent whose action last turned each goal's predicate from false to true.
    pub flipped_by: Vec<Option<Completer>>,
}

/// Parse a task into its ordered goal list for a scene.
///
/// A goal already true in the scene is dropped unless an earlier kept goal
/// reverses it. A satisfied placement goal also drops every goal kept before
/// it (the steps that only served to enable it).
pub fn parse_task(task: TaskKind, scene: &WorldState, catalog: &Catalog) -> Result<TaskPlan> {
    let template = task.template(catalog)?;
    for g in &template {
        for t in [g.object, g.receptacle].into_iter().flatten() {
            if !scene.has_type(t) {
                return Err(Error::TaskParse(format!(
                    "{task:?}: scene has no `{}`",
                    catalog.name(t)
                )));
            }
        }
    }
    let mut kept: Vec<Goal> = Vec::new();
    for g in template {
        if !goal_satisfied(&g, scene) {
            kept.push(g);
            continue;
        }
        match g.target {
            TargetState::In | TargetState::On => kept.clear(),
            _ if kept.iter().any(|k| k.conflicts_with(&g)) => kept.push(g),
            _ => {}
        }
    }
    Ok(TaskPlan::new(task, kept))
}

impl TaskPlan {
    pub fn new(task: TaskKind, goals: Vec<Goal>) -> Self {
        let n = goals.len();
        TaskPlan {
            task,
            goals,
            status: vec![GoalStatus::Pending; n],
            completer: vec![None; n],
            flipped_by: vec![None; n],
        }
    }

    pub fn current_index(&self) -> Option<usize> {
        self.status.iter().position(|s| *s != GoalStatus::Done)
    }

    /// First goal not yet done, or `Wait` when the task is complete.
    pub fn current_goal(&self) -> Goal {
        self.current_index().map(|i| self.goals[i]).unwrap_or(Goal::WAIT)
    }

    /// The goal being worked on once the plan catches up with `state`: the
    /// first pending goal whose predicate does not already hold. `Wait` when
    /// that goal would undo one of the satisfied goals before it, which the
    /// plan has not recorded yet.
    pub fn next_unsatisfied(&self, state: &WorldState) -> Goal {
        let Some(c) = self.current_index() else {
            return Goal::WAIT;
        };
        for (i, g) in self.goals.iter().enumerate().skip(c) {
            if !goal_satisfied(g, state) {
                let blocked = self.goals[c..i].iter().any(|s| g.conflicts_with(s));
                return if blocked { Goal::WAIT } else { *g };
            }
        }
        Goal::WAIT
    }

    pub fn is_complete(&self) -> bool {
        self.status.iter().all(|s| *s == GoalStatus::Done)
    }

    pub fn done_count(&self) -> usize {
        self.status.iter().filter(|s| **s == GoalStatus::Done).count()
    }

    pub fn done_by(&self, who: Completer) -> usize {
        self.status
            .iter()
            .zip(&self.completer)
            .filter(|(s, c)| **s == GoalStatus::Done && **c == Some(who))
            .count()
    }

    /// Note which agent's action made goal predicates true.
    pub fn record_transition(&mut self, before: &WorldState, after: &WorldState, actor: AgentId) {
        for (i, g) in self.goals.iter().enumerate() {
            if !goal_satisfied(g, before) && goal_satisfied(g, after) {
                self.flipped_by[i] = Some(actor.into());
            }
        }
    }

    /// One bookkeeping pass: regress the maintained goal if its condition
    /// broke, otherwise complete the current goal if it holds. At most one
    /// goal changes status per call. The maintained goal is the done Keep
    /// goal right before the current one.
    pub fn advance(&mut self, state: &WorldState) -> AdvanceEvent {
        let mut ev = AdvanceEvent::default();
        let cur = self.current_index();
        let maintained = match cur {
            Some(0) => None,
            Some(c) => Some(c - 1),
            None => None,
        };
        if let Some(m) = maintained {
            let c = m + 1;
            // a Keep goal is maintained until the goal after it holds
            let handover = goal_satisfied(&self.goals[c], state);
            if self.goals[m].is_keep() && !handover && !goal_satisfied(&self.goals[m], state) {
                self.status[m] = GoalStatus::Regressed;
                self.completer[m] = None;
                ev.regressed = Some(m);
                return ev;
            }
        }
        if let Some(c) = cur {
            if goal_satisfied(&self.goals[c], state) {
                let who = self.flipped_by[c].unwrap_or(Completer::PreSatisfied);
                self.status[c] = GoalStatus::Done;
                self.completer[c] = Some(who);
                ev.completed = Some((c, who));
            }
        }
        ev
    }
}

/// Capability needed to complete a goal alone.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Requirement {
    /// (height, weight) of each instance that could be picked up; the goal
    /// needs alpha >= height and beta >= weight for at least one of them.
    pub pickup: Vec<(f64, f64)>,
    /// Ability predicate that must clear the threshold.
    pub ability: Option<Predicate>,
}

impl Requirement {
    pub fn is_empty(&self) -> bool {
        self.pickup.is_empty() && self.ability.is_none()
    }

    pub fn satisfied_by(&self, cap: &Capability) -> bool {
        let pick = self.pickup.is_empty()
            || self
                .pickup
                .iter()
                .any(|(h, w)| *h <= cap.alpha && *w <= cap.beta);
        let ab = match self.ability {
            None => true,
            Some(Predicate::Open) => cap.gamma >= ABILITY_THRESHOLD,
            Some(Predicate::Close) => cap.delta >= ABILITY_THRESHOLD,
            Some(Predicate::ToggleOn) => cap.epsilon >= ABILITY_THRESHOLD,
            Some(Predicate::ToggleOff) => cap.zeta >= ABILITY_THRESHOLD,
            Some(_) => true,
        };
        pick && ab
    }

    /// Lowest alpha/beta over the pickup options, for display.
    pub fn min_alpha_beta(&self) -> Option<(f64, f64)> {
        self.pickup
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
    }
}

/// Placement goals inherit the pickup requirement of their object: finishing
/// them alone means holding the object first.
pub fn required_capability(goal: &Goal, scene: &WorldState) -> Requirement {
    let pickup = |t: TypeId| {
        scene
            .instances(t)
            .map(|o| (o.height, o.weight))
            .collect::<Vec<_>>()
    };
    match (goal.target, goal.object) {
        (TargetState::Get | TargetState::In | TargetState::On, Some(o)) => Requirement {
            pickup: pickup(o),
            ability: None,
        },
        (TargetState::KeepOpen, Some(_)) => Requirement {
            pickup: vec![],
            ability: Some(Predicate::Open),
        },
        (TargetState::KeepClose, Some(_)) => Requirement {
            pickup: vec![],
            ability: Some(Predicate::Close),
        },
        (TargetState::KeepOn, Some(_)) => Requirement {
            pickup: vec![],
            ability: Some(Predicate::ToggleOn),
        },
        (TargetState::KeepOff, Some(_)) => Requirement {
            pickup: vec![],
            ability: Some(Predicate::ToggleOff),
        },
        _ => Requirement::default(),
    }
}

pub fn is_necessary(goal: &Goal, cap: &Capability, scene: &WorldState) -> bool {
    !required_capability(goal, scene).satisfied_by(cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::fixtures::kitchen_room;
    use crate::world::{apply_action, Predicate};
    use TargetState::*;

    fn setup() -> (Catalog, WorldState) {
        let c = Catalog::kitchen();
        let s = kitchen_room(&c);
        (c, s)
    }

    fn id(c: &Catalog, n: &str) -> TypeId {
        c.id(n).unwrap()
    }

    #[test]
    fn parse_default_plans() {
        let (c, s) = setup();
        let mc = parse_task(TaskKind::MakeCoffee, &s, &c).unwrap();
        let (mug, cm) = (id(&c, "Mug"), id(&c, "CoffeeMachine"));
        assert_eq!(
            mc.goals,
            vec![Goal::get(mug), Goal::put_in(mug, cm), Goal::keep(KeepOn, cm), Goal::keep(KeepOff, cm)]
        );
        let ar = parse_task(TaskKind::ArrangeRoom, &s, &c).unwrap();
        assert_eq!(ar.goals.len(), 4);
        // microwave starts off: the leading KeepOff is already true
        let mb = parse_task(TaskKind::MakeBreakfast, &s, &c).unwrap();
        assert_eq!(mb.goals.len(), 6);
        assert_eq!(mb.goals[0], Goal::get(id(&c, "Potato")));
        assert_eq!(mb.goals[5], Goal::keep(KeepOff, id(&c, "Microwave")));
    }

    #[test]
    fn parse_breakfast_with_microwave_running() {
        let (c, mut s) = setup();
        let m = s.instances(id(&c, "Microwave")).next().unwrap().id;
        s.objects[m].toggled_on = true;
        let mb = parse_task(TaskKind::MakeBreakfast, &s, &c).unwrap();
        assert_eq!(mb.goals.len(), 7);
    }

    #[test]
    fn parse_drops_presatisfied() {
        let (c, mut s) = setup();
        let mug = s.instances(id(&c, "Mug")).next().unwrap().id;
        let cm = s.instances(id(&c, "CoffeeMachine")).next().unwrap().id;
        s.objects[mug].parent = Some(cm);
        let mc = parse_task(TaskKind::MakeCoffee, &s, &c).unwrap();
        let cmt = id(&c, "CoffeeMachine");
        assert_eq!(mc.goals, vec![Goal::keep(KeepOn, cmt), Goal::keep(KeepOff, cmt)]);

        let (c, mut s) = setup();
        let f = s.instances(id(&c, "Fridge")).next().unwrap().id;
        s.objects[f].open = true;
        let ar = parse_task(TaskKind::ArrangeRoom, &s, &c).unwrap();
        let (p, ft) = (id(&c, "Potato"), id(&c, "Fridge"));
        assert_eq!(ar.goals, vec![Goal::get(p), Goal::put_in(p, ft), Goal::keep(KeepClose, ft)]);
    }

    #[test]
    fn parse_missing_type_errors() {
        let (c, mut s) = setup();
        let f = id(&c, "Fridge");
        s.objects.retain(|o| o.type_id != f);
        for (i, o) in s.objects.iter_mut().enumerate() {
            o.id = i;
        }
        assert!(matches!(
            parse_task(TaskKind::ArrangeRoom, &s, &c),
            Err(Error::TaskParse(_))
        ));
    }

    #[test]
    fn satisfaction_predicates() {
        let (c, s) = setup();
        let (s, _) = apply_action(&s, AgentId::Helper, IntentionalAction::new(Predicate::PickUp, id(&c, "Potato")));
        assert!(goal_satisfied(&Goal::get(id(&c, "Potato")), &s));
        assert!(!goal_satisfied(&Goal::put_in(id(&c, "Potato"), id(&c, "Fridge")), &s));
        let mut s2 = s.clone();
        let m = s2.instances(id(&c, "Microwave")).next().unwrap().id;
        s2.objects[m].toggled_on = true;
        assert!(goal_satisfied(&Goal::keep(KeepOn, id(&c, "Microwave")), &s2));
        assert!(goal_satisfied(&Goal::WAIT, &s2));
    }

    #[test]
    fn keep_goal_regresses() {
        let (c, s) = setup();
        let (p, f) = (id(&c, "Potato"), id(&c, "Fridge"));
        let mut plan = TaskPlan::new(
            TaskKind::ArrangeRoom,
            vec![Goal::get(p), Goal::keep(KeepOpen, f), Goal::put_in(p, f), Goal::keep(KeepClose, f)],
        );
        let step = |plan: &mut TaskPlan, s: &WorldState, who: AgentId, p: Predicate, t: TypeId| {
            let (n, _) = apply_action(s, who, IntentionalAction::new(p, t));
            plan.record_transition(s, &n, who);
            plan.advance(&n);
            n
        };
        let s = step(&mut plan, &s, AgentId::Main, Predicate::PickUp, p);
        let s = step(&mut plan, &s, AgentId::Helper, Predicate::Open, f);
        assert_eq!(plan.status[1], GoalStatus::Done);
        assert_eq!(plan.completer[1], Some(Completer::Helper));
        let before = plan.clone();
        assert_eq!(plan.advance(&s), AdvanceEvent::default());
        assert_eq!(plan, before);
        let s = step(&mut plan, &s, AgentId::Helper, Predicate::Close, f);
        assert_eq!(plan.status[1], GoalStatus::Regressed);
        assert!(!goal_satisfied(&plan.goals[1], &s));
        assert_eq!(plan.current_index(), Some(1));
        let s = step(&mut plan, &s, AgentId::Main, Predicate::Open, f);
        let s = step(&mut plan, &s, AgentId::Main, Predicate::Put, f);
        let _ = step(&mut plan, &s, AgentId::Main, Predicate::Close, f);
        assert!(plan.is_complete());
        assert_eq!(plan.done_by(Completer::Main), 4);
    }

    #[test]
    fn requirements_and_necessity() {
        let (c, mut s) = setup();
        let cup = s.instances(id(&c, "Cup")).next().unwrap().id;
        s.objects[cup].height = 0.3;
        let req = required_capability(&Goal::get(id(&c, "Cup")), &s);
        assert_eq!(req.min_alpha_beta(), Some((0.3, 1.0)));
        assert_eq!(
            required_capability(&Goal::keep(KeepOpen, id(&c, "Fridge")), &s).ability,
            Some(Predicate::Open)
        );
        assert!(required_capability(&Goal::WAIT, &s).is_empty());

        let mut cap = Capability::FULL;
        cap.beta = 0.7;
        assert!(is_necessary(&Goal::get(id(&c, "Cup")), &cap, &s));
        let fridge_open = Goal::keep(KeepOpen, id(&c, "Fridge"));
        let mut cap = Capability::FULL;
        cap.gamma = 0.49;
        assert!(is_necessary(&fridge_open, &cap, &s));
        cap.gamma = 0.5;
        assert!(!is_necessary(&fridge_open, &cap, &s));
        for t in TaskKind::ALL {
            for g in parse_task(t, &s, &c).unwrap().goals {
                assert!(!is_necessary(&g, &Capability::FULL, &s));
            }
        }
    }
}
