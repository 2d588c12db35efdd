//! Symbolic world state, the capability-gated transition function and the
//! partial observation function.

use serde::{Deserialize, Serialize};

use crate::catalog::{Affordances, Catalog, TypeId};
use crate::planner;

pub type ObjectId = usize;

/// Success threshold for the Open/Close/ToggleOn/ToggleOff abilities.
pub const ABILITY_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn dist(self, other: Cell) -> f64 {
        let dx = f64::from(self.x - other.x);
        let dy = f64::from(self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }

    /// Chebyshev adjacency (8-neighbourhood), excluding the cell itself.
    pub fn touches(self, other: Cell) -> bool {
        self != other && (self.x - other.x).abs() <= 1 && (self.y - other.y).abs() <= 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Capability {
    /// Maximum reachable height.
    pub alpha: f64,
    /// Maximum liftable weight.
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub zeta: f64,
}

impl Capability {
    pub const FULL: Capability = Capability {
        alpha: 1.0,
        beta: 1.0,
        gamma: 1.0,
        delta: 1.0,
        epsilon: 1.0,
        zeta: 1.0,
    };

    pub fn from_array(a: [f64; 6]) -> Self {
        Capability {
            alpha: a[0],
            beta: a[1],
            gamma: a[2],
            delta: a[3],
            epsilon: a[4],
            zeta: a[5],
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.alpha, self.beta, self.gamma, self.delta, self.epsilon, self.zeta]
    }

    pub fn is_valid(self) -> bool {
        self.to_array().iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// Componentwise `self >= other`.
    pub fn dominates(self, other: Capability) -> bool {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .all(|(a, b)| *a >= b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgentId {
    Main,
    Helper,
}

impl AgentId {
    pub fn index(self) -> usize {
        match self {
            AgentId::Main => 0,
            AgentId::Helper => 1,
        }
    }

    pub fn other(self) -> AgentId {
        match self {
            AgentId::Main => AgentId::Helper,
            AgentId::Helper => AgentId::Main,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Predicate {
    Wait,
    PickUp,
    Put,
    ToggleOn,
    ToggleOff,
    Open,
    Close,
}

impl Predicate {
    pub const ALL: [Predicate; 7] = [
        Predicate::Wait,
        Predicate::PickUp,
        Predicate::Put,
        Predicate::ToggleOn,
        Predicate::ToggleOff,
        Predicate::Open,
        Predicate::Close,
    ];

    /// Whether a type with these affordances is a valid argument.
    pub fn accepts(self, a: &Affordances) -> bool {
        match self {
            Predicate::Wait => false,
            Predicate::PickUp => a.pickupable,
            Predicate::Put => a.receptacle,
            Predicate::ToggleOn | Predicate::ToggleOff => a.toggleable,
            Predicate::Open | Predicate::Close => a.openable,
        }
    }
}

/// An intentional action: a predicate applied to an object type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntentionalAction {
    pub predicate: Predicate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arg: Option<TypeId>,
}

impl IntentionalAction {
    pub const WAIT: IntentionalAction = IntentionalAction {
        predicate: Predicate::Wait,
        arg: None,
    };

    pub fn new(predicate: Predicate, arg: TypeId) -> Self {
        IntentionalAction {
            predicate,
            arg: Some(arg),
        }
    }

    pub fn is_wait(&self) -> bool {
        self.predicate == Predicate::Wait
    }

    pub fn describe(&self, catalog: &Catalog) -> String {
        match self.arg {
            Some(t) if t < catalog.len() => format!("({:?}, {})", self.predicate, catalog.name(t)),
            Some(t) => format!("({:?}, #{t})", self.predicate),
            None => format!("({:?})", self.predicate),
        }
    }
}

/// Why an action did not succeed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    Ok,
    AffordanceMismatch,
    MissingType,
    EmptyHand,
    AlreadyHolding,
    NotAvailable,
    ClosedReceptacle,
    ActiveAppliance,
    AlreadyOpen,
    AlreadyClosed,
    AlreadyOn,
    AlreadyOff,
    MustCloseFirst,
    Capability,
    Unreachable,
    HorizonReached,
}

impl Reason {
    /// Failures caused by the action or the state, not by the agent.
    pub fn is_illegal(self) -> bool {
        !matches!(
            self,
            Reason::Ok | Reason::Capability | Reason::Unreachable | Reason::HorizonReached
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            Reason::Ok => "ok",
            Reason::AffordanceMismatch => "affordance",
            Reason::MissingType => "missing-type",
            Reason::EmptyHand => "empty-hand",
            Reason::AlreadyHolding => "already-holding",
            Reason::NotAvailable => "not-available",
            Reason::ClosedReceptacle => "closed-receptacle",
            Reason::ActiveAppliance => "active-appliance",
            Reason::AlreadyOpen => "already-open",
            Reason::AlreadyClosed => "already-closed",
            Reason::AlreadyOn => "already-on",
            Reason::AlreadyOff => "already-off",
            Reason::MustCloseFirst => "must-close-first",
            Reason::Capability => "capability",
            Reason::Unreachable => "unreachable",
            Reason::HorizonReached => "horizon",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub id: ObjectId,
    pub type_id: TypeId,
    pub cell: Cell,
    pub weight: f64,
    pub height: f64,
    pub picked_up: bool,
    pub open: bool,
    pub toggled_on: bool,
    pub cooked: bool,
    pub visible_to: [bool; 2],
    pub parent: Option<ObjectId>,
    pub affordances: Affordances,
    pub solid: bool,
}

impl ObjectState {
    /// Position as (x, y, height).
    pub fn position(&self) -> [f64; 3] {
        [f64::from(self.cell.x), f64::from(self.cell.y), self.height]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    pub capability: Capability,
    pub cell: Cell,
    /// Yaw in degrees.
    pub yaw: f64,
    pub held: Option<ObjectId>,
    pub last_action: IntentionalAction,
    pub last_success: bool,
    pub last_reason: Reason,
    /// Cells walked in grid navigation mode.
    #[serde(default)]
    pub travelled: u32,
}

impl AgentState {
    pub fn new(id: AgentId, cell: Cell) -> Self {
        AgentState {
            id,
            capability: Capability::FULL,
            cell,
            yaw: 0.0,
            held: None,
            last_action: IntentionalAction::WAIT,
            last_success: true,
            last_reason: Reason::Ok,
            travelled: 0,
        }
    }

    pub fn position(&self) -> [f64; 3] {
        [f64::from(self.cell.x), f64::from(self.cell.y), 0.0]
    }

    pub fn rotation(&self) -> [f64; 3] {
        [0.0, self.yaw, 0.0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Visibility {
    /// Objects farther than this are not perceived.
    pub object_radius: f64,
    /// The other agent is perceived within this distance.
    pub agent_radius: f64,
}

impl Default for Visibility {
    fn default() -> Self {
        Visibility {
            object_radius: 1.5,
            agent_radius: 4.0,
        }
    }
}

impl Visibility {
    pub fn full() -> Self {
        Visibility {
            object_radius: 1.0e6,
            agent_radius: 1.0e6,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NavMode {
    #[default]
    Teleport,
    Grid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub width: i32,
    pub height: i32,
    pub objects: Vec<ObjectState>,
    pub agents: [AgentState; 2],
    pub step: u32,
    pub max_steps: u32,
    pub visibility: Visibility,
    pub nav: NavMode,
}

/// Public part of an agent's state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentPublic {
    pub id: AgentId,
    pub position: [f64; 3],
    pub rotation: [f64; 3],
    pub held_object: Option<ObjectId>,
    pub held_type: Option<TypeId>,
    pub last_action: IntentionalAction,
    pub last_success: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub observer: AgentId,
    pub step: u32,
    pub objects: Vec<ObjectState>,
    /// Perceived agents; the observer itself is always present.
    pub agents: Vec<AgentPublic>,
    /// Why the observer's own last action failed; `Ok` if it did not.
    #[serde(default = "reason_ok")]
    pub own_reason: Reason,
}

fn reason_ok() -> Reason {
    Reason::Ok
}

impl Observation {
    pub fn agent(&self, id: AgentId) -> Option<&AgentPublic> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn object(&self, id: ObjectId) -> Option<&ObjectState> {
        self.objects.iter().find(|o| o.id == id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub success: bool,
    pub reason: Reason,
    pub target: Option<ObjectId>,
}

/// Whether an agent with `cap` succeeds at `action` on `target`.
pub fn can_perform(cap: &Capability, action: &IntentionalAction, target: &ObjectState) -> bool {
    match action.predicate {
        Predicate::PickUp => target.weight <= cap.beta && target.height <= cap.alpha,
        Predicate::Open => cap.gamma >= ABILITY_THRESHOLD,
        Predicate::Close => cap.delta >= ABILITY_THRESHOLD,
        Predicate::ToggleOn => cap.epsilon >= ABILITY_THRESHOLD,
        Predicate::ToggleOff => cap.zeta >= ABILITY_THRESHOLD,
        Predicate::Put | Predicate::Wait => true,
    }
}

/// All intentional actions over a catalog, predicate-major, type-minor.
pub fn enumerate_actions(catalog: &Catalog) -> Vec<IntentionalAction> {
    let mut out = vec![IntentionalAction::WAIT];
    for p in &Predicate::ALL[1..] {
        for (t, ty) in catalog.types.iter().enumerate() {
            if p.accepts(&ty.affordances) {
                out.push(IntentionalAction::new(*p, t));
            }
        }
    }
    out
}

impl WorldState {
    pub fn agent(&self, id: AgentId) -> &AgentState {
        &self.agents[id.index()]
    }

    pub fn agent_mut(&mut self, id: AgentId) -> &mut AgentState {
        &mut self.agents[id.index()]
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && c.x < self.width && c.y < self.height
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        self.objects.iter().any(|o| o.solid && o.cell == c)
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.is_blocked(c)
    }

    pub fn instances(&self, t: TypeId) -> impl Iterator<Item = &ObjectState> {
        self.objects.iter().filter(move |o| o.type_id == t)
    }

    pub fn has_type(&self, t: TypeId) -> bool {
        self.objects.iter().any(|o| o.type_id == t)
    }

    pub fn holder(&self, obj: ObjectId) -> Option<AgentId> {
        self.agents.iter().find(|a| a.held == Some(obj)).map(|a| a.id)
    }

    pub fn held_type(&self, agent: AgentId) -> Option<TypeId> {
        self.agent(agent).held.map(|o| self.objects[o].type_id)
    }

    /// Inside an openable receptacle that is currently closed.
    pub fn is_enclosed(&self, obj: &ObjectState) -> bool {
        obj.parent
            .map(|p| {
                let r = &self.objects[p];
                r.affordances.openable && !r.open
            })
            .unwrap_or(false)
    }

    fn object_visible_to(&self, obj: &ObjectState, agent: AgentId) -> bool {
        let a = self.agent(agent);
        obj.cell.dist(a.cell) <= self.visibility.object_radius && !self.is_enclosed(obj)
    }

    pub fn agent_visible_to(&self, target: AgentId, observer: AgentId) -> bool {
        target == observer
            || self.agent(target).cell.dist(self.agent(observer).cell) <= self.visibility.agent_radius
    }

    pub fn refresh_visibility(&mut self) {
        let flags: Vec<[bool; 2]> = self
            .objects
            .iter()
            .map(|o| {
                [
                    self.object_visible_to(o, AgentId::Main),
                    self.object_visible_to(o, AgentId::Helper),
                ]
            })
            .collect();
        for (o, f) in self.objects.iter_mut().zip(flags) {
            o.visible_to = f;
        }
    }

    /// Per-instance applicability of a legal-in-principle action.
    fn instance_reason(&self, action: &IntentionalAction, o: &ObjectState) -> Reason {
        match action.predicate {
            Predicate::Wait => Reason::Ok,
            Predicate::PickUp => {
                if o.picked_up {
                    Reason::NotAvailable
                } else if self.is_enclosed(o) {
                    Reason::ClosedReceptacle
                } else {
                    Reason::Ok
                }
            }
            Predicate::Put => {
                if o.affordances.openable && !o.open {
                    Reason::ClosedReceptacle
                } else {
                    Reason::Ok
                }
            }
            Predicate::Open => {
                if o.toggled_on {
                    Reason::ActiveAppliance
                } else if o.open {
                    Reason::AlreadyOpen
                } else {
                    Reason::Ok
                }
            }
            Predicate::Close => {
                if o.open {
                    Reason::Ok
                } else {
                    Reason::AlreadyClosed
                }
            }
            Predicate::ToggleOn => {
                if o.toggled_on {
                    Reason::AlreadyOn
                } else if o.affordances.openable && o.open {
                    Reason::MustCloseFirst
                } else {
                    Reason::Ok
                }
            }
            Predicate::ToggleOff => {
                if o.toggled_on {
                    Reason::Ok
                } else {
                    Reason::AlreadyOff
                }
            }
        }
    }

    /// Resolve the instance an action applies to: the nearest instance of the
    /// argument type on which the action is applicable (ties by lowest id).
    /// On failure returns the reason reported by the nearest instance.
    pub fn resolve_target(&self, agent: AgentId, action: &IntentionalAction) -> Result<ObjectId, Reason> {
        if action.is_wait() {
            return Err(Reason::Ok);
        }
        let Some(t) = action.arg else {
            return Err(Reason::AffordanceMismatch);
        };
        let here = self.agent(agent).cell;
        let mut candidates: Vec<&ObjectState> = self.instances(t).collect();
        let Some(first) = candidates.first() else {
            return Err(Reason::MissingType);
        };
        if !action.predicate.accepts(&first.affordances) {
            return Err(Reason::AffordanceMismatch);
        }
        let held = self.agent(agent).held;
        match action.predicate {
            Predicate::PickUp if held.is_some() => return Err(Reason::AlreadyHolding),
            Predicate::Put if held.is_none() => return Err(Reason::EmptyHand),
            _ => {}
        }
        candidates.sort_by(|a, b| {
            a.cell
                .dist(here)
                .total_cmp(&b.cell.dist(here))
                .then(a.id.cmp(&b.id))
        });
        let mut nearest_reason = None;
        for o in &candidates {
            match self.instance_reason(action, o) {
                Reason::Ok => return Ok(o.id),
                r => {
                    nearest_reason.get_or_insert(r);
                }
            }
        }
        Err(nearest_reason.unwrap_or(Reason::MissingType))
    }

    /// Legality check; capability never affects legality.
    pub fn action_legal(&self, agent: AgentId, action: &IntentionalAction) -> (bool, Reason) {
        match self.resolve_target(agent, action) {
            Ok(_) | Err(Reason::Ok) => (true, Reason::Ok),
            Err(r) => (false, r),
        }
    }

    fn record(&mut self, agent: AgentId, action: IntentionalAction, success: bool, reason: Reason) {
        let a = self.agent_mut(agent);
        a.last_action = action;
        a.last_success = success;
        a.last_reason = reason;
    }

    /// Execute one intentional action in place.
    pub fn step_action(&mut self, agent: AgentId, action: IntentionalAction) -> Outcome {
        let fail = |s: &mut Self, reason: Reason, target: Option<ObjectId>| {
            s.record(agent, action, false, reason);
            Outcome {
                success: false,
                reason,
                target,
            }
        };
        if self.step >= self.max_steps {
            return fail(self, Reason::HorizonReached, None);
        }
        if action.is_wait() {
            self.record(agent, action, true, Reason::Ok);
            return Outcome {
                success: true,
                reason: Reason::Ok,
                target: None,
            };
        }
        let target = match self.resolve_target(agent, &action) {
            Ok(t) => t,
            Err(r) => return fail(self, r, None),
        };
        if !can_perform(&self.agent(agent).capability, &action, &self.objects[target]) {
            return fail(self, Reason::Capability, Some(target));
        }
        let Some((dest, walked)) = planner::approach(self, agent, self.objects[target].cell) else {
            return fail(self, Reason::Unreachable, Some(target));
        };

        let tcell = self.objects[target].cell;
        {
            let a = self.agent_mut(agent);
            a.cell = dest;
            a.travelled += walked;
            a.yaw = f64::from(tcell.y - dest.y)
                .atan2(f64::from(tcell.x - dest.x))
                .to_degrees();
        }
        if let Some(h) = self.agent(agent).held {
            self.objects[h].cell = dest;
        }

        match action.predicate {
            Predicate::PickUp => {
                let o = &mut self.objects[target];
                o.picked_up = true;
                o.parent = None;
                o.cell = dest;
                self.agent_mut(agent).held = Some(target);
            }
            Predicate::Put => {
                let held = self.agent(agent).held.expect("legality checked");
                let (rc, rh) = (self.objects[target].cell, self.objects[target].height);
                let o = &mut self.objects[held];
                o.picked_up = false;
                o.parent = Some(target);
                o.cell = rc;
                o.height = rh;
                self.agent_mut(agent).held = None;
            }
            Predicate::Open => self.objects[target].open = true,
            Predicate::Close => self.objects[target].open = false,
            Predicate::ToggleOn => {
                self.objects[target].toggled_on = true;
                if self.objects[target].affordances.cooker {
                    for o in self.objects.iter_mut() {
                        if o.parent == Some(target) && o.affordances.cookable {
                            o.cooked = true;
                        }
                    }
                }
            }
            Predicate::ToggleOff => self.objects[target].toggled_on = false,
            Predicate::Wait => unreachable!(),
        }
        self.record(agent, action, true, Reason::Ok);
        self.refresh_visibility();
        Outcome {
            success: true,
            reason: Reason::Ok,
            target: Some(target),
        }
    }

    /// Move an agent next to a cell without interacting (helper repositioning).
    pub fn reposition(&mut self, agent: AgentId, near: Cell) -> bool {
        match planner::approach(self, agent, near) {
            Some((dest, walked)) => {
                let a = self.agent_mut(agent);
                a.cell = dest;
                a.travelled += walked;
                if let Some(h) = a.held {
                    self.objects[h].cell = dest;
                }
                self.refresh_visibility();
                true
            }
            None => false,
        }
    }

    pub fn observe(&self, agent: AgentId) -> Observation {
        let objects = self
            .objects
            .iter()
            .filter(|o| o.visible_to[agent.index()])
            .cloned()
            .collect();
        let agents = self
            .agents
            .iter()
            .filter(|a| self.agent_visible_to(a.id, agent))
            .map(|a| AgentPublic {
                id: a.id,
                position: a.position(),
                rotation: a.rotation(),
                held_object: a.held,
                held_type: a.held.map(|h| self.objects[h].type_id),
                last_action: a.last_action,
                last_success: a.last_success,
            })
            .collect();
        Observation {
            observer: agent,
            step: self.step,
            objects,
            agents,
            own_reason: self.agent(agent).last_reason,
        }
    }

    /// Structural invariants; used by tests and scene loading.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (i, o) in self.objects.iter().enumerate() {
            if o.id != i {
                return Err(format!("object {i} has id {}", o.id));
            }
            if o.picked_up && o.parent.is_some() {
                return Err(format!("object {i} is held and parented"));
            }
            if o.open && !o.affordances.openable {
                return Err(format!("object {i} open but not openable"));
            }
            if o.toggled_on && !o.affordances.toggleable {
                return Err(format!("object {i} on but not toggleable"));
            }
            if !(0.0..=1.0).contains(&o.weight) || !(0.0..=1.0).contains(&o.height) {
                return Err(format!("object {i} weight/height out of range"));
            }
            if let Some(p) = o.parent {
                if p >= self.objects.len() || !self.objects[p].affordances.receptacle {
                    return Err(format!("object {i} has invalid parent {p}"));
                }
            }
            let holders = self.agents.iter().filter(|a| a.held == Some(i)).count();
            if holders > 1 || (holders == 1) != o.picked_up {
                return Err(format!("object {i} holder mismatch"));
            }
        }
        for a in &self.agents {
            if !a.capability.is_valid() {
                return Err(format!("{:?} capability out of range", a.id));
            }
        }
        if self.step > self.max_steps {
            return Err("step beyond horizon".into());
        }
        Ok(())
    }
}

/// Pure form of [`WorldState::step_action`].
pub fn apply_action(state: &WorldState, agent: AgentId, action: IntentionalAction) -> (WorldState, Outcome) {
    let mut next = state.clone();
    let out = next.step_action(agent, action);
    (next, out)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// A 6x6 room: counter, fridge, microwave, coffee machine, cabinet on the
    /// walls; potato, mug and cup on the counter.
    pub fn kitchen_room(catalog: &Catalog) -> WorldState {
        let mut objects = Vec::new();
        let mut add = |name: &str, cell: Cell, parent: Option<ObjectId>| {
            let t = catalog.id(name).unwrap();
            let ty = catalog.get(t);
            let id = objects.len();
            let height = match parent {
                Some(p) => {
                    let p: &ObjectState = &objects[p];
                    p.height
                }
                None => ty.height,
            };
            objects.push(ObjectState {
                id,
                type_id: t,
                cell,
                weight: ty.weight,
                height,
                picked_up: false,
                open: false,
                toggled_on: false,
                cooked: false,
                visible_to: [false; 2],
                parent,
                affordances: ty.affordances,
                solid: ty.solid,
            });
            id
        };
        let counter = add("Counter", Cell::new(0, 2), None);
        add("Fridge", Cell::new(0, 4), None);
        add("Microwave", Cell::new(2, 0), None);
        add("CoffeeMachine", Cell::new(4, 0), None);
        add("Cabinet", Cell::new(5, 3), None);
        add("Potato", Cell::new(0, 2), Some(counter));
        add("Mug", Cell::new(0, 2), Some(counter));
        add("Cup", Cell::new(0, 2), Some(counter));
        let mut s = WorldState {
            width: 6,
            height: 6,
            objects,
            agents: [
                AgentState::new(AgentId::Main, Cell::new(2, 2)),
                AgentState::new(AgentId::Helper, Cell::new(3, 3)),
            ],
            step: 0,
            max_steps: 30,
            visibility: Visibility::default(),
            nav: NavMode::Teleport,
        };
        s.refresh_visibility();
        s
    }
}
