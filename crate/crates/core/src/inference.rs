//! Exact discrete Bayesian filter over the main agent's current goal and
//! capability class, computed from a sliding window of the helper's
//! observations.
//!
//! Capabilities are grouped into cells: alpha and beta are partitioned at the
//! heights and weights that occur in the scene, the four abilities at the 0.5
//! threshold. Capabilities in one cell succeed and fail on exactly the same
//! actions, so the cell is all the filter needs.
//!
//! Goals are tracked as candidates `(task, position)`. Walking the window
//! backwards, an observed success of the action that completes the goal
//! before the candidate's position shifts the pointer back by one, so a
//! window that straddles a goal switch is explained by two goals.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, CapabilityType, TypeId};
use crate::error::{Error, Result};
use crate::planner::{drop_spot, expert_action};
use crate::scalar::Scalar;
use crate::task::{Goal, Requirement, TargetState, TaskKind, TaskPlan};
use crate::world::{
    can_perform, enumerate_actions, AgentId, AgentPublic, Capability, IntentionalAction, ObjectState, Observation,
    Predicate, WorldState, ABILITY_THRESHOLD,
};

pub const MAX_SUPPORT: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Candidate {
    /// `None` for the task-agnostic Wait candidate.
    pub task: Option<TaskKind>,
    /// Position in the task's goal list; the list length means "finished".
    pub index: usize,
    pub goal: Goal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CapCell {
    pub alpha: u8,
    pub beta: u8,
    /// Bits 0..4: open, close, toggle-on, toggle-off at or above threshold.
    pub abilities: u8,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorKind {
    Uniform,
    /// Mixture of the seven capability types, limited value uniform in range.
    #[default]
    SevenTypes,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FilterParams<S: Scalar> {
    pub window: usize,
    pub eps_act: S,
    pub eps_obs: S,
    pub prior: PriorKind,
}

impl<S: Scalar> Default for FilterParams<S> {
    fn default() -> Self {
        FilterParams {
            window: 5,
            eps_act: S::lit(0.1),
            eps_obs: S::lit(0.01),
            prior: PriorKind::SevenTypes,
        }
    }
}

/// Static scene knowledge shared by every belief in an episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub candidates: Vec<Candidate>,
    pub plans: Vec<(TaskKind, Vec<Goal>)>,
    pub alpha_bounds: Vec<f64>,
    pub beta_bounds: Vec<f64>,
    pub cells: Vec<CapCell>,
    pub drop: Option<TypeId>,
    pub n_actions: usize,
    /// Instances per type in the scene.
    pub instance_count: Vec<usize>,
    /// Type of every object id.
    pub object_types: Vec<TypeId>,
    /// Objects as the public scene shows them; stands in for instances a
    /// frame does not show.
    pub objects: Vec<ObjectState>,
}

fn bounds(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.filter(|x| *x > 0.0).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Class index of `x` in a partition with lower bounds `[0, b1, b2, ...]`.
fn class_of(b: &[f64], x: f64) -> u8 {
    b.iter().filter(|v| **v <= x).count() as u8
}

fn class_range(b: &[f64], c: u8) -> (f64, f64) {
    let c = c as usize;
    let lo = if c == 0 { 0.0 } else { b[c - 1] };
    let hi = b.get(c).copied().unwrap_or(f64::INFINITY);
    (lo, hi)
}

impl Support {
    pub fn new(scene: &WorldState, plans: &[TaskPlan], catalog: &Catalog) -> Result<Self> {
        let mut candidates = Vec::new();
        for p in plans {
            for (i, g) in p.goals.iter().enumerate() {
                candidates.push(Candidate {
                    task: Some(p.task),
                    index: i,
                    goal: *g,
                });
            }
            candidates.push(Candidate {
                task: Some(p.task),
                index: p.goals.len(),
                goal: Goal::WAIT,
            });
        }
        candidates.push(Candidate {
            task: None,
            index: 0,
            goal: Goal::WAIT,
        });
        let items = || scene.objects.iter().filter(|o| o.affordances.pickupable);
        let alpha_bounds = bounds(
            items()
                .map(|o| o.height)
                .chain(scene.objects.iter().filter(|o| o.affordances.receptacle).map(|o| o.height)),
        );
        let beta_bounds = bounds(items().map(|o| o.weight));
        let mut cells = Vec::new();
        for a in 0..=alpha_bounds.len() as u8 {
            for b in 0..=beta_bounds.len() as u8 {
                for ab in 0..16u8 {
                    cells.push(CapCell {
                        alpha: a,
                        beta: b,
                        abilities: ab,
                    });
                }
            }
        }
        let size = candidates.len() * cells.len();
        if size > MAX_SUPPORT {
            return Err(Error::SupportOverflow(size));
        }
        let mut instance_count = vec![0; catalog.len()];
        for o in &scene.objects {
            instance_count[o.type_id] += 1;
        }
        Ok(Support {
            candidates,
            plans: plans.iter().map(|p| (p.task, p.goals.clone())).collect(),
            alpha_bounds,
            beta_bounds,
            cells,
            drop: drop_spot(scene, catalog),
            n_actions: enumerate_actions(catalog).len(),
            instance_count,
            object_types: scene.objects.iter().map(|o| o.type_id).collect(),
            objects: scene.objects.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.candidates.len() * self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The lowest capability in a cell; it behaves like every member.
    pub fn representative(&self, cell: &CapCell) -> Capability {
        let bit = |i: u8| if cell.abilities >> i & 1 == 1 { ABILITY_THRESHOLD } else { 0.0 };
        Capability {
            alpha: class_range(&self.alpha_bounds, cell.alpha).0,
            beta: class_range(&self.beta_bounds, cell.beta).0,
            gamma: bit(0),
            delta: bit(1),
            epsilon: bit(2),
            zeta: bit(3),
        }
    }

    pub fn cell_of(&self, cap: &Capability) -> CapCell {
        let bit = |v: f64, i: u8| u8::from(v >= ABILITY_THRESHOLD) << i;
        CapCell {
            alpha: class_of(&self.alpha_bounds, cap.alpha),
            beta: class_of(&self.beta_bounds, cap.beta),
            abilities: bit(cap.gamma, 0) | bit(cap.delta, 1) | bit(cap.epsilon, 2) | bit(cap.zeta, 3),
        }
    }

    pub fn cell_index(&self, cell: &CapCell) -> usize {
        let nb = self.beta_bounds.len() + 1;
        (cell.alpha as usize * nb + cell.beta as usize) * 16 + cell.abilities as usize
    }

    fn goals_of(&self, task: TaskKind) -> &[Goal] {
        &self
            .plans
            .iter()
            .find(|(t, _)| *t == task)
            .expect("candidate task has a plan")
            .1
    }

    /// Prior mass of a cell under one capability type.
    fn type_mass(&self, ctype: CapabilityType, cell: &CapCell) -> f64 {
        let lim = ctype.limited();
        let dim_mass = |dim: usize, lo: f64, hi: f64| -> f64 {
            match lim {
                Some((d, a, b)) if d == dim => {
                    let ov = (hi.min(b) - lo.max(a)).max(0.0);
                    ov / (b - a)
                }
                _ => {
                    if (lo..hi).contains(&1.0) || (hi.is_infinite() && lo <= 1.0) {
                        1.0
                    } else {
                        0.0
                    }
                }
            }
        };
        let (al, ah) = class_range(&self.alpha_bounds, cell.alpha);
        let (bl, bh) = class_range(&self.beta_bounds, cell.beta);
        let mut m = dim_mass(0, al, ah) * dim_mass(1, bl, bh);
        for i in 0..4u8 {
            let (lo, hi) = if cell.abilities >> i & 1 == 1 {
                (ABILITY_THRESHOLD, f64::INFINITY)
            } else {
                (0.0, ABILITY_THRESHOLD)
            };
            m *= dim_mass(2 + i as usize, lo, hi);
        }
        m
    }

    pub fn cell_prior<S: Scalar>(&self, kind: PriorKind) -> Vec<S> {
        match kind {
            PriorKind::Uniform => vec![S::one() / S::from_count(self.cells.len()); self.cells.len()],
            PriorKind::SevenTypes => {
                let raw: Vec<f64> = self
                    .cells
                    .iter()
                    .map(|c| {
                        CapabilityType::ALL
                            .iter()
                            .map(|t| self.type_mass(*t, c))
                            .sum::<f64>()
                            / 7.0
                    })
                    .collect();
                let z: f64 = raw.iter().sum();
                raw.into_iter().map(|x| S::lit(x / z)).collect()
            }
        }
    }
}

/// The main agent as seen in a frame, if it was seen.
fn main_in(frame: &Observation) -> Option<&AgentPublic> {
    frame.agent(AgentId::Main)
}

/// Held type of the main agent right before the action shown in `frame`.
/// `None` inside means unknown.
fn held_before(frame: &Observation, prev: Option<&Observation>) -> Option<Option<TypeId>> {
    let m = main_in(frame)?;
    if !m.last_success {
        return Some(m.held_type);
    }
    match m.last_action.predicate {
        Predicate::PickUp => Some(None),
        Predicate::Put => prev
            .and_then(|p| p.agent(AgentId::Main))
            .filter(|_| prev.map(|p| p.step + 1 == frame.step).unwrap_or(false))
            .map(|a| a.held_type),
        _ => Some(m.held_type),
    }
}

/// Whether a goal visibly holds in a frame; `None` when the frame cannot tell.
pub fn frame_satisfied(goal: &Goal, frame: &Observation, support: &Support) -> Option<bool> {
    let obj = goal.object?;
    let visible: Vec<&ObjectState> = frame.objects.iter().filter(|o| o.type_id == obj).collect();
    let all_seen = visible.len() == support.instance_count.get(obj).copied().unwrap_or(0);
    let decide = |any: bool| -> Option<bool> {
        if any {
            Some(true)
        } else if all_seen {
            Some(false)
        } else {
            None
        }
    };
    match goal.target {
        TargetState::Wait => Some(true),
        TargetState::Get => {
            if frame.agents.iter().any(|a| a.held_type == Some(obj)) {
                Some(true)
            } else if frame.agents.len() == 2 {
                Some(false)
            } else {
                None
            }
        }
        TargetState::In | TargetState::On => {
            let r = goal.receptacle?;
            decide(visible.iter().any(|o| {
                o.parent
                    .and_then(|p| support.object_types.get(p))
                    .map(|t| *t == r)
                    .unwrap_or(false)
            }))
        }
        TargetState::KeepOpen => decide(visible.iter().any(|o| o.open)),
        TargetState::KeepOn => decide(visible.iter().any(|o| o.toggled_on)),
        TargetState::KeepClose => {
            if visible.iter().any(|o| o.open) {
                Some(false)
            } else if all_seen {
                Some(true)
            } else {
                None
            }
        }
        TargetState::KeepOff => {
            if visible.iter().any(|o| o.toggled_on) {
                Some(false)
            } else if all_seen {
                Some(true)
            } else {
                None
            }
        }
    }
}

/// Actions the expert could have taken toward `goal` before this frame.
fn expected_actions(goal: &Goal, held: Option<Option<TypeId>>, drop: Option<TypeId>) -> Vec<IntentionalAction> {
    match held {
        Some(h) => vec![expert_action(goal, h, drop, false)],
        None => {
            let mut v = vec![expert_action(goal, Some(usize::MAX), drop, false)];
            if let Some(o) = goal.object {
                v.push(expert_action(goal, Some(o), drop, false));
            }
            v
        }
    }
}

/// Likelihood of the main agent's last action in `frame` if it was pursuing `goal`.
pub fn action_likelihood<S: Scalar>(
    frame: &Observation,
    prev: Option<&Observation>,
    goal: &Goal,
    support: &Support,
    params: &FilterParams<S>,
) -> S {
    let Some(m) = main_in(frame) else {
        return S::one();
    };
    let held = held_before(frame, prev);
    if expected_actions(goal, held, support.drop).contains(&m.last_action) {
        S::one() - params.eps_act
    } else {
        params.eps_act / S::from_count(support.n_actions.max(2) - 1)
    }
}

/// Whether a failed action was legal as far as the frame shows.
fn looked_legal(action: &IntentionalAction, o: &ObjectState, main: &AgentPublic) -> bool {
    match action.predicate {
        Predicate::PickUp => main.held_object.is_none() && !o.picked_up,
        Predicate::Open => !o.open && !o.toggled_on,
        Predicate::Close => o.open,
        Predicate::ToggleOn => !o.toggled_on && !(o.affordances.openable && o.open),
        Predicate::ToggleOff => o.toggled_on,
        Predicate::Put | Predicate::Wait => false,
    }
}

fn sq(p: &[f64; 3], q: &[f64; 3]) -> f64 {
    (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
}

/// The object the main agent's last action was applied to, as far as the
/// helper can tell, when the outcome depends on capability. Instances the
/// frame does not show are taken from the public scene.
pub fn outcome_target<'a>(frame: &'a Observation, support: &'a Support) -> Option<(&'a AgentPublic, &'a ObjectState)> {
    let m = main_in(frame)?;
    let a = m.last_action;
    let t = a.arg?;
    if matches!(a.predicate, Predicate::Put | Predicate::Wait) {
        return None;
    }
    let seen = |id: usize| frame.object(id).or_else(|| support.objects.get(id));
    if m.last_success && a.predicate == Predicate::PickUp {
        return Some((m, seen(m.held_object?)?));
    }
    let mut inst: Vec<&ObjectState> = support
        .object_types
        .iter()
        .enumerate()
        .filter(|(_, ty)| **ty == t)
        .filter_map(|(id, _)| seen(id))
        .collect();
    inst.sort_by(|x, y| {
        sq(&x.position(), &m.position)
            .total_cmp(&sq(&y.position(), &m.position))
            .then(x.id.cmp(&y.id))
    });
    if m.last_success {
        return inst.first().map(|o| (m, *o));
    }
    inst.into_iter().find(|o| looked_legal(&a, o, m)).map(|o| (m, o))
}

/// Likelihood of the main agent's observed success or failure under a cell.
pub fn outcome_likelihood<S: Scalar>(
    frame: &Observation,
    cell: &CapCell,
    support: &Support,
    params: &FilterParams<S>,
) -> S {
    match outcome_target(frame, support) {
        None => S::one(),
        Some((m, o)) => {
            let predicted = can_perform(&support.representative(cell), &m.last_action, o);
            if predicted == m.last_success {
                S::one() - params.eps_obs
            } else {
                params.eps_obs
            }
        }
    }
}

/// Goal each window frame is explained by, for one candidate, newest last.
/// Walks backwards from the candidate's position.
pub fn explained_goals(window: &[Observation], cand: &Candidate, support: &Support) -> Vec<Goal> {
    let Some(task) = cand.task else {
        return vec![Goal::WAIT; window.len()];
    };
    let goals = support.goals_of(task);
    let at = |p: usize| goals.get(p).copied().unwrap_or(Goal::WAIT);
    let mut ptr = cand.index;
    let mut out = vec![Goal::WAIT; window.len()];
    for (i, frame) in window.iter().enumerate().rev() {
        if let Some(m) = main_in(frame) {
            if ptr > 0 && m.last_success && goals[ptr - 1].completing_action() == Some(m.last_action) {
                ptr -= 1;
            }
        }
        out[i] = at(ptr);
    }
    out
}

/// Extra evidence from the newest frame: the candidate's goal should not
/// already hold, and the goal it maintains should.
fn consistency<S: Scalar>(window: &[Observation], cand: &Candidate, support: &Support, params: &FilterParams<S>) -> S {
    let Some(last) = window.iter().rev().find(|f| f.agent(AgentId::Main).is_some()) else {
        return S::one();
    };
    let mut f = S::one();
    if cand.task.is_some() && !cand.goal.target.eq(&TargetState::Wait) && frame_satisfied(&cand.goal, last, support) == Some(true) {
        f = f * params.eps_act;
    }
    if let (Some(task), true) = (cand.task, cand.index > 0) {
        let prev = support.goals_of(task)[cand.index - 1];
        if prev.is_keep() && frame_satisfied(&prev, last, support) == Some(false) {
            f = f * params.eps_act;
        }
    }
    f
}

fn goal_factor<S: Scalar>(window: &[Observation], cand: &Candidate, support: &Support, params: &FilterParams<S>) -> S {
    let goals = explained_goals(window, cand, support);
    let mut f = consistency(window, cand, support, params);
    for (i, frame) in window.iter().enumerate() {
        let prev = if i > 0 { Some(&window[i - 1]) } else { None };
        f = f * action_likelihood(frame, prev, &goals[i], support, params);
    }
    f
}

fn cell_factor<S: Scalar>(window: &[Observation], cell: &CapCell, support: &Support, params: &FilterParams<S>) -> S {
    window
        .iter()
        .map(|fr| outcome_likelihood(fr, cell, support, params))
        .fold(S::one(), |a, b| a * b)
}

fn main_seen(window: &VecDeque<Observation>) -> bool {
    window.iter().any(|f| f.agent(AgentId::Main).is_some())
}

/// Marginals of a belief, for logs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BeliefSnapshot<S: Scalar> {
    pub none_flag: bool,
    pub goals: Vec<(Goal, S)>,
    pub map_cell: CapCell,
    pub map_cell_prob: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeliefState<S: Scalar> {
    pub support: Arc<Support>,
    pub params: FilterParams<S>,
    pub goal_prior: Vec<S>,
    pub cell_prior: Vec<S>,
    /// Joint table, candidate-major.
    pub table: Vec<S>,
    pub window: VecDeque<Observation>,
    /// The main agent was not seen anywhere in the window.
    pub none_flag: bool,
}

impl<S: Scalar> BeliefState<S> {
    pub fn new(support: Arc<Support>, params: FilterParams<S>) -> Self {
        let nc = support.candidates.len();
        let goal_prior = vec![S::one() / S::from_count(nc); nc];
        let cell_prior = support.cell_prior(params.prior);
        let table = goal_prior
            .iter()
            .flat_map(|g| cell_prior.iter().map(move |c| *g * *c))
            .collect();
        BeliefState {
            support,
            params,
            goal_prior,
            cell_prior,
            table,
            window: VecDeque::new(),
            none_flag: true,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.support.cells.len()
    }

    pub fn prob(&self, cand: usize, cell: usize) -> S {
        self.table[cand * self.n_cells() + cell]
    }

    /// Posterior after adding `obs` to the window.
    pub fn update(&self, obs: &Observation) -> Result<Self> {
        let mut next = self.clone();
        next.window.push_back(obs.clone());
        while next.window.len() > next.params.window.max(1) {
            next.window.pop_front();
        }
        next.recompute()?;
        Ok(next)
    }

    fn recompute(&mut self) -> Result<()> {
        let sup = &*self.support;
        if !main_seen(&self.window) {
            self.none_flag = true;
            let cp = &self.cell_prior;
            self.table = self
                .goal_prior
                .iter()
                .flat_map(|g| cp.iter().map(move |c| *g * *c))
                .collect();
            return Ok(());
        }
        self.none_flag = false;
        let w: Vec<Observation> = self.window.iter().cloned().collect();
        let gv: Vec<S> = sup
            .candidates
            .iter()
            .zip(&self.goal_prior)
            .map(|(c, p)| *p * goal_factor(&w, c, sup, &self.params))
            .collect();
        let cv: Vec<S> = sup
            .cells
            .iter()
            .zip(&self.cell_prior)
            .map(|(c, p)| *p * cell_factor(&w, c, sup, &self.params))
            .collect();
        let zg: S = gv.iter().copied().sum();
        let zc: S = cv.iter().copied().sum();
        if !(zg > S::zero() && zc > S::zero()) || !(zg * zc).is_finite() {
            return Err(Error::Normalization);
        }
        self.table = gv
            .iter()
            .flat_map(|g| cv.iter().map(move |c| (*g / zg) * (*c / zc)))
            .collect();
        Ok(())
    }

    /// Joint argmax; ties go to the earlier candidate, then the earlier cell.
    pub fn map_estimate(&self) -> (Candidate, CapCell, S) {
        let mut best = 0;
        for (i, p) in self.table.iter().enumerate() {
            if *p > self.table[best] {
                best = i;
            }
        }
        let nc = self.n_cells();
        (
            self.support.candidates[best / nc],
            self.support.cells[best % nc],
            self.table[best],
        )
    }

    pub fn candidate_marginal(&self) -> Vec<S> {
        self.table
            .chunks(self.n_cells())
            .map(|row| row.iter().copied().sum())
            .collect()
    }

    pub fn cell_marginal(&self) -> Vec<S> {
        let nc = self.n_cells();
        let mut out = vec![S::zero(); nc];
        for row in self.table.chunks(nc) {
            for (o, p) in out.iter_mut().zip(row) {
                *o = *o + *p;
            }
        }
        out
    }

    /// Marginal over distinct goals, in first-appearance order.
    pub fn goal_marginal(&self) -> Vec<(Goal, S)> {
        let mut out: Vec<(Goal, S)> = Vec::new();
        for (c, p) in self.support.candidates.iter().zip(self.candidate_marginal()) {
            match out.iter_mut().find(|(g, _)| *g == c.goal) {
                Some(e) => e.1 = e.1 + p,
                None => out.push((c.goal, p)),
            }
        }
        out
    }

    /// Most probable goal; `None` while the main agent is out of sight.
    pub fn map_goal(&self) -> Option<Goal> {
        if self.none_flag {
            return None;
        }
        let m = self.goal_marginal();
        let mut best = 0;
        for (i, (_, p)) in m.iter().enumerate() {
            if *p > m[best].1 {
                best = i;
            }
        }
        Some(m[best].0)
    }

    pub fn map_candidate(&self) -> Candidate {
        let m = self.candidate_marginal();
        let mut best = 0;
        for (i, p) in m.iter().enumerate() {
            if *p > m[best] {
                best = i;
            }
        }
        self.support.candidates[best]
    }

    pub fn map_cell(&self) -> CapCell {
        let m = self.cell_marginal();
        let mut best = 0;
        for (i, p) in m.iter().enumerate() {
            if *p > m[best] {
                best = i;
            }
        }
        self.support.cells[best]
    }

    /// Posterior probability that the main agent cannot meet `req`.
    pub fn p_incapable(&self, req: &Requirement) -> S {
        self.support
            .cells
            .iter()
            .zip(self.cell_marginal())
            .filter(|(c, _)| !req.satisfied_by(&self.support.representative(c)))
            .map(|(_, p)| p)
            .sum()
    }

    pub fn total(&self) -> S {
        self.table.iter().copied().sum()
    }

    pub fn snapshot(&self) -> BeliefSnapshot<S> {
        let cm = self.cell_marginal();
        let cell = self.map_cell();
        BeliefSnapshot {
            none_flag: self.none_flag,
            goals: self.goal_marginal(),
            map_cell: cell,
            map_cell_prob: cm[self.support.cell_index(&cell)],
        }
    }
}

/// Reference posterior by direct enumeration of every (candidate, cell) pair.
pub fn brute_force_posterior<S: Scalar>(
    window: &[Observation],
    support: &Support,
    params: &FilterParams<S>,
) -> Result<Vec<S>> {
    if support.len() > MAX_SUPPORT {
        return Err(Error::SupportOverflow(support.len()));
    }
    let w = &window[window.len().saturating_sub(params.window.max(1))..];
    let nc = support.candidates.len();
    let gp = S::one() / S::from_count(nc);
    let cp = support.cell_prior::<S>(params.prior);
    let seen = w.iter().any(|f| f.agent(AgentId::Main).is_some());
    let mut table = Vec::with_capacity(support.len());
    for cand in &support.candidates {
        let goals = explained_goals(w, cand, support);
        let cons = consistency(w, cand, support, params);
        for (k, cell) in support.cells.iter().enumerate() {
            let mut p = gp * cp[k];
            if seen {
                p = p * cons;
                for (i, frame) in w.iter().enumerate() {
                    let prev = if i > 0 { Some(&w[i - 1]) } else { None };
                    p = p
                        * action_likelihood(frame, prev, &goals[i], support, params)
                        * outcome_likelihood(frame, cell, support, params);
                }
            }
            table.push(p);
        }
    }
    let z: S = table.iter().copied().sum();
    if !(z > S::zero()) || !z.is_finite() {
        return Err(Error::Normalization);
    }
    Ok(table.into_iter().map(|p| p / z).collect())
}
