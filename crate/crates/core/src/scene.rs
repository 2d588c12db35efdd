//! Seeded procedural scenes and the scene file format.
//!
//! Rooms are grids. Furniture and appliances stand on wall cells (corners
//! excluded), so the interior stays connected; small items sit in a
//! receptacle or on the floor.

use std::collections::HashSet;
use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, TypeId, REQUIRED_TYPES};
use crate::error::{Error, Result};
use crate::rng;
use crate::world::{AgentId, AgentState, Capability, Cell, NavMode, ObjectId, ObjectState, Visibility, WorldState};

pub const SCENE_SCHEMA: &str = "smarthelp-scene/1";

pub const TRAIN_SEEDS: Range<u64> = 0..20;
pub const TEST_SEEDS: Range<u64> = 20..30;

const SCENE_TAG: u64 = 0x5C3E;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub width: i32,
    pub height: i32,
    /// Furniture and appliances, one instance per entry.
    pub fixtures: Vec<String>,
    /// Items always placed.
    pub items: Vec<String>,
    /// Pool for extra random items.
    pub extra_items: Vec<String>,
    pub n_extra: usize,
    pub max_steps: u32,
    pub visibility: Visibility,
    pub nav: NavMode,
    pub p_fridge_open: f64,
    pub p_microwave_on: f64,
    pub p_mug_in_machine: f64,
    pub p_appliance_on: f64,
    pub p_floor: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        GenConfig {
            width: 10,
            height: 10,
            fixtures: s(&[
                "Counter",
                "Counter",
                "Table",
                "Shelf",
                "Sink",
                "Cabinet",
                "Cabinet",
                "Drawer",
                "Fridge",
                "Microwave",
                "CoffeeMachine",
                "Stove",
                "Toaster",
                "LightSwitch",
            ]),
            items: s(&["Potato", "Mug", "Tomato", "Bread", "Cup"]),
            extra_items: s(&["Apple", "Egg", "Knife", "Plate", "Pan", "Book", "Bottle", "Tomato", "Bread"]),
            n_extra: 5,
            max_steps: 30,
            visibility: Visibility::default(),
            nav: NavMode::Teleport,
            p_fridge_open: 0.2,
            p_microwave_on: 0.25,
            p_mug_in_machine: 0.3,
            p_appliance_on: 0.3,
            p_floor: 0.1,
        }
    }
}

/// Objects used as task targets; at most one instance each.
const SINGLE: [&str; 5] = ["Potato", "Mug", "Fridge", "Microwave", "CoffeeMachine"];

impl GenConfig {
    pub fn validate(&self, catalog: &Catalog) -> Result<()> {
        if self.width < 4 || self.height < 4 {
            return Err(Error::Generation("room must be at least 4x4".into()));
        }
        let named: HashSet<&str> = self
            .fixtures
            .iter()
            .chain(&self.items)
            .map(String::as_str)
            .collect();
        for r in REQUIRED_TYPES {
            if !named.contains(r) {
                return Err(Error::Generation(format!("config omits required type `{r}`")));
            }
        }
        for n in self.fixtures.iter().chain(&self.items).chain(&self.extra_items) {
            catalog
                .id(n)
                .ok_or_else(|| Error::Generation(format!("unknown type `{n}`")))?;
        }
        for n in &self.fixtures {
            if !catalog.get(catalog.id(n).unwrap()).solid {
                return Err(Error::Generation(format!("`{n}` is not a fixture")));
            }
        }
        for n in self.items.iter().chain(&self.extra_items) {
            if !catalog.get(catalog.id(n).unwrap()).affordances.pickupable {
                return Err(Error::Generation(format!("`{n}` is not an item")));
            }
        }
        for n in SINGLE {
            let c = self
                .fixtures
                .iter()
                .chain(&self.items)
                .filter(|x| x.as_str() == n)
                .count();
            if c > 1 || self.extra_items.iter().any(|x| x == n) {
                return Err(Error::Generation(format!("`{n}` must appear once")));
            }
        }
        let wall = 2 * (self.width - 2) + 2 * (self.height - 2);
        if self.fixtures.len() as i32 > wall {
            return Err(Error::Generation(format!("{} fixtures but {wall} wall cells", self.fixtures.len())));
        }
        if !self.fixtures.iter().any(|f| matches!(f.as_str(), "Counter" | "Table" | "Shelf")) {
            return Err(Error::Generation("need an open surface for items".into()));
        }
        Ok(())
    }
}

fn new_object(catalog: &Catalog, id: ObjectId, t: TypeId, cell: Cell, height: f64, parent: Option<ObjectId>) -> ObjectState {
    let ty = catalog.get(t);
    ObjectState {
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
    }
}

/// Build a scene from a seed. Pure in (seed, config, catalog).
pub fn generate_scene(seed: u64, config: &GenConfig, catalog: &Catalog) -> Result<WorldState> {
    config.validate(catalog)?;
    let mut rng = rng::stream(seed, &[SCENE_TAG]);
    let (w, h) = (config.width, config.height);

    let mut wall: Vec<Cell> = Vec::new();
    for x in 1..w - 1 {
        wall.push(Cell::new(x, 0));
        wall.push(Cell::new(x, h - 1));
    }
    for y in 1..h - 1 {
        wall.push(Cell::new(0, y));
        wall.push(Cell::new(w - 1, y));
    }
    wall.shuffle(&mut rng);

    let mut objects: Vec<ObjectState> = Vec::new();
    for (name, cell) in config.fixtures.iter().zip(wall) {
        let t = catalog.id(name).unwrap();
        let id = objects.len();
        let mut o = new_object(catalog, id, t, cell, catalog.get(t).height, None);
        match name.as_str() {
            "Fridge" => o.open = rng.gen_bool(config.p_fridge_open),
            "Microwave" => o.toggled_on = rng.gen_bool(config.p_microwave_on),
            "CoffeeMachine" | "Cabinet" | "Drawer" => {}
            _ => {
                if o.affordances.toggleable {
                    o.toggled_on = rng.gen_bool(config.p_appliance_on);
                }
            }
        }
        objects.push(o);
    }

    let of_type = |objects: &[ObjectState], names: &[&str]| -> Vec<ObjectId> {
        objects
            .iter()
            .filter(|o| names.contains(&catalog.name(o.type_id)))
            .map(|o| o.id)
            .collect()
    };
    let surfaces = of_type(&objects, &["Counter", "Table", "Shelf"]);
    let high = of_type(&objects, &["Shelf", "Cabinet"]);
    let any_rec: Vec<ObjectId> = objects
        .iter()
        .filter(|o| o.affordances.receptacle && !o.affordances.toggleable)
        .map(|o| o.id)
        .collect();
    let machine = of_type(&objects, &["CoffeeMachine"]);

    let mut floor: Vec<Cell> = (1..w - 1)
        .flat_map(|x| (1..h - 1).map(move |y| Cell::new(x, y)))
        .collect();
    floor.shuffle(&mut rng);
    let spawn = [floor.pop().unwrap(), floor.pop().unwrap()];

    let mut items: Vec<&str> = config.items.iter().map(String::as_str).collect();
    for _ in 0..config.n_extra {
        if let Some(x) = config.extra_items.choose(&mut rng) {
            items.push(x);
        }
    }
    let mut placed_high = false;
    for (k, name) in items.iter().enumerate() {
        let t = catalog.id(name).unwrap();
        let parent = match *name {
            "Potato" => Some(*surfaces.choose(&mut rng).unwrap()),
            "Mug" => {
                if !machine.is_empty() && rng.gen_bool(config.p_mug_in_machine) {
                    Some(machine[0])
                } else {
                    Some(*surfaces.choose(&mut rng).unwrap())
                }
            }
            _ if !placed_high && !high.is_empty() && k + 1 == items.len() => Some(*high.choose(&mut rng).unwrap()),
            _ if rng.gen_bool(config.p_floor) && !floor.is_empty() => None,
            _ => Some(*any_rec.choose(&mut rng).unwrap()),
        };
        let id = objects.len();
        let o = match parent {
            Some(p) => {
                let (pc, ph) = (objects[p].cell, objects[p].height);
                if ph > 0.8 {
                    placed_high = true;
                }
                new_object(catalog, id, t, pc, ph, Some(p))
            }
            None => new_object(catalog, id, t, floor.pop().unwrap(), 0.0, None),
        };
        objects.push(o);
    }

    let mut state = WorldState {
        width: w,
        height: h,
        objects,
        agents: [
            AgentState::new(AgentId::Main, spawn[0]),
            AgentState::new(AgentId::Helper, spawn[1]),
        ],
        step: 0,
        max_steps: config.max_steps,
        visibility: config.visibility,
        nav: config.nav,
    };
    state.refresh_visibility();
    state.check_invariants().map_err(Error::Generation)?;
    Ok(state)
}

/// What the helper may know about a scene up front: layout and objects,
/// with the main agent's capability replaced by the uninformative full vector.
pub fn public_view(state: &WorldState) -> WorldState {
    let mut s = state.clone();
    s.agents[0].capability = Capability::FULL;
    s
}

#[derive(Serialize, Deserialize)]
struct ObjectRecord {
    id: ObjectId,
    #[serde(rename = "type")]
    type_name: String,
    cell: Cell,
    weight: f64,
    height: f64,
    #[serde(default)]
    picked_up: bool,
    #[serde(default)]
    open: bool,
    #[serde(default)]
    toggled_on: bool,
    #[serde(default)]
    cooked: bool,
    #[serde(default)]
    parent: Option<ObjectId>,
}

#[derive(Serialize, Deserialize)]
struct SceneFile {
    schema: String,
    width: i32,
    height: i32,
    step: u32,
    max_steps: u32,
    visibility: Visibility,
    nav: NavMode,
    agents: [AgentState; 2],
    objects: Vec<ObjectRecord>,
}

pub fn scene_to_string(state: &WorldState, catalog: &Catalog) -> Result<String> {
    let file = SceneFile {
        schema: SCENE_SCHEMA.to_string(),
        width: state.width,
        height: state.height,
        step: state.step,
        max_steps: state.max_steps,
        visibility: state.visibility,
        nav: state.nav,
        agents: state.agents.clone(),
        objects: state
            .objects
            .iter()
            .map(|o| ObjectRecord {
                id: o.id,
                type_name: catalog.name(o.type_id).to_string(),
                cell: o.cell,
                weight: o.weight,
                height: o.height,
                picked_up: o.picked_up,
                open: o.open,
                toggled_on: o.toggled_on,
                cooked: o.cooked,
                parent: o.parent,
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn scene_from_str(text: &str, origin: &str, catalog: &Catalog) -> Result<WorldState> {
    let file: SceneFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    if file.schema != SCENE_SCHEMA {
        return Err(Error::Schema {
            found: file.schema,
            expected: SCENE_SCHEMA.to_string(),
        });
    }
    let mut objects = Vec::with_capacity(file.objects.len());
    for r in file.objects {
        let t = catalog
            .id(&r.type_name)
            .ok_or_else(|| Error::CatalogMismatch(r.type_name.clone()))?;
        let mut o = new_object(catalog, r.id, t, r.cell, r.height, r.parent);
        o.weight = r.weight;
        o.picked_up = r.picked_up;
        o.open = r.open;
        o.toggled_on = r.toggled_on;
        o.cooked = r.cooked;
        objects.push(o);
    }
    let mut state = WorldState {
        width: file.width,
        height: file.height,
        objects,
        agents: file.agents,
        step: file.step,
        max_steps: file.max_steps,
        visibility: file.visibility,
        nav: file.nav,
    };
    state.refresh_visibility();
    state
        .check_invariants()
        .map_err(|m| Error::Parse {
            path: origin.to_string(),
            line: 0,
            column: 0,
            msg: m,
        })?;
    Ok(state)
}

pub fn save_scene(state: &WorldState, catalog: &Catalog, path: &Path) -> Result<()> {
    std::fs::write(path, scene_to_string(state, catalog)?)?;
    Ok(())
}

pub fn load_scene(path: &Path, catalog: &Catalog) -> Result<WorldState> {
    let text = std::fs::read_to_string(path)?;
    scene_from_str(&text, &path.display().to_string(), catalog)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::{parse_task, TaskKind};

    #[test]
    fn deterministic_and_distinct() {
        let c = Catalog::kitchen();
        let cfg = GenConfig::default();
        let a = generate_scene(3, &cfg, &c).unwrap();
        let b = generate_scene(3, &cfg, &c).unwrap();
        assert_eq!(scene_to_string(&a, &c).unwrap(), scene_to_string(&b, &c).unwrap());
        let mut texts = HashSet::new();
        for seed in 0..100 {
            texts.insert(scene_to_string(&generate_scene(seed, &cfg, &c).unwrap(), &c).unwrap());
        }
        assert_eq!(texts.len(), 100);
    }

    #[test]
    fn scenes_parse_all_tasks_and_bind_every_dimension() {
        let c = Catalog::kitchen();
        let cfg = GenConfig::default();
        for seed in 0..100 {
            let s = generate_scene(seed, &cfg, &c).unwrap();
            for t in TaskKind::ALL {
                parse_task(t, &s, &c).unwrap();
            }
            let items: Vec<_> = s.objects.iter().filter(|o| o.affordances.pickupable).collect();
            assert!(items.iter().any(|o| o.height > 0.8), "seed {seed}");
            assert!(items.iter().any(|o| o.weight > 0.7), "seed {seed}");
            assert!(s.objects.iter().any(|o| o.affordances.openable));
            assert!(s.objects.iter().any(|o| o.affordances.toggleable));
            let solid: Vec<_> = s.objects.iter().filter(|o| o.solid).map(|o| o.cell).collect();
            let uniq: HashSet<_> = solid.iter().collect();
            assert_eq!(uniq.len(), solid.len());
            for a in &s.agents {
                assert!(s.is_free(a.cell));
            }
            assert_ne!(s.agents[0].cell, s.agents[1].cell);
        }
    }

    #[test]
    fn missing_required_type_fails() {
        let c = Catalog::kitchen();
        let mut cfg = GenConfig::default();
        cfg.fixtures.retain(|f| f != "Fridge");
        assert!(matches!(generate_scene(0, &cfg, &c), Err(Error::Generation(_))));
    }

    #[test]
    fn file_round_trip_and_errors() {
        let c = Catalog::kitchen();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scene.json");
        let mut s = generate_scene(11, &GenConfig::default(), &c).unwrap();
        s.agents[0].capability.beta = 0.1;
        save_scene(&s, &c, &p).unwrap();
        assert_eq!(load_scene(&p, &c).unwrap(), s);

        let text = std::fs::read_to_string(&p).unwrap();
        std::fs::write(&p, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load_scene(&p, &c), Err(Error::Parse { line, .. }) if line > 0));

        std::fs::write(&p, text.replacen("\"Potato\"", "\"Durian\"", 1)).unwrap();
        assert!(matches!(load_scene(&p, &c), Err(Error::CatalogMismatch(n)) if n == "Durian"));
    }
}
