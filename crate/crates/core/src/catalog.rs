//! Object catalog and main-agent capability types.
//!
//! Weights for Potato, Tomato, Bread and Cup are fixed reference values; the
//! rest of the weights and every placement height are local choices spread
//! across the limitation ranges so that each capability dimension can bind.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::Capability;

pub const CATALOG_SCHEMA: &str = "smarthelp-catalog/1";

/// Type names every catalog must define.
pub const REQUIRED_TYPES: [&str; 9] = [
    "Potato",
    "Tomato",
    "Bread",
    "Mug",
    "Microwave",
    "Fridge",
    "CoffeeMachine",
    "Counter",
    "Cabinet",
];

pub type TypeId = usize;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Affordances {
    #[serde(default)]
    pub pickupable: bool,
    #[serde(default)]
    pub openable: bool,
    #[serde(default)]
    pub toggleable: bool,
    #[serde(default)]
    pub receptacle: bool,
    #[serde(default)]
    pub cookable: bool,
    /// Cooking appliance: toggling it on cooks cookable contents.
    #[serde(default)]
    pub cooker: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectType {
    pub name: String,
    pub affordances: Affordances,
    /// Normalized mass; only meaningful for pickupable types.
    #[serde(default)]
    pub weight: f64,
    /// Height of the type's own placement; for receptacles this is also the
    /// height at which contents sit.
    pub height: f64,
    /// Occupies its grid cell (furniture and appliances).
    #[serde(default)]
    pub solid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub types: Vec<ObjectType>,
}

#[derive(Serialize, Deserialize)]
struct CatalogFile {
    schema: String,
    #[serde(flatten)]
    catalog: Catalog,
}

fn item(name: &str, weight: f64, aff: Affordances) -> ObjectType {
    ObjectType {
        name: name.to_string(),
        affordances: Affordances {
            pickupable: true,
            ..aff
        },
        weight,
        height: 0.0,
        solid: false,
    }
}

fn fixture(name: &str, height: f64, aff: Affordances) -> ObjectType {
    ObjectType {
        name: name.to_string(),
        affordances: aff,
        weight: 1.0,
        height,
        solid: true,
    }
}

impl Catalog {
    pub fn new(types: Vec<ObjectType>) -> Result<Self> {
        let catalog = Catalog { types };
        catalog.validate()?;
        Ok(catalog)
    }

    /// Kitchen staples, 24 types.
    pub fn kitchen() -> Self {
        let food = Affordances {
            cookable: true,
            ..Default::default()
        };
        let plain = Affordances::default();
        let shelf = Affordances {
            receptacle: true,
            ..Default::default()
        };
        let closet = Affordances {
            receptacle: true,
            openable: true,
            ..Default::default()
        };
        let appliance = Affordances {
            receptacle: true,
            toggleable: true,
            ..Default::default()
        };
        let switch = Affordances {
            toggleable: true,
            ..Default::default()
        };
        let types = vec![
            item("Potato", 0.18, food),
            item("Tomato", 0.20, food),
            item("Bread", 0.7, food),
            item("Cup", 1.0, plain),
            item("Mug", 0.45, plain),
            item("Apple", 0.22, food),
            item("Egg", 0.05, food),
            item("Knife", 0.3, plain),
            item("Plate", 0.6, plain),
            item("Pan", 0.85, plain),
            item("Book", 0.5, plain),
            item("Bottle", 0.55, plain),
            fixture("Counter", 0.5, shelf),
            fixture("Table", 0.4, shelf),
            fixture("Shelf", 0.85, shelf),
            fixture("Sink", 0.45, shelf),
            fixture("Cabinet", 0.9, closet),
            fixture("Drawer", 0.3, closet),
            fixture("Fridge", 0.4, closet),
            fixture(
                "Microwave",
                0.6,
                Affordances {
                    openable: true,
                    cooker: true,
                    ..appliance
                },
            ),
            fixture("CoffeeMachine", 0.5, appliance),
            fixture(
                "Stove",
                0.45,
                Affordances {
                    cooker: true,
                    ..appliance
                },
            ),
            fixture("Toaster", 0.5, appliance),
            fixture("LightSwitch", 0.7, switch),
        ];
        Catalog { types }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for t in &self.types {
            if !seen.insert(t.name.as_str()) {
                return Err(Error::Catalog(format!("duplicate type name `{}`", t.name)));
            }
            if !(0.0..=1.0).contains(&t.weight) || !(0.0..=1.0).contains(&t.height) {
                return Err(Error::Catalog(format!(
                    "`{}`: weight and height must lie in [0, 1]",
                    t.name
                )));
            }
            let a = t.affordances;
            if a.pickupable && (a.receptacle || t.solid) {
                return Err(Error::Catalog(format!(
                    "`{}`: pickupable types cannot be receptacles or solid",
                    t.name
                )));
            }
        }
        for name in REQUIRED_TYPES {
            if !seen.contains(name) {
                return Err(Error::Catalog(format!("missing required type `{name}`")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn get(&self, id: TypeId) -> &ObjectType {
        &self.types[id]
    }

    pub fn id(&self, name: &str) -> Option<TypeId> {
        self.types.iter().position(|t| t.name == name)
    }

    pub fn require(&self, name: &str) -> Result<TypeId> {
        self.id(name).ok_or_else(|| Error::CatalogMismatch(name.to_string()))
    }

    pub fn name(&self, id: TypeId) -> &str {
        &self.types[id].name
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CatalogFile {
            schema: CATALOG_SCHEMA.to_string(),
            catalog: self.clone(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: CatalogFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        if file.schema != CATALOG_SCHEMA {
            return Err(Error::Schema {
                found: file.schema,
                expected: CATALOG_SCHEMA.to_string(),
            });
        }
        file.catalog.validate()?;
        Ok(file.catalog)
    }
}

/// The seven main-agent capability types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CapabilityType {
    Full,
    AlphaLim,
    BetaLim,
    GammaLim,
    DeltaLim,
    EpsilonLim,
    ZetaLim,
}

impl CapabilityType {
    pub const ALL: [CapabilityType; 7] = [
        CapabilityType::Full,
        CapabilityType::AlphaLim,
        CapabilityType::BetaLim,
        CapabilityType::GammaLim,
        CapabilityType::DeltaLim,
        CapabilityType::EpsilonLim,
        CapabilityType::ZetaLim,
    ];

    /// Limited dimension (0 = alpha .. 5 = zeta) and its open sampling range.
    pub fn limited(self) -> Option<(usize, f64, f64)> {
        match self {
            CapabilityType::Full => None,
            CapabilityType::AlphaLim => Some((0, 0.2, 0.8)),
            CapabilityType::BetaLim => Some((1, 0.1, 0.7)),
            CapabilityType::GammaLim => Some((2, 0.0, 0.49)),
            CapabilityType::DeltaLim => Some((3, 0.0, 0.49)),
            CapabilityType::EpsilonLim => Some((4, 0.0, 0.49)),
            CapabilityType::ZetaLim => Some((5, 0.0, 0.49)),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CapabilityType::Full => "full",
            CapabilityType::AlphaLim => "alpha",
            CapabilityType::BetaLim => "beta",
            CapabilityType::GammaLim => "gamma",
            CapabilityType::DeltaLim => "delta",
            CapabilityType::EpsilonLim => "epsilon",
            CapabilityType::ZetaLim => "zeta",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.label().eq_ignore_ascii_case(s) || format!("{t:?}").eq_ignore_ascii_case(s))
    }
}

/// Draw a capability of the given type. In test mode the limited dimension
/// is pinned to the low end of its range.
pub fn sample_capability<R: Rng + ?Sized>(ctype: CapabilityType, test_mode: bool, rng: &mut R) -> Capability {
    let mut dims = [1.0; 6];
    if let Some((dim, lo, hi)) = ctype.limited() {
        dims[dim] = if test_mode {
            lo
        } else {
            // open interval; resample the (measure-zero) lower endpoint
            loop {
                let v = rng.gen_range(lo..hi);
                if v > lo {
                    break v;
                }
            }
        };
    }
    Capability::from_array(dims)
}
