//! Trajectory windows for training or checking goal and capability
//! recognizers: the main agent runs the expert policy, the helper acts at
//! random, and each record holds five consecutive helper observations with
//! the true labels.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, CapabilityType};
use crate::episode::{run_episode, EpisodeSpec, Frame, RunConfig};
use crate::error::{Error, Result};
use crate::helpers::{PolicyConfig, PolicyKind};
use crate::rng::derive_seed;
use crate::scene::TRAIN_SEEDS;
use crate::task::{Goal, TaskKind};
use crate::world::{AgentId, Capability, Observation};

pub const DATASET_SCHEMA: &str = "smarthelp-dataset/1";
pub const WINDOW: usize = 5;
/// Histogram class of windows whose main agent is never seen.
pub const NONE_LABEL: &str = "None";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema: String,
    pub window: usize,
    pub records: usize,
    /// Object type names, indexed by type id.
    pub types: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub scenario_id: String,
    pub episode_seed: u64,
    pub ctype: CapabilityType,
    /// Step of the newest frame.
    pub step: u32,
    pub frames: Vec<Observation>,
    /// The main agent's goal at the newest frame; `None` when no frame shows it.
    pub goal: Option<Goal>,
    pub capability: Capability,
}

impl TrajectoryRecord {
    pub fn class(&self, catalog: &Catalog) -> String {
        match &self.goal {
            None => NONE_LABEL.to_string(),
            Some(g) => g.describe(catalog),
        }
    }
}

/// Label of a window: `None` exactly when the main agent is absent from
/// every frame.
pub fn window_label(frames: &[Frame]) -> Option<Goal> {
    let seen = frames.iter().any(|f| f.obs.agent(AgentId::Main).is_some());
    seen.then(|| frames.last().map(|f| f.goal)).flatten()
}

pub fn windows(spec: &EpisodeSpec, frames: &[Frame]) -> Vec<TrajectoryRecord> {
    frames
        .windows(WINDOW)
        .map(|w| TrajectoryRecord {
            scenario_id: spec.scenario_id(),
            episode_seed: spec.episode_seed,
            ctype: spec.ctype,
            step: w[WINDOW - 1].obs.step,
            frames: w.iter().map(|f| f.obs.clone()).collect(),
            goal: window_label(w),
            capability: w[WINDOW - 1].capability,
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExportConfig {
    pub master_seed: u64,
    pub scene_seeds: Vec<u64>,
    pub count: usize,
    pub run: RunConfig,
    pub parallel: bool,
}

impl Default for ExportConfig {
    fn default() -> Self {
        ExportConfig {
            master_seed: 0,
            scene_seeds: TRAIN_SEEDS.collect(),
            count: 6000,
            run: RunConfig::default(),
            parallel: true,
        }
    }
}

/// Episodes cycle through scenes, tasks and capability types; capabilities
/// are sampled, not pinned.
fn spec_at(cfg: &ExportConfig, i: usize) -> EpisodeSpec {
    let n_t = TaskKind::ALL.len();
    let n_c = CapabilityType::ALL.len();
    let n_s = cfg.scene_seeds.len();
    EpisodeSpec {
        scene_seed: cfg.scene_seeds[i % n_s],
        task: TaskKind::ALL[(i / n_s) % n_t],
        ctype: CapabilityType::ALL[(i / (n_s * n_t)) % n_c],
        episode_seed: derive_seed(cfg.master_seed, &[0xDA7A, i as u64]),
        test_mode: false,
    }
}

pub fn generate_records(cfg: &ExportConfig, catalog: &Catalog) -> Result<Vec<TrajectoryRecord>> {
    if cfg.count == 0 {
        return Err(Error::Config("dataset count must be at least 1".into()));
    }
    if cfg.scene_seeds.is_empty() {
        return Err(Error::Config("no scene seeds".into()));
    }
    let policy = PolicyConfig::new(PolicyKind::Random, 0.0);
    let run = RunConfig {
        trace: true,
        oracle_budget: 1,
        ..cfg.run.clone()
    };
    let mut out = Vec::with_capacity(cfg.count);
    let batch = 32;
    let mut next = 0usize;
    while out.len() < cfg.count {
        let idx: Vec<usize> = (next..next + batch).collect();
        next += batch;
        let one = |i: &usize| -> Result<Vec<TrajectoryRecord>> {
            let spec = spec_at(cfg, *i);
            let r = run_episode(&spec, &policy, &run, catalog)?;
            Ok(windows(&spec, &r.frames))
        };
        let got: Vec<Result<Vec<TrajectoryRecord>>> = if cfg.parallel {
            idx.par_iter().map(one).collect()
        } else {
            idx.iter().map(one).collect()
        };
        for r in got {
            out.extend(r?);
        }
        if next > 1_000_000 {
            return Err(Error::Config("episodes yield no windows".into()));
        }
    }
    out.truncate(cfg.count);
    Ok(out)
}

pub fn histogram(records: &[TrajectoryRecord], catalog: &Catalog) -> BTreeMap<String, usize> {
    let mut h = BTreeMap::new();
    for r in records {
        *h.entry(r.class(catalog)).or_insert(0) += 1;
    }
    h
}

/// Classes by decreasing count, ties by name.
pub fn ranked(h: &BTreeMap<String, usize>) -> Vec<(String, usize)> {
    let mut v: Vec<(String, usize)> = h.iter().map(|(k, n)| (k.clone(), *n)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

pub fn histogram_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".hist.csv");
    PathBuf::from(p)
}

/// Write header and records, one JSON object per line, plus the class
/// histogram next to it. Returns the histogram path.
pub fn write_dataset(path: &Path, records: &[TrajectoryRecord], catalog: &Catalog) -> Result<PathBuf> {
    let header = DatasetHeader {
        schema: DATASET_SCHEMA.into(),
        window: WINDOW,
        records: records.len(),
        types: catalog.types.iter().map(|t| t.name.clone()).collect(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    let hp = histogram_path(path);
    let mut h = String::from("class,count\n");
    for (k, n) in ranked(&histogram(records, catalog)) {
        h.push_str(&format!("\"{k}\",{n}\n"));
    }
    std::fs::write(&hp, h)?;
    Ok(hp)
}

pub fn read_dataset(path: &Path, catalog: &Catalog) -> Result<(DatasetHeader, Vec<TrajectoryRecord>)> {
    let origin = path.display().to_string();
    let parse_err = |line: usize, e: serde_json::Error| Error::Parse {
        path: origin.clone(),
        line,
        column: e.column(),
        msg: e.to_string(),
    };
    let mut lines = BufReader::new(File::open(path)?).lines();
    let first = lines.next().ok_or_else(|| Error::Parse {
        path: origin.clone(),
        line: 1,
        column: 1,
        msg: "empty file".into(),
    })??;
    let header: DatasetHeader = serde_json::from_str(&first).map_err(|e| parse_err(1, e))?;
    if header.schema != DATASET_SCHEMA {
        return Err(Error::Schema {
            found: header.schema,
            expected: DATASET_SCHEMA.into(),
        });
    }
    let names: Vec<&str> = catalog.types.iter().map(|t| t.name.as_str()).collect();
    if let Some(bad) = header.types.iter().zip(&names).find(|(a, b)| a != b) {
        return Err(Error::CatalogMismatch(bad.0.clone()));
    }
    let mut records = Vec::with_capacity(header.records);
    for (i, l) in lines.enumerate() {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        let r: TrajectoryRecord = serde_json::from_str(&l).map_err(|e| parse_err(i + 2, e))?;
        if r.frames.len() != header.window {
            return Err(Error::Parse {
                path: origin.clone(),
                line: i + 2,
                column: 1,
                msg: format!("window has {} frames, expected {}", r.frames.len(), header.window),
            });
        }
        records.push(r);
    }
    if records.len() != header.records {
        return Err(Error::Parse {
            path: origin,
            line: records.len() + 1,
            column: 1,
            msg: format!("header promises {} records, found {}", header.records, records.len()),
        });
    }
    Ok((header, records))
}
