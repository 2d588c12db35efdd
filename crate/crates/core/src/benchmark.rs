//! Scenario grids, parallel evaluation, and report files.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{sample_capability, Catalog, CapabilityType};
use crate::episode::{run_in_scene, setup, EpisodeSpec, RunConfig};
use crate::error::{Error, Result};
use crate::helpers::{PolicyConfig, PolicyKind};
use crate::inference::FilterParams;
use crate::mcts::MctsParams;
use crate::metrics::{compute_metrics, oracle_steps, EpisodeLog, MetricsReport, OracleSteps, TABLE_HEADER};
use crate::reward::RewardConfig;
use crate::rng::{self, derive_seed};
use crate::scene::{generate_scene, TEST_SEEDS};
use crate::task::{is_necessary, parse_task, TaskKind};

pub const REPORT_SCHEMA: &str = "smarthelp-report/1";
/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SMARTHELP_OUT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub master_seed: u64,
    pub scene_seeds: Vec<u64>,
    pub tasks: Vec<TaskKind>,
    pub ctypes: Vec<CapabilityType>,
    pub policies: Vec<PolicyKind>,
    pub lambda_e: f64,
    pub repeats: u32,
    pub horizon: u32,
    /// Pin limited capabilities to their lowest value.
    pub test_mode: bool,
    /// Overrides the policy's default search parameters.
    pub mcts: Option<MctsParams>,
    pub filter: FilterParams<f64>,
    pub rewards: RewardConfig<f64>,
    pub run: RunConfig,
    pub parallel: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            master_seed: 0,
            scene_seeds: TEST_SEEDS.collect(),
            tasks: TaskKind::ALL.to_vec(),
            ctypes: CapabilityType::ALL.to_vec(),
            policies: vec![PolicyKind::Smart],
            lambda_e: 1.0,
            repeats: 3,
            horizon: 30,
            test_mode: true,
            mcts: None,
            filter: FilterParams::default(),
            rewards: RewardConfig::default(),
            run: RunConfig::default(),
            parallel: true,
            output_dir: None,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scene_seeds.is_empty() || self.tasks.is_empty() || self.ctypes.is_empty() || self.policies.is_empty() {
            return Err(Error::Config("scene seeds, tasks, capability types and policies must be non-empty".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.filter.eps_act) || !(0.0..=1.0).contains(&self.filter.eps_obs) {
            return Err(Error::Config("filter noise levels must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn policy_config(&self, kind: PolicyKind) -> PolicyConfig {
        let mut p = PolicyConfig::new(kind, self.lambda_e);
        if let Some(m) = self.mcts {
            p.mcts = m;
        }
        p.filter = self.filter;
        p.rewards = RewardConfig {
            lambda_e: self.lambda_e,
            horizon: self.horizon,
            ..self.rewards
        };
        p
    }

    fn run_config(&self) -> RunConfig {
        let mut r = self.run.clone();
        r.scene.max_steps = self.horizon;
        r.trace = false;
        r
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("smarthelp-out"))
    }
}

/// A task-capability pair is worth evaluating when at least one of the
/// task's goals needs the capability the type lacks, on some scene.
pub fn pair_needs_help(task: TaskKind, ctype: CapabilityType, cfg: &BenchmarkConfig, catalog: &Catalog) -> Result<bool> {
    if ctype.limited().is_none() {
        return Ok(false);
    }
    let run = cfg.run_config();
    let cap = sample_capability(ctype, true, &mut rng::stream(0, &[]));
    for &seed in &cfg.scene_seeds {
        let scene = generate_scene(seed, &run.scene, catalog)?;
        let plan = parse_task(task, &scene, catalog)?;
        if plan.goals.iter().any(|g| is_necessary(g, &cap, &scene)) {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pairs {
    pub evaluated: Vec<(TaskKind, CapabilityType)>,
    pub excluded: Vec<(TaskKind, CapabilityType)>,
}

pub fn task_capability_pairs(cfg: &BenchmarkConfig, catalog: &Catalog) -> Result<Pairs> {
    let mut p = Pairs {
        evaluated: vec![],
        excluded: vec![],
    };
    for &t in &cfg.tasks {
        for &c in &cfg.ctypes {
            if pair_needs_help(t, c, cfg, catalog)? {
                p.evaluated.push((t, c));
            } else {
                p.excluded.push((t, c));
            }
        }
    }
    Ok(p)
}

/// Every episode of the grid, in a fixed order. Episode seeds do not depend
/// on the policy, so all policies meet the same main agents.
pub fn episode_specs(cfg: &BenchmarkConfig, pairs: &Pairs) -> Vec<EpisodeSpec> {
    let mut out = Vec::new();
    for &scene_seed in &cfg.scene_seeds {
        for &(task, ctype) in &pairs.evaluated {
            for r in 0..cfg.repeats {
                out.push(EpisodeSpec {
                    scene_seed,
                    task,
                    ctype,
                    episode_seed: derive_seed(cfg.master_seed, &[scene_seed, task as u64, ctype as u64, r as u64]),
                    test_mode: cfg.test_mode,
                });
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvalidEpisode {
    pub scenario_id: String,
    pub episode_seed: u64,
    pub error: String,
}

/// Metrics of one (task, capability type) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub task: TaskKind,
    pub ctype: CapabilityType,
    pub episodes: usize,
    pub sr: f64,
    pub gsr: f64,
    pub hn: f64,
    pub hr: Option<f64>,
    pub el: f64,
    pub spl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyReport {
    pub policy: PolicyKind,
    pub lambda_e: f64,
    pub metrics: MetricsReport<f64>,
    pub cells: Vec<CellReport>,
    pub invalid: Vec<InvalidEpisode>,
    pub logs: Vec<EpisodeLog<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema: String,
    pub config: BenchmarkConfig,
    pub pairs: Pairs,
    pub policies: Vec<PolicyReport>,
}

impl BenchmarkReport {
    pub fn policy(&self, kind: PolicyKind) -> Option<&PolicyReport> {
        self.policies.iter().find(|p| p.policy == kind)
    }

    /// Delimiter-separated table, one row per policy.
    pub fn table(&self) -> String {
        let mut s = format!("Policy,lambda_e,{TABLE_HEADER}\n");
        for p in &self.policies {
            s.push_str(&format!("{},{},{}\n", p.policy.label(), p.lambda_e, p.metrics.table_row()));
        }
        s
    }

    /// Per-(task, capability) table for every policy.
    pub fn cell_table(&self) -> String {
        let mut s = String::from("Policy,Task,Capability,Episodes,SR,GSR,HN,HR,EL,SPL\n");
        for p in &self.policies {
            for c in &p.cells {
                let hr = c.hr.map(|x| format!("{x:.3}")).unwrap_or_else(|| "/".into());
                s.push_str(&format!(
                    "{},{},{},{},{:.3},{:.3},{:.3},{},{:.2},{:.3}\n",
                    p.policy.label(),
                    c.task.label(),
                    c.ctype.label(),
                    c.episodes,
                    c.sr,
                    c.gsr,
                    c.hn,
                    hr,
                    c.el,
                    c.spl
                ));
            }
        }
        s
    }

    /// Write `report.json`, `table.csv` and `cells.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let files = [
            (dir.join("report.json"), serde_json::to_string_pretty(self)?),
            (dir.join("table.csv"), self.table()),
            (dir.join("cells.csv"), self.cell_table()),
        ];
        for (p, text) in &files {
            std::fs::write(p, text)?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }
}

fn cells(logs: &[EpisodeLog<f64>], pairs: &Pairs) -> Result<Vec<CellReport>> {
    let mut out = Vec::new();
    for &(task, ctype) in &pairs.evaluated {
        let sub: Vec<EpisodeLog<f64>> = logs
            .iter()
            .filter(|l| l.task == task && l.capability_type == ctype)
            .cloned()
            .collect();
        if sub.is_empty() {
            continue;
        }
        let m = compute_metrics(&sub)?;
        out.push(CellReport {
            task,
            ctype,
            episodes: m.episodes,
            sr: m.sr,
            gsr: m.gsr,
            hn: m.hn,
            hr: m.hr,
            el: m.el,
            spl: m.spl,
        });
    }
    Ok(out)
}

fn map_maybe_parallel<T, U, F>(items: &[T], parallel: bool, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

type OracleKey = (u64, TaskKind, [u64; 6]);

fn oracle_key(spec: &EpisodeSpec) -> OracleKey {
    (spec.scene_seed, spec.task, spec.capability().to_array().map(f64::to_bits))
}

pub fn run_benchmark(cfg: &BenchmarkConfig, catalog: &Catalog) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let pairs = task_capability_pairs(cfg, catalog)?;
    let specs = episode_specs(cfg, &pairs);
    let run = cfg.run_config();

    // shortest solutions depend only on scene, task and capability
    let mut keys: Vec<(OracleKey, &EpisodeSpec)> = Vec::new();
    for s in &specs {
        let k = oracle_key(s);
        if !keys.iter().any(|(x, _)| *x == k) {
            keys.push((k, s));
        }
    }
    let solved: Vec<Result<(OracleKey, OracleSteps)>> = map_maybe_parallel(&keys, cfg.parallel, |(k, s)| {
        let (scene, plan) = setup(s, &run, catalog)?;
        Ok((*k, oracle_steps(&scene, &plan, catalog, run.oracle_budget)))
    });
    let oracles: HashMap<OracleKey, OracleSteps> = solved.into_iter().collect::<Result<_>>()?;

    let mut policies = Vec::new();
    for &kind in &cfg.policies {
        let pc = cfg.policy_config(kind);
        let runs = map_maybe_parallel(&specs, cfg.parallel, |s| {
            let (scene, plan) = setup(s, &run, catalog)?;
            run_in_scene(s, &scene, plan, &pc, oracles[&oracle_key(s)], false, catalog).map(|r| r.log)
        });
        let mut logs = Vec::new();
        let mut invalid = Vec::new();
        for (s, r) in specs.iter().zip(runs) {
            match r {
                Ok(l) => logs.push(l),
                Err(e) => invalid.push(InvalidEpisode {
                    scenario_id: s.scenario_id(),
                    episode_seed: s.episode_seed,
                    error: e.to_string(),
                }),
            }
        }
        let metrics = compute_metrics(&logs)?;
        policies.push(PolicyReport {
            policy: kind,
            lambda_e: cfg.lambda_e,
            cells: cells(&logs, &pairs)?,
            metrics,
            invalid,
            logs,
        });
    }
    Ok(BenchmarkReport {
        schema: REPORT_SCHEMA.into(),
        config: cfg.clone(),
        pairs,
        policies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_fourteen_pairs() {
        let c = Catalog::kitchen();
        let cfg = BenchmarkConfig::default();
        let p = task_capability_pairs(&cfg, &c).unwrap();
        assert_eq!(p.evaluated.len(), 14, "{:?}", p.excluded);
        assert_eq!(p.excluded.len(), 7);
        assert_eq!(episode_specs(&cfg, &p).len(), 420);
    }

    #[test]
    fn small_grid_parallel_equals_serial() {
        let c = Catalog::kitchen();
        let cfg = BenchmarkConfig {
            scene_seeds: vec![20, 21],
            tasks: vec![TaskKind::MakeCoffee],
            policies: vec![PolicyKind::Random, PolicyKind::MctsTg],
            repeats: 2,
            ..Default::default()
        };
        let a = run_benchmark(&cfg, &c).unwrap();
        let b = run_benchmark(&BenchmarkConfig { parallel: false, ..cfg }, &c).unwrap();
        assert_eq!(a.policies, b.policies);
        assert!(a.policies.iter().all(|p| p.invalid.is_empty()));
    }
}
