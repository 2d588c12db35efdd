use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use smarthelp::benchmark::{run_benchmark, BenchmarkConfig, OUT_DIR_ENV};
use smarthelp::catalog::{Catalog, CapabilityType};
use smarthelp::dataset::{generate_records, histogram, ranked, write_dataset, ExportConfig};
use smarthelp::episode::{run_episode, EpisodeSpec, RunConfig};
use smarthelp::helpers::{PolicyConfig, PolicyKind};
use smarthelp::mcts::MctsParams;
use smarthelp::scene::{generate_scene, save_scene, GenConfig, TEST_SEEDS, TRAIN_SEEDS};
use smarthelp::task::TaskKind;
use smarthelp::{verify, Error, Result};

#[derive(Parser)]
#[command(name = "smarthelp", version, about = "Capability-aware helping: simulator and benchmark")]
struct Cli {
    /// Object catalog file; the built-in kitchen catalog otherwise.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate scenes and write them as scene files.
    GenerateScenes(GenArgs),
    /// Run one episode and print its log summary.
    RunEpisode(EpisodeArgs),
    /// Run the benchmark grid and write report files.
    RunBenchmark(BenchArgs),
    /// Export labelled observation windows.
    ExportDataset(DatasetArgs),
    /// Run the oracle suites; fails if any check fails.
    Verify,
}

#[derive(Args)]
struct GenArgs {
    /// Scene seeds, comma separated; training and test seeds by default.
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    /// Generator settings file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "smarthelp-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EpisodeArgs {
    #[arg(long)]
    scene_seed: u64,
    #[arg(long, value_parser = parse_task)]
    task: TaskKind,
    #[arg(long, value_parser = parse_ctype)]
    ctype: CapabilityType,
    #[arg(long, value_parser = parse_policy)]
    policy: PolicyKind,
    #[arg(long, default_value_t = 1.0)]
    lambda_e: f64,
    #[arg(long, default_value_t = 0)]
    episode_seed: u64,
    /// Sample the limited dimension instead of pinning it low.
    #[arg(long)]
    sampled: bool,
    /// Also write the full log to this file.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark config file (JSON); flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    scene_seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_task)]
    tasks: Option<Vec<TaskKind>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_ctype)]
    ctypes: Option<Vec<CapabilityType>>,
    /// Helper policies, comma separated or repeated.
    #[arg(long = "policy", value_delimiter = ',', value_parser = parse_policy)]
    policies: Option<Vec<PolicyKind>>,
    #[arg(long)]
    lambda_e: Option<f64>,
    #[arg(long)]
    repeats: Option<u32>,
    #[arg(long)]
    horizon: Option<u32>,
    #[arg(long)]
    test_mode: Option<bool>,
    #[arg(long)]
    mcts_n_sim: Option<usize>,
    #[arg(long)]
    mcts_depth: Option<usize>,
    #[arg(long)]
    mcts_c_ucb: Option<f64>,
    #[arg(long)]
    mcts_p_sample: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    eps_act: Option<f64>,
    #[arg(long)]
    eps_obs: Option<f64>,
    #[arg(long)]
    oracle_budget: Option<usize>,
    #[arg(long)]
    parallel: Option<bool>,
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long, default_value_t = 6000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    master_seed: u64,
    /// Output file; `dataset.jsonl` in the output directory by default.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "smarthelp-out")]
    out_dir: PathBuf,
}

fn parse_task(s: &str) -> Result<TaskKind, String> {
    TaskKind::parse(s).ok_or_else(|| format!("unknown task `{s}`"))
}

fn parse_ctype(s: &str) -> Result<CapabilityType, String> {
    CapabilityType::parse(s).ok_or_else(|| format!("unknown capability type `{s}`"))
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    PolicyKind::parse(s).ok_or_else(|| format!("unknown policy `{s}`"))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn generate_scenes(a: GenArgs, catalog: &Catalog, json: bool) -> Result<()> {
    let cfg: GenConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => GenConfig::default(),
    };
    let seeds: Vec<u64> = if a.seeds.is_empty() {
        TRAIN_SEEDS.chain(TEST_SEEDS).collect()
    } else {
        a.seeds
    };
    let dir = a.out_dir.join("scenes");
    std::fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    for s in seeds {
        let scene = generate_scene(s, &cfg, catalog)?;
        let p = dir.join(format!("scene-{s}.json"));
        save_scene(&scene, catalog, &p)?;
        written.push(p);
    }
    if json {
        print_json(&written)?;
    } else {
        for p in written {
            println!("{}", p.display());
        }
    }
    Ok(())
}

fn episode(a: EpisodeArgs, catalog: &Catalog, json: bool) -> Result<()> {
    let spec = EpisodeSpec {
        scene_seed: a.scene_seed,
        task: a.task,
        ctype: a.ctype,
        episode_seed: a.episode_seed,
        test_mode: !a.sampled,
    };
    let policy = PolicyConfig::new(a.policy, a.lambda_e);
    let r = run_episode(&spec, &policy, &RunConfig::default(), catalog)?;
    let log = &r.log;
    if let Some(p) = &a.log {
        std::fs::write(p, serde_json::to_string_pretty(log)?)?;
    }
    if json {
        return print_json(log);
    }
    let (by_helper, _) = log.helper_goals();
    println!(
        "{} policy={} success={} length={} goals={}/{} helper_goals={} reward={:.2}",
        log.scenario_id,
        log.policy,
        log.success,
        log.length,
        log.final_status.iter().filter(|s| **s == smarthelp::task::GoalStatus::Done).count(),
        log.goals.len(),
        by_helper,
        log.total_reward()
    );
    for s in &log.steps {
        println!(
            "  {:>2} main {} {} | helper {} {}",
            s.step,
            s.main_action.describe(catalog),
            s.main_reason.label(),
            s.helper_action.describe(catalog),
            s.helper_reason.label()
        );
    }
    Ok(())
}

fn bench_config(a: &BenchArgs) -> Result<BenchmarkConfig> {
    let mut c: BenchmarkConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => BenchmarkConfig::default(),
    };
    macro_rules! set {
        ($field:ident, $target:expr) => {
            if let Some(v) = a.$field.clone() {
                $target = v;
            }
        };
    }
    set!(master_seed, c.master_seed);
    set!(scene_seeds, c.scene_seeds);
    set!(tasks, c.tasks);
    set!(ctypes, c.ctypes);
    set!(policies, c.policies);
    set!(lambda_e, c.lambda_e);
    set!(repeats, c.repeats);
    set!(horizon, c.horizon);
    set!(test_mode, c.test_mode);
    set!(window, c.filter.window);
    set!(eps_act, c.filter.eps_act);
    set!(eps_obs, c.filter.eps_obs);
    set!(oracle_budget, c.run.oracle_budget);
    set!(parallel, c.parallel);
    if a.out_dir.is_some() {
        c.output_dir = a.out_dir.clone();
    }
    if a.mcts_n_sim.is_some() || a.mcts_depth.is_some() || a.mcts_c_ucb.is_some() || a.mcts_p_sample.is_some() {
        let mut m = c.mcts.unwrap_or_else(MctsParams::heuristic);
        set!(mcts_n_sim, m.n_sim);
        set!(mcts_depth, m.depth);
        set!(mcts_c_ucb, m.c_ucb);
        set!(mcts_p_sample, m.p_sample);
        c.mcts = Some(m);
    }
    c.validate()?;
    Ok(c)
}

fn benchmark(a: BenchArgs, catalog: &Catalog, json: bool) -> Result<()> {
    let cfg = bench_config(&a)?;
    let report = run_benchmark(&cfg, catalog)?;
    let files = report.write(&cfg.output_dir())?;
    if json {
        let summary: Vec<_> = report
            .policies
            .iter()
            .map(|p| serde_json::json!({"policy": p.policy, "lambda_e": p.lambda_e, "metrics": p.metrics, "invalid": p.invalid.len()}))
            .collect();
        return print_json(&serde_json::json!({"files": files, "policies": summary}));
    }
    print!("{}", report.table());
    for p in &report.policies {
        for i in &p.invalid {
            eprintln!("invalid episode {} ({}): {}", i.scenario_id, p.policy.label(), i.error);
        }
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn dataset(a: DatasetArgs, catalog: &Catalog, json: bool) -> Result<()> {
    let cfg = ExportConfig {
        master_seed: a.master_seed,
        count: a.count,
        ..Default::default()
    };
    let records = generate_records(&cfg, catalog)?;
    let path = match a.out {
        Some(p) => p,
        None => {
            std::fs::create_dir_all(&a.out_dir)?;
            a.out_dir.join("dataset.jsonl")
        }
    };
    let hist_path = write_dataset(&path, &records, catalog)?;
    let hist = ranked(&histogram(&records, catalog));
    if json {
        return print_json(&serde_json::json!({"dataset": path, "histogram": hist_path, "classes": hist}));
    }
    println!("wrote {} records to {}", records.len(), path.display());
    for (k, n) in hist.iter().take(10) {
        println!("  {k:<32} {n}");
    }
    Ok(())
}

fn run_verify(catalog: &Catalog, json: bool) -> Result<bool> {
    let checks = verify::run_all(catalog)?;
    let ok = checks.iter().all(|c| c.pass);
    if json {
        print_json(&checks)?;
    } else {
        for c in &checks {
            println!("[{}] {}: {} ({})", if c.pass { "pass" } else { "FAIL" }, c.suite, c.name, c.detail);
        }
    }
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    let catalog = match &cli.catalog {
        Some(p) => Catalog::load(p)?,
        None => Catalog::kitchen(),
    };
    match cli.cmd {
        Cmd::GenerateScenes(a) => generate_scenes(a, &catalog, cli.json)?,
        Cmd::RunEpisode(a) => episode(a, &catalog, cli.json)?,
        Cmd::RunBenchmark(a) => benchmark(a, &catalog, cli.json)?,
        Cmd::ExportDataset(a) => dataset(a, &catalog, cli.json)?,
        Cmd::Verify => return run_verify(&catalog, cli.json),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
