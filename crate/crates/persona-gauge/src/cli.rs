//! Command-line front end: argument parsing, run orchestration, and the
//! scripted selftest suite. Usage problems exit 2, task failures exit 1.
//!
//! Only `run` with a remote backend ever opens a network connection, and
//! it refuses to do so unless `--live` is passed or an explicit endpoint
//! is configured.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::adaptability::{
    build_catalog, flexibility, load_catalog, load_checkins, run_adaptability, save_catalog,
    stability, summarize_adaptability, AdaptTrajectory, PoiCatalog,
};
use crate::agent::policy::BeliefPrior;
use crate::agent::{parse_policy_spec, AgentHandle, Policy, RemoteConfig, ResponseCache};
use crate::bandit::{run_campaign, BanditSpec, BanditTrajectory};
use crate::config::{resolve_path, BackendKind, BanditParams, RunConfig, RunManifest};
use crate::ee::{
    choice_events, fit_probit, init_posterior, kalman_update, std_normal_cdf,
};
use crate::mbti::parse_mbti;
use crate::persona::load_persona_set;
use crate::reasoning::{
    accuracy_by_category, build_answer_key, generate_demo_mmlu, load_category_map, load_mmlu,
    run_reasoning, ItemResult, McqItem, SubjectCategory,
};
use crate::report::{
    emit_report, load_run, persist_run, summarize, write_summaries, RunRecord,
};
use crate::safety::{load_baseline, load_inventory, run_safety, Sd3Item, Sd3Scores, Subscale};

pub const USAGE_EXIT: i32 = 2;
pub const TASK_EXIT: i32 = 1;

/// Entry point for the thin binary: parse, dispatch, map errors to codes.
pub fn main() -> i32 {
    run_cli(std::env::args_os())
}

/// Same as [`main`] but over an explicit argv, so tests can drive it.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => USAGE_EXIT,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            USAGE_EXIT
        }
        Err(Failure::Task(err)) => {
            eprintln!("error: {err:#}");
            TASK_EXIT
        }
    }
}

/// A failed subcommand: either the invocation was unusable (exit 2) or
/// the work itself failed (exit 1).
enum Failure {
    Usage(String),
    Task(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure::Task(err)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "persona-gauge",
    version,
    about = "Measures the decision-making profile of role-playing agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a location catalog from a tab-separated check-in stream.
    CatalogBuild(CatalogBuildArgs),
    /// Evaluate personas on the selected tasks and store artifacts.
    Run(RunArgs),
    /// Refit exploration/exploitation weights from stored raw trials.
    FitEe(StoredRunArgs),
    /// Rescore the questionnaire task from stored raw replies.
    ScoreSd3(StoredRunArgs),
    /// Regenerate summary tables and charts from stored raw artifacts.
    Report(StoredRunArgs),
    /// Run the scripted, network-free consistency checks.
    Selftest,
}

#[derive(Args, Debug, Clone)]
struct CommonOpts {
    /// Run configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Persona code subset override, comma separated (e.g. ENFJ,ISTP).
    #[arg(long, value_delimiter = ',')]
    personas: Vec<String>,
    /// Worker threads for per-persona parallelism.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Output root directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CatalogBuildArgs {
    /// Check-in stream, one tab-separated record per line.
    #[arg(long)]
    checkins: PathBuf,
    /// 0-based column holding the timestamp.
    #[arg(long, default_value_t = 7)]
    timestamp_col: usize,
    /// 0-based column holding the category name.
    #[arg(long, default_value_t = 3)]
    category_col: usize,
    /// Winners kept per time block before merging.
    #[arg(long, default_value_t = 30)]
    top_k: usize,
    /// Destination catalog file (one category per line).
    #[arg(long)]
    out_file: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Task subset: adaptability, bandit, reasoning, safety. All if empty.
    tasks: Vec<String>,
    #[command(flatten)]
    common: CommonOpts,
    /// Backend override: scripted or remote.
    #[arg(long)]
    backend: Option<String>,
    /// Scripted policy override, e.g. probit:0.5,0.3 or mcq-keyed.
    #[arg(long)]
    policy: Option<String>,
    /// Allow live traffic to a remote model endpoint.
    #[arg(long)]
    live: bool,
}

#[derive(Args, Debug)]
struct StoredRunArgs {
    /// Stored run directory; defaults to <out>/runs/<config hash>.
    run_dir: Option<PathBuf>,
    #[command(flatten)]
    common: CommonOpts,
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::CatalogBuild(args) => cmd_catalog_build(args),
        Command::Run(args) => cmd_run(args),
        Command::FitEe(args) => cmd_fit_ee(args),
        Command::ScoreSd3(args) => cmd_score_sd3(args),
        Command::Report(args) => cmd_report(args),
        Command::Selftest => cmd_selftest(),
    }
}

/// Which evaluation tasks a run covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskSelection {
    pub adaptability: bool,
    pub bandit: bool,
    pub reasoning: bool,
    pub safety: bool,
}

impl TaskSelection {
    pub fn all() -> Self {
        Self {
            adaptability: true,
            bandit: true,
            reasoning: true,
            safety: true,
        }
    }

    pub fn from_names(names: &[String]) -> Result<Self, String> {
        let mut sel = Self {
            adaptability: false,
            bandit: false,
            reasoning: false,
            safety: false,
        };
        for name in names {
            match name.as_str() {
                "adaptability" => sel.adaptability = true,
                "bandit" => sel.bandit = true,
                "reasoning" => sel.reasoning = true,
                "safety" => sel.safety = true,
                other => {
                    return Err(format!(
                        "unknown task '{other}' (expected adaptability, bandit, reasoning, safety)"
                    ))
                }
            }
        }
        Ok(sel)
    }

    /// Selected task names in canonical order, independent of argv order.
    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.adaptability {
            out.push("adaptability".to_string());
        }
        if self.bandit {
            out.push("bandit".to_string());
        }
        if self.reasoning {
            out.push("reasoning".to_string());
        }
        if self.safety {
            out.push("safety".to_string());
        }
        out
    }
}

/// Loads the config (or defaults) and applies flag overrides, so the
/// config hash names exactly what executes.
fn load_effective_config(common: &CommonOpts) -> Result<(RunConfig, PathBuf), Failure> {
    let (mut config, base) = match &common.config {
        Some(path) => {
            let config = RunConfig::from_file(path)
                .with_context(|| format!("loading config {}", path.display()))
                .map_err(Failure::Task)?;
            let base = path
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("."));
            (config, base)
        }
        None => (RunConfig::default(), PathBuf::from(".")),
    };
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if let Some(parallelism) = common.parallelism {
        if parallelism < 1 {
            return Err(Failure::Usage("--parallelism must be >= 1".into()));
        }
        config.parallelism = parallelism;
    }
    if !common.personas.is_empty() {
        config.personas = common
            .personas
            .iter()
            .map(|s| parse_mbti(s))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    config
        .validate()
        .map_err(|e| Failure::Task(anyhow::Error::from(e)))?;
    Ok((config, base))
}

/// Checks a scripted policy spec without building the answer key; keyed
/// multiple-choice policies are assembled later from the loaded items.
fn validate_policy_spec(spec: &str) -> Result<(), String> {
    if spec.strip_prefix("mcq-keyed").is_some() {
        parse_keyed_accuracy(spec).map(|_| ()).map_err(|e| e.to_string())
    } else {
        parse_policy_spec(spec).map(|_| ()).map_err(|e| e.to_string())
    }
}

fn parse_keyed_accuracy(spec: &str) -> Result<f64> {
    let rest = spec
        .strip_prefix("mcq-keyed")
        .ok_or_else(|| anyhow!("unrecognized policy spec '{spec}'"))?;
    if rest.is_empty() {
        return Ok(1.0);
    }
    let arg = rest
        .strip_prefix(':')
        .ok_or_else(|| anyhow!("unrecognized policy spec '{spec}'"))?;
    let accuracy: f64 = arg
        .trim()
        .parse()
        .map_err(|_| anyhow!("mcq-keyed accuracy must be a number in [0,1]"))?;
    if !(0.0..=1.0).contains(&accuracy) {
        bail!("mcq-keyed accuracy must be within [0,1]");
    }
    Ok(accuracy)
}

/// Builds the scripted policy, wiring keyed answers and the configured
/// bandit prior into policies that use them.
fn build_policy(spec: &str, mcq_items: &[McqItem], bandit: &BanditParams) -> Result<Policy> {
    let mut policy = if spec.starts_with("mcq-keyed") {
        Policy::McqKeyed {
            key: build_answer_key(mcq_items),
            accuracy: parse_keyed_accuracy(spec)?,
        }
    } else {
        parse_policy_spec(spec)?
    };
    let prior = BeliefPrior {
        mu0: bandit.mu0,
        tau0: bandit.tau0,
        tau: bandit.tau,
    };
    match &mut policy {
        Policy::Ucb { prior: p, .. } | Policy::Probit { prior: p, .. } => *p = prior,
        _ => {}
    }
    Ok(policy)
}

/// Inputs the reasoning task needs, loaded once and shared by personas.
struct ReasoningInputs {
    items: Vec<McqItem>,
    map: BTreeMap<String, SubjectCategory>,
}

/// Resolves the question set. The magic directory name `demo` generates
/// the built-in drill set under the output root instead of reading files.
fn load_reasoning_inputs(
    config: &RunConfig,
    base: &Path,
    out_root: &Path,
) -> Result<ReasoningInputs> {
    let params = &config.tasks.reasoning;
    let (questions_dir, map_path) = if params.mmlu_dir == "demo" {
        let per_subject = if params.per_subject_cap > 0 {
            params.per_subject_cap
        } else {
            12
        };
        generate_demo_mmlu(&out_root.join("demo-mmlu"), per_subject)
            .context("generating demo question set")?
    } else {
        if params.mmlu_dir.is_empty() {
            bail!("reasoning.mmlu_dir is not set (use 'demo' for the built-in drill set)");
        }
        if params.categories.is_empty() {
            bail!("reasoning.categories is not set");
        }
        (
            resolve_path(base, &params.mmlu_dir),
            resolve_path(base, &params.categories),
        )
    };
    let map = load_category_map(&map_path)?;
    let items = load_mmlu(&questions_dir, params.per_subject_cap)?;
    Ok(ReasoningInputs { items, map })
}

fn load_configured_baseline(config: &RunConfig, base: &Path) -> Result<Option<Sd3Scores>> {
    if config.tasks.safety.baseline.is_empty() {
        return Ok(None);
    }
    let path = resolve_path(base, &config.tasks.safety.baseline);
    Ok(Some(load_baseline(&path)?))
}

/// Everything one persona produced across the selected tasks.
struct PersonaOutput {
    label: String,
    adaptability: Option<Vec<AdaptTrajectory>>,
    bandit: Option<BanditTrajectory>,
    reasoning: Option<Vec<ItemResult>>,
    safety: Option<crate::safety::SafetyOutcome>,
}

/// Runs the selected tasks for every effective persona and assembles the
/// record that gets persisted. Personas run on a bounded worker pool.
pub fn execute_run(
    config: &RunConfig,
    base: &Path,
    out_root: &Path,
    selection: &TaskSelection,
) -> Result<RunRecord> {
    let codes = config.effective_personas();
    if config.personas_dir.is_empty() {
        bail!("personas_dir is not set; point it at a directory of persona profiles");
    }
    let personas_dir = resolve_path(base, &config.personas_dir);
    let profiles = load_persona_set(&personas_dir, &codes)?;

    let catalog = if selection.adaptability {
        let params = &config.tasks.adaptability;
        if params.catalog.is_empty() {
            bail!("adaptability.catalog is not set");
        }
        Some(load_catalog(&resolve_path(base, &params.catalog))?)
    } else {
        None
    };
    let bandit_spec = if selection.bandit {
        Some(BanditSpec::from_params(&config.tasks.bandit)?)
    } else {
        None
    };
    let reasoning_inputs = if selection.reasoning {
        Some(load_reasoning_inputs(config, base, out_root)?)
    } else {
        None
    };
    let inventory = if selection.safety {
        let params = &config.tasks.safety;
        if params.inventory.is_empty() {
            bail!("safety.inventory is not set");
        }
        Some(load_inventory(&resolve_path(base, &params.inventory))?)
    } else {
        None
    };

    let policy = match config.backend.kind {
        BackendKind::Scripted => Some(build_policy(
            &config.backend.policy,
            reasoning_inputs.as_ref().map(|r| r.items.as_slice()).unwrap_or(&[]),
            &config.tasks.bandit,
        )?),
        BackendKind::RemoteChat => None,
    };
    let cache = if config.cache.enabled {
        Some(ResponseCache::open(resolve_path(base, &config.cache.dir))?)
    } else {
        None
    };

    let agents: Vec<AgentHandle> = profiles
        .into_iter()
        .map(|profile| {
            let mut handle = match &policy {
                Some(policy) => AgentHandle::scripted(policy.clone()),
                None => {
                    let mut remote = RemoteConfig::new(
                        config.backend.model_id.clone(),
                        config.backend.temperature,
                    );
                    if let Some(url) = &config.backend.endpoint {
                        remote = remote.with_endpoint(url.clone());
                    }
                    AgentHandle::remote(remote)
                }
            };
            if let Some(cache) = &cache {
                handle = handle.with_cache(cache.clone());
            }
            handle.with_persona(profile)
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .context("building worker pool")?;
    let outputs: Vec<PersonaOutput> = pool.install(|| {
        agents
            .par_iter()
            .map(|agent| {
                run_persona(
                    agent,
                    config,
                    catalog.as_ref(),
                    bandit_spec.as_ref(),
                    reasoning_inputs.as_ref(),
                    inventory.as_deref(),
                )
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let manifest = RunManifest::new(config, selection.names());
    let mut record = RunRecord {
        manifest,
        catalog,
        adaptability: BTreeMap::new(),
        bandit: BTreeMap::new(),
        reasoning: BTreeMap::new(),
        safety: BTreeMap::new(),
    };
    for output in outputs {
        if let Some(grids) = output.adaptability {
            record.adaptability.insert(output.label.clone(), grids);
        }
        if let Some(traj) = output.bandit {
            record.bandit.insert(output.label.clone(), traj);
        }
        if let Some(results) = output.reasoning {
            record.reasoning.insert(output.label.clone(), results);
        }
        if let Some(outcome) = output.safety {
            record.safety.insert(output.label.clone(), outcome);
        }
    }
    Ok(record)
}

fn run_persona(
    agent: &AgentHandle,
    config: &RunConfig,
    catalog: Option<&PoiCatalog>,
    bandit_spec: Option<&BanditSpec>,
    reasoning: Option<&ReasoningInputs>,
    inventory: Option<&[Sd3Item]>,
) -> Result<PersonaOutput> {
    let label = agent.persona_label();
    let seed = config.master_seed;
    let mut output = PersonaOutput {
        label: label.clone(),
        adaptability: None,
        bandit: None,
        reasoning: None,
        safety: None,
    };
    if let Some(catalog) = catalog {
        let params = &config.tasks.adaptability;
        let started = Instant::now();
        let grids = run_adaptability(
            agent,
            catalog,
            params.periods,
            params.repeats,
            seed,
            params.max_reprompts,
        )
        .with_context(|| format!("adaptability task for {label}"))?;
        eprintln!(
            "[{label}] adaptability: {} grids in {:.2?}",
            grids.len(),
            started.elapsed()
        );
        output.adaptability = Some(grids);
    }
    if let Some(spec) = bandit_spec {
        let started = Instant::now();
        let traj = run_campaign(agent, spec, seed, config.tasks.bandit.max_reprompts)
            .with_context(|| format!("bandit task for {label}"))?;
        eprintln!(
            "[{label}] bandit: {} trials in {:.2?}",
            traj.records.len(),
            started.elapsed()
        );
        output.bandit = Some(traj);
    }
    if let Some(inputs) = reasoning {
        let started = Instant::now();
        let results = run_reasoning(agent, &inputs.items, &inputs.map, seed)
            .with_context(|| format!("reasoning task for {label}"))?;
        eprintln!(
            "[{label}] reasoning: {} items in {:.2?}",
            results.len(),
            started.elapsed()
        );
        output.reasoning = Some(results);
    }
    if let Some(items) = inventory {
        let started = Instant::now();
        let outcome = run_safety(agent, items, seed, config.tasks.safety.max_reasks)
            .with_context(|| format!("questionnaire task for {label}"))?;
        eprintln!(
            "[{label}] safety: {} items in {:.2?}",
            outcome.responses.len(),
            started.elapsed()
        );
        output.safety = Some(outcome);
    }
    Ok(output)
}

fn cmd_catalog_build(args: CatalogBuildArgs) -> Result<(), Failure> {
    let checkins = load_checkins(&args.checkins, args.timestamp_col, args.category_col)
        .with_context(|| format!("reading {}", args.checkins.display()))
        .map_err(Failure::Task)?;
    let catalog = build_catalog(&checkins, args.top_k).map_err(|e| Failure::Task(e.into()))?;
    save_catalog(&catalog, &args.out_file).map_err(|e| Failure::Task(e.into()))?;
    println!(
        "{} check-ins -> {} categories -> {}",
        checkins.len(),
        catalog.len(),
        args.out_file.display()
    );
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let selection = if args.tasks.is_empty() {
        TaskSelection::all()
    } else {
        TaskSelection::from_names(&args.tasks).map_err(Failure::Usage)?
    };
    let (mut config, base) = load_effective_config(&args.common)?;
    if let Some(kind) = &args.backend {
        config.backend.kind = match kind.to_ascii_lowercase().as_str() {
            "scripted" => BackendKind::Scripted,
            "remote" | "remote-chat" => BackendKind::RemoteChat,
            other => {
                return Err(Failure::Usage(format!(
                    "unknown backend '{other}' (expected scripted or remote)"
                )))
            }
        };
    }
    if let Some(policy) = &args.policy {
        config.backend.policy = policy.clone();
    }
    match config.backend.kind {
        BackendKind::Scripted => {
            validate_policy_spec(&config.backend.policy).map_err(Failure::Usage)?;
        }
        BackendKind::RemoteChat => {
            let explicit_endpoint = config.backend.endpoint.is_some()
                || std::env::var_os(crate::agent::ENDPOINT_VAR).is_some();
            if !args.live && !explicit_endpoint {
                return Err(Failure::Usage(
                    "remote backend sends live traffic; pass --live, or point \
                     backend.endpoint (or PERSONA_GAUGE_ENDPOINT) at a test server"
                        .into(),
                ));
            }
        }
    }

    let record = execute_run(&config, &base, &args.common.out, &selection)?;
    let run_dir = persist_run(&record, &args.common.out).map_err(|e| Failure::Task(e.into()))?;
    let baseline = load_configured_baseline(&config, &base)?;
    let summaries = summarize(&record, baseline.as_ref());
    let files =
        write_summaries(&record, &summaries, &run_dir).map_err(|e| Failure::Task(e.into()))?;
    println!("stored: {}", run_dir.display());
    for file in &files {
        println!("{}", file.display());
    }
    Ok(())
}

/// Finds the run directory for the stored-run subcommands: explicit path
/// first, then the config hash, then a lone directory under <out>/runs.
fn locate_stored_run(
    args: &StoredRunArgs,
) -> Result<(PathBuf, Option<(RunConfig, PathBuf)>), Failure> {
    let loaded = match &args.common.config {
        Some(_) => Some(load_effective_config(&args.common)?),
        None => None,
    };
    if let Some(dir) = &args.run_dir {
        return Ok((dir.clone(), loaded));
    }
    if let Some((config, _)) = &loaded {
        let dir = args.common.out.join("runs").join(config.config_hash());
        if !dir.join("manifest.json").is_file() {
            return Err(Failure::Usage(format!(
                "no stored run matches this configuration under {} (flag \
                 overrides change the hash); pass the run directory explicitly",
                args.common.out.join("runs").display()
            )));
        }
        return Ok((dir, loaded));
    }
    let runs_root = args.common.out.join("runs");
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&runs_root)
        .map_err(|_| {
            Failure::Usage(format!(
                "no stored runs under {}; pass a run directory or --config",
                runs_root.display()
            ))
        })?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    match dirs.len() {
        1 => Ok((dirs.remove(0), None)),
        0 => Err(Failure::Usage(format!(
            "no stored runs under {}; pass a run directory or --config",
            runs_root.display()
        ))),
        n => Err(Failure::Usage(format!(
            "{n} stored runs under {}; pass one explicitly",
            runs_root.display()
        ))),
    }
}

fn cmd_fit_ee(args: StoredRunArgs) -> Result<(), Failure> {
    let (run_dir, _) = locate_stored_run(&args)?;
    let mut record = load_run(&run_dir)
        .with_context(|| format!("loading run {}", run_dir.display()))
        .map_err(Failure::Task)?;
    if record.bandit.is_empty() {
        return Err(Failure::Task(anyhow!("stored run has no bandit trials to fit")));
    }
    record.adaptability.clear();
    record.reasoning.clear();
    record.safety.clear();
    let summaries = summarize(&record, None);
    write_summaries(&record, &summaries, &run_dir).map_err(|e| Failure::Task(e.into()))?;
    for (persona, fit) in &summaries.ee_fits {
        match fit {
            Some(f) => println!(
                "{persona}: w1={:+.4} w2={:+.4} events={} loglik={:.2}{}{}",
                f.w1,
                f.w2,
                f.n_events,
                f.log_likelihood,
                if f.converged { "" } else { " (unconverged)" },
                if f.ridge_used { " (ridge)" } else { "" },
            ),
            None => println!("{persona}: fit failed"),
        }
    }
    if let Some(dims) = &summaries.ee_dimensions {
        for axis in dims {
            let (first, second) = axis.axis.labels();
            println!(
                "{first}/{second}: exploitation {} exploration {}",
                fmt_split(&axis.exploitation, first, second),
                fmt_split(&axis.exploration, first, second),
            );
        }
    }
    Ok(())
}

fn fmt_split(split: &crate::ee::CoefficientSplit, first: char, second: char) -> String {
    match (split.first.proportion, split.second.proportion) {
        (Some(a), Some(b)) => format!("{first}={a:.3} {second}={b:.3}"),
        _ => format!(
            "{first} mean {:.3}, {second} mean {:.3} (not normalizable)",
            split.first.mean, split.second.mean
        ),
    }
}

fn cmd_score_sd3(args: StoredRunArgs) -> Result<(), Failure> {
    let (run_dir, loaded) = locate_stored_run(&args)?;
    let mut record = load_run(&run_dir)
        .with_context(|| format!("loading run {}", run_dir.display()))
        .map_err(Failure::Task)?;
    if record.safety.is_empty() {
        return Err(Failure::Task(anyhow!(
            "stored run has no questionnaire replies to score"
        )));
    }
    record.adaptability.clear();
    record.bandit.clear();
    record.reasoning.clear();
    let baseline = match &loaded {
        Some((config, base)) => load_configured_baseline(config, base)?,
        None => None,
    };
    let summaries = summarize(&record, baseline.as_ref());
    write_summaries(&record, &summaries, &run_dir).map_err(|e| Failure::Task(e.into()))?;
    for (persona, (scores, deltas)) in &summaries.safety {
        let delta_text = match deltas {
            Some(d) => format!(
                "  (vs baseline {:+.2} {:+.2} {:+.2})",
                d[0], d[1], d[2]
            ),
            None => String::new(),
        };
        println!(
            "{persona}: mach={:.2} narc={:.2} psych={:.2}{delta_text}",
            scores.machiavellianism, scores.narcissism, scores.psychopathy,
        );
    }
    Ok(())
}

fn cmd_report(args: StoredRunArgs) -> Result<(), Failure> {
    let (run_dir, loaded) = locate_stored_run(&args)?;
    let record = load_run(&run_dir)
        .with_context(|| format!("loading run {}", run_dir.display()))
        .map_err(Failure::Task)?;
    let baseline = match &loaded {
        Some((config, base)) => load_configured_baseline(config, base)?,
        None => None,
    };
    let bundle =
        emit_report(&record, baseline.as_ref(), &run_dir).map_err(|e| Failure::Task(e.into()))?;
    println!("report for run {}", record.manifest.config_hash);
    for file in &bundle.files {
        println!("{}", file.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Selftest: scripted, deterministic checks that never open the network.

struct Check {
    name: &'static str,
    run: fn() -> Result<String, String>,
}

const CHECKS: &[Check] = &[
    Check { name: "kalman-closed-form", run: check_kalman },
    Check { name: "normal-cdf", run: check_normal_cdf },
    Check { name: "probit-recovery", run: check_probit_recovery },
    Check { name: "ucb-separability", run: check_ucb_separability },
    Check { name: "adaptability-metrics", run: check_adaptability_metrics },
    Check { name: "mcq-oracle", run: check_mcq_oracle },
    Check { name: "sd3-constant", run: check_sd3_constant },
    Check { name: "artifact-roundtrip", run: check_artifact_roundtrip },
];

fn cmd_selftest() -> Result<(), Failure> {
    let mut failures = 0;
    for check in CHECKS {
        match (check.run)() {
            Ok(detail) => println!("check {}: ok ({detail})", check.name),
            Err(detail) => {
                failures += 1;
                println!("check {}: FAIL ({detail})", check.name);
            }
        }
    }
    if failures == 0 {
        println!("selftest: all {} checks passed", CHECKS.len());
        Ok(())
    } else {
        Err(Failure::Task(anyhow!("{failures} selftest check(s) failed")))
    }
}

/// Scratch directory for a selftest check; removed on drop.
struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Result<Self, String> {
        let dir = std::env::temp_dir().join(format!(
            "persona-gauge-selftest-{}-{tag}",
            std::process::id()
        ));
        std::fs::create_dir_all(&dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
        Ok(Self(dir))
    }

    fn path(&self) -> &Path {
        &self.0
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn check_kalman() -> Result<String, String> {
    use rand::{Rng, SeedableRng};
    let spec = BanditSpec::protocol_default();
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let mut state = init_posterior(&spec);
        let mut count = [0u32; 2];
        let mut sum = [0.0f64; 2];
        for _ in 0..25 {
            let arm = usize::from(rng.gen::<bool>());
            let reward: f64 = rng.gen_range(-30.0..30.0);
            state = kalman_update(&state, arm, reward, spec.tau[arm] * spec.tau[arm]);
            count[arm] += 1;
            sum[arm] += reward;
            for k in 0..2 {
                let prior_var = spec.tau0[k] * spec.tau0[k];
                let noise = spec.tau[k] * spec.tau[k];
                let var = 1.0 / (1.0 / prior_var + f64::from(count[k]) / noise);
                let mean = var * (spec.mu0[k] / prior_var + sum[k] / noise);
                worst = worst
                    .max((state.q[k] - mean).abs())
                    .max((state.var[k] - var).abs());
            }
        }
    }
    if worst <= 1e-9 {
        Ok(format!("200 sequences, max deviation {worst:.2e}"))
    } else {
        Err(format!("deviation {worst:.2e} exceeds 1e-9"))
    }
}

fn check_normal_cdf() -> Result<String, String> {
    // Reference values computed with 40-digit arithmetic and rounded once.
    let table = [
        (0.0, 0.5),
        (0.5, 0.6914624612740131),
        (1.0, 0.8413447460685429),
        (2.0, 0.9772498680518208),
        (3.0, 0.9986501019683699),
        (-1.0, 0.15865525393145705),
        (-2.5, 0.006209665325776135),
    ];
    let mut worst = 0.0f64;
    for (x, expected) in table {
        worst = worst.max((std_normal_cdf(x) - expected).abs());
    }
    for i in 0..100 {
        let x = -5.0 + 0.1 * f64::from(i);
        if std_normal_cdf(x) > std_normal_cdf(x + 0.1) {
            return Err(format!("not monotone near {x}"));
        }
        let sym = (std_normal_cdf(x) + std_normal_cdf(-x) - 1.0).abs();
        worst = worst.max(sym);
    }
    if worst <= 1e-12 {
        Ok(format!("max deviation {worst:.2e}"))
    } else {
        Err(format!("deviation {worst:.2e} exceeds 1e-12"))
    }
}

fn check_probit_recovery() -> Result<String, String> {
    let policy = Policy::Probit {
        w1: 0.5,
        w2: 0.3,
        prior: BeliefPrior::default(),
    };
    let agent = AgentHandle::scripted(policy);
    let mut spec = BanditSpec::protocol_default();
    spec.blocks = 600;
    let traj = run_campaign(&agent, &spec, 20260814, 0).map_err(|e| e.to_string())?;
    let fit = fit_probit(&choice_events(&traj)).map_err(|e| e.to_string())?;
    let (d1, d2) = ((fit.w1 - 0.5).abs(), (fit.w2 - 0.3).abs());
    if d1 <= 0.1 && d2 <= 0.1 {
        Ok(format!(
            "w=(0.5, 0.3) recovered as ({:.3}, {:.3}) from {} choices",
            fit.w1, fit.w2, fit.n_events
        ))
    } else {
        Err(format!(
            "fit ({:.3}, {:.3}) misses (0.5, 0.3) by ({d1:.3}, {d2:.3})",
            fit.w1, fit.w2
        ))
    }
}

fn check_ucb_separability() -> Result<String, String> {
    let policy = Policy::Ucb {
        beta: 1.0,
        prior: BeliefPrior::default(),
    };
    let agent = AgentHandle::scripted(policy);
    let mut spec = BanditSpec::protocol_default();
    spec.blocks = 60;
    let traj = run_campaign(&agent, &spec, 11, 0).map_err(|e| e.to_string())?;
    let fit = fit_probit(&choice_events(&traj)).map_err(|e| e.to_string())?;
    if fit.ridge_used && fit.w1 > 0.0 && fit.w2 > 0.0 {
        Ok(format!(
            "deterministic choices penalized as ({:.3}, {:.3})",
            fit.w1, fit.w2
        ))
    } else {
        Err(format!(
            "expected ridge fit with positive weights, got ({:.3}, {:.3}), ridge={}",
            fit.w1, fit.w2, fit.ridge_used
        ))
    }
}

fn check_adaptability_metrics() -> Result<String, String> {
    let fixture = AdaptTrajectory::from_grid(vec![
        vec![Some(0), Some(1), Some(0)],
        vec![Some(0), Some(2), Some(2)],
    ]);
    let flex = flexibility(&fixture).ok_or("fixture grid should be complete")?;
    let stab = stability(&fixture).ok_or("fixture grid should be complete")?;
    if flex != 2.0 / 3.0 || stab != 1.0 / 6.0 {
        return Err(format!("fixture gave ({flex}, {stab}), want (2/3, 1/6)"));
    }
    let catalog = PoiCatalog::new(
        ["Cafe", "Gym", "Office", "Park", "Bar", "Library"]
            .into_iter()
            .map(String::from)
            .collect(),
    )
    .map_err(|e| e.to_string())?;
    let agent = AgentHandle::scripted(Policy::CycleByBlock);
    let grids =
        run_adaptability(&agent, &catalog, 7, 2, 5, 0).map_err(|e| e.to_string())?;
    let summary = summarize_adaptability(&grids).map_err(|e| e.to_string())?;
    if summary.grids_full != 2 {
        return Err(format!("expected 2 full grids, got {}", summary.grids_full));
    }
    // One distinct pick per block column: flexibility 1, stability 6/7.
    if summary.flexibility.mean != 1.0 || summary.stability.mean != 6.0 / 7.0 {
        return Err(format!(
            "block-keyed agent gave ({}, {}), want (1, 6/7)",
            summary.flexibility.mean, summary.stability.mean
        ));
    }
    Ok("fixture and block-keyed agent both exact".into())
}

fn check_mcq_oracle() -> Result<String, String> {
    let scratch = Scratch::new("mcq")?;
    let (questions, mapping) =
        generate_demo_mmlu(scratch.path(), 8).map_err(|e| e.to_string())?;
    let map = load_category_map(&mapping).map_err(|e| e.to_string())?;
    let items = load_mmlu(&questions, 0).map_err(|e| e.to_string())?;
    let oracle = AgentHandle::scripted(Policy::McqKeyed {
        key: build_answer_key(&items),
        accuracy: 1.0,
    });
    let results = run_reasoning(&oracle, &items, &map, 3).map_err(|e| e.to_string())?;
    let by_category = accuracy_by_category(&results).map_err(|e| e.to_string())?;
    for (category, acc) in &by_category {
        if acc.accuracy != 1.0 {
            return Err(format!("oracle scored {} on {}", acc.accuracy, category.label()));
        }
    }
    let constant = AgentHandle::scripted(Policy::McqConstant { letter: 'A' });
    let results = run_reasoning(&constant, &items, &map, 3).map_err(|e| e.to_string())?;
    let correct = results.iter().filter(|r| r.correct).count();
    let overall = correct as f64 / results.len() as f64;
    if overall != 0.25 {
        return Err(format!(
            "constant-letter agent scored {overall} on the balanced set, want 0.25"
        ));
    }
    Ok(format!(
        "oracle 1.0 in all {} categories, constant letter 0.25 on {} items",
        by_category.len(),
        results.len()
    ))
}

fn check_sd3_constant() -> Result<String, String> {
    let scratch = Scratch::new("sd3")?;
    let path = scratch.path().join("inventory.txt");
    std::fs::write(&path, include_str!("../data/sd3_inventory.txt"))
        .map_err(|e| e.to_string())?;
    let items = load_inventory(&path).map_err(|e| e.to_string())?;
    let agent = AgentHandle::scripted(Policy::LikertConstant { value: 3 });
    let outcome = run_safety(&agent, &items, 9, 0).map_err(|e| e.to_string())?;
    // 3 is the reversal fixed point, so every subscale must average 3.
    for subscale in Subscale::ALL {
        if outcome.scores.get(subscale) != 3.0 {
            return Err(format!(
                "{} scored {}, want exactly 3",
                subscale.label(),
                outcome.scores.get(subscale)
            ));
        }
    }
    Ok("uniform mid-scale replies score exactly 3 on every subscale".into())
}

fn check_artifact_roundtrip() -> Result<String, String> {
    let scratch = Scratch::new("artifacts")?;
    let agent = AgentHandle::scripted(Policy::Probit {
        w1: 0.4,
        w2: 0.2,
        prior: BeliefPrior::default(),
    });
    let mut spec = BanditSpec::protocol_default();
    spec.blocks = 5;
    let traj = run_campaign(&agent, &spec, 13, 0).map_err(|e| e.to_string())?;
    let config = RunConfig::default();
    let mut record = RunRecord {
        manifest: RunManifest::new(&config, vec!["bandit".into()]),
        catalog: None,
        adaptability: BTreeMap::new(),
        bandit: BTreeMap::new(),
        reasoning: BTreeMap::new(),
        safety: BTreeMap::new(),
    };
    record.bandit.insert("none".into(), traj);

    let run_dir = persist_run(&record, scratch.path()).map_err(|e| e.to_string())?;
    let reloaded = load_run(&run_dir).map_err(|e| e.to_string())?;
    if reloaded != record {
        return Err("reloaded run differs from what was stored".into());
    }
    let summaries = summarize(&record, None);
    let first = write_summaries(&record, &summaries, &run_dir).map_err(|e| e.to_string())?;
    let before: Vec<Vec<u8>> = first
        .iter()
        .map(|p| std::fs::read(p).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let second = write_summaries(&record, &summaries, &run_dir).map_err(|e| e.to_string())?;
    if first != second {
        return Err("summary file lists differ between writes".into());
    }
    for (path, old) in second.iter().zip(&before) {
        let new = std::fs::read(path).map_err(|e| e.to_string())?;
        if &new != old {
            return Err(format!("{} changed between writes", path.display()));
        }
    }
    Ok(format!(
        "run round-trips losslessly; summary files byte-stable ({})",
        first.len()
    ))
}
