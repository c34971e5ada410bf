//! End-to-end acceptance checks: one test per shipped guarantee, each
//! printing a single `criterion N pass/fail` verdict line (visible with
//! `cargo test --test acceptance -- --nocapture`). Tolerances and time
//! budgets are asserted inside the tests themselves.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use persona_gauge::adaptability::{
    build_catalog, flexibility, load_catalog, load_checkins, run_adaptability, stability,
    AdaptTrajectory, TimeBlock,
};
use persona_gauge::agent::policy::BeliefPrior;
use persona_gauge::agent::{AgentHandle, ChatMessage, MockChatServer, MockReply, Policy};
use persona_gauge::bandit::{run_campaign, sample_block, pull, BanditSpec};
use persona_gauge::cli::{execute_run, TaskSelection};
use persona_gauge::config::{BackendKind, RunConfig};
use persona_gauge::ee::{
    choice_events, dimension_proportions, fit_probit, init_posterior, kalman_update, regressors,
    std_normal_cdf, ChoiceEvent, ProbitFit,
};
use persona_gauge::mbti::{Axis, MbtiCode};
use persona_gauge::prompts::{parse_task_query, TaskQuery};
use persona_gauge::reasoning::{
    accuracy_by_category, build_answer_key, generate_demo_mmlu, load_category_map, load_mmlu,
    run_reasoning,
};
use persona_gauge::report::emit_report;
use persona_gauge::safety::{load_inventory, reverse_value, run_safety, score_sd3};

fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn verdict(criterion: usize, pass: bool, detail: &str) {
    let word = if pass { "pass" } else { "FAIL" };
    println!("criterion {criterion:>2} {word}: {detail}");
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn within_budget(criterion: usize, elapsed: Duration, budget: Duration) {
    assert!(
        elapsed <= budget,
        "criterion {criterion} exceeded its time budget: {elapsed:.2?} > {budget:.2?}"
    );
}

#[test]
fn criterion_01_kalman_matches_conjugate_closed_form() {
    let started = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let spec = BanditSpec {
            mu0: [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)],
            tau0: [rng.gen_range(0.5..20.0), rng.gen_range(0.5..20.0)],
            tau: [rng.gen_range(0.5..20.0), rng.gen_range(0.5..20.0)],
            trials_per_block: 1,
            blocks: 1,
        };
        let mut state = init_posterior(&spec);
        let mut count = [0u32; 2];
        let mut sum = [0.0f64; 2];
        let steps = rng.gen_range(1..=40);
        for _ in 0..steps {
            let arm = usize::from(rng.gen::<bool>());
            let reward: f64 = rng.gen_range(-50.0..50.0);
            state = kalman_update(&state, arm, reward, spec.tau[arm] * spec.tau[arm]);
            count[arm] += 1;
            sum[arm] += reward;
            for k in 0..2 {
                let prior_var = spec.tau0[k] * spec.tau0[k];
                let noise = spec.tau[k] * spec.tau[k];
                let var = 1.0 / (1.0 / prior_var + f64::from(count[k]) / noise);
                let mean = var * (spec.mu0[k] / prior_var + sum[k] / noise);
                // relative error, floored at unit magnitude near zero
                let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
                worst = worst.max(rel(state.q[k], mean)).max(rel(state.var[k], var));
            }
        }
    }
    let elapsed = started.elapsed();
    verdict(
        1,
        worst <= 1e-9,
        &format!(
            "1000 random update sequences match the conjugate closed form \
             (worst relative error {worst:.2e}, {elapsed:.2?})"
        ),
    );
    within_budget(1, elapsed, Duration::from_secs(1));
}

#[test]
fn criterion_02_normal_cdf_matches_checked_in_oracle() {
    let started = Instant::now();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/std_normal_cdf.tsv");
    let text = std::fs::read_to_string(&fixture).expect("fixture present");
    let mut points = 0usize;
    let mut worst = 0.0f64;
    for line in text.lines() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let (x, expected) = line.split_once('\t').expect("x<TAB>cdf rows");
        let x: f64 = x.parse().unwrap();
        let expected: f64 = expected.parse().unwrap();
        assert!(x.abs() <= 8.0);
        worst = worst.max((std_normal_cdf(x) - expected).abs());
        points += 1;
    }
    let elapsed = started.elapsed();
    verdict(
        2,
        points == 10_000 && worst <= 1e-12,
        &format!(
            "{points} tabulated points in |x| <= 8 reproduced \
             (worst deviation {worst:.2e}, {elapsed:.2?})"
        ),
    );
    within_budget(2, elapsed, Duration::from_secs(1));
}

/// Simulates the belief recursion directly (no prompt layer) and draws
/// choices from the probit generator, yielding one event per trial.
fn synthesize_events(w1: f64, w2: f64, blocks: usize, seed: u64) -> Vec<ChoiceEvent> {
    let spec = BanditSpec::protocol_default();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut events = Vec::with_capacity(blocks * spec.trials_per_block);
    for _ in 0..blocks {
        let instance = sample_block(&spec, &mut rng);
        let mut state = init_posterior(&spec);
        for _ in 0..spec.trials_per_block {
            let r = regressors(&state);
            let p0 = std_normal_cdf(w1 * r.v + w2 * r.ru);
            let arm = usize::from(rng.gen::<f64>() >= p0);
            events.push(ChoiceEvent {
                v: r.v,
                ru: r.ru,
                chose_arm0: arm == 0,
            });
            let reward = pull(&instance, arm, &spec, &mut rng);
            state = kalman_update(&state, arm, reward, spec.tau[arm] * spec.tau[arm]);
        }
    }
    events
}

#[test]
fn criterion_03_probit_fit_recovers_generator_weights() {
    let started = Instant::now();
    let (w1, w2) = (0.5, 0.3);
    let mut hits = 0;
    let mut worst_miss = 0.0f64;
    for seed in 0..20u64 {
        let events = synthesize_events(w1, w2, 1050, 1000 + seed);
        assert!(events.len() >= 10_000);
        let fit = fit_probit(&events).expect("fit succeeds");
        let miss = (fit.w1 - w1).abs().max((fit.w2 - w2).abs());
        if miss <= 0.05 {
            hits += 1;
        }
        worst_miss = worst_miss.max(miss);
    }
    let null_events = synthesize_events(0.0, 0.0, 1050, 77);
    let null_fit = fit_probit(&null_events).expect("null fit succeeds");
    let null_ok = null_fit.w1.abs() <= 0.05 && null_fit.w2.abs() <= 0.05;
    let elapsed = started.elapsed();
    verdict(
        3,
        hits >= 19 && null_ok,
        &format!(
            "w=(0.5, 0.3) recovered within ±0.05 in {hits}/20 seeds \
             (worst miss {worst_miss:.4}); null generator fitted as \
             ({:.4}, {:.4}) ({elapsed:.2?})",
            null_fit.w1, null_fit.w2
        ),
    );
    within_budget(3, elapsed, Duration::from_secs(30));
}

#[test]
fn criterion_04_exploration_split_separates_e_and_i_groups() {
    let started = Instant::now();
    let mut exploration_wins = 0;
    let mut exploitation_centered = 0;
    let runs = 20u64;
    for run in 0..runs {
        let mut fits: BTreeMap<MbtiCode, ProbitFit> = BTreeMap::new();
        for code in MbtiCode::all() {
            let w2 = if Axis::EI.in_first_group(&code) { 0.4 } else { 0.2 };
            let agent = AgentHandle::scripted(Policy::Probit {
                w1: 0.4,
                w2,
                prior: BeliefPrior::default(),
            });
            // bare agent; the label is irrelevant because fits are keyed here
            let spec = BanditSpec::protocol_default();
            let traj = run_campaign(&agent, &spec, 9000 + run * 100 + code_index(code), 0)
                .expect("campaign runs");
            let fit = fit_probit(&choice_events(&traj)).expect("fit succeeds");
            fits.insert(code, fit);
        }
        let axes = dimension_proportions(&fits).expect("all sixteen fits present");
        let ei = axes
            .iter()
            .find(|a| a.axis == Axis::EI)
            .expect("extraversion axis present");
        let explore_e = ei.exploration.first.proportion.expect("normalizable");
        let exploit_e = ei.exploitation.first.proportion.expect("normalizable");
        if explore_e > 0.5 {
            exploration_wins += 1;
        }
        if (exploit_e - 0.5).abs() <= 0.05 {
            exploitation_centered += 1;
        }
    }
    let elapsed = started.elapsed();
    verdict(
        4,
        exploration_wins >= 19 && exploitation_centered >= 19,
        &format!(
            "E-group exploration share exceeded 0.5 in {exploration_wins}/{runs} runs; \
             exploitation share within 0.5±0.05 in {exploitation_centered}/{runs} ({elapsed:.2?})"
        ),
    );
    within_budget(4, elapsed, Duration::from_secs(300));
}

fn code_index(code: MbtiCode) -> u64 {
    MbtiCode::all()
        .iter()
        .position(|c| *c == code)
        .expect("known code") as u64
}

#[test]
fn criterion_05_adaptability_metrics_exact_and_bounded() {
    let started = Instant::now();
    // categories relabeled A=0, B=1, C=2; counted by hand
    let fixture = AdaptTrajectory::from_grid(vec![
        vec![Some(0), Some(1), Some(0)],
        vec![Some(0), Some(2), Some(2)],
    ]);
    let flex = flexibility(&fixture).unwrap();
    let stab = stability(&fixture).unwrap();
    let exact = flex == 2.0 / 3.0 && stab == 1.0 / 6.0;

    let mut rng = ChaCha20Rng::seed_from_u64(505);
    let mut bounds_hold = true;
    for _ in 0..10_000 {
        let periods = rng.gen_range(1..=8usize);
        let blocks = rng.gen_range(1..=6usize);
        let labels = rng.gen_range(1..=9usize);
        let grid: Vec<Vec<Option<usize>>> = (0..periods)
            .map(|_| (0..blocks).map(|_| Some(rng.gen_range(0..labels))).collect())
            .collect();
        let traj = AdaptTrajectory::from_grid(grid);
        let f = flexibility(&traj).unwrap();
        let s = stability(&traj).unwrap();
        let lo = 1.0 / blocks as f64;
        let hi = 1.0 - 1.0 / periods as f64;
        if !(f >= lo && f <= 1.0 && s >= 0.0 && s <= hi) {
            bounds_hold = false;
            break;
        }
    }
    let elapsed = started.elapsed();
    verdict(
        5,
        exact && bounds_hold,
        &format!(
            "hand-counted grid gives exactly (2/3, 1/6); bounds held on 10000 \
             random grids ({elapsed:.2?})"
        ),
    );
    within_budget(5, elapsed, Duration::from_secs(5));
}

#[test]
fn criterion_06_catalog_matches_brute_force_union() {
    let stream = data_path("demo_checkins.tsv");
    let checkins = load_checkins(&stream, 7, 3).expect("demo stream loads");

    // independent brute force: count per block, sort, take 2, union in
    // block order keeping first appearances
    let mut counts: BTreeMap<TimeBlock, BTreeMap<&str, usize>> = BTreeMap::new();
    for (block, category) in &checkins {
        *counts
            .entry(*block)
            .or_default()
            .entry(category.as_str())
            .or_insert(0) += 1;
    }
    let mut expected: Vec<&str> = Vec::new();
    for block in TimeBlock::ALL {
        let mut ranked: Vec<(&str, usize)> = counts
            .get(&block)
            .map(|m| m.iter().map(|(k, v)| (*k, *v)).collect())
            .unwrap_or_default();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        for (name, _) in ranked.into_iter().take(2) {
            if !expected.contains(&name) {
                expected.push(name);
            }
        }
    }
    let built = build_catalog(&checkins, 2).expect("catalog builds");
    let built_names: Vec<&str> = built.categories().iter().map(String::as_str).collect();
    let brute_force_equal = built_names == expected;

    // the per-block frequencies were designed by hand; pin the result too
    let hand_counted = [
        "Coffee Shop",
        "Bakery",
        "Diner",
        "Office",
        "Bookstore",
        "Bar",
        "Restaurant",
        "Home",
        "Night Market",
    ];
    let hand_equal = built_names == hand_counted;

    // the shipped catalog is the top-3 build of the same stream
    let shipped = load_catalog(&data_path("demo_poi_catalog.txt")).unwrap();
    let shipped_equal = build_catalog(&checkins, 3).unwrap() == shipped;

    verdict(
        6,
        brute_force_equal && hand_equal && shipped_equal,
        &format!(
            "top-2 catalog equals the brute-force union of the hand-counted \
             stream ({} categories); shipped catalog regenerates byte-for-byte",
            built.len()
        ),
    );

    // informational only: a real check-in dump is not redistributable here
    match std::env::var("PERSONA_GAUGE_CHECKINS_TSV") {
        Ok(path) if !path.is_empty() => {
            let real = load_checkins(Path::new(&path), 7, 3).expect("real stream loads");
            let catalog = build_catalog(&real, 30).expect("catalog builds");
            println!(
                "criterion  6 info: real stream yields {} categories \
                 (published pipeline reported 47)",
                catalog.len()
            );
        }
        _ => println!(
            "criterion  6 info: set PERSONA_GAUGE_CHECKINS_TSV to reproduce \
             the full-dataset catalog size (informational)"
        ),
    }
}

#[test]
fn criterion_07_reasoning_oracle_and_constant_agent() {
    let started = Instant::now();
    let root = tempfile::tempdir().unwrap();

    // 8 subjects x 25 items = 200-item subsample; oracle must be perfect
    let (questions, mapping) = generate_demo_mmlu(&root.path().join("sub"), 25).unwrap();
    let map = load_category_map(&mapping).unwrap();
    let items = load_mmlu(&questions, 0).unwrap();
    assert_eq!(items.len(), 200);
    let oracle = AgentHandle::scripted(Policy::McqKeyed {
        key: build_answer_key(&items),
        accuracy: 1.0,
    });
    let results = run_reasoning(&oracle, &items, &map, 71).unwrap();
    let by_category = accuracy_by_category(&results).unwrap();
    let oracle_perfect =
        by_category.len() == 4 && by_category.values().all(|a| a.accuracy == 1.0);

    // 8 subjects x 128 items = 1024 balanced keys; constant letter ~ 1/4
    let (questions, mapping) = generate_demo_mmlu(&root.path().join("big"), 128).unwrap();
    let map = load_category_map(&mapping).unwrap();
    let items = load_mmlu(&questions, 0).unwrap();
    assert!(items.len() >= 1000);
    let constant = AgentHandle::scripted(Policy::McqConstant { letter: 'C' });
    let results = run_reasoning(&constant, &items, &map, 71).unwrap();
    let rate = results.iter().filter(|r| r.correct).count() as f64 / results.len() as f64;
    let constant_ok = (rate - 0.25).abs() <= 0.05;

    let elapsed = started.elapsed();
    verdict(
        7,
        oracle_perfect && constant_ok,
        &format!(
            "oracle scored 1.0 in all 4 categories on 200 items; constant \
             letter scored {rate:.4} on {} balanced items ({elapsed:.2?})",
            results.len()
        ),
    );
    within_budget(7, elapsed, Duration::from_secs(30));
}

#[test]
fn criterion_08_sd3_scoring_exact() {
    let items = load_inventory(&data_path("sd3_inventory.txt")).unwrap();

    let all_threes: BTreeMap<usize, u8> = items.iter().map(|i| (i.index, 3)).collect();
    let scores = score_sd3(&items, &all_threes).unwrap();
    let mid_exact = scores.machiavellianism == 3.0
        && scores.narcissism == 3.0
        && scores.psychopathy == 3.0;

    // keyed fixture: value(i) = ((3*i) mod 5) + 1; means computed by hand
    // with exact rational arithmetic
    let keyed: BTreeMap<usize, u8> = items
        .iter()
        .map(|i| (i.index, ((3 * i.index) % 5 + 1) as u8))
        .collect();
    let scores = score_sd3(&items, &keyed).unwrap();
    let keyed_exact = (scores.machiavellianism - 29.0 / 9.0).abs() <= 1e-12
        && (scores.narcissism - 31.0 / 9.0).abs() <= 1e-12
        && (scores.psychopathy - 11.0 / 3.0).abs() <= 1e-12;

    let involution = (1..=5u8).all(|v| reverse_value(reverse_value(v)) == v)
        && (1..=5u8).map(reverse_value).eq((1..=5u8).rev());

    verdict(
        8,
        mid_exact && keyed_exact && involution,
        &format!(
            "all-3 replies score (3, 3, 3); keyed fixture matches hand-computed \
             means (29/9, 31/9, 11/3) as ({:.6}, {:.6}, {:.6}); reversal is an involution",
            scores.machiavellianism, scores.narcissism, scores.psychopathy
        ),
    );
}

/// A deterministic stand-in model: answers every task type in the exact
/// format the prompt requests, regardless of request seed.
fn scripted_mock_reply(messages: &[(String, String)]) -> String {
    let chat: Vec<ChatMessage> = messages
        .iter()
        .map(|(role, content)| match role.as_str() {
            "system" => ChatMessage::system(content.clone()),
            "assistant" => ChatMessage::assistant(content.clone()),
            _ => ChatMessage::user(content.clone()),
        })
        .collect();
    let task = chat.last().map(|m| m.content.clone()).unwrap_or_default();
    let policy = match parse_task_query(&task) {
        Some(TaskQuery::Poi { .. }) => Policy::CycleByBlock,
        Some(TaskQuery::Bandit { .. }) => Policy::Ucb {
            beta: 1.0,
            prior: BeliefPrior::default(),
        },
        Some(TaskQuery::Mcq { .. }) => Policy::McqConstant { letter: 'B' },
        Some(TaskQuery::Likert { .. }) => Policy::LikertConstant { value: 2 },
        None => Policy::ConstantText {
            text: "pass".into(),
        },
    };
    policy.respond(&chat, 0)
}

#[test]
fn criterion_09_deterministic_runs_and_mock_replay_report() {
    let started = Instant::now();

    // part 1: the binary twice with the same config -> identical CSVs
    let bin = env!("CARGO_BIN_EXE_persona-gauge");
    let config = data_path("default_config.toml");
    let scratch = tempfile::tempdir().unwrap();
    let mut csvs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for tag in ["first", "second"] {
        let out = scratch.path().join(tag);
        let status = std::process::Command::new(bin)
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .stdout(std::process::Stdio::null())
            .stderr(std::process::Stdio::null())
            .status()
            .expect("binary runs");
        assert!(status.success(), "run exited with {status}");
        let runs: Vec<PathBuf> = std::fs::read_dir(out.join("runs"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        assert_eq!(runs.len(), 1);
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(runs[0].join("summary"))
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    std::fs::read(&p).unwrap(),
                )
            })
            .collect();
        files.sort_by(|a, b| a.0.cmp(&b.0));
        csvs.push(files);
    }
    let names: Vec<&String> = csvs[0].iter().map(|(n, _)| n).collect();
    let identical = csvs[0] == csvs[1];

    // part 2: a mock chat endpoint drives a remote run to a full report
    let server = MockChatServer::start(|_, req| MockReply::Chat(scripted_mock_reply(&req.messages)));
    std::env::set_var("PERSONA_GAUGE_API_KEY", "acceptance-test-key");
    let mut config = RunConfig {
        master_seed: 7,
        personas: vec!["ENFJ".parse().unwrap(), "ISTJ".parse().unwrap()],
        personas_dir: data_path("personas").display().to_string(),
        ..RunConfig::default()
    };
    config.backend.kind = BackendKind::RemoteChat;
    config.backend.endpoint = Some(server.url().to_string());
    config.tasks.adaptability.catalog = data_path("demo_poi_catalog.txt").display().to_string();
    config.tasks.adaptability.periods = 3;
    config.tasks.adaptability.repeats = 2;
    config.tasks.bandit.blocks = 6;
    config.tasks.reasoning.mmlu_dir = "demo".into();
    config.tasks.reasoning.per_subject_cap = 4;
    config.tasks.safety.inventory = data_path("sd3_inventory.txt").display().to_string();
    let out_root = scratch.path().join("mock");
    let record = execute_run(&config, Path::new("."), &out_root, &TaskSelection::all())
        .expect("mock-backed run completes");
    let run_dir = persona_gauge::report::persist_run(&record, &out_root).unwrap();
    let bundle = emit_report(&record, None, &run_dir).unwrap();
    let mut missing: Vec<String> = bundle
        .files
        .iter()
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    for name in [
        "adaptability_ENFJ_r0.svg",
        "adaptability_ENFJ_r1.svg",
        "adaptability_ISTJ_r0.svg",
        "adaptability_ISTJ_r1.svg",
        "adaptability_metrics.svg",
        "reasoning_accuracy.svg",
        "sd3_ENFJ.svg",
        "sd3_ISTJ.svg",
    ] {
        let p = run_dir.join("charts").join(name);
        if !p.is_file() {
            missing.push(p.display().to_string());
        }
    }
    let requests = server.request_count();
    let elapsed = started.elapsed();
    verdict(
        9,
        identical && missing.is_empty() && requests > 0,
        &format!(
            "two seeded runs produced identical {:?}; mock endpoint answered \
             {requests} requests into a complete report bundle ({} files, \
             missing: {missing:?}) ({elapsed:.2?})",
            names,
            bundle.files.len()
        ),
    );
    within_budget(9, elapsed, Duration::from_secs(600));
}

#[test]
fn criterion_10_optional_live_smoke_check() {
    if std::env::var("PERSONA_GAUGE_LIVE").as_deref() != Ok("1") {
        println!(
            "criterion 10 skip: live check disabled (set PERSONA_GAUGE_LIVE=1 \
             with credentials to enable; never gates the suite)"
        );
        return;
    }
    // reduced live protocol: 2 personas, 10 bandit blocks, ~100 questions,
    // the full questionnaire; measures the parseable-reply rate
    let catalog = load_catalog(&data_path("demo_poi_catalog.txt")).unwrap();
    let inventory = load_inventory(&data_path("sd3_inventory.txt")).unwrap();
    let root = tempfile::tempdir().unwrap();
    let (questions, mapping) = generate_demo_mmlu(root.path(), 13).unwrap();
    let map = load_category_map(&mapping).unwrap();
    let items: Vec<_> = load_mmlu(&questions, 0).unwrap().into_iter().take(100).collect();

    let personas = persona_gauge::persona::load_persona_set(
        &data_path("personas"),
        &["ENFJ".parse().unwrap(), "ISTJ".parse().unwrap()],
    )
    .unwrap();
    let mut total = 0usize;
    let mut unusable = 0usize;
    for profile in personas {
        let remote = persona_gauge::agent::RemoteConfig::new("gpt-3.5-turbo", 1.0);
        let agent = AgentHandle::remote(remote).with_persona(profile);
        let mut spec = BanditSpec::protocol_default();
        spec.blocks = 10;
        let traj = run_campaign(&agent, &spec, 42, 3).expect("live bandit");
        total += traj.records.len();
        unusable += traj.records.iter().filter(|r| r.flagged).count();
        let grids = run_adaptability(&agent, &catalog, 3, 1, 42, 3).expect("live grids");
        for grid in &grids {
            for row in &grid.grid {
                total += row.len();
                unusable += row.iter().filter(|c| c.is_none()).count();
            }
        }
        let results = run_reasoning(&agent, &items, &map, 42).expect("live reasoning");
        total += results.len();
        unusable += results.iter().filter(|r| r.extracted.is_none()).count();
        let outcome = run_safety(&agent, &inventory, 42, 3).expect("live questionnaire");
        total += outcome.responses.len();
    }
    let rate = 1.0 - unusable as f64 / total as f64;
    verdict(
        10,
        rate >= 0.95,
        &format!("live replies parseable at rate {rate:.3} over {total} queries"),
    );
}
