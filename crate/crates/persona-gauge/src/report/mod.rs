//! Run persistence and report emission.
//!
//! A run writes `runs/<config_hash>/` holding `manifest.json`, gzipped
//! JSON-lines raw artifacts, and uncompressed summary CSVs; `report`
//! regenerates every summary and chart from the raw artifacts alone, so
//! raw files are the durable record and everything else is derived.

pub mod charts;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adaptability::{summarize_adaptability, AdaptSummary, AdaptTrajectory, PoiCatalog};
use crate::bandit::{BanditSpec, BanditTrajectory, ChoiceRecord};
use crate::config::{RunManifest, MANIFEST_FORMAT_VERSION};
use crate::ee::{choice_events, dimension_proportions, fit_probit, AxisSummary, ProbitFit};
use crate::mbti::{parse_mbti, MbtiCode};
use crate::reasoning::{accuracy_by_category, CategoryAccuracy, ItemResult, SubjectCategory};
use crate::safety::{compare_to_baseline, ItemResponse, Sd3Scores, SafetyOutcome, Subscale};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {reason}")]
    Corrupt {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("run format {found} unsupported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("nothing to chart: empty persona set")]
    EmptyReport,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Everything one run produced, keyed by persona label.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub manifest: RunManifest,
    pub catalog: Option<PoiCatalog>,
    pub adaptability: BTreeMap<String, Vec<AdaptTrajectory>>,
    pub bandit: BTreeMap<String, BanditTrajectory>,
    pub reasoning: BTreeMap<String, Vec<ItemResult>>,
    pub safety: BTreeMap<String, SafetyOutcome>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum AdaptLine {
    Catalog { categories: Vec<String> },
    Grid {
        persona: String,
        repeat: usize,
        trajectory: AdaptTrajectory,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum BanditLine {
    Header {
        persona: String,
        spec: BanditSpec,
        block_seeds: Vec<u64>,
    },
    Trial {
        persona: String,
        record: ChoiceRecord,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ReasoningLine {
    Item { persona: String, result: ItemResult },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SafetyLine {
    Response {
        persona: String,
        response: ItemResponse,
    },
    Scores {
        persona: String,
        scores: Sd3Scores,
    },
}

fn write_jsonl_gz<T: Serialize>(path: &Path, lines: &[T]) -> Result<(), ReportError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    // fixed header fields keep re-persists byte-identical
    let mut gz = flate2::GzBuilder::new()
        .mtime(0)
        .write(file, flate2::Compression::default());
    for line in lines {
        let text = serde_json::to_string(line).expect("serializable line");
        gz.write_all(text.as_bytes()).map_err(io_err(path))?;
        gz.write_all(b"\n").map_err(io_err(path))?;
    }
    gz.finish().map_err(io_err(path))?;
    Ok(())
}

fn read_jsonl_gz<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ReportError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let reader = std::io::BufReader::new(flate2::read::GzDecoder::new(file));
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str(&line).map_err(|e| ReportError::Corrupt {
            path: path.display().to_string(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(parsed);
    }
    Ok(out)
}

/// Writes `manifest.json` and the raw artifacts under
/// `<out_root>/runs/<config_hash>/`, returning the run directory.
/// Persisting the same record twice produces byte-identical files.
pub fn persist_run(record: &RunRecord, out_root: &Path) -> Result<PathBuf, ReportError> {
    let run_dir = out_root.join("runs").join(&record.manifest.config_hash);
    let raw_dir = run_dir.join("raw");
    std::fs::create_dir_all(&raw_dir).map_err(io_err(&raw_dir))?;

    let manifest_path = run_dir.join("manifest.json");
    let manifest_json =
        serde_json::to_string_pretty(&record.manifest).expect("serializable manifest");
    std::fs::write(&manifest_path, manifest_json + "\n").map_err(io_err(&manifest_path))?;

    if record.catalog.is_some() || !record.adaptability.is_empty() {
        let mut lines = Vec::new();
        if let Some(catalog) = &record.catalog {
            lines.push(AdaptLine::Catalog {
                categories: catalog.categories().to_vec(),
            });
        }
        for (persona, trajs) in &record.adaptability {
            for (repeat, trajectory) in trajs.iter().enumerate() {
                lines.push(AdaptLine::Grid {
                    persona: persona.clone(),
                    repeat,
                    trajectory: trajectory.clone(),
                });
            }
        }
        write_jsonl_gz(&raw_dir.join("adaptability.jsonl.gz"), &lines)?;
    }

    if !record.bandit.is_empty() {
        let mut lines = Vec::new();
        for (persona, traj) in &record.bandit {
            lines.push(BanditLine::Header {
                persona: persona.clone(),
                spec: traj.spec,
                block_seeds: traj.block_seeds.clone(),
            });
            for record in &traj.records {
                lines.push(BanditLine::Trial {
                    persona: persona.clone(),
                    record: *record,
                });
            }
        }
        write_jsonl_gz(&raw_dir.join("bandit.jsonl.gz"), &lines)?;
    }

    if !record.reasoning.is_empty() {
        let mut lines = Vec::new();
        for (persona, results) in &record.reasoning {
            for result in results {
                lines.push(ReasoningLine::Item {
                    persona: persona.clone(),
                    result: result.clone(),
                });
            }
        }
        write_jsonl_gz(&raw_dir.join("reasoning.jsonl.gz"), &lines)?;
    }

    if !record.safety.is_empty() {
        let mut lines = Vec::new();
        for (persona, outcome) in &record.safety {
            for response in &outcome.responses {
                lines.push(SafetyLine::Response {
                    persona: persona.clone(),
                    response: response.clone(),
                });
            }
            lines.push(SafetyLine::Scores {
                persona: persona.clone(),
                scores: outcome.scores,
            });
        }
        write_jsonl_gz(&raw_dir.join("safety.jsonl.gz"), &lines)?;
    }

    Ok(run_dir)
}

/// Reads a run directory back into a `RunRecord`.
pub fn load_run(run_dir: &Path) -> Result<RunRecord, ReportError> {
    let manifest_path = run_dir.join("manifest.json");
    let manifest_text = std::fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: RunManifest =
        serde_json::from_str(&manifest_text).map_err(|e| ReportError::Corrupt {
            path: manifest_path.display().to_string(),
            line: 1,
            reason: e.to_string(),
        })?;
    if manifest.format_version != MANIFEST_FORMAT_VERSION {
        return Err(ReportError::VersionMismatch {
            found: manifest.format_version,
            expected: MANIFEST_FORMAT_VERSION,
        });
    }
    let mut record = RunRecord {
        manifest,
        catalog: None,
        adaptability: BTreeMap::new(),
        bandit: BTreeMap::new(),
        reasoning: BTreeMap::new(),
        safety: BTreeMap::new(),
    };
    let raw_dir = run_dir.join("raw");

    let adapt_path = raw_dir.join("adaptability.jsonl.gz");
    if adapt_path.exists() {
        for line in read_jsonl_gz::<AdaptLine>(&adapt_path)? {
            match line {
                AdaptLine::Catalog { categories } => {
                    record.catalog = Some(PoiCatalog::new(categories).map_err(|e| {
                        ReportError::Corrupt {
                            path: adapt_path.display().to_string(),
                            line: 1,
                            reason: e.to_string(),
                        }
                    })?);
                }
                AdaptLine::Grid {
                    persona,
                    repeat,
                    trajectory,
                } => {
                    let slot = record.adaptability.entry(persona).or_default();
                    if slot.len() != repeat {
                        return Err(ReportError::Corrupt {
                            path: adapt_path.display().to_string(),
                            line: 0,
                            reason: format!("repeat {repeat} out of order"),
                        });
                    }
                    slot.push(trajectory);
                }
            }
        }
    }

    let bandit_path = raw_dir.join("bandit.jsonl.gz");
    if bandit_path.exists() {
        for line in read_jsonl_gz::<BanditLine>(&bandit_path)? {
            match line {
                BanditLine::Header {
                    persona,
                    spec,
                    block_seeds,
                } => {
                    record.bandit.insert(
                        persona,
                        BanditTrajectory {
                            spec,
                            records: Vec::new(),
                            block_seeds,
                        },
                    );
                }
                BanditLine::Trial { persona, record: r } => {
                    let traj =
                        record
                            .bandit
                            .get_mut(&persona)
                            .ok_or_else(|| ReportError::Corrupt {
                                path: bandit_path.display().to_string(),
                                line: 0,
                                reason: format!("trial before header for {persona}"),
                            })?;
                    traj.records.push(r);
                }
            }
        }
    }

    let reasoning_path = raw_dir.join("reasoning.jsonl.gz");
    if reasoning_path.exists() {
        for ReasoningLine::Item { persona, result } in
            read_jsonl_gz::<ReasoningLine>(&reasoning_path)?
        {
            record.reasoning.entry(persona).or_default().push(result);
        }
    }

    let safety_path = raw_dir.join("safety.jsonl.gz");
    if safety_path.exists() {
        for line in read_jsonl_gz::<SafetyLine>(&safety_path)? {
            match line {
                SafetyLine::Response { persona, response } => {
                    record
                        .safety
                        .entry(persona)
                        .or_insert_with(|| SafetyOutcome {
                            responses: Vec::new(),
                            scores: Sd3Scores {
                                machiavellianism: 0.0,
                                narcissism: 0.0,
                                psychopathy: 0.0,
                            },
                        })
                        .responses
                        .push(response);
                }
                SafetyLine::Scores { persona, scores } => {
                    record
                        .safety
                        .entry(persona)
                        .or_insert_with(|| SafetyOutcome {
                            responses: Vec::new(),
                            scores,
                        })
                        .scores = scores;
                }
            }
        }
    }

    Ok(record)
}

/// Adaptability rollup for one persona; `summary` is absent when no grid
/// completed.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonaAdapt {
    pub grids_total: usize,
    pub summary: Option<AdaptSummary>,
}

/// Derived tables for every task present in a record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummaries {
    pub adaptability: BTreeMap<String, PersonaAdapt>,
    /// Probit fit per persona; `None` when the trajectory yielded too few
    /// usable events to fit.
    pub ee_fits: BTreeMap<String, Option<ProbitFit>>,
    /// Axis-level aggregation; present only when all 16 codes have fits.
    pub ee_dimensions: Option<[AxisSummary; 4]>,
    pub reasoning: BTreeMap<String, BTreeMap<SubjectCategory, CategoryAccuracy>>,
    pub safety: BTreeMap<String, (Sd3Scores, Option<[f64; 3]>)>,
}

/// Recomputes every summary from raw artifacts.
pub fn summarize(record: &RunRecord, baseline: Option<&Sd3Scores>) -> RunSummaries {
    let mut out = RunSummaries::default();

    for (persona, trajs) in &record.adaptability {
        out.adaptability.insert(
            persona.clone(),
            PersonaAdapt {
                grids_total: trajs.len(),
                summary: summarize_adaptability(trajs).ok(),
            },
        );
    }

    for (persona, traj) in &record.bandit {
        let fit = fit_probit(&choice_events(traj)).ok();
        out.ee_fits.insert(persona.clone(), fit);
    }
    let mut coded: BTreeMap<MbtiCode, ProbitFit> = BTreeMap::new();
    for (persona, fit) in &out.ee_fits {
        if let (Ok(code), Some(fit)) = (parse_mbti(persona), fit) {
            coded.insert(code, *fit);
        }
    }
    out.ee_dimensions = dimension_proportions(&coded).ok();

    for (persona, results) in &record.reasoning {
        if let Ok(by_cat) = accuracy_by_category(results) {
            out.reasoning.insert(persona.clone(), by_cat);
        }
    }

    for (persona, outcome) in &record.safety {
        let deltas = baseline.map(|b| compare_to_baseline(&outcome.scores, b));
        out.safety.insert(persona.clone(), (outcome.scores, deltas));
    }

    out
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<(), ReportError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.write_record(row).map_err(|e| ReportError::Corrupt {
            path: path.display().to_string(),
            line: 0,
            reason: e.to_string(),
        })?;
    }
    let bytes = writer.into_inner().expect("in-memory writer");
    std::fs::write(path, bytes).map_err(io_err(path))
}

fn row(fields: &[&str]) -> Vec<String> {
    fields.iter().map(|s| s.to_string()).collect()
}

/// Writes `summary/*.csv` for every task present. Pure function of the
/// record and baseline: repeated calls produce byte-identical files.
pub fn write_summaries(
    record: &RunRecord,
    summaries: &RunSummaries,
    run_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    let summary_dir = run_dir.join("summary");
    std::fs::create_dir_all(&summary_dir).map_err(io_err(&summary_dir))?;
    let mut written = Vec::new();

    if !summaries.adaptability.is_empty() {
        let mut rows = vec![row(&[
            "persona",
            "grids_total",
            "grids_full",
            "flexibility_mean",
            "flexibility_stddev",
            "stability_mean",
            "stability_stddev",
        ])];
        for (persona, adapt) in &summaries.adaptability {
            let s = adapt.summary.as_ref();
            rows.push(vec![
                persona.clone(),
                adapt.grids_total.to_string(),
                s.map_or(0, |s| s.grids_full).to_string(),
                fmt_opt(s.map(|s| s.flexibility.mean)),
                fmt_opt(s.map(|s| s.flexibility.stddev)),
                fmt_opt(s.map(|s| s.stability.mean)),
                fmt_opt(s.map(|s| s.stability.stddev)),
            ]);
        }
        let path = summary_dir.join("adaptability.csv");
        write_csv(&path, &rows)?;
        written.push(path);

        // every grid cell, so charts carry no exclusive data
        let mut rows = vec![row(&["persona", "repeat", "period", "block", "category"])];
        for (persona, trajs) in &record.adaptability {
            for (repeat, traj) in trajs.iter().enumerate() {
                for (period, grid_row) in traj.grid.iter().enumerate() {
                    for (block, cell) in grid_row.iter().enumerate() {
                        let name = cell
                            .and_then(|i| {
                                record
                                    .catalog
                                    .as_ref()
                                    .and_then(|c| c.categories().get(i).cloned())
                            })
                            .unwrap_or_default();
                        rows.push(vec![
                            persona.clone(),
                            repeat.to_string(),
                            period.to_string(),
                            block.to_string(),
                            name,
                        ]);
                    }
                }
            }
        }
        let path = summary_dir.join("adaptability_grids.csv");
        write_csv(&path, &rows)?;
        written.push(path);
    }

    if !summaries.ee_fits.is_empty() {
        let mut rows = vec![row(&[
            "persona",
            "w1",
            "w2",
            "loglik",
            "n_events",
            "converged",
            "ridge_used",
        ])];
        for (persona, fit) in &summaries.ee_fits {
            rows.push(vec![
                persona.clone(),
                fmt_opt(fit.map(|f| f.w1)),
                fmt_opt(fit.map(|f| f.w2)),
                fmt_opt(fit.map(|f| f.log_likelihood)),
                fmt_opt(fit.map(|f| f.n_events)),
                fmt_opt(fit.map(|f| f.converged)),
                fmt_opt(fit.map(|f| f.ridge_used)),
            ]);
        }
        let path = summary_dir.join("ee_fit.csv");
        write_csv(&path, &rows)?;
        written.push(path);

        if let Some(dimensions) = &summaries.ee_dimensions {
            let mut rows = vec![row(&[
                "axis",
                "group",
                "coefficient",
                "mean",
                "proportion",
                "valid",
            ])];
            for axis in dimensions {
                let (first, second) = axis.axis.labels();
                for (coefficient, split) in [
                    ("w1", &axis.exploitation),
                    ("w2", &axis.exploration),
                ] {
                    for (group, stat) in
                        [(first, &split.first), (second, &split.second)]
                    {
                        rows.push(vec![
                            format!("{}/{}", first, second),
                            group.to_string(),
                            coefficient.to_string(),
                            stat.mean.to_string(),
                            fmt_opt(stat.proportion),
                            split.valid.to_string(),
                        ]);
                    }
                }
            }
            let path = summary_dir.join("ee_dimensions.csv");
            write_csv(&path, &rows)?;
            written.push(path);
        }
    }

    if !summaries.reasoning.is_empty() {
        let mut rows = vec![row(&[
            "persona",
            "category",
            "items",
            "correct",
            "invalid",
            "accuracy",
        ])];
        for (persona, by_cat) in &summaries.reasoning {
            for (category, acc) in by_cat {
                rows.push(vec![
                    persona.clone(),
                    category.label().to_string(),
                    acc.items.to_string(),
                    acc.correct.to_string(),
                    acc.invalid.to_string(),
                    acc.accuracy.to_string(),
                ]);
            }
        }
        let path = summary_dir.join("reasoning.csv");
        write_csv(&path, &rows)?;
        written.push(path);

        let mut rows = vec![row(&[
            "persona",
            "subject",
            "category",
            "item",
            "extracted",
            "gold",
            "correct",
        ])];
        for (persona, results) in &record.reasoning {
            for r in results {
                rows.push(vec![
                    persona.clone(),
                    r.subject.clone(),
                    r.category.label().to_string(),
                    r.index.to_string(),
                    r.extracted.map(String::from).unwrap_or_default(),
                    r.gold.to_string(),
                    r.correct.to_string(),
                ]);
            }
        }
        let path = summary_dir.join("reasoning_items.csv");
        write_csv(&path, &rows)?;
        written.push(path);
    }

    if !summaries.safety.is_empty() {
        let mut rows = vec![row(&[
            "persona",
            "machiavellianism",
            "narcissism",
            "psychopathy",
            "delta_machiavellianism",
            "delta_narcissism",
            "delta_psychopathy",
        ])];
        for (persona, (scores, deltas)) in &summaries.safety {
            rows.push(vec![
                persona.clone(),
                scores.machiavellianism.to_string(),
                scores.narcissism.to_string(),
                scores.psychopathy.to_string(),
                fmt_opt(deltas.map(|d| d[0])),
                fmt_opt(deltas.map(|d| d[1])),
                fmt_opt(deltas.map(|d| d[2])),
            ]);
        }
        let path = summary_dir.join("sd3.csv");
        write_csv(&path, &rows)?;
        written.push(path);
    }

    Ok(written)
}

/// Emitted report: directory plus the files written, in emission order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub run_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub format_version: u32,
}

/// Regenerates summaries and charts from a record. Emission is a pure
/// function of the record and baseline.
pub fn emit_report(
    record: &RunRecord,
    baseline: Option<&Sd3Scores>,
    run_dir: &Path,
) -> Result<ReportBundle, ReportError> {
    let summaries = summarize(record, baseline);
    let mut files = write_summaries(record, &summaries, run_dir)?;

    let chart_dir = run_dir.join("charts");
    std::fs::create_dir_all(&chart_dir).map_err(io_err(&chart_dir))?;

    for (persona, trajs) in &record.adaptability {
        for (repeat, traj) in trajs.iter().enumerate() {
            let svg = charts::adaptability_grid_svg(traj, record.catalog.as_ref());
            let path = chart_dir.join(format!("adaptability_{persona}_r{repeat}.svg"));
            std::fs::write(&path, svg).map_err(io_err(&path))?;
            files.push(path);
        }
    }

    if !summaries.adaptability.is_empty() {
        let svg = charts::adaptability_metrics_svg(&summaries.adaptability)?;
        let path = chart_dir.join("adaptability_metrics.svg");
        std::fs::write(&path, svg).map_err(io_err(&path))?;
        files.push(path);
    }

    if let Some(dimensions) = &summaries.ee_dimensions {
        let svg = charts::ee_proportions_svg(dimensions);
        let path = chart_dir.join("ee_proportions.svg");
        std::fs::write(&path, svg).map_err(io_err(&path))?;
        files.push(path);
    }

    if !summaries.reasoning.is_empty() {
        let svg = charts::reasoning_accuracy_svg(&summaries.reasoning)?;
        let path = chart_dir.join("reasoning_accuracy.svg");
        std::fs::write(&path, svg).map_err(io_err(&path))?;
        files.push(path);
    }

    for (persona, (scores, _)) in &summaries.safety {
        let svg = charts::sd3_triangle_svg(persona, scores, baseline);
        let path = chart_dir.join(format!("sd3_{persona}.svg"));
        std::fs::write(&path, svg).map_err(io_err(&path))?;
        files.push(path);
    }

    Ok(ReportBundle {
        run_dir: run_dir.to_path_buf(),
        files,
        format_version: MANIFEST_FORMAT_VERSION,
    })
}

/// Subscale display order shared by tables and the triangle charts.
pub fn subscale_labels() -> [&'static str; 3] {
    [
        Subscale::Machiavellianism.label(),
        Subscale::Narcissism.label(),
        Subscale::Psychopathy.label(),
    ]
}
