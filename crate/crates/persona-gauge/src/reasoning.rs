//! Multiple-choice reasoning harness: loads per-subject question CSVs,
//! clusters subjects into four categories, asks the agent each question,
//! and reports per-category accuracy with unparseable answers counted as
//! incorrect.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{prompt_digest, AgentError, AgentHandle, AnswerKey};
use crate::prompts::render_mcq_prompt;
use crate::seeds;

#[derive(Debug, Error)]
pub enum ReasoningError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no question files under {0}")]
    MissingDirectory(String),
    #[error("{file} row {row}: {reason}")]
    MalformedRow {
        file: String,
        row: usize,
        reason: String,
    },
    #[error("subject {0:?} missing from the category mapping")]
    UnmappedSubject(String),
    #[error("bad category mapping line {line}: {reason}")]
    BadMapping { line: usize, reason: String },
    #[error("no items to aggregate")]
    EmptyResults,
    #[error("item {index}: {source}")]
    Agent {
        index: usize,
        #[source]
        source: AgentError,
    },
}

pub const GOLD_LETTERS: [char; 4] = ['A', 'B', 'C', 'D'];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McqItem {
    pub subject: String,
    pub stem: String,
    pub options: [String; 4],
    pub gold: char,
}

/// Four-way subject clustering.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum SubjectCategory {
    Stem,
    Humanities,
    SocialSciences,
    Other,
}

impl SubjectCategory {
    pub const ALL: [SubjectCategory; 4] = [
        SubjectCategory::Stem,
        SubjectCategory::Humanities,
        SubjectCategory::SocialSciences,
        SubjectCategory::Other,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SubjectCategory::Stem => "STEM",
            SubjectCategory::Humanities => "Humanities",
            SubjectCategory::SocialSciences => "Social Sciences",
            SubjectCategory::Other => "Other",
        }
    }

    pub fn parse(text: &str) -> Option<SubjectCategory> {
        match text.trim().to_lowercase().replace(['-', '_'], " ").as_str() {
            "stem" => Some(SubjectCategory::Stem),
            "humanities" => Some(SubjectCategory::Humanities),
            "social sciences" => Some(SubjectCategory::SocialSciences),
            "other" => Some(SubjectCategory::Other),
            _ => None,
        }
    }
}

impl fmt::Display for SubjectCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Loads `subject<TAB>category` lines; `#` comments and blanks ignored.
pub fn load_category_map(
    path: &Path,
) -> Result<BTreeMap<String, SubjectCategory>, ReasoningError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReasoningError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (subject, category) = line.split_once('\t').ok_or(ReasoningError::BadMapping {
            line: line_no,
            reason: "expected subject<TAB>category".into(),
        })?;
        let category = SubjectCategory::parse(category).ok_or(ReasoningError::BadMapping {
            line: line_no,
            reason: format!("unknown category {:?}", category.trim()),
        })?;
        if map.insert(subject.trim().to_string(), category).is_some() {
            return Err(ReasoningError::BadMapping {
                line: line_no,
                reason: format!("duplicate subject {:?}", subject.trim()),
            });
        }
    }
    Ok(map)
}

pub fn categorize(
    subject: &str,
    map: &BTreeMap<String, SubjectCategory>,
) -> Result<SubjectCategory, ReasoningError> {
    map.get(subject)
        .copied()
        .ok_or_else(|| ReasoningError::UnmappedSubject(subject.to_string()))
}

fn parse_gold(field: &str) -> Option<char> {
    let t = field.trim();
    let mut chars = t.chars();
    let c = chars.next()?.to_ascii_uppercase();
    (chars.next().is_none() && GOLD_LETTERS.contains(&c)).then_some(c)
}

/// Subject name taken from the file name, with split suffixes
/// (`_test`/`_val`/`_dev`) stripped.
fn subject_of(path: &Path) -> Option<String> {
    let stem = path.file_stem()?.to_str()?;
    for suffix in ["_test", "_val", "_dev"] {
        if let Some(s) = stem.strip_suffix(suffix) {
            return Some(s.to_string());
        }
    }
    Some(stem.to_string())
}

/// Loads every `*.csv` under `dir` as one subject each; rows are
/// `question, A, B, C, D, answer` without a header. `per_subject_cap`
/// keeps only the first N rows per subject (0 = unlimited).
pub fn load_mmlu(dir: &Path, per_subject_cap: usize) -> Result<Vec<McqItem>, ReasoningError> {
    let entries = std::fs::read_dir(dir).map_err(|source| ReasoningError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut files: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(ReasoningError::MissingDirectory(dir.display().to_string()));
    }
    let mut items = Vec::new();
    for file in files {
        let subject = subject_of(&file).unwrap_or_default();
        let file_name = file.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_path(&file)
            .map_err(|e| ReasoningError::MalformedRow {
                file: file_name.clone(),
                row: 0,
                reason: e.to_string(),
            })?;
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            if per_subject_cap != 0 && i >= per_subject_cap {
                break;
            }
            let record = record.map_err(|e| ReasoningError::MalformedRow {
                file: file_name.clone(),
                row,
                reason: e.to_string(),
            })?;
            if record.len() != 6 {
                return Err(ReasoningError::MalformedRow {
                    file: file_name.clone(),
                    row,
                    reason: format!("expected 6 fields, got {}", record.len()),
                });
            }
            let gold = parse_gold(&record[5]).ok_or_else(|| ReasoningError::MalformedRow {
                file: file_name.clone(),
                row,
                reason: format!("answer must be one of A-D, got {:?}", &record[5]),
            })?;
            items.push(McqItem {
                subject: subject.clone(),
                stem: record[0].to_string(),
                options: [
                    record[1].to_string(),
                    record[2].to_string(),
                    record[3].to_string(),
                    record[4].to_string(),
                ],
                gold,
            });
        }
    }
    Ok(items)
}

/// Renders the question prompt for an item; underscored subject names are
/// shown with spaces.
pub fn render_item_prompt(item: &McqItem) -> String {
    render_mcq_prompt(&item.subject.replace('_', " "), &item.stem, &item.options)
}

/// Answer key for the keyed oracle policy: prompt digest -> gold letter.
pub fn build_answer_key(items: &[McqItem]) -> AnswerKey {
    let map: BTreeMap<String, char> = items
        .iter()
        .map(|item| (prompt_digest(&render_item_prompt(item)), item.gold))
        .collect();
    std::sync::Arc::new(map)
}

fn choice_patterns() -> &'static [Regex; 4] {
    static PATTERNS: OnceLock<[Regex; 4]> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        [
            Regex::new(r"(?i)\banswer\s*:?\s*\(?([A-D])\b").unwrap(),
            Regex::new(r"(?i)\boption\s*\(?([A-D])\b").unwrap(),
            Regex::new(r"(?i)\(([A-D])\)").unwrap(),
            Regex::new(r"(?i)\b([A-D])\b").unwrap(),
        ]
    })
}

/// Extracts the chosen letter from free-form reply text: `Answer: X`,
/// then `Option X`, then `(X)`, then the first standalone A-D token.
/// `None` marks an invalid (non-)answer.
pub fn extract_choice(reply: &str) -> Option<char> {
    for pattern in choice_patterns() {
        if let Some(caps) = pattern.captures(reply) {
            let c = caps
                .get(1)
                .unwrap()
                .as_str()
                .chars()
                .next()
                .unwrap()
                .to_ascii_uppercase();
            return Some(c);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemResult {
    pub index: usize,
    pub subject: String,
    pub category: SubjectCategory,
    pub gold: char,
    pub extracted: Option<char>,
    pub correct: bool,
    pub reply: String,
}

/// Asks one item and extracts the letter. Invalid answers are values,
/// not errors.
pub fn ask_mcq(
    agent: &AgentHandle,
    item: &McqItem,
    request_seed: u64,
) -> Result<(String, Option<char>), AgentError> {
    let reply = agent.query(&render_item_prompt(item), request_seed)?;
    let extracted = extract_choice(&reply);
    Ok((reply, extracted))
}

/// Runs the whole item list in order, one query per item (zero-shot, no
/// re-asks: an unparseable reply simply scores as incorrect).
pub fn run_reasoning(
    agent: &AgentHandle,
    items: &[McqItem],
    map: &BTreeMap<String, SubjectCategory>,
    master_seed: u64,
) -> Result<Vec<ItemResult>, ReasoningError> {
    let persona = agent.persona_label();
    let mut results = Vec::with_capacity(items.len());
    for (index, item) in items.iter().enumerate() {
        let category = categorize(&item.subject, map)?;
        let request_seed = seeds::derive_u64(
            master_seed,
            &["mcq", &persona, &index.to_string(), "req"],
        );
        let (reply, extracted) =
            ask_mcq(agent, item, request_seed).map_err(|source| ReasoningError::Agent {
                index,
                source,
            })?;
        let correct = extracted == Some(item.gold);
        results.push(ItemResult {
            index,
            subject: item.subject.clone(),
            category,
            gold: item.gold,
            extracted,
            correct,
            reply,
        });
    }
    Ok(results)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryAccuracy {
    pub items: usize,
    pub correct: usize,
    /// Unparseable answers counted in `items` but never in `correct`.
    pub invalid: usize,
    pub accuracy: f64,
}

/// Unweighted per-item mean within each category present in the results.
pub fn accuracy_by_category(
    results: &[ItemResult],
) -> Result<BTreeMap<SubjectCategory, CategoryAccuracy>, ReasoningError> {
    if results.is_empty() {
        return Err(ReasoningError::EmptyResults);
    }
    let mut out: BTreeMap<SubjectCategory, CategoryAccuracy> = BTreeMap::new();
    for r in results {
        let entry = out.entry(r.category).or_insert(CategoryAccuracy {
            items: 0,
            correct: 0,
            invalid: 0,
            accuracy: 0.0,
        });
        entry.items += 1;
        entry.correct += r.correct as usize;
        entry.invalid += r.extracted.is_none() as usize;
    }
    for acc in out.values_mut() {
        acc.accuracy = acc.correct as f64 / acc.items as f64;
    }
    Ok(out)
}

/// Demo subjects spanning all four categories, used by the generated
/// desk-scale question set.
pub const DEMO_SUBJECTS: [(&str, SubjectCategory); 8] = [
    ("demo_algebra", SubjectCategory::Stem),
    ("demo_astronomy", SubjectCategory::Stem),
    ("demo_philosophy", SubjectCategory::Humanities),
    ("demo_world_history", SubjectCategory::Humanities),
    ("demo_sociology", SubjectCategory::SocialSciences),
    ("demo_geography", SubjectCategory::SocialSciences),
    ("demo_marketing", SubjectCategory::Other),
    ("demo_nutrition", SubjectCategory::Other),
];

/// Writes a deterministic question set: one CSV per demo subject with
/// `per_subject` rows and gold letters cycling A-D (balanced whenever
/// `per_subject` is a multiple of 4), plus a `categories.tsv` mapping.
/// Returns the (questions dir, mapping file) paths.
pub fn generate_demo_mmlu(
    dir: &Path,
    per_subject: usize,
) -> Result<(std::path::PathBuf, std::path::PathBuf), ReasoningError> {
    let questions = dir.join("questions");
    std::fs::create_dir_all(&questions).map_err(|source| ReasoningError::Io {
        path: questions.display().to_string(),
        source,
    })?;
    for (subject, _) in DEMO_SUBJECTS {
        let mut csv_text = String::new();
        for i in 0..per_subject {
            let gold = GOLD_LETTERS[i % 4];
            let options: Vec<String> = GOLD_LETTERS
                .iter()
                .map(|&letter| {
                    if letter == gold {
                        format!("{subject} fact {i} (keyed)")
                    } else {
                        format!("{subject} distractor {i}{letter}")
                    }
                })
                .collect();
            csv_text.push_str(&format!(
                "\"Drill {i} for {subject}: which option is the keyed fact?\",{},{},{},{},{}\n",
                options[0], options[1], options[2], options[3], gold
            ));
        }
        let path = questions.join(format!("{subject}_test.csv"));
        std::fs::write(&path, csv_text).map_err(|source| ReasoningError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    let mapping = dir.join("categories.tsv");
    let mut map_text = String::new();
    for (subject, category) in DEMO_SUBJECTS {
        map_text.push_str(&format!("{subject}\t{}\n", category.label()));
    }
    std::fs::write(&mapping, map_text).map_err(|source| ReasoningError::Io {
        path: mapping.display().to_string(),
        source,
    })?;
    Ok((questions, mapping))
}
