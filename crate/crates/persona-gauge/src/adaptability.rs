//! Periodic place-choice task: an agent picks a point-of-interest category
//! for every (day, time block) cell of a grid, and two metrics summarize
//! the outcome. Flexibility is the mean fraction of distinct choices
//! within a period; stability is the mean repetition of choices at the
//! same time block across periods.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{AgentError, AgentHandle};
use crate::prompts::render_poi_prompt;
use crate::seeds;

#[derive(Debug, Error)]
pub enum AdaptError {
    #[error("no check-ins to build a catalog from")]
    EmptyInput,
    #[error("invalid catalog: {0}")]
    BadCatalog(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("check-in line {line}: {reason}")]
    BadCheckin { line: usize, reason: String },
    #[error("no complete grids among {total} trajectories")]
    NoCompleteGrids { total: usize },
    #[error("period {period} block {block}: {source}")]
    Agent {
        period: usize,
        block: &'static str,
        #[source]
        source: AgentError,
    },
}

/// The five daily time blocks. Morning through evening carry explicit
/// clock bounds; rest covers everything else, so the five blocks tile the
/// 24-hour day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TimeBlock {
    Morning,
    Noon,
    Afternoon,
    Evening,
    Rest,
}

impl TimeBlock {
    pub const ALL: [TimeBlock; 5] = [
        TimeBlock::Morning,
        TimeBlock::Noon,
        TimeBlock::Afternoon,
        TimeBlock::Evening,
        TimeBlock::Rest,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TimeBlock::Morning => "morning",
            TimeBlock::Noon => "noon",
            TimeBlock::Afternoon => "afternoon",
            TimeBlock::Evening => "evening",
            TimeBlock::Rest => "rest",
        }
    }

    /// Block for a minute of the day (0..1440): morning 8:00-11:30,
    /// noon 11:30-14:00, afternoon 14:00-17:30, evening 17:30-22:00,
    /// rest otherwise. Upper bounds are exclusive.
    pub fn from_minute(minute_of_day: u32) -> TimeBlock {
        match minute_of_day {
            480..=689 => TimeBlock::Morning,
            690..=839 => TimeBlock::Noon,
            840..=1049 => TimeBlock::Afternoon,
            1050..=1319 => TimeBlock::Evening,
            _ => TimeBlock::Rest,
        }
    }
}

impl fmt::Display for TimeBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Ordered, duplicate-free list of candidate categories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoiCatalog {
    categories: Vec<String>,
}

impl PoiCatalog {
    pub fn new(categories: Vec<String>) -> Result<Self, AdaptError> {
        if categories.is_empty() {
            return Err(AdaptError::BadCatalog("catalog is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for c in &categories {
            if c.trim().is_empty() {
                return Err(AdaptError::BadCatalog("blank category name".into()));
            }
            if !seen.insert(c.to_lowercase()) {
                return Err(AdaptError::BadCatalog(format!("duplicate category {c:?}")));
            }
        }
        Ok(Self { categories })
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// Maps a free-form reply to a catalog index: first an exact
    /// case-insensitive match (ignoring surrounding whitespace, quotes,
    /// and a trailing period), then the longest catalog name appearing
    /// case-insensitively as a substring (ties to catalog order).
    pub fn match_reply(&self, reply: &str) -> Option<usize> {
        let cleaned = reply
            .trim()
            .trim_matches(|c| c == '"' || c == '\'')
            .trim_end_matches('.')
            .trim();
        let lowered = cleaned.to_lowercase();
        if let Some(i) = self
            .categories
            .iter()
            .position(|c| c.to_lowercase() == lowered)
        {
            return Some(i);
        }
        let haystack = reply.to_lowercase();
        let mut best: Option<(usize, usize)> = None; // (name length, index)
        for (i, c) in self.categories.iter().enumerate() {
            let needle = c.to_lowercase();
            if haystack.contains(&needle) {
                let candidate = (needle.len(), i);
                let better = match best {
                    None => true,
                    Some((len, _)) => candidate.0 > len,
                };
                if better {
                    best = Some(candidate);
                }
            }
        }
        best.map(|(_, i)| i)
    }
}

/// Reads a catalog file: one category per line, `#` comments and blank
/// lines ignored.
pub fn load_catalog(path: &Path) -> Result<PoiCatalog, AdaptError> {
    let text = std::fs::read_to_string(path).map_err(|source| AdaptError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let categories: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect();
    PoiCatalog::new(categories)
}

pub fn save_catalog(catalog: &PoiCatalog, path: &Path) -> Result<(), AdaptError> {
    let mut text = String::new();
    for c in &catalog.categories {
        text.push_str(c);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|source| AdaptError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Minute of day from a timestamp token. Accepts a bare minute count
/// (0..1440), `HH:MM` / `HH:MM:SS` clock times, RFC 3339 datetimes, and
/// `Tue Apr 03 18:00:06 +0000 2012`-style strings (clock time read as
/// written, no zone conversion).
pub fn parse_minute_of_day(token: &str) -> Option<u32> {
    let token = token.trim();
    if let Ok(m) = token.parse::<u32>() {
        return (m < 1440).then_some(m);
    }
    for fmt in ["%H:%M:%S", "%H:%M"] {
        if let Ok(t) = chrono::NaiveTime::parse_from_str(token, fmt) {
            return Some(minute_of(t));
        }
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(token) {
        return Some(minute_of(dt.time()));
    }
    for fmt in ["%a %b %d %H:%M:%S %z %Y", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(dt) = chrono::NaiveDateTime::parse_from_str(token, fmt) {
            return Some(minute_of(dt.time()));
        }
    }
    None
}

fn minute_of(t: chrono::NaiveTime) -> u32 {
    use chrono::Timelike;
    t.hour() * 60 + t.minute()
}

/// Loads tab-separated check-ins, keeping (time block, category) pairs.
/// Column indices select the timestamp and category fields.
pub fn load_checkins(
    path: &Path,
    timestamp_col: usize,
    category_col: usize,
) -> Result<Vec<(TimeBlock, String)>, AdaptError> {
    let text = std::fs::read_to_string(path).map_err(|source| AdaptError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let need = timestamp_col.max(category_col);
        if fields.len() <= need {
            return Err(AdaptError::BadCheckin {
                line: line_no,
                reason: format!("expected at least {} tab-separated fields", need + 1),
            });
        }
        let minute =
            parse_minute_of_day(fields[timestamp_col]).ok_or(AdaptError::BadCheckin {
                line: line_no,
                reason: format!("unparseable timestamp {:?}", fields[timestamp_col]),
            })?;
        let category = fields[category_col].trim();
        if category.is_empty() {
            return Err(AdaptError::BadCheckin {
                line: line_no,
                reason: "empty category".into(),
            });
        }
        out.push((TimeBlock::from_minute(minute), category.to_string()));
    }
    Ok(out)
}

/// Per time block, ranks categories by descending frequency (ties broken
/// lexicographically) and keeps the top `top_k`; the catalog is the union
/// of the five ranked lists in block order, keeping first appearances.
pub fn build_catalog(
    checkins: &[(TimeBlock, String)],
    top_k: usize,
) -> Result<PoiCatalog, AdaptError> {
    if checkins.is_empty() || top_k == 0 {
        return Err(AdaptError::EmptyInput);
    }
    let mut counts: BTreeMap<TimeBlock, BTreeMap<&str, u64>> = BTreeMap::new();
    for (block, category) in checkins {
        *counts
            .entry(*block)
            .or_default()
            .entry(category.as_str())
            .or_insert(0) += 1;
    }
    let mut union: Vec<String> = Vec::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for block in TimeBlock::ALL {
        let Some(block_counts) = counts.get(&block) else {
            continue;
        };
        let mut ranked: Vec<(&str, u64)> = block_counts.iter().map(|(c, n)| (*c, *n)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        for (category, _) in ranked.into_iter().take(top_k) {
            if seen.insert(category) {
                union.push(category.to_string());
            }
        }
    }
    PoiCatalog::new(union)
}

/// One grid of category choices: `grid[period][block]` indexes into the
/// catalog, `None` marking a cell whose replies never named a candidate.
/// `replies` keeps the last raw reply per cell for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptTrajectory {
    pub periods: usize,
    pub blocks: usize,
    pub grid: Vec<Vec<Option<usize>>>,
    pub replies: Vec<Vec<Option<String>>>,
}

impl AdaptTrajectory {
    /// Builds a trajectory from a bare grid (fixture/test helper).
    pub fn from_grid(grid: Vec<Vec<Option<usize>>>) -> Self {
        let periods = grid.len();
        let blocks = grid.first().map_or(0, Vec::len);
        let replies = vec![vec![None; blocks]; periods];
        Self {
            periods,
            blocks,
            grid,
            replies,
        }
    }

    /// True when every cell holds a choice.
    pub fn is_full(&self) -> bool {
        self.grid.iter().all(|row| row.iter().all(Option::is_some))
    }
}

/// Mean over periods of (distinct choices in the period) / |blocks|.
/// `None` for partial or empty grids.
pub fn flexibility(traj: &AdaptTrajectory) -> Option<f64> {
    if traj.periods == 0 || traj.blocks == 0 || !traj.is_full() {
        return None;
    }
    // integer accumulation keeps the result exact and independent of
    // period order: (1/|P|) sum d_i/|T| = (sum d_i) / (|P||T|)
    let mut total = 0usize;
    for row in &traj.grid {
        let distinct: BTreeSet<usize> = row.iter().map(|c| c.unwrap()).collect();
        total += distinct.len();
    }
    Some(total as f64 / (traj.periods * traj.blocks) as f64)
}

/// Mean over blocks of 1 - (distinct choices at that block across
/// periods) / |periods|. `None` for partial or empty grids.
pub fn stability(traj: &AdaptTrajectory) -> Option<f64> {
    if traj.periods == 0 || traj.blocks == 0 || !traj.is_full() {
        return None;
    }
    // (1/|T|) sum (1 - c_b/|P|) = (|P||T| - sum c_b) / (|P||T|)
    let mut distinct_total = 0usize;
    for b in 0..traj.blocks {
        let distinct: BTreeSet<usize> = traj.grid.iter().map(|row| row[b].unwrap()).collect();
        distinct_total += distinct.len();
    }
    let cells = traj.periods * traj.blocks;
    Some((cells - distinct_total) as f64 / cells as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator); 0 for a single value.
    pub stddev: f64,
}

fn summarize_values(values: &[f64]) -> MetricSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stddev = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    MetricSummary { mean, stddev }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptSummary {
    pub flexibility: MetricSummary,
    pub stability: MetricSummary,
    pub grids_total: usize,
    /// Complete grids feeding the summary; partial grids are excluded
    /// but still counted in `grids_total`.
    pub grids_full: usize,
}

pub fn summarize_adaptability(trajs: &[AdaptTrajectory]) -> Result<AdaptSummary, AdaptError> {
    let mut flex = Vec::new();
    let mut stab = Vec::new();
    for t in trajs {
        if let (Some(f), Some(s)) = (flexibility(t), stability(t)) {
            flex.push(f);
            stab.push(s);
        }
    }
    if flex.is_empty() {
        return Err(AdaptError::NoCompleteGrids { total: trajs.len() });
    }
    Ok(AdaptSummary {
        flexibility: summarize_values(&flex),
        stability: summarize_values(&stab),
        grids_total: trajs.len(),
        grids_full: flex.len(),
    })
}

const WEEKDAYS: [&str; 7] = [
    "Monday",
    "Tuesday",
    "Wednesday",
    "Thursday",
    "Friday",
    "Saturday",
    "Sunday",
];

/// Day label for a period index; periods beyond one week cycle through
/// the weekday names again.
pub fn day_label(period: usize) -> &'static str {
    WEEKDAYS[period % 7]
}

/// Runs `repeats` independent grids: for every (period, block) cell the
/// agent is asked the location prompt with the catalog as candidates.
/// Replies naming no candidate are re-asked with a fresh request seed up
/// to `max_reprompts` times; a persistently unusable cell stays `None`
/// and the grid is summarized as partial.
pub fn run_adaptability(
    agent: &AgentHandle,
    catalog: &PoiCatalog,
    periods: usize,
    repeats: usize,
    master_seed: u64,
    max_reprompts: u32,
) -> Result<Vec<AdaptTrajectory>, AdaptError> {
    let persona = agent.persona_label();
    let blocks = TimeBlock::ALL.len();
    let mut out = Vec::with_capacity(repeats);
    for repeat in 0..repeats {
        let repeat_tag = repeat.to_string();
        let mut grid = vec![vec![None; blocks]; periods];
        let mut replies = vec![vec![None; blocks]; periods];
        for period in 0..periods {
            let period_tag = period.to_string();
            for (b, block) in TimeBlock::ALL.into_iter().enumerate() {
                let prompt = render_poi_prompt(day_label(period), block.label(), catalog.categories());
                for attempt in 0..=max_reprompts {
                    let request_seed = seeds::derive_u64(
                        master_seed,
                        &[
                            "adapt",
                            &persona,
                            &repeat_tag,
                            &period_tag,
                            block.label(),
                            "req",
                            &attempt.to_string(),
                        ],
                    );
                    let reply = agent.query(&prompt, request_seed).map_err(|source| {
                        AdaptError::Agent {
                            period,
                            block: block.label(),
                            source,
                        }
                    })?;
                    let matched = catalog.match_reply(&reply);
                    replies[period][b] = Some(reply);
                    if matched.is_some() {
                        grid[period][b] = matched;
                        break;
                    }
                }
            }
        }
        out.push(AdaptTrajectory {
            periods,
            blocks,
            grid,
            replies,
        });
    }
    Ok(out)
}
