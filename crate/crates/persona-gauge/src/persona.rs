//! Persona profiles: the role-playing paragraph attached to each MBTI code.
//!
//! Profiles live in plain-text data files (one per code) so the persona set
//! can be swapped without rebuilding. File layout:
//!
//! ```text
//! code: ENFJ
//! name: Sam Moore
//! You are Sam Moore. Sam Moore, a 65-year-old retired navy officer, ...
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::mbti::{MbtiCode, MbtiError};

#[derive(Debug, Error)]
pub enum PersonaError {
    #[error("failed to read persona file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("persona file {path}: {reason}")]
    Malformed { path: String, reason: String },
    #[error("persona file {path}: {source}")]
    BadCode {
        path: String,
        #[source]
        source: MbtiError,
    },
    #[error("profile text must start with a second-person role assignment (\"You are ...\"), got {start:?}")]
    NotSecondPerson { start: String },
    #[error("profile text is empty")]
    EmptyProfile,
    #[error("duplicate persona for code {code}")]
    Duplicate { code: MbtiCode },
    #[error("no persona found for code {code} in {dir}")]
    MissingCode { code: MbtiCode, dir: String },
}

/// A persona: code, display name, and the role-setting paragraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersonaProfile {
    pub code: MbtiCode,
    pub persona_name: String,
    profile_text: String,
}

impl PersonaProfile {
    /// Validates the profile-text invariants: non-empty and opening with a
    /// second-person role assignment.
    pub fn new(
        code: MbtiCode,
        persona_name: impl Into<String>,
        profile_text: impl Into<String>,
    ) -> Result<Self, PersonaError> {
        let profile_text = profile_text.into();
        let trimmed = profile_text.trim();
        if trimmed.is_empty() {
            return Err(PersonaError::EmptyProfile);
        }
        if !trimmed.starts_with("You are") {
            return Err(PersonaError::NotSecondPerson {
                start: trimmed.chars().take(24).collect(),
            });
        }
        Ok(Self {
            code,
            persona_name: persona_name.into(),
            profile_text: trimmed.to_string(),
        })
    }

    pub fn profile_text(&self) -> &str {
        &self.profile_text
    }
}

/// Returns the profile paragraph verbatim; this text is prefixed to every
/// query as the conversation's role-setting message.
pub fn render_role_prompt(profile: &PersonaProfile) -> &str {
    profile.profile_text()
}

/// Parses one persona file.
pub fn load_persona_file(path: &Path) -> Result<PersonaProfile, PersonaError> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| PersonaError::Io {
        path: display.clone(),
        source,
    })?;
    parse_persona(&text, &display)
}

fn parse_persona(text: &str, path: &str) -> Result<PersonaProfile, PersonaError> {
    let malformed = |reason: &str| PersonaError::Malformed {
        path: path.to_string(),
        reason: reason.to_string(),
    };
    let mut lines = text.lines();
    let code_line = lines.next().ok_or_else(|| malformed("empty file"))?;
    let code_str = code_line
        .strip_prefix("code:")
        .ok_or_else(|| malformed("first line must be `code: <XXXX>`"))?
        .trim();
    let code: MbtiCode = code_str.parse().map_err(|source| PersonaError::BadCode {
        path: path.to_string(),
        source,
    })?;
    let name_line = lines.next().ok_or_else(|| malformed("missing name line"))?;
    let name = name_line
        .strip_prefix("name:")
        .ok_or_else(|| malformed("second line must be `name: <persona name>`"))?
        .trim();
    let profile: String = lines.collect::<Vec<_>>().join("\n");
    PersonaProfile::new(code, name, profile)
}

/// Loads every `*.txt` persona file in a directory, keyed by code.
pub fn load_personas(dir: &Path) -> Result<BTreeMap<MbtiCode, PersonaProfile>, PersonaError> {
    let entries = fs::read_dir(dir).map_err(|source| PersonaError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut out = BTreeMap::new();
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "txt"))
        .collect();
    paths.sort();
    for path in paths {
        let profile = load_persona_file(&path)?;
        if out.insert(profile.code, profile.clone()).is_some() {
            return Err(PersonaError::Duplicate { code: profile.code });
        }
    }
    Ok(out)
}

/// Loads a directory and checks the requested codes are all present,
/// returning them in code order.
pub fn load_persona_set(
    dir: &Path,
    codes: &[MbtiCode],
) -> Result<Vec<PersonaProfile>, PersonaError> {
    let available = load_personas(dir)?;
    codes
        .iter()
        .map(|code| {
            available
                .get(code)
                .cloned()
                .ok_or_else(|| PersonaError::MissingCode {
                    code: *code,
                    dir: dir.display().to_string(),
                })
        })
        .collect()
}
