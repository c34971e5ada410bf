//! MBTI personality codes: four binary axes, sixteen combinations.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MbtiError {
    #[error("invalid MBTI code {code:?}: {reason}")]
    InvalidCode { code: String, reason: String },
}

/// First axis: Extraversion / Introversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Attitude {
    E,
    I,
}

/// Second axis: Sensing / iNtuition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Perceiving {
    S,
    N,
}

/// Third axis: Thinking / Feeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Judging {
    T,
    F,
}

/// Fourth axis: Judging / Perceiving lifestyle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lifestyle {
    J,
    P,
}

/// One of the sixteen four-letter personality codes, e.g. `ENFJ`.
///
/// Ordering follows the four-letter string form so that sorted collections
/// of codes come out alphabetical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MbtiCode {
    pub attitude: Attitude,
    pub perceiving: Perceiving,
    pub judging: Judging,
    pub lifestyle: Lifestyle,
}

impl MbtiCode {
    pub const fn new(
        attitude: Attitude,
        perceiving: Perceiving,
        judging: Judging,
        lifestyle: Lifestyle,
    ) -> Self {
        Self {
            attitude,
            perceiving,
            judging,
            lifestyle,
        }
    }

    /// All sixteen codes, in alphabetical order of their string form.
    pub fn all() -> Vec<MbtiCode> {
        let mut out = Vec::with_capacity(16);
        for attitude in [Attitude::E, Attitude::I] {
            for perceiving in [Perceiving::N, Perceiving::S] {
                for judging in [Judging::F, Judging::T] {
                    for lifestyle in [Lifestyle::J, Lifestyle::P] {
                        out.push(MbtiCode::new(attitude, perceiving, judging, lifestyle));
                    }
                }
            }
        }
        out
    }

    pub fn letters(&self) -> [char; 4] {
        [
            match self.attitude {
                Attitude::E => 'E',
                Attitude::I => 'I',
            },
            match self.perceiving {
                Perceiving::S => 'S',
                Perceiving::N => 'N',
            },
            match self.judging {
                Judging::T => 'T',
                Judging::F => 'F',
            },
            match self.lifestyle {
                Lifestyle::J => 'J',
                Lifestyle::P => 'P',
            },
        ]
    }
}

impl fmt::Display for MbtiCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.letters() {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl PartialOrd for MbtiCode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MbtiCode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.letters().cmp(&other.letters())
    }
}

/// Case-insensitive parse of a four-letter code; whitespace is trimmed.
pub fn parse_mbti(input: &str) -> Result<MbtiCode, MbtiError> {
    MbtiCode::from_str(input)
}

impl FromStr for MbtiCode {
    type Err = MbtiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        let invalid = |reason: &str| MbtiError::InvalidCode {
            code: trimmed.to_string(),
            reason: reason.to_string(),
        };
        let chars: Vec<char> = trimmed.chars().flat_map(|c| c.to_uppercase()).collect();
        if chars.len() != 4 {
            return Err(invalid("expected exactly 4 letters"));
        }
        let attitude = match chars[0] {
            'E' => Attitude::E,
            'I' => Attitude::I,
            c => return Err(invalid(&format!("position 1 must be E or I, got {c:?}"))),
        };
        let perceiving = match chars[1] {
            'S' => Perceiving::S,
            'N' => Perceiving::N,
            c => return Err(invalid(&format!("position 2 must be S or N, got {c:?}"))),
        };
        let judging = match chars[2] {
            'T' => Judging::T,
            'F' => Judging::F,
            c => return Err(invalid(&format!("position 3 must be T or F, got {c:?}"))),
        };
        let lifestyle = match chars[3] {
            'J' => Lifestyle::J,
            'P' => Lifestyle::P,
            c => return Err(invalid(&format!("position 4 must be J or P, got {c:?}"))),
        };
        Ok(MbtiCode::new(attitude, perceiving, judging, lifestyle))
    }
}

impl Serialize for MbtiCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for MbtiCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// The four binary dimensions a code is built from.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
pub enum Axis {
    /// Extraversion vs Introversion.
    EI,
    /// Sensing vs iNtuition.
    SN,
    /// Thinking vs Feeling.
    TF,
    /// Judging vs Perceiving.
    JP,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::EI, Axis::SN, Axis::TF, Axis::JP];

    /// Letter labels of the two groups, first group first (`E` before `I`).
    pub fn labels(&self) -> (char, char) {
        match self {
            Axis::EI => ('E', 'I'),
            Axis::SN => ('S', 'N'),
            Axis::TF => ('T', 'F'),
            Axis::JP => ('J', 'P'),
        }
    }

    /// True when `code` falls in the axis's first group.
    pub fn in_first_group(&self, code: &MbtiCode) -> bool {
        match self {
            Axis::EI => code.attitude == Attitude::E,
            Axis::SN => code.perceiving == Perceiving::S,
            Axis::TF => code.judging == Judging::T,
            Axis::JP => code.lifestyle == Lifestyle::J,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.labels();
        write!(f, "{a}/{b}")
    }
}

/// Two disjoint groups of codes along one axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxisGroups {
    pub axis: Axis,
    pub first: Vec<MbtiCode>,
    pub second: Vec<MbtiCode>,
}

/// Splits `codes` into the two groups of each axis, preserving input order
/// within the groups. With all sixteen codes each group holds eight.
pub fn dimension_groups(codes: &[MbtiCode]) -> [AxisGroups; 4] {
    Axis::ALL.map(|axis| {
        let (first, second) = codes
            .iter()
            .copied()
            .partition(|code| axis.in_first_group(code));
        AxisGroups {
            axis,
            first,
            second,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn parses_known_codes() {
        let enfj = parse_mbti("ENFJ").unwrap();
        assert_eq!(enfj.attitude, Attitude::E);
        assert_eq!(enfj.perceiving, Perceiving::N);
        assert_eq!(enfj.judging, Judging::F);
        assert_eq!(enfj.lifestyle, Lifestyle::J);

        let infp = parse_mbti("infp").unwrap();
        assert_eq!(infp.to_string(), "INFP");
    }

    #[test]
    fn rejects_illegal_letters() {
        assert!(matches!(
            parse_mbti("ABCD"),
            Err(MbtiError::InvalidCode { .. })
        ));
        assert!(parse_mbti("EN").is_err());
        assert!(parse_mbti("ENFJX").is_err());
        assert!(parse_mbti("XNFJ").is_err());
    }

    #[test]
    fn sixteen_distinct_codes_round_trip() {
        let all = MbtiCode::all();
        assert_eq!(all.len(), 16);
        let formatted: BTreeSet<String> = all.iter().map(|c| c.to_string()).collect();
        assert_eq!(formatted.len(), 16);
        for code in &all {
            assert_eq!(parse_mbti(&code.to_string()).unwrap(), *code);
        }
    }

    #[test]
    fn all_is_sorted_alphabetically() {
        let all = MbtiCode::all();
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
    }

    #[test]
    fn axis_groups_partition_all_sixteen() {
        let all = MbtiCode::all();
        for groups in dimension_groups(&all) {
            assert_eq!(groups.first.len(), 8, "axis {}", groups.axis);
            assert_eq!(groups.second.len(), 8, "axis {}", groups.axis);
            let union: BTreeSet<MbtiCode> = groups
                .first
                .iter()
                .chain(groups.second.iter())
                .copied()
                .collect();
            assert_eq!(union.len(), 16);
        }
    }

    #[test]
    fn enfj_lands_in_expected_groups() {
        let all = MbtiCode::all();
        let enfj = parse_mbti("ENFJ").unwrap();
        let groups = dimension_groups(&all);
        assert!(groups[0].first.contains(&enfj)); // E
        assert!(groups[1].second.contains(&enfj)); // N
        assert!(groups[2].second.contains(&enfj)); // F
        assert!(groups[3].first.contains(&enfj)); // J
    }
}
