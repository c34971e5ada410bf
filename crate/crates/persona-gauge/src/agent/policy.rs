//! Scripted synthetic agents. Each policy parses the rendered prompt text
//! back into a structured query and answers in the exact textual format
//! the prompt requests, so every parser in the harness is exercised the
//! same way for scripted and remote backends.
//!
//! Policies are pure functions of (messages, request_seed): the same seed
//! always yields the same reply, independent of scheduling.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::ChatMessage;
use crate::ee::{kalman_update, regressors, std_normal_cdf, PosteriorState};
use crate::prompts::{parse_task_query, TaskQuery};
use crate::safety::LIKERT_PHRASES;

#[derive(Debug, Error)]
#[error("unrecognized policy spec '{spec}': {reason}")]
pub struct PolicySpecError {
    pub spec: String,
    pub reason: String,
}

/// Belief parameters a bandit-playing policy assumes; defaults match the
/// evaluation protocol (mu0 = 0, tau0 = tau = 10).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefPrior {
    pub mu0: [f64; 2],
    pub tau0: [f64; 2],
    pub tau: [f64; 2],
}

impl Default for BeliefPrior {
    fn default() -> Self {
        Self {
            mu0: [0.0, 0.0],
            tau0: [10.0, 10.0],
            tau: [10.0, 10.0],
        }
    }
}

impl BeliefPrior {
    fn initial_state(&self) -> PosteriorState {
        PosteriorState {
            q: self.mu0,
            var: [self.tau0[0] * self.tau0[0], self.tau0[1] * self.tau0[1]],
        }
    }
}

/// Folds per-arm reward histories (as printed in the prompt) through the
/// conjugate update. Gaussian posteriors depend only on each arm's count
/// and sum, so the lost interleaving order is immaterial.
pub fn beliefs_from_histories(prior: &BeliefPrior, history: &[Vec<f64>; 2]) -> PosteriorState {
    let mut state = prior.initial_state();
    for (arm, rewards) in history.iter().enumerate() {
        for &reward in rewards {
            state = kalman_update(&state, arm, reward, prior.tau[arm] * prior.tau[arm]);
        }
    }
    state
}

/// Upper-confidence-bound choice: argmax of Q + beta·sigma, ties to arm 0.
pub fn ucb_policy(q: [f64; 2], sigma: [f64; 2], beta: f64) -> usize {
    if q[0] + beta * sigma[0] >= q[1] + beta * sigma[1] {
        0
    } else {
        1
    }
}

/// Probabilistic choice: arm 0 with probability Phi(w1·V + w2·RU).
pub fn probit_policy<R: Rng>(w1: f64, w2: f64, state: &PosteriorState, rng: &mut R) -> usize {
    let r = regressors(state);
    let p0 = std_normal_cdf(w1 * r.v + w2 * r.ru);
    if rng.gen::<f64>() < p0 {
        0
    } else {
        1
    }
}

/// Answer key for multiple-choice oracles: SHA-256 of the rendered prompt
/// text mapped to the gold letter.
pub type AnswerKey = Arc<BTreeMap<String, char>>;

/// Digest used to key scripted multiple-choice answers.
pub fn prompt_digest(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone)]
pub enum Policy {
    /// Uniform choice over whatever the query offers.
    Random,
    /// Deterministic UCB bandit player.
    Ucb { beta: f64, prior: BeliefPrior },
    /// Probit bandit player with known generator weights.
    Probit {
        w1: f64,
        w2: f64,
        prior: BeliefPrior,
    },
    /// Replies with the same text regardless of the query.
    ConstantText { text: String },
    /// Location choice keyed by the time block, constant across days.
    CycleByBlock,
    /// Answers multiple-choice items from a key with the given accuracy.
    McqKeyed { key: AnswerKey, accuracy: f64 },
    /// Always the same option letter.
    McqConstant { letter: char },
    /// Always the same agreement level (1..=5).
    LikertConstant { value: u8 },
}

/// Parses a CLI policy spec: `random`, `ucb`, `ucb:<beta>`,
/// `probit:<w1>,<w2>`, `constant:<text>`, `cycle`,
/// `mcq-constant:<letter>`, `likert-constant:<1-5>`.
pub fn parse_policy_spec(spec: &str) -> Result<Policy, PolicySpecError> {
    let err = |reason: &str| PolicySpecError {
        spec: spec.to_string(),
        reason: reason.to_string(),
    };
    let (head, arg) = match spec.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (spec, None),
    };
    match (head, arg) {
        ("random", None) => Ok(Policy::Random),
        ("cycle", None) => Ok(Policy::CycleByBlock),
        ("ucb", None) => Ok(Policy::Ucb {
            beta: 1.0,
            prior: BeliefPrior::default(),
        }),
        ("ucb", Some(a)) => Ok(Policy::Ucb {
            beta: a.trim().parse().map_err(|_| err("beta must be a number"))?,
            prior: BeliefPrior::default(),
        }),
        ("probit", Some(a)) => {
            let (w1, w2) = a
                .split_once(',')
                .ok_or_else(|| err("expected probit:<w1>,<w2>"))?;
            Ok(Policy::Probit {
                w1: w1.trim().parse().map_err(|_| err("w1 must be a number"))?,
                w2: w2.trim().parse().map_err(|_| err("w2 must be a number"))?,
                prior: BeliefPrior::default(),
            })
        }
        ("constant", Some(a)) if !a.is_empty() => Ok(Policy::ConstantText {
            text: a.to_string(),
        }),
        ("mcq-constant", Some(a)) => {
            let letter = a.trim().to_ascii_uppercase();
            if let Some(c @ 'A'..='D') = letter.chars().next().filter(|_| letter.len() == 1) {
                Ok(Policy::McqConstant { letter: c })
            } else {
                Err(err("letter must be one of A-D"))
            }
        }
        ("likert-constant", Some(a)) => {
            let value: u8 = a.trim().parse().map_err(|_| err("value must be 1-5"))?;
            if (1..=5).contains(&value) {
                Ok(Policy::LikertConstant { value })
            } else {
                Err(err("value must be 1-5"))
            }
        }
        _ => Err(err("unknown policy")),
    }
}

const OPTION_LETTERS: [char; 4] = ['A', 'B', 'C', 'D'];

fn likert_phrase(value: u8) -> &'static str {
    LIKERT_PHRASES[(value as usize).clamp(1, 5) - 1]
}

fn block_rank(block: &str) -> usize {
    match block {
        "morning" => 0,
        "noon" => 1,
        "afternoon" => 2,
        "evening" => 3,
        "rest" => 4,
        other => other.len(),
    }
}

fn random_reply<R: Rng>(query: &TaskQuery, rng: &mut R) -> String {
    match query {
        TaskQuery::Bandit { .. } => rng.gen_range(0..2u8).to_string(),
        TaskQuery::Poi { candidates, .. } => {
            candidates[rng.gen_range(0..candidates.len())].clone()
        }
        TaskQuery::Mcq { .. } => {
            format!("Option {}", OPTION_LETTERS[rng.gen_range(0..4)])
        }
        TaskQuery::Likert { .. } => likert_phrase(rng.gen_range(1..=5)).to_string(),
    }
}

impl Policy {
    /// Computes the reply to a rendered prompt. `request_seed` is the only
    /// source of randomness.
    pub fn respond(&self, messages: &[ChatMessage], request_seed: u64) -> String {
        let prompt = messages
            .iter()
            .rev()
            .find(|m| m.role == super::Role::User)
            .map(|m| m.content.as_str())
            .unwrap_or("");
        let mut rng = ChaCha20Rng::seed_from_u64(request_seed);
        if let Policy::ConstantText { text } = self {
            return text.clone();
        }
        let Some(query) = parse_task_query(prompt) else {
            return "?".to_string();
        };
        match (self, &query) {
            (Policy::Random, _) => random_reply(&query, &mut rng),
            (Policy::Ucb { beta, prior }, TaskQuery::Bandit { history, .. }) => {
                let state = beliefs_from_histories(prior, history);
                let sigma = [state.var[0].sqrt(), state.var[1].sqrt()];
                ucb_policy(state.q, sigma, *beta).to_string()
            }
            (Policy::Probit { w1, w2, prior }, TaskQuery::Bandit { history, .. }) => {
                let state = beliefs_from_histories(prior, history);
                probit_policy(*w1, *w2, &state, &mut rng).to_string()
            }
            (Policy::CycleByBlock, TaskQuery::Poi { block, candidates, .. }) => {
                candidates[block_rank(block) % candidates.len()].clone()
            }
            (Policy::McqKeyed { key, accuracy }, TaskQuery::Mcq { .. }) => {
                let gold = key.get(&prompt_digest(prompt)).copied();
                match gold {
                    Some(letter) if rng.gen::<f64>() < *accuracy => format!("Option {letter}"),
                    Some(letter) => {
                        let wrong: Vec<char> = OPTION_LETTERS
                            .iter()
                            .copied()
                            .filter(|c| *c != letter)
                            .collect();
                        format!("Option {}", wrong[rng.gen_range(0..wrong.len())])
                    }
                    None => random_reply(&query, &mut rng),
                }
            }
            (Policy::McqConstant { letter }, TaskQuery::Mcq { .. }) => {
                format!("Option {letter}")
            }
            (Policy::LikertConstant { value }, TaskQuery::Likert { .. }) => {
                likert_phrase(*value).to_string()
            }
            // a policy asked about a task it has no rule for answers randomly
            _ => random_reply(&query, &mut rng),
        }
    }
}
