//! Two-armed Gaussian bandit: hidden per-block arm means, noisy pulls,
//! and the campaign runner that drives an agent through the protocol.
//!
//! Per block, each arm's mean is drawn once from Normal(mu0, tau0²) and
//! held fixed; every pull returns Normal(mean, tau²). The agent only ever
//! sees its own reward history, never the means.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::AgentHandle;
use crate::config::BanditParams;
use crate::prompts::render_bandit_prompt;
use crate::seeds;

pub const ARMS: usize = 2;

#[derive(Debug, Error)]
pub enum BanditError {
    #[error("invalid bandit spec: {0}")]
    InvalidSpec(String),
    #[error("block {block}: {source}")]
    Agent {
        block: usize,
        #[source]
        source: crate::agent::AgentError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BanditSpec {
    pub mu0: [f64; 2],
    pub tau0: [f64; 2],
    pub tau: [f64; 2],
    pub trials_per_block: usize,
    pub blocks: usize,
}

impl BanditSpec {
    pub fn from_params(params: &BanditParams) -> Result<Self, BanditError> {
        let spec = Self {
            mu0: params.mu0,
            tau0: params.tau0,
            tau: params.tau,
            trials_per_block: params.trials_per_block,
            blocks: params.blocks,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The protocol defaults: mu0 = 0, tau0 = tau = 10, 10 trials x 100 blocks.
    pub fn protocol_default() -> Self {
        Self {
            mu0: [0.0, 0.0],
            tau0: [10.0, 10.0],
            tau: [10.0, 10.0],
            trials_per_block: 10,
            blocks: 100,
        }
    }

    pub fn validate(&self) -> Result<(), BanditError> {
        for k in 0..ARMS {
            // zero scales are the degenerate test mode; negatives (and
            // NaN, which fails the >= too) are bugs
            let scales_ok = self.tau0[k] >= 0.0 && self.tau[k] >= 0.0;
            if !scales_ok {
                return Err(BanditError::InvalidSpec(
                    "scale parameters must be non-negative".into(),
                ));
            }
            if !self.mu0[k].is_finite() {
                return Err(BanditError::InvalidSpec("prior means must be finite".into()));
            }
        }
        if self.trials_per_block == 0 || self.blocks == 0 {
            return Err(BanditError::InvalidSpec(
                "trials_per_block and blocks must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One block's hidden truth. Never rendered into prompts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockInstance {
    pub arm_means: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoiceRecord {
    pub block: usize,
    pub trial: usize,
    pub arm: u8,
    /// Full-precision reward; prompts show it rounded to 2 decimals.
    pub reward: f64,
    /// Set when the agent reply was unusable and the arm was drawn
    /// uniformly at random instead.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditTrajectory {
    pub spec: BanditSpec,
    pub records: Vec<ChoiceRecord>,
    /// Environment seed per block, recorded for replay.
    pub block_seeds: Vec<u64>,
}

fn sample_normal<R: Rng>(mean: f64, sd: f64, rng: &mut R) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    Normal::new(mean, sd).expect("finite parameters").sample(rng)
}

/// Draws one block's arm means from the prior.
pub fn sample_block<R: Rng>(spec: &BanditSpec, rng: &mut R) -> BlockInstance {
    let mut arm_means = [0.0; 2];
    for (k, mean) in arm_means.iter_mut().enumerate() {
        *mean = sample_normal(spec.mu0[k], spec.tau0[k], rng);
    }
    BlockInstance { arm_means }
}

/// Draws one reward from the chosen arm.
pub fn pull<R: Rng>(instance: &BlockInstance, arm: usize, spec: &BanditSpec, rng: &mut R) -> f64 {
    sample_normal(instance.arm_means[arm], spec.tau[arm], rng)
}

/// Runs one block: renders the slot-machine prompt from the per-arm reward
/// history, asks the agent, pulls the chosen arm, and appends a record per
/// trial. Replies with no usable machine token are re-asked with a fresh
/// request seed up to `max_reprompts` times; a persistently unusable trial
/// falls back to a uniformly random arm and is flagged.
///
/// Returns the block's records and the environment seed that generated its
/// hidden means and rewards.
pub fn run_block(
    agent: &AgentHandle,
    spec: &BanditSpec,
    block: usize,
    master_seed: u64,
    max_reprompts: u32,
) -> Result<(Vec<ChoiceRecord>, u64), BanditError> {
    let persona = agent.persona_label();
    let block_tag = block.to_string();
    let env_seed = seeds::derive_u64(master_seed, &["bandit", &persona, &block_tag, "env"]);
    let mut env_rng = rand_chacha::ChaCha20Rng::seed_from_u64(env_seed);
    let instance = sample_block(spec, &mut env_rng);

    let mut history: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut records = Vec::with_capacity(spec.trials_per_block);
    for trial in 0..spec.trials_per_block {
        let prompt = render_bandit_prompt(spec.trials_per_block, trial + 1, &history);
        let trial_tag = trial.to_string();
        let mut chosen = None;
        for attempt in 0..=max_reprompts {
            let request_seed = seeds::derive_u64(
                master_seed,
                &[
                    "bandit",
                    &persona,
                    &block_tag,
                    &trial_tag,
                    "req",
                    &attempt.to_string(),
                ],
            );
            let reply = agent
                .query(&prompt, request_seed)
                .map_err(|source| BanditError::Agent { block, source })?;
            if let Some(arm) = parse_arm_choice(&reply) {
                chosen = Some(arm);
                break;
            }
        }
        let (arm, flagged) = match chosen {
            Some(arm) => (arm, false),
            None => {
                let mut fallback = seeds::derive_rng(
                    master_seed,
                    &["bandit", &persona, &block_tag, &trial_tag, "fallback"],
                );
                (fallback.gen_range(0..ARMS as u8), true)
            }
        };
        let reward = pull(&instance, arm as usize, spec, &mut env_rng);
        history[arm as usize].push(reward);
        records.push(ChoiceRecord {
            block,
            trial,
            arm,
            reward,
            flagged,
        });
    }
    Ok((records, env_seed))
}

/// Runs every block of the protocol and concatenates the records. Blocks
/// are seeded independently from (master seed, persona, block index), so
/// the trajectory does not depend on execution order.
pub fn run_campaign(
    agent: &AgentHandle,
    spec: &BanditSpec,
    master_seed: u64,
    max_reprompts: u32,
) -> Result<BanditTrajectory, BanditError> {
    spec.validate()?;
    let mut records = Vec::with_capacity(spec.blocks * spec.trials_per_block);
    let mut block_seeds = Vec::with_capacity(spec.blocks);
    for block in 0..spec.blocks {
        let (block_records, env_seed) = run_block(agent, spec, block, master_seed, max_reprompts)?;
        records.extend(block_records);
        block_seeds.push(env_seed);
    }
    Ok(BanditTrajectory {
        spec: *spec,
        records,
        block_seeds,
    })
}

/// Extracts a machine choice from free-form reply text: the first
/// standalone `0` or `1` token.
pub fn parse_arm_choice(reply: &str) -> Option<u8> {
    let bytes = reply.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b != b'0' && b != b'1' {
            continue;
        }
        let left_ok = i == 0 || !bytes[i - 1].is_ascii_alphanumeric();
        let right_ok = i + 1 >= bytes.len() || !bytes[i + 1].is_ascii_alphanumeric();
        if left_ok && right_ok {
            return Some(b - b'0');
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn degenerate_scales_return_means_exactly() {
        let spec = BanditSpec {
            mu0: [3.0, -3.0],
            tau0: [0.0, 0.0],
            tau: [0.0, 0.0],
            trials_per_block: 1,
            blocks: 1,
        };
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let instance = sample_block(&spec, &mut rng);
        assert_eq!(instance.arm_means, [3.0, -3.0]);
        assert_eq!(pull(&instance, 0, &spec, &mut rng), 3.0);
        assert_eq!(pull(&instance, 1, &spec, &mut rng), -3.0);
    }

    #[test]
    fn fixed_seed_reproduces_samples() {
        let spec = BanditSpec::protocol_default();
        let a = sample_block(&spec, &mut ChaCha20Rng::seed_from_u64(7));
        let b = sample_block(&spec, &mut ChaCha20Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }

    #[test]
    fn block_sampling_matches_prior_moments() {
        let spec = BanditSpec::protocol_default();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let m = sample_block(&spec, &mut rng).arm_means[0];
            sum += m;
            sum_sq += m * m;
        }
        let mean = sum / n as f64;
        let sd = (sum_sq / n as f64 - mean * mean).sqrt();
        // 3 standard errors of the mean; 2% on the spread
        assert!(mean.abs() < 3.0 * 10.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((sd - 10.0).abs() < 0.2, "sd {sd}");
    }

    #[test]
    fn pull_moments_match_arm_distribution() {
        let spec = BanditSpec::protocol_default();
        let instance = BlockInstance {
            arm_means: [4.0, -2.0],
        };
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let r = pull(&instance, 1, &spec, &mut rng);
            sum += r;
            sum_sq += r * r;
        }
        let mean = sum / n as f64;
        let sd = (sum_sq / n as f64 - mean * mean).sqrt();
        assert!((mean + 2.0).abs() < 3.0 * 10.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((sd - 10.0).abs() < 0.2, "sd {sd}");
    }

    #[test]
    fn arm_choice_parsing_handles_free_text() {
        assert_eq!(parse_arm_choice("0"), Some(0));
        assert_eq!(parse_arm_choice(" 1 "), Some(1));
        assert_eq!(parse_arm_choice("machine 1"), Some(1));
        assert_eq!(parse_arm_choice("I choose machine 0."), Some(0));
        assert_eq!(parse_arm_choice("Answer: 1"), Some(1));
        assert_eq!(parse_arm_choice("10 points"), None);
        assert_eq!(parse_arm_choice("machine A"), None);
        assert_eq!(parse_arm_choice(""), None);
    }

    #[test]
    fn spec_rejects_negative_scales() {
        let mut spec = BanditSpec::protocol_default();
        spec.tau[0] = -1.0;
        assert!(spec.validate().is_err());
    }

    use crate::agent::{parse_policy_spec, AgentHandle};

    fn scripted(policy_spec: &str) -> AgentHandle {
        AgentHandle::scripted(parse_policy_spec(policy_spec).unwrap())
    }

    #[test]
    fn constant_zero_policy_always_pulls_arm_zero() {
        let spec = BanditSpec {
            trials_per_block: 10,
            blocks: 3,
            ..BanditSpec::protocol_default()
        };
        let traj = run_campaign(&scripted("constant:0"), &spec, 5, 3).unwrap();
        assert_eq!(traj.records.len(), 30);
        assert!(traj.records.iter().all(|r| r.arm == 0 && !r.flagged));
        assert_eq!(traj.block_seeds.len(), 3);
    }

    #[test]
    fn single_trial_single_block_yields_one_record() {
        let spec = BanditSpec {
            trials_per_block: 1,
            blocks: 1,
            ..BanditSpec::protocol_default()
        };
        let traj = run_campaign(&scripted("ucb"), &spec, 9, 3).unwrap();
        assert_eq!(traj.records.len(), 1);
        assert_eq!(traj.records[0].block, 0);
        assert_eq!(traj.records[0].trial, 0);
    }

    #[test]
    fn full_protocol_yields_thousand_records() {
        let spec = BanditSpec::protocol_default();
        let traj = run_campaign(&scripted("ucb"), &spec, 11, 3).unwrap();
        assert_eq!(traj.records.len(), 1000);
        assert_eq!(traj.block_seeds.len(), 100);
        for (b, chunk) in traj.records.chunks(10).enumerate() {
            for (t, r) in chunk.iter().enumerate() {
                assert_eq!((r.block, r.trial), (b, t));
            }
        }
    }

    #[test]
    fn same_master_seed_reproduces_the_trajectory() {
        let spec = BanditSpec {
            blocks: 5,
            ..BanditSpec::protocol_default()
        };
        let a = run_campaign(&scripted("probit:0.4,0.3"), &spec, 21, 3).unwrap();
        let b = run_campaign(&scripted("probit:0.4,0.3"), &spec, 21, 3).unwrap();
        assert_eq!(a, b);
        let c = run_campaign(&scripted("probit:0.4,0.3"), &spec, 22, 3).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn unusable_replies_fall_back_to_flagged_random_arms() {
        let spec = BanditSpec {
            trials_per_block: 10,
            blocks: 20,
            ..BanditSpec::protocol_default()
        };
        let traj = run_campaign(&scripted("constant:no idea"), &spec, 31, 3).unwrap();
        assert!(traj.records.iter().all(|r| r.flagged));
        // the uniform fallback should visit both arms
        let zeros = traj.records.iter().filter(|r| r.arm == 0).count();
        assert!(zeros > 50 && zeros < 150, "zeros {zeros}");
    }

    #[test]
    fn prompts_never_leak_hidden_arm_means() {
        let spec = BanditSpec {
            blocks: 4,
            ..BanditSpec::protocol_default()
        };
        let master_seed = 17;
        let agent = scripted("ucb");
        let traj = run_campaign(&agent, &spec, master_seed, 3).unwrap();
        for (block, &env_seed) in traj.block_seeds.iter().enumerate() {
            // replay the hidden means from the recorded environment seed
            let mut env_rng = ChaCha20Rng::seed_from_u64(env_seed);
            let instance = sample_block(&spec, &mut env_rng);
            let mut history: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
            for r in traj.records.iter().filter(|r| r.block == block) {
                let prompt =
                    crate::prompts::render_bandit_prompt(spec.trials_per_block, r.trial + 1, &history);
                for mean in instance.arm_means {
                    assert!(
                        !prompt.contains(&format!("{mean}")),
                        "hidden mean leaked into prompt"
                    );
                }
                history[r.arm as usize].push(r.reward);
            }
        }
    }

    #[test]
    fn block_seeds_differ_across_blocks_and_personas() {
        let spec = BanditSpec {
            trials_per_block: 1,
            blocks: 3,
            ..BanditSpec::protocol_default()
        };
        let bare = run_campaign(&scripted("constant:0"), &spec, 2, 3).unwrap();
        assert_ne!(bare.block_seeds[0], bare.block_seeds[1]);
        assert_ne!(bare.block_seeds[1], bare.block_seeds[2]);

        let personas = crate::persona::load_personas(
            &std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/personas"),
        )
        .unwrap();
        let labeled = AgentHandle::scripted(parse_policy_spec("constant:0").unwrap())
            .with_persona(personas.into_values().next().unwrap());
        let with_persona = run_campaign(&labeled, &spec, 2, 3).unwrap();
        assert_ne!(bare.block_seeds, with_persona.block_seeds);
    }
}
