//! Batch evaluation harness for quantifying the decision-making profiles
//! of role-playing agents along four axes: adaptability, exploration,
//! reasoning, and safety.
//!
//! The crate is library-first: each capability is callable directly (see
//! `examples/` for one runnable program per capability) and the thin
//! `persona-gauge` binary wires the same entry points into a batch CLI.

pub mod adaptability;
pub mod agent;
pub mod bandit;
pub mod cli;
pub mod config;
pub mod ee;
pub mod mbti;
pub mod persona;
pub mod prompts;
pub mod reasoning;
pub mod report;
pub mod safety;
pub mod seeds;
