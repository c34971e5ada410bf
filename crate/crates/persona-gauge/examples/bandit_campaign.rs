//! Runs the two-armed bandit protocol (10 trials x 100 blocks) for a UCB
//! player and a uniform-random player and compares earnings.

use persona_gauge::agent::policy::BeliefPrior;
use persona_gauge::agent::{AgentHandle, Policy};
use persona_gauge::bandit::{run_campaign, BanditSpec};

fn main() -> anyhow::Result<()> {
    let spec = BanditSpec::protocol_default();
    println!(
        "protocol: {} trials x {} blocks, prior mean {} (scale {}), reward noise {}\n",
        spec.trials_per_block, spec.blocks, spec.mu0[0], spec.tau0[0], spec.tau[0]
    );

    let agents = [
        (
            "ucb",
            Policy::Ucb {
                beta: 1.0,
                prior: BeliefPrior::default(),
            },
        ),
        ("random", Policy::Random),
    ];

    for (name, policy) in agents {
        let agent = AgentHandle::scripted(policy);
        let traj = run_campaign(&agent, &spec, 42, 2)?;
        let total: f64 = traj.records.iter().map(|r| r.reward).sum();
        let arm0 = traj.records.iter().filter(|r| r.arm == 0).count();
        let flagged = traj.records.iter().filter(|r| r.flagged).count();
        println!(
            "{:<8} mean reward {:>7.3}  arm-0 share {:.2}  flagged {}",
            name,
            total / traj.records.len() as f64,
            arm0 as f64 / traj.records.len() as f64,
            flagged,
        );
    }

    println!(
        "\nUCB tracks per-arm posteriors across a block and earns more than \
         uniform play; arm identities are symmetric so both hover near a 0.5 \
         arm-0 share."
    );
    Ok(())
}
