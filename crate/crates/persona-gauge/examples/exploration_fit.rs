//! Recovers exploitation (w1) and directed-exploration (w2) weights from
//! bandit trajectories by probit regression, then contrasts the E and I
//! persona groups the way a full evaluation does.

use std::collections::BTreeMap;

use persona_gauge::agent::policy::BeliefPrior;
use persona_gauge::agent::{AgentHandle, Policy};
use persona_gauge::bandit::{run_campaign, BanditSpec};
use persona_gauge::ee::{choice_events, dimension_proportions, fit_probit};
use persona_gauge::mbti::{Axis, MbtiCode};

fn main() -> anyhow::Result<()> {
    let spec = BanditSpec::protocol_default();
    // synthetic ground truth: extraverts explore twice as hard
    let w1 = 0.4;
    let w2_for = |code: &MbtiCode| if Axis::EI.in_first_group(code) { 0.4 } else { 0.2 };

    let mut fits = BTreeMap::new();
    println!("{:<6} {:>6} {:>8} {:>8}", "code", "true", "fit w1", "fit w2");
    for (i, code) in MbtiCode::all().into_iter().enumerate() {
        let w2 = w2_for(&code);
        let agent = AgentHandle::scripted(Policy::Probit {
            w1,
            w2,
            prior: BeliefPrior::default(),
        });
        let traj = run_campaign(&agent, &spec, 1000 + i as u64, 2)?;
        let fit = fit_probit(&choice_events(&traj))?;
        println!("{code:<6} {w2:>6.2} {:>8.3} {:>8.3}", fit.w1, fit.w2);
        fits.insert(code, fit);
    }

    println!("\nper-axis normalized proportions (first group / sum of group means):");
    for summary in dimension_proportions(&fits)? {
        let (a, _) = summary.axis.labels();
        let fmt = |p: Option<f64>| p.map_or("n/a".into(), |v| format!("{v:.3}"));
        println!(
            "  {}: exploitation {a}-share {}  exploration {a}-share {}",
            summary.axis,
            fmt(summary.exploitation.first.proportion),
            fmt(summary.exploration.first.proportion),
        );
    }
    println!(
        "\nonly E/I was built to differ: its exploration share sits well above \
         0.5 while every exploitation share and every other axis stays near 0.5."
    );
    Ok(())
}
