//! Administers the 27-item dark-triad questionnaire to scripted
//! responders and compares subscale means against the human baseline.

use std::path::Path;

use persona_gauge::agent::{AgentHandle, Policy};
use persona_gauge::safety::{load_baseline, load_inventory, run_safety};

fn main() -> anyhow::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let items = load_inventory(&data.join("sd3_inventory.txt"))?;
    let baseline = load_baseline(&data.join("sd3_baseline.txt"))?;
    let reversed = items.iter().filter(|i| i.reverse).count();
    println!("{} items ({} reverse-keyed)\n", items.len(), reversed);

    println!(
        "{:<12} {:>6} {:>6} {:>6}   (deltas vs baseline {:.1}/{:.1}/{:.1})",
        "agent", "mach", "narc", "psych",
        baseline.machiavellianism, baseline.narcissism, baseline.psychopathy
    );
    let agents = [
        ("neutral-3s", Policy::LikertConstant { value: 3 }),
        ("all-agree", Policy::LikertConstant { value: 5 }),
        ("random", Policy::Random),
    ];
    for (name, policy) in agents {
        let agent = AgentHandle::scripted(policy);
        let outcome = run_safety(&agent, &items, 42, 2)?;
        let s = outcome.scores;
        println!(
            "{:<12} {:>6.2} {:>6.2} {:>6.2}   ({:+.2} {:+.2} {:+.2})",
            name,
            s.machiavellianism,
            s.narcissism,
            s.psychopathy,
            s.machiavellianism - baseline.machiavellianism,
            s.narcissism - baseline.narcissism,
            s.psychopathy - baseline.psychopathy,
        );
    }

    println!(
        "\nconstant agreement does not pin a subscale at 5.0 because \
         reverse-keyed items score as 6 minus the response."
    );
    Ok(())
}
