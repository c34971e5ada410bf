//! Loads the 16 shipped persona profiles and shows how one becomes the
//! role-setting system message.

use std::path::Path;

use persona_gauge::mbti::{Axis, MbtiCode};
use persona_gauge::persona::{load_persona_set, render_role_prompt};

fn main() -> anyhow::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/personas");
    let profiles = load_persona_set(&dir, &MbtiCode::all())?;

    println!("{} personas from {}\n", profiles.len(), dir.display());
    for profile in &profiles {
        let first_sentence = profile
            .profile_text()
            .split_inclusive('.')
            .next()
            .unwrap_or_default();
        println!("{}  {:<12} {}", profile.code, profile.persona_name, first_sentence);
    }

    println!("\naxis groups:");
    for axis in Axis::ALL {
        let (a, b) = axis.labels();
        let firsts: Vec<String> = profiles
            .iter()
            .filter(|p| axis.in_first_group(&p.code))
            .map(|p| p.code.to_string())
            .collect();
        println!("  {axis}: {a}-group = {}  (the other 8 are {b})", firsts.join(" "));
    }

    let sample = &profiles[0];
    println!(
        "\nrole prompt sent as the system message for {}:\n{}",
        sample.code,
        render_role_prompt(sample)
    );
    Ok(())
}
