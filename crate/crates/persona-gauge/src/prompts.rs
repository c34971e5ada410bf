//! Task prompt templates, rendering, and structured re-parsing.
//!
//! Every task speaks to the agent through one of four fixed templates.
//! Rendering is byte-deterministic (stable candidate order, fixed reward
//! formatting) so identical queries hash to identical cache keys.
//!
//! `parse_task_query` inverts the rendering: scripted policies use it to
//! recover the task state from the same prompt text a remote model sees,
//! which keeps both backends on one code path.

/// A rendered task prompt, decoded back into its structured form.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskQuery {
    /// Location-choice query: infer where a person is at `day` `block`.
    Poi {
        day: String,
        block: String,
        candidates: Vec<String>,
    },
    /// Two-armed bandit trial with per-arm reward history.
    Bandit {
        total_trials: usize,
        current_trial: usize,
        history: [Vec<f64>; 2],
    },
    /// Four-option multiple-choice question.
    Mcq {
        subject: String,
        stem: String,
        options: [String; 4],
    },
    /// Five-point agreement rating of a statement.
    Likert { statement: String },
}

/// Formats a reward the way it appears in prompts: fixed two decimals.
pub fn format_reward(r: f64) -> String {
    format!("{r:.2}")
}

fn format_history(history: &[f64]) -> String {
    history
        .iter()
        .map(|r| format_reward(*r))
        .collect::<Vec<_>>()
        .join(",")
}

/// Location-choice prompt. `candidates` must already be in catalog order.
pub fn render_poi_prompt(day: &str, block: &str, candidates: &[String]) -> String {
    format!(
        "You need to infer the most likely location where a person would appear \
         when it is {day} {block}, please give the answer directly without \
         explanation. And the candidate locations are {}.",
        candidates.join(", ")
    )
}

/// Bandit trial prompt. The first trial-count slot carries the horizon,
/// the second the current 1-based trial.
pub fn render_bandit_prompt(
    total_trials: usize,
    current_trial: usize,
    history: &[Vec<f64>; 2],
) -> String {
    format!(
        "In this game, you have a choice between two slot machines, represented \
         by machine 0 and machine 1. Your goal is to choose the slot machine \
         that will give you the most points over the course of {total_trials} \
         trials. You have received the following points in the past: \
         List of points received from machine 0:{}. \
         List of points received from machine 1:{}. \
         Question: You are now performing trial {current_trial}. Which machine \
         do you choose between machine 0 and machine 1 based on your style? \
         Do not explain. Answer:",
        format_history(&history[0]),
        format_history(&history[1]),
    )
}

/// Multiple-choice prompt: fixed instruction line, then the stem and the
/// four labeled options, ending with an answer cue.
pub fn render_mcq_prompt(subject: &str, stem: &str, options: &[String; 4]) -> String {
    format!(
        "Please choose the correct answer to the multiple choice question about \
         {subject}. Which option do you choose from option A, option B, option C, \
         or option D? Do not explain.\n\
         Question: {stem}\n\
         A. {}\nB. {}\nC. {}\nD. {}\n\
         Answer:",
        options[0], options[1], options[2], options[3],
    )
}

/// Agreement-rating prompt. The `${...}` placeholders are shown to the
/// agent literally as the requested response format; only the statement
/// is substituted.
pub fn render_likert_prompt(statement: &str) -> String {
    format!(
        "Response the statement in the following format: ${{Question number}}. \
         ${{response answer}}. Do you disagree, slightly disagree, neither agree \
         nor disagree, slightly agree, or agree with the following statement? \
         Why? Statement:{statement}."
    )
}

fn between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let s = text.find(start)? + start.len();
    let rest = &text[s..];
    let e = rest.find(end)?;
    Some(&rest[..e])
}

fn parse_poi(text: &str) -> Option<TaskQuery> {
    let when = between(text, "when it is ", ", please give")?;
    let (day, block) = when.rsplit_once(' ')?;
    let list = between(text, "the candidate locations are ", ".")?;
    let candidates: Vec<String> = list.split(", ").map(str::to_string).collect();
    if candidates.iter().any(|c| c.is_empty()) {
        return None;
    }
    Some(TaskQuery::Poi {
        day: day.to_string(),
        block: block.to_string(),
        candidates,
    })
}

fn parse_history(text: &str) -> Option<Vec<f64>> {
    if text.is_empty() {
        return Some(Vec::new());
    }
    text.split(',').map(|t| t.parse::<f64>().ok()).collect()
}

fn parse_bandit(text: &str) -> Option<TaskQuery> {
    let total_trials = between(text, "over the course of ", " trials")?
        .parse::<usize>()
        .ok()?;
    let h0 = between(
        text,
        "List of points received from machine 0:",
        ". List of points received from machine 1:",
    )?;
    let h1 = between(text, "List of points received from machine 1:", ". Question:")?;
    let current_trial = between(text, "You are now performing trial ", ".")?
        .parse::<usize>()
        .ok()?;
    Some(TaskQuery::Bandit {
        total_trials,
        current_trial,
        history: [parse_history(h0)?, parse_history(h1)?],
    })
}

fn parse_mcq(text: &str) -> Option<TaskQuery> {
    let subject = between(text, "question about ", ". Which option")?.to_string();
    let stem = between(text, "Question: ", "\nA. ")?.to_string();
    let a = between(text, "\nA. ", "\nB. ")?.to_string();
    let b = between(text, "\nB. ", "\nC. ")?.to_string();
    let c = between(text, "\nC. ", "\nD. ")?.to_string();
    let d = between(text, "\nD. ", "\nAnswer:")?.to_string();
    Some(TaskQuery::Mcq {
        subject,
        stem,
        options: [a, b, c, d],
    })
}

fn parse_likert(text: &str) -> Option<TaskQuery> {
    let start = text.find("Statement:")? + "Statement:".len();
    let statement = text[start..].strip_suffix('.')?;
    Some(TaskQuery::Likert {
        statement: statement.to_string(),
    })
}

/// Recovers the structured query from rendered prompt text. Returns None
/// for text that matches no template.
pub fn parse_task_query(text: &str) -> Option<TaskQuery> {
    if text.starts_with("You need to infer the most likely location") {
        parse_poi(text)
    } else if text.starts_with("In this game, you have a choice between two slot machines") {
        parse_bandit(text)
    } else if text.starts_with("Please choose the correct answer") {
        parse_mcq(text)
    } else if text.starts_with("Response the statement in the following format") {
        parse_likert(text)
    } else {
        None
    }
}
