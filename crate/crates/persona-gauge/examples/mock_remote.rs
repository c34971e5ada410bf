//! Exercises the remote chat backend against an in-process mock server:
//! persona system message, missing-credential error, and transparent
//! retry of a transient 500.

use std::path::Path;
use std::time::Duration;

use persona_gauge::agent::{AgentHandle, MockChatServer, MockReply, RemoteConfig, RetryPolicy};
use persona_gauge::mbti::MbtiCode;
use persona_gauge::persona::load_persona_set;

fn main() -> anyhow::Result<()> {
    // fail the first request, then echo what role/content arrived
    let server = MockChatServer::start(|n, req| {
        if n == 0 {
            return MockReply::Status(500);
        }
        let summary: Vec<String> = req
            .messages
            .iter()
            .map(|(role, content)| format!("{role}({} chars)", content.len()))
            .collect();
        MockReply::Chat(format!("saw {}", summary.join(" + ")))
    });
    println!("mock endpoint at {}", server.url());

    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/personas");
    let profile = load_persona_set(&dir, &["ENFJ".parse::<MbtiCode>()?])?.remove(0);
    let config = RemoteConfig::new("demo-model", 0.0).with_endpoint(server.url());
    let agent = AgentHandle::remote(config).with_persona(profile).with_retry(RetryPolicy {
        attempts: 3,
        base_delay: Duration::from_millis(10),
        factor: 2.0,
    });

    std::env::remove_var("PERSONA_GAUGE_API_KEY");
    match agent.query("How do you greet a new coworker?", 7) {
        Err(err) => println!("\nwithout credentials: {err}"),
        Ok(_) => anyhow::bail!("keyless request unexpectedly succeeded"),
    }

    std::env::set_var("PERSONA_GAUGE_API_KEY", "demo-key");
    let reply = agent.query("How do you greet a new coworker?", 7)?;
    println!("with a key:          {reply}");
    println!(
        "\nserver handled {} requests: the keyless attempt never left the \
         client, and the 500 was retried without surfacing.",
        server.request_count()
    );
    Ok(())
}
