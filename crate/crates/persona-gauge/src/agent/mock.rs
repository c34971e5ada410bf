//! Minimal in-process chat-completions server for tests and offline
//! demos. Speaks just enough HTTP/1.1 for the blocking client: one
//! request per connection, JSON in, JSON out.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde_json::Value;

/// The request a responder sees: the parsed JSON body.
#[derive(Debug, Clone)]
pub struct MockRequest {
    pub model: String,
    pub temperature: f64,
    /// (role, content) in wire order.
    pub messages: Vec<(String, String)>,
}

/// What the mock returns for one request.
#[derive(Debug, Clone)]
pub enum MockReply {
    /// A normal completion wrapping the text in choices[0].message.content.
    Chat(String),
    /// A bare status code with an empty body (e.g. 429, 500).
    Status(u16),
    /// Raw body with status 200, for malformed-response tests.
    RawJson(String),
}

pub struct MockChatServer {
    addr: String,
    requests: Arc<AtomicUsize>,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

fn parse_request(stream: &mut TcpStream) -> Option<MockRequest> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    if !line.starts_with("POST") {
        return None;
    }
    let mut content_length = 0usize;
    loop {
        let mut header = String::new();
        reader.read_line(&mut header).ok()?;
        let header = header.trim_end();
        if header.is_empty() {
            break;
        }
        if let Some(v) = header
            .to_ascii_lowercase()
            .strip_prefix("content-length:")
            .map(str::trim)
            .and_then(|v| v.parse::<usize>().ok())
        {
            content_length = v;
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body).ok()?;
    let json: Value = serde_json::from_slice(&body).ok()?;
    Some(MockRequest {
        model: json["model"].as_str().unwrap_or_default().to_string(),
        temperature: json["temperature"].as_f64().unwrap_or(f64::NAN),
        messages: json["messages"]
            .as_array()
            .map(|arr| {
                arr.iter()
                    .map(|m| {
                        (
                            m["role"].as_str().unwrap_or_default().to_string(),
                            m["content"].as_str().unwrap_or_default().to_string(),
                        )
                    })
                    .collect()
            })
            .unwrap_or_default(),
    })
}

fn write_reply(stream: &mut TcpStream, reply: &MockReply) {
    let (status, body) = match reply {
        MockReply::Chat(text) => (
            200,
            serde_json::json!({
                "choices": [{"message": {"role": "assistant", "content": text}}]
            })
            .to_string(),
        ),
        MockReply::Status(code) => (*code, String::new()),
        MockReply::RawJson(body) => (200, body.clone()),
    };
    let reason = match status {
        200 => "OK",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        _ => "Status",
    };
    let _ = write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let _ = stream.flush();
}

impl MockChatServer {
    /// Starts the server on an ephemeral localhost port. The responder
    /// runs once per request, in arrival order (requests are counted
    /// before the responder sees them, so `nth` starts at 0).
    pub fn start<F>(responder: F) -> Self
    where
        F: Fn(usize, &MockRequest) -> MockReply + Send + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock server");
        let addr = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let shutdown = Arc::new(AtomicBool::new(false));
        let worker_requests = requests.clone();
        let worker_shutdown = shutdown.clone();
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if worker_shutdown.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(mut stream) = stream else { continue };
                match parse_request(&mut stream) {
                    Some(request) => {
                        let nth = worker_requests.fetch_add(1, Ordering::SeqCst);
                        let reply = responder(nth, &request);
                        write_reply(&mut stream, &reply);
                    }
                    None => write_reply(&mut stream, &MockReply::Status(400)),
                }
            }
        });
        Self {
            addr,
            requests,
            shutdown,
            handle: Some(handle),
        }
    }

    /// A server that always replies with the same completion text.
    pub fn constant(text: impl Into<String>) -> Self {
        let text = text.into();
        Self::start(move |_, _| MockReply::Chat(text.clone()))
    }

    /// Endpoint URL to point the client at.
    pub fn url(&self) -> &str {
        &self.addr
    }

    /// Number of requests served so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockChatServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // unblock accept() with one last connection
        if let Some(authority) = self.addr.strip_prefix("http://").and_then(|a| a.split('/').next()) {
            let _ = TcpStream::connect(authority);
        }
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}
