//! Completion backends: OpenAI-compatible HTTP, replay fixtures, and a
//! constant mock for tests.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::prompt::RenderedPrompt;

use super::{BackendKind, CacheEntry, CompletionParams, GatewayError};

/// A source of chat completions. `key` is the completion's cache key,
/// which the replay backend uses to address its fixture files.
pub trait CompletionBackend: Send + Sync {
    fn kind(&self) -> BackendKind;
    fn complete(
        &self,
        prompt: &RenderedPrompt,
        params: &CompletionParams,
        key: &str,
    ) -> Result<String, GatewayError>;
}

/// Constant-text backend with concurrency instrumentation for tests.
pub struct MockBackend {
    text: String,
    delay: Duration,
    calls: Arc<AtomicUsize>,
    in_flight: Arc<AtomicUsize>,
    max_in_flight: Arc<AtomicUsize>,
}

impl MockBackend {
    pub fn new(text: impl Into<String>) -> Self {
        MockBackend {
            text: text.into(),
            delay: Duration::ZERO,
            calls: Arc::default(),
            in_flight: Arc::default(),
            max_in_flight: Arc::default(),
        }
    }

    /// Hold each call open for `delay`, making concurrency observable.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn call_count_handle(&self) -> Arc<AtomicUsize> {
        self.calls.clone()
    }

    pub fn max_in_flight_handle(&self) -> Arc<AtomicUsize> {
        self.max_in_flight.clone()
    }
}

impl CompletionBackend for MockBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }

    fn complete(
        &self,
        _prompt: &RenderedPrompt,
        _params: &CompletionParams,
        _key: &str,
    ) -> Result<String, GatewayError> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(self.text.clone())
    }
}

/// Backend that always rate-limits its first `failures` calls; test-only
/// support for the gateway's retry policy.
pub struct FlakyBackend {
    failures: AtomicUsize,
    text: String,
}

impl FlakyBackend {
    pub fn new(failures: usize, text: impl Into<String>) -> Self {
        FlakyBackend {
            failures: AtomicUsize::new(failures),
            text: text.into(),
        }
    }
}

impl CompletionBackend for FlakyBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }

    fn complete(
        &self,
        _prompt: &RenderedPrompt,
        _params: &CompletionParams,
        _key: &str,
    ) -> Result<String, GatewayError> {
        let left = self.failures.load(Ordering::SeqCst);
        if left > 0 {
            self.failures.store(left - 1, Ordering::SeqCst);
            return Err(GatewayError::RateLimited { retry_after: None });
        }
        Ok(self.text.clone())
    }
}

/// Reads completions from a directory of `<cachekey>.json` fixtures. A
/// missing fixture is a hard error — replay never reaches the network.
pub struct ReplayBackend {
    dir: PathBuf,
}

impl ReplayBackend {
    pub fn new(dir: impl AsRef<Path>) -> Self {
        ReplayBackend {
            dir: dir.as_ref().to_path_buf(),
        }
    }
}

impl CompletionBackend for ReplayBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    fn complete(
        &self,
        _prompt: &RenderedPrompt,
        _params: &CompletionParams,
        key: &str,
    ) -> Result<String, GatewayError> {
        let path = self.dir.join(format!("{key}.json"));
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(GatewayError::ReplayMiss(key.to_string()))
            }
            Err(source) => return Err(GatewayError::CacheIo { path, source }),
        };
        let entry: CacheEntry = serde_json::from_str(&text)
            .map_err(|e| GatewayError::BadResponse(format!("fixture {path:?}: {e}")))?;
        Ok(entry.raw_text)
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    max_tokens: u32,
    messages: [ChatMessage<'a>; 2],
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: Option<String>,
}

/// OpenAI-compatible chat-completions backend. The endpoint comes from
/// `HREX_API_BASE` and the credential from `HREX_API_KEY`; credentials are
/// environment-only and never read from files.
pub struct HttpBackend {
    base: String,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(base: impl Into<String>, api_key: impl Into<String>) -> Self {
        let base = base.into();
        HttpBackend {
            base: base.trim_end_matches('/').to_string(),
            api_key: api_key.into(),
            agent: ureq::AgentBuilder::new().build(),
        }
    }

    pub fn from_env() -> Result<Self, GatewayError> {
        let key = std::env::var("HREX_API_KEY")
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or(GatewayError::AuthMissing)?;
        let base = std::env::var("HREX_API_BASE")
            .ok()
            .filter(|b| !b.trim().is_empty())
            .unwrap_or_else(|| "https://api.openai.com/v1".to_string());
        Ok(HttpBackend::new(base, key))
    }
}

fn classify_transport(e: ureq::Transport, timeout: Duration) -> GatewayError {
    let msg = e.to_string();
    if msg.contains("timed out") || msg.contains("timeout") {
        GatewayError::BackendTimeout(timeout)
    } else {
        GatewayError::Transport(msg)
    }
}

impl CompletionBackend for HttpBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Http
    }

    fn complete(
        &self,
        prompt: &RenderedPrompt,
        params: &CompletionParams,
        _key: &str,
    ) -> Result<String, GatewayError> {
        let url = format!("{}/chat/completions", self.base);
        let body = ChatRequest {
            model: &params.model,
            temperature: params.temperature,
            max_tokens: params.max_tokens,
            messages: [
                ChatMessage {
                    role: "system",
                    content: &prompt.system_text,
                },
                ChatMessage {
                    role: "user",
                    content: &prompt.user_text,
                },
            ],
        };
        let resp = self
            .agent
            .post(&url)
            .timeout(params.timeout)
            .set("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body);
        let resp = match resp {
            Ok(r) => r,
            Err(ureq::Error::Status(401 | 403, _)) => return Err(GatewayError::AuthMissing),
            Err(ureq::Error::Status(429, r)) => {
                let retry_after = r
                    .header("retry-after")
                    .and_then(|v| v.trim().parse::<u64>().ok())
                    .map(Duration::from_secs);
                return Err(GatewayError::RateLimited { retry_after });
            }
            Err(ureq::Error::Status(status, r)) => {
                let body = r.into_string().unwrap_or_default();
                return Err(GatewayError::Http { status, body });
            }
            Err(ureq::Error::Transport(t)) => {
                return Err(classify_transport(t, params.timeout))
            }
        };
        let parsed: ChatResponse = resp
            .into_json()
            .map_err(|e| GatewayError::BadResponse(e.to_string()))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| GatewayError::BadResponse("response has no choices".into()))?;
        // Empty content is recorded as-is, not treated as an error.
        Ok(choice.message.content.unwrap_or_default())
    }
}
