//! Uniform chat-completion gateway: pluggable backends behind
//! content-addressed response caching, with per-key write serialization,
//! a bound on in-flight backend calls, and retry on rate limiting.

pub mod backends;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::content_hash;
use crate::prompt::RenderedPrompt;

pub use backends::{CompletionBackend, HttpBackend, MockBackend, ReplayBackend};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("no API credential: set HREX_API_KEY")]
    AuthMissing,
    #[error("backend timed out after {0:?}")]
    BackendTimeout(Duration),
    #[error("rate limited (retry after {retry_after:?})")]
    RateLimited { retry_after: Option<Duration> },
    #[error("no replay fixture for key {0}")]
    ReplayMiss(String),
    #[error("backend returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed backend response: {0}")]
    BadResponse(String),
    #[error("cache I/O at {path}: {source}")]
    CacheIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid completion params: {0}")]
    InvalidParams(String),
    #[error("run {run_index} failed: {source}")]
    RunFailed {
        run_index: u32,
        #[source]
        source: Box<GatewayError>,
    },
}

/// Request knobs shared by every backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    #[serde(with = "duration_secs")]
    pub timeout: Duration,
}

mod duration_secs {
    use super::Duration;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        d.as_secs_f64().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?))
    }
}

impl Default for CompletionParams {
    fn default() -> Self {
        CompletionParams {
            model: "gpt-3.5-turbo".into(),
            temperature: 0.0,
            max_tokens: 1024,
            timeout: Duration::from_secs(60),
        }
    }
}

impl CompletionParams {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.model.trim().is_empty() {
            return Err(GatewayError::InvalidParams("empty model id".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) || self.temperature.is_nan() {
            return Err(GatewayError::InvalidParams(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::InvalidParams("max_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

/// Which backend produced a completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Http,
    Replay,
    Mock,
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BackendKind::Http => "http",
            BackendKind::Replay => "replay",
            BackendKind::Mock => "mock",
        })
    }
}

/// One completion, as returned to callers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionResult {
    pub raw_text: String,
    pub backend: BackendKind,
    pub cached: bool,
    pub latency: Duration,
}

/// On-disk cache entry. The same schema serves as the replay fixture
/// format, so a populated cache directory is directly usable as a fixture
/// set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub raw_text: String,
    pub model: String,
    pub recorded_at: String,
}

/// Content hash binding a completion request: model, temperature,
/// prompt hash, and run index. Distinct run indices get distinct keys so
/// repeated sampling caches each run separately.
pub fn cache_key(model: &str, temperature: f64, prompt_hash: &str, run_index: u32) -> String {
    content_hash(&[
        model,
        &format!("{temperature}"),
        prompt_hash,
        &run_index.to_string(),
    ])
}

/// Counting semaphore bounding simultaneous backend calls.
struct InflightLimiter {
    slots: Mutex<usize>,
    freed: Condvar,
}

impl InflightLimiter {
    fn new(limit: usize) -> Self {
        InflightLimiter {
            slots: Mutex::new(limit.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> InflightPermit<'_> {
        let mut slots = self.slots.lock().unwrap();
        while *slots == 0 {
            slots = self.freed.wait(slots).unwrap();
        }
        *slots -= 1;
        InflightPermit { limiter: self }
    }
}

struct InflightPermit<'a> {
    limiter: &'a InflightLimiter,
}

impl Drop for InflightPermit<'_> {
    fn drop(&mut self) {
        *self.limiter.slots.lock().unwrap() += 1;
        self.limiter.freed.notify_one();
    }
}

/// Cache-fronted completion dispatcher, safe for concurrent use.
pub struct Gateway {
    backend: Box<dyn CompletionBackend>,
    cache_dir: Option<PathBuf>,
    inflight: InflightLimiter,
    key_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    max_attempts: u32,
    backoff_base: Duration,
}

impl Gateway {
    pub fn new(backend: Box<dyn CompletionBackend>, cache_dir: Option<PathBuf>) -> Self {
        Gateway {
            backend,
            cache_dir,
            inflight: InflightLimiter::new(4),
            key_locks: Mutex::new(HashMap::new()),
            max_attempts: 3,
            backoff_base: Duration::from_millis(250),
        }
    }

    /// Cap on simultaneous in-flight backend calls.
    pub fn with_inflight_limit(mut self, limit: usize) -> Self {
        self.inflight = InflightLimiter::new(limit);
        self
    }

    /// Attempt budget for rate-limited requests (1 = no retries).
    pub fn with_max_attempts(mut self, attempts: u32) -> Self {
        self.max_attempts = attempts.max(1);
        self
    }

    /// First backoff sleep; doubles per retry unless the server stated a
    /// retry-after.
    pub fn with_backoff_base(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }

    pub fn backend_kind(&self) -> BackendKind {
        self.backend.kind()
    }

    fn cache_path(&self, key: &str) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    fn read_cache(&self, key: &str) -> Result<Option<CacheEntry>, GatewayError> {
        let Some(path) = self.cache_path(key) else {
            return Ok(None);
        };
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                let entry = serde_json::from_str(&text)
                    .map_err(|e| GatewayError::BadResponse(format!("cache entry {path:?}: {e}")))?;
                Ok(Some(entry))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(GatewayError::CacheIo { path, source }),
        }
    }

    /// Persist via temp-file-then-rename so concurrent readers never see a
    /// torn entry.
    fn write_cache(&self, key: &str, entry: &CacheEntry) -> Result<(), GatewayError> {
        let Some(path) = self.cache_path(key) else {
            return Ok(());
        };
        let dir = path.parent().expect("cache path has a parent");
        std::fs::create_dir_all(dir).map_err(|source| GatewayError::CacheIo {
            path: dir.to_path_buf(),
            source,
        })?;
        let tmp = dir.join(format!(".{key}.tmp"));
        let body = serde_json::to_string_pretty(entry).expect("cache entry serializes");
        std::fs::write(&tmp, body).map_err(|source| GatewayError::CacheIo {
            path: tmp.clone(),
            source,
        })?;
        std::fs::rename(&tmp, &path).map_err(|source| GatewayError::CacheIo { path, source })
    }

    fn key_lock(&self, key: &str) -> Arc<Mutex<()>> {
        let mut locks = self.key_locks.lock().unwrap();
        locks.entry(key.to_string()).or_default().clone()
    }

    /// Resolve one completion: cache first, then backend with retry, then
    /// atomic persistence before returning.
    pub fn complete(
        &self,
        prompt: &RenderedPrompt,
        params: &CompletionParams,
        run_index: u32,
    ) -> Result<CompletionResult, GatewayError> {
        params.validate()?;
        let started = Instant::now();
        let key = cache_key(&params.model, params.temperature, &prompt.prompt_hash, run_index);

        if let Some(entry) = self.read_cache(&key)? {
            return Ok(CompletionResult {
                raw_text: entry.raw_text,
                backend: self.backend.kind(),
                cached: true,
                latency: started.elapsed(),
            });
        }

        let lock = self.key_lock(&key);
        let _guard = lock.lock().unwrap();
        // Another caller may have filled the cache while we waited.
        if let Some(entry) = self.read_cache(&key)? {
            return Ok(CompletionResult {
                raw_text: entry.raw_text,
                backend: self.backend.kind(),
                cached: true,
                latency: started.elapsed(),
            });
        }

        let raw_text = self.invoke_with_retry(prompt, params, &key)?;
        self.write_cache(
            &key,
            &CacheEntry {
                raw_text: raw_text.clone(),
                model: params.model.clone(),
                recorded_at: now_rfc3339(),
            },
        )?;
        Ok(CompletionResult {
            raw_text,
            backend: self.backend.kind(),
            cached: false,
            latency: started.elapsed(),
        })
    }

    fn invoke_with_retry(
        &self,
        prompt: &RenderedPrompt,
        params: &CompletionParams,
        key: &str,
    ) -> Result<String, GatewayError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            let _permit = self.inflight.acquire();
            match self.backend.complete(prompt, params, key) {
                Err(GatewayError::RateLimited { retry_after }) if attempt < self.max_attempts => {
                    drop(_permit);
                    let backoff = self.backoff_base * 2u32.saturating_pow(attempt - 1);
                    std::thread::sleep(retry_after.unwrap_or(backoff));
                }
                other => return other,
            }
        }
    }

    /// Run the same prompt `n_runs` times, each run cached under its own
    /// key; results come back ordered by run index.
    pub fn complete_runs(
        &self,
        prompt: &RenderedPrompt,
        params: &CompletionParams,
        n_runs: u32,
    ) -> Result<Vec<CompletionResult>, GatewayError> {
        if n_runs == 0 {
            return Err(GatewayError::InvalidParams("n_runs must be >= 1".into()));
        }
        (0..n_runs)
            .map(|run_index| {
                self.complete(prompt, params, run_index)
                    .map_err(|e| GatewayError::RunFailed {
                        run_index,
                        source: Box::new(e),
                    })
            })
            .collect()
    }
}

/// UTC wall-clock in RFC 3339 form, seconds precision.
pub fn now_rfc3339() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .expect("clock after epoch")
        .as_secs();
    // Civil-date conversion (days since epoch -> y/m/d), Howard Hinnant's
    // algorithm.
    let days = (secs / 86_400) as i64;
    let rem = secs % 86_400;
    let (h, m, s) = (rem / 3600, (rem % 3600) / 60, rem % 60);
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let mo = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = if mo <= 2 { y + 1 } else { y };
    format!("{y:04}-{mo:02}-{d:02}T{h:02}:{m:02}:{s:02}Z")
}
