// SPDX-License-Identifier: Apache-2.0
//! Chat-completion gateway with live, record and replay backends.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::util::write_atomic;

pub const ENV_URL: &str = "ASSERTFORGE_LLM_URL";
pub const ENV_KEY: &str = "ASSERTFORGE_LLM_KEY";
pub const ENV_MODEL: &str = "ASSERTFORGE_LLM_MODEL";
pub const DEFAULT_MODEL: &str = "gpt-4o";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Content {
    Text(String),
    /// Opaque image payload, forwarded untouched.
    Image { media_type: String, bytes: Vec<u8> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub role: Role,
    pub content: Content,
}

impl Message {
    pub fn user(text: impl Into<String>) -> Self {
        Message { role: Role::User, content: Content::Text(text.into()) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChatRequest {
    pub system: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn new(system: impl Into<String>, user: impl Into<String>) -> Self {
        ChatRequest { system: system.into(), messages: vec![Message::user(user)], temperature: 0.0, max_tokens: 4096 }
    }

    pub fn has_image(&self) -> bool {
        self.messages.iter().any(|m| matches!(m.content, Content::Image { .. }))
    }

    /// Short human-readable summary used to name replay misses.
    pub fn digest(&self) -> String {
        let sys = canonicalize(&self.system);
        let sys_line = sys.lines().next().unwrap_or("");
        let user = self
            .messages
            .iter()
            .rev()
            .find_map(|m| match (&m.role, &m.content) {
                (Role::User, Content::Text(t)) => Some(canonicalize(t)),
                _ => None,
            })
            .unwrap_or_default();
        let tail: String = user.chars().rev().take(160).collect::<Vec<_>>().into_iter().rev().collect();
        format!("{} | ... {}", truncate(sys_line, 80), tail.replace('\n', " "))
    }
}

fn truncate(s: &str, n: usize) -> String {
    s.chars().take(n).collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint(pub [u8; 32]);

impl Fingerprint {
    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({})", self.hex())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChatResponse {
    pub content: String,
    pub backend_id: String,
    pub fingerprint: Fingerprint,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("backend unreachable: {0}")]
    BackendUnreachable(String),
    #[error("rate limited{}", retry_after.map(|d| format!(" (retry after {}s)", d.as_secs())).unwrap_or_default())]
    RateLimited { retry_after: Option<Duration> },
    #[error("no recorded response for {fingerprint} ({request_digest})")]
    ReplayMiss { fingerprint: String, request_digest: String },
    #[error("backend does not accept image payloads")]
    ImageUnsupported,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transcript store: {0}")]
    Store(String),
    #[error("malformed backend response: {0}")]
    BadResponse(String),
}

/// Trims, collapses runs of spaces and tabs, and normalizes line endings.
pub fn canonicalize(text: &str) -> String {
    let text = text.replace("\r\n", "\n").replace('\r', "\n");
    let mut out = String::with_capacity(text.len());
    let mut in_run = false;
    for ch in text.trim().chars() {
        if ch == ' ' || ch == '\t' {
            if !in_run {
                out.push(' ');
            }
            in_run = true;
        } else {
            out.push(ch);
            in_run = false;
        }
    }
    out
}

/// SHA-256 over length-prefixed fields in a fixed order.
pub fn fingerprint(req: &ChatRequest) -> Fingerprint {
    fn field(h: &mut Sha256, bytes: &[u8]) {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    let mut h = Sha256::new();
    field(&mut h, b"assertforge-chat-v1");
    field(&mut h, canonicalize(&req.system).as_bytes());
    h.update((req.messages.len() as u64).to_le_bytes());
    for m in &req.messages {
        field(&mut h, m.role.as_str().as_bytes());
        match &m.content {
            Content::Text(t) => {
                field(&mut h, b"text");
                field(&mut h, canonicalize(t).as_bytes());
            }
            Content::Image { media_type, bytes } => {
                field(&mut h, b"image");
                field(&mut h, media_type.as_bytes());
                field(&mut h, bytes);
            }
        }
    }
    h.update(req.temperature.to_bits().to_le_bytes());
    h.update(req.max_tokens.to_le_bytes());
    Fingerprint(h.finalize().into())
}

pub trait Backend: Send + Sync {
    fn id(&self) -> String;
    fn multimodal(&self) -> bool {
        false
    }
    fn complete(&self, req: &ChatRequest, fp: &Fingerprint) -> Result<String, LlmError>;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request_digest: String,
    pub content: String,
}

/// One `<hex>.json` file per fingerprint.
pub struct TranscriptStore {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl TranscriptStore {
    pub fn open(dir: impl Into<PathBuf>) -> Self {
        TranscriptStore { dir: dir.into(), write_lock: Mutex::new(()) }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, fp: &Fingerprint) -> PathBuf {
        self.dir.join(format!("{}.json", fp.hex()))
    }

    pub fn get(&self, fp: &Fingerprint) -> Result<Option<TranscriptEntry>, LlmError> {
        let p = self.path(fp);
        match std::fs::read_to_string(&p) {
            Ok(s) => serde_json::from_str(&s)
                .map(Some)
                .map_err(|e| LlmError::Store(format!("{}: {e}", p.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(LlmError::Store(format!("{}: {e}", p.display()))),
        }
    }

    /// Appends an entry. An existing entry for the same fingerprint is kept.
    pub fn put(&self, fp: &Fingerprint, entry: &TranscriptEntry) -> Result<(), LlmError> {
        let _guard = self.write_lock.lock().expect("store lock poisoned");
        let p = self.path(fp);
        if p.exists() {
            return Ok(());
        }
        let mut text = serde_json::to_string_pretty(entry).map_err(|e| LlmError::Store(e.to_string()))?;
        text.push('\n');
        write_atomic(&p, text.as_bytes()).map_err(|e| LlmError::Store(format!("{}: {e}", p.display())))
    }

    pub fn len(&self) -> usize {
        std::fs::read_dir(&self.dir)
            .map(|rd| rd.filter_map(|e| e.ok()).filter(|e| e.path().extension().is_some_and(|x| x == "json")).count())
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Serves recorded responses only; a miss is an error, never a live call.
pub struct ReplayBackend {
    store: TranscriptStore,
}

impl ReplayBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayBackend { store: TranscriptStore::open(dir) }
    }
}

impl Backend for ReplayBackend {
    fn id(&self) -> String {
        "replay".into()
    }

    fn multimodal(&self) -> bool {
        true
    }

    fn complete(&self, req: &ChatRequest, fp: &Fingerprint) -> Result<String, LlmError> {
        match self.store.get(fp)? {
            Some(e) => Ok(e.content),
            None => Err(LlmError::ReplayMiss { fingerprint: fp.hex(), request_digest: req.digest() }),
        }
    }
}

/// Forwards to an inner backend and persists every response.
pub struct RecordBackend<B> {
    inner: B,
    store: TranscriptStore,
}

impl<B: Backend> RecordBackend<B> {
    pub fn new(inner: B, dir: impl Into<PathBuf>) -> Self {
        RecordBackend { inner, store: TranscriptStore::open(dir) }
    }
}

impl<B: Backend> Backend for RecordBackend<B> {
    fn id(&self) -> String {
        format!("record({})", self.inner.id())
    }

    fn multimodal(&self) -> bool {
        self.inner.multimodal()
    }

    fn complete(&self, req: &ChatRequest, fp: &Fingerprint) -> Result<String, LlmError> {
        let content = self.inner.complete(req, fp)?;
        self.store.put(fp, &TranscriptEntry { request_digest: req.digest(), content: content.clone() })?;
        Ok(content)
    }
}

type ScriptFn = dyn Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync;

/// Backend driven by a closure; used for tests and fixture authoring.
pub struct ScriptedBackend {
    name: String,
    f: Box<ScriptFn>,
}

impl ScriptedBackend {
    pub fn new(name: &str, f: impl Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync + 'static) -> Self {
        ScriptedBackend { name: name.to_string(), f: Box::new(f) }
    }
}

impl Backend for ScriptedBackend {
    fn id(&self) -> String {
        format!("scripted:{}", self.name)
    }

    fn multimodal(&self) -> bool {
        true
    }

    fn complete(&self, req: &ChatRequest, _: &Fingerprint) -> Result<String, LlmError> {
        (self.f)(req)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    /// Delay before the first retry; doubles each time.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_retries: 3, base_delay: Duration::from_secs(1) }
    }
}

/// Outcome of one wire attempt.
#[derive(Debug)]
pub enum Attempt {
    Ok(String),
    Transient(String),
    RateLimited(Option<Duration>),
    Fatal(LlmError),
}

/// Runs `send` until it succeeds, retrying transient failures with
/// exponential backoff.
pub fn with_retries(policy: &RetryPolicy, sleep: impl Fn(Duration), mut send: impl FnMut() -> Attempt) -> Result<String, LlmError> {
    let mut delay = policy.base_delay;
    let mut retries = 0;
    loop {
        let failure = match send() {
            Attempt::Ok(s) => return Ok(s),
            Attempt::Fatal(e) => return Err(e),
            Attempt::Transient(m) => LlmError::BackendUnreachable(m),
            Attempt::RateLimited(after) => LlmError::RateLimited { retry_after: after },
        };
        if retries == policy.max_retries {
            return Err(failure);
        }
        let wait = match &failure {
            LlmError::RateLimited { retry_after: Some(d) } => (*d).max(delay),
            _ => delay,
        };
        log::warn!("llm request failed ({failure}); retrying in {:?}", wait);
        sleep(wait);
        retries += 1;
        delay *= 2;
    }
}

/// Chat-completion client over HTTPS.
pub struct LiveBackend {
    url: String,
    key: String,
    model: String,
    multimodal: bool,
    retry: RetryPolicy,
    client: reqwest::blocking::Client,
}

impl LiveBackend {
    pub fn new(url: &str, key: &str, model: &str) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| LlmError::BackendUnreachable(e.to_string()))?;
        Ok(LiveBackend {
            url: url.to_string(),
            key: key.to_string(),
            model: model.to_string(),
            multimodal: true,
            retry: RetryPolicy::default(),
            client,
        })
    }

    /// Reads endpoint, key and model from the environment.
    pub fn from_env() -> Result<Self, LlmError> {
        let url = std::env::var(ENV_URL).map_err(|_| LlmError::InvalidRequest(format!("{ENV_URL} is not set")))?;
        let key = std::env::var(ENV_KEY).map_err(|_| LlmError::InvalidRequest(format!("{ENV_KEY} is not set")))?;
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| DEFAULT_MODEL.to_string());
        Self::new(&url, &key, &model)
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn text_only(mut self) -> Self {
        self.multimodal = false;
        self
    }
}

/// Wire body for a chat-completion request.
pub fn wire_body(model: &str, req: &ChatRequest) -> serde_json::Value {
    let mut messages = vec![serde_json::json!({"role": "system", "content": req.system})];
    for m in &req.messages {
        let content = match &m.content {
            Content::Text(t) => serde_json::Value::String(t.clone()),
            Content::Image { media_type, bytes } => {
                let data = base64::engine::general_purpose::STANDARD.encode(bytes);
                serde_json::json!([{"type": "image_url", "image_url": {"url": format!("data:{media_type};base64,{data}")}}])
            }
        };
        messages.push(serde_json::json!({"role": m.role.as_str(), "content": content}));
    }
    serde_json::json!({
        "model": model,
        "messages": messages,
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
    })
}

/// Extracts `choices[0].message.content` from a wire response.
pub fn parse_wire_response(body: &str) -> Result<String, LlmError> {
    let v: serde_json::Value = serde_json::from_str(body).map_err(|e| LlmError::BadResponse(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| LlmError::BadResponse("missing choices[0].message.content".into()))
}

impl Backend for LiveBackend {
    fn id(&self) -> String {
        format!("live:{}", self.model)
    }

    fn multimodal(&self) -> bool {
        self.multimodal
    }

    fn complete(&self, req: &ChatRequest, _: &Fingerprint) -> Result<String, LlmError> {
        let body = wire_body(&self.model, req);
        with_retries(&self.retry, std::thread::sleep, || {
            let resp = self.client.post(&self.url).bearer_auth(&self.key).json(&body).send();
            let resp = match resp {
                Ok(r) => r,
                Err(e) => return Attempt::Transient(e.to_string()),
            };
            let status = resp.status();
            if status.as_u16() == 429 {
                let after = resp
                    .headers()
                    .get("retry-after")
                    .and_then(|h| h.to_str().ok())
                    .and_then(|s| s.trim().parse::<u64>().ok())
                    .map(Duration::from_secs);
                return Attempt::RateLimited(after);
            }
            if status.is_server_error() {
                return Attempt::Transient(format!("HTTP {status}"));
            }
            let text = match resp.text() {
                Ok(t) => t,
                Err(e) => return Attempt::Transient(e.to_string()),
            };
            if !status.is_success() {
                return Attempt::Fatal(LlmError::BackendUnreachable(format!("HTTP {status}: {}", truncate(&text, 200))));
            }
            match parse_wire_response(&text) {
                Ok(s) => Attempt::Ok(s),
                Err(e) => Attempt::Fatal(e),
            }
        })
    }
}

/// Thread-safe front door with a bound on in-flight requests.
pub struct Gateway {
    backend: Box<dyn Backend>,
    cap: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl Gateway {
    pub const DEFAULT_CAP: usize = 4;

    pub fn new(backend: impl Backend + 'static) -> Self {
        Self::with_cap(backend, Self::DEFAULT_CAP)
    }

    pub fn with_cap(backend: impl Backend + 'static, cap: usize) -> Self {
        Gateway { backend: Box::new(backend), cap: cap.max(1), in_flight: Mutex::new(0), freed: Condvar::new() }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn backend_id(&self) -> String {
        self.backend.id()
    }

    pub fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        if !req.messages.iter().any(|m| m.role == Role::User) {
            return Err(LlmError::InvalidRequest("at least one user message is required".into()));
        }
        if !(0.0..=1.0).contains(&req.temperature) {
            return Err(LlmError::InvalidRequest(format!("temperature {} outside [0, 1]", req.temperature)));
        }
        if req.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_tokens must be positive".into()));
        }
        if req.has_image() && !self.backend.multimodal() {
            return Err(LlmError::ImageUnsupported);
        }
        let fp = fingerprint(req);
        {
            let mut n = self.in_flight.lock().expect("gateway lock poisoned");
            while *n >= self.cap {
                n = self.freed.wait(n).expect("gateway lock poisoned");
            }
            *n += 1;
        }
        let result = self.backend.complete(req, &fp);
        *self.in_flight.lock().expect("gateway lock poisoned") -= 1;
        self.freed.notify_one();
        Ok(ChatResponse { content: result?, backend_id: self.backend.id(), fingerprint: fp })
    }
}
