//! Model access: a chat-completions client, a deterministic mock and the
//! parse, repair and retry loop around both.

use std::path::Path;
use std::time::{Duration, Instant};

use base64::Engine;
use posterkit_core::codec::{
    self, CodecError, ExtractPolicy, LayoutFragment, PromptBundle, RepairLog, CORRECTION_PROMPT,
};
use posterkit_core::metrics::content::SaliencyMask;
use posterkit_core::{mock, DEFAULT_PRECISION};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const DEFAULT_MAX_TOKENS: u32 = 4096;
pub const MIN_MAX_TOKENS: u32 = 512;
pub const DEFAULT_RETRIES: u32 = 2;
pub const DEFAULT_TOKEN_ENV: &str = "POSTERKIT_API_TOKEN";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Mock,
}

impl std::str::FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "remote" => Ok(BackendKind::Remote),
            "mock" => Ok(BackendKind::Mock),
            other => Err(format!(
                "unknown backend `{other}` (expected remote or mock)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: String,
    pub model: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub timeout_secs: u64,
    /// Extra attempts after the first one.
    pub retries: u32,
    /// Name of the environment variable holding the bearer token.
    pub token_env: String,
    /// Log request and response bodies at debug level.
    pub debug: bool,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "posterllava".into(),
            max_tokens: DEFAULT_MAX_TOKENS,
            temperature: 0.0,
            timeout_secs: 120,
            retries: DEFAULT_RETRIES,
            token_env: DEFAULT_TOKEN_ENV.into(),
            debug: false,
        }
    }
}

impl BackendConfig {
    pub fn check(&self) -> Result<(), GatewayError> {
        if self.max_tokens < MIN_MAX_TOKENS {
            return Err(GatewayError::Config(format!(
                "max_tokens must be at least {MIN_MAX_TOKENS}, got {}",
                self.max_tokens
            )));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(GatewayError::Config(format!(
                "temperature must be a non-negative number, got {}",
                self.temperature
            )));
        }
        if self.kind == BackendKind::Remote && self.endpoint.is_empty() {
            return Err(GatewayError::Config(
                "remote backend needs an endpoint".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid backend configuration: {0}")]
    Config(String),
    #[error("cannot load image {path}: {message}")]
    Image { path: String, message: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("request timed out after {0} s")]
    Timeout(u64),
    #[error("endpoint answered HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    Response(String),
    #[error("no usable layout after {attempts} attempt(s): {last_error}")]
    AllAttemptsFailed {
        attempts: u32,
        last_error: CodecError,
        last_raw: String,
    },
}

/// One turn of the conversation sent to a backend.
#[derive(Debug, Clone, PartialEq)]
pub struct Turn {
    pub role: &'static str,
    pub content: String,
}

/// Side inputs for a request: the encoded background and an optional mask.
#[derive(Debug, Clone, Default)]
pub struct Attachments {
    /// `(mime type, raw bytes)` of the background image.
    pub image: Option<(String, Vec<u8>)>,
    pub saliency: Option<SaliencyMask>,
}

impl Attachments {
    /// Reads the background file; the mime type follows the extension.
    pub fn load_image(path: &Path) -> Result<(String, Vec<u8>), GatewayError> {
        let bytes = std::fs::read(path).map_err(|e| GatewayError::Image {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        let mime = match ext.as_str() {
            "jpg" | "jpeg" => "image/jpeg",
            "webp" => "image/webp",
            "gif" => "image/gif",
            _ => "image/png",
        };
        Ok((mime.to_owned(), bytes))
    }
}

pub trait Backend: Send + Sync {
    /// Returns the raw assistant text for the conversation so far.
    fn complete(
        &self,
        bundle: &PromptBundle,
        turns: &[Turn],
        attachments: &Attachments,
    ) -> Result<String, GatewayError>;
}

/// Deterministic stand-in that stacks elements in the calmest band.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockBackend;

/// The mock layout for a request, as elements.
pub fn mock_generate(bundle: &PromptBundle, saliency: Option<&SaliencyMask>) -> LayoutFragment {
    LayoutFragment {
        elements: mock::mock_layout(&bundle.expected_labels, saliency),
        warnings: Vec::new(),
    }
}

impl Backend for MockBackend {
    fn complete(
        &self,
        bundle: &PromptBundle,
        _turns: &[Turn],
        attachments: &Attachments,
    ) -> Result<String, GatewayError> {
        let fragment = mock_generate(bundle, attachments.saliency.as_ref());
        Ok(codec::answer_text(&fragment.elements, DEFAULT_PRECISION))
    }
}

/// Chat-completions client: one user message with text and a base64 image
/// part, followed by any retry turns.
pub struct RemoteBackend {
    config: BackendConfig,
    token: Option<String>,
    agent: ureq::Agent,
}

impl RemoteBackend {
    /// Reads the token from the configured environment variable, if set.
    pub fn new(config: BackendConfig) -> Result<Self, GatewayError> {
        config.check()?;
        let token = std::env::var(&config.token_env)
            .ok()
            .filter(|t| !t.is_empty());
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteBackend {
            config,
            token,
            agent,
        })
    }

    pub fn request_body(&self, turns: &[Turn], attachments: &Attachments) -> Value {
        let messages: Vec<Value> = turns
            .iter()
            .enumerate()
            .map(|(i, t)| match (&attachments.image, i) {
                (Some((mime, bytes)), 0) => {
                    let data = base64::engine::general_purpose::STANDARD.encode(bytes);
                    json!({
                        "role": t.role,
                        "content": [
                            {"type": "text", "text": t.content},
                            {"type": "image_url", "image_url": {"url": format!("data:{mime};base64,{data}")}},
                        ],
                    })
                }
                _ => json!({"role": t.role, "content": t.content}),
            })
            .collect();
        json!({
            "model": self.config.model,
            "messages": messages,
            "max_tokens": self.config.max_tokens,
            "temperature": self.config.temperature,
        })
    }
}

/// Copy of a request body with image payloads shortened, for logs.
fn loggable(body: &Value) -> Value {
    let mut body = body.clone();
    if let Some(msgs) = body["messages"].as_array_mut() {
        for m in msgs {
            if let Some(parts) = m["content"].as_array_mut() {
                for p in parts {
                    if let Some(url) = p["image_url"]["url"].as_str() {
                        let n = url.len();
                        p["image_url"]["url"] = json!(format!("<data URI, {n} bytes>"));
                    }
                }
            }
        }
    }
    body
}

impl Backend for RemoteBackend {
    fn complete(
        &self,
        _bundle: &PromptBundle,
        turns: &[Turn],
        attachments: &Attachments,
    ) -> Result<String, GatewayError> {
        let body = self.request_body(turns, attachments);
        if self.config.debug {
            let auth = if self.token.is_some() {
                "Bearer [redacted]"
            } else {
                "none"
            };
            log::debug!(
                "POST {} (authorization: {auth}) {}",
                self.config.endpoint,
                loggable(&body)
            );
        }
        let mut req = self
            .agent
            .post(&self.config.endpoint)
            .header("Content-Type", "application/json");
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| match e {
            ureq::Error::Timeout(_) => GatewayError::Timeout(self.config.timeout_secs),
            other => GatewayError::Transport(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        if self.config.debug {
            log::debug!("HTTP {status} {text}");
        }
        if !(200..300).contains(&status) {
            return Err(GatewayError::Status { status, body: text });
        }
        let v: Value =
            serde_json::from_str(&text).map_err(|e| GatewayError::Response(e.to_string()))?;
        v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| GatewayError::Response("missing choices[0].message.content".into()))
    }
}

/// Builds the backend named by `config`.
pub fn backend_for(config: &BackendConfig) -> Result<Box<dyn Backend>, GatewayError> {
    config.check()?;
    Ok(match config.kind {
        BackendKind::Mock => Box::new(MockBackend),
        BackendKind::Remote => Box::new(RemoteBackend::new(config.clone())?),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResult {
    pub fragment: LayoutFragment,
    pub repair_log: RepairLog,
    pub raw_text: String,
    pub attempts: u32,
    pub latency_ms: u64,
}

/// Asks the backend for a layout, re-prompting with [`CORRECTION_PROMPT`]
/// up to `config.retries` times when the reply cannot be used. Transport
/// and HTTP errors end the loop at once.
pub fn generate(
    bundle: &PromptBundle,
    backend: &dyn Backend,
    config: &BackendConfig,
    attachments: &Attachments,
) -> Result<GenerationResult, GatewayError> {
    let start = Instant::now();
    let mut turns = vec![Turn {
        role: "user",
        content: bundle.text.clone(),
    }];
    let mut attempts = 0;
    loop {
        attempts += 1;
        let raw = backend.complete(bundle, &turns, attachments)?;
        match codec::extract(&raw, bundle, ExtractPolicy::Lenient) {
            Ok((fragment, repair_log)) => {
                return Ok(GenerationResult {
                    fragment,
                    repair_log,
                    raw_text: raw,
                    attempts,
                    latency_ms: start.elapsed().as_millis() as u64,
                })
            }
            Err(e) if attempts > config.retries => {
                return Err(GatewayError::AllAttemptsFailed {
                    attempts,
                    last_error: e,
                    last_raw: raw,
                })
            }
            Err(e) => {
                log::info!("attempt {attempts} unusable ({e}); re-prompting");
                turns.push(Turn {
                    role: "assistant",
                    content: raw,
                });
                turns.push(Turn {
                    role: "user",
                    content: CORRECTION_PROMPT.to_owned(),
                });
            }
        }
    }
}
