//! Text-generation backends: a chat-completions HTTP client with an on-disk
//! response cache, and deterministic scripted backends for offline runs.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fexpr::{AggStat, BinOp, Call, Expr, UnaryFn};
use crate::tabular::{ColumnKind, Schema};

pub const DEFAULT_API_KEY_ENV: &str = "REFEAT_API_KEY";

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("environment variable `{0}` holding the API key is not set")]
    MissingKey(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("request failed after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("unexpected provider payload: {0}")]
    Payload(String),
    #[error("scripted backend has no response left")]
    Exhausted,
    #[error("scripted backend has no response for key `{0}`")]
    NoScriptedResponse(String),
    #[error("cache: {0}")]
    Cache(#[from] std::io::Error),
}

/// One completion request. `key` identifies the call site for keyed scripts
/// (`"<arm>:<iteration>"` in discovery runs); remote backends ignore it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Request {
    pub prompt: String,
    pub key: Option<String>,
}

impl Request {
    pub fn new(prompt: impl Into<String>) -> Self {
        Request {
            prompt: prompt.into(),
            key: None,
        }
    }

    pub fn keyed(prompt: impl Into<String>, key: impl Into<String>) -> Self {
        Request {
            prompt: prompt.into(),
            key: Some(key.into()),
        }
    }
}

pub trait Generator: Send + Sync {
    fn complete(&self, req: &Request) -> Result<String, LlmError>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Http,
    #[default]
    Scripted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub backend: Backend,
    pub endpoint: String,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Name of the environment variable read at call time; the key itself is
    /// never stored.
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub cache_dir: Option<PathBuf>,
    /// Script file for the scripted backend.
    pub script: Option<PathBuf>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            backend: Backend::Scripted,
            endpoint: String::new(),
            model_id: String::new(),
            temperature: 0.0,
            max_tokens: 1024,
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            timeout_secs: 60.0,
            max_retries: 3,
            backoff_ms: 500,
            cache_dir: None,
            script: None,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(LlmError::Config(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(LlmError::Config("timeout must be positive".into()));
        }
        match self.backend {
            Backend::Http if self.endpoint.is_empty() || self.model_id.is_empty() => {
                Err(LlmError::Config("http backend needs an endpoint and a model id".into()))
            }
            Backend::Scripted if self.script.is_none() => {
                Err(LlmError::Config("scripted backend needs a script file".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Script file contents, tagged by `mode`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Script {
    /// Responses returned in order, one per call.
    Replay { responses: Vec<String> },
    /// Responses looked up by request key: `"arm:iteration"`, then `"arm"`,
    /// then `"*"`.
    Keyed { responses: BTreeMap<String, String> },
    /// Random well-formed responses over the dataset schema.
    Grammar {
        seed: u64,
        #[serde(default = "default_grammar_k")]
        k: usize,
    },
}

fn default_grammar_k() -> usize {
    3
}

impl Script {
    pub fn from_path(path: &Path) -> Result<Script, LlmError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| LlmError::Config(format!("script {}: {e}", path.display())))
    }
}

/// Builds the configured backend. `schema` and `target` feed the grammar
/// sampler and are ignored otherwise.
pub fn build_generator(
    config: &GeneratorConfig,
    schema: &Schema,
    target: &str,
) -> Result<Box<dyn Generator>, LlmError> {
    config.validate()?;
    match config.backend {
        Backend::Http => Ok(Box::new(HttpGenerator::new(config.clone(), Box::new(UreqTransport)))),
        Backend::Scripted => {
            let script = Script::from_path(config.script.as_deref().expect("validated"))?;
            Ok(scripted(script, schema, target))
        }
    }
}

pub fn scripted(script: Script, schema: &Schema, target: &str) -> Box<dyn Generator> {
    match script {
        Script::Replay { responses } => Box::new(Replay::new(responses)),
        Script::Keyed { responses } => Box::new(Keyed { responses }),
        Script::Grammar { seed, k } => Box::new(GrammarSampler::new(seed, schema.clone(), target, k)),
    }
}

pub struct Replay {
    queue: Mutex<VecDeque<String>>,
}

impl Replay {
    pub fn new(responses: Vec<String>) -> Self {
        Replay {
            queue: Mutex::new(responses.into()),
        }
    }
}

impl Generator for Replay {
    fn complete(&self, _req: &Request) -> Result<String, LlmError> {
        self.queue
            .lock()
            .expect("replay queue poisoned")
            .pop_front()
            .ok_or(LlmError::Exhausted)
    }
}

pub struct Keyed {
    pub responses: BTreeMap<String, String>,
}

impl Generator for Keyed {
    fn complete(&self, req: &Request) -> Result<String, LlmError> {
        let key = req.key.as_deref().unwrap_or("*");
        let prefix = key.split(':').next().unwrap_or(key);
        [key, prefix, "*"]
            .iter()
            .find_map(|k| self.responses.get(*k))
            .cloned()
            .ok_or_else(|| LlmError::NoScriptedResponse(key.to_string()))
    }
}

/// Emits `k` random well-typed expressions per call. Call `i` (0-based)
/// draws from the stream seeded with `seed + i`.
pub struct GrammarSampler {
    seed: u64,
    schema: Schema,
    target: String,
    k: usize,
    calls: AtomicU64,
}

impl GrammarSampler {
    pub fn new(seed: u64, schema: Schema, target: &str, k: usize) -> Self {
        GrammarSampler {
            seed,
            schema,
            target: target.to_string(),
            k,
            calls: AtomicU64::new(0),
        }
    }
}

impl Generator for GrammarSampler {
    fn complete(&self, _req: &Request) -> Result<String, LlmError> {
        let i = self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(sample_grammar(
            self.seed.wrapping_add(i),
            &self.schema,
            &self.target,
            self.k,
        ))
    }
}

/// A complete response whose codes parse and typecheck against `schema`
/// without referencing `target`.
pub fn sample_grammar(seed: u64, schema: &Schema, target: &str, k: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pools = Pools::new(schema, target);
    let items: Vec<serde_json::Value> = (0..k)
        .map(|i| {
            let depth = rng.gen_range(1..=3);
            serde_json::json!({
                "feature_name": format!("sampled_{}", i + 1),
                "code": pools.num(&mut rng, depth).to_string(),
            })
        })
        .collect();
    format!(
        "<thinking>sampled from the expression grammar with seed {seed}</thinking>\n<Result>{}</Result>",
        serde_json::Value::Array(items)
    )
}

struct Pools {
    numeric: Vec<String>,
    categorical: Vec<String>,
}

impl Pools {
    fn new(schema: &Schema, target: &str) -> Self {
        let pick = |kind| {
            schema
                .iter()
                .filter(|(n, k)| **k == kind && n.as_str() != target)
                .map(|(n, _)| n.clone())
                .collect()
        };
        Pools {
            numeric: pick(ColumnKind::Numeric),
            categorical: pick(ColumnKind::Categorical),
        }
    }

    fn literal(rng: &mut ChaCha8Rng) -> Expr {
        Expr::Number(*[0.5, 1.0, 2.0, 3.0, 10.0].choose(rng).expect("nonempty"))
    }

    fn num_leaf(&self, rng: &mut ChaCha8Rng) -> Expr {
        match self.numeric.choose(rng) {
            Some(c) if rng.gen_bool(0.85) => Expr::Column(c.clone()),
            _ => match self.categorical.choose(rng) {
                Some(g) if self.numeric.is_empty() => Expr::Call(Call::GroupAgg {
                    group: g.clone(),
                    value: Box::new(Expr::Number(1.0)),
                    stat: AggStat::Count,
                }),
                _ => Self::literal(rng),
            },
        }
    }

    fn num(&self, rng: &mut ChaCha8Rng, depth: u32) -> Expr {
        if depth == 0 {
            return self.num_leaf(rng);
        }
        match rng.gen_range(0..10) {
            0..=3 => {
                let op = *[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]
                    .choose(rng)
                    .expect("nonempty");
                Expr::binary(op, self.num(rng, depth - 1), self.num(rng, depth - 1))
            }
            4..=5 => {
                let f = *[
                    UnaryFn::Log1p,
                    UnaryFn::Sqrt,
                    UnaryFn::Square,
                    UnaryFn::Abs,
                    UnaryFn::Rank,
                ]
                .choose(rng)
                .expect("nonempty");
                Expr::unary(f, self.num(rng, depth - 1))
            }
            6 => Expr::unary(UnaryFn::Flag, self.boolean(rng, depth - 1)),
            7 => Expr::Call(Call::Qcut {
                arg: Box::new(self.num(rng, depth - 1)),
                bins: rng.gen_range(2..=5),
            }),
            8 if !self.categorical.is_empty() => Expr::Call(Call::GroupAgg {
                group: self.categorical.choose(rng).expect("nonempty").clone(),
                value: Box::new(self.num(rng, depth - 1)),
                stat: *AggStat::ALL.choose(rng).expect("nonempty"),
            }),
            _ => self.num_leaf(rng),
        }
    }

    fn boolean(&self, rng: &mut ChaCha8Rng, depth: u32) -> Expr {
        if depth > 0 && rng.gen_bool(0.25) {
            let op = if rng.gen_bool(0.5) { BinOp::And } else { BinOp::Or };
            return Expr::binary(op, self.boolean(rng, depth - 1), self.boolean(rng, depth - 1));
        }
        let op = *[BinOp::Gt, BinOp::Ge, BinOp::Lt, BinOp::Le]
            .choose(rng)
            .expect("nonempty");
        Expr::binary(op, self.num(rng, depth.saturating_sub(1)), Self::literal(rng))
    }
}

/// HTTP POST of a JSON body, returning the status code and response text.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &serde_json::Value,
        timeout: Duration,
    ) -> Result<(u16, String), String>;
}

pub struct UreqTransport;

impl Transport for UreqTransport {
    fn post_json(
        &self,
        url: &str,
        headers: &[(String, String)],
        body: &serde_json::Value,
        timeout: Duration,
    ) -> Result<(u16, String), String> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut req = agent.post(url);
        for (k, v) in headers {
            req = req.header(k.as_str(), v.as_str());
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok((status, text))
    }
}

pub struct HttpGenerator {
    config: GeneratorConfig,
    transport: Box<dyn Transport>,
    network_calls: AtomicUsize,
}

impl HttpGenerator {
    pub fn new(config: GeneratorConfig, transport: Box<dyn Transport>) -> Self {
        HttpGenerator {
            config,
            transport,
            network_calls: AtomicUsize::new(0),
        }
    }

    /// Number of transport requests issued so far, retries included.
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    fn cache_path(&self, prompt: &str) -> Option<PathBuf> {
        let dir = self.config.cache_dir.as_ref()?;
        Some(dir.join(format!(
            "{}.txt",
            cache_key(&self.config.model_id, self.config.temperature, prompt)
        )))
    }

    fn request_once(&self, key: &str, prompt: &str) -> Result<Result<String, LlmError>, String> {
        let body = serde_json::json!({
            "model": self.config.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        let headers = vec![
            ("Authorization".to_string(), format!("Bearer {key}")),
            ("Content-Type".to_string(), "application/json".to_string()),
        ];
        self.network_calls.fetch_add(1, Ordering::SeqCst);
        let (status, text) = self.transport.post_json(
            &self.config.endpoint,
            &headers,
            &body,
            Duration::from_secs_f64(self.config.timeout_secs),
        )?;
        if status == 429 || (500..600).contains(&status) {
            return Err(format!("HTTP {status}"));
        }
        if !(200..300).contains(&status) {
            return Ok(Err(LlmError::Http { status, body: text }));
        }
        Ok(extract_content(&text))
    }
}

/// Hex SHA-256 over model id, temperature and prompt.
pub fn cache_key(model_id: &str, temperature: f64, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model_id.as_bytes());
    h.update([0u8]);
    h.update(temperature.to_bits().to_le_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

fn extract_content(text: &str) -> Result<String, LlmError> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| LlmError::Payload(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| LlmError::Payload("missing choices[0].message.content".into()))
}

fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)
}

impl Generator for HttpGenerator {
    fn complete(&self, req: &Request) -> Result<String, LlmError> {
        let key = std::env::var(&self.config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| LlmError::MissingKey(self.config.api_key_env.clone()))?;
        let cache = self.cache_path(&req.prompt);
        if let Some(path) = &cache {
            if let Ok(hit) = fs::read_to_string(path) {
                log::debug!("cache hit {}", path.display());
                return Ok(hit);
            }
        }
        let attempts = self.config.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let wait = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                log::warn!("retrying after {last} (attempt {}/{attempts}, {wait} ms)", attempt + 1);
                std::thread::sleep(Duration::from_millis(wait));
            }
            match self.request_once(&key, &req.prompt) {
                Ok(Ok(text)) => {
                    if let Some(path) = &cache {
                        if let Some(dir) = path.parent() {
                            fs::create_dir_all(dir)?;
                        }
                        write_atomic(path, &text)?;
                    }
                    return Ok(text);
                }
                Ok(Err(e)) => return Err(e),
                Err(transient) => last = transient,
            }
        }
        Err(LlmError::RetriesExhausted { attempts, last })
    }
}
