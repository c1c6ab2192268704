use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Backend, BackendError, BackendRequest, Transcript, TranscriptEntry, TranscriptMeta};

pub const DEFAULT_API_KEY_ENV: &str = "COGTOWN_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub base_url: String,
    pub path: String,
    pub embeddings_path: String,
    pub model: String,
    pub embedding_model: Option<String>,
    /// `false` embeds locally with the hashed bag of tokens, which keeps
    /// recorded transcripts sufficient for exact replay.
    pub remote_embeddings: bool,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    /// `true` sends `messages`, `false` sends a bare `prompt`.
    pub chat: bool,
    pub attempts: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "http://127.0.0.1:8000".into(),
            path: "/v1/chat/completions".into(),
            embeddings_path: "/v1/embeddings".into(),
            model: "default".into(),
            embedding_model: None,
            remote_embeddings: false,
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            chat: true,
            attempts: 3,
            backoff_ms: 250,
            timeout_secs: 120,
            max_in_flight: 8,
        }
    }
}

/// Counting semaphore capping concurrent requests.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Gate {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        {
            let mut free = self.free.lock().expect("gate lock");
            while *free == 0 {
                free = self.cv.wait(free).expect("gate wait");
            }
            *free -= 1;
        }
        let out = f();
        *self.free.lock().expect("gate lock") += 1;
        self.cv.notify_one();
        out
    }
}

/// Chat-completion style endpoint with retry and optional recording.
pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
    api_key: Option<String>,
    recorder: Option<Mutex<Transcript>>,
    gate: Gate,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("config", &self.config)
            .field("recording", &self.recorder.is_some())
            .finish()
    }
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Config(format!("http client: {e}")))?;
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let gate = Gate::new(config.max_in_flight);
        Ok(HttpBackend {
            config,
            client,
            api_key,
            recorder: None,
            gate,
        })
    }

    /// Records every successful exchange into a transcript.
    pub fn recording(mut self) -> Self {
        self.recorder = Some(Mutex::new(Transcript::new(TranscriptMeta {
            engine: "http".into(),
            model: self.config.model.clone(),
            created: String::new(),
        })));
        self
    }

    pub fn take_transcript(&self) -> Option<Transcript> {
        self.recorder
            .as_ref()
            .map(|m| m.lock().expect("recorder lock").clone())
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.base_url.trim_end_matches('/'), path)
    }

    fn body(&self, req: &BackendRequest) -> Value {
        let c = &req.constraints;
        let mut body = json!({
            "model": self.config.model,
            "temperature": c.temperature,
            "seed": c.seed,
            "max_tokens": c.max_tokens,
        });
        if self.config.chat {
            body["messages"] = json!([{"role": "user", "content": req.rendered_prompt}]);
        } else {
            body["prompt"] = json!(req.rendered_prompt);
        }
        body
    }

    /// POST with `attempts` tries and doubling backoff.
    fn post(&self, url: &str, body: &Value) -> Result<Value, BackendError> {
        let attempts = self.config.attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.config.backoff_ms << (attempt - 1)));
            }
            let mut rb = self.client.post(url).json(body);
            if let Some(key) = &self.api_key {
                rb = rb.bearer_auth(key);
            }
            match self.gate.run(|| rb.send()) {
                Ok(resp) if resp.status().is_success() => {
                    return resp
                        .json::<Value>()
                        .map_err(|e| BackendError::Unavailable(format!("{url}: invalid JSON body: {e}")));
                }
                Ok(resp) => {
                    last = format!("{url}: HTTP {}", resp.status());
                    log::warn!("attempt {} failed: {last}", attempt + 1);
                }
                Err(e) => {
                    last = format!("{url}: {e}");
                    log::warn!("attempt {} failed: {last}", attempt + 1);
                }
            }
        }
        Err(BackendError::Unavailable(format!(
            "{last} (after {attempts} attempts)"
        )))
    }
}

/// Pulls completion text out of chat or plain completion payloads.
pub(crate) fn completion_text(v: &Value) -> Option<String> {
    let choice = v.get("choices")?.get(0)?;
    choice
        .get("message")
        .and_then(|m| m.get("content"))
        .or_else(|| choice.get("text"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

impl Backend for HttpBackend {
    fn engine_name(&self) -> &'static str {
        "http"
    }

    fn complete(&self, req: &BackendRequest) -> Result<String, BackendError> {
        let url = self.url(&self.config.path);
        let v = self.post(&url, &self.body(req))?;
        let text = completion_text(&v)
            .ok_or_else(|| BackendError::Unavailable(format!("{url}: no completion text in response")))?;
        if let Some(rec) = &self.recorder {
            rec.lock().expect("recorder lock").insert(TranscriptEntry {
                digest: req.digest(),
                template: req.template_name.clone(),
                response: text.clone(),
            })?;
        }
        Ok(text)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        if !self.config.remote_embeddings {
            return Ok(super::hashed_embedding(text));
        }
        let url = self.url(&self.config.embeddings_path);
        let model = self
            .config
            .embedding_model
            .clone()
            .unwrap_or_else(|| self.config.model.clone());
        let v = self.post(&url, &json!({"model": model, "input": text}))?;
        v.get("data")
            .and_then(|d| d.get(0))
            .and_then(|d| d.get("embedding"))
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_f64).collect::<Vec<_>>())
            .filter(|e| !e.is_empty())
            .ok_or_else(|| BackendError::Unavailable(format!("{url}: no embedding in response")))
    }
}
