//! Text generation and embedding behind one contract.
//!
//! Three engines implement [`Backend`]: [`ScriptedBackend`] (ordered pattern
//! rules, fully deterministic), [`ReplayBackend`] (digest lookup into a
//! recorded transcript) and [`HttpBackend`] (chat-completion endpoint with
//! retry and optional recording). [`Gateway`] renders named templates,
//! attaches format instructions, parses replies and re-asks once on a parse
//! failure.

mod format;
mod http;
mod replay;
mod scripted;
mod templates;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use format::{parse_response, schema_example, Parsed};
pub use http::{HttpBackend, HttpConfig};
pub use replay::{ReplayBackend, Transcript, TranscriptEntry, TranscriptMeta};
pub use scripted::{ScriptRule, ScriptedBackend};
pub use templates::TemplateSet;

/// Dimension of the hashed bag-of-tokens embedding.
pub const HASHED_EMBEDDING_DIM: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("replay miss for template `{template}` (digest {digest}); the prompt drifted from the recording")]
    ReplayMiss { digest: String, template: String },
    #[error("response does not match {expected}: {raw:?}")]
    Format { expected: String, raw: String },
    #[error("template error: {0}")]
    Template(String),
    #[error("transcript error: {0}")]
    Transcript(String),
    #[error("backend configuration error: {0}")]
    Config(String),
}

impl BackendError {
    pub fn is_unavailable(&self) -> bool {
        matches!(self, BackendError::Unavailable(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "arg", rename_all = "snake_case")]
pub enum ExpectedFormat {
    Freetext,
    Choice(Vec<String>),
    Scores(usize),
    JsonSchema(String),
}

impl ExpectedFormat {
    pub fn describe(&self) -> String {
        match self {
            ExpectedFormat::Freetext => "free text".into(),
            ExpectedFormat::Choice(opts) => format!("one of [{}]", opts.join(" | ")),
            ExpectedFormat::Scores(n) => format!("{n} number(s)"),
            ExpectedFormat::JsonSchema(name) => format!("JSON schema `{name}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub max_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
    pub expected_format: ExpectedFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub template_name: String,
    pub rendered_prompt: String,
    pub constraints: Constraints,
}

impl BackendRequest {
    pub fn new(
        template_name: impl Into<String>,
        rendered_prompt: impl Into<String>,
        constraints: Constraints,
    ) -> Result<Self, BackendError> {
        let req = BackendRequest {
            template_name: template_name.into(),
            rendered_prompt: rendered_prompt.into(),
            constraints,
        };
        if req.rendered_prompt.trim().is_empty() {
            return Err(BackendError::Template(format!(
                "template `{}` rendered an empty prompt",
                req.template_name
            )));
        }
        if let ExpectedFormat::Choice(opts) = &req.constraints.expected_format {
            if opts.is_empty() {
                return Err(BackendError::Template("empty choice list".into()));
            }
        }
        Ok(req)
    }

    /// SHA-256 over template name, prompt and constraints. No wall-clock
    /// input, so the digest is stable across processes and platforms.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("request serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Usage {
    pub tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendResponse {
    pub text: String,
    pub parsed: Option<Parsed>,
    pub usage: Usage,
    pub hash_key: String,
}

impl BackendResponse {
    pub fn choice(&self) -> Option<&str> {
        match &self.parsed {
            Some(Parsed::Choice(c)) => Some(c),
            _ => None,
        }
    }

    pub fn scores(&self) -> Option<&[f64]> {
        match &self.parsed {
            Some(Parsed::Scores(s)) => Some(s),
            _ => None,
        }
    }

    pub fn json(&self) -> Option<&serde_json::Value> {
        match &self.parsed {
            Some(Parsed::Json(v)) => Some(v),
            _ => None,
        }
    }
}

/// An engine producing raw text. Parsing is done by [`Gateway`].
pub trait Backend: Send + Sync {
    fn engine_name(&self) -> &'static str;

    /// Raw completion text for a request.
    fn complete(&self, req: &BackendRequest) -> Result<String, BackendError>;

    fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        Ok(hashed_embedding(text))
    }

    /// Parses the completion against the request's expected format.
    fn generate(&self, req: &BackendRequest) -> Result<BackendResponse, BackendError> {
        let text = self.complete(req)?;
        let parsed = parse_response(&text, &req.constraints.expected_format)?;
        Ok(BackendResponse {
            usage: Usage {
                tokens: text.split_whitespace().count() as u64,
            },
            text,
            parsed,
            hash_key: req.digest(),
        })
    }
}

/// Lowercased alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// FNV-1a, 64-bit.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn token_bucket(token: &str) -> usize {
    (fnv1a(token.as_bytes()) % HASHED_EMBEDDING_DIM as u64) as usize
}

/// Token counts hashed into fixed buckets, L2-normalised. Texts whose tokens
/// share no bucket have cosine 0.
pub fn hashed_embedding(text: &str) -> Vec<f64> {
    let mut v = vec![0.0; HASHED_EMBEDDING_DIM];
    for t in tokenize(text) {
        v[token_bucket(&t)] += 1.0;
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Jaccard overlap of token sets; fallback relevance when embeddings fail.
pub fn token_overlap(a: &str, b: &str) -> f64 {
    use std::collections::BTreeSet;
    let sa: BTreeSet<String> = tokenize(a).into_iter().collect();
    let sb: BTreeSet<String> = tokenize(b).into_iter().collect();
    if sa.is_empty() || sb.is_empty() {
        return 0.0;
    }
    let inter = sa.intersection(&sb).count() as f64;
    let union = sa.union(&sb).count() as f64;
    inter / union
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationDefaults {
    pub max_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for GenerationDefaults {
    fn default() -> Self {
        GenerationDefaults {
            max_tokens: 512,
            temperature: 0.0,
            seed: 7,
        }
    }
}

/// Template rendering plus one engine. Cheap to clone and shareable across
/// threads.
#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn Backend>,
    templates: Arc<TemplateSet>,
    defaults: GenerationDefaults,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("engine", &self.backend.engine_name())
            .field("defaults", &self.defaults)
            .finish()
    }
}

const REASK_SUFFIX: &str = "\n\nYour previous answer could not be parsed. Answer again, strictly in the required format.";

impl Gateway {
    pub fn new(backend: Arc<dyn Backend>, templates: TemplateSet, defaults: GenerationDefaults) -> Self {
        Gateway {
            backend,
            templates: Arc::new(templates),
            defaults,
        }
    }

    /// Scripted engine with built-in templates.
    pub fn scripted(backend: ScriptedBackend) -> Self {
        Self::new(Arc::new(backend), TemplateSet::builtin(), GenerationDefaults::default())
    }

    pub fn engine_name(&self) -> &'static str {
        self.backend.engine_name()
    }

    pub fn backend(&self) -> Arc<dyn Backend> {
        Arc::clone(&self.backend)
    }

    /// Same templates and defaults over a different engine.
    pub fn with_backend(&self, backend: Arc<dyn Backend>) -> Self {
        Gateway {
            backend,
            templates: Arc::clone(&self.templates),
            defaults: self.defaults,
        }
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn defaults(&self) -> GenerationDefaults {
        self.defaults
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut g = self.clone();
        g.defaults.seed = seed;
        g
    }

    pub fn request(
        &self,
        template: &str,
        vars: &[(&str, String)],
        format: ExpectedFormat,
    ) -> Result<BackendRequest, BackendError> {
        if let ExpectedFormat::JsonSchema(name) = &format {
            if !format::known_schema(name) {
                return Err(BackendError::Template(format!("unknown schema `{name}`")));
            }
        }
        let body = self.templates.render(template, vars)?;
        let prompt = format!("{body}{}", format::instruction(&format));
        BackendRequest::new(
            template,
            prompt,
            Constraints {
                max_tokens: self.defaults.max_tokens,
                temperature: self.defaults.temperature,
                seed: self.defaults.seed,
                expected_format: format,
            },
        )
    }

    /// Renders, generates and parses; one re-ask on a format error.
    pub fn ask(
        &self,
        template: &str,
        vars: &[(&str, String)],
        format: ExpectedFormat,
    ) -> Result<BackendResponse, BackendError> {
        let req = self.request(template, vars, format)?;
        match self.backend.generate(&req) {
            Err(BackendError::Format { .. }) => {
                let mut again = req.clone();
                again.rendered_prompt.push_str(REASK_SUFFIX);
                self.backend.generate(&again)
            }
            other => other,
        }
    }

    pub fn embed(&self, text: &str) -> Result<Vec<f64>, BackendError> {
        self.backend.embed(text)
    }

    /// Cosine over backend embeddings, token overlap if embedding fails.
    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        match (self.embed(a), self.embed(b)) {
            (Ok(x), Ok(y)) => cosine(&x, &y),
            _ => token_overlap(a, b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(prompt: &str) -> BackendRequest {
        BackendRequest::new(
            "t",
            prompt,
            Constraints {
                max_tokens: 10,
                temperature: 0.0,
                seed: 1,
                expected_format: ExpectedFormat::Freetext,
            },
        )
        .unwrap()
    }

    #[test]
    fn digest_is_stable_and_content_sensitive() {
        assert_eq!(req("hello").digest(), req("hello").digest());
        assert_ne!(req("hello").digest(), req("hello!").digest());
        // pinned so a serialization change is caught
        assert_eq!(req("hello").digest().len(), 64);
    }

    #[test]
    fn empty_prompt_and_choice_rejected() {
        assert!(BackendRequest::new("t", "  ", req("x").constraints).is_err());
        let mut c = req("x").constraints;
        c.expected_format = ExpectedFormat::Choice(vec![]);
        assert!(BackendRequest::new("t", "p", c).is_err());
    }

    #[test]
    fn embedding_determinism_and_self_similarity() {
        let a = hashed_embedding("walk in the park");
        assert_eq!(a, hashed_embedding("walk in the park"));
        assert!((cosine(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_buckets_give_zero_cosine() {
        // Oracle: pick two words whose FNV buckets differ, independently of
        // the embedding code path.
        let words = ["apple", "river", "violin", "tiger", "cloud", "marble"];
        let mut pair = None;
        'outer: for a in words {
            for b in words {
                if a != b && token_bucket(a) != token_bucket(b) {
                    pair = Some((a, b));
                    break 'outer;
                }
            }
        }
        let (a, b) = pair.unwrap();
        assert_eq!(cosine(&hashed_embedding(a), &hashed_embedding(b)), 0.0);
    }

    #[test]
    fn overlap_fallback() {
        assert_eq!(token_overlap("a b", "c d"), 0.0);
        assert!((token_overlap("a b", "a b") - 1.0).abs() < 1e-12);
    }
}
