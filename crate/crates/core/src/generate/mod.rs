//! Caption text generation: prompt templates per style and point of view, the
//! chat-completion endpoint contract, the deterministic phrase-table
//! fallback, and output validation.

mod client;
mod fallback;
mod prompt;
mod validate;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use client::{ChatClient, ChatError, ChatRequest, ChatResponse};
pub use fallback::{fallback_caption, PhraseTable, PhraseTableError};
pub use prompt::{build_prompt, PromptError, PromptPair, PromptTemplate, TEMPLATES};
pub use validate::{validate_caption, GenerationConstraints, Violation};

use crate::emotion::EmotionLabel;

/// Response style of an Impact Caption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseStyle {
    /// Roasting: ironic call-outs.
    Tsukkomi,
    /// Redirects attention back to the video.
    Expository,
    /// Echoes and amplifies positive comments.
    HumorousPraise,
}

impl ResponseStyle {
    pub const ALL: [ResponseStyle; 3] = [
        ResponseStyle::Tsukkomi,
        ResponseStyle::Expository,
        ResponseStyle::HumorousPraise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ResponseStyle::Tsukkomi => "tsukkomi",
            ResponseStyle::Expository => "expository",
            ResponseStyle::HumorousPraise => "humorous_praise",
        }
    }
}

impl fmt::Display for ResponseStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ResponseStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown style {s:?}"))
    }
}

/// Narrative voice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pov {
    First,
    Third,
}

impl Pov {
    pub const ALL: [Pov; 2] = [Pov::First, Pov::Third];

    pub fn name(self) -> &'static str {
        match self {
            Pov::First => "first",
            Pov::Third => "third",
        }
    }
}

impl FromStr for Pov {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" => Ok(Pov::First),
            "third" => Ok(Pov::Third),
            _ => Err(format!("unknown pov {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptionSource {
    Llm,
    Template,
}

/// The textual half of an Impact Caption.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionText {
    pub text: String,
    pub style: ResponseStyle,
    pub pov: Pov,
    pub source: CaptionSource,
}

/// Everything needed to produce one caption.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionRequest {
    pub style: ResponseStyle,
    pub pov: Pov,
    pub theme: Vec<String>,
    pub dominant: EmotionLabel,
    /// Up to three representative comments from the window.
    pub exemplars: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptionBackend {
    #[default]
    Template,
    Llm,
}

/// Failure and fallback counters.
#[derive(Debug, Default)]
pub struct GenerationMetrics {
    pub llm_attempts: AtomicU64,
    pub llm_errors: AtomicU64,
    pub validation_failures: AtomicU64,
    pub fallbacks: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MetricsSnapshot {
    pub llm_attempts: u64,
    pub llm_errors: u64,
    pub validation_failures: u64,
    pub fallbacks: u64,
}

impl GenerationMetrics {
    pub fn snapshot(&self) -> MetricsSnapshot {
        MetricsSnapshot {
            llm_attempts: self.llm_attempts.load(Ordering::Relaxed),
            llm_errors: self.llm_errors.load(Ordering::Relaxed),
            validation_failures: self.validation_failures.load(Ordering::Relaxed),
            fallbacks: self.fallbacks.load(Ordering::Relaxed),
        }
    }

    fn bump(counter: &AtomicU64) {
        counter.fetch_add(1, Ordering::Relaxed);
    }
}

const LLM_ATTEMPTS: usize = 2;

/// Calls the chat endpoint (one retry), validates, and falls back to the
/// phrase table on any failure. The result always satisfies `constraints`.
pub fn generate_caption(
    request: &CaptionRequest,
    client: Option<&dyn ChatClient>,
    constraints: &GenerationConstraints,
    phrases: &PhraseTable,
    metrics: &GenerationMetrics,
) -> CaptionText {
    if let Some(client) = client {
        match build_prompt(
            request.style,
            request.pov,
            &request.theme,
            request.dominant,
            &request.exemplars,
            constraints,
        ) {
            Ok(prompt) => {
                let chat = ChatRequest {
                    system: prompt.system,
                    user: prompt.user,
                    max_tokens: constraints.max_tokens(),
                };
                for _ in 0..LLM_ATTEMPTS {
                    GenerationMetrics::bump(&metrics.llm_attempts);
                    match client.complete(&chat) {
                        Ok(raw) => {
                            let text = raw.trim();
                            if validate_caption(text, &request.theme, constraints).is_ok() {
                                return CaptionText {
                                    text: text.to_string(),
                                    style: request.style,
                                    pov: request.pov,
                                    source: CaptionSource::Llm,
                                };
                            }
                            GenerationMetrics::bump(&metrics.validation_failures);
                        }
                        Err(_) => GenerationMetrics::bump(&metrics.llm_errors),
                    }
                }
            }
            Err(_) => GenerationMetrics::bump(&metrics.llm_errors),
        }
        GenerationMetrics::bump(&metrics.fallbacks);
    }
    phrases.caption(request, constraints)
}

/// Bundles the generation backends and data files used by the engine.
#[derive(Clone)]
pub struct CaptionGenerator {
    client: Option<Arc<dyn ChatClient>>,
    phrases: Arc<PhraseTable>,
    banned_terms: Vec<String>,
    max_chars: usize,
    metrics: Arc<GenerationMetrics>,
}

impl Default for CaptionGenerator {
    fn default() -> Self {
        Self::template_only()
    }
}

impl fmt::Debug for CaptionGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CaptionGenerator")
            .field("has_client", &self.client.is_some())
            .field("banned_terms", &self.banned_terms.len())
            .field("max_chars", &self.max_chars)
            .finish()
    }
}

impl CaptionGenerator {
    pub fn template_only() -> Self {
        Self {
            client: None,
            phrases: Arc::new(PhraseTable::bundled()),
            banned_terms: Vec::new(),
            max_chars: validate::DEFAULT_MAX_CHARS,
            metrics: Arc::default(),
        }
    }

    pub fn with_client(mut self, client: Arc<dyn ChatClient>) -> Self {
        self.client = Some(client);
        self
    }

    pub fn with_phrases(mut self, phrases: PhraseTable) -> Self {
        self.phrases = Arc::new(phrases);
        self
    }

    pub fn with_banned_terms(mut self, terms: Vec<String>) -> Self {
        self.banned_terms = terms;
        self
    }

    pub fn with_max_chars(mut self, max_chars: usize) -> Self {
        self.max_chars = max_chars.max(validate::MIN_MAX_CHARS);
        self
    }

    pub fn metrics(&self) -> MetricsSnapshot {
        self.metrics.snapshot()
    }

    pub fn constraints_for(&self, style: ResponseStyle) -> GenerationConstraints {
        GenerationConstraints {
            max_chars: self.max_chars,
            banned_terms: self.banned_terms.clone(),
            ..GenerationConstraints::for_style(style)
        }
    }

    pub fn generate(&self, request: &CaptionRequest, backend: CaptionBackend) -> CaptionText {
        let constraints = self.constraints_for(request.style);
        let client = match backend {
            CaptionBackend::Llm => self.client.as_deref(),
            CaptionBackend::Template => None,
        };
        generate_caption(request, client, &constraints, &self.phrases, &self.metrics)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    struct Scripted(Mutex<Vec<Result<String, ChatError>>>);

    impl ChatClient for Scripted {
        fn complete(&self, _request: &ChatRequest) -> Result<String, ChatError> {
            self.0.lock().unwrap().remove(0)
        }
    }

    fn request(style: ResponseStyle) -> CaptionRequest {
        CaptionRequest {
            style,
            pov: Pov::Third,
            theme: vec!["路飞".into()],
            dominant: EmotionLabel::Joy,
            exemplars: vec!["好帅".into()],
            seed: 1,
        }
    }

    fn run(script: Vec<Result<String, ChatError>>, style: ResponseStyle) -> (CaptionText, MetricsSnapshot) {
        let client = Scripted(Mutex::new(script));
        let metrics = GenerationMetrics::default();
        let out = generate_caption(
            &request(style),
            Some(&client),
            &GenerationConstraints::for_style(style),
            &PhraseTable::bundled(),
            &metrics,
        );
        (out, metrics.snapshot())
    }

    #[test]
    fn compliant_output_is_returned_verbatim() {
        let text = "路飞这波操作我们都看呆了吧";
        assert_eq!(text.chars().count(), 13);
        let (out, m) = run(vec![Ok(text.into())], ResponseStyle::HumorousPraise);
        assert_eq!(out.text, text);
        assert_eq!(out.source, CaptionSource::Llm);
        assert_eq!(m.fallbacks, 0);
    }

    #[test]
    fn oversize_output_falls_back() {
        let (out, m) = run(
            vec![Ok("哈".repeat(500)), Ok("哈".repeat(500))],
            ResponseStyle::HumorousPraise,
        );
        assert_eq!(out.source, CaptionSource::Template);
        assert_eq!(m.validation_failures, 2);
        assert_eq!(m.fallbacks, 1);
    }

    #[test]
    fn retry_recovers_from_one_failure() {
        let (out, m) = run(
            vec![Err(ChatError::Timeout), Ok("路飞来了".into())],
            ResponseStyle::Expository,
        );
        assert_eq!(out.source, CaptionSource::Llm);
        assert_eq!(m.llm_attempts, 2);
        assert_eq!(m.llm_errors, 1);
    }

    #[test]
    fn unreachable_client_falls_back() {
        let (out, m) = run(
            vec![
                Err(ChatError::Transport("refused".into())),
                Err(ChatError::Transport("refused".into())),
            ],
            ResponseStyle::Tsukkomi,
        );
        assert_eq!(out.source, CaptionSource::Template);
        assert_eq!(m.llm_errors, 2);
    }

    #[test]
    fn template_backend_never_calls_client() {
        let gen = CaptionGenerator::template_only()
            .with_client(Arc::new(Scripted(Mutex::new(Vec::new()))));
        let out = gen.generate(&request(ResponseStyle::Expository), CaptionBackend::Template);
        assert_eq!(out.source, CaptionSource::Template);
        assert_eq!(gen.metrics().llm_attempts, 0);
    }

    #[test]
    fn names_round_trip() {
        for s in ResponseStyle::ALL {
            assert_eq!(s.name().parse::<ResponseStyle>().unwrap(), s);
        }
        for p in Pov::ALL {
            assert_eq!(p.name().parse::<Pov>().unwrap(), p);
        }
    }
}
