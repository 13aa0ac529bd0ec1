//! Blocking HTTP clients for the optional chat, classifier and image endpoints.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;
use tracing::warn;

use danmaku_mod_core::emotion::{
    parse_classifier_response, ClassifierRequest, EmotionClassifier, LexiconClassifier,
};
use danmaku_mod_core::generate::{ChatClient, ChatError, ChatRequest, ChatResponse};
use danmaku_mod_core::style::{ImageClient, ImageError, ImageRequest, ImageResponse};
use danmaku_mod_core::EmotionVector;

use crate::config::EndpointConfig;

pub const CHAT_TIMEOUT: Duration = Duration::from_secs(5);
pub const CLASSIFIER_TIMEOUT: Duration = Duration::from_secs(2);
pub const IMAGE_TIMEOUT: Duration = Duration::from_secs(20);

#[derive(Debug)]
enum CallError {
    Timeout,
    Transport(String),
    Status(u16),
    Body(String),
}

struct JsonEndpoint {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
}

impl JsonEndpoint {
    fn new(cfg: &EndpointConfig, default_timeout: Duration) -> Self {
        let timeout = cfg.timeout_ms.map(Duration::from_millis).unwrap_or(default_timeout);
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Self {
            agent,
            url: cfg.url.clone(),
            api_key: cfg.api_key.clone(),
        }
    }

    fn post<B: Serialize, R: DeserializeOwned>(&self, body: &B) -> Result<R, CallError> {
        let mut req = self.agent.post(&self.url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| match e {
            ureq::Error::Timeout(_) => CallError::Timeout,
            other => CallError::Transport(other.to_string()),
        })?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(CallError::Status(status));
        }
        let text = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => CallError::Timeout,
            other => CallError::Transport(other.to_string()),
        })?;
        serde_json::from_str(&text).map_err(|e| CallError::Body(e.to_string()))
    }
}

/// `POST {system, user, max_tokens}` -> `{text}`.
pub struct HttpChatClient {
    endpoint: JsonEndpoint,
}

impl HttpChatClient {
    pub fn new(cfg: &EndpointConfig) -> Self {
        Self {
            endpoint: JsonEndpoint::new(cfg, CHAT_TIMEOUT),
        }
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<String, ChatError> {
        self.endpoint
            .post::<_, ChatResponse>(request)
            .map(|r| r.text)
            .map_err(|e| match e {
                CallError::Timeout => ChatError::Timeout,
                CallError::Transport(m) => ChatError::Transport(m),
                CallError::Status(s) => ChatError::Status(s),
                CallError::Body(m) => ChatError::BadResponse(m),
            })
    }
}

/// Remote scorer with the bundled lexicon as fallback on any failure.
pub struct RemoteClassifier {
    endpoint: JsonEndpoint,
    fallback: LexiconClassifier,
}

impl RemoteClassifier {
    pub fn new(cfg: &EndpointConfig, fallback: LexiconClassifier) -> Self {
        Self {
            endpoint: JsonEndpoint::new(cfg, CLASSIFIER_TIMEOUT),
            fallback,
        }
    }

    fn remote(&self, texts: &[&str]) -> Result<Vec<EmotionVector>, String> {
        let body: serde_json::Value = self
            .endpoint
            .post(&ClassifierRequest { texts })
            .map_err(|e| format!("{e:?}"))?;
        parse_classifier_response(&body.to_string(), texts.len())
    }
}

impl EmotionClassifier for RemoteClassifier {
    fn classify_batch(&self, texts: &[&str]) -> Vec<EmotionVector> {
        if texts.is_empty() {
            return Vec::new();
        }
        match self.remote(texts) {
            Ok(vectors) => vectors,
            Err(e) => {
                warn!(error = %e, "classifier endpoint failed, using lexicon");
                self.fallback.classify_batch(texts)
            }
        }
    }
}

/// `POST {prompt}` -> `{image_url}`.
pub struct HttpImageClient {
    endpoint: JsonEndpoint,
}

impl HttpImageClient {
    pub fn new(cfg: &EndpointConfig) -> Self {
        Self {
            endpoint: JsonEndpoint::new(cfg, IMAGE_TIMEOUT),
        }
    }
}

impl ImageClient for HttpImageClient {
    fn generate(&self, request: &ImageRequest) -> Result<String, ImageError> {
        self.endpoint
            .post::<_, ImageResponse>(request)
            .map(|r| r.image_url)
            .map_err(|e| ImageError::Endpoint(format!("{e:?}")))
    }
}
