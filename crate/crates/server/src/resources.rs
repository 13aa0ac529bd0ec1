//! Builds classifiers, generators and topic models from configuration.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use danmaku_mod_core::emotion::{EmotionClassifier, EmotionLexicon, LexiconClassifier};
use danmaku_mod_core::generate::{CaptionGenerator, PhraseTable};
use danmaku_mod_core::style::ImageCache;
use danmaku_mod_core::topics::{fit_lda, Corpus, LdaModel, LdaParams};
use danmaku_mod_core::DanmakuMessage;

use crate::clients::{HttpChatClient, HttpImageClient, RemoteClassifier};
use crate::config::Config;

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("reading {0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}: {1}")]
    Invalid(String, String),
}

fn read(path: &Path) -> Result<String, ResourceError> {
    fs::read_to_string(path).map_err(|e| ResourceError::Io(path.display().to_string(), e))
}

pub fn load_lexicon(config: &Config) -> Result<EmotionLexicon, ResourceError> {
    match &config.lexicon_path {
        Some(path) => EmotionLexicon::from_json(&read(path)?)
            .map_err(|e| ResourceError::Invalid(path.display().to_string(), e.to_string())),
        None => Ok(EmotionLexicon::bundled()),
    }
}

pub fn load_classifier(config: &Config) -> Result<Arc<dyn EmotionClassifier>, ResourceError> {
    let lexicon = LexiconClassifier::new(load_lexicon(config)?);
    Ok(match &config.classifier_endpoint {
        Some(endpoint) => Arc::new(RemoteClassifier::new(endpoint, lexicon)),
        None => Arc::new(lexicon),
    })
}

/// Banned terms are a JSON array of strings.
pub fn load_banned_terms(path: &Path) -> Result<Vec<String>, ResourceError> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| ResourceError::Invalid(path.display().to_string(), e.to_string()))
}

/// Re-reads phrase table and banned terms; called again on settings changes.
pub fn load_generator(config: &Config) -> Result<CaptionGenerator, ResourceError> {
    let mut generator = CaptionGenerator::template_only().with_max_chars(config.max_caption_chars);
    if let Some(path) = &config.phrase_table_path {
        let table = PhraseTable::from_json(&read(path)?)
            .map_err(|e| ResourceError::Invalid(path.display().to_string(), e.to_string()))?;
        generator = generator.with_phrases(table);
    }
    if let Some(path) = &config.banned_terms_path {
        generator = generator.with_banned_terms(load_banned_terms(path)?);
    }
    if let Some(endpoint) = &config.chat_endpoint {
        generator = generator.with_client(Arc::new(HttpChatClient::new(endpoint)));
    }
    Ok(generator)
}

pub fn load_image_cache(config: &Config) -> Option<ImageCache> {
    config
        .image_endpoint
        .as_ref()
        .map(|endpoint| ImageCache::new(Arc::new(HttpImageClient::new(endpoint))))
}

/// Seeded fit over one-document-per-message; `None` when the messages
/// contain no tokens at all.
pub fn fit_model(messages: &[DanmakuMessage], k: usize, seed: u64) -> Option<LdaModel> {
    let corpus = Corpus::from_messages(messages);
    let params = LdaParams {
        seed,
        ..LdaParams::with_topics(k)
    };
    fit_lda(&corpus, params).ok()
}
