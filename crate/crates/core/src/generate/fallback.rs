use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::Deserialize;
use thiserror::Error;

use super::validate::{validate_caption, GenerationConstraints};
use super::{CaptionRequest, CaptionSource, CaptionText, Pov, ResponseStyle};
use crate::emotion::EmotionLabel;
use crate::rng::{derive_seed, seeded};

const THEME_SLOT: &str = "{theme}";
const BUNDLED: &str = include_str!("../../data/phrases.json");

/// Last-resort captions when neither the table nor a theme word fits.
const SAFE_MARKS: [&str; 6] = ["……", "！！！", "？？？", "👀", "♪", "。"];

#[derive(Debug, Error)]
pub enum PhraseTableError {
    #[error("phrase table json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no phrases for {0} / {1:?}")]
    Missing(ResponseStyle, Pov),
}

#[derive(Deserialize)]
struct PhraseFile {
    #[serde(default)]
    version: String,
    #[serde(flatten)]
    styles: BTreeMap<ResponseStyle, BTreeMap<Pov, Vec<String>>>,
}

/// Canned caption phrases per (style, pov). Phrases may contain a `{theme}`
/// slot filled with a theme word.
#[derive(Debug, Clone)]
pub struct PhraseTable {
    version: String,
    phrases: BTreeMap<(ResponseStyle, Pov), Vec<String>>,
}

impl PhraseTable {
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED).expect("bundled phrase table is valid")
    }

    pub fn from_json(json: &str) -> Result<Self, PhraseTableError> {
        let file: PhraseFile = serde_json::from_str(json)?;
        let mut phrases = BTreeMap::new();
        for (style, by_pov) in file.styles {
            for (pov, list) in by_pov {
                let list: Vec<String> = list
                    .into_iter()
                    .map(|p| p.trim().to_string())
                    .filter(|p| !p.is_empty())
                    .collect();
                phrases.insert((style, pov), list);
            }
        }
        for style in ResponseStyle::ALL {
            for pov in Pov::ALL {
                if phrases.get(&(style, pov)).is_none_or(Vec::is_empty) {
                    return Err(PhraseTableError::Missing(style, pov));
                }
            }
        }
        Ok(Self {
            version: file.version,
            phrases,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn phrases(&self, style: ResponseStyle, pov: Pov) -> &[String] {
        self.phrases.get(&(style, pov)).map_or(&[], Vec::as_slice)
    }

    /// Deterministic seeded pick of the first candidate that validates under
    /// `constraints`. Never fails: falls back to a bare theme word, then to a
    /// punctuation mark, then to any character not banned on its own.
    pub fn caption(&self, request: &CaptionRequest, constraints: &GenerationConstraints) -> CaptionText {
        let text = self.pick(request, constraints);
        CaptionText {
            text,
            style: request.style,
            pov: request.pov,
            source: CaptionSource::Template,
        }
    }

    fn pick(&self, request: &CaptionRequest, constraints: &GenerationConstraints) -> String {
        let theme = &request.theme;
        let eligible = constraints.eligible_theme_words(theme);
        let mut rng = seeded(derive_seed(request.seed, request.dominant.index() as u64));

        let mut words = eligible.clone();
        words.shuffle(&mut rng);
        let mut phrases: Vec<&String> = self.phrases(request.style, request.pov).iter().collect();
        phrases.shuffle(&mut rng);

        // themed phrases are tried first so a theme word is used when available
        let mut candidates: Vec<String> = Vec::new();
        for p in phrases.iter().filter(|p| p.contains(THEME_SLOT)) {
            for w in &words {
                candidates.push(p.replace(THEME_SLOT, w));
            }
        }
        candidates.extend(
            phrases
                .iter()
                .filter(|p| !p.contains(THEME_SLOT))
                .map(|p| p.to_string()),
        );
        candidates.extend(words.iter().map(|w| w.to_string()));
        candidates.extend(SAFE_MARKS.iter().map(|s| s.to_string()));

        if let Some(found) = candidates
            .into_iter()
            .find(|c| validate_caption(c, theme, constraints).is_ok())
        {
            return found;
        }
        // every banned term is non-empty, so some single character is allowed
        ('\u{4e00}'..='\u{9fff}')
            .map(|c| c.to_string())
            .find(|c| validate_caption(c, theme, constraints).is_ok())
            .expect("some ideograph is not banned")
    }
}

/// Template caption under the default constraints for `style`.
pub fn fallback_caption(
    style: ResponseStyle,
    pov: Pov,
    theme: &[String],
    dominant: EmotionLabel,
    seed: u64,
) -> CaptionText {
    let request = CaptionRequest {
        style,
        pov,
        theme: theme.to_vec(),
        dominant,
        exemplars: Vec::new(),
        seed,
    };
    PhraseTable::bundled().caption(&request, &GenerationConstraints::for_style(style))
}
