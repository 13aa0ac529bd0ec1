use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::ResponseStyle;

pub const DEFAULT_MAX_CHARS: usize = 30;
pub const MIN_MAX_CHARS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationConstraints {
    pub max_chars: usize,
    pub language: String,
    pub banned_terms: Vec<String>,
    pub require_theme_word: bool,
}

impl Default for GenerationConstraints {
    fn default() -> Self {
        Self {
            max_chars: DEFAULT_MAX_CHARS,
            language: "zh".into(),
            banned_terms: Vec::new(),
            require_theme_word: false,
        }
    }
}

impl GenerationConstraints {
    /// Defaults, with the theme-word requirement on for expository captions.
    pub fn for_style(style: ResponseStyle) -> Self {
        Self {
            require_theme_word: style == ResponseStyle::Expository,
            ..Self::default()
        }
    }

    pub fn max_tokens(&self) -> u32 {
        (self.max_chars * 4) as u32
    }

    fn folded_banned(&self) -> impl Iterator<Item = String> + '_ {
        self.banned_terms
            .iter()
            .map(|t| fold(t))
            .filter(|t| !t.is_empty())
    }

    pub(crate) fn contains_banned(&self, text: &str) -> Option<String> {
        let folded = fold(text);
        self.folded_banned().find(|t| folded.contains(t.as_str()))
    }

    /// Theme words that can appear in a valid caption at all: non-empty,
    /// within the length cap, and free of banned terms.
    pub(crate) fn eligible_theme_words<'a>(&self, theme: &'a [String]) -> Vec<&'a str> {
        theme
            .iter()
            .map(|w| w.trim())
            .filter(|w| !w.is_empty())
            .filter(|w| w.chars().count() <= self.max_chars.max(MIN_MAX_CHARS))
            .filter(|w| self.contains_banned(w).is_none())
            .collect()
    }
}

/// Case- and width-folding used for term matching.
pub(crate) fn fold(s: &str) -> String {
    s.nfkc().collect::<String>().to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Empty,
    Length { chars: usize, max: usize },
    BannedTerm(String),
    MissingThemeWord,
}

/// Checks a candidate caption. A theme word is required only if at least one
/// theme word could legally appear (see `eligible_theme_words`).
pub fn validate_caption(
    text: &str,
    theme: &[String],
    constraints: &GenerationConstraints,
) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let trimmed = text.trim();
    if trimmed.is_empty() {
        violations.push(Violation::Empty);
    }
    let chars = text.chars().count();
    let max = constraints.max_chars.max(MIN_MAX_CHARS);
    if chars > max {
        violations.push(Violation::Length { chars, max });
    }
    if let Some(term) = constraints.contains_banned(text) {
        violations.push(Violation::BannedTerm(term));
    }
    if constraints.require_theme_word {
        let eligible = constraints.eligible_theme_words(theme);
        let folded = fold(text);
        if !eligible.is_empty() && !eligible.iter().any(|w| folded.contains(&fold(w))) {
            violations.push(Violation::MissingThemeWord);
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
