use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::labels::{EmotionLabel, PolarityClass};
use super::vector::EmotionVector;
use crate::ingest::tokenize;

/// Scores texts against the 28-label taxonomy.
pub trait EmotionClassifier: Send + Sync {
    fn classify_batch(&self, texts: &[&str]) -> Vec<EmotionVector>;

    fn classify(&self, text: &str) -> EmotionVector {
        self.classify_batch(&[text])
            .pop()
            .unwrap_or_else(EmotionVector::neutral)
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown label {label:?} for token {token:?}")]
    UnknownLabel { token: String, label: String },
    #[error("weight for {token:?}/{label} must be finite and non-negative")]
    BadWeight { token: String, label: String },
    #[error("token {0:?} does not tokenize to itself and can never match")]
    Unreachable(String),
    #[error("lexicon has no entry for polarity class {0:?}")]
    MissingPolarity(PolarityClass),
}

#[derive(Deserialize)]
struct LexiconFile {
    #[serde(default)]
    version: String,
    entries: BTreeMap<String, BTreeMap<String, f64>>,
}

/// Token surface to sparse emotion contribution.
#[derive(Debug, Clone)]
pub struct EmotionLexicon {
    version: String,
    entries: BTreeMap<String, Vec<(EmotionLabel, f64)>>,
}

const BUNDLED: &str = include_str!("../../data/lexicon.json");

impl EmotionLexicon {
    /// The bundled bilingual baseline lexicon.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED).expect("bundled lexicon is valid")
    }

    /// Parses either `{"version":..,"entries":{token:{label:weight}}}` or the
    /// bare `{token:{label:weight}}` map.
    pub fn from_json(json: &str) -> Result<Self, LexiconError> {
        let file: LexiconFile = match serde_json::from_str(json) {
            Ok(f) => f,
            Err(_) => LexiconFile {
                version: String::new(),
                entries: serde_json::from_str(json)?,
            },
        };
        let mut entries = BTreeMap::new();
        for (token, labels) in file.entries {
            let surfaces: Vec<_> = tokenize(&token).into_iter().map(|t| t.surface).collect();
            if surfaces != [token.clone()] {
                return Err(LexiconError::Unreachable(token));
            }
            let mut contribution = Vec::with_capacity(labels.len());
            for (label, weight) in labels {
                let parsed: EmotionLabel = label.parse().map_err(|_| LexiconError::UnknownLabel {
                    token: token.clone(),
                    label: label.clone(),
                })?;
                if !(weight.is_finite() && weight >= 0.0) {
                    return Err(LexiconError::BadWeight { token, label });
                }
                contribution.push((parsed, weight));
            }
            contribution.sort_by_key(|(l, _)| *l);
            entries.insert(token, contribution);
        }
        for class in PolarityClass::ALL {
            let covered = entries
                .values()
                .flatten()
                .any(|(l, w)| l.polarity() == class && *w > 0.0);
            if !covered {
                return Err(LexiconError::MissingPolarity(class));
            }
        }
        Ok(Self {
            version: file.version,
            entries,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, surface: &str) -> Option<&[(EmotionLabel, f64)]> {
        self.entries.get(surface).map(Vec::as_slice)
    }

    /// Sums contributions over the text's tokens; no hit means neutral.
    pub fn classify(&self, text: &str) -> EmotionVector {
        let mut v = EmotionVector::zero();
        let mut hit = false;
        for token in tokenize(text) {
            if let Some(contribution) = self.lookup(&token.surface) {
                hit = true;
                for &(label, weight) in contribution {
                    v.add(label, weight);
                }
            }
        }
        if hit {
            v
        } else {
            EmotionVector::neutral()
        }
    }
}

/// Lexicon-backed classifier.
#[derive(Debug, Clone)]
pub struct LexiconClassifier {
    lexicon: EmotionLexicon,
}

impl LexiconClassifier {
    pub fn new(lexicon: EmotionLexicon) -> Self {
        Self { lexicon }
    }

    pub fn lexicon(&self) -> &EmotionLexicon {
        &self.lexicon
    }
}

impl Default for LexiconClassifier {
    fn default() -> Self {
        Self::new(EmotionLexicon::bundled())
    }
}

impl EmotionClassifier for LexiconClassifier {
    fn classify_batch(&self, texts: &[&str]) -> Vec<EmotionVector> {
        texts.iter().map(|t| self.lexicon.classify(t)).collect()
    }
}

/// Request body of the external classifier endpoint.
#[derive(Debug, Serialize)]
pub struct ClassifierRequest<'a> {
    pub texts: &'a [&'a str],
}

/// Response body of the external classifier endpoint.
#[derive(Debug, Deserialize)]
pub struct ClassifierResponse {
    pub vectors: Vec<Vec<f64>>,
}

/// Validates an endpoint response against the request size.
pub fn parse_classifier_response(body: &str, expected: usize) -> Result<Vec<EmotionVector>, String> {
    let resp: ClassifierResponse = serde_json::from_str(body).map_err(|e| e.to_string())?;
    if resp.vectors.len() != expected {
        return Err(format!("expected {expected} vectors, got {}", resp.vectors.len()));
    }
    resp.vectors
        .into_iter()
        .map(|v| EmotionVector::try_from(v).map_err(|e| e.to_string()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use EmotionLabel::*;

    fn small() -> EmotionLexicon {
        EmotionLexicon::from_json(
            r#"{"厉害":{"admiration":1.0},"开心":{"joy":0.5},"垃圾":{"disgust":1.0},
                "什么":{"confusion":1.0},"打卡":{"neutral":1.0}}"#,
        )
        .unwrap()
    }

    #[test]
    fn bundled_lexicon_loads() {
        let lex = EmotionLexicon::bundled();
        assert!(lex.len() >= 300, "{}", lex.len());
    }

    #[test]
    fn no_match_is_neutral() {
        let lex = small();
        assert_eq!(lex.classify("zzz"), EmotionVector::neutral());
        assert_eq!(lex.classify(""), EmotionVector::neutral());
    }

    #[test]
    fn contributions_are_summed() {
        let lex = small();
        let v = lex.classify("好厉害！真开心");
        // oracle: direct lookup of each hit entry
        let mut expected = EmotionVector::zero();
        expected.add(Admiration, 1.0);
        expected.add(Joy, 0.5);
        assert_eq!(v, expected);
        assert_eq!(v, lex.classify("好厉害！真开心"));
    }

    #[test]
    fn repeated_tokens_accumulate() {
        // 厉害厉害 -> 厉害, 害厉, 厉害
        assert_eq!(small().classify("厉害厉害").get(Admiration), 2.0);
        assert_eq!(small().classify("厉害 厉害").get(Admiration), 2.0);
    }

    #[test]
    fn rejects_bad_lexicons() {
        assert!(matches!(
            EmotionLexicon::from_json(r#"{"厉害":{"awe":1.0}}"#),
            Err(LexiconError::UnknownLabel { .. })
        ));
        assert!(matches!(
            EmotionLexicon::from_json(r#"{"厉害":{"joy":-1.0}}"#),
            Err(LexiconError::BadWeight { .. })
        ));
        assert!(matches!(
            EmotionLexicon::from_json(r#"{"为什么":{"confusion":1.0}}"#),
            Err(LexiconError::Unreachable(_))
        ));
        assert!(matches!(
            EmotionLexicon::from_json(r#"{"厉害":{"joy":1.0}}"#),
            Err(LexiconError::MissingPolarity(_))
        ));
    }

    #[test]
    fn endpoint_response_validation() {
        let ok = format!(r#"{{"vectors":[{}]}}"#, serde_json::to_string(&vec![0.5; 28]).unwrap());
        assert_eq!(parse_classifier_response(&ok, 1).unwrap().len(), 1);
        assert!(parse_classifier_response(&ok, 2).is_err());
        assert!(parse_classifier_response(r#"{"vectors":[[1.0]]}"#, 1).is_err());
        assert!(parse_classifier_response("nope", 1).is_err());
    }
}
