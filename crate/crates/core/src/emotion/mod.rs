//! 28-label emotion taxonomy, per-message scoring and window aggregation.

mod classifier;
mod labels;
mod vector;

pub use classifier::{
    parse_classifier_response, ClassifierRequest, ClassifierResponse, EmotionClassifier,
    EmotionLexicon, LexiconError, LexiconClassifier,
};
pub use labels::{polarity, EmotionLabel, PolarityClass, LABEL_COUNT};
pub use vector::{dominant_emotion, emotional_weight, sum_vectors, EmotionVector, VectorError};
