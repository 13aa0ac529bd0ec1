use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::labels::{EmotionLabel, LABEL_COUNT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VectorError {
    #[error("expected {LABEL_COUNT} scores, got {0}")]
    WrongLength(usize),
    #[error("score {index} is negative or non-finite: {value}")]
    BadScore { index: usize, value: f64 },
}

/// 28 non-negative finite scores in canonical label order. Scores are raw
/// weights; only argmax and ratios are consumed downstream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmotionVector([f64; LABEL_COUNT]);

impl Default for EmotionVector {
    fn default() -> Self {
        Self::zero()
    }
}

impl EmotionVector {
    pub fn zero() -> Self {
        Self([0.0; LABEL_COUNT])
    }

    pub fn one_hot(label: EmotionLabel) -> Self {
        let mut v = Self::zero();
        v.0[label.index()] = 1.0;
        v
    }

    pub fn neutral() -> Self {
        Self::one_hot(EmotionLabel::Neutral)
    }

    pub fn from_scores(scores: [f64; LABEL_COUNT]) -> Result<Self, VectorError> {
        for (index, &value) in scores.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(VectorError::BadScore { index, value });
            }
        }
        Ok(Self(scores))
    }

    pub fn scores(&self) -> &[f64; LABEL_COUNT] {
        &self.0
    }

    pub fn get(&self, label: EmotionLabel) -> f64 {
        self.0[label.index()]
    }

    /// Adds a non-negative finite amount to one label; other inputs are ignored.
    pub fn add(&mut self, label: EmotionLabel, amount: f64) {
        if amount.is_finite() && amount >= 0.0 {
            self.0[label.index()] += amount;
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Self, VectorError> {
        let mut out = self.0;
        out.iter_mut().for_each(|s| *s *= c);
        Self::from_scores(out)
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl TryFrom<Vec<f64>> for EmotionVector {
    type Error = VectorError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        let scores: [f64; LABEL_COUNT] = v
            .as_slice()
            .try_into()
            .map_err(|_| VectorError::WrongLength(v.len()))?;
        Self::from_scores(scores)
    }
}

impl From<EmotionVector> for Vec<f64> {
    fn from(v: EmotionVector) -> Self {
        v.0.to_vec()
    }
}

/// Elementwise sum, accumulated in input order.
pub fn sum_vectors<'a, I>(vectors: I) -> EmotionVector
where
    I: IntoIterator<Item = &'a EmotionVector>,
{
    let mut acc = [0.0; LABEL_COUNT];
    for v in vectors {
        for (a, s) in acc.iter_mut().zip(v.0.iter()) {
            *a += *s;
        }
    }
    EmotionVector(acc)
}

/// Argmax label, lowest index winning ties; an all-zero vector is neutral.
pub fn dominant_emotion(v: &EmotionVector) -> EmotionLabel {
    let mut best = 0usize;
    for i in 1..LABEL_COUNT {
        if v.0[i] > v.0[best] {
            best = i;
        }
    }
    if v.0[best] <= 0.0 {
        return EmotionLabel::Neutral;
    }
    EmotionLabel::ALL[best]
}

/// Share of the vector's mass on non-neutral labels, in `[0, 1]`.
pub fn emotional_weight(v: &EmotionVector) -> f64 {
    let total: f64 = v.0.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let emotional: f64 = v.0[..EmotionLabel::Neutral.index()].iter().sum();
    (emotional / total).clamp(0.0, 1.0)
}
