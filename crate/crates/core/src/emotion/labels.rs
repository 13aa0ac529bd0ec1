use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub const LABEL_COUNT: usize = 28;

/// The GoEmotions taxonomy in canonical index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum EmotionLabel {
    Admiration = 0,
    Amusement,
    Anger,
    Annoyance,
    Approval,
    Caring,
    Confusion,
    Curiosity,
    Desire,
    Disappointment,
    Disapproval,
    Disgust,
    Embarrassment,
    Excitement,
    Fear,
    Gratitude,
    Grief,
    Joy,
    Love,
    Nervousness,
    Optimism,
    Pride,
    Realization,
    Relief,
    Remorse,
    Sadness,
    Surprise,
    Neutral,
}

use EmotionLabel::*;

impl EmotionLabel {
    pub const ALL: [EmotionLabel; LABEL_COUNT] = [
        Admiration, Amusement, Anger, Annoyance, Approval, Caring, Confusion, Curiosity, Desire,
        Disappointment, Disapproval, Disgust, Embarrassment, Excitement, Fear, Gratitude, Grief,
        Joy, Love, Nervousness, Optimism, Pride, Realization, Relief, Remorse, Sadness, Surprise,
        Neutral,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Admiration => "admiration",
            Amusement => "amusement",
            Anger => "anger",
            Annoyance => "annoyance",
            Approval => "approval",
            Caring => "caring",
            Confusion => "confusion",
            Curiosity => "curiosity",
            Desire => "desire",
            Disappointment => "disappointment",
            Disapproval => "disapproval",
            Disgust => "disgust",
            Embarrassment => "embarrassment",
            Excitement => "excitement",
            Fear => "fear",
            Gratitude => "gratitude",
            Grief => "grief",
            Joy => "joy",
            Love => "love",
            Nervousness => "nervousness",
            Optimism => "optimism",
            Pride => "pride",
            Realization => "realization",
            Relief => "relief",
            Remorse => "remorse",
            Sadness => "sadness",
            Surprise => "surprise",
            Neutral => "neutral",
        }
    }

    pub fn polarity(self) -> PolarityClass {
        match self {
            Admiration | Amusement | Approval | Caring | Desire | Excitement | Gratitude | Joy
            | Love | Optimism | Pride | Relief => PolarityClass::Positive,
            Anger | Annoyance | Disappointment | Disapproval | Disgust | Embarrassment | Fear
            | Grief | Nervousness | Remorse | Sadness => PolarityClass::Negative,
            Confusion | Curiosity | Realization | Surprise => PolarityClass::Ambiguous,
            Neutral => PolarityClass::Neutral,
        }
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmotionLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.name() == s)
            .ok_or_else(|| format!("unknown emotion label {s:?}"))
    }
}

/// Sentiment grouping of the 28 labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarityClass {
    Positive,
    Negative,
    Ambiguous,
    Neutral,
}

impl PolarityClass {
    pub const ALL: [PolarityClass; 4] = [
        PolarityClass::Positive,
        PolarityClass::Negative,
        PolarityClass::Ambiguous,
        PolarityClass::Neutral,
    ];
}

/// Polarity of the label at `index`. Panics if `index >= 28`.
pub fn polarity(index: usize) -> PolarityClass {
    EmotionLabel::ALL[index].polarity()
}
