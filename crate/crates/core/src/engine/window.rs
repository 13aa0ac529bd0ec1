use serde::{Deserialize, Serialize};

use super::settings::{AdminSettings, PovPolicy, StylePolicy, WindowDuration};
use crate::emotion::{
    dominant_emotion, emotional_weight, sum_vectors, EmotionClassifier, EmotionLabel,
    EmotionVector, PolarityClass,
};
use crate::generate::{Pov, ResponseStyle};
use crate::ingest::DanmakuMessage;
use crate::topics::{extract_theme, LdaModel, Theme};

/// Number of comments handed to the generator as exemplars.
pub const EXEMPLAR_COUNT: usize = 3;

/// Tumbling window index for a video timestamp.
pub fn assign_window(video_time_ms: u64, duration: WindowDuration) -> u64 {
    video_time_ms / duration.millis()
}

/// Per-window aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub window_index: u64,
    pub start_ms: u64,
    pub end_ms: u64,
    pub message_count: usize,
    pub summed_emotions: EmotionVector,
    pub dominant_label: EmotionLabel,
    pub polarity: PolarityClass,
    /// Sum of per-message emotional weights.
    pub weighted_frequency: f64,
    pub theme: Theme,
}

impl WindowSummary {
    pub fn empty(window_index: u64, start_ms: u64, end_ms: u64) -> Self {
        Self {
            window_index,
            start_ms,
            end_ms,
            message_count: 0,
            summed_emotions: EmotionVector::zero(),
            dominant_label: EmotionLabel::Neutral,
            polarity: PolarityClass::Neutral,
            weighted_frequency: 0.0,
            theme: Theme::default(),
        }
    }
}

/// Bounds of one window in video time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowBounds {
    pub index: u64,
    pub start_ms: u64,
    pub end_ms: u64,
}

impl WindowBounds {
    /// Window `index` of the zero-aligned grid.
    pub fn aligned(index: u64, duration: WindowDuration) -> Self {
        let d = duration.millis();
        Self {
            index,
            start_ms: index * d,
            end_ms: (index + 1) * d,
        }
    }
}

/// A summary together with the per-message scores it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredWindow {
    pub summary: WindowSummary,
    pub vectors: Vec<EmotionVector>,
    /// Highest-weight comments, at most [`EXEMPLAR_COUNT`].
    pub exemplars: Vec<String>,
}

/// Scores and aggregates the messages of one window.
pub fn summarize_window(
    bounds: WindowBounds,
    messages: &[DanmakuMessage],
    classifier: &dyn EmotionClassifier,
    model: Option<&LdaModel>,
    seed: u64,
) -> ScoredWindow {
    let mut summary = WindowSummary::empty(bounds.index, bounds.start_ms, bounds.end_ms);
    if messages.is_empty() {
        return ScoredWindow {
            summary,
            vectors: Vec::new(),
            exemplars: Vec::new(),
        };
    }
    let texts: Vec<&str> = messages.iter().map(|m| m.text.as_str()).collect();
    let vectors = classifier.classify_batch(&texts);
    assert_eq!(vectors.len(), messages.len(), "classifier returned wrong batch size");

    let weights: Vec<f64> = vectors.iter().map(emotional_weight).collect();
    summary.message_count = messages.len();
    summary.summed_emotions = sum_vectors(&vectors);
    summary.dominant_label = dominant_emotion(&summary.summed_emotions);
    summary.polarity = summary.dominant_label.polarity();
    summary.weighted_frequency = weights.iter().sum();
    summary.theme = match model {
        Some(model) => extract_theme(model, messages, seed),
        None => Theme {
            support: messages.len(),
            ..Theme::default()
        },
    };

    let mut order: Vec<usize> = (0..messages.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    let exemplars = order
        .into_iter()
        .take(EXEMPLAR_COUNT)
        .map(|i| messages[i].text.clone())
        .collect();

    ScoredWindow {
        summary,
        vectors,
        exemplars,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerDecision {
    pub fire: bool,
    pub reason: String,
}

/// Fires iff `F * trigger_weight >= threshold` on a non-empty window.
pub fn should_trigger(summary: &WindowSummary, settings: &AdminSettings) -> TriggerDecision {
    let f = summary.weighted_frequency * settings.trigger_weight;
    let theta = settings.comment_threshold;
    if summary.message_count == 0 {
        return TriggerDecision {
            fire: false,
            reason: format!("empty window (F={f}, threshold={theta})"),
        };
    }
    let fire = f >= theta;
    let cmp = if fire { ">=" } else { "<" };
    TriggerDecision {
        fire,
        reason: format!("F={f} {cmp} threshold={theta} over {} messages", summary.message_count),
    }
}

pub fn select_style(
    polarity: PolarityClass,
    dominant: EmotionLabel,
    policy: StylePolicy,
) -> ResponseStyle {
    use PolarityClass::*;
    match policy {
        StylePolicy::Fixed(style) => style,
        StylePolicy::Original => match polarity {
            Negative => ResponseStyle::Tsukkomi,
            Ambiguous | Neutral => ResponseStyle::Expository,
            Positive => ResponseStyle::HumorousPraise,
        },
        StylePolicy::Revised => match polarity {
            Negative => ResponseStyle::HumorousPraise,
            Positive => ResponseStyle::Tsukkomi,
            Ambiguous => match dominant {
                EmotionLabel::Surprise | EmotionLabel::Realization => ResponseStyle::Tsukkomi,
                _ => ResponseStyle::Expository,
            },
            Neutral => ResponseStyle::Expository,
        },
    }
}

/// Blend alternates strictly, so any run of windows is split evenly.
pub fn select_pov(policy: PovPolicy, window_index: u64, seed: u64) -> Pov {
    match policy {
        PovPolicy::First => Pov::First,
        PovPolicy::Third => Pov::Third,
        PovPolicy::Blend => {
            if window_index.wrapping_add(seed).is_multiple_of(2) {
                Pov::First
            } else {
                Pov::Third
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emotion::LexiconClassifier;

    fn msg(id: u64, t: u64, text: &str) -> DanmakuMessage {
        DanmakuMessage {
            id,
            video_id: "v".into(),
            video_time_ms: t,
            wall_time_ms: 0,
            text: text.into(),
            user_hash: "u".into(),
            display_color: 0xFFFFFF,
            display_mode: Default::default(),
        }
    }

    /// Returns a fixed vector per text.
    struct Fixed(Vec<(&'static str, EmotionVector)>);

    impl EmotionClassifier for Fixed {
        fn classify_batch(&self, texts: &[&str]) -> Vec<EmotionVector> {
            texts
                .iter()
                .map(|t| {
                    self.0
                        .iter()
                        .find(|(k, _)| k == t)
                        .map(|(_, v)| *v)
                        .unwrap_or_else(EmotionVector::neutral)
                })
                .collect()
        }
    }

    #[test]
    fn window_assignment() {
        assert_eq!(assign_window(0, WindowDuration::Eight), 0);
        assert_eq!(assign_window(7999, WindowDuration::Eight), 0);
        assert_eq!(assign_window(8000, WindowDuration::Eight), 1);
        assert_eq!(assign_window(23999, WindowDuration::Twelve), 1);
        assert_eq!(assign_window(24000, WindowDuration::Twelve), 2);
    }

    #[test]
    fn empty_window_is_zero() {
        let s = summarize_window(
            WindowBounds::aligned(3, WindowDuration::Eight),
            &[],
            &LexiconClassifier::default(),
            None,
            0,
        );
        assert_eq!(s.summary.weighted_frequency, 0.0);
        assert_eq!(s.summary.message_count, 0);
        assert_eq!(s.summary.dominant_label, EmotionLabel::Neutral);
        assert_eq!((s.summary.start_ms, s.summary.end_ms), (24000, 32000));
        assert!(!should_trigger(&s.summary, &AdminSettings::default()).fire);
    }

    #[test]
    fn three_quarter_weight_messages_sum() {
        let mut v = EmotionVector::zero();
        v.add(EmotionLabel::Joy, 3.0);
        v.add(EmotionLabel::Neutral, 1.0);
        let classifier = Fixed(vec![("x", v)]);
        let msgs: Vec<_> = (0..3).map(|i| msg(i, i * 100, "x")).collect();
        let s = summarize_window(WindowBounds::aligned(0, WindowDuration::Eight), &msgs, &classifier, None, 0);
        assert!((s.summary.weighted_frequency - 2.25).abs() < 1e-12);
        assert_eq!(s.summary.dominant_label, EmotionLabel::Joy);
        assert_eq!(s.summary.polarity, PolarityClass::Positive);
        let d = should_trigger(&s.summary, &AdminSettings::default());
        assert!(d.fire, "{}", d.reason);
    }

    #[test]
    fn threshold_is_inclusive() {
        let mut s = WindowSummary::empty(0, 0, 8000);
        s.message_count = 2;
        s.weighted_frequency = 2.0;
        assert!(should_trigger(&s, &AdminSettings::default()).fire);
        let zero = AdminSettings { comment_threshold: 1.0, ..Default::default() };
        s.weighted_frequency = 0.0;
        assert!(!should_trigger(&s, &zero).fire);
    }

    #[test]
    fn trigger_weight_scales_frequency() {
        let mut s = WindowSummary::empty(0, 0, 8000);
        s.message_count = 2;
        s.weighted_frequency = 1.0;
        let settings = AdminSettings { trigger_weight: 2.0, ..Default::default() };
        assert!(should_trigger(&s, &settings).fire);
    }

    #[test]
    fn exemplars_prefer_emotional_comments() {
        let classifier = LexiconClassifier::default();
        let msgs = vec![
            msg(1, 0, "嗯"),
            msg(2, 10, "哈哈哈哈"),
            msg(3, 20, "好"),
            msg(4, 30, "开心"),
        ];
        let s = summarize_window(WindowBounds::aligned(0, WindowDuration::Eight), &msgs, &classifier, None, 0);
        assert_eq!(s.exemplars.len(), 3);
        assert!(s.exemplars.contains(&"哈哈哈哈".to_string()));
        assert!(s.exemplars.contains(&"开心".to_string()));
    }

    #[test]
    fn styles() {
        use EmotionLabel::*;
        assert_eq!(
            select_style(PolarityClass::Negative, Anger, StylePolicy::Revised),
            ResponseStyle::HumorousPraise
        );
        assert_eq!(
            select_style(PolarityClass::Negative, Anger, StylePolicy::Original),
            ResponseStyle::Tsukkomi
        );
        assert_eq!(
            select_style(PolarityClass::Ambiguous, Confusion, StylePolicy::Revised),
            ResponseStyle::Expository
        );
        assert_eq!(
            select_style(PolarityClass::Ambiguous, Surprise, StylePolicy::Revised),
            ResponseStyle::Tsukkomi
        );
        assert_eq!(
            select_style(PolarityClass::Positive, Joy, StylePolicy::Revised),
            ResponseStyle::Tsukkomi
        );
        for p in PolarityClass::ALL {
            for l in EmotionLabel::ALL {
                for s in ResponseStyle::ALL {
                    assert_eq!(select_style(p, l, StylePolicy::Fixed(s)), s);
                }
            }
        }
    }

    #[test]
    fn pov_blend_is_even() {
        assert_eq!(select_pov(PovPolicy::First, 7, 1), Pov::First);
        assert_eq!(select_pov(PovPolicy::Third, 8, 1), Pov::Third);
        for seed in [0u64, 1, 42, u64::MAX] {
            let first = (0..1000)
                .filter(|&w| select_pov(PovPolicy::Blend, w, seed) == Pov::First)
                .count();
            assert_eq!(first, 500);
            assert_eq!(select_pov(PovPolicy::Blend, 5, seed), select_pov(PovPolicy::Blend, 5, seed));
        }
    }
}
