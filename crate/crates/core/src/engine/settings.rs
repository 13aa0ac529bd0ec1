use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::generate::{CaptionBackend, ResponseStyle};
use crate::style::{DisplayPosition, FontCurve};

/// Aggregation window length; only 8 s and 12 s are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WindowDuration {
    #[default]
    Eight,
    Twelve,
}

impl WindowDuration {
    pub fn seconds(self) -> u64 {
        match self {
            WindowDuration::Eight => 8,
            WindowDuration::Twelve => 12,
        }
    }

    pub fn millis(self) -> u64 {
        self.seconds() * 1000
    }

    pub fn from_seconds(s: u64) -> Option<Self> {
        match s {
            8 => Some(WindowDuration::Eight),
            12 => Some(WindowDuration::Twelve),
            _ => None,
        }
    }
}

impl Serialize for WindowDuration {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(self.seconds())
    }
}

impl<'de> Deserialize<'de> for WindowDuration {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let secs = u64::deserialize(d)?;
        WindowDuration::from_seconds(secs)
            .ok_or_else(|| serde::de::Error::custom(format!("window_duration_s must be 8 or 12, got {secs}")))
    }
}

/// Maps window polarity to a response style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum StylePolicy {
    /// negative -> roast, ambiguous/neutral -> expository, positive -> praise
    Original,
    /// negative -> humor, positive and some ambiguous -> roast
    #[default]
    Revised,
    Fixed(ResponseStyle),
}

impl fmt::Display for StylePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StylePolicy::Original => f.write_str("original"),
            StylePolicy::Revised => f.write_str("revised"),
            StylePolicy::Fixed(style) => write!(f, "fixed:{style}"),
        }
    }
}

impl FromStr for StylePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(StylePolicy::Original),
            "revised" => Ok(StylePolicy::Revised),
            _ => match s.strip_prefix("fixed:") {
                Some(style) => style.parse().map(StylePolicy::Fixed),
                None => Err(format!(
                    "style_policy must be original, revised or fixed:<style>, got {s:?}"
                )),
            },
        }
    }
}

impl Serialize for StylePolicy {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StylePolicy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PovPolicy {
    First,
    Third,
    #[default]
    Blend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMethod {
    #[default]
    Overlay,
}

pub const DEFAULT_THRESHOLD: f64 = 2.0;
pub const MAX_DANMAKU_SCALE: f64 = 3.0;

/// Live-tunable moderation parameters for one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdminSettings {
    pub window_duration_s: WindowDuration,
    /// Trigger threshold on the weighted emotional frequency.
    pub comment_threshold: f64,
    pub style_policy: StylePolicy,
    pub pov_policy: PovPolicy,
    pub display_position: DisplayPosition,
    pub obscure_danmaku: bool,
    /// Viewer-side Danmaku text scale.
    pub danmaku_scale: f64,
    pub embedding_method: EmbeddingMethod,
    pub caption_backend: CaptionBackend,
    /// Multiplier applied to the weighted frequency before the threshold test.
    #[serde(default = "one")]
    pub trigger_weight: f64,
    /// Tint every negative-content bubble dark red.
    #[serde(default)]
    pub negative_override: bool,
    #[serde(default)]
    pub font_curve: FontCurve,
}

fn one() -> f64 {
    1.0
}

impl Default for AdminSettings {
    fn default() -> Self {
        Self {
            window_duration_s: WindowDuration::Eight,
            comment_threshold: DEFAULT_THRESHOLD,
            style_policy: StylePolicy::Revised,
            pov_policy: PovPolicy::Blend,
            display_position: DisplayPosition::Bottom,
            obscure_danmaku: false,
            danmaku_scale: 1.0,
            embedding_method: EmbeddingMethod::Overlay,
            caption_backend: CaptionBackend::Template,
            trigger_weight: 1.0,
            negative_override: false,
            font_curve: FontCurve::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl AdminSettings {
    /// Domain checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut errors = Vec::new();
        if !(self.comment_threshold.is_finite() && self.comment_threshold >= 0.0) {
            errors.push(FieldError {
                field: "comment_threshold",
                message: format!("must be finite and >= 0, got {}", self.comment_threshold),
            });
        }
        if !(self.danmaku_scale > 0.0 && self.danmaku_scale <= MAX_DANMAKU_SCALE) {
            errors.push(FieldError {
                field: "danmaku_scale",
                message: format!("must be in (0, {MAX_DANMAKU_SCALE}], got {}", self.danmaku_scale),
            });
        }
        if !(self.trigger_weight.is_finite() && self.trigger_weight >= 0.0) {
            errors.push(FieldError {
                field: "trigger_weight",
                message: format!("must be finite and >= 0, got {}", self.trigger_weight),
            });
        }
        if let Err(message) = self.font_curve.validate() {
            errors.push(FieldError {
                field: "font_curve",
                message,
            });
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Parses and validates a JSON settings object.
    pub fn from_json(json: &str) -> Result<Self, Vec<FieldError>> {
        let settings: AdminSettings = serde_json::from_str(json).map_err(|e| {
            vec![FieldError {
                field: "settings",
                message: e.to_string(),
            }]
        })?;
        settings.validate()?;
        Ok(settings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let s = AdminSettings::default();
        assert_eq!(s.window_duration_s.seconds(), 8);
        assert_eq!(s.comment_threshold, 2.0);
        assert_eq!(s.style_policy, StylePolicy::Revised);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn json_shape() {
        let v = serde_json::to_value(AdminSettings::default()).unwrap();
        assert_eq!(v["window_duration_s"], 8);
        assert_eq!(v["style_policy"], "revised");
        assert_eq!(v["pov_policy"], "blend");
        assert_eq!(v["embedding_method"], "overlay");
        let fixed = AdminSettings {
            style_policy: StylePolicy::Fixed(ResponseStyle::HumorousPraise),
            ..Default::default()
        };
        let json = serde_json::to_string(&fixed).unwrap();
        assert!(json.contains("\"fixed:humorous_praise\""));
        assert_eq!(AdminSettings::from_json(&json).unwrap(), fixed);
    }

    #[test]
    fn only_eight_or_twelve_seconds() {
        let mut v = serde_json::to_value(AdminSettings::default()).unwrap();
        v["window_duration_s"] = 10.into();
        assert!(AdminSettings::from_json(&v.to_string()).is_err());
        v["window_duration_s"] = 12.into();
        assert_eq!(
            AdminSettings::from_json(&v.to_string()).unwrap().window_duration_s,
            WindowDuration::Twelve
        );
    }

    #[test]
    fn field_level_errors() {
        let s = AdminSettings {
            comment_threshold: -1.0,
            danmaku_scale: 0.0,
            ..Default::default()
        };
        let errors = s.validate().unwrap_err();
        let fields: Vec<_> = errors.iter().map(|e| e.field).collect();
        assert_eq!(fields, ["comment_threshold", "danmaku_scale"]);
        assert!(AdminSettings { danmaku_scale: 3.0, ..Default::default() }.validate().is_ok());
        assert!(AdminSettings { comment_threshold: f64::INFINITY, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = serde_json::to_value(AdminSettings::default()).unwrap();
        v["surprise"] = true.into();
        assert!(AdminSettings::from_json(&v.to_string()).is_err());
    }
}
