//! Visual styling of Impact Captions: bubble color and shape, density-aware
//! font size, procedural bubble outlines and the optional text-to-image prompt.

mod geometry;
mod image;

use serde::{Deserialize, Serialize};

pub use geometry::{bubble_geometry, BubblePath, PathSegment, Point};
pub use image::{image_prompt, ImageCache, ImageClient, ImageError, ImageRequest, ImageResponse};

use crate::emotion::PolarityClass;
use crate::engine::{AdminSettings, WindowSummary};
use crate::generate::{CaptionSource, CaptionText, Pov, ResponseStyle};

/// Uniform bubble translucency.
pub const BUBBLE_ALPHA: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColorRgba {
    pub r: u8,
    pub g: u8,
    pub b: u8,
    pub a: f64,
}

impl ColorRgba {
    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b, a: BUBBLE_ALPHA }
    }

    pub fn is_valid(&self) -> bool {
        (0.0..=1.0).contains(&self.a)
    }
}

/// Calm blue for expository captions.
pub const BLUE: ColorRgba = ColorRgba::rgb(30, 110, 220);
/// Warm orange for humorous/praise captions.
pub const ORANGE: ColorRgba = ColorRgba::rgb(240, 150, 40);
/// Dark red for roasting and negativity.
pub const DARK_RED: ColorRgba = ColorRgba::rgb(150, 25, 25);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BubbleShape {
    Rounded,
    Rectangular,
    Lightning,
}

impl BubbleShape {
    pub fn name(self) -> &'static str {
        match self {
            BubbleShape::Rounded => "rounded",
            BubbleShape::Rectangular => "rectangular",
            BubbleShape::Lightning => "lightning",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisplayPosition {
    Top,
    Middle,
    #[default]
    Bottom,
}

/// Color and shape for a caption. Color follows the style; negative content
/// always gets the lightning outline, and with `negative_override` the dark
/// red fill as well.
pub fn style_for(
    style: ResponseStyle,
    polarity: PolarityClass,
    negative_override: bool,
) -> (ColorRgba, BubbleShape) {
    let negative = polarity == PolarityClass::Negative;
    let color = match style {
        _ if negative && negative_override => DARK_RED,
        ResponseStyle::Tsukkomi => DARK_RED,
        ResponseStyle::Expository => BLUE,
        ResponseStyle::HumorousPraise => ORANGE,
    };
    let shape = match style {
        _ if negative => BubbleShape::Lightning,
        ResponseStyle::HumorousPraise => BubbleShape::Rounded,
        ResponseStyle::Expository | ResponseStyle::Tsukkomi => BubbleShape::Rectangular,
    };
    (color, shape)
}

/// `clamp(round(base - slope * log2(1 + count)), min, max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FontCurve {
    pub base_px: f64,
    pub slope_px: f64,
    pub min_px: u32,
    pub max_px: u32,
}

impl Default for FontCurve {
    fn default() -> Self {
        Self {
            base_px: 36.0,
            slope_px: 4.0,
            min_px: 14,
            max_px: 36,
        }
    }
}

pub const FONT_FLOOR_PX: u32 = 14;
pub const FONT_CEILING_PX: u32 = 48;

impl FontCurve {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.base_px.is_finite() && self.slope_px.is_finite() && self.slope_px >= 0.0) {
            return Err("base_px must be finite and slope_px finite and >= 0".into());
        }
        if self.min_px < FONT_FLOOR_PX || self.max_px > FONT_CEILING_PX || self.min_px > self.max_px {
            return Err(format!(
                "font bounds must satisfy {FONT_FLOOR_PX} <= min_px <= max_px <= {FONT_CEILING_PX}"
            ));
        }
        Ok(())
    }
}

/// Font size shrinking with the window's message count.
pub fn font_size(message_count: usize, curve: &FontCurve) -> u32 {
    let raw = (curve.base_px - curve.slope_px * (1.0 + message_count as f64).log2()).round();
    let lo = curve.min_px as f64;
    let hi = curve.max_px as f64;
    raw.clamp(lo, hi) as u32
}

/// Everything the client needs to draw a caption bubble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderSpec {
    pub fill: ColorRgba,
    pub shape: BubbleShape,
    pub font_size_px: u32,
    pub position: DisplayPosition,
    pub display_start_ms: u64,
    pub display_end_ms: u64,
    pub obscure_danmaku: bool,
    pub geometry_svg_path: String,
}

/// A generated caption ready for display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpactCaption {
    pub window_index: u64,
    pub text: String,
    pub style: ResponseStyle,
    pub pov: Pov,
    pub source: CaptionSource,
    pub render: RenderSpec,
}

impl ImpactCaption {
    pub fn new(window_index: u64, caption: CaptionText, render: RenderSpec) -> Self {
        Self {
            window_index,
            text: caption.text,
            style: caption.style,
            pov: caption.pov,
            source: caption.source,
            render,
        }
    }

    pub fn caption(&self) -> CaptionText {
        CaptionText {
            text: self.text.clone(),
            style: self.style,
            pov: self.pov,
            source: self.source,
        }
    }
}

/// Assembles the render spec for a caption of a closed window. The caption is
/// shown for one window length starting at the window's end.
pub fn compose_render_spec(
    caption: &CaptionText,
    summary: &WindowSummary,
    settings: &AdminSettings,
) -> RenderSpec {
    let (fill, shape) = style_for(caption.style, summary.polarity, settings.negative_override);
    let font = font_size(summary.message_count, &settings.font_curve);
    let duration_ms = (summary.end_ms - summary.start_ms).max(1);
    let text_len = caption.text.chars().count().max(1);
    RenderSpec {
        fill,
        shape,
        font_size_px: font,
        position: settings.display_position,
        display_start_ms: summary.end_ms,
        display_end_ms: summary.end_ms + duration_ms,
        obscure_danmaku: settings.obscure_danmaku,
        geometry_svg_path: bubble_geometry(shape, text_len, font).to_svg(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emotion::{EmotionLabel, EmotionVector};
    use crate::topics::Theme;

    #[test]
    fn style_colors() {
        let (c, s) = style_for(ResponseStyle::Expository, PolarityClass::Neutral, false);
        assert_eq!((c.r, c.g, c.b, c.a), (30, 110, 220, 0.75));
        assert_eq!(s, BubbleShape::Rectangular);
        let (c, s) = style_for(ResponseStyle::HumorousPraise, PolarityClass::Positive, false);
        assert_eq!(c, ORANGE);
        assert_eq!(s, BubbleShape::Rounded);
        let (c, s) = style_for(ResponseStyle::Tsukkomi, PolarityClass::Negative, false);
        assert_eq!(c, DARK_RED);
        assert_eq!(s, BubbleShape::Lightning);
    }

    #[test]
    fn negative_override_tints_any_style() {
        for style in ResponseStyle::ALL {
            let (c, s) = style_for(style, PolarityClass::Negative, true);
            assert_eq!((c, s), (DARK_RED, BubbleShape::Lightning));
        }
        let (c, _) = style_for(ResponseStyle::HumorousPraise, PolarityClass::Negative, false);
        assert_eq!(c, ORANGE);
    }

    #[test]
    fn font_size_examples() {
        let curve = FontCurve::default();
        assert_eq!(font_size(0, &curve), 36);
        assert_eq!(font_size(1, &curve), 32);
        // 36 - 4 * log2(64) = 12, clamped
        assert_eq!(font_size(63, &curve), 14);
    }

    #[test]
    fn font_size_is_monotone_and_bounded() {
        let curve = FontCurve::default();
        let mut prev = u32::MAX;
        for n in 0..5000 {
            let f = font_size(n, &curve);
            assert!((14..=36).contains(&f));
            assert!(f <= prev);
            prev = f;
        }
    }

    #[test]
    fn font_curve_validation() {
        assert!(FontCurve::default().validate().is_ok());
        assert!(FontCurve { min_px: 10, ..Default::default() }.validate().is_err());
        assert!(FontCurve { slope_px: -1.0, ..Default::default() }.validate().is_err());
        assert!(FontCurve { max_px: 60, ..Default::default() }.validate().is_err());
    }

    fn summary(count: usize, polarity: PolarityClass) -> WindowSummary {
        WindowSummary {
            window_index: 0,
            start_ms: 0,
            end_ms: 8000,
            message_count: count,
            summed_emotions: EmotionVector::one_hot(EmotionLabel::Joy),
            dominant_label: EmotionLabel::Joy,
            polarity,
            weighted_frequency: count as f64,
            theme: Theme::default(),
        }
    }

    #[test]
    fn compose_positive_praise_window() {
        let caption = CaptionText {
            text: "神仙UP主".into(),
            style: ResponseStyle::HumorousPraise,
            pov: Pov::Third,
            source: CaptionSource::Template,
        };
        let spec = compose_render_spec(&caption, &summary(1, PolarityClass::Positive), &AdminSettings::default());
        assert_eq!(spec.fill, ORANGE);
        assert_eq!(spec.shape, BubbleShape::Rounded);
        assert_eq!(spec.font_size_px, 32);
        assert_eq!((spec.display_start_ms, spec.display_end_ms), (8000, 16000));
        assert_eq!(spec.geometry_svg_path, bubble_geometry(BubbleShape::Rounded, 5, 32).to_svg());
    }

    #[test]
    fn compose_passes_through_display_settings() {
        let caption = fallback();
        let settings = AdminSettings {
            display_position: DisplayPosition::Top,
            obscure_danmaku: true,
            ..Default::default()
        };
        let spec = compose_render_spec(&caption, &summary(3, PolarityClass::Neutral), &settings);
        assert_eq!(spec.position, DisplayPosition::Top);
        assert!(spec.obscure_danmaku);
        assert!(spec.display_end_ms > spec.display_start_ms);
    }

    fn fallback() -> CaptionText {
        CaptionText {
            text: "前方高能！".into(),
            style: ResponseStyle::Expository,
            pov: Pov::First,
            source: CaptionSource::Template,
        }
    }
}
