//! Core pipeline for turning windows of Danmaku (bullet comments) into
//! styled moderation captions.
//!
//! The pipeline is split into:
//!
//! * [`ingest`]: message normalization, tokenization, Bilibili XML logs and
//!   the newline-JSON wire protocol.
//! * [`emotion`]: 28-label emotion scoring and window aggregation.
//! * [`topics`]: LDA (collapsed Gibbs) for per-window themes.
//! * [`engine`]: tumbling windows, trigger rule, style/POV policy, planning.
//! * [`generate`]: prompt templates, chat endpoint contract, template fallback
//!   and caption validation.
//! * [`style`]: colors, bubble shapes, font sizing and bubble geometry.

pub mod emotion;
pub mod engine;
pub mod generate;
pub mod ingest;
pub mod rng;
pub mod style;
pub mod topics;

pub use emotion::{EmotionLabel, EmotionVector, PolarityClass};
pub use engine::{AdminSettings, CaptionPlanEntry, WindowSummary};
pub use generate::{CaptionText, Pov, ResponseStyle};
pub use ingest::{DanmakuLog, DanmakuMessage};
pub use style::{ImpactCaption, RenderSpec};
