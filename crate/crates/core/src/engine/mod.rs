//! Windowing, trigger decisions, style/POV policy and caption planning.

mod live;
mod pipeline;
mod settings;
mod window;

pub use live::{EngineResources, LiveEngine, PushResult};
pub use pipeline::{
    analyze_log, partition_windows, plan_captions, plan_from_jsonl, plan_to_jsonl,
    process_window, CaptionPlanEntry, PipelineContext, WindowOutcome,
};
pub use settings::{
    AdminSettings, EmbeddingMethod, FieldError, PovPolicy, StylePolicy, WindowDuration,
    DEFAULT_THRESHOLD, MAX_DANMAKU_SCALE,
};
pub use window::{
    assign_window, select_pov, select_style, should_trigger, summarize_window, ScoredWindow,
    TriggerDecision, WindowBounds, WindowSummary, EXEMPLAR_COUNT,
};
