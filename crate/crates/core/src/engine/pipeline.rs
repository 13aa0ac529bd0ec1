use serde::{Deserialize, Serialize};

use super::settings::AdminSettings;
use super::window::{
    assign_window, select_pov, select_style, should_trigger, summarize_window, TriggerDecision,
    WindowBounds, WindowSummary,
};
use crate::emotion::EmotionClassifier;
use crate::generate::{CaptionGenerator, CaptionRequest};
use crate::ingest::{DanmakuLog, DanmakuMessage};
use crate::rng::derive_seed;
use crate::style::{compose_render_spec, ImpactCaption};
use crate::topics::LdaModel;

const THEME_STREAM: u64 = 1;
const CAPTION_STREAM: u64 = 2;

/// One line of a caption plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionPlanEntry {
    pub window_index: u64,
    pub caption: ImpactCaption,
    pub triggered_by: WindowSummary,
}

/// Shared read-only inputs of the per-window pipeline.
#[derive(Clone, Copy)]
pub struct PipelineContext<'a> {
    pub classifier: &'a dyn EmotionClassifier,
    pub model: Option<&'a LdaModel>,
    pub generator: &'a CaptionGenerator,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowOutcome {
    pub summary: WindowSummary,
    pub decision: TriggerDecision,
    pub entry: Option<CaptionPlanEntry>,
}

/// summarize -> trigger -> style/POV -> caption -> render spec.
pub fn process_window(
    ctx: &PipelineContext<'_>,
    settings: &AdminSettings,
    bounds: WindowBounds,
    messages: &[DanmakuMessage],
) -> WindowOutcome {
    let theme_seed = derive_seed(derive_seed(ctx.seed, THEME_STREAM), bounds.index);
    let scored = summarize_window(bounds, messages, ctx.classifier, ctx.model, theme_seed);
    let summary = scored.summary;
    let decision = should_trigger(&summary, settings);
    if !decision.fire {
        return WindowOutcome {
            summary,
            decision,
            entry: None,
        };
    }
    let style = select_style(summary.polarity, summary.dominant_label, settings.style_policy);
    let pov = select_pov(settings.pov_policy, bounds.index, ctx.seed);
    let request = CaptionRequest {
        style,
        pov,
        theme: summary.theme.top_words.clone(),
        dominant: summary.dominant_label,
        exemplars: scored.exemplars,
        seed: derive_seed(derive_seed(ctx.seed, CAPTION_STREAM), bounds.index),
    };
    let caption = ctx.generator.generate(&request, settings.caption_backend);
    let render = compose_render_spec(&caption, &summary, settings);
    let entry = CaptionPlanEntry {
        window_index: bounds.index,
        caption: ImpactCaption::new(bounds.index, caption, render),
        triggered_by: summary.clone(),
    };
    WindowOutcome {
        summary,
        decision,
        entry: Some(entry),
    }
}

/// Groups a sorted log into its non-empty zero-aligned windows.
pub fn partition_windows<'m>(
    messages: &'m [DanmakuMessage],
    settings: &AdminSettings,
) -> Vec<(WindowBounds, &'m [DanmakuMessage])> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < messages.len() {
        let index = assign_window(messages[start].video_time_ms, settings.window_duration_s);
        let mut end = start + 1;
        while end < messages.len()
            && assign_window(messages[end].video_time_ms, settings.window_duration_s) == index
        {
            end += 1;
        }
        out.push((
            WindowBounds::aligned(index, settings.window_duration_s),
            &messages[start..end],
        ));
        start = end;
    }
    out
}

/// Summaries of every non-empty window, in order.
pub fn analyze_log(ctx: &PipelineContext<'_>, log: &DanmakuLog, settings: &AdminSettings) -> Vec<WindowOutcome> {
    partition_windows(log.messages(), settings)
        .into_iter()
        .map(|(bounds, msgs)| process_window(ctx, settings, bounds, msgs))
        .collect()
}

/// Batch caption plan for a whole log.
pub fn plan_captions(
    log: &DanmakuLog,
    settings: &AdminSettings,
    model: Option<&LdaModel>,
    classifier: &dyn EmotionClassifier,
    generator: &CaptionGenerator,
    seed: u64,
) -> Vec<CaptionPlanEntry> {
    let ctx = PipelineContext {
        classifier,
        model,
        generator,
        seed,
    };
    analyze_log(&ctx, log, settings)
        .into_iter()
        .filter_map(|o| o.entry)
        .collect()
}

/// One JSON object per line, fields in declaration order.
pub fn plan_to_jsonl(plan: &[CaptionPlanEntry]) -> String {
    let mut out = String::new();
    for entry in plan {
        out.push_str(&serde_json::to_string(entry).expect("plan entries serialize"));
        out.push('\n');
    }
    out
}

pub fn plan_from_jsonl(text: &str) -> Result<Vec<CaptionPlanEntry>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
