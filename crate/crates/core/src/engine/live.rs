use std::sync::Arc;

use super::pipeline::{process_window, PipelineContext, WindowOutcome};
use super::settings::{AdminSettings, WindowDuration};
use super::window::WindowBounds;
use crate::emotion::EmotionClassifier;
use crate::generate::CaptionGenerator;
use crate::ingest::DanmakuMessage;
use crate::topics::LdaModel;

/// Owned counterpart of [`PipelineContext`].
#[derive(Clone)]
pub struct EngineResources {
    pub classifier: Arc<dyn EmotionClassifier>,
    pub model: Option<Arc<LdaModel>>,
    pub generator: CaptionGenerator,
    pub seed: u64,
}

impl EngineResources {
    pub fn context(&self) -> PipelineContext<'_> {
        PipelineContext {
            classifier: self.classifier.as_ref(),
            model: self.model.as_deref(),
            generator: &self.generator,
            seed: self.seed,
        }
    }
}

/// Window grid: `duration` tumbling windows starting at `origin_ms`,
/// numbered from `base_index`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Grid {
    origin_ms: u64,
    base_index: u64,
    duration: WindowDuration,
}

impl Grid {
    fn aligned(duration: WindowDuration) -> Self {
        Self {
            origin_ms: 0,
            base_index: 0,
            duration,
        }
    }

    fn index(&self, t: u64) -> Option<u64> {
        (t >= self.origin_ms).then(|| self.base_index + (t - self.origin_ms) / self.duration.millis())
    }

    fn bounds(&self, index: u64) -> WindowBounds {
        let d = self.duration.millis();
        let start_ms = self.origin_ms + (index - self.base_index) * d;
        WindowBounds {
            index,
            start_ms,
            end_ms: start_ms + d,
        }
    }
}

#[derive(Debug, Default)]
pub struct PushResult {
    /// The message falls in an already-closed window and was not aggregated.
    pub late: bool,
    /// Windows closed by this message, in order.
    pub closed: Vec<WindowOutcome>,
}

/// Incremental windower for one video. Single writer: callers serialize
/// pushes and settings updates.
pub struct LiveEngine {
    resources: EngineResources,
    settings: AdminSettings,
    pending: Option<AdminSettings>,
    grid: Grid,
    open: Option<(WindowBounds, Vec<DanmakuMessage>)>,
    closed_through: Option<u64>,
}

impl LiveEngine {
    pub fn new(resources: EngineResources, settings: AdminSettings) -> Self {
        Self {
            grid: Grid::aligned(settings.window_duration_s),
            resources,
            settings,
            pending: None,
            open: None,
            closed_through: None,
        }
    }

    /// Settings that the next closing window will use.
    pub fn effective_settings(&self) -> &AdminSettings {
        self.pending.as_ref().unwrap_or(&self.settings)
    }

    pub fn resources(&self) -> &EngineResources {
        &self.resources
    }

    pub fn resources_mut(&mut self) -> &mut EngineResources {
        &mut self.resources
    }

    pub fn open_window(&self) -> Option<WindowBounds> {
        self.open.as_ref().map(|(b, _)| *b)
    }

    pub fn closed_through(&self) -> Option<u64> {
        self.closed_through
    }

    /// Queues new settings. They take effect when the open window closes,
    /// or immediately when no window is open. A duration change re-anchors
    /// the grid at the last closed boundary.
    pub fn update_settings(&mut self, settings: AdminSettings) {
        if self.open.is_some() {
            self.pending = Some(settings);
        } else {
            self.apply(settings);
        }
    }

    fn apply(&mut self, settings: AdminSettings) {
        if settings.window_duration_s != self.settings.window_duration_s {
            self.grid = match self.closed_through {
                Some(last) => Grid {
                    origin_ms: self.grid.bounds(last).end_ms,
                    base_index: last + 1,
                    duration: settings.window_duration_s,
                },
                None => Grid::aligned(settings.window_duration_s),
            };
        }
        self.settings = settings;
    }

    fn close_open(&mut self) -> Option<WindowOutcome> {
        let (bounds, mut msgs) = self.open.take()?;
        msgs.sort_by_key(|m| (m.video_time_ms, m.id));
        let outcome = process_window(&self.resources.context(), &self.settings, bounds, &msgs);
        self.closed_through = Some(bounds.index);
        if let Some(next) = self.pending.take() {
            self.apply(next);
        }
        Some(outcome)
    }

    pub fn push(&mut self, message: DanmakuMessage) -> PushResult {
        let mut result = PushResult::default();
        let t = message.video_time_ms;
        if let Some((bounds, _)) = &self.open {
            if t >= bounds.end_ms {
                result.closed.extend(self.close_open());
            }
        }
        // Anything before the open window counts as late, including windows
        // that were skipped over without ever opening.
        let floor = match &self.open {
            Some((bounds, _)) => Some(bounds.index),
            None => self.closed_through.map(|c| c + 1),
        };
        let index = match self.grid.index(t) {
            Some(i) if floor.is_none_or(|f| i >= f) => i,
            _ => {
                result.late = true;
                return result;
            }
        };
        match &mut self.open {
            Some((bounds, msgs)) => {
                debug_assert_eq!(bounds.index, index);
                msgs.push(message);
            }
            None => self.open = Some((self.grid.bounds(index), vec![message])),
        }
        result
    }

    /// Closes the open window if video time has passed its end.
    pub fn advance(&mut self, video_time_ms: u64) -> Option<WindowOutcome> {
        match &self.open {
            Some((bounds, _)) if video_time_ms >= bounds.end_ms => self.close_open(),
            _ => None,
        }
    }

    /// Closes the open window unconditionally (end of stream).
    pub fn flush(&mut self) -> Option<WindowOutcome> {
        self.close_open()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emotion::LexiconClassifier;
    use crate::engine::pipeline::{plan_captions, plan_to_jsonl};
    use crate::ingest::DanmakuLog;

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

    fn resources() -> EngineResources {
        EngineResources {
            classifier: Arc::new(LexiconClassifier::default()),
            model: None,
            generator: CaptionGenerator::default(),
            seed: 5,
        }
    }

    fn texts() -> [&'static str; 4] {
        ["哈哈哈哈", "气死我了", "什么情况", "好可爱啊"]
    }

    #[test]
    fn live_matches_batch() {
        let msgs: Vec<_> = (0..120).map(|i| msg(i, i * 450 + (i % 7) * 13, texts()[(i % 4) as usize])).collect();
        let settings = AdminSettings::default();
        let log = DanmakuLog::new("v", msgs.clone()).unwrap();
        let r = resources();
        let batch = plan_captions(&log, &settings, None, r.classifier.as_ref(), &r.generator, r.seed);

        let mut engine = LiveEngine::new(r, settings);
        let mut live = Vec::new();
        for m in msgs {
            let res = engine.push(m);
            assert!(!res.late);
            live.extend(res.closed.into_iter().filter_map(|o| o.entry));
        }
        live.extend(engine.flush().and_then(|o| o.entry));
        assert!(!batch.is_empty());
        assert_eq!(plan_to_jsonl(&live), plan_to_jsonl(&batch));
    }

    #[test]
    fn late_messages_are_not_aggregated() {
        let mut engine = LiveEngine::new(resources(), AdminSettings::default());
        assert!(!engine.push(msg(1, 1000, "哈哈")).late);
        let r = engine.push(msg(2, 9000, "哈哈"));
        assert_eq!(r.closed.len(), 1);
        assert_eq!(r.closed[0].summary.message_count, 1);
        assert!(engine.push(msg(3, 2000, "哈哈")).late);
        assert_eq!(engine.flush().unwrap().summary.message_count, 1);
    }

    #[test]
    fn message_for_a_skipped_window_is_late() {
        let mut engine = LiveEngine::new(resources(), AdminSettings::default());
        engine.push(msg(1, 30_000, "哈哈"));
        let r = engine.push(msg(2, 9000, "哈哈"));
        assert!(r.late && r.closed.is_empty());
        assert_eq!(engine.open_window().unwrap().index, 3);
        assert_eq!(engine.flush().unwrap().summary.message_count, 1);
    }

    #[test]
    fn settings_apply_from_next_boundary() {
        let mut engine = LiveEngine::new(resources(), AdminSettings { comment_threshold: 0.5, ..Default::default() });
        for i in 0..4 {
            engine.push(msg(i, 1000 + i * 100, "哈哈哈"));
        }
        let twelve = AdminSettings {
            window_duration_s: WindowDuration::Twelve,
            comment_threshold: 0.5,
            ..Default::default()
        };
        engine.update_settings(twelve.clone());
        assert_eq!(engine.effective_settings(), &twelve);
        // Window 0 still closes as an 8 s window.
        let r = engine.push(msg(10, 8500, "哈哈哈"));
        let first = r.closed[0].entry.as_ref().unwrap();
        assert_eq!((first.triggered_by.start_ms, first.triggered_by.end_ms), (0, 8000));
        assert_eq!(first.caption.render.display_end_ms - first.caption.render.display_start_ms, 8000);
        // The grid re-anchors at 8000 with 12 s windows.
        assert_eq!(engine.open_window().unwrap(), WindowBounds { index: 1, start_ms: 8000, end_ms: 20000 });
        let second = engine.flush().unwrap().entry.unwrap();
        assert_eq!(second.caption.render.display_end_ms - second.caption.render.display_start_ms, 12000);
    }

    #[test]
    fn advance_closes_elapsed_window() {
        let mut engine = LiveEngine::new(resources(), AdminSettings::default());
        engine.push(msg(1, 100, "哈哈"));
        assert!(engine.advance(7999).is_none());
        assert!(engine.advance(8000).is_some());
        assert_eq!(engine.closed_through(), Some(0));
        assert!(engine.open_window().is_none());
    }
}
