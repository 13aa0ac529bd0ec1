use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::IngestError;

/// Upper bound on message length, in code points.
pub const MAX_TEXT_CHARS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisplayMode {
    #[default]
    Scroll,
    Top,
    Bottom,
}

impl DisplayMode {
    /// Bilibili mode code: 4 is bottom, 5 is top, everything else scrolls.
    pub fn from_bilibili(mode: i64) -> Self {
        match mode {
            4 => DisplayMode::Bottom,
            5 => DisplayMode::Top,
            _ => DisplayMode::Scroll,
        }
    }
}

/// One normalized bullet comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DanmakuMessage {
    pub id: u64,
    pub video_id: String,
    pub video_time_ms: u64,
    pub wall_time_ms: i64,
    pub text: String,
    #[serde(default)]
    pub user_hash: String,
    #[serde(default = "default_color")]
    pub display_color: u32,
    #[serde(default)]
    pub display_mode: DisplayMode,
}

fn default_color() -> u32 {
    0xFF_FFFF
}

impl DanmakuMessage {
    /// Checks the invariants `normalize` guarantees; used on data that
    /// arrives already structured (wire events, recovered logs).
    pub fn check(&self) -> Result<(), IngestError> {
        let normalized = normalize_text(&self.text);
        if normalized.is_empty() {
            return Err(IngestError::EmptyText);
        }
        if normalized != self.text || self.display_color > 0xFF_FFFF {
            return Err(IngestError::MalformedAttribute(format!(
                "message {} is not in normalized form",
                self.id
            )));
        }
        Ok(())
    }
}

/// Raw, unvalidated fields accompanying a comment's text.
#[derive(Debug, Clone, Default)]
pub struct RawMeta {
    pub id: u64,
    pub video_id: String,
    pub video_time_ms: i64,
    pub wall_time_ms: i64,
    pub user_hash: String,
    pub display_color: Option<u32>,
    pub display_mode: DisplayMode,
}

fn normalize_text(raw: &str) -> String {
    let nfc: String = raw.nfc().collect();
    let truncated: String = nfc.trim().chars().take(MAX_TEXT_CHARS).collect();
    truncated.trim_end().to_string()
}

/// NFC-normalizes, trims and truncates `raw_text`, validating the metadata.
pub fn normalize(raw_text: &str, meta: RawMeta) -> Result<DanmakuMessage, IngestError> {
    if meta.video_time_ms < 0 {
        return Err(IngestError::BadTimestamp(meta.video_time_ms));
    }
    let text = normalize_text(raw_text);
    if text.is_empty() {
        return Err(IngestError::EmptyText);
    }
    Ok(DanmakuMessage {
        id: meta.id,
        video_id: meta.video_id,
        video_time_ms: meta.video_time_ms as u64,
        wall_time_ms: meta.wall_time_ms,
        text,
        user_hash: meta.user_hash,
        display_color: meta.display_color.unwrap_or(0xFF_FFFF) & 0xFF_FFFF,
        display_mode: meta.display_mode,
    })
}

/// A recorded sequence of messages for one video, ordered by
/// `(video_time_ms, id)`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DanmakuLog {
    pub video_id: String,
    messages: Vec<DanmakuMessage>,
}

impl DanmakuLog {
    pub fn new(
        video_id: impl Into<String>,
        mut messages: Vec<DanmakuMessage>,
    ) -> Result<Self, IngestError> {
        let mut seen = HashSet::with_capacity(messages.len());
        for m in &messages {
            if !seen.insert(m.id) {
                return Err(IngestError::DuplicateId(m.id));
            }
        }
        messages.sort_by_key(|m| (m.video_time_ms, m.id));
        Ok(Self {
            video_id: video_id.into(),
            messages,
        })
    }

    pub fn empty(video_id: impl Into<String>) -> Self {
        Self {
            video_id: video_id.into(),
            messages: Vec::new(),
        }
    }

    pub fn messages(&self) -> &[DanmakuMessage] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// Video time of the last message, or 0 for an empty log.
    pub fn span_ms(&self) -> u64 {
        self.messages.last().map_or(0, |m| m.video_time_ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(t: i64) -> RawMeta {
        RawMeta {
            video_time_ms: t,
            ..Default::default()
        }
    }

    #[test]
    fn trims_surrounding_whitespace() {
        let m = normalize("  前方高能  ", at(1000)).unwrap();
        assert_eq!(m.text, "前方高能");
        assert_eq!(m.video_time_ms, 1000);
        assert_eq!(m.display_color, 0xFF_FFFF);
        assert_eq!(m.display_mode, DisplayMode::Scroll);
    }

    #[test]
    fn empty_text_is_rejected() {
        assert_eq!(normalize("", at(0)), Err(IngestError::EmptyText));
        assert_eq!(normalize(" \t\u{3000} ", at(0)), Err(IngestError::EmptyText));
    }

    #[test]
    fn negative_time_is_rejected() {
        assert_eq!(normalize("hi", at(-1)), Err(IngestError::BadTimestamp(-1)));
    }

    #[test]
    fn long_text_is_truncated_to_cap() {
        let raw: String = "弹".repeat(150);
        let m = normalize(&raw, at(5)).unwrap();
        assert_eq!(m.text.chars().count(), MAX_TEXT_CHARS);
    }

    #[test]
    fn truncation_does_not_leave_trailing_space() {
        let raw = format!("{} tail", "a".repeat(99));
        let m = normalize(&raw, at(0)).unwrap();
        assert_eq!(m.text, "a".repeat(99));
    }

    #[test]
    fn nfc_composes() {
        let m = normalize("e\u{301}", at(0)).unwrap();
        assert_eq!(m.text, "\u{e9}");
    }

    #[test]
    fn log_sorts_by_time_then_id() {
        let mk = |id, t| normalize("x", RawMeta { id, video_time_ms: t, ..Default::default() }).unwrap();
        let log = DanmakuLog::new("v", vec![mk(3, 10), mk(1, 10), mk(2, 5)]).unwrap();
        let ids: Vec<u64> = log.messages().iter().map(|m| m.id).collect();
        assert_eq!(ids, vec![2, 1, 3]);
        assert_eq!(
            DanmakuLog::new("v", vec![mk(1, 0), mk(1, 5)]),
            Err(IngestError::DuplicateId(1))
        );
    }
}
