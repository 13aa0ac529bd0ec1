//! Newline-delimited JSON stream events: `{type, seq, payload}`.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::message::DanmakuMessage;
use crate::engine::AdminSettings;
use crate::style::ImpactCaption;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StreamEvent {
    Danmaku { seq: u64, payload: DanmakuMessage },
    Caption { seq: u64, payload: ImpactCaption },
    Settings { seq: u64, payload: AdminSettings },
    Heartbeat { seq: u64, payload: Empty },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Empty {}

impl StreamEvent {
    pub fn seq(&self) -> u64 {
        match self {
            StreamEvent::Danmaku { seq, .. }
            | StreamEvent::Caption { seq, .. }
            | StreamEvent::Settings { seq, .. }
            | StreamEvent::Heartbeat { seq, .. } => *seq,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            StreamEvent::Danmaku { .. } => "danmaku",
            StreamEvent::Caption { .. } => "caption",
            StreamEvent::Settings { .. } => "settings",
            StreamEvent::Heartbeat { .. } => "heartbeat",
        }
    }

    pub fn heartbeat(seq: u64) -> Self {
        StreamEvent::Heartbeat { seq, payload: Empty {} }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WireError {
    #[error("unknown event type {0:?}")]
    UnknownEventType(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
}

const KINDS: [&str; 4] = ["danmaku", "caption", "settings", "heartbeat"];

/// Single-line JSON encoding.
pub fn encode_event(event: &StreamEvent) -> String {
    serde_json::to_string(event).expect("stream events serialize")
}

/// Strict decoding: unknown types, missing or extra keys, and payloads that
/// fail domain validation are all rejected.
pub fn decode_event(line: &str) -> Result<StreamEvent, WireError> {
    let value: Value =
        serde_json::from_str(line.trim_end()).map_err(|e| WireError::SchemaViolation(e.to_string()))?;
    let kind = value
        .get("type")
        .ok_or_else(|| WireError::SchemaViolation("missing type".into()))?
        .as_str()
        .ok_or_else(|| WireError::SchemaViolation("type is not a string".into()))?;
    if !KINDS.contains(&kind) {
        return Err(WireError::UnknownEventType(kind.to_string()));
    }
    let event: StreamEvent =
        serde_json::from_value(value.clone()).map_err(|e| WireError::SchemaViolation(e.to_string()))?;
    // Serde ignores unknown keys in some nested positions (flattened or
    // defaulted fields); the round trip catches them.
    let back = serde_json::to_value(&event).expect("stream events serialize");
    if !same_keys(&value, &back) {
        return Err(WireError::SchemaViolation("unexpected fields".into()));
    }
    match &event {
        StreamEvent::Danmaku { payload, .. } => payload
            .check()
            .map_err(|e| WireError::SchemaViolation(e.to_string()))?,
        StreamEvent::Settings { payload, .. } => payload.validate().map_err(|errs| {
            WireError::SchemaViolation(
                errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "),
            )
        })?,
        StreamEvent::Caption { payload, .. } => {
            if !payload.render.fill.is_valid() {
                return Err(WireError::SchemaViolation("fill out of range".into()));
            }
        }
        StreamEvent::Heartbeat { .. } => {}
    }
    Ok(event)
}

/// Object key sets agree recursively; defaulted fields may be absent from
/// the input.
fn same_keys(input: &Value, canonical: &Value) -> bool {
    match (input, canonical) {
        (Value::Object(a), Value::Object(b)) => a
            .iter()
            .all(|(k, v)| b.get(k).is_some_and(|w| same_keys(v, w))),
        (Value::Array(a), Value::Array(b)) => {
            a.len() == b.len() && a.iter().zip(b).all(|(v, w)| same_keys(v, w))
        }
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::DisplayMode;

    fn danmaku() -> StreamEvent {
        StreamEvent::Danmaku {
            seq: 3,
            payload: DanmakuMessage {
                id: 7,
                video_id: "v1".into(),
                video_time_ms: 1500,
                wall_time_ms: 1_700_000_000_000,
                text: "前方高能".into(),
                user_hash: "ab12".into(),
                display_color: 0xFFFFFF,
                display_mode: DisplayMode::Top,
            },
        }
    }

    #[test]
    fn danmaku_key_names() {
        let line = encode_event(&danmaku());
        assert_eq!(
            line,
            r#"{"type":"danmaku","seq":3,"payload":{"id":7,"video_id":"v1","video_time_ms":1500,"wall_time_ms":1700000000000,"text":"前方高能","user_hash":"ab12","display_color":16777215,"display_mode":"top"}}"#
        );
        assert_eq!(decode_event(&line).unwrap(), danmaku());
    }

    #[test]
    fn heartbeat_and_settings_round_trip() {
        let hb = StreamEvent::heartbeat(9);
        assert_eq!(encode_event(&hb), r#"{"type":"heartbeat","seq":9,"payload":{}}"#);
        assert_eq!(decode_event(&encode_event(&hb)).unwrap(), hb);
        let s = StreamEvent::Settings { seq: 1, payload: AdminSettings::default() };
        assert_eq!(decode_event(&encode_event(&s)).unwrap(), s);
    }

    #[test]
    fn rejects_unknown_type_and_extra_fields() {
        assert_eq!(
            decode_event(r#"{"type":"vote","seq":1,"payload":{}}"#),
            Err(WireError::UnknownEventType("vote".into()))
        );
        assert!(matches!(
            decode_event(r#"{"type":"heartbeat","seq":1,"payload":{},"x":1}"#),
            Err(WireError::SchemaViolation(_))
        ));
        let mut v: Value = serde_json::from_str(&encode_event(&danmaku())).unwrap();
        v["payload"]["likes"] = 3.into();
        assert!(matches!(decode_event(&v.to_string()), Err(WireError::SchemaViolation(_))));
        let mut s: Value =
            serde_json::to_value(StreamEvent::Settings { seq: 1, payload: AdminSettings::default() }).unwrap();
        s["payload"]["comment_threshold"] = (-1.0).into();
        assert!(matches!(decode_event(&s.to_string()), Err(WireError::SchemaViolation(_))));
    }

    #[test]
    fn rejects_payload_type_mismatch() {
        assert!(decode_event(r#"{"type":"danmaku","seq":1,"payload":{}}"#).is_err());
        assert!(decode_event(r#"{"type":"caption","seq":1,"payload":{"text":"x"}}"#).is_err());
    }
}
