//! Bilibili community Danmaku XML: `<i>` root containing
//! `<d p="time,mode,size,color,timestamp,pool,user_hash,row_id">text</d>`.

use super::message::{normalize, DanmakuLog, DisplayMode, RawMeta};
use super::IngestError;

/// Outcome of parsing a recorded log: the log itself plus how many `<d>`
/// elements were skipped as malformed.
#[derive(Debug, Clone, PartialEq)]
pub struct XmlParseReport {
    pub log: DanmakuLog,
    pub skipped: usize,
}

struct Attr {
    seconds: f64,
    mode: i64,
    color: u32,
    unix_seconds: i64,
    user_hash: String,
    row_id: u64,
}

fn parse_p(p: &str) -> Result<Attr, IngestError> {
    let fields: Vec<&str> = p.split(',').collect();
    if fields.len() != 8 {
        return Err(IngestError::MalformedAttribute(format!(
            "expected 8 fields, got {}",
            fields.len()
        )));
    }
    let bad = |name: &str, v: &str| IngestError::MalformedAttribute(format!("{name}: {v:?}"));
    let seconds: f64 = fields[0].trim().parse().map_err(|_| bad("time", fields[0]))?;
    if !seconds.is_finite() {
        return Err(bad("time", fields[0]));
    }
    let mode: i64 = fields[1].trim().parse().map_err(|_| bad("mode", fields[1]))?;
    let _size: i64 = fields[2].trim().parse().map_err(|_| bad("size", fields[2]))?;
    let color: u32 = fields[3].trim().parse().map_err(|_| bad("color", fields[3]))?;
    let unix_seconds: i64 = fields[4].trim().parse().map_err(|_| bad("timestamp", fields[4]))?;
    let _pool: i64 = fields[5].trim().parse().map_err(|_| bad("pool", fields[5]))?;
    let row_id: u64 = fields[7].trim().parse().map_err(|_| bad("row id", fields[7]))?;
    if color > 0xFF_FFFF {
        return Err(bad("color", fields[3]));
    }
    Ok(Attr {
        seconds,
        mode,
        color,
        unix_seconds,
        user_hash: fields[6].trim().to_string(),
        row_id,
    })
}

/// Parses a Bilibili-style XML log. Malformed `<d>` elements are skipped and
/// counted; the call only fails if the document is not XML or nothing parses.
pub fn parse_bilibili_xml(bytes: &[u8]) -> Result<XmlParseReport, IngestError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| IngestError::MalformedXml(format!("not utf-8: {e}")))?;
    let doc = roxmltree::Document::parse(text).map_err(|e| IngestError::MalformedXml(e.to_string()))?;

    let video_id = doc
        .descendants()
        .find(|n| n.has_tag_name("chatid"))
        .and_then(|n| n.text())
        .map(|s| s.trim().to_string())
        .unwrap_or_default();

    let mut messages = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut skipped = 0usize;
    for node in doc.descendants().filter(|n| n.has_tag_name("d")) {
        let parsed = node
            .attribute("p")
            .ok_or_else(|| IngestError::MalformedAttribute("missing p".into()))
            .and_then(parse_p)
            .and_then(|attr| {
                let raw: String = node.children().filter_map(|c| c.text()).collect();
                normalize(
                    &raw,
                    RawMeta {
                        id: attr.row_id,
                        video_id: video_id.clone(),
                        video_time_ms: (attr.seconds * 1000.0).round() as i64,
                        wall_time_ms: attr.unix_seconds.saturating_mul(1000),
                        user_hash: attr.user_hash,
                        display_color: Some(attr.color),
                        display_mode: DisplayMode::from_bilibili(attr.mode),
                    },
                )
            });
        match parsed {
            Ok(m) if seen.insert(m.id) => messages.push(m),
            _ => skipped += 1,
        }
    }

    if messages.is_empty() {
        return Err(IngestError::MalformedXml(format!(
            "no parseable <d> elements ({skipped} skipped)"
        )));
    }
    let log = DanmakuLog::new(video_id, messages)?;
    Ok(XmlParseReport { log, skipped })
}
