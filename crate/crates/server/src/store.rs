//! Per-video on-disk state: `video.json`, an append-only `events.jsonl`,
//! and optional model, preloaded log and precomputed plan files.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use danmaku_mod_core::ingest::{decode_event, StreamEvent};
use danmaku_mod_core::AdminSettings;

pub const EVENTS_FILE: &str = "events.jsonl";
pub const VIDEO_FILE: &str = "video.json";
pub const MODEL_FILE: &str = "model.json";
pub const PRELOADED_FILE: &str = "preloaded.xml";
pub const PLAN_FILE: &str = "plan.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: String,
    pub title: String,
    pub duration_ms: u64,
    #[serde(default)]
    pub video_url: Option<String>,
    pub settings: AdminSettings,
    /// File name of the fitted model inside the video directory.
    pub model_ref: Option<String>,
    pub preloaded_log_ref: Option<String>,
}

/// One persisted line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLine {
    pub wall_time_ms: i64,
    pub event: StreamEvent,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt log {path} at line {line}: {reason}")]
    CorruptLog {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("bad {path}: {reason}")]
    BadFile { path: PathBuf, reason: String },
}

pub fn video_dir(data_dir: &Path, video_id: &str) -> PathBuf {
    data_dir.join("videos").join(video_id)
}

/// Writes `bytes` to `path` via a synced temporary file and rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    if let Some(dir) = path.parent() {
        // Directory fsync is best effort; not every platform allows it.
        if let Ok(d) = File::open(dir) {
            let _ = d.sync_all();
        }
    }
    Ok(())
}

pub fn save_record(dir: &Path, record: &VideoRecord) -> io::Result<()> {
    let json = serde_json::to_vec_pretty(record).expect("records serialize");
    write_atomic(&dir.join(VIDEO_FILE), &json)
}

pub fn load_record(dir: &Path) -> Result<VideoRecord, StoreError> {
    let path = dir.join(VIDEO_FILE);
    let text = fs::read_to_string(&path)?;
    serde_json::from_str(&text).map_err(|e| StoreError::BadFile {
        path,
        reason: e.to_string(),
    })
}

/// Append handle; every append is synced before returning.
pub struct EventLog {
    file: File,
    path: PathBuf,
}

impl EventLog {
    pub fn open(path: &Path) -> io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            file,
            path: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, line: &LogLine) -> io::Result<()> {
        let mut bytes = serde_json::to_vec(line).expect("log lines serialize");
        bytes.push(b'\n');
        self.file.write_all(&bytes)?;
        self.file.sync_data()
    }
}

#[derive(Debug, Default)]
pub struct RecoveredLog {
    pub lines: Vec<LogLine>,
    /// A torn final line was found and truncated away.
    pub discarded_tail: bool,
}

fn parse_line(text: &str) -> Result<LogLine, String> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Raw {
        wall_time_ms: i64,
        event: serde_json::Value,
    }
    let raw: Raw = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let event = decode_event(&raw.event.to_string()).map_err(|e| e.to_string())?;
    Ok(LogLine {
        wall_time_ms: raw.wall_time_ms,
        event,
    })
}

/// Reads a log, discarding (and truncating) a torn final line. Any other
/// bad line, or a seq that is not the previous seq plus one, is corruption.
pub fn recover_log(path: &Path) -> Result<RecoveredLog, StoreError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(RecoveredLog::default()),
        Err(e) => return Err(e.into()),
    };
    let mut reader = BufReader::new(file);
    let mut out = RecoveredLog::default();
    let mut good_len: u64 = 0;
    let mut buf = Vec::new();
    let mut line_no = 0;
    let mut pending_error: Option<(usize, String)> = None;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        if let Some((line, reason)) = pending_error.take() {
            // A bad line followed by more data is not a torn tail.
            return Err(StoreError::CorruptLog {
                path: path.to_path_buf(),
                line,
                reason,
            });
        }
        let complete = buf.last() == Some(&b'\n');
        let parsed = std::str::from_utf8(&buf)
            .map_err(|e| e.to_string())
            .and_then(|s| parse_line(s.trim_end()));
        match parsed {
            Ok(line) if complete => {
                let expected = out.lines.last().map_or(0, |l| l.event.seq() + 1);
                if line.event.seq() != expected {
                    return Err(StoreError::CorruptLog {
                        path: path.to_path_buf(),
                        line: line_no,
                        reason: format!("seq {} where {expected} was expected", line.event.seq()),
                    });
                }
                out.lines.push(line);
                good_len += n as u64;
            }
            Ok(_) => pending_error = Some((line_no, "missing newline".into())),
            Err(reason) => pending_error = Some((line_no, reason)),
        }
    }
    if let Some((line, reason)) = pending_error {
        warn!(path = %path.display(), line, %reason, "discarding torn final log line");
        let f = OpenOptions::new().write(true).open(path)?;
        f.set_len(good_len)?;
        f.sync_all()?;
        out.discarded_tail = true;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hb(seq: u64) -> LogLine {
        LogLine {
            wall_time_ms: 1,
            event: StreamEvent::heartbeat(seq),
        }
    }

    fn write_lines(path: &Path, n: u64) {
        let mut log = EventLog::open(path).unwrap();
        for s in 0..n {
            log.append(&hb(s)).unwrap();
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(EVENTS_FILE);
        write_lines(&path, 10);
        let rec = recover_log(&path).unwrap();
        assert_eq!(rec.lines.len(), 10);
        assert!(!rec.discarded_tail);
        assert!(recover_log(&dir.path().join("missing")).unwrap().lines.is_empty());
    }

    #[test]
    fn torn_tail_is_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(EVENTS_FILE);
        write_lines(&path, 4);
        let before = fs::metadata(&path).unwrap().len();
        OpenOptions::new()
            .append(true)
            .open(&path)
            .unwrap()
            .write_all(br#"{"wall_time_ms":1,"event":{"type":"hear"#)
            .unwrap();
        let rec = recover_log(&path).unwrap();
        assert_eq!(rec.lines.len(), 4);
        assert!(rec.discarded_tail);
        assert_eq!(fs::metadata(&path).unwrap().len(), before);
        // Appending after recovery yields a clean log.
        EventLog::open(&path).unwrap().append(&hb(4)).unwrap();
        assert_eq!(recover_log(&path).unwrap().lines.len(), 5);
    }

    #[test]
    fn middle_corruption_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(EVENTS_FILE);
        write_lines(&path, 10);
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[2] = "{garbage";
        fs::write(&path, lines.join("\n") + "\n").unwrap();
        match recover_log(&path) {
            Err(StoreError::CorruptLog { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected CorruptLog, got {other:?}"),
        }
    }

    #[test]
    fn seq_gap_is_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(EVENTS_FILE);
        let mut log = EventLog::open(&path).unwrap();
        log.append(&hb(0)).unwrap();
        log.append(&hb(2)).unwrap();
        assert!(matches!(recover_log(&path), Err(StoreError::CorruptLog { line: 2, .. })));
    }

    #[test]
    fn record_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let record = VideoRecord {
            video_id: "v".into(),
            title: "t".into(),
            duration_ms: 1000,
            video_url: None,
            settings: AdminSettings::default(),
            model_ref: None,
            preloaded_log_ref: None,
        };
        save_record(dir.path(), &record).unwrap();
        assert_eq!(load_record(dir.path()).unwrap(), record);
    }
}
