//! Feeds a recorded log through a fresh live engine at a chosen speed.

use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use danmaku_mod_core::engine::{AdminSettings, CaptionPlanEntry, EngineResources, LiveEngine};
use danmaku_mod_core::ingest::{encode_event, StreamEvent};
use danmaku_mod_core::DanmakuLog;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Speed {
    Instant,
    /// Video milliseconds per wall millisecond.
    Factor(f64),
}

impl FromStr for Speed {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "instant" {
            return Ok(Speed::Instant);
        }
        let f: f64 = s
            .trim_end_matches('x')
            .parse()
            .map_err(|_| format!("speed must be a positive number or \"instant\", got {s:?}"))?;
        if f.is_finite() && f > 0.0 {
            Ok(Speed::Factor(f))
        } else {
            Err(format!("speed must be > 0, got {s}"))
        }
    }
}

impl fmt::Display for Speed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Speed::Instant => f.write_str("instant"),
            Speed::Factor(x) => write!(f, "{x}x"),
        }
    }
}

/// Wall-clock source for paced replay.
pub trait Clock {
    /// Blocks until `offset` has elapsed since the clock started.
    fn sleep_until(&self, offset: Duration);
}

pub struct RealClock {
    start: Instant,
}

impl RealClock {
    pub fn start() -> Self {
        Self { start: Instant::now() }
    }
}

impl Clock for RealClock {
    fn sleep_until(&self, offset: Duration) {
        let target = self.start + offset;
        let now = Instant::now();
        if target > now {
            std::thread::sleep(target - now);
        }
    }
}

/// Records requested offsets without sleeping.
#[derive(Default)]
pub struct VirtualClock {
    offsets: Mutex<Vec<Duration>>,
}

impl VirtualClock {
    pub fn offsets(&self) -> Vec<Duration> {
        self.offsets.lock().expect("clock lock").clone()
    }

    /// The furthest point the replay waited for.
    pub fn elapsed(&self) -> Duration {
        self.offsets().into_iter().max().unwrap_or_default()
    }
}

impl Clock for VirtualClock {
    fn sleep_until(&self, offset: Duration) {
        self.offsets.lock().expect("clock lock").push(offset);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutput {
    pub plan: Vec<CaptionPlanEntry>,
    /// What a subscriber would have seen, starting with the settings event.
    pub transcript: Vec<StreamEvent>,
}

impl ReplayOutput {
    pub fn transcript_jsonl(&self) -> String {
        self.transcript.iter().map(|e| encode_event(e) + "\n").collect()
    }
}

pub fn replay(
    log: &DanmakuLog,
    settings: &AdminSettings,
    resources: EngineResources,
    speed: Speed,
    clock: &dyn Clock,
) -> ReplayOutput {
    let mut engine = LiveEngine::new(resources, settings.clone());
    let mut transcript = vec![StreamEvent::Settings {
        seq: 0,
        payload: settings.clone(),
    }];
    let mut plan = Vec::new();
    let mut emit = |entry: CaptionPlanEntry, transcript: &mut Vec<StreamEvent>| {
        transcript.push(StreamEvent::Caption {
            seq: transcript.len() as u64,
            payload: entry.caption.clone(),
        });
        plan.push(entry);
    };
    for message in log.messages() {
        if let Speed::Factor(f) = speed {
            clock.sleep_until(Duration::from_secs_f64(message.video_time_ms as f64 / 1000.0 / f));
        }
        transcript.push(StreamEvent::Danmaku {
            seq: transcript.len() as u64,
            payload: message.clone(),
        });
        for outcome in engine.push(message.clone()).closed {
            if let Some(entry) = outcome.entry {
                emit(entry, &mut transcript);
            }
        }
    }
    if let Some(entry) = engine.flush().and_then(|o| o.entry) {
        emit(entry, &mut transcript);
    }
    ReplayOutput { plan, transcript }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speed_parsing() {
        assert_eq!("instant".parse::<Speed>().unwrap(), Speed::Instant);
        assert_eq!("8".parse::<Speed>().unwrap(), Speed::Factor(8.0));
        assert_eq!("8x".parse::<Speed>().unwrap(), Speed::Factor(8.0));
        assert!("0".parse::<Speed>().is_err());
        assert!("-1".parse::<Speed>().is_err());
        assert!("fast".parse::<Speed>().is_err());
    }
}
