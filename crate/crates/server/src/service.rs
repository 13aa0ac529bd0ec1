//! Per-video sequencing, persistence, broadcast and engine workers.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::PathBuf;
use std::sync::{mpsc, Arc, Mutex, MutexGuard, RwLock, Weak};
use std::thread;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::broadcast;
use tracing::{error, info, warn};

use danmaku_mod_core::emotion::EmotionClassifier;
use danmaku_mod_core::engine::{
    plan_captions, plan_from_jsonl, plan_to_jsonl, AdminSettings, EngineResources, FieldError,
    LiveEngine, WindowOutcome,
};
use danmaku_mod_core::generate::{CaptionGenerator, MetricsSnapshot};
use danmaku_mod_core::ingest::{
    normalize, parse_bilibili_xml, DanmakuLog, DisplayMode, IngestError, RawMeta, StreamEvent,
};
use danmaku_mod_core::style::{image_prompt, ImageCache};
use danmaku_mod_core::topics::LdaModel;
use danmaku_mod_core::{CaptionPlanEntry, DanmakuMessage, ImpactCaption};

use crate::config::Config;
use crate::resources::{self, ResourceError};
use crate::store::{
    self, load_record, recover_log, save_record, video_dir, EventLog, LogLine, StoreError,
    VideoRecord, EVENTS_FILE, MODEL_FILE, PLAN_FILE, PRELOADED_FILE,
};

const BROADCAST_CAPACITY: usize = 4096;
/// Slack after a window's nominal end before the ticker closes it.
const CLOSE_GRACE_MS: u64 = 1000;
const TICK: Duration = Duration::from_millis(250);

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown video {0:?}")]
    UnknownVideo(String),
    #[error("video {0:?} already exists")]
    DuplicateVideoId(String),
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("danmaku text is empty")]
    EmptyText,
    #[error("rate limited")]
    RateLimited,
    #[error("invalid settings")]
    InvalidSettings(Vec<FieldError>),
    #[error("unauthorized")]
    Unauthorized,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("resources: {0}")]
    Resource(#[from] ResourceError),
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Store(StoreError::Io(e))
    }
}

pub fn now_ms() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterVideo {
    pub video_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub duration_ms: u64,
    #[serde(default)]
    pub video_url: Option<String>,
    /// Bilibili-style XML of pre-recorded Danmaku.
    #[serde(default)]
    pub preloaded_xml: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitDanmaku {
    pub video_time_ms: i64,
    pub text: String,
    #[serde(default)]
    pub user_hash: Option<String>,
    #[serde(default)]
    pub display_color: Option<u32>,
    #[serde(default)]
    pub display_mode: Option<DisplayMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitAck {
    pub id: u64,
    pub seq: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VideoInfo {
    #[serde(flatten)]
    pub record: VideoRecord,
    pub next_seq: u64,
    pub live_danmaku_count: u64,
    pub preloaded_danmaku_count: usize,
    pub live_caption_count: usize,
    pub precomputed_caption_count: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Health {
    pub status: &'static str,
    pub videos: usize,
    pub llm_attempts: u64,
    pub llm_errors: u64,
    pub validation_failures: u64,
    pub fallbacks: u64,
}

enum EngineCmd {
    Push(DanmakuMessage),
    Settings(AdminSettings),
    Advance(u64),
    SetModel(Option<Arc<LdaModel>>),
    SetGenerator(CaptionGenerator),
    Barrier(mpsc::Sender<()>),
}

struct VideoState {
    record: VideoRecord,
    log: EventLog,
    events: Vec<StreamEvent>,
    next_msg_id: u64,
    live_captions: BTreeMap<u64, ImpactCaption>,
    precomputed: Vec<ImpactCaption>,
    preloaded: Vec<DanmakuMessage>,
    live_count: u64,
    /// Arrival instant and video time of the latest submission.
    last_arrival: Option<(Instant, u64)>,
}

impl VideoState {
    fn next_seq(&self) -> u64 {
        self.events.len() as u64
    }
}

struct VideoCore {
    dir: PathBuf,
    state: Mutex<VideoState>,
    tx: broadcast::Sender<StreamEvent>,
    image_cache: Option<ImageCache>,
}

impl VideoCore {
    fn lock(&self) -> MutexGuard<'_, VideoState> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Assigns the next seq, persists, then broadcasts. Callers hold the lock.
    fn append(
        &self,
        state: &mut VideoState,
        make: impl FnOnce(u64) -> StreamEvent,
    ) -> std::io::Result<u64> {
        let seq = state.next_seq();
        let event = make(seq);
        state.log.append(&LogLine {
            wall_time_ms: now_ms(),
            event: event.clone(),
        })?;
        state.events.push(event.clone());
        // No receivers is fine.
        let _ = self.tx.send(event);
        Ok(seq)
    }

    fn emit_entry(&self, entry: CaptionPlanEntry) {
        let caption = entry.caption;
        if let Some(cache) = &self.image_cache {
            let summary = &entry.triggered_by;
            let prompt = image_prompt(caption.style, &summary.theme.top_words, summary.dominant_label);
            cache.get_or_schedule(caption.style, caption.render.fill, caption.render.shape, prompt);
        }
        let mut state = self.lock();
        if state.live_captions.contains_key(&caption.window_index) {
            return;
        }
        let result = self.append(&mut state, |seq| StreamEvent::Caption {
            seq,
            payload: caption.clone(),
        });
        match result {
            Ok(_) => {
                state.live_captions.insert(caption.window_index, caption);
            }
            Err(e) => error!(dir = %self.dir.display(), error = %e, "failed to persist caption"),
        }
    }

    fn emit_outcome(&self, outcome: WindowOutcome) {
        if let Some(entry) = outcome.entry {
            self.emit_entry(entry);
        }
    }
}

struct Video {
    core: Arc<VideoCore>,
    engine_tx: Mutex<mpsc::Sender<EngineCmd>>,
}

impl Video {
    fn send(&self, cmd: EngineCmd) {
        let tx = self.engine_tx.lock().unwrap_or_else(|p| p.into_inner());
        if tx.send(cmd).is_err() {
            error!("engine worker is gone");
        }
    }
}

fn run_worker(core: Arc<VideoCore>, mut engine: LiveEngine, rx: mpsc::Receiver<EngineCmd>) {
    for cmd in rx {
        match cmd {
            EngineCmd::Push(m) => {
                for outcome in engine.push(m).closed {
                    core.emit_outcome(outcome);
                }
            }
            EngineCmd::Settings(s) => engine.update_settings(s),
            EngineCmd::Advance(t) => {
                if let Some(outcome) = engine.advance(t) {
                    core.emit_outcome(outcome);
                }
            }
            EngineCmd::SetModel(model) => engine.resources_mut().model = model,
            EngineCmd::SetGenerator(g) => engine.resources_mut().generator = g,
            EngineCmd::Barrier(done) => {
                let _ = done.send(());
            }
        }
    }
}

struct Inner {
    config: Config,
    classifier: Arc<dyn EmotionClassifier>,
    generator: RwLock<CaptionGenerator>,
    image_cache: Option<ImageCache>,
    videos: RwLock<HashMap<String, Arc<Video>>>,
    register_lock: Mutex<()>,
}

/// Cheaply clonable handle to the whole service.
#[derive(Clone)]
pub struct Service {
    inner: Arc<Inner>,
}

fn valid_video_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl Service {
    /// Loads resources and recovers every video under `config.data_dir`.
    pub fn open(config: Config) -> Result<Self, ServiceError> {
        let classifier = resources::load_classifier(&config)?;
        let generator = resources::load_generator(&config)?;
        let image_cache = resources::load_image_cache(&config);
        fs::create_dir_all(config.data_dir.join("videos"))?;
        let service = Service {
            inner: Arc::new(Inner {
                config,
                classifier,
                generator: RwLock::new(generator),
                image_cache,
                videos: RwLock::new(HashMap::new()),
                register_lock: Mutex::new(()),
            }),
        };
        service.recover_all()?;
        service.start_ticker();
        Ok(service)
    }

    pub fn config(&self) -> &Config {
        &self.inner.config
    }

    fn generator(&self) -> CaptionGenerator {
        self.inner.generator.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    fn video(&self, id: &str) -> Result<Arc<Video>, ServiceError> {
        self.inner
            .videos
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownVideo(id.to_string()))
    }

    pub fn check_token(&self, bearer: Option<&str>) -> Result<(), ServiceError> {
        match bearer {
            Some(t) if t == self.inner.config.moderator_token => Ok(()),
            _ => Err(ServiceError::Unauthorized),
        }
    }

    fn engine_resources(&self, model: Option<Arc<LdaModel>>, generator: CaptionGenerator) -> EngineResources {
        EngineResources {
            classifier: Arc::clone(&self.inner.classifier),
            model,
            generator,
            seed: self.inner.config.seed,
        }
    }

    fn recover_all(&self) -> Result<(), ServiceError> {
        let root = self.inner.config.data_dir.join("videos");
        let mut dirs: Vec<PathBuf> = fs::read_dir(&root)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.join(store::VIDEO_FILE).exists())
            .collect();
        dirs.sort();
        for dir in dirs {
            let video = self.recover_video(dir)?;
            let id = video.core.lock().record.video_id.clone();
            self.inner
                .videos
                .write()
                .unwrap_or_else(|p| p.into_inner())
                .insert(id, video);
        }
        Ok(())
    }

    fn recover_video(&self, dir: PathBuf) -> Result<Arc<Video>, ServiceError> {
        let mut record = load_record(&dir)?;
        let log_path = dir.join(EVENTS_FILE);
        let recovered = recover_log(&log_path)?;
        if recovered.discarded_tail {
            warn!(video = %record.video_id, "discarded torn final event");
        }
        let model = load_model(&dir, &record)?;
        let preloaded = load_preloaded(&dir, &record)?;
        let mut precomputed = load_plan(&dir)?;
        if precomputed.is_none() && !preloaded.is_empty() {
            let plan = self.compute_plan(&record.video_id, &preloaded, &record.settings, model.as_deref());
            store::write_atomic(&dir.join(PLAN_FILE), plan_to_jsonl(&plan).as_bytes())?;
            precomputed = Some(plan.into_iter().map(|e| e.caption).collect());
        }

        let events: Vec<StreamEvent> = recovered.lines.into_iter().map(|l| l.event).collect();
        let logged: BTreeSet<u64> = events
            .iter()
            .filter_map(|e| match e {
                StreamEvent::Caption { payload, .. } => Some(payload.window_index),
                _ => None,
            })
            .collect();
        let initial = events
            .iter()
            .find_map(|e| match e {
                StreamEvent::Settings { payload, .. } => Some(payload.clone()),
                _ => None,
            })
            .unwrap_or_else(|| record.settings.clone());

        // Rebuild engine state with templates only; no endpoint calls during recovery.
        let mut engine = LiveEngine::new(
            self.engine_resources(model.clone(), CaptionGenerator::template_only()),
            initial,
        );
        let mut missing = Vec::new();
        let mut live_captions = BTreeMap::new();
        let mut live_count = 0;
        let mut max_id = preloaded.iter().map(|m| m.id).max();
        let mut first_settings = true;
        for event in &events {
            match event {
                StreamEvent::Danmaku { payload, .. } => {
                    live_count += 1;
                    max_id = max_id.max(Some(payload.id));
                    for outcome in engine.push(payload.clone()).closed {
                        if let Some(entry) = outcome.entry {
                            if !logged.contains(&entry.window_index) {
                                missing.push(entry);
                            }
                        }
                    }
                }
                StreamEvent::Settings { payload, .. } => {
                    if !first_settings {
                        engine.update_settings(payload.clone());
                    }
                    first_settings = false;
                    record.settings = payload.clone();
                }
                StreamEvent::Caption { payload, .. } => {
                    live_captions.insert(payload.window_index, payload.clone());
                }
                StreamEvent::Heartbeat { .. } => {}
            }
        }
        engine.resources_mut().generator = self.generator();
        save_record(&dir, &record)?;

        let (tx, _) = broadcast::channel(BROADCAST_CAPACITY);
        let core = Arc::new(VideoCore {
            state: Mutex::new(VideoState {
                log: EventLog::open(&log_path)?,
                next_msg_id: max_id.map_or(1, |m| m + 1),
                live_captions,
                precomputed: precomputed.unwrap_or_default(),
                preloaded,
                live_count,
                last_arrival: None,
                events,
                record,
            }),
            dir,
            tx,
            image_cache: self.inner.image_cache.clone(),
        });
        for entry in missing {
            info!(window = entry.window_index, "regenerating caption lost in crash");
            core.emit_entry(entry);
        }
        Ok(self.start_video(core, engine))
    }

    fn start_video(&self, core: Arc<VideoCore>, engine: LiveEngine) -> Arc<Video> {
        let (engine_tx, rx) = mpsc::channel();
        let worker_core = Arc::clone(&core);
        thread::Builder::new()
            .name("engine".into())
            .spawn(move || run_worker(worker_core, engine, rx))
            .expect("spawn engine worker");
        Arc::new(Video {
            core,
            engine_tx: Mutex::new(engine_tx),
        })
    }

    fn start_ticker(&self) {
        if !self.inner.config.auto_close_windows {
            return;
        }
        let weak: Weak<Inner> = Arc::downgrade(&self.inner);
        thread::Builder::new()
            .name("window-ticker".into())
            .spawn(move || loop {
                thread::sleep(TICK);
                let Some(inner) = weak.upgrade() else { return };
                let videos: Vec<Arc<Video>> = inner
                    .videos
                    .read()
                    .unwrap_or_else(|p| p.into_inner())
                    .values()
                    .cloned()
                    .collect();
                drop(inner);
                for video in videos {
                    let arrival = video.core.lock().last_arrival;
                    if let Some((at, video_time)) = arrival {
                        let estimate = video_time + at.elapsed().as_millis() as u64;
                        if estimate > CLOSE_GRACE_MS {
                            video.send(EngineCmd::Advance(estimate - CLOSE_GRACE_MS));
                        }
                    }
                }
            })
            .expect("spawn ticker");
    }

    fn compute_plan(
        &self,
        video_id: &str,
        messages: &[DanmakuMessage],
        settings: &AdminSettings,
        model: Option<&LdaModel>,
    ) -> Vec<CaptionPlanEntry> {
        let log = DanmakuLog::new(video_id, messages.to_vec()).unwrap_or_else(|_| DanmakuLog::empty(video_id));
        plan_captions(
            &log,
            settings,
            model,
            self.inner.classifier.as_ref(),
            &self.generator(),
            self.inner.config.seed,
        )
    }

    pub fn register_video(&self, req: RegisterVideo) -> Result<VideoInfo, ServiceError> {
        if !valid_video_id(&req.video_id) {
            return Err(ServiceError::InvalidRequest(
                "video_id must be 1-64 characters of [A-Za-z0-9_-]".into(),
            ));
        }
        let _guard = self.inner.register_lock.lock().unwrap_or_else(|p| p.into_inner());
        let dir = video_dir(&self.inner.config.data_dir, &req.video_id);
        if self.video(&req.video_id).is_ok() || dir.exists() {
            return Err(ServiceError::DuplicateVideoId(req.video_id));
        }
        let preloaded = match &req.preloaded_xml {
            Some(xml) => {
                let report =
                    parse_bilibili_xml(xml.as_bytes()).map_err(|e| ServiceError::ParseError(e.to_string()))?;
                report
                    .log
                    .messages()
                    .iter()
                    .cloned()
                    .map(|mut m| {
                        m.video_id = req.video_id.clone();
                        m
                    })
                    .collect::<Vec<_>>()
            }
            None => Vec::new(),
        };
        let settings = self.inner.config.default_settings.clone();
        let model = if preloaded.is_empty() {
            None
        } else {
            resources::fit_model(&preloaded, self.inner.config.lda_topics, self.inner.config.seed).map(Arc::new)
        };
        let plan = self.compute_plan(&req.video_id, &preloaded, &settings, model.as_deref());

        fs::create_dir_all(&dir)?;
        let mut record = VideoRecord {
            video_id: req.video_id.clone(),
            title: req.title,
            duration_ms: req.duration_ms,
            video_url: req.video_url,
            settings: settings.clone(),
            model_ref: None,
            preloaded_log_ref: None,
        };
        if let Some(xml) = &req.preloaded_xml {
            store::write_atomic(&dir.join(PRELOADED_FILE), xml.as_bytes())?;
            record.preloaded_log_ref = Some(PRELOADED_FILE.into());
            store::write_atomic(&dir.join(PLAN_FILE), plan_to_jsonl(&plan).as_bytes())?;
        }
        if let Some(model) = &model {
            store::write_atomic(&dir.join(MODEL_FILE), model.to_json().as_bytes())?;
            record.model_ref = Some(MODEL_FILE.into());
        }
        if record.duration_ms == 0 {
            record.duration_ms = preloaded.iter().map(|m| m.video_time_ms).max().unwrap_or(0);
        }
        save_record(&dir, &record)?;
        let max_id = preloaded.iter().map(|m| m.id).max();

        let engine = LiveEngine::new(self.engine_resources(model, self.generator()), settings.clone());
        let (tx, _) = broadcast::channel(BROADCAST_CAPACITY);
        let core = Arc::new(VideoCore {
            state: Mutex::new(VideoState {
                record,
                log: EventLog::open(&dir.join(EVENTS_FILE))?,
                events: Vec::new(),
                next_msg_id: max_id.map_or(1, |m| m + 1),
                live_captions: BTreeMap::new(),
                precomputed: plan.into_iter().map(|e| e.caption).collect(),
                preloaded,
                live_count: 0,
                last_arrival: None,
            }),
            dir,
            tx,
            image_cache: self.inner.image_cache.clone(),
        });
        {
            let mut state = core.lock();
            core.append(&mut state, |seq| StreamEvent::Settings { seq, payload: settings })?;
        }
        let video = self.start_video(core, engine);
        let info = info_of(&video.core.lock());
        self.inner
            .videos
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(req.video_id, video);
        Ok(info)
    }

    pub fn list_videos(&self) -> Vec<VideoInfo> {
        let videos: Vec<Arc<Video>> = self
            .inner
            .videos
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .values()
            .cloned()
            .collect();
        let mut out: Vec<VideoInfo> = videos.iter().map(|v| info_of(&v.core.lock())).collect();
        out.sort_by(|a, b| a.record.video_id.cmp(&b.record.video_id));
        out
    }

    pub fn get_video(&self, id: &str) -> Result<VideoInfo, ServiceError> {
        let video = self.video(id)?;
        let info = info_of(&video.core.lock());
        Ok(info)
    }

    pub fn submit_danmaku(&self, id: &str, req: SubmitDanmaku) -> Result<SubmitAck, ServiceError> {
        let video = self.video(id)?;
        let core = &video.core;
        let mut state = core.lock();
        let wall = now_ms();
        let message = normalize(
            &req.text,
            RawMeta {
                id: state.next_msg_id,
                video_id: id.to_string(),
                video_time_ms: req.video_time_ms,
                wall_time_ms: wall,
                user_hash: req.user_hash.unwrap_or_default(),
                display_color: req.display_color,
                display_mode: req.display_mode.unwrap_or_default(),
            },
        )
        .map_err(|e| match e {
            IngestError::EmptyText => ServiceError::EmptyText,
            other => ServiceError::InvalidRequest(other.to_string()),
        })?;
        let seq = core.append(&mut state, |seq| StreamEvent::Danmaku {
            seq,
            payload: message.clone(),
        })?;
        state.next_msg_id += 1;
        state.live_count += 1;
        state.last_arrival = Some((Instant::now(), message.video_time_ms));
        let ack = SubmitAck { id: message.id, seq };
        // Sent under the lock so the worker sees commands in seq order.
        video.send(EngineCmd::Push(message));
        Ok(ack)
    }

    pub fn get_settings(&self, id: &str) -> Result<AdminSettings, ServiceError> {
        Ok(self.video(id)?.core.lock().record.settings.clone())
    }

    pub fn put_settings(&self, id: &str, settings: AdminSettings) -> Result<AdminSettings, ServiceError> {
        settings.validate().map_err(ServiceError::InvalidSettings)?;
        let video = self.video(id)?;
        self.reload_generator();
        let core = &video.core;
        let mut state = core.lock();
        core.append(&mut state, |seq| StreamEvent::Settings {
            seq,
            payload: settings.clone(),
        })?;
        state.record.settings = settings.clone();
        save_record(&core.dir, &state.record)?;
        video.send(EngineCmd::Settings(settings.clone()));
        Ok(settings)
    }

    /// Re-reads phrase table and banned terms; keeps the old ones on error.
    fn reload_generator(&self) {
        match resources::load_generator(&self.inner.config) {
            Ok(g) => {
                *self.inner.generator.write().unwrap_or_else(|p| p.into_inner()) = g.clone();
                let videos: Vec<Arc<Video>> = self
                    .inner
                    .videos
                    .read()
                    .unwrap_or_else(|p| p.into_inner())
                    .values()
                    .cloned()
                    .collect();
                for v in videos {
                    v.send(EngineCmd::SetGenerator(g.clone()));
                }
            }
            Err(e) => warn!(error = %e, "keeping previous phrase table and banned terms"),
        }
    }

    /// Refits the topic model on preloaded plus live messages.
    pub fn fit_model(&self, id: &str) -> Result<VideoInfo, ServiceError> {
        let video = self.video(id)?;
        let messages: Vec<DanmakuMessage> = {
            let state = video.core.lock();
            state
                .preloaded
                .iter()
                .cloned()
                .chain(state.events.iter().filter_map(|e| match e {
                    StreamEvent::Danmaku { payload, .. } => Some(payload.clone()),
                    _ => None,
                }))
                .collect()
        };
        let model = resources::fit_model(&messages, self.inner.config.lda_topics, self.inner.config.seed)
            .ok_or_else(|| ServiceError::InvalidRequest("no tokens to fit a topic model on".into()))?;
        let mut state = video.core.lock();
        store::write_atomic(&video.core.dir.join(MODEL_FILE), model.to_json().as_bytes())?;
        state.record.model_ref = Some(MODEL_FILE.into());
        save_record(&video.core.dir, &state.record)?;
        video.send(EngineCmd::SetModel(Some(Arc::new(model))));
        Ok(info_of(&state))
    }

    /// Captions whose display interval overlaps `[from_ms, to_ms)`; live
    /// captions replace precomputed ones for the same window.
    pub fn captions(&self, id: &str, from_ms: Option<u64>, to_ms: Option<u64>) -> Result<Vec<ImpactCaption>, ServiceError> {
        let video = self.video(id)?;
        let state = video.core.lock();
        let mut merged: BTreeMap<u64, ImpactCaption> = state
            .precomputed
            .iter()
            .map(|c| (c.window_index, c.clone()))
            .collect();
        for (w, c) in &state.live_captions {
            merged.insert(*w, c.clone());
        }
        let from = from_ms.unwrap_or(0);
        let to = to_ms.unwrap_or(u64::MAX);
        Ok(merged
            .into_values()
            .filter(|c| c.render.display_end_ms > from && c.render.display_start_ms < to)
            .collect())
    }

    /// Preloaded and live messages with `from_ms <= video_time_ms < to_ms`.
    pub fn danmaku(&self, id: &str, from_ms: Option<u64>, to_ms: Option<u64>) -> Result<Vec<DanmakuMessage>, ServiceError> {
        let video = self.video(id)?;
        let state = video.core.lock();
        let from = from_ms.unwrap_or(0);
        let to = to_ms.unwrap_or(u64::MAX);
        let mut out: Vec<DanmakuMessage> = state
            .preloaded
            .iter()
            .cloned()
            .chain(state.events.iter().filter_map(|e| match e {
                StreamEvent::Danmaku { payload, .. } => Some(payload.clone()),
                _ => None,
            }))
            .filter(|m| (from..to).contains(&m.video_time_ms))
            .collect();
        out.sort_by_key(|m| (m.video_time_ms, m.id));
        Ok(out)
    }

    /// Logged events from `from_seq` plus a live receiver, taken atomically
    /// so nothing is missed or repeated between them.
    pub fn subscribe(
        &self,
        id: &str,
        from_seq: Option<u64>,
    ) -> Result<(Vec<StreamEvent>, broadcast::Receiver<StreamEvent>, u64), ServiceError> {
        let video = self.video(id)?;
        let state = video.core.lock();
        let next = state.next_seq();
        let backlog = match from_seq {
            Some(from) => state.events[(from.min(next)) as usize..].to_vec(),
            None => Vec::new(),
        };
        Ok((backlog, video.core.tx.subscribe(), next))
    }

    pub fn events_since(&self, id: &str, from_seq: u64) -> Result<(Vec<StreamEvent>, u64), ServiceError> {
        let video = self.video(id)?;
        let state = video.core.lock();
        let next = state.next_seq();
        Ok((state.events[(from_seq.min(next)) as usize..].to_vec(), next))
    }

    /// Blocks until the engine worker has drained its queue.
    pub fn sync_engine(&self, id: &str) -> Result<(), ServiceError> {
        let video = self.video(id)?;
        let (tx, rx) = mpsc::channel();
        video.send(EngineCmd::Barrier(tx));
        let _ = rx.recv();
        Ok(())
    }

    /// Closes the open live window of a video regardless of time.
    pub fn close_window(&self, id: &str, video_time_ms: u64) -> Result<(), ServiceError> {
        self.video(id)?.send(EngineCmd::Advance(video_time_ms));
        self.sync_engine(id)
    }

    pub fn health(&self) -> Health {
        let m: MetricsSnapshot = self.generator().metrics();
        Health {
            status: "ok",
            videos: self.inner.videos.read().unwrap_or_else(|p| p.into_inner()).len(),
            llm_attempts: m.llm_attempts,
            llm_errors: m.llm_errors,
            validation_failures: m.validation_failures,
            fallbacks: m.fallbacks,
        }
    }

    pub fn bubble_art(&self, caption: &ImpactCaption) -> Option<String> {
        self.inner
            .image_cache
            .as_ref()
            .and_then(|c| c.cached(caption.style, caption.render.fill, caption.render.shape))
    }
}

fn info_of(state: &VideoState) -> VideoInfo {
    VideoInfo {
        record: state.record.clone(),
        next_seq: state.next_seq(),
        live_danmaku_count: state.live_count,
        preloaded_danmaku_count: state.preloaded.len(),
        live_caption_count: state.live_captions.len(),
        precomputed_caption_count: state.precomputed.len(),
    }
}

fn load_model(dir: &std::path::Path, record: &VideoRecord) -> Result<Option<Arc<LdaModel>>, ServiceError> {
    let Some(name) = &record.model_ref else { return Ok(None) };
    let path = dir.join(name);
    let text = fs::read_to_string(&path)?;
    LdaModel::from_json(&text)
        .map(|m| Some(Arc::new(m)))
        .map_err(|e| ServiceError::Store(StoreError::BadFile { path, reason: e.to_string() }))
}

fn load_preloaded(dir: &std::path::Path, record: &VideoRecord) -> Result<Vec<DanmakuMessage>, ServiceError> {
    let Some(name) = &record.preloaded_log_ref else { return Ok(Vec::new()) };
    let bytes = fs::read(dir.join(name))?;
    let report = parse_bilibili_xml(&bytes).map_err(|e| ServiceError::ParseError(e.to_string()))?;
    Ok(report
        .log
        .messages()
        .iter()
        .cloned()
        .map(|mut m| {
            m.video_id = record.video_id.clone();
            m
        })
        .collect())
}

fn load_plan(dir: &std::path::Path) -> Result<Option<Vec<ImpactCaption>>, ServiceError> {
    let path = dir.join(PLAN_FILE);
    match fs::read_to_string(&path) {
        Ok(text) => plan_from_jsonl(&text)
            .map(|p| Some(p.into_iter().map(|e| e.caption).collect()))
            .map_err(|e| ServiceError::Store(StoreError::BadFile { path, reason: e.to_string() })),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}
