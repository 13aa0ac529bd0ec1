use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use danmaku_mod_core::emotion::LexiconClassifier;
use danmaku_mod_core::engine::{
    analyze_log, AdminSettings, EngineResources, PipelineContext, WindowDuration,
};
use danmaku_mod_core::generate::{CaptionBackend, CaptionGenerator, CaptionRequest, Pov, ResponseStyle};
use danmaku_mod_core::ingest::parse_bilibili_xml;
use danmaku_mod_core::topics::{fit_lda, Corpus, LdaModel, LdaParams};
use danmaku_mod_core::{DanmakuLog, EmotionLabel};

use crate::config::Config;
use crate::replay::{replay, RealClock, Speed};
use crate::resources;
use crate::service::Service;

type CliResult = Result<(), Box<dyn std::error::Error>>;

#[derive(Debug, Parser)]
#[command(name = "danmaku-mod", version, about = "Danmaku moderation with Impact Captions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Backend {
    Template,
    Llm,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP/WebSocket service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured port; 0 picks a free one.
        #[arg(long)]
        port: Option<u16>,
    },
    /// Fit a topic model on a Bilibili XML log.
    FitLda {
        log: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Defaults to 50/K.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        beta: f64,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one window summary per non-empty window.
    Analyze {
        log: PathBuf,
        #[arg(long, default_value_t = 8)]
        window: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fitted model; by default one is fitted on the log itself.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a log through a fresh engine and write its caption plan.
    Replay {
        log: PathBuf,
        /// Settings JSON, inline or a file path.
        #[arg(long)]
        settings: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// A speed factor such as 1, 8 or 8x, or "instant".
        #[arg(long, default_value = "instant")]
        speed: Speed,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the emitted event stream.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Generate one caption and print it as JSON.
    GenCaption {
        #[arg(long)]
        style: ResponseStyle,
        #[arg(long)]
        pov: Pov,
        /// Comma-separated theme words.
        #[arg(long, default_value = "")]
        theme: String,
        #[arg(long, default_value = "neutral")]
        dominant: EmotionLabel,
        #[arg(long, value_enum, default_value_t = Backend::Template)]
        backend: Backend,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Supplies the chat endpoint, phrase table and banned terms.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

pub fn load_log(path: &Path) -> Result<DanmakuLog, Box<dyn std::error::Error>> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let report = parse_bilibili_xml(&bytes)?;
    if report.skipped > 0 {
        tracing::warn!(skipped = report.skipped, "skipped malformed danmaku elements");
    }
    Ok(report.log)
}

fn load_model(path: &Path) -> Result<LdaModel, Box<dyn std::error::Error>> {
    Ok(LdaModel::from_json(&fs::read_to_string(path)?)?)
}

/// Template-only resources for offline runs; the model is fitted on the
/// log itself with `seed` unless one is given.
pub fn offline_resources(log: &DanmakuLog, seed: u64, model: Option<LdaModel>) -> EngineResources {
    let model = model.or_else(|| resources::fit_model(log.messages(), 10, seed));
    EngineResources {
        classifier: Arc::new(LexiconClassifier::default()),
        model: model.map(Arc::new),
        generator: CaptionGenerator::template_only(),
        seed,
    }
}

fn load_settings(arg: Option<&str>) -> Result<AdminSettings, Box<dyn std::error::Error>> {
    let Some(arg) = arg else { return Ok(AdminSettings::default()) };
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| format!("{arg}: {e}"))?
    };
    AdminSettings::from_json(&text).map_err(|errs| {
        errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ").into()
    })
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Serve { config, port } => {
            let mut config = match config {
                Some(path) => Config::load(&path)?,
                None => Config::default(),
            };
            if let Some(port) = port {
                config.port = port;
            }
            let addr: SocketAddr = format!("{}:{}", config.bind, config.port).parse()?;
            let service = Service::open(config)?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(crate::http::serve(service, addr))?;
        }
        Command::FitLda { log, k, alpha, beta, iters, seed, out } => {
            let log = load_log(&log)?;
            let mut params = LdaParams::with_topics(k);
            params.alpha = alpha.unwrap_or(params.alpha);
            params.beta = beta;
            params.iterations = iters;
            params.seed = seed;
            let model = fit_lda(&Corpus::from_messages(log.messages()), params)?;
            fs::write(&out, model.to_json())?;
        }
        Command::Analyze { log, window, seed, model, out } => {
            let duration = WindowDuration::from_seconds(window).ok_or("--window must be 8 or 12")?;
            let log = load_log(&log)?;
            let model = model.as_deref().map(load_model).transpose()?;
            let res = offline_resources(&log, seed, model);
            let settings = AdminSettings { window_duration_s: duration, ..Default::default() };
            let ctx: PipelineContext<'_> = res.context();
            let mut text = String::new();
            for outcome in analyze_log(&ctx, &log, &settings) {
                text.push_str(&serde_json::to_string(&outcome.summary)?);
                text.push('\n');
            }
            fs::write(&out, text)?;
        }
        Command::Replay { log, settings, seed, speed, model, out, transcript } => {
            let log = load_log(&log)?;
            let settings = load_settings(settings.as_deref())?;
            let model = model.as_deref().map(load_model).transpose()?;
            let res = offline_resources(&log, seed, model);
            let output = replay(&log, &settings, res, speed, &RealClock::start());
            fs::write(&out, danmaku_mod_core::engine::plan_to_jsonl(&output.plan))?;
            if let Some(path) = transcript {
                fs::write(path, output.transcript_jsonl())?;
            }
        }
        Command::GenCaption { style, pov, theme, dominant, backend, seed, config } => {
            let config = match config {
                Some(path) => Config::load(&path)?,
                None => Config::default(),
            };
            let generator = resources::load_generator(&config)?;
            let request = CaptionRequest {
                style,
                pov,
                theme: theme
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect(),
                dominant,
                exemplars: Vec::new(),
                seed,
            };
            let backend = match backend {
                Backend::Template => CaptionBackend::Template,
                Backend::Llm => CaptionBackend::Llm,
            };
            let caption = generator.generate(&request, backend);
            println!("{}", serde_json::to_string(&caption)?);
        }
    }
    Ok(())
}
