//! Network service, event log, replay harness and CLI for the Danmaku
//! moderation engine.

pub mod cli;
pub mod clients;
pub mod config;
pub mod http;
pub mod ratelimit;
pub mod replay;
pub mod resources;
pub mod service;
pub mod store;

pub use config::Config;
pub use service::{Service, ServiceError};
