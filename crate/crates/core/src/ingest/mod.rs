//! Danmaku ingestion: normalization, tokenization, recorded logs and the
//! newline-delimited JSON wire protocol.

mod bilibili;
mod message;
mod tokenize;
pub mod wire;

pub use bilibili::{parse_bilibili_xml, XmlParseReport};
pub use message::{normalize, DanmakuLog, DanmakuMessage, DisplayMode, RawMeta, MAX_TEXT_CHARS};
pub use tokenize::{tokenize, Token, TokenKind};
pub use wire::{decode_event, encode_event, StreamEvent, WireError};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IngestError {
    #[error("danmaku text is empty after normalization")]
    EmptyText,
    #[error("negative video time: {0} ms")]
    BadTimestamp(i64),
    #[error("malformed xml: {0}")]
    MalformedXml(String),
    #[error("malformed `p` attribute: {0}")]
    MalformedAttribute(String),
    #[error("duplicate message id {0} in log")]
    DuplicateId(u64),
}
