use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{style_for, BubbleShape, ColorRgba, BLUE, DARK_RED, ORANGE};
use crate::emotion::EmotionLabel;
use crate::generate::ResponseStyle;

fn color_word(color: ColorRgba) -> &'static str {
    let rgb = (color.r, color.g, color.b);
    if rgb == (BLUE.r, BLUE.g, BLUE.b) {
        "calm blue"
    } else if rgb == (ORANGE.r, ORANGE.g, ORANGE.b) {
        "warm orange"
    } else if rgb == (DARK_RED.r, DARK_RED.g, DARK_RED.b) {
        "dark red"
    } else {
        "neutral gray"
    }
}

fn shape_words(shape: BubbleShape) -> &'static str {
    match shape {
        BubbleShape::Rounded => "soft rounded speech bubble",
        BubbleShape::Rectangular => "clean rectangular speech bubble with slightly rounded corners",
        BubbleShape::Lightning => "jagged lightning bolt-shaped speech bubble with sharp edges",
    }
}

/// English text-to-image prompt describing the caption bubble.
pub fn image_prompt(style: ResponseStyle, theme: &[String], dominant: EmotionLabel) -> String {
    let (color, shape) = style_for(style, dominant.polarity(), false);
    let mut prompt = format!(
        "A translucent {} {}, conveying {}, flat vector illustration, empty interior for overlay text, transparent background",
        color_word(color),
        shape_words(shape),
        dominant.name(),
    );
    if !theme.is_empty() {
        prompt.push_str(", motif inspired by ");
        prompt.push_str(&theme.join(", "));
    }
    prompt
}

/// Body of a text-to-image call: `{"prompt"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRequest {
    pub prompt: String,
}

/// Reply of a text-to-image call: `{"image_url"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageResponse {
    pub image_url: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImageError {
    #[error("image endpoint: {0}")]
    Endpoint(String),
}

pub trait ImageClient: Send + Sync {
    fn generate(&self, request: &ImageRequest) -> Result<String, ImageError>;
}

type CacheKey = (ResponseStyle, BubbleShape, (u8, u8, u8));

#[derive(Debug, Clone)]
enum Slot {
    Pending,
    Ready(String),
    Failed,
}

/// Background-filled cache of generated bubble images keyed by
/// (style, shape, color). Lookups never block on the endpoint.
#[derive(Clone)]
pub struct ImageCache {
    client: Arc<dyn ImageClient>,
    slots: Arc<Mutex<HashMap<CacheKey, Slot>>>,
}

impl ImageCache {
    pub fn new(client: Arc<dyn ImageClient>) -> Self {
        Self {
            client,
            slots: Arc::default(),
        }
    }

    /// Returns the cached URL if present; otherwise schedules a fetch on a
    /// background thread and returns `None`.
    pub fn get_or_schedule(
        &self,
        style: ResponseStyle,
        color: ColorRgba,
        shape: BubbleShape,
        prompt: String,
    ) -> Option<String> {
        let key = (style, shape, (color.r, color.g, color.b));
        {
            let mut slots = self.slots.lock().expect("image cache lock");
            match slots.get(&key) {
                Some(Slot::Ready(url)) => return Some(url.clone()),
                Some(Slot::Pending) | Some(Slot::Failed) => return None,
                None => {
                    slots.insert(key, Slot::Pending);
                }
            }
        }
        let client = Arc::clone(&self.client);
        let slots = Arc::clone(&self.slots);
        std::thread::spawn(move || {
            let slot = match client.generate(&ImageRequest { prompt }) {
                Ok(url) => Slot::Ready(url),
                Err(_) => Slot::Failed,
            };
            slots.lock().expect("image cache lock").insert(key, slot);
        });
        None
    }

    pub fn cached(&self, style: ResponseStyle, color: ColorRgba, shape: BubbleShape) -> Option<String> {
        let key = (style, shape, (color.r, color.g, color.b));
        match self.slots.lock().expect("image cache lock").get(&key) {
            Some(Slot::Ready(url)) => Some(url.clone()),
            _ => None,
        }
    }
}
