use thiserror::Error;

use super::validate::GenerationConstraints;
use super::{Pov, ResponseStyle};
use crate::emotion::EmotionLabel;

/// A prompt pair with `{placeholder}` slots: `theme_words`,
/// `dominant_emotion`, `exemplar_danmaku`, `max_chars`, `language`,
/// `banned_terms`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub style: ResponseStyle,
    pub pov: Pov,
    pub system_text: &'static str,
    pub user_text: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptPair {
    pub system: String,
    pub user: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("no template for {0} / {1:?}")]
    MissingTemplate(ResponseStyle, Pov),
    #[error("unresolved placeholder {{{0}}}")]
    UnresolvedPlaceholder(String),
}

macro_rules! system {
    ($style:expr, $voice:expr) => {
        concat!(
            "You write Impact Captions: short overlay messages shown above the live bullet ",
            "comments (Danmaku) of a video, meant to steer the comment section toward a ",
            "friendly, engaged atmosphere.\n",
            $style,
            "\n",
            $voice,
            "\nOutput rules: reply with the caption text only, on one line, written in ",
            "{language}, at most {max_chars} characters. No quotes, no explanations, no ",
            "hashtags. Never insult or single out a viewer. Never use any of these terms: ",
            "{banned_terms}."
        )
    };
}

const USER: &str = "Dominant emotion in the last window: {dominant_emotion}\n\
Theme words: {theme_words}\n\
Representative comments:\n{exemplar_danmaku}\n\
Write one caption of at most {max_chars} characters.";

/// One template per (style, pov) pair.
pub const TEMPLATES: [PromptTemplate; 6] = [
    PromptTemplate {
        style: ResponseStyle::Tsukkomi,
        pov: Pov::First,
        system_text: system!(
            "Style: Tsukkomi (roast). Spot a loophole or keyword in what viewers are saying and answer it with light irony or playful doubt. Keep it funny rather than hostile.",
            "Voice: first person. Speak as one of the audience and use inclusive pronouns such as 我们/咱们 (\"we\", \"us\"); never address viewers as 你/你们 (\"you\") or talk about them as 他们 (\"they\")."
        ),
        user_text: USER,
    },
    PromptTemplate {
        style: ResponseStyle::Tsukkomi,
        pov: Pov::Third,
        system_text: system!(
            "Style: Tsukkomi (roast). Spot a loophole or keyword in what viewers are saying and answer it with light irony or playful doubt. Keep it funny rather than hostile.",
            "Voice: third person. Comment as an outside observer with an objective, explanatory tone that helps viewers understand the video and the comments; do not use first-person pronouns."
        ),
        user_text: USER,
    },
    PromptTemplate {
        style: ResponseStyle::Expository,
        pov: Pov::First,
        system_text: system!(
            "Style: Expository. The comments are drifting or unclear; redirect attention back to what is happening in the video, using a sense of adventure or discovery (e.g. 前方高能！). Mention at least one theme word.",
            "Voice: first person. Speak as one of the audience and use inclusive pronouns such as 我们/咱们 (\"we\", \"us\"); never address viewers as 你/你们 (\"you\") or talk about them as 他们 (\"they\")."
        ),
        user_text: USER,
    },
    PromptTemplate {
        style: ResponseStyle::Expository,
        pov: Pov::Third,
        system_text: system!(
            "Style: Expository. The comments are drifting or unclear; redirect attention back to what is happening in the video, using a sense of adventure or discovery (e.g. 前方高能！). Mention at least one theme word.",
            "Voice: third person. Comment as an outside observer with an objective, explanatory tone that helps viewers understand the video and the comments; do not use first-person pronouns."
        ),
        user_text: USER,
    },
    PromptTemplate {
        style: ResponseStyle::HumorousPraise,
        pov: Pov::First,
        system_text: system!(
            "Style: Humorous and Praise. Echo and amplify the positive mood of the comments with warm, playful compliments (e.g. 神仙UP主, 优雅！实在是太优雅了！).",
            "Voice: first person. Speak as one of the audience and use inclusive pronouns such as 我们/咱们 (\"we\", \"us\"); never address viewers as 你/你们 (\"you\") or talk about them as 他们 (\"they\")."
        ),
        user_text: USER,
    },
    PromptTemplate {
        style: ResponseStyle::HumorousPraise,
        pov: Pov::Third,
        system_text: system!(
            "Style: Humorous and Praise. Echo and amplify the positive mood of the comments with warm, playful compliments (e.g. 神仙UP主, 优雅！实在是太优雅了！).",
            "Voice: third person. Comment as an outside observer with an objective, explanatory tone that helps viewers understand the video and the comments; do not use first-person pronouns."
        ),
        user_text: USER,
    },
];

/// Single-pass substitution, so placeholder-like text inside values is
/// never expanded.
fn substitute(template: &str, lookup: &dyn Fn(&str) -> Option<String>) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len() + 64);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| PromptError::UnresolvedPlaceholder(after.to_string()))?;
        let name = &after[..close];
        let value = lookup(name).ok_or_else(|| PromptError::UnresolvedPlaceholder(name.to_string()))?;
        out.push_str(&value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

fn none_if_empty(s: String) -> String {
    if s.is_empty() {
        "(none)".into()
    } else {
        s
    }
}

/// Resolves the template for `(style, pov)` against the window's content.
pub fn build_prompt(
    style: ResponseStyle,
    pov: Pov,
    theme: &[String],
    dominant: EmotionLabel,
    exemplars: &[String],
    constraints: &GenerationConstraints,
) -> Result<PromptPair, PromptError> {
    let template = TEMPLATES
        .iter()
        .find(|t| t.style == style && t.pov == pov)
        .ok_or(PromptError::MissingTemplate(style, pov))?;

    let theme_words = none_if_empty(theme.join("、"));
    let exemplar_danmaku = none_if_empty(
        exemplars
            .iter()
            .take(3)
            .map(|e| format!("- {e}"))
            .collect::<Vec<_>>()
            .join("\n"),
    );
    let banned = none_if_empty(constraints.banned_terms.join(", "));
    let max_chars = constraints.max_chars.to_string();
    let lookup = |name: &str| -> Option<String> {
        Some(match name {
            "theme_words" => theme_words.clone(),
            "dominant_emotion" => dominant.name().to_string(),
            "exemplar_danmaku" => exemplar_danmaku.clone(),
            "max_chars" => max_chars.clone(),
            "language" => constraints.language.clone(),
            "banned_terms" => banned.clone(),
            _ => return None,
        })
    };
    Ok(PromptPair {
        system: substitute(template.system_text, &lookup)?,
        user: substitute(template.user_text, &lookup)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prompt(style: ResponseStyle, pov: Pov, theme: &[&str]) -> PromptPair {
        let theme: Vec<String> = theme.iter().map(|s| s.to_string()).collect();
        build_prompt(
            style,
            pov,
            &theme,
            EmotionLabel::Curiosity,
            &["这是什么".into(), "{max_chars}".into()],
            &GenerationConstraints {
                banned_terms: vec!["傻".into()],
                ..GenerationConstraints::for_style(style)
            },
        )
        .unwrap()
    }

    #[test]
    fn table_covers_every_pair() {
        for style in ResponseStyle::ALL {
            for pov in Pov::ALL {
                assert_eq!(
                    TEMPLATES.iter().filter(|t| t.style == style && t.pov == pov).count(),
                    1
                );
            }
        }
    }

    #[test]
    fn expository_third_mentions_theme_and_limit() {
        let p = prompt(ResponseStyle::Expository, Pov::Third, &["路飞"]);
        let all = format!("{}\n{}", p.system, p.user);
        assert!(all.contains("路飞"));
        assert!(all.contains("at most 30 characters"));
        assert!(all.contains("傻"));
        assert!(all.contains("curiosity"));
        assert!(!all.contains("{theme_words}"));
        assert!(p.system.contains("outside observer"));
    }

    #[test]
    fn first_person_uses_inclusive_pronouns() {
        let p = prompt(ResponseStyle::HumorousPraise, Pov::First, &[]);
        assert!(p.system.contains("我们"));
        assert!(p.system.contains("\"we\""));
        assert!(p.user.contains("Theme words: (none)"));
    }

    #[test]
    fn exemplar_text_is_not_expanded() {
        let p = prompt(ResponseStyle::Tsukkomi, Pov::Third, &[]);
        assert!(p.user.contains("- {max_chars}"));
    }

    #[test]
    fn deterministic() {
        let a = prompt(ResponseStyle::Tsukkomi, Pov::First, &["高能"]);
        let b = prompt(ResponseStyle::Tsukkomi, Pov::First, &["高能"]);
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_placeholder_is_an_error() {
        let lookup = |_: &str| None;
        assert_eq!(
            substitute("a {nope} b", &lookup),
            Err(PromptError::UnresolvedPlaceholder("nope".into()))
        );
    }
}
