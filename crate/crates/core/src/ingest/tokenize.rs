use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    CjkBigram,
    CjkUnigram,
    LatinWord,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub kind: TokenKind,
}

impl Token {
    fn new(surface: impl Into<String>, kind: TokenKind) -> Self {
        Self {
            surface: surface.into(),
            kind,
        }
    }
}

pub(crate) fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF      // hiragana, katakana
        | 0x3400..=0x4DBF    // ext A
        | 0x4E00..=0x9FFF    // unified ideographs
        | 0xAC00..=0xD7AF    // hangul syllables
        | 0xF900..=0xFAFF    // compatibility ideographs
        | 0x20000..=0x2FA1F) // ext B..F, compatibility supplement
}

#[derive(PartialEq, Eq, Clone, Copy)]
enum Class {
    Cjk,
    Alnum,
    Other,
}

fn class_of(c: char) -> Class {
    if is_cjk(c) {
        Class::Cjk
    } else if c.is_alphanumeric() {
        Class::Alnum
    } else {
        Class::Other
    }
}

/// Splits text into CJK character bigrams (unigrams for isolated
/// characters) and lowercased Latin/numeric words, in text order.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut run: Vec<char> = Vec::new();
    let mut run_class = Class::Other;

    for c in text.chars() {
        let class = class_of(c);
        if class != run_class {
            flush(&mut out, &run, run_class);
            run.clear();
            run_class = class;
        }
        if class != Class::Other {
            run.push(c);
        }
    }
    flush(&mut out, &run, run_class);
    out
}

fn flush(out: &mut Vec<Token>, run: &[char], class: Class) {
    match class {
        Class::Other => {}
        _ if run.is_empty() => {}
        Class::Cjk if run.len() == 1 => {
            out.push(Token::new(run[0].to_string(), TokenKind::CjkUnigram));
        }
        Class::Cjk => {
            for pair in run.windows(2) {
                out.push(Token::new(pair.iter().collect::<String>(), TokenKind::CjkBigram));
            }
        }
        Class::Alnum => {
            let word: String = run.iter().collect::<String>().to_lowercase();
            let kind = if run.iter().all(|c| c.is_numeric()) {
                TokenKind::Numeric
            } else {
                TokenKind::LatinWord
            };
            out.push(Token::new(word, kind));
        }
    }
}
