use std::collections::HashMap;

use crate::ingest::{tokenize, DanmakuMessage};

/// Documents as token-id lists over a first-seen-order vocabulary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub documents: Vec<Vec<u32>>,
    pub vocabulary: Vec<String>,
    pub doc_ids: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a document given as token surfaces.
    pub fn push_tokens<S: AsRef<str>>(&mut self, doc_id: u64, tokens: &[S]) {
        let ids = tokens
            .iter()
            .map(|surface| {
                let surface = surface.as_ref();
                match self.index.get(surface) {
                    Some(&id) => id,
                    None => {
                        let id = self.vocabulary.len() as u32;
                        self.vocabulary.push(surface.to_string());
                        self.index.insert(surface.to_string(), id);
                        id
                    }
                }
            })
            .collect();
        self.documents.push(ids);
        self.doc_ids.push(doc_id);
    }

    pub fn push_text(&mut self, doc_id: u64, text: &str) {
        let surfaces: Vec<String> = tokenize(text).into_iter().map(|t| t.surface).collect();
        self.push_tokens(doc_id, &surfaces);
    }

    /// One document per message.
    pub fn from_messages<'a, I>(messages: I) -> Self
    where
        I: IntoIterator<Item = &'a DanmakuMessage>,
    {
        let mut corpus = Self::new();
        for m in messages {
            corpus.push_text(m.id, &m.text);
        }
        corpus
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(Vec::len).sum()
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_is_first_seen_and_unique() {
        let mut c = Corpus::new();
        c.push_tokens(1, &["a", "b", "a"]);
        c.push_tokens(2, &["c", "b"]);
        assert_eq!(c.vocabulary, ["a", "b", "c"]);
        assert_eq!(c.documents, vec![vec![0, 1, 0], vec![2, 1]]);
        assert_eq!(c.token_count(), 5);
    }

    #[test]
    fn text_documents_use_tokenizer() {
        let mut c = Corpus::new();
        c.push_text(7, "前方高能 GG");
        assert_eq!(c.vocabulary, ["前方", "方高", "高能", "gg"]);
        assert_eq!(c.doc_ids, [7]);
    }
}
