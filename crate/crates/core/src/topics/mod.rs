//! Latent Dirichlet Allocation fitted by collapsed Gibbs sampling, with
//! fold-in inference for per-window themes.

mod corpus;
mod lda;

pub use corpus::Corpus;
pub use lda::{
    extract_theme, fit_lda, infer_mixture, top_words, LdaError, LdaModel, LdaParams, Theme,
    TopicMixture, DEFAULT_FOLD_IN_ITERATIONS, THEME_WORDS,
};
