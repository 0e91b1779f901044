use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pre-tokenizer pattern: {0}")]
    Pattern(String),

    #[error("unknown pre-tokenizer preset '{name}' (valid presets: {valid})")]
    UnknownPreset { name: String, valid: String },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("vocab_size {requested} is too small: at least {required} entries are required ({detail})")]
    VocabTooSmall {
        requested: usize,
        required: usize,
        detail: String,
    },

    #[error(
        "{unique} unique graphemes exceed the budget of {budget} seed entries (overflow: {overflow})"
    )]
    GraphemeBudget {
        unique: usize,
        budget: usize,
        overflow: usize,
    },

    #[error("token id {0} is out of range")]
    IdOutOfRange(u32),

    #[error("model schema error: {0}")]
    Schema(String),

    #[error("invalid UTF-8 in {} at line {line}", path.display())]
    InvalidUtf8 { path: PathBuf, line: usize },

    #[error("{} has {have} lines but {need} were requested", path.display())]
    NotEnoughLines {
        path: PathBuf,
        have: usize,
        need: usize,
    },

    #[error("misaligned parallel corpus: '{lang_a}' has {count_a} lines, '{lang_b}' has {count_b}")]
    Misaligned {
        lang_a: String,
        count_a: usize,
        lang_b: String,
        count_b: usize,
    },

    #[error("language '{0}' is not present in the corpus")]
    UnknownLanguage(String),

    #[error("empty line {line} for language '{lang}'")]
    EmptyLine { lang: String, line: usize },

    #[error("{what} has zero tokens (line {line})")]
    ZeroTokens { what: &'static str, line: usize },

    #[error("length mismatch: {texts} texts but {counts} token counts")]
    LengthMismatch { texts: usize, counts: usize },

    #[error("unknown {kind} '{value}' (expected one of: {expected})")]
    UnknownName {
        kind: &'static str,
        value: String,
        expected: &'static str,
    },

    #[error("invalid setting: {0}")]
    Invalid(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag for diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Pattern(_) => "pattern",
            Error::UnknownPreset { .. } => "unknown-preset",
            Error::EmptyCorpus => "empty-corpus",
            Error::VocabTooSmall { .. } => "vocab-too-small",
            Error::GraphemeBudget { .. } => "grapheme-budget",
            Error::IdOutOfRange(_) => "id-out-of-range",
            Error::Schema(_) => "schema",
            Error::InvalidUtf8 { .. } => "invalid-utf8",
            Error::NotEnoughLines { .. } => "not-enough-lines",
            Error::Misaligned { .. } => "misaligned",
            Error::UnknownLanguage(_) => "unknown-language",
            Error::EmptyLine { .. } => "empty-line",
            Error::ZeroTokens { .. } => "zero-tokens",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::UnknownName { .. } => "unknown-name",
            Error::Invalid(_) => "invalid",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
