//! Grapheme-aware subword tokenization and tokenization fairness metrics.
//!
//! - [`graphemes`]: byte, codepoint and grapheme-cluster views of text.
//! - [`pretokenize`]: whitespace, punctuation and regex pre-tokenizers.
//! - [`subword`]: BPE, grapheme pair encoding, WordPiece and Unigram.
//! - [`charlevel`]: byte, codepoint and grapheme character tokenizers.
//! - [`metrics`]: compression ratio, tokenization parity and their pre-tokenization bounds.

pub mod charlevel;
pub mod corpus;
pub mod error;
pub mod experiments;
pub mod graphemes;
pub mod metrics;
pub mod pretokenize;
pub mod subword;

pub use error::{Error, Result};
pub use graphemes::{
    count_codepoints, grapheme_count, graphemes, segment_graphemes, utf8_byte_length, Cluster,
    GraphemeSegmentation, SegmentationPolicy,
};
pub use pretokenize::{preset_spec, pretokenize, PreToken, PretokenizerKind, PretokenizerSpec};
pub use subword::{
    load_model, save_model, train_bpe, train_gpe, train_unigram, train_wordpiece, Algorithm,
    AtomicMode, TokenizerModel, TrainOptions, UnknownPolicy,
};
