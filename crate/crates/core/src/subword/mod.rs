//! Subword tokenizers: BPE, grapheme pair encoding (GPE), WordPiece and Unigram.
//!
//! All four share one [`TokenizerModel`] type. Training runs per pre-token, so
//! no learned token ever spans two pre-tokens, and every trainer is
//! deterministic: pair-frequency ties go to the lexicographically smallest
//! `(left, right)` pair and parallel reductions use fixed partitions.

mod bpe;
mod model;
mod unigram;
mod vocab;
mod wordpiece;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::graphemes::{graphemes, SegmentationPolicy};
use crate::pretokenize::PretokenizerSpec;
use crate::{Error, Result};

pub use bpe::{train_bpe, train_gpe};
pub use model::{load_model, save_model, MergeRule, TokenizerModel, FORMAT_VERSION};
pub use unigram::train_unigram;
pub use vocab::{escape_bytes, parse_escapes, TokenKind, Vocabulary, CONTINUATION_PREFIX};
pub use wordpiece::train_wordpiece;

pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Bpe,
    Gpe,
    Wordpiece,
    Unigram,
}

impl Algorithm {
    pub const NAMES: &'static str = "bpe, gpe, wordpiece, unigram";

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bpe => "bpe",
            Algorithm::Gpe => "gpe",
            Algorithm::Wordpiece => "wordpiece",
            Algorithm::Unigram => "unigram",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bpe" => Ok(Algorithm::Bpe),
            "gpe" => Ok(Algorithm::Gpe),
            "wordpiece" => Ok(Algorithm::Wordpiece),
            "unigram" => Ok(Algorithm::Unigram),
            _ => Err(Error::UnknownName {
                kind: "algorithm",
                value: s.to_owned(),
                expected: Self::NAMES,
            }),
        }
    }
}

/// The indivisible unit a model is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomicMode {
    Byte,
    Codepoint,
    Grapheme,
}

impl AtomicMode {
    pub const NAMES: &'static str = "byte, codepoint, grapheme";
}

impl std::str::FromStr for AtomicMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "byte" => Ok(AtomicMode::Byte),
            "codepoint" => Ok(AtomicMode::Codepoint),
            "grapheme" => Ok(AtomicMode::Grapheme),
            _ => Err(Error::UnknownName {
                kind: "atomic mode",
                value: s.to_owned(),
                expected: Self::NAMES,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownPolicy {
    ByteFallback,
    UnkToken,
}

impl UnknownPolicy {
    pub const NAMES: &'static str = "byte_fallback, unk_token";
}

impl std::str::FromStr for UnknownPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "byte_fallback" => Ok(UnknownPolicy::ByteFallback),
            "unk_token" => Ok(UnknownPolicy::UnkToken),
            _ => Err(Error::UnknownName {
                kind: "unknown policy",
                value: s.to_owned(),
                expected: Self::NAMES,
            }),
        }
    }
}

/// Trainer settings. They are written into the model file verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOptions {
    /// Total budget: specials, fallback bytes, atoms and learned tokens.
    pub vocab_size: usize,
    pub atomic_mode: AtomicMode,
    pub segmentation_policy: SegmentationPolicy,
    pub unknown_policy: UnknownPolicy,
    /// Reserved tokens besides `<unk>`; they never take part in merges.
    #[serde(default)]
    pub extra_specials: Vec<String>,
    /// Merging stops once the best pair occurs fewer times than this.
    pub min_frequency: u64,
    #[serde(default)]
    pub unigram: UnigramSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnigramSettings {
    /// Seed size is `vocab_size * seed_factor` multi-atom substrings.
    pub seed_factor: usize,
    pub max_piece_atoms: usize,
    pub em_iterations: usize,
    pub shrink_factor: f64,
}

impl Default for UnigramSettings {
    fn default() -> Self {
        Self {
            seed_factor: 8,
            max_piece_atoms: 16,
            em_iterations: 2,
            shrink_factor: 0.75,
        }
    }
}

impl TrainOptions {
    fn with_mode(vocab_size: usize, atomic_mode: AtomicMode) -> Self {
        Self {
            vocab_size,
            atomic_mode,
            segmentation_policy: SegmentationPolicy::default(),
            unknown_policy: UnknownPolicy::ByteFallback,
            extra_specials: Vec::new(),
            min_frequency: 2,
            unigram: UnigramSettings::default(),
        }
    }

    /// Byte-level BPE defaults.
    pub fn bpe(vocab_size: usize) -> Self {
        Self::with_mode(vocab_size, AtomicMode::Byte)
    }

    pub fn gpe(vocab_size: usize) -> Self {
        Self::with_mode(vocab_size, AtomicMode::Grapheme)
    }

    pub fn wordpiece(vocab_size: usize) -> Self {
        Self::with_mode(vocab_size, AtomicMode::Codepoint)
    }

    pub fn unigram(vocab_size: usize) -> Self {
        Self::with_mode(vocab_size, AtomicMode::Codepoint)
    }

    pub fn atomic_mode(mut self, mode: AtomicMode) -> Self {
        self.atomic_mode = mode;
        self
    }

    pub fn unknown_policy(mut self, policy: UnknownPolicy) -> Self {
        self.unknown_policy = policy;
        self
    }

    pub fn segmentation_policy(mut self, policy: SegmentationPolicy) -> Self {
        self.segmentation_policy = policy;
        self
    }

    /// `<unk>` (under the unk policy) followed by the extra specials.
    pub fn specials(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.unknown_policy == UnknownPolicy::UnkToken {
            out.push(UNK_TOKEN.to_owned());
        }
        for s in &self.extra_specials {
            if !out.contains(s) {
                out.push(s.clone());
            }
        }
        out
    }

    /// Specials plus the fallback byte block (or, in byte mode, all 256 byte atoms).
    pub(crate) fn base_vocab(&self) -> Vocabulary {
        let mut vocab = Vocabulary::new();
        for s in self.specials() {
            vocab.push_special(&s);
        }
        if self.atomic_mode == AtomicMode::Byte {
            for b in 0..=255u8 {
                vocab.insert_piece(vec![b]);
            }
        } else if self.unknown_policy == UnknownPolicy::ByteFallback {
            vocab.push_byte_block();
        }
        vocab
    }
}

/// Byte offsets of atom boundaries in `text`, starting at 0 and ending at `text.len()`.
pub fn atom_bounds(text: &str, mode: AtomicMode, policy: SegmentationPolicy) -> Vec<usize> {
    let mut out = Vec::with_capacity(text.len() + 1);
    out.push(0);
    match mode {
        AtomicMode::Byte => out.extend(1..=text.len()),
        AtomicMode::Codepoint => out.extend(text.char_indices().map(|(i, c)| i + c.len_utf8())),
        AtomicMode::Grapheme => {
            let mut end = 0;
            for g in graphemes(text, policy) {
                end += g.len();
                out.push(end);
            }
        }
    }
    out
}

pub fn atoms(text: &str, mode: AtomicMode, policy: SegmentationPolicy) -> Vec<&[u8]> {
    atom_bounds(text, mode, policy)
        .windows(2)
        .map(|w| &text.as_bytes()[w[0]..w[1]])
        .collect()
}

/// Distinct pre-tokens of the corpus with their frequencies, sorted by bytes.
pub(crate) fn count_pretokens<'a, S: AsRef<str> + Sync>(
    lines: &'a [S],
    spec: &PretokenizerSpec,
) -> Result<Vec<(&'a str, u64)>> {
    if lines.iter().all(|l| l.as_ref().trim().is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    let counts = lines
        .par_iter()
        .fold(FxHashMap::<&'a str, u64>::default, |mut acc, line| {
            for p in spec.split(line.as_ref()) {
                *acc.entry(p).or_default() += 1;
            }
            acc
        })
        .reduce(FxHashMap::default, |a, b| {
            if a.len() >= b.len() {
                merge_counts(a, b)
            } else {
                merge_counts(b, a)
            }
        });
    if counts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut out: Vec<(&str, u64)> = counts.into_iter().collect();
    out.sort_unstable_by(|a, b| a.0.cmp(b.0));
    Ok(out)
}

fn merge_counts<'a>(
    mut into: FxHashMap<&'a str, u64>,
    from: FxHashMap<&'a str, u64>,
) -> FxHashMap<&'a str, u64> {
    for (k, v) in from {
        *into.entry(k).or_default() += v;
    }
    into
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atom_modes() {
        let p = SegmentationPolicy::default();
        assert_eq!(atoms("நன்றி", AtomicMode::Grapheme, p).len(), 3);
        assert_eq!(atoms("நன்றி", AtomicMode::Codepoint, p).len(), 5);
        assert_eq!(atoms("நன்றி", AtomicMode::Byte, p).len(), 15);
        assert!(atoms("", AtomicMode::Grapheme, p).is_empty());
    }

    #[test]
    fn pretoken_counts_are_sorted_and_summed() {
        let lines = ["b a", "a", "  "];
        let counts = count_pretokens(&lines, &PretokenizerSpec::whitespace()).unwrap();
        assert_eq!(counts, [("a", 2), ("b", 1)]);
        let empty: [&str; 2] = ["", " "];
        assert!(matches!(
            count_pretokens(&empty, &PretokenizerSpec::whitespace()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn specials_follow_policy() {
        assert!(TrainOptions::bpe(10).specials().is_empty());
        let o = TrainOptions::bpe(10).unknown_policy(UnknownPolicy::UnkToken);
        assert_eq!(o.specials(), [UNK_TOKEN]);
    }
}
