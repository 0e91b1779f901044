//! Character-level tokenizers: UTF-8 bytes, codepoints, or grapheme clusters.

use serde::{Deserialize, Serialize};

use crate::graphemes::{graphemes, SegmentationPolicy};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharUnit {
    Utf8Byte,
    Codepoint,
    Grapheme,
}

impl CharUnit {
    pub const NAMES: &'static str = "utf8_byte, codepoint, grapheme";

    pub fn name(self) -> &'static str {
        match self {
            CharUnit::Utf8Byte => "utf8_byte",
            CharUnit::Codepoint => "codepoint",
            CharUnit::Grapheme => "grapheme",
        }
    }
}

impl std::str::FromStr for CharUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "utf8_byte" | "byte" => Ok(CharUnit::Utf8Byte),
            "codepoint" => Ok(CharUnit::Codepoint),
            "grapheme" => Ok(CharUnit::Grapheme),
            _ => Err(Error::UnknownName {
                kind: "character unit",
                value: s.to_owned(),
                expected: Self::NAMES,
            }),
        }
    }
}

/// A character-level tokenizer configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharLevelMode {
    pub unit: CharUnit,
    /// Only consulted for [`CharUnit::Grapheme`].
    pub policy: SegmentationPolicy,
    specials_per_sequence: u8,
}

/// One character-level token. Specials carry no text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharToken<'a> {
    Special,
    Byte(u8),
    Text(&'a str),
}

impl CharLevelMode {
    pub const PRESETS: &'static str = "byt5, canine, grapheme";

    pub fn new(unit: CharUnit) -> Self {
        Self {
            unit,
            policy: SegmentationPolicy::default(),
            specials_per_sequence: 0,
        }
    }

    /// `n` synthetic start/end tokens per sequence; at most 2.
    pub fn with_specials(mut self, n: u8) -> Result<Self> {
        if n > 2 {
            return Err(Error::Invalid(format!(
                "specials_per_sequence must be 0, 1 or 2 (got {n})"
            )));
        }
        self.specials_per_sequence = n;
        Ok(self)
    }

    pub fn with_policy(mut self, policy: SegmentationPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn specials_per_sequence(&self) -> u8 {
        self.specials_per_sequence
    }

    /// `byt5` (bytes plus an end token), `canine` (codepoints plus start and end
    /// tokens) or `grapheme` (tailored clusters, no specials).
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "byt5" => Self::new(CharUnit::Utf8Byte).with_specials(1),
            "canine" => Self::new(CharUnit::Codepoint).with_specials(2),
            "grapheme" => Ok(Self::new(CharUnit::Grapheme)),
            _ => Err(Error::UnknownName {
                kind: "character-level preset",
                value: name.to_owned(),
                expected: Self::PRESETS,
            }),
        }
    }

    pub fn name(&self) -> String {
        match self.specials_per_sequence {
            0 => self.unit.name().to_owned(),
            n => format!("{}+{n}", self.unit.name()),
        }
    }
}

pub fn char_tokenize(text: &str, mode: CharLevelMode) -> Vec<CharToken<'_>> {
    let n = usize::from(mode.specials_per_sequence);
    let mut out = Vec::with_capacity(text.len() + n);
    if n == 2 {
        out.push(CharToken::Special);
    }
    match mode.unit {
        CharUnit::Utf8Byte => out.extend(text.bytes().map(CharToken::Byte)),
        CharUnit::Codepoint => out.extend(
            text.char_indices()
                .map(|(i, c)| CharToken::Text(&text[i..i + c.len_utf8()])),
        ),
        CharUnit::Grapheme => out.extend(graphemes(text, mode.policy).map(CharToken::Text)),
    }
    if n >= 1 {
        out.push(CharToken::Special);
    }
    out
}

/// Token count without materializing tokens.
pub fn char_token_count(text: &str, mode: CharLevelMode) -> usize {
    let body = match mode.unit {
        CharUnit::Utf8Byte => text.len(),
        CharUnit::Codepoint => text.chars().count(),
        CharUnit::Grapheme => graphemes(text, mode.policy).count(),
    };
    body + usize::from(mode.specials_per_sequence)
}

/// Inverse of [`char_tokenize`], ignoring specials.
pub fn char_detokenize(tokens: &[CharToken<'_>]) -> String {
    let mut bytes = Vec::new();
    for t in tokens {
        match t {
            CharToken::Special => {}
            CharToken::Byte(b) => bytes.push(*b),
            CharToken::Text(s) => bytes.extend_from_slice(s.as_bytes()),
        }
    }
    String::from_utf8(bytes).expect("tokens come from valid text")
}
