//! Byte, codepoint and grapheme-cluster views of text.
//!
//! Grapheme clusters follow the extended cluster boundary rules without the
//! Indic conjunct rule: a virama stays with the consonant before it, and a
//! following consonant starts a new cluster. [`SegmentationPolicy::ExtendedAbugidaTailored`]
//! adds one tailoring on top: a zero-width joiner followed by a letter from the
//! same South or Southeast Asian script block does not end the cluster, so a
//! Sinhala conjunct such as `ක්‍රී` is one unit.

use std::iter::Peekable;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_segmentation::{GraphemeIndices, UnicodeSegmentation};

pub const ZERO_WIDTH_JOINER: char = '\u{200D}';

/// South and Southeast Asian script blocks where ZWJ requests a conjunct form.
const ABUGIDA_BLOCKS: &[(u32, u32)] = &[
    (0x0900, 0x097F), // Devanagari
    (0x0980, 0x09FF), // Bengali
    (0x0A00, 0x0A7F), // Gurmukhi
    (0x0A80, 0x0AFF), // Gujarati
    (0x0B00, 0x0B7F), // Oriya
    (0x0B80, 0x0BFF), // Tamil
    (0x0C00, 0x0C7F), // Telugu
    (0x0C80, 0x0CFF), // Kannada
    (0x0D00, 0x0D7F), // Malayalam
    (0x0D80, 0x0DFF), // Sinhala
    (0x0E00, 0x0E7F), // Thai
    (0x0E80, 0x0EFF), // Lao
    (0x0F00, 0x0FFF), // Tibetan
    (0x1000, 0x109F), // Myanmar
    (0x1780, 0x17FF), // Khmer
    (0x1A20, 0x1AAF), // Tai Tham
    (0x1B00, 0x1B7F), // Balinese
    (0x1B80, 0x1BBF), // Sundanese
    (0xA8E0, 0xA8FF), // Devanagari Extended
    (0xA980, 0xA9DF), // Javanese
    (0xAA60, 0xAA7F), // Myanmar Extended-A
    (0x111E0, 0x111FF), // Sinhala Archaic Numbers
    (0x11300, 0x1137F), // Grantha
];

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentationPolicy {
    ExtendedDefault,
    #[default]
    ExtendedAbugidaTailored,
}

impl SegmentationPolicy {
    pub const NAMES: &'static str = "extended_default, extended_abugida_tailored";

    pub fn name(self) -> &'static str {
        match self {
            SegmentationPolicy::ExtendedDefault => "extended_default",
            SegmentationPolicy::ExtendedAbugidaTailored => "extended_abugida_tailored",
        }
    }
}

impl std::str::FromStr for SegmentationPolicy {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "extended_default" | "default" => Ok(SegmentationPolicy::ExtendedDefault),
            "extended_abugida_tailored" | "tailored" => {
                Ok(SegmentationPolicy::ExtendedAbugidaTailored)
            }
            _ => Err(crate::Error::UnknownName {
                kind: "segmentation policy",
                value: s.to_owned(),
                expected: Self::NAMES,
            }),
        }
    }
}

/// One grapheme cluster with its codepoint span `[start, end)` in the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cluster<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphemeSegmentation<'a> {
    pub clusters: Vec<Cluster<'a>>,
    pub policy: SegmentationPolicy,
}

impl<'a> GraphemeSegmentation<'a> {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn texts(&self) -> Vec<&'a str> {
        self.clusters.iter().map(|c| c.text).collect()
    }
}

/// Iterator over grapheme cluster slices under a policy.
pub struct Graphemes<'a> {
    text: &'a str,
    inner: Peekable<GraphemeIndices<'a>>,
    tailored: bool,
}

impl<'a> Iterator for Graphemes<'a> {
    type Item = &'a str;

    fn next(&mut self) -> Option<&'a str> {
        let (start, first) = self.inner.next()?;
        let mut end = start + first.len();
        if self.tailored {
            while let Some(&(_, next)) = self.inner.peek() {
                if !joins_across_zwj(&self.text[start..end], next) {
                    break;
                }
                end += next.len();
                self.inner.next();
            }
        }
        Some(&self.text[start..end])
    }
}

pub fn graphemes(text: &str, policy: SegmentationPolicy) -> Graphemes<'_> {
    Graphemes {
        text,
        inner: text.grapheme_indices(true).peekable(),
        tailored: policy == SegmentationPolicy::ExtendedAbugidaTailored,
    }
}

pub fn segment_graphemes(text: &str, policy: SegmentationPolicy) -> GraphemeSegmentation<'_> {
    let mut offset = 0;
    let clusters = graphemes(text, policy)
        .map(|g| {
            let start = offset;
            offset += count_codepoints(g);
            Cluster {
                text: g,
                start,
                end: offset,
            }
        })
        .collect();
    GraphemeSegmentation { clusters, policy }
}

pub fn grapheme_count(text: &str, policy: SegmentationPolicy) -> usize {
    graphemes(text, policy).count()
}

pub fn count_codepoints(text: &str) -> usize {
    text.chars().count()
}

pub fn utf8_byte_length(text: &str) -> usize {
    text.len()
}

fn joins_across_zwj(cluster: &str, next: &str) -> bool {
    let mut rev = cluster.chars().rev();
    if rev.next() != Some(ZERO_WIDTH_JOINER) {
        return false;
    }
    let (Some(before), Some(after)) = (rev.next(), next.chars().next()) else {
        return false;
    };
    is_letter(after)
        && matches!((abugida_block(before), abugida_block(after)), (Some(a), Some(b)) if a == b)
}

fn abugida_block(c: char) -> Option<usize> {
    let cp = c as u32;
    ABUGIDA_BLOCKS
        .iter()
        .position(|&(lo, hi)| (lo..=hi).contains(&cp))
}

fn is_letter(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::UppercaseLetter
            | GeneralCategory::LowercaseLetter
            | GeneralCategory::TitlecaseLetter
            | GeneralCategory::ModifierLetter
            | GeneralCategory::OtherLetter
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAILORED: SegmentationPolicy = SegmentationPolicy::ExtendedAbugidaTailored;
    const DEFAULT: SegmentationPolicy = SegmentationPolicy::ExtendedDefault;

    #[test]
    fn ascii_is_one_cluster_per_letter() {
        let seg = segment_graphemes("hello", TAILORED);
        assert_eq!(seg.texts(), ["h", "e", "l", "l", "o"]);
        assert_eq!(seg.clusters[4].start, 4);
        assert_eq!(seg.clusters[4].end, 5);
    }

    #[test]
    fn tamil_thank_you() {
        for policy in [DEFAULT, TAILORED] {
            let seg = segment_graphemes("நன்றி", policy);
            assert_eq!(seg.texts(), ["ந", "ன்", "றி"]);
        }
    }

    #[test]
    fn hindi_virama_binds_backward_only() {
        let seg = segment_graphemes("धन्यवाद", TAILORED);
        assert_eq!(seg.texts(), ["ध", "न्", "य", "वा", "द"]);
    }

    #[test]
    fn sinhala_thank_you() {
        let seg = segment_graphemes("ස්තූතියි", TAILORED);
        assert_eq!(seg.texts(), ["ස්", "තූ", "ති", "යි"]);
    }

    #[test]
    fn zwj_conjunct_depends_on_policy() {
        let text = "ක්\u{200D}රී";
        assert_eq!(count_codepoints(text), 5);
        assert_eq!(segment_graphemes(text, DEFAULT).len(), 2);
        assert_eq!(segment_graphemes(text, TAILORED).texts(), [text]);
    }

    #[test]
    fn zwj_does_not_join_across_scripts_or_non_letters() {
        // Sinhala virama + ZWJ followed by a Tamil letter.
        assert_eq!(segment_graphemes("ක්\u{200D}ர", TAILORED).len(), 2);
        // ZWJ followed by a digit of the same block.
        assert_eq!(segment_graphemes("क्\u{200D}१", TAILORED).len(), 2);
        // Latin is not an abugida block.
        assert_eq!(segment_graphemes("a\u{200D}b", TAILORED).len(), 2);
    }

    #[test]
    fn empty_text() {
        assert!(segment_graphemes("", TAILORED).is_empty());
        assert_eq!(count_codepoints(""), 0);
        assert_eq!(utf8_byte_length(""), 0);
    }

    #[test]
    fn lengths() {
        assert_eq!(count_codepoints("hi"), 2);
        assert_eq!(count_codepoints("நன்றி"), 5);
        assert_eq!(utf8_byte_length("hi"), 2);
        assert_eq!(utf8_byte_length("த"), 3);
        assert!(utf8_byte_length("ঀ") >= count_codepoints("ঀ"));
    }

    #[test]
    fn policy_names_parse() {
        for p in [DEFAULT, TAILORED] {
            assert_eq!(p.name().parse::<SegmentationPolicy>().unwrap(), p);
        }
        assert!("uax29".parse::<SegmentationPolicy>().is_err());
    }
}
