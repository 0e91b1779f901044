//! Pre-tokenization: splitting text into the chunks a subword model is
//! trained and applied on.
//!
//! The GPT-2 and GPT-4/Llama 3 presets carry the published patterns verbatim.
//! Both end in `\s+(?!\S)|\s+`, which needs lookahead; the matcher here runs
//! the patterns with that tail replaced by a captured `(\s+)` and then hands
//! the last whitespace codepoint of such a run back to the next match when a
//! non-space follows, which is exactly what the lookahead does.

use std::sync::{Arc, OnceLock};

use regex::{CaptureLocations, Regex};
use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::{Error, Result};

/// The GPT-2 pre-tokenization pattern.
pub const GPT2_PATTERN: &str =
    r"'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+";

/// The GPT-4 (cl100k) pattern, also used by Llama 3.
pub const GPT4_LLAMA3_PATTERN: &str = r"(?i:'s|'t|'re|'ve|'m|'ll|'d)|[^\r\n\p{L}\p{N}]?\p{L}+|\p{N}{1,3}| ?[^\s\p{L}\p{N}]+[\r\n]*|\s*[\r\n]+|\s+(?!\S)|\s+";

const GPT2_MATCHER: &str =
    r"'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|(\s+)";

const GPT4_LLAMA3_MATCHER: &str = r"(?i:'s|'t|'re|'ve|'m|'ll|'d)|[^\r\n\p{L}\p{N}]?\p{L}+|\p{N}{1,3}| ?[^\s\p{L}\p{N}]+[\r\n]*|\s*[\r\n]+|(\s+)";

pub const PRESET_NAMES: &str = "whitespace, whitespace_punct, gpt2, gpt4_llama3, identity";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PretokenizerKind {
    Whitespace,
    WhitespacePunct,
    Gpt2Regex,
    Gpt4Llama3Regex,
    Identity,
    CustomRegex,
}

impl PretokenizerKind {
    pub fn name(self) -> &'static str {
        match self {
            PretokenizerKind::Whitespace => "whitespace",
            PretokenizerKind::WhitespacePunct => "whitespace_punct",
            PretokenizerKind::Gpt2Regex => "gpt2",
            PretokenizerKind::Gpt4Llama3Regex => "gpt4_llama3",
            PretokenizerKind::Identity => "identity",
            PretokenizerKind::CustomRegex => "custom_regex",
        }
    }
}

/// A chunk of source text with its codepoint span `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreToken<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone)]
pub struct PretokenizerSpec {
    kind: PretokenizerKind,
    pattern: Option<String>,
    matcher: Option<Arc<Regex>>,
}

impl std::fmt::Debug for PretokenizerSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PretokenizerSpec")
            .field("kind", &self.kind)
            .field("pattern", &self.pattern)
            .finish()
    }
}

impl PartialEq for PretokenizerSpec {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.pattern == other.pattern
    }
}

impl Eq for PretokenizerSpec {}

fn preset_matcher(cell: &'static OnceLock<Arc<Regex>>, src: &str) -> Arc<Regex> {
    cell.get_or_init(|| Arc::new(Regex::new(src).expect("preset pattern compiles")))
        .clone()
}

static GPT2_RE: OnceLock<Arc<Regex>> = OnceLock::new();
static GPT4_RE: OnceLock<Arc<Regex>> = OnceLock::new();

impl PretokenizerSpec {
    pub fn whitespace() -> Self {
        Self::plain(PretokenizerKind::Whitespace)
    }

    pub fn whitespace_punct() -> Self {
        Self::plain(PretokenizerKind::WhitespacePunct)
    }

    pub fn identity() -> Self {
        Self::plain(PretokenizerKind::Identity)
    }

    pub fn gpt2() -> Self {
        Self {
            kind: PretokenizerKind::Gpt2Regex,
            pattern: Some(GPT2_PATTERN.to_owned()),
            matcher: Some(preset_matcher(&GPT2_RE, GPT2_MATCHER)),
        }
    }

    pub fn gpt4_llama3() -> Self {
        Self {
            kind: PretokenizerKind::Gpt4Llama3Regex,
            pattern: Some(GPT4_LLAMA3_PATTERN.to_owned()),
            matcher: Some(preset_matcher(&GPT4_RE, GPT4_LLAMA3_MATCHER)),
        }
    }

    /// A user pattern; pre-tokens are its non-empty matches, unmatched text is dropped.
    pub fn custom(pattern: &str) -> Result<Self> {
        let re = Regex::new(pattern).map_err(|e| Error::Pattern(e.to_string()))?;
        Ok(Self {
            kind: PretokenizerKind::CustomRegex,
            pattern: Some(pattern.to_owned()),
            matcher: Some(Arc::new(re)),
        })
    }

    fn plain(kind: PretokenizerKind) -> Self {
        Self {
            kind,
            pattern: None,
            matcher: None,
        }
    }

    pub fn from_parts(kind: PretokenizerKind, pattern: Option<&str>) -> Result<Self> {
        let spec = match kind {
            PretokenizerKind::Whitespace => Self::whitespace(),
            PretokenizerKind::WhitespacePunct => Self::whitespace_punct(),
            PretokenizerKind::Identity => Self::identity(),
            PretokenizerKind::Gpt2Regex => Self::gpt2(),
            PretokenizerKind::Gpt4Llama3Regex => Self::gpt4_llama3(),
            PretokenizerKind::CustomRegex => {
                let pattern = pattern.ok_or_else(|| {
                    Error::Pattern("custom_regex requires a pattern".to_owned())
                })?;
                return Self::custom(pattern);
            }
        };
        if let (Some(given), Some(published)) = (pattern, spec.pattern()) {
            if given != published {
                return Err(Error::Pattern(format!(
                    "{} carries a fixed pattern; got {given:?}",
                    kind.name()
                )));
            }
        }
        Ok(spec)
    }

    pub fn kind(&self) -> PretokenizerKind {
        self.kind
    }

    pub fn pattern(&self) -> Option<&str> {
        self.pattern.as_deref()
    }

    /// Short identifier used in reports.
    pub fn name(&self) -> &str {
        match self.kind {
            PretokenizerKind::CustomRegex => self.pattern.as_deref().unwrap_or("custom_regex"),
            kind => kind.name(),
        }
    }

    pub fn drops_whitespace(&self) -> bool {
        matches!(
            self.kind,
            PretokenizerKind::Whitespace | PretokenizerKind::WhitespacePunct
        )
    }

    /// Byte ranges of the pre-tokens of `text`, in order.
    pub fn byte_spans(&self, text: &str) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        match self.kind {
            PretokenizerKind::Identity => {
                if !text.is_empty() {
                    out.push((0, text.len()));
                }
            }
            PretokenizerKind::Whitespace => whitespace_spans(text, false, &mut out),
            PretokenizerKind::WhitespacePunct => whitespace_spans(text, true, &mut out),
            PretokenizerKind::Gpt2Regex | PretokenizerKind::Gpt4Llama3Regex => {
                let re = self.matcher.as_ref().expect("regex preset has a matcher");
                published_regex_spans(re, text, &mut out)
            }
            PretokenizerKind::CustomRegex => {
                let re = self.matcher.as_ref().expect("custom spec has a matcher");
                out.extend(
                    re.find_iter(text)
                        .filter(|m| !m.is_empty())
                        .map(|m| (m.start(), m.end())),
                );
            }
        }
        out
    }

    /// Pre-token slices without span bookkeeping.
    pub fn split<'a>(&self, text: &'a str) -> Vec<&'a str> {
        self.byte_spans(text)
            .into_iter()
            .map(|(s, e)| &text[s..e])
            .collect()
    }

    pub fn count(&self, text: &str) -> usize {
        self.byte_spans(text).len()
    }
}

impl Serialize for PretokenizerSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpecRepr {
            kind: self.kind,
            pattern: self.pattern.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PretokenizerSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SpecRepr::deserialize(d)?;
        PretokenizerSpec::from_parts(repr.kind, repr.pattern.as_deref())
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecRepr {
    kind: PretokenizerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pattern: Option<String>,
}

pub fn preset_spec(name: &str) -> Result<PretokenizerSpec> {
    match name {
        "whitespace" => Ok(PretokenizerSpec::whitespace()),
        "whitespace_punct" => Ok(PretokenizerSpec::whitespace_punct()),
        "gpt2" | "gpt2_regex" => Ok(PretokenizerSpec::gpt2()),
        "gpt4_llama3" | "gpt4_llama3_regex" => Ok(PretokenizerSpec::gpt4_llama3()),
        "identity" => Ok(PretokenizerSpec::identity()),
        _ => Err(Error::UnknownPreset {
            name: name.to_owned(),
            valid: PRESET_NAMES.to_owned(),
        }),
    }
}

/// Pre-tokens of `text` with codepoint spans.
pub fn pretokenize<'a>(text: &'a str, spec: &PretokenizerSpec) -> Vec<PreToken<'a>> {
    let mut byte_pos = 0;
    let mut cp_pos = 0;
    spec.byte_spans(text)
        .into_iter()
        .map(|(s, e)| {
            cp_pos += text[byte_pos..s].chars().count();
            let start = cp_pos;
            cp_pos += text[s..e].chars().count();
            byte_pos = e;
            PreToken {
                text: &text[s..e],
                start,
                end: cp_pos,
            }
        })
        .collect()
}

fn whitespace_spans(text: &str, isolate_punct: bool, out: &mut Vec<(usize, usize)>) {
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, i));
            }
        } else if isolate_punct && is_punct_or_symbol(c) {
            if let Some(s) = start.take() {
                out.push((s, i));
            }
            out.push((i, i + c.len_utf8()));
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, text.len()));
    }
}

fn is_punct_or_symbol(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
            | MathSymbol
            | CurrencySymbol
            | ModifierSymbol
            | OtherSymbol
    )
}

fn published_regex_spans(re: &Regex, text: &str, out: &mut Vec<(usize, usize)>) {
    let mut locs: CaptureLocations = re.capture_locations();
    let mut pos = 0;
    while pos < text.len() {
        let Some(m) = re.captures_read_at(&mut locs, text, pos) else {
            break;
        };
        let (start, mut end) = (m.start(), m.end());
        if locs.get(1).is_some() && text[end..].chars().next().is_some_and(|c| !c.is_whitespace())
        {
            // `\s+(?!\S)` stops one codepoint short of a following non-space.
            if let Some((last, _)) = text[start..end].char_indices().last() {
                if last > 0 {
                    end = start + last;
                }
            }
        }
        out.push((start, end));
        pos = end;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(text: &str, spec: &PretokenizerSpec) -> Vec<String> {
        spec.split(text).into_iter().map(str::to_owned).collect()
    }

    #[test]
    fn table_one_english() {
        assert_eq!(texts("hello!", &PretokenizerSpec::whitespace()), ["hello!"]);
        assert_eq!(texts("hello!", &PretokenizerSpec::gpt2()), ["hello", "!"]);
        assert_eq!(
            texts("hello!", &PretokenizerSpec::whitespace_punct()),
            ["hello", "!"]
        );
    }

    #[test]
    fn whitespace_words() {
        assert_eq!(
            texts("Hello World", &PretokenizerSpec::whitespace()),
            ["Hello", "World"]
        );
        assert_eq!(
            texts("  a \t b\n", &PretokenizerSpec::whitespace()),
            ["a", "b"]
        );
    }

    #[test]
    fn whitespace_punct_tamil() {
        assert_eq!(
            texts("வணக்கம்!", &PretokenizerSpec::whitespace_punct()),
            ["வணக்கம்", "!"]
        );
        assert_eq!(
            texts("a,,b $5", &PretokenizerSpec::whitespace_punct()),
            ["a", ",", ",", "b", "$", "5"]
        );
    }

    #[test]
    fn gpt2_splits_tamil_at_marks() {
        assert!(PretokenizerSpec::gpt2().count("நன்றி") > 1);
    }

    #[test]
    fn trailing_space_lookahead() {
        let gpt2 = PretokenizerSpec::gpt2();
        assert_eq!(texts("a   b", &gpt2), ["a", "  ", " b"]);
        assert_eq!(texts("a ", &gpt2), ["a", " "]);
        assert_eq!(texts("a\nb", &gpt2), ["a", "\n", "b"]);
        assert_eq!(texts("a  \n  b", &gpt2), ["a", "  \n ", " b"]);
    }

    #[test]
    fn identity_is_whole_text() {
        assert_eq!(texts("a b", &preset_spec("identity").unwrap()), ["a b"]);
        assert!(texts("", &PretokenizerSpec::identity()).is_empty());
    }

    #[test]
    fn preset_lookup() {
        assert_eq!(preset_spec("gpt2").unwrap().pattern(), Some(GPT2_PATTERN));
        assert!(preset_spec("whitespace").unwrap().drops_whitespace());
        assert!(!preset_spec("gpt4_llama3").unwrap().drops_whitespace());
        let err = preset_spec("bert").unwrap_err().to_string();
        assert!(err.contains("whitespace_punct"), "{err}");
    }

    #[test]
    fn custom_pattern_errors_name_the_construct() {
        let err = PretokenizerSpec::custom(r"(\p{L}+").unwrap_err().to_string();
        assert!(err.contains("unclosed group"), "{err}");
        let ok = PretokenizerSpec::custom(r"\p{L}+").unwrap();
        assert_eq!(texts("ab, cd", &ok), ["ab", "cd"]);
    }

    #[test]
    fn spans_are_codepoint_offsets() {
        let toks = pretokenize("நன்றி hi", &PretokenizerSpec::whitespace());
        assert_eq!((toks[0].start, toks[0].end), (0, 5));
        assert_eq!((toks[1].start, toks[1].end), (6, 8));
    }

    #[test]
    fn serde_round_trip_and_pattern_check() {
        let spec = PretokenizerSpec::gpt4_llama3();
        let json = serde_json::to_string(&spec).unwrap();
        let back: PretokenizerSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let tampered = r#"{"kind":"gpt2_regex","pattern":"\\s+"}"#;
        assert!(serde_json::from_str::<PretokenizerSpec>(tampered).is_err());
    }
}
