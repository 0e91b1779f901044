//! Compression ratio, tokenization parity and their pre-tokenization bounds.
//!
//! Compression ratio is text length over token count; parity is the token
//! count of a sentence over that of its aligned pivot translation. The bounds
//! replace token counts with pre-token counts, since no learned token can span
//! two pre-tokens.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graphemes::{grapheme_count, SegmentationPolicy};
use crate::pretokenize::PretokenizerSpec;
use crate::{Error, Result};

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthUnit {
    #[default]
    Codepoint,
    Utf8Byte,
    /// Tailored grapheme clusters.
    Grapheme,
}

impl LengthUnit {
    pub const NAMES: &'static str = "codepoint, utf8_byte, grapheme";

    pub fn name(self) -> &'static str {
        match self {
            LengthUnit::Codepoint => "codepoint",
            LengthUnit::Utf8Byte => "utf8_byte",
            LengthUnit::Grapheme => "grapheme",
        }
    }

    pub fn length(self, text: &str) -> u64 {
        (match self {
            LengthUnit::Codepoint => text.chars().count(),
            LengthUnit::Utf8Byte => text.len(),
            LengthUnit::Grapheme => grapheme_count(text, SegmentationPolicy::ExtendedAbugidaTailored),
        }) as u64
    }
}

impl std::str::FromStr for LengthUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "codepoint" => Ok(LengthUnit::Codepoint),
            "utf8_byte" => Ok(LengthUnit::Utf8Byte),
            "grapheme" => Ok(LengthUnit::Grapheme),
            _ => Err(Error::UnknownName {
                kind: "length unit",
                value: s.to_owned(),
                expected: Self::NAMES,
            }),
        }
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Ratio of corpus totals.
    #[default]
    Micro,
    /// Mean of per-line ratios.
    Macro,
}

impl Aggregation {
    pub const NAMES: &'static str = "micro, macro";

    pub fn name(self) -> &'static str {
        match self {
            Aggregation::Micro => "micro",
            Aggregation::Macro => "macro",
        }
    }
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(Aggregation::Micro),
            "macro" => Ok(Aggregation::Macro),
            _ => Err(Error::UnknownName {
                kind: "aggregation",
                value: s.to_owned(),
                expected: Self::NAMES,
            }),
        }
    }
}

/// A ratio together with the raw totals it was computed from.
///
/// For micro aggregation `value == numerator / denominator`; for macro the
/// totals are still the raw sums, and `value` is the mean of per-line ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub value: f64,
    pub numerator: u64,
    pub denominator: u64,
    pub aggregation: Aggregation,
}

/// Aggregates aligned `(numerator, denominator)` pairs. `what` names the
/// denominator side in the zero-division error.
fn aggregate(pairs: &[(u64, u64)], aggregation: Aggregation, what: &'static str) -> Result<Ratio> {
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let numerator: u64 = pairs.iter().map(|p| p.0).sum();
    let denominator: u64 = pairs.iter().map(|p| p.1).sum();
    let value = match aggregation {
        Aggregation::Micro => {
            if denominator == 0 {
                return Err(Error::ZeroTokens { what, line: 1 });
            }
            numerator as f64 / denominator as f64
        }
        Aggregation::Macro => {
            let mut sum = 0.0;
            for (i, &(n, d)) in pairs.iter().enumerate() {
                if d == 0 {
                    return Err(Error::ZeroTokens { what, line: i + 1 });
                }
                sum += n as f64 / d as f64;
            }
            sum / pairs.len() as f64
        }
    };
    Ok(Ratio {
        value,
        numerator,
        denominator,
        aggregation,
    })
}

pub fn line_lengths<S: AsRef<str> + Sync>(texts: &[S], unit: LengthUnit) -> Vec<u64> {
    texts.par_iter().map(|t| unit.length(t.as_ref())).collect()
}

/// Text length over token count. Every line needs at least one token.
pub fn compression_ratio<S: AsRef<str> + Sync>(
    texts: &[S],
    token_counts: &[usize],
    unit: LengthUnit,
    aggregation: Aggregation,
) -> Result<Ratio> {
    if texts.len() != token_counts.len() {
        return Err(Error::LengthMismatch {
            texts: texts.len(),
            counts: token_counts.len(),
        });
    }
    if let Some(i) = token_counts.iter().position(|&c| c == 0) {
        return Err(Error::ZeroTokens {
            what: "tokenized line",
            line: i + 1,
        });
    }
    let pairs: Vec<(u64, u64)> = line_lengths(texts, unit)
        .into_iter()
        .zip(token_counts.iter().map(|&c| c as u64))
        .collect();
    aggregate(&pairs, aggregation, "tokenized line")
}

/// Upper bound on compression ratio for any tokenizer using `spec`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRatio {
    pub ratio: Ratio,
    /// 1-based numbers of lines with no pre-tokens, left out of the ratio.
    pub excluded_lines: Vec<usize>,
}

pub fn cr_max<S: AsRef<str> + Sync>(
    spec: &PretokenizerSpec,
    texts: &[S],
    unit: LengthUnit,
    aggregation: Aggregation,
) -> Result<BoundRatio> {
    let per_line: Vec<(u64, u64)> = texts
        .par_iter()
        .map(|t| {
            let t = t.as_ref();
            (unit.length(t), spec.count(t) as u64)
        })
        .collect();
    let mut excluded_lines = Vec::new();
    let mut kept = Vec::with_capacity(per_line.len());
    for (i, p) in per_line.into_iter().enumerate() {
        if p.1 == 0 {
            excluded_lines.push(i + 1);
        } else {
            kept.push(p);
        }
    }
    Ok(BoundRatio {
        ratio: aggregate(&kept, aggregation, "pre-tokenized line")?,
        excluded_lines,
    })
}

/// Line-aligned translations, one line list per language.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelCorpus {
    languages: Vec<String>,
    lines: Vec<Vec<String>>,
}

impl ParallelCorpus {
    pub fn new(sides: Vec<(String, Vec<String>)>) -> Result<Self> {
        let mut languages = Vec::new();
        let mut lines: Vec<Vec<String>> = Vec::new();
        for (lang, side) in sides {
            if let (Some(first), Some(first_lines)) = (languages.first(), lines.first()) {
                if side.len() != first_lines.len() {
                    return Err(Error::Misaligned {
                        lang_a: String::clone(first),
                        count_a: first_lines.len(),
                        lang_b: lang,
                        count_b: side.len(),
                    });
                }
            }
            if let Some(i) = side.iter().position(|l| l.is_empty()) {
                return Err(Error::EmptyLine { lang, line: i + 1 });
            }
            if languages.contains(&lang) {
                return Err(Error::Invalid(format!("language '{lang}' given twice")));
            }
            languages.push(lang);
            lines.push(side);
        }
        Ok(Self { languages, lines })
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn len(&self) -> usize {
        self.lines.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lines(&self, lang: &str) -> Result<&[String]> {
        self.languages
            .iter()
            .position(|l| l == lang)
            .map(|i| self.lines[i].as_slice())
            .ok_or_else(|| Error::UnknownLanguage(lang.to_owned()))
    }
}

/// Token counts of `lang` over those of the aligned `pivot` lines.
pub fn tokenization_parity<F>(
    corpus: &ParallelCorpus,
    tokenize: F,
    lang: &str,
    pivot: &str,
    aggregation: Aggregation,
) -> Result<Ratio>
where
    F: Fn(&str) -> usize + Sync,
{
    let a = corpus.lines(lang)?;
    let b = corpus.lines(pivot)?;
    let counts = |lines: &[String]| -> Vec<u64> {
        lines.par_iter().map(|l| tokenize(l) as u64).collect()
    };
    parity_from_counts(&counts(a), &counts(b), aggregation)
}

pub fn parity_from_counts(lang: &[u64], pivot: &[u64], aggregation: Aggregation) -> Result<Ratio> {
    if lang.len() != pivot.len() {
        return Err(Error::LengthMismatch {
            texts: lang.len(),
            counts: pivot.len(),
        });
    }
    let pairs: Vec<(u64, u64)> = lang.iter().copied().zip(pivot.iter().copied()).collect();
    aggregate(&pairs, aggregation, "pivot line")
}

/// Parity computed from pre-token counts.
pub fn tp_min(
    spec: &PretokenizerSpec,
    corpus: &ParallelCorpus,
    lang: &str,
    pivot: &str,
    aggregation: Aggregation,
) -> Result<Ratio> {
    tokenization_parity(corpus, |t| spec.count(t), lang, pivot, aggregation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "CR")]
    Cr,
    #[serde(rename = "TP")]
    Tp,
    #[serde(rename = "CR_max")]
    CrMax,
    #[serde(rename = "TP_min")]
    TpMin,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Cr => "CR",
            Metric::Tp => "TP",
            Metric::CrMax => "CR_max",
            Metric::TpMin => "TP_min",
        }
    }
}

/// One report line. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub tokenizer: String,
    pub language: String,
    pub metric: Metric,
    pub value: f64,
    pub numerator: u64,
    pub denominator: u64,
    pub unit: LengthUnit,
    pub aggregation: Aggregation,
}

impl MetricRow {
    pub fn new(tokenizer: &str, language: &str, metric: Metric, ratio: Ratio, unit: LengthUnit) -> Self {
        Self {
            tokenizer: tokenizer.to_owned(),
            language: language.to_owned(),
            metric,
            value: ratio.value,
            numerator: ratio.numerator,
            denominator: ratio.denominator,
            unit,
            aggregation: ratio.aggregation,
        }
    }

    fn cells(&self) -> [String; 8] {
        [
            self.tokenizer.clone(),
            self.language.clone(),
            self.metric.name().to_owned(),
            format!("{:.2}", self.value),
            self.numerator.to_string(),
            self.denominator.to_string(),
            self.unit.name().to_owned(),
            self.aggregation.name().to_owned(),
        ]
    }
}

pub const COLUMNS: [&str; 8] = [
    "tokenizer",
    "language",
    "metric",
    "value",
    "numerator",
    "denominator",
    "unit",
    "aggregation",
];

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Tsv,
    Json,
    Md,
}

impl ReportFormat {
    pub const NAMES: &'static str = "tsv, json, md";
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(ReportFormat::Tsv),
            "json" => Ok(ReportFormat::Json),
            "md" | "markdown" => Ok(ReportFormat::Md),
            _ => Err(Error::UnknownName {
                kind: "report format",
                value: s.to_owned(),
                expected: Self::NAMES,
            }),
        }
    }
}

/// Renders rows as TSV, a JSON array of row objects, or a markdown table.
/// Values show two decimals in TSV and markdown; JSON keeps full precision.
pub fn emit_report(rows: &[MetricRow], format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Tsv => {
            out.push_str(&COLUMNS.join("\t"));
            out.push('\n');
            for row in rows {
                out.push_str(&row.cells().join("\t"));
                out.push('\n');
            }
        }
        ReportFormat::Json => {
            out = serde_json::to_string_pretty(rows).expect("rows serialize");
            out.push('\n');
        }
        ReportFormat::Md => {
            let _ = writeln!(out, "| {} |", COLUMNS.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(COLUMNS.len()));
            for row in rows {
                let _ = writeln!(out, "| {} |", row.cells().join(" | "));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_codepoints_two_tokens() {
        let r = compression_ratio(&["abcdefghij"], &[2], LengthUnit::Codepoint, Aggregation::Micro).unwrap();
        assert_eq!(r.value, 5.0);
        assert_eq!((r.numerator, r.denominator), (10, 2));
    }

    #[test]
    fn micro_and_macro_differ() {
        let texts = ["aaaa", "aa"];
        let micro = compression_ratio(&texts, &[1, 2], LengthUnit::Codepoint, Aggregation::Micro).unwrap();
        let macro_ = compression_ratio(&texts, &[1, 2], LengthUnit::Codepoint, Aggregation::Macro).unwrap();
        assert_eq!(micro.value, 2.0);
        assert_eq!(macro_.value, 2.5);
        assert_eq!(macro_.numerator, 6);
    }

    #[test]
    fn zero_tokens_are_rejected() {
        let err = compression_ratio(&["a", "b"], &[1, 0], LengthUnit::Codepoint, Aggregation::Micro).unwrap_err();
        assert!(matches!(err, Error::ZeroTokens { line: 2, .. }));
        let err = compression_ratio(&["a"], &[1, 1], LengthUnit::Codepoint, Aggregation::Micro).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
    }

    #[test]
    fn units_order_lengths() {
        let t = "நன்றி";
        assert_eq!(LengthUnit::Utf8Byte.length(t), 15);
        assert_eq!(LengthUnit::Codepoint.length(t), 5);
        assert_eq!(LengthUnit::Grapheme.length(t), 3);
    }

    #[test]
    fn cr_max_identity_is_line_length() {
        let r = cr_max(&PretokenizerSpec::identity(), &["hello world"], LengthUnit::Codepoint, Aggregation::Micro).unwrap();
        assert_eq!(r.ratio.value, 11.0);
    }

    #[test]
    fn cr_max_excludes_empty_lines() {
        let r = cr_max(&PretokenizerSpec::whitespace(), &["a b", "   ", "cd"], LengthUnit::Codepoint, Aggregation::Micro).unwrap();
        assert_eq!(r.excluded_lines, [2]);
        assert_eq!((r.ratio.numerator, r.ratio.denominator), (5, 3));
    }

    fn corpus() -> ParallelCorpus {
        ParallelCorpus::new(vec![
            ("en".into(), vec!["a b".into(), "c".into()]),
            ("xx".into(), vec!["a b c d".into(), "e f".into()]),
        ])
        .unwrap()
    }

    #[test]
    fn parity_against_self_is_one() {
        let c = corpus();
        for agg in [Aggregation::Micro, Aggregation::Macro] {
            let r = tp_min(&PretokenizerSpec::whitespace(), &c, "xx", "xx", agg).unwrap();
            assert_eq!(r.value, 1.0);
        }
        let r = tp_min(&PretokenizerSpec::whitespace(), &c, "xx", "en", Aggregation::Micro).unwrap();
        assert_eq!(r.value, 2.0);
    }

    #[test]
    fn corpus_validation() {
        let err = ParallelCorpus::new(vec![
            ("en".into(), vec!["a".into()]),
            ("ta".into(), vec!["a".into(), "b".into()]),
        ])
        .unwrap_err();
        assert_eq!(err.to_string(), "misaligned parallel corpus: 'en' has 1 lines, 'ta' has 2");
        assert!(ParallelCorpus::new(vec![("en".into(), vec!["".into()])]).is_err());
        assert!(matches!(corpus().lines("fr"), Err(Error::UnknownLanguage(_))));
    }

    #[test]
    fn tsv_has_eight_columns() {
        let r = compression_ratio(&["abc"], &[2], LengthUnit::Codepoint, Aggregation::Micro).unwrap();
        let row = MetricRow::new("gpt2", "en", Metric::Cr, r, LengthUnit::Codepoint);
        let tsv = emit_report(std::slice::from_ref(&row), ReportFormat::Tsv);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "gpt2\ten\tCR\t1.50\t3\t2\tcodepoint\tmicro");
        let md = emit_report(std::slice::from_ref(&row), ReportFormat::Md);
        assert!(md.contains("| gpt2 | en | CR | 1.50 |"));
        let json = emit_report(std::slice::from_ref(&row), ReportFormat::Json);
        let back: Vec<MetricRow> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, [row]);
    }
}
