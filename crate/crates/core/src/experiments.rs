//! End-to-end evaluation pipelines shared by the CLI and the acceptance suite.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::charlevel::{char_token_count, CharLevelMode};
use crate::corpus::read_lines;
use crate::metrics::{
    compression_ratio, cr_max, parity_from_counts, tp_min, Aggregation, LengthUnit, Metric,
    MetricRow, ParallelCorpus, Ratio,
};
use crate::pretokenize::{preset_spec, PretokenizerSpec};
use crate::subword::{
    train_bpe, train_gpe, train_unigram, train_wordpiece, Algorithm, AtomicMode, TokenizerModel,
    TrainOptions, UnknownPolicy,
};
use crate::{Error, Result};

/// Short language codes and their FLORES-style file stems.
pub const FLORES_LANGUAGES: [(&str, &str); 4] = [
    ("en", "eng_Latn"),
    ("ta", "tam_Taml"),
    ("si", "sin_Sinh"),
    ("hi", "hin_Deva"),
];

pub const PIVOT: &str = "en";

pub const BOUND_PRESETS: [&str; 4] = ["gpt2", "gpt4_llama3", "whitespace", "whitespace_punct"];

/// Reference pre-tokenization bounds, in `FLORES_LANGUAGES` order.
pub const REFERENCE_CR_MAX: [(&str, [f64; 4]); 4] = [
    ("gpt2", [5.26, 1.36, 1.55, 1.56]),
    ("gpt4_llama3", [5.23, 2.13, 2.16, 2.04]),
    ("whitespace", [6.06, 9.21, 6.34, 5.13]),
    ("whitespace_punct", [5.22, 7.77, 5.63, 4.59]),
];

/// Reference minimum parity against English, for ta, si, hi.
pub const REFERENCE_TP_MIN: [(&str, [f64; 3]); 4] = [
    ("gpt2", [4.54, 3.41, 3.38]),
    ("gpt4_llama3", [2.89, 2.42, 2.56]),
    ("whitespace", [0.78, 0.96, 1.18]),
    ("whitespace_punct", [0.80, 0.93, 1.13]),
];

/// Reference character-level compression ratios (en, ta, si, hi).
pub const REFERENCE_CHAR_CR: [(&str, [f64; 4]); 3] = [
    ("canine", [0.98, 0.99, 0.98, 0.98]),
    ("byt5", [0.99, 0.37, 0.38, 0.39]),
    ("grapheme", [1.0, 1.55, 1.41, 1.45]),
];

/// Reference character-level parity against English (ta, si, hi).
pub const REFERENCE_CHAR_TP: [(&str, [f64; 3]); 3] = [
    ("canine", [1.17, 1.0, 1.0]),
    ("byt5", [3.2, 2.62, 2.55]),
    ("grapheme", [0.76, 0.71, 0.69]),
];

/// Reference Tamil compression ratios for trainers at a 5k vocabulary.
pub const REFERENCE_TRAINED_CR: [(&str, f64); 5] = [
    ("bpe", 4.32),
    ("unigram", 4.31),
    ("wordpiece", 4.12),
    ("gpe", 4.36),
    ("bpe_gpt2", 1.36),
];

/// Finds the file for `code` (a short code such as `ta`, or a stem such as
/// `tam_Taml`) in `dir` or `dir/dev`.
pub fn resolve_flores_file(dir: &Path, code: &str) -> Result<PathBuf> {
    let stem = FLORES_LANGUAGES
        .iter()
        .find(|(short, _)| *short == code)
        .map(|(_, stem)| *stem);
    let mut names = vec![code.to_owned(), format!("{code}.txt"), format!("{code}.dev")];
    if let Some(stem) = stem {
        names.extend([stem.to_owned(), format!("{stem}.dev"), format!("{stem}.txt")]);
    }
    for base in [dir.to_path_buf(), dir.join("dev")] {
        for name in &names {
            let p = base.join(name);
            if p.is_file() {
                return Ok(p);
            }
        }
    }
    Err(Error::Invalid(format!(
        "no file for language '{code}' under {} (tried {})",
        dir.display(),
        names.join(", ")
    )))
}

/// Loads aligned files; returns the corpus and the files used.
pub fn load_parallel(
    files: &[(String, PathBuf)],
    nfc: bool,
) -> Result<ParallelCorpus> {
    let sides = files
        .iter()
        .map(|(lang, path)| Ok((lang.clone(), read_lines(path, nfc)?)))
        .collect::<Result<Vec<_>>>()?;
    ParallelCorpus::new(sides)
}

pub fn flores_files(dir: &Path, langs: &[&str]) -> Result<Vec<(String, PathBuf)>> {
    langs
        .iter()
        .map(|l| Ok(((*l).to_owned(), resolve_flores_file(dir, l)?)))
        .collect()
}

/// Output of a pipeline: report rows plus human-readable notes.
#[derive(Debug, Default, Clone)]
pub struct Outcome {
    pub rows: Vec<MetricRow>,
    pub notes: Vec<String>,
}

/// CR_max for every preset and language, and TP_min against `pivot` when the
/// corpus holds it.
pub fn pretokenization_bounds(
    corpus: &ParallelCorpus,
    presets: &[PretokenizerSpec],
    unit: LengthUnit,
    aggregation: Aggregation,
    pivot: Option<&str>,
) -> Result<Outcome> {
    let mut out = Outcome::default();
    for spec in presets {
        for lang in corpus.languages() {
            let bound = cr_max(spec, corpus.lines(lang)?, unit, aggregation)?;
            if !bound.excluded_lines.is_empty() {
                out.notes.push(format!(
                    "{}/{lang}: {} line(s) without pre-tokens excluded: {:?}",
                    spec.name(),
                    bound.excluded_lines.len(),
                    bound.excluded_lines
                ));
            }
            out.rows
                .push(MetricRow::new(spec.name(), lang, Metric::CrMax, bound.ratio, unit));
        }
        if let Some(pivot) = pivot {
            for lang in corpus.languages().iter().filter(|l| *l != pivot) {
                let r = tp_min(spec, corpus, lang, pivot, aggregation)?;
                out.rows.push(MetricRow::new(spec.name(), lang, Metric::TpMin, r, unit));
            }
        }
    }
    Ok(out)
}

/// Something that turns a line into a token count.
pub trait Counter: Sync {
    fn name(&self) -> String;
    fn count(&self, text: &str) -> usize;
}

impl Counter for TokenizerModel {
    fn name(&self) -> String {
        format!("{}/{}", self.algorithm().name(), self.pretokenizer().name())
    }

    fn count(&self, text: &str) -> usize {
        self.token_count(text)
    }
}

/// A character-level mode under a display name.
pub struct NamedChar(pub String, pub CharLevelMode);

impl Counter for NamedChar {
    fn name(&self) -> String {
        self.0.clone()
    }

    fn count(&self, text: &str) -> usize {
        char_token_count(text, self.1)
    }
}

fn line_counts(counter: &dyn Counter, lines: &[String]) -> Vec<usize> {
    use rayon::prelude::*;
    lines.par_iter().map(|l| counter.count(l)).collect()
}

/// CR per language and TP against `pivot` for one tokenizer, under `name`.
pub fn evaluate(
    name: &str,
    counter: &dyn Counter,
    corpus: &ParallelCorpus,
    unit: LengthUnit,
    aggregation: Aggregation,
    pivot: Option<&str>,
) -> Result<Vec<MetricRow>> {
    let mut rows = Vec::new();
    let mut counts = Vec::new();
    for lang in corpus.languages() {
        let lines = corpus.lines(lang)?;
        let c = line_counts(counter, lines);
        let r = compression_ratio(lines, &c, unit, aggregation)?;
        rows.push(MetricRow::new(name, lang, Metric::Cr, r, unit));
        counts.push((lang.clone(), c));
    }
    if let Some(pivot) = pivot {
        let base: Vec<u64> = counts
            .iter()
            .find(|(l, _)| l == pivot)
            .map(|(_, c)| c.iter().map(|&x| x as u64).collect())
            .ok_or_else(|| Error::UnknownLanguage(pivot.to_owned()))?;
        for (lang, c) in counts.iter().filter(|(l, _)| l != pivot) {
            let c: Vec<u64> = c.iter().map(|&x| x as u64).collect();
            let r = parity_from_counts(&c, &base, aggregation)?;
            rows.push(MetricRow::new(name, lang, Metric::Tp, r, unit));
        }
    }
    Ok(rows)
}

/// The three character-level tokenizers compared against subword models.
pub fn charlevel_presets() -> Vec<NamedChar> {
    ["canine", "byt5", "grapheme"]
        .into_iter()
        .map(|n| NamedChar(n.to_owned(), CharLevelMode::preset(n).expect("known preset")))
        .collect()
}

/// One trainer configuration of the training experiment.
#[derive(Debug, Clone)]
pub struct TrainerConfig {
    pub name: &'static str,
    pub algorithm: Algorithm,
    pub preset: &'static str,
}

/// BPE, Unigram, WordPiece and GPE with whitespace pre-tokenization, plus BPE with GPT-2 regex.
pub fn training_configs() -> Vec<TrainerConfig> {
    [
        ("bpe", Algorithm::Bpe, "whitespace"),
        ("unigram", Algorithm::Unigram, "whitespace"),
        ("wordpiece", Algorithm::Wordpiece, "whitespace"),
        ("gpe", Algorithm::Gpe, "whitespace"),
        ("bpe_gpt2", Algorithm::Bpe, "gpt2"),
    ]
    .into_iter()
    .map(|(name, algorithm, preset)| TrainerConfig {
        name,
        algorithm,
        preset,
    })
    .collect()
}

/// Options used by the training experiment: codepoint atoms for the
/// baselines, grapheme atoms for GPE, and `<unk>` for unseen material so the
/// whole budget goes to learned units.
pub fn experiment_options(algorithm: Algorithm, vocab_size: usize) -> TrainOptions {
    let opts = match algorithm {
        Algorithm::Gpe => TrainOptions::gpe(vocab_size),
        Algorithm::Bpe => TrainOptions::bpe(vocab_size).atomic_mode(AtomicMode::Codepoint),
        Algorithm::Wordpiece => TrainOptions::wordpiece(vocab_size),
        Algorithm::Unigram => TrainOptions::unigram(vocab_size),
    };
    opts.unknown_policy(UnknownPolicy::UnkToken)
}

pub fn train<S: AsRef<str> + Sync>(
    algorithm: Algorithm,
    lines: &[S],
    spec: &PretokenizerSpec,
    opts: &TrainOptions,
) -> Result<TokenizerModel> {
    match algorithm {
        Algorithm::Bpe => train_bpe(lines, spec, opts),
        Algorithm::Gpe => train_gpe(lines, spec, opts),
        Algorithm::Wordpiece => train_wordpiece(lines, spec, opts),
        Algorithm::Unigram => train_unigram(lines, spec, opts),
    }
}

#[derive(Debug, Clone)]
pub struct TrainedResult {
    pub name: &'static str,
    pub cr: Ratio,
    /// Bound for the same pre-tokenizer on the same evaluation lines.
    pub cr_max: Ratio,
    pub vocab_size: usize,
    pub seconds: f64,
}

/// Trains every configuration on `train_lines` and measures CR on `eval_lines`.
pub fn training_experiment(
    train_lines: &[String],
    eval_lines: &[String],
    vocab_size: usize,
    unit: LengthUnit,
    aggregation: Aggregation,
) -> Result<Vec<TrainedResult>> {
    let mut out = Vec::new();
    for cfg in training_configs() {
        let spec = preset_spec(cfg.preset)?;
        let opts = experiment_options(cfg.algorithm, vocab_size);
        let start = Instant::now();
        let model = train(cfg.algorithm, train_lines, &spec, &opts)?;
        let seconds = start.elapsed().as_secs_f64();
        let counts = line_counts(&model, eval_lines);
        let cr = compression_ratio(eval_lines, &counts, unit, aggregation)?;
        let bound = cr_max(&spec, eval_lines, unit, aggregation)?;
        out.push(TrainedResult {
            name: cfg.name,
            cr,
            cr_max: bound.ratio,
            vocab_size: model.vocab_size(),
            seconds,
        });
    }
    Ok(out)
}

pub fn training_rows(results: &[TrainedResult], lang: &str, unit: LengthUnit) -> Vec<MetricRow> {
    results
        .iter()
        .map(|r| MetricRow::new(r.name, lang, Metric::Cr, r.cr, unit))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> ParallelCorpus {
        ParallelCorpus::new(vec![
            ("en".into(), vec!["Thank you!".into(), "Hello world".into()]),
            ("ta".into(), vec!["நன்றி!".into(), "வணக்கம் உலகம்".into()]),
        ])
        .unwrap()
    }

    #[test]
    fn bound_rows_cover_presets_and_languages() {
        let presets: Vec<_> = BOUND_PRESETS.iter().map(|p| preset_spec(p).unwrap()).collect();
        let out = pretokenization_bounds(&corpus(), &presets, LengthUnit::Codepoint, Aggregation::Micro, Some("en"))
            .unwrap();
        let cr: Vec<_> = out.rows.iter().filter(|r| r.metric == Metric::CrMax).collect();
        assert_eq!(cr.len(), 8);
        assert_eq!(out.rows.len(), 12);
        let ws_en = cr.iter().find(|r| r.tokenizer == "whitespace" && r.language == "en").unwrap();
        assert_eq!((ws_en.numerator, ws_en.denominator), (21, 4));
    }

    #[test]
    fn charlevel_parity_of_pivot_is_absent() {
        let rows = evaluate("grapheme", &charlevel_presets()[2], &corpus(), LengthUnit::Codepoint, Aggregation::Micro, Some("en"))
            .unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].value, 1.0);
        assert!(rows[1].value > 1.0);
    }

    #[test]
    fn resolves_flores_names() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("dev")).unwrap();
        std::fs::write(dir.path().join("dev/tam_Taml.dev"), "x\n").unwrap();
        std::fs::write(dir.path().join("en.txt"), "x\n").unwrap();
        assert!(resolve_flores_file(dir.path(), "ta").unwrap().ends_with("dev/tam_Taml.dev"));
        assert!(resolve_flores_file(dir.path(), "en").unwrap().ends_with("en.txt"));
        assert!(resolve_flores_file(dir.path(), "si").is_err());
    }
}
