use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use graphemetok::charlevel::{CharLevelMode, CharUnit};
use graphemetok::corpus::{digest_lines, read_lines, sample_lines, sha256_hex, write_lines, DEFAULT_SEED};
use graphemetok::experiments::{
    self, charlevel_presets, evaluate, flores_files, load_parallel, pretokenization_bounds,
    training_experiment, training_rows, NamedChar, BOUND_PRESETS, FLORES_LANGUAGES, PIVOT,
};
use graphemetok::metrics::{emit_report, Aggregation, LengthUnit, MetricRow, ParallelCorpus, ReportFormat};
use graphemetok::pretokenize::{preset_spec, PretokenizerSpec};
use graphemetok::subword::{Algorithm, AtomicMode, TrainOptions};
use graphemetok::{load_model, save_model, Error, SegmentationPolicy, TokenizerModel};

#[derive(Parser)]
#[command(name = "tok", version, about = "Grapheme-aware tokenizers and tokenization fairness metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Seeded uniform sample of corpus lines, original order kept.
    Sample(SampleArgs),
    /// Train a subword model.
    Train(TrainArgs),
    /// Encode a text file into id lines.
    Encode(CodecArgs),
    /// Decode id lines back into text.
    Decode(CodecArgs),
    /// Pre-tokenization bounds (CR_max, TP_min) per preset and language.
    PretokAudit(AuditArgs),
    /// CR and TP of a trained model or a character-level tokenizer.
    Eval(EvalArgs),
    /// Run every evaluation pipeline on FLORES-style data.
    Reproduce(ReproduceArgs),
}

/// Flags shared by every command. Each command also accepts `--config FILE`,
/// a JSON object using the same field names; flags win over the file.
#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct Common {
    /// JSON config file with the same field names as the flags.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Random seed recorded in every output.
    #[arg(long)]
    seed: Option<u64>,
    /// Report format: tsv, json or md.
    #[arg(long)]
    format: Option<String>,
    /// Length unit: codepoint, utf8_byte or grapheme.
    #[arg(long)]
    unit: Option<String>,
    /// Aggregation: micro or macro.
    #[arg(long)]
    aggregation: Option<String>,
    /// NFC-normalize corpus lines on ingestion.
    #[arg(long)]
    nfc: bool,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Number of lines to keep.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// Training corpus, one sentence per line.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// bpe, gpe, wordpiece or unigram.
    #[arg(long)]
    algorithm: Option<String>,
    /// Pre-tokenizer preset.
    #[arg(long)]
    preset: Option<String>,
    /// Custom pre-tokenizer regex (overrides --preset).
    #[arg(long)]
    pattern: Option<String>,
    #[arg(long)]
    vocab_size: Option<usize>,
    /// byte, codepoint or grapheme.
    #[arg(long)]
    atomic_mode: Option<String>,
    /// extended_default or extended_abugida_tailored.
    #[arg(long)]
    policy: Option<String>,
    /// byte_fallback or unk_token.
    #[arg(long)]
    unknown_policy: Option<String>,
    #[arg(long)]
    min_frequency: Option<u64>,
    /// Train on a seeded sample of this many lines.
    #[arg(long)]
    sample_size: Option<usize>,
    /// Model file to write; a `.manifest.json` sidecar is written next to it.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct CodecArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Defaults to standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Where evaluation text comes from.
#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct CorpusArgs {
    /// `code=path` per language (repeatable).
    #[arg(long = "lang")]
    lang: Vec<String>,
    /// Directory with FLORES-style files such as `tam_Taml.dev` or `ta.txt`.
    #[arg(long)]
    flores_dir: Option<PathBuf>,
    /// Languages to load from --flores-dir (comma-separated).
    #[arg(long)]
    langs: Option<String>,
    /// Single-language corpus.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Pivot language for parity rows.
    #[arg(long)]
    pivot: Option<String>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct AuditArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    corpus: CorpusArgs,
    /// Comma-separated presets.
    #[arg(long)]
    presets: Option<String>,
    /// Extra custom regex pre-tokenizer.
    #[arg(long)]
    pattern: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    corpus: CorpusArgs,
    /// Trained model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Character-level tokenizer: byt5, canine, grapheme, utf8_byte or codepoint.
    #[arg(long = "char")]
    char_mode: Option<String>,
    /// Start/end tokens per sequence for --char (0-2).
    #[arg(long)]
    specials: Option<u8>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct ReproduceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
    /// FLORES-style directory holding en, ta, si and hi files.
    #[arg(long)]
    flores_dir: Option<PathBuf>,
    /// Tamil training corpus for the training experiment.
    #[arg(long)]
    train_corpus: Option<PathBuf>,
    /// Lines sampled from the training corpus.
    #[arg(long)]
    train_lines: Option<usize>,
    #[arg(long)]
    vocab_size: Option<usize>,
    /// Directory receiving reports and the run manifest.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

struct CliError {
    code: &'static str,
    message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: e.code(),
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.code, self.message)
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: "usage",
        message: message.into(),
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample(a) => resolve(a, |a| &a.common).and_then(cmd_sample),
        Command::Train(a) => resolve(a, |a| &a.common).and_then(cmd_train),
        Command::Encode(a) => resolve(a, |a| &a.common).and_then(cmd_encode),
        Command::Decode(a) => resolve(a, |a| &a.common).and_then(cmd_decode),
        Command::PretokAudit(a) => resolve(a, |a| &a.common).and_then(cmd_audit),
        Command::Eval(a) => resolve(a, |a| &a.common).and_then(cmd_eval),
        Command::Reproduce(a) => resolve(a, |a| &a.common).and_then(cmd_reproduce),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}

/// Layers command-line values over the `--config` file. Absent flags
/// (None, false, empty lists) leave file values in place.
fn resolve<T: Serialize + DeserializeOwned + Default>(cli: T, common: impl Fn(&T) -> &Common) -> CliResult<(T, String)> {
    let config = common(&cli).config.clone();
    let mut merged = match &config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::from(Error::Io {
                path: path.clone(),
                source: e,
            }))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(usage(format!("{}: config must be a JSON object", path.display()))),
                Err(e) => return Err(usage(format!("{}: {e}", path.display()))),
            }
        }
        None => Map::new(),
    };
    let Value::Object(known) = serde_json::to_value(T::default()).expect("args serialize") else {
        unreachable!("args are structs")
    };
    if let Some(key) = merged.keys().find(|k| !known.contains_key(*k)) {
        return Err(usage(format!("unknown config field '{key}'")));
    }
    let Value::Object(flags) = serde_json::to_value(&cli).expect("args serialize") else {
        unreachable!("args are structs")
    };
    for (k, v) in flags {
        let absent = match &v {
            Value::Null | Value::Bool(false) => true,
            Value::Array(a) => a.is_empty(),
            _ => false,
        };
        if !absent {
            merged.insert(k, v);
        }
    }
    let digest = sha256_hex(Value::Object(merged.clone()).to_string().as_bytes());
    let resolved: T = serde_json::from_value(Value::Object(merged)).map_err(|e| match &config {
        Some(p) => usage(format!("{}: {e}", p.display())),
        None => usage(e.to_string()),
    })?;
    Ok((resolved, digest))
}

fn parse<T: std::str::FromStr<Err = Error>>(value: Option<&str>, default: T) -> CliResult<T> {
    value.map_or(Ok(default), |v| v.parse().map_err(CliError::from))
}

fn required<'a, T>(value: &'a Option<T>, flag: &str) -> CliResult<&'a T> {
    value.as_ref().ok_or_else(|| usage(format!("missing --{flag}")))
}

fn existing_file<'a>(value: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    let p = required(value, flag)?;
    if !p.is_file() {
        return Err(usage(format!("--{flag}: {} is not a readable file", p.display())));
    }
    Ok(p)
}

fn writable_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(usage(format!("output directory {} does not exist", dir.display())))
        }
        _ => Ok(()),
    }
}

fn write_output(path: Option<&Path>, content: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| CliError::from(Error::Io {
            path: p.to_owned(),
            source: e,
        })),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| usage(format!("writing to standard output: {e}")))
        }
    }
}

struct ReportSettings {
    format: ReportFormat,
    unit: LengthUnit,
    aggregation: Aggregation,
    seed: u64,
    digest: String,
}

impl ReportSettings {
    fn new(common: &Common, digest: String) -> CliResult<Self> {
        Ok(Self {
            format: parse(common.format.as_deref(), ReportFormat::Tsv)?,
            unit: parse(common.unit.as_deref(), LengthUnit::Codepoint)?,
            aggregation: parse(common.aggregation.as_deref(), Aggregation::Micro)?,
            seed: common.seed.unwrap_or(DEFAULT_SEED),
            digest,
        })
    }

    /// Report body with the run reference: a `#` comment line for TSV and
    /// markdown, a `run` object for JSON. Notes follow the same convention.
    fn render(&self, command: &str, rows: &[MetricRow], notes: &[String]) -> String {
        match self.format {
            ReportFormat::Json => {
                let doc = json!({
                    "run": {"command": command, "seed": self.seed, "config_digest": self.digest},
                    "notes": notes,
                    "rows": rows,
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
                s.push('\n');
                s
            }
            _ => {
                let mut s = format!("# run command={command} seed={} config={}\n", self.seed, self.digest);
                for n in notes {
                    s.push_str(&format!("# note: {n}\n"));
                }
                s.push_str(&emit_report(rows, self.format));
                s
            }
        }
    }
}

fn cmd_sample((a, _): (SampleArgs, String)) -> CliResult<()> {
    let input = existing_file(&a.input, "input")?;
    let n = *required(&a.n, "n")?;
    let output = required(&a.output, "output")?;
    writable_parent(output)?;
    let seed = a.common.seed.unwrap_or(DEFAULT_SEED);
    let mut lines = sample_lines(input, n, seed)?;
    if a.common.nfc {
        lines = lines.iter().map(|l| graphemetok::corpus::nfc(l)).collect();
    }
    write_lines(output, &lines)?;
    eprintln!("sampled {n} lines with seed {seed}");
    Ok(())
}

fn pretokenizer(preset: Option<&str>, pattern: Option<&str>) -> CliResult<PretokenizerSpec> {
    Ok(match pattern {
        Some(p) => PretokenizerSpec::custom(p)?,
        None => preset_spec(preset.unwrap_or("whitespace"))?,
    })
}

fn cmd_train((a, digest): (TrainArgs, String)) -> CliResult<()> {
    let corpus = existing_file(&a.corpus, "corpus")?;
    let output = required(&a.output, "output")?;
    writable_parent(output)?;
    let algorithm: Algorithm = parse(a.algorithm.as_deref(), Algorithm::Gpe)?;
    let spec = pretokenizer(a.preset.as_deref(), a.pattern.as_deref())?;
    let vocab_size = *required(&a.vocab_size, "vocab-size")?;
    let mut opts = match algorithm {
        Algorithm::Bpe => TrainOptions::bpe(vocab_size),
        Algorithm::Gpe => TrainOptions::gpe(vocab_size),
        Algorithm::Wordpiece => TrainOptions::wordpiece(vocab_size),
        Algorithm::Unigram => TrainOptions::unigram(vocab_size),
    };
    opts.atomic_mode = parse(a.atomic_mode.as_deref(), opts.atomic_mode)?;
    opts.segmentation_policy = parse(a.policy.as_deref(), opts.segmentation_policy)?;
    opts.unknown_policy = parse(a.unknown_policy.as_deref(), opts.unknown_policy)?;
    if let Some(m) = a.min_frequency {
        opts.min_frequency = m;
    }
    if algorithm == Algorithm::Gpe && opts.atomic_mode != AtomicMode::Grapheme {
        return Err(usage("gpe always uses --atomic-mode grapheme"));
    }
    let seed = a.common.seed.unwrap_or(DEFAULT_SEED);
    let lines = match a.sample_size {
        Some(n) => {
            let l = sample_lines(corpus, n, seed)?;
            if a.common.nfc {
                l.iter().map(|x| graphemetok::corpus::nfc(x)).collect()
            } else {
                l
            }
        }
        None => read_lines(corpus, a.common.nfc)?,
    };

    let start = Instant::now();
    let model = experiments::train(algorithm, &lines, &spec, &opts)?;
    let wall = start.elapsed().as_secs_f64();
    save_model(&model, output)?;

    let stable = json!({
        "command": "train",
        "seed": seed,
        "config_digest": digest,
        "settings": {
            "algorithm": algorithm.name(),
            "pretokenizer": spec,
            "options": opts,
            "sample_size": a.sample_size,
            "nfc": a.common.nfc,
        },
        "corpus": {"path": corpus, "lines": lines.len(), "sha256": digest_lines(&lines)},
        "vocab_size": model.vocab_size(),
        "model_sha256": sha256_hex(model.to_json()?.as_bytes()),
    });
    let mut manifest = stable.clone();
    manifest["manifest_digest"] = Value::from(sha256_hex(stable.to_string().as_bytes()));
    manifest["wall_seconds"] = Value::from(wall);
    let path = manifest_path(output);
    write_output(Some(&path), &(serde_json::to_string_pretty(&manifest).expect("json") + "\n"))?;
    eprintln!(
        "trained {} with {} entries in {wall:.1}s; wrote {} and {}",
        algorithm.name(),
        model.vocab_size(),
        output.display(),
        path.display()
    );
    Ok(())
}

fn manifest_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn format_ids(model: &TokenizerModel, line: &str) -> String {
    let join = |ids: &[u32]| ids.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
    if model.pretokenizer().drops_whitespace() {
        model
            .encode_pretokens(line)
            .iter()
            .map(|g| join(g))
            .collect::<Vec<_>>()
            .join(" | ")
    } else {
        join(&model.encode(line))
    }
}

fn cmd_encode((a, _): (CodecArgs, String)) -> CliResult<()> {
    let model = load_model(existing_file(&a.model, "model")?)?;
    let input = existing_file(&a.input, "input")?;
    if let Some(o) = &a.output {
        writable_parent(o)?;
    }
    let lines = read_lines(input, a.common.nfc)?;
    let mut out = String::new();
    for line in &lines {
        out.push_str(&format_ids(&model, line));
        out.push('\n');
    }
    write_output(a.output.as_deref(), &out)
}

/// Parses one id line: ids separated by spaces, pre-token groups by `|`.
fn decode_line(model: &TokenizerModel, line: &str) -> Result<String, String> {
    let parse_group = |g: &str| -> Result<Vec<u32>, String> {
        g.split_whitespace()
            .map(|t| t.parse::<u32>().map_err(|_| format!("malformed id '{t}'")))
            .collect()
    };
    let result = if line.contains('|') {
        let groups = line.split('|').map(parse_group).collect::<Result<Vec<_>, _>>()?;
        model.decode_pretokens(&groups)
    } else {
        model.decode(&parse_group(line)?)
    };
    result.map_err(|e| e.to_string())
}

fn cmd_decode((a, _): (CodecArgs, String)) -> CliResult<()> {
    let model = load_model(existing_file(&a.model, "model")?)?;
    let input = existing_file(&a.input, "input")?;
    if let Some(o) = &a.output {
        writable_parent(o)?;
    }
    let lines = read_lines(input, false)?;
    let mut out = String::new();
    for (i, line) in lines.iter().enumerate() {
        match decode_line(&model, line) {
            Ok(text) => {
                out.push_str(&text);
                out.push('\n');
            }
            Err(msg) => {
                let code = if msg.contains("out of range") {
                    "id-out-of-range"
                } else {
                    "malformed-ids"
                };
                return Err(CliError {
                    code,
                    message: format!("{}:{}: {msg}", input.display(), i + 1),
                });
            }
        }
    }
    write_output(a.output.as_deref(), &out)
}

/// Loads the evaluation corpus. Returns it with the files used.
fn load_corpus(c: &CorpusArgs, nfc: bool) -> CliResult<(ParallelCorpus, Vec<(String, PathBuf)>)> {
    let mut files: Vec<(String, PathBuf)> = Vec::new();
    for spec in &c.lang {
        let (code, path) = spec
            .split_once('=')
            .ok_or_else(|| usage(format!("--lang expects code=path, got '{spec}'")))?;
        files.push((code.to_owned(), PathBuf::from(path)));
    }
    if let Some(dir) = &c.flores_dir {
        let default: Vec<&str> = FLORES_LANGUAGES.iter().map(|(s, _)| *s).collect();
        let langs: Vec<&str> = match &c.langs {
            Some(l) => l.split(',').map(str::trim).filter(|s| !s.is_empty()).collect(),
            None => default,
        };
        files.extend(flores_files(dir, &langs)?);
    }
    if let Some(input) = &c.input {
        let name = input
            .file_stem()
            .map_or_else(|| "input".to_owned(), |s| s.to_string_lossy().into_owned());
        files.push((name, input.clone()));
    }
    if files.is_empty() {
        return Err(usage("no corpus given: use --lang code=path, --flores-dir or --input"));
    }
    for (_, p) in &files {
        if !p.is_file() {
            return Err(usage(format!("{} is not a readable file", p.display())));
        }
    }
    Ok((load_parallel(&files, nfc)?, files))
}

fn pivot<'a>(c: &'a CorpusArgs, corpus: &ParallelCorpus) -> CliResult<Option<&'a str>> {
    match c.pivot.as_deref() {
        Some(p) if corpus.languages().iter().any(|l| l == p) => Ok(Some(p)),
        Some(p) => Err(Error::UnknownLanguage(p.to_owned()).into()),
        None if corpus.languages().iter().any(|l| l == PIVOT) => Ok(Some(PIVOT)),
        None => Ok(None),
    }
}

fn cmd_audit((a, digest): (AuditArgs, String)) -> CliResult<()> {
    let settings = ReportSettings::new(&a.common, digest)?;
    if let Some(o) = &a.output {
        writable_parent(o)?;
    }
    let mut specs = match &a.presets {
        Some(list) => list
            .split(',')
            .map(|p| preset_spec(p.trim()))
            .collect::<Result<Vec<_>, _>>()?,
        None if a.pattern.is_some() => Vec::new(),
        None => BOUND_PRESETS.iter().map(|p| preset_spec(p).expect("preset")).collect(),
    };
    if let Some(p) = &a.pattern {
        specs.push(PretokenizerSpec::custom(p)?);
    }
    let (corpus, _) = load_corpus(&a.corpus, a.common.nfc)?;
    let pivot = pivot(&a.corpus, &corpus)?;
    let out = pretokenization_bounds(&corpus, &specs, settings.unit, settings.aggregation, pivot)?;
    for n in &out.notes {
        eprintln!("note: {n}");
    }
    write_output(a.output.as_deref(), &settings.render("pretok-audit", &out.rows, &out.notes))
}

fn char_mode(name: &str, specials: Option<u8>) -> CliResult<NamedChar> {
    let mode = match CharLevelMode::preset(name) {
        Ok(m) => m,
        Err(_) => CharLevelMode::new(name.parse::<CharUnit>().map_err(|_| {
            usage(format!(
                "unknown --char '{name}' (expected one of: {}, {})",
                CharLevelMode::PRESETS,
                CharUnit::NAMES
            ))
        })?),
    };
    let mode = match specials {
        Some(n) => mode.with_specials(n)?,
        None => mode,
    };
    let label = match specials {
        Some(_) => mode.name(),
        None => name.to_owned(),
    };
    Ok(NamedChar(label, mode.with_policy(SegmentationPolicy::ExtendedAbugidaTailored)))
}

fn cmd_eval((a, digest): (EvalArgs, String)) -> CliResult<()> {
    let settings = ReportSettings::new(&a.common, digest)?;
    if let Some(o) = &a.output {
        writable_parent(o)?;
    }
    let counter: Box<dyn experiments::Counter> = match (&a.model, &a.char_mode) {
        (Some(_), Some(_)) => return Err(usage("give either --model or --char, not both")),
        (Some(_), None) => Box::new(load_model(existing_file(&a.model, "model")?)?),
        (None, Some(name)) => Box::new(char_mode(name, a.specials)?),
        (None, None) => return Err(usage("missing --model or --char")),
    };
    let (corpus, _) = load_corpus(&a.corpus, a.common.nfc)?;
    let pivot = pivot(&a.corpus, &corpus)?;
    let rows = evaluate(&counter.name(), counter.as_ref(), &corpus, settings.unit, settings.aggregation, pivot)?;
    write_output(a.output.as_deref(), &settings.render("eval", &rows, &[]))
}

fn cmd_reproduce((a, digest): (ReproduceArgs, String)) -> CliResult<()> {
    let settings = ReportSettings::new(&a.common, digest)?;
    let dir = required(&a.flores_dir, "flores-dir")?;
    let out_dir = required(&a.out_dir, "out-dir")?;
    if !out_dir.is_dir() {
        return Err(usage(format!("--out-dir {} is not a directory", out_dir.display())));
    }
    if let Some(t) = &a.train_corpus {
        if !t.is_file() {
            return Err(usage(format!("--train-corpus {} is not a readable file", t.display())));
        }
    }
    let langs: Vec<&str> = FLORES_LANGUAGES.iter().map(|(s, _)| *s).collect();
    let files = flores_files(dir, &langs)?;
    let corpus = load_parallel(&files, a.common.nfc)?;
    let ext = match settings.format {
        ReportFormat::Tsv => "tsv",
        ReportFormat::Json => "json",
        ReportFormat::Md => "md",
    };
    let mut written = Vec::new();
    let mut emit = |name: &str, rows: &[MetricRow], notes: &[String]| -> CliResult<()> {
        let path = out_dir.join(format!("{name}.{ext}"));
        write_output(Some(&path), &settings.render(&format!("reproduce/{name}"), rows, notes))?;
        written.push(path);
        Ok(())
    };

    let specs: Vec<_> = BOUND_PRESETS.iter().map(|p| preset_spec(p).expect("preset")).collect();
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for agg in [Aggregation::Micro, Aggregation::Macro] {
        let out = pretokenization_bounds(&corpus, &specs, settings.unit, agg, Some(PIVOT))?;
        rows.extend(out.rows);
        notes.extend(out.notes);
    }
    emit("pretokenization_bounds", &rows, &notes)?;

    let mut rows = Vec::new();
    for agg in [Aggregation::Micro, Aggregation::Macro] {
        for c in charlevel_presets() {
            rows.extend(evaluate(&c.0, &c, &corpus, settings.unit, agg, Some(PIVOT))?);
        }
    }
    emit("charlevel", &rows, &[])?;

    let mut training = Value::Null;
    if let Some(train_path) = &a.train_corpus {
        let n = a.train_lines.unwrap_or(150_000);
        let vocab = a.vocab_size.unwrap_or(5_000);
        let lines = sample_lines(train_path, n, settings.seed)?;
        let results = training_experiment(&lines, corpus.lines("ta")?, vocab, settings.unit, settings.aggregation)?;
        let notes: Vec<String> = results
            .iter()
            .map(|r| format!("{}: CR_max {:.2}, vocab {}, {:.1}s", r.name, r.cr_max.value, r.vocab_size, r.seconds))
            .collect();
        emit("training", &training_rows(&results, "ta", settings.unit), &notes)?;
        training = json!({"corpus": train_path, "lines": n, "sha256": digest_lines(&lines), "vocab_size": vocab});
    } else {
        eprintln!("note: no --train-corpus given; training experiment skipped");
    }

    let manifest = json!({
        "command": "reproduce",
        "seed": settings.seed,
        "config_digest": settings.digest,
        "unit": settings.unit.name(),
        "flores_files": files.iter().map(|(l, p)| json!({"language": l, "path": p, "lines": corpus.len()})).collect::<Vec<_>>(),
        "training": training,
        "reports": written,
    });
    write_output(
        Some(&out_dir.join("manifest.json")),
        &(serde_json::to_string_pretty(&manifest).expect("json") + "\n"),
    )?;
    eprintln!("wrote {} reports to {}", written.len(), out_dir.display());
    Ok(())
}
