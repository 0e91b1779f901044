use graphemetok::experiments::train;
use graphemetok::metrics::{compression_ratio, cr_max, Aggregation, LengthUnit};
use graphemetok::subword::{atom_bounds, TokenKind, UNK_TOKEN};
use graphemetok::{
    load_model, preset_spec, save_model, Algorithm, AtomicMode, Error, PretokenizerSpec,
    SegmentationPolicy, TokenizerModel, TrainOptions, UnknownPolicy,
};
use proptest::prelude::*;

const WORDS: &[&str] = &[
    "நன்றி", "நண்பரே", "வணக்கம்", "ஸ்ரீ", "धन्यवाद", "क्षत्रिय", "नमस्ते", "ස්තූතියි",
    "ක්‍රීඩා", "hello", "world", "low", "lower", "newest", "widest", "e\u{301}te", "😀", "👍🏽",
    "don't", "3.14", "!!",
];

fn corpus() -> impl Strategy<Value = Vec<String>> {
    let line = prop::collection::vec(prop::sample::select(WORDS), 1..7).prop_map(|w| w.join(" "));
    prop::collection::vec(line, 4..24)
}

fn ascii_corpus() -> impl Strategy<Value = Vec<String>> {
    let word = prop::collection::vec(prop::sample::select(b"abcdeflow!.'1".to_vec()), 1..7)
        .prop_map(|b| String::from_utf8(b).unwrap());
    let line = prop::collection::vec(word, 1..6).prop_map(|w| w.join(" "));
    prop::collection::vec(line, 4..24)
}

fn options(algorithm: Algorithm, vocab_size: usize) -> TrainOptions {
    match algorithm {
        Algorithm::Bpe => TrainOptions::bpe(vocab_size),
        Algorithm::Gpe => TrainOptions::gpe(vocab_size),
        Algorithm::Wordpiece => TrainOptions::wordpiece(vocab_size),
        Algorithm::Unigram => TrainOptions::unigram(vocab_size),
    }
}

const ALL: [Algorithm; 4] = [
    Algorithm::Bpe,
    Algorithm::Gpe,
    Algorithm::Wordpiece,
    Algorithm::Unigram,
];

fn group_bytes(model: &TokenizerModel, ids: &[u32]) -> Vec<Vec<u8>> {
    ids.iter()
        .map(|&id| model.vocab().bytes(id).unwrap().to_vec())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn byte_fallback_roundtrips_and_respects_boundaries(lines in corpus(), probe in ".{0,24}") {
        for preset in ["whitespace", "gpt2", "gpt4_llama3"] {
            let spec = preset_spec(preset).unwrap();
            for alg in ALL {
                let model = train(alg, &lines, &spec, &options(alg, 600)).unwrap();
                for text in lines.iter().take(3).chain([&probe]) {
                    let groups = model.encode_pretokens(text);
                    let pretokens = spec.split(text);
                    prop_assert_eq!(groups.len(), pretokens.len());
                    for (g, pt) in groups.iter().zip(&pretokens) {
                        prop_assert_eq!(group_bytes(&model, g).concat(), pt.as_bytes().to_vec());
                    }
                    let flat: Vec<u32> = groups.concat();
                    prop_assert_eq!(&model.encode(text), &flat);
                    if spec.drops_whitespace() {
                        prop_assert_eq!(model.decode_pretokens(&groups).unwrap(), pretokens.join(" "));
                    } else {
                        prop_assert_eq!(model.decode(&flat).unwrap(), text.clone());
                    }
                }
            }
        }
    }

    #[test]
    fn gpe_tokens_are_whole_graphemes(lines in corpus()) {
        let spec = PretokenizerSpec::whitespace();
        let model = train(Algorithm::Gpe, &lines, &spec, &TrainOptions::gpe(900)).unwrap();
        for line in &lines {
            for (g, pt) in model.encode_pretokens(line).iter().zip(spec.split(line)) {
                let bounds = atom_bounds(pt, AtomicMode::Grapheme, SegmentationPolicy::default());
                let mut offset = 0;
                for id in g {
                    prop_assert_ne!(model.vocab().kind(*id), Some(TokenKind::Byte));
                    offset += model.vocab().bytes(*id).unwrap().len();
                    prop_assert!(bounds.contains(&offset), "{pt:?} split at byte {offset}");
                }
            }
        }
    }

    #[test]
    fn training_is_deterministic_across_thread_counts(lines in corpus()) {
        let spec = PretokenizerSpec::whitespace();
        for alg in ALL {
            let opts = options(alg, 400);
            let run = |threads: usize| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .unwrap()
                    .install(|| train(alg, &lines, &spec, &opts).unwrap().to_json().unwrap())
            };
            let first = run(1);
            prop_assert_eq!(&first, &run(1));
            prop_assert_eq!(&first, &run(4));
        }
    }

    #[test]
    fn bigger_budgets_never_lengthen_the_training_corpus(lines in corpus()) {
        let spec = PretokenizerSpec::whitespace();
        for alg in [Algorithm::Bpe, Algorithm::Gpe] {
            let mut prev = usize::MAX;
            for extra in [0, 5, 20, 80] {
                let opts = options(alg, 400 + extra).atomic_mode(match alg {
                    Algorithm::Gpe => AtomicMode::Grapheme,
                    _ => AtomicMode::Codepoint,
                });
                let model = train(alg, &lines, &spec, &opts).unwrap();
                let total: usize = lines.iter().map(|l| model.token_count(l)).sum();
                prop_assert!(total <= prev, "{alg:?} +{extra}: {total} > {prev}");
                prev = total;
            }
        }
    }

    #[test]
    fn saved_models_encode_identically(lines in corpus(), probes in prop::collection::vec(".{0,16}", 8)) {
        let dir = tempfile::tempdir().unwrap();
        for alg in ALL {
            let model = train(alg, &lines, &PretokenizerSpec::gpt2(), &options(alg, 500)).unwrap();
            let path = dir.path().join(format!("{}.json", alg.name()));
            save_model(&model, &path).unwrap();
            let loaded = load_model(&path).unwrap();
            prop_assert_eq!(loaded.to_json().unwrap(), model.to_json().unwrap());
            for p in probes.iter().chain(&lines) {
                prop_assert_eq!(loaded.encode(p), model.encode(p));
            }
        }
    }

    #[test]
    fn ascii_gpe_equals_codepoint_bpe(lines in ascii_corpus()) {
        let spec = PretokenizerSpec::whitespace();
        let gpe = train(Algorithm::Gpe, &lines, &spec, &TrainOptions::gpe(300)).unwrap();
        let bpe = train(
            Algorithm::Bpe,
            &lines,
            &spec,
            &TrainOptions::bpe(300).atomic_mode(AtomicMode::Codepoint),
        )
        .unwrap();
        prop_assert_eq!(gpe.merge_strings(), bpe.merge_strings());
        for l in &lines {
            prop_assert_eq!(gpe.encode(l), bpe.encode(l));
        }
    }

    #[test]
    fn trained_compression_never_exceeds_the_bound(lines in corpus()) {
        for preset in ["whitespace", "whitespace_punct", "gpt2"] {
            let spec = preset_spec(preset).unwrap();
            for alg in ALL {
                let model = train(alg, &lines, &spec, &options(alg, 500)).unwrap();
                let counts: Vec<usize> = lines.iter().map(|l| model.token_count(l)).collect();
                let cr = compression_ratio(&lines, &counts, LengthUnit::Codepoint, Aggregation::Micro).unwrap();
                let bound = cr_max(&spec, &lines, LengthUnit::Codepoint, Aggregation::Micro).unwrap();
                prop_assert!(cr.value <= bound.ratio.value + 1e-12);
            }
        }
    }
}

#[test]
fn whole_word_vocabulary_reaches_the_bound() {
    let lines = ["நன்றி நண்பரே", "hello world", "நன்றி hello"];
    let spec = PretokenizerSpec::whitespace();
    let mut opts = TrainOptions::bpe(5000).atomic_mode(AtomicMode::Codepoint);
    opts.min_frequency = 1;
    let model = train(Algorithm::Bpe, &lines, &spec, &opts).unwrap();
    let counts: Vec<usize> = lines.iter().map(|l| model.token_count(l)).collect();
    assert_eq!(counts, [2, 2, 2]);
    let cr = compression_ratio(&lines, &counts, LengthUnit::Codepoint, Aggregation::Micro).unwrap();
    let bound = cr_max(&spec, &lines, LengthUnit::Codepoint, Aggregation::Micro).unwrap();
    assert_eq!(cr, bound.ratio);
}

#[test]
fn unseen_emoji_falls_back_to_bytes() {
    let lines = ["நன்றி நன்றி", "நன்றி"];
    let spec = PretokenizerSpec::whitespace();
    let model = train(Algorithm::Bpe, &lines, &spec, &TrainOptions::bpe(300).atomic_mode(AtomicMode::Codepoint)).unwrap();
    let ids = model.encode("😀");
    assert_eq!(ids.len(), 4);
    assert!(ids.iter().all(|&id| model.vocab().kind(id) == Some(TokenKind::Byte)));
    assert_eq!(model.decode(&ids).unwrap(), "😀");
}

#[test]
fn unk_decodes_to_its_surface() {
    let lines = ["hello hello", "world world"];
    let spec = PretokenizerSpec::whitespace();
    for alg in ALL {
        let opts = options(alg, 40)
            .atomic_mode(if alg == Algorithm::Gpe { AtomicMode::Grapheme } else { AtomicMode::Codepoint })
            .unknown_policy(UnknownPolicy::UnkToken);
        let model = train(alg, &lines, &spec, &opts).unwrap();
        let ids = model.encode("நன்றி");
        let unk = model.vocab().special_id(UNK_TOKEN).unwrap();
        assert!(ids.contains(&unk), "{alg:?}");
        assert_eq!(model.decode(&[unk]).unwrap(), UNK_TOKEN);
    }
}

#[test]
fn corrupt_model_files_are_rejected() {
    let lines = ["low lower lowest", "low lower newest"];
    let model = train(Algorithm::Bpe, &lines, &PretokenizerSpec::whitespace(), &TrainOptions::bpe(270)).unwrap();
    let mut json: serde_json::Value = serde_json::from_str(&model.to_json().unwrap()).unwrap();

    let mut bad_tag = json.clone();
    bad_tag["algorithm"] = "sentencepiece".into();
    let err = TokenizerModel::from_json(&bad_tag.to_string()).unwrap_err();
    assert!(matches!(err, Error::Schema(_)));
    assert!(err.to_string().contains("unknown algorithm tag 'sentencepiece'"), "{err}");

    json["merges"][0][1] = "qqq".into();
    let err = TokenizerModel::from_json(&json.to_string()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("merge rule #0") && msg.contains("qqq"), "{msg}");
}

#[test]
fn gpe_rejects_non_grapheme_atoms() {
    let opts = TrainOptions::gpe(300).atomic_mode(AtomicMode::Codepoint);
    assert!(matches!(
        train(Algorithm::Gpe, &["aa aa"], &PretokenizerSpec::whitespace(), &opts),
        Err(Error::Invalid(_))
    ));
}
