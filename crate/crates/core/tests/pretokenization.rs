use graphemetok::pretokenize::{GPT2_PATTERN, GPT4_LLAMA3_PATTERN};
use graphemetok::{count_codepoints, preset_spec, pretokenize, Error, PretokenizerSpec};
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct Fixture {
    gpt2_pattern: String,
    gpt4_llama3_pattern: String,
    cases: Vec<Case>,
}

#[derive(Deserialize)]
struct Case {
    text: String,
    gpt2: Vec<String>,
    gpt4_llama3: Vec<String>,
}

fn fixture() -> Fixture {
    serde_json::from_str(include_str!("fixtures/pretokens.json")).unwrap()
}

#[test]
fn published_patterns_are_verbatim() {
    let f = fixture();
    assert_eq!(f.gpt2_pattern, GPT2_PATTERN);
    assert_eq!(f.gpt4_llama3_pattern, GPT4_LLAMA3_PATTERN);
}

#[test]
fn regex_presets_match_frozen_splits() {
    let gpt2 = PretokenizerSpec::gpt2();
    let gpt4 = PretokenizerSpec::gpt4_llama3();
    for case in fixture().cases {
        assert_eq!(gpt2.split(&case.text), case.gpt2, "gpt2 {:?}", case.text);
        assert_eq!(gpt4.split(&case.text), case.gpt4_llama3, "gpt4 {:?}", case.text);
    }
}

fn oracle_split(pattern: &str, text: &str) -> Vec<String> {
    let re = fancy_regex::Regex::new(pattern).unwrap();
    re.find_iter(text)
        .map(|m| m.unwrap().as_str().to_owned())
        .filter(|s| !s.is_empty())
        .collect()
}

fn regexy_text() -> impl Strategy<Value = String> {
    let ch = prop_oneof![
        3 => prop::sample::select(vec![
            ' ', ' ', '\t', '\n', '\r', '\u{A0}', '\u{3000}', '\'', 's', 'T', 'l', 'e', 'x', '1', '2', '3',
            '!', '?', '.', '-', '\u{B95}', '\u{BCD}', '\u{BBF}', '\u{915}', '\u{94D}', '\u{1F600}', '\u{200D}',
        ]),
        1 => any::<char>(),
    ];
    prop::collection::vec(ch, 0..40).prop_map(|v| v.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1024))]

    #[test]
    fn regex_presets_agree_with_lookahead_engine(text in regexy_text()) {
        prop_assert_eq!(PretokenizerSpec::gpt2().split(&text), oracle_split(GPT2_PATTERN, &text));
        prop_assert_eq!(
            PretokenizerSpec::gpt4_llama3().split(&text),
            oracle_split(GPT4_LLAMA3_PATTERN, &text)
        );
    }

    #[test]
    fn spans_are_faithful_and_disjoint(text in regexy_text()) {
        for name in ["whitespace", "whitespace_punct", "gpt2", "gpt4_llama3", "identity"] {
            let spec = preset_spec(name).unwrap();
            let chars: Vec<char> = text.chars().collect();
            let mut prev_end = 0;
            for p in pretokenize(&text, &spec) {
                prop_assert!(p.start >= prev_end);
                prop_assert!(p.end > p.start);
                let span: String = chars[p.start..p.end].iter().collect();
                prop_assert_eq!(span.as_str(), p.text);
                prev_end = p.end;
            }
            prop_assert!(prev_end <= count_codepoints(&text));
            if !spec.drops_whitespace() {
                prop_assert_eq!(spec.split(&text).concat(), text.clone());
            }
        }
    }

    #[test]
    fn whitespace_presets_keep_every_non_space(text in regexy_text()) {
        for spec in [PretokenizerSpec::whitespace(), PretokenizerSpec::whitespace_punct()] {
            let kept: String = spec.split(&text).concat();
            let expected: String = text.chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(kept, expected);
        }
    }
}

#[test]
fn small_examples() {
    let text = "hello, world!";
    assert_eq!(PretokenizerSpec::whitespace().split(text), ["hello,", "world!"]);
    assert_eq!(
        PretokenizerSpec::whitespace_punct().split(text),
        ["hello", ",", "world", "!"]
    );
    assert_eq!(PretokenizerSpec::identity().split(text), [text]);
    assert_eq!(PretokenizerSpec::gpt2().split(text), ["hello", ",", " world", "!"]);
    assert_eq!(
        PretokenizerSpec::whitespace_punct().split("நன்றி, நண்பரே"),
        ["நன்றி", ",", "நண்பரே"]
    );
    let toks = pretokenize("a  bc", &PretokenizerSpec::whitespace());
    assert_eq!((toks[1].start, toks[1].end), (3, 5));
    assert!(PretokenizerSpec::identity().split("").is_empty());
}

#[test]
fn unknown_preset_and_bad_pattern_are_errors() {
    assert!(matches!(preset_spec("bert"), Err(Error::UnknownPreset { .. })));
    assert!(PretokenizerSpec::custom("(").is_err());
    let custom = PretokenizerSpec::custom(r"\p{L}+").unwrap();
    assert_eq!(custom.split("ab 12 cd"), ["ab", "cd"]);
}
