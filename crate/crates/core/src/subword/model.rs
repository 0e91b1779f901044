use std::fs;
use std::path::Path;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::vocab::{TokenKind, Vocabulary};
use super::{atom_bounds, Algorithm, AtomicMode, UnknownPolicy, UNK_TOKEN};
use crate::graphemes::SegmentationPolicy;
use crate::pretokenize::PretokenizerSpec;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Unigram score assigned to an atom that no piece covers.
const UNK_PENALTY: f64 = 10.0;

/// `left + right -> result`, applied in `rank` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MergeRule {
    pub left: u32,
    pub right: u32,
    pub result: u32,
    pub rank: u32,
}

#[derive(Debug, Clone)]
enum Segmenter {
    Merges {
        rules: Vec<MergeRule>,
        ranks: FxHashMap<(u32, u32), (u32, u32)>,
    },
    WordPiece {
        max_piece_atoms: usize,
    },
    Unigram {
        /// Indexed by token id; `NEG_INFINITY` for non-pieces.
        scores: Vec<f64>,
        unk_score: f64,
        max_piece_atoms: usize,
    },
}

/// A trained tokenizer. Immutable; encode and decode take `&self`.
#[derive(Debug, Clone)]
pub struct TokenizerModel {
    algorithm: Algorithm,
    pretokenizer: PretokenizerSpec,
    atomic_mode: AtomicMode,
    segmentation_policy: SegmentationPolicy,
    unknown_policy: UnknownPolicy,
    specials: Vec<String>,
    vocab: Vocabulary,
    unk_id: Option<u32>,
    segmenter: Segmenter,
    trainer_settings: Value,
}

/// Settings shared by every model regardless of algorithm.
#[derive(Debug, Clone)]
pub(crate) struct Header {
    pub algorithm: Algorithm,
    pub pretokenizer: PretokenizerSpec,
    pub atomic_mode: AtomicMode,
    pub segmentation_policy: SegmentationPolicy,
    pub unknown_policy: UnknownPolicy,
    pub specials: Vec<String>,
    pub trainer_settings: Value,
}

impl TokenizerModel {
    pub(crate) fn with_merges(
        header: Header,
        vocab: Vocabulary,
        rules: Vec<MergeRule>,
    ) -> Result<Self> {
        let mut ranks = FxHashMap::default();
        for (rank, rule) in rules.iter().enumerate() {
            if rule.rank as usize != rank {
                return Err(Error::Schema(format!("merge ranks are not gapless at {rank}")));
            }
            ranks.entry((rule.left, rule.right)).or_insert((rule.rank, rule.result));
        }
        Self::assemble(header, vocab, Segmenter::Merges { rules, ranks })
    }

    pub(crate) fn with_wordpiece(header: Header, vocab: Vocabulary) -> Result<Self> {
        let max_piece_atoms = max_piece_atoms(&vocab, header.atomic_mode, header.segmentation_policy);
        Self::assemble(header, vocab, Segmenter::WordPiece { max_piece_atoms })
    }

    /// `scores` gives a log-probability for every piece id of `vocab`.
    pub(crate) fn with_piece_scores(
        header: Header,
        vocab: Vocabulary,
        scores: &FxHashMap<u32, f64>,
    ) -> Result<Self> {
        let mut table = vec![f64::NEG_INFINITY; vocab.len()];
        let mut min_score = 0.0f64;
        for id in vocab.ids() {
            if vocab.kind(id) != Some(TokenKind::Piece) {
                continue;
            }
            let s = *scores.get(&id).ok_or_else(|| {
                Error::Schema(format!(
                    "piece {:?} has no score",
                    vocab.id_to_token(id).unwrap_or_default()
                ))
            })?;
            if !s.is_finite() {
                return Err(Error::Schema(format!("piece id {id} has non-finite score {s}")));
            }
            table[id as usize] = s;
            min_score = min_score.min(s);
        }
        let max_piece_atoms = max_piece_atoms(&vocab, header.atomic_mode, header.segmentation_policy);
        Self::assemble(
            header,
            vocab,
            Segmenter::Unigram {
                scores: table,
                unk_score: min_score - UNK_PENALTY,
                max_piece_atoms,
            },
        )
    }

    /// A Unigram model from explicit `(piece, log-probability)` pairs.
    pub fn unigram_from_pieces(
        pretokenizer: PretokenizerSpec,
        atomic_mode: AtomicMode,
        unknown_policy: UnknownPolicy,
        pieces: &[(&str, f64)],
    ) -> Result<Self> {
        let header = Header {
            algorithm: Algorithm::Unigram,
            pretokenizer,
            atomic_mode,
            segmentation_policy: SegmentationPolicy::default(),
            unknown_policy,
            specials: match unknown_policy {
                UnknownPolicy::UnkToken => vec![UNK_TOKEN.to_owned()],
                UnknownPolicy::ByteFallback => Vec::new(),
            },
            trainer_settings: Value::Object(Default::default()),
        };
        let mut vocab = Vocabulary::new();
        for s in &header.specials {
            vocab.push_special(s);
        }
        if unknown_policy == UnknownPolicy::ByteFallback {
            vocab.push_byte_block();
        }
        let mut scores = FxHashMap::default();
        for (piece, score) in pieces {
            scores.insert(vocab.insert_piece(piece.as_bytes().to_vec()), *score);
        }
        Self::with_piece_scores(header, vocab, &scores)
    }

    fn assemble(header: Header, vocab: Vocabulary, segmenter: Segmenter) -> Result<Self> {
        if header.algorithm == Algorithm::Gpe && header.atomic_mode != AtomicMode::Grapheme {
            return Err(Error::Schema("gpe models must use grapheme atoms".to_owned()));
        }
        let unk_id = vocab.special_id(UNK_TOKEN);
        match header.unknown_policy {
            UnknownPolicy::UnkToken if unk_id.is_none() => {
                return Err(Error::Schema(format!(
                    "unk_token policy requires the {UNK_TOKEN} special"
                )))
            }
            UnknownPolicy::ByteFallback => {
                let covered = match header.atomic_mode {
                    AtomicMode::Byte => (0..=255u8).all(|b| vocab.piece_id(&[b]).is_some()),
                    _ => vocab.has_byte_block(),
                };
                if !covered {
                    return Err(Error::Schema(
                        "byte_fallback requires 256 reserved byte tokens".to_owned(),
                    ));
                }
            }
            _ => {}
        }
        if let Segmenter::Merges { rules, .. } = &segmenter {
            for rule in rules {
                let ok = [rule.left, rule.right, rule.result]
                    .iter()
                    .all(|&id| (id as usize) < vocab.len());
                let concat_ok = ok && {
                    let mut joined = vocab.bytes(rule.left).unwrap().to_vec();
                    joined.extend_from_slice(vocab.bytes(rule.right).unwrap());
                    vocab.piece_id(&joined) == Some(rule.result)
                };
                if !concat_ok {
                    return Err(Error::Schema(format!("merge rule #{} is inconsistent", rule.rank)));
                }
            }
        }
        Ok(Self {
            algorithm: header.algorithm,
            pretokenizer: header.pretokenizer,
            atomic_mode: header.atomic_mode,
            segmentation_policy: header.segmentation_policy,
            unknown_policy: header.unknown_policy,
            specials: header.specials,
            vocab,
            unk_id,
            segmenter,
            trainer_settings: header.trainer_settings,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn pretokenizer(&self) -> &PretokenizerSpec {
        &self.pretokenizer
    }

    pub fn atomic_mode(&self) -> AtomicMode {
        self.atomic_mode
    }

    pub fn segmentation_policy(&self) -> SegmentationPolicy {
        self.segmentation_policy
    }

    pub fn unknown_policy(&self) -> UnknownPolicy {
        self.unknown_policy
    }

    pub fn specials(&self) -> &[String] {
        &self.specials
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn trainer_settings(&self) -> &Value {
        &self.trainer_settings
    }

    pub fn merges(&self) -> &[MergeRule] {
        match &self.segmenter {
            Segmenter::Merges { rules, .. } => rules,
            _ => &[],
        }
    }

    /// Merge rules as `(left, right)` token strings, in rank order.
    pub fn merge_strings(&self) -> Vec<(String, String)> {
        self.merges()
            .iter()
            .map(|r| (self.token(r.left), self.token(r.right)))
            .collect()
    }

    /// `(piece, log-probability)` for Unigram models, in id order.
    pub fn piece_scores(&self) -> Vec<(String, f64)> {
        match &self.segmenter {
            Segmenter::Unigram { scores, .. } => self
                .vocab
                .ids()
                .filter(|&id| self.vocab.kind(id) == Some(TokenKind::Piece))
                .map(|id| (self.token(id), scores[id as usize]))
                .collect(),
            _ => Vec::new(),
        }
    }

    fn token(&self, id: u32) -> String {
        self.vocab.id_to_token(id).expect("id in vocabulary")
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        let mut out = Vec::new();
        for pt in self.pretokenizer.split(text) {
            self.encode_pretoken(pt, &mut out);
        }
        out
    }

    /// Ids grouped by the pre-token they came from.
    pub fn encode_pretokens(&self, text: &str) -> Vec<Vec<u32>> {
        self.pretokenizer
            .split(text)
            .into_iter()
            .map(|pt| {
                let mut ids = Vec::new();
                self.encode_pretoken(pt, &mut ids);
                ids
            })
            .collect()
    }

    pub fn token_count(&self, text: &str) -> usize {
        let mut buf = Vec::new();
        let mut n = 0;
        for pt in self.pretokenizer.split(text) {
            buf.clear();
            self.encode_pretoken(pt, &mut buf);
            n += buf.len();
        }
        n
    }

    fn encode_pretoken(&self, pt: &str, out: &mut Vec<u32>) {
        let bounds = atom_bounds(pt, self.atomic_mode, self.segmentation_policy);
        let bytes = pt.as_bytes();
        match &self.segmenter {
            Segmenter::Merges { ranks, .. } => {
                let mut syms = Vec::with_capacity(bounds.len());
                for w in bounds.windows(2) {
                    let atom = &bytes[w[0]..w[1]];
                    match self.vocab.piece_id(atom) {
                        Some(id) => syms.push(id),
                        None => self.push_unknown(atom, &mut syms),
                    }
                }
                apply_merges(&mut syms, ranks);
                out.extend(syms);
            }
            Segmenter::WordPiece { max_piece_atoms } => {
                self.encode_wordpiece(bytes, &bounds, *max_piece_atoms, out)
            }
            Segmenter::Unigram {
                scores,
                unk_score,
                max_piece_atoms,
            } => self.encode_unigram(bytes, &bounds, scores, *unk_score, *max_piece_atoms, out),
        }
    }

    fn push_unknown(&self, atom: &[u8], out: &mut Vec<u32>) {
        match self.unknown_policy {
            UnknownPolicy::ByteFallback => out.extend(atom.iter().map(|&b| {
                self.vocab
                    .byte_id(b)
                    .or_else(|| self.vocab.piece_id(&[b]))
                    .expect("byte fallback covers every byte")
            })),
            UnknownPolicy::UnkToken => out.push(self.unk_id.expect("unk special present")),
        }
    }

    /// Greedy longest-match-first; word-internal matches use continuation pieces.
    fn encode_wordpiece(&self, bytes: &[u8], bounds: &[usize], max_atoms: usize, out: &mut Vec<u32>) {
        let n = bounds.len() - 1;
        let start_len = out.len();
        let mut i = 0;
        while i < n {
            let found = (i + 1..=n.min(i + max_atoms)).rev().find_map(|j| {
                let s = &bytes[bounds[i]..bounds[j]];
                let id = if i == 0 {
                    self.vocab.piece_id(s)
                } else {
                    self.vocab.continuation_id(s)
                };
                id.map(|id| (id, j))
            });
            match (found, self.unknown_policy) {
                (Some((id, j)), _) => {
                    out.push(id);
                    i = j;
                }
                (None, UnknownPolicy::UnkToken) => {
                    out.truncate(start_len);
                    out.push(self.unk_id.expect("unk special present"));
                    return;
                }
                (None, UnknownPolicy::ByteFallback) => {
                    self.push_unknown(&bytes[bounds[i]..bounds[i + 1]], out);
                    i += 1;
                }
            }
        }
    }

    /// Viterbi segmentation over the piece lattice of one pre-token.
    fn encode_unigram(
        &self,
        bytes: &[u8],
        bounds: &[usize],
        scores: &[f64],
        unk_score: f64,
        max_atoms: usize,
        out: &mut Vec<u32>,
    ) {
        let n = bounds.len() - 1;
        let mut best = vec![f64::NEG_INFINITY; n + 1];
        let mut back: Vec<(usize, Option<u32>)> = vec![(0, None); n + 1];
        best[0] = 0.0;
        for i in 0..n {
            let base = best[i];
            let mut has_single = false;
            for j in i + 1..=n.min(i + max_atoms) {
                if let Some(id) = self.vocab.piece_id(&bytes[bounds[i]..bounds[j]]) {
                    has_single |= j == i + 1;
                    let cand = base + scores[id as usize];
                    if cand > best[j] {
                        best[j] = cand;
                        back[j] = (i, Some(id));
                    }
                }
            }
            if !has_single && base + unk_score > best[i + 1] {
                best[i + 1] = base + unk_score;
                back[i + 1] = (i, None);
            }
        }
        let mut path = Vec::new();
        let mut j = n;
        while j > 0 {
            let (i, id) = back[j];
            path.push((i, j, id));
            j = i;
        }
        for (i, j, id) in path.into_iter().rev() {
            match id {
                Some(id) => out.push(id),
                None => self.push_unknown(&bytes[bounds[i]..bounds[j]], out),
            }
        }
    }

    /// Concatenates token texts. WordPiece models under a whitespace-dropping
    /// pre-tokenizer put a space before every word-initial piece; other models
    /// carry no boundary information in ids (see [`Self::decode_pretokens`]).
    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        let spaced = self.algorithm == Algorithm::Wordpiece && self.pretokenizer.drops_whitespace();
        let mut bytes = Vec::new();
        for (pos, &id) in ids.iter().enumerate() {
            let kind = self.vocab.kind(id).ok_or(Error::IdOutOfRange(id))?;
            if spaced && pos > 0 && matches!(kind, TokenKind::Piece | TokenKind::Special) {
                bytes.push(b' ');
            }
            bytes.extend_from_slice(self.vocab.bytes(id).expect("checked above"));
        }
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    /// Decodes per-pre-token id groups; whitespace-dropping specs rejoin them with single spaces.
    pub fn decode_pretokens(&self, groups: &[Vec<u32>]) -> Result<String> {
        let sep = if self.pretokenizer.drops_whitespace() { " " } else { "" };
        let parts = groups
            .iter()
            .map(|g| self.decode_group(g))
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.join(sep))
    }

    fn decode_group(&self, ids: &[u32]) -> Result<String> {
        let mut bytes = Vec::new();
        for &id in ids {
            bytes.extend_from_slice(self.vocab.bytes(id).ok_or(Error::IdOutOfRange(id))?);
        }
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    pub fn to_json(&self) -> Result<String> {
        let vocab = self.vocab.ids().map(|id| (self.token(id), id)).collect();
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            algorithm: self.algorithm.name().to_owned(),
            pretokenizer: self.pretokenizer.clone(),
            atomic_mode: self.atomic_mode,
            segmentation_policy: self.segmentation_policy,
            unknown_policy: self.unknown_policy,
            specials: self.specials.clone(),
            vocab,
            merges: matches!(self.segmenter, Segmenter::Merges { .. })
                .then(|| self.merge_strings()),
            piece_scores: matches!(self.segmenter, Segmenter::Unigram { .. })
                .then(|| self.piece_scores()),
            trainer_settings: self.trainer_settings.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let raw: Value = serde_json::from_str(json)
            .map_err(|e| Error::Schema(format!("not a JSON document: {e}")))?;
        match raw.get("format_version").and_then(Value::as_u64) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => {
                return Err(Error::Schema(format!(
                    "unsupported format_version {v} (expected {FORMAT_VERSION})"
                )))
            }
            None => return Err(Error::Schema("missing format_version".to_owned())),
        }
        let algorithm = match raw.get("algorithm").and_then(Value::as_str) {
            Some(tag) => tag.parse::<Algorithm>().map_err(|_| {
                Error::Schema(format!("unknown algorithm tag '{tag}'"))
            })?,
            None => return Err(Error::Schema("missing algorithm tag".to_owned())),
        };
        let file: ModelFile = serde_json::from_value(raw)
            .map_err(|e| Error::Schema(format!("format_version {FORMAT_VERSION}: {e}")))?;
        let byte_block = file.unknown_policy == UnknownPolicy::ByteFallback
            && file.atomic_mode != AtomicMode::Byte;
        let vocab = Vocabulary::from_entries(&file.specials, byte_block, &file.vocab)?;
        let header = Header {
            algorithm,
            pretokenizer: file.pretokenizer,
            atomic_mode: file.atomic_mode,
            segmentation_policy: file.segmentation_policy,
            unknown_policy: file.unknown_policy,
            specials: file.specials,
            trainer_settings: file.trainer_settings,
        };
        match algorithm {
            Algorithm::Bpe | Algorithm::Gpe => {
                let pairs = file
                    .merges
                    .ok_or_else(|| Error::Schema(format!("{} model without merges", algorithm.name())))?;
                let rules = resolve_merges(&vocab, &pairs)?;
                Self::with_merges(header, vocab, rules)
            }
            Algorithm::Wordpiece => Self::with_wordpiece(header, vocab),
            Algorithm::Unigram => {
                let pieces = file
                    .piece_scores
                    .ok_or_else(|| Error::Schema("unigram model without piece_scores".to_owned()))?;
                let mut scores = FxHashMap::default();
                for (tok, score) in &pieces {
                    let id = vocab
                        .token_to_id(tok)
                        .filter(|&id| vocab.kind(id) == Some(TokenKind::Piece))
                        .ok_or_else(|| Error::Schema(format!("scored piece {tok:?} is not in the vocabulary")))?;
                    scores.insert(id, *score);
                }
                Self::with_piece_scores(header, vocab, &scores)
            }
        }
    }
}

fn resolve_merges(vocab: &Vocabulary, pairs: &[(String, String)]) -> Result<Vec<MergeRule>> {
    pairs
        .iter()
        .enumerate()
        .map(|(rank, (l, r))| {
            let broken = |what: &str| {
                Error::Schema(format!("merge rule #{rank} ({l:?}, {r:?}) references absent {what}"))
            };
            let left = vocab.token_to_id(l).ok_or_else(|| broken(&format!("token {l:?}")))?;
            let right = vocab.token_to_id(r).ok_or_else(|| broken(&format!("token {r:?}")))?;
            let mut joined = vocab.bytes(left).unwrap().to_vec();
            joined.extend_from_slice(vocab.bytes(right).unwrap());
            let result = vocab
                .piece_id(&joined)
                .ok_or_else(|| broken("result token"))?;
            Ok(MergeRule {
                left,
                right,
                result,
                rank: rank as u32,
            })
        })
        .collect()
}

/// Repeatedly merges the lowest-ranked adjacent pair, leftmost first.
pub(crate) fn apply_merges(syms: &mut Vec<u32>, ranks: &FxHashMap<(u32, u32), (u32, u32)>) {
    loop {
        let mut best: Option<(u32, usize, u32)> = None;
        for (i, w) in syms.windows(2).enumerate() {
            if let Some(&(rank, result)) = ranks.get(&(w[0], w[1])) {
                if best.is_none_or(|(r, _, _)| rank < r) {
                    best = Some((rank, i, result));
                }
            }
        }
        let Some((_, i, result)) = best else { return };
        syms[i] = result;
        syms.remove(i + 1);
    }
}

fn max_piece_atoms(vocab: &Vocabulary, mode: AtomicMode, policy: SegmentationPolicy) -> usize {
    vocab
        .ids()
        .filter(|&id| matches!(vocab.kind(id), Some(TokenKind::Piece | TokenKind::Continuation)))
        .map(|id| {
            let bytes = vocab.bytes(id).unwrap();
            match std::str::from_utf8(bytes) {
                Ok(s) => atom_bounds(s, mode, policy).len() - 1,
                Err(_) => bytes.len(),
            }
        })
        .max()
        .unwrap_or(1)
        .max(1)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    algorithm: String,
    pretokenizer: PretokenizerSpec,
    atomic_mode: AtomicMode,
    segmentation_policy: SegmentationPolicy,
    unknown_policy: UnknownPolicy,
    specials: Vec<String>,
    vocab: Vec<(String, u32)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    merges: Option<Vec<(String, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    piece_scores: Option<Vec<(String, f64)>>,
    #[serde(default)]
    trainer_settings: Value,
}

pub fn save_model(model: &TokenizerModel, path: &Path) -> Result<()> {
    let mut json = model.to_json()?;
    json.push('\n');
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TokenizerModel> {
    let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TokenizerModel::from_json(&json)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unigram(pieces: &[(&str, f64)], policy: UnknownPolicy) -> TokenizerModel {
        TokenizerModel::unigram_from_pieces(
            PretokenizerSpec::whitespace(),
            AtomicMode::Codepoint,
            policy,
            pieces,
        )
        .unwrap()
    }

    fn tokens(m: &TokenizerModel, text: &str) -> Vec<String> {
        m.encode(text)
            .into_iter()
            .map(|id| m.vocab().id_to_token(id).unwrap())
            .collect()
    }

    #[test]
    fn viterbi_prefers_fewer_equal_pieces() {
        let lp = (0.5f64).ln();
        let m = unigram(&[("a", lp), ("aa", lp)], UnknownPolicy::UnkToken);
        assert_eq!(tokens(&m, "aaaa"), ["aa", "aa"]);
    }

    #[test]
    fn viterbi_follows_probabilities() {
        let m = unigram(&[("a", -0.1), ("aa", -5.0)], UnknownPolicy::UnkToken);
        assert_eq!(tokens(&m, "aaaa"), ["a", "a", "a", "a"]);
    }

    #[test]
    fn unknowns_follow_policy() {
        let m = unigram(&[("a", -1.0)], UnknownPolicy::UnkToken);
        assert_eq!(tokens(&m, "aéa"), ["a", UNK_TOKEN, "a"]);
        assert_eq!(m.decode(&m.encode("é")).unwrap(), UNK_TOKEN);

        let m = unigram(&[("a", -1.0)], UnknownPolicy::ByteFallback);
        assert_eq!(tokens(&m, "aé"), ["a", "<0xC3>", "<0xA9>"]);
        assert_eq!(m.decode(&m.encode("aé")).unwrap(), "aé");
    }

    #[test]
    fn decode_rejects_unknown_ids() {
        let m = unigram(&[("a", -1.0)], UnknownPolicy::UnkToken);
        assert!(matches!(m.decode(&[99]), Err(Error::IdOutOfRange(99))));
    }

    #[test]
    fn decode_pretokens_rejoins_with_spaces() {
        let m = unigram(&[("a", -1.0), ("b", -1.0)], UnknownPolicy::ByteFallback);
        let groups = m.encode_pretokens("a  b");
        assert_eq!(groups.len(), 2);
        assert_eq!(m.decode_pretokens(&groups).unwrap(), "a b");
    }

    #[test]
    fn leftmost_lowest_rank_merge_wins() {
        let mut ranks = FxHashMap::default();
        ranks.insert((1, 1), (0, 2));
        let mut syms = vec![1, 1, 1];
        apply_merges(&mut syms, &ranks);
        assert_eq!(syms, [2, 1]);
    }

    #[test]
    fn json_round_trip_keeps_scores_exact() {
        let m = unigram(&[("a", -1.234_567_890_123), ("ab", -0.1)], UnknownPolicy::ByteFallback);
        let back = TokenizerModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.piece_scores(), m.piece_scores());
        assert_eq!(back.encode("abab a"), m.encode("abab a"));
    }

    #[test]
    fn rejects_bad_headers() {
        let m = unigram(&[("a", -1.0)], UnknownPolicy::ByteFallback);
        let mut v: Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        v["algorithm"] = Value::from("sentencepiece");
        let err = TokenizerModel::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("unknown algorithm tag 'sentencepiece'"), "{err}");
        v["algorithm"] = Value::from("unigram");
        v["format_version"] = Value::from(7);
        let err = TokenizerModel::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("format_version 7"), "{err}");
    }
}
