use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use rustc_hash::FxHashMap;

use super::model::{Header, MergeRule, TokenizerModel};
use super::{atom_bounds, count_pretokens, Algorithm, AtomicMode, TrainOptions};
use crate::pretokenize::PretokenizerSpec;
use crate::{Error, Result};

/// Distinct pre-tokens as atom-id sequences, plus the vocabulary seeded with every atom.
pub(super) struct Seeded {
    pub vocab: super::Vocabulary,
    pub words: Vec<Vec<u32>>,
    pub freqs: Vec<u64>,
}

/// Counts pre-tokens, seeds the vocabulary (specials, fallback bytes, atoms sorted
/// by bytes) and checks the budget. `continuations` marks word-internal atoms as
/// WordPiece continuation pieces.
pub(super) fn seed<S: AsRef<str> + Sync>(
    lines: &[S],
    spec: &PretokenizerSpec,
    opts: &TrainOptions,
    algorithm: Algorithm,
    continuations: bool,
) -> Result<Seeded> {
    let counts = count_pretokens(lines, spec)?;
    let mut vocab = opts.base_vocab();
    let base = vocab.len();

    let split: Vec<Vec<&[u8]>> = counts
        .iter()
        .map(|(w, _)| {
            atom_bounds(w, opts.atomic_mode, opts.segmentation_policy)
                .windows(2)
                .map(|b| &w.as_bytes()[b[0]..b[1]])
                .collect()
        })
        .collect();
    let mut initial: Vec<&[u8]> = Vec::new();
    let mut internal: Vec<&[u8]> = Vec::new();
    for atoms in &split {
        initial.push(atoms[0]);
        internal.extend_from_slice(&atoms[1..]);
    }
    if !continuations {
        initial.append(&mut internal);
    }
    for set in [&mut initial, &mut internal] {
        set.sort_unstable();
        set.dedup();
    }
    for a in &initial {
        vocab.insert_piece(a.to_vec());
    }
    for a in &internal {
        vocab.insert_continuation(a.to_vec());
    }

    if vocab.len() > opts.vocab_size {
        let specials = opts.specials().len();
        if algorithm == Algorithm::Gpe {
            let unique = initial.len();
            let budget = opts.vocab_size.saturating_sub(base);
            return Err(Error::GraphemeBudget {
                unique,
                budget,
                overflow: unique - budget,
            });
        }
        let fallback = base - specials;
        return Err(Error::VocabTooSmall {
            requested: opts.vocab_size,
            required: vocab.len(),
            detail: format!(
                "{specials} specials, {fallback} byte tokens, {} atoms",
                vocab.len() - base
            ),
        });
    }

    let words = split
        .iter()
        .map(|atoms| {
            atoms
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let id = if continuations && i > 0 {
                        vocab.continuation_id(a)
                    } else {
                        vocab.piece_id(a)
                    };
                    id.expect("atom was seeded")
                })
                .collect()
        })
        .collect();
    let freqs = counts.iter().map(|&(_, c)| c).collect();
    Ok(Seeded {
        vocab,
        words,
        freqs,
    })
}

pub(super) fn header(algorithm: Algorithm, spec: &PretokenizerSpec, opts: &TrainOptions) -> Header {
    Header {
        algorithm,
        pretokenizer: spec.clone(),
        atomic_mode: opts.atomic_mode,
        segmentation_policy: opts.segmentation_policy,
        unknown_policy: opts.unknown_policy,
        specials: opts.specials(),
        trainer_settings: serde_json::to_value(opts).expect("options serialize"),
    }
}

/// Byte-pair encoding over the atoms chosen in `opts` (bytes by default).
pub fn train_bpe<S: AsRef<str> + Sync>(
    lines: &[S],
    spec: &PretokenizerSpec,
    opts: &TrainOptions,
) -> Result<TokenizerModel> {
    train_merges(lines, spec, opts, Algorithm::Bpe)
}

/// Grapheme pair encoding: BPE whose seed vocabulary is the set of grapheme clusters.
pub fn train_gpe<S: AsRef<str> + Sync>(
    lines: &[S],
    spec: &PretokenizerSpec,
    opts: &TrainOptions,
) -> Result<TokenizerModel> {
    if opts.atomic_mode != AtomicMode::Grapheme {
        return Err(Error::Invalid("gpe requires atomic_mode = grapheme".to_owned()));
    }
    train_merges(lines, spec, opts, Algorithm::Gpe)
}

fn train_merges<S: AsRef<str> + Sync>(
    lines: &[S],
    spec: &PretokenizerSpec,
    opts: &TrainOptions,
    algorithm: Algorithm,
) -> Result<TokenizerModel> {
    let Seeded {
        mut vocab,
        mut words,
        freqs,
    } = seed(lines, spec, opts, algorithm, false)?;

    let mut surfaces: Vec<Arc<[u8]>> = vocab
        .ids()
        .map(|id| Arc::from(vocab.bytes(id).unwrap()))
        .collect();
    let mut index = PairIndex::new(&words, &freqs);
    let mut heap: BinaryHeap<Candidate> = index
        .pairs
        .iter()
        .map(|(&pair, &count)| Candidate::new(count, pair, &surfaces))
        .collect();

    let mut rules = Vec::new();
    while vocab.len() < opts.vocab_size {
        let Some(best) = heap.pop() else { break };
        if index.count(best.pair) != best.count {
            continue;
        }
        if best.count < opts.min_frequency.max(1) {
            break;
        }
        let (left, right) = best.pair;
        let mut joined = surfaces[left as usize].to_vec();
        joined.extend_from_slice(&surfaces[right as usize]);
        let result = vocab.insert_piece(joined);
        if result as usize == surfaces.len() {
            surfaces.push(Arc::from(vocab.bytes(result).unwrap()));
        }
        rules.push(MergeRule {
            left,
            right,
            result,
            rank: rules.len() as u32,
        });
        index.merge(&mut words, &freqs, best.pair, result);
        for key in &index.touched {
            if let Some(&count) = index.pairs.get(key) {
                heap.push(Candidate::new(count, *key, &surfaces));
            }
        }
    }

    TokenizerModel::with_merges(header(algorithm, spec, opts), vocab, rules)
}

/// Weighted adjacent-pair counts with an inverted index from pair to words.
pub(super) struct PairIndex {
    pub pairs: FxHashMap<(u32, u32), u64>,
    where_: FxHashMap<(u32, u32), Vec<u32>>,
    /// Pairs whose count changed in the last merge (zero counts are removed).
    pub touched: Vec<(u32, u32)>,
}

impl PairIndex {
    pub fn new(words: &[Vec<u32>], freqs: &[u64]) -> Self {
        let mut pairs: FxHashMap<(u32, u32), u64> = FxHashMap::default();
        let mut where_: FxHashMap<(u32, u32), Vec<u32>> = FxHashMap::default();
        for (w, syms) in words.iter().enumerate() {
            for p in syms.windows(2) {
                let key = (p[0], p[1]);
                *pairs.entry(key).or_default() += freqs[w];
                let list = where_.entry(key).or_default();
                if list.last() != Some(&(w as u32)) {
                    list.push(w as u32);
                }
            }
        }
        Self {
            pairs,
            where_,
            touched: Vec::new(),
        }
    }

    pub fn count(&self, pair: (u32, u32)) -> u64 {
        self.pairs.get(&pair).copied().unwrap_or(0)
    }

    /// Replaces every non-overlapping `pair` (left to right) with `result`.
    /// Returns the weighted number of replacements.
    pub fn merge(&mut self, words: &mut [Vec<u32>], freqs: &[u64], pair: (u32, u32), result: u32) -> u64 {
        let (left, right) = pair;
        let mut affected = self.where_.remove(&pair).unwrap_or_default();
        affected.sort_unstable();
        affected.dedup();
        self.touched.clear();
        let mut replaced = 0;
        for w in affected {
            let syms = &mut words[w as usize];
            if !syms.windows(2).any(|p| p[0] == left && p[1] == right) {
                continue;
            }
            let f = freqs[w as usize];
            for p in syms.windows(2) {
                let key = (p[0], p[1]);
                *self.pairs.get_mut(&key).expect("pair counted") -= f;
                self.touched.push(key);
            }
            let mut merged = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == left && syms[i + 1] == right {
                    merged.push(result);
                    replaced += f;
                    i += 2;
                } else {
                    merged.push(syms[i]);
                    i += 1;
                }
            }
            *syms = merged;
            for p in syms.windows(2) {
                let key = (p[0], p[1]);
                *self.pairs.entry(key).or_default() += f;
                self.touched.push(key);
                if p[0] == result || p[1] == result {
                    let list = self.where_.entry(key).or_default();
                    if list.last() != Some(&w) {
                        list.push(w);
                    }
                }
            }
        }
        self.touched.sort_unstable();
        self.touched.dedup();
        for key in &self.touched {
            if self.pairs.get(key) == Some(&0) {
                self.pairs.remove(key);
            }
        }
        replaced
    }
}

/// Heap entry: highest count first, then the lexicographically smallest `(left, right)`.
struct Candidate {
    count: u64,
    pair: (u32, u32),
    left: Arc<[u8]>,
    right: Arc<[u8]>,
}

impl Candidate {
    fn new(count: u64, pair: (u32, u32), surfaces: &[Arc<[u8]>]) -> Self {
        Self {
            count,
            pair,
            left: surfaces[pair.0 as usize].clone(),
            right: surfaces[pair.1 as usize].clone(),
        }
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}
