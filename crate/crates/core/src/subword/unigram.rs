//! Unigram language-model tokenizer: seed with frequent substrings, re-estimate
//! piece probabilities with EM, prune the pieces whose removal costs the least
//! likelihood, repeat until the budget is met.

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::bpe::{header, seed, Seeded};
use super::model::TokenizerModel;
use super::vocab::TokenKind;
use super::{Algorithm, TrainOptions};
use crate::pretokenize::PretokenizerSpec;
use crate::{Error, Result};

/// Words per parallel work unit. Fixed so sums do not depend on the thread count.
const CHUNK: usize = 8192;
/// Expected count below which a piece is dropped during re-estimation.
const MIN_EXPECTED: f64 = 0.5;

struct Pieces {
    atoms: Vec<Box<[u32]>>,
    required: Vec<bool>,
    logp: Vec<f64>,
    table: FxHashMap<Box<[u32]>, u32>,
}

impl Pieces {
    fn new(atoms: Vec<Box<[u32]>>, required: Vec<bool>, scores: &[f64]) -> Self {
        let total: f64 = scores.iter().sum();
        let logp = scores.iter().map(|s| (s / total).ln()).collect();
        let table = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i as u32))
            .collect();
        Self {
            atoms,
            required,
            logp,
            table,
        }
    }

    fn len(&self) -> usize {
        self.atoms.len()
    }

    fn retain(&mut self, keep: &[bool], counts: &[f64]) {
        let mut atoms = Vec::new();
        let mut required = Vec::new();
        let mut scores = Vec::new();
        for i in 0..self.len() {
            if keep[i] {
                atoms.push(self.atoms[i].clone());
                required.push(self.required[i]);
                scores.push(counts[i]);
            }
        }
        *self = Pieces::new(atoms, required, &scores);
    }

    /// Calls `f(start, end, piece)` for every piece occurring in `word`.
    fn edges(&self, word: &[u32], max_atoms: usize, mut f: impl FnMut(usize, usize, u32)) {
        for i in 0..word.len() {
            for j in i + 1..=word.len().min(i + max_atoms) {
                if let Some(&p) = self.table.get(&word[i..j]) {
                    f(i, j, p);
                }
            }
        }
    }

    /// Best segmentation of `word`, skipping piece `banned`.
    fn viterbi(&self, word: &[u32], max_atoms: usize, banned: Option<u32>) -> Vec<u32> {
        let n = word.len();
        let mut best = vec![f64::NEG_INFINITY; n + 1];
        let mut back = vec![(0usize, u32::MAX); n + 1];
        best[0] = 0.0;
        // Edges come out grouped by start, so `best[i]` is final when read.
        self.edges(word, max_atoms, |i, j, p| {
            if Some(p) == banned {
                return;
            }
            let cand = best[i] + self.logp[p as usize];
            if cand > best[j] {
                best[j] = cand;
                back[j] = (i, p);
            }
        });
        let mut out = Vec::new();
        let mut j = n;
        while j > 0 {
            let (i, p) = back[j];
            if p == u32::MAX {
                return Vec::new();
            }
            out.push(p);
            j = i;
        }
        out.reverse();
        out
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Expected piece counts under the current model (forward-backward per word).
fn expected_counts(pieces: &Pieces, words: &[Vec<u32>], freqs: &[u64], max_atoms: usize) -> Vec<f64> {
    let partial: Vec<Vec<f64>> = words
        .par_chunks(CHUNK)
        .zip(freqs.par_chunks(CHUNK))
        .map(|(ws, fs)| {
            let mut counts = vec![0.0; pieces.len()];
            let mut edges: Vec<(usize, usize, u32)> = Vec::new();
            let mut alpha = Vec::new();
            let mut beta = Vec::new();
            for (word, &f) in ws.iter().zip(fs) {
                let n = word.len();
                edges.clear();
                pieces.edges(word, max_atoms, |i, j, p| edges.push((i, j, p)));
                alpha.clear();
                alpha.resize(n + 1, f64::NEG_INFINITY);
                alpha[0] = 0.0;
                for &(i, j, p) in &edges {
                    alpha[j] = log_add(alpha[j], alpha[i] + pieces.logp[p as usize]);
                }
                beta.clear();
                beta.resize(n + 1, f64::NEG_INFINITY);
                beta[n] = 0.0;
                for &(i, j, p) in edges.iter().rev() {
                    beta[i] = log_add(beta[i], beta[j] + pieces.logp[p as usize]);
                }
                let z = alpha[n];
                for &(i, j, p) in &edges {
                    let post = (alpha[i] + pieces.logp[p as usize] + beta[j] - z).exp();
                    counts[p as usize] += f as f64 * post;
                }
            }
            counts
        })
        .collect();
    let mut total = vec![0.0; pieces.len()];
    for counts in partial {
        for (t, c) in total.iter_mut().zip(counts) {
            *t += c;
        }
    }
    total
}

/// One EM step: maximum-likelihood re-estimation, dropping pieces with tiny expected counts.
fn em_step(pieces: &mut Pieces, words: &[Vec<u32>], freqs: &[u64], max_atoms: usize) {
    let mut counts = expected_counts(pieces, words, freqs, max_atoms);
    let keep: Vec<bool> = (0..pieces.len())
        .map(|i| pieces.required[i] || counts[i] >= MIN_EXPECTED)
        .collect();
    for (i, c) in counts.iter_mut().enumerate() {
        if pieces.required[i] {
            *c = c.max(MIN_EXPECTED);
        }
    }
    pieces.retain(&keep, &counts);
}

/// Keeps the `target` pieces whose removal would cost the most likelihood.
fn prune(pieces: &mut Pieces, words: &[Vec<u32>], freqs: &[u64], max_atoms: usize, target: usize) {
    let vfreq_parts: Vec<Vec<f64>> = words
        .par_chunks(CHUNK)
        .zip(freqs.par_chunks(CHUNK))
        .map(|(ws, fs)| {
            let mut v = vec![0.0; pieces.len()];
            for (word, &f) in ws.iter().zip(fs) {
                for p in pieces.viterbi(word, max_atoms, None) {
                    v[p as usize] += f as f64;
                }
            }
            v
        })
        .collect();
    let mut vfreq = vec![0.0; pieces.len()];
    for part in vfreq_parts {
        for (t, c) in vfreq.iter_mut().zip(part) {
            *t += c;
        }
    }
    let vsum: f64 = vfreq.iter().sum();

    let mut losses: Vec<(f64, u32)> = (0..pieces.len() as u32)
        .into_par_iter()
        .filter(|&p| !pieces.required[p as usize])
        .map(|p| {
            let i = p as usize;
            if vfreq[i] == 0.0 {
                return (f64::NEG_INFINITY, p);
            }
            let alt = pieces.viterbi(&pieces.atoms[i], max_atoms, Some(p));
            let logsum_alt = (vsum + vfreq[i] * (alt.len() as f64 - 1.0)).ln();
            let logprob_alt: f64 = alt
                .iter()
                .map(|&a| (vfreq[a as usize] + vfreq[i]).ln() - logsum_alt)
                .sum();
            let logprob = vfreq[i].ln() - vsum.ln();
            (vfreq[i] / vsum * (logprob - logprob_alt), p)
        })
        .collect();
    losses.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| pieces.atoms[a.1 as usize].cmp(&pieces.atoms[b.1 as usize]))
    });

    let required = pieces.required.iter().filter(|&&r| r).count();
    let mut keep = pieces.required.clone();
    for &(_, p) in losses.iter().take(target.saturating_sub(required)) {
        keep[p as usize] = true;
    }
    let scores: Vec<f64> = pieces.logp.iter().map(|l| l.exp()).collect();
    pieces.retain(&keep, &scores);
}

pub fn train_unigram<S: AsRef<str> + Sync>(
    lines: &[S],
    spec: &PretokenizerSpec,
    opts: &TrainOptions,
) -> Result<TokenizerModel> {
    let settings = &opts.unigram;
    if settings.max_piece_atoms == 0 || !(0.0..1.0).contains(&settings.shrink_factor) {
        return Err(Error::Invalid(
            "unigram needs max_piece_atoms >= 1 and shrink_factor in [0, 1)".to_owned(),
        ));
    }
    let Seeded {
        mut vocab,
        words,
        freqs,
    } = seed(lines, spec, opts, Algorithm::Unigram, false)?;
    let max_atoms = settings.max_piece_atoms;
    let base = vocab
        .ids()
        .filter(|&id| vocab.kind(id) != Some(TokenKind::Piece))
        .count();
    let target = opts.vocab_size - base;

    // Single atoms are required: they guarantee every word stays encodable.
    let mut atom_freq: FxHashMap<u32, f64> = FxHashMap::default();
    for (w, &f) in words.iter().zip(&freqs) {
        for &a in w {
            *atom_freq.entry(a).or_default() += f as f64;
        }
    }
    let mut seeds: Vec<Box<[u32]>> = Vec::new();
    let mut scores: Vec<f64> = Vec::new();
    for id in vocab.ids() {
        if vocab.kind(id) == Some(TokenKind::Piece) {
            seeds.push(Box::new([id]));
            scores.push(atom_freq.get(&id).copied().unwrap_or(0.0).max(MIN_EXPECTED));
        }
    }
    let required_count = seeds.len();

    let mut substrings: FxHashMap<&[u32], u64> = FxHashMap::default();
    for (w, &f) in words.iter().zip(&freqs) {
        for i in 0..w.len() {
            for j in i + 2..=w.len().min(i + max_atoms) {
                *substrings.entry(&w[i..j]).or_default() += f;
            }
        }
    }
    let mut ranked: Vec<(u64, &[u32])> = substrings
        .into_iter()
        .filter(|&(_, f)| f >= 2)
        .map(|(s, f)| (f * s.len() as u64, s))
        .collect();
    let order = |a: &(u64, &[u32]), b: &(u64, &[u32])| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1));
    let limit = opts.vocab_size.saturating_mul(settings.seed_factor);
    if ranked.len() > limit && limit > 0 {
        ranked.select_nth_unstable_by(limit - 1, order);
        ranked.truncate(limit);
    }
    ranked.sort_unstable_by(order);
    for (score, s) in ranked.into_iter().take(limit) {
        seeds.push(s.into());
        scores.push(score as f64);
    }
    let mut required = vec![false; seeds.len()];
    required[..required_count].fill(true);
    let mut pieces = Pieces::new(seeds, required, &scores);

    loop {
        for _ in 0..settings.em_iterations.max(1) {
            em_step(&mut pieces, &words, &freqs, max_atoms);
        }
        if pieces.len() <= target {
            break;
        }
        let shrunk = (pieces.len() as f64 * settings.shrink_factor) as usize;
        prune(&mut pieces, &words, &freqs, max_atoms, target.max(shrunk));
    }

    let mut multi: Vec<usize> = (0..pieces.len()).filter(|&i| !pieces.required[i]).collect();
    multi.sort_by(|&a, &b| {
        pieces.logp[b]
            .total_cmp(&pieces.logp[a])
            .then_with(|| pieces.atoms[a].cmp(&pieces.atoms[b]))
    });
    let mut scores = FxHashMap::default();
    for i in 0..pieces.len() {
        if pieces.required[i] {
            scores.insert(pieces.atoms[i][0], pieces.logp[i]);
        }
    }
    for i in multi {
        let bytes: Vec<u8> = pieces.atoms[i]
            .iter()
            .flat_map(|&a| vocab.bytes(a).unwrap().to_vec())
            .collect();
        let id = vocab.insert_piece(bytes);
        scores.insert(id, pieces.logp[i]);
    }
    TokenizerModel::with_piece_scores(header(Algorithm::Unigram, spec, opts), vocab, &scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subword::{UnknownPolicy, UNK_TOKEN};

    #[test]
    fn log_add_is_stable() {
        assert!((log_add(0.0, 0.0) - 2f64.ln()).abs() < 1e-12);
        assert_eq!(log_add(f64::NEG_INFINITY, -3.0), -3.0);
        assert!((log_add(-1000.0, -1000.0) - (-1000.0 + 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn learns_frequent_words() {
        let lines = ["low lower lowest", "low low newer newest", "low widest newer"];
        let opts = TrainOptions::unigram(30).unknown_policy(UnknownPolicy::UnkToken);
        let m = train_unigram(&lines, &PretokenizerSpec::whitespace(), &opts).unwrap();
        assert!(m.vocab_size() <= 30);
        assert_eq!(m.encode("low").len(), 1);
        assert_eq!(m.decode(&m.encode("newer")).unwrap(), "newer");
    }

    #[test]
    fn atoms_are_never_pruned() {
        let lines = ["abcabcabc xyz", "abcabc q"];
        let opts = TrainOptions::unigram(10).unknown_policy(UnknownPolicy::UnkToken);
        let m = train_unigram(&lines, &PretokenizerSpec::whitespace(), &opts).unwrap();
        for c in ["a", "b", "c", "x", "y", "z", "q"] {
            assert!(m.vocab().piece_id(c.as_bytes()).is_some(), "{c}");
        }
        assert_eq!(m.vocab().id_to_token(0).unwrap(), UNK_TOKEN);
        assert!(!m.encode("qa").contains(&0));
    }

    #[test]
    fn rejects_too_small_budget() {
        let opts = TrainOptions::unigram(3).unknown_policy(UnknownPolicy::UnkToken);
        let err = train_unigram(&["abc"], &PretokenizerSpec::whitespace(), &opts).unwrap_err();
        assert!(matches!(err, Error::VocabTooSmall { required: 4, .. }));
    }
}
