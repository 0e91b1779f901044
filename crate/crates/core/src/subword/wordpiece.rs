use std::cmp::Ordering;

use super::bpe::{header, seed, PairIndex, Seeded};
use super::model::TokenizerModel;
use super::vocab::TokenKind;
use super::{Algorithm, TrainOptions};
use crate::pretokenize::PretokenizerSpec;
use crate::Result;

/// WordPiece: merges the pair maximizing `count(pair) / (count(left) * count(right))`
/// among pairs seen at least `min_frequency` times.
pub fn train_wordpiece<S: AsRef<str> + Sync>(
    lines: &[S],
    spec: &PretokenizerSpec,
    opts: &TrainOptions,
) -> Result<TokenizerModel> {
    let Seeded {
        mut vocab,
        mut words,
        freqs,
    } = seed(lines, spec, opts, Algorithm::Wordpiece, true)?;

    let mut surfaces: Vec<String> = vocab.ids().map(|id| vocab.id_to_token(id).unwrap()).collect();
    let mut sym_counts = vec![0u64; vocab.len()];
    for (syms, &f) in words.iter().zip(&freqs) {
        for &s in syms {
            sym_counts[s as usize] += f;
        }
    }
    let mut index = PairIndex::new(&words, &freqs);
    let min_count = opts.min_frequency.max(1);

    while vocab.len() < opts.vocab_size {
        let mut best: Option<((u32, u32), u64)> = None;
        for (&pair, &count) in &index.pairs {
            if count < min_count {
                continue;
            }
            let better = match best {
                None => true,
                Some((bp, bc)) => {
                    let lhs = u128::from(count)
                        * u128::from(sym_counts[bp.0 as usize])
                        * u128::from(sym_counts[bp.1 as usize]);
                    let rhs = u128::from(bc)
                        * u128::from(sym_counts[pair.0 as usize])
                        * u128::from(sym_counts[pair.1 as usize]);
                    match lhs.cmp(&rhs) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        Ordering::Equal => {
                            (&surfaces[pair.0 as usize], &surfaces[pair.1 as usize])
                                < (&surfaces[bp.0 as usize], &surfaces[bp.1 as usize])
                        }
                    }
                }
            };
            if better {
                best = Some((pair, count));
            }
        }
        let Some((pair, _)) = best else { break };

        let mut joined = vocab.bytes(pair.0).unwrap().to_vec();
        joined.extend_from_slice(vocab.bytes(pair.1).unwrap());
        let result = match vocab.kind(pair.0) {
            Some(TokenKind::Continuation) => vocab.insert_continuation(joined),
            _ => vocab.insert_piece(joined),
        };
        if result as usize == surfaces.len() {
            surfaces.push(vocab.id_to_token(result).unwrap());
            sym_counts.push(0);
        }
        let replaced = index.merge(&mut words, &freqs, pair, result);
        sym_counts[pair.0 as usize] -= replaced;
        sym_counts[pair.1 as usize] -= replaced;
        sym_counts[result as usize] += replaced;
    }

    TokenizerModel::with_wordpiece(header(Algorithm::Wordpiece, spec, opts), vocab)
}
