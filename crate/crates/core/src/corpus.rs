//! Corpus ingestion: strict UTF-8 line reading, seeded sampling and digests.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;

/// Calls `f(line_number, line)` for every line; line numbers start at 1.
/// Invalid UTF-8 is an error naming the line. A trailing `\r` is stripped.
fn for_each_line(path: &Path, mut f: impl FnMut(usize, &str) -> Result<()>) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut buf = Vec::new();
    let mut line = 0;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Ok(());
        }
        line += 1;
        if buf.last() == Some(&b'\n') {
            buf.pop();
        }
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
        let text = std::str::from_utf8(&buf).map_err(|_| Error::InvalidUtf8 {
            path: path.to_owned(),
            line,
        })?;
        f(line, text)?;
    }
}

pub fn nfc(text: &str) -> String {
    text.nfc().collect()
}

/// Reads every line, optionally NFC-normalizing it.
pub fn read_lines(path: &Path, nfc: bool) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for_each_line(path, |_, l| {
        out.push(if nfc { self::nfc(l) } else { l.to_owned() });
        Ok(())
    })?;
    Ok(out)
}

pub fn count_lines(path: &Path) -> Result<usize> {
    let mut n = 0;
    for_each_line(path, |_, _| {
        n += 1;
        Ok(())
    })?;
    Ok(n)
}

/// `n` distinct indices below `total`, drawn uniformly with ChaCha20 seeded by
/// `seed`, returned in ascending order.
pub fn sample_indices(total: usize, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, total, n).into_vec();
    idx.sort_unstable();
    idx
}

/// Uniform sample of `n` lines without replacement, in original order.
/// Streams the file twice instead of holding it in memory.
pub fn sample_lines(path: &Path, n: usize, seed: u64) -> Result<Vec<String>> {
    let total = count_lines(path)?;
    if n > total {
        return Err(Error::NotEnoughLines {
            path: path.to_owned(),
            have: total,
            need: n,
        });
    }
    let picks = sample_indices(total, n, seed);
    let mut out = Vec::with_capacity(n);
    let mut next = picks.iter().peekable();
    for_each_line(path, |line, text| {
        if next.peek() == Some(&&(line - 1)) {
            next.next();
            out.push(text.to_owned());
        }
        Ok(())
    })?;
    Ok(out)
}

pub fn write_lines<S: AsRef<str>>(path: &Path, lines: &[S]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for l in lines {
        w.write_all(l.as_ref().as_bytes())
            .and_then(|_| w.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of the lines joined with `\n` terminators.
pub fn digest_lines<S: AsRef<str>>(lines: &[S]) -> String {
    let mut h = Sha256::new();
    for l in lines {
        h.update(l.as_ref().as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
