//! Token inventory and the string forms tokens take in model files.
//!
//! Tokens are byte strings. Their printable ("surface") form is the literal
//! text when that is unambiguous; otherwise every byte is written as `<0xNN>`.
//! Escaping kicks in when the bytes are not valid UTF-8, when the literal text
//! itself looks like an escape run, starts with the `##` continuation prefix,
//! or collides with a special token. Reserved fallback bytes are always `<0xNN>`.

use rustc_hash::FxHashMap;

use crate::{Error, Result};

pub const CONTINUATION_PREFIX: &str = "##";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Special,
    /// One of the 256 reserved fallback bytes.
    Byte,
    Piece,
    /// Word-internal WordPiece unit, printed with the `##` prefix.
    Continuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    bytes: Vec<u8>,
    kind: TokenKind,
}

#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    entries: Vec<Entry>,
    pieces: FxHashMap<Vec<u8>, u32>,
    continuations: FxHashMap<Vec<u8>, u32>,
    specials: FxHashMap<String, u32>,
    byte_base: Option<u32>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn next_id(&self) -> u32 {
        u32::try_from(self.entries.len()).expect("vocabulary fits in u32")
    }

    pub fn push_special(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.specials.get(token) {
            return id;
        }
        let id = self.next_id();
        self.entries.push(Entry {
            bytes: token.as_bytes().to_vec(),
            kind: TokenKind::Special,
        });
        self.specials.insert(token.to_owned(), id);
        id
    }

    /// Appends the 256 reserved fallback byte tokens.
    pub fn push_byte_block(&mut self) {
        if self.byte_base.is_some() {
            return;
        }
        self.byte_base = Some(self.next_id());
        for b in 0..=255u8 {
            self.entries.push(Entry {
                bytes: vec![b],
                kind: TokenKind::Byte,
            });
        }
    }

    /// Inserts a piece, returning the existing id when the bytes are already present.
    pub fn insert_piece(&mut self, bytes: Vec<u8>) -> u32 {
        self.insert(bytes, TokenKind::Piece)
    }

    pub fn insert_continuation(&mut self, bytes: Vec<u8>) -> u32 {
        self.insert(bytes, TokenKind::Continuation)
    }

    fn insert(&mut self, bytes: Vec<u8>, kind: TokenKind) -> u32 {
        let map = match kind {
            TokenKind::Piece => &mut self.pieces,
            TokenKind::Continuation => &mut self.continuations,
            _ => unreachable!("specials and bytes have dedicated constructors"),
        };
        if let Some(&id) = map.get(&bytes) {
            return id;
        }
        let id = u32::try_from(self.entries.len()).expect("vocabulary fits in u32");
        map.insert(bytes.clone(), id);
        self.entries.push(Entry { bytes, kind });
        id
    }

    pub fn piece_id(&self, bytes: &[u8]) -> Option<u32> {
        self.pieces.get(bytes).copied()
    }

    pub fn continuation_id(&self, bytes: &[u8]) -> Option<u32> {
        self.continuations.get(bytes).copied()
    }

    pub fn special_id(&self, token: &str) -> Option<u32> {
        self.specials.get(token).copied()
    }

    /// Id of a reserved fallback byte, if the block exists.
    pub fn byte_id(&self, b: u8) -> Option<u32> {
        self.byte_base.map(|base| base + u32::from(b))
    }

    pub fn has_byte_block(&self) -> bool {
        self.byte_base.is_some()
    }

    pub fn kind(&self, id: u32) -> Option<TokenKind> {
        self.entries.get(id as usize).map(|e| e.kind)
    }

    /// Raw bytes of a token (without the `##` prefix for continuations).
    pub fn bytes(&self, id: u32) -> Option<&[u8]> {
        self.entries.get(id as usize).map(|e| e.bytes.as_slice())
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.entries.len()).map(|i| i as u32)
    }

    /// Printable form of a token, as stored in model files.
    pub fn id_to_token(&self, id: u32) -> Option<String> {
        let e = self.entries.get(id as usize)?;
        Some(match e.kind {
            TokenKind::Special => String::from_utf8(e.bytes.clone()).expect("specials are text"),
            TokenKind::Byte => escape_bytes(&e.bytes),
            TokenKind::Piece => self.piece_surface(&e.bytes),
            TokenKind::Continuation => {
                format!("{CONTINUATION_PREFIX}{}", inner_surface(&e.bytes))
            }
        })
    }

    pub fn token_to_id(&self, surface: &str) -> Option<u32> {
        if let Some(id) = self.special_id(surface) {
            return Some(id);
        }
        if self.byte_base.is_some() && surface.len() == 6 {
            if let Some(b) = parse_escapes(surface).filter(|b| b.len() == 1) {
                return self.byte_id(b[0]);
            }
        }
        if let Some(rest) = surface.strip_prefix(CONTINUATION_PREFIX) {
            return self.continuation_id(&parse_inner(rest));
        }
        self.piece_id(&parse_inner(surface))
    }

    fn piece_surface(&self, bytes: &[u8]) -> String {
        match std::str::from_utf8(bytes) {
            Ok(s)
                if !s.starts_with(CONTINUATION_PREFIX)
                    && parse_escapes(s).is_none()
                    && !self.specials.contains_key(s) =>
            {
                s.to_owned()
            }
            _ => escape_bytes(bytes),
        }
    }

    /// Rebuilds a vocabulary from `(surface, id)` pairs in a model file.
    ///
    /// Ids must be dense, the first `specials.len()` ids must be the specials in
    /// order, followed by the fallback byte block when `byte_block` is set.
    pub fn from_entries(
        specials: &[String],
        byte_block: bool,
        entries: &[(String, u32)],
    ) -> Result<Self> {
        let mut sorted: Vec<&(String, u32)> = entries.iter().collect();
        sorted.sort_by_key(|(_, id)| *id);
        for (pos, (tok, id)) in sorted.iter().enumerate() {
            if *id as usize != pos {
                return Err(Error::Schema(format!(
                    "vocabulary ids are not dense: token {tok:?} has id {id}, expected {pos}"
                )));
            }
        }
        let mut vocab = Vocabulary::new();
        for (pos, special) in specials.iter().enumerate() {
            match sorted.get(pos) {
                Some((tok, _)) if tok == special => {
                    vocab.push_special(special);
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "special token {special:?} must have id {pos}"
                    )))
                }
            }
        }
        if vocab.len() != specials.len() {
            return Err(Error::Schema("duplicate special tokens".to_owned()));
        }
        if byte_block {
            vocab.push_byte_block();
            for b in 0..=255u8 {
                let pos = specials.len() + b as usize;
                let expected = escape_bytes(&[b]);
                if sorted.get(pos).map(|(t, _)| t.as_str()) != Some(expected.as_str()) {
                    return Err(Error::Schema(format!(
                        "fallback byte {expected} must have id {pos}"
                    )));
                }
            }
        }
        for (tok, id) in sorted.iter().skip(vocab.len()) {
            let before = vocab.len();
            let assigned = match tok.strip_prefix(CONTINUATION_PREFIX) {
                Some(rest) => vocab.insert_continuation(parse_inner(rest)),
                None => vocab.insert_piece(parse_inner(tok)),
            };
            if vocab.len() == before || assigned != *id {
                return Err(Error::Schema(format!("duplicate vocabulary entry {tok:?}")));
            }
            if vocab.id_to_token(assigned).as_deref() != Some(tok.as_str()) {
                return Err(Error::Schema(format!(
                    "vocabulary entry {tok:?} is not in canonical form"
                )));
            }
        }
        Ok(vocab)
    }
}

pub fn escape_bytes(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("<0x{b:02X}>")).collect()
}

/// Decodes a non-empty run of `<0xNN>` escapes; `None` if `s` is anything else.
pub fn parse_escapes(s: &str) -> Option<Vec<u8>> {
    let raw = s.as_bytes();
    if raw.is_empty() || !raw.len().is_multiple_of(6) {
        return None;
    }
    raw.chunks(6)
        .map(|c| {
            let hex = std::str::from_utf8(&c[3..5]).ok()?;
            let upper = hex.bytes().all(|h| h.is_ascii_digit() || (b'A'..=b'F').contains(&h));
            if &c[..3] == b"<0x" && c[5] == b'>' && upper {
                u8::from_str_radix(hex, 16).ok()
            } else {
                None
            }
        })
        .collect()
}

fn inner_surface(bytes: &[u8]) -> String {
    match std::str::from_utf8(bytes) {
        Ok(s) if parse_escapes(s).is_none() => s.to_owned(),
        _ => escape_bytes(bytes),
    }
}

fn parse_inner(s: &str) -> Vec<u8> {
    parse_escapes(s).unwrap_or_else(|| s.as_bytes().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_round_trip() {
        assert_eq!(escape_bytes(&[0xE0, 0x41]), "<0xE0><0x41>");
        assert_eq!(parse_escapes("<0xE0><0x41>"), Some(vec![0xE0, 0x41]));
        assert_eq!(parse_escapes("<0xe0>"), None);
        assert_eq!(parse_escapes("<0xE0"), None);
        assert_eq!(parse_escapes(""), None);
    }

    #[test]
    fn surfaces_are_unambiguous() {
        let mut v = Vocabulary::new();
        v.push_special("<unk>");
        v.push_byte_block();
        let a = v.insert_piece(b"A".to_vec());
        let lit = v.insert_piece(b"<0x41>".to_vec());
        let hash = v.insert_piece(b"##x".to_vec());
        let cont = v.insert_continuation(b"x".to_vec());
        let unk_text = v.insert_piece(b"<unk>".to_vec());
        let ids = [0, v.byte_id(0x41).unwrap(), a, lit, hash, cont, unk_text];
        let surfaces: Vec<String> = ids.iter().map(|&i| v.id_to_token(i).unwrap()).collect();
        assert_eq!(surfaces[1], "<0x41>");
        assert_eq!(surfaces[2], "A");
        assert_eq!(surfaces[5], "##x");
        let mut uniq = surfaces.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), surfaces.len(), "{surfaces:?}");
        for (&id, s) in ids.iter().zip(&surfaces) {
            assert_eq!(v.token_to_id(s), Some(id), "{s}");
        }
    }

    #[test]
    fn from_entries_checks_layout() {
        let mut v = Vocabulary::new();
        v.push_special("<unk>");
        v.insert_piece(b"a".to_vec());
        v.insert_piece(vec![0xE0]);
        let entries: Vec<(String, u32)> =
            v.ids().map(|i| (v.id_to_token(i).unwrap(), i)).collect();
        let back = Vocabulary::from_entries(&["<unk>".into()], false, &entries).unwrap();
        assert_eq!(back.piece_id(&[0xE0]), Some(2));

        let mut gap = entries.clone();
        gap[2].1 = 7;
        assert!(Vocabulary::from_entries(&["<unk>".into()], false, &gap).is_err());
        assert!(Vocabulary::from_entries(&[], true, &entries).is_err());
    }
}
