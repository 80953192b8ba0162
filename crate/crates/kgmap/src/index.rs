//! Building the term index and reading/writing it as a SWIX1 file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        5 bytes   "SWIX1"
//! dims         u32
//! count        u32
//! fp_len       u32       then fp_len bytes of UTF-8 fingerprint
//! count × entry:
//!   iri_len    u32       then iri_len bytes of UTF-8
//!   kind       u8        0 = class, 1 = property
//!   vector     dims × f32 (IEEE 754 binary32)
//!   text_len   u32       then text_len bytes of UTF-8 rendered text
//! ```
//!
//! Class entries come first, then properties, each group in insertion order.
//! Anything after the last entry makes the file corrupt.

use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use kgmap_core::embed::EmbeddingVector;
use kgmap_core::term::{build_subgraph, render_subgraph_text, TermKind, Vocabulary};
use kgmap_core::vstore::{IndexEntry, VectorIndex};

use crate::embedder::Embedder;
use crate::error::Error;

pub const MAGIC: &[u8; 5] = b"SWIX1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub property_cap: usize,
    pub include_pending: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            property_cap: kgmap_core::term::DEFAULT_PROPERTY_CAP,
            include_pending: false,
        }
    }
}

/// One entry per indexable term. Nothing is returned unless every term
/// embedded successfully.
pub fn build_index(vocab: &Vocabulary, embedder: &Embedder, opts: BuildOptions) -> Result<VectorIndex, Error> {
    let terms: Vec<_> = vocab.indexable(opts.include_pending).collect();
    let texts: Vec<String> = terms
        .iter()
        .map(|t| render_subgraph_text(&build_subgraph(t, vocab, opts.property_cap)))
        .collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let vectors = embedder.embed_batch(&refs)?;
    let dims = match embedder.config() {
        crate::embedder::EmbedderConfig::Baseline { dims } => *dims,
        crate::embedder::EmbedderConfig::Remote { .. } => vectors.first().map_or(0, EmbeddingVector::dims),
    };
    let mut index = VectorIndex::new(dims, embedder.fingerprint());
    for ((term, text), vector) in terms.iter().zip(texts).zip(vectors) {
        index
            .insert(IndexEntry {
                iri: term.iri.clone(),
                kind: term.kind,
                vector,
                rendered_text: text,
            })
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    }
    Ok(index)
}

fn kind_byte(kind: TermKind) -> u8 {
    match kind {
        TermKind::Class => 0,
        TermKind::Property => 1,
    }
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    let len = u32::try_from(s.len()).expect("string shorter than 4 GiB");
    out.write_u32::<LittleEndian>(len).expect("vec write");
    out.extend_from_slice(s.as_bytes());
}

pub fn encode_index(index: &VectorIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    let w = |out: &mut Vec<u8>, n: usize| {
        out.write_u32::<LittleEndian>(u32::try_from(n).expect("fits in u32"))
            .expect("vec write")
    };
    w(&mut out, index.dims());
    w(&mut out, index.len());
    write_str(&mut out, index.fingerprint());
    for e in index.entries() {
        write_str(&mut out, &e.iri);
        out.push(kind_byte(e.kind));
        for &x in e.vector.values() {
            out.write_f32::<LittleEndian>(x).expect("vec write");
        }
        write_str(&mut out, &e.rendered_text);
    }
    out
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptIndexFile(msg.into())
}

fn read_u32(cur: &mut Cursor<&[u8]>, what: &str) -> Result<u32, Error> {
    cur.read_u32::<LittleEndian>()
        .map_err(|_| corrupt(format!("truncated while reading {what}")))
}

fn read_string(cur: &mut Cursor<&[u8]>, what: &str) -> Result<String, Error> {
    let len = read_u32(cur, what)? as usize;
    let remaining = cur.get_ref().len() - cur.position() as usize;
    if len > remaining {
        return Err(corrupt(format!("truncated while reading {what}")));
    }
    let mut buf = vec![0; len];
    cur.read_exact(&mut buf)
        .map_err(|_| corrupt(format!("truncated while reading {what}")))?;
    String::from_utf8(buf).map_err(|_| corrupt(format!("{what} is not UTF-8")))
}

pub fn decode_index(bytes: &[u8]) -> Result<VectorIndex, Error> {
    let mut cur = Cursor::new(bytes);
    let mut magic = [0u8; 5];
    cur.read_exact(&mut magic).map_err(|_| corrupt("truncated magic"))?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let dims = read_u32(&mut cur, "dims")? as usize;
    let count = read_u32(&mut cur, "count")? as usize;
    let fingerprint = read_string(&mut cur, "fingerprint")?;
    let mut index = VectorIndex::new(dims, fingerprint);
    for i in 0..count {
        let iri = read_string(&mut cur, "entry iri")?;
        let kind = match cur.read_u8().map_err(|_| corrupt("truncated kind byte"))? {
            0 => TermKind::Class,
            1 => TermKind::Property,
            b => return Err(corrupt(format!("entry {i} has unknown kind byte {b}"))),
        };
        let remaining = bytes.len() - cur.position() as usize;
        if remaining < dims * 4 {
            return Err(corrupt(format!("truncated vector in entry {i}")));
        }
        let mut values = vec![0f32; dims];
        cur.read_f32_into::<LittleEndian>(&mut values)
            .map_err(|_| corrupt(format!("truncated vector in entry {i}")))?;
        let rendered_text = read_string(&mut cur, "entry text")?;
        index
            .insert(IndexEntry {
                iri,
                kind,
                vector: EmbeddingVector::from_values(values),
                rendered_text,
            })
            .map_err(|e| corrupt(e.to_string()))?;
    }
    if cur.position() as usize != bytes.len() {
        return Err(corrupt("trailing bytes after last entry"));
    }
    Ok(index)
}

pub fn save_index(index: &VectorIndex, path: &Path) -> Result<(), Error> {
    let bytes = encode_index(index);
    // write then rename so a failed save never leaves a half-written index
    let tmp = path.with_extension("swix.tmp");
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Loads an index; with `expected_fingerprint` set, a header naming another
/// embedder is rejected.
pub fn load_index(path: &Path, expected_fingerprint: Option<&str>) -> Result<VectorIndex, Error> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let index = decode_index(&bytes)?;
    if let Some(expected) = expected_fingerprint {
        if index.fingerprint() != expected {
            return Err(corrupt(format!(
                "index was built by {}, configured embedder is {expected}",
                index.fingerprint()
            )));
        }
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_index() -> VectorIndex {
        let mut idx = VectorIndex::new(2, "test:2");
        for (iri, kind, v) in [
            ("https://schema.org/name", TermKind::Property, [0.6f32, 0.8]),
            ("https://schema.org/Movie", TermKind::Class, [1.0, 0.0]),
        ] {
            idx.insert(IndexEntry {
                iri: iri.into(),
                kind,
                vector: EmbeddingVector::from_values(v.to_vec()),
                rendered_text: "t".into(),
            })
            .unwrap();
        }
        idx
    }

    #[test]
    fn exact_bytes_of_small_index() {
        let bytes = encode_index(&small_index());
        let mut expected = Vec::new();
        expected.extend_from_slice(b"SWIX1");
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&6u32.to_le_bytes());
        expected.extend_from_slice(b"test:2");
        // class first
        expected.extend_from_slice(&24u32.to_le_bytes());
        expected.extend_from_slice(b"https://schema.org/Movie");
        expected.push(0);
        expected.extend_from_slice(&[0x00, 0x00, 0x80, 0x3f, 0, 0, 0, 0]);
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.push(b't');
        expected.extend_from_slice(&23u32.to_le_bytes());
        expected.extend_from_slice(b"https://schema.org/name");
        expected.push(1);
        expected.extend_from_slice(&0.6f32.to_le_bytes());
        expected.extend_from_slice(&0.8f32.to_le_bytes());
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.push(b't');
        assert_eq!(bytes, expected);
    }

    #[test]
    fn round_trip_and_corruption() {
        let idx = small_index();
        let bytes = encode_index(&idx);
        let back = decode_index(&bytes).unwrap();
        assert_eq!(encode_index(&back), bytes);
        for cut in 0..bytes.len() {
            assert!(
                matches!(decode_index(&bytes[..cut]), Err(Error::CorruptIndexFile(_))),
                "prefix of length {cut} accepted"
            );
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode_index(&extra), Err(Error::CorruptIndexFile(_))));
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(matches!(decode_index(&bad), Err(Error::CorruptIndexFile(_))));
    }

    #[test]
    fn empty_index_round_trip() {
        let idx = VectorIndex::new(512, "baseline:fnv1a64-w1t3-v1:512");
        let back = decode_index(&encode_index(&idx)).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.dims(), 512);
        assert_eq!(back.fingerprint(), idx.fingerprint());
    }

    #[test]
    fn fingerprint_checked_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.swix");
        save_index(&small_index(), &path).unwrap();
        assert!(load_index(&path, Some("test:2")).is_ok());
        assert!(matches!(
            load_index(&path, Some("other")),
            Err(Error::CorruptIndexFile(_))
        ));
    }
}
