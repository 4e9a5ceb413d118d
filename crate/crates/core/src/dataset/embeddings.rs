//! Precomputed backbone embeddings stored as a plain-text index plus a raw
//! little-endian `f32` payload.
//!
//! `index.tsv` starts with a `# backbone_id=<id>\tk_in=<n>` line, then a
//! header row `video_id bird_id start_frame offset f_w d` (tab separated).
//! `offset` is the byte offset of the window's first value in `tokens.bin`;
//! each window holds `f_w * d` row-major values.

use super::labels::{LabelWindow, WindowKey};
use super::{read_to_string, write_atomic};
use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

pub const INDEX_FILE: &str = "index.tsv";
pub const TOKENS_FILE: &str = "tokens.bin";
const HEADER: &str = "video_id\tbird_id\tstart_frame\toffset\tf_w\td";

/// Variable-length token sequence for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    pub key: WindowKey,
    pub f_w: usize,
    pub d: usize,
    /// Row-major `f_w x d`.
    pub tokens: Vec<f32>,
}

impl EmbeddingSequence {
    pub fn new(key: WindowKey, f_w: usize, d: usize, tokens: Vec<f32>) -> Result<Self> {
        if f_w == 0 || tokens.len() != f_w * d {
            return Err(Error::Validation(format!(
                "window {key}: {} values do not form a {f_w}x{d} sequence",
                tokens.len()
            )));
        }
        if tokens.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "window {key}: non-finite token value"
            )));
        }
        Ok(EmbeddingSequence {
            key,
            f_w,
            d,
            tokens,
        })
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.tokens[t * self.d..(t + 1) * self.d]
    }

    /// Mean over the token axis.
    pub fn mean_pool(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for t in 0..self.f_w {
            for (o, &v) in out.iter_mut().zip(self.row(t)) {
                *o += v as f64;
            }
        }
        out.iter_mut().for_each(|v| *v /= self.f_w as f64);
        out
    }
}

/// All windows produced by one backbone.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBundle {
    pub backbone_id: String,
    /// Clip length used upstream; 1 for image backbones.
    pub k_in: u32,
    pub sequences: Vec<EmbeddingSequence>,
}

impl EmbeddingBundle {
    pub fn dim(&self) -> Option<usize> {
        self.sequences.first().map(|s| s.d)
    }

    pub fn get(&self, key: &WindowKey) -> Option<&EmbeddingSequence> {
        self.sequences
            .binary_search_by(|s| s.key.cmp(key))
            .ok()
            .map(|i| &self.sequences[i])
    }

    /// Windows with embeddings but no label; reported, not rejected.
    pub fn orphans(&self, labels: &[LabelWindow]) -> Vec<WindowKey> {
        let known: BTreeSet<WindowKey> = labels.iter().map(|l| l.key()).collect();
        self.sequences
            .iter()
            .filter(|s| !known.contains(&s.key))
            .map(|s| s.key.clone())
            .collect()
    }
}

fn parse_header_line(path: &Path, line: &str) -> Result<(String, u32)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(path, 1, "missing `# backbone_id=..` line"))?;
    let mut backbone = None;
    let mut k_in = None;
    for field in body.trim().split('\t') {
        match field.split_once('=') {
            Some(("backbone_id", v)) => backbone = Some(v.to_string()),
            Some(("k_in", v)) => {
                k_in = Some(v.parse().map_err(|_| Error::parse(path, 1, "bad k_in"))?)
            }
            _ => return Err(Error::parse(path, 1, format!("unexpected field {field:?}"))),
        }
    }
    match (backbone, k_in) {
        (Some(b), Some(k)) => Ok((b, k)),
        _ => Err(Error::parse(
            path,
            1,
            "index header needs backbone_id and k_in",
        )),
    }
}

/// Decodes a bundle from its index text and payload bytes.
pub fn parse_embeddings(index_path: &Path, index: &str, payload: &[u8]) -> Result<EmbeddingBundle> {
    let mut lines = index.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::parse(index_path, 1, "empty index"))?;
    let (backbone_id, k_in) = parse_header_line(index_path, first)?;
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => {
            return Err(Error::parse(
                index_path,
                2,
                format!("header row must be {HEADER:?}"),
            ))
        }
    }
    let mut sequences = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(Error::parse(index_path, lineno, "expected 6 columns"));
        }
        let num = |s: &str, what: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::parse(index_path, lineno, format!("bad {what} {s:?}")))
        };
        let bird_id: i64 = cols[1]
            .parse()
            .map_err(|_| Error::parse(index_path, lineno, "bad bird_id"))?;
        let start = num(cols[2], "start_frame")? as u32;
        let offset = num(cols[3], "offset")? as usize;
        let f_w = num(cols[4], "f_w")? as usize;
        let d = num(cols[5], "d")? as usize;
        let key = WindowKey::new(cols[0], bird_id, start);
        let len = f_w * d * 4;
        if !offset.is_multiple_of(4) {
            return Err(Error::parse(
                index_path,
                lineno,
                format!("offset {offset} not 4-byte aligned"),
            ));
        }
        if offset + len > payload.len() {
            return Err(Error::Validation(format!(
                "window {key}: payload truncated at byte offset {} (needs bytes {offset}..{})",
                payload.len(),
                offset + len
            )));
        }
        let tokens: Vec<f32> = payload[offset..offset + len]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        sequences.push(EmbeddingSequence::new(key, f_w, d, tokens)?);
    }
    sequences.sort_by(|a, b| a.key.cmp(&b.key));
    for pair in sequences.windows(2) {
        if pair[0].key == pair[1].key {
            return Err(Error::Validation(format!(
                "window {} indexed twice",
                pair[0].key
            )));
        }
    }
    if let Some(d) = sequences.first().map(|s| s.d) {
        if let Some(bad) = sequences.iter().find(|s| s.d != d) {
            return Err(Error::Validation(format!(
                "window {} has D={} but the bundle uses D={d}",
                bad.key, bad.d
            )));
        }
    }
    Ok(EmbeddingBundle {
        backbone_id,
        k_in,
        sequences,
    })
}

/// Loads `index.tsv` + `tokens.bin` from a bundle directory.
pub fn load_embeddings(dir: &Path) -> Result<EmbeddingBundle> {
    let index_path = dir.join(INDEX_FILE);
    let payload_path = dir.join(TOKENS_FILE);
    let index = read_to_string(&index_path)?;
    let payload = std::fs::read(&payload_path).map_err(|e| Error::io(&payload_path, e))?;
    parse_embeddings(&index_path, &index, &payload)
}

/// Serializes a bundle to its index text and payload bytes, in key order.
pub fn serialize_embeddings(bundle: &EmbeddingBundle) -> (String, Vec<u8>) {
    let mut index = format!(
        "# backbone_id={}\tk_in={}\n{HEADER}\n",
        bundle.backbone_id, bundle.k_in
    );
    let mut payload = Vec::new();
    let mut seqs: Vec<&EmbeddingSequence> = bundle.sequences.iter().collect();
    seqs.sort_by(|a, b| a.key.cmp(&b.key));
    for s in seqs {
        let _ = writeln!(
            index,
            "{}\t{}\t{}\t{}\t{}\t{}",
            s.key.video_id,
            s.key.bird_id,
            s.key.start_frame,
            payload.len(),
            s.f_w,
            s.d
        );
        for v in &s.tokens {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    (index, payload)
}

pub fn write_embeddings(dir: &Path, bundle: &EmbeddingBundle) -> Result<()> {
    let (index, payload) = serialize_embeddings(bundle);
    write_atomic(&dir.join(TOKENS_FILE), &payload)?;
    write_atomic(&dir.join(INDEX_FILE), index.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bundle(seqs: Vec<EmbeddingSequence>) -> EmbeddingBundle {
        EmbeddingBundle {
            backbone_id: "vjepa21-l".into(),
            k_in: 2,
            sequences: seqs,
        }
    }

    #[test]
    fn one_window_four_by_eight() {
        let tokens: Vec<f32> = (0..32).map(|i| i as f32 * 0.5).collect();
        let b = bundle(vec![EmbeddingSequence::new(
            WindowKey::new("v", 1, 0),
            4,
            8,
            tokens,
        )
        .unwrap()]);
        let (idx, payload) = serialize_embeddings(&b);
        let back = parse_embeddings(Path::new("index.tsv"), &idx, &payload).unwrap();
        assert_eq!(back.sequences.len(), 1);
        assert_eq!((back.sequences[0].f_w, back.sequences[0].d), (4, 8));
        assert_eq!(back, b);
    }

    #[test]
    fn truncated_payload_names_byte_offset() {
        let tokens = vec![1.0f32; 32];
        let b = bundle(vec![EmbeddingSequence::new(
            WindowKey::new("v", 1, 0),
            4,
            8,
            tokens,
        )
        .unwrap()]);
        let (idx, payload) = serialize_embeddings(&b);
        let err = parse_embeddings(Path::new("index.tsv"), &idx, &payload[..100]).unwrap_err();
        assert!(err.to_string().contains("byte offset 100"), "{err}");
    }

    #[test]
    fn non_finite_value_names_window() {
        let mut tokens = vec![0.0f32; 4];
        tokens[2] = f32::NAN;
        let mut payload = Vec::new();
        for v in &tokens {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        let idx = format!("# backbone_id=x\tk_in=1\n{HEADER}\nv\t3\t125\t0\t2\t2\n");
        let err = parse_embeddings(Path::new("index.tsv"), &idx, &payload).unwrap_err();
        assert!(err.to_string().contains("v:3:125"), "{err}");
    }

    #[test]
    fn hundred_random_windows_round_trip_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let seqs = (0..100)
            .map(|i| {
                let f_w = rng.gen_range(1..12);
                let tokens = (0..f_w * 6).map(|_| rng.gen_range(-3.0f32..3.0)).collect();
                EmbeddingSequence::new(WindowKey::new("v", i % 7, (i as u32) * 125), f_w, 6, tokens)
                    .unwrap()
            })
            .collect();
        let mut b = bundle(seqs);
        b.sequences.sort_by(|a, c| a.key.cmp(&c.key));
        let dir = tempfile::tempdir().unwrap();
        write_embeddings(dir.path(), &b).unwrap();
        let back = load_embeddings(dir.path()).unwrap();
        assert_eq!(back, b);
        let (i1, p1) = serialize_embeddings(&b);
        let (i2, p2) = serialize_embeddings(&back);
        assert_eq!((i1, p1), (i2, p2));
    }

    #[test]
    fn orphans_are_reported() {
        let s = EmbeddingSequence::new(WindowKey::new("v", 1, 0), 1, 1, vec![0.0]).unwrap();
        let b = bundle(vec![s]);
        assert_eq!(b.orphans(&[]), vec![WindowKey::new("v", 1, 0)]);
    }
}
