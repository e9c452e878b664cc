//! Hashed-bigram TF-IDF vectors.
//!
//! Each adjacent token pair is joined with the ASCII unit separator
//! (`U+001F`), hashed with MurmurHash3 x86_32 (seed 0) over its UTF-8 bytes
//! and reduced modulo 2^24. Weights are `tf * (ln((N + 1) / (df + 1)) + 1)`,
//! L2-normalized, so the dot product of two vectors is a cosine.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const NUM_BUCKETS: u32 = 1 << 24;
pub const HASH_SEED: u32 = 0;
pub const BIGRAM_JOINER: char = '\u{1F}';

const DF_MAGIC: &[u8; 4] = b"CFDF";
const DF_VERSION: u32 = 1;

/// MurmurHash3, x86 32-bit variant.
pub fn murmur3_32(bytes: &[u8], seed: u32) -> u32 {
    const C1: u32 = 0xcc9e_2d51;
    const C2: u32 = 0x1b87_3593;

    let mut h = seed;
    let mut blocks = bytes.chunks_exact(4);
    for block in &mut blocks {
        let mut k = u32::from_le_bytes([block[0], block[1], block[2], block[3]]);
        k = k.wrapping_mul(C1).rotate_left(15).wrapping_mul(C2);
        h ^= k;
        h = h.rotate_left(13).wrapping_mul(5).wrapping_add(0xe654_6b64);
    }

    let tail = blocks.remainder();
    if !tail.is_empty() {
        let mut k = 0u32;
        for (i, b) in tail.iter().enumerate() {
            k |= (*b as u32) << (8 * i);
        }
        k = k.wrapping_mul(C1).rotate_left(15).wrapping_mul(C2);
        h ^= k;
    }

    h ^= bytes.len() as u32;
    h ^= h >> 16;
    h = h.wrapping_mul(0x85eb_ca6b);
    h ^= h >> 13;
    h = h.wrapping_mul(0xc2b2_ae35);
    h ^= h >> 16;
    h
}

pub fn bigram_bucket(left: &str, right: &str) -> u32 {
    let mut key = String::with_capacity(left.len() + right.len() + 1);
    key.push_str(left);
    key.push(BIGRAM_JOINER);
    key.push_str(right);
    murmur3_32(key.as_bytes(), HASH_SEED) % NUM_BUCKETS
}

pub fn bigram_buckets<S: AsRef<str>>(tokens: &[S]) -> Vec<u32> {
    tokens
        .windows(2)
        .map(|w| bigram_bucket(w[0].as_ref(), w[1].as_ref()))
        .collect()
}

/// Sparse vector over hash buckets, sorted by bucket, no zero entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Builds from arbitrary (bucket, weight) pairs; duplicates are summed
    /// and zeros dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for (b, w) in pairs {
            assert!(b < NUM_BUCKETS, "bucket {b} outside the 2^24 space");
            assert!(w.is_finite(), "non-finite weight {w} for bucket {b}");
            *acc.entry(b).or_default() += w;
        }
        SparseVector {
            entries: acc.into_iter().filter(|(_, w)| *w != 0.0).collect(),
        }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn get(&self, bucket: u32) -> f64 {
        self.entries
            .binary_search_by_key(&bucket, |(b, _)| *b)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }
}

pub fn dot(u: &SparseVector, v: &SparseVector) -> f64 {
    let (a, b) = (&u.entries, &v.entries);
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Document frequencies per bucket.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DfTable {
    n_docs: u64,
    df: BTreeMap<u32, u32>,
}

impl DfTable {
    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn df(&self, bucket: u32) -> u32 {
        self.df.get(&bucket).copied().unwrap_or(0)
    }

    pub fn buckets(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.df.iter().map(|(b, d)| (*b, *d))
    }

    pub fn idf(&self, bucket: u32) -> f64 {
        ((self.n_docs as f64 + 1.0) / (self.df(bucket) as f64 + 1.0)).ln() + 1.0
    }

    /// Adds one more document's bigrams to the counts.
    pub fn add_document<S: AsRef<str>>(&mut self, tokens: &[S]) {
        let set: BTreeSet<u32> = bigram_buckets(tokens).into_iter().collect();
        for b in set {
            *self.df.entry(b).or_default() += 1;
        }
        self.n_docs += 1;
    }

    /// Merges two tables fitted on disjoint document sets.
    pub fn merge(mut self, other: &DfTable) -> DfTable {
        self.n_docs += other.n_docs;
        for (b, d) in &other.df {
            *self.df.entry(*b).or_default() += d;
        }
        self
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|reason| Error::format(path, reason))
    }

    /// Binary layout: magic `CFDF`, version u32, N u64, then `(bucket u32,
    /// df u32)` pairs in ascending bucket order. All little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.df.len());
        out.extend_from_slice(DF_MAGIC);
        out.extend_from_slice(&DF_VERSION.to_le_bytes());
        out.extend_from_slice(&self.n_docs.to_le_bytes());
        for (b, d) in &self.df {
            out.write_all(&b.to_le_bytes()).unwrap();
            out.write_all(&d.to_le_bytes()).unwrap();
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < 16 || &bytes[..4] != DF_MAGIC {
            return Err("missing df-table magic".into());
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != DF_VERSION {
            return Err(format!("unsupported df-table version {version}"));
        }
        let n_docs = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let body = &bytes[16..];
        if !body.len().is_multiple_of(8) {
            return Err("truncated bucket table".into());
        }
        let mut df = BTreeMap::new();
        let mut prev = None;
        for pair in body.chunks_exact(8) {
            let b = u32::from_le_bytes(pair[..4].try_into().unwrap());
            let d = u32::from_le_bytes(pair[4..].try_into().unwrap());
            if b >= NUM_BUCKETS || d == 0 || d as u64 > n_docs || prev.is_some_and(|p| p >= b) {
                return Err(format!("invalid bucket entry ({b}, {d})"));
            }
            prev = Some(b);
            df.insert(b, d);
        }
        Ok(DfTable { n_docs, df })
    }
}

pub fn fit_df<S: AsRef<str>>(docs: &[Vec<S>]) -> Result<DfTable> {
    if docs.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot fit document frequencies on an empty corpus".into(),
        ));
    }
    let mut table = DfTable::default();
    for d in docs {
        table.add_document(d);
    }
    Ok(table)
}

pub fn tfidf_vector<S: AsRef<str>>(tokens: &[S], df: &DfTable) -> SparseVector {
    let mut tf: BTreeMap<u32, f64> = BTreeMap::new();
    for b in bigram_buckets(tokens) {
        *tf.entry(b).or_default() += 1.0;
    }
    let weighted: Vec<(u32, f64)> = tf.into_iter().map(|(b, t)| (b, t * df.idf(b))).collect();
    let norm = weighted.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm == 0.0 {
        return SparseVector::default();
    }
    SparseVector {
        entries: weighted.into_iter().map(|(b, w)| (b, w / norm)).collect(),
    }
}
