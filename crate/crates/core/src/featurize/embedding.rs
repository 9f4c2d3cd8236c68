use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::warn;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numcore::{seeded_rng, Matrix};

pub const DEFAULT_EMBEDDING_DIM: usize = 100;

/// Word vectors keyed by lowercased word.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            entries: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, word: &str, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::data(format!(
                "vector for '{word}' has length {}, table dim is {}",
                vector.len(),
                self.dim
            )));
        }
        self.entries.insert(word.to_lowercase(), vector);
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.entries.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    /// Sorted vocabulary (for stable serialization).
    pub fn vocabulary(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.entries.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    /// Reads the plain-text layout: `word v1 v2 … v_dim` per line. An optional
    /// leading `<count> <dim>` header line is skipped. Duplicate words keep
    /// their first vector.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut table: Option<EmbeddingTable> = None;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::data(format!("embedding line {}: {e}", lineno + 1)))?;
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let rest: Vec<&str> = parts.collect();
            if lineno == 0 && rest.len() == 1 && word.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
                continue;
            }
            let vector = rest
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::data(format!("embedding line {}: {e}", lineno + 1)))?;
            let t = table.get_or_insert_with(|| EmbeddingTable::new(vector.len()));
            if vector.len() != t.dim {
                return Err(Error::data(format!(
                    "embedding line {}: expected {} values, found {}",
                    lineno + 1,
                    t.dim,
                    vector.len()
                )));
            }
            let key = word.to_lowercase();
            if t.entries.contains_key(&key) {
                warn!("embedding line {}: duplicate word '{key}' ignored", lineno + 1);
                continue;
            }
            t.entries.insert(key, vector);
        }
        table.ok_or_else(|| Error::data("embedding file holds no vectors"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_text(BufReader::new(file))
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for word in self.vocabulary() {
            write!(w, "{word}")?;
            for v in &self.entries[word] {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Deterministic random table over `vocab`. Each word's vector depends only
    /// on `(seed, word)`, so the table is independent of vocabulary order.
    pub fn synthetic<S: AsRef<str>>(seed: u64, dim: usize, vocab: &[S]) -> Self {
        let mut table = EmbeddingTable::new(dim);
        let normal = Normal::new(0.0, 0.5).expect("valid sd");
        for word in vocab {
            let key = word.as_ref().to_lowercase();
            if table.entries.contains_key(&key) {
                continue;
            }
            let mut hasher = Sha256::new();
            hasher.update(seed.to_le_bytes());
            hasher.update(key.as_bytes());
            let digest = hasher.finalize();
            let word_seed = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
            let mut rng = seeded_rng(word_seed);
            let v = (0..dim).map(|_| normal.sample(&mut rng)).collect();
            table.entries.insert(key, v);
        }
        table
    }

    /// SHA-256 over the sorted table contents.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.dim as u64).to_le_bytes());
        for word in self.vocabulary() {
            hasher.update(word.as_bytes());
            hasher.update([0u8]);
            for v in &self.entries[word] {
                hasher.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }
}

/// Looks up each token; out-of-vocabulary tokens become zero rows.
pub fn embed_tokens<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable) -> Matrix {
    let mut m = Matrix::zeros(tokens.len(), table.dim());
    for (i, tok) in tokens.iter().enumerate() {
        if let Some(v) = table.get(tok.as_ref()) {
            m.row_mut(i).copy_from_slice(v);
        }
    }
    m
}
