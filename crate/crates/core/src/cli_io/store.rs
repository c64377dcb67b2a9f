//! Append-only hit store: one JSON object per line, big integers as decimal
//! strings, deduplicated on `(k, s, n)`.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use num_bigint::{BigInt, BigUint};
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::abc_model::{HitVerdict, Q1Status};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub k: String,
    pub s: u32,
    pub n: usize,
    pub b_next: Option<String>,
    pub d: String,
    pub a: String,
    pub b: String,
    pub c: String,
    /// Lower end of the first-quality bracket (the value itself when exact).
    pub q1: Option<f64>,
    pub q1_hi: Option<f64>,
    pub q1_status: Option<Q1Status>,
    pub q2: Option<f64>,
    pub hit_q1: HitVerdict,
    pub hit_q2: bool,
    pub timestamp: u64,
}

pub type DedupKey = (String, u32, usize);

impl HitRecord {
    pub fn key(&self) -> DedupKey {
        (self.k.clone(), self.s, self.n)
    }

    /// Parses the decimal fields back and checks `a + b = c`.
    pub fn validate(&self) -> Result<(), String> {
        let parse = |name: &str, v: &str| -> Result<BigUint, String> {
            v.parse().map_err(|_| format!("{name} is not a non-negative integer: {v:?}"))
        };
        let (a, b, c) = (parse("a", &self.a)?, parse("b", &self.b)?, parse("c", &self.c)?);
        parse("k", &self.k)?;
        self.d
            .parse::<BigInt>()
            .map_err(|_| format!("d is not an integer: {:?}", self.d))?;
        if let Some(b_next) = &self.b_next {
            parse("b_next", b_next)?;
        }
        if a + b != c {
            return Err(format!("a + b != c for k={} s={} n={}", self.k, self.s, self.n));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct HitStore {
    path: PathBuf,
    seen: HashSet<DedupKey>,
    file: File,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AppendOutcome {
    pub added: usize,
    pub duplicates: usize,
}

impl HitStore {
    /// Opens (creating if needed) and indexes every existing record.
    pub fn open(path: &Path) -> Result<Self, CliError> {
        let io_err = |e: std::io::Error| CliError::Compute(format!("hit store {}: {e}", path.display()));
        let mut seen = HashSet::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io_err)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: HitRecord = serde_json::from_str(&line).map_err(|e| {
                    CliError::Compute(format!("hit store {} line {}: {e}", path.display(), i + 1))
                })?;
                seen.insert(record.key());
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err)?;
        Ok(Self {
            path: path.to_path_buf(),
            seen,
            file,
        })
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }

    pub fn contains(&self, key: &DedupKey) -> bool {
        self.seen.contains(key)
    }

    /// Writes every record whose key is new, flushing once per batch.
    pub fn append(&mut self, records: &[HitRecord]) -> Result<AppendOutcome, CliError> {
        let mut outcome = AppendOutcome::default();
        let mut buf = Vec::new();
        for record in records {
            if !self.seen.insert(record.key()) {
                outcome.duplicates += 1;
                continue;
            }
            serde_json::to_writer(&mut buf, record).expect("record serializes");
            buf.push(b'\n');
            outcome.added += 1;
        }
        if !buf.is_empty() {
            let io_err = |e: std::io::Error| CliError::Compute(format!("hit store {}: {e}", self.path.display()));
            self.file.write_all(&buf).map_err(io_err)?;
            self.file.flush().map_err(io_err)?;
        }
        Ok(outcome)
    }

    /// All records currently on disk, in file order.
    pub fn read_all(path: &Path) -> Result<Vec<HitRecord>, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Compute(format!("hit store {}: {e}", path.display())))?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| CliError::Compute(e.to_string())))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(n: usize) -> HitRecord {
        HitRecord {
            k: "109".into(),
            s: 5,
            n,
            b_next: Some("77733".into()),
            d: "-2".into(),
            a: "2".into(),
            b: "6436341".into(),
            c: "6436343".into(),
            q1: Some(1.62991),
            q1_hi: Some(1.62991),
            q1_status: Some(Q1Status::Exact),
            q2: Some(1.46283),
            hit_q1: HitVerdict::Yes,
            hit_q2: true,
            timestamp: 0,
        }
    }

    #[test]
    fn dedup_across_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hits.ndjson");
        let mut store = HitStore::open(&path).unwrap();
        assert!(store.is_empty());
        let out = store.append(&[record(3), record(3), record(4)]).unwrap();
        assert_eq!(out, AppendOutcome { added: 2, duplicates: 1 });
        drop(store);

        let mut store = HitStore::open(&path).unwrap();
        assert_eq!(store.len(), 2);
        let out = store.append(&[record(3), record(5)]).unwrap();
        assert_eq!(out, AppendOutcome { added: 1, duplicates: 1 });

        let all = HitStore::read_all(&path).unwrap();
        assert_eq!(all.iter().map(|r| r.n).collect::<Vec<_>>(), [3, 4, 5]);
        assert!(all.iter().all(|r| r.validate().is_ok()));
    }

    #[test]
    fn record_validation() {
        assert!(record(3).validate().is_ok());
        let mut bad = record(3);
        bad.c = "6436344".into();
        assert!(bad.validate().is_err());
        bad.c = "x".into();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn corrupt_store_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hits.ndjson");
        std::fs::write(&path, "{not json}\n").unwrap();
        assert!(matches!(HitStore::open(&path), Err(CliError::Compute(_))));
    }

    #[test]
    fn unwritable_store_is_an_error() {
        let path = Path::new("/nonexistent-dir/hits.ndjson");
        assert!(matches!(HitStore::open(path), Err(CliError::Compute(_))));
    }
}
