use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use clap::ValueEnum;
use num_bigint::BigUint;

use super::store::{AppendOutcome, HitRecord, HitStore};
use super::CliError;
use crate::abc_model::{is_hit_q2, quality1, quality2, HitVerdict, Quality1, ResultingEquation};
use crate::cf_engine::{CfError, Expansion, RootTarget};
use crate::exact_arith::FactorEffort;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QualityKind {
    Q1,
    Q2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HuntConfig {
    pub k_range: (u64, u64),
    pub s_range: (u32, u32),
    pub depth: usize,
    pub kind: QualityKind,
    pub min_quality: f64,
    pub effort: Option<FactorEffort>,
    pub workers: usize,
}

impl HuntConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.k_range.0 > self.k_range.1 || self.s_range.0 > self.s_range.1 {
            return Err(CliError::Usage("empty k or s range".into()));
        }
        if self.depth == 0 {
            return Err(CliError::Usage("depth must be at least 1".into()));
        }
        if !(self.min_quality.is_finite() && self.min_quality >= 0.0) {
            return Err(CliError::Usage(format!("bad minimum quality {}", self.min_quality)));
        }
        if self.kind == QualityKind::Q1 && self.effort.is_none() {
            return Err(CliError::Usage("q1 hunts need a factor effort other than none".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HuntSummary {
    pub roots: usize,
    pub skipped_perfect_powers: usize,
    pub equations: usize,
    pub hits: usize,
    pub unknown: usize,
    pub added: usize,
    pub duplicates: usize,
}

/// `ln c / ln x > t`, decided on integers when `t = 1`.
fn exceeds(c: &BigUint, x: &BigUint, quality: f64, threshold: f64) -> bool {
    if threshold == 1.0 {
        c > x
    } else {
        quality > threshold
    }
}

enum Verdict {
    Hit,
    Unknown,
    Miss,
}

fn judge_q1(q1: &Quality1, threshold: f64) -> Verdict {
    if threshold == 1.0 {
        return match q1.hit {
            HitVerdict::Yes => Verdict::Hit,
            HitVerdict::Unknown => Verdict::Unknown,
            HitVerdict::No => Verdict::Miss,
        };
    }
    if q1.lo > threshold {
        Verdict::Hit
    } else if q1.hi > threshold {
        Verdict::Unknown
    } else {
        Verdict::Miss
    }
}

fn record_for(
    e: &ResultingEquation,
    b_next: Option<&BigUint>,
    q1: Option<&Quality1>,
    timestamp: u64,
) -> HitRecord {
    let finite = |x: f64| x.is_finite().then_some(super::round6(x));
    HitRecord {
        k: e.root.k().to_string(),
        s: e.root.s(),
        n: e.n,
        b_next: b_next.map(|b| b.to_string()),
        d: e.d.to_string(),
        a: e.a.to_string(),
        b: e.b.to_string(),
        c: e.c.to_string(),
        q1: q1.and_then(|q| finite(q.lo)),
        q1_hi: q1.and_then(|q| finite(q.hi)),
        q1_status: q1.map(|q| q.status),
        q2: quality2(e).ok().map(super::round6),
        hit_q1: q1.map_or(HitVerdict::Unknown, |q| q.hit),
        hit_q2: is_hit_q2(e),
        timestamp,
    }
}

struct RootOutcome {
    equations: usize,
    hits: usize,
    unknown: usize,
    records: Vec<HitRecord>,
}

fn hunt_root(root: &RootTarget, config: &HuntConfig, timestamp: u64) -> Result<RootOutcome, CliError> {
    let convs: Vec<_> = Expansion::new(root.clone()).take(config.depth + 1).collect();
    let mut out = RootOutcome {
        equations: 0,
        hits: 0,
        unknown: 0,
        records: Vec::new(),
    };
    for conv in &convs[..config.depth] {
        let e = crate::abc_model::resulting_equation(root, conv)
            .map_err(|err| CliError::Compute(err.to_string()))?;
        out.equations += 1;
        let b_next = convs.get(conv.n + 1).map(|c| &c.b);
        match config.kind {
            QualityKind::Q2 => {
                let Ok(q2) = quality2(&e) else { continue };
                if exceeds(&e.c, &e.base_product, q2, config.min_quality) {
                    out.hits += 1;
                    let q1 = config
                        .effort
                        .as_ref()
                        .map(|effort| quality1(&e, effort))
                        .transpose()
                        .map_err(|err| CliError::Compute(err.to_string()))?;
                    out.records.push(record_for(&e, b_next, q1.as_ref(), timestamp));
                }
            }
            QualityKind::Q1 => {
                let effort = config.effort.as_ref().expect("validated");
                let q1 = quality1(&e, effort).map_err(|err| CliError::Compute(err.to_string()))?;
                match judge_q1(&q1, config.min_quality) {
                    Verdict::Hit => out.hits += 1,
                    Verdict::Unknown => out.unknown += 1,
                    Verdict::Miss => continue,
                }
                out.records.push(record_for(&e, b_next, Some(&q1), timestamp));
            }
        }
    }
    Ok(out)
}

/// Scans the `(k, s)` grid and appends qualifying equations to `store`.
///
/// Roots are handed to `workers` threads; the calling thread is the only
/// writer and commits results in grid order, so the store contents do not
/// depend on scheduling.
pub fn run_hunt(config: &HuntConfig, store: &mut HitStore, timestamp: u64) -> Result<HuntSummary, CliError> {
    config.validate()?;
    let mut summary = HuntSummary::default();
    let mut roots = Vec::new();
    for k in config.k_range.0..=config.k_range.1 {
        for s in config.s_range.0..=config.s_range.1 {
            match RootTarget::new(k, s) {
                Ok(root) => roots.push(root),
                Err(CfError::PerfectPower { .. }) => summary.skipped_perfect_powers += 1,
                Err(e) => return Err(CliError::Usage(e.to_string())),
            }
        }
    }
    summary.roots = roots.len();

    let next_job = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Result<RootOutcome, CliError>)>();
    let workers = config.workers.min(roots.len()).max(1);
    std::thread::scope(|scope| -> Result<(), CliError> {
        for _ in 0..workers {
            let tx = tx.clone();
            let roots = &roots;
            let next_job = &next_job;
            scope.spawn(move || loop {
                let idx = next_job.fetch_add(1, Ordering::Relaxed);
                let Some(root) = roots.get(idx) else { break };
                if tx.send((idx, hunt_root(root, config, timestamp))).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending = BTreeMap::new();
        let mut next_commit = 0;
        let mut first_error = None;
        for (idx, outcome) in rx {
            pending.insert(idx, outcome);
            while let Some(outcome) = pending.remove(&next_commit) {
                next_commit += 1;
                match outcome {
                    Ok(outcome) if first_error.is_none() => {
                        summary.equations += outcome.equations;
                        summary.hits += outcome.hits;
                        summary.unknown += outcome.unknown;
                        let AppendOutcome { added, duplicates } = store.append(&outcome.records)?;
                        summary.added += added;
                        summary.duplicates += duplicates;
                    }
                    Ok(_) => {}
                    Err(e) => {
                        first_error.get_or_insert(e);
                    }
                }
            }
        }
        first_error.map_or(Ok(()), Err)
    })?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(k: (u64, u64), s: (u32, u32), depth: usize, kind: QualityKind, min: f64) -> HuntConfig {
        HuntConfig {
            k_range: k,
            s_range: s,
            depth,
            kind,
            min_quality: min,
            effort: Some(FactorEffort::default()),
            workers: 1,
        }
    }

    #[test]
    fn reyssat_is_the_only_q1_hit_above_1_6() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = HitStore::open(&dir.path().join("h.ndjson")).unwrap();
        let cfg = config((109, 109), (5, 5), 5, QualityKind::Q1, 1.6);
        let summary = run_hunt(&cfg, &mut store, 0).unwrap();
        assert_eq!(summary.added, 1);
        assert_eq!(summary.unknown, 0);
        let all = HitStore::read_all(&dir.path().join("h.ndjson")).unwrap();
        assert_eq!(all[0].n, 3);
        assert_eq!(all[0].c, "6436343");
    }

    #[test]
    fn worker_count_does_not_change_store() {
        let dir = tempfile::tempdir().unwrap();
        let mut contents = Vec::new();
        for workers in [1, 4] {
            let path = dir.path().join(format!("h{workers}.ndjson"));
            let mut store = HitStore::open(&path).unwrap();
            let mut cfg = config((2, 12), (2, 4), 12, QualityKind::Q2, 1.0);
            cfg.effort = None;
            cfg.workers = workers;
            let summary = run_hunt(&cfg, &mut store, 0).unwrap();
            // 4 and 9 as squares, 8 as a cube
            assert_eq!(summary.skipped_perfect_powers, 3);
            contents.push(std::fs::read(&path).unwrap());
        }
        assert_eq!(contents[0], contents[1]);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = config((5, 4), (2, 2), 5, QualityKind::Q2, 1.0);
        assert!(cfg.validate().is_err());
        cfg.k_range = (2, 4);
        cfg.depth = 0;
        assert!(cfg.validate().is_err());
        cfg.depth = 3;
        cfg.kind = QualityKind::Q1;
        cfg.effort = None;
        assert!(cfg.validate().is_err());
    }
}
