//! Studies over whole runs of convergents: quality series, convergence of the
//! second quality, the `q_n^ε / (b_{n+1} + 2)` series, and the record table.

mod records;

pub use records::{
    records_regression, BalanceStatus, Factored, LinkStatus, RecordEntry, RecordSpec, RecordTable,
    DEFAULT_LINK_DEPTH,
};

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::Signed;
use serde::Serialize;
use thiserror::Error;

use crate::abc_model::{
    evaluate, resulting_equation, AbcError, HitVerdict, Quality1, ResultingEquation,
};
use crate::cf_engine::{decimal_digits, expand, CfError, RootTarget};
use crate::exact_arith::{ln_big, FactorEffort};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Cf(#[from] CfError),
    #[error(transparent)]
    Abc(#[from] AbcError),
    #[error("depth must be at least {min} (got {got})")]
    Depth { min: usize, got: usize },
    #[error("invalid epsilon {0}")]
    Epsilon(f64),
    #[error("record table: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Default)]
pub struct SeriesOptions {
    pub epsilons: Vec<f64>,
    /// `None` skips the first quality (no factoring at all).
    pub effort: Option<FactorEffort>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub n: usize,
    pub b: BigUint,
    pub b_next: Option<BigUint>,
    pub equation: ResultingEquation,
    pub d_digits: usize,
    pub q1: Option<Quality1>,
    pub hit_q1: HitVerdict,
    pub q2: Option<f64>,
    pub hit_q2: bool,
    pub q3: Option<f64>,
    /// One entry per configured epsilon, in order.
    pub k_needed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KSupremum {
    pub epsilon: f64,
    pub n: usize,
    pub k_needed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub depth: usize,
    /// `(n, q2)` at the largest second quality.
    pub max_q2: Option<(usize, f64)>,
    pub final_q2: Option<f64>,
    /// Largest second quality over the last quarter of the rows; the
    /// empirical stand-in for the limit superior.
    pub tail_max_q2: Option<f64>,
    pub sup_k_needed: Vec<KSupremum>,
    pub max_coefficient: BigUint,
    pub max_coefficient_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesReport {
    pub root: RootTarget,
    pub epsilons: Vec<f64>,
    pub rows: Vec<SeriesRow>,
    pub summary: SeriesSummary,
}

fn check_epsilons(epsilons: &[f64]) -> Result<(), AnalysisError> {
    match epsilons.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        Some(&bad) => Err(AnalysisError::Epsilon(bad)),
        None => Ok(()),
    }
}

/// First index of the final quarter of `0..depth` (at least one row).
fn tail_start(depth: usize) -> usize {
    depth - (depth / 4).max(1)
}

/// Builds the row-per-convergent report for indices `0..depth`.
pub fn quality_series(
    root: &RootTarget,
    depth: usize,
    opts: &SeriesOptions,
) -> Result<SeriesReport, AnalysisError> {
    if depth == 0 {
        return Err(AnalysisError::Depth { min: 1, got: 0 });
    }
    check_epsilons(&opts.epsilons)?;
    let convs = expand(root, depth + 1);
    let mut rows = Vec::with_capacity(depth);
    for conv in &convs[..depth] {
        let equation = resulting_equation(root, conv)?;
        let report = evaluate(&equation, opts.effort.as_ref(), &opts.epsilons)?;
        rows.push(SeriesRow {
            n: conv.n,
            b: conv.b.clone(),
            b_next: convs.get(conv.n + 1).map(|c| c.b.clone()),
            d_digits: decimal_digits(&equation.d),
            q1: report.q1,
            hit_q1: report.hit_q1,
            q2: report.q2,
            hit_q2: report.hit_q2,
            q3: report.q3,
            k_needed: report.probes.iter().map(|p| p.k_needed).collect(),
            equation,
        });
    }
    let summary = summarize(&rows, &opts.epsilons);
    Ok(SeriesReport {
        root: root.clone(),
        epsilons: opts.epsilons.clone(),
        rows,
        summary,
    })
}

fn argmax(values: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    values.fold(None, |best, (n, v)| match best {
        Some((_, bv)) if bv >= v => best,
        _ => Some((n, v)),
    })
}

/// Recomputes the summary from rows alone.
pub fn summarize(rows: &[SeriesRow], epsilons: &[f64]) -> SeriesSummary {
    let depth = rows.len();
    let q2s = || rows.iter().filter_map(|r| r.q2.map(|q| (r.n, q)));
    let max_q2 = argmax(q2s());
    let final_q2 = rows.last().and_then(|r| r.q2);
    let tail_max_q2 = argmax(q2s().filter(|(n, _)| *n >= tail_start(depth))).map(|(_, v)| v);
    let sup_k_needed = epsilons
        .iter()
        .enumerate()
        .filter_map(|(i, &epsilon)| {
            argmax(rows.iter().map(|r| (r.n, r.k_needed[i]))).map(|(n, k_needed)| KSupremum {
                epsilon,
                n,
                k_needed,
            })
        })
        .collect();
    let (max_coefficient_index, max_coefficient) = rows
        .iter()
        .map(|r| (r.n, &r.b))
        .fold(None::<(usize, &BigUint)>, |best, (n, b)| match best {
            Some((_, bb)) if bb >= b => best,
            _ => Some((n, b)),
        })
        .map(|(n, b)| (n, b.clone()))
        .unwrap_or_default();
    SeriesSummary {
        depth,
        max_q2,
        final_q2,
        tail_max_q2,
        sup_k_needed,
        max_coefficient,
        max_coefficient_index,
    }
}

/// `⌊2·√k⌋ + 1`, the classical bound on `|d_n|` for square roots.
pub fn quadratic_d_bound(k: &BigUint) -> BigUint {
    (k * 4u32).sqrt() + 1u32
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub depth: usize,
    pub final_q2: f64,
    /// `max |q2 − 1|` over the last quarter of indices.
    pub tail_max_deviation: f64,
    pub max_abs_d: BigUint,
    /// Square roots only.
    pub d_bound: Option<BigUint>,
    pub d_bound_violations: Vec<usize>,
    /// Square roots only: indices where `|d_n| != 1`.
    pub non_unit_d: Vec<usize>,
    /// `|d_n|` value → number of indices.
    pub d_distribution: BTreeMap<BigUint, usize>,
    /// `sqrt(2)` only: odd indices `n` where the third quality failed to drop
    /// strictly below its value at `n − 2`.
    pub q3_monotonicity_violations: Option<Vec<usize>>,
    pub q3_first: Option<f64>,
}

pub fn q2_convergence_report(root: &RootTarget, depth: usize) -> Result<ConvergenceReport, AnalysisError> {
    if depth < 10 {
        return Err(AnalysisError::Depth { min: 10, got: depth });
    }
    let report = quality_series(root, depth, &SeriesOptions::default())?;
    let quadratic = root.s() == 2;
    let d_bound = quadratic.then(|| quadratic_d_bound(root.k()));

    let mut d_distribution = BTreeMap::new();
    let mut d_bound_violations = Vec::new();
    let mut non_unit_d = Vec::new();
    for row in &report.rows {
        let abs_d = row.equation.d.magnitude().clone();
        if let Some(bound) = &d_bound {
            if &abs_d > bound {
                d_bound_violations.push(row.n);
            }
            if abs_d != BigUint::from(1u32) {
                non_unit_d.push(row.n);
            }
        }
        *d_distribution.entry(abs_d).or_insert(0) += 1;
    }
    let max_abs_d = d_distribution.keys().next_back().cloned().unwrap_or_default();

    let tail_max_deviation = report.rows[tail_start(depth)..]
        .iter()
        .filter_map(|r| r.q2)
        .map(|q| (q - 1.0).abs())
        .fold(0.0, f64::max);

    let q3: Vec<(usize, f64)> = report
        .rows
        .iter()
        .filter_map(|r| r.q3.map(|q| (r.n, q)))
        .collect();
    let is_sqrt2 = quadratic && root.k() == &BigUint::from(2u32);
    let q3_monotonicity_violations = is_sqrt2.then(|| {
        q3.windows(2)
            .filter(|w| w[1].1 >= w[0].1)
            .map(|w| w[1].0)
            .collect()
    });

    Ok(ConvergenceReport {
        depth,
        final_q2: report.summary.final_q2.unwrap_or(f64::NAN),
        tail_max_deviation,
        max_abs_d,
        d_bound,
        d_bound_violations,
        non_unit_d,
        d_distribution,
        q3_monotonicity_violations,
        q3_first: q3.first().map(|(_, q)| *q),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaPoint {
    pub n: usize,
    pub q: BigUint,
    pub b_next: BigUint,
    /// `q_n^ε / (b_{n+1} + 2)`
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSeries {
    pub epsilon: f64,
    pub points: Vec<LemmaPoint>,
    /// Running minimum after each point.
    pub running_min: Vec<f64>,
    pub min_index: usize,
}

impl LemmaSeries {
    pub fn minimum(&self) -> f64 {
        self.running_min.last().copied().unwrap_or(f64::NAN)
    }
}

/// The series `q_n^ε / (b_{n+1} + 2)` for `n` in `0..depth`.
///
/// Nothing is asserted about a positive floor; the series is only reported.
pub fn lemma_series(root: &RootTarget, depth: usize, epsilon: f64) -> Result<LemmaSeries, AnalysisError> {
    if depth < 2 {
        return Err(AnalysisError::Depth { min: 2, got: depth });
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(AnalysisError::Epsilon(epsilon));
    }
    let convs = expand(root, depth + 1);
    let mut points = Vec::with_capacity(depth);
    let mut running_min = Vec::with_capacity(depth);
    let mut min_index = 0;
    let mut current = f64::INFINITY;
    for pair in convs.windows(2) {
        let (conv, next) = (&pair[0], &pair[1]);
        let denom = &next.b + 2u32;
        let value = (epsilon * ln_big(&conv.q) - ln_big(&denom)).exp();
        if value < current {
            current = value;
            min_index = conv.n;
        }
        running_min.push(current);
        points.push(LemmaPoint {
            n: conv.n,
            q: conv.q.clone(),
            b_next: next.b.clone(),
            value,
        });
    }
    Ok(LemmaSeries {
        epsilon,
        points,
        running_min,
        min_index,
    })
}

/// Every row's `|d_n|` bounded by the quadratic bound? (Square roots only.)
pub fn all_d_within_quadratic_bound(report: &SeriesReport) -> bool {
    let bound = BigInt::from(quadratic_d_bound(report.root.k()));
    report.rows.iter().all(|r| r.equation.d.abs() <= bound)
}
