//! The `abcroots` command line.
//!
//! Exit codes: 0 ok, 1 usage, 2 computation or I/O failure, 3 record-table
//! regression.

mod config;
mod hunt;
mod store;

pub use config::{parse_effort, Format, Settings, ENV_PREFIX};
pub use hunt::{run_hunt, HuntConfig, HuntSummary, QualityKind};
pub use store::{AppendOutcome, HitRecord, HitStore};

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use num_bigint::BigUint;
use num_integer::Integer;
use serde_json::{json, Value};
use thiserror::Error;

use crate::abc_model::{quality1_triple, Q1Status, Quality1};
use crate::analysis::{
    quality_series, records_regression, RecordTable, SeriesOptions, SeriesReport, DEFAULT_LINK_DEPTH,
};
use crate::cf_engine::{d_value, expand, CfError, RootTarget};
use config::FlagValues;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Compute(String),
    #[error("{0}")]
    Regression(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Compute(_) => 2,
            CliError::Regression(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

/// Rounds to six significant digits.
pub fn round6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// Six significant digits, trailing zeros trimmed.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, round6(x));
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

fn json_f64(x: Option<f64>) -> Value {
    match x {
        Some(v) if v.is_finite() => json!(round6(v)),
        _ => Value::Null,
    }
}

#[derive(Debug, Parser)]
#[command(name = "abcroots", version, about = "Continued fractions of integer roots and their ABC equations")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Number of convergents to scan.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// none | light | default | heavy | trial=N,rho=N,rounds=N
    #[arg(long = "factor-effort", global = true)]
    factor_effort: Option<String>,
    /// Epsilon for the WNEABC probe; repeatable.
    #[arg(long = "epsilon", global = true)]
    epsilons: Vec<f64>,
    /// Hit store path.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Use timestamp 0 in emitted records.
    #[arg(long = "fixed-clock", global = true)]
    fixed_clock: bool,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// key = value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Continued fraction coefficients and convergents of k^(1/s).
    Expand {
        k: BigUint,
        s: u32,
        /// Number of terms (defaults to --depth).
        #[arg(long)]
        terms: Option<usize>,
    },
    /// Resulting equations and their qualities, one row per convergent.
    Series { k: BigUint, s: u32 },
    /// Scan a grid of roots for equations above a quality threshold.
    Hunt {
        /// Inclusive k range, e.g. 2..50 (or a single value).
        #[arg(long = "k-range")]
        k_range: String,
        /// Inclusive s range, e.g. 2..6.
        #[arg(long = "s-range")]
        s_range: String,
        #[arg(long, value_enum, default_value = "q2")]
        kind: QualityKind,
        /// Minimum quality; 1 means "is a hit".
        #[arg(long = "min", default_value_t = 1.0)]
        min_quality: f64,
    },
    /// Check a triple a + b = c: coprimality, radical, first quality.
    Verify { a: String, b: String, c: String },
    /// Check the bundled table of record triples.
    Records {
        /// Alternative table file.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long = "link-depth", default_value_t = DEFAULT_LINK_DEPTH)]
        link_depth: usize,
    },
}

fn parse_range<T: std::str::FromStr + PartialOrd + Copy>(text: &str) -> Result<(T, T), CliError> {
    let bad = || CliError::Usage(format!("bad range {text:?}"));
    let (lo, hi) = match text.split_once("..") {
        Some((lo, hi)) => (lo.trim(), hi.trim().trim_start_matches('=')),
        None => (text.trim(), text.trim()),
    };
    let lo: T = lo.parse().map_err(|_| bad())?;
    let hi: T = hi.parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn root_target(k: BigUint, s: u32) -> Result<RootTarget, CliError> {
    RootTarget::new(k, s).map_err(|e| match e {
        CfError::PerfectPower { .. } => CliError::Compute(format!("rejected root: {e}")),
        other => CliError::Usage(other.to_string()),
    })
}

fn now(fixed: bool) -> u64 {
    if fixed {
        return 0;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, env: &dyn Fn(&str) -> Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = write!(err, "{e}");
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match dispatch(cli, env, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, env: &dyn Fn(&str) -> Option<String>, out: &mut dyn Write) -> Result<(), CliError> {
    let flags = FlagValues {
        format: cli.format,
        depth: cli.depth,
        factor_effort: cli.factor_effort,
        epsilons: cli.epsilons,
        store: cli.store,
        fixed_clock: cli.fixed_clock,
        workers: cli.workers,
        config: cli.config,
    };
    let settings = Settings::resolve(&flags, env)?;
    match cli.command {
        Command::Expand { k, s, terms } => cmd_expand(&settings, k, s, terms, out),
        Command::Series { k, s } => cmd_series(&settings, k, s, out),
        Command::Hunt {
            k_range,
            s_range,
            kind,
            min_quality,
        } => {
            let config = HuntConfig {
                k_range: parse_range(&k_range)?,
                s_range: parse_range(&s_range)?,
                depth: settings.depth,
                kind,
                min_quality,
                effort: settings.effort,
                workers: settings.workers,
            };
            cmd_hunt(&settings, &config, out)
        }
        Command::Verify { a, b, c } => cmd_verify(&settings, &a, &b, &c, out),
        Command::Records { table, link_depth } => cmd_records(&settings, table, link_depth, out),
    }
}

fn cmd_expand(settings: &Settings, k: BigUint, s: u32, terms: Option<usize>, out: &mut dyn Write) -> Result<(), CliError> {
    let terms = terms.unwrap_or(settings.depth);
    if terms == 0 {
        return Err(CliError::Usage("terms must be at least 1".into()));
    }
    let root = root_target(k, s)?;
    let convs = expand(&root, terms);
    match settings.format {
        Format::Table => {
            writeln!(out, "root {root}, {terms} terms")?;
            let coeffs: Vec<String> = convs.iter().map(|c| c.b.to_string()).collect();
            writeln!(out, "coefficients: {}", coeffs.join(" "))?;
            for c in &convs {
                let d = d_value(&root, c).map_err(|e| CliError::Compute(e.to_string()))?;
                writeln!(out, "n={}  b={}  {}/{}  d={}", c.n, c.b, c.p, c.q, d)?;
            }
        }
        Format::Ndjson => {
            for c in &convs {
                let d = d_value(&root, c).map_err(|e| CliError::Compute(e.to_string()))?;
                let line = json!({
                    "n": c.n,
                    "b": c.b.to_string(),
                    "p": c.p.to_string(),
                    "q": c.q.to_string(),
                    "d": d.to_string(),
                });
                writeln!(out, "{line}")?;
            }
        }
    }
    Ok(())
}

fn q1_json(q1: Option<&Quality1>) -> Value {
    match q1 {
        None => Value::Null,
        Some(q) => json!({
            "status": q.status,
            "lo": json_f64(Some(q.lo)),
            "hi": json_f64(Some(q.hi)),
            "rad_lower": q.rad_lower.to_string(),
            "rad_upper": q.rad_upper.to_string(),
        }),
    }
}

fn q1_text(q1: Option<&Quality1>) -> String {
    match q1 {
        None => "-".into(),
        Some(q) if q.status == Q1Status::Exact => sig6(q.lo),
        Some(q) => format!("[{}, {}]", sig6(q.lo), sig6(q.hi)),
    }
}

fn series_ndjson(report: &SeriesReport, out: &mut dyn Write) -> Result<(), CliError> {
    for row in &report.rows {
        let k_needed: Vec<Value> = report
            .epsilons
            .iter()
            .zip(&row.k_needed)
            .map(|(eps, k)| json!({ "epsilon": eps, "k_needed": json_f64(Some(*k)) }))
            .collect();
        let line = json!({
            "type": "row",
            "k": report.root.k().to_string(),
            "s": report.root.s(),
            "n": row.n,
            "b": row.b.to_string(),
            "b_next": row.b_next.as_ref().map(|b| b.to_string()),
            "p": row.equation.p.to_string(),
            "q": row.equation.q.to_string(),
            "d": row.equation.d.to_string(),
            "d_digits": row.d_digits,
            "a": row.equation.a.to_string(),
            "b_term": row.equation.b.to_string(),
            "c": row.equation.c.to_string(),
            "q1": q1_json(row.q1.as_ref()),
            "hit_q1": row.hit_q1,
            "q2": json_f64(row.q2),
            "hit_q2": row.hit_q2,
            "q3": json_f64(row.q3),
            "k_needed": k_needed,
        });
        writeln!(out, "{line}")?;
    }
    let s = &report.summary;
    let sup: Vec<Value> = s
        .sup_k_needed
        .iter()
        .map(|k| json!({ "epsilon": k.epsilon, "n": k.n, "k_needed": json_f64(Some(k.k_needed)) }))
        .collect();
    let line = json!({
        "type": "summary",
        "k": report.root.k().to_string(),
        "s": report.root.s(),
        "depth": s.depth,
        "max_q2": s.max_q2.map(|(n, q)| json!({ "n": n, "q2": json_f64(Some(q)) })),
        "final_q2": json_f64(s.final_q2),
        "tail_max_q2": json_f64(s.tail_max_q2),
        "sup_k_needed": sup,
        "max_coefficient": s.max_coefficient.to_string(),
        "max_coefficient_index": s.max_coefficient_index,
    });
    writeln!(out, "{line}")?;
    Ok(())
}

fn series_table(report: &SeriesReport, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "root {}, depth {}", report.root, report.summary.depth)?;
    let eps_cols: Vec<String> = report.epsilons.iter().map(|e| format!("K(eps={e})")).collect();
    writeln!(
        out,
        "n  b_next  d_digits  q1  q2  q3  hit_q1  hit_q2{}{}",
        if eps_cols.is_empty() { "" } else { "  " },
        eps_cols.join("  ")
    )?;
    for row in &report.rows {
        let ks: Vec<String> = row.k_needed.iter().map(|k| sig6(*k)).collect();
        writeln!(
            out,
            "{}  {}  {}  {}  {}  {}  {:?}  {}{}{}",
            row.n,
            row.b_next.as_ref().map_or("-".into(), |b| b.to_string()),
            row.d_digits,
            q1_text(row.q1.as_ref()),
            row.q2.map_or("-".into(), sig6),
            row.q3.map_or("-".into(), sig6),
            row.hit_q1,
            row.hit_q2,
            if ks.is_empty() { "" } else { "  " },
            ks.join("  ")
        )?;
    }
    let s = &report.summary;
    if let Some((n, q)) = s.max_q2 {
        writeln!(out, "max q2: {} at n={}", sig6(q), n)?;
    }
    if let Some(q) = s.final_q2 {
        writeln!(out, "final q2: {}", sig6(q))?;
    }
    if let Some(q) = s.tail_max_q2 {
        writeln!(out, "max q2 over final quarter: {}", sig6(q))?;
    }
    for k in &s.sup_k_needed {
        writeln!(out, "sup K(eps={}): {} at n={}", k.epsilon, sig6(k.k_needed), k.n)?;
    }
    writeln!(out, "max coefficient: {} at n={}", s.max_coefficient, s.max_coefficient_index)?;
    Ok(())
}

fn cmd_series(settings: &Settings, k: BigUint, s: u32, out: &mut dyn Write) -> Result<(), CliError> {
    if settings.depth == 0 {
        return Err(CliError::Usage("depth must be at least 1".into()));
    }
    let root = root_target(k, s)?;
    let opts = SeriesOptions {
        epsilons: settings.epsilons.clone(),
        effort: settings.effort,
    };
    let report = quality_series(&root, settings.depth, &opts).map_err(|e| CliError::Compute(e.to_string()))?;
    match settings.format {
        Format::Table => series_table(&report, out),
        Format::Ndjson => series_ndjson(&report, out),
    }
}

fn cmd_hunt(settings: &Settings, config: &HuntConfig, out: &mut dyn Write) -> Result<(), CliError> {
    config.validate()?;
    let mut store = HitStore::open(&settings.store)?;
    let summary = run_hunt(config, &mut store, now(settings.fixed_clock))?;
    match settings.format {
        Format::Table => writeln!(
            out,
            "hunt: roots={} skipped_perfect_powers={} equations={} hits={} unknown={} new={} duplicates_skipped={}",
            summary.roots,
            summary.skipped_perfect_powers,
            summary.equations,
            summary.hits,
            summary.unknown,
            summary.added,
            summary.duplicates
        )?,
        Format::Ndjson => writeln!(
            out,
            "{}",
            json!({
                "type": "hunt_summary",
                "roots": summary.roots,
                "skipped_perfect_powers": summary.skipped_perfect_powers,
                "equations": summary.equations,
                "hits": summary.hits,
                "unknown": summary.unknown,
                "new": summary.added,
                "duplicates_skipped": summary.duplicates,
            })
        )?,
    }
    Ok(())
}

fn cmd_verify(settings: &Settings, a: &str, b: &str, c: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let parse = |name: &str, v: &str| -> Result<BigUint, CliError> {
        v.trim()
            .parse::<BigUint>()
            .ok()
            .filter(|x| *x > BigUint::from(0u32))
            .ok_or_else(|| CliError::Usage(format!("{name} must be a positive decimal integer (got {v:?})")))
    };
    let (a, b, c) = (parse("a", a)?, parse("b", b)?, parse("c", c)?);
    let sum = &a + &b;
    if sum != c {
        return Err(CliError::Compute(format!("imbalance: a + b = {sum} but c = {c}")));
    }
    let effort = settings
        .effort
        .ok_or_else(|| CliError::Usage("verify needs a factor effort other than none".into()))?;
    let g = a.gcd(&b).gcd(&c);
    let q1 = quality1_triple(&a, &b, &c, &effort).map_err(|e| CliError::Compute(e.to_string()))?;
    match settings.format {
        Format::Table => {
            writeln!(out, "{a} + {b} = {c}")?;
            if g == BigUint::from(1u32) {
                writeln!(out, "coprime: yes")?;
            } else {
                writeln!(out, "coprime: no (gcd {g})")?;
            }
            if q1.rad_lower == q1.rad_upper {
                writeln!(out, "rad(abc): {}", q1.rad_lower)?;
            } else {
                writeln!(out, "rad(abc): in [{}, {}]", q1.rad_lower, q1.rad_upper)?;
            }
            writeln!(out, "q1: {} ({:?})", q1_text(Some(&q1)), q1.status)?;
            writeln!(out, "hit: {:?}", q1.hit)?;
        }
        Format::Ndjson => {
            let line = json!({
                "a": a.to_string(),
                "b": b.to_string(),
                "c": c.to_string(),
                "gcd": g.to_string(),
                "coprime": g == BigUint::from(1u32),
                "q1": q1_json(Some(&q1)),
                "hit": q1.hit,
            });
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

fn cmd_records(settings: &Settings, table: Option<PathBuf>, link_depth: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let table = match table {
        Some(path) => RecordTable::load(&path).map_err(|e| CliError::Usage(e.to_string()))?,
        None => RecordTable::bundled(),
    };
    let entries = records_regression(&table, link_depth).map_err(|e| CliError::Usage(e.to_string()))?;
    for e in &entries {
        let root = format!("{}^(1/{})", e.spec.root.k, e.spec.root.s);
        match settings.format {
            Format::Table => writeln!(
                out,
                "{}: {} + {} = {}  balance={:?}  root={}  {}{}",
                e.spec.label,
                e.spec.a,
                e.spec.b,
                e.spec.c,
                e.balance,
                root,
                e.link,
                if e.spec.gated { "" } else { "  (report only)" }
            )?,
            Format::Ndjson => writeln!(
                out,
                "{}",
                json!({
                    "label": e.spec.label,
                    "a": e.a.to_string(),
                    "b": e.b.to_string(),
                    "c": e.c.to_string(),
                    "balance": e.balance,
                    "root": { "k": e.spec.root.k, "s": e.spec.root.s },
                    "link": e.link.to_string(),
                    "gated": e.spec.gated,
                })
            )?,
        }
    }
    let failed: Vec<&str> = entries
        .iter()
        .filter(|e| e.is_regression())
        .map(|e| e.spec.label.as_str())
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Regression(format!("balance mismatch: {}", failed.join(", "))));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(1.629_911_684_127_048), "1.62991");
        assert_eq!(sig6(0.75), "0.75");
        assert_eq!(sig6(142.630_479_102_956), "142.63");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(1.234_567e9), "1.23457e9");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(f64::INFINITY), "inf");
        assert_eq!(round6(0.584_982_856), 0.584_983);
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range::<u64>("2..50").unwrap(), (2, 50));
        assert_eq!(parse_range::<u64>("2..=50").unwrap(), (2, 50));
        assert_eq!(parse_range::<u32>("5").unwrap(), (5, 5));
        assert!(parse_range::<u64>("9..3").is_err());
        assert!(parse_range::<u64>("a..3").is_err());
    }
}
