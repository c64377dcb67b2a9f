//! Regression against a table of well-known ABC triples and the roots they
//! are attributed to.

use std::fmt;
use std::path::Path;

use num_bigint::BigUint;
use num_traits::{One, Pow};
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::abc_model::resulting_equation;
use crate::cf_engine::{Expansion, RootTarget};

pub const DEFAULT_LINK_DEPTH: usize = 50;

const BUNDLED_TABLE: &str = include_str!("../../data/records.json");

/// A product of prime powers (bases need not be prime), kept in the order
/// the triple is usually written.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factored(pub Vec<(String, u32)>);

impl Factored {
    pub fn value(&self) -> Result<BigUint, AnalysisError> {
        self.0.iter().try_fold(BigUint::one(), |acc, (base, e)| {
            let base: BigUint = base
                .parse()
                .map_err(|_| AnalysisError::Config(format!("bad base {base:?}")))?;
            Ok(acc * Pow::pow(&base, *e))
        })
    }
}

impl fmt::Display for Factored {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (base, e)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("·")?;
            }
            match e {
                1 => write!(f, "{base}")?,
                e => write!(f, "{base}^{e}")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimedRoot {
    pub k: String,
    pub s: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSpec {
    pub label: String,
    pub a: Factored,
    pub b: Factored,
    pub c: Factored,
    pub root: ClaimedRoot,
    /// A failed balance on a gated entry is a regression.
    pub gated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordTable {
    pub records: Vec<RecordSpec>,
}

impl RecordTable {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TABLE).expect("bundled record table is valid")
    }

    pub fn parse(text: &str) -> Result<Self, AnalysisError> {
        serde_json::from_str(text).map_err(|e| AnalysisError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, AnalysisError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AnalysisError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BalanceStatus {
    Verified,
    Mismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkStatus {
    LinkedAt(usize),
    /// Not found among the first `depth` resulting equations.
    NotLinked { depth: usize },
    /// The claimed root is not a valid target (e.g. a perfect power).
    InvalidRoot(String),
}

impl fmt::Display for LinkStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkStatus::LinkedAt(n) => write!(f, "Linked-at-n={n}"),
            LinkStatus::NotLinked { depth } => write!(f, "NotLinked(depth {depth})"),
            LinkStatus::InvalidRoot(why) => write!(f, "InvalidRoot({why})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordEntry {
    pub spec: RecordSpec,
    pub a: BigUint,
    pub b: BigUint,
    pub c: BigUint,
    pub balance: BalanceStatus,
    pub link: LinkStatus,
}

impl RecordEntry {
    /// Gated entry whose balance failed.
    pub fn is_regression(&self) -> bool {
        self.spec.gated && self.balance == BalanceStatus::Mismatch
    }
}

/// Index of the first resulting equation of `root` equal to `a + b = c`
/// (addends in either order), scanning `0..depth`.
fn find_link(root: &RootTarget, a: &BigUint, b: &BigUint, c: &BigUint, depth: usize) -> Option<usize> {
    let mut expansion = Expansion::new(root.clone());
    for _ in 0..depth {
        let conv = expansion.next()?;
        let e = resulting_equation(root, &conv).ok()?;
        if &e.c == c && ((&e.a == a && &e.b == b) || (&e.a == b && &e.b == a)) {
            return Some(conv.n);
        }
    }
    None
}

/// Checks each entry's balance and searches its claimed root for the triple.
pub fn records_regression(table: &RecordTable, link_depth: usize) -> Result<Vec<RecordEntry>, AnalysisError> {
    if table.records.is_empty() {
        return Err(AnalysisError::Config("table has no records".into()));
    }
    table
        .records
        .iter()
        .map(|spec| {
            let (a, b, c) = (spec.a.value()?, spec.b.value()?, spec.c.value()?);
            let balance = if &a + &b == c {
                BalanceStatus::Verified
            } else {
                BalanceStatus::Mismatch
            };
            let k: BigUint = spec
                .root
                .k
                .parse()
                .map_err(|_| AnalysisError::Config(format!("bad root k {:?}", spec.root.k)))?;
            let link = match RootTarget::new(k, spec.root.s) {
                Ok(root) => match find_link(&root, &a, &b, &c, link_depth) {
                    Some(n) => LinkStatus::LinkedAt(n),
                    None => LinkStatus::NotLinked { depth: link_depth },
                },
                Err(e) => LinkStatus::InvalidRoot(e.to_string()),
            };
            Ok(RecordEntry {
                spec: spec.clone(),
                a,
                b,
                c,
                balance,
                link,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry<'a>(entries: &'a [RecordEntry], label: &str) -> &'a RecordEntry {
        entries.iter().find(|e| e.spec.label == label).unwrap()
    }

    #[test]
    fn bundled_table_regression() {
        let entries = records_regression(&RecordTable::bundled(), DEFAULT_LINK_DEPTH).unwrap();
        assert_eq!(entries.len(), 3);

        let reyssat = entry(&entries, "Reyssat");
        assert_eq!(reyssat.balance, BalanceStatus::Verified);
        assert_eq!(reyssat.link, LinkStatus::LinkedAt(3));
        assert_eq!(reyssat.c, BigUint::from(6_436_343u32));

        let de_weger = entry(&entries, "De Weger");
        assert_eq!(de_weger.balance, BalanceStatus::Verified);
        assert_eq!(de_weger.c, BigUint::from(4375u32));

        // report-only: whatever the status, it must not count as a regression
        let bonse = entry(&entries, "Bonse");
        assert!(!bonse.is_regression());
        assert!(entries.iter().all(|e| !e.is_regression()));
    }

    #[test]
    fn mismatch_on_gated_entry_is_regression() {
        let mut table = RecordTable::bundled();
        table.records[0].a = Factored(vec![("3".into(), 1)]);
        let entries = records_regression(&table, 5).unwrap();
        assert_eq!(entries[0].balance, BalanceStatus::Mismatch);
        assert!(entries[0].is_regression());
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            RecordTable::load(Path::new("/nonexistent/records.json")),
            Err(AnalysisError::Config(_))
        ));
        assert!(RecordTable::parse("{").is_err());
        let empty = RecordTable { records: vec![] };
        assert!(records_regression(&empty, 5).is_err());
    }

    #[test]
    fn display_of_factored_sides() {
        let t = RecordTable::bundled();
        assert_eq!(t.records[0].b.to_string(), "9^5·109");
        assert_eq!(t.records[1].b.to_string(), "2·3^7");
    }
}
