//! Regular continued fractions of `k^(1/s)`.
//!
//! The expansion keeps the current tail as an integer homography of the
//! root itself, `x_n = (a·x + b) / (c·x + d)` with `x = k^(1/s)`, and finds
//! each partial quotient by comparing the root against rationals with
//! [`cmp_root`]. No floating point and no polynomial root isolation.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_arith::{cmp_root, nth_root_floor};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CfError {
    #[error("k must be at least 2 (got {0})")]
    RadicandTooSmall(BigUint),
    #[error("s must be at least 2 (got {0})")]
    DegreeTooSmall(u32),
    #[error("{k} = {root}^{s} is a perfect power; its expansion is finite")]
    PerfectPower { k: BigUint, s: u32, root: BigUint },
    #[error("convergent {n} does not belong to this root: d_n = 0")]
    ZeroDefect { n: usize },
    #[error("prediction needs n >= 1 (got n = {0})")]
    PredictionIndex(usize),
    #[error("predicted coefficient at n = {n} is not positive; the error term dominates")]
    PredictionOutOfRange { n: usize },
}

/// The algebraic number `k^(1/s)`, minimal polynomial `x^s − k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RootTarget {
    k: BigUint,
    s: u32,
}

impl RootTarget {
    /// Rejects `k < 2`, `s < 2` and perfect `s`-th powers.
    pub fn new(k: impl Into<BigUint>, s: u32) -> Result<Self, CfError> {
        let k = k.into();
        if k < BigUint::from(2u32) {
            return Err(CfError::RadicandTooSmall(k));
        }
        if s < 2 {
            return Err(CfError::DegreeTooSmall(s));
        }
        let root = nth_root_floor(&k, s).expect("k >= 2, s >= 2");
        if cmp_root(&k, s, &BigInt::from(root.clone()), &BigUint::one()) == Ordering::Equal {
            return Err(CfError::PerfectPower { k, s, root });
        }
        Ok(Self { k, s })
    }

    pub fn k(&self) -> &BigUint {
        &self.k
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    /// Compares the root with `u / v`.
    pub fn cmp_rational(&self, u: &BigInt, v: &BigUint) -> Ordering {
        cmp_root(&self.k, self.s, u, v)
    }
}

impl fmt::Display for RootTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^(1/{})", self.k, self.s)
    }
}

/// `p_n / q_n` together with the partial quotient `b_n` and the previous pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergent {
    pub n: usize,
    pub b: BigUint,
    pub p: BigUint,
    pub q: BigUint,
    pub p_prev: BigUint,
    pub q_prev: BigUint,
}

impl Convergent {
    /// `p_n·q_{n−1} − p_{n−1}·q_n`, which is `(−1)^(n+1)` for a genuine expansion.
    pub fn determinant(&self) -> BigInt {
        BigInt::from(&self.p * &self.q_prev) - BigInt::from(&self.p_prev * &self.q)
    }
}

/// Sign of `a·x + b` for the root `x`.
fn sign_linear(root: &RootTarget, a: &BigInt, b: &BigInt) -> Ordering {
    match a.sign() {
        Sign::NoSign => b.sign().cmp(&Sign::NoSign),
        // a > 0: a·x + b > 0  ⇔  x > −b/a
        Sign::Plus => root.cmp_rational(&-b, a.magnitude()),
        // a < 0: a·x + b > 0  ⇔  x < b/|a|
        Sign::Minus => root.cmp_rational(b, a.magnitude()).reverse(),
    }
}

/// Iterator over the convergents of a root, one partial quotient at a time.
#[derive(Debug, Clone)]
pub struct Expansion {
    root: RootTarget,
    // tail x_n = (a·x + b) / (c·x + d)
    a: BigInt,
    b: BigInt,
    c: BigInt,
    d: BigInt,
    n: usize,
    p: (BigUint, BigUint),
    q: (BigUint, BigUint),
}

impl Expansion {
    pub fn new(root: RootTarget) -> Self {
        Self {
            root,
            a: BigInt::one(),
            b: BigInt::zero(),
            c: BigInt::zero(),
            d: BigInt::one(),
            n: 0,
            // (p_{n-1}, p_{n-2}) seeded as (p_{-1}, p_{-2}) = (1, 0)
            p: (BigUint::one(), BigUint::zero()),
            q: (BigUint::zero(), BigUint::one()),
        }
    }

    pub fn root(&self) -> &RootTarget {
        &self.root
    }

    /// Is the current tail `>= m`?
    fn tail_at_least(&self, m: &BigInt) -> bool {
        let den = sign_linear(&self.root, &self.c, &self.d);
        let diff = sign_linear(&self.root, &(&self.a - m * &self.c), &(&self.b - m * &self.d));
        diff == Ordering::Equal || diff == den
    }

    fn floor_of_tail(&self) -> BigUint {
        if self.n == 0 {
            return nth_root_floor(self.root.k(), self.root.s()).expect("k >= 2");
        }
        // tail > 1 from here on: gallop up, then bisect
        let mut lo = BigInt::one();
        let mut hi = BigInt::from(2u32);
        while self.tail_at_least(&hi) {
            lo = hi.clone();
            hi <<= 1u32;
        }
        while &hi - &lo > BigInt::one() {
            let mid: BigInt = (&lo + &hi) >> 1u32;
            if self.tail_at_least(&mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo.to_biguint().expect("partial quotient is positive")
    }

    fn advance_tail(&mut self, m: &BigUint) {
        let m = BigInt::from(m.clone());
        // x_{n+1} = 1 / (x_n − m) = (c·x + d) / ((a − m·c)·x + (b − m·d))
        let na = self.c.clone();
        let nb = self.d.clone();
        let nc = &self.a - &m * &self.c;
        let nd = &self.b - &m * &self.d;
        let g = na.gcd(&nb).gcd(&nc).gcd(&nd);
        if g.is_one() {
            (self.a, self.b, self.c, self.d) = (na, nb, nc, nd);
        } else {
            (self.a, self.b, self.c, self.d) = (na / &g, nb / &g, nc / &g, nd / &g);
        }
        debug_assert!(!(&self.a * &self.d - &self.b * &self.c).is_zero());
    }
}

impl Iterator for Expansion {
    type Item = Convergent;

    fn next(&mut self) -> Option<Convergent> {
        let b = self.floor_of_tail();
        let p = &b * &self.p.0 + &self.p.1;
        let q = &b * &self.q.0 + &self.q.1;
        let conv = Convergent {
            n: self.n,
            b: b.clone(),
            p: p.clone(),
            q: q.clone(),
            p_prev: self.p.0.clone(),
            q_prev: self.q.0.clone(),
        };
        self.advance_tail(&b);
        self.p = (p, std::mem::take(&mut self.p.0));
        self.q = (q, std::mem::take(&mut self.q.0));
        self.n += 1;
        Some(conv)
    }
}

/// Convergents `0..terms` of the root.
pub fn expand(root: &RootTarget, terms: usize) -> Vec<Convergent> {
    Expansion::new(root.clone()).take(terms).collect()
}

/// `d_n = k·q_n^s − p_n^s`.
pub fn d_value(root: &RootTarget, c: &Convergent) -> Result<BigInt, CfError> {
    let lhs = BigInt::from(root.k() * Pow::pow(&c.q, root.s()));
    let rhs = BigInt::from(Pow::pow(&c.p, root.s()));
    let d = lhs - rhs;
    if d.is_zero() {
        return Err(CfError::ZeroDefect { n: c.n });
    }
    Ok(d)
}

/// Predicts `b_{n+1}` from the convergent and its defect through the main term
/// of the explicit coefficient formula, `f'/f` of `x^s − k` at `p_n/q_n`:
///
/// `⌊ s·p_n^(s−1) / (q_n·|d_n|) − q_{n−1}/q_n ⌋`
///
/// evaluated as one exact floor division.
pub fn bvdp_predict(root: &RootTarget, c: &Convergent, d: &BigInt) -> Result<BigUint, CfError> {
    if c.n == 0 {
        return Err(CfError::PredictionIndex(c.n));
    }
    if d.is_zero() {
        return Err(CfError::ZeroDefect { n: c.n });
    }
    let d_abs = BigInt::from(d.magnitude().clone());
    let s = root.s();
    let main = BigInt::from(Pow::pow(&c.p, s - 1) * s);
    let num = main - BigInt::from(c.q_prev.clone()) * &d_abs;
    let den = BigInt::from(c.q.clone()) * &d_abs;
    let predicted = num.div_floor(&den);
    if !predicted.is_positive() {
        return Err(CfError::PredictionOutOfRange { n: c.n });
    }
    Ok(predicted.to_biguint().expect("positive"))
}

/// Exact-match statistics of [`bvdp_predict`] against the true expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionStats {
    pub checked: usize,
    pub exact: usize,
    /// `(n, predicted, actual)` for each index where the two differ; a
    /// missing prediction is recorded as `None`.
    pub mismatches: Vec<(usize, Option<BigUint>, BigUint)>,
    pub max_deviation: BigUint,
}

impl PredictionStats {
    pub fn match_rate(&self) -> f64 {
        if self.checked == 0 {
            return 1.0;
        }
        self.exact as f64 / self.checked as f64
    }
}

/// Compares predictions with the exact coefficients for `n` in `from..=to`.
pub fn prediction_stats(root: &RootTarget, from: usize, to: usize) -> PredictionStats {
    let convs = expand(root, to + 2);
    let mut stats = PredictionStats {
        checked: 0,
        exact: 0,
        mismatches: Vec::new(),
        max_deviation: BigUint::zero(),
    };
    for n in from.max(1)..=to {
        let c = &convs[n];
        let actual = &convs[n + 1].b;
        let d = d_value(root, c).expect("valid root");
        stats.checked += 1;
        match bvdp_predict(root, c, &d) {
            Ok(pred) if &pred == actual => stats.exact += 1,
            Ok(pred) => {
                let dev = if pred > *actual { &pred - actual } else { actual - &pred };
                stats.max_deviation = stats.max_deviation.clone().max(dev);
                stats.mismatches.push((n, Some(pred), actual.clone()));
            }
            Err(_) => {
                stats.max_deviation = stats.max_deviation.clone().max(actual.clone());
                stats.mismatches.push((n, None, actual.clone()));
            }
        }
    }
    stats
}

/// Number of decimal digits of `|x|` (1 for zero).
pub fn decimal_digits(x: &BigInt) -> usize {
    if x.is_zero() {
        return 1;
    }
    // exact count; bit-length estimates are off by one near powers of ten
    let approx = ((x.bits() as f64 - 1.0) * std::f64::consts::LOG10_2).floor() as u32;
    let mut digits = approx as usize + 1;
    let mag = x.magnitude();
    while Pow::pow(&BigUint::from(10u32), digits as u32) <= *mag {
        digits += 1;
    }
    digits
}

/// `b_n` as a `u64` when it fits; handy for tests and summaries.
pub fn coefficient_u64(c: &Convergent) -> Option<u64> {
    c.b.to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn root(k: u64, s: u32) -> RootTarget {
        RootTarget::new(k, s).unwrap()
    }

    fn coeffs(r: &RootTarget, terms: usize) -> Vec<u64> {
        expand(r, terms).iter().map(|c| c.b.to_u64().unwrap()).collect()
    }

    fn pq(c: &Convergent) -> (u64, u64) {
        (c.p.to_u64().unwrap(), c.q.to_u64().unwrap())
    }

    /// Independent oracle: walk the expansion with exact rationals, finding
    /// each floor by linear search on `cmp_root` over the bracketing
    /// convergent. Only usable for short prefixes.
    fn brute_coeffs(k: u64, s: u32, terms: usize) -> Vec<u64> {
        let kb = BigUint::from(k);
        let mut out: Vec<u64> = Vec::new();
        for n in 0..terms {
            // the next coefficient is the largest m keeping the root on the
            // same side of [.., m] as of the parity of n
            let mut m = 1u64;
            loop {
                let mut trial = out.clone();
                trial.push(m + 1);
                let (p, q) = fold(&trial);
                let ord = cmp_root(&kb, s, &BigInt::from(p), &BigUint::from(q));
                // even positions approach from below
                let overshoot = if n % 2 == 0 {
                    ord == Ordering::Less
                } else {
                    ord == Ordering::Greater
                };
                if overshoot {
                    break;
                }
                m += 1;
            }
            out.push(m);
        }
        out
    }

    fn fold(bs: &[u64]) -> (u64, u64) {
        let (mut p, mut q) = (1u64, 0u64);
        for &b in bs.iter().rev() {
            (p, q) = (b * p + q, p);
        }
        (p, q)
    }

    #[test]
    fn rejects_invalid_targets() {
        assert!(matches!(RootTarget::new(8u32, 3), Err(CfError::PerfectPower { .. })));
        assert!(matches!(RootTarget::new(1u32, 3), Err(CfError::RadicandTooSmall(_))));
        assert!(matches!(RootTarget::new(5u32, 1), Err(CfError::DegreeTooSmall(1))));
        assert!(matches!(RootTarget::new(1024u32, 10), Err(CfError::PerfectPower { .. })));
        assert!(RootTarget::new(1023u32, 10).is_ok());
    }

    #[test]
    fn expand_examples() {
        assert_eq!(coeffs(&root(109, 5), 5), vec![2, 1, 1, 4, 77733]);

        let sqrt2 = expand(&root(2, 2), 4);
        assert_eq!(sqrt2.iter().map(|c| c.b.to_u64().unwrap()).collect::<Vec<_>>(), [1, 2, 2, 2]);
        assert_eq!(sqrt2.iter().map(pq).collect::<Vec<_>>(), [(1, 1), (3, 2), (7, 5), (17, 12)]);

        let cbrt2 = expand(&root(2, 3), 5);
        assert_eq!(cbrt2.iter().map(|c| c.b.to_u64().unwrap()).collect::<Vec<_>>(), [1, 3, 1, 5, 1]);
        assert_eq!(
            cbrt2.iter().map(pq).collect::<Vec<_>>(),
            [(1, 1), (4, 3), (5, 4), (29, 23), (34, 27)]
        );
        assert_eq!(cbrt2[0].p_prev, BigUint::one());
        assert_eq!(cbrt2[0].q_prev, BigUint::zero());
    }

    #[test]
    fn expansion_agrees_with_brute_force() {
        for (k, s) in [(2, 3), (3, 2), (7, 4), (10, 3), (109, 5), (13, 2)] {
            let r = root(k, s);
            assert_eq!(coeffs(&r, 6), brute_coeffs(k, s, 6), "k={k} s={s}");
        }
    }

    #[test]
    fn cube_root_of_two_longer_prefix() {
        assert_eq!(
            coeffs(&root(2, 3), 14),
            [1, 3, 1, 5, 1, 1, 4, 1, 1, 8, 1, 14, 1, 10]
        );
    }

    #[test]
    fn d_value_examples() {
        let sqrt2 = expand(&root(2, 2), 1);
        assert_eq!(d_value(&root(2, 2), &sqrt2[0]).unwrap(), BigInt::from(1));

        let r = root(109, 5);
        let c = &expand(&r, 4)[3];
        assert_eq!(pq(c), (23, 9));
        assert_eq!(d_value(&r, c).unwrap(), BigInt::from(-2));

        let r = root(2, 3);
        let c = &expand(&r, 3)[2];
        assert_eq!(d_value(&r, c).unwrap(), BigInt::from(3));
    }

    #[test]
    fn d_value_rejects_foreign_convergent() {
        let c = Convergent {
            n: 0,
            b: BigUint::from(2u32),
            p: BigUint::from(2u32),
            q: BigUint::one(),
            p_prev: BigUint::one(),
            q_prev: BigUint::zero(),
        };
        // 2/1 is exactly the cube root of 8, which no valid target has; fake it via k=4, s=2
        let r = RootTarget { k: BigUint::from(4u32), s: 2 };
        assert_eq!(d_value(&r, &c), Err(CfError::ZeroDefect { n: 0 }));
    }

    #[test]
    fn bvdp_examples() {
        let r = root(2, 3);
        let convs = expand(&r, 4);
        let d2 = d_value(&r, &convs[2]).unwrap();
        assert_eq!(bvdp_predict(&r, &convs[2], &d2).unwrap(), BigUint::from(5u32));
        let d1 = d_value(&r, &convs[1]).unwrap();
        assert_eq!(d1, BigInt::from(-10));
        assert_eq!(bvdp_predict(&r, &convs[1], &d1).unwrap(), BigUint::from(1u32));
        assert_eq!(
            bvdp_predict(&r, &convs[0], &BigInt::from(1)),
            Err(CfError::PredictionIndex(0))
        );

        let r = root(109, 5);
        let convs = expand(&r, 4);
        let d3 = d_value(&r, &convs[3]).unwrap();
        assert_eq!(bvdp_predict(&r, &convs[3], &d3).unwrap(), BigUint::from(77_733u32));
    }

    #[test]
    fn bvdp_out_of_range_is_reported() {
        // a made-up convergent whose correction term swamps the main term
        let r = root(2, 3);
        let c = Convergent {
            n: 3,
            b: BigUint::one(),
            p: BigUint::from(2u32),
            q: BigUint::from(2u32),
            p_prev: BigUint::one(),
            q_prev: BigUint::from(100u32),
        };
        assert_eq!(
            bvdp_predict(&r, &c, &BigInt::from(1)),
            Err(CfError::PredictionOutOfRange { n: 3 })
        );
    }

    #[test]
    fn decimal_digit_counts() {
        assert_eq!(decimal_digits(&BigInt::from(0)), 1);
        assert_eq!(decimal_digits(&BigInt::from(9)), 1);
        assert_eq!(decimal_digits(&BigInt::from(-10)), 2);
        assert_eq!(decimal_digits(&BigInt::from(999_999)), 6);
        assert_eq!(decimal_digits(&BigInt::from(1_000_000)), 7);
    }
}
