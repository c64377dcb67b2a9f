//! ABC-style equations attached to convergents, and their qualities.
//!
//! Every hit verdict here is decided on exact integers. The `f64` qualities
//! are display values derived from exact logarithms.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cf_engine::{d_value, CfError, Convergent, RootTarget};
use crate::exact_arith::{factorize, ln_big, radical, FactorEffort, Factorization};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AbcError {
    #[error(transparent)]
    Cf(#[from] CfError),
    #[error("quality undefined: {0} is below 2")]
    UndefinedQuality(&'static str),
    #[error("third quality only applies to sqrt(2) with d_n < 0 (got {root}, d = {d})")]
    InapplicableQuality { root: String, d: BigInt },
    #[error("epsilon must be non-negative and finite (got {0})")]
    BadEpsilon(f64),
}

/// `a + b = c` read off a convergent of `k^(1/s)`.
///
/// With `d = k·q^s − p^s`: for `d > 0` the triple is `(d, p^s, k·q^s)`,
/// for `d < 0` it is `(−d, k·q^s, p^s)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultingEquation {
    pub root: RootTarget,
    pub n: usize,
    pub d: BigInt,
    pub p: BigUint,
    pub q: BigUint,
    pub a: BigUint,
    pub b: BigUint,
    pub c: BigUint,
    /// `|d|·p·q·k`, the radical-free stand-in for `rad(abc)`.
    pub base_product: BigUint,
}

impl ResultingEquation {
    /// The bases of `a·b·c` with their structural exponents:
    /// `|d|^1`, `p^s`, `q^s`, `k^1`.
    pub fn factor_bases(&self) -> [(&BigUint, u32); 4] {
        let s = self.root.s();
        [
            (self.d.magnitude(), 1),
            (&self.p, s),
            (&self.q, s),
            (self.root.k(), 1),
        ]
    }

    pub fn is_balanced(&self) -> bool {
        &self.a + &self.b == self.c
    }
}

pub fn resulting_equation(root: &RootTarget, conv: &Convergent) -> Result<ResultingEquation, AbcError> {
    let d = d_value(root, conv)?;
    let s = root.s();
    let p_pow = Pow::pow(&conv.p, s);
    let kq_pow = root.k() * Pow::pow(&conv.q, s);
    let (a, b, c) = match d.sign() {
        Sign::Plus => (d.magnitude().clone(), p_pow, kq_pow),
        Sign::Minus => (d.magnitude().clone(), kq_pow, p_pow),
        Sign::NoSign => unreachable!("d_value rejects zero"),
    };
    let base_product = d.magnitude() * &conv.p * &conv.q * root.k();
    let eq = ResultingEquation {
        root: root.clone(),
        n: conv.n,
        d,
        p: conv.p.clone(),
        q: conv.q.clone(),
        a,
        b,
        c,
        base_product,
    };
    debug_assert!(eq.is_balanced());
    Ok(eq)
}

/// Divides out `gcd(a, b, c)`; the flag says whether the triple was already coprime.
pub fn coprime_reduce(a: &BigUint, b: &BigUint, c: &BigUint) -> ((BigUint, BigUint, BigUint), bool) {
    let g = a.gcd(b).gcd(c);
    if g.is_one() {
        return ((a.clone(), b.clone(), c.clone()), true);
    }
    ((a / &g, b / &g, c / &g), false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Q1Status {
    Exact,
    LowerBoundCertified,
    Unavailable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HitVerdict {
    Yes,
    No,
    Unknown,
}

/// First quality `ln c / ln rad(abc)`, or a bracket on it when the
/// factorization stalled.
#[derive(Debug, Clone, PartialEq)]
pub struct Quality1 {
    /// `[lo, hi]`; equal ends when the radical is known exactly. `hi` is
    /// infinite when no prime of `abc` was found at all.
    pub lo: f64,
    pub hi: f64,
    pub status: Q1Status,
    pub hit: HitVerdict,
    pub rad_lower: BigUint,
    pub rad_upper: BigUint,
}

impl Quality1 {
    /// The value when exact, otherwise the certified lower end.
    pub fn value(&self) -> Option<f64> {
        match self.status {
            Q1Status::Exact => Some(self.lo),
            Q1Status::LowerBoundCertified => Some(self.lo),
            Q1Status::Unavailable => None,
        }
    }

    fn from_radical_bounds(c: &BigUint, rad_lower: BigUint, rad_upper: BigUint) -> Self {
        let ln_c = ln_big(c);
        let lo = ln_c / ln_big(&rad_upper);
        let hi = if rad_lower.is_one() {
            f64::INFINITY
        } else {
            ln_c / ln_big(&rad_lower)
        };
        let exact = rad_lower == rad_upper;
        let hit = if rad_upper < *c {
            HitVerdict::Yes
        } else if rad_lower >= *c {
            HitVerdict::No
        } else {
            HitVerdict::Unknown
        };
        let status = if exact {
            Q1Status::Exact
        } else if hit == HitVerdict::Yes {
            Q1Status::LowerBoundCertified
        } else {
            Q1Status::Unavailable
        };
        let hi = if exact { lo } else { hi };
        Self {
            lo,
            hi,
            status,
            hit,
            rad_lower,
            rad_upper,
        }
    }
}

/// Factorization of `a·b·c` for a resulting equation, assembled from the
/// factorizations of its four bases rather than the (much larger) product.
pub fn equation_factorization(e: &ResultingEquation, effort: &FactorEffort) -> Factorization {
    e.factor_bases()
        .iter()
        .map(|(base, power)| factorize(base, effort).pow(*power))
        .fold(Factorization::one(), |acc, f| acc.merge(&f, effort.mr_rounds))
}

pub fn quality1(e: &ResultingEquation, effort: &FactorEffort) -> Result<Quality1, AbcError> {
    quality1_with(&e.c, &equation_factorization(e, effort))
}

/// First quality of an arbitrary triple, factoring each entry separately.
pub fn quality1_triple(
    a: &BigUint,
    b: &BigUint,
    c: &BigUint,
    effort: &FactorEffort,
) -> Result<Quality1, AbcError> {
    let f = [a, b, c]
        .iter()
        .map(|x| factorize(x, effort))
        .fold(Factorization::one(), |acc, f| acc.merge(&f, effort.mr_rounds));
    quality1_with(c, &f)
}

fn quality1_with(c: &BigUint, abc: &Factorization) -> Result<Quality1, AbcError> {
    let (lower, upper) = radical(abc);
    if upper.is_one() {
        return Err(AbcError::UndefinedQuality("a·b·c"));
    }
    Ok(Quality1::from_radical_bounds(c, lower, upper))
}

/// Second quality `ln c / ln(|d|·p·q·k)`.
pub fn quality2(e: &ResultingEquation) -> Result<f64, AbcError> {
    if e.base_product < BigUint::from(2u32) {
        return Err(AbcError::UndefinedQuality("|d|·p·q·k"));
    }
    Ok(ln_big(&e.c) / ln_big(&e.base_product))
}

/// `quality2 > 1`, decided as `c > |d|·p·q·k`.
pub fn is_hit_q2(e: &ResultingEquation) -> bool {
    e.c > e.base_product
}

/// Third quality for `sqrt(2)` on the `d < 0` branch: `ln(p²) / ln(p·q)`.
///
/// There `q` is even, so the factor 2 in `|d|·p·q·k` is already accounted for
/// and drops out of the denominator.
pub fn quality3_sqrt2(e: &ResultingEquation) -> Result<f64, AbcError> {
    let two = BigUint::from(2u32);
    if e.root.k() != &two || e.root.s() != 2 || e.d.sign() != Sign::Minus {
        return Err(AbcError::InapplicableQuality {
            root: e.root.to_string(),
            d: e.d.clone(),
        });
    }
    let pq = &e.p * &e.q;
    Ok(ln_big(&(&e.p * &e.p)) / ln_big(&pq))
}

/// The degree-3 criterion for `2^(1/3)`: `b_{n+1} > 6` forces a
/// second-quality hit at index `n`.
pub fn cube2_hit_criterion(b_next: &BigUint) -> bool {
    *b_next > BigUint::from(6u32)
}

/// Smallest constant `K` with `c <= K·(|d|·p·q·k)^(1+ε)` at this equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WneabcProbe {
    pub epsilon: f64,
    pub k_needed: f64,
}

pub fn wneabc_k_needed(e: &ResultingEquation, epsilon: f64) -> Result<WneabcProbe, AbcError> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(AbcError::BadEpsilon(epsilon));
    }
    if e.base_product < BigUint::from(2u32) {
        return Err(AbcError::UndefinedQuality("|d|·p·q·k"));
    }
    // c / base is taken from the exact fraction when it fits in an f64, so
    // that ε = 0 reproduces the rational value itself
    let ratio = wneabc_k_needed_exact(e).to_f64().filter(|r| r.is_normal());
    let k_needed = match ratio {
        Some(r) => r * (-epsilon * ln_big(&e.base_product)).exp(),
        None => (ln_big(&e.c) - (1.0 + epsilon) * ln_big(&e.base_product)).exp(),
    };
    Ok(WneabcProbe { epsilon, k_needed })
}

/// `k_needed` at `ε = 0` as an exact fraction `c / (|d|·p·q·k)`.
pub fn wneabc_k_needed_exact(e: &ResultingEquation) -> BigRational {
    BigRational::new(BigInt::from(e.c.clone()), BigInt::from(e.base_product.clone()))
}

/// Everything computed for one equation.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub q1: Option<Quality1>,
    pub q2: Option<f64>,
    pub q3: Option<f64>,
    pub hit_q1: HitVerdict,
    pub hit_q2: bool,
    pub probes: Vec<WneabcProbe>,
}

/// Evaluates all qualities; `effort = None` skips the factorization-based first quality.
pub fn evaluate(
    e: &ResultingEquation,
    effort: Option<&FactorEffort>,
    epsilons: &[f64],
) -> Result<QualityReport, AbcError> {
    let q1 = match effort {
        Some(effort) => Some(quality1(e, effort)?),
        None => None,
    };
    let q2 = quality2(e).ok();
    let q3 = quality3_sqrt2(e).ok();
    let probes = epsilons
        .iter()
        .map(|&eps| wneabc_k_needed(e, eps))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(QualityReport {
        hit_q1: q1.as_ref().map_or(HitVerdict::Unknown, |q| q.hit),
        q1,
        q2,
        q3,
        hit_q2: is_hit_q2(e),
        probes,
    })
}
