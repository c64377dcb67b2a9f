//! Exact integer primitives shared by every other module.
//!
//! Nothing in here touches floating point except [`ln_big`], which exists
//! only to turn exact integers into display-grade logarithms.

mod factor;
mod prime;

pub use factor::{factorize, radical, FactorEffort, FactorStatus, Factorization};
pub use prime::is_probable_prime;

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Pow, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("0^0 is undefined")]
    ZeroToTheZero,
    #[error("nth root requires a >= 1 and s >= 1 (got a = {a}, s = {s})")]
    RootDomain { a: BigUint, s: u32 },
}

/// `base^exp`, exactly. `0^0` is rejected rather than silently mapped to 1.
pub fn ipow(base: &BigUint, exp: u32) -> Result<BigUint, ArithError> {
    if base.is_zero() && exp == 0 {
        return Err(ArithError::ZeroToTheZero);
    }
    Ok(Pow::pow(base, exp))
}

/// Largest `r` with `r^s <= a`.
///
/// Binary search on the exponentiation predicate. The initial bracket comes
/// from the bit length: if `a` has `L` bits then `2^((L-1)/s) <= r < 2^((L-1)/s + 1)`.
pub fn nth_root_floor(a: &BigUint, s: u32) -> Result<BigUint, ArithError> {
    if a.is_zero() || s == 0 {
        return Err(ArithError::RootDomain { a: a.clone(), s });
    }
    if s == 1 {
        return Ok(a.clone());
    }
    let shift = (a.bits() - 1) / u64::from(s);
    // invariant: lo^s <= a < hi^s
    let mut lo = BigUint::one() << shift;
    let mut hi = BigUint::one() << (shift + 1);
    let one = BigUint::one();
    while &hi - &lo > one {
        let mid = (&lo + &hi) >> 1u32;
        if Pow::pow(&mid, s) <= *a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Compares the real root `k^(1/s)` with the rational `u / v`.
///
/// Reduces to the sign of `k·v^s − u^s`; non-positive `u` always loses
/// because the root is positive.
pub fn cmp_root(k: &BigUint, s: u32, u: &BigInt, v: &BigUint) -> Ordering {
    debug_assert!(!v.is_zero(), "denominator must be positive");
    let u = match u.sign() {
        Sign::Minus | Sign::NoSign => return Ordering::Greater,
        Sign::Plus => u.magnitude(),
    };
    let lhs = k * Pow::pow(v, s);
    let rhs = Pow::pow(u, s);
    lhs.cmp(&rhs)
}

/// Natural logarithm of a positive integer in double precision.
///
/// Uses the top 64 bits and the bit length, so the relative error stays at
/// double-precision level no matter how large `x` gets. Returns `-inf` for 0.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().map_or(f64::NEG_INFINITY, |v| (v as f64).ln());
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("top 64 bits fit in u64");
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}
