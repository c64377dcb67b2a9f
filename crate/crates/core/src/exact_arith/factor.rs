use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::nth_root_floor;
use super::prime::{is_probable_prime, primes_up_to};

/// How hard [`factorize`] may try before giving up on a composite cofactor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorEffort {
    /// Trial division by every prime up to this bound.
    pub trial_bound: u32,
    /// Total Pollard–Brent iterations (polynomial evaluations) per call.
    pub rho_iterations: u64,
    /// Strong-pseudoprime rounds used to certify factors.
    pub mr_rounds: u32,
}

impl Default for FactorEffort {
    fn default() -> Self {
        Self {
            trial_bound: 1_000_000,
            rho_iterations: 200_000,
            mr_rounds: 32,
        }
    }
}

impl FactorEffort {
    pub fn light() -> Self {
        Self {
            trial_bound: 10_000,
            rho_iterations: 20_000,
            mr_rounds: 16,
        }
    }

    pub fn heavy() -> Self {
        Self {
            trial_bound: 1_000_000,
            rho_iterations: 5_000_000,
            mr_rounds: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorStatus {
    Complete,
    Partial,
}

/// Prime-power decomposition, possibly with an unfactored composite cofactor.
///
/// The cofactor never shares a prime with the listed factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    factors: BTreeMap<BigUint, u32>,
    cofactor: BigUint,
}

impl Factorization {
    pub fn one() -> Self {
        Self {
            factors: BTreeMap::new(),
            cofactor: BigUint::one(),
        }
    }

    pub fn factors(&self) -> &BTreeMap<BigUint, u32> {
        &self.factors
    }

    pub fn cofactor(&self) -> &BigUint {
        &self.cofactor
    }

    pub fn status(&self) -> FactorStatus {
        if self.cofactor.is_one() {
            FactorStatus::Complete
        } else {
            FactorStatus::Partial
        }
    }

    pub fn is_complete(&self) -> bool {
        self.status() == FactorStatus::Complete
    }

    /// Product of all prime powers times the cofactor.
    pub fn reassemble(&self) -> BigUint {
        self.factors
            .iter()
            .fold(self.cofactor.clone(), |acc, (p, &e)| acc * Pow::pow(p, e))
    }

    /// Factorization of the product of `self` and `other`.
    pub fn merge(&self, other: &Factorization, mr_rounds: u32) -> Factorization {
        let mut factors = self.factors.clone();
        for (p, &e) in &other.factors {
            *factors.entry(p.clone()).or_insert(0) += e;
        }
        let cofactor = &self.cofactor * &other.cofactor;
        normalize(factors, vec![cofactor], mr_rounds)
    }

    /// Multiplies every exponent by `power`, i.e. the factorization of `n^power`.
    pub fn pow(&self, power: u32) -> Factorization {
        if power == 0 {
            return Factorization::one();
        }
        Factorization {
            factors: self
                .factors
                .iter()
                .map(|(p, &e)| (p.clone(), e * power))
                .collect(),
            cofactor: Pow::pow(&self.cofactor, power),
        }
    }
}

/// `(lower, upper)` bounds on the radical.
///
/// Complete: both equal the product of the distinct primes. Partial: `lower`
/// is the product of the known primes and `upper` multiplies in the whole
/// cofactor, which over-counts any repeated unknown prime.
pub fn radical(f: &Factorization) -> (BigUint, BigUint) {
    let lower = f.factors.keys().fold(BigUint::one(), |acc, p| acc * p);
    let upper = &lower * &f.cofactor;
    (lower, upper)
}

/// Bounded-effort factorization: trial division, then Pollard–Brent rho on
/// what remains. Running out of budget leaves a composite cofactor and a
/// `Partial` status, never an error.
///
/// # Panics
///
/// Panics if `n` is zero.
pub fn factorize(n: &BigUint, effort: &FactorEffort) -> Factorization {
    assert!(!n.is_zero(), "cannot factorize 0");
    let mut factors = BTreeMap::new();
    let mut rest = n.clone();

    let primes = primes_up_to(effort.trial_bound);
    for &p in primes.iter() {
        let pp = u64::from(p) * u64::from(p);
        if rest.bits() <= 64 && rest.to_u64().is_some_and(|r| r < pp) {
            break;
        }
        let mut e = 0;
        loop {
            let (quot, rem) = rest.div_rem(&BigUint::from(p));
            if !rem.is_zero() {
                break;
            }
            rest = quot;
            e += 1;
        }
        if e > 0 {
            factors.insert(BigUint::from(p), e);
        }
    }
    if rest.is_one() {
        return Factorization {
            factors,
            cofactor: rest,
        };
    }
    let trial_limit = BigUint::from(effort.trial_bound) + 1u32;
    if rest < &trial_limit * &trial_limit {
        // no factor <= trial_bound and below its square: prime
        *factors.entry(rest).or_insert(0) += 1;
        return Factorization {
            factors,
            cofactor: BigUint::one(),
        };
    }

    let max_power = perfect_power_limit(effort.trial_bound);
    let mut budget = effort.rho_iterations;
    let mut stack = vec![rest];
    let mut unresolved = Vec::new();
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if is_probable_prime(&m, effort.mr_rounds) {
            *factors.entry(m).or_insert(0) += 1;
            continue;
        }
        if let Some((root, e)) = perfect_power(&m, max_power) {
            stack.extend(std::iter::repeat_n(root, e as usize));
            continue;
        }
        match brent_rho(&m, &mut budget) {
            Some(f) => {
                let other = &m / &f;
                stack.push(f);
                stack.push(other);
            }
            None => unresolved.push(m),
        }
    }
    normalize(factors, unresolved, effort.mr_rounds)
}

/// Folds `leftovers` into a single cofactor after stripping every known prime
/// out of it.
fn normalize(
    mut factors: BTreeMap<BigUint, u32>,
    leftovers: Vec<BigUint>,
    mr_rounds: u32,
) -> Factorization {
    let mut cofactor = leftovers
        .into_iter()
        .fold(BigUint::one(), |acc, m| acc * m);
    if !cofactor.is_one() {
        for (p, e) in factors.iter_mut() {
            loop {
                let (quot, rem) = cofactor.div_rem(p);
                if !rem.is_zero() {
                    break;
                }
                cofactor = quot;
                *e += 1;
            }
        }
    }
    if !cofactor.is_one() && is_probable_prime(&cofactor, mr_rounds) {
        *factors.entry(cofactor).or_insert(0) += 1;
        cofactor = BigUint::one();
    }
    Factorization { factors, cofactor }
}

/// After trial division to `bound`, any `r^e` left has `r > bound`, so `e`
/// is at most `bits / log2(bound)`.
fn perfect_power_limit(bound: u32) -> f64 {
    f64::from(bound.max(2)).log2()
}

fn perfect_power(m: &BigUint, log2_bound: f64) -> Option<(BigUint, u32)> {
    let max_e = ((m.bits() as f64) / log2_bound).floor() as u32;
    for e in 2..=max_e.max(2) {
        let r = nth_root_floor(m, e).ok()?;
        if r > BigUint::one() && Pow::pow(&r, e) == *m {
            return Some((r, e));
        }
    }
    None
}

fn abs_diff(a: &BigUint, b: &BigUint) -> BigUint {
    if a >= b {
        a - b
    } else {
        b - a
    }
}

/// Brent's variant of Pollard rho on `x ↦ x² + c`, trying successive `c`
/// until a proper factor turns up or `budget` evaluations are spent.
fn brent_rho(n: &BigUint, budget: &mut u64) -> Option<BigUint> {
    if n.is_even() {
        return Some(BigUint::from(2u32));
    }
    const BATCH: u64 = 128;
    let one = BigUint::one();
    let mut c = BigUint::one();
    while *budget > 0 {
        let step = |x: &BigUint| (x * x + &c) % n;
        let mut y = BigUint::from(2u32);
        let mut x = y.clone();
        let mut ys = y.clone();
        let mut g = one.clone();
        let mut q = one.clone();
        let mut r: u64 = 1;
        'outer: while g.is_one() {
            x = y.clone();
            for _ in 0..r {
                if *budget == 0 {
                    break 'outer;
                }
                *budget -= 1;
                y = step(&y);
            }
            let mut k = 0;
            while k < r && g.is_one() {
                ys = y.clone();
                for _ in 0..BATCH.min(r - k) {
                    if *budget == 0 {
                        break 'outer;
                    }
                    *budget -= 1;
                    y = step(&y);
                    q = (q * abs_diff(&x, &y)) % n;
                }
                g = q.gcd(n);
                k += BATCH;
            }
            r *= 2;
        }
        if g == *n {
            // the batch overshot; replay one step at a time
            loop {
                ys = step(&ys);
                g = abs_diff(&x, &ys).gcd(n);
                if !g.is_one() {
                    break;
                }
            }
        }
        if !g.is_one() && g != *n {
            return Some(g);
        }
        c += 1u32;
    }
    None
}
