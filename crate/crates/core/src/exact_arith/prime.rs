use std::sync::OnceLock;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sieve limit cached for the lifetime of the process.
pub(crate) const CACHED_SIEVE_LIMIT: u32 = 1_000_000;

const FIXED_BASES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn sieve(limit: u32) -> Vec<u32> {
    let limit = limit as usize;
    if limit < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for i in 2..=limit {
        if composite[i] {
            continue;
        }
        primes.push(i as u32);
        let mut j = i * i;
        while j <= limit {
            composite[j] = true;
            j += i;
        }
    }
    primes
}

/// All primes `<= limit`. Limits up to [`CACHED_SIEVE_LIMIT`] share one
/// immutable table; anything larger is sieved on demand.
pub(crate) fn primes_up_to(limit: u32) -> std::borrow::Cow<'static, [u32]> {
    static CACHE: OnceLock<Vec<u32>> = OnceLock::new();
    if limit <= CACHED_SIEVE_LIMIT {
        let all = CACHE.get_or_init(|| sieve(CACHED_SIEVE_LIMIT));
        let end = all.partition_point(|&p| p <= limit);
        std::borrow::Cow::Borrowed(&all[..end])
    } else {
        std::borrow::Cow::Owned(sieve(limit))
    }
}

/// One strong-pseudoprime round. `n` must be odd and > 3, with `n - 1 = d·2^r`.
fn strong_probable_prime(n: &BigUint, d: &BigUint, r: u64, base: &BigUint) -> bool {
    let n_minus_1 = n - 1u32;
    let mut x = base.modpow(d, n);
    if x.is_one() || x == n_minus_1 {
        return true;
    }
    for _ in 1..r {
        x = (&x * &x) % n;
        if x == n_minus_1 {
            return true;
        }
        if x.is_one() {
            return false;
        }
    }
    false
}

/// Miller–Rabin with `rounds` strong-pseudoprime tests.
///
/// The first rounds use the fixed prime bases 2..37, which is a proof of
/// primality below 3.3·10^24; further rounds draw bases from a fixed-seed
/// stream so results are reproducible.
pub fn is_probable_prime(n: &BigUint, rounds: u32) -> bool {
    if let Some(small) = n.to_u64() {
        if small < 2 {
            return false;
        }
        for p in FIXED_BASES {
            if small == u64::from(p) {
                return true;
            }
            if small % u64::from(p) == 0 {
                return false;
            }
        }
    } else if n.is_even() {
        return false;
    }

    let n_minus_1 = n - 1u32;
    let r = n_minus_1.trailing_zeros().expect("n - 1 > 0");
    let d = &n_minus_1 >> r;

    let rounds = rounds.max(1) as usize;
    for &b in FIXED_BASES.iter().take(rounds) {
        if !strong_probable_prime(n, &d, r, &BigUint::from(b)) {
            return false;
        }
    }
    if rounds > FIXED_BASES.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_abc0);
        let two = BigUint::from(2u32);
        for _ in FIXED_BASES.len()..rounds {
            let base = rng.gen_biguint_range(&two, &n_minus_1);
            if base.is_zero() {
                continue;
            }
            if !strong_probable_prime(n, &d, r, &base) {
                return false;
            }
        }
    }
    true
}
