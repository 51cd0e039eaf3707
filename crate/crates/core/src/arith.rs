//! Exact integer arithmetic helpers shared across the crate.
//!
//! Everything here is integer-only. Floor-of-square-root expressions such as
//! ⌊2√(p−2)⌋ appear in thresholds where a floating-point round-off would
//! silently corrupt a result, so they are computed with an exact integer
//! square root and nothing else.

/// Floor of the square root of `n`, exact for all `u64`.
pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    // Newton iteration with an overshooting start; converges in a few steps.
    let mut x = 1u64 << (n.ilog2() / 2 + 1);
    loop {
        let y = (x + n / x) / 2;
        if y >= x {
            break;
        }
        x = y;
    }
    debug_assert!(x * x <= n && (x + 1).checked_mul(x + 1).map_or(true, |s| s > n));
    x
}

/// ⌊2√m⌋ computed exactly as ⌊√(4m)⌋.
pub fn floor_two_sqrt(m: u64) -> u64 {
    isqrt(4 * m)
}

/// Deterministic trial-division primality test. Fine for the word-sized
/// moduli and orders this crate works with.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    if n % 3 == 0 {
        return n == 3;
    }
    let mut d = 5u64;
    while d * d <= n {
        if n % d == 0 || n % (d + 2) == 0 {
            return false;
        }
        d += 6;
    }
    true
}

/// Smallest prime divisor of `n`, or `None` for `n < 2`.
pub fn smallest_prime_divisor(n: u64) -> Option<u64> {
    if n < 2 {
        return None;
    }
    if n % 2 == 0 {
        return Some(2);
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return Some(d);
        }
        d += 2;
    }
    Some(n)
}

/// Prime factorization as (prime, exponent) pairs, primes ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i + 1) as u128,
            None => return u128::MAX,
        };
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isqrt_exact_on_edges() {
        for n in 0..10_000u64 {
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n, "isqrt({n}) = {r}");
        }
        assert_eq!(isqrt(u64::MAX), (1u64 << 32) - 1);
    }

    #[test]
    fn floor_two_sqrt_values() {
        // ⌊2√5⌋ = 4, ⌊2√1⌋ = 2, ⌊2√11⌋ = 6
        assert_eq!(floor_two_sqrt(5), 4);
        assert_eq!(floor_two_sqrt(1), 2);
        assert_eq!(floor_two_sqrt(11), 6);
    }

    #[test]
    fn primes_small() {
        let primes: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]);
    }

    #[test]
    fn factorization_roundtrip() {
        for n in 2..2000u64 {
            let f = factorize(n);
            let back: u64 = f.iter().map(|&(p, e)| p.pow(e)).product();
            assert_eq!(back, n);
            assert!(f.iter().all(|&(p, _)| is_prime(p)));
        }
        assert_eq!(smallest_prime_divisor(91), Some(7));
        assert_eq!(smallest_prime_divisor(1), None);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(23, 12), 1_352_078);
        assert_eq!(binomial(4, 3), 4);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(90, 18), 3_789_648_142_708_598_775);
    }
}
