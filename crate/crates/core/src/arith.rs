//! Small integer-arithmetic helpers shared across the crate.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Floor of the square root of `n`.
pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u64;
    // Float seed can be off by one in either direction.
    while x.checked_mul(x).map_or(true, |v| v > n) {
        x -= 1;
    }
    while x
        .checked_add(1)
        .and_then(|y| y.checked_mul(y))
        .is_some_and(|v| v <= n)
    {
        x += 1;
    }
    x
}

pub fn gcd(a: u64, b: u64) -> u64 {
    num_integer::gcd(a, b)
}

/// All primes up to `n` inclusive.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return vec![];
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut p = 2usize;
    while p * p <= n {
        if sieve[p] {
            let mut m = p * p;
            while m <= n {
                sieve[m] = false;
                m += p;
            }
        }
        p += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| if b { Some(i as u64) } else { None })
        .collect()
}

/// Calls `f` on every prime up to `limit`, using a segmented sieve so the
/// memory footprint stays at the segment size.
pub fn for_each_prime(limit: u64, mut f: impl FnMut(u64)) {
    if limit < 2 {
        return;
    }
    let root = isqrt(limit);
    let base = primes_up_to(root);
    for &p in &base {
        f(p);
    }
    const SEG: u64 = 1 << 20;
    let mut lo = root + 1;
    let mut flags = vec![true; SEG as usize];
    while lo <= limit {
        let hi = (lo + SEG - 1).min(limit);
        let len = (hi - lo + 1) as usize;
        for fl in flags.iter_mut().take(len) {
            *fl = true;
        }
        for &p in &base {
            let mut m = lo.div_ceil(p) * p;
            while m <= hi {
                flags[(m - lo) as usize] = false;
                m += p;
            }
        }
        for i in 0..len {
            if flags[i] {
                f(lo + i as u64);
            }
        }
        lo = hi + 1;
    }
}

/// Smallest-prime-factor table for 0..=n.
pub fn spf_table(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut m = i;
            while m <= n {
                if spf[m] == 0 {
                    spf[m] = i as u32;
                }
                m += i;
            }
        }
    }
    spf
}

/// Prime factorization by trial division, as (prime, exponent) pairs.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_squarefree(n: u64) -> bool {
    factorize(n).iter().all(|&(_, e)| e == 1)
}

/// Euler phi.
pub fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

pub fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u128;
    let mm = m as u128;
    let mut bb = (b % m) as u128;
    while e > 0 {
        if e & 1 == 1 {
            r = r * bb % mm;
        }
        bb = bb * bb % mm;
        e >>= 1;
    }
    r as u64
}

/// Multiplicative order of `a` modulo `n`; requires gcd(a, n) = 1.
pub fn mult_order(a: u64, n: u64) -> u64 {
    assert_eq!(gcd(a % n, n), 1, "order of non-unit {a} mod {n}");
    if n == 1 {
        return 1;
    }
    let phi = euler_phi(n);
    let mut ord = phi;
    for (p, _) in factorize(phi) {
        while ord % p == 0 && pow_mod(a, ord / p, n) == 1 {
            ord /= p;
        }
    }
    ord
}

/// Kronecker symbol (a|n), defined for all integers.
pub fn kronecker(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut a = a;
    let mut n = n;
    let mut result = 1i32;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    // factor out 2s from n
    let mut twos = 0u32;
    while n % 2 == 0 {
        n /= 2;
        twos += 1;
    }
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        // (a|2) = 1 if a = ±1 mod 8, -1 if a = ±3 mod 8
        let am8 = ((a % 8) + 8) % 8;
        if (am8 == 3 || am8 == 5) && twos % 2 == 1 {
            result = -result;
        }
    }
    // now n odd positive; run Jacobi
    a = ((a % n) + n) % n;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let nm8 = n % 8;
            if nm8 == 3 || nm8 == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// p-adic valuation of a nonzero rational.
pub fn val_p(x: &BigRational, p: u64) -> i64 {
    assert!(!x.is_zero(), "valuation of zero");
    let p = BigInt::from(p);
    let mut v = 0i64;
    let mut num = x.numer().abs();
    while (&num % &p).is_zero() {
        num /= &p;
        v += 1;
    }
    let mut den = x.denom().abs();
    while (&den % &p).is_zero() {
        den /= &p;
        v -= 1;
    }
    v
}

/// p-adic valuation of a nonzero integer.
pub fn val_p_int(mut n: u64, p: u64) -> u32 {
    assert!(n > 0);
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// q^e as a big rational, e possibly negative.
pub fn q_pow(q: u64, e: i64) -> BigRational {
    let b = BigUint::from(q).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        BigRational::from_integer(BigInt::from(b))
    } else {
        BigRational::new(BigInt::one(), BigInt::from(b))
    }
}

pub fn big_rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Number of divisors of n.
pub fn sigma0(n: u64) -> u64 {
    factorize(n).iter().map(|&(_, e)| e as u64 + 1).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isqrt_edges() {
        for n in 0..2000u64 {
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n, "n={n}");
        }
        assert_eq!(isqrt(u64::MAX), 4294967295);
    }

    #[test]
    fn orders() {
        assert_eq!(mult_order(3, 4), 2);
        assert_eq!(mult_order(3, 5), 4);
        assert_eq!(mult_order(2, 7), 3);
        assert_eq!(mult_order(7, 1), 1);
        assert_eq!(mult_order(3, 58), 28);
    }

    #[test]
    fn kronecker_quadratic_characters() {
        // chi_{-3} has period 3: 1, -1 on 1, 2
        assert_eq!(kronecker(-3, 1), 1);
        assert_eq!(kronecker(-3, 2), -1);
        assert_eq!(kronecker(-3, 3), 0);
        // chi_{-4}: 1 on 1 mod 4, -1 on 3 mod 4
        assert_eq!(kronecker(-4, 1), 1);
        assert_eq!(kronecker(-4, 3), -1);
        assert_eq!(kronecker(-4, 5), 1);
        // chi_5 = Legendre(5, .)
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(5, 3), -1);
        assert_eq!(kronecker(5, 4), 1);
        // oddness of chi_d for d < 0: chi(-1) = -1, via chi(n)chi(f-n)
        for d in [-3i64, -4, -7, -8, -11, -15] {
            let f = -d;
            for t in 1..f {
                if gcd(t as u64, f as u64) == 1 {
                    assert_eq!(kronecker(d, t) * kronecker(d, f - t), -1, "d={d} t={t}");
                }
            }
        }
    }

    #[test]
    fn valuations() {
        let x = big_rat(-9, 2);
        assert_eq!(val_p(&x, 3), 2);
        assert_eq!(val_p(&x, 2), -1);
        assert_eq!(val_p(&x, 5), 0);
    }

    #[test]
    fn phi_and_sigma() {
        assert_eq!(euler_phi(58), 28);
        assert_eq!(euler_phi(1), 1);
        assert_eq!(sigma0(8), 4);
        assert_eq!(sigma0(5), 2);
    }
}
