//! Cyclic quartic fields ordered by discriminant: the admissible
//! discriminant shapes, exact field counts by enumeration, the density
//! constant t with a certified bracket, per-subfield density limits, and
//! the bracket for the proportion of quartic fields whose quadratic
//! subfield has class number coprime to 3.

use serde::Serialize;

use crate::arith::{factorize, for_each_prime, isqrt, sigma0};
use crate::error::{Error, Result};
use crate::interval::F64Interval;
use crate::quadforms::FormClassTable;

/// Admissible discriminant of a cyclic quartic field:
/// n = 2^alpha * d'^3 * a^2 with alpha in {0, 4, 6, 11}, d' a squarefree
/// product of primes 1 mod 4 (nontrivial unless alpha = 11), and `a` odd,
/// squarefree, coprime to d'.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuarticDisc {
    pub alpha: u8,
    pub d_prime: u64,
    pub a: u64,
}

impl QuarticDisc {
    pub fn value(&self) -> Option<u64> {
        let pow2 = 1u64.checked_shl(self.alpha as u32)?;
        let d3 = self.d_prime.checked_pow(3)?;
        pow2.checked_mul(d3)?.checked_mul(self.a.checked_pow(2)?)
    }

    /// Discriminant of the unique quadratic subfield.
    pub fn subfield_discriminant(&self) -> i64 {
        if self.alpha == 11 {
            8 * self.d_prime as i64
        } else {
            self.d_prime as i64
        }
    }

    /// Number of cyclic quartic fields with this discriminant. The count
    /// is 2 sigma0(d'), sigma0(d'), sigma0(d')/2 for alpha = 11, 6, {0,4}.
    pub fn field_count(&self) -> u64 {
        let s = sigma0(self.d_prime);
        match self.alpha {
            11 => 2 * s,
            6 => s,
            _ => s / 2,
        }
    }
}

/// Classifies an integer as a quartic discriminant, or errors.
pub fn h_of_disc(n: u64) -> Result<u64> {
    Ok(parse_disc(n)?.field_count())
}

/// Decomposes n = 2^alpha d'^3 a^2 into the admissible shape.
pub fn parse_disc(n: u64) -> Result<QuarticDisc> {
    if n == 0 {
        return Err(Error::Inadmissible("zero".into()));
    }
    let alpha = n.trailing_zeros() as u8;
    if !matches!(alpha, 0 | 4 | 6 | 11) {
        return Err(Error::Inadmissible(format!("2-adic valuation {alpha}")));
    }
    let odd = n >> alpha;
    let mut d_prime = 1u64;
    let mut a = 1u64;
    for (p, e) in factorize(odd) {
        match e {
            3 if p % 4 == 1 => d_prime *= p,
            2 => a *= p,
            _ => {
                return Err(Error::Inadmissible(format!(
                    "prime {p} enters with exponent {e}"
                )))
            }
        }
    }
    if d_prime == 1 && alpha != 11 {
        return Err(Error::Inadmissible(
            "no primes 1 mod 4 in the cube part".into(),
        ));
    }
    Ok(QuarticDisc { alpha, d_prime, a })
}

/// Squarefree products of primes 1 mod 4 with value at most `cap`
/// (including the empty product 1).
fn admissible_d_primes(cap: u64) -> Vec<u64> {
    let mut primes = Vec::new();
    for_each_prime(cap, |p| {
        if p % 4 == 1 {
            primes.push(p);
        }
    });
    let mut out = vec![1u64];
    fn rec(primes: &[u64], start: usize, cur: u64, cap: u64, out: &mut Vec<u64>) {
        for i in start..primes.len() {
            match cur.checked_mul(primes[i]) {
                Some(v) if v <= cap => {
                    out.push(v);
                    rec(primes, i + 1, v, cap, out);
                }
                _ => break,
            }
        }
    }
    rec(&primes, 0, 1, cap, &mut out);
    out.sort_unstable();
    out
}

/// Bitmap of odd squarefree integers up to `max`.
fn odd_squarefree_sieve(max: u64) -> Vec<bool> {
    let max = max as usize;
    let mut sf = vec![true; max + 1];
    sf[0] = false;
    let mut d = 2usize;
    while d * d <= max {
        let sq = d * d;
        let mut m = sq;
        while m <= max {
            sf[m] = false;
            m += sq;
        }
        d += 1;
    }
    for (i, b) in sf.iter_mut().enumerate() {
        if i % 2 == 0 {
            *b = false;
        }
    }
    sf
}

const X_CAP: u64 = 1_000_000_000_000;

/// Exact number of cyclic quartic fields with discriminant at most x,
/// optionally restricted to those containing the quadratic field of
/// fundamental discriminant d.
pub fn count_fields(x: u64, restrict_subfield: Option<i64>) -> Result<u64> {
    if x > X_CAP {
        return Err(Error::Invalid(format!("x exceeds the cap {X_CAP}")));
    }
    if let Some(d) = restrict_subfield {
        if !crate::quadforms::is_fundamental_discriminant(d) {
            return Err(Error::NotFundamental(d));
        }
        if d < 0 || factorize(d.unsigned_abs()).iter().any(|&(p, _)| p % 4 == 3) {
            return Ok(0);
        }
    }
    // doubled counts so the half-integer weights at alpha in {0,4} stay
    // integral even for a single term
    let mut doubled = 0u64;
    let a_max = isqrt(x / 125.max(1)).max(1);
    let sf = odd_squarefree_sieve(a_max);
    let mut add_block = |alpha: u8, d_prime: u64| {
        let pow2 = 1u64 << alpha;
        let d3 = match d_prime.checked_pow(3) {
            Some(v) => v,
            None => return,
        };
        let budget = match pow2.checked_mul(d3) {
            Some(v) if v <= x => x / v,
            _ => return,
        };
        let weight2 = match alpha {
            11 => 4 * sigma0(d_prime),
            6 => 2 * sigma0(d_prime),
            _ => sigma0(d_prime),
        };
        let amax = isqrt(budget);
        let mut count = 0u64;
        let mut a = 1u64;
        while a <= amax {
            if sf[a as usize] && crate::arith::gcd(a, d_prime) == 1 {
                count += 1;
            }
            a += 2;
        }
        doubled += weight2 * count;
    };
    match restrict_subfield {
        Some(d) => {
            if d % 2 != 0 {
                for alpha in [0u8, 4, 6] {
                    add_block(alpha, d as u64);
                }
            } else {
                add_block(11, (d / 8) as u64);
            }
        }
        None => {
            let dps = admissible_d_primes(cube_root(x));
            for &dp in &dps {
                if dp > 1 {
                    for alpha in [0u8, 4, 6] {
                        add_block(alpha, dp);
                    }
                }
                add_block(11, dp);
            }
        }
    }
    debug_assert_eq!(doubled % 2, 0);
    Ok(doubled / 2)
}

fn cube_root(x: u64) -> u64 {
    let mut r = (x as f64).cbrt() as u64;
    while r.saturating_mul(r).saturating_mul(r) > x {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1).saturating_mul(r + 1) <= x {
        r += 1;
    }
    r
}

/// Certified bracket for
/// t = (24 + sqrt 2)/24 * prod_{p = 1 mod 4} (1 + 2/((p+1) sqrt p)) - 1,
/// with the primes truncated at `p_cutoff` and the dropped factors
/// bounded through sum_{n > P} 2 n^(-3/2) <= 4/sqrt(P) on the logarithm.
pub fn t_constant(p_cutoff: u64) -> Result<F64Interval> {
    if p_cutoff < 10_000 {
        return Err(Error::Invalid("prime cutoff below 10^4".into()));
    }
    let mut partial = F64Interval::one();
    for_each_prime(p_cutoff, |p| {
        if p % 4 == 1 {
            let pf = F64Interval::point(p as f64);
            let denom = F64Interval::point((p + 1) as f64).mul(&pf.sqrt());
            let factor = F64Interval::one().add(&F64Interval::point(2.0).div(&denom));
            partial = partial.mul(&factor);
        }
    });
    let tail_log = F64Interval::point(4.0).div(&F64Interval::point(p_cutoff as f64).sqrt());
    let tail_factor = F64Interval::new(1.0, tail_log.exp().hi);
    let prefactor = F64Interval::point(24.0)
        .add(&F64Interval::point(2.0).sqrt())
        .div(&F64Interval::point(24.0));
    let t = prefactor
        .mul(&partial.mul(&tail_factor))
        .sub(&F64Interval::one());
    Ok(t)
}

/// Limit of the proportion of cyclic quartic fields containing the
/// quadratic field of discriminant d: zero for d < 0 or when a prime
/// 3 mod 4 divides d; otherwise sigma0(d) / (t prod_{p|d} (p+1) sqrt p),
/// with an extra 16 in the denominator for even d.
pub fn p_k_limit(d: i64, t: &F64Interval) -> Result<F64Interval> {
    if !crate::quadforms::is_fundamental_discriminant(d) {
        return Err(Error::NotFundamental(d));
    }
    if d < 0 {
        return Ok(F64Interval::zero());
    }
    let du = d as u64;
    let facs = factorize(du);
    if facs.iter().any(|&(p, _)| p % 4 == 3) {
        return Ok(F64Interval::zero());
    }
    let mut denom = t.clone();
    if d % 2 == 0 {
        denom = denom.mul(&F64Interval::point(16.0));
    }
    for &(p, _) in &facs {
        denom = denom.mul(
            &F64Interval::point((p + 1) as f64).mul(&F64Interval::point(p as f64).sqrt()),
        );
    }
    Ok(F64Interval::point(sigma0(du) as f64).div(&denom))
}

/// Every positive fundamental discriminant up to `cap` with a nonzero
/// subfield density (no prime factor 3 mod 4).
pub fn admissible_subfield_discs(cap: i64) -> Vec<i64> {
    let cap = cap.max(0) as u64;
    let mut out: Vec<i64> = Vec::new();
    for dp in admissible_d_primes(cap) {
        if dp > 1 && dp <= cap {
            out.push(dp as i64); // odd: d = d' = 1 mod 4, squarefree
        }
        if let Some(d) = dp.checked_mul(8) {
            if d <= cap {
                out.push(d as i64); // even: d = 8 d'
            }
        }
    }
    out.sort_unstable();
    out
}

/// Certified density bracket for the limit proportion of cyclic quartic
/// fields whose quadratic subfield has class number coprime to 3.
#[derive(Debug, Clone, Serialize)]
pub struct DensityBracket {
    pub lower: f64,
    pub upper: f64,
    pub d_cutoff: i64,
    /// Certified lower bound on the subfield-density mass accounted for.
    pub mass_accounted: f64,
    pub t_lower: f64,
    pub t_upper: f64,
}

/// Sums the per-subfield limits over fundamental d <= cutoff split by the
/// 3-divisibility of the class number; everything beyond the cutoff is
/// conceded to the upper end, since the total mass over all subfields
/// is 1.
pub fn density_bracket(
    d_cutoff: i64,
    t: &F64Interval,
    table: &FormClassTable,
) -> Result<DensityBracket> {
    let mut lower = 0.0f64;
    let mut upper_sum = 0.0f64;
    let mut mass_lo = 0.0f64;
    for d in admissible_subfield_discs(d_cutoff) {
        let pk = p_k_limit(d, t)?;
        let row = table.get(d)?;
        mass_lo += pk.lo;
        if row.h_narrow % 3 != 0 {
            lower += pk.lo;
            upper_sum += pk.hi;
        }
    }
    let unaccounted = (1.0 - mass_lo).max(0.0);
    Ok(DensityBracket {
        lower,
        upper: (upper_sum + unaccounted).min(1.0),
        d_cutoff,
        mass_accounted: mass_lo,
        t_lower: t.lo,
        t_upper: t.hi,
    })
}

/// Exact proportion of fields with discriminant at most x whose quadratic
/// subfield has class number coprime to 3, as (numerator, denominator)
/// of doubled field counts.
pub fn empirical_density(x: u64, table: &FormClassTable) -> Result<(u64, u64)> {
    if x > X_CAP {
        return Err(Error::Invalid(format!("x exceeds the cap {X_CAP}")));
    }
    let a_max = isqrt(x / 125.max(1)).max(1);
    let sf = odd_squarefree_sieve(a_max);
    let mut num2 = 0u64;
    let mut den2 = 0u64;
    let dps = admissible_d_primes(cube_root(x));
    for &dp in &dps {
        let alphas: &[u8] = if dp > 1 { &[0, 4, 6, 11] } else { &[11] };
        for &alpha in alphas {
            let pow2 = 1u64 << alpha;
            let d3 = match dp.checked_pow(3) {
                Some(v) => v,
                None => continue,
            };
            let budget = match pow2.checked_mul(d3) {
                Some(v) if v <= x => x / v,
                _ => continue,
            };
            let weight2 = match alpha {
                11 => 4 * sigma0(dp),
                6 => 2 * sigma0(dp),
                _ => sigma0(dp),
            };
            let amax = isqrt(budget);
            let mut count = 0u64;
            let mut a = 1u64;
            while a <= amax {
                if sf[a as usize] && crate::arith::gcd(a, dp) == 1 {
                    count += 1;
                }
                a += 2;
            }
            if count == 0 {
                continue;
            }
            let d_sub = if alpha == 11 { 8 * dp as i64 } else { dp as i64 };
            let row = table.get(d_sub)?;
            den2 += weight2 * count;
            if row.h_narrow % 3 != 0 {
                num2 += weight2 * count;
            }
        }
    }
    Ok((num2, den2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_of_disc_examples() {
        assert_eq!(h_of_disc(125).unwrap(), 1);
        assert_eq!(h_of_disc(2048 * 125).unwrap(), 4);
        assert_eq!(h_of_disc(64 * 125).unwrap(), 2);
        assert!(h_of_disc(100).is_err());
        assert!(h_of_disc(8).is_err());
        // alpha = 11 with trivial d' is the field pair over Q(sqrt 2)
        assert_eq!(h_of_disc(2048).unwrap(), 2);
    }

    #[test]
    fn count_fields_small() {
        assert_eq!(count_fields(124, None).unwrap(), 0);
        assert_eq!(count_fields(125, None).unwrap(), 1);
        // monotone and matching a direct scan by h_of_disc
        let mut direct = 0u64;
        let mut prev = 0u64;
        for n in 1..=200_000u64 {
            if let Ok(h) = h_of_disc(n) {
                direct += h;
            }
            if n % 50_000 == 0 {
                let c = count_fields(n, None).unwrap();
                assert_eq!(c, direct, "x = {n}");
                assert!(c >= prev);
                prev = c;
            }
        }
    }

    #[test]
    fn parse_disc_injective() {
        // distinct admissible triples give distinct integers
        let mut seen = std::collections::BTreeSet::new();
        for n in 1..=1_000_000u64 {
            if let Ok(q) = parse_disc(n) {
                assert_eq!(q.value(), Some(n));
                assert!(seen.insert((q.alpha, q.d_prime, q.a)));
            }
        }
    }

    #[test]
    fn count_with_subfield() {
        // negative or 3-mod-4-divisible subfields never occur
        assert_eq!(count_fields(1 << 39, Some(-4)).unwrap(), 0);
        assert_eq!(count_fields(1 << 39, Some(12)).unwrap(), 0);
        assert_eq!(count_fields(1 << 39, Some(21)).unwrap(), 0);
        // the least field over Q(sqrt 5)
        assert_eq!(count_fields(125, Some(5)).unwrap(), 1);
        assert_eq!(count_fields(124, Some(5)).unwrap(), 0);
        // subfield counts sum to the total
        let x = 10_000_000u64;
        let mut total = 0u64;
        for d in admissible_subfield_discs(cube_root(x) as i64 * 8) {
            total += count_fields(x, Some(d)).unwrap();
        }
        assert_eq!(total, count_fields(x, None).unwrap());
    }

    #[test]
    fn t_constant_brackets_nest() {
        let a = t_constant(10_000).unwrap();
        let b = t_constant(100_000).unwrap();
        let c = t_constant(1_000_000).unwrap();
        assert!(a.lo <= b.lo && b.lo <= c.lo);
        assert!(c.hi <= b.hi && b.hi <= a.hi);
        assert!(b.width() < a.width());
        // rough location
        assert!(a.lo > 0.3 && a.hi < 0.6, "{a:?}");
    }

    #[test]
    fn p_k_limit_examples() {
        let t = t_constant(1_000_000).unwrap();
        // d = 5: 2 / (6 sqrt5 t)
        let p5 = p_k_limit(5, &t).unwrap();
        let expect = 2.0 / (6.0 * 5.0f64.sqrt() * t.midpoint());
        assert!((p5.midpoint() - expect).abs() < 1e-3);
        // d = 12 has the prime 3
        assert_eq!(p_k_limit(12, &t).unwrap(), F64Interval::zero());
        // d = 8: 4 / (16 t * 3 sqrt2)
        let p8 = p_k_limit(8, &t).unwrap();
        let expect8 = 4.0 / (16.0 * t.midpoint() * 3.0 * 2.0f64.sqrt());
        assert!((p8.midpoint() - expect8).abs() < 1e-3);
        assert!(p_k_limit(10, &t).is_err()); // 10 is not fundamental
        assert_eq!(p_k_limit(-4, &t).unwrap(), F64Interval::zero());
    }

    #[test]
    fn subfield_ratio_approaches_limit() {
        // #C_k(x)/#C(x) near the predicted limit already at x = 10^8
        let t = t_constant(1_000_000).unwrap();
        let x = 100_000_000u64;
        let total = count_fields(x, None).unwrap();
        for d in [5i64, 8, 13] {
            let k = count_fields(x, Some(d)).unwrap();
            let ratio = k as f64 / total as f64;
            let lim = p_k_limit(d, &t).unwrap().midpoint();
            assert!((ratio - lim).abs() < 0.03, "d = {d}: {ratio} vs {lim}");
        }
    }

    #[test]
    fn density_pipeline_small() {
        let t = t_constant(100_000).unwrap();
        let cutoff = 3_000i64;
        let mut table = FormClassTable::new();
        let discs = admissible_subfield_discs(cutoff);
        for d in &discs {
            table.insert(crate::quadforms::ClassRow::compute(*d).unwrap()).unwrap();
        }
        let bracket = density_bracket(cutoff, &t, &table).unwrap();
        assert!(bracket.lower <= bracket.upper);
        assert!(bracket.lower > 0.9, "lower = {}", bracket.lower);
        assert!(bracket.upper <= 1.0);
        assert!(bracket.lower <= 0.9914 && 0.9914 <= bracket.upper);
        // empirical density at modest x sits inside a slightly widened bracket
        let (num2, den2) = empirical_density(1_000_000, &table).unwrap();
        let emp = num2 as f64 / den2 as f64;
        assert!(emp >= bracket.lower - 0.05 && emp <= 1.0, "emp = {emp}");
    }

    #[test]
    fn empirical_density_least_field() {
        let mut table = FormClassTable::new();
        table
            .insert(crate::quadforms::ClassRow::compute(5).unwrap())
            .unwrap();
        let (num2, den2) = empirical_density(125, &table).unwrap();
        // doubled counts: one field over Q(sqrt 5), class number 1
        assert_eq!((num2, den2), (2, 2));
    }

    #[test]
    fn table_gap_detected() {
        let t = t_constant(10_000).unwrap();
        let table = FormClassTable::new();
        assert!(density_bracket(100, &t, &table).is_err());
    }
}
