//! The probability measure on finite module shapes that weights a module
//! M inversely to #Hom(P, M) * #Aut M, with exact normalizer brackets,
//! unbiased seeded sampling, certified expectation brackets, surjection
//! moments, and the order-dependence demo for truncated averages.


use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::abelian::{GroupComponent, IdealId};
use crate::arith::q_pow;
use crate::error::{Error, Result};
use crate::interval::RatInterval;
use crate::modules::{
    aut_count, partitions_of, sur_onto_count, LocalPart, ModuleShape, Partition, RankVector,
    TorsionShape,
};

/// Default tolerance for normalizer certification: 2^-128.
fn default_tol() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(BigUint::one() << 128))
}

/// Certified bracket for the local normalizer
/// sum_lambda q^(-u |lambda|) / #Aut(lambda) = prod_{k>u} (1 - q^-k)^-1.
///
/// The partial product is exact; the dropped factors are bounded by
/// prod_{k>K} (1-q^-k)^-1 <= (1 - sum_{k>K} q^-k)^-1, which keeps the
/// bracket rational.
pub fn local_normalizer(q: u64, u: u32, tol: &BigRational) -> Result<RatInterval> {
    if q < 2 {
        return Err(Error::BadPrimePower(q));
    }
    if !tol.is_positive() {
        return Err(Error::Invalid("tolerance must be positive".into()));
    }
    let one = BigRational::one();
    let mut partial = BigRational::one();
    let mut k = u as i64;
    loop {
        k += 1;
        partial /= &one - q_pow(q, -k);
        // tail: sum_{j>k} q^-j = q^-k / (q-1)
        let tail_sum = q_pow(q, -k) / BigRational::from_integer(BigInt::from(q - 1));
        if tail_sum < one {
            let upper = &partial / (&one - &tail_sum);
            if &upper - &partial < *tol {
                return Ok(RatInterval::new(partial, upper));
            }
        }
        if k - (u as i64) > 100_000 {
            return Err(Error::Invalid("normalizer did not certify".into()));
        }
    }
}

/// Exact total mass sum_{lambda |- n} 1/#Aut(lambda) of one size block:
/// q^-n / prod_{j=1}^n (1 - q^-j). Cross-checked against enumeration by
/// `block_mass_enumerated`.
pub fn block_mass_exact(q: u64, n: u64) -> BigRational {
    let mut denom = BigRational::one();
    let one = BigRational::one();
    for j in 1..=n as i64 {
        denom *= &one - q_pow(q, -j);
    }
    q_pow(q, -(n as i64)) / denom
}

/// The same block mass by direct partition enumeration (the independent
/// route; exponential in n, use small n).
pub fn block_mass_enumerated(q: u64, n: u64) -> Result<BigRational> {
    let mut acc = BigRational::zero();
    for lambda in partitions_of(n as u32) {
        let aut = aut_count(&lambda, q)?;
        acc += BigRational::new(BigInt::one(), BigInt::from(aut));
    }
    Ok(acc)
}

/// Rational lower bound for c_q = prod_{j>=1} (1 - q^-j): the first three
/// factors exactly, times 1 - sum_{j>=4} q^-j.
fn cq_lower(q: u64) -> BigRational {
    let one = BigRational::one();
    let mut c = BigRational::one();
    for j in 1..=3i64 {
        c *= &one - q_pow(q, -j);
    }
    let tail = q_pow(q, -3) / BigRational::from_integer(BigInt::from(q - 1));
    c * (&one - tail)
}

/// Table of partition counts into exactly r parts, p[n][r], n <= n_max.
fn partitions_into_parts(n_max: usize) -> Result<Vec<Vec<u128>>> {
    let mut p = vec![vec![0u128; n_max + 1]; n_max + 1];
    p[0][0] = 1;
    for n in 1..=n_max {
        for r in 1..=n {
            let a = p[n - 1][r - 1];
            let b = if n >= r { p[n - r][r] } else { 0 };
            p[n][r] = a
                .checked_add(b)
                .ok_or_else(|| Error::SizeCap("partition table overflow".into()))?;
        }
    }
    Ok(p)
}

/// Certified upper bound for
/// sum_{n > from_n} sum_{lambda |- n} q^(a r(lambda) - u n) / #Aut(lambda).
///
/// Uses #Aut(lambda) >= q^max(n, r^2) * c_q^(number of distinct parts),
/// the partition table for n up to an analytic threshold, and a geometric
/// remainder beyond it (valid once (a+7) sqrt(n) <= (u+1) n / 2, with the
/// partition-count bound p(n) < e^(pi sqrt(2n/3)) folded into the 7).
pub fn mass_tail_bound(q: u64, u: u32, from_n: u64, a: u64) -> Result<BigRational> {
    let u1 = u as u64 + 1;
    let needed = (2 * (a + 7)).pow(2).div_ceil(u1 * u1);
    let n_max = needed.max(from_n + 8).max(16);
    if n_max > 800 {
        return Err(Error::SizeCap(format!(
            "tail bound needs partition table to n = {n_max}; target weight too large for rank {u}"
        )));
    }
    let table = partitions_into_parts(n_max as usize)?;
    let c_lo = cq_lower(q);
    let inv_c = c_lo.recip();
    let mut total = BigRational::zero();
    for n in (from_n + 1)..=n_max {
        let dmax = crate::arith::isqrt(2 * n) + 1; // distinct parts <= sqrt(2n)+1
        for r in 1..=n {
            let cnt = table[n as usize][r as usize];
            if cnt == 0 {
                continue;
            }
            let aut_exp = n.max(r * r) as i64;
            let exp = a as i64 * r as i64 - (u as i64) * n as i64 - aut_exp;
            let penalty_pow = r.min(dmax) as u32;
            let term = BigRational::from_integer(BigInt::from(cnt))
                * q_pow(q, exp)
                * pow_rat(&inv_c, penalty_pow);
            total += term;
        }
    }
    // geometric remainder: each t_n <= q^(-(u+1) n / 2) for n > n_max
    let rem_exp = (u1 * (n_max + 1) / 2) as i64;
    let remainder = BigRational::from_integer(BigInt::from(4)) * q_pow(q, -rem_exp);
    Ok(total + remainder)
}

fn pow_rat(x: &BigRational, e: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

/// The local normalizer by direct partition-sum truncation: an
/// enumeration bracket independent of the closed-form product.
pub fn partition_sum_normalizer(q: u64, u: u32, n_trunc: u64) -> Result<RatInterval> {
    if q < 2 {
        return Err(Error::BadPrimePower(q));
    }
    let mut partial = BigRational::zero();
    for n in 0..=n_trunc {
        partial += q_pow(q, -((u as u64 * n) as i64)) * block_mass_enumerated(q, n)?;
    }
    let tail = mass_tail_bound(q, u, n_trunc, 0)?;
    let hi = &partial + tail;
    Ok(RatInterval::new(partial, hi))
}

/// Per-ideal measure data: residue norm, rank, certified normalizer and
/// the cumulative block masses used by the sampler.
#[derive(Debug, Clone)]
pub struct LocalMeasure {
    pub ideal: IdealId,
    pub q: u64,
    pub u: u32,
    pub normalizer: RatInterval,
    /// cum[k] = sum_{n<=k} q^(-u n) c_n(q), exact.
    block_cum: Vec<BigRational>,
}

impl LocalMeasure {
    fn new(ideal: IdealId, q: u64, u: u32) -> Result<LocalMeasure> {
        let normalizer = local_normalizer(q, u, &default_tol())?;
        let mut lm = LocalMeasure {
            ideal,
            q,
            u,
            normalizer,
            block_cum: Vec::new(),
        };
        // depth with residual below 2^-60 of the normalizer
        let mut cum = BigRational::zero();
        let mut n = 0u64;
        loop {
            cum += q_pow(q, -((u as u64 * n) as i64)) * block_mass_exact(q, n);
            lm.block_cum.push(cum.clone());
            let resid = &lm.normalizer.hi - &cum;
            let threshold = &lm.normalizer.lo
                * BigRational::new(BigInt::one(), BigInt::from(BigUint::one() << 60));
            if resid < threshold {
                break;
            }
            n += 1;
            if n > 4096 {
                return Err(Error::Invalid("block table did not certify".into()));
            }
        }
        Ok(lm)
    }

    /// Unnormalized mass of a local partition.
    pub fn mass(&self, lambda: &Partition) -> Result<BigRational> {
        let aut = aut_count(lambda, self.q)?;
        Ok(q_pow(self.q, -((self.u as u64 * lambda.size()) as i64))
            / BigRational::from_integer(BigInt::from(aut)))
    }

    /// Certified residual mass not covered by the block table.
    pub fn residual(&self) -> BigRational {
        let covered = self.block_cum.last().cloned().unwrap_or_default();
        let r = &self.normalizer.hi - covered;
        if r.is_negative() {
            BigRational::zero()
        } else {
            r
        }
    }
}

/// The measure on module shapes over a chosen set of components and
/// primes, with rank vector `ranks` for the projective part.
#[derive(Debug, Clone)]
pub struct ClmMeasure {
    pub ranks: RankVector,
    pub locals: Vec<LocalMeasure>,
    pub s_primes: Vec<u64>,
}

impl ClmMeasure {
    /// Builds the measure over all maximal ideals of the given components
    /// above the primes of `s`. The prime set is finite by construction;
    /// primes dividing the group order are rejected.
    pub fn new(components: &[GroupComponent], s: &[u64], ranks: RankVector) -> Result<ClmMeasure> {
        let mut s: Vec<u64> = s.to_vec();
        s.sort_unstable();
        s.dedup();
        if s.is_empty() {
            return Err(Error::Invalid("prime set S must be non-empty".into()));
        }
        let mut locals = Vec::new();
        for comp in components {
            let u = ranks.get(&comp.id).copied().unwrap_or(0);
            for ideal in comp.maximal_ideals(&s)? {
                let q = ideal.norm().ok_or_else(|| {
                    Error::Invalid(format!(
                        "ideal norm {}^{} exceeds u64; shrink S",
                        ideal.id.p, ideal.f
                    ))
                })?;
                locals.push(LocalMeasure::new(ideal.id, q, u)?);
            }
        }
        locals.sort_by_key(|l| l.ideal);
        Ok(ClmMeasure {
            ranks,
            locals,
            s_primes: s,
        })
    }

    /// A synthetic one-ideal measure with residue norm `q` and rank `u`.
    pub fn single_ideal(q: u64, u: u32) -> Result<ClmMeasure> {
        let id = IdealId {
            component: 0,
            p: q,
            index: 0,
        };
        let mut ranks = RankVector::new();
        ranks.insert(0, u);
        Ok(ClmMeasure {
            ranks,
            locals: vec![LocalMeasure::new(id, q, u)?],
            s_primes: vec![q],
        })
    }

    /// Product of the certified local normalizers.
    pub fn normalizer(&self) -> RatInterval {
        let mut z = RatInterval::one();
        for l in &self.locals {
            z = z.mul(&l.normalizer);
        }
        z
    }

    /// Certified total deficiency of the sampling tables: the residual
    /// probability mass beyond the per-ideal block tables.
    pub fn deficiency(&self) -> BigRational {
        // 1 - prod (covered_i / Z_i) <= sum resid_i / Z_i,lo
        let mut total = BigRational::zero();
        for l in &self.locals {
            total += l.residual() / &l.normalizer.lo;
        }
        total
    }

    fn local_for(&self, id: &IdealId) -> Option<&LocalMeasure> {
        self.locals.iter().find(|l| &l.ideal == id)
    }

    /// Unnormalized mass and certified probability of a shape.
    ///
    /// The mass is the product over ideals of q^(-u |lambda|) / #Aut;
    /// the probability divides by the certified normalizer product.
    pub fn shape_mass(&self, shape: &ModuleShape) -> Result<(BigRational, RatInterval)> {
        for id in shape.torsion.keys() {
            if self.local_for(id).is_none() {
                return Err(Error::IncompatibleShape(format!(
                    "ideal c{}.p{}.{} is not in the measure",
                    id.component, id.p, id.index
                )));
            }
        }
        let mut mass = BigRational::one();
        for l in &self.locals {
            if let Some(local) = shape.torsion.get(&l.ideal) {
                if local.norm != l.q {
                    return Err(Error::IncompatibleShape(format!(
                        "norm mismatch at c{}.p{}.{}",
                        l.ideal.component, l.ideal.p, l.ideal.index
                    )));
                }
                mass *= l.mass(&local.parts)?;
            }
        }
        let prob = RatInterval::point(mass.clone()).div(&self.normalizer());
        Ok((mass, prob))
    }

    /// A shape with the measure's rank vector and the given torsion.
    pub fn shape(&self, torsion: TorsionShape) -> ModuleShape {
        ModuleShape {
            ranks: self.ranks.clone(),
            torsion,
        }
    }

    /// Deterministic sampler for the given seed; `task` selects an
    /// independent stream so parallel draws stay reproducible.
    pub fn sampler(&self, seed: u64, task: u64) -> ShapeSampler<'_> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(task);
        ShapeSampler { measure: self, rng }
    }

    /// First draw of the stream for `seed`.
    pub fn sample_shape(&self, seed: u64) -> Result<ModuleShape> {
        self.sampler(seed, 0).sample()
    }

    /// Enumerates all torsion shapes of order at most `cap`, with exact
    /// unnormalized masses.
    pub fn enumerate_shapes(&self, cap: u128) -> Result<Vec<(TorsionShape, BigRational)>> {
        let mut out = Vec::new();
        let mut cur = TorsionShape::new();
        self.enum_rec(0, cap, &mut cur, &BigRational::one(), &mut out)?;
        Ok(out)
    }

    fn enum_rec(
        &self,
        i: usize,
        budget: u128,
        cur: &mut TorsionShape,
        mass: &BigRational,
        out: &mut Vec<(TorsionShape, BigRational)>,
    ) -> Result<()> {
        if i == self.locals.len() {
            out.push((cur.clone(), mass.clone()));
            return Ok(());
        }
        let l = &self.locals[i];
        let mut n = 0u32;
        loop {
            let order = (l.q as u128).checked_pow(n);
            match order {
                Some(o) if o <= budget => {}
                _ => break,
            }
            let order = order.unwrap();
            for lambda in partitions_of(n) {
                let m = mass * l.mass(&lambda)?;
                if !lambda.is_empty() {
                    cur.insert(
                        l.ideal,
                        LocalPart {
                            norm: l.q,
                            parts: lambda,
                        },
                    );
                } else {
                    cur.remove(&l.ideal);
                }
                self.enum_rec(i + 1, budget / order, cur, &m, out)?;
            }
            cur.remove(&l.ideal);
            n += 1;
        }
        cur.remove(&l.ideal);
        Ok(())
    }
}

/// Bound certificate accompanying an integrand.
#[derive(Debug, Clone)]
pub enum BoundCertificate {
    /// |f| <= bound everywhere.
    Bounded { bound: BigRational },
    /// 0 <= f <= bound everywhere; gives a one-sided tail.
    NonNegativeBounded { bound: BigRational },
    /// No certificate: expectation brackets are refused.
    None,
}

/// Certified expectation bracket.
#[derive(Debug, Clone)]
pub struct ExpectationBracket {
    pub lower: BigRational,
    pub upper: BigRational,
    pub truncation: u128,
}

impl ExpectationBracket {
    pub fn contains(&self, x: &BigRational) -> bool {
        self.lower <= *x && *x <= self.upper
    }

    pub fn to_interval(&self) -> RatInterval {
        RatInterval::new(self.lower.clone(), self.upper.clone())
    }
}

/// Expectation of `f` over the measure, bracketed by truncated enumeration
/// over shapes of torsion order <= `cap` plus a certified tail from the
/// bound certificate.
pub fn expectation_bracket(
    measure: &ClmMeasure,
    f: &dyn Fn(&ModuleShape) -> BigRational,
    cert: &BoundCertificate,
    cap: u128,
) -> Result<ExpectationBracket> {
    let bound = match cert {
        BoundCertificate::Bounded { bound } | BoundCertificate::NonNegativeBounded { bound } => {
            bound.clone()
        }
        BoundCertificate::None => return Err(Error::NoBoundCertificate),
    };
    let z = measure.normalizer();
    let mut sum_fm = BigRational::zero();
    let mut sum_m = BigRational::zero();
    for (torsion, mass) in measure.enumerate_shapes(cap)? {
        let shape = measure.shape(torsion);
        sum_fm += f(&shape) * &mass;
        sum_m += mass;
    }
    let main = RatInterval::point(sum_fm).div(&z);
    // residual probability mass: 1 - sum_m / Z, clamped to [0, 1]
    let covered = RatInterval::point(sum_m).div(&z);
    let zero = BigRational::zero();
    let one = BigRational::one();
    let resid_hi = {
        let r = &one - &covered.lo;
        if r.is_negative() {
            zero.clone()
        } else {
            r
        }
    };
    let (lower, upper) = match cert {
        BoundCertificate::Bounded { .. } => (
            &main.lo - &bound * &resid_hi,
            &main.hi + &bound * &resid_hi,
        ),
        BoundCertificate::NonNegativeBounded { .. } => {
            (main.lo.clone(), &main.hi + &bound * &resid_hi)
        }
        BoundCertificate::None => unreachable!(),
    };
    Ok(ExpectationBracket {
        lower,
        upper,
        truncation: cap,
    })
}

/// Bracket for E[#Sur(X, A)] with A a fixed torsion shape; the bracket
/// must contain 1/#Hom(P_V, A) = |A|^(-u). The per-ideal factor is a
/// truncated series plus the certified mass tail with surjection weight
/// #Sur(M, A_m) <= q^(|A_m| r(M)).
pub fn surjection_moment_check(
    measure: &ClmMeasure,
    a: &TorsionShape,
    depth: u32,
) -> Result<(RatInterval, BigRational)> {
    let mut bracket = RatInterval::one();
    let mut target = BigRational::one();
    for (id, local) in a {
        let lm = measure
            .local_for(id)
            .ok_or_else(|| Error::IncompatibleShape("A not supported on the measure".into()))?;
        if lm.q != local.norm {
            return Err(Error::IncompatibleShape("norm mismatch".into()));
        }
        if local.parts.is_empty() {
            continue;
        }
        let a_size = local.parts.size();
        let mut s = BigRational::zero();
        for n in 0..=depth {
            for lambda in partitions_of(n) {
                let sur = sur_onto_count(&lambda, &local.parts, lm.q)?;
                s += lm.mass(&lambda)? * BigRational::from_integer(BigInt::from(sur));
            }
        }
        let tail = mass_tail_bound(lm.q, lm.u, depth as u64, a_size)?;
        let local_bracket =
            RatInterval::new(s.clone(), &s + tail).div(&lm.normalizer);
        bracket = bracket.mul(&local_bracket);
        target *= q_pow(lm.q, -((lm.u as u64 * a_size) as i64));
    }
    Ok((bracket, target))
}

/// Lazily refined uniform draw in [0, 1): an interval [num, num+1)/2^bits
/// that gains bits from the stream on demand.
struct LazyUniform {
    num: BigUint,
    bits: u32,
}

impl LazyUniform {
    fn new() -> LazyUniform {
        LazyUniform {
            num: BigUint::zero(),
            bits: 0,
        }
    }

    fn refine(&mut self, rng: &mut ChaCha20Rng) {
        let word: u32 = rng.gen();
        self.num = (&self.num << 32) | BigUint::from(word);
        self.bits += 32;
    }

    /// Decides U * z < t when the enclosures separate; None if undecided.
    fn lt(&self, z: &RatInterval, t: &BigRational) -> Option<bool> {
        let scale = BigInt::from(BigUint::one() << self.bits);
        let t_scaled = t * BigRational::from_integer(scale);
        let u_hi = BigRational::from_integer(BigInt::from(&self.num + BigUint::one()));
        let u_lo = BigRational::from_integer(BigInt::from(self.num.clone()));
        if u_hi * &z.hi <= t_scaled {
            Some(true)
        } else if u_lo * &z.lo >= t_scaled {
            Some(false)
        } else {
            None
        }
    }
}

/// Deterministic unbiased sampler of torsion shapes.
pub struct ShapeSampler<'a> {
    measure: &'a ClmMeasure,
    rng: ChaCha20Rng,
}

impl ShapeSampler<'_> {
    pub fn sample(&mut self) -> Result<ModuleShape> {
        let measure = self.measure;
        let mut torsion = TorsionShape::new();
        for l in &measure.locals {
            let lambda = sample_local(l, &mut self.rng)?;
            if !lambda.is_empty() {
                torsion.insert(
                    l.ideal,
                    LocalPart {
                        norm: l.q,
                        parts: lambda,
                    },
                );
            }
        }
        Ok(ModuleShape {
            ranks: measure.ranks.clone(),
            torsion,
        })
    }
}

/// Inverse-CDF draw over partitions in non-decreasing size order. A draw
/// landing beyond the precomputed block table extends the enumeration and
/// continues with the same random stream, so the draw stays unbiased.
fn sample_local(l: &LocalMeasure, rng: &mut ChaCha20Rng) -> Result<Partition> {
    let mut z = l.normalizer.clone();
    let mut u = LazyUniform::new();
    u.refine(rng);
    let table_len = l.block_cum.len();
    let mut ext: Vec<BigRational> = Vec::new();
    let mut n = 0usize;
    loop {
        if n >= table_len && n - table_len >= ext.len() {
            // overflow path: extend the block enumeration
            let prev = if n == 0 {
                BigRational::zero()
            } else if n - 1 < table_len {
                l.block_cum[n - 1].clone()
            } else {
                ext[n - 1 - table_len].clone()
            };
            ext.push(
                prev + q_pow(l.q, -((l.u as u64 * n as u64) as i64))
                    * block_mass_exact(l.q, n as u64),
            );
        }
        let cum_n = if n < table_len {
            &l.block_cum[n]
        } else {
            &ext[n - table_len]
        };
        match u.lt(&z, cum_n) {
            Some(true) => break,
            Some(false) => {
                n += 1;
                if n > 1 << 20 {
                    return Err(Error::Invalid("sampler runaway".into()));
                }
            }
            None => {
                if u.bits > 512 {
                    // sharpen the normalizer instead of drawing forever
                    let tol = BigRational::new(
                        BigInt::one(),
                        BigInt::from(BigUint::one() << (u.bits + 64)),
                    );
                    z = local_normalizer(l.q, l.u, &tol)?;
                }
                u.refine(rng);
            }
        }
    }
    if n == 0 {
        return Ok(Partition::empty());
    }
    // within the block, refine the same draw against partition masses
    let mut cum = if n - 1 < table_len {
        l.block_cum[n - 1].clone()
    } else {
        ext[n - 1 - table_len].clone()
    };
    let parts = partitions_of(n as u32);
    let last = parts.len() - 1;
    for (j, lambda) in parts.iter().enumerate() {
        if j == last {
            return Ok(lambda.clone());
        }
        cum += l.mass(lambda)?;
        loop {
            match u.lt(&z, &cum) {
                Some(true) => return Ok(lambda.clone()),
                Some(false) => break,
                None => {
                    if u.bits > 512 {
                        let tol = BigRational::new(
                            BigInt::one(),
                            BigInt::from(BigUint::one() << (u.bits + 64)),
                        );
                        z = local_normalizer(l.q, l.u, &tol)?;
                    }
                    u.refine(rng);
                }
            }
        }
    }
    unreachable!("partition block exhausted");
}

/// Result of the truncation-order demo: the same truncated average under
/// the two orders of sending the cutoffs to infinity.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TruncationDemo {
    pub b1: u64,
    pub b2: u64,
    pub ratio_given_order: f64,
    pub ratio_swapped: f64,
}

/// Demonstrates the order dependence of the truncated average of
/// f = [ #(T x M) > #(T' x M) ] over a rank-zero product of two
/// degree-one components, with all primes up to max(B1, B2) in play.
///
/// Qualitative output: plain f64 sums, no certification.
pub fn truncation_shape_demo(b1: u64, b2: u64) -> TruncationDemo {
    let bmax = b1.max(b2).max(2) as usize;
    // c(n) = sum over abelian groups of order n of 1/#Aut, multiplicative
    let spf = crate::arith::spf_table(bmax);
    let mut c = vec![0f64; bmax + 1];
    c[1] = 1.0;
    for n in 2..=bmax {
        let p = spf[n] as u64;
        let mut m = n as u64;
        let mut k = 0u64;
        while m % p == 0 {
            m /= p;
            k += 1;
        }
        let cofactor = c[m as usize];
        c[n] = cofactor * local_block_sum_f64(p, k);
    }
    let ratio = |bx: u64, by: u64| -> f64 {
        // prefix sums of c up to each cutoff
        let bx = bx as usize;
        let by = by as usize;
        let mut prefix = vec![0f64; bmax + 1];
        for n in 1..=bmax {
            prefix[n] = prefix[n - 1] + c[n];
        }
        let total = prefix[bx] * prefix[by];
        // numerator: sum over n2 <= by of c(n2) * (C(bx) - C(min(n2, bx)))
        let mut num = 0f64;
        for n2 in 1..=by {
            let cut = n2.min(bx);
            num += c[n2] * (prefix[bx] - prefix[cut]);
        }
        num / total
    };
    TruncationDemo {
        b1,
        b2,
        ratio_given_order: ratio(b1, b2),
        ratio_swapped: ratio(b2, b1),
    }
}

/// f64 value of sum_{lambda |- k} 1/#Aut_p(lambda) via the closed block
/// form; good enough for the qualitative demo.
fn local_block_sum_f64(p: u64, k: u64) -> f64 {
    let mut denom = 1.0;
    let pf = p as f64;
    for j in 1..=k {
        denom *= 1.0 - pf.powi(-(j as i32));
    }
    pf.powi(-(k as i64 as i32)) / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::big_rat;
    use num_traits::ToPrimitive;

    #[test]
    fn normalizer_q2_u0_value() {
        let z = local_normalizer(2, 0, &big_rat(1, 1_000_000)).unwrap();
        let lo = z.lo.to_f64().unwrap();
        let hi = z.hi.to_f64().unwrap();
        assert!(lo >= 3.46 && hi <= 3.47, "got [{lo}, {hi}]");
    }

    #[test]
    fn normalizer_monotone_in_u() {
        let tol = big_rat(1, 1_000_000_000);
        let mut prev = local_normalizer(2, 0, &tol).unwrap().lo;
        for u in 1..40u32 {
            let z = local_normalizer(2, u, &tol).unwrap();
            assert!(z.hi <= prev, "u={u}");
            prev = z.lo.clone();
        }
        // u large: normalizer approaches 1
        let z = local_normalizer(2, 60, &tol).unwrap();
        assert!(z.hi.to_f64().unwrap() < 1.0 + 1e-9);
        assert!(z.lo >= BigRational::one());
    }

    #[test]
    fn block_mass_closed_form_matches_enumeration() {
        for q in [2u64, 3, 5] {
            for n in 0..=12u64 {
                assert_eq!(
                    block_mass_exact(q, n),
                    block_mass_enumerated(q, n).unwrap(),
                    "q={q} n={n}"
                );
            }
        }
    }

    #[test]
    fn closed_form_vs_partition_sum_brackets_overlap() {
        // ten (q, u) pairs; the two independent routes must agree within
        // their certified tails
        let pairs = [
            (2u64, 0u32),
            (2, 1),
            (2, 2),
            (3, 0),
            (3, 1),
            (3, 2),
            (4, 1),
            (5, 0),
            (5, 2),
            (9, 1),
        ];
        for (q, u) in pairs {
            let a = local_normalizer(q, u, &big_rat(1, 1_000_000_000)).unwrap();
            let b = partition_sum_normalizer(q, u, 12).unwrap();
            assert!(a.overlaps(&b), "q={q} u={u}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn partition_sum_direct_example_q3_u1() {
        let a = local_normalizer(3, 1, &big_rat(1, 1_000_000_000)).unwrap();
        let b = partition_sum_normalizer(3, 1, 12).unwrap();
        assert!(a.overlaps(&b));
        // the truncation is tight: the direct sum is within its own tail
        assert!((b.width()).to_f64().unwrap() < 1e-5);
    }

    fn single(q: u64, u: u32) -> ClmMeasure {
        ClmMeasure::single_ideal(q, u).unwrap()
    }

    #[test]
    fn shape_mass_ratio_zero_vs_type1() {
        // mass(0)/mass(type (1)) = q^u (q - 1)
        for (q, u) in [(2u64, 1u32), (3, 2), (5, 0)] {
            let m = single(q, u);
            let id = m.locals[0].ideal;
            let zero = m.shape(TorsionShape::new());
            let one = m.shape(
                [(
                    id,
                    LocalPart {
                        norm: q,
                        parts: Partition::new(vec![1]).unwrap(),
                    },
                )]
                .into_iter()
                .collect(),
            );
            let (m0, _) = m.shape_mass(&zero).unwrap();
            let (m1, _) = m.shape_mass(&one).unwrap();
            let expected =
                q_pow(q, u as i64) * BigRational::from_integer(BigInt::from(q - 1));
            assert_eq!(m0 / m1, expected);
        }
    }

    #[test]
    fn zero_shape_has_maximal_mass() {
        let m = single(3, 1);
        let (mass, prob) = m.shape_mass(&m.shape(TorsionShape::new())).unwrap();
        assert_eq!(mass, BigRational::one());
        // probability = 1/Z
        let z = m.normalizer();
        assert!(prob.contains(&z.midpoint().recip()) || prob.overlaps(&z.recip()));
    }

    #[test]
    fn deficiency_small() {
        for (q, u) in [(2u64, 0u32), (2, 1), (3, 0), (3, 2)] {
            let m = single(q, u);
            let d = m.deficiency();
            let cap = BigRational::new(BigInt::one(), BigInt::from(BigUint::one() << 50));
            assert!(d < cap, "q={q} u={u}: deficiency {}", d.to_f64().unwrap());
        }
    }

    #[test]
    fn probability_ratio_matches_ia_index() {
        // P(L)/P(M) = ia(L0, L0 + E) for M = P + (L0 + E), on random pairs
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(11);
        let m = single(3, 1);
        let id = m.locals[0].ideal;
        for _ in 0..50 {
            let n1 = rng.gen_range(0..5u32);
            let parts1 = partitions_of(n1);
            let l0 = parts1[rng.gen_range(0..parts1.len())].clone();
            let n2 = rng.gen_range(0..4u32);
            let parts2 = partitions_of(n2);
            let e = parts2[rng.gen_range(0..parts2.len())].clone();
            let m0 = l0.direct_sum(&e);
            let mk = |lam: &Partition| -> TorsionShape {
                if lam.is_empty() {
                    TorsionShape::new()
                } else {
                    [(
                        id,
                        LocalPart {
                            norm: 3,
                            parts: lam.clone(),
                        },
                    )]
                    .into_iter()
                    .collect()
                }
            };
            let (mass_l, _) = m.shape_mass(&m.shape(mk(&l0))).unwrap();
            let (mass_m, _) = m.shape_mass(&m.shape(mk(&m0))).unwrap();
            let ia = crate::modules::ia_index(&mk(&l0), &mk(&m0), &m.ranks).unwrap();
            assert_eq!(mass_l / mass_m, ia);
        }
    }

    #[test]
    fn expectation_of_one_is_one() {
        let m = single(3, 1);
        let b = expectation_bracket(
            &m,
            &|_| BigRational::one(),
            &BoundCertificate::Bounded {
                bound: BigRational::one(),
            },
            3u128.pow(9),
        )
        .unwrap();
        assert!(b.contains(&BigRational::one()));
        assert!((b.upper - b.lower).to_f64().unwrap() < 1e-3);
    }

    #[test]
    fn expectation_zero_torsion_indicator() {
        // f = [torsion = 0] has expectation 1/Z
        let m = single(2, 0);
        let b = expectation_bracket(
            &m,
            &|s| {
                if s.is_zero_torsion() {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            },
            &BoundCertificate::NonNegativeBounded {
                bound: BigRational::one(),
            },
            1 << 14,
        )
        .unwrap();
        let z = local_normalizer(2, 0, &big_rat(1, 1_000_000_000)).unwrap();
        let truth = z.recip();
        assert!(b.lower <= truth.hi && truth.lo <= b.upper);
    }

    #[test]
    fn expectation_indicator_3_coprime() {
        // single norm-3 ideal, u = 1: P(3 does not divide #M) =
        // P(M = 0) = prod_{k>=2} (1 - 3^-k), about 0.8402
        let m = single(3, 1);
        let b = expectation_bracket(
            &m,
            &|s| {
                if s.is_zero_torsion() {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            },
            &BoundCertificate::NonNegativeBounded {
                bound: BigRational::one(),
            },
            3u128.pow(12),
        )
        .unwrap();
        let mid = (b.lower.to_f64().unwrap() + b.upper.to_f64().unwrap()) / 2.0;
        assert!((mid - 0.8402).abs() < 5e-4, "got {mid}");
    }

    #[test]
    fn expectation_requires_certificate() {
        let m = single(3, 1);
        let r = expectation_bracket(&m, &|_| BigRational::one(), &BoundCertificate::None, 100);
        assert!(r.is_err());
    }

    #[test]
    fn surjection_moment_examples() {
        // A = 0: exactly 1
        let m = single(2, 1);
        let (b, t) = surjection_moment_check(&m, &TorsionShape::new(), 8).unwrap();
        assert_eq!(t, BigRational::one());
        assert!(b.contains(&BigRational::one()));

        // A of type (1), u = 0: bracket contains 1
        let m0 = single(3, 0);
        let id = m0.locals[0].ideal;
        let a: TorsionShape = [(
            id,
            LocalPart {
                norm: 3,
                parts: Partition::new(vec![1]).unwrap(),
            },
        )]
        .into_iter()
        .collect();
        let (b, t) = surjection_moment_check(&m0, &a, 10).unwrap();
        assert_eq!(t, BigRational::one());
        assert!(b.contains(&t), "bracket {:?}", b.to_f64());

        // A of type (1), u = 1: bracket contains 1/q
        let m1 = single(3, 1);
        let a: TorsionShape = [(
            m1.locals[0].ideal,
            LocalPart {
                norm: 3,
                parts: Partition::new(vec![1]).unwrap(),
            },
        )]
        .into_iter()
        .collect();
        let (b, t) = surjection_moment_check(&m1, &a, 10).unwrap();
        assert_eq!(t, big_rat(1, 3));
        assert!(b.contains(&t), "bracket {:?}", b.to_f64());
    }

    #[test]
    fn sampler_deterministic() {
        let m = single(2, 1);
        let mut s1 = m.sampler(42, 0);
        let mut s2 = m.sampler(42, 0);
        for _ in 0..200 {
            assert_eq!(s1.sample().unwrap(), s2.sample().unwrap());
        }
        // different streams differ somewhere
        let mut s3 = m.sampler(42, 1);
        let mut any_diff = false;
        let mut s1 = m.sampler(42, 0);
        for _ in 0..200 {
            if s1.sample().unwrap() != s3.sample().unwrap() {
                any_diff = true;
            }
        }
        assert!(any_diff);
    }

    #[test]
    fn sampler_zero_frequency_matches_probability() {
        let m = single(2, 1);
        let z = m.normalizer();
        let p0 = z.recip().midpoint().to_f64().unwrap();
        let mut sampler = m.sampler(7, 0);
        let n = 20_000;
        let mut zeros = 0u64;
        for _ in 0..n {
            if sampler.sample().unwrap().is_zero_torsion() {
                zeros += 1;
            }
        }
        let freq = zeros as f64 / n as f64;
        let sigma = (p0 * (1.0 - p0) / n as f64).sqrt();
        assert!(
            (freq - p0).abs() < 4.0 * sigma,
            "freq {freq} vs p0 {p0} (sigma {sigma})"
        );
    }

    #[test]
    fn sampler_large_u_is_zero() {
        let m = single(2, 40);
        let mut sampler = m.sampler(3, 0);
        let mut zeros = 0;
        let n = 2_000;
        for _ in 0..n {
            if sampler.sample().unwrap().is_zero_torsion() {
                zeros += 1;
            }
        }
        assert!(zeros as f64 / n as f64 > 0.999);
    }

    #[test]
    fn truncation_demo_order_dependence() {
        let d = truncation_shape_demo(1, 100_000);
        assert!(d.ratio_given_order < 0.05, "got {}", d.ratio_given_order);
        assert!(d.ratio_swapped > 0.95, "got {}", d.ratio_swapped);
        let e = truncation_shape_demo(10_000, 10_000);
        assert!(e.ratio_given_order > 0.0 && e.ratio_given_order < 1.0);
        assert!((e.ratio_given_order - e.ratio_swapped).abs() < 1e-12);
    }

    #[test]
    fn tail_bound_dominates_enumeration() {
        // the certified tail must exceed the true remaining mass
        for (q, u, a) in [(2u64, 0u32, 0u64), (2, 1, 1), (3, 1, 2), (3, 2, 4)] {
            let from = 6u64;
            let tail = mass_tail_bound(q, u, from, a).unwrap();
            // true partial tail up to 16 (a lower bound on the true tail)
            let mut actual = BigRational::zero();
            for n in (from + 1)..=16 {
                for lam in partitions_of(n as u32) {
                    let aut = aut_count(&lam, q).unwrap();
                    actual += q_pow(q, a as i64 * lam.num_parts() as i64)
                        * q_pow(q, -((u as u64 * n) as i64))
                        / BigRational::from_integer(BigInt::from(aut));
                }
            }
            assert!(tail > actual, "q={q} u={u} a={a}");
        }
    }
}
