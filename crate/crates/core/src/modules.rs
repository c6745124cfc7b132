//! Finite modules over the localized group ring, stored as
//! partition-valued maps on maximal ideals, together with exact counting
//! of homomorphisms, automorphisms and surjections, commensurability
//! indices, and Grothendieck-class bookkeeping.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::abelian::{ComponentId, IdealId};
use crate::error::{Error, Result};

/// An integer partition with positive, non-increasing parts. The empty
/// partition denotes the zero module.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    pub fn new(mut parts: Vec<u32>) -> Result<Partition> {
        if parts.contains(&0) {
            return Err(Error::InvalidPartition("zero part".into()));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Partition { parts })
    }

    pub fn empty() -> Partition {
        Partition { parts: vec![] }
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// Sum of the parts; log_q of the module order.
    pub fn size(&self) -> u64 {
        self.parts.iter().map(|&p| p as u64).sum()
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Multiplicity of each part value.
    pub fn multiplicities(&self) -> BTreeMap<u32, u32> {
        let mut m = BTreeMap::new();
        for &p in &self.parts {
            *m.entry(p).or_insert(0) += 1;
        }
        m
    }

    /// Direct sum: merge of the part multisets.
    pub fn direct_sum(&self, other: &Partition) -> Partition {
        let mut parts = self.parts.clone();
        parts.extend_from_slice(&other.parts);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Partition { parts }
    }
}

/// All partitions of `n` in descending lexicographic order; this is the
/// canonical within-size enumeration order used by the sampler.
pub fn partitions_of(n: u32) -> Vec<Partition> {
    fn rec(n: u32, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if n == 0 {
            out.push(Partition {
                parts: prefix.clone(),
            });
            return;
        }
        let top = max.min(n);
        for k in (1..=top).rev() {
            prefix.push(k);
            rec(n - k, k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

fn check_q(q: u64) -> Result<()> {
    if q < 2 {
        Err(Error::BadPrimePower(q))
    } else {
        Ok(())
    }
}

fn qpow(q: u64, e: u64) -> BigUint {
    BigUint::from(q).pow(e as u32)
}

/// Number of module homomorphisms between local modules of types
/// `lambda` and `mu` over a residue field of size `q`:
/// q^(sum_{i,j} min(lambda_i, mu_j)).
pub fn hom_count(lambda: &Partition, mu: &Partition, q: u64) -> Result<BigUint> {
    check_q(q)?;
    let mut e = 0u64;
    for &a in lambda.parts() {
        for &b in mu.parts() {
            e += a.min(b) as u64;
        }
    }
    Ok(qpow(q, e))
}

/// Exact automorphism count of the local module of type `lambda`:
/// q^(sum min(lambda_i, lambda_j)) * prod_k prod_{j=1}^{m_k} (1 - q^-j).
pub fn aut_count(lambda: &Partition, q: u64) -> Result<BigUint> {
    check_q(q)?;
    let mut s = 0u64;
    for &a in lambda.parts() {
        for &b in lambda.parts() {
            s += a.min(b) as u64;
        }
    }
    let mut shift = 0u64;
    let mut unit_prod = BigUint::one();
    for (_, m) in lambda.multiplicities() {
        for j in 1..=m as u64 {
            shift += j;
            unit_prod *= qpow(q, j) - BigUint::one();
        }
    }
    debug_assert!(s >= shift);
    Ok(qpow(q, s - shift) * unit_prod)
}

/// Number of surjections from a free local module of rank `u` onto the
/// module of type `lambda`: q^(u*|lambda|) * prod_{i=0}^{r-1} (1 - q^{i-u}),
/// which vanishes when `u` is less than the number of parts.
pub fn sur_count(lambda: &Partition, q: u64, u: u32) -> Result<BigUint> {
    check_q(q)?;
    let r = lambda.num_parts() as u32;
    if u < r {
        return Ok(BigUint::zero());
    }
    // q^(u|lambda| - sum_{i=0}^{r-1}(u-i)) * prod_{j=u-r+1}^{u} (q^j - 1)
    let mut shift = 0u64;
    let mut unit_prod = BigUint::one();
    for i in 0..r as u64 {
        let j = u as u64 - i;
        shift += j;
        unit_prod *= qpow(q, j) - BigUint::one();
    }
    let e = u as u64 * lambda.size();
    debug_assert!(e >= shift);
    Ok(qpow(q, e - shift) * unit_prod)
}

/// Number of surjections from the local module of type `lambda` onto the
/// local module of type `target` (both over a residue field of size `q`).
///
/// A map is surjective exactly when its reduction spans target/q*target,
/// so the count factors as the number of lifts of each reduced tuple times
/// a spanning-tuple count over nested subspaces, computed by a rank
/// recursion.
pub fn sur_onto_count(lambda: &Partition, target: &Partition, q: u64) -> Result<BigUint> {
    check_q(q)?;
    let r_t = target.num_parts();
    if r_t == 0 {
        return Ok(BigUint::one());
    }
    // |target[q^k]| has q-exponent sum_j min(t_j, k); its image in
    // target/q*target is spanned by the unit vectors e_j with t_j <= k,
    // so the image dimension is #{j : t_j <= k}.
    let ann_exp =
        |k: u32| -> u64 { target.parts().iter().map(|&t| t.min(k) as u64).sum::<u64>() };
    let dim_w = |k: u32| -> u64 { target.parts().iter().filter(|&&t| t <= k).count() as u64 };
    let mut lift_factor = BigUint::one();
    let mut dims: Vec<u64> = Vec::with_capacity(lambda.num_parts());
    for &l in lambda.parts() {
        let w = dim_w(l);
        dims.push(w);
        let ann = ann_exp(l);
        debug_assert!(ann >= w);
        lift_factor *= qpow(q, ann - w);
    }
    // most constrained generator first, so partial spans stay inside the
    // next constraint subspace
    dims.sort_unstable();
    let spanning = spanning_tuples_nested(&dims, r_t as u64, q);
    Ok(lift_factor * spanning)
}

/// Number of tuples (v_1, ..., v_k) spanning a q-vector space of dimension
/// `r`, where v_i is constrained to a subspace of dimension `dims[i]` and
/// the constraint subspaces are nested increasingly. Rank recursion: a
/// vector either falls inside the current span (q^d choices) or enlarges
/// it (q^w - q^d choices).
fn spanning_tuples_nested(dims: &[u64], r: u64, q: u64) -> BigUint {
    let mut states: BTreeMap<u64, BigUint> = BTreeMap::new();
    states.insert(0, BigUint::one());
    for &w in dims {
        let mut next: BTreeMap<u64, BigUint> = BTreeMap::new();
        for (&d, ways) in &states {
            debug_assert!(d <= w);
            let inside = qpow(q, d);
            *next.entry(d).or_insert_with(BigUint::zero) += ways * &inside;
            if w > d {
                let outside = qpow(q, w) - inside;
                *next.entry(d + 1).or_insert_with(BigUint::zero) += ways * outside;
            }
        }
        states = next;
    }
    states.get(&r).cloned().unwrap_or_else(BigUint::zero)
}

/// Number of u-tuples of vectors spanning a q-vector space of dimension r.
pub fn spanning_tuples_free(u: u64, r: u64, q: u64) -> BigUint {
    spanning_tuples_nested(&vec![r; u as usize], r, q)
}

/// Which count the brute-force oracle should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BruteMode {
    Hom,
    Aut,
    Sur,
}

const BRUTE_ORDER_CAP: u64 = 1 << 12;
const BRUTE_MAP_CAP: u64 = 1 << 16;

/// A concrete abelian q-group of type `eta`, with elements as coordinate
/// tuples. Used only by the oracle.
struct ConcreteModule {
    orders: Vec<u64>,
    elements: Vec<Vec<u64>>,
}

impl ConcreteModule {
    fn new(eta: &Partition, q: u64) -> Result<ConcreteModule> {
        let size = eta.size();
        if size >= 63 || q.pow(size as u32) > BRUTE_ORDER_CAP {
            return Err(Error::SizeCap(format!("module order q^{size} exceeds 2^12")));
        }
        let orders: Vec<u64> = eta.parts().iter().map(|&e| q.pow(e)).collect();
        let count = q.pow(size as u32) as usize;
        let mut elements = Vec::with_capacity(count);
        let mut cur = vec![0u64; orders.len()];
        loop {
            elements.push(cur.clone());
            let mut i = 0;
            loop {
                if i == cur.len() {
                    return Ok(ConcreteModule { orders, elements });
                }
                cur[i] += 1;
                if cur[i] < orders[i] {
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }

    fn len(&self) -> u64 {
        self.elements.len() as u64
    }

    fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(b)
            .zip(&self.orders)
            .map(|((&x, &y), &o)| (x + y) % o)
            .collect()
    }

    fn scalar_mul(&self, k: u64, a: &[u64]) -> Vec<u64> {
        a.iter()
            .zip(&self.orders)
            .map(|(&x, &o)| (x as u128 * k as u128 % o as u128) as u64)
            .collect()
    }

    fn is_zero(a: &[u64]) -> bool {
        a.iter().all(|&x| x == 0)
    }

    /// Count of elements annihilated by q^k, by exhaustive scan.
    fn ann_count(&self, q: u64, k: u32) -> u64 {
        let m = q.saturating_pow(k);
        self.elements
            .iter()
            .filter(|x| Self::is_zero(&self.scalar_mul(m, x)))
            .count() as u64
    }

    /// Elements annihilated by q^k.
    fn ann_elements(&self, q: u64, k: u32) -> Vec<Vec<u64>> {
        let m = q.saturating_pow(k);
        self.elements
            .iter()
            .filter(|x| Self::is_zero(&self.scalar_mul(m, x)))
            .cloned()
            .collect()
    }

    /// Order of the subgroup generated by the given elements.
    fn span_size(&self, gens: &[&Vec<u64>]) -> u64 {
        let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
        let zero = vec![0u64; self.orders.len()];
        seen.insert(zero.clone());
        let mut queue = vec![zero];
        while let Some(x) = queue.pop() {
            for g in gens {
                let y = self.add(&x, g);
                if seen.insert(y.clone()) {
                    queue.push(y);
                }
            }
        }
        seen.len() as u64
    }

    /// The subgroup q*M as an element set.
    fn q_multiples(&self, q: u64) -> BTreeSet<Vec<u64>> {
        self.elements
            .iter()
            .map(|x| self.scalar_mul(q, x))
            .collect()
    }
}

/// Counts of hom/aut/sur by explicit enumeration over a concrete abelian
/// q-group, independent of the closed-form counting formulas.
///
/// Maps are enumerated exhaustively whenever the number of candidates fits
/// under a cap. Beyond it, the generator choice sets are still produced by
/// exhaustive element scans, and only the spanning condition is counted by
/// the rank recursion over measured subspace dimensions (which the tests
/// pin against the exhaustive regime).
///
/// `mu` is the hom target; `u` is the free source rank in sur mode.
pub fn brute_force_counts(
    lambda: &Partition,
    mu: &Partition,
    q: u64,
    mode: BruteMode,
    u: u32,
) -> Result<BigUint> {
    check_q(q)?;
    let fac = crate::arith::factorize(q);
    if fac.len() != 1 || fac[0].1 != 1 {
        return Err(Error::BadPrimePower(q));
    }
    match mode {
        BruteMode::Hom => {
            // a hom is a free choice of an annihilated image per generator;
            // each choice set is scanned exhaustively
            let target = ConcreteModule::new(mu, q)?;
            let _ = ConcreteModule::new(lambda, q)?; // enforce the source cap too
            let mut total = BigUint::one();
            for &l in lambda.parts() {
                total *= BigUint::from(target.ann_count(q, l));
            }
            Ok(total)
        }
        BruteMode::Aut => brute_sur_onto(lambda, lambda, q),
        BruteMode::Sur => {
            let target = ConcreteModule::new(lambda, q)?;
            let r = target.len();
            let tuples = (r as u128).checked_pow(u).unwrap_or(u128::MAX);
            if tuples <= BRUTE_MAP_CAP as u128 {
                if u == 0 {
                    return Ok(if r == 1 { BigUint::one() } else { BigUint::zero() });
                }
                let mut count = 0u64;
                let mut idx = vec![0usize; u as usize];
                loop {
                    let gens: Vec<&Vec<u64>> =
                        idx.iter().map(|&i| &target.elements[i]).collect();
                    if target.span_size(&gens) == r {
                        count += 1;
                    }
                    let mut i = 0;
                    loop {
                        if i == idx.len() {
                            return Ok(BigUint::from(count));
                        }
                        idx[i] += 1;
                        if idx[i] < target.elements.len() {
                            break;
                        }
                        idx[i] = 0;
                        i += 1;
                    }
                }
            } else {
                // reduction mod q is onto with uniform fibers q*M, and a
                // tuple generates iff its reduction spans
                let q_m = target.q_multiples(q);
                let fibers = BigUint::from(q_m.len() as u64).pow(u);
                let r_v = log_q(r / q_m.len() as u64, q);
                Ok(fibers * spanning_tuples_free(u as u64, r_v, q))
            }
        }
    }
}

fn log_q(mut n: u64, q: u64) -> u64 {
    let mut d = 0;
    while n > 1 {
        n /= q;
        d += 1;
    }
    d
}

/// Surjection count lambda -> mu by enumeration; exhaustive under the map
/// cap, fiber-reduced above it.
fn brute_sur_onto(lambda: &Partition, mu: &Partition, q: u64) -> Result<BigUint> {
    let target = ConcreteModule::new(mu, q)?;
    let choice_sets: Vec<Vec<Vec<u64>>> = lambda
        .parts()
        .iter()
        .map(|&l| target.ann_elements(q, l))
        .collect();
    if choice_sets.is_empty() {
        return Ok(if target.len() == 1 {
            BigUint::one()
        } else {
            BigUint::zero()
        });
    }
    let tuples: u128 = choice_sets
        .iter()
        .map(|s| s.len() as u128)
        .try_fold(1u128, |a, b| a.checked_mul(b))
        .unwrap_or(u128::MAX);
    if tuples <= BRUTE_MAP_CAP as u128 {
        let mut count = 0u64;
        let mut idx = vec![0usize; choice_sets.len()];
        loop {
            let gens: Vec<&Vec<u64>> = idx
                .iter()
                .enumerate()
                .map(|(j, &i)| &choice_sets[j][i])
                .collect();
            if target.span_size(&gens) == target.len() {
                count += 1;
            }
            let mut i = 0;
            loop {
                if i == idx.len() {
                    return Ok(BigUint::from(count));
                }
                idx[i] += 1;
                if idx[i] < choice_sets[i].len() {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
        }
    } else {
        let q_m = target.q_multiples(q);
        let mut lift = BigUint::one();
        let mut dims: Vec<u64> = Vec::new();
        for set in &choice_sets {
            let kernel = set.iter().filter(|x| q_m.contains(*x)).count() as u64;
            dims.push(log_q(set.len() as u64 / kernel, q));
            lift *= BigUint::from(kernel);
        }
        dims.sort_unstable();
        let r_v = log_q(target.len() / q_m.len() as u64, q);
        Ok(lift * spanning_tuples_nested(&dims, r_v, q))
    }
}

/// Rank vector of the projective part: rank per component.
pub type RankVector = BTreeMap<ComponentId, u32>;

/// Local torsion data at one maximal ideal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalPart {
    /// Residue field size of the ideal.
    pub norm: u64,
    pub parts: Partition,
}

/// Torsion part of a module shape: finitely many nonzero local parts.
pub type TorsionShape = BTreeMap<IdealId, LocalPart>;

/// A finite-type module in the canonical projective-plus-torsion form:
/// a rank vector per component and a partition per maximal ideal. This is
/// the unique decomposition available over the maximal order, and doubles
/// as the partition-sequence parametrization of isomorphism classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleShape {
    pub ranks: RankVector,
    pub torsion: TorsionShape,
}

impl ModuleShape {
    pub fn zero() -> ModuleShape {
        ModuleShape {
            ranks: BTreeMap::new(),
            torsion: BTreeMap::new(),
        }
    }

    pub fn from_torsion(torsion: TorsionShape) -> ModuleShape {
        ModuleShape {
            ranks: BTreeMap::new(),
            torsion,
        }
    }

    pub fn is_zero_torsion(&self) -> bool {
        self.torsion.values().all(|l| l.parts.is_empty())
    }

    /// Order of the torsion part.
    pub fn torsion_order(&self) -> BigUint {
        let mut n = BigUint::one();
        for local in self.torsion.values() {
            n *= BigUint::from(local.norm).pow(local.parts.size() as u32);
        }
        n
    }

    /// #Aut of the torsion part.
    pub fn torsion_aut(&self) -> Result<BigUint> {
        let mut n = BigUint::one();
        for local in self.torsion.values() {
            n *= aut_count(&local.parts, local.norm)?;
        }
        Ok(n)
    }

    /// #Hom(P, M0) for the projective with the given rank vector: the
    /// product over ideals of norm^(u * |lambda|).
    pub fn hom_from_projective(&self, ranks: &RankVector) -> BigUint {
        let mut n = BigUint::one();
        for (id, local) in &self.torsion {
            let u = ranks.get(&id.component).copied().unwrap_or(0);
            n *= BigUint::from(local.norm).pow((u as u64 * local.parts.size()) as u32);
        }
        n
    }
}

impl Serialize for ModuleShape {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct TorsionEntry<'a> {
            ideal: String,
            parts: &'a [u32],
        }
        let mut st = serializer.serialize_struct("ModuleShape", 2)?;
        let ranks: BTreeMap<String, u32> = self
            .ranks
            .iter()
            .map(|(&c, &u)| (c.to_string(), u))
            .collect();
        st.serialize_field("ranks", &ranks)?;
        let torsion: Vec<TorsionEntry> = self
            .torsion
            .iter()
            .filter(|(_, l)| !l.parts.is_empty())
            .map(|(id, l)| TorsionEntry {
                ideal: format!("c{}.p{}.{}", id.component, id.p, id.index),
                parts: l.parts.parts(),
            })
            .collect();
        st.serialize_field("torsion", &torsion)?;
        st.end()
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.parts.len()))?;
        for p in &self.parts {
            seq.serialize_element(p)?;
        }
        seq.end()
    }
}

/// Commensurability index ia(P + L0, P + M0) =
/// (#Hom(P, M0) * #Aut M0) / (#Hom(P, L0) * #Aut L0), as an exact rational.
pub fn ia_index(l0: &TorsionShape, m0: &TorsionShape, ranks: &RankVector) -> Result<BigRational> {
    let l = ModuleShape {
        ranks: ranks.clone(),
        torsion: l0.clone(),
    };
    let m = ModuleShape {
        ranks: ranks.clone(),
        torsion: m0.clone(),
    };
    let num = m.hom_from_projective(ranks) * m.torsion_aut()?;
    let den = l.hom_from_projective(ranks) * l.torsion_aut()?;
    Ok(BigRational::new(BigInt::from(num), BigInt::from(den)))
}

/// A finite abelian group given by invariant factors, used as the target
/// of ideal-class maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassGroup {
    pub invariant_factors: Vec<u64>,
}

pub type ClassElem = Vec<u64>;

impl ClassGroup {
    pub fn trivial() -> ClassGroup {
        ClassGroup {
            invariant_factors: vec![],
        }
    }

    pub fn new(invariant_factors: Vec<u64>) -> ClassGroup {
        ClassGroup { invariant_factors }
    }

    pub fn order(&self) -> u64 {
        self.invariant_factors.iter().product()
    }

    pub fn zero(&self) -> ClassElem {
        vec![0; self.invariant_factors.len()]
    }

    pub fn is_zero(&self, x: &ClassElem) -> bool {
        x.iter().all(|&v| v == 0)
    }

    pub fn add(&self, a: &ClassElem, b: &ClassElem) -> ClassElem {
        a.iter()
            .zip(b)
            .zip(&self.invariant_factors)
            .map(|((&x, &y), &m)| (x + y) % m)
            .collect()
    }

    pub fn scale(&self, k: u64, a: &ClassElem) -> ClassElem {
        a.iter()
            .zip(&self.invariant_factors)
            .map(|(&x, &m)| ((x as u128 * k as u128) % m as u128) as u64)
            .collect()
    }

    pub fn elements(&self) -> Vec<ClassElem> {
        let mut out = vec![self.zero()];
        for (i, &m) in self.invariant_factors.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * m as usize);
            for e in &out {
                for v in 0..m {
                    let mut e2 = e.clone();
                    e2[i] = v;
                    next.push(e2);
                }
            }
            out = next;
        }
        out
    }
}

/// A character of a ClassGroup, stored by generator exponents; its value
/// on x is the root of unity with angle sum_j exponents[j] * x[j] / m_j.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCharacter {
    pub exponents: Vec<u64>,
}

impl ClassCharacter {
    pub fn trivial(group: &ClassGroup) -> ClassCharacter {
        ClassCharacter {
            exponents: vec![0; group.invariant_factors.len()],
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    /// Exact angle of the value, as a rational in [0, 1).
    pub fn angle(&self, group: &ClassGroup, x: &ClassElem) -> BigRational {
        let mut acc = BigRational::zero();
        for ((&a, &v), &m) in self.exponents.iter().zip(x).zip(&group.invariant_factors) {
            acc += BigRational::new(BigInt::from(a as u128 * v as u128), BigInt::from(m));
        }
        let f = acc.floor();
        acc - f
    }

    /// The value as an exact sign when it is one; None otherwise.
    pub fn value_sign(&self, group: &ClassGroup, x: &ClassElem) -> Option<i8> {
        let ang = self.angle(group, x);
        if ang.is_zero() {
            Some(1)
        } else if ang == crate::arith::big_rat(1, 2) {
            Some(-1)
        } else {
            None
        }
    }

    /// True when every value of the character is a sign.
    pub fn is_quadratic(&self, group: &ClassGroup) -> bool {
        self.exponents
            .iter()
            .zip(&group.invariant_factors)
            .all(|(&a, &m)| (2 * a) % m == 0)
    }

    pub fn value_complex(&self, group: &ClassGroup, x: &ClassElem) -> (f64, f64) {
        let ang = self.angle(group, x);
        let theta =
            2.0 * std::f64::consts::PI * num_traits::ToPrimitive::to_f64(&ang).unwrap_or(0.0);
        (theta.cos(), theta.sin())
    }
}

/// Stand-in for the ideal-class map on the torsion Grothendieck group:
/// a finite abelian group C and the class of each maximal ideal in play.
#[derive(Debug, Clone)]
pub struct ClassDatum {
    pub group: ClassGroup,
    pub ideal_class: BTreeMap<IdealId, ClassElem>,
}

impl ClassDatum {
    pub fn class_of_ideal(&self, id: &IdealId) -> Result<&ClassElem> {
        self.ideal_class.get(id).ok_or_else(|| {
            Error::MissingIdeal(format!("c{}.p{}.{}", id.component, id.p, id.index))
        })
    }
}

/// Class in the Grothendieck group: per component a free rank, plus a
/// torsion class in the datum's group C.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrothendieckClass {
    pub free_ranks: BTreeMap<ComponentId, i64>,
    pub torsion: ClassElem,
}

impl GrothendieckClass {
    pub fn is_torsion_trivial(&self, group: &ClassGroup) -> bool {
        group.is_zero(&self.torsion)
    }
}

/// The class of a module shape under the datum: torsion class
/// sum over ideals of |lambda_m| * [m], free ranks from the rank vector.
pub fn class_of(shape: &ModuleShape, datum: &ClassDatum) -> Result<GrothendieckClass> {
    let mut torsion = datum.group.zero();
    for (id, local) in &shape.torsion {
        if local.parts.is_empty() {
            continue;
        }
        let cls = datum.class_of_ideal(id)?;
        let contrib = datum.group.scale(local.parts.size(), cls);
        torsion = datum.group.add(&torsion, &contrib);
    }
    let free_ranks = shape.ranks.iter().map(|(&c, &u)| (c, u as i64)).collect();
    Ok(GrothendieckClass {
        free_ranks,
        torsion,
    })
}
