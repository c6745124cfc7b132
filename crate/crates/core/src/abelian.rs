//! Finite abelian groups, their characters up to kernel equivalence, the
//! simple components of the localized group ring, and the maximal ideals
//! of each component.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::arith::{euler_phi, gcd, mult_order};
use crate::error::{Error, Result};

/// A finite abelian group in invariant-factor form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    cyclic_orders: Vec<u64>,
    order: u64,
}

/// A character, stored by the image of each invariant-factor generator as
/// a power of a fixed primitive root of unity of order `exponent(G)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Character {
    pub exponents: Vec<u64>,
    pub order: u64,
}

/// Identifier of a component inside the canonically sorted component list
/// of a group.
pub type ComponentId = usize;

/// One simple factor of the localized group ring, i.e. one kernel class
/// of characters.
#[derive(Debug, Clone)]
pub struct GroupComponent {
    pub id: ComponentId,
    pub rep: Character,
    /// Order of chi(G); the component ring is Z_(S) adjoined a primitive
    /// n-th root of unity.
    pub n: u64,
    /// phi(n), the rank of the component over Z_(S).
    pub degree: u64,
    /// chi(c) = -1 for the designated involution c, when one was given.
    pub minus_flag: Option<bool>,
    pub group_order: u64,
    kernel: BTreeSet<Vec<u64>>,
}

impl GroupComponent {
    /// The common kernel of the characters in this class; its index in
    /// the group is n.
    pub fn kernel(&self) -> &BTreeSet<Vec<u64>> {
        &self.kernel
    }
}

/// Stable identity of a maximal ideal across serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IdealId {
    pub component: ComponentId,
    pub p: u64,
    pub index: u32,
}

/// A maximal ideal of a component, lying over the rational prime `p` with
/// residue degree `f` and norm `p^f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaximalIdeal {
    pub id: IdealId,
    pub f: u32,
}

impl MaximalIdeal {
    /// Exact norm, when it fits in a u64.
    pub fn norm(&self) -> Option<u64> {
        self.id.p.checked_pow(self.f)
    }

    pub fn norm_f64(&self) -> f64 {
        (self.id.p as f64).powi(self.f as i32)
    }
}

impl GroupSpec {
    /// Normalizes an arbitrary sequence of cyclic orders into
    /// invariant-factor form (each order divides the next).
    pub fn new(cyclic_orders: &[u64]) -> Result<GroupSpec> {
        if cyclic_orders.is_empty() {
            return Err(Error::InvalidGroup("empty cyclic order list".into()));
        }
        if cyclic_orders.contains(&0) {
            return Err(Error::InvalidGroup("zero cyclic order".into()));
        }
        // Collect prime-power local factors, largest first per prime.
        let mut local: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        for &d in cyclic_orders {
            for (p, e) in crate::arith::factorize(d) {
                local.entry(p).or_default().push(p.pow(e));
            }
        }
        for v in local.values_mut() {
            v.sort_unstable_by(|a, b| b.cmp(a));
        }
        let k = local.values().map(|v| v.len()).max().unwrap_or(0);
        let mut factors = vec![1u64; k.max(1)];
        for v in local.values() {
            for (i, &pe) in v.iter().enumerate() {
                factors[i] = factors[i].checked_mul(pe).ok_or_else(|| {
                    Error::InvalidGroup("group order overflows u64".into())
                })?;
            }
        }
        factors.reverse(); // ascending, each divides the next
        let order = factors.iter().try_fold(1u64, |a, &b| a.checked_mul(b));
        let order = order.ok_or_else(|| Error::InvalidGroup("group order overflows u64".into()))?;
        Ok(GroupSpec {
            cyclic_orders: factors,
            order,
        })
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn cyclic_orders(&self) -> &[u64] {
        &self.cyclic_orders
    }

    pub fn exponent(&self) -> u64 {
        *self.cyclic_orders.last().unwrap()
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    /// All group elements as exponent tuples relative to the generators.
    pub fn elements(&self) -> Vec<Vec<u64>> {
        let mut out = Vec::with_capacity(self.order as usize);
        let mut cur = vec![0u64; self.cyclic_orders.len()];
        loop {
            out.push(cur.clone());
            let mut i = 0;
            loop {
                if i == cur.len() {
                    return out;
                }
                cur[i] += 1;
                if cur[i] < self.cyclic_orders[i] {
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }

    pub fn element_order(&self, g: &[u64]) -> u64 {
        let mut ord = 1u64;
        for (&x, &d) in g.iter().zip(&self.cyclic_orders) {
            let o = d / gcd(x, d);
            ord = num_integer::lcm(ord, o);
        }
        ord
    }

    /// All characters of the group.
    fn characters(&self) -> Vec<Character> {
        let e = self.exponent();
        let steps: Vec<u64> = self.cyclic_orders.iter().map(|&d| e / d).collect();
        let mut out = Vec::with_capacity(self.order as usize);
        let mut idx = vec![0u64; self.cyclic_orders.len()];
        loop {
            let exponents: Vec<u64> = idx
                .iter()
                .zip(&steps)
                .map(|(&j, &s)| (j * s) % e)
                .collect();
            let g = exponents.iter().fold(e, |acc, &a| gcd(acc, a));
            out.push(Character {
                exponents,
                order: e / g,
            });
            let mut i = 0;
            loop {
                if i == idx.len() {
                    return out;
                }
                idx[i] += 1;
                if idx[i] < self.cyclic_orders[i] {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
        }
    }

    /// chi evaluated on an element, as an exponent of the fixed primitive
    /// root of unity of order exponent(G).
    pub fn char_exponent_on(&self, chi: &Character, g: &[u64]) -> u64 {
        let e = self.exponent();
        let mut acc: u128 = 0;
        for (&a, &x) in chi.exponents.iter().zip(g) {
            acc = (acc + (a as u128) * (x as u128)) % e as u128;
        }
        acc as u64
    }

    fn kernel_of(&self, chi: &Character, elements: &[Vec<u64>]) -> BTreeSet<Vec<u64>> {
        elements
            .iter()
            .filter(|g| self.char_exponent_on(chi, g) == 0)
            .cloned()
            .collect()
    }

    /// One component per kernel class of characters, canonically sorted by
    /// (n, representative exponent vector).
    pub fn components(&self) -> Vec<GroupComponent> {
        self.components_with_involution(None)
            .expect("infallible without involution")
    }

    /// Components with the minus flag set relative to an involution `c`.
    pub fn components_with_involution(
        &self,
        c: Option<&[u64]>,
    ) -> Result<Vec<GroupComponent>> {
        if let Some(c) = c {
            if self.element_order(c) != 2 {
                return Err(Error::NotInvolution);
            }
        }
        let elements = self.elements();
        let mut by_kernel: BTreeMap<BTreeSet<Vec<u64>>, Vec<Character>> = BTreeMap::new();
        for chi in self.characters() {
            let ker = self.kernel_of(&chi, &elements);
            by_kernel.entry(ker).or_default().push(chi);
        }
        let e = self.exponent();
        let mut comps: Vec<GroupComponent> = Vec::new();
        for (kernel, mut chis) in by_kernel {
            chis.sort_by(|a, b| a.exponents.cmp(&b.exponents));
            let rep = chis[0].clone();
            let n = rep.order;
            debug_assert!(chis.iter().all(|x| x.order == n));
            debug_assert_eq!(chis.len() as u64, euler_phi(n));
            let minus_flag = c.map(|c| {
                // chi(c) = -1 iff the exponent is e/2; constant on the class
                self.char_exponent_on(&rep, c) == e / 2 && e % 2 == 0
            });
            comps.push(GroupComponent {
                id: 0,
                rep,
                n,
                degree: euler_phi(n),
                minus_flag,
                group_order: self.order,
                kernel,
            });
        }
        comps.sort_by(|a, b| (a.n, &a.rep.exponents).cmp(&(b.n, &b.rep.exponents)));
        for (i, comp) in comps.iter_mut().enumerate() {
            comp.id = i;
        }
        Ok(comps)
    }

    /// The components on which the involution `c` acts as -1. Their degree
    /// sum is half the group order.
    pub fn minus_components(&self, c: &[u64]) -> Result<Vec<GroupComponent>> {
        let comps = self.components_with_involution(Some(c))?;
        Ok(comps
            .into_iter()
            .filter(|comp| comp.minus_flag == Some(true))
            .collect())
    }
}

impl GroupComponent {
    /// The maximal ideals of the component above the primes of `s`.
    /// Every prime must be coprime to the group order.
    pub fn maximal_ideals(&self, s: &[u64]) -> Result<Vec<MaximalIdeal>> {
        let mut out = Vec::new();
        let mut primes: Vec<u64> = s.to_vec();
        primes.sort_unstable();
        primes.dedup();
        for &p in &primes {
            if self.group_order % p == 0 {
                return Err(Error::BadPrime {
                    p,
                    order: self.group_order,
                });
            }
            let n = self.n;
            if n == 1 {
                out.push(MaximalIdeal {
                    id: IdealId {
                        component: self.id,
                        p,
                        index: 0,
                    },
                    f: 1,
                });
                continue;
            }
            let f = mult_order(p % n, n) as u32;
            let g = euler_phi(n) / f as u64;
            for index in 0..g as u32 {
                out.push(MaximalIdeal {
                    id: IdealId {
                        component: self.id,
                        p,
                        index,
                    },
                    f,
                });
            }
        }
        Ok(out)
    }
}

/// Group/component configuration as consumed by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupConfig {
    pub cyclic_orders: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub involution: Option<Vec<u64>>,
    pub primes: Vec<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: u64) -> GroupSpec {
        GroupSpec::new(&[n]).unwrap()
    }

    #[test]
    fn build_group_normalizes() {
        let g = GroupSpec::new(&[4]).unwrap();
        assert_eq!(g.order(), 4);
        assert_eq!(g.cyclic_orders(), &[4]);

        let g = GroupSpec::new(&[2, 4]).unwrap();
        assert_eq!(g.order(), 8);
        assert_eq!(g.cyclic_orders(), &[2, 4]);

        // non-invariant-factor input gets recombined
        let g = GroupSpec::new(&[2, 3]).unwrap();
        assert_eq!(g.cyclic_orders(), &[6]);

        let g = GroupSpec::new(&[6, 4]).unwrap();
        assert_eq!(g.cyclic_orders(), &[2, 12]);

        let g = GroupSpec::new(&[58]).unwrap();
        assert_eq!(g.order(), 58);
    }

    #[test]
    fn build_group_errors() {
        assert!(GroupSpec::new(&[]).is_err());
        assert!(GroupSpec::new(&[3, 0]).is_err());
    }

    #[test]
    fn trivial_group() {
        let g = c(1);
        assert_eq!(g.order(), 1);
        let comps = g.components();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].n, 1);
        assert_eq!(comps[0].degree, 1);
    }

    #[test]
    fn components_c4() {
        let comps = c(4).components();
        let ns: Vec<u64> = comps.iter().map(|c| c.n).collect();
        assert_eq!(ns, vec![1, 2, 4]);
        let degs: Vec<u64> = comps.iter().map(|c| c.degree).collect();
        assert_eq!(degs, vec![1, 1, 2]);
        assert_eq!(degs.iter().sum::<u64>(), 4);
    }

    #[test]
    fn components_c58() {
        let comps = c(58).components();
        let ns: Vec<u64> = comps.iter().map(|c| c.n).collect();
        assert_eq!(ns, vec![1, 2, 29, 58]);
        let degs: Vec<u64> = comps.iter().map(|c| c.degree).collect();
        assert_eq!(degs, vec![1, 1, 28, 28]);
        assert_eq!(degs.iter().sum::<u64>(), 58);
    }

    #[test]
    fn kernel_index_equals_n() {
        for orders in [vec![4], vec![6], vec![2, 4], vec![58]] {
            let g = GroupSpec::new(&orders).unwrap();
            for comp in g.components() {
                assert_eq!(
                    comp.kernel().len() as u64 * comp.n,
                    g.order(),
                    "G = {orders:?}, n = {}",
                    comp.n
                );
            }
        }
    }

    #[test]
    fn degree_sum_equals_group_order() {
        for orders in [vec![2, 4], vec![6], vec![2, 2, 2], vec![12], vec![3, 9]] {
            let g = GroupSpec::new(&orders).unwrap();
            let total: u64 = g.components().iter().map(|c| c.degree).sum();
            assert_eq!(total, g.order(), "G = {orders:?}");
        }
    }

    #[test]
    fn component_count_is_number_of_character_kernels() {
        // brute force over kernels for small groups
        for orders in [vec![4], vec![2, 2], vec![6], vec![58], vec![2, 4]] {
            let g = GroupSpec::new(&orders).unwrap();
            let elements = g.elements();
            let mut kernels = BTreeSet::new();
            for chi in g.characters() {
                kernels.insert(g.kernel_of(&chi, &elements));
            }
            assert_eq!(g.components().len(), kernels.len(), "G = {orders:?}");
        }
    }

    #[test]
    fn minus_components_c2() {
        let g = c(2);
        let minus = g.minus_components(&[1]).unwrap();
        assert_eq!(minus.len(), 1);
        assert_eq!(minus[0].n, 2);
        assert_eq!(minus[0].degree, 1);
    }

    #[test]
    fn minus_components_c4() {
        // c = square of the generator; chi(c) = -1 forces chi faithful
        let g = c(4);
        let minus = g.minus_components(&[2]).unwrap();
        assert_eq!(minus.len(), 1);
        assert_eq!(minus[0].n, 4);
        assert_eq!(minus[0].degree, 2);
        let total: u64 = minus.iter().map(|c| c.degree).sum();
        assert_eq!(total, g.order() / 2);
    }

    #[test]
    fn minus_components_c58() {
        let g = c(58);
        let minus = g.minus_components(&[29]).unwrap();
        let ns: Vec<u64> = minus.iter().map(|c| c.n).collect();
        assert_eq!(ns, vec![2, 58]);
        let total: u64 = minus.iter().map(|c| c.degree).sum();
        assert_eq!(total, 29);
    }

    #[test]
    fn minus_component_degree_sum_generic() {
        for orders in [vec![2, 4], vec![6], vec![2, 2]] {
            let g = GroupSpec::new(&orders).unwrap();
            // find an involution
            let c = g
                .elements()
                .into_iter()
                .find(|x| g.element_order(x) == 2)
                .unwrap();
            let minus = g.minus_components(&c).unwrap();
            let total: u64 = minus.iter().map(|c| c.degree).sum();
            assert_eq!(total, g.order() / 2, "G = {orders:?}");
        }
    }

    #[test]
    fn involution_rejected() {
        let g = c(4);
        assert!(g.minus_components(&[1]).is_err());
        assert!(g.minus_components(&[0]).is_err());
    }

    #[test]
    fn maximal_ideals_examples() {
        // n = 4, S = {3}: 3^2 = 1 mod 4, one ideal of norm 9
        let comps = c(4).components();
        let comp4 = comps.iter().find(|c| c.n == 4).unwrap();
        let ideals = comp4.maximal_ideals(&[3]).unwrap();
        assert_eq!(ideals.len(), 1);
        assert_eq!(ideals[0].f, 2);
        assert_eq!(ideals[0].norm(), Some(9));

        // n = 1: one ideal of norm p
        let comp1 = comps.iter().find(|c| c.n == 1).unwrap();
        let ideals = comp1.maximal_ideals(&[7]).unwrap();
        assert_eq!(ideals.len(), 1);
        assert_eq!(ideals[0].norm(), Some(7));

        // n = 5, S = {3}: the order of 3 mod 5 is 4
        let comps5 = c(5).components();
        let comp5 = comps5.iter().find(|c| c.n == 5).unwrap();
        let ideals = comp5.maximal_ideals(&[3]).unwrap();
        assert_eq!(ideals.len(), 1);
        assert_eq!(ideals[0].f, 4);
        assert_eq!(ideals[0].norm(), Some(81));
    }

    #[test]
    fn maximal_ideals_fg_product() {
        // f*g = phi(n) and norm = p^f for assorted components and primes
        for orders in [vec![4], vec![6], vec![58], vec![2, 4]] {
            let g = GroupSpec::new(&orders).unwrap();
            for comp in g.components() {
                for p in [3u64, 5, 7, 11, 13] {
                    if g.order() % p == 0 {
                        assert!(comp.maximal_ideals(&[p]).is_err());
                        continue;
                    }
                    let ideals = comp.maximal_ideals(&[p]).unwrap();
                    let f = ideals[0].f as u64;
                    assert_eq!(f * ideals.len() as u64, comp.degree);
                    for m in &ideals {
                        assert_eq!(m.norm(), p.checked_pow(m.f));
                    }
                }
            }
        }
    }

    #[test]
    fn bad_prime_rejected() {
        let comps = c(4).components();
        assert!(comps[0].maximal_ideals(&[2]).is_err());
    }

    #[test]
    fn group_config_roundtrip() {
        let cfg = GroupConfig {
            cyclic_orders: vec![58],
            involution: Some(vec![29]),
            primes: vec![3, 5],
        };
        let s = serde_json::to_string(&cfg).unwrap();
        let back: GroupConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back.cyclic_orders, vec![58]);
        assert_eq!(back.involution, Some(vec![29]));
        assert_eq!(back.primes, vec![3, 5]);
    }
}
