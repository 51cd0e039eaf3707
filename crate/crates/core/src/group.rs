//! Finite abelian groups in canonical invariant-factor form.
//!
//! A group is a chain of cyclic factors C_{d₁} ⊕ … ⊕ C_{d_k} with
//! d₁ | d₂ | … | d_k and every dᵢ ≥ 2 (the trivial group has an empty
//! chain). Elements are dense indices in [0, |G|) under a fixed mixed-radix
//! encoding with the first coordinate most significant; index 0 is the
//! identity. The dense indexing is what lets every set in this crate be a
//! flat bit array.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::arith::{factorize, is_prime, smallest_prime_divisor};
use crate::subset::GroupSubset;

/// Errors from group construction and parsing.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("malformed group descriptor `{0}`")]
    Malformed(String),
    #[error("cyclic factor {0} is smaller than 2")]
    FactorTooSmall(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{p} does not divide the group order {order}")]
    DoesNotDivide { p: u64, order: u64 },
}

/// A finite abelian group, canonicalized to its invariant factors.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GroupSpec {
    factors: Vec<u64>,
    order: usize,
    /// Mixed-radix weights: index = Σ cᵢ·weights[i], last coordinate least
    /// significant (weight 1).
    weights: Vec<usize>,
}

/// An element of a group, addressed by its dense index.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GroupElement(pub usize);

impl GroupElement {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl GroupSpec {
    /// Cyclic group of order `n` (`n = 1` gives the trivial group).
    pub fn cyclic(n: u64) -> GroupSpec {
        if n <= 1 {
            return GroupSpec::trivial();
        }
        GroupSpec { factors: vec![n], order: n as usize, weights: vec![1] }
    }

    /// The trivial group (order 1, empty factor chain).
    pub fn trivial() -> GroupSpec {
        GroupSpec { factors: Vec::new(), order: 1, weights: Vec::new() }
    }

    /// Build the canonical invariant-factor form of C_{c₁} ⊕ … ⊕ C_{c_m}.
    ///
    /// The input components need not form a divisibility chain; they are
    /// split into prime powers and reassembled (C₂ ⊕ C₃ becomes C₆).
    pub fn from_components(components: &[u64]) -> Result<GroupSpec, GroupError> {
        for &c in components {
            if c < 2 {
                return Err(GroupError::FactorTooSmall(c));
            }
        }
        // Collect prime-power exponents per prime, largest first.
        let mut by_prime: Vec<(u64, Vec<u32>)> = Vec::new();
        for &c in components {
            for (p, e) in factorize(c) {
                match by_prime.iter_mut().find(|(q, _)| *q == p) {
                    Some((_, exps)) => exps.push(e),
                    None => by_prime.push((p, vec![e])),
                }
            }
        }
        for (_, exps) in by_prime.iter_mut() {
            exps.sort_unstable_by(|a, b| b.cmp(a));
        }
        let chain_len = by_prime.iter().map(|(_, e)| e.len()).max().unwrap_or(0);
        // Factor j (0 = largest) is the product of the j-th largest prime
        // power of every prime; reverse to get the ascending chain.
        let mut factors: Vec<u64> = (0..chain_len)
            .map(|j| {
                by_prime
                    .iter()
                    .map(|(p, exps)| exps.get(j).map_or(1, |&e| p.pow(e)))
                    .product()
            })
            .collect();
        factors.reverse();
        debug_assert!(factors.windows(2).all(|w| w[1] % w[0] == 0));
        Ok(GroupSpec::from_invariant_factors(factors))
    }

    fn from_invariant_factors(factors: Vec<u64>) -> GroupSpec {
        let order: u64 = factors.iter().product();
        let mut weights = vec![1usize; factors.len()];
        for i in (0..factors.len().saturating_sub(1)).rev() {
            weights[i] = weights[i + 1] * factors[i + 1] as usize;
        }
        GroupSpec { factors, order: order as usize, weights }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// The invariant factors d₁ | d₂ | … | d_k.
    pub fn invariant_factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn is_cyclic(&self) -> bool {
        self.factors.len() <= 1
    }

    pub fn zero(&self) -> GroupElement {
        GroupElement(0)
    }

    /// Mixed-radix coordinates of an element, first coordinate most
    /// significant.
    pub fn coords_of(&self, a: GroupElement) -> Vec<u64> {
        assert!(a.0 < self.order, "element {} out of range for {}", a.0, self);
        let mut rem = a.0;
        self.weights
            .iter()
            .zip(&self.factors)
            .map(|(&w, _)| {
                let c = rem / w;
                rem %= w;
                c as u64
            })
            .collect()
    }

    /// Element with the given coordinates.
    pub fn from_coords(&self, coords: &[u64]) -> GroupElement {
        assert_eq!(coords.len(), self.factors.len());
        let mut idx = 0usize;
        for ((&c, &d), &w) in coords.iter().zip(&self.factors).zip(&self.weights) {
            assert!(c < d, "coordinate {c} out of range for factor {d}");
            idx += c as usize * w;
        }
        GroupElement(idx)
    }

    #[inline]
    pub(crate) fn add_index(&self, a: usize, b: usize) -> usize {
        if self.factors.len() == 1 {
            let s = a + b;
            return if s >= self.order { s - self.order } else { s };
        }
        let mut out = 0usize;
        let mut ra = a;
        let mut rb = b;
        for (&d, &w) in self.factors.iter().zip(&self.weights) {
            let d = d as usize;
            let ca = ra / w;
            let cb = rb / w;
            ra %= w;
            rb %= w;
            let mut c = ca + cb;
            if c >= d {
                c -= d;
            }
            out += c * w;
        }
        out
    }

    #[inline]
    pub(crate) fn neg_index(&self, a: usize) -> usize {
        if self.factors.len() == 1 {
            return if a == 0 { 0 } else { self.order - a };
        }
        let mut out = 0usize;
        let mut ra = a;
        for (&d, &w) in self.factors.iter().zip(&self.weights) {
            let d = d as usize;
            let c = ra / w;
            ra %= w;
            if c != 0 {
                out += (d - c) * w;
            }
        }
        out
    }

    /// Coordinatewise sum modulo each invariant factor.
    pub fn add(&self, a: GroupElement, b: GroupElement) -> GroupElement {
        assert!(a.0 < self.order && b.0 < self.order, "element out of range for {self}");
        GroupElement(self.add_index(a.0, b.0))
    }

    /// Additive inverse.
    pub fn neg(&self, a: GroupElement) -> GroupElement {
        assert!(a.0 < self.order, "element out of range for {self}");
        GroupElement(self.neg_index(a.0))
    }

    pub fn sub(&self, a: GroupElement, b: GroupElement) -> GroupElement {
        self.add(a, self.neg(b))
    }

    /// Sum of `n` copies of `a`.
    pub fn scale(&self, a: GroupElement, n: usize) -> GroupElement {
        let mut acc = 0usize;
        for _ in 0..n {
            acc = self.add_index(acc, a.0);
        }
        GroupElement(acc)
    }

    pub fn elements(&self) -> impl Iterator<Item = GroupElement> {
        (0..self.order).map(GroupElement)
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "C1");
        }
        let parts: Vec<String> = self.factors.iter().map(|d| format!("C{d}")).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// Parse a group descriptor: `C<n>`, `C<n1>xC<n2>x…`, or a bare integer
/// (meaning the cyclic group). Case-insensitive; the result is canonical, so
/// `C2xC3` parses to `C6`.
pub fn parse_group_spec(text: &str) -> Result<GroupSpec, GroupError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(GroupError::Malformed(text.to_string()));
    }
    if t.bytes().all(|b| b.is_ascii_digit()) {
        let n: u64 = t.parse().map_err(|_| GroupError::Malformed(text.to_string()))?;
        if n < 2 {
            return Err(GroupError::FactorTooSmall(n));
        }
        return GroupSpec::from_components(&[n]);
    }
    let mut components = Vec::new();
    for part in t.split(['x', 'X']) {
        let part = part.trim();
        let digits = part
            .strip_prefix(['c', 'C'])
            .ok_or_else(|| GroupError::Malformed(text.to_string()))?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(GroupError::Malformed(text.to_string()));
        }
        let n: u64 = digits.parse().map_err(|_| GroupError::Malformed(text.to_string()))?;
        if n < 2 {
            return Err(GroupError::FactorTooSmall(n));
        }
        components.push(n);
    }
    GroupSpec::from_components(&components)
}

/// All isomorphism classes of abelian groups of order `n`, one `GroupSpec`
/// per class, in descending lexicographic order of the invariant-factor
/// lists (so the cyclic group comes first).
pub fn enumerate_abelian_groups(n: u64) -> Vec<GroupSpec> {
    assert!(n >= 1);
    if n == 1 {
        return vec![GroupSpec::trivial()];
    }
    let prime_powers = factorize(n);
    // Partitions of each exponent, each partition sorted descending.
    let per_prime: Vec<(u64, Vec<Vec<u32>>)> = prime_powers
        .iter()
        .map(|&(p, e)| (p, partitions(e)))
        .collect();
    let mut specs = Vec::new();
    let mut choice = vec![0usize; per_prime.len()];
    loop {
        let chain_len = per_prime
            .iter()
            .zip(&choice)
            .map(|((_, parts), &c)| parts[c].len())
            .max()
            .unwrap();
        let mut factors: Vec<u64> = (0..chain_len)
            .map(|j| {
                per_prime
                    .iter()
                    .zip(&choice)
                    .map(|((p, parts), &c)| parts[c].get(j).map_or(1, |&e| p.pow(e)))
                    .product()
            })
            .collect();
        factors.reverse();
        specs.push(GroupSpec::from_invariant_factors(factors));
        // Odometer over the partition choices.
        let mut i = 0;
        loop {
            if i == choice.len() {
                let mut out = specs;
                out.sort_by(|a, b| b.factors.cmp(&a.factors));
                return out;
            }
            choice[i] += 1;
            if choice[i] < per_prime[i].1.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Integer partitions of `e`, parts descending, in a fixed order.
fn partitions(e: u32) -> Vec<Vec<u32>> {
    fn rec(remaining: u32, max_part: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if remaining == 0 {
            out.push(prefix.clone());
            return;
        }
        let top = max_part.min(remaining);
        for part in (1..=top).rev() {
            prefix.push(part);
            rec(remaining - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(e, e, &mut Vec::new(), &mut out);
    out
}

/// A subgroup given by its member set, with one representative per coset.
///
/// Only the index-p subgroups used by the coset machinery are constructed
/// here; `project` maps an element to the position of its coset in
/// `coset_reps`, which for these subgroups is a homomorphism onto Z/p.
#[derive(Clone, Debug)]
pub struct Subgroup {
    group: Arc<GroupSpec>,
    members: GroupSubset,
    index: usize,
    coset_reps: Vec<GroupElement>,
    coset_of: Vec<u32>,
}

impl Subgroup {
    pub fn group(&self) -> &Arc<GroupSpec> {
        &self.group
    }

    pub fn members(&self) -> &GroupSubset {
        &self.members
    }

    /// Number of cosets (G : H).
    pub fn index(&self) -> usize {
        self.index
    }

    /// Subgroup order |H| = |G| / (G : H).
    pub fn order(&self) -> usize {
        self.group.order() / self.index
    }

    /// One representative per coset, identity first; the smallest-index
    /// elements hitting pairwise distinct cosets.
    pub fn coset_reps(&self) -> &[GroupElement] {
        &self.coset_reps
    }

    pub fn contains(&self, a: GroupElement) -> bool {
        self.members.contains(a)
    }

    /// Index i such that `a` lies in `coset_reps[i] + H`.
    pub fn project(&self, a: GroupElement) -> usize {
        self.coset_of[a.0] as usize
    }

    /// The coset `rep + H` as a subset, where `rep = coset_reps[class]`.
    pub fn coset(&self, class: usize) -> GroupSubset {
        self.members.translate(self.coset_reps[class])
    }

    /// The quotient G/H as a cyclic group spec of order `index`.
    pub fn quotient_spec(&self) -> Arc<GroupSpec> {
        Arc::new(GroupSpec::cyclic(self.index as u64))
    }
}

/// One subgroup of index `p`: the kernel of the fixed surjection G → C_p
/// that reduces the last coordinate whose factor `p` divides, modulo `p`.
///
/// Deterministic even when several index-p subgroups exist.
pub fn subgroup_of_index_p(group: &Arc<GroupSpec>, p: u64) -> Result<Subgroup, GroupError> {
    if !is_prime(p) {
        return Err(GroupError::NotPrime(p));
    }
    if group.order() as u64 % p != 0 {
        return Err(GroupError::DoesNotDivide { p, order: group.order() as u64 });
    }
    // Invariant factors form a divisibility chain, so the last coordinate
    // always qualifies; scanning keeps the choice explicit.
    let coord = group
        .factors
        .iter()
        .rposition(|&d| d % p == 0)
        .expect("p divides the order, so it divides some factor");
    let w = group.weights[coord];
    let d = group.factors[coord] as usize;
    let pu = p as usize;

    let mut members = GroupSubset::empty(group);
    let mut coset_of = vec![0u32; group.order()];
    for i in 0..group.order() {
        let c = (i / w) % d;
        let class = c % pu;
        coset_of[i] = class as u32;
        if class == 0 {
            members.insert(GroupElement(i));
        }
    }
    // The p smallest indices hit pairwise distinct cosets: index j < p has
    // last-qualifying coordinate j.
    let coset_reps: Vec<GroupElement> = (0..pu).map(GroupElement).collect();
    debug_assert!(coset_reps.iter().enumerate().all(|(j, &r)| coset_of[r.0] as usize == j));
    Ok(Subgroup { group: Arc::clone(group), members, index: pu, coset_reps, coset_of })
}

/// Free-function form of [`Subgroup::project`].
pub fn quotient_project(h: &Subgroup, a: GroupElement) -> usize {
    h.project(a)
}

/// Smallest prime divisor of the group order, if the group is nontrivial.
pub fn smallest_prime(group: &GroupSpec) -> Option<u64> {
    smallest_prime_divisor(group.order() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arc(s: GroupSpec) -> Arc<GroupSpec> {
        Arc::new(s)
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_group_spec("C91").unwrap().invariant_factors(), &[91]);
        assert_eq!(parse_group_spec("C2xC3").unwrap().invariant_factors(), &[6]);
        assert_eq!(parse_group_spec("C2xC4").unwrap().invariant_factors(), &[2, 4]);
        assert_eq!(parse_group_spec("91").unwrap().invariant_factors(), &[91]);
        assert_eq!(parse_group_spec("c2Xc2xc2").unwrap().invariant_factors(), &[2, 2, 2]);
        assert_eq!(parse_group_spec("C6xC4").unwrap().invariant_factors(), &[2, 12]);
        assert!(matches!(parse_group_spec("C1"), Err(GroupError::FactorTooSmall(1))));
        assert!(matches!(parse_group_spec("C0xC5"), Err(GroupError::FactorTooSmall(0))));
        assert!(matches!(parse_group_spec("D8"), Err(GroupError::Malformed(_))));
        assert!(matches!(parse_group_spec(""), Err(GroupError::Malformed(_))));
        assert!(matches!(parse_group_spec("CxC2"), Err(GroupError::Malformed(_))));
    }

    #[test]
    fn display_roundtrip() {
        for text in ["C91", "C2xC4", "C2xC2xC2", "C6"] {
            let g = parse_group_spec(text).unwrap();
            assert_eq!(g.to_string(), text);
        }
        assert_eq!(GroupSpec::trivial().to_string(), "C1");
    }

    #[test]
    fn add_examples() {
        let c6 = GroupSpec::cyclic(6);
        assert_eq!(c6.add(GroupElement(4), GroupElement(5)), GroupElement(3));
        let g = parse_group_spec("C2xC4").unwrap();
        let a = g.from_coords(&[1, 3]);
        let b = g.from_coords(&[1, 2]);
        assert_eq!(g.coords_of(g.add(a, b)), vec![0, 1]);
        for i in 0..g.order() {
            assert_eq!(g.add(GroupElement(i), g.zero()), GroupElement(i));
        }
    }

    #[test]
    fn coords_bijection_and_identity() {
        for text in ["C12", "C2xC6", "C2xC2xC4"] {
            let g = parse_group_spec(text).unwrap();
            assert_eq!(g.coords_of(g.zero()), vec![0; g.invariant_factors().len()]);
            for a in g.elements() {
                assert_eq!(g.from_coords(&g.coords_of(a)), a);
            }
        }
    }

    #[test]
    fn group_axioms_sampled() {
        for n in 2..=64u64 {
            for g in enumerate_abelian_groups(n) {
                let m = g.order();
                // Sampled triples with a fixed stride keep this cheap.
                for a in (0..m).step_by(1 + m / 7) {
                    for b in (0..m).step_by(1 + m / 5) {
                        let (a, b) = (GroupElement(a), GroupElement(b));
                        assert_eq!(g.add(a, b), g.add(b, a));
                        for c in (0..m).step_by(1 + m / 3) {
                            let c = GroupElement(c);
                            assert_eq!(g.add(g.add(a, b), c), g.add(a, g.add(b, c)));
                        }
                        assert_eq!(g.add(a, g.neg(a)), g.zero());
                    }
                }
            }
        }
    }

    #[test]
    fn enumerate_examples() {
        let f = |n: u64| -> Vec<Vec<u64>> {
            enumerate_abelian_groups(n)
                .into_iter()
                .map(|g| g.invariant_factors().to_vec())
                .collect()
        };
        assert_eq!(f(8), vec![vec![8], vec![2, 4], vec![2, 2, 2]]);
        assert_eq!(f(12), vec![vec![12], vec![2, 6]]);
        assert_eq!(f(7), vec![vec![7]]);
        assert_eq!(f(1).len(), 1);
        assert_eq!(f(36), vec![vec![36], vec![3, 12], vec![2, 18], vec![6, 6]]);
    }

    #[test]
    fn enumerate_count_matches_partition_products() {
        // Independent oracle: the class count is the product over prime
        // powers p^e of the partition count of e.
        fn partition_count(e: u32) -> usize {
            partitions(e).len()
        }
        for n in 1..=64u64 {
            let expected: usize = factorize(n).iter().map(|&(_, e)| partition_count(e)).product();
            let got = enumerate_abelian_groups(n).len();
            assert_eq!(got, expected.max(1), "order {n}");
        }
        // Hand-counted spot values.
        assert_eq!(enumerate_abelian_groups(16).len(), 5);
        assert_eq!(enumerate_abelian_groups(24).len(), 3);
        assert_eq!(enumerate_abelian_groups(64).len(), 11);
    }

    #[test]
    fn subgroup_examples() {
        let c15 = arc(GroupSpec::cyclic(15));
        let h = subgroup_of_index_p(&c15, 3).unwrap();
        assert_eq!(h.index(), 3);
        assert_eq!(h.members().indices(), vec![0, 3, 6, 9, 12]);
        assert_eq!(h.coset_reps().to_vec(), vec![GroupElement(0), GroupElement(1), GroupElement(2)]);

        let c91 = arc(GroupSpec::cyclic(91));
        let h7 = subgroup_of_index_p(&c91, 7).unwrap();
        assert_eq!(h7.order(), 13);
        assert!(h7.members().indices().iter().all(|i| i % 7 == 0));
        let k13 = subgroup_of_index_p(&c91, 13).unwrap();
        assert_eq!(k13.order(), 7);
        assert!(k13.members().indices().iter().all(|i| i % 13 == 0));

        assert!(matches!(subgroup_of_index_p(&c91, 4), Err(GroupError::NotPrime(4))));
        assert!(matches!(
            subgroup_of_index_p(&c91, 3),
            Err(GroupError::DoesNotDivide { p: 3, order: 91 })
        ));
    }

    #[test]
    fn subgroup_closure_and_size() {
        for n in [12u64, 16, 18, 24, 36] {
            for g in enumerate_abelian_groups(n) {
                let g = arc(g);
                for (p, _) in factorize(n) {
                    let h = subgroup_of_index_p(&g, p).unwrap();
                    assert_eq!(h.members().cardinality() * h.index(), g.order());
                    assert!(h.contains(g.zero()));
                    for a in h.members().iter() {
                        assert!(h.contains(g.neg(a)));
                        for b in h.members().iter() {
                            assert!(h.contains(g.add(a, b)), "closure fails in {g} at {a}+{b}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn projection_examples_and_homomorphism() {
        let c15 = arc(GroupSpec::cyclic(15));
        let h = subgroup_of_index_p(&c15, 3).unwrap();
        assert_eq!(h.project(GroupElement(7)), 1); // 7 − 1 = 6 ∈ H
        for a in h.members().iter() {
            assert_eq!(h.project(a), 0);
        }
        let c91 = arc(GroupSpec::cyclic(91));
        let h7 = subgroup_of_index_p(&c91, 7).unwrap();
        assert_eq!(h7.project(GroupElement(10)), 3);

        // Exhaustive homomorphism check for prime index, |G| ≤ 100.
        for n in 2..=100u64 {
            for g in enumerate_abelian_groups(n) {
                let g = arc(g);
                let p = smallest_prime(&g).unwrap();
                let h = subgroup_of_index_p(&g, p).unwrap();
                let pu = p as usize;
                for a in g.elements() {
                    for b in (0..g.order()).step_by(1 + g.order() / 11).map(GroupElement) {
                        assert_eq!(
                            (h.project(a) + h.project(b)) % pu,
                            h.project(g.add(a, b)),
                        );
                    }
                }
            }
        }
    }
}
