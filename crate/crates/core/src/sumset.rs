//! Exact set arithmetic: sumsets, restricted sumsets Σ_k, the subset-sum
//! closure Σ, witness extraction, and arithmetic-progression detection.
//!
//! Σ_k(A) is the set of sums of exactly k distinct elements of A (with
//! Σ₀(A) = {0}), and Σ(A) = ⋃_{k≥1} Σ_k(A). The closure is computed
//! incrementally as R ← R ∪ (R + a) ∪ {a} per element; the layered table
//! comes from the usual one-pass subset-sum DP, updating layers from high k
//! to low k.

use crate::group::GroupElement;
use crate::subset::GroupSubset;

/// Exact sumset `a + b`.
///
/// Panics if the operands live in different groups or either is empty (the
/// sumset of an empty family is not defined here).
pub fn sumset(a: &GroupSubset, b: &GroupSubset) -> GroupSubset {
    assert!(a.group() == b.group(), "sumset over mismatched groups");
    assert!(!a.is_empty() && !b.is_empty(), "sumset of an empty set");
    // Shift the larger set by the elements of the smaller one.
    let (base, shifts) = if a.cardinality() >= b.cardinality() { (a, b) } else { (b, a) };
    let mut acc = GroupSubset::empty(a.group());
    for c in shifts.iter() {
        acc.union_with(&base.translate(c));
        if acc.cardinality() == a.group().order() {
            break;
        }
    }
    acc
}

/// Left fold of [`sumset`] over a nonempty family.
pub fn iterated_sumset(sets: &[GroupSubset]) -> GroupSubset {
    assert!(!sets.is_empty(), "iterated sumset of an empty family");
    let mut acc = sets[0].clone();
    for s in &sets[1..] {
        acc = sumset(&acc, s);
    }
    acc
}

/// All restricted-sumset layers Σ₀(A) … Σ_{|A|}(A).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictedSumsetTable {
    source: GroupSubset,
    layers: Vec<GroupSubset>,
}

impl RestrictedSumsetTable {
    pub fn source(&self) -> &GroupSubset {
        &self.source
    }

    /// Σ_k of the source set; `k ≤ |A|`.
    pub fn layer(&self, k: usize) -> &GroupSubset {
        &self.layers[k]
    }

    pub fn layers(&self) -> &[GroupSubset] {
        &self.layers
    }

    /// ⋃_{k≥1} Σ_k — must agree with [`sigma`] on the source.
    pub fn sigma_union(&self) -> GroupSubset {
        let mut acc = GroupSubset::empty(self.source.group());
        for layer in &self.layers[1..] {
            acc.union_with(layer);
        }
        acc
    }
}

/// Compute every layer Σ₀ … Σ_{|A|} by the one-pass DP.
pub fn restricted_sumsets(a: &GroupSubset) -> RestrictedSumsetTable {
    let group = a.group();
    let m = a.cardinality();
    let mut layers: Vec<GroupSubset> = Vec::with_capacity(m + 1);
    let mut zero = GroupSubset::empty(group);
    zero.insert(group.zero());
    layers.push(zero);
    for _ in 0..m {
        layers.push(GroupSubset::empty(group));
    }
    for (processed, e) in a.iter().enumerate() {
        for k in (1..=processed + 1).rev() {
            let shifted = layers[k - 1].translate(e);
            layers[k].union_with(&shifted);
        }
    }
    RestrictedSumsetTable { source: a.clone(), layers }
}

/// The closure Σ(A): all sums of nonempty subsets of distinct elements.
/// Σ(∅) = ∅.
pub fn sigma(a: &GroupSubset) -> GroupSubset {
    let mut acc = GroupSubset::empty(a.group());
    let full = a.group().order();
    for e in a.iter() {
        let shifted = acc.translate(e);
        acc.union_with(&shifted);
        acc.insert(e);
        if acc.cardinality() == full {
            break;
        }
    }
    acc
}

/// Σ(A) together with the per-element snapshots needed to reconstruct
/// witnesses. The fast path ([`sigma`]) skips the snapshots.
pub struct SigmaTrace {
    elements: Vec<GroupElement>,
    /// snapshots[j] = Σ of the first j+1 elements.
    snapshots: Vec<GroupSubset>,
}

pub fn sigma_with_trace(a: &GroupSubset) -> (GroupSubset, SigmaTrace) {
    let mut acc = GroupSubset::empty(a.group());
    let mut elements = Vec::with_capacity(a.cardinality());
    let mut snapshots = Vec::with_capacity(a.cardinality());
    for e in a.iter() {
        let shifted = acc.translate(e);
        acc.union_with(&shifted);
        acc.insert(e);
        elements.push(e);
        snapshots.push(acc.clone());
    }
    (acc, SigmaTrace { elements, snapshots })
}

impl SigmaTrace {
    /// One nonempty subset of the traced set summing to `x`, or None.
    pub fn witness(&self, x: GroupElement) -> Option<GroupSubset> {
        let j = self.snapshots.iter().position(|s| s.contains(x))?;
        let group = self.snapshots[0].group().clone();
        let mut picked = GroupSubset::empty(&group);
        let mut target = x;
        let mut level = j;
        loop {
            // `target` first became reachable at `level`, so element `level`
            // is either the target itself or part of its sum.
            let e = self.elements[level];
            if target == e && (level == 0 || !self.snapshots[level - 1].contains(target)) {
                picked.insert(e);
                break;
            }
            if level > 0 && self.snapshots[level - 1].contains(target) {
                level -= 1;
                continue;
            }
            // target − e must be reachable strictly below this level.
            picked.insert(e);
            target = group.sub(target, e);
            debug_assert!(level > 0 && self.snapshots[level - 1].contains(target));
            level -= 1;
        }
        debug_assert_eq!(picked.total_sum(), x);
        Some(picked)
    }
}

/// One nonempty subset of `a` summing to `x`, or None when `x ∉ Σ(a)`.
pub fn sigma_witness(a: &GroupSubset, x: GroupElement) -> Option<GroupSubset> {
    let (_, trace) = sigma_with_trace(a);
    trace.witness(x)
}

/// Restricted-sumset table with the prefix snapshots needed to extract
/// which k-subset realizes a target.
pub struct RestrictedProver {
    elements: Vec<GroupElement>,
    /// prefix[j] = layers of the first j elements (j = 0..=m).
    prefix: Vec<Vec<GroupSubset>>,
}

impl RestrictedProver {
    pub fn new(a: &GroupSubset) -> RestrictedProver {
        let group = a.group();
        let elements: Vec<GroupElement> = a.iter().collect();
        let m = elements.len();
        let mut zero = GroupSubset::empty(group);
        zero.insert(group.zero());
        let mut layers: Vec<GroupSubset> = vec![zero];
        layers.extend((0..m).map(|_| GroupSubset::empty(group)));
        let mut prefix = Vec::with_capacity(m + 1);
        prefix.push(layers.clone());
        for (processed, &e) in elements.iter().enumerate() {
            for k in (1..=processed + 1).rev() {
                let shifted = layers[k - 1].translate(e);
                layers[k].union_with(&shifted);
            }
            prefix.push(layers.clone());
        }
        RestrictedProver { elements, prefix }
    }

    pub fn layer(&self, k: usize) -> &GroupSubset {
        &self.prefix[self.elements.len()][k]
    }

    /// A k-subset of the source summing to `target`, or None.
    pub fn witness(&self, k: usize, target: GroupElement) -> Option<GroupSubset> {
        let m = self.elements.len();
        if k > m || !self.prefix[m][k].contains(target) {
            return None;
        }
        let group = self.prefix[0][0].group().clone();
        let mut picked = GroupSubset::empty(&group);
        let mut kk = k;
        let mut t = target;
        for j in (1..=m).rev() {
            if kk == 0 {
                break;
            }
            if self.prefix[j - 1][kk].contains(t) {
                continue; // element j−1 not needed
            }
            let e = self.elements[j - 1];
            picked.insert(e);
            t = group.sub(t, e);
            kk -= 1;
            debug_assert!(self.prefix[j - 1][kk].contains(t));
        }
        debug_assert_eq!(kk, 0);
        debug_assert_eq!(t, group.zero());
        debug_assert_eq!(picked.cardinality(), k);
        Some(picked)
    }
}

/// True if `a` is an arithmetic progression with difference `d`, i.e.
/// `a = { start + νd | ν ∈ [0, |a|−1] }` for some start.
pub fn is_ap_with(a: &GroupSubset, d: GroupElement) -> bool {
    let group = a.group();
    if a.is_empty() {
        return false;
    }
    if a.cardinality() == 1 {
        return true; // any difference describes a single point
    }
    'start: for m in a.iter() {
        let mut cur = m;
        let mut walked = GroupSubset::empty(group);
        for _ in 0..a.cardinality() {
            if !walked.insert(cur) {
                continue 'start; // revisited before covering |a| points
            }
            cur = group.add(cur, d);
        }
        if walked == *a {
            return true;
        }
    }
    false
}

/// Some difference `d` making `a` an arithmetic progression, smallest
/// element index first, or None. Singletons report difference 0.
pub fn detect_ap(a: &GroupSubset) -> Option<GroupElement> {
    assert!(!a.is_empty(), "detect_ap on the empty set");
    if a.cardinality() == 1 {
        return Some(a.group().zero());
    }
    a.group().elements().find(|&d| d.0 != 0 && is_ap_with(a, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{parse_group_spec, GroupSpec};
    use std::sync::Arc;

    fn cyclic(n: u64) -> Arc<GroupSpec> {
        Arc::new(GroupSpec::cyclic(n))
    }

    fn set(g: &Arc<GroupSpec>, idx: &[usize]) -> GroupSubset {
        GroupSubset::from_indices(g, idx)
    }

    /// Independent oracle: sumset by double loop over element pairs.
    fn sumset_naive(a: &GroupSubset, b: &GroupSubset) -> GroupSubset {
        let mut out = GroupSubset::empty(a.group());
        for x in a.iter() {
            for y in b.iter() {
                out.insert(a.group().add(x, y));
            }
        }
        out
    }

    /// Independent oracle: Σ_k and Σ by explicit subset enumeration.
    fn sigma_layers_naive(a: &GroupSubset) -> Vec<GroupSubset> {
        let elems: Vec<GroupElement> = a.iter().collect();
        let g = a.group();
        let mut layers: Vec<GroupSubset> = (0..=elems.len()).map(|_| GroupSubset::empty(g)).collect();
        for mask in 0u32..(1 << elems.len()) {
            let k = mask.count_ones() as usize;
            let mut s = 0usize;
            for (i, e) in elems.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    s = g.add_index(s, e.0);
                }
            }
            layers[k].insert(GroupElement(s));
        }
        layers
    }

    #[test]
    fn sumset_examples() {
        let z5 = cyclic(5);
        assert_eq!(sumset(&set(&z5, &[0, 1]), &set(&z5, &[0, 2])).indices(), vec![0, 1, 2, 3]);
        let a = set(&z5, &[1, 3, 4]);
        assert_eq!(sumset(&a, &set(&z5, &[0])), a);
        // Fold of three sets covers Z/7; checked against the pairwise oracle.
        let z7 = cyclic(7);
        let sets = [set(&z7, &[1, 2]), set(&z7, &[0, 3]), set(&z7, &[0, 1, 5])];
        let fold = iterated_sumset(&sets);
        let naive = sumset_naive(&sumset_naive(&sets[0], &sets[1]), &sets[2]);
        assert_eq!(fold, naive);
        assert_eq!(fold.cardinality(), 7);
    }

    #[test]
    fn sumset_matches_naive_oracle() {
        let z13 = cyclic(13);
        let pairs = [
            (vec![0, 1, 5], vec![2, 3]),
            (vec![1], vec![12]),
            (vec![0, 2, 4, 6, 8], vec![1, 3, 5]),
        ];
        for (xa, xb) in pairs {
            let a = set(&z13, &xa);
            let b = set(&z13, &xb);
            assert_eq!(sumset(&a, &b), sumset_naive(&a, &b));
            assert_eq!(sumset(&a, &b), sumset(&b, &a));
        }
        let g24 = Arc::new(parse_group_spec("C2xC12").unwrap());
        let a = set(&g24, &[1, 5, 13]);
        let b = set(&g24, &[0, 7, 23]);
        assert_eq!(sumset(&a, &b), sumset_naive(&a, &b));
    }

    #[test]
    #[should_panic(expected = "mismatched groups")]
    fn sumset_group_mismatch_panics() {
        let a = set(&cyclic(5), &[1]);
        let b = set(&cyclic(7), &[1]);
        let _ = sumset(&a, &b);
    }

    #[test]
    #[should_panic(expected = "empty set")]
    fn sumset_empty_panics() {
        let g = cyclic(5);
        let _ = sumset(&set(&g, &[1]), &GroupSubset::empty(&g));
    }

    #[test]
    fn iterated_examples() {
        let z7 = cyclic(7);
        let one = set(&z7, &[2, 5]);
        assert_eq!(iterated_sumset(std::slice::from_ref(&one)), one);
        // Six copies of {0,1} cover Z/7 (bound min{7, 2·6−6+1} = 7 is met).
        let sets: Vec<GroupSubset> = (0..6).map(|_| set(&z7, &[0, 1])).collect();
        assert_eq!(iterated_sumset(&sets).cardinality(), 7);
        let z5 = cyclic(5);
        let singles = [set(&z5, &[1]), set(&z5, &[2]), set(&z5, &[3])];
        assert_eq!(iterated_sumset(&singles).indices(), vec![1]);
    }

    #[test]
    fn restricted_examples() {
        let z7 = cyclic(7);
        let a = set(&z7, &[1, 2, 3]);
        let table = restricted_sumsets(&a);
        assert_eq!(table.layer(0).indices(), vec![0]);
        assert_eq!(table.layer(2).indices(), vec![3, 4, 5]);
        assert_eq!(table.layer(3).indices(), vec![6]);
        // Pairwise bound |Σ₂| ≥ min{13, 2·2+1} over every 4-subset of Z/13.
        let z13 = cyclic(13);
        let mut checked = 0u32;
        for mask in 0u32..(1 << 13) {
            if mask.count_ones() != 4 {
                continue;
            }
            let idx: Vec<usize> = (0..13).filter(|i| mask & (1 << i) != 0).collect();
            let t = restricted_sumsets(&set(&z13, &idx));
            assert!(t.layer(2).cardinality() >= 5, "Σ₂ too small for {idx:?}");
            checked += 1;
        }
        assert_eq!(checked, 715); // C(13,4)
    }

    #[test]
    fn restricted_table_matches_enumeration() {
        let z11 = cyclic(11);
        for idx in [vec![1, 2, 3, 4, 5], vec![0, 1, 9, 10], vec![7]] {
            let a = set(&z11, &idx);
            let table = restricted_sumsets(&a);
            let naive = sigma_layers_naive(&a);
            for k in 0..=a.cardinality() {
                assert_eq!(table.layer(k), &naive[k], "layer {k} of {idx:?}");
            }
        }
    }

    #[test]
    fn sigma_examples() {
        let z5 = cyclic(5);
        assert_eq!(sigma(&set(&z5, &[1, 2])).indices(), vec![1, 2, 3]);
        let z15 = cyclic(15);
        assert_eq!(sigma(&GroupSubset::empty(&z15)).cardinality(), 0);
        // {3,6,9,12,1} closes to H ∪ (1+H), H = ⟨3⟩: 10 elements.
        let s = set(&z15, &[3, 6, 9, 12, 1]);
        let closure = sigma(&s);
        assert_eq!(closure.cardinality(), 10);
        assert_eq!(closure.indices(), vec![0, 1, 3, 4, 6, 7, 9, 10, 12, 13]);
        // Against the enumeration oracle.
        let naive = sigma_layers_naive(&s);
        let mut union = GroupSubset::empty(&z15);
        for layer in &naive[1..] {
            union.union_with(layer);
        }
        assert_eq!(closure, union);
    }

    #[test]
    fn sigma_union_of_layers_agrees() {
        // Exhaustive over all subsets of G \ {0} for small cyclic groups.
        for n in [6u64, 9, 12, 16] {
            let g = cyclic(n);
            let m = n as usize - 1;
            for mask in 0u32..(1u32 << m) {
                let idx: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
                let a = set(&g, &idx);
                assert_eq!(restricted_sumsets(&a).sigma_union(), sigma(&a));
            }
        }
    }

    #[test]
    fn sigma_witness_examples() {
        let z5 = cyclic(5);
        let w = sigma_witness(&set(&z5, &[1, 2]), GroupElement(3)).unwrap();
        assert_eq!(w.indices(), vec![1, 2]);
        let z15 = cyclic(15);
        assert!(sigma_witness(&set(&z15, &[3, 6, 9, 12, 1]), GroupElement(2)).is_none());
        let z7 = cyclic(7);
        let a = set(&z7, &[1, 2, 3]);
        let w = sigma_witness(&a, GroupElement(6)).unwrap();
        assert!(!w.is_empty() && w.is_subset_of(&a));
        assert_eq!(w.total_sum(), GroupElement(6));
    }

    #[test]
    fn sigma_witness_valid_for_every_target() {
        let z15 = cyclic(15);
        let a = set(&z15, &[3, 6, 9, 12, 1]);
        let closure = sigma(&a);
        for x in z15.elements() {
            match sigma_witness(&a, x) {
                Some(w) => {
                    assert!(closure.contains(x));
                    assert!(!w.is_empty());
                    assert!(w.is_subset_of(&a));
                    assert_eq!(w.total_sum(), x);
                }
                None => assert!(!closure.contains(x)),
            }
        }
    }

    #[test]
    fn restricted_prover_witnesses() {
        let z13 = cyclic(13);
        let a = set(&z13, &[1, 2, 5, 11]);
        let prover = RestrictedProver::new(&a);
        let table = restricted_sumsets(&a);
        for k in 0..=4usize {
            for x in z13.elements() {
                match prover.witness(k, x) {
                    Some(w) => {
                        assert!(table.layer(k).contains(x));
                        assert_eq!(w.cardinality(), k);
                        assert!(w.is_subset_of(&a));
                        assert_eq!(w.total_sum(), x);
                    }
                    None => assert!(!table.layer(k).contains(x)),
                }
            }
        }
    }

    #[test]
    fn detect_ap_examples() {
        let z7 = cyclic(7);
        assert_eq!(detect_ap(&set(&z7, &[2, 4, 6])), Some(GroupElement(2)));
        assert_eq!(detect_ap(&set(&z7, &[0, 3])), Some(GroupElement(3)));
        assert_eq!(detect_ap(&set(&z7, &[0, 1, 3])), None);
        assert_eq!(detect_ap(&set(&z7, &[4])), Some(GroupElement(0)));
        // A full coset of a subgroup is an AP with the generator difference.
        let z8 = cyclic(8);
        assert!(is_ap_with(&set(&z8, &[0, 2, 4, 6]), GroupElement(2)));
        assert!(!is_ap_with(&set(&z8, &[0, 2, 4, 6]), GroupElement(3)));
    }

    #[test]
    fn sigma_monotone_sampled() {
        use rand_chacha::ChaCha8Rng;
        use rand_core::{RngCore, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = 3 + (rng.next_u64() % 98);
            let g = cyclic(n);
            let mut a = GroupSubset::empty(&g);
            let mut b = GroupSubset::empty(&g);
            for i in 1..n as usize {
                match rng.next_u64() % 3 {
                    0 => {
                        a.insert(GroupElement(i));
                        b.insert(GroupElement(i));
                    }
                    1 => {
                        b.insert(GroupElement(i));
                    }
                    _ => {}
                }
            }
            assert!(a.is_subset_of(&b));
            assert!(sigma(&a).is_subset_of(&sigma(&b)));
        }
    }

    #[test]
    fn complement_symmetry_small() {
        // Σ_k(A) = σ_total − Σ_{|A|−k}(A), exhaustive for |A| ≤ 8 in Z/11.
        let z11 = cyclic(11);
        for mask in 0u32..(1 << 10) {
            if mask.count_ones() > 8 {
                continue;
            }
            let idx: Vec<usize> = (0..10).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
            let a = set(&z11, &idx);
            let table = restricted_sumsets(&a);
            let total = a.total_sum();
            let m = a.cardinality();
            for k in 0..=m {
                let mirrored = table.layer(m - k).negate().translate(total);
                assert_eq!(table.layer(k), &mirrored, "k={k} A={idx:?}");
            }
        }
    }
}
