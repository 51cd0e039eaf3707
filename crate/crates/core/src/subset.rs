//! Bit-packed subsets of a group's element range.
//!
//! A subset is a flat bit array of length |G| with a cached population
//! count. Translation (adding a fixed element to every member) is the
//! workhorse: for cyclic groups it is a bit rotation, word-parallel on a
//! single word; otherwise it walks the set bits through the mixed-radix
//! addition.

use std::fmt;
use std::sync::Arc;

use crate::group::{GroupElement, GroupSpec};

const WORD: usize = 64;

#[derive(Clone)]
pub struct GroupSubset {
    group: Arc<GroupSpec>,
    words: Vec<u64>,
    card: usize,
}

impl PartialEq for GroupSubset {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group && self.words == other.words
    }
}
impl Eq for GroupSubset {}

impl GroupSubset {
    pub fn empty(group: &Arc<GroupSpec>) -> GroupSubset {
        let n = group.order();
        GroupSubset { group: Arc::clone(group), words: vec![0; n.div_ceil(WORD)], card: 0 }
    }

    pub fn full(group: &Arc<GroupSpec>) -> GroupSubset {
        let n = group.order();
        let mut words = vec![u64::MAX; n.div_ceil(WORD)];
        mask_tail(&mut words, n);
        GroupSubset { group: Arc::clone(group), words, card: n }
    }

    /// All nonzero elements, G \ {0}.
    pub fn nonzero(group: &Arc<GroupSpec>) -> GroupSubset {
        let mut s = GroupSubset::full(group);
        s.remove(GroupElement(0));
        s
    }

    pub fn singleton(group: &Arc<GroupSpec>, a: GroupElement) -> GroupSubset {
        let mut s = GroupSubset::empty(group);
        s.insert(a);
        s
    }

    pub fn from_indices(group: &Arc<GroupSpec>, indices: &[usize]) -> GroupSubset {
        let mut s = GroupSubset::empty(group);
        for &i in indices {
            s.insert(GroupElement(i));
        }
        s
    }

    pub fn group(&self) -> &Arc<GroupSpec> {
        &self.group
    }

    pub fn cardinality(&self) -> usize {
        debug_assert_eq!(self.card, self.words.iter().map(|w| w.count_ones() as usize).sum());
        self.card
    }

    pub fn is_empty(&self) -> bool {
        self.card == 0
    }

    pub fn contains(&self, a: GroupElement) -> bool {
        debug_assert!(a.0 < self.group.order());
        self.words[a.0 / WORD] & (1u64 << (a.0 % WORD)) != 0
    }

    /// Returns true if the element was newly inserted.
    pub fn insert(&mut self, a: GroupElement) -> bool {
        assert!(a.0 < self.group.order(), "element {} out of range", a.0);
        let w = &mut self.words[a.0 / WORD];
        let bit = 1u64 << (a.0 % WORD);
        if *w & bit != 0 {
            return false;
        }
        *w |= bit;
        self.card += 1;
        true
    }

    /// Returns true if the element was present.
    pub fn remove(&mut self, a: GroupElement) -> bool {
        assert!(a.0 < self.group.order(), "element {} out of range", a.0);
        let w = &mut self.words[a.0 / WORD];
        let bit = 1u64 << (a.0 % WORD);
        if *w & bit == 0 {
            return false;
        }
        *w &= !bit;
        self.card -= 1;
        true
    }

    pub fn iter(&self) -> Elements<'_> {
        Elements { words: &self.words, word_idx: 0, current: self.words.first().copied().unwrap_or(0) }
    }

    /// Sorted element indices; the serialization form used in reports.
    pub fn indices(&self) -> Vec<usize> {
        self.iter().map(|e| e.0).collect()
    }

    pub fn union_with(&mut self, other: &GroupSubset) {
        self.check_group(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        self.recount();
    }

    pub fn intersect_with(&mut self, other: &GroupSubset) {
        self.check_group(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
        self.recount();
    }

    pub fn subtract(&mut self, other: &GroupSubset) {
        self.check_group(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
        self.recount();
    }

    pub fn union(&self, other: &GroupSubset) -> GroupSubset {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn intersection(&self, other: &GroupSubset) -> GroupSubset {
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    pub fn difference(&self, other: &GroupSubset) -> GroupSubset {
        let mut out = self.clone();
        out.subtract(other);
        out
    }

    pub fn complement(&self) -> GroupSubset {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        mask_tail(&mut words, self.group.order());
        let card = self.group.order() - self.card;
        GroupSubset { group: Arc::clone(&self.group), words, card }
    }

    pub fn is_subset_of(&self, other: &GroupSubset) -> bool {
        self.check_group(other);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint_from(&self, other: &GroupSubset) -> bool {
        self.check_group(other);
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    /// The translate `self + c = { a + c | a ∈ self }`.
    pub fn translate(&self, c: GroupElement) -> GroupSubset {
        let mut out = GroupSubset::empty(&self.group);
        translate_words(&self.group, c.0, &self.words, &mut out.words);
        out.card = self.card;
        out
    }

    /// The pointwise negation `{ −a | a ∈ self }`.
    pub fn negate(&self) -> GroupSubset {
        let mut out = GroupSubset::empty(&self.group);
        for a in self.iter() {
            out.insert(GroupElement(self.group.neg_index(a.0)));
        }
        out
    }

    /// Sum of all members (the empty sum is the identity).
    pub fn total_sum(&self) -> GroupElement {
        let mut acc = 0usize;
        for a in self.iter() {
            acc = self.group.add_index(acc, a.0);
        }
        GroupElement(acc)
    }

    fn recount(&mut self) {
        self.card = self.words.iter().map(|w| w.count_ones() as usize).sum();
    }

    #[track_caller]
    fn check_group(&self, other: &GroupSubset) {
        assert!(self.group == other.group, "subsets over different groups: {} vs {}", self.group, other.group);
    }
}

impl fmt::Debug for GroupSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupSubset({}, {})", self.group, self)
    }
}

impl fmt::Display for GroupSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, e) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", e.0)?;
        }
        write!(f, "]")
    }
}

pub struct Elements<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
}

impl Iterator for Elements<'_> {
    type Item = GroupElement;

    fn next(&mut self) -> Option<GroupElement> {
        while self.current == 0 {
            self.word_idx += 1;
            if self.word_idx >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
        let bit = self.current.trailing_zeros() as usize;
        self.current &= self.current - 1;
        Some(GroupElement(self.word_idx * WORD + bit))
    }
}

fn mask_tail(words: &mut [u64], n: usize) {
    let rem = n % WORD;
    if rem != 0 {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << rem) - 1;
        }
    }
}

/// Write `src + shift` into `dst` (dst is cleared first).
///
/// Cyclic groups of order ≤ 64 use a single-word bit rotation; everything
/// else walks the set bits.
pub(crate) fn translate_words(group: &GroupSpec, shift: usize, src: &[u64], dst: &mut [u64]) {
    let n = group.order();
    debug_assert!(shift < n);
    if shift == 0 {
        dst.copy_from_slice(src);
        return;
    }
    if group.is_cyclic() && n <= WORD {
        let mask = if n == WORD { u64::MAX } else { (1u64 << n) - 1 };
        let w = src[0];
        dst[0] = ((w << shift) | (w >> (n - shift))) & mask;
        return;
    }
    dst.fill(0);
    for (wi, &w) in src.iter().enumerate() {
        let mut bits = w;
        while bits != 0 {
            let b = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let j = group.add_index(wi * WORD + b, shift);
            dst[j / WORD] |= 1u64 << (j % WORD);
        }
    }
}
