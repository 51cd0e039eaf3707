//! Colexicographic k-subset enumeration over the universe {1, …, m}.
//!
//! Colex order: S precedes T iff the largest element of their symmetric
//! difference lies in T. Equivalently, subsets are grouped by their maximum
//! element, ascending. The enumerator reports which positions changed on
//! each step so callers can reuse incremental state for the stable suffix
//! (the large elements change rarely).

/// Enumerates k-subsets of {1, …, m} in colexicographic order.
///
/// The current subset is exposed as an ascending slice of element values.
pub struct ColexCombinations {
    m: usize,
    k: usize,
    current: Vec<usize>,
    fresh: bool,
    done: bool,
}

impl ColexCombinations {
    pub fn new(m: usize, k: usize) -> ColexCombinations {
        let done = k > m || k == 0;
        ColexCombinations { m, k, current: (1..=k).collect(), fresh: true, done }
    }

    pub fn current(&self) -> &[usize] {
        &self.current
    }

    /// Advance to the first/next subset. Returns the lowest position whose
    /// value changed (positions at and above it were recomputed; everything
    /// strictly above the returned index is unchanged except on the first
    /// call, which reports position k−1). None when exhausted.
    pub fn advance(&mut self) -> Option<usize> {
        if self.done {
            return None;
        }
        if self.fresh {
            self.fresh = false;
            return Some(self.k - 1);
        }
        // Find the lowest position that can move right.
        for i in 0..self.k {
            let limit = if i + 1 < self.k { self.current[i + 1] - 1 } else { self.m };
            if self.current[i] < limit {
                self.current[i] += 1;
                for (j, slot) in self.current[..i].iter_mut().enumerate() {
                    *slot = j + 1;
                }
                return Some(i);
            }
        }
        self.done = true;
        None
    }
}

/// Colex comparison of two equal-size subsets given as ascending slices.
pub fn colex_cmp(a: &[usize], b: &[usize]) -> std::cmp::Ordering {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        match x.cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}
