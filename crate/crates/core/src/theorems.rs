//! Exhaustive and randomized verification of the three addition theorems
//! the toolkit leans on: the Cauchy–Davenport bound, Diderrich's
//! distinct-difference refinement, and the Dias da Silva–Hamidoune
//! restricted-sumset bound with its saturation consequence.
//!
//! All instances live in Z/p with p ≤ 63, so subsets are single-word masks
//! and a sumset is a handful of rotate-or operations. Reports carry the
//! exact violating instances (there must be none), a slack histogram
//! showing how far actual sizes sit above the bound, and the first
//! bound-tight instance encountered.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{is_prime, isqrt};

/// Hard ceiling on exhaustive instance counts.
const EXHAUSTIVE_CAP: u128 = 4_000_000_000;
/// At most this many violating instances are materialized per report.
const VIOLATION_SAMPLE_CAP: usize = 32;

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum TheoremId {
    CauchyDavenport,
    Diderrich,
    /// Restricted-sumset lower bound |Σ_k(S)| ≥ min{p, k(|S|−k)+1}.
    DdshBound,
    /// Saturation: at the threshold size, the middle layer is all of Z/p.
    DdshSaturation,
}

impl TheoremId {
    pub fn label(self) -> &'static str {
        match self {
            TheoremId::CauchyDavenport => "cauchy-davenport",
            TheoremId::Diderrich => "diderrich",
            TheoremId::DdshBound => "ddsh-1",
            TheoremId::DdshSaturation => "ddsh-2",
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum VerifyMode {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

impl VerifyMode {
    pub fn label(self) -> &'static str {
        match self {
            VerifyMode::Exhaustive => "exhaustive",
            VerifyMode::Sampled { .. } => "sampled",
        }
    }

    pub fn seed(self) -> Option<u64> {
        match self {
            VerifyMode::Exhaustive => None,
            VerifyMode::Sampled { seed, .. } => Some(seed),
        }
    }
}

/// One concrete instance: the operand sets (elements ascending; for
/// Diderrich the exceptional set is last), the bound, and the achieved
/// sumset size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceRecord {
    pub sets: Vec<Vec<u64>>,
    pub bound: u64,
    pub actual: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub theorem: TheoremId,
    pub p: u64,
    pub s: Option<usize>,
    pub mode: VerifyMode,
    pub instances_checked: u64,
    pub violation_count: u64,
    /// Up to [`VIOLATION_SAMPLE_CAP`] violating instances, earliest first.
    pub violations: Vec<InstanceRecord>,
    /// slack_histogram[d] counts instances with actual − bound = d.
    pub slack_histogram: Vec<u64>,
    pub min_slack: Option<u64>,
    /// First instance with actual = bound, when one exists.
    pub tight_instance: Option<InstanceRecord>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("p = {0} is too large for single-word masks (max 63)")]
    PrimeTooLarge(u64),
    #[error("s = {s} is out of range for this theorem at p = {p}")]
    BadArity { s: usize, p: u64 },
    #[error("exhaustive mode would need {estimated} instances (cap {cap})")]
    ExhaustiveTooLarge { estimated: u128, cap: u128 },
}

#[inline]
fn rotl_mask(a: u64, s: u64, p: u64) -> u64 {
    debug_assert!(s < p);
    if s == 0 {
        return a;
    }
    let mask = (1u64 << p) - 1;
    ((a << s) | (a >> (p - s))) & mask
}

/// Sumset of two masks in Z/p: rotate `a` by each element of `b` and OR.
#[inline]
fn sumset_mask(a: u64, b: u64, p: u64) -> u64 {
    let full = (1u64 << p) - 1;
    let mut acc = 0u64;
    let mut bits = b;
    while bits != 0 {
        let s = bits.trailing_zeros() as u64;
        bits &= bits - 1;
        acc |= rotl_mask(a, s, p);
        if acc == full {
            break;
        }
    }
    acc
}

fn mask_elements(mask: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    let mut bits = mask;
    while bits != 0 {
        out.push(bits.trailing_zeros() as u64);
        bits &= bits - 1;
    }
    out
}

/// Accumulator merged across shards in a fixed order.
struct Tally {
    instances: u64,
    violation_count: u64,
    violations: Vec<InstanceRecord>,
    histogram: Vec<u64>,
    min_slack: Option<u64>,
    tight: Option<InstanceRecord>,
}

impl Tally {
    fn new(p: u64) -> Tally {
        Tally {
            instances: 0,
            violation_count: 0,
            violations: Vec::new(),
            histogram: vec![0; p as usize + 1],
            min_slack: None,
            tight: None,
        }
    }

    fn record(&mut self, sets: impl Fn() -> Vec<Vec<u64>>, bound: u64, actual: u64) {
        self.instances += 1;
        if actual < bound {
            self.violation_count += 1;
            if self.violations.len() < VIOLATION_SAMPLE_CAP {
                self.violations.push(InstanceRecord { sets: sets(), bound, actual });
            }
            return;
        }
        let slack = actual - bound;
        let idx = (slack as usize).min(self.histogram.len() - 1);
        self.histogram[idx] += 1;
        if self.min_slack.map_or(true, |m| slack < m) {
            self.min_slack = Some(slack);
        }
        if slack == 0 && self.tight.is_none() {
            self.tight = Some(InstanceRecord { sets: sets(), bound, actual });
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.instances += other.instances;
        self.violation_count += other.violation_count;
        for v in other.violations {
            if self.violations.len() < VIOLATION_SAMPLE_CAP {
                self.violations.push(v);
            }
        }
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
        self.min_slack = match (self.min_slack, other.min_slack) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        if self.tight.is_none() {
            self.tight = other.tight;
        }
        self
    }

    fn into_report(self, theorem: TheoremId, p: u64, s: Option<usize>, mode: VerifyMode) -> BoundReport {
        BoundReport {
            theorem,
            p,
            s,
            mode,
            instances_checked: self.instances,
            violation_count: self.violation_count,
            violations: self.violations,
            slack_histogram: self.histogram,
            min_slack: self.min_slack,
            tight_instance: self.tight,
        }
    }
}

fn check_prime(p: u64) -> Result<(), VerifyError> {
    if !is_prime(p) {
        return Err(VerifyError::NotPrime(p));
    }
    if p > 63 {
        return Err(VerifyError::PrimeTooLarge(p));
    }
    Ok(())
}

fn nonempty_mask(rng: &mut ChaCha8Rng, p: u64) -> u64 {
    let full = (1u64 << p) - 1;
    loop {
        let m = rng.next_u64() & full;
        if m != 0 {
            return m;
        }
    }
}

/// |A₁ + … + A_s| ≥ min{p, Σ|Aᵢ| − s + 1} over nonempty subsets of Z/p.
pub fn verify_cauchy_davenport(p: u64, s: usize, mode: VerifyMode) -> Result<BoundReport, VerifyError> {
    check_prime(p)?;
    if s < 2 {
        return Err(VerifyError::BadArity { s, p });
    }
    let full = (1u64 << p) - 1;
    let tally = match mode {
        VerifyMode::Exhaustive => {
            let estimated = (full as u128).pow(s as u32);
            if estimated > EXHAUSTIVE_CAP {
                return Err(VerifyError::ExhaustiveTooLarge { estimated, cap: EXHAUSTIVE_CAP });
            }
            // Shard on the first mask; merge in mask order.
            (1..=full)
                .into_par_iter()
                .map(|a| {
                    let mut t = Tally::new(p);
                    let mut rest = Vec::with_capacity(s - 1);
                    cd_rec(p, s - 1, a, a, a.count_ones() as u64, &mut rest, &mut t);
                    t
                })
                .reduce_with(Tally::merge)
                .unwrap_or_else(|| Tally::new(p))
        }
        VerifyMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = Tally::new(p);
            for _ in 0..samples {
                let masks: Vec<u64> = (0..s).map(|_| nonempty_mask(&mut rng, p)).collect();
                let mut acc = masks[0];
                let mut size_sum = masks[0].count_ones() as u64;
                for &m in &masks[1..] {
                    acc = sumset_mask(acc, m, p);
                    size_sum += m.count_ones() as u64;
                }
                let bound = p.min(size_sum - s as u64 + 1);
                t.record(|| masks.iter().map(|&m| mask_elements(m)).collect(), bound, acc.count_ones() as u64);
            }
            t
        }
    };
    Ok(tally.into_report(TheoremId::CauchyDavenport, p, Some(s), mode))
}

/// Odometer over the remaining positions of an exhaustive CD tuple.
fn cd_rec(p: u64, remaining: usize, first: u64, acc: u64, size_sum: u64, stack: &mut Vec<u64>, t: &mut Tally) {
    let full = (1u64 << p) - 1;
    if remaining == 0 {
        let s = stack.len() + 1;
        let bound = p.min(size_sum - s as u64 + 1);
        let actual = acc.count_ones() as u64;
        let snapshot: &[u64] = stack;
        t.record(
            || {
                let mut sets = vec![mask_elements(first)];
                sets.extend(snapshot.iter().map(|&m| mask_elements(m)));
                sets
            },
            bound,
            actual,
        );
        return;
    }
    for m in 1..=full {
        stack.push(m);
        cd_rec(p, remaining - 1, first, sumset_mask(acc, m, p), size_sum + m.count_ones() as u64, stack, t);
        stack.pop();
    }
}

/// Exhaustive AP family × exceptional-set scan for Diderrich's bound
/// |A₁ + … + A_s| ≥ min{p, Σ|Aᵢ| − 1}, where A₁…A_{s−1} are arithmetic
/// progressions of length ≥ 2 with pairwise distinct nonzero differences
/// and A_s is arbitrary nonempty.
///
/// Length-1 sets are deliberately not admitted as progressions: assigning
/// a difference to a singleton makes the stated bound false, and the
/// classical applications always route singletons through the exceptional
/// slot.
pub fn verify_diderrich(p: u64, s: usize, mode: VerifyMode) -> Result<BoundReport, VerifyError> {
    check_prime(p)?;
    if s < 2 || s as u64 > p - 1 {
        return Err(VerifyError::BadArity { s, p });
    }
    let full = (1u64 << p) - 1;
    let tally = match mode {
        VerifyMode::Exhaustive => {
            let aps_per_diff = (p * (p - 2) + 1) as u128;
            let combos = crate::arith::binomial(p - 1, s as u64 - 1);
            let estimated = combos * aps_per_diff.pow(s as u32 - 1) * full as u128;
            if estimated > EXHAUSTIVE_CAP {
                return Err(VerifyError::ExhaustiveTooLarge { estimated, cap: EXHAUSTIVE_CAP });
            }
            let diff_combos = diff_combinations(p, s - 1);
            diff_combos
                .into_par_iter()
                .map(|diffs| {
                    let ap_lists: Vec<Vec<u64>> = diffs.iter().map(|&d| ap_masks(p, d)).collect();
                    let mut t = Tally::new(p);
                    let mut chosen = vec![0usize; ap_lists.len()];
                    diderrich_rec(p, &ap_lists, 0, 0u64, 0u64, &mut chosen, &mut t);
                    t
                })
                .reduce_with(Tally::merge)
                .unwrap_or_else(|| Tally::new(p))
        }
        VerifyMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t = Tally::new(p);
            for _ in 0..samples {
                // s−1 distinct nonzero differences.
                let mut diffs: Vec<u64> = Vec::with_capacity(s - 1);
                while diffs.len() < s - 1 {
                    let d = 1 + rng.next_u64() % (p - 1);
                    if !diffs.contains(&d) {
                        diffs.push(d);
                    }
                }
                let mut masks: Vec<u64> = diffs
                    .iter()
                    .map(|&d| {
                        let len = 2 + rng.next_u64() % (p - 1); // [2, p]
                        let start = rng.next_u64() % p;
                        ap_mask(p, start, d, len)
                    })
                    .collect();
                masks.push(nonempty_mask(&mut rng, p));
                let mut acc = masks[0];
                let mut size_sum = masks[0].count_ones() as u64;
                for &m in &masks[1..] {
                    acc = sumset_mask(acc, m, p);
                    size_sum += m.count_ones() as u64;
                }
                let bound = p.min(size_sum - 1);
                t.record(|| masks.iter().map(|&m| mask_elements(m)).collect(), bound, acc.count_ones() as u64);
            }
            t
        }
    };
    Ok(tally.into_report(TheoremId::Diderrich, p, Some(s), mode))
}

fn diderrich_rec(
    p: u64,
    ap_lists: &[Vec<u64>],
    level: usize,
    acc: u64,
    size_sum: u64,
    chosen: &mut Vec<usize>,
    t: &mut Tally,
) {
    let full = (1u64 << p) - 1;
    if level == ap_lists.len() {
        // Exceptional set in the last slot; position is immaterial by
        // commutativity (checked separately in tests).
        let snapshot: &[usize] = chosen;
        for e in 1..=full {
            let fold = if level == 0 { e } else { sumset_mask(acc, e, p) };
            let total = size_sum + e.count_ones() as u64;
            let bound = p.min(total - 1);
            let actual = fold.count_ones() as u64;
            t.record(
                || {
                    let mut sets: Vec<Vec<u64>> = ap_lists
                        .iter()
                        .zip(snapshot.iter())
                        .map(|(list, &c)| mask_elements(list[c]))
                        .collect();
                    sets.push(mask_elements(e));
                    sets
                },
                bound,
                actual,
            );
        }
        return;
    }
    for (i, &m) in ap_lists[level].iter().enumerate() {
        chosen.push(i);
        let next_acc = if level == 0 { m } else { sumset_mask(acc, m, p) };
        diderrich_rec(p, ap_lists, level + 1, next_acc, size_sum + m.count_ones() as u64, chosen, t);
        chosen.pop();
    }
}

fn ap_mask(p: u64, start: u64, d: u64, len: u64) -> u64 {
    let mut m = 0u64;
    let mut cur = start % p;
    for _ in 0..len.min(p) {
        m |= 1 << cur;
        cur = (cur + d) % p;
    }
    m
}

/// Every arithmetic progression of difference `d` and length ∈ [2, p]:
/// p starts per length below p, and the full line once.
fn ap_masks(p: u64, d: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity((p * (p - 2) + 1) as usize);
    for len in 2..p {
        for start in 0..p {
            out.push(ap_mask(p, start, d, len));
        }
    }
    out.push((1u64 << p) - 1);
    out
}

fn diff_combinations(p: u64, k: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(p: u64, k: usize, from: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for d in from..p {
            cur.push(d);
            rec(p, k, d + 1, cur, out);
            cur.pop();
        }
    }
    rec(p, k, 1, &mut cur, &mut out);
    out
}

/// Both restricted-sumset reports: the bound |Σ_k(S)| ≥ min{p, k(|S|−k)+1}
/// for every S ⊆ Z/p and k ∈ [1, |S|], and the saturation scan.
pub struct DdshOutcome {
    pub bound: BoundReport,
    pub saturation: BoundReport,
}

/// Smallest set size at which the middle restricted layer is forced to be
/// all of Z/p: one above ⌊√(4p−7)⌋. At ⌊√(4p−7)⌋ itself the pairwise bound
/// k(|S|−k)+1 provably stays below p and saturation fails (see the layer
/// scans in the tests); the extra element pushes ⌊|S|/2⌋·⌈|S|/2⌉+1 to p or
/// beyond, making every middle layer the full line.
pub fn saturation_size(p: u64) -> u64 {
    isqrt(4 * p - 7) + 1
}

pub fn verify_ddsh(p: u64, mode: VerifyMode) -> Result<DdshOutcome, VerifyError> {
    check_prime(p)?;
    let full = (1u64 << p) - 1;
    let sat_size = saturation_size(p).min(p);
    let sat_k = sat_size / 2;
    let (bound_tally, sat_tally) = match mode {
        VerifyMode::Exhaustive => {
            let estimated = (full as u128 + 1) * p as u128;
            if estimated > EXHAUSTIVE_CAP {
                return Err(VerifyError::ExhaustiveTooLarge { estimated, cap: EXHAUSTIVE_CAP });
            }
            const SHARD: u64 = 1 << 12;
            let shards: Vec<u64> = (0..=(full / SHARD)).collect();
            shards
                .into_par_iter()
                .map(|shard| {
                    let mut bt = Tally::new(p);
                    let mut st = Tally::new(p);
                    let lo = (shard * SHARD).max(1);
                    let hi = ((shard + 1) * SHARD - 1).min(full);
                    for mask in lo..=hi {
                        ddsh_one(p, mask, sat_size, sat_k, &mut bt, &mut st);
                    }
                    (bt, st)
                })
                .reduce_with(|(a1, a2), (b1, b2)| (a1.merge(b1), a2.merge(b2)))
                .unwrap_or_else(|| (Tally::new(p), Tally::new(p)))
        }
        VerifyMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut bt = Tally::new(p);
            let mut st = Tally::new(p);
            for _ in 0..samples {
                let mask = nonempty_mask(&mut rng, p);
                ddsh_one(p, mask, sat_size, sat_k, &mut bt, &mut st);
            }
            // Saturation needs sets of the exact threshold size; sample those
            // directly as well.
            for _ in 0..samples {
                let mut mask = 0u64;
                while mask.count_ones() < sat_size as u32 {
                    mask |= 1 << (rng.next_u64() % p);
                }
                ddsh_saturation_one(p, mask, sat_k, &mut st);
            }
            (bt, st)
        }
    };
    Ok(DdshOutcome {
        bound: bound_tally.into_report(TheoremId::DdshBound, p, None, mode),
        saturation: sat_tally.into_report(TheoremId::DdshSaturation, p, None, mode),
    })
}

/// Restricted layers of one mask by the high-to-low subset-sum DP.
fn restricted_layers_mask(p: u64, mask: u64) -> Vec<u64> {
    let m = mask.count_ones() as usize;
    let mut layers = vec![0u64; m + 1];
    layers[0] = 1; // Σ₀ = {0}
    let mut bits = mask;
    let mut processed = 0usize;
    while bits != 0 {
        let e = bits.trailing_zeros() as u64;
        bits &= bits - 1;
        processed += 1;
        for k in (1..=processed).rev() {
            layers[k] |= rotl_mask(layers[k - 1], e, p);
        }
    }
    layers
}

fn ddsh_one(p: u64, mask: u64, sat_size: u64, sat_k: u64, bt: &mut Tally, st: &mut Tally) {
    let m = mask.count_ones() as u64;
    let layers = restricted_layers_mask(p, mask);
    for k in 1..=m {
        let bound = p.min(k * (m - k) + 1);
        if k >= 2 && k < m {
            // The interior bound dominates |S|; relied on throughout.
            debug_assert!(k * (m - k) + 1 >= m);
        }
        let actual = layers[k as usize].count_ones() as u64;
        bt.record(|| vec![mask_elements(mask), vec![k]], bound, actual);
    }
    if m == sat_size {
        let actual = layers[sat_k as usize].count_ones() as u64;
        st.record(|| vec![mask_elements(mask), vec![sat_k]], p, actual);
    }
}

fn ddsh_saturation_one(p: u64, mask: u64, sat_k: u64, st: &mut Tally) {
    let layers = restricted_layers_mask(p, mask);
    let actual = layers[sat_k as usize].count_ones() as u64;
    st.record(|| vec![mask_elements(mask), vec![sat_k]], p, actual);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_basics() {
        assert_eq!(rotl_mask(0b1, 3, 7), 0b1000);
        assert_eq!(rotl_mask(0b1000000, 1, 7), 0b1);
        // {0,1} + {0,2} = {0,1,2,3} in Z/5
        assert_eq!(sumset_mask(0b00011, 0b00101, 5), 0b01111);
        assert_eq!(mask_elements(0b1011), vec![0, 1, 3]);
        assert_eq!(ap_mask(7, 2, 2, 3), (1 << 2) | (1 << 4) | (1 << 6));
    }

    #[test]
    fn cd_exhaustive_p5() {
        let r = verify_cauchy_davenport(5, 2, VerifyMode::Exhaustive).unwrap();
        assert_eq!(r.instances_checked, 31 * 31);
        assert_eq!(r.violation_count, 0);
        assert_eq!(r.min_slack, Some(0));
        assert!(r.tight_instance.is_some());
        let hist_total: u64 = r.slack_histogram.iter().sum();
        assert_eq!(hist_total, r.instances_checked);
    }

    #[test]
    fn cd_examples() {
        // |{0,1} + {0,2}| = 4 ≥ 2+2−1 in Z/5; saturation case A = B = Z/7.
        assert_eq!(sumset_mask(0b00011, 0b00101, 5).count_ones(), 4);
        let full7 = (1u64 << 7) - 1;
        assert_eq!(sumset_mask(full7, full7, 7), full7);
        let r = verify_cauchy_davenport(7, 2, VerifyMode::Exhaustive).unwrap();
        assert_eq!(r.violation_count, 0);
    }

    #[test]
    fn cd_sampled_reproducible() {
        let mode = VerifyMode::Sampled { samples: 2000, seed: 42 };
        let a = verify_cauchy_davenport(13, 3, mode).unwrap();
        let b = verify_cauchy_davenport(13, 3, mode).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.violation_count, 0);
        assert_eq!(a.instances_checked, 2000);
    }

    #[test]
    fn cd_rejects_bad_input() {
        assert!(matches!(verify_cauchy_davenport(6, 2, VerifyMode::Exhaustive), Err(VerifyError::NotPrime(6))));
        assert!(matches!(verify_cauchy_davenport(5, 1, VerifyMode::Exhaustive), Err(VerifyError::BadArity { .. })));
        assert!(matches!(
            verify_cauchy_davenport(13, 4, VerifyMode::Exhaustive),
            Err(VerifyError::ExhaustiveTooLarge { .. })
        ));
    }

    #[test]
    fn diderrich_example_instance() {
        // A₁ = {1,2} (d=1), A₂ = {0,3} (d=3), exceptional {0,1,5} in Z/7:
        // bound min{7, 7−1} = 6, actual 7.
        let p = 7;
        let a1 = ap_mask(p, 1, 1, 2);
        let a2 = ap_mask(p, 0, 3, 2);
        let e = 0b100011u64;
        let fold = sumset_mask(sumset_mask(a1, a2, p), e, p);
        assert_eq!(fold.count_ones(), 7);
    }

    #[test]
    fn diderrich_exhaustive_small() {
        for p in [5u64, 7] {
            for s in [2usize, 3] {
                let r = verify_diderrich(p, s, VerifyMode::Exhaustive).unwrap();
                assert_eq!(r.violation_count, 0, "p={p} s={s}");
                assert!(r.instances_checked > 0);
                assert_eq!(r.min_slack, Some(0));
            }
        }
    }

    #[test]
    fn diderrich_singleton_slot_would_violate() {
        // The reason AP slots require length ≥ 2: with a singleton "AP"
        // the claimed bound fails.
        let p = 7u64;
        let a1 = 1u64; // {0}, would-be difference 1
        let a2 = ap_mask(p, 0, 3, 2); // {0,3}, difference 3
        let e = ap_mask(p, 0, 3, 2); // exceptional {0,3}
        let fold = sumset_mask(sumset_mask(a1, a2, p), e, p);
        let bound = p.min(1 + 2 + 2 - 1);
        assert!(u64::from(fold.count_ones()) < bound);
    }

    #[test]
    fn diderrich_exceptional_position_immaterial() {
        let p = 11u64;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let d1 = 1 + rng.next_u64() % (p - 1);
            let mut d2 = d1;
            while d2 == d1 {
                d2 = 1 + rng.next_u64() % (p - 1);
            }
            let a1 = ap_mask(p, rng.next_u64() % p, d1, 2 + rng.next_u64() % (p - 1));
            let a2 = ap_mask(p, rng.next_u64() % p, d2, 2 + rng.next_u64() % (p - 1));
            let e = nonempty_mask(&mut rng, p);
            let last = sumset_mask(sumset_mask(a1, a2, p), e, p);
            let first = sumset_mask(sumset_mask(e, a1, p), a2, p);
            let middle = sumset_mask(sumset_mask(a1, e, p), a2, p);
            assert_eq!(last, first);
            assert_eq!(last, middle);
        }
    }

    #[test]
    fn diderrich_rejects_bad_arity() {
        assert!(matches!(verify_diderrich(7, 1, VerifyMode::Exhaustive), Err(VerifyError::BadArity { .. })));
        assert!(matches!(verify_diderrich(7, 7, VerifyMode::Exhaustive), Err(VerifyError::BadArity { .. })));
    }

    #[test]
    fn ddsh_exhaustive_p7_and_p13() {
        let out = verify_ddsh(7, VerifyMode::Exhaustive).unwrap();
        assert_eq!(out.bound.violation_count, 0);
        assert_eq!(out.saturation.violation_count, 0);
        // Saturation scans every subset of size ⌊√21⌋+1 = 5: C(7,5) = 21.
        assert_eq!(out.saturation.instances_checked, 21);

        let out = verify_ddsh(13, VerifyMode::Exhaustive).unwrap();
        assert_eq!(out.bound.violation_count, 0);
        assert_eq!(out.saturation.violation_count, 0);
    }

    #[test]
    fn ddsh_tight_case() {
        // S = {1,2,3} in Z/7, k = 2: |Σ₂| = 3 = min{7, 2·1+1}.
        let layers = restricted_layers_mask(7, 0b1110);
        assert_eq!(layers[2].count_ones(), 3);
        assert_eq!(layers[3], 1 << 6);
    }

    #[test]
    fn ddsh_saturation_fails_one_below_threshold() {
        // At ⌊√(4p−7)⌋ itself the middle layer can miss elements: the
        // documented counterexample S = {0,1,2,3}, k = 2 in Z/7 reaches
        // only {1,2,3,4,5}.
        let layers = restricted_layers_mask(7, 0b1111);
        assert_eq!(layers[2], 0b0111110);
        assert_eq!(saturation_size(7), 5);
        // And exhaustively: some subset of the smaller size always fails
        // for the primes in range.
        for p in [3u64, 5, 7, 11, 13] {
            let m = saturation_size(p) - 1;
            let k = m / 2;
            let full = (1u64 << p) - 1;
            let mut found_failure = false;
            for mask in 1..=full {
                if mask.count_ones() as u64 != m {
                    continue;
                }
                let layers = restricted_layers_mask(p, mask);
                if k == 0 || (layers[k as usize].count_ones() as u64) < p {
                    found_failure = true;
                    break;
                }
            }
            assert!(found_failure, "p={p}");
        }
    }

    #[test]
    fn ddsh_sampled_reproducible() {
        let mode = VerifyMode::Sampled { samples: 500, seed: 3 };
        let a = verify_ddsh(17, mode).unwrap();
        let b = verify_ddsh(17, mode).unwrap();
        assert_eq!(a.bound, b.bound);
        assert_eq!(a.saturation, b.saturation);
        assert_eq!(a.bound.violation_count, 0);
        assert_eq!(a.saturation.violation_count, 0);
    }

    #[test]
    fn interior_bound_dominates_size() {
        // k ∈ [2, m−1] ⇒ k(m−k)+1 ≥ m, the observation used throughout.
        for m in 1..=64u64 {
            for k in 2..m {
                assert!(k * (m - k) + 1 >= m);
            }
        }
    }
}
