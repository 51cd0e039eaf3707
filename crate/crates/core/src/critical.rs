//! The critical number cr(G): closed-form casework, an exhaustive
//! brute-force oracle, and the classical extremal lower-bound witness.
//!
//! cr(G) is the smallest ℓ such that every subset S ⊆ G \ {0} with
//! |S| ≥ ℓ has Σ(S) = G. Σ-monotonicity makes "every size-ℓ subset spans"
//! monotone in ℓ, so the oracle needs exactly two facts: a non-spanning
//! set of size ℓ−1 and an exhaustive confirmation at size ℓ. The guided
//! strategy finds the witness first (seeded with deterministic
//! constructions, falling back to a colex scan), then confirms; the confirm
//! step never trusts the formula, so agreement is a genuine cross-check.

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{binomial, floor_two_sqrt, is_prime};
use crate::colex::ColexCombinations;
use crate::group::{enumerate_abelian_groups, smallest_prime, GroupElement, GroupSpec};
use crate::group::{subgroup_of_index_p, GroupError};
use crate::subset::GroupSubset;
use crate::sumset::sigma;

/// Which clause of the closed-form casework produced a value.
#[derive(Copy, Clone, PartialEq, Eq, Debug)]
pub enum CrCase {
    /// |G| ≤ 2, where cr(G) = |G| by definition.
    OrderAtMostTwo,
    /// |G| = p prime: cr = ⌊2√(p−2)⌋.
    PrimeOrder,
    /// One of the six small exceptional groups: cr = |G|/p + p − 1.
    ExceptionList,
    /// |G|/p an odd prime q with 2 < p < q ≤ p + ⌊2√(p−2)⌋ + 1:
    /// cr = |G|/p + p − 1.
    OddPrimeWindow,
    /// |G| = pq with p + ⌊2√(p−2)⌋ + 1 < q < 2p: cr = p + q − 2
    /// (the same value as the general clause, recorded separately).
    PrimePairWindow,
    /// Everything else: cr = |G|/p + p − 2.
    General,
}

impl CrCase {
    pub fn label(self) -> &'static str {
        match self {
            CrCase::OrderAtMostTwo => "order-le-2",
            CrCase::PrimeOrder => "prime-order",
            CrCase::ExceptionList => "exception-list",
            CrCase::OddPrimeWindow => "odd-prime-window",
            CrCase::PrimePairWindow => "prime-pair-window",
            CrCase::General => "general",
        }
    }
}

/// Closed-form critical number with its dispatch provenance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrResult {
    pub group: GroupSpec,
    pub value: usize,
    pub case: CrCase,
    /// Smallest prime divisor of |G| (None for the trivial group).
    pub smallest_prime: Option<u64>,
}

const EXCEPTION_LIST: [&[u64]; 6] = [&[4], &[6], &[8], &[2, 2], &[2, 4], &[3, 3]];

/// Evaluate the closed-form casework.
pub fn cr_formula(g: &GroupSpec) -> CrResult {
    let n = g.order() as u64;
    let p = smallest_prime(g);
    if n <= 2 {
        return CrResult { group: g.clone(), value: n as usize, case: CrCase::OrderAtMostTwo, smallest_prime: p };
    }
    let p = p.expect("nontrivial group has a prime divisor");
    if n == p {
        let value = floor_two_sqrt(p - 2) as usize;
        return CrResult { group: g.clone(), value, case: CrCase::PrimeOrder, smallest_prime: Some(p) };
    }
    let cofactor = n / p;
    if EXCEPTION_LIST.iter().any(|f| *f == g.invariant_factors()) {
        let value = (cofactor + p - 1) as usize;
        return CrResult { group: g.clone(), value, case: CrCase::ExceptionList, smallest_prime: Some(p) };
    }
    let q = cofactor;
    if is_prime(q) && q % 2 == 1 && 2 < p && p < q && q <= p + floor_two_sqrt(p - 2) + 1 {
        let value = (cofactor + p - 1) as usize;
        return CrResult { group: g.clone(), value, case: CrCase::OddPrimeWindow, smallest_prime: Some(p) };
    }
    let value = (cofactor + p - 2) as usize;
    let case = if g.is_cyclic() && is_prime(q) && p + floor_two_sqrt(p - 2) + 1 < q && q < 2 * p {
        CrCase::PrimePairWindow
    } else {
        CrCase::General
    };
    CrResult { group: g.clone(), value, case, smallest_prime: Some(p) }
}

/// Enumeration limit for the exhaustive scans, counted in subsets visited.
#[derive(Copy, Clone, Debug)]
pub struct Budget {
    pub max_subsets: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_subsets: 20_000_000 }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("budget exceeded after {checked} subsets")]
pub struct BudgetExceeded {
    pub checked: u64,
}

/// Result of scanning every size-ℓ subset of G \ {0}.
#[derive(Clone, Debug)]
pub struct ScanReport {
    pub all_span: bool,
    /// First non-spanning subset in colex order, when one exists.
    pub counterexample: Option<GroupSubset>,
    pub subsets_checked: u64,
}

/// A unit of scan work: the subsets {inner k-combo of [1, inner_m]} ∪ suffix,
/// in colex order. Splitting a task by its next-largest element preserves
/// the global colex order of the task list. Task generation is bounded by
/// the remaining budget, so out-of-reach spaces never materialize as tasks.
struct ScanTask {
    suffix: Vec<usize>,
    inner_m: usize,
    inner_k: usize,
    cap: u64,
}

fn build_tasks(
    suffix: Vec<usize>,
    inner_m: usize,
    inner_k: usize,
    threshold: u128,
    budget_left: &mut u128,
    truncated: &mut bool,
    out: &mut Vec<ScanTask>,
) {
    if *budget_left == 0 {
        *truncated = true;
        return;
    }
    let count = binomial(inner_m as u64, inner_k as u64);
    if inner_k == 0 || count <= threshold {
        let cap = count.min(*budget_left);
        if cap < count {
            *truncated = true;
        }
        *budget_left -= cap;
        out.push(ScanTask { suffix, inner_m, inner_k, cap: cap as u64 });
        return;
    }
    for top in inner_k..=inner_m {
        if *budget_left == 0 {
            *truncated = true;
            return;
        }
        let mut s = suffix.clone();
        s.push(top);
        build_tasks(s, top - 1, inner_k - 1, threshold, budget_left, truncated, out);
    }
}

/// Incremental Σ-closures for the colex scan: level i holds the closure of
/// the elements at combo positions i.. plus the task suffix, so advancing
/// the combo at position i only recomputes levels i..0.
struct ClosureStack {
    group: Arc<GroupSpec>,
    levels: Vec<Vec<u64>>,
    base: Vec<u64>,
    tmp: Vec<u64>,
    words: usize,
}

impl ClosureStack {
    fn new(group: &Arc<GroupSpec>, suffix: &[usize], k: usize) -> ClosureStack {
        let words = group.order().div_ceil(64);
        let mut base = vec![0u64; words];
        let mut tmp = vec![0u64; words];
        for &e in suffix {
            add_to_closure(group, &mut base, &mut tmp, e);
        }
        ClosureStack { group: Arc::clone(group), levels: vec![vec![0u64; words]; k], base, tmp, words }
    }

    /// Recompute levels `pos..0` after the combo changed at `pos`.
    fn refresh(&mut self, pos: usize, combo: &[usize]) {
        for i in (0..=pos).rev() {
            let (dst, src) = if i + 1 < self.levels.len() {
                let (lo, hi) = self.levels.split_at_mut(i + 1);
                (&mut lo[i], &hi[0][..])
            } else {
                (&mut self.levels[i], &self.base[..])
            };
            dst.copy_from_slice(src);
            extend_closure(&self.group, dst, &mut self.tmp, combo[i]);
        }
    }

    fn spans(&self) -> bool {
        let target = self.group.order();
        let have: usize = if self.levels.is_empty() {
            self.base.iter().map(|w| w.count_ones() as usize).sum()
        } else {
            self.levels[0].iter().map(|w| w.count_ones() as usize).sum()
        };
        debug_assert!(have <= target);
        have == target
    }

    fn base_spans(&self) -> bool {
        self.base.iter().map(|w| w.count_ones() as usize).sum::<usize>() == self.group.order()
    }

    fn words(&self) -> usize {
        self.words
    }
}

fn add_to_closure(group: &GroupSpec, clo: &mut [u64], tmp: &mut [u64], e: usize) {
    extend_closure(group, clo, tmp, e);
}

/// clo ← clo ∪ (clo + e) ∪ {e}
fn extend_closure(group: &GroupSpec, clo: &mut [u64], tmp: &mut [u64], e: usize) {
    crate::subset::translate_words(group, e, clo, tmp);
    for (a, b) in clo.iter_mut().zip(tmp.iter()) {
        *a |= b;
    }
    clo[e / 64] |= 1u64 << (e % 64);
}

struct TaskOutcome {
    checked: u64,
    hit: Option<Vec<usize>>,
    exhausted: bool,
}

fn run_task(group: &Arc<GroupSpec>, task: &ScanTask) -> TaskOutcome {
    let mut stack = ClosureStack::new(group, &task.suffix, task.inner_k);
    let _ = stack.words();
    if task.inner_k == 0 {
        let spans = stack.base_spans();
        let hit = if spans { None } else { Some(task.suffix.clone()) };
        return TaskOutcome { checked: 1, hit, exhausted: true };
    }
    let mut combo = ColexCombinations::new(task.inner_m, task.inner_k);
    let mut checked = 0u64;
    while let Some(pos) = combo.advance() {
        if checked >= task.cap {
            return TaskOutcome { checked, hit: None, exhausted: false };
        }
        stack.refresh(pos, combo.current());
        checked += 1;
        if !stack.spans() {
            let mut subset = combo.current().to_vec();
            subset.extend_from_slice(&task.suffix);
            return TaskOutcome { checked, hit: Some(subset), exhausted: false };
        }
    }
    TaskOutcome { checked, hit: None, exhausted: true }
}

/// True iff every size-ℓ subset of G \ {0} spans G, by exhaustive colex
/// scan. On false, the counterexample is the colex-first non-spanning
/// subset. ℓ larger than |G|−1 is vacuously true.
pub fn spanning_all_of_size(
    group: &Arc<GroupSpec>,
    ell: usize,
    budget: &Budget,
) -> Result<ScanReport, BudgetExceeded> {
    assert!(ell >= 1, "subset size must be positive");
    let m = group.order() - 1;
    if ell > m {
        return Ok(ScanReport { all_span: true, counterexample: None, subsets_checked: 0 });
    }
    let mut tasks = Vec::new();
    let mut budget_left = budget.max_subsets as u128;
    let mut truncated = false;
    build_tasks(Vec::new(), m, ell, 32_768, &mut budget_left, &mut truncated, &mut tasks);
    let outcomes: Vec<TaskOutcome> = tasks.par_iter().map(|t| run_task(group, t)).collect();

    let mut checked = 0u64;
    for o in &outcomes {
        checked += o.checked;
        if let Some(hit) = &o.hit {
            let cex = GroupSubset::from_indices(group, hit);
            return Ok(ScanReport { all_span: false, counterexample: Some(cex), subsets_checked: checked });
        }
    }
    if truncated || outcomes.iter().any(|o| !o.exhausted) {
        return Err(BudgetExceeded { checked });
    }
    Ok(ScanReport { all_span: true, counterexample: None, subsets_checked: checked })
}

/// Per-size statistics from an oracle run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizeStats {
    pub size: usize,
    pub subsets_checked: u64,
    /// None when the scan died on budget.
    pub all_span: Option<bool>,
}

/// Outcome of the exhaustive oracle.
#[derive(Clone, Debug)]
pub struct OracleOutcome {
    pub group: GroupSpec,
    pub value: usize,
    /// A non-spanning subset of size value − 1.
    pub failing_witness: GroupSubset,
    pub sizes_checked: Vec<SizeStats>,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("group must have at least 2 elements")]
    OrderTooSmall,
    #[error("oracle budget exceeded (established: cr ≥ {lower:?}, cr ≤ {upper:?})")]
    BudgetExceeded {
        /// cr ≥ lower, certified by a failing witness of size lower−1.
        lower: Option<usize>,
        /// cr ≤ upper, certified by an exhaustive spanning confirmation.
        upper: Option<usize>,
        witness: Option<GroupSubset>,
        sizes_checked: Vec<SizeStats>,
    },
}

/// Deterministic non-spanning candidates of the given size, used to seed
/// the witness search before falling back to the colex scan. Every
/// candidate is verified by an exact closure before use.
fn seeded_witness_candidates(group: &Arc<GroupSpec>, size: usize) -> Vec<GroupSubset> {
    let mut out = Vec::new();
    let n = group.order();
    if size == 0 || size > n - 1 {
        return out;
    }
    if let Some(p) = smallest_prime(group) {
        if n as u64 > p {
            if let Ok(w) = extremal_witness(group, p) {
                if w.cardinality() == size {
                    out.push(w);
                }
            }
        }
    }
    if group.is_cyclic() {
        // ±{1, 2, …} interval: subset sums stay in a short interval, which
        // cannot cover the whole group when 2·Σ magnitudes + 1 < n.
        let mut s = GroupSubset::empty(group);
        let mut mag = 1usize;
        while s.cardinality() < size && mag < n {
            s.insert(GroupElement(mag));
            if s.cardinality() < size {
                s.insert(GroupElement(n - mag));
            }
            mag += 1;
        }
        if s.cardinality() == size {
            out.push(s);
        }
    }
    out
}

/// Exhaustively determine cr(G).
///
/// Strategy: find a non-spanning witness at size cr_formula−1 (seeded
/// constructions first, then colex scan), then exhaustively confirm that
/// size cr_formula spans. Only if either step contradicts the formula does
/// an unguided walk run; the confirmation is exhaustive either way.
pub fn cr_bruteforce(group: &Arc<GroupSpec>, budget: &Budget) -> Result<OracleOutcome, OracleError> {
    let n = group.order();
    if n < 2 {
        return Err(OracleError::OrderTooSmall);
    }
    let full = GroupSubset::full(group);
    let f = cr_formula(group).value;
    debug_assert!(f >= 2);
    let mut stats: Vec<SizeStats> = Vec::new();
    let mut spent = 0u64;
    let remaining = |spent: u64| Budget { max_subsets: budget.max_subsets.saturating_sub(spent) };

    // Witness at size f − 1.
    let mut witness: Option<GroupSubset> = None;
    for cand in seeded_witness_candidates(group, f - 1) {
        spent += 1;
        if sigma(&cand) != full {
            witness = Some(cand);
            break;
        }
    }
    let mut no_witness_at_f1 = false;
    if witness.is_some() {
        stats.push(SizeStats { size: f - 1, subsets_checked: 1, all_span: Some(false) });
    } else {
        match spanning_all_of_size(group, f - 1, &remaining(spent)) {
            Ok(report) => {
                spent += report.subsets_checked;
                stats.push(SizeStats { size: f - 1, subsets_checked: report.subsets_checked, all_span: Some(report.all_span) });
                match report.counterexample {
                    Some(c) => witness = Some(c),
                    None => no_witness_at_f1 = true,
                }
            }
            Err(b) => {
                stats.push(SizeStats { size: f - 1, subsets_checked: b.checked, all_span: None });
                return Err(OracleError::BudgetExceeded { lower: None, upper: None, witness: None, sizes_checked: stats });
            }
        }
    }

    // Exhaustive confirmation at size f.
    let confirm = if f > n - 1 {
        stats.push(SizeStats { size: f, subsets_checked: 0, all_span: Some(true) });
        ScanReport { all_span: true, counterexample: None, subsets_checked: 0 }
    } else {
        match spanning_all_of_size(group, f, &remaining(spent)) {
            Ok(report) => {
                spent += report.subsets_checked;
                stats.push(SizeStats { size: f, subsets_checked: report.subsets_checked, all_span: Some(report.all_span) });
                report
            }
            Err(b) => {
                stats.push(SizeStats { size: f, subsets_checked: b.checked, all_span: None });
                let lower = witness.as_ref().map(|_| f);
                return Err(OracleError::BudgetExceeded { lower, upper: None, witness, sizes_checked: stats });
            }
        }
    };

    match (witness, confirm.all_span) {
        (Some(w), true) if !no_witness_at_f1 => Ok(OracleOutcome { group: (**group).clone(), value: f, failing_witness: w, sizes_checked: stats }),
        (maybe_w, true) => {
            // No failing set at f−1: the true value is smaller. Walk down.
            debug_assert!(maybe_w.is_none());
            let mut size = f - 1; // known: all_span(f−1) = true
            loop {
                debug_assert!(size >= 2, "cr ≥ 2 for |G| ≥ 2");
                let below = size - 1;
                match spanning_all_of_size(group, below, &remaining(spent)) {
                    Ok(report) => {
                        spent += report.subsets_checked;
                        stats.push(SizeStats { size: below, subsets_checked: report.subsets_checked, all_span: Some(report.all_span) });
                        if let Some(c) = report.counterexample {
                            return Ok(OracleOutcome { group: (**group).clone(), value: below + 1, failing_witness: c, sizes_checked: stats });
                        }
                        size = below;
                    }
                    Err(b) => {
                        stats.push(SizeStats { size: below, subsets_checked: b.checked, all_span: None });
                        return Err(OracleError::BudgetExceeded { lower: None, upper: Some(size), witness: None, sizes_checked: stats });
                    }
                }
            }
        }
        (_, false) => {
            // Size f does not always span: the true value is larger. Walk up.
            let mut last_cex = confirm.counterexample.expect("non-spanning scan returns its counterexample");
            let mut size = f + 1;
            loop {
                if size > n - 1 {
                    stats.push(SizeStats { size, subsets_checked: 0, all_span: Some(true) });
                    return Ok(OracleOutcome { group: (**group).clone(), value: size, failing_witness: last_cex, sizes_checked: stats });
                }
                match spanning_all_of_size(group, size, &remaining(spent)) {
                    Ok(report) => {
                        spent += report.subsets_checked;
                        stats.push(SizeStats { size, subsets_checked: report.subsets_checked, all_span: Some(report.all_span) });
                        match report.counterexample {
                            None => {
                                return Ok(OracleOutcome { group: (**group).clone(), value: size, failing_witness: last_cex, sizes_checked: stats })
                            }
                            Some(c) => {
                                last_cex = c;
                                size += 1;
                            }
                        }
                    }
                    Err(b) => {
                        stats.push(SizeStats { size, subsets_checked: b.checked, all_span: None });
                        return Err(OracleError::BudgetExceeded {
                            lower: Some(size),
                            upper: None,
                            witness: Some(last_cex),
                            sizes_checked: stats,
                        });
                    }
                }
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WitnessError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("the construction needs |G| > p, got |G| = p = {0}")]
    OrderEqualsPrime(u64),
    #[error("{p} is not the smallest prime divisor of the order (smallest is {smallest})")]
    NotSmallestPrime { p: u64, smallest: u64 },
}

/// The classical maximal non-spanning construction
/// S = (H \ {0}) ∪ {p−2 elements of one nonzero coset}, |S| = |G|/p + p − 3,
/// whose closure stays inside p−1 cosets of H. Deterministic: the coset of
/// the smallest-index element outside H, and its p−2 smallest members.
pub fn extremal_witness(group: &Arc<GroupSpec>, p: u64) -> Result<GroupSubset, WitnessError> {
    let smallest = smallest_prime(group).ok_or(WitnessError::OrderEqualsPrime(p))?;
    if p != smallest {
        if !is_prime(p) {
            return Err(GroupError::NotPrime(p).into());
        }
        if group.order() as u64 % p != 0 {
            return Err(GroupError::DoesNotDivide { p, order: group.order() as u64 }.into());
        }
        return Err(WitnessError::NotSmallestPrime { p, smallest });
    }
    if group.order() as u64 == p {
        return Err(WitnessError::OrderEqualsPrime(p));
    }
    let h = subgroup_of_index_p(group, p)?;
    let mut s = h.members().clone();
    s.remove(group.zero());
    let outside = group
        .elements()
        .find(|&e| !h.contains(e))
        .expect("|G| > |H| guarantees an element outside H");
    let coset = h.members().translate(outside);
    for e in coset.iter().take(p as usize - 2) {
        s.insert(e);
    }
    debug_assert_eq!(s.cardinality(), group.order() / p as usize + p as usize - 3);
    Ok(s)
}

/// One row of the formula-vs-oracle table.
#[derive(Clone, Debug)]
pub struct CrTableRow {
    pub group: GroupSpec,
    pub formula: CrResult,
    pub oracle: OracleStatus,
}

#[derive(Clone, Debug)]
pub enum OracleStatus {
    Checked(OracleOutcome),
    Skipped { reason: String },
}

impl CrTableRow {
    /// Some(true/false) when the oracle ran, None when skipped.
    pub fn agree(&self) -> Option<bool> {
        match &self.oracle {
            OracleStatus::Checked(o) => Some(o.value == self.formula.value),
            OracleStatus::Skipped { .. } => None,
        }
    }
}

/// Formula and oracle values for every abelian group with order in the
/// range. Budget overruns are recorded per row; disagreements are flagged
/// in the row (the alarm case for callers).
pub fn cr_table(orders: std::ops::RangeInclusive<u64>, budget: &Budget) -> Vec<CrTableRow> {
    let mut rows = Vec::new();
    for n in orders {
        for g in enumerate_abelian_groups(n) {
            let g = Arc::new(g);
            let formula = cr_formula(&g);
            let oracle = if n < 2 {
                OracleStatus::Skipped { reason: "order < 2".into() }
            } else {
                match cr_bruteforce(&g, budget) {
                    Ok(outcome) => OracleStatus::Checked(outcome),
                    Err(e) => OracleStatus::Skipped { reason: e.to_string() },
                }
            };
            rows.push(CrTableRow { group: (*g).clone(), formula, oracle });
        }
    }
    rows
}
