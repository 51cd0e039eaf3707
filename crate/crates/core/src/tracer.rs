//! Constructive spanning machinery for cyclic groups of order pq with
//! p + ⌊2√(p−2)⌋ + 1 < q < 2p, at the critical size |S| = p + q − 2.
//!
//! The pipeline mirrors the two-step strategy the closed form rests on:
//! decompose S along a subgroup H of index p, represent every target class
//! x+H as Σ fᵢ(aᵢ+H) with a small "collapse" (the cardinality lost to
//! coefficients fᵢ ∈ {0, |Sᵢ|}), then show the fiber
//! (Σ(S₀) ∪ {0}) + Σ_{f₁}(S₁) + … + Σ_{f_s}(S_s) fills the whole coset.
//! Every step is computed exactly rather than trusted, and the output is a
//! per-element table of witness subsets that an independent validator can
//! re-sum.
//!
//! Case dispatch is on (|S₀|, |S₁|): a large S₀ spans H outright; a middle
//! S₀ leaves collapse-1 slack; a small S₀ needs collapse 0 when every
//! nonzero coset is populated; a small S₀ next to a block of size ≥ 4 uses
//! the variant construction that keeps the first coefficient interior.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{floor_two_sqrt, is_prime};
use crate::group::{smallest_prime, subgroup_of_index_p, GroupElement, GroupError, GroupSpec, Subgroup};
use crate::subset::GroupSubset;
use crate::sumset::{sigma, sigma_with_trace, sumset, RestrictedProver, SigmaTrace};

#[derive(Debug, Error)]
pub enum TracerError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("the set may not contain the identity")]
    ContainsZero,
    #[error("expected a subset of size {expected}, got {got}")]
    WrongSetSize { expected: usize, got: usize },
    #[error("order {order} is not a product of two primes p < q")]
    NotSemiprime { order: usize },
    #[error("primes p={p}, q={q} are outside the window p + ⌊2√(p−2)⌋ + 1 < q < 2p")]
    OutsideWindow { p: u64, q: u64 },
    #[error("coefficient vector has length {got}, expected {expected}")]
    CoefficientLength { expected: usize, got: usize },
    #[error("coefficient {value} at block {index} exceeds the block size {max}")]
    CoefficientOutOfRange { index: usize, value: usize, max: usize },
    #[error("the interior-first construction needs a leading block of size ≥ 4 (largest is {largest})")]
    InteriorNeedsLargeBlock { largest: usize },
    #[error("no representation of class {class} within collapse budget {max_collapse}")]
    NoRepresentation { class: usize, max_collapse: usize },
    #[error("certified machinery contradicted: {0}")]
    HypothesisViolation(String),
    #[error("the set does not span: {missing} elements unreachable")]
    NotSpanning { missing: usize },
}

/// One nonzero-coset block of a decomposition.
#[derive(Clone, Debug)]
pub struct CosetBlock {
    /// Smallest-index member; the block representative aᵢ.
    pub rep: GroupElement,
    pub members: GroupSubset,
    /// Quotient class of the representative.
    pub class: usize,
}

impl CosetBlock {
    pub fn size(&self) -> usize {
        self.members.cardinality()
    }
}

/// S split along H: the kernel part S₀ = S ∩ H and one block per populated
/// nonzero coset, ordered blocks of size ≥ 3 (descending size), then
/// singletons, then pairs; ties by representative index.
#[derive(Clone, Debug)]
pub struct CosetDecomposition {
    group: Arc<GroupSpec>,
    subgroup: Subgroup,
    set: GroupSubset,
    kernel_part: GroupSubset,
    blocks: Vec<CosetBlock>,
    large: usize,
    singletons: usize,
    pairs: usize,
}

impl CosetDecomposition {
    pub fn group(&self) -> &Arc<GroupSpec> {
        &self.group
    }

    pub fn subgroup(&self) -> &Subgroup {
        &self.subgroup
    }

    pub fn set(&self) -> &GroupSubset {
        &self.set
    }

    /// S₀ = S ∩ H.
    pub fn kernel_part(&self) -> &GroupSubset {
        &self.kernel_part
    }

    pub fn blocks(&self) -> &[CosetBlock] {
        &self.blocks
    }

    /// Number of blocks of size ≥ 3 (t).
    pub fn large_count(&self) -> usize {
        self.large
    }

    /// Number of singleton blocks (r).
    pub fn singleton_count(&self) -> usize {
        self.singletons
    }

    /// Number of pair blocks (u).
    pub fn pair_count(&self) -> usize {
        self.pairs
    }

    /// Number of populated nonzero cosets (s = t + r + u).
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// |S₀| + Σ (size-≥3 block sizes) + r + 2u; always equals |S|.
    pub fn accounting_total(&self) -> usize {
        let large_sum: usize = self.blocks[..self.large].iter().map(|b| b.size()).sum();
        self.kernel_part.cardinality() + large_sum + self.singletons + 2 * self.pairs
    }
}

/// Split `set` along `h`. Requires prime index and 0 ∉ set.
pub fn coset_decompose(set: &GroupSubset, h: &Subgroup) -> CosetDecomposition {
    let group = set.group();
    assert!(is_prime(h.index() as u64), "subgroup index must be prime");
    assert!(!set.contains(group.zero()), "set must exclude the identity");
    let kernel_part = set.intersection(h.members());
    let mut blocks: Vec<CosetBlock> = Vec::new();
    for class in 1..h.index() {
        let members = set.intersection(&h.coset(class));
        if members.is_empty() {
            continue;
        }
        let rep = members.iter().next().expect("nonempty block");
        blocks.push(CosetBlock { rep, members, class });
    }
    // Size ≥ 3 descending, then singletons, then pairs; ties by rep index.
    blocks.sort_by_key(|b| {
        let sz = b.size();
        let bucket = match sz {
            1 => 1usize,
            2 => 2,
            _ => 0,
        };
        (bucket, if bucket == 0 { usize::MAX - sz } else { 0 }, b.rep.index())
    });
    let large = blocks.iter().filter(|b| b.size() >= 3).count();
    let singletons = blocks.iter().filter(|b| b.size() == 1).count();
    let pairs = blocks.iter().filter(|b| b.size() == 2).count();
    let dec = CosetDecomposition {
        group: Arc::clone(group),
        subgroup: h.clone(),
        set: set.clone(),
        kernel_part,
        blocks,
        large,
        singletons,
        pairs,
    };
    debug_assert_eq!(dec.accounting_total(), set.cardinality());
    debug_assert!(dec.block_count() <= h.index() - 1);
    dec
}

/// Exact collapse of a coefficient vector: Σ (|Sᵢ|−1) over the collapsed
/// coefficients fᵢ ∈ {0, |Sᵢ|}.
pub fn collapse_of(dec: &CosetDecomposition, coefficients: &[usize]) -> Result<usize, TracerError> {
    if coefficients.len() != dec.block_count() {
        return Err(TracerError::CoefficientLength { expected: dec.block_count(), got: coefficients.len() });
    }
    let mut total = 0usize;
    for (i, (&f, block)) in coefficients.iter().zip(&dec.blocks).enumerate() {
        let sz = block.size();
        if f > sz {
            return Err(TracerError::CoefficientOutOfRange { index: i, value: f, max: sz });
        }
        if f == 0 || f == sz {
            total += sz - 1;
        }
    }
    Ok(total)
}

/// A coefficient assignment for one target: x + H = Σ fᵢ(aᵢ + H) with
/// fᵢ ∈ [0, |Sᵢ|] and Σ fᵢ > 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Representation {
    pub target: GroupElement,
    pub coefficients: Vec<usize>,
    pub collapse: usize,
    pub route: RepRoute,
}

/// How a representation was produced.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum RepRoute {
    /// Enough size-≥3 blocks span the quotient: double the coefficients on
    /// a witness subset, leave 1 elsewhere; collapse 0.
    DoubledSubset,
    /// Backtracked through the progression-family cover of the quotient;
    /// collapse ≤ 1.
    CoverTranslation,
}

impl RepRoute {
    pub fn label(self) -> &'static str {
        match self {
            RepRoute::DoubledSubset => "doubled-subset",
            RepRoute::CoverTranslation => "cover-translation",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ConstructionVariant {
    Standard,
    /// First progression restricted to multipliers [2, |S₁|−2]; needs
    /// |S₁| ≥ 4. Guarantees an interior first coefficient.
    InteriorFirst,
}

impl ConstructionVariant {
    pub fn label(self) -> &'static str {
        match self {
            ConstructionVariant::Standard => "standard",
            ConstructionVariant::InteriorFirst => "interior-first",
        }
    }
}

/// One quotient progression Aᵢ with its translation table back to block
/// coefficients: element k·δ ↦ multiplier k (smallest k wins when the
/// progression wraps the whole line).
#[derive(Clone, Debug)]
pub struct QuotientProgression {
    pub block_index: usize,
    pub difference: GroupElement,
    /// (quotient element, coefficient) pairs in multiplier order.
    pub choices: Vec<(GroupElement, usize)>,
    pub set: GroupSubset,
}

/// How a pair-sum element maps back onto the pair blocks.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PairAssignment {
    /// b₀ = Σ bⱼ: every pair block takes coefficient 1.
    AllOnce,
    /// b₀ − bⱼ: pair block j takes coefficient 0, the rest 1.
    Drop(usize),
}

/// The quotient sets used by the cover argument: progressions A₁…A_{t+r}
/// for the size-≥3 and singleton blocks, and the pair-sum menu
/// D = {b₀, b₀−b₁, …, b₀−b_u}.
#[derive(Clone, Debug)]
pub struct ConstructionSets {
    quotient: Arc<GroupSpec>,
    variant: ConstructionVariant,
    progressions: Vec<QuotientProgression>,
    pair_menu: Vec<(GroupElement, PairAssignment)>,
    pair_set: GroupSubset,
}

impl ConstructionSets {
    pub fn quotient(&self) -> &Arc<GroupSpec> {
        &self.quotient
    }

    pub fn variant(&self) -> ConstructionVariant {
        self.variant
    }

    pub fn progressions(&self) -> &[QuotientProgression] {
        &self.progressions
    }

    /// D as a subset of the quotient.
    pub fn pair_set(&self) -> &GroupSubset {
        &self.pair_set
    }

    pub fn pair_menu(&self) -> &[(GroupElement, PairAssignment)] {
        &self.pair_menu
    }
}

/// Build the cover sets from a decomposition.
pub fn build_construction_sets(
    dec: &CosetDecomposition,
    variant: ConstructionVariant,
) -> Result<ConstructionSets, TracerError> {
    let quotient = dec.subgroup.quotient_spec();
    let p = dec.subgroup.index();
    if variant == ConstructionVariant::InteriorFirst {
        let largest = if dec.large > 0 { dec.blocks[0].size() } else { 0 };
        if largest < 4 {
            return Err(TracerError::InteriorNeedsLargeBlock { largest });
        }
    }
    let mut progressions = Vec::new();
    for (i, block) in dec.blocks[..dec.large + dec.singletons].iter().enumerate() {
        let delta = GroupElement(block.class);
        let multipliers: Vec<usize> = if block.size() == 1 {
            vec![0, 1]
        } else if i == 0 && variant == ConstructionVariant::InteriorFirst {
            (2..=block.size() - 2).collect()
        } else {
            (1..=block.size() - 1).collect()
        };
        let mut choices: Vec<(GroupElement, usize)> = Vec::new();
        let mut set = GroupSubset::empty(&quotient);
        for k in multipliers {
            let e = GroupElement(k * block.class % p);
            if set.insert(e) {
                choices.push((e, k));
            }
        }
        progressions.push(QuotientProgression { block_index: i, difference: delta, choices, set });
    }
    // Pair menu: b₀ first (collapse 0), then b₀ − bⱼ in block order.
    let pair_blocks = &dec.blocks[dec.large + dec.singletons..];
    let b0 = pair_blocks.iter().fold(0usize, |acc, b| (acc + b.class) % p);
    let mut pair_menu = vec![(GroupElement(b0), PairAssignment::AllOnce)];
    for (j, b) in pair_blocks.iter().enumerate() {
        pair_menu.push((GroupElement((b0 + p - b.class) % p), PairAssignment::Drop(j)));
    }
    let mut pair_set = GroupSubset::empty(&quotient);
    for &(e, _) in &pair_menu {
        pair_set.insert(e);
    }
    debug_assert_eq!(pair_set.cardinality(), dec.pairs + 1, "pair-sum elements must be distinct");
    Ok(ConstructionSets { quotient, variant, progressions, pair_menu, pair_set })
}

/// A decomposition of one quotient class into cover choices.
#[derive(Clone, Debug)]
pub struct CoverChoice {
    /// Index into the pair menu.
    pub pair_index: usize,
    /// Chosen multiplier per progression.
    pub multipliers: Vec<usize>,
}

/// Result of folding D + A₁ + … + A_{t+r} in the quotient.
pub enum CoverOutcome {
    /// The fold is all of Z/p; one decomposition per class, minimal
    /// collapse first (the b₀ branch is preferred).
    Full(Vec<CoverChoice>),
    /// Classes not reached by the fold.
    Missing(Vec<usize>),
}

/// Fold the construction sets over the quotient and, on full cover,
/// backtrack one decomposition for every class.
pub fn quotient_cover_check(cs: &ConstructionSets) -> CoverOutcome {
    let p = cs.quotient.order();
    // prefix[i] = D + A₁ + … + A_i (D-only variant for the b₀ preference).
    let b0_only = GroupSubset::singleton(&cs.quotient, cs.pair_menu[0].0);
    let mut prefix_all: Vec<GroupSubset> = vec![cs.pair_set.clone()];
    let mut prefix_b0: Vec<GroupSubset> = vec![b0_only];
    for prog in &cs.progressions {
        prefix_all.push(sumset(prefix_all.last().unwrap(), &prog.set));
        prefix_b0.push(sumset(prefix_b0.last().unwrap(), &prog.set));
    }
    let fold = prefix_all.last().unwrap();
    if fold.cardinality() < p {
        let missing: Vec<usize> = fold.complement().indices();
        return CoverOutcome::Missing(missing);
    }
    let choices: Vec<CoverChoice> = (0..p)
        .map(|class| {
            // Prefer the collapse-0 branch (pair element b₀) when reachable.
            if prefix_b0.last().unwrap().contains(GroupElement(class)) {
                if let Some(c) = backtrack_cover(cs, &prefix_b0, class, true) {
                    return c;
                }
            }
            backtrack_cover(cs, &prefix_all, class, false)
                .expect("full cover must decompose every class")
        })
        .collect();
    CoverOutcome::Full(choices)
}

/// Walk the prefix folds from the top, choosing for each progression the
/// first multiplier whose element leaves the remainder reachable.
fn backtrack_cover(
    cs: &ConstructionSets,
    prefix: &[GroupSubset],
    class: usize,
    b0_only: bool,
) -> Option<CoverChoice> {
    let quotient = &cs.quotient;
    let mut target = GroupElement(class);
    let mut multipliers = vec![0usize; cs.progressions.len()];
    for (i, prog) in cs.progressions.iter().enumerate().rev() {
        let mut found = false;
        for &(e, k) in &prog.choices {
            let rest = quotient.sub(target, e);
            if prefix[i].contains(rest) {
                multipliers[i] = k;
                target = rest;
                found = true;
                break;
            }
        }
        if !found {
            return None;
        }
    }
    let pair_index = if b0_only {
        if cs.pair_menu[0].0 == target {
            0
        } else {
            return None;
        }
    } else {
        cs.pair_menu.iter().position(|&(e, _)| e == target)?
    };
    Some(CoverChoice { pair_index, multipliers })
}

/// Shared per-decomposition state for producing representations.
struct RepEngine<'a> {
    dec: &'a CosetDecomposition,
    route: EngineRoute,
}

enum EngineRoute {
    Doubled {
        /// Σ of all block classes, mod p.
        class_sum: usize,
        /// Σ-closure trace over the size-≥3 block classes.
        trace: SigmaTrace,
    },
    Cover {
        cs: ConstructionSets,
        choices: Vec<CoverChoice>,
    },
}

impl<'a> RepEngine<'a> {
    fn new(dec: &'a CosetDecomposition, variant: ConstructionVariant) -> Result<RepEngine<'a>, TracerError> {
        let p = dec.subgroup.index();
        let threshold = floor_two_sqrt(p as u64 - 2) as usize;
        if variant == ConstructionVariant::Standard && dec.large_count() >= threshold {
            let quotient = dec.subgroup.quotient_spec();
            let mut big_classes = GroupSubset::empty(&quotient);
            for b in &dec.blocks[..dec.large] {
                big_classes.insert(GroupElement(b.class));
            }
            let (closure, trace) = sigma_with_trace(&big_classes);
            if closure.cardinality() < p {
                return Err(TracerError::HypothesisViolation(format!(
                    "{} classes of size-≥3 blocks reach only {} of {} quotient classes",
                    dec.large_count(),
                    closure.cardinality(),
                    p
                )));
            }
            let class_sum = dec.blocks.iter().fold(0usize, |acc, b| (acc + b.class) % p);
            Ok(RepEngine { dec, route: EngineRoute::Doubled { class_sum, trace } })
        } else {
            let cs = build_construction_sets(dec, variant)?;
            match quotient_cover_check(&cs) {
                CoverOutcome::Full(choices) => Ok(RepEngine { dec, route: EngineRoute::Cover { cs, choices } }),
                CoverOutcome::Missing(missing) => Err(TracerError::HypothesisViolation(format!(
                    "progression cover misses quotient classes {missing:?}"
                ))),
            }
        }
    }

    fn represent(&self, x: GroupElement, max_collapse: usize) -> Result<Representation, TracerError> {
        let dec = self.dec;
        let p = dec.subgroup.index();
        let class_x = dec.subgroup.project(x);
        let (coefficients, route) = match &self.route {
            EngineRoute::Doubled { class_sum, trace } => {
                let tau = GroupElement((class_x + p - class_sum) % p);
                let doubled = trace.witness(tau).ok_or_else(|| {
                    TracerError::HypothesisViolation(format!(
                        "no block-class subset sums to residual class {}",
                        tau.index()
                    ))
                })?;
                let coeffs: Vec<usize> = dec
                    .blocks
                    .iter()
                    .enumerate()
                    .map(|(i, b)| {
                        if i < dec.large && doubled.contains(GroupElement(b.class)) {
                            2
                        } else {
                            1
                        }
                    })
                    .collect();
                (coeffs, RepRoute::DoubledSubset)
            }
            EngineRoute::Cover { cs, choices } => {
                let choice = &choices[class_x];
                let mut coeffs = vec![0usize; dec.block_count()];
                for (prog, &k) in cs.progressions.iter().zip(&choice.multipliers) {
                    coeffs[prog.block_index] = k;
                }
                let pair_base = dec.large + dec.singletons;
                match cs.pair_menu[choice.pair_index].1 {
                    PairAssignment::AllOnce => {
                        for f in coeffs[pair_base..].iter_mut() {
                            *f = 1;
                        }
                    }
                    PairAssignment::Drop(j) => {
                        for (jj, f) in coeffs[pair_base..].iter_mut().enumerate() {
                            *f = if jj == j { 0 } else { 1 };
                        }
                    }
                }
                (coeffs, RepRoute::CoverTranslation)
            }
        };
        // Never trust the translation: re-check the defining congruence,
        // the coefficient sum, and the collapse budget.
        let mut lhs = 0usize;
        for (f, b) in coefficients.iter().zip(&dec.blocks) {
            lhs = (lhs + f * b.class) % p;
        }
        if lhs != class_x {
            return Err(TracerError::HypothesisViolation(format!(
                "translated coefficients sum to class {lhs}, target class {class_x}"
            )));
        }
        if coefficients.iter().sum::<usize>() == 0 {
            return Err(TracerError::HypothesisViolation("all-zero coefficient vector".into()));
        }
        let collapse = collapse_of(dec, &coefficients)?;
        if collapse > max_collapse {
            return Err(TracerError::NoRepresentation { class: class_x, max_collapse });
        }
        Ok(Representation { target: x, coefficients, collapse, route })
    }
}

/// One representation of x + H with collapse ≤ `max_collapse`.
///
/// Dispatch: with the standard variant and enough size-≥3 blocks to span
/// the quotient, the doubled-subset route yields collapse 0; otherwise the
/// progression cover is built (interior-first when requested) and the
/// backtracked choice is translated into coefficients. Errors of kind
/// [`TracerError::HypothesisViolation`] mean certified machinery failed on
/// an input it provably covers — they are never absorbed.
pub fn find_representation(
    dec: &CosetDecomposition,
    x: GroupElement,
    max_collapse: usize,
    variant: ConstructionVariant,
) -> Result<Representation, TracerError> {
    RepEngine::new(dec, variant)?.represent(x, max_collapse)
}

/// The exact fiber (Σ(S₀) ∪ {0}) + Σ_{f₁}(S₁) + … + Σ_{f_s}(S_s).
///
/// The result provably lies inside the coset `target + H`; that inclusion
/// is asserted. When its size reaches q = |H| it is the whole coset.
pub fn fiber_cover(dec: &CosetDecomposition, rep: &Representation) -> GroupSubset {
    let mut acc = sigma(&dec.kernel_part);
    acc.insert(dec.group.zero());
    for (f, block) in rep.coefficients.iter().zip(&dec.blocks) {
        let table = crate::sumset::restricted_sumsets(&block.members);
        acc = sumset(&acc, table.layer(*f));
    }
    let coset = dec.subgroup.members().translate(rep.target);
    assert!(acc.is_subset_of(&coset), "fiber must lie in the target coset");
    acc
}

/// Dispatch label of a spanning certificate.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum CertCase {
    /// |S₀| ≥ ⌊2√(q−2)⌋: S₀ alone spans H.
    KernelLarge,
    /// 3 ≤ |S₀| < ⌊2√(q−2)⌋.
    KernelMiddle,
    /// |S₀| ≤ 2 and every block has size ≤ 3.
    SmallKernelSmallBlocks,
    /// |S₀| ≤ 2 and the leading block has size ≥ 4.
    SmallKernelLargeBlock,
    /// Produced by the direct dynamic-programming closure, no coset
    /// machinery involved.
    DirectDp,
}

impl CertCase {
    pub fn label(self) -> &'static str {
        match self {
            CertCase::KernelLarge => "kernel-large",
            CertCase::KernelMiddle => "kernel-middle",
            CertCase::SmallKernelSmallBlocks => "small-kernel-small-blocks",
            CertCase::SmallKernelLargeBlock => "small-kernel-large-block",
            CertCase::DirectDp => "direct-dp",
        }
    }
}

/// Per-target trace of the strategy path.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub representation: Representation,
    pub fiber_size: usize,
    /// (p + q − 2) + max{1, |S₀|−1} − collapse − s.
    pub count_bound: i64,
    /// count_bound ≥ q, the arithmetic precondition that forces the fiber
    /// to fill its coset.
    pub count_bound_holds: bool,
}

/// A per-element table of witness subsets proving Σ(S) = G, with the
/// dispatch label and per-target traces where the strategy path ran.
#[derive(Clone, Debug)]
pub struct SpanCertificate {
    pub group: Arc<GroupSpec>,
    /// The set the witnesses draw from.
    pub set: GroupSubset,
    pub case: CertCase,
    /// Witness subsets indexed by target element.
    pub per_element: Vec<GroupSubset>,
    /// Traces indexed by target element (None on routes without one).
    pub traces: Vec<Option<TraceRecord>>,
}

#[derive(Copy, Clone, Debug, Default)]
pub struct CertifyOptions {
    /// When the input is larger than p + q − 2, certify the p + q − 2
    /// lowest-index elements (the certificate then also covers the
    /// superset, by Σ-monotonicity). Without this flag an oversized input
    /// is refused.
    pub truncate_oversize: bool,
}

fn window_parameters(group: &GroupSpec) -> Result<(u64, u64), TracerError> {
    let n = group.order() as u64;
    let p = smallest_prime(group).ok_or(TracerError::NotSemiprime { order: group.order() })?;
    let q = n / p;
    if !group.is_cyclic() || q <= p || !is_prime(q) || p * q != n {
        return Err(TracerError::NotSemiprime { order: group.order() });
    }
    if !(p + floor_two_sqrt(p - 2) + 1 < q && q < 2 * p) {
        return Err(TracerError::OutsideWindow { p, q });
    }
    debug_assert!(p >= 7, "the window implies p ≥ 7");
    Ok((p, q))
}

/// Produce a spanning certificate for |S| = p + q − 2 in a window group,
/// by the constructive case machinery.
pub fn certify_span(set: &GroupSubset, options: CertifyOptions) -> Result<SpanCertificate, TracerError> {
    let group = set.group();
    let (p, q) = window_parameters(group)?;
    if set.contains(group.zero()) {
        return Err(TracerError::ContainsZero);
    }
    let expected = (p + q - 2) as usize;
    let working = if set.cardinality() == expected {
        set.clone()
    } else if set.cardinality() > expected && options.truncate_oversize {
        let mut w = GroupSubset::empty(group);
        for e in set.iter().take(expected) {
            w.insert(e);
        }
        w
    } else {
        return Err(TracerError::WrongSetSize { expected, got: set.cardinality() });
    };

    let h = subgroup_of_index_p(group, p)?;
    let dec = coset_decompose(&working, &h);
    let s0 = dec.kernel_part().cardinality();
    let threshold_q = floor_two_sqrt(q - 2) as usize;
    let s1 = if dec.large_count() > 0 { dec.blocks()[0].size() } else { 0 };

    if s0 >= threshold_q {
        return certify_kernel_large(&dec, p as usize, q as usize);
    }
    let (case, max_collapse, variant) = if s0 >= 3 {
        (CertCase::KernelMiddle, 1, ConstructionVariant::Standard)
    } else if s1 <= 3 {
        let need = if dec.block_count() == p as usize - 1 { 0 } else { 1 };
        (CertCase::SmallKernelSmallBlocks, need, ConstructionVariant::Standard)
    } else {
        (CertCase::SmallKernelLargeBlock, 1, ConstructionVariant::InteriorFirst)
    };
    certify_by_fibers(&dec, case, max_collapse, variant, p as usize, q as usize)
}

/// Case: S₀ alone spans H; p−1 distinct elements outside H cover the
/// quotient with {0, bᵢ} pairs.
fn certify_kernel_large(dec: &CosetDecomposition, p: usize, q: usize) -> Result<SpanCertificate, TracerError> {
    let group = dec.group();
    let h = dec.subgroup();
    let (closure0, kernel_trace) = sigma_with_trace(dec.kernel_part());
    if &closure0 != h.members() {
        return Err(TracerError::HypothesisViolation(format!(
            "S₀ of size {} ≥ ⌊2√(q−2)⌋ reaches only {} of {} subgroup elements",
            dec.kernel_part().cardinality(),
            closure0.cardinality(),
            q
        )));
    }
    let outside = dec.set().difference(h.members());
    if outside.cardinality() < p - 1 {
        return Err(TracerError::HypothesisViolation(format!(
            "only {} elements outside H, need {}",
            outside.cardinality(),
            p - 1
        )));
    }
    let picks: Vec<GroupElement> = outside.iter().take(p - 1).collect();
    let classes: Vec<usize> = picks.iter().map(|&b| h.project(b)).collect();
    // Quotient chain P_i = P_{i−1} + {0, class_i}, with multiplicity.
    let quotient = h.quotient_spec();
    let mut chain: Vec<GroupSubset> = Vec::with_capacity(p);
    chain.push(GroupSubset::singleton(&quotient, quotient.zero()));
    for &c in &classes {
        let prev = chain.last().unwrap();
        // P + {0, c} = P ∪ (P + c); 0 ∈ P keeps the chain nested.
        let next = prev.union(&prev.translate(GroupElement(c)));
        chain.push(next);
    }
    if chain.last().unwrap().cardinality() < p {
        return Err(TracerError::HypothesisViolation(
            "p−1 two-element quotient sets fail to cover the quotient".into(),
        ));
    }
    let per_element: Result<Vec<GroupSubset>, TracerError> = group
        .elements()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&x| {
            // Backtrack a sub-multiset J of the picks hitting class(x).
            let mut j_set = GroupSubset::empty(group);
            let mut y = GroupElement(h.project(x));
            for i in (0..picks.len()).rev() {
                if chain[i].contains(y) {
                    continue;
                }
                j_set.insert(picks[i]);
                y = quotient.sub(y, GroupElement(classes[i]));
            }
            debug_assert_eq!(y, quotient.zero());
            let rest = group.sub(x, j_set.total_sum());
            debug_assert_eq!(h.project(rest), 0);
            let mut witness = j_set;
            if rest != group.zero() || witness.is_empty() {
                let kernel_witness = kernel_trace.witness(rest).ok_or_else(|| {
                    TracerError::HypothesisViolation(format!(
                        "subgroup element {} has no kernel witness",
                        rest.index()
                    ))
                })?;
                witness.union_with(&kernel_witness);
            }
            debug_assert_eq!(witness.total_sum(), x);
            Ok(witness)
        })
        .collect();
    let per_element = per_element?;
    let traces = vec![None; group.order()];
    Ok(SpanCertificate {
        group: Arc::clone(group),
        set: dec.set().clone(),
        case: CertCase::KernelLarge,
        per_element,
        traces,
    })
}

/// Cases driven by representations and fiber covers.
fn certify_by_fibers(
    dec: &CosetDecomposition,
    case: CertCase,
    max_collapse: usize,
    variant: ConstructionVariant,
    p: usize,
    q: usize,
) -> Result<SpanCertificate, TracerError> {
    let group = dec.group();
    let engine = RepEngine::new(dec, variant)?;
    let (_, kernel_trace) = sigma_with_trace(dec.kernel_part());
    let mut base = sigma(dec.kernel_part());
    base.insert(group.zero());
    let provers: Vec<RestrictedProver> = dec.blocks().iter().map(|b| RestrictedProver::new(&b.members)).collect();
    let s0 = dec.kernel_part().cardinality();
    let s = dec.block_count();

    let results: Result<Vec<(GroupSubset, Option<TraceRecord>)>, TracerError> = group
        .elements()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&x| {
            let rep = engine.represent(x, max_collapse)?;
            // Fold the fiber, keeping prefixes for the backtrack.
            let mut prefixes: Vec<GroupSubset> = Vec::with_capacity(s + 1);
            prefixes.push(base.clone());
            for (f, prover) in rep.coefficients.iter().zip(&provers) {
                prefixes.push(sumset(prefixes.last().unwrap(), prover.layer(*f)));
            }
            let fiber = prefixes.last().unwrap();
            let coset = dec.subgroup().members().translate(x);
            assert!(fiber.is_subset_of(&coset), "fiber must lie in the target coset");
            if fiber.cardinality() < q {
                return Err(TracerError::HypothesisViolation(format!(
                    "fiber of {} has {} < q = {} elements",
                    x.index(),
                    fiber.cardinality(),
                    q
                )));
            }
            debug_assert_eq!(fiber, &coset);
            // Extract the witness: walk layers from the top.
            let mut witness = GroupSubset::empty(group);
            let mut t = x;
            for i in (0..s).rev() {
                let f = rep.coefficients[i];
                let layer = provers[i].layer(f);
                let mut part = None;
                for sigma_i in layer.iter() {
                    let rest = group.sub(t, sigma_i);
                    if prefixes[i].contains(rest) {
                        part = Some(sigma_i);
                        break;
                    }
                }
                let sigma_i = part.expect("fiber membership guarantees a stage decomposition");
                let block_witness = provers[i]
                    .witness(f, sigma_i)
                    .expect("layer membership guarantees a block witness");
                witness.union_with(&block_witness);
                t = group.sub(t, sigma_i);
            }
            if t != group.zero() {
                let kernel_witness = kernel_trace.witness(t).ok_or_else(|| {
                    TracerError::HypothesisViolation(format!(
                        "kernel residue {} of target {} has no witness",
                        t.index(),
                        x.index()
                    ))
                })?;
                witness.union_with(&kernel_witness);
            }
            if witness.is_empty() || witness.total_sum() != x {
                return Err(TracerError::HypothesisViolation(format!(
                    "extracted witness for {} re-sums to {}",
                    x.index(),
                    witness.total_sum().index()
                )));
            }
            let count_bound = (p + q - 2) as i64 + 1.max(s0 as i64 - 1) - rep.collapse as i64 - s as i64;
            let trace = TraceRecord {
                representation: rep,
                fiber_size: fiber.cardinality(),
                count_bound,
                count_bound_holds: count_bound >= q as i64,
            };
            Ok((witness, Some(trace)))
        })
        .collect();
    let results = results?;
    let (per_element, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(SpanCertificate { group: Arc::clone(group), set: dec.set().clone(), case, per_element, traces })
}

/// Certificate by the direct dynamic-programming closure, valid in any
/// group for any spanning set. No coset machinery, no traces.
pub fn certify_span_dp(set: &GroupSubset) -> Result<SpanCertificate, TracerError> {
    let group = set.group();
    if set.contains(group.zero()) {
        return Err(TracerError::ContainsZero);
    }
    let (closure, trace) = sigma_with_trace(set);
    if closure.cardinality() < group.order() {
        return Err(TracerError::NotSpanning { missing: group.order() - closure.cardinality() });
    }
    let per_element: Vec<GroupSubset> = group
        .elements()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&x| trace.witness(x).expect("full closure has a witness for every element"))
        .collect();
    Ok(SpanCertificate {
        group: Arc::clone(group),
        set: set.clone(),
        case: CertCase::DirectDp,
        per_element,
        traces: vec![None; group.order()],
    })
}

/// A validation failure, naming the offending target element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValidationFailure {
    WrongTableSize { expected: usize, got: usize },
    EmptyWitness { x: usize },
    NotSubset { x: usize },
    WrongSum { x: usize, got: usize },
    TraceCoefficients { x: usize, detail: String },
    TraceCongruence { x: usize, got_class: usize, want_class: usize },
    TraceCollapse { x: usize, stated: usize, recomputed: usize },
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub failures: Vec<ValidationFailure>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Re-check a certificate from scratch: every witness is a nonempty subset
/// of S re-summing to its target, the table covers all of G, and every
/// trace's congruence and collapse arithmetic hold. Agnostic to how the
/// certificate was produced.
pub fn validate_certificate(cert: &SpanCertificate) -> ValidationReport {
    let group = &cert.group;
    let mut failures = Vec::new();
    if cert.per_element.len() != group.order() {
        failures.push(ValidationFailure::WrongTableSize { expected: group.order(), got: cert.per_element.len() });
        return ValidationReport { failures };
    }
    for (x, witness) in cert.per_element.iter().enumerate() {
        if witness.is_empty() {
            failures.push(ValidationFailure::EmptyWitness { x });
            continue;
        }
        if !witness.is_subset_of(&cert.set) {
            failures.push(ValidationFailure::NotSubset { x });
        }
        let total = witness.total_sum();
        if total.index() != x {
            failures.push(ValidationFailure::WrongSum { x, got: total.index() });
        }
    }
    if cert.traces.iter().any(Option::is_some) {
        match trace_context(cert) {
            Ok(dec) => {
                let p = dec.subgroup().index();
                for (x, trace) in cert.traces.iter().enumerate() {
                    let Some(trace) = trace else { continue };
                    let rep = &trace.representation;
                    if rep.coefficients.len() != dec.block_count() {
                        failures.push(ValidationFailure::TraceCoefficients {
                            x,
                            detail: format!(
                                "length {} vs {} blocks",
                                rep.coefficients.len(),
                                dec.block_count()
                            ),
                        });
                        continue;
                    }
                    let mut lhs = 0usize;
                    let mut ok = true;
                    for (i, (&f, b)) in rep.coefficients.iter().zip(dec.blocks()).enumerate() {
                        if f > b.size() {
                            failures.push(ValidationFailure::TraceCoefficients {
                                x,
                                detail: format!("coefficient {f} at block {i} exceeds size {}", b.size()),
                            });
                            ok = false;
                            break;
                        }
                        lhs = (lhs + f * b.class) % p;
                    }
                    if !ok {
                        continue;
                    }
                    let want = dec.subgroup().project(GroupElement(x));
                    if lhs != want {
                        failures.push(ValidationFailure::TraceCongruence { x, got_class: lhs, want_class: want });
                    }
                    match collapse_of(&dec, &rep.coefficients) {
                        Ok(c) if c == rep.collapse => {}
                        Ok(c) => failures.push(ValidationFailure::TraceCollapse { x, stated: rep.collapse, recomputed: c }),
                        Err(e) => failures.push(ValidationFailure::TraceCoefficients { x, detail: e.to_string() }),
                    }
                }
            }
            Err(e) => failures.push(ValidationFailure::TraceCoefficients { x: 0, detail: e.to_string() }),
        }
    }
    ValidationReport { failures }
}

fn trace_context(cert: &SpanCertificate) -> Result<CosetDecomposition, TracerError> {
    let (p, _) = window_parameters(&cert.group)?;
    let h = subgroup_of_index_p(&cert.group, p)?;
    Ok(coset_decompose(&cert.set, &h))
}

/// Render the certificate file: a small header, then one record per
/// target element with its witness as element indices.
pub fn render_certificate(cert: &SpanCertificate) -> String {
    let mut out = String::new();
    let n = cert.group.order() as u64;
    writeln!(out, "group {}", cert.group).unwrap();
    writeln!(out, "order {n}").unwrap();
    if let Some(p) = smallest_prime(&cert.group) {
        let q = n / p;
        if q > 1 && is_prime(q) && p * q == n {
            writeln!(out, "p {p}").unwrap();
            writeln!(out, "q {q}").unwrap();
        }
    }
    writeln!(out, "size {}", cert.set.cardinality()).unwrap();
    writeln!(out, "set {}", cert.set).unwrap();
    writeln!(out, "case {}", cert.case.label()).unwrap();
    writeln!(out, "cases {}={}", cert.case.label(), cert.per_element.len()).unwrap();
    for (x, w) in cert.per_element.iter().enumerate() {
        writeln!(out, "{x}: {w}").unwrap();
    }
    out
}
