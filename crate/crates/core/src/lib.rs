//! Exact subset-sum spanning analysis for finite abelian groups.
//!
//! The crate answers one family of questions exactly: which subsets
//! S ⊆ G \ {0} of a finite abelian group reach every group element as a
//! sum of distinct members, and how large S must be before that is
//! automatic (the critical number cr(G)). Everything is built on dense
//! element indexing and bit-packed subsets, so the inner loops are
//! word-parallel set operations.
//!
//! Modules:
//! - [`group`]: invariant-factor groups, element indexing, index-p subgroups.
//! - [`subset`]: the bit-packed subset type and its translation kernels.
//! - [`sumset`]: sumsets, restricted sumsets Σ_k, the closure Σ, witnesses.
//! - [`colex`]: colexicographic k-subset enumeration.
//! - [`critical`]: the closed-form cr(G) casework, the exhaustive oracle,
//!   and the extremal lower-bound construction.
//! - [`theorems`]: exhaustive/randomized verification of the addition
//!   theorems the casework rests on.
//! - [`tracer`]: the constructive spanning machinery for cyclic groups of
//!   order pq in the p+q−2 window, producing independently checkable
//!   certificates.

pub mod arith;
pub mod colex;
pub mod critical;
pub mod group;
pub mod subset;
pub mod sumset;
pub mod theorems;
pub mod tracer;

pub use group::{
    enumerate_abelian_groups, parse_group_spec, quotient_project, smallest_prime,
    subgroup_of_index_p, GroupElement, GroupError, GroupSpec, Subgroup,
};
pub use subset::GroupSubset;
pub use sumset::{
    detect_ap, is_ap_with, iterated_sumset, restricted_sumsets, sigma, sigma_witness, sumset,
    RestrictedProver, RestrictedSumsetTable,
};
pub use critical::{
    cr_bruteforce, cr_formula, cr_table, extremal_witness, spanning_all_of_size, Budget, CrCase,
    CrResult, CrTableRow, OracleError, OracleOutcome, OracleStatus, ScanReport, SizeStats,
};
pub use theorems::{
    saturation_size, verify_cauchy_davenport, verify_ddsh, verify_diderrich, BoundReport,
    DdshOutcome, InstanceRecord, TheoremId, VerifyError, VerifyMode,
};
pub use tracer::{
    build_construction_sets, certify_span, certify_span_dp, collapse_of, coset_decompose,
    find_representation, fiber_cover, render_certificate, validate_certificate, CertCase,
    CertifyOptions, ConstructionSets, ConstructionVariant, CosetBlock, CosetDecomposition,
    CoverOutcome, Representation, RepRoute, SpanCertificate, TracerError, ValidationReport,
};

/// Draw a uniformly random subset of G \ {0} of the given size,
/// reproducibly from the supplied stream.
pub fn random_nonzero_subset(
    group: &std::sync::Arc<GroupSpec>,
    size: usize,
    rng: &mut (impl rand_core::RngCore + ?Sized),
) -> GroupSubset {
    let n = group.order();
    assert!(size <= n - 1, "requested {size} of {} nonzero elements", n - 1);
    let mut s = GroupSubset::empty(group);
    while s.cardinality() < size {
        let i = 1 + (rng.next_u64() % (n as u64 - 1)) as usize;
        s.insert(GroupElement(i));
    }
    s
}
