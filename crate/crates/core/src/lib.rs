//! Decomposition of pairs of real anti-involutions into indecomposable
//! canonical blocks.
//!
//! A pair of real matrices (J1, J2) with J1^2 = J2^2 = -I turns R^d into a
//! module over the infinite dihedral group twisted by these signs: setting
//! a = J1 J2 and b = J2 gives b a b^-1 = a^-1 and b^2 = -1. This crate
//! classifies such pairs up to simultaneous change of basis. Every pair
//! splits into indecomposable summands, each determined by a single invariant
//! (an irreducible real polynomial root plus an exponent), and the crate
//! computes that multiset of invariants together with the explicit change of
//! basis to the canonical form.
//!
//! The main entry points:
//!
//! * [`validate_pair`] / [`decompose`] — classify a pair, producing a
//!   [`DecompositionReport`] with invariants, canonical matrices, the change
//!   of basis, and residuals.
//! * [`generate`] — draw a reproducible pseudo-random pair with prescribed
//!   invariants and bounded basis conditioning.
//! * [`is_isomorphic`] — compare two reports.
//! * [`verify_report`] — re-check every claim of a report independently.
//! * [`commutant`] / [`split_attempt`] — a second route to indecomposability
//!   via certified splitting idempotents.
//!
//! ```
//! use idinf::{
//!     decompose, generate, is_isomorphic, verify_report, FactorKind, GenerationSpec,
//!     SummandInvariant, TolerancePolicy,
//! };
//!
//! let tol = TolerancePolicy::default();
//! let invariants = vec![
//!     SummandInvariant::new(FactorKind::Real { r: 2.0 }, 2),
//!     SummandInvariant::new(FactorKind::Complex { e: 0.6, f: 0.8 }, 1),
//! ];
//! let drawn = generate(&GenerationSpec::new(invariants.clone(), 42)).unwrap();
//! let report = decompose(&drawn.pair, &tol).unwrap();
//! assert!(idinf::same_invariants(&report.invariant_list(), &invariants, tol.root_rel));
//! assert!(verify_report(&drawn.pair, &report, &tol).unwrap().pass);
//!
//! let again = decompose(&generate(&GenerationSpec::new(invariants, 7)).unwrap().pair, &tol);
//! assert!(is_isomorphic(&report, &again.unwrap(), &tol));
//! ```

pub mod canonical;
pub mod decompose;
pub mod error;
pub mod linalg;
pub mod pair;
mod rng;
pub mod spectral;
pub mod verify;

pub use canonical::{
    assemble_canonical, canonical_model, generate, is_irreducible, normalize_invariant,
    quaternion_j, same_invariants, CanonicalModel, GeneratedPair, GenerationSpec,
    SummandInvariant, SELF_DUAL_EPS,
};
pub use decompose::{
    decompose, extend_b_pairs, is_isomorphic, quotient_frame, select_generators,
    split_class_summands, DecompositionReport, Generator, QuotientFrame, ResidualSummary,
    ScalarMode, Summand,
};
pub use error::{Error, Result};
pub use linalg::{
    cond_spectral, inverse, least_norm_solve, nullspace, rank, spectral_norm, RealMatrix,
    RealVector, TolerancePolicy,
};
pub use pair::{
    generators, relation_residuals, validate_pair, ComplexStructurePair, GeneratorPair,
    RelationResiduals,
};
pub use spectral::{
    char_poly, filtration, irreducible_factors, reciprocal_classes, reciprocal_partner,
    FactorKind, Filtration, IrreducibleFactor, RealPoly, ReciprocalClass,
};
pub use verify::{
    commutant, split_attempt, verify_report, CheckLine, CommutantBasis, SplitVerdict,
    VerifySummary, PROJECTOR_TOL,
};
