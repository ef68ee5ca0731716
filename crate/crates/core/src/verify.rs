//! Independent checking of decomposition reports, commutant computation, and
//! a randomized indecomposability probe.
//!
//! `verify_report` re-derives every claim of a report from the pair itself:
//! it never trusts intermediate data of the decomposition path. `commutant`
//! and `split_attempt` give a second, structural route to "is this pair a
//! direct sum?": a certified idempotent in the commutant exhibits a splitting,
//! and repeated failure to find one is statistical evidence of
//! indecomposability.

use crate::canonical;
use crate::decompose::DecompositionReport;
use crate::error::{Error, Result};
use crate::linalg::{self, RealMatrix, TolerancePolicy};
use crate::pair::{generators, relation_residuals, ComplexStructurePair, GeneratorPair};
use crate::rng::SplitMix64;
use crate::spectral::{self, IrreducibleFactor};

/// One verification check: a measured value against its bound.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct VerifySummary {
    pub pass: bool,
    pub cond_s: f64,
    pub checks: Vec<CheckLine>,
}

/// Exact idempotent-size certification bounds used by [`split_attempt`].
pub const PROJECTOR_TOL: f64 = 1e-8;

/// Re-checks a decomposition report against the pair it claims to describe.
///
/// Residual checks are accepted below `tol.residual_rel * max(1, cond(S))`:
/// a conjugation by an ill-conditioned basis cannot do better than that.
/// Returns [`Error::DimensionMismatch`] when the report and pair disagree on
/// the space; all other problems are verdicts, not errors.
pub fn verify_report(
    pair: &ComplexStructurePair,
    report: &DecompositionReport,
    tol: &TolerancePolicy,
) -> Result<VerifySummary> {
    let dim = pair.dim();
    if report.dim != dim || report.s.nrows() != dim || report.s.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: report.dim,
        });
    }
    linalg::require_finite(&report.s, "report change of basis")?;
    let g = generators(pair);
    let mut checks: Vec<CheckLine> = Vec::new();
    let mut push = |name: &str, value: f64, bound: f64, pass: bool| {
        checks.push(CheckLine {
            name: name.to_string(),
            value,
            bound,
            pass,
        });
    };

    // Basis invertibility, from scratch. A basis whose decomposition cannot
    // be validated counts as non-invertible rather than as an error.
    let (sigma_max, sigma_min) = match linalg::svd_of(&report.s) {
        Ok(svd) => {
            let sv = &svd.singular_values;
            (
                sv.iter().cloned().fold(0.0_f64, f64::max),
                sv.iter().cloned().fold(f64::INFINITY, f64::min),
            )
        }
        Err(_) => (f64::INFINITY, 0.0),
    };
    let inv_thresh = tol.rank_threshold(dim, dim, sigma_max);
    let invertible = sigma_min > inv_thresh;
    push(
        "basis_smallest_singular_value",
        sigma_min,
        inv_thresh,
        invertible,
    );
    let cond_s = if invertible {
        sigma_max / sigma_min
    } else {
        f64::INFINITY
    };
    let res_bound = tol.residual_rel * cond_s.max(1.0);

    // The canonical matrices in the report must be exactly the models implied
    // by its own invariant list.
    let invariant_list: Vec<_> = report.invariant_list();
    let report_canon_dims_ok = report.canonical_a.nrows() == dim
        && report.canonical_a.ncols() == dim
        && report.canonical_b.nrows() == dim
        && report.canonical_b.ncols() == dim;
    let canon_ok = match canonical::assemble_canonical(&invariant_list) {
        // An invariant list whose total dimension disagrees with the pair
        // (e.g. a tampered exponent) is a failed check, not a panic.
        Ok((a_c, b_c)) if a_c.nrows() == dim && report_canon_dims_ok => {
            let da = (&a_c - &report.canonical_a).norm();
            let db = (&b_c - &report.canonical_b).norm();
            let bound = 1e-12 * (1.0 + a_c.norm());
            push("canonical_matrices_match_invariants", da.max(db), bound, da <= bound && db <= bound);
            da <= bound && db <= bound
        }
        _ => {
            push("canonical_matrices_match_invariants", f64::INFINITY, 0.0, false);
            false
        }
    };
    let _ = canon_ok;

    // Conjugation residuals, recomputed.
    if invertible && report_canon_dims_ok {
        let s_inv = linalg::inverse(&report.s, tol)
            .map_err(|_| Error::NumericalFailure("inverting an invertible basis failed".into()))?;
        let conj_a = (&s_inv * g.a() * &report.s - &report.canonical_a).norm() / g.a().norm();
        let conj_b = (&s_inv * g.b() * &report.s - &report.canonical_b).norm() / g.b().norm();
        push("conjugation_residual_a", conj_a, res_bound, conj_a <= res_bound);
        push("conjugation_residual_b", conj_b, res_bound, conj_b <= res_bound);
    } else {
        push("conjugation_residual_a", f64::INFINITY, res_bound, false);
        push("conjugation_residual_b", f64::INFINITY, res_bound, false);
    }

    // Defining relations of the pair itself.
    let rel = relation_residuals(&g);
    let cond_a = linalg::cond_spectral(g.a());
    let rel_bound = tol.residual_rel * cond_a.max(1.0);
    push(
        "relation_conjugation",
        rel.conjugation,
        rel_bound,
        rel.conjugation <= rel_bound,
    );
    push(
        "relation_b_square",
        rel.b_square,
        tol.residual_rel,
        rel.b_square <= tol.residual_rel,
    );

    // Summand bookkeeping and invariance of each summand under a and b.
    let total: usize = report.summands.iter().map(|s| s.basis.ncols()).sum();
    push(
        "summand_dimensions_sum",
        total as f64,
        dim as f64,
        total == dim,
    );
    let counted: usize = report.invariants.iter().map(|(_, c)| c).sum();
    push(
        "invariant_counts_sum",
        counted as f64,
        report.summands.len() as f64,
        counted == report.summands.len(),
    );
    let mut worst_invariance = 0.0_f64;
    let mut invariance_ok = true;
    for s in &report.summands {
        if s.basis.nrows() != dim {
            invariance_ok = false;
            worst_invariance = f64::INFINITY;
            break;
        }
        let q = match linalg::orthonormal_columns(&s.basis, tol) {
            Ok(q) if q.ncols() == s.basis.ncols() => q,
            _ => {
                invariance_ok = false;
                worst_invariance = f64::INFINITY;
                break;
            }
        };
        for m in [g.a(), g.b()] {
            let img = m * &s.basis;
            let res = (&img - &q * (q.transpose() * &img)).norm() / img.norm();
            worst_invariance = worst_invariance.max(res);
        }
    }
    invariance_ok = invariance_ok && worst_invariance <= res_bound;
    push(
        "summand_invariance_worst",
        worst_invariance,
        res_bound,
        invariance_ok,
    );

    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifySummary {
        pass,
        cond_s,
        checks,
    })
}

/// Basis of the joint commutant {X : Xa = aX, Xb = bX}.
#[derive(Debug, Clone)]
pub struct CommutantBasis {
    /// Real dimension; at least 1 (the identity).
    pub dim: usize,
    /// Orthonormal (in the Frobenius inner product) basis elements.
    pub elements: Vec<RealMatrix>,
}

/// Computes the commutant by stacking the two commutation operators
/// X -> aX - Xa and X -> bX - Xb (column-major vectorization) and taking the
/// joint nullspace. Cost grows like dim^6; intended for moderate dimensions.
pub fn commutant(g: &GeneratorPair, tol: &TolerancePolicy) -> Result<CommutantBasis> {
    let d = g.dim();
    let n2 = d * d;
    let mut k = RealMatrix::zeros(2 * n2, n2);
    for (block, m) in [(0usize, g.a()), (n2, g.b())] {
        for i in 0..d {
            for j in 0..d {
                let row = block + j * d + i;
                for p in 0..d {
                    k[(row, j * d + p)] += m[(i, p)];
                }
                for q in 0..d {
                    k[(row, q * d + i)] -= m[(q, j)];
                }
            }
        }
    }
    let (_, basis) = linalg::nullspace(&k, tol)?;
    let dim = basis.ncols();
    if dim == 0 {
        return Err(Error::AssertionFailure(
            "commutant lost the identity matrix".into(),
        ));
    }
    let elements = (0..dim)
        .map(|j| RealMatrix::from_column_slice(d, d, basis.column(j).as_slice()))
        .collect();
    Ok(CommutantBasis { dim, elements })
}

/// Verdict of the randomized splitting probe.
#[derive(Debug, Clone)]
pub enum SplitVerdict {
    /// A certified idempotent commuting with both generators: the pair is a
    /// nontrivial direct sum.
    SplitFound {
        projector: RealMatrix,
        rank: usize,
        trial: usize,
    },
    /// No certified splitting in the given number of trials. Statistical
    /// evidence (not proof) of indecomposability.
    NoSplitFound { trials: usize },
}

/// Normalized annihilator power p(M)^(mult+1) of one eigenvalue cluster.
fn factor_annihilator(m: &RealMatrix, factor: &IrreducibleFactor) -> RealMatrix {
    let p_of_m = factor.kind.poly().eval_matrix(m);
    spectral::matrix_power_normalized(&p_of_m, factor.multiplicity + 1)
}

/// Randomized search for a splitting projector in the commutant.
///
/// Each trial draws a random commutant element M from a per-trial substream
/// of `seed`, clusters its eigenvalues (conjugate pairs count as a single
/// cluster; the radius has a floor of 1e-3 because commutant elements of
/// blocks with exponent n scatter like eps^(1/n)), and — if at least two
/// clusters appear — builds the spectral projector onto the first cluster.
/// The projector is *certified*, never trusted: it must be idempotent and
/// commute with both generators within [`PROJECTOR_TOL`].
pub fn split_attempt(
    g: &GeneratorPair,
    seed: u64,
    trials: usize,
    tol: &TolerancePolicy,
) -> Result<SplitVerdict> {
    let cb = commutant(g, tol)?;
    let d = g.dim();
    let cluster_rel = tol.root_rel.max(1e-3);
    for trial in 0..trials {
        let mut rng = SplitMix64::substream(seed, trial as u64);
        let mut m = RealMatrix::zeros(d, d);
        for el in &cb.elements {
            let c = rng.next_unit();
            m += el * c;
        }
        let Ok(eigs) = spectral::eigenvalues(&m) else {
            continue;
        };
        let Ok(factors) = spectral::cluster_factors(&eigs, cluster_rel) else {
            continue;
        };
        if factors.len() < 2 {
            continue;
        }
        let target = &factors[0];
        let dim_c = target.kind.degree() * target.multiplicity;
        if dim_c == 0 || dim_c >= d {
            continue;
        }
        let Ok(w_c) = linalg::smallest_right_singular_vectors(&factor_annihilator(&m, target), dim_c)
        else {
            continue;
        };
        let mut rest_ann = RealMatrix::identity(d, d);
        for fac in &factors[1..] {
            rest_ann = &rest_ann * factor_annihilator(&m, fac);
            let norm = rest_ann.norm();
            if norm < 1e-300 {
                break;
            }
            rest_ann /= norm;
        }
        let Ok(w_rest) = linalg::smallest_right_singular_vectors(&rest_ann, d - dim_c) else {
            continue;
        };
        let t = linalg::hstack(&[w_c.clone(), w_rest]);
        let Some(t_inv) = t.lu().try_inverse() else {
            continue;
        };
        let p = &w_c * t_inv.rows(0, dim_c);
        // Certification.
        let idem = (&p * &p - &p).norm();
        let comm_a = (&p * g.a() - g.a() * &p).norm();
        let comm_b = (&p * g.b() - g.b() * &p).norm();
        let trace = p.trace();
        let rank = trace.round();
        if idem <= PROJECTOR_TOL
            && comm_a <= PROJECTOR_TOL * g.a().norm()
            && comm_b <= PROJECTOR_TOL * g.b().norm()
            && (trace - rank).abs() <= 1e-6
            && rank >= 1.0
            && rank <= (d - 1) as f64
        {
            return Ok(SplitVerdict::SplitFound {
                projector: p,
                rank: rank as usize,
                trial,
            });
        }
    }
    Ok(SplitVerdict::NoSplitFound { trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{canonical_model, SummandInvariant};
    use crate::decompose::decompose;
    use crate::pair::validate_pair;
    use crate::spectral::FactorKind;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn pair_of(invs: &[SummandInvariant]) -> ComplexStructurePair {
        let models: Vec<_> = invs.iter().map(|i| canonical_model(i).unwrap()).collect();
        let j1 = linalg::block_diag(&models.iter().map(|m| m.j1()).collect::<Vec<_>>());
        let j2 = linalg::block_diag(&models.iter().map(|m| m.j2()).collect::<Vec<_>>());
        validate_pair(j1, j2, &tol()).unwrap()
    }

    #[test]
    fn commutant_dimensions_of_small_blocks() {
        // Distinct real root off the unit circle: only scalars commute.
        let g = generators(&pair_of(&[SummandInvariant::new(FactorKind::Real { r: 2.0 }, 1)]));
        assert_eq!(commutant(&g, &tol()).unwrap().dim, 1);
        // Root on the unit circle: the commutant is a complex line.
        let g = generators(&pair_of(&[SummandInvariant::new(FactorKind::Real { r: -1.0 }, 1)]));
        assert_eq!(commutant(&g, &tol()).unwrap().dim, 2);
        // Unit-circle complex root: quaternions.
        let g = generators(&pair_of(&[SummandInvariant::new(
            FactorKind::Complex { e: 0.6, f: 0.8 },
            1,
        )]));
        assert_eq!(commutant(&g, &tol()).unwrap().dim, 4);
    }

    #[test]
    fn commutant_elements_commute() {
        let g = generators(&pair_of(&[SummandInvariant::new(
            FactorKind::Complex { e: 0.6, f: 0.8 },
            1,
        )]));
        let cb = commutant(&g, &tol()).unwrap();
        for el in &cb.elements {
            assert!((el * g.a() - g.a() * el).norm() < 1e-10);
            assert!((el * g.b() - g.b() * el).norm() < 1e-10);
        }
    }

    #[test]
    fn split_found_on_direct_sum() {
        let pair = pair_of(&[
            SummandInvariant::new(FactorKind::Real { r: 2.0 }, 1),
            SummandInvariant::new(FactorKind::Real { r: 3.0 }, 1),
        ]);
        let g = generators(&pair);
        match split_attempt(&g, 7, 10, &tol()).unwrap() {
            SplitVerdict::SplitFound { projector, rank, .. } => {
                assert_eq!(rank, 2);
                assert!((&projector * &projector - &projector).norm() <= PROJECTOR_TOL);
            }
            SplitVerdict::NoSplitFound { .. } => panic!("expected a split"),
        }
    }

    #[test]
    fn no_split_on_indecomposables() {
        for inv in [
            SummandInvariant::new(FactorKind::Real { r: 2.0 }, 1),
            SummandInvariant::new(FactorKind::Real { r: 2.0 }, 2),
            SummandInvariant::new(FactorKind::Complex { e: 0.6, f: 0.8 }, 1),
        ] {
            let g = generators(&pair_of(&[inv]));
            match split_attempt(&g, 11, 25, &tol()).unwrap() {
                SplitVerdict::NoSplitFound { trials } => assert_eq!(trials, 25),
                SplitVerdict::SplitFound { .. } => {
                    panic!("false split on indecomposable {inv:?}")
                }
            }
        }
    }

    #[test]
    fn verify_passes_on_honest_report_and_fails_on_tampered() {
        let pair = pair_of(&[
            SummandInvariant::new(FactorKind::Real { r: 2.0 }, 2),
            SummandInvariant::new(FactorKind::Complex { e: 0.6, f: 0.8 }, 1),
        ]);
        let report = decompose(&pair, &tol()).unwrap();
        let summary = verify_report(&pair, &report, &tol()).unwrap();
        assert!(summary.pass, "checks: {:#?}", summary.checks);

        let mut bad = report.clone();
        // Corrupt the basis: claims no longer hold.
        bad.s[(0, 0)] += 0.5;
        let summary = verify_report(&pair, &bad, &tol()).unwrap();
        assert!(!summary.pass);
    }

    #[test]
    fn verify_rejects_dimension_mismatch() {
        let pair = pair_of(&[SummandInvariant::new(FactorKind::Real { r: 2.0 }, 1)]);
        let other = pair_of(&[
            SummandInvariant::new(FactorKind::Real { r: 2.0 }, 1),
            SummandInvariant::new(FactorKind::Real { r: 3.0 }, 1),
        ]);
        let report = decompose(&other, &tol()).unwrap();
        assert!(matches!(
            verify_report(&pair, &report, &tol()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
