//! Decomposition of a validated pair into indecomposable summands.
//!
//! Per reciprocal class the algorithm walks the kernel filtration of p(a)
//! from the top level down, carrying images of already-chosen generators into
//! each quotient V_k / V_{k-1} and completing greedily with candidate columns
//! of the fresh filtration directions. A chosen generator w of level n yields
//! the summand basis
//!
//! ```text
//! p(a)^(n-1) w, ..., p(a) w, w,   then   b * (each of those columns)
//! ```
//!
//! (for complex roots the chain runs over complexified vectors and each chain
//! slot contributes a real/imaginary column pair), which conjugates (a, b)
//! exactly to the canonical block pattern.

use nalgebra::Complex;

use crate::canonical::{self, cmp_invariants, SummandInvariant};
use crate::error::{Error, Result};
use crate::linalg::{self, RealMatrix, RealVector, TolerancePolicy};
use crate::pair::{generators, relation_residuals, ComplexStructurePair, GeneratorPair};
use crate::spectral::{self, ClassGeometry, FactorKind, ReciprocalClass};

/// Scalar field over which a filtration quotient is completed: plain real
/// span, or complex span via the J = (a - e)/f action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarMode {
    Real,
    Complex,
}

/// One indecomposable summand: its invariant, the generator vector, and the
/// explicit basis (a-side chain columns, then b times those columns).
#[derive(Debug, Clone)]
pub struct Summand {
    pub invariant: SummandInvariant,
    pub generator_w: RealVector,
    pub basis: RealMatrix,
}

/// Residuals recorded with a decomposition.
#[derive(Debug, Clone, Copy)]
pub struct ResidualSummary {
    /// ||b a b^-1 - a^-1|| / ||a^-1|| of the input pair.
    pub relation: f64,
    /// ||b^2 + I|| / sqrt(dim) of the input pair.
    pub b_square: f64,
    /// ||S^-1 a S - a_c||_F / ||a||_F.
    pub conjugation_a: f64,
    /// ||S^-1 b S - b_c||_F / ||b||_F.
    pub conjugation_b: f64,
    /// 2-norm condition number of S.
    pub cond_s: f64,
}

/// Full decomposition result.
#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub dim: usize,
    /// Summands sorted by (factor kind, root, exponent descending).
    pub summands: Vec<Summand>,
    /// The multiset of invariants, grouped with counts, same order as
    /// `summands`.
    pub invariants: Vec<(SummandInvariant, usize)>,
    /// Change of basis: columns are the summand bases in order; S^-1 a S = a_c.
    pub s: RealMatrix,
    pub canonical_a: RealMatrix,
    pub canonical_b: RealMatrix,
    pub residuals: ResidualSummary,
    pub warnings: Vec<String>,
}

impl DecompositionReport {
    /// Flattened invariant list (counts expanded).
    pub fn invariant_list(&self) -> Vec<SummandInvariant> {
        self.summands.iter().map(|s| s.invariant).collect()
    }
}

/// Two decompositions describe isomorphic pairs iff their invariant multisets
/// agree (roots compared within `tol.root_rel`).
pub fn is_isomorphic(
    a: &DecompositionReport,
    b: &DecompositionReport,
    tol: &TolerancePolicy,
) -> bool {
    canonical::same_invariants(&a.invariant_list(), &b.invariant_list(), tol.root_rel)
}

/// A chosen module generator: the filtration level (= exponent of the
/// summand it generates) and the generating vector in ambient coordinates.
#[derive(Debug, Clone)]
pub struct Generator {
    pub level: usize,
    pub w: RealVector,
}

/// One filtration quotient V_k / V_{k-1} together with the symmetry actions
/// that descend to it.
#[derive(Debug, Clone)]
pub struct QuotientFrame {
    pub dim: usize,
    /// Action of b on the quotient; present for self-dual classes.
    pub b_q: Option<RealMatrix>,
    /// Action of the complex unit J = (a - e)/f; present for complex roots.
    pub j_q: Option<RealMatrix>,
}

const CARRIED_INDEPENDENCE_REL: f64 = 1e-8;
const CANDIDATE_INDEPENDENCE_REL: f64 = 1e-6;

/// Two-pass modified Gram-Schmidt push. Returns false (leaving `frame`
/// untouched) when the residual falls below `min_rel` of the input norm.
fn orthonormal_push(frame: &mut Vec<RealVector>, v: &RealVector, min_rel: f64) -> bool {
    let scale = v.norm();
    if scale <= 0.0 {
        return false;
    }
    let mut u = v / scale;
    for _ in 0..2 {
        for q in frame.iter() {
            let c = q.dot(&u);
            u -= q * c;
        }
    }
    let n = u.norm();
    if n < min_rel {
        return false;
    }
    frame.push(u / n);
    true
}

/// Greedy completion of a quotient by closure groups.
///
/// `existing` groups (images of higher-level generators) must all be
/// independent — failure there is a broken invariant, not a selection miss —
/// while candidate groups are simply skipped when they fall into the span
/// already accumulated.
fn fill_quotient(
    existing: &[Vec<RealVector>],
    candidates: &[Vec<RealVector>],
    need: usize,
    what: &str,
) -> Result<Vec<usize>> {
    let mut frame: Vec<RealVector> = Vec::new();
    for grp in existing {
        for v in grp {
            if !orthonormal_push(&mut frame, v, CARRIED_INDEPENDENCE_REL) {
                return Err(Error::AssertionFailure(format!(
                    "carried generator images became dependent in {what}"
                )));
            }
        }
    }
    let mut picked = Vec::new();
    for (idx, grp) in candidates.iter().enumerate() {
        if picked.len() == need {
            break;
        }
        let mut trial = frame.clone();
        if grp
            .iter()
            .all(|v| orthonormal_push(&mut trial, v, CANDIDATE_INDEPENDENCE_REL))
        {
            frame = trial;
            picked.push(idx);
        }
    }
    if picked.len() < need {
        return Err(Error::AssertionFailure(format!(
            "could not complete {what}: found {} of {need} generators",
            picked.len()
        )));
    }
    Ok(picked)
}

/// Closure of a vector under the quotient's symmetry actions, in the order
/// v, Jv, bv, bJv (dropping the actions the frame lacks).
fn closure_in_frame(frame: &QuotientFrame, v: &RealVector, mode: ScalarMode) -> Vec<RealVector> {
    let mut members = vec![v.clone()];
    if mode == ScalarMode::Complex {
        if let Some(j) = &frame.j_q {
            members.push(j * v);
        }
    }
    if let Some(b) = &frame.b_q {
        for m in members.clone() {
            members.push(b * &m);
        }
    }
    members
}

/// Completes a b-closed independent set of quotient vectors to a basis of the
/// whole quotient by greedily appending candidate columns together with their
/// b-partners (and J-partners in complex scalar mode). Returns the indices of
/// the chosen candidate columns; numerical near-dependence of the carried set
/// is an [`Error::AssertionFailure`].
pub fn extend_b_pairs(
    frame: &QuotientFrame,
    existing: &[RealVector],
    candidates: &RealMatrix,
    mode: ScalarMode,
) -> Result<Vec<usize>> {
    if frame.b_q.is_none() {
        return Err(Error::InvalidSpec(
            "quotient frame has no b action to pair with".into(),
        ));
    }
    let group_size = closure_size(frame, mode);
    let remaining = frame
        .dim
        .checked_sub(existing.len())
        .ok_or_else(|| Error::AssertionFailure("existing set larger than quotient".into()))?;
    if remaining % group_size != 0 {
        return Err(Error::AssertionFailure(format!(
            "quotient remainder {remaining} not divisible by group size {group_size}"
        )));
    }
    let existing_groups: Vec<Vec<RealVector>> = existing
        .iter()
        .map(|v| vec![v.clone()])
        .collect();
    let candidate_groups: Vec<Vec<RealVector>> = (0..candidates.ncols())
        .map(|j| closure_in_frame(frame, &candidates.column(j).into_owned(), mode))
        .collect();
    fill_quotient(
        &existing_groups,
        &candidate_groups,
        remaining / group_size,
        "b-pair extension",
    )
}

fn closure_size(frame: &QuotientFrame, mode: ScalarMode) -> usize {
    let mut s = 1;
    if mode == ScalarMode::Complex && frame.j_q.is_some() {
        s *= 2;
    }
    if frame.b_q.is_some() {
        s *= 2;
    }
    s
}

fn mode_of(kind: &FactorKind) -> ScalarMode {
    match kind {
        FactorKind::Real { .. } => ScalarMode::Real,
        FactorKind::Complex { .. } => ScalarMode::Complex,
    }
}

/// Picks module generators for one reciprocal class, top filtration level
/// first. Returns (level, coordinates in the component frame) pairs.
fn select_in_component(cg: &ClassGeometry) -> Result<Vec<(usize, RealVector)>> {
    let geom = &cg.geom;
    let n_max = geom.n_max;
    let mode = mode_of(&geom.factor.kind);
    let group_size = geom.factor.kind.degree() * if cg.class.self_dual { 2 } else { 1 };
    let what = format!("component of {:?}", geom.factor.kind);

    // Fresh directions per level and the generator counts they imply.
    let mut units = vec![0usize; n_max + 2];
    let mut fresh: Vec<RealMatrix> = Vec::new();
    for k in 1..=n_max {
        let prev_dim = if k == 1 { 0 } else { geom.level_dims[k - 2] };
        let delta = geom.level_dims[k - 1] - prev_dim;
        if delta % group_size != 0 {
            return Err(Error::AssertionFailure(format!(
                "level {k} of {what} has {delta} fresh directions, not divisible by {group_size}"
            )));
        }
        units[k] = delta / group_size;
        fresh.push(
            geom.level_bases[k - 1]
                .columns(prev_dim, delta)
                .into_owned(),
        );
    }
    for k in 1..n_max {
        if units[k] < units[k + 1] {
            return Err(Error::AssertionFailure(format!(
                "filtration of {what} is not monotone in module units"
            )));
        }
    }

    let component_closure = |v: &RealVector| -> Vec<RealVector> {
        let mut members = vec![v.clone()];
        if mode == ScalarMode::Complex {
            let j = cg.j_p.as_ref().expect("complex class carries J");
            members.push(j * v);
        }
        if let Some(b) = &cg.b_p {
            for m in members.clone() {
                members.push(b * &m);
            }
        }
        members
    };

    let mut chosen: Vec<(usize, RealVector)> = Vec::new();
    for k in (1..=n_max).rev() {
        let c_k = &fresh[k - 1];
        let need = units[k] - units.get(k + 1).copied().unwrap_or(0);
        // Carried images of higher-level generators, pushed down by p(a) and
        // closed under the symmetry actions, then projected to the quotient.
        let mut existing_groups: Vec<Vec<RealVector>> = Vec::new();
        for (level, coords) in &chosen {
            let mut img = coords.clone();
            for _ in 0..(level - k) {
                img = &geom.m_p * img;
            }
            let group: Vec<RealVector> = component_closure(&img)
                .iter()
                .map(|m| c_k.transpose() * m)
                .collect();
            existing_groups.push(group);
        }
        let candidate_groups: Vec<Vec<RealVector>> = (0..c_k.ncols())
            .map(|j| {
                component_closure(&c_k.column(j).into_owned())
                    .iter()
                    .map(|m| c_k.transpose() * m)
                    .collect()
            })
            .collect();
        let picked = fill_quotient(
            &existing_groups,
            &candidate_groups,
            need,
            &format!("level {k} of {what}"),
        )?;
        for idx in picked {
            chosen.push((k, c_k.column(idx).into_owned()));
        }
    }
    Ok(chosen)
}

/// The quotient frame at one filtration level of a class component, for use
/// with [`extend_b_pairs`]. Level counts from 1.
pub fn quotient_frame(
    g: &GeneratorPair,
    class: &ReciprocalClass,
    level: usize,
    tol: &TolerancePolicy,
) -> Result<QuotientFrame> {
    let cg = spectral::class_geometry(g, class, tol)?;
    let geom = &cg.geom;
    if level == 0 || level > geom.n_max {
        return Err(Error::DimensionMismatch {
            expected: geom.n_max,
            got: level,
        });
    }
    let prev_dim = if level == 1 {
        0
    } else {
        geom.level_dims[level - 2]
    };
    let delta = geom.level_dims[level - 1] - prev_dim;
    let c_k = geom.level_bases[level - 1]
        .columns(prev_dim, delta)
        .into_owned();
    Ok(QuotientFrame {
        dim: delta,
        b_q: cg.b_p.as_ref().map(|b| c_k.transpose() * b * &c_k),
        j_q: cg.j_p.as_ref().map(|j| c_k.transpose() * j * &c_k),
    })
}

/// Public generator selection for one reciprocal class.
pub fn select_generators(
    g: &GeneratorPair,
    class: &ReciprocalClass,
    tol: &TolerancePolicy,
) -> Result<Vec<Generator>> {
    let cg = spectral::class_geometry(g, class, tol)?;
    let picks = select_in_component(&cg)?;
    Ok(picks
        .into_iter()
        .map(|(level, coords)| Generator {
            level,
            w: &cg.geom.w * coords,
        })
        .collect())
}

/// Chain basis of the summand generated by w with a real root r, exponent n:
/// columns (a-r)^(n-1) w, ..., (a-r) w, w, then b times each.
fn chain_real(
    g: &GeneratorPair,
    r: f64,
    n: usize,
    w: &RealVector,
) -> Result<RealMatrix> {
    let d = g.dim();
    let mut cols: Vec<RealVector> = vec![RealVector::zeros(d); n];
    cols[n - 1] = w.clone();
    for i in (1..n).rev() {
        let mut next = g.a() * &cols[i];
        next -= &cols[i] * r;
        if next.norm() < 1e-12 * w.norm() {
            return Err(Error::AssertionFailure(format!(
                "chain for root {r} collapsed at depth {}",
                n - i
            )));
        }
        cols[i - 1] = next;
    }
    let mut basis = RealMatrix::zeros(d, 2 * n);
    for (j, c) in cols.iter().enumerate() {
        basis.column_mut(j).copy_from(c);
    }
    for j in 0..n {
        let bc = g.b() * basis.column(j);
        basis.column_mut(n + j).copy_from(&bc);
    }
    Ok(basis)
}

/// Chain basis for a complex root c = e + i f, exponent n.
///
/// The complexified module splits into conjugate halves; (a - conj(c))^n
/// annihilates the conjugate half, so u = (a - conj(c))^n w is a chain top
/// for the c-half regardless of how w sits across the two. Real and
/// (negated) imaginary parts of the chain give the real canonical basis
/// x_1, y_1, ..., x_n, y_n with a x_i = e x_i + f y_i + x_(i-1).
fn chain_complex(
    g: &GeneratorPair,
    e: f64,
    f: f64,
    n: usize,
    w: &RealVector,
) -> Result<RealMatrix> {
    let d = g.dim();
    let ac = g.a().map(|x| Complex::new(x, 0.0));
    let c = Complex::new(e, f);
    let cbar = c.conj();
    let mut u = w.map(|x| Complex::new(x, 0.0));
    for _ in 0..n {
        u = &ac * &u - &u * cbar;
    }
    let norm = u.norm();
    if norm < 1e-12 * w.norm() {
        return Err(Error::AssertionFailure(format!(
            "complex chain for root {e}+{f}i collapsed"
        )));
    }
    u /= Complex::new(norm, 0.0);
    let mut chain = vec![u];
    for _ in 1..n {
        let z = chain.last().unwrap();
        let prev = &ac * z - z * c;
        if prev.norm() < 1e-12 {
            return Err(Error::AssertionFailure(format!(
                "complex chain for root {e}+{f}i broke below the top"
            )));
        }
        chain.push(prev);
    }
    chain.reverse(); // now z_1, ..., z_n with z_(i-1) = (a - c) z_i
    let mut basis = RealMatrix::zeros(d, 4 * n);
    for (i, z) in chain.iter().enumerate() {
        for row in 0..d {
            basis[(row, 2 * i)] = z[row].re;
            basis[(row, 2 * i + 1)] = -z[row].im;
        }
    }
    for j in 0..2 * n {
        let bc = g.b() * basis.column(j);
        basis.column_mut(2 * n + j).copy_from(&bc);
    }
    Ok(basis)
}

fn summand_from_generator(
    g: &GeneratorPair,
    kind: FactorKind,
    level: usize,
    w: RealVector,
) -> Result<Summand> {
    let basis = match kind {
        FactorKind::Real { r } => chain_real(g, r, level, &w)?,
        FactorKind::Complex { e, f } => chain_complex(g, e, f, level, &w)?,
    };
    Ok(Summand {
        invariant: SummandInvariant::new(kind, level),
        generator_w: w,
        basis,
    })
}

/// Splits one reciprocal class into indecomposable summands.
pub fn split_class_summands(
    g: &GeneratorPair,
    class: &ReciprocalClass,
    tol: &TolerancePolicy,
) -> Result<Vec<Summand>> {
    let cg = spectral::class_geometry(g, class, tol)?;
    split_class(g, &cg)
}

fn split_class(g: &GeneratorPair, cg: &ClassGeometry) -> Result<Vec<Summand>> {
    let picks = select_in_component(cg)?;
    // The class representative carries the root used for invariants and
    // chains: identical to the refined component root except for self-dual
    // classes, where it is snapped exactly onto the unit circle.
    let kind = cg.class.rep.kind;
    picks
        .into_iter()
        .map(|(level, coords)| summand_from_generator(g, kind, level, &cg.geom.w * coords))
        .collect()
}

/// Decomposes a validated pair into indecomposable summands with invariants,
/// explicit bases, the change of basis S, and the canonical matrices.
///
/// A condition number of S above 1e8 is reported as a warning, not an error:
/// the result is still returned with its residuals on record.
pub fn decompose(
    pair: &ComplexStructurePair,
    tol: &TolerancePolicy,
) -> Result<DecompositionReport> {
    let g = generators(pair);
    let analysis = spectral::analyze(&g, tol)?;
    let mut warnings = analysis.warnings.clone();
    let mut summands: Vec<Summand> = Vec::new();
    for cg in &analysis.geoms {
        summands.extend(split_class(&g, cg)?);
    }
    summands.sort_by(|x, y| cmp_invariants(&x.invariant, &y.invariant));

    let dim = pair.dim();
    let total: usize = summands.iter().map(|s| s.basis.ncols()).sum();
    if total != dim {
        return Err(Error::AssertionFailure(format!(
            "summand bases span {total} of {dim} dimensions"
        )));
    }
    let s = linalg::hstack(&summands.iter().map(|s| s.basis.clone()).collect::<Vec<_>>());
    let cond_s = linalg::cond_spectral(&s);
    if cond_s > 1e8 {
        warnings.push(format!(
            "change of basis is ill-conditioned (cond = {cond_s:.3e}); residuals may be inflated"
        ));
    }
    let s_inv = linalg::inverse(&s, tol)
        .map_err(|_| Error::AssertionFailure("assembled basis is numerically singular".into()))?;

    let invariant_list: Vec<SummandInvariant> = summands.iter().map(|s| s.invariant).collect();
    let (canonical_a, canonical_b) = canonical::assemble_canonical(&invariant_list)?;

    let conj_a = (&s_inv * g.a() * &s - &canonical_a).norm() / g.a().norm();
    let conj_b = (&s_inv * g.b() * &s - &canonical_b).norm() / g.b().norm();
    let rel = relation_residuals(&g);

    let mut invariants: Vec<(SummandInvariant, usize)> = Vec::new();
    for inv in &invariant_list {
        match invariants.last_mut() {
            Some((prev, count)) if prev == inv => *count += 1,
            _ => invariants.push((*inv, 1)),
        }
    }

    Ok(DecompositionReport {
        dim,
        summands,
        invariants,
        s,
        canonical_a,
        canonical_b,
        residuals: ResidualSummary {
            relation: rel.conjugation,
            b_square: rel.b_square,
            conjugation_a: conj_a,
            conjugation_b: conj_b,
            cond_s,
        },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{canonical_model, generate, GenerationSpec};
    use crate::pair::validate_pair;
    use approx::assert_relative_eq;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn pair_from_canonical(invs: &[SummandInvariant]) -> ComplexStructurePair {
        let models: Vec<_> = invs.iter().map(|i| canonical_model(i).unwrap()).collect();
        let j1 = crate::linalg::block_diag(&models.iter().map(|m| m.j1()).collect::<Vec<_>>());
        let j2 = crate::linalg::block_diag(&models.iter().map(|m| m.j2()).collect::<Vec<_>>());
        validate_pair(j1, j2, &tol()).unwrap()
    }

    #[test]
    fn single_distinct_real_summand() {
        let pair = pair_from_canonical(&[SummandInvariant::new(FactorKind::Real { r: 2.0 }, 1)]);
        let report = decompose(&pair, &tol()).unwrap();
        assert_eq!(report.summands.len(), 1);
        let inv = report.summands[0].invariant;
        assert_eq!(inv.n, 1);
        assert!(matches!(inv.kind, FactorKind::Real { r } if (r - 2.0).abs() < 1e-10));
        assert!(report.residuals.conjugation_a < 1e-10);
        assert!(report.residuals.conjugation_b < 1e-10);
        let expect_a = RealMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        assert_relative_eq!((&report.canonical_a - expect_a).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn unipotent_block_under_shear() {
        // Canonical block for root -1, exponent 2, conjugated by
        // S0 = I + 0.1 * (strictly upper ones).
        let model =
            canonical_model(&SummandInvariant::new(FactorKind::Real { r: -1.0 }, 2)).unwrap();
        let mut s0 = RealMatrix::identity(4, 4);
        for i in 0..4 {
            for j in (i + 1)..4 {
                s0[(i, j)] = 0.1;
            }
        }
        let s0_inv = linalg::inverse(&s0, &tol()).unwrap();
        let j1 = &s0 * model.j1() * &s0_inv;
        let j2 = &s0 * model.j2() * &s0_inv;
        let pair = validate_pair(j1, j2, &tol()).unwrap();
        let report = decompose(&pair, &tol()).unwrap();
        assert_eq!(report.summands.len(), 1);
        let inv = report.summands[0].invariant;
        assert_eq!(inv.n, 2);
        assert!(matches!(inv.kind, FactorKind::Real { r } if (r + 1.0).abs() < 1e-9));
        let bound = 1e-8 * report.residuals.cond_s;
        assert!(
            report.residuals.conjugation_a < bound,
            "conj_a = {}",
            report.residuals.conjugation_a
        );
        assert!(report.residuals.conjugation_b < bound);
    }

    #[test]
    fn mixed_real_and_quaternion_sum() {
        let pair = pair_from_canonical(&[
            SummandInvariant::new(FactorKind::Real { r: 3.0 }, 1),
            SummandInvariant::new(FactorKind::Complex { e: 0.6, f: 0.8 }, 1),
        ]);
        let report = decompose(&pair, &tol()).unwrap();
        assert_eq!(report.summands.len(), 2);
        assert_eq!(report.invariants.len(), 2);
        // Sorted: real root first.
        assert!(matches!(
            report.invariants[0].0.kind,
            FactorKind::Real { r } if (r - 3.0).abs() < 1e-9
        ));
        assert!(matches!(
            report.invariants[1].0.kind,
            FactorKind::Complex { e, f } if (e - 0.6).abs() < 1e-9 && (f - 0.8).abs() < 1e-9
        ));
        assert!(report.residuals.conjugation_a < 1e-9);
    }

    #[test]
    fn distinct_complex_summand_dim_four() {
        // Root 2i: one summand of dimension 4 with basis {x, y, bx, by}.
        let pair = pair_from_canonical(&[SummandInvariant::new(
            FactorKind::Complex { e: 0.0, f: 2.0 },
            1,
        )]);
        let report = decompose(&pair, &tol()).unwrap();
        assert_eq!(report.summands.len(), 1);
        assert_eq!(report.summands[0].basis.ncols(), 4);
        let inv = report.summands[0].invariant;
        assert!(matches!(inv.kind, FactorKind::Complex { e, f }
            if e.abs() < 1e-9 && (f - 2.0).abs() < 1e-9));
        assert!(report.residuals.conjugation_a < 1e-9);
        assert!(report.residuals.conjugation_b < 1e-9);
    }

    #[test]
    fn repeated_invariant_grouped() {
        let inv = SummandInvariant::new(FactorKind::Real { r: 2.0 }, 1);
        let pair = pair_from_canonical(&[inv, inv]);
        let report = decompose(&pair, &tol()).unwrap();
        assert_eq!(report.summands.len(), 2);
        assert_eq!(report.invariants.len(), 1);
        assert_eq!(report.invariants[0].1, 2);
    }

    #[test]
    fn decompose_recovers_generated_invariants() {
        let spec = GenerationSpec::new(
            vec![
                SummandInvariant::new(FactorKind::Real { r: -2.0 }, 2),
                SummandInvariant::new(FactorKind::Complex { e: 0.6, f: 0.8 }, 1),
                SummandInvariant::new(FactorKind::Real { r: 1.0 }, 1),
            ],
            2024,
        );
        let gp = generate(&spec).unwrap();
        let report = decompose(&gp.pair, &tol()).unwrap();
        assert!(
            canonical::same_invariants(&report.invariant_list(), &gp.invariants, 1e-6),
            "got {:?}, want {:?}",
            report.invariant_list(),
            gp.invariants
        );
    }

    #[test]
    fn isomorphism_across_seeds() {
        let invs = vec![
            SummandInvariant::new(FactorKind::Real { r: 2.0 }, 1),
            SummandInvariant::new(FactorKind::Complex { e: 1.0, f: 2.0 }, 1),
        ];
        let g1 = generate(&GenerationSpec::new(invs.clone(), 1)).unwrap();
        let g2 = generate(&GenerationSpec::new(invs, 2)).unwrap();
        let r1 = decompose(&g1.pair, &tol()).unwrap();
        let r2 = decompose(&g2.pair, &tol()).unwrap();
        assert!(is_isomorphic(&r1, &r2, &tol()));
        let g3 = generate(&GenerationSpec::new(
            vec![SummandInvariant::new(FactorKind::Real { r: 2.0 }, 2)],
            3,
        ))
        .unwrap();
        let r3 = decompose(&g3.pair, &tol()).unwrap();
        assert!(!is_isomorphic(&r1, &r3, &tol()));
    }

    #[test]
    fn extend_pairs_walks_candidates_in_order() {
        // Quotient of dimension 4 with b acting as two rotation blocks:
        // closure of e1 is {e1, e2}, so the picks must be columns 0 and 2.
        let b_q = RealMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, -1.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, -1.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
        );
        let frame = QuotientFrame {
            dim: 4,
            b_q: Some(b_q),
            j_q: None,
        };
        let picked =
            extend_b_pairs(&frame, &[], &RealMatrix::identity(4, 4), ScalarMode::Real).unwrap();
        assert_eq!(picked, vec![0, 2]);
    }

    #[test]
    fn extend_pairs_respects_existing_span() {
        let b_q = RealMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, -1.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, -1.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
        );
        let frame = QuotientFrame {
            dim: 4,
            b_q: Some(b_q),
            j_q: None,
        };
        let e1 = RealVector::from_row_slice(&[1.0, 0.0, 0.0, 0.0]);
        let e2 = RealVector::from_row_slice(&[0.0, 1.0, 0.0, 0.0]);
        let picked = extend_b_pairs(
            &frame,
            &[e1, e2],
            &RealMatrix::identity(4, 4),
            ScalarMode::Real,
        )
        .unwrap();
        assert_eq!(picked, vec![2]);
    }

    #[test]
    fn extend_pairs_rejects_dependent_existing() {
        let b_q = RealMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let frame = QuotientFrame {
            dim: 2,
            b_q: Some(b_q),
            j_q: None,
        };
        let v = RealVector::from_row_slice(&[1.0, 0.0]);
        let almost_v = RealVector::from_row_slice(&[1.0, 1e-12]);
        let err = extend_b_pairs(
            &frame,
            &[v, almost_v],
            &RealMatrix::identity(2, 2),
            ScalarMode::Real,
        );
        assert!(matches!(err, Err(Error::AssertionFailure(_))));
    }

    #[test]
    fn select_generators_on_two_block_component() {
        // (t-2, 2) plus (t-2, 1): the class component has levels with units
        // 2, 1; selection must return one level-2 and one level-1 generator.
        let pair = pair_from_canonical(&[
            SummandInvariant::new(FactorKind::Real { r: 2.0 }, 2),
            SummandInvariant::new(FactorKind::Real { r: 2.0 }, 1),
        ]);
        let g = generators(&pair);
        let analysis_tol = tol();
        let report = decompose(&pair, &analysis_tol).unwrap();
        assert_eq!(report.summands.len(), 2);
        assert_eq!(report.summands[0].invariant.n, 2);
        assert_eq!(report.summands[1].invariant.n, 1);
        // And through the public selection API:
        let class = ReciprocalClass {
            rep: crate::spectral::IrreducibleFactor {
                kind: FactorKind::Real { r: 2.0 },
                multiplicity: 3,
            },
            partner: Some(crate::spectral::IrreducibleFactor {
                kind: FactorKind::Real { r: 0.5 },
                multiplicity: 3,
            }),
            self_dual: false,
        };
        let gens = select_generators(&g, &class, &analysis_tol).unwrap();
        let mut levels: Vec<usize> = gens.iter().map(|g| g.level).collect();
        levels.sort_unstable();
        assert_eq!(levels, vec![1, 2]);
    }
}
