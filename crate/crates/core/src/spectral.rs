//! Spectrum analysis of the generator a: characteristic polynomial,
//! irreducible factors over the reals, reciprocal pairing of factors, and the
//! kernel filtration of each spectral component.
//!
//! The pipeline that feeds decomposition is deliberately two-staged: eigenvalue
//! clustering first produces *coarse* roots (defective eigenvalues of a block
//! of size n are only accurate to roughly eps^(1/n)), then each root is
//! *refined* by averaging the trace of a restricted to the spectral component,
//! which recovers near machine precision. Rank decisions on the nilpotent part
//! are made on the small restricted matrix, never on the full-size power,
//! so thresholds stay meaningful.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::{self, RealMatrix, TolerancePolicy};
use crate::pair::GeneratorPair;

/// Relative accuracy credited to a restricted component matrix a_p: singular
/// values of p(a_p) below this fraction of the evaluation scale are treated
/// as zero. The refined frames keep a_p accurate to ~1e-10 of the operator
/// scale for the supported conditioning range, while genuine nilpotent
/// structure keeps ||p(a_p)|| above ~1e-4, so 1e-7 has about three orders of
/// margin on each side.
const COMPONENT_NOISE_REL: f64 = 1e-7;

/// Polynomial with real coefficients, stored in ascending order
/// (`coeffs[k]` multiplies `t^k`).
#[derive(Debug, Clone, PartialEq)]
pub struct RealPoly {
    coeffs: Vec<f64>,
}

impl RealPoly {
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMatrix("polynomial coefficients".into()));
        }
        Ok(RealPoly { coeffs })
    }

    pub fn one() -> Self {
        RealPoly { coeffs: vec![1.0] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex<f64>) -> Complex<f64> {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Evaluates the polynomial at a square matrix by Horner's rule.
    pub fn eval_matrix(&self, m: &RealMatrix) -> RealMatrix {
        let d = m.nrows();
        let mut acc = RealMatrix::zeros(d, d);
        for &c in self.coeffs.iter().rev() {
            acc = &acc * m;
            for i in 0..d {
                acc[(i, i)] += c;
            }
        }
        acc
    }

    pub fn mul(&self, other: &RealPoly) -> RealPoly {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RealPoly { coeffs: out }
    }

    /// Monic normalization. Fails if the leading coefficient is ~0.
    pub fn monic(&self) -> Result<RealPoly> {
        let lead = *self.coeffs.last().unwrap();
        let scale = self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        if lead.abs() <= 1e-14 * scale {
            return Err(Error::NumericalFailure(
                "leading coefficient vanishes".into(),
            ));
        }
        Ok(RealPoly {
            coeffs: self.coeffs.iter().map(|c| c / lead).collect(),
        })
    }

    /// Companion matrix of the monic polynomial.
    pub fn companion(&self) -> Result<RealMatrix> {
        let p = self.monic()?;
        let n = p.degree();
        if n == 0 {
            return Ok(RealMatrix::zeros(0, 0));
        }
        let mut c = RealMatrix::zeros(n, n);
        for i in 1..n {
            c[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            c[(i, n - 1)] = -p.coeffs[i];
        }
        Ok(c)
    }
}

/// An irreducible real factor, carried by its root data: either `t - r` with
/// real `r != 0`, or `(t - c)(t - conj(c)) = t^2 - 2 e t + (e^2 + f^2)` with
/// `c = e + i f`, `f > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FactorKind {
    Real { r: f64 },
    Complex { e: f64, f: f64 },
}

impl FactorKind {
    pub fn degree(&self) -> usize {
        match self {
            FactorKind::Real { .. } => 1,
            FactorKind::Complex { .. } => 2,
        }
    }

    /// Modulus of the root (for the complex case, of either conjugate root).
    pub fn root_modulus(&self) -> f64 {
        match *self {
            FactorKind::Real { r } => r.abs(),
            FactorKind::Complex { e, f } => (e * e + f * f).sqrt(),
        }
    }

    pub fn poly(&self) -> RealPoly {
        match *self {
            FactorKind::Real { r } => RealPoly {
                coeffs: vec![-r, 1.0],
            },
            FactorKind::Complex { e, f } => RealPoly {
                coeffs: vec![e * e + f * f, -2.0 * e, 1.0],
            },
        }
    }

    /// The factor whose roots are the inverses of this factor's roots.
    pub fn reciprocal(&self) -> Result<FactorKind> {
        match *self {
            FactorKind::Real { r } => {
                if r.abs() < 1e-14 {
                    return Err(Error::ZeroRoot);
                }
                Ok(FactorKind::Real { r: 1.0 / r })
            }
            FactorKind::Complex { e, f } => {
                let m2 = e * e + f * f;
                if m2 < 1e-28 {
                    return Err(Error::ZeroRoot);
                }
                // 1/c = conj(c)/|c|^2; orientation f > 0 keeps the upper root.
                Ok(FactorKind::Complex {
                    e: e / m2,
                    f: f / m2,
                })
            }
        }
    }

    /// A factor is self-dual when its root set is closed under inversion,
    /// i.e. the root lies on the unit circle (within the given relative slack).
    pub fn is_self_dual(&self, root_rel: f64) -> bool {
        (self.root_modulus() - 1.0).abs() <= root_rel
    }

    /// Root-distance match within `rel * max(1, |root|)`.
    pub fn matches(&self, other: &FactorKind, rel: f64) -> bool {
        let tol = rel * self.root_modulus().max(1.0);
        match (*self, *other) {
            (FactorKind::Real { r: r1 }, FactorKind::Real { r: r2 }) => (r1 - r2).abs() <= tol,
            (FactorKind::Complex { e: e1, f: f1 }, FactorKind::Complex { e: e2, f: f2 }) => {
                ((e1 - e2).powi(2) + (f1 - f2).powi(2)).sqrt() <= tol
            }
            _ => false,
        }
    }

    pub(crate) fn sort_key(&self) -> (u8, f64, f64) {
        match *self {
            FactorKind::Real { r } => (0, r, 0.0),
            FactorKind::Complex { e, f } => (1, e, f),
        }
    }
}

pub(crate) fn cmp_key(a: (u8, f64, f64), b: (u8, f64, f64)) -> std::cmp::Ordering {
    a.0.cmp(&b.0)
        .then(a.1.total_cmp(&b.1))
        .then(a.2.total_cmp(&b.2))
}

/// An irreducible factor together with its multiplicity in the characteristic
/// polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrreducibleFactor {
    pub kind: FactorKind,
    pub multiplicity: usize,
}

impl IrreducibleFactor {
    pub fn poly_power(&self) -> RealPoly {
        let p = self.kind.poly();
        let mut out = RealPoly::one();
        for _ in 0..self.multiplicity {
            out = out.mul(&p);
        }
        out
    }
}

/// Characteristic polynomial of `a`, monic, via Schur eigenvalues multiplied
/// back together in exact conjugate pairs.
pub fn char_poly(a: &RealMatrix) -> Result<RealPoly> {
    linalg::require_finite(a, "char_poly input")?;
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let eigs = eigenvalues(a)?;
    let mut poly = RealPoly::one();
    let mut pos = 0usize;
    let mut neg = 0usize;
    for ev in &eigs {
        if ev.im > 0.0 {
            pos += 1;
            let quad = FactorKind::Complex { e: ev.re, f: ev.im }.poly();
            poly = poly.mul(&quad);
        } else if ev.im < 0.0 {
            neg += 1;
        } else {
            poly = poly.mul(&RealPoly {
                coeffs: vec![-ev.re, 1.0],
            });
        }
    }
    if pos != neg {
        return Err(Error::NumericalFailure(
            "complex eigenvalues did not pair up".into(),
        ));
    }
    Ok(poly)
}

/// Eigenvalues via the real Schur form. Real eigenvalues come out with an
/// exactly zero imaginary part; complex ones in exact conjugate pairs.
pub(crate) fn eigenvalues(m: &RealMatrix) -> Result<Vec<Complex<f64>>> {
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::NumericalFailure("Schur iteration did not converge".into()))?;
    let eigs = schur.complex_eigenvalues();
    let mut out: Vec<Complex<f64>> = eigs.iter().cloned().collect();
    out.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(out)
}

/// One diagonal block of a real Schur form: 1x1 with a real eigenvalue, or
/// 2x2 with a conjugate pair (represented by the eigenvalue with positive
/// imaginary part).
#[derive(Debug, Clone, Copy)]
pub(crate) struct SchurBlock {
    size: usize,
    eig: Complex<f64>,
}

/// Real Schur form `a = basis * t * basis^T` with `basis` orthogonal and `t`
/// quasi upper triangular, plus the parsed diagonal block structure.
pub(crate) struct SchurForm {
    basis: RealMatrix,
    t: RealMatrix,
    blocks: Vec<SchurBlock>,
}

/// Applies the orthogonal similarity `g` (w x w) on the diagonal window at
/// offset `i`: rows and columns i..i+w of t, and the matching columns of the
/// accumulated basis. Entries of t outside the affected stripes are zero and
/// stay untouched.
fn apply_window(t: &mut RealMatrix, basis: &mut RealMatrix, i: usize, g: &RealMatrix) {
    let d = t.nrows();
    let w = g.nrows();
    let stripe = g.tr_mul(&t.view((i, i), (w, d - i)).into_owned());
    t.view_mut((i, i), (w, d - i)).copy_from(&stripe);
    let stripe = t.view((0, i), (i + w, w)).into_owned() * g;
    t.view_mut((0, i), (i + w, w)).copy_from(&stripe);
    let stripe = basis.view((0, i), (d, w)).into_owned() * g;
    basis.view_mut((0, i), (d, w)).copy_from(&stripe);
}

/// Computes the real Schur form and parses its diagonal blocks. A 2x2 block
/// that turned out to have real eigenvalues is rotated apart into two 1x1
/// blocks, so afterwards every 2x2 block carries a genuine conjugate pair.
fn schur_form(a: &RealMatrix) -> Result<SchurForm> {
    let d = a.nrows();
    let schur = nalgebra::Schur::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::NumericalFailure("Schur iteration did not converge".into()))?;
    let (mut basis, mut t) = schur.unpack();
    let mut blocks = Vec::new();
    let mut i = 0usize;
    while i < d {
        if i + 1 < d && t[(i + 1, i)] != 0.0 {
            let (tp, tq, tr, ts) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let half = 0.5 * (tp - ts);
            let disc = half * half + tq * tr;
            if disc < 0.0 {
                blocks.push(SchurBlock {
                    size: 2,
                    eig: Complex::new(0.5 * (tp + ts), (-disc).sqrt()),
                });
                i += 2;
                continue;
            }
            let mean = 0.5 * (tp + ts);
            let lam = if mean >= 0.0 {
                mean + disc.sqrt()
            } else {
                mean - disc.sqrt()
            };
            // Rotate the eigenvector for lam into the first coordinate; the
            // second candidate always has norm >= |t_21| > 0.
            let c1 = (tq, lam - tp);
            let c2 = (lam - ts, tr);
            let (vx, vy) = if c1.0.hypot(c1.1) >= c2.0.hypot(c2.1) {
                c1
            } else {
                c2
            };
            let n = vx.hypot(vy);
            let g = RealMatrix::from_row_slice(2, 2, &[vx / n, -vy / n, vy / n, vx / n]);
            apply_window(&mut t, &mut basis, i, &g);
            t[(i + 1, i)] = 0.0;
        } else {
            blocks.push(SchurBlock {
                size: 1,
                eig: Complex::new(t[(i, i)], 0.0),
            });
            i += 1;
        }
    }
    Ok(SchurForm { basis, t, blocks })
}

/// Swaps two adjacent diagonal blocks (sizes p then q, window starting at
/// diagonal offset i) by an orthogonal similarity, in place.
///
/// The leading q columns of the transform span the invariant subspace of the
/// window belonging to the lower block, built from the Sylvester solution Y of
/// `A11 Y - Y A22 = -A12`. When the two blocks share eigenvalues the system is
/// singular or the swapped window fails to come out block triangular; both
/// abort the swap, which the spectral pipeline treats as a signal to widen the
/// clustering radius.
fn swap_adjacent(
    t: &mut RealMatrix,
    basis: &mut RealMatrix,
    i: usize,
    p: usize,
    q: usize,
) -> Result<()> {
    let w = p + q;
    let a11 = t.view((i, i), (p, p)).into_owned();
    let a12 = t.view((i, i + p), (p, q)).into_owned();
    let a22 = t.view((i + p, i + p), (q, q)).into_owned();
    let entangled =
        || Error::AssertionFailure("adjacent spectral blocks too entangled to separate".into());
    let y = solve_sylvester(&a11, &a22, &(-&a12)).ok_or_else(entangled)?;
    // Orthogonalize [Y; I]; padding with the identity makes the QR factor a
    // full w x w orthogonal matrix whose leading q columns span [Y; I].
    let mut v = RealMatrix::zeros(w, q + w);
    v.view_mut((0, 0), (p, q)).copy_from(&y);
    for c in 0..q {
        v[(p + c, c)] = 1.0;
    }
    for r in 0..w {
        v[(r, q + r)] = 1.0;
    }
    let g = nalgebra::QR::new(v).q();
    apply_window(t, basis, i, &g);
    let resid = t.view((i + q, i), (p, q)).norm();
    if resid > 1e-9 * t.norm().max(1.0) {
        return Err(entangled());
    }
    t.view_mut((i + q, i), (p, q)).fill(0.0);
    Ok(())
}

/// Orthonormal frame of the invariant subspace spanned by the selected Schur
/// blocks: reorders a copy of the Schur form until those blocks sit on top,
/// then takes the leading columns of the accumulated orthogonal basis.
///
/// Every swap crosses two blocks from different clusters, whose eigenvalues
/// are separated by at least the clustering radius, so the Sylvester steps
/// stay well conditioned exactly when the clustering is sound. The zeroed
/// swap residuals perturb the frame by ~1e-9 at worst; the joint Newton
/// refinement afterwards takes it from there to rounding level.
fn frame_for_blocks(sf: &SchurForm, selected: &[bool]) -> Result<RealMatrix> {
    let mut t = sf.t.clone();
    let mut basis = sf.basis.clone();
    let mut order: Vec<(usize, bool)> = sf
        .blocks
        .iter()
        .zip(selected)
        .map(|(b, &s)| (b.size, s))
        .collect();
    loop {
        let mut swap_at = None;
        let mut start = 0usize;
        for k in 0..order.len().saturating_sub(1) {
            if !order[k].1 && order[k + 1].1 {
                swap_at = Some((k, start));
                break;
            }
            start += order[k].0;
        }
        let Some((k, i)) = swap_at else { break };
        swap_adjacent(&mut t, &mut basis, i, order[k].0, order[k + 1].0)?;
        order.swap(k, k + 1);
    }
    let width: usize = order.iter().take_while(|e| e.1).map(|e| e.0).sum();
    Ok(basis.columns(0, width).into_owned())
}

/// Clusters the diagonal blocks of a Schur form into irreducible factors,
/// returning each factor with the ids of its blocks.
///
/// Blocks are expanded into their eigenvalue multiset first, because a
/// defective *real* root splatters off the axis in conjugate pairs: its
/// cluster legitimately mixes 1x1 blocks with small-f 2x2 blocks. A cluster
/// equal to its own conjugate is a real factor; otherwise the cluster and its
/// conjugate describe one complex factor, and each 2x2 block involved has one
/// eigenvalue on each side.
///
/// Clustering runs in the log metric so that a root pair and its reciprocal
/// pair always make the same merge-or-split decision; a radius floored at the
/// unit scale would happily keep two roots apart at modulus 1.7 while fusing
/// their inverses at modulus 0.6, and no escalation rung recovers from that.
fn cluster_blocks(
    blocks: &[SchurBlock],
    radius_rel: f64,
) -> Result<Vec<(IrreducibleFactor, Vec<usize>)>> {
    let mut points: Vec<Complex<f64>> = Vec::new();
    let mut owner: Vec<usize> = Vec::new();
    let mut conj_of: Vec<usize> = Vec::new();
    for (id, b) in blocks.iter().enumerate() {
        if b.size == 1 {
            points.push(b.eig);
            owner.push(id);
            conj_of.push(points.len() - 1);
        } else {
            let k = points.len();
            points.push(b.eig);
            points.push(b.eig.conj());
            owner.push(id);
            owner.push(id);
            conj_of.push(k + 1);
            conj_of.push(k);
        }
    }
    let groups = cluster_indices(&points, radius_rel, log_distance);
    let mut group_of = vec![0usize; points.len()];
    for (gi, ids) in groups.iter().enumerate() {
        for &i in ids {
            group_of[i] = gi;
        }
    }
    let mut out = Vec::new();
    let mut consumed: std::collections::BTreeSet<usize> = Default::default();
    for (gi, idxs) in groups.iter().enumerate() {
        if consumed.contains(&gi) {
            continue;
        }
        let conj_gi = group_of[conj_of[idxs[0]]];
        let mean: Complex<f64> =
            idxs.iter().map(|&i| points[i]).sum::<Complex<f64>>() / idxs.len() as f64;
        let mut ids: Vec<usize> = idxs.iter().map(|&i| owner[i]).collect();
        ids.sort_unstable();
        if conj_gi == gi {
            consumed.insert(gi);
            ids.dedup();
            out.push((
                IrreducibleFactor {
                    kind: FactorKind::Real { r: mean.re },
                    multiplicity: idxs.len(),
                },
                ids,
            ));
        } else {
            consumed.insert(gi);
            consumed.insert(conj_gi);
            let mut partner_ids: Vec<usize> =
                groups[conj_gi].iter().map(|&i| owner[i]).collect();
            partner_ids.sort_unstable();
            if partner_ids != ids {
                return Err(Error::NumericalFailure(
                    "conjugate clusters of unequal size".into(),
                ));
            }
            let (e, f) = (mean.re, mean.im.abs());
            if f <= 0.0 {
                return Err(Error::NumericalFailure(
                    "complex cluster collapsed onto the real axis".into(),
                ));
            }
            out.push((
                IrreducibleFactor {
                    kind: FactorKind::Complex { e, f },
                    multiplicity: idxs.len(),
                },
                ids,
            ));
        }
    }
    out.sort_by(|x, y| cmp_key(x.0.kind.sort_key(), y.0.kind.sort_key()));
    Ok(out)
}

/// Distance in the log metric: relative modulus gap plus angle gap. The
/// reciprocal map z -> 1/z is an isometry for it, so clustering decisions
/// made with this metric are symmetric across a reciprocal spectrum: two
/// roots merge exactly when their inverses do. Only meaningful for points
/// bounded away from zero.
fn log_distance(x: Complex<f64>, y: Complex<f64>) -> f64 {
    let dr = (x.norm() / y.norm()).ln();
    let mut dt = (x.arg() - y.arg()).abs();
    if dt > std::f64::consts::PI {
        dt = 2.0 * std::f64::consts::PI - dt;
    }
    dr.hypot(dt)
}

/// Union-find clustering of complex points: two points join when `dist` puts
/// them within `radius_rel`. Returns the index groups in a deterministic
/// order.
fn cluster_indices(
    points: &[Complex<f64>],
    radius_rel: f64,
    dist: impl Fn(Complex<f64>, Complex<f64>) -> f64,
) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if dist(points[i], points[j]) <= radius_rel {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut members: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        members.entry(r).or_default().push(i);
    }
    members.into_values().collect()
}

/// Clusters a conjugation-symmetric multiset of eigenvalues into irreducible
/// factors, using radius `radius_rel * max(1, mean modulus)`; unlike the
/// Schur-block path this tolerates points at or near zero. A cluster equal to
/// its own conjugate becomes a real factor (root = mean of real parts); a
/// cluster/conjugate-cluster pair becomes one complex factor.
pub(crate) fn cluster_factors(
    points: &[Complex<f64>],
    radius_rel: f64,
) -> Result<Vec<IrreducibleFactor>> {
    let n = points.len();
    // Conjugate partner of each point by nearest match.
    let mut conj_of = vec![0usize; n];
    for i in 0..n {
        let target = points[i].conj();
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (j, p) in points.iter().enumerate() {
            let d = (p - target).norm();
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        conj_of[i] = best;
    }
    let groups = cluster_indices(points, radius_rel, |x, y| {
        (x - y).norm() / (0.5 * (x.norm() + y.norm())).max(1.0)
    });
    let mut group_of = vec![0usize; n];
    for (gi, ids) in groups.iter().enumerate() {
        for &i in ids {
            group_of[i] = gi;
        }
    }
    let mut factors = Vec::new();
    let mut consumed: std::collections::BTreeSet<usize> = Default::default();
    for (gi, idxs) in groups.iter().enumerate() {
        if consumed.contains(&gi) {
            continue;
        }
        let conj_group = group_of[conj_of[idxs[0]]];
        let mean: Complex<f64> =
            idxs.iter().map(|&i| points[i]).sum::<Complex<f64>>() / idxs.len() as f64;
        if conj_group == gi {
            consumed.insert(gi);
            factors.push(IrreducibleFactor {
                kind: FactorKind::Real { r: mean.re },
                multiplicity: idxs.len(),
            });
        } else {
            let partner = &groups[conj_group];
            if partner.len() != idxs.len() {
                return Err(Error::NumericalFailure(
                    "conjugate clusters of unequal size".into(),
                ));
            }
            consumed.insert(gi);
            consumed.insert(conj_group);
            let (e, f) = (mean.re, mean.im.abs());
            if f <= 0.0 {
                return Err(Error::NumericalFailure(
                    "complex cluster collapsed onto the real axis".into(),
                ));
            }
            factors.push(IrreducibleFactor {
                kind: FactorKind::Complex { e, f },
                multiplicity: idxs.len(),
            });
        }
    }
    factors.sort_by(|x, y| cmp_key(x.kind.sort_key(), y.kind.sort_key()));
    Ok(factors)
}

/// Splits a monic real polynomial into irreducible factors with
/// multiplicities, by clustering the eigenvalues of its companion matrix.
///
/// Roots at 0 are rejected with [`Error::ZeroRoot`]; the factored product is
/// multiplied back and checked against the input coefficients.
pub fn irreducible_factors(
    q: &RealPoly,
    tol: &TolerancePolicy,
) -> Result<Vec<IrreducibleFactor>> {
    let p = q.monic()?;
    if p.degree() == 0 {
        return Ok(Vec::new());
    }
    let coeff_scale = p.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if p.coeffs[0].abs() <= tol.rank_rel * coeff_scale.max(1.0) {
        return Err(Error::ZeroRoot);
    }
    let roots = eigenvalues(&p.companion()?)?;
    if roots.iter().any(|z| z.norm() <= tol.rank_rel) {
        return Err(Error::ZeroRoot);
    }
    let factors = cluster_factors(&roots, tol.root_rel)?;
    // Reconstruction check: the clustered factors must multiply back to q.
    let mut prod = RealPoly::one();
    for fac in &factors {
        prod = prod.mul(&fac.poly_power());
    }
    let err = prod
        .coeffs
        .iter()
        .zip(p.coeffs.iter())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    if err > 1e-4 * coeff_scale.max(1.0) {
        return Err(Error::NumericalFailure(format!(
            "factor reconstruction residual {err:.3e}"
        )));
    }
    Ok(factors)
}

/// Root inversion r -> 1/r, c -> 1/c (keeping the upper-half orientation).
pub fn reciprocal_partner(kind: &FactorKind) -> Result<FactorKind> {
    kind.reciprocal()
}

/// A reciprocal class: either a self-dual factor (root on the unit circle) or
/// a factor together with its distinct reciprocal partner. The representative
/// `rep` always carries the root of modulus >= 1.
#[derive(Debug, Clone)]
pub struct ReciprocalClass {
    pub rep: IrreducibleFactor,
    pub partner: Option<IrreducibleFactor>,
    pub self_dual: bool,
}

impl ReciprocalClass {
    /// Multiplicity summed over both factors of the class.
    pub fn total_multiplicity(&self) -> usize {
        self.rep.multiplicity + self.partner.map_or(0, |p| p.multiplicity)
    }

    /// The reciprocal factor: the partner when distinct, the rep itself when
    /// self-dual.
    pub fn p_tilde(&self) -> IrreducibleFactor {
        self.partner.unwrap_or(self.rep)
    }
}

/// How far off the unit circle a root may sit and still be *snapped* onto it.
fn self_dual_band(root_rel: f64) -> f64 {
    4.0 * root_rel
}

fn snap_self_dual(kind: FactorKind) -> FactorKind {
    match kind {
        FactorKind::Real { r } => FactorKind::Real { r: r.signum() },
        FactorKind::Complex { e, f } => {
            let m = (e * e + f * f).sqrt();
            FactorKind::Complex { e: e / m, f: f / m }
        }
    }
}

/// Groups factors into reciprocal classes.
///
/// Factors with |root| within a narrow band of 1 are snapped onto the unit
/// circle and reported self-dual; a warning is emitted when the snap distance
/// is large enough to be ambiguous. Remaining factors must pair up exactly
/// (same multiplicity, reciprocal roots) or the whole call fails with
/// [`Error::UnpairedFactor`].
pub fn reciprocal_classes(
    factors: &[IrreducibleFactor],
    tol: &TolerancePolicy,
) -> Result<(Vec<ReciprocalClass>, Vec<String>)> {
    let mut warnings = Vec::new();
    let band = self_dual_band(tol.root_rel);
    let mut classes: Vec<ReciprocalClass> = Vec::new();
    let mut used = vec![false; factors.len()];
    for i in 0..factors.len() {
        if used[i] {
            continue;
        }
        let fac = factors[i];
        let snap_dist = (fac.kind.root_modulus() - 1.0).abs();
        if snap_dist <= band {
            used[i] = true;
            if snap_dist > 0.25 * tol.root_rel {
                warnings.push(format!(
                    "root at distance {snap_dist:.3e} from the unit circle merged to self-dual"
                ));
            }
            let snapped = snap_self_dual(fac.kind);
            let mut mult = fac.multiplicity;
            // Absorb any other factor that snaps onto the same unit root.
            for j in (i + 1)..factors.len() {
                if !used[j] && (factors[j].kind.root_modulus() - 1.0).abs() <= band {
                    let other = snap_self_dual(factors[j].kind);
                    if snapped.matches(&other, tol.root_rel) {
                        used[j] = true;
                        mult += factors[j].multiplicity;
                        warnings.push(
                            "two near-unit factors merged into one self-dual class".into(),
                        );
                    }
                }
            }
            classes.push(ReciprocalClass {
                rep: IrreducibleFactor {
                    kind: snapped,
                    multiplicity: mult,
                },
                partner: None,
                self_dual: true,
            });
            continue;
        }
        // Not self-dual: find the reciprocal partner.
        used[i] = true;
        let recip = fac.kind.reciprocal()?;
        let mut partner_idx = None;
        for j in 0..factors.len() {
            if !used[j] && recip.matches(&factors[j].kind, 8.0 * tol.root_rel) {
                partner_idx = Some(j);
                break;
            }
        }
        let Some(j) = partner_idx else {
            return Err(Error::UnpairedFactor(format!(
                "no reciprocal partner for {:?}",
                fac.kind
            )));
        };
        used[j] = true;
        let partner = factors[j];
        if partner.multiplicity != fac.multiplicity {
            return Err(Error::UnpairedFactor(format!(
                "multiplicity mismatch {} vs {} for {:?} and its reciprocal",
                fac.multiplicity, partner.multiplicity, fac.kind
            )));
        }
        let (rep, part) = if fac.kind.root_modulus() >= 1.0 {
            (fac, partner)
        } else {
            (partner, fac)
        };
        classes.push(ReciprocalClass {
            rep,
            partner: Some(part),
            self_dual: false,
        });
    }
    classes.sort_by(|x, y| cmp_key(x.rep.kind.sort_key(), y.rep.kind.sort_key()));
    Ok((classes, warnings))
}

/// Matrix power with per-step Frobenius normalization. The returned matrix is
/// a positive multiple of m^k (or exactly zero if the power collapses), so its
/// singular *subspaces* match those of m^k while over/underflow cannot occur.
pub(crate) fn matrix_power_normalized(m: &RealMatrix, k: usize) -> RealMatrix {
    let d = m.nrows();
    let mut acc = RealMatrix::identity(d, d);
    for _ in 0..k {
        acc = &acc * m;
        let norm = acc.norm();
        if norm < 1e-300 {
            return RealMatrix::zeros(d, d);
        }
        acc /= norm;
    }
    acc
}

/// Solves the Sylvester equation `p x - x m = rhs` by LU on the Kronecker
/// form `(I (x) p - m^T (x) I) vec(x) = vec(rhs)` (column-major vec). Returns
/// None when the spectra of p and m overlap enough to make the system
/// (numerically) singular.
fn solve_sylvester(p: &RealMatrix, m: &RealMatrix, rhs: &RealMatrix) -> Option<RealMatrix> {
    let np = p.nrows();
    let nm = m.nrows();
    let n = np * nm;
    let mut k = RealMatrix::zeros(n, n);
    for c in 0..nm {
        for r in 0..np {
            let row = c * np + r;
            for s in 0..np {
                k[(row, c * np + s)] += p[(r, s)];
            }
            for s in 0..nm {
                k[(row, s * np + r)] -= m[(s, c)];
            }
        }
    }
    let rhs_vec = crate::linalg::RealVector::from_column_slice(rhs.as_slice());
    let x = k.lu().solve(&rhs_vec)?;
    Some(RealMatrix::from_column_slice(np, nm, x.as_slice()))
}

/// Joint Newton refinement of all component frames at once.
///
/// With V = [W_1 .. W_k] the matrix B = V^{-1} a V is block diagonal exactly
/// when every frame spans an invariant subspace. Each pass solves
/// `B_ii X_ij - X_ij B_jj = -B_ij` for every off-diagonal block and updates
/// V <- V (I + X), contracting the off-diagonal residual quadratically once it
/// starts below the spectral separation of the blocks. The Schur-reordered
/// frames arrive within ~1e-9 of invariant (the zeroed swap residuals), well
/// inside the Newton basin for any resolvable spectrum, and leave at rounding
/// level. Blocks whose Sylvester step is large or unsolvable are left
/// untouched, so a degenerate pair degrades gracefully to the input frames.
fn joint_block_refine(
    a: &RealMatrix,
    frames: &mut [ComponentFrame],
    tol: &TolerancePolicy,
) -> Result<()> {
    let k = frames.len();
    if k < 2 {
        return Ok(());
    }
    let debug = std::env::var_os("IDINF_DEBUG_SPECTRAL").is_some();
    let d = a.nrows();
    let dims: Vec<usize> = frames.iter().map(|fr| fr.w.ncols()).collect();
    let mut offsets = vec![0usize; k];
    for i in 1..k {
        offsets[i] = offsets[i - 1] + dims[i - 1];
    }
    let mut v = linalg::hstack(&frames.iter().map(|fr| fr.w.clone()).collect::<Vec<_>>());
    let mut prev_off = f64::INFINITY;
    for _pass in 0..4 {
        let b = v
            .clone()
            .lu()
            .solve(&(a * &v))
            .ok_or_else(|| Error::NumericalFailure("component frame matrix is singular".into()))?;
        let mut off2 = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    off2 += b
                        .view((offsets[i], offsets[j]), (dims[i], dims[j]))
                        .norm_squared();
                }
            }
        }
        let off = off2.sqrt();
        if debug {
            eprintln!("  joint pass {_pass}: off-diagonal {off:.3e}");
        }
        if off <= 1e-15 * b.norm().max(f64::MIN_POSITIVE) || off >= prev_off {
            break;
        }
        prev_off = off;
        let mut t = RealMatrix::identity(d, d);
        let mut stepped = false;
        for i in 0..k {
            let bii = b.view((offsets[i], offsets[i]), (dims[i], dims[i])).into_owned();
            for j in 0..k {
                if i == j {
                    continue;
                }
                let bjj = b.view((offsets[j], offsets[j]), (dims[j], dims[j])).into_owned();
                let bij = b.view((offsets[i], offsets[j]), (dims[i], dims[j])).into_owned();
                if let Some(x) = solve_sylvester(&bii, &bjj, &(-&bij)) {
                    // A Newton step approaching 1 means the blocks are not
                    // actually separated; applying it would tangle the frames.
                    if x.norm() <= 0.25 {
                        t.view_mut((offsets[i], offsets[j]), (dims[i], dims[j]))
                            .copy_from(&x);
                        stepped = true;
                    }
                }
            }
        }
        if !stepped {
            break;
        }
        v = &v * &t;
    }
    for (i, frame) in frames.iter_mut().enumerate() {
        let cols = v.view((0, offsets[i]), (d, dims[i])).into_owned();
        let w = linalg::orthonormal_columns(&cols, tol)?;
        if w.ncols() != dims[i] {
            return Err(Error::AssertionFailure(
                "joint refinement collapsed a component frame".into(),
            ));
        }
        let a_p = w.transpose() * a * &w;
        frame.factor.kind = refine_kind(frame.factor.kind, &a_p)?;
        frame.w = w;
        frame.a_p = a_p;
    }
    Ok(())
}

/// Geometry of one spectral component: the orthonormal frame spanning
/// ker p(a)^m for an irreducible factor p of multiplicity m, the restriction
/// of a to that frame, and the kernel filtration of the restricted p(a).
#[derive(Debug, Clone)]
pub(crate) struct FactorGeometry {
    pub factor: IrreducibleFactor,
    /// d x q orthonormal frame of the component, q = deg * multiplicity.
    pub w: RealMatrix,
    /// q x q restriction of a.
    pub a_p: RealMatrix,
    /// q x q restriction of p(a), computed as p(a_p).
    pub m_p: RealMatrix,
    /// Largest exponent in the filtration.
    pub n_max: usize,
    /// Cumulative kernel dimensions d_1 <= ... <= d_{n_max} = q.
    pub level_dims: Vec<usize>,
    /// Nested orthonormal bases in component coordinates; entry k-1 has d_k
    /// columns and extends entry k-2 exactly.
    pub level_bases: Vec<RealMatrix>,
}

/// One spectral component before filtration: the factor with its root refined,
/// the orthonormal frame, and the restriction of a to it.
pub(crate) struct ComponentFrame {
    pub factor: IrreducibleFactor,
    pub w: RealMatrix,
    pub a_p: RealMatrix,
}

/// Trace-based root refinement from the restricted matrix: tr = q * r for a
/// real root, tr = q * e and tr(A^2) = q (e^2 - f^2) for a complex pair.
fn refine_kind(kind: FactorKind, a_p: &RealMatrix) -> Result<FactorKind> {
    let q = a_p.nrows();
    Ok(match kind {
        FactorKind::Real { .. } => FactorKind::Real {
            r: a_p.trace() / q as f64,
        },
        FactorKind::Complex { .. } => {
            let e = a_p.trace() / q as f64;
            let tr2 = (a_p * a_p).trace();
            let f2 = e * e - tr2 / q as f64;
            if f2 <= 0.0 {
                return Err(Error::NumericalFailure(
                    "complex root refinement collapsed onto the real axis".into(),
                ));
            }
            FactorKind::Complex { e, f: f2.sqrt() }
        }
    })
}

/// Kernel filtration of p(a_p) on an extracted component.
fn component_filtration(frame: ComponentFrame, tol: &TolerancePolicy) -> Result<FactorGeometry> {
    let ComponentFrame { factor, w, a_p } = frame;
    let kind = factor.kind;
    let mult = factor.multiplicity;
    let q = a_p.nrows();
    let m_p = kind.poly().eval_matrix(&a_p);

    // When every summand of this factor has exponent 1, p(a_p) is zero up to
    // rounding, so its own norm is no usable anchor. Compare against the
    // cancellation-free evaluation scale of p at ||a_p||: below it, the whole
    // component is the level-1 kernel. The noise in a_p is limited by the
    // conditioning of the subspace extraction (about eps * cond^2 / gap, i.e.
    // up to ~1e-11 for condition numbers around 100), while a genuine
    // nilpotent part keeps ||p(a_p)|| above ~1e-5 for any reasonably
    // conditioned chain, so 1e-9 separates the two regimes by three orders of
    // magnitude on each side.
    let sigma_top = linalg::spectral_norm(&m_p).max(f64::MIN_POSITIVE);
    let na = linalg::spectral_norm(&a_p).max(1.0);
    let eval_scale: f64 = kind
        .poly()
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| c.abs() * na.powi(i as i32))
        .sum();
    if sigma_top <= COMPONENT_NOISE_REL * eval_scale {
        return Ok(FactorGeometry {
            factor,
            w,
            a_p,
            m_p,
            n_max: 1,
            level_dims: vec![q],
            level_bases: vec![RealMatrix::identity(q, q)],
        });
    }
    let mut level_dims: Vec<usize> = Vec::new();
    let mut level_bases: Vec<RealMatrix> = Vec::new();
    let mut power = RealMatrix::identity(q, q);
    let mut prev = RealMatrix::zeros(q, 0);
    for k in 1..=mult {
        power = &power * &m_p;
        let anchor = sigma_top.powi(k as i32);
        let svd = linalg::svd_of(&power)?;
        // The second term floors the cutoff at the believable noise scale of
        // the k-th power: noise of m_p (~ COMPONENT_NOISE_REL * eval_scale)
        // carried through k-1 further multiplications.
        let cutoff = (tol.rank_rel * anchor)
            .max(COMPONENT_NOISE_REL * eval_scale * sigma_top.powi(k as i32 - 1));
        let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
        let d_k = q - rank;
        let v_t = svd.v_t.as_ref().expect("v_t requested");
        if std::env::var_os("IDINF_DEBUG_SPECTRAL").is_some() {
            eprintln!(
                "    filtration {kind:?} k={k} sigma={:?} cutoff={cutoff:.3e} d_k={d_k}",
                svd.singular_values.as_slice()
            );
        }
        let mut kernel = RealMatrix::zeros(q, d_k);
        for (jj, row) in (rank..q).enumerate() {
            for i in 0..q {
                kernel[(i, jj)] = v_t[(row, i)];
            }
        }
        if d_k <= level_dims.last().copied().unwrap_or(0) {
            return Err(Error::AssertionFailure(format!(
                "filtration of {kind:?} stalled at level {k}: dim {d_k}"
            )));
        }
        let fresh = linalg::orthonormal_complement_in(&kernel, &prev)?;
        let basis = if prev.ncols() == 0 {
            fresh
        } else {
            linalg::hstack(&[prev.clone(), fresh])
        };
        level_dims.push(d_k);
        prev = basis.clone();
        level_bases.push(basis);
        if d_k == q {
            break;
        }
    }
    if level_dims.last().copied() != Some(q) {
        return Err(Error::AssertionFailure(format!(
            "filtration of {kind:?} did not exhaust the component: {level_dims:?} of {q}"
        )));
    }
    let n_max = level_dims.len();
    Ok(FactorGeometry {
        factor,
        w,
        a_p,
        m_p,
        n_max,
        level_dims,
        level_bases,
    })
}

/// The kernel filtration of one reciprocal class, in ambient coordinates.
///
/// For a self-dual class the component is b-invariant and the dimensions obey
/// d_k = 2 * deg * sum_j min(k, n_j) over the summand exponents n_j; for a
/// paired class the filtration lives on the modulus > 1 side only and the
/// factor 2 is absent.
#[derive(Debug, Clone)]
pub struct Filtration {
    pub class: ReciprocalClass,
    pub n_max: usize,
    pub level_dims: Vec<usize>,
    /// Nested orthonormal bases of ker p(a)^k in ambient coordinates; entry
    /// k-1 has level_dims[k-1] columns and extends entry k-2 column-for-column.
    pub level_bases: Vec<RealMatrix>,
}

/// Computes the filtration of the class representative's component.
pub fn filtration(
    g: &GeneratorPair,
    class: &ReciprocalClass,
    tol: &TolerancePolicy,
) -> Result<Filtration> {
    let cg = class_geometry(g, class, tol)?;
    let geom = &cg.geom;
    let level_bases = geom
        .level_bases
        .iter()
        .map(|b| &geom.w * b)
        .collect::<Vec<_>>();
    Ok(Filtration {
        class: cg.class,
        n_max: geom.n_max,
        level_dims: geom.level_dims.clone(),
        level_bases,
    })
}

/// Everything decomposition needs to know about one reciprocal class.
#[derive(Debug, Clone)]
pub(crate) struct ClassGeometry {
    pub class: ReciprocalClass,
    /// Component geometry of the representative factor (self-dual: the whole
    /// b-invariant component; paired: the modulus > 1 side).
    pub geom: FactorGeometry,
    /// Restriction of b to the component frame; present only for self-dual
    /// classes, where b preserves the component.
    pub b_p: Option<RealMatrix>,
    /// (a_p - e I)/f for complex classes: the action of the complex unit on
    /// the component (exact on each filtration quotient).
    pub j_p: Option<RealMatrix>,
}

/// Builds the full class geometry (component frame, restricted actions,
/// filtration) for a single reciprocal class.
///
/// Runs the full spectral pipeline and picks out the matching class, so that
/// single-class callers get the same purified frames and escalation hardening
/// as a whole-pair decomposition. The caller's class may carry coarse roots
/// (splattered up to ~1e-4 for defective spectra), so the match is by degree
/// and multiplicity plus *closest* representative root, capped at the widest
/// clustering radius.
pub(crate) fn class_geometry(
    g: &GeneratorPair,
    class: &ReciprocalClass,
    tol: &TolerancePolicy,
) -> Result<ClassGeometry> {
    let analysis = analyze(g, tol)?;
    let mut best: Option<(f64, ClassGeometry)> = None;
    for cg in analysis.geoms {
        if cg.class.rep.kind.degree() != class.rep.kind.degree()
            || cg.class.rep.multiplicity != class.rep.multiplicity
            || cg.class.self_dual != class.self_dual
        {
            continue;
        }
        let dist = root_distance(&cg.class.rep.kind, &class.rep.kind);
        if best.as_ref().is_none_or(|(d0, _)| dist < *d0) {
            best = Some((dist, cg));
        }
    }
    match best {
        Some((dist, cg)) if dist <= 2e-2 * class.rep.kind.root_modulus().max(1.0) => Ok(cg),
        _ => Err(Error::AssertionFailure(format!(
            "no spectral component matches the class of {:?}",
            class.rep.kind
        ))),
    }
}

fn root_distance(x: &FactorKind, y: &FactorKind) -> f64 {
    match (x, y) {
        (FactorKind::Real { r: r1 }, FactorKind::Real { r: r2 }) => (r1 - r2).abs(),
        (FactorKind::Complex { e: e1, f: f1 }, FactorKind::Complex { e: e2, f: f2 }) => {
            ((e1 - e2).powi(2) + (f1 - f2).powi(2)).sqrt()
        }
        _ => f64::INFINITY,
    }
}

fn finish_class_geometry(
    g: &GeneratorPair,
    class: ReciprocalClass,
    geom: FactorGeometry,
) -> Result<ClassGeometry> {
    let b_p = if class.self_dual {
        let b_p = geom.w.transpose() * g.b() * &geom.w;
        let invariance = (g.b() * &geom.w - &geom.w * &b_p).norm() / g.b().norm().max(1.0);
        if invariance > 1e-6 {
            return Err(Error::AssertionFailure(format!(
                "self-dual component not b-invariant (residual {invariance:.3e})"
            )));
        }
        Some(b_p)
    } else {
        None
    };
    let j_p = match geom.factor.kind {
        FactorKind::Complex { e, f } => {
            let q = geom.a_p.nrows();
            let mut j = geom.a_p.clone();
            for i in 0..q {
                j[(i, i)] -= e;
            }
            Some(j / f)
        }
        FactorKind::Real { .. } => None,
    };
    Ok(ClassGeometry {
        class,
        geom,
        b_p,
        j_p,
    })
}

#[derive(Debug)]
pub(crate) struct SpectrumAnalysis {
    pub geoms: Vec<ClassGeometry>,
    pub warnings: Vec<String>,
}

/// Full spectral pipeline: eigenvalues of a, clustering with an escalating
/// radius until the induced components are numerically consistent, root
/// refinement, reciprocal pairing, filtrations.
///
/// Escalation exists because eigenvalues of a defective matrix scatter like
/// eps^(1/n) around the true root: the initial radius `tol.root_rel` is right
/// for well-separated spectra, and each failed validation widens it tenfold
/// (up to 2e-2) until clusters describe genuine invariant components.
pub(crate) fn analyze(g: &GeneratorPair, tol: &TolerancePolicy) -> Result<SpectrumAnalysis> {
    let a = g.a();
    let d = a.nrows();
    let sf = schur_form(a)?;
    if sf.blocks.iter().any(|b| b.eig.norm() <= 1e-8) {
        return Err(Error::ZeroRoot);
    }
    let mut warnings: Vec<String> = Vec::new();
    let mut radius = tol.root_rel;
    let mut last_err: Option<Error> = None;
    while radius <= 2e-2 {
        match analyze_at_radius(g, &sf, radius, tol) {
            Ok((geoms, mut w)) => {
                if radius > tol.root_rel {
                    warnings.push(format!(
                        "eigenvalue clustering widened to radius {radius:.1e} to resolve defective spectrum"
                    ));
                }
                warnings.append(&mut w);
                return Ok(SpectrumAnalysis { geoms, warnings });
            }
            Err(e @ (Error::ZeroRoot | Error::InvalidMatrix(_))) => return Err(e),
            Err(e) => {
                if std::env::var_os("IDINF_DEBUG_SPECTRAL").is_some() {
                    eprintln!("radius {radius:.1e}: {e}");
                }
                last_err = Some(e);
                radius *= 10.0;
            }
        }
    }
    Err(last_err.unwrap_or_else(|| {
        Error::NumericalFailure(format!("could not resolve spectrum of a {d}x{d} generator"))
    }))
}

fn analyze_at_radius(
    g: &GeneratorPair,
    sf: &SchurForm,
    radius: f64,
    tol: &TolerancePolicy,
) -> Result<(Vec<ClassGeometry>, Vec<String>)> {
    let a = g.a();
    let d = a.nrows();
    let mut clusters = cluster_blocks(&sf.blocks, radius)?;
    let mut warnings = Vec::new();

    // Pre-merge clusters that will snap onto the same unit-circle root, so the
    // component geometry is built once for the merged factor.
    let band = self_dual_band(tol.root_rel);
    let mut merged: Vec<(IrreducibleFactor, Vec<usize>)> = Vec::new();
    for (fac, ids) in clusters.drain(..) {
        let snap_dist = (fac.kind.root_modulus() - 1.0).abs();
        if snap_dist <= band {
            let snapped = snap_self_dual(fac.kind);
            if let Some(prev) = merged.iter_mut().find(|(m, _)| {
                m.kind.degree() == snapped.degree() && m.kind.matches(&snapped, tol.root_rel)
            }) {
                prev.0.multiplicity += fac.multiplicity;
                prev.1.extend(ids);
                warnings.push("two near-unit factors merged into one self-dual class".into());
                continue;
            }
            merged.push((
                IrreducibleFactor {
                    kind: snapped,
                    multiplicity: fac.multiplicity,
                },
                ids,
            ));
        } else {
            merged.push((fac, ids));
        }
    }
    let clusters = merged;
    if std::env::var_os("IDINF_DEBUG_SPECTRAL").is_some() {
        let kinds: Vec<IrreducibleFactor> = clusters.iter().map(|c| c.0).collect();
        eprintln!("  radius {radius:.1e} factors: {kinds:?}");
    }

    let mut frames: Vec<ComponentFrame> = Vec::new();
    for (fac, ids) in &clusters {
        let mut selected = vec![false; sf.blocks.len()];
        for &id in ids {
            selected[id] = true;
        }
        let w = frame_for_blocks(sf, &selected)?;
        let a_p = w.tr_mul(&(a * &w));
        let kind = refine_kind(fac.kind, &a_p)?;
        frames.push(ComponentFrame {
            factor: IrreducibleFactor {
                kind,
                multiplicity: fac.multiplicity,
            },
            w,
            a_p,
        });
    }

    // Global consistency: the union of all component frames must span the
    // whole space with a healthy margin.
    let total: usize = frames.iter().map(|fr| fr.w.ncols()).sum();
    if total != d {
        return Err(Error::AssertionFailure(format!(
            "components span {total} of {d} dimensions"
        )));
    }
    let stacked = linalg::hstack(&frames.iter().map(|fr| fr.w.clone()).collect::<Vec<_>>());
    let sigma_min = linalg::sigma_min(&stacked)?;
    if !(sigma_min > 1e-6) {
        return Err(Error::AssertionFailure(format!(
            "component frames nearly dependent (sigma_min = {sigma_min:.3e})"
        )));
    }

    joint_block_refine(a, &mut frames, tol)?;

    // Two clusters whose refined roots coincide are fragments of one true
    // factor: the radius sits below the eigenvalue splatter of a defective
    // block, and treating the fragments as separate factors would fabricate
    // structure. The threshold matches the reciprocal-pairing tolerance, so
    // factors that pass here are distinguishable everywhere downstream.
    for i in 0..frames.len() {
        for j in (i + 1)..frames.len() {
            if frames[i]
                .factor
                .kind
                .matches(&frames[j].factor.kind, 8.0 * tol.root_rel)
            {
                return Err(Error::AssertionFailure(format!(
                    "refined roots coincide: {:?} and {:?}",
                    frames[i].factor.kind, frames[j].factor.kind
                )));
            }
        }
    }

    let mut geoms: Vec<FactorGeometry> = Vec::new();
    for frame in frames {
        geoms.push(component_filtration(frame, tol)?);
    }

    let refined: Vec<IrreducibleFactor> = geoms.iter().map(|ge| ge.factor).collect();
    let (classes, mut class_warnings) = reciprocal_classes(&refined, tol)?;
    warnings.append(&mut class_warnings);

    let mut out = Vec::new();
    for class in classes {
        // Geometry of the representative factor (roots refined, so matching is
        // tight).
        let match_rel = if class.self_dual { band.max(1e-9) } else { 1e-9 };
        let gi = geoms
            .iter()
            .position(|ge| {
                ge.factor.kind.degree() == class.rep.kind.degree()
                    && ge.factor.multiplicity == class.rep.multiplicity
                    && ge.factor.kind.matches(&class.rep.kind, match_rel)
            })
            .ok_or_else(|| {
                Error::AssertionFailure("class representative lost its geometry".into())
            })?;
        let geom = geoms[gi].clone();
        out.push(finish_class_geometry(g, class, geom)?);
    }
    out.sort_by(|x, y| cmp_key(x.class.rep.kind.sort_key(), y.class.rep.kind.sort_key()));
    Ok((out, warnings))
}
