//! Canonical block models, invariant normalization, and the seeded generator.
//!
//! Every indecomposable is determined by an irreducible factor p (a root) and
//! an exponent n. Its canonical matrices on R^(2 deg n) are
//!
//! ```text
//! a_c = [ A   0    ]      b_c = [ 0  -I ]      with A the (real or complex)
//!       [ 0   A^-1 ]            [ I   0 ]      Jordan block of size deg * n
//! ```
//!
//! and J1 = a_c b_c^-1 = [[0, A], [-A^-1, 0]], J2 = b_c. All entries of A^-1
//! come from the closed-form inverse of a Jordan block, so the models are
//! reproducible to the bit.

use crate::error::{Error, Result};
use crate::linalg::{self, RealMatrix, TolerancePolicy};
use crate::pair::{validate_pair, ComplexStructurePair};
use crate::rng::SplitMix64;
use crate::spectral::{cmp_key, FactorKind};

/// Distance from the unit circle below which a root is treated as self-dual
/// by [`normalize_invariant`] (which takes no tolerance policy).
pub const SELF_DUAL_EPS: f64 = 1e-9;

/// The isomorphism invariant of one indecomposable summand: the irreducible
/// factor (its root) and the exponent n >= 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummandInvariant {
    pub kind: FactorKind,
    pub n: usize,
}

impl SummandInvariant {
    pub fn new(kind: FactorKind, n: usize) -> Self {
        SummandInvariant { kind, n }
    }

    /// Real dimension of the summand: 2 * deg(p) * n.
    pub fn dim(&self) -> usize {
        2 * self.kind.degree() * self.n
    }
}

/// Sort order used everywhere invariants are listed: real factors before
/// complex, roots ascending, larger exponents first within the same root.
pub(crate) fn cmp_invariants(a: &SummandInvariant, b: &SummandInvariant) -> std::cmp::Ordering {
    cmp_key(a.kind.sort_key(), b.kind.sort_key()).then(b.n.cmp(&a.n))
}

/// A summand is irreducible exactly when its exponent is 1.
pub fn is_irreducible(inv: &SummandInvariant) -> bool {
    inv.n == 1
}

/// Canonical representative of the invariant: root moved outside (or onto)
/// the unit circle, complex roots oriented into the upper half plane, roots
/// within [`SELF_DUAL_EPS`] of the circle snapped exactly onto it.
pub fn normalize_invariant(inv: &SummandInvariant) -> Result<SummandInvariant> {
    if inv.n == 0 {
        return Err(Error::InvalidSpec("exponent n must be >= 1".into()));
    }
    let kind = match inv.kind {
        FactorKind::Real { r } => {
            if r == 0.0 || !r.is_finite() {
                return Err(Error::ZeroRoot);
            }
            FactorKind::Real { r }
        }
        FactorKind::Complex { e, f } => {
            if f == 0.0 || !f.is_finite() || !e.is_finite() {
                return Err(Error::InvalidSpec(
                    "complex root must have nonzero imaginary part".into(),
                ));
            }
            if e * e + f * f == 0.0 {
                return Err(Error::ZeroRoot);
            }
            FactorKind::Complex { e, f: f.abs() }
        }
    };
    let modulus = kind.root_modulus();
    if (modulus - 1.0).abs() <= SELF_DUAL_EPS {
        return Ok(SummandInvariant {
            kind: match kind {
                FactorKind::Real { r } => FactorKind::Real { r: r.signum() },
                FactorKind::Complex { e, f } => {
                    let m = (e * e + f * f).sqrt();
                    FactorKind::Complex { e: e / m, f: f / m }
                }
            },
            n: inv.n,
        });
    }
    if modulus < 1.0 {
        Ok(SummandInvariant {
            kind: kind.reciprocal()?,
            n: inv.n,
        })
    } else {
        Ok(SummandInvariant { kind, n: inv.n })
    }
}

/// True when the two lists describe the same multiset of invariants, with
/// roots compared within `root_rel * max(1, |root|)`.
pub fn same_invariants(a: &[SummandInvariant], b: &[SummandInvariant], root_rel: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(cmp_invariants);
    b.sort_by(cmp_invariants);
    a.iter()
        .zip(b.iter())
        .all(|(x, y)| x.n == y.n && x.kind.degree() == y.kind.degree() && x.kind.matches(&y.kind, root_rel))
}

/// Jordan block for a real root: r on the diagonal, ones above.
fn jordan_real(r: f64, n: usize) -> RealMatrix {
    let mut m = RealMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = r;
        if i + 1 < n {
            m[(i, i + 1)] = 1.0;
        }
    }
    m
}

/// Closed-form inverse of the real Jordan block:
/// (A^-1)[i, i+k] = (-1)^k r^-(k+1).
fn jordan_real_inverse(r: f64, n: usize) -> RealMatrix {
    let mut m = RealMatrix::zeros(n, n);
    for i in 0..n {
        let mut coeff = 1.0 / r;
        for j in i..n {
            m[(i, j)] = coeff;
            coeff *= -1.0 / r;
        }
    }
    m
}

/// Real Jordan block for a conjugate root pair c = e + i f: 2x2 rotation-
/// scaling blocks D = [[e, -f], [f, e]] on the diagonal, I_2 above.
fn jordan_complex(e: f64, f: f64, n: usize) -> RealMatrix {
    let mut m = RealMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(2 * i, 2 * i)] = e;
        m[(2 * i, 2 * i + 1)] = -f;
        m[(2 * i + 1, 2 * i)] = f;
        m[(2 * i + 1, 2 * i + 1)] = e;
        if i + 1 < n {
            m[(2 * i, 2 * i + 2)] = 1.0;
            m[(2 * i + 1, 2 * i + 3)] = 1.0;
        }
    }
    m
}

/// Closed-form inverse of the complex Jordan block: block Toeplitz with
/// blocks (-1)^k D^-(k+1) on the k-th superdiagonal.
fn jordan_complex_inverse(e: f64, f: f64, n: usize) -> RealMatrix {
    let det = e * e + f * f;
    let d_inv = [e / det, f / det, -f / det, e / det]; // row-major [[e, f], [-f, e]] / det
    // Powers of D^-1 as 2x2 row-major arrays.
    let mut pow = vec![[1.0, 0.0, 0.0, 1.0]];
    for k in 0..n {
        let p = pow[k];
        pow.push([
            p[0] * d_inv[0] + p[1] * d_inv[2],
            p[0] * d_inv[1] + p[1] * d_inv[3],
            p[2] * d_inv[0] + p[3] * d_inv[2],
            p[2] * d_inv[1] + p[3] * d_inv[3],
        ]);
    }
    let mut m = RealMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let mut sign = 1.0;
        for j in i..n {
            let blk = pow[j - i + 1];
            m[(2 * i, 2 * j)] = sign * blk[0];
            m[(2 * i, 2 * j + 1)] = sign * blk[1];
            m[(2 * i + 1, 2 * j)] = sign * blk[2];
            m[(2 * i + 1, 2 * j + 1)] = sign * blk[3];
            sign = -sign;
        }
    }
    m
}

/// The canonical matrices of one indecomposable summand.
#[derive(Debug, Clone)]
pub struct CanonicalModel {
    pub invariant: SummandInvariant,
    /// The Jordan block A of size deg * n.
    pub a_block: RealMatrix,
    /// Closed-form inverse of A.
    pub a_block_inv: RealMatrix,
    /// a_c = blockdiag(A, A^-1), size 2 deg n.
    pub a: RealMatrix,
    /// b_c = [[0, -I], [I, 0]].
    pub b: RealMatrix,
}

impl CanonicalModel {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// J2 = b_c.
    pub fn j2(&self) -> RealMatrix {
        self.b.clone()
    }

    /// J1 = a_c b_c^-1 = [[0, A], [-A^-1, 0]], assembled blockwise so the zero
    /// pattern is exact.
    pub fn j1(&self) -> RealMatrix {
        let h = self.a_block.nrows();
        let mut m = RealMatrix::zeros(2 * h, 2 * h);
        m.view_mut((0, h), (h, h)).copy_from(&self.a_block);
        m.view_mut((h, 0), (h, h)).copy_from(&(-&self.a_block_inv));
        m
    }
}

/// Builds the canonical model for an invariant. The root must be nonzero
/// (else [`Error::ZeroRoot`]) and a complex root must have f != 0; the
/// invariant is used as given, without normalization.
pub fn canonical_model(inv: &SummandInvariant) -> Result<CanonicalModel> {
    if inv.n == 0 {
        return Err(Error::InvalidSpec("exponent n must be >= 1".into()));
    }
    let (a_block, a_block_inv) = match inv.kind {
        FactorKind::Real { r } => {
            if r == 0.0 || !r.is_finite() {
                return Err(Error::ZeroRoot);
            }
            (jordan_real(r, inv.n), jordan_real_inverse(r, inv.n))
        }
        FactorKind::Complex { e, f } => {
            if !e.is_finite() || !f.is_finite() || f == 0.0 {
                return Err(Error::InvalidSpec(
                    "complex root must have nonzero imaginary part".into(),
                ));
            }
            if e * e + f * f == 0.0 {
                return Err(Error::ZeroRoot);
            }
            (jordan_complex(e, f, inv.n), jordan_complex_inverse(e, f, inv.n))
        }
    };
    let h = a_block.nrows();
    let mut a = RealMatrix::zeros(2 * h, 2 * h);
    a.view_mut((0, 0), (h, h)).copy_from(&a_block);
    a.view_mut((h, h), (h, h)).copy_from(&a_block_inv);
    let mut b = RealMatrix::zeros(2 * h, 2 * h);
    for i in 0..h {
        b[(i, h + i)] = -1.0;
        b[(h + i, i)] = 1.0;
    }
    Ok(CanonicalModel {
        invariant: *inv,
        a_block,
        a_block_inv,
        a,
        b,
    })
}

/// Blockdiagonal canonical matrices (a_c, b_c) for a list of invariants, in
/// the given order.
pub fn assemble_canonical(invs: &[SummandInvariant]) -> Result<(RealMatrix, RealMatrix)> {
    if invs.is_empty() {
        return Err(Error::InvalidSpec("empty invariant list".into()));
    }
    let models: Vec<CanonicalModel> = invs.iter().map(canonical_model).collect::<Result<_>>()?;
    let a = linalg::block_diag(&models.iter().map(|m| m.a.clone()).collect::<Vec<_>>());
    let b = linalg::block_diag(&models.iter().map(|m| m.b.clone()).collect::<Vec<_>>());
    Ok((a, b))
}

fn assemble_structures(invs: &[SummandInvariant]) -> Result<(RealMatrix, RealMatrix)> {
    let models: Vec<CanonicalModel> = invs.iter().map(canonical_model).collect::<Result<_>>()?;
    let j1 = linalg::block_diag(&models.iter().map(|m| m.j1()).collect::<Vec<_>>());
    let j2 = linalg::block_diag(&models.iter().map(|m| m.j2()).collect::<Vec<_>>());
    Ok((j1, j2))
}

/// The complex-unit action on a quaternion-type summand: for a model with a
/// unit-circle complex root and n = 1, J = (a_c - e I)/f satisfies J^2 = -I
/// and J b_c = -b_c J exactly up to roundoff. Any other model is rejected
/// with [`Error::NotQuaternionCase`].
pub fn quaternion_j(model: &CanonicalModel) -> Result<RealMatrix> {
    let FactorKind::Complex { e, f } = model.invariant.kind else {
        return Err(Error::NotQuaternionCase);
    };
    if model.invariant.n != 1 || ((e * e + f * f).sqrt() - 1.0).abs() > SELF_DUAL_EPS {
        return Err(Error::NotQuaternionCase);
    }
    let d = model.dim();
    let mut j = model.a.clone();
    for i in 0..d {
        j[(i, i)] -= e;
    }
    Ok(j / f)
}

/// Everything needed to generate a pseudo-random pair with known invariants.
#[derive(Debug, Clone)]
pub struct GenerationSpec {
    /// Summand invariants, repeats allowed.
    pub invariants: Vec<SummandInvariant>,
    pub seed: u64,
    /// Upper bound for the 2-norm condition number of the drawn basis.
    pub cond_bound: f64,
}

impl GenerationSpec {
    pub fn new(invariants: Vec<SummandInvariant>, seed: u64) -> Self {
        GenerationSpec {
            invariants,
            seed,
            cond_bound: 100.0,
        }
    }
}

/// Output of [`generate`]: the pair, the basis it was conjugated by, and the
/// normalized ground-truth invariants (sorted).
#[derive(Debug, Clone)]
pub struct GeneratedPair {
    pub pair: ComplexStructurePair,
    pub s: RealMatrix,
    pub s_inv: RealMatrix,
    pub invariants: Vec<SummandInvariant>,
}

/// Matrix product with a fixed summation order. Generated output must be
/// byte-identical across platforms, and BLAS-style blocked kernels pick their
/// summation order from runtime CPU features, so all products on the
/// generation path go through this triple loop instead.
fn mul_det(a: &RealMatrix, b: &RealMatrix) -> RealMatrix {
    let (m, kk, n) = (a.nrows(), a.ncols(), b.ncols());
    assert_eq!(kk, b.nrows());
    let mut out = RealMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let mut s = 0.0;
            for l in 0..kk {
                s += a[(i, l)] * b[(l, j)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// Orthogonal factor of a Householder QR with the R diagonal normalized
/// positive; plain loops, fully deterministic.
fn householder_q(m: &RealMatrix) -> RealMatrix {
    let n = m.nrows();
    let mut r = m.clone();
    let mut q = RealMatrix::identity(n, n);
    for k in 0..n {
        let mut norm2 = 0.0;
        for i in k..n {
            norm2 += r[(i, k)] * r[(i, k)];
        }
        let norm = norm2.sqrt();
        if norm < 1e-300 {
            continue;
        }
        let sign = if r[(k, k)] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = vec![0.0; n - k];
        for i in k..n {
            v[i - k] = r[(i, k)];
        }
        v[0] += sign * norm;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 < 1e-300 {
            continue;
        }
        // r <- H r, q <- q H with H = I - 2 v v^T / (v^T v) acting on rows k..
        for j in k..n {
            let mut dot = 0.0;
            for i in k..n {
                dot += v[i - k] * r[(i, j)];
            }
            let c = 2.0 * dot / vnorm2;
            for i in k..n {
                r[(i, j)] -= c * v[i - k];
            }
        }
        for i in 0..n {
            let mut dot = 0.0;
            for j in k..n {
                dot += q[(i, j)] * v[j - k];
            }
            let c = 2.0 * dot / vnorm2;
            for j in k..n {
                q[(i, j)] -= c * v[j - k];
            }
        }
    }
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            for i in 0..n {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    q
}

/// Draws a pair of complex structures with the prescribed invariants.
///
/// The construction is J_i = S J_ic S^-1 where (J_1c, J_2c) are the canonical
/// structures for the (normalized, sorted) invariants and S = Q1 diag(sigma) Q2^T
/// with Q1, Q2 orthogonal factors of seeded random matrices and sigma
/// log-spaced. The condition number of S is exactly sigma_max/sigma_min, which
/// is drawn in [1, 1 + 0.8 (cond_bound - 1)], so a draw essentially never
/// violates the bound; the retry loop exists for the degenerate corner and
/// gives up after 64 attempts.
///
/// The entire path uses a fixed-order splitmix64 stream and fixed-order
/// arithmetic: the same spec yields byte-identical matrices on any platform.
pub fn generate(spec: &GenerationSpec) -> Result<GeneratedPair> {
    if spec.invariants.is_empty() {
        return Err(Error::InvalidSpec("empty invariant list".into()));
    }
    if !(spec.cond_bound > 1.0) {
        return Err(Error::CondBoundUnreachable {
            cond_bound: spec.cond_bound,
            attempts: 0,
        });
    }
    let mut invariants: Vec<SummandInvariant> = spec
        .invariants
        .iter()
        .map(normalize_invariant)
        .collect::<Result<_>>()?;
    invariants.sort_by(cmp_invariants);
    let (j1_c, j2_c) = assemble_structures(&invariants)?;
    let d = j1_c.nrows();
    let mut rng = SplitMix64::new(spec.seed);
    let attempts = 64;
    for _attempt in 0..attempts {
        let kappa = 1.0 + rng.next_f64() * 0.8 * (spec.cond_bound - 1.0);
        if kappa > spec.cond_bound {
            continue;
        }
        let mut q1_seed = RealMatrix::zeros(d, d);
        let mut q2_seed = RealMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                q1_seed[(i, j)] = rng.next_unit();
            }
        }
        for i in 0..d {
            for j in 0..d {
                q2_seed[(i, j)] = rng.next_unit();
            }
        }
        let q1 = householder_q(&q1_seed);
        let q2 = householder_q(&q2_seed);
        let mut sigma = vec![1.0; d];
        if d > 1 {
            let log_k = kappa.ln();
            for (i, s) in sigma.iter_mut().enumerate() {
                *s = (log_k * (i as f64 / (d - 1) as f64 - 0.5)).exp();
            }
        }
        let mut sq2t = q2.transpose();
        for (i, &s) in sigma.iter().enumerate() {
            for j in 0..d {
                sq2t[(i, j)] *= s;
            }
        }
        let s_mat = mul_det(&q1, &sq2t);
        let mut inv_q1t = q1.transpose();
        for (i, &s) in sigma.iter().enumerate() {
            for j in 0..d {
                inv_q1t[(i, j)] /= s;
            }
        }
        let s_inv = mul_det(&q2, &inv_q1t);
        let j1 = mul_det(&mul_det(&s_mat, &j1_c), &s_inv);
        let j2 = mul_det(&mul_det(&s_mat, &j2_c), &s_inv);
        let pair = validate_pair(j1, j2, &TolerancePolicy::default()).map_err(|e| {
            Error::NumericalFailure(format!("generated pair failed validation: {e}"))
        })?;
        return Ok(GeneratedPair {
            pair,
            s: s_mat,
            s_inv,
            invariants,
        });
    }
    Err(Error::CondBoundUnreachable {
        cond_bound: spec.cond_bound,
        attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn model_for_distinct_real_root() {
        let m = canonical_model(&SummandInvariant::new(FactorKind::Real { r: 2.0 }, 1)).unwrap();
        let expect = RealMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        assert_eq!(m.a, expect);
        assert_eq!(
            m.b,
            RealMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
        );
    }

    #[test]
    fn model_inverse_block_closed_form() {
        let m = canonical_model(&SummandInvariant::new(FactorKind::Real { r: 2.0 }, 2)).unwrap();
        let a_inv = RealMatrix::from_row_slice(2, 2, &[0.5, -0.25, 0.0, 0.5]);
        assert_eq!(m.a_block_inv, a_inv);
        // and it really is the inverse
        let prod = &m.a_block * &m.a_block_inv;
        assert_relative_eq!(
            (prod - RealMatrix::identity(2, 2)).norm(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn complex_model_block_layout() {
        let m = canonical_model(&SummandInvariant::new(
            FactorKind::Complex { e: 0.6, f: 0.8 },
            1,
        ))
        .unwrap();
        let expect = RealMatrix::from_row_slice(
            4,
            4,
            &[
                0.6, -0.8, 0.0, 0.0, //
                0.8, 0.6, 0.0, 0.0, //
                0.0, 0.0, 0.6, 0.8, //
                0.0, 0.0, -0.8, 0.6,
            ],
        );
        assert_relative_eq!((&m.a - expect).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn complex_inverse_block_closed_form() {
        let inv = SummandInvariant::new(FactorKind::Complex { e: 1.0, f: 2.0 }, 3);
        let m = canonical_model(&inv).unwrap();
        let prod = &m.a_block * &m.a_block_inv;
        assert_relative_eq!(
            (prod - RealMatrix::identity(6, 6)).norm(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn b_squares_to_minus_identity_exactly() {
        for inv in [
            SummandInvariant::new(FactorKind::Real { r: -1.0 }, 3),
            SummandInvariant::new(FactorKind::Complex { e: 0.6, f: 0.8 }, 2),
        ] {
            let m = canonical_model(&inv).unwrap();
            let d = m.dim();
            assert_eq!(&m.b * &m.b, -RealMatrix::identity(d, d));
        }
    }

    #[test]
    fn structure_identities() {
        let inv = SummandInvariant::new(FactorKind::Real { r: 2.0 }, 2);
        let m = canonical_model(&inv).unwrap();
        let j1 = m.j1();
        let j2 = m.j2();
        let d = m.dim();
        assert!((&j1 * &j1 + RealMatrix::identity(d, d)).norm() < 1e-15);
        assert!((&j1 * &j2 - &m.a).norm() < 1e-15);
        // b a b^-1 = a^-1 with b^-1 = -b
        let conj = -(&m.b * &m.a * &m.b);
        let mut a_inv = RealMatrix::zeros(d, d);
        a_inv
            .view_mut((0, 0), (d / 2, d / 2))
            .copy_from(&m.a_block_inv);
        a_inv
            .view_mut((d / 2, d / 2), (d / 2, d / 2))
            .copy_from(&m.a_block);
        assert!((conj - a_inv).norm() < 1e-15);
    }

    #[test]
    fn normalize_moves_root_out_and_orients() {
        let inv = SummandInvariant::new(FactorKind::Complex { e: 0.0, f: 0.5 }, 2);
        let n = normalize_invariant(&inv).unwrap();
        match n.kind {
            FactorKind::Complex { e, f } => {
                assert_relative_eq!(e, 0.0, epsilon = 1e-15);
                assert_relative_eq!(f, 2.0, epsilon = 1e-15);
            }
            _ => panic!(),
        }
        assert_eq!(n.n, 2);
        // idempotent
        let again = normalize_invariant(&n).unwrap();
        assert_eq!(again, n);

        let neg = SummandInvariant::new(FactorKind::Complex { e: 2.0, f: -1.0 }, 1);
        let n = normalize_invariant(&neg).unwrap();
        assert!(matches!(n.kind, FactorKind::Complex { f, .. } if f > 0.0));
    }

    #[test]
    fn normalize_snaps_near_unit_roots() {
        let inv = SummandInvariant::new(
            FactorKind::Real {
                r: -(1.0 + 1e-12),
            },
            1,
        );
        let n = normalize_invariant(&inv).unwrap();
        assert_eq!(n.kind, FactorKind::Real { r: -1.0 });
    }

    #[test]
    fn irreducible_iff_exponent_one() {
        assert!(is_irreducible(&SummandInvariant::new(
            FactorKind::Real { r: 2.0 },
            1
        )));
        assert!(!is_irreducible(&SummandInvariant::new(
            FactorKind::Real { r: 2.0 },
            2
        )));
    }

    #[test]
    fn quaternion_j_for_unit_root() {
        let m = canonical_model(&SummandInvariant::new(
            FactorKind::Complex { e: 0.6, f: 0.8 },
            1,
        ))
        .unwrap();
        let j = quaternion_j(&m).unwrap();
        let expect = RealMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, -1.0, 0.0, 0.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, -1.0, 0.0,
            ],
        );
        assert_relative_eq!((&j - expect).norm(), 0.0, epsilon = 1e-14);
        let d = 4;
        assert!((&j * &j + RealMatrix::identity(d, d)).norm() < 1e-14);
        assert!((&j * &m.b + &m.b * &j).norm() < 1e-14);
    }

    #[test]
    fn quaternion_j_for_root_i_is_a_itself() {
        let m = canonical_model(&SummandInvariant::new(
            FactorKind::Complex { e: 0.0, f: 1.0 },
            1,
        ))
        .unwrap();
        let j = quaternion_j(&m).unwrap();
        assert_relative_eq!((&j - &m.a).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn quaternion_j_rejects_other_cases() {
        let real = canonical_model(&SummandInvariant::new(FactorKind::Real { r: 1.0 }, 1)).unwrap();
        assert!(matches!(
            quaternion_j(&real),
            Err(Error::NotQuaternionCase)
        ));
        let off_circle = canonical_model(&SummandInvariant::new(
            FactorKind::Complex { e: 1.0, f: 2.0 },
            1,
        ))
        .unwrap();
        assert!(matches!(
            quaternion_j(&off_circle),
            Err(Error::NotQuaternionCase)
        ));
        let higher = canonical_model(&SummandInvariant::new(
            FactorKind::Complex { e: 0.6, f: 0.8 },
            2,
        ))
        .unwrap();
        assert!(matches!(
            quaternion_j(&higher),
            Err(Error::NotQuaternionCase)
        ));
    }

    #[test]
    fn generate_is_deterministic_and_valid() {
        let spec = GenerationSpec::new(
            vec![
                SummandInvariant::new(FactorKind::Real { r: 2.0 }, 2),
                SummandInvariant::new(FactorKind::Complex { e: 0.6, f: 0.8 }, 1),
            ],
            12345,
        );
        let g1 = generate(&spec).unwrap();
        let g2 = generate(&spec).unwrap();
        assert_eq!(g1.pair.j1(), g2.pair.j1());
        assert_eq!(g1.pair.j2(), g2.pair.j2());
        assert_eq!(g1.pair.dim(), 8);
        let cond = linalg::cond_spectral(&g1.s);
        assert!(cond <= 100.0, "cond = {cond}");
        // S^-1 really inverts S.
        let d = 8;
        assert!((&g1.s * &g1.s_inv - RealMatrix::identity(d, d)).norm() < 1e-10);
    }

    #[test]
    fn generate_rejects_bad_specs() {
        assert!(matches!(
            generate(&GenerationSpec::new(vec![], 1)),
            Err(Error::InvalidSpec(_))
        ));
        let mut spec = GenerationSpec::new(
            vec![SummandInvariant::new(FactorKind::Real { r: 2.0 }, 1)],
            1,
        );
        spec.cond_bound = 1.0;
        assert!(matches!(
            generate(&spec),
            Err(Error::CondBoundUnreachable { .. })
        ));
        let zero = GenerationSpec::new(
            vec![SummandInvariant::new(FactorKind::Real { r: 0.0 }, 1)],
            1,
        );
        assert!(matches!(generate(&zero), Err(Error::ZeroRoot)));
    }

    #[test]
    fn generated_char_poly_matches_canonical() {
        let spec = GenerationSpec::new(
            vec![SummandInvariant::new(FactorKind::Real { r: 3.0 }, 1)],
            777,
        );
        let g = generate(&spec).unwrap();
        let gen = crate::pair::generators(&g.pair);
        let p = crate::spectral::char_poly(gen.a()).unwrap();
        // (t - 3)(t - 1/3) = t^2 - (10/3) t + 1
        assert_relative_eq!(p.coeffs()[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(p.coeffs()[1], -10.0 / 3.0, epsilon = 1e-9);
    }
}
