//! Dense real linear algebra with one explicit tolerance policy.
//!
//! Every rank decision in the library flows through [`TolerancePolicy`] so that
//! behaviour near numerical boundaries is tunable in exactly one place. Matrices
//! are plain `nalgebra` dynamic matrices of `f64`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub type RealMatrix = DMatrix<f64>;
pub type RealVector = DVector<f64>;

/// Relative tolerances governing rank decisions, root clustering and residual
/// acceptance. All three must lie strictly inside (0, 1).
///
/// * `rank_rel` — singular values below `rank_rel * max(rows, cols) * sigma_max`
///   are treated as zero.
/// * `root_rel` — eigenvalues within `root_rel * max(1, |lambda|)` of each other
///   are treated as the same root.
/// * `residual_rel` — acceptance bound for relative residuals of matrix
///   identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolerancePolicy {
    pub rank_rel: f64,
    pub root_rel: f64,
    pub residual_rel: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            rank_rel: 1e-9,
            root_rel: 1e-6,
            residual_rel: 1e-8,
        }
    }
}

impl TolerancePolicy {
    pub fn new(rank_rel: f64, root_rel: f64, residual_rel: f64) -> Result<Self> {
        for (name, v) in [
            ("rank_rel", rank_rel),
            ("root_rel", root_rel),
            ("residual_rel", residual_rel),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidTolerance(format!("{name} = {v}")));
            }
        }
        Ok(TolerancePolicy {
            rank_rel,
            root_rel,
            residual_rel,
        })
    }

    /// Absolute singular-value cutoff for a matrix of the given shape and
    /// largest singular value.
    pub fn rank_threshold(&self, rows: usize, cols: usize, sigma_max: f64) -> f64 {
        self.rank_rel * rows.max(cols) as f64 * sigma_max
    }
}

pub(crate) fn require_finite(m: &RealMatrix, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidMatrix(what.to_string()))
    }
}

type Svd = nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>;

fn deterministic_orthogonal(n: usize, rng: &mut SplitMix64) -> RealMatrix {
    let g = RealMatrix::from_fn(n, n, |_, _| rng.next_unit());
    nalgebra::QR::new(g).q()
}

/// True when the factorization actually reproduces `m` and the singular
/// values are finite, nonnegative, and sorted.
fn svd_consistent(m: &RealMatrix, svd: &Svd) -> bool {
    let sigma = &svd.singular_values;
    for i in 0..sigma.len() {
        if !sigma[i].is_finite() || sigma[i] < 0.0 {
            return false;
        }
        if i > 0 && sigma[i] > sigma[i - 1] * (1.0 + 1e-12) {
            return false;
        }
    }
    let (Some(u), Some(v_t)) = (svd.u.as_ref(), svd.v_t.as_ref()) else {
        return false;
    };
    let recon = u * RealMatrix::from_diagonal(sigma) * v_t;
    (recon - m).norm() <= 1e-10 * (1.0 + m.norm())
}

/// The Golub-Kahan sweep underneath `nalgebra::SVD` silently breaks down on a
/// sliver of rank-deficient inputs: it can report a singular value above the
/// Frobenius norm together with factors whose reconstruction error is of
/// order one. Every decomposition is therefore validated against the input,
/// and a failing one is retried under a deterministic orthogonal change of
/// coordinates, which moves the bidiagonalization off the degenerate pattern;
/// the factors are rotated back afterwards, so the result is an SVD of `m`
/// itself.
pub(crate) fn svd_of(m: &RealMatrix) -> Result<Svd> {
    let svd = nalgebra::SVD::try_new(m.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    if m.is_empty() || svd_consistent(m, &svd) {
        return Ok(svd);
    }
    let mut rng = SplitMix64::new(0x0DD5_0F05_D5EE_D5D5);
    for _ in 0..4 {
        let q1 = deterministic_orthogonal(m.nrows(), &mut rng);
        let q2 = deterministic_orthogonal(m.ncols(), &mut rng);
        let rotated = q1.transpose() * m * &q2;
        let Some(mut svd) = nalgebra::SVD::try_new(rotated, true, true, f64::EPSILON, 0) else {
            continue;
        };
        svd.u = svd.u.map(|u| &q1 * u);
        svd.v_t = svd.v_t.map(|v_t| v_t * q2.transpose());
        if svd_consistent(m, &svd) {
            return Ok(svd);
        }
    }
    Err(Error::NumericalFailure(
        "singular value decomposition failed validation".into(),
    ))
}

/// SVD of `m` padded with zero rows until square. Padding leaves the singular
/// values and right singular vectors unchanged but makes `v_t` a full
/// `cols x cols` factor even for wide input, which the nullspace extraction
/// needs.
fn svd_full_vt(m: &RealMatrix) -> Result<nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    if m.nrows() >= m.ncols() {
        svd_of(m)
    } else {
        let mut padded = RealMatrix::zeros(m.ncols(), m.ncols());
        padded.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
        svd_of(&padded)
    }
}

/// Numerical rank and an orthonormal basis of the (right) nullspace.
///
/// The basis is returned as the columns of a `cols x nullity` matrix;
/// `rank + nullity == cols` always holds.
pub fn nullspace(m: &RealMatrix, tol: &TolerancePolicy) -> Result<(usize, RealMatrix)> {
    require_finite(m, "nullspace input")?;
    let cols = m.ncols();
    if cols == 0 {
        return Ok((0, RealMatrix::zeros(0, 0)));
    }
    let svd = svd_full_vt(m)?;
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0_f64, f64::max);
    let thresh = tol.rank_threshold(m.nrows(), cols, sigma_max);
    let rank = sigma.iter().filter(|&&s| s > thresh).count();
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let nullity = cols - rank;
    let mut basis = RealMatrix::zeros(cols, nullity);
    // Singular values are sorted in decreasing order, so the kernel directions
    // are the trailing rows of v_t.
    for (j, row) in (rank..cols).enumerate() {
        for i in 0..cols {
            basis[(i, j)] = v_t[(row, i)];
        }
    }
    Ok((rank, basis))
}

pub fn rank(m: &RealMatrix, tol: &TolerancePolicy) -> Result<usize> {
    Ok(nullspace(m, tol)?.0)
}

/// Inverse via SVD. Returns [`Error::SingularMatrix`] when the smallest
/// singular value falls below the rank threshold.
pub fn inverse(m: &RealMatrix, tol: &TolerancePolicy) -> Result<RealMatrix> {
    require_finite(m, "inverse input")?;
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let svd = svd_of(m)?;
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0_f64, f64::max);
    let thresh = tol.rank_threshold(m.nrows(), m.ncols(), sigma_max);
    if sigma.iter().any(|&s| s <= thresh) {
        return Err(Error::SingularMatrix);
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    // inv = V * diag(1/sigma) * U^T
    let mut scaled_ut = u.transpose();
    for (i, &s) in sigma.iter().enumerate() {
        for j in 0..scaled_ut.ncols() {
            scaled_ut[(i, j)] /= s;
        }
    }
    Ok(v_t.transpose() * scaled_ut)
}

/// Minimal-norm solution of `m x = y` in the least-squares sense, together
/// with the achieved residual `||m x - y||`.
pub fn least_norm_solve(
    m: &RealMatrix,
    y: &RealVector,
    tol: &TolerancePolicy,
) -> Result<(RealVector, f64)> {
    require_finite(m, "least_norm_solve matrix")?;
    if y.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidMatrix("least_norm_solve rhs".into()));
    }
    if y.len() != m.nrows() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: y.len(),
        });
    }
    let svd = svd_of(m)?;
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0_f64, f64::max);
    let thresh = tol.rank_threshold(m.nrows(), m.ncols(), sigma_max);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut x = RealVector::zeros(m.ncols());
    for (k, &s) in sigma.iter().enumerate() {
        if s > thresh {
            let coeff = u.column(k).dot(y) / s;
            for i in 0..m.ncols() {
                x[i] += coeff * v_t[(k, i)];
            }
        }
    }
    let residual = (m * &x - y).norm();
    Ok((x, residual))
}

/// Largest singular value. Falls back to the Frobenius norm (an upper bound
/// within sqrt(rank)) in the unreachable case that no validated
/// decomposition exists; this is only ever a threshold anchor.
pub fn spectral_norm(m: &RealMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    match svd_of(m) {
        Ok(svd) => svd.singular_values.iter().cloned().fold(0.0_f64, f64::max),
        Err(_) => m.norm(),
    }
}

/// Smallest singular value.
pub(crate) fn sigma_min(m: &RealMatrix) -> Result<f64> {
    let svd = svd_of(m)?;
    Ok(svd
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min))
}

/// 2-norm condition number; `f64::INFINITY` when the matrix is singular to
/// working precision.
pub fn cond_spectral(m: &RealMatrix) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let Ok(svd) = svd_of(m) else {
        return f64::INFINITY;
    };
    let sv = &svd.singular_values;
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// The `q` right singular vectors belonging to the smallest singular values,
/// as columns, orthonormal.
pub(crate) fn smallest_right_singular_vectors(m: &RealMatrix, q: usize) -> Result<RealMatrix> {
    let cols = m.ncols();
    assert!(q <= cols);
    let svd = svd_full_vt(m)?;
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut basis = RealMatrix::zeros(cols, q);
    for (j, row) in ((cols - q)..cols).enumerate() {
        for i in 0..cols {
            basis[(i, j)] = v_t[(row, i)];
        }
    }
    Ok(basis)
}

/// Orthonormal basis of the column span, dropping directions below the rank
/// threshold.
pub(crate) fn orthonormal_columns(m: &RealMatrix, tol: &TolerancePolicy) -> Result<RealMatrix> {
    let svd = svd_of(m)?;
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0_f64, f64::max);
    let thresh = tol.rank_threshold(m.nrows(), m.ncols(), sigma_max);
    let r = sigma.iter().filter(|&&s| s > thresh).count();
    let u = svd.u.as_ref().expect("u requested");
    Ok(u.columns(0, r).into_owned())
}

/// Given orthonormal `space` whose span contains the span of orthonormal
/// `prev`, returns an orthonormal basis of the orthogonal complement of `prev`
/// inside `space`. The expected dimension is `space.ncols() - prev.ncols()`;
/// anything else means the containment assumption broke down.
pub(crate) fn orthonormal_complement_in(
    space: &RealMatrix,
    prev: &RealMatrix,
) -> Result<RealMatrix> {
    let expected = space
        .ncols()
        .checked_sub(prev.ncols())
        .ok_or_else(|| Error::AssertionFailure("complement larger than space".into()))?;
    if prev.ncols() == 0 {
        return Ok(space.clone());
    }
    let projected = space - prev * (prev.transpose() * space);
    let svd = svd_of(&projected)?;
    let sigma = &svd.singular_values;
    // Nested orthonormal frames give singular values that are all ~1 or ~0;
    // 0.5 separates them with a wide margin.
    let r = sigma.iter().filter(|&&s| s > 0.5).count();
    if r != expected {
        return Err(Error::AssertionFailure(format!(
            "complement rank {r}, expected {expected}"
        )));
    }
    let u = svd.u.as_ref().expect("u requested");
    Ok(u.columns(0, r).into_owned())
}

pub(crate) fn hstack(blocks: &[RealMatrix]) -> RealMatrix {
    assert!(!blocks.is_empty());
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = RealMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows);
        out.view_mut((0, at), (rows, b.ncols())).copy_from(b);
        at += b.ncols();
    }
    out
}

pub(crate) fn block_diag(blocks: &[RealMatrix]) -> RealMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = RealMatrix::zeros(n, n);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), b.ncols());
        out.view_mut((at, at), (b.nrows(), b.ncols())).copy_from(b);
        at += b.nrows();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn policy_rejects_out_of_range() {
        assert!(TolerancePolicy::new(0.0, 1e-6, 1e-8).is_err());
        assert!(TolerancePolicy::new(1e-9, 1.0, 1e-8).is_err());
        assert!(TolerancePolicy::new(1e-9, 1e-6, -0.5).is_err());
        assert!(TolerancePolicy::new(1e-9, 1e-6, 1e-8).is_ok());
    }

    #[test]
    fn nullspace_of_rank_one_matrix() {
        let m = RealMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (rank, basis) = nullspace(&m, &tol()).unwrap();
        assert_eq!(rank, 1);
        assert_eq!(basis.ncols(), 1);
        let s = 1.0 / 2.0_f64.sqrt();
        // basis is (1, -1)/sqrt(2) up to sign
        let v = basis.column(0);
        let matches = (v[0] - s).abs() < 1e-12 && (v[1] + s).abs() < 1e-12
            || (v[0] + s).abs() < 1e-12 && (v[1] - s).abs() < 1e-12;
        assert!(matches, "basis column was {v:?}");
    }

    #[test]
    fn nullspace_of_wide_matrix() {
        let m = RealMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
        let (rank, basis) = nullspace(&m, &tol()).unwrap();
        assert_eq!(rank, 1);
        assert_eq!(basis.ncols(), 2);
        assert_relative_eq!((&m * &basis).norm(), 0.0, epsilon = 1e-12);
        let gram = basis.transpose() * &basis;
        assert_relative_eq!(
            (gram - RealMatrix::identity(2, 2)).norm(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn inverse_of_rotation_is_transpose() {
        let (c, s) = (0.3_f64.cos(), 0.3_f64.sin());
        let m = RealMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let inv = inverse(&m, &tol()).unwrap();
        assert_relative_eq!((inv - m.transpose()).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn inverse_rejects_singular() {
        let m = RealMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(inverse(&m, &tol()), Err(Error::SingularMatrix)));
    }

    #[test]
    fn inverse_rejects_nonsquare_and_nonfinite() {
        let m = RealMatrix::zeros(2, 3);
        assert!(matches!(
            inverse(&m, &tol()),
            Err(Error::DimensionMismatch { .. })
        ));
        let m = RealMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(matches!(inverse(&m, &tol()), Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn least_norm_on_overdetermined_column() {
        let m = RealMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let y = RealVector::from_row_slice(&[1.0, 3.0]);
        let (x, res) = least_norm_solve(&m, &y, &tol()).unwrap();
        assert_relative_eq!(x[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(res, 2.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn least_norm_picks_minimal_solution() {
        // x + y = 2 has solutions (2,0), (0,2), ...; minimal norm is (1,1).
        let m = RealMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let y = RealVector::from_row_slice(&[2.0]);
        let (x, res) = least_norm_solve(&m, &y, &tol()).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(res, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn double_inverse_roundtrip() {
        let m = RealMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.5, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let round = inverse(&inverse(&m, &tol()).unwrap(), &tol()).unwrap();
        assert!((round - &m).norm() / m.norm() < 1e-8);
    }

    #[test]
    fn complement_of_nested_frames() {
        let space = RealMatrix::identity(4, 4);
        let prev = RealMatrix::identity(4, 4).columns(0, 2).into_owned();
        let comp = orthonormal_complement_in(&space, &prev).unwrap();
        assert_eq!(comp.ncols(), 2);
        assert_relative_eq!((prev.transpose() * &comp).norm(), 0.0, epsilon = 1e-12);
    }
}
