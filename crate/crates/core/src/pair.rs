//! Validated pairs of real complex structures and the generators they induce.
//!
//! A *complex structure* is a real matrix J with J^2 = -I. From a pair
//! (J1, J2) we form a = J1 J2 and b = J2, which satisfy b a b^-1 = a^-1 and
//! b^2 = -I; all structure theory downstream works with (a, b).

use crate::error::{Error, Result};
use crate::linalg::{self, RealMatrix, TolerancePolicy};

/// A pair of real matrices, each squaring to -I, on the same even-dimensional
/// space. Construct through [`validate_pair`].
#[derive(Debug, Clone)]
pub struct ComplexStructurePair {
    dim: usize,
    j1: RealMatrix,
    j2: RealMatrix,
}

impl ComplexStructurePair {
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn j1(&self) -> &RealMatrix {
        &self.j1
    }
    pub fn j2(&self) -> &RealMatrix {
        &self.j2
    }
}

/// Checks shapes, finiteness and the defining identities, then wraps the pair.
///
/// A matrix J is accepted as a complex structure when
/// `||J^2 + I||_F <= tol.residual_rel * (1 + ||J||_F^2)`.
pub fn validate_pair(
    j1: RealMatrix,
    j2: RealMatrix,
    tol: &TolerancePolicy,
) -> Result<ComplexStructurePair> {
    linalg::require_finite(&j1, "J1")?;
    linalg::require_finite(&j2, "J2")?;
    if j1.nrows() != j1.ncols() {
        return Err(Error::DimensionMismatch {
            expected: j1.nrows(),
            got: j1.ncols(),
        });
    }
    if j2.nrows() != j2.ncols() || j1.nrows() != j2.nrows() {
        return Err(Error::DimensionMismatch {
            expected: j1.nrows(),
            got: j2.nrows(),
        });
    }
    let dim = j1.nrows();
    if dim == 0 || dim % 2 != 0 {
        return Err(Error::OddDimension(dim));
    }
    for (which, j) in [(1u8, &j1), (2u8, &j2)] {
        let residual = (j * j + RealMatrix::identity(dim, dim)).norm();
        let bound = tol.residual_rel * (1.0 + j.norm_squared());
        if residual > bound {
            return Err(Error::NotAComplexStructure { which, residual });
        }
    }
    Ok(ComplexStructurePair { dim, j1, j2 })
}

/// The generators a = J1 J2, b = J2 together with a cached inverse of a.
#[derive(Debug, Clone)]
pub struct GeneratorPair {
    a: RealMatrix,
    b: RealMatrix,
    a_inv: RealMatrix,
}

impl GeneratorPair {
    pub fn a(&self) -> &RealMatrix {
        &self.a
    }
    pub fn b(&self) -> &RealMatrix {
        &self.b
    }
    pub fn a_inv(&self) -> &RealMatrix {
        &self.a_inv
    }
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Builds the generator pair from arbitrary a, b, inverting a numerically.
    pub fn from_ab(a: RealMatrix, b: RealMatrix, tol: &TolerancePolicy) -> Result<GeneratorPair> {
        if a.nrows() != b.nrows() || a.ncols() != b.ncols() || a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                got: b.nrows(),
            });
        }
        let a_inv = linalg::inverse(&a, tol)?;
        Ok(GeneratorPair { a, b, a_inv })
    }
}

/// Forms a = J1 J2 and b = J2.
///
/// The inverse of a is available in closed form: each complex structure
/// satisfies J^-1 = -J, so (J1 J2)^-1 = J2 J1. No numerical inversion happens
/// here, which is why this operation cannot fail: a is invertible by
/// construction (its determinant is the product of two nonzero determinants).
pub fn generators(pair: &ComplexStructurePair) -> GeneratorPair {
    let a = pair.j1() * pair.j2();
    let a_inv = pair.j2() * pair.j1();
    GeneratorPair {
        a,
        b: pair.j2().clone(),
        a_inv,
    }
}

/// Relative residuals of the defining relations, reported as-is (never an
/// error): how far b a b^-1 is from a^-1, and how far b^2 is from -I.
#[derive(Debug, Clone, Copy)]
pub struct RelationResiduals {
    /// ||b a b^-1 - a^-1||_F / ||a^-1||_F
    pub conjugation: f64,
    /// ||b^2 + I||_F / sqrt(dim)
    pub b_square: f64,
}

pub fn relation_residuals(g: &GeneratorPair) -> RelationResiduals {
    let dim = g.dim();
    // b^-1 = -b up to the b^2 = -I residual itself.
    let bab_inv = -(g.b() * g.a() * g.b());
    let conjugation = (&bab_inv - g.a_inv()).norm() / g.a_inv().norm();
    let b_square = (g.b() * g.b() + RealMatrix::identity(dim, dim)).norm() / (dim as f64).sqrt();
    RelationResiduals {
        conjugation,
        b_square,
    }
}
