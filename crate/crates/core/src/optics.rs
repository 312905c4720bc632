//! Complex 2x2 linear algebra for two-path optical fields.
//!
//! Amplitudes carry square-root-of-intensity units, so `|amplitude|^2` is a
//! power. Global phases are never normalized away: two matrices that differ by
//! `e^{i theta}` are different matrices here, even though every intensity they
//! produce is identical.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Entrywise tolerance used for unitarity and matrix-equality checks.
///
/// Sized for double-precision products of up to ~20 unitary factors.
pub const UNITARY_TOL: f64 = 1e-12;

pub type ComplexScalar = Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
#[cfg(test)]
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which interferometer path a phase shift acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Upper,
    Lower,
}

impl Arm {
    pub fn other(self) -> Arm {
        match self {
            Arm::Upper => Arm::Lower,
            Arm::Lower => Arm::Upper,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Upper => "upper",
            Arm::Lower => "lower",
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Field amplitudes on the two paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPair {
    pub upper: ComplexScalar,
    pub lower: ComplexScalar,
}

impl FieldPair {
    pub fn new(upper: ComplexScalar, lower: ComplexScalar) -> Self {
        Self { upper, lower }
    }

    /// The input convention `(E_0, 0)` for a source of intensity `i0`.
    pub fn from_source(i0: f64) -> Self {
        Self {
            upper: Complex64::new(i0.sqrt(), 0.0),
            lower: ZERO,
        }
    }

    pub fn total_intensity(&self) -> f64 {
        self.upper.norm_sqr() + self.lower.norm_sqr()
    }
}

/// Power on each path, `(|upper|^2, |lower|^2)`.
pub fn intensities(field: &FieldPair) -> (f64, f64) {
    (field.upper.norm_sqr(), field.lower.norm_sqr())
}

/// A 2x2 complex matrix acting on a [`FieldPair`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub m00: ComplexScalar,
    pub m01: ComplexScalar,
    pub m10: ComplexScalar,
    pub m11: ComplexScalar,
}

impl TransferMatrix {
    pub const IDENTITY: TransferMatrix = TransferMatrix {
        m00: ONE,
        m01: ZERO,
        m10: ZERO,
        m11: ONE,
    };

    pub fn new(
        m00: ComplexScalar,
        m01: ComplexScalar,
        m10: ComplexScalar,
        m11: ComplexScalar,
    ) -> Self {
        Self { m00, m01, m10, m11 }
    }

    pub fn diagonal(d0: ComplexScalar, d1: ComplexScalar) -> Self {
        Self::new(d0, ZERO, ZERO, d1)
    }

    pub fn entries(&self) -> [[ComplexScalar; 2]; 2] {
        [[self.m00, self.m01], [self.m10, self.m11]]
    }

    pub fn adjoint(&self) -> Self {
        Self::new(
            self.m00.conj(),
            self.m10.conj(),
            self.m01.conj(),
            self.m11.conj(),
        )
    }

    pub fn determinant(&self) -> ComplexScalar {
        self.m00 * self.m11 - self.m01 * self.m10
    }

    pub fn scale(&self, factor: ComplexScalar) -> Self {
        Self::new(
            self.m00 * factor,
            self.m01 * factor,
            self.m10 * factor,
            self.m11 * factor,
        )
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &TransferMatrix) -> f64 {
        let a = self.entries();
        let b = other.entries();
        let mut worst = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((a[r][c] - b[r][c]).norm());
            }
        }
        worst
    }

    /// Entrywise distance after removing the best global phase between the
    /// two matrices.
    pub fn max_abs_diff_up_to_phase(&self, other: &TransferMatrix) -> f64 {
        // Align on the largest entry of `other`.
        let a = self.entries();
        let b = other.entries();
        let (mut br, mut bc) = (0, 0);
        for r in 0..2 {
            for c in 0..2 {
                if b[r][c].norm() > b[br][bc].norm() {
                    br = r;
                    bc = c;
                }
            }
        }
        if a[br][bc].norm() == 0.0 {
            return self.max_abs_diff(other);
        }
        let rel = b[br][bc] / a[br][bc];
        let phase = rel / rel.norm();
        self.scale(phase).max_abs_diff(other)
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        TransferMatrix::new(
            self.m00 * rhs.m00 + self.m01 * rhs.m10,
            self.m00 * rhs.m01 + self.m01 * rhs.m11,
            self.m10 * rhs.m00 + self.m11 * rhs.m10,
            self.m10 * rhs.m01 + self.m11 * rhs.m11,
        )
    }
}

impl Mul<FieldPair> for TransferMatrix {
    type Output = FieldPair;

    fn mul(self, f: FieldPair) -> FieldPair {
        apply(&self, &f)
    }
}

/// The symmetric 50/50 coupler `(1/sqrt 2) [[1, i], [i, 1]]`.
pub fn beam_splitter() -> TransferMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    TransferMatrix::new(
        Complex64::new(s, 0.0),
        Complex64::new(0.0, s),
        Complex64::new(0.0, s),
        Complex64::new(s, 0.0),
    )
}

/// Diagonal phase shift `e^{i phase}` on `arm`, unity on the other path.
pub fn phase_element(arm: Arm, phase: f64) -> Result<TransferMatrix> {
    ensure_finite("phase", phase)?;
    let shifted = Complex64::from_polar(1.0, phase);
    Ok(match arm {
        Arm::Upper => TransferMatrix::diagonal(shifted, ONE),
        Arm::Lower => TransferMatrix::diagonal(ONE, shifted),
    })
}

/// A Mach-Zehnder interferometer: beam splitter, phase on `arm`, beam
/// splitter.
///
/// With the phase on the lower arm this is
/// `(1/2) [[1 - e^{i psi}, i(1 + e^{i psi})], [i(1 + e^{i psi}), -(1 - e^{i psi})]]`.
pub fn mzi(arm: Arm, phase: f64) -> Result<TransferMatrix> {
    let bs = beam_splitter();
    Ok(bs * phase_element(arm, phase)? * bs)
}

/// Multiplies the elements in physical order: `elements[0]` acts first, so it
/// ends up rightmost in the product.
pub fn compose(elements: &[TransferMatrix]) -> Result<TransferMatrix> {
    let (first, rest) = elements
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("cannot compose an empty element list".into()))?;
    Ok(rest.iter().fold(*first, |acc, m| *m * acc))
}

pub fn apply(m: &TransferMatrix, f: &FieldPair) -> FieldPair {
    FieldPair::new(
        m.m00 * f.upper + m.m01 * f.lower,
        m.m10 * f.upper + m.m11 * f.lower,
    )
}

/// True iff every entry of `M^dagger M - I` has modulus at most `tol`.
pub fn is_unitary(m: &TransferMatrix, tol: f64) -> bool {
    (m.adjoint() * *m).max_abs_diff(&TransferMatrix::IDENTITY) <= tol
}
