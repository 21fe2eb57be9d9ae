//! Exact small-dimension state algebra.
//!
//! Everything here works on fixed 2x2 and 4x4 complex matrices. Two-qubit
//! operators are ordered path factor first, spin factor second, so the
//! computational basis of a [`PureState`] of dimension 4 is
//! `|up_p up⟩, |up_p down⟩, |down_p up⟩, |down_p down⟩`.
//!
//! Outcome bits follow the `0 -> +1`, `1 -> -1` eigenvalue convention.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for algebraic identities and normalization checks.
pub const TOL: f64 = 1e-12;

pub type Amplitude = Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense `N x N` complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix<const N: usize>(pub [[Complex64; N]; N]);

pub type Mat2 = Matrix<2>;
pub type Mat4 = Matrix<4>;

impl<const N: usize> Matrix<N> {
    pub fn zeros() -> Self {
        Matrix([[ZERO; N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for k in 0..N {
            m.0[k][k] = ONE;
        }
        m
    }

    pub fn from_real(rows: [[f64; N]; N]) -> Self {
        let mut m = Self::zeros();
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                m.0[r][c] = Complex64::new(*v, 0.0);
            }
        }
        m
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..N).map(|k| self.0[k][k]).sum()
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros();
        for r in 0..N {
            for c in 0..N {
                m.0[c][r] = self.0[r][c].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|v| *v *= s);
        m
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.dagger()) <= tol
    }

    /// `⟨v| self |v⟩`.
    pub fn sandwich(&self, v: &[Complex64]) -> Complex64 {
        debug_assert_eq!(v.len(), N);
        self.0
            .iter()
            .zip(v)
            .map(|(row, vr)| vr.conj() * row.iter().zip(v).map(|(m, vc)| m * vc).sum::<Complex64>())
            .sum()
    }
}

impl<const N: usize> Add for Matrix<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for r in 0..N {
            for c in 0..N {
                self.0[r][c] += rhs.0[r][c];
            }
        }
        self
    }
}

impl<const N: usize> Sub for Matrix<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for r in 0..N {
            for c in 0..N {
                self.0[r][c] -= rhs.0[r][c];
            }
        }
        self
    }
}

impl<const N: usize> Mul for Matrix<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for r in 0..N {
            for c in 0..N {
                m.0[r][c] = (0..N).map(|k| self.0[r][k] * rhs.0[k][c]).sum();
            }
        }
        m
    }
}

pub fn pauli_x() -> Mat2 {
    Matrix([[ZERO, ONE], [ONE, ZERO]])
}

pub fn pauli_y() -> Mat2 {
    Matrix([[ZERO, -I], [I, ZERO]])
}

pub fn pauli_z() -> Mat2 {
    Matrix([[ONE, ZERO], [ZERO, -ONE]])
}

/// A real direction in the Bloch ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for BlochVector {
    fn from(v: [f64; 3]) -> Self {
        BlochVector::new(v[0], v[1], v[2])
    }
}

impl From<BlochVector> for [f64; 3] {
    fn from(v: BlochVector) -> Self {
        [v.x, v.y, v.z]
    }
}

impl BlochVector {
    pub const X: BlochVector = BlochVector {
        x: 1.0,
        y: 0.0,
        z: 0.0,
    };
    pub const Y: BlochVector = BlochVector {
        x: 0.0,
        y: 1.0,
        z: 0.0,
    };
    pub const Z: BlochVector = BlochVector {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    /// Unit vector along `(x, y, z)`; `None` for the zero vector.
    pub fn normalized(x: f64, y: f64, z: f64) -> Option<Self> {
        let v = BlochVector::new(x, y, z);
        let n = v.norm();
        (n > 0.0 && n.is_finite()).then(|| v * (1.0 / n))
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= TOL
    }

    pub fn ensure_unit(&self) -> Result<()> {
        if self.is_unit() {
            Ok(())
        } else {
            Err(Error::NonUnitDirection { norm: self.norm() })
        }
    }

    /// Unit direction `(sin t cos p, sin t sin p, cos t)` for polar angle `t`.
    pub fn from_spherical(polar: f64, azimuth: f64) -> Self {
        BlochVector::new(
            polar.sin() * azimuth.cos(),
            polar.sin() * azimuth.sin(),
            polar.cos(),
        )
    }

    /// `x σx + y σy + z σz` without any norm check.
    pub fn dot_sigma(&self) -> Mat2 {
        let (x, y, z) = (self.x, self.y, self.z);
        Matrix([
            [Complex64::new(z, 0.0), Complex64::new(x, -y)],
            [Complex64::new(x, y), Complex64::new(-z, 0.0)],
        ])
    }
}

impl Add for BlochVector {
    type Output = BlochVector;
    fn add(self, o: BlochVector) -> BlochVector {
        BlochVector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Neg for BlochVector {
    type Output = BlochVector;
    fn neg(self) -> BlochVector {
        BlochVector::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for BlochVector {
    type Output = BlochVector;
    fn mul(self, s: f64) -> BlochVector {
        BlochVector::new(self.x * s, self.y * s, self.z * s)
    }
}

/// `(-1)^bit` as a float.
pub(crate) fn sign_of(bit: u8) -> f64 {
    if bit & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_outcome(outcome: u8) -> Result<()> {
    if outcome > 1 {
        Err(Error::InvalidOutcome(outcome))
    } else {
        Ok(())
    }
}

/// Normalized pure state of dimension 2 or 4.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Amplitude>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Amplitude>) -> Result<Self> {
        if amplitudes.len() != 2 && amplitudes.len() != 4 {
            return Err(Error::InvalidDimension(amplitudes.len()));
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(PureState { amplitudes })
    }

    /// `(|up_p down⟩ - |down_p up⟩)/√2`, the maximally entangled path-spin state.
    pub fn path_spin_singlet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState {
            amplitudes: vec![ZERO, Complex64::new(h, 0.0), Complex64::new(-h, 0.0), ZERO],
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amplitudes
    }

    /// `2 |α00 α11 - α01 α10|` for a two-qubit state.
    pub fn concurrence(&self) -> Result<f64> {
        if self.dim() != 4 {
            return Err(Error::InvalidDimension(self.dim()));
        }
        let a = &self.amplitudes;
        Ok(2.0 * (a[0] * a[3] - a[1] * a[2]).norm())
    }
}

/// Hermitian, unit-trace, positive 2x2 operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOperator(Mat2);

impl DensityOperator {
    pub fn new(m: Mat2) -> Result<Self> {
        let rho = DensityOperator(m);
        let bloch = rho.bloch_vector();
        if !m.is_hermitian(TOL) || (m.trace() - ONE).norm() > TOL || bloch.norm() > 1.0 + TOL {
            return Err(Error::NotNormalized {
                norm_sqr: m.trace().re,
            });
        }
        Ok(rho)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn bloch_vector(&self) -> BlochVector {
        let m = &self.0;
        BlochVector::new(
            2.0 * m.0[1][0].re,
            2.0 * m.0[1][0].im,
            (m.0[0][0] - m.0[1][1]).re,
        )
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// `Tr(ρ P)`.
    pub fn probability(&self, p: &Projector) -> f64 {
        (self.0 * p.matrix).trace().re
    }
}

/// Rank-1 projector onto the `outcome` eigenspace of `direction · σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projector {
    pub direction: BlochVector,
    pub outcome: u8,
    pub matrix: Mat2,
}

/// `n · σ` for a unit direction; eigenvalues are exactly ±1.
pub fn observable_from_bloch(n: &BlochVector) -> Result<Mat2> {
    n.ensure_unit()?;
    Ok(n.dot_sigma())
}

/// `(I + (-1)^outcome n·σ) / 2`.
pub fn projector(n: &BlochVector, outcome: u8) -> Result<Projector> {
    check_outcome(outcome)?;
    let obs = observable_from_bloch(n)?;
    let matrix = (Mat2::identity() + obs.scale(Complex64::new(sign_of(outcome), 0.0)))
        .scale(Complex64::new(0.5, 0.0));
    Ok(Projector {
        direction: *n,
        outcome,
        matrix,
    })
}

/// Kronecker product with `a` as the outer (path) factor.
pub fn tensor(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = Mat4::zeros();
    for ar in 0..2 {
        for ac in 0..2 {
            for br in 0..2 {
                for bc in 0..2 {
                    m.0[2 * ar + br][2 * ac + bc] = a.0[ar][ac] * b.0[br][bc];
                }
            }
        }
    }
    m
}

/// `⟨ψ| PA ⊗ PB |ψ⟩` for a two-qubit state.
pub fn joint_probability(state: &PureState, pa: &Projector, pb: &Projector) -> Result<f64> {
    if state.dim() != 4 {
        return Err(Error::InvalidDimension(state.dim()));
    }
    Ok(tensor(&pa.matrix, &pb.matrix)
        .sandwich(state.amplitudes())
        .re)
}

/// The four joint outcome probabilities, indexed `2 * a + b`.
pub fn joint_distribution(
    state: &PureState,
    path: &BlochVector,
    spin: &BlochVector,
) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for a in 0..2u8 {
        let pa = projector(path, a)?;
        for b in 0..2u8 {
            let pb = projector(spin, b)?;
            out[(2 * a + b) as usize] = joint_probability(state, &pa, &pb)?;
        }
    }
    Ok(out)
}

/// `⟨(nA·σ) ⊗ (nB·σ)⟩` as the signed sum of the four joint probabilities.
pub fn expectation_product(state: &PureState, na: &BlochVector, nb: &BlochVector) -> Result<f64> {
    let p = joint_distribution(state, na, nb)?;
    Ok(p[0] - p[1] - p[2] + p[3])
}

/// `(I + (-1)^x n·σ) / 2`, the state prepared for outcome bit `x` along `n`.
pub fn prepared_state(n: &BlochVector, x: u8) -> Result<DensityOperator> {
    let p = projector(n, x)?;
    Ok(DensityOperator(p.matrix))
}
