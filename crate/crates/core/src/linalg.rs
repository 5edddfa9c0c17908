//! Dense complex linear algebra at fixed dimension.
//!
//! Two-qubit operators are 4x4 and single-qubit building blocks are 2x2, so
//! matrices are stack arrays with the dimension in the type. Basis order for
//! dimension 4 is `|00>, |01>, |10>, |11>` with qubit 1 the left tensor factor.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default Frobenius tolerance for matrix equality checks.
pub const MATRIX_TOL: f64 = 1e-10;

/// Hermiticity tolerance accepted by the eigensolver.
pub const HERMITIAN_TOL: f64 = 1e-10;

const JACOBI_OFF_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Square complex matrix of dimension `N`, stored row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix<const N: usize>(pub [[C64; N]; N]);

pub type Mat2 = Matrix<2>;
pub type Mat4 = Matrix<4>;

impl<const N: usize> Matrix<N> {
    pub const DIM: usize = N;

    pub fn zeros() -> Self {
        Self([[ZERO; N]; N])
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
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m.0[i][j] = c64(x, 0.0);
            }
        }
        m
    }

    pub fn diag(entries: [C64; N]) -> Self {
        let mut m = Self::zeros();
        for (k, &d) in entries.iter().enumerate() {
            m.0[k][k] = d;
        }
        m
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                out.0[j][i] = self.0[i][j].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(c64(s, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..N)
            .map(|j| (0..N).map(|i| self.0[i][j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `|m - m^dagger|_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        (*self - self.adjoint()).frobenius_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn trace(&self) -> C64 {
        (0..N).map(|k| self.0[k][k]).sum()
    }

    pub fn apply(&self, v: &[C64; N]) -> [C64; N] {
        let mut out = [ZERO; N];
        for (i, row) in self.0.iter().enumerate() {
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (*self - *other).frobenius_norm() <= tol
    }
}

impl<const N: usize> Default for Matrix<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Index<(usize, usize)> for Matrix<N> {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Matrix<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl<const N: usize> Add for Matrix<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<const N: usize> AddAssign for Matrix<N> {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a += b;
        }
    }
}

impl<const N: usize> Sub for Matrix<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().flatten().zip(rhs.0.iter().flatten()) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Neg for Matrix<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_re(-1.0)
    }
}

impl<const N: usize> Mul for Matrix<N> {
    type Output = Self;
    #[allow(clippy::op_ref)]
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl<const N: usize> Mul<&Matrix<N>> for &Matrix<N> {
    type Output = Matrix<N>;
    fn mul(self, rhs: &Matrix<N>) -> Matrix<N> {
        let mut out = Matrix::<N>::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..N {
                    out.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        out
    }
}

/// Kronecker product with `a` as the left (qubit 1) factor:
/// `(a ⊗ b)[2i+k][2j+l] = a[i][j] * b[k][l]`.
pub fn tensor_product(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out.0[2 * i + k][2 * j + l] = a.0[i][j] * b.0[k][l];
                }
            }
        }
    }
    out
}

pub fn pauli_x() -> Mat2 {
    Mat2::from_real([[0.0, 1.0], [1.0, 0.0]])
}

pub fn pauli_y() -> Mat2 {
    Matrix([[ZERO, -I], [I, ZERO]])
}

pub fn pauli_z() -> Mat2 {
    Mat2::from_real([[1.0, 0.0], [0.0, -1.0]])
}

pub fn hadamard() -> Mat2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Mat2::from_real([[h, h], [h, -h]])
}

/// Eigenvalues (ascending) and eigenvectors (columns, same order) of a
/// Hermitian matrix by cyclic complex Jacobi rotations.
pub fn hermitian_eigen<const N: usize>(m: &Matrix<N>) -> Result<([f64; N], Matrix<N>)> {
    let residual = m.hermiticity_residual();
    if residual.is_nan() || residual > HERMITIAN_TOL {
        return Err(Error::NotHermitian { residual });
    }
    // symmetrize so rounding in the input cannot stall the sweep
    let mut a = (*m + m.adjoint()).scale_re(0.5);
    let mut v = Matrix::<N>::identity();
    let target = JACOBI_OFF_TOL * m.frobenius_norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: [usize; N] = std::array::from_fn(|k| k);
    order.sort_by(|&x, &y| a.0[x][x].re.total_cmp(&a.0[y][y].re));
    let values = std::array::from_fn(|k| a.0[order[k]][order[k]].re);
    let mut vectors = Matrix::<N>::zeros();
    for (col, &src) in order.iter().enumerate() {
        for row in 0..N {
            vectors.0[row][col] = v.0[row][src];
        }
    }
    Ok((values, vectors))
}

fn off_diagonal_norm<const N: usize>(a: &Matrix<N>) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        for j in 0..N {
            if i != j {
                s += a.0[i][j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

// One rotation zeroing a[p][q]. The unitary is a phase fix on column q
// (making a[p][q] real) followed by the real symmetric Jacobi rotation.
fn jacobi_rotate<const N: usize>(a: &mut Matrix<N>, v: &mut Matrix<N>, p: usize, q: usize) {
    let apq = a.0[p][q];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r;
    let theta = (a.0[q][q].re - a.0[p][p].re) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let vpp = c64(c, 0.0);
    let vpq = c64(s, 0.0);
    let vqp = phase.conj() * (-s);
    let vqq = phase.conj() * c;

    // a <- a V
    for k in 0..N {
        let (x, y) = (a.0[k][p], a.0[k][q]);
        a.0[k][p] = x * vpp + y * vqp;
        a.0[k][q] = x * vpq + y * vqq;
    }
    // a <- V^dagger a
    for k in 0..N {
        let (x, y) = (a.0[p][k], a.0[q][k]);
        a.0[p][k] = vpp.conj() * x + vqp.conj() * y;
        a.0[q][k] = vpq.conj() * x + vqq.conj() * y;
    }
    a.0[p][q] = ZERO;
    a.0[q][p] = ZERO;
    a.0[p][p].im = 0.0;
    a.0[q][q].im = 0.0;

    for k in 0..N {
        let (x, y) = (v.0[k][p], v.0[k][q]);
        v.0[k][p] = x * vpp + y * vqp;
        v.0[k][q] = x * vpq + y * vqq;
    }
}

pub fn hermitian_eigenvalues<const N: usize>(m: &Matrix<N>) -> Result<[f64; N]> {
    hermitian_eigen(m).map(|(values, _)| values)
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn spectral_norm<const N: usize>(m: &Matrix<N>) -> Result<f64> {
    let values = hermitian_eigenvalues(m)?;
    Ok(values.iter().fold(0.0, |acc, x| acc.max(x.abs())))
}

/// Largest singular value of an arbitrary matrix, via the eigenvalues of
/// `m^dagger m`.
pub fn operator_norm<const N: usize>(m: &Matrix<N>) -> f64 {
    let gram = &m.adjoint() * m;
    let gram = (gram + gram.adjoint()).scale_re(0.5);
    let values = hermitian_eigenvalues(&gram).expect("Gram matrix is Hermitian by construction");
    values[N - 1].max(0.0).sqrt()
}

/// `exp(m)` by scaling and squaring around a Taylor kernel.
pub fn matrix_exponential<const N: usize>(m: &Matrix<N>) -> Matrix<N> {
    let norm = m.one_norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let x = m.scale_re(0.5f64.powi(squarings));

    let mut sum = Matrix::<N>::identity();
    let mut term = Matrix::<N>::identity();
    for k in 1..=40 {
        term = (term * x).scale_re(1.0 / k as f64);
        sum += term;
        if term.frobenius_norm() <= 1e-18 * sum.frobenius_norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// Length-4 amplitude vector over `|00>, |01>, |10>, |11>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateVector(pub [C64; 4]);

impl StateVector {
    pub fn basis(index: usize) -> Self {
        let mut amps = [ZERO; 4];
        amps[index] = ONE;
        Self(amps)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= 1e-12
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self(self.0.map(|z| z / n))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Mul<StateVector> for &Mat4 {
    type Output = StateVector;
    fn mul(self, rhs: StateVector) -> StateVector {
        StateVector(self.apply(&rhs.0))
    }
}
