//! Small complex matrices and the index conventions the rest of the crate
//! leans on: vectorization of 2×2 matrices, the Kronecker product with the
//! double-index layout `c_{ik,jl} = a_{ij} b_{kl}`, the `Per` row exchange,
//! Hilbert-Schmidt inner products, and a cyclic Jacobi eigensolver for
//! Hermitian matrices.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Complex zero.
pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Complex one.
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
/// The imaginary unit.
pub const C_I: Complex64 = Complex64::new(0.0, 1.0);

/// Shorthand constructor for a complex number.
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Shorthand constructor for a real complex number.
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Hermiticity gate for the eigensolver, applied to ‖A − A†‖∞.
pub const HERMITICITY_TOL: f64 = 1e-10;

/// Off-diagonal sweep threshold of the Jacobi eigensolver, relative to the
/// largest entry of the input.
const JACOBI_OFF_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Errors from the linear-algebra layer.
#[derive(Debug, Error)]
pub enum AlgebraError {
    /// The operation requires a Hermitian input and the defect exceeds the
    /// tolerance.
    #[error("matrix is not Hermitian: max|A - A^dagger| = {defect:.3e} exceeds {tol:.1e}")]
    NotHermitian { defect: f64, tol: f64 },
    /// Two dynamically sized matrices do not share a dimension.
    #[error("dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },
}

macro_rules! complex_matrix {
    ($name:ident, $n:expr) => {
        /// Dense row-major complex matrix of fixed size.
        #[derive(Clone, Copy, Debug, PartialEq)]
        pub struct $name(pub [[Complex64; $n]; $n]);

        impl $name {
            /// Matrix dimension.
            pub const DIM: usize = $n;

            /// The zero matrix.
            pub fn zeros() -> Self {
                $name([[C_ZERO; $n]; $n])
            }

            /// The identity matrix.
            pub fn identity() -> Self {
                let mut m = Self::zeros();
                for i in 0..$n {
                    m.0[i][i] = C_ONE;
                }
                m
            }

            /// Builds a matrix entry by entry from `f(row, col)`.
            pub fn from_fn(mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
                let mut m = Self::zeros();
                for i in 0..$n {
                    for j in 0..$n {
                        m.0[i][j] = f(i, j);
                    }
                }
                m
            }

            /// Transpose.
            pub fn transpose(&self) -> Self {
                Self::from_fn(|i, j| self.0[j][i])
            }

            /// Entrywise complex conjugate.
            pub fn conj(&self) -> Self {
                Self::from_fn(|i, j| self.0[i][j].conj())
            }

            /// Conjugate transpose.
            pub fn dagger(&self) -> Self {
                Self::from_fn(|i, j| self.0[j][i].conj())
            }

            /// Sum of the diagonal.
            pub fn trace(&self) -> Complex64 {
                (0..$n).map(|i| self.0[i][i]).sum()
            }

            /// Largest entry magnitude.
            pub fn inf_norm(&self) -> f64 {
                self.0
                    .iter()
                    .flatten()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max)
            }

            /// ‖A − A†‖∞, zero exactly when the matrix is Hermitian.
            pub fn hermiticity_defect(&self) -> f64 {
                (*self - self.dagger()).inf_norm()
            }

            /// Scales every entry.
            pub fn scaled(&self, s: impl Into<Complex64>) -> Self {
                let s = s.into();
                Self::from_fn(|i, j| self.0[i][j] * s)
            }

            /// Largest entry magnitude of the difference, useful in tests and
            /// validation code.
            pub fn max_diff(&self, other: &Self) -> f64 {
                (*self - *other).inf_norm()
            }
        }

        impl Index<(usize, usize)> for $name {
            type Output = Complex64;
            fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
                &self.0[i][j]
            }
        }

        impl Add for $name {
            type Output = Self;
            fn add(self, rhs: Self) -> Self {
                Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
            }
        }

        impl Sub for $name {
            type Output = Self;
            fn sub(self, rhs: Self) -> Self {
                Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
            }
        }

        impl Mul for $name {
            type Output = Self;
            fn mul(self, rhs: Self) -> Self {
                Self::from_fn(|i, j| {
                    (0..$n).map(|k| self.0[i][k] * rhs.0[k][j]).sum()
                })
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                for row in &self.0 {
                    for z in row {
                        write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
                    }
                    writeln!(f)?;
                }
                Ok(())
            }
        }
    };
}

complex_matrix!(ComplexMatrix2, 2);
complex_matrix!(ComplexMatrix4, 4);

impl ComplexMatrix4 {
    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> Complex64 {
        let mut a = self.0;
        let mut det = C_ONE;
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&r, &s| a[r][col].norm().total_cmp(&a[s][col].norm()))
                .unwrap();
            if a[pivot][col].norm() == 0.0 {
                return C_ZERO;
            }
            if pivot != col {
                a.swap(pivot, col);
                det = -det;
            }
            det *= a[col][col];
            for r in col + 1..4 {
                let factor = a[r][col] / a[col][col];
                for k in col..4 {
                    a[r][k] = a[r][k] - factor * a[col][k];
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting; `None`
    /// when a pivot vanishes exactly. Near-singular matrices still invert
    /// here, so callers with a conditioning requirement must gate on the
    /// determinant themselves.
    pub fn inverse(&self) -> Option<ComplexMatrix4> {
        let mut a = self.0;
        let mut inv = ComplexMatrix4::identity().0;
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&r, &s| a[r][col].norm().total_cmp(&a[s][col].norm()))
                .unwrap();
            if a[pivot][col].norm() == 0.0 {
                return None;
            }
            a.swap(pivot, col);
            inv.swap(pivot, col);
            let scale = a[col][col];
            for k in 0..4 {
                a[col][k] /= scale;
                inv[col][k] /= scale;
            }
            for r in 0..4 {
                if r == col {
                    continue;
                }
                let factor = a[r][col];
                for k in 0..4 {
                    a[r][k] = a[r][k] - factor * a[col][k];
                    inv[r][k] = inv[r][k] - factor * inv[col][k];
                }
            }
        }
        Some(ComplexMatrix4(inv))
    }
}

/// Complex 4-vector, the vectorized form of a 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexVector4(pub [Complex64; 4]);

impl ComplexVector4 {
    /// The zero vector.
    pub fn zeros() -> Self {
        ComplexVector4([C_ZERO; 4])
    }

    /// Inner product (a, b) = a†b, antilinear in `self`.
    pub fn dot(&self, other: &Self) -> Complex64 {
        (0..4).map(|k| self.0[k].conj() * other.0[k]).sum()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.dot(self).re.sqrt()
    }

    /// Scales every component.
    pub fn scaled(&self, s: impl Into<Complex64>) -> Self {
        let s = s.into();
        ComplexVector4([self.0[0] * s, self.0[1] * s, self.0[2] * s, self.0[3] * s])
    }

    /// Rank-one matrix |self⟩⟨other|.
    pub fn outer(&self, other: &Self) -> ComplexMatrix4 {
        ComplexMatrix4::from_fn(|i, j| self.0[i] * other.0[j].conj())
    }

    /// Largest component magnitude of the difference.
    pub fn max_diff(&self, other: &Self) -> f64 {
        (0..4)
            .map(|k| (self.0[k] - other.0[k]).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for ComplexVector4 {
    type Output = Complex64;
    fn index(&self, k: usize) -> &Complex64 {
        &self.0[k]
    }
}

impl Mul<ComplexVector4> for ComplexMatrix4 {
    type Output = ComplexVector4;
    fn mul(self, v: ComplexVector4) -> ComplexVector4 {
        let mut out = ComplexVector4::zeros();
        for i in 0..4 {
            out.0[i] = (0..4).map(|k| self.0[i][k] * v.0[k]).sum();
        }
        out
    }
}

/// Flattens a 2×2 matrix into the 4-vector with component μ = 2i + j.
pub fn vectorize(a: &ComplexMatrix2) -> ComplexVector4 {
    ComplexVector4([a.0[0][0], a.0[0][1], a.0[1][0], a.0[1][1]])
}

/// Inverse of [`vectorize`]: reads the components back into a 2×2 matrix.
pub fn matricize(v: &ComplexVector4) -> ComplexMatrix2 {
    ComplexMatrix2([[v.0[0], v.0[1]], [v.0[2], v.0[3]]])
}

/// Kronecker product with the double-index layout `c_{ik,jl} = a_{ij} b_{kl}`,
/// i.e. entry (2i+k, 2j+l) of the result is `a[i][j] * b[k][l]`.
pub fn kron(a: &ComplexMatrix2, b: &ComplexMatrix2) -> ComplexMatrix4 {
    let mut out = ComplexMatrix4::zeros();
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

/// The partial row exchange: with rows and columns read as double indices,
/// `out_{np,mq} = in_{nm,pq}`. It swaps the two inner indices and is its own
/// inverse.
pub fn per(x: &ComplexMatrix4) -> ComplexMatrix4 {
    let mut out = ComplexMatrix4::zeros();
    for n in 0..2 {
        for p in 0..2 {
            for m in 0..2 {
                for q in 0..2 {
                    out.0[2 * n + p][2 * m + q] = x.0[2 * n + m][2 * p + q];
                }
            }
        }
    }
    out
}

/// Matrices that carry the Hilbert-Schmidt inner product {A, B} = Tr{A†B}.
///
/// Both fixed sizes implement this, so mismatched dimensions are ruled out by
/// the type system; the dynamically sized [`ComplexMatrixN`] checks dimensions
/// at runtime instead.
pub trait HilbertSchmidt {
    /// Tr{A†B}, antilinear in `self`.
    fn hs_inner(&self, other: &Self) -> Complex64;
}

impl HilbertSchmidt for ComplexMatrix2 {
    fn hs_inner(&self, other: &Self) -> Complex64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

impl HilbertSchmidt for ComplexMatrix4 {
    fn hs_inner(&self, other: &Self) -> Complex64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Hilbert-Schmidt inner product {A, B} = Tr{A†B} = Σ a*_{ij} b_{ij}.
pub fn hs_inner<M: HilbertSchmidt>(a: &M, b: &M) -> Complex64 {
    a.hs_inner(b)
}

/// Heap-backed square complex matrix for the mode spaces whose dimension is
/// only known at runtime.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrixN {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrixN {
    /// The zero matrix of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrixN {
            dim,
            data: vec![C_ZERO; dim * dim],
        }
    }

    /// The identity matrix of the given dimension.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, C_ONE);
        }
        m
    }

    /// Builds a matrix entry by entry from `f(row, col)`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry at (row, col).
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    /// Overwrites the entry at (row, col).
    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.data[i * self.dim + j] = z;
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    /// Sum of the diagonal.
    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest entry magnitude.
    pub fn inf_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// ‖A − A†‖∞.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Matrix product; the dimensions must agree.
    pub fn mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dim(other)?;
        let n = self.dim;
        Ok(Self::from_fn(n, |i, j| {
            (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum()
        }))
    }

    /// Entrywise sum; the dimensions must agree.
    pub fn add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dim(other)?;
        Ok(Self::from_fn(self.dim, |i, j| {
            self.get(i, j) + other.get(i, j)
        }))
    }

    /// Entrywise difference; the dimensions must agree.
    pub fn sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dim(other)?;
        Ok(Self::from_fn(self.dim, |i, j| {
            self.get(i, j) - other.get(i, j)
        }))
    }

    /// Scales every entry.
    pub fn scaled(&self, s: impl Into<Complex64>) -> Self {
        let s = s.into();
        Self::from_fn(self.dim, |i, j| self.get(i, j) * s)
    }

    /// Hilbert-Schmidt inner product Tr{A†B}; the dimensions must agree.
    pub fn hs_inner(&self, other: &Self) -> Result<Complex64, AlgebraError> {
        self.check_dim(other)?;
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Eigenvalues of a Hermitian matrix, sorted descending.
    pub(crate) fn eigenvalues_hermitian(&self, tol: f64) -> Result<Vec<f64>, AlgebraError> {
        let defect = self.hermiticity_defect();
        let scale = self.inf_norm().max(1.0);
        if defect > tol * scale {
            return Err(AlgebraError::NotHermitian { defect, tol });
        }
        let n = self.dim;
        let mut a: Vec<Complex64> = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                (self.get(i, j) + self.get(j, i).conj()) * cr(0.5)
            })
            .collect();
        let mut v = vec![C_ZERO; n * n];
        jacobi_hermitian(n, &mut a, &mut v);
        let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
        eig.sort_by(|x, y| y.total_cmp(x));
        Ok(eig)
    }

    fn check_dim(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.dim != other.dim {
            return Err(AlgebraError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }
}

/// Result of [`hermitian_eigensystem`]: eigenvalues sorted descending, with
/// `eigenvectors[k]` the orthonormal eigenvector for `eigenvalues[k]`.
#[derive(Clone, Debug)]
pub struct Eigensystem4 {
    pub eigenvalues: [f64; 4],
    pub eigenvectors: [ComplexVector4; 4],
}

/// Cyclic complex Jacobi diagonalization of a Hermitian matrix held in `a`
/// (row-major, dimension `n`); on return `a` is diagonal and the columns of
/// `v` are the accumulated eigenvectors.
fn jacobi_hermitian(n: usize, a: &mut [Complex64], v: &mut [Complex64]) {
    for i in 0..n {
        for j in 0..n {
            v[i * n + j] = if i == j { C_ONE } else { C_ZERO };
        }
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return;
    }
    let threshold = JACOBI_OFF_TOL * scale;

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[p * n + q].norm());
            }
        }
        if off <= threshold {
            return;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let b = apq.norm();
                if b <= threshold {
                    continue;
                }
                let u = apq / b;
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let tau = (aqq - app) / (2.0 * b);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;

                a[p * n + p] = cr(app - t * b);
                a[q * n + q] = cr(aqq + t * b);
                a[p * n + q] = C_ZERO;
                a[q * n + p] = C_ZERO;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    let new_pk = apk * cth - aqk * (u * sth);
                    let new_qk = apk * (u.conj() * sth) + aqk * cth;
                    a[p * n + k] = new_pk;
                    a[k * n + p] = new_pk.conj();
                    a[q * n + k] = new_qk;
                    a[k * n + q] = new_qk.conj();
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * cth - vkq * (u.conj() * sth);
                    v[k * n + q] = vkp * (u * sth) + vkq * cth;
                }
            }
        }
    }
    debug_assert!(false, "Jacobi sweep cap reached; should not happen at these sizes");
}

/// Rotates the phase of `v` so its largest-magnitude component is real and
/// positive; the first index attains the maximum if several tie.
fn fix_phase(v: &mut ComplexVector4) {
    let mut k_star = 0;
    let mut best = v.0[0].norm();
    for k in 1..4 {
        let m = v.0[k].norm();
        if m > best {
            best = m;
            k_star = k;
        }
    }
    if best == 0.0 {
        return;
    }
    let phase = v.0[k_star] / best;
    *v = v.scaled(phase.conj());
    v.0[k_star] = cr(v.0[k_star].re.max(0.0));
}

/// Deterministic ordering of phase-fixed eigenvectors within a degenerate
/// eigenvalue cluster: component magnitudes compared lexicographically in
/// descending order, then real and imaginary parts the same way.
fn vector_order(a: &ComplexVector4, b: &ComplexVector4) -> Ordering {
    for k in 0..4 {
        match b.0[k].norm().total_cmp(&a.0[k].norm()) {
            Ordering::Equal => {}
            ord => return ord,
        }
    }
    for k in 0..4 {
        match b.0[k].re.total_cmp(&a.0[k].re) {
            Ordering::Equal => {}
            ord => return ord,
        }
        match b.0[k].im.total_cmp(&a.0[k].im) {
            Ordering::Equal => {}
            ord => return ord,
        }
    }
    Ordering::Equal
}

/// Full eigensystem of a Hermitian 4×4 matrix by cyclic Jacobi rotations.
///
/// Eigenvalues come out sorted descending. Each eigenvector's phase is fixed
/// by making its largest-magnitude component real positive, and exactly
/// degenerate eigenvalues are ordered by `vector_order`, so repeated runs
/// on the same input produce identical output.
pub fn hermitian_eigensystem(h: &ComplexMatrix4) -> Result<Eigensystem4, AlgebraError> {
    hermitian_eigensystem_with_tol(h, HERMITICITY_TOL)
}

/// [`hermitian_eigensystem`] with a caller-chosen Hermiticity gate.
pub fn hermitian_eigensystem_with_tol(
    h: &ComplexMatrix4,
    tol: f64,
) -> Result<Eigensystem4, AlgebraError> {
    let defect = h.hermiticity_defect();
    if defect > tol {
        return Err(AlgebraError::NotHermitian { defect, tol });
    }
    let sym = (*h + h.dagger()).scaled(0.5);
    let mut a: Vec<Complex64> = sym.0.iter().flatten().copied().collect();
    let mut v = vec![C_ZERO; 16];
    jacobi_hermitian(4, &mut a, &mut v);

    let mut pairs: Vec<(f64, ComplexVector4)> = (0..4)
        .map(|col| {
            let mut vec = ComplexVector4([v[col], v[4 + col], v[8 + col], v[12 + col]]);
            fix_phase(&mut vec);
            (a[col * 4 + col].re, vec)
        })
        .collect();
    pairs.sort_by(|x, y| match y.0.total_cmp(&x.0) {
        Ordering::Equal => vector_order(&x.1, &y.1),
        ord => ord,
    });

    let mut eigenvalues = [0.0; 4];
    let mut eigenvectors = [ComplexVector4::zeros(); 4];
    for (k, (lam, vec)) in pairs.into_iter().enumerate() {
        eigenvalues[k] = lam;
        eigenvectors[k] = vec;
    }
    Ok(Eigensystem4 {
        eigenvalues,
        eigenvectors,
    })
}
