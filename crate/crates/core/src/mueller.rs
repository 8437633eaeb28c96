//! The Mueller-matrix family: construction from Jones matrices, the F/H/C
//! companion matrices and the maps between them, and the two physical
//! realizability tests (the Mueller-Jones trace criterion and positive
//! semidefiniteness of H).

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{
    cr, hermitian_eigensystem, kron, vectorize, ComplexMatrix2, ComplexMatrix4, ComplexVector4,
};
use crate::bases::{gamma_table, lambda_matrix, pauli_basis};

/// Default tolerance of [`is_physical`], relative to Tr H so the verdict does
/// not depend on the overall intensity scale.
pub const DEFAULT_PHYSICALITY_TOL: f64 = 1e-9;

/// Default tolerance of [`is_mueller_jones`], relative to (2·M₀₀)².
pub const DEFAULT_MUELLER_JONES_TOL: f64 = 1e-10;

/// Hermiticity gate for matrices that carry a Hermitian invariant.
const HERMITIAN_GATE: f64 = 1e-12;

/// Imaginary residue allowed before a supposedly real result is considered a
/// convention bug; the check is loud on purpose.
const REALNESS_GATE: f64 = 1e-12;

/// Errors from the Mueller layer.
#[derive(Debug, Error)]
pub enum MuellerError {
    /// A coherency or H matrix must be Hermitian.
    #[error("matrix is not Hermitian: max|A - A^dagger| = {defect:.3e} exceeds {tol:.1e}")]
    NotHermitian { defect: f64, tol: f64 },
}

/// Complex 2×2 amplitude-transfer matrix of a deterministic optical element.
/// Entries are unconstrained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JonesMatrix(pub ComplexMatrix2);

impl JonesMatrix {
    /// The identity element.
    pub fn identity() -> Self {
        JonesMatrix(ComplexMatrix2::identity())
    }

    /// Standard coordinates h⃗ = vectorize(T), component μ = 2i + j.
    pub fn coordinates(&self) -> ComplexVector4 {
        vectorize(&self.0)
    }

    /// Pauli coordinates c⃗ with c_α = Tr{σ_(α) T}.
    pub fn pauli_coordinates(&self) -> ComplexVector4 {
        ComplexVector4([
            (pauli_basis(0) * self.0).trace(),
            (pauli_basis(1) * self.0).trace(),
            (pauli_basis(2) * self.0).trace(),
            (pauli_basis(3) * self.0).trace(),
        ])
    }
}

/// Real 4×4 Mueller matrix in the internal Stokes convention.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuellerMatrix(pub [[f64; 4]; 4]);

impl MuellerMatrix {
    /// The identity device.
    pub fn identity() -> Self {
        Self::from_diag([1.0, 1.0, 1.0, 1.0])
    }

    /// Diagonal Mueller matrix.
    pub fn from_diag(d: [f64; 4]) -> Self {
        let mut m = [[0.0; 4]; 4];
        for i in 0..4 {
            m[i][i] = d[i];
        }
        MuellerMatrix(m)
    }

    /// The intensity-to-intensity entry.
    pub fn m00(&self) -> f64 {
        self.0[0][0]
    }

    /// Matrix product, composing this device after `first`.
    pub fn compose(&self, first: &MuellerMatrix) -> MuellerMatrix {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = (0..4).map(|k| self.0[i][k] * first.0[k][j]).sum();
            }
        }
        MuellerMatrix(out)
    }

    /// Applies the matrix to raw Stokes components.
    pub fn apply(&self, s: [f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = (0..4).map(|k| self.0[i][k] * s[k]).sum();
        }
        out
    }

    /// View as a complex matrix, for Λ conjugations.
    pub fn to_complex(&self) -> ComplexMatrix4 {
        ComplexMatrix4::from_fn(|i, j| cr(self.0[i][j]))
    }

    /// Largest entry magnitude.
    pub fn inf_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|x| x.abs())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &MuellerMatrix) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }
}

/// Hermitian companion of a Mueller matrix; positive semidefinite exactly
/// when the underlying map is completely positive. Tr H = 2·M₀₀.
#[derive(Clone, Copy, Debug)]
pub struct HMatrix(pub ComplexMatrix4);

impl HMatrix {
    /// Wraps a Hermitian matrix, rejecting inputs whose Hermiticity defect
    /// exceeds 1e-12 relative to the matrix scale.
    pub fn new(m: ComplexMatrix4) -> Result<Self, MuellerError> {
        hermitian_gate(&m)?;
        Ok(HMatrix(m))
    }
}

/// Pauli-basis coherency matrix of a Mueller matrix; Hermitian and unitarily
/// equivalent to [`HMatrix`] via Λ, so both share a spectrum. Tr C = 2·M₀₀.
#[derive(Clone, Copy, Debug)]
pub struct CoherencyC(pub ComplexMatrix4);

impl CoherencyC {
    /// Wraps a Hermitian matrix, rejecting inputs whose Hermiticity defect
    /// exceeds 1e-12 relative to the matrix scale.
    pub fn new(m: ComplexMatrix4) -> Result<Self, MuellerError> {
        hermitian_gate(&m)?;
        Ok(CoherencyC(m))
    }
}

/// Mueller matrix expressed in the standard (non-Pauli) matrix basis,
/// 𝓜 = Λ M Λ†; identical to the F matrix, and equal to T ⊗ T* for a
/// deterministic device with Jones matrix T.
#[derive(Clone, Copy, Debug)]
pub struct StandardMueller(pub ComplexMatrix4);

fn hermitian_gate(m: &ComplexMatrix4) -> Result<(), MuellerError> {
    let defect = m.hermiticity_defect();
    let tol = HERMITIAN_GATE * m.inf_norm().max(1.0);
    if defect > tol {
        return Err(MuellerError::NotHermitian { defect, tol });
    }
    Ok(())
}

/// Drops a provably tiny imaginary part, panicking if it is not tiny, since
/// a large residue means an index or conjugation bug rather than bad data.
fn real_part_checked(m: &ComplexMatrix4, context: &str) -> MuellerMatrix {
    let scale = m.inf_norm().max(1.0);
    let mut out = [[0.0; 4]; 4];
    let mut residue = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            residue = residue.max(m.0[i][j].im.abs());
            out[i][j] = m.0[i][j].re;
        }
    }
    assert!(
        residue <= REALNESS_GATE * scale,
        "{context}: imaginary residue {residue:.3e} exceeds {:.1e}",
        REALNESS_GATE * scale
    );
    MuellerMatrix(out)
}

/// Mueller matrix of a deterministic device: M_{μν} = Tr{σ_(μ) T σ_(ν) T†}.
/// The result is real by construction; M₀₀ = Tr{T T†}/2.
pub fn mueller_from_jones(t: &JonesMatrix) -> MuellerMatrix {
    let tdag = t.0.dagger();
    let m = ComplexMatrix4::from_fn(|mu, nu| {
        (pauli_basis(mu) * t.0 * pauli_basis(nu) * tdag).trace()
    });
    real_part_checked(&m, "mueller_from_jones")
}

/// Same matrix as [`mueller_from_jones`], built as Λ†(T ⊗ T*)Λ. The two
/// constructions agree to 1e-12 and cross-check each other.
pub fn mueller_from_jones_kron(t: &JonesMatrix) -> MuellerMatrix {
    let lam = lambda_matrix();
    let m = lam.dagger() * kron(&t.0, &t.0.conj()) * lam;
    real_part_checked(&m, "mueller_from_jones_kron")
}

/// F = Λ M Λ†, the Mueller matrix conjugated into the standard basis; equal
/// to T ⊗ T* when M comes from a single Jones matrix T.
pub fn f_from_mueller(m: &MuellerMatrix) -> StandardMueller {
    let lam = lambda_matrix();
    StandardMueller(lam * m.to_complex() * lam.dagger())
}

/// 𝓜 = Λ M Λ†. The same conjugation as [`f_from_mueller`]; both names exist
/// because the two roles (Kronecker form of a device, transfer matrix for
/// vectorized coherency matrices) coincide.
pub fn mueller_to_standard(m: &MuellerMatrix) -> StandardMueller {
    f_from_mueller(m)
}

/// Inverse of [`mueller_to_standard`]: M = Λ†𝓜Λ. The input must satisfy the
/// reality symmetry of a genuine Mueller matrix, which is asserted.
pub fn standard_to_mueller(mm: &StandardMueller) -> MuellerMatrix {
    let lam = lambda_matrix();
    let m = lam.dagger() * mm.0 * lam;
    real_part_checked(&m, "standard_to_mueller")
}

/// H = Σ_{μν} M_{μν}(σ_(μ) ⊗ σ_(ν)*), the Hermitian form of a Mueller
/// matrix; equivalently Per\[F\]. Tr H = 2·M₀₀.
pub fn h_from_mueller(m: &MuellerMatrix) -> HMatrix {
    let mut h = ComplexMatrix4::zeros();
    for mu in 0..4 {
        for nu in 0..4 {
            let term = kron(&pauli_basis(mu), &pauli_basis(nu).conj()).scaled(m.0[mu][nu]);
            h = h + term;
        }
    }
    HMatrix::new(h).expect("H built from a real Mueller matrix is Hermitian")
}

/// H written out entry by entry as half-sums of Mueller elements. This is an
/// independent formulation of [`h_from_mueller`] and the two agree to 1e-13;
/// it is also the cheaper path.
pub fn h_from_mueller_entries(mm: &MuellerMatrix) -> HMatrix {
    let m = &mm.0;
    let half = 0.5;
    let e = |re: f64, im: f64| Complex64::new(re * half, im * half);
    let h = ComplexMatrix4([
        [
            e(m[0][0] + m[0][3] + m[3][0] + m[3][3], 0.0),
            e(m[0][1] + m[3][1], m[0][2] + m[3][2]),
            e(m[1][0] + m[1][3], -(m[2][0] + m[2][3])),
            e(m[1][1] + m[2][2], m[1][2] - m[2][1]),
        ],
        [
            e(m[0][1] + m[3][1], -(m[0][2] + m[3][2])),
            e(m[0][0] - m[0][3] + m[3][0] - m[3][3], 0.0),
            e(m[1][1] - m[2][2], -(m[1][2] + m[2][1])),
            e(m[1][0] - m[1][3], -(m[2][0] - m[2][3])),
        ],
        [
            e(m[1][0] + m[1][3], m[2][0] + m[2][3]),
            e(m[1][1] - m[2][2], m[1][2] + m[2][1]),
            e(m[0][0] + m[0][3] - m[3][0] - m[3][3], 0.0),
            e(m[0][1] - m[3][1], m[0][2] - m[3][2]),
        ],
        [
            e(m[1][1] + m[2][2], -(m[1][2] - m[2][1])),
            e(m[1][0] - m[1][3], m[2][0] - m[2][3]),
            e(m[0][1] - m[3][1], -(m[0][2] - m[3][2])),
            e(m[0][0] - m[0][3] - m[3][0] + m[3][3], 0.0),
        ],
    ]);
    HMatrix::new(h).expect("componentwise H is Hermitian by construction")
}

/// C = Σ_{μν} M_{μν} Γ_(μν), the Pauli-basis coherency matrix; equal to
/// Λ†HΛ. For a deterministic device, C = c⃗c⃗† with c⃗ the Pauli coordinates
/// of the Jones matrix.
pub fn c_from_mueller(m: &MuellerMatrix) -> CoherencyC {
    let gamma = gamma_table();
    let mut c = ComplexMatrix4::zeros();
    for mu in 0..4 {
        for nu in 0..4 {
            c = c + gamma[4 * mu + nu].scaled(m.0[mu][nu]);
        }
    }
    CoherencyC::new(c).expect("C built from a real Mueller matrix is Hermitian")
}

/// Inverse of [`c_from_mueller`]: M_{μν} = Tr{Γ_(μν) C}. The Hermiticity of
/// C is enforced by [`CoherencyC::new`]; the recovered M is real up to a
/// checked residue.
pub fn mueller_from_c(c: &CoherencyC) -> MuellerMatrix {
    let gamma = gamma_table();
    let m = ComplexMatrix4::from_fn(|mu, nu| (gamma[4 * mu + nu] * c.0).trace());
    real_part_checked(&m, "mueller_from_c")
}

/// Mueller-Jones criterion: M comes from a single Jones matrix exactly when
/// Tr{MᵀM} = (2·M₀₀)². The comparison is relative to (2·M₀₀)².
pub fn is_mueller_jones(m: &MuellerMatrix, tol: f64) -> bool {
    let frob2: f64 = m.0.iter().flatten().map(|x| x * x).sum();
    let target = (2.0 * m.m00()).powi(2);
    (frob2 - target).abs() <= tol * target
}

/// Outcome of the complete-positivity test: the eigenvalues of H sorted
/// descending, and the verdict min λ ≥ −tol·|Tr H|.
#[derive(Clone, Copy, Debug)]
pub struct PhysicalityReport {
    pub cp: bool,
    pub eigenvalues: [f64; 4],
}

/// Tests complete positivity of the map described by M: the associated H
/// matrix must be positive semidefinite.
pub fn is_physical(m: &MuellerMatrix, tol: f64) -> PhysicalityReport {
    let h = h_from_mueller_entries(m);
    let es = hermitian_eigensystem(&h.0).expect("H passed the Hermiticity gate");
    let trace_h = h.0.trace().re;
    let cp = es.eigenvalues[3] >= -tol * trace_h.abs();
    PhysicalityReport {
        cp,
        eigenvalues: es.eigenvalues,
    }
}
