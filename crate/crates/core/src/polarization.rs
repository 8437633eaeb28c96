//! Stokes vectors in four component conventions, conversions between the
//! conventions, and the 2×2 coherency matrix J with its validity checks.

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::ComplexMatrix2;
use crate::bases::pauli_basis;
use crate::mueller::MuellerMatrix;

/// Hermiticity gate for coherency matrices, relative to the matrix scale.
const HERMITIAN_GATE: f64 = 1e-12;

/// Relative slack in the physicality test, so states numerically on the
/// Poincaré sphere surface still count as physical.
const PHYSICALITY_SLACK: f64 = 1e-12;

/// Errors from the polarization layer.
#[derive(Debug, Error)]
pub enum PolarizationError {
    /// A coherency matrix must be Hermitian.
    #[error("coherency matrix is not Hermitian: max|J - J^dagger| = {defect:.3e} exceeds {tol:.1e}")]
    NotHermitian { defect: f64, tol: f64 },
    /// Averaging over zero field samples is undefined.
    #[error("cannot build a coherency matrix from an empty sample ensemble")]
    EmptyEnsemble,
}

/// Which ordering and sign layout the four Stokes components follow.
///
/// `Internal` is the convention every other module assumes: S₁ and S₂ are
/// the linear-diagonal and circular components and S₃ is the horizontal
/// linear one. `TraditionalIQUV` and `BornWolf` are the common (I,Q,U,V)
/// layout and coincide numerically; `VanDeHulst` flips the circular sign
/// relative to them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StokesConvention {
    Internal,
    TraditionalIQUV,
    BornWolf,
    VanDeHulst,
}

impl StokesConvention {
    /// Canonical lowercase name, used by the document format.
    pub fn name(&self) -> &'static str {
        match self {
            StokesConvention::Internal => "internal",
            StokesConvention::TraditionalIQUV => "iquv",
            StokesConvention::BornWolf => "born-wolf",
            StokesConvention::VanDeHulst => "van-de-hulst",
        }
    }

    /// Parses a convention name; accepts a few aliases per convention.
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "internal" => Some(StokesConvention::Internal),
            "iquv" | "traditional" | "traditional-iquv" => Some(StokesConvention::TraditionalIQUV),
            "born-wolf" | "bornwolf" | "bw" => Some(StokesConvention::BornWolf),
            "van-de-hulst" | "vandehulst" | "vdh" => Some(StokesConvention::VanDeHulst),
            _ => None,
        }
    }

    /// The orthogonal matrix Q taking components in this convention to the
    /// internal ones, S_internal = Q · S_this. Entries are 0 and ±1, so the
    /// conversions are numerically exact.
    fn q_to_internal(&self) -> [[f64; 4]; 4] {
        match self {
            StokesConvention::Internal => [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ],
            StokesConvention::TraditionalIQUV | StokesConvention::BornWolf => [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, -1.0],
                [0.0, 1.0, 0.0, 0.0],
            ],
            StokesConvention::VanDeHulst => [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, -1.0],
                [0.0, -1.0, 0.0, 0.0],
            ],
        }
    }
}

fn apply4(q: &[[f64; 4]; 4], s: [f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = (0..4).map(|k| q[i][k] * s[k]).sum();
    }
    out
}

fn transpose4(q: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = q[j][i];
        }
    }
    out
}

/// Real Stokes 4-vector tagged with the convention its components follow.
/// Physicality (s₀² ≥ s₁²+s₂²+s₃²) is checked by [`check_physical_stokes`],
/// not enforced on construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StokesVector {
    pub s: [f64; 4],
    pub convention: StokesConvention,
}

impl StokesVector {
    pub fn new(s: [f64; 4], convention: StokesConvention) -> Self {
        StokesVector { s, convention }
    }

    /// All four components multiplied by `factor`, convention unchanged.
    ///
    /// This is the bridge between the two normalizations in use: the
    /// field-quadratic components of [`stokes_from_field`] are √2 times the
    /// trace-projection components of [`stokes_from_coherency`], so
    /// `stokes_from_coherency(j).rescaled(SQRT_2)` is directly comparable
    /// with `stokes_from_field(f)`.
    pub fn rescaled(&self, factor: f64) -> StokesVector {
        StokesVector {
            s: [
                self.s[0] * factor,
                self.s[1] * factor,
                self.s[2] * factor,
                self.s[3] * factor,
            ],
            convention: self.convention,
        }
    }
}

/// One plane-wave field sample with complex amplitudes along 𝒙 and 𝒚.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub x: Complex64,
    pub y: Complex64,
}

/// 2×2 Hermitian coherency matrix of second moments ⟨E_i E_j*⟩.
///
/// Hermiticity is enforced on construction; positive semidefiniteness is
/// reported by [`CoherencyJ::psd_defect`] rather than enforced, because a
/// coherency matrix built from an unphysical Stokes vector is legitimately
/// indefinite and the checks that care ask explicitly.
#[derive(Clone, Copy, Debug)]
pub struct CoherencyJ(ComplexMatrix2);

impl CoherencyJ {
    /// Wraps a Hermitian matrix; the defect gate is 1e-12 relative to the
    /// matrix scale.
    pub fn new(j: ComplexMatrix2) -> Result<Self, PolarizationError> {
        let defect = j.hermiticity_defect();
        let tol = HERMITIAN_GATE * j.inf_norm().max(1.0);
        if defect > tol {
            return Err(PolarizationError::NotHermitian { defect, tol });
        }
        Ok(CoherencyJ(j))
    }

    /// The wrapped matrix.
    pub fn matrix(&self) -> &ComplexMatrix2 {
        &self.0
    }

    /// Smallest eigenvalue, from the closed form for Hermitian 2×2
    /// matrices. Nonnegative (within rounding) exactly when the matrix is
    /// positive semidefinite.
    pub fn psd_defect(&self) -> f64 {
        let tr = self.0.trace().re;
        let det = (self.0 .0[0][0] * self.0 .0[1][1] - self.0 .0[0][1] * self.0 .0[1][0]).re;
        let disc = (tr * tr - 4.0 * det).max(0.0);
        0.5 * (tr - disc.sqrt())
    }
}

/// Stokes components of a single pure field sample, in the internal
/// convention and field-quadratic normalization: S₀ = |X|²+|Y|²,
/// S₁ = XY*+X*Y, S₂ = i(XY*−X*Y), S₃ = |X|²−|Y|². The result sits on the
/// Poincaré sphere surface, S₀² = S₁²+S₂²+S₃².
pub fn stokes_from_field(f: &FieldSample) -> StokesVector {
    let xy = f.x * f.y.conj();
    StokesVector::new(
        [
            f.x.norm_sqr() + f.y.norm_sqr(),
            2.0 * xy.re,
            -2.0 * xy.im,
            f.x.norm_sqr() - f.y.norm_sqr(),
        ],
        StokesConvention::Internal,
    )
}

/// Re-expresses a Stokes vector in another convention. All conversions are
/// signed permutations, hence exact; any cycle of conversions is the
/// identity.
pub fn convert_stokes(s: &StokesVector, to: StokesConvention) -> StokesVector {
    let internal = apply4(&s.convention.q_to_internal(), s.s);
    StokesVector::new(apply4(&transpose4(&to.q_to_internal()), internal), to)
}

/// Re-expresses a raw Mueller matrix between conventions via the orthogonal
/// conversion matrices: M_to = Q_toᵀ (Q_from M_from Q_fromᵀ) Q_to.
pub fn convert_mueller(
    m: [[f64; 4]; 4],
    from: StokesConvention,
    to: StokesConvention,
) -> [[f64; 4]; 4] {
    let qf = from.q_to_internal();
    let qt = to.q_to_internal();
    let mut mid = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            mid[i][j] = (0..4)
                .map(|k| (0..4).map(|l| qf[i][k] * m[k][l] * qf[j][l]).sum::<f64>())
                .sum();
        }
    }
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4)
                .map(|k| (0..4).map(|l| qt[k][i] * mid[k][l] * qt[l][j]).sum::<f64>())
                .sum();
        }
    }
    out
}

/// Converts a van-de-Hulst-convention Mueller matrix to the internal
/// convention, M = Q Mᴴ Qᵀ.
pub fn convert_mueller_convention(m_vdh: [[f64; 4]; 4]) -> MuellerMatrix {
    MuellerMatrix(convert_mueller(
        m_vdh,
        StokesConvention::VanDeHulst,
        StokesConvention::Internal,
    ))
}

/// J = Σ_μ S_μ σ_(μ), the coherency matrix of a Stokes vector. The input is
/// converted to the internal convention first, so vectors in any convention
/// describe the same physical state.
pub fn coherency_from_stokes(s: &StokesVector) -> CoherencyJ {
    let si = convert_stokes(s, StokesConvention::Internal).s;
    let mut j = ComplexMatrix2::zeros();
    for mu in 0..4 {
        j = j + pauli_basis(mu).scaled(si[mu]);
    }
    CoherencyJ::new(j).expect("a real combination of Pauli matrices is Hermitian")
}

/// S_μ = Tr{σ_(μ) J}, the exact inverse of [`coherency_from_stokes`]. The
/// components carry the trace-projection normalization, Tr J = √2·S₀; see
/// [`StokesVector::rescaled`] for the bridge to the field normalization.
pub fn stokes_from_coherency(j: &CoherencyJ) -> StokesVector {
    let mut s = [0.0; 4];
    for mu in 0..4 {
        let t = (pauli_basis(mu) * *j.matrix()).trace();
        debug_assert!(t.im.abs() <= 1e-12 * j.matrix().inf_norm().max(1.0));
        s[mu] = t.re;
    }
    StokesVector::new(s, StokesConvention::Internal)
}

/// Arithmetic mean of the outer products E E† over a sample ensemble. The
/// mean of positive semidefinite dyads, so the result is positive
/// semidefinite up to rounding.
pub fn coherency_from_samples(samples: &[FieldSample]) -> Result<CoherencyJ, PolarizationError> {
    if samples.is_empty() {
        return Err(PolarizationError::EmptyEnsemble);
    }
    let mut j = ComplexMatrix2::zeros();
    for f in samples {
        let e = [f.x, f.y];
        for (i, ei) in e.iter().enumerate() {
            for (k, ek) in e.iter().enumerate() {
                j.0[i][k] += ei * ek.conj();
            }
        }
    }
    CoherencyJ::new(j.scaled(1.0 / samples.len() as f64))
}

/// Verdict of the Stokes physicality test.
#[derive(Clone, Copy, Debug)]
pub struct StokesCheck {
    /// S₀² ≥ Σ_{B≥1} S_B², with 1e-12·S₀² of slack for boundary states.
    pub physical: bool,
    /// S₀² − Σ_{B≥1} S_B²; zero on the Poincaré sphere surface.
    pub excess: f64,
}

/// Tests whether a Stokes vector describes a physical state. The quadratic
/// form is invariant under all convention conversions, so the verdict does
/// not depend on the convention tag.
pub fn check_physical_stokes(s: &StokesVector) -> StokesCheck {
    let [s0, s1, s2, s3] = s.s;
    let excess = s0 * s0 - (s1 * s1 + s2 * s2 + s3 * s3);
    StokesCheck {
        physical: excess >= -PHYSICALITY_SLACK * s0 * s0,
        excess,
    }
}
