//! Spectral decomposition of a Mueller matrix into at most four
//! Mueller-Jones factors, the induced Kraus operators, and channel action
//! on coherency matrices with trace-preservation diagnostics.

use thiserror::Error;

use crate::algebra::{
    hermitian_eigensystem, matricize, ComplexMatrix2, ComplexVector4,
};
use crate::bases::lambda_matrix;
use crate::mueller::{h_from_mueller_entries, mueller_from_jones, JonesMatrix, MuellerMatrix};
use crate::polarization::CoherencyJ;

/// Eigenvalues this far below zero, relative to the spectrum scale, are
/// treated as rounding noise and clamped; anything lower is an error.
pub const KRAUS_CLAMP_TOL: f64 = 1e-9;

/// Eigenvalues below this fraction of the spectrum scale contribute no
/// Kraus operator.
const KRAUS_KEEP_TOL: f64 = 1e-12;

/// A Kraus set preserves the trace when ‖Σ A†A − I₂‖∞ stays below this.
pub const TRACE_PRESERVATION_TOL: f64 = 1e-9;

/// Errors from the decomposition layer.
#[derive(Debug, Error)]
pub enum DecompositionError {
    /// The spectrum is too negative for a completely positive reading.
    #[error(
        "matrix is not completely positive: eigenvalue {min_eigenvalue:.6e} \
         is below the clamping threshold {threshold:.3e}"
    )]
    NonphysicalMatrix { min_eigenvalue: f64, threshold: f64 },
    /// Kraus probabilities divide by 2·M₀₀, which must be positive.
    #[error("Kraus construction needs a positive intensity scale, got M00 = {m00}")]
    NonpositiveIntensity { m00: f64 },
}

/// Spectral decomposition of a Mueller matrix: eigenvalues λ_α of the
/// associated H matrix in descending order, the Jones factors T_(α) read
/// off the eigenvectors, the Mueller-Jones factors Φ_(α), and both
/// eigenvector families (of H and of C, related by v⃗ = Λu⃗).
///
/// The factors satisfy M = Σ_α λ_α Φ_(α), with [Φ_(α)]₀₀ = 1/2 and
/// Tr{T_(α)†T_(α)} = 1. Each T_(α) carries an arbitrary global phase fixed
/// only by the eigensolver's convention; quantities built from T pairs
/// (Φ, Kraus action) are phase-free.
#[derive(Clone, Debug)]
pub struct CloudeDecomposition {
    pub lambdas: [f64; 4],
    pub jones_factors: [JonesMatrix; 4],
    pub mj_factors: [MuellerMatrix; 4],
    pub eigvecs_c: [ComplexVector4; 4],
    pub eigvecs_h: [ComplexVector4; 4],
}

/// Kraus operators A_(α) = √λ_α·T_(α) of a completely positive map,
/// together with the ensemble probabilities p_α = λ_α/(2M₀₀) and the
/// intensity-scaled factors S_(α) = √(2M₀₀)·T_(α). Factors with negligible
/// eigenvalue are dropped, so a deterministic device yields a single
/// operator.
#[derive(Clone, Debug)]
pub struct KrausSet {
    pub ops: Vec<JonesMatrix>,
    pub probabilities: Vec<f64>,
    pub scaled: Vec<JonesMatrix>,
}

/// Diagnoses trace preservation of a Kraus set.
#[derive(Clone, Copy, Debug)]
pub struct TracePreservationReport {
    /// ‖defect‖∞ < 1e-9.
    pub preserving: bool,
    /// Σ A_(α)†A_(α) − I₂.
    pub defect: ComplexMatrix2,
}

/// Decomposes a Mueller matrix by diagonalizing its H matrix. Each
/// eigenvector v⃗_(α), being the vectorization of a 2×2 matrix, is reshaped
/// directly into the Jones factor T_(α); the eigenvectors of C follow as
/// u⃗ = Λ†v⃗. Nonphysical input is allowed and shows up as negative λ.
pub fn cloude_decompose(m: &MuellerMatrix) -> CloudeDecomposition {
    let h = h_from_mueller_entries(m);
    let es = hermitian_eigensystem(&h.0).expect("H built from a real matrix is Hermitian");
    let lambda_dag = lambda_matrix().dagger();

    let jones_factors =
        std::array::from_fn(|a| JonesMatrix(matricize(&es.eigenvectors[a])));
    let mj_factors = std::array::from_fn(|a| mueller_from_jones(&jones_factors[a]));
    let eigvecs_c = std::array::from_fn(|a| lambda_dag * es.eigenvectors[a]);

    CloudeDecomposition {
        lambdas: es.eigenvalues,
        jones_factors,
        mj_factors,
        eigvecs_c,
        eigvecs_h: es.eigenvectors,
    }
}

/// Builds the Kraus operators of a decomposition. Eigenvalues within
/// −1e-9 of zero (relative to the spectrum scale) are clamped to zero;
/// lower ones mean the matrix is not completely positive and are refused
/// rather than hidden.
pub fn kraus_from_decomposition(
    d: &CloudeDecomposition,
    m00: f64,
) -> Result<KrausSet, DecompositionError> {
    if m00 <= 0.0 {
        return Err(DecompositionError::NonpositiveIntensity { m00 });
    }
    let scale: f64 = d.lambdas.iter().map(|l| l.abs()).sum();
    let threshold = -KRAUS_CLAMP_TOL * scale;
    if let Some(&bad) = d.lambdas.iter().find(|&&l| l < threshold) {
        return Err(DecompositionError::NonphysicalMatrix {
            min_eigenvalue: bad,
            threshold,
        });
    }

    let mut ops = Vec::new();
    let mut probabilities = Vec::new();
    let mut scaled = Vec::new();
    for (lambda, t) in d.lambdas.iter().zip(&d.jones_factors) {
        let l = lambda.max(0.0);
        if l <= KRAUS_KEEP_TOL * scale {
            continue;
        }
        ops.push(JonesMatrix(t.0.scaled(l.sqrt())));
        probabilities.push(l / (2.0 * m00));
        scaled.push(JonesMatrix(t.0.scaled((2.0 * m00).sqrt())));
    }
    Ok(KrausSet {
        ops,
        probabilities,
        scaled,
    })
}

/// Acts with the channel on a coherency matrix: J' = Σ_α A_(α) J A_(α)†.
/// The output Stokes vector is M times the input one, in the same
/// trace-projection normalization.
pub fn apply_channel(j: &CoherencyJ, k: &KrausSet) -> CoherencyJ {
    let mut out = ComplexMatrix2::zeros();
    for a in &k.ops {
        out = out + a.0 * *j.matrix() * a.0.dagger();
    }
    CoherencyJ::new(out).expect("Kraus action preserves Hermiticity")
}

/// Computes the trace-preservation defect Σ A_(α)†A_(α) − I₂ of a Kraus
/// set; zero defect means the channel maintains the coherency trace for
/// every input.
pub fn check_trace_preserving(k: &KrausSet) -> TracePreservationReport {
    let mut sum = ComplexMatrix2::zeros();
    for a in &k.ops {
        sum = sum + a.0.dagger() * a.0;
    }
    let defect = sum - ComplexMatrix2::identity();
    TracePreservationReport {
        preserving: defect.inf_norm() < TRACE_PRESERVATION_TOL,
        defect,
    }
}
