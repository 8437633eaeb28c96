//! Two-photon states under one-sided scattering: Bell states, the
//! reshuffled coordinate matrix 𝒟̃, two-photon Stokes parameters, channel
//! action on one photon of a pair, and Mueller-matrix reconstruction from a
//! single entangled probe, with the MEMS and Werner families as worked
//! targets.

use thiserror::Error;

use crate::algebra::{
    cr, hermitian_eigensystem, kron, per, ComplexMatrix2, ComplexMatrix4, ComplexVector4,
};
use crate::bases::{bell_matrix, lambda_matrix, pauli_basis};
use crate::mueller::{is_physical, mueller_to_standard, MuellerMatrix, DEFAULT_PHYSICALITY_TOL};

/// Hermiticity and unit-trace gates for density matrices.
const DENSITY_GATE: f64 = 1e-12;

/// How far below zero a density-matrix eigenvalue may sit before the state
/// is rejected as not positive semidefinite.
const PSD_GATE: f64 = -1e-10;

/// Probes whose reshuffled matrix has |det| at or below this, after trace
/// normalization, cannot be inverted for reconstruction.
pub const PROBE_DET_TOL: f64 = 1e-12;

/// Imaginary residue allowed when a reconstructed Mueller matrix is read
/// off a complex expression.
const RECONSTRUCTION_REALNESS_TOL: f64 = 1e-10;

/// Errors from the quantum layer.
#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("density matrix is not Hermitian: defect {defect:.3e} exceeds {tol:.1e}")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("density matrix trace is {trace:.12}, expected 1")]
    TraceNotOne { trace: f64 },
    #[error(
        "density matrix is not positive semidefinite: eigenvalue {min_eigenvalue:.3e} \
         is below {tol:.1e}"
    )]
    NotPositive { min_eigenvalue: f64, tol: f64 },
    #[error("{name} = {value} is outside [0, 1]")]
    ParameterOutOfRange { name: &'static str, value: f64 },
    #[error(
        "probe state cannot be inverted: |det| of its reshuffled matrix is \
         {det_magnitude:.3e}, at or below {threshold:.1e} (some pure product \
         states are singular in this sense)"
    )]
    SingularProbe { det_magnitude: f64, threshold: f64 },
    #[error("scattered state has nonpositive trace {trace:.6e}, cannot renormalize")]
    NonpositiveTrace { trace: f64 },
    #[error(
        "reconstructed matrix has imaginary residue {residue:.3e} (tolerance {tol:.1e}); \
         the input pair is not related by a one-sided channel"
    )]
    ResidueNotReal { residue: f64, tol: f64 },
}

/// Two-photon density matrix in the standard product basis |2i+j⟩ = |ij⟩,
/// with the first index the photon a channel acts on. Hermitian, unit
/// trace, positive semidefinite, all enforced on construction.
#[derive(Clone, Copy, Debug)]
pub struct DensityMatrix4(ComplexMatrix4);

impl DensityMatrix4 {
    /// Validates and wraps a candidate state.
    pub fn new(rho: ComplexMatrix4) -> Result<Self, QuantumError> {
        let defect = rho.hermiticity_defect();
        let tol = DENSITY_GATE * rho.inf_norm().max(1.0);
        if defect > tol {
            return Err(QuantumError::NotHermitian { defect, tol });
        }
        let trace = rho.trace().re;
        if (trace - 1.0).abs() > DENSITY_GATE {
            return Err(QuantumError::TraceNotOne { trace });
        }
        let es = hermitian_eigensystem(&rho).expect("Hermiticity was just checked");
        let min_eigenvalue = es.eigenvalues[3];
        if min_eigenvalue < PSD_GATE {
            return Err(QuantumError::NotPositive {
                min_eigenvalue,
                tol: PSD_GATE,
            });
        }
        Ok(DensityMatrix4(rho))
    }

    /// The wrapped matrix; its entries are the coordinates 𝒟.
    pub fn matrix(&self) -> &ComplexMatrix4 {
        &self.0
    }
}

/// The reshuffled coordinate matrix 𝒟̃ = Per\[𝒟\], with 𝒟̃_{ik,jl} = 𝒟_{ij,kl}.
#[derive(Clone, Copy, Debug)]
pub struct DTilde(pub ComplexMatrix4);

/// The 16 two-photon Stokes parameters D_{αβ} = Tr{ρ (σ_(α) ⊗ σ_(β))}.
/// D₀₀ = 1/2 for any unit-trace state; uncorrelated photons factorize the
/// table into an outer product of single-photon Stokes vectors.
#[derive(Clone, Copy, Debug)]
pub struct TwoPhotonStokes(pub [[f64; 4]; 4]);

impl TwoPhotonStokes {
    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &TwoPhotonStokes) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }
}

/// The k-th Bell state as a density matrix. Indices follow the row order of
/// the Bell coefficient matrix: 0 and 1 are the superpositions of |00⟩ and
/// |11⟩, 2 and 3 of |01⟩ and |10⟩; index 3 is the singlet. Beware that this
/// labeling attaches ψ± to the |00⟩±|11⟩ pair, which is the opposite of the
/// most common usage.
pub fn bell_state(k: usize) -> DensityMatrix4 {
    assert!(k < 4, "Bell index {k} out of range");
    let b = bell_matrix();
    let ket = ComplexVector4(b.0[k]);
    DensityMatrix4::new(ket.outer(&ket)).expect("Bell dyads are valid states")
}

/// The singlet Bell state, the canonical reconstruction probe.
pub fn singlet_state() -> DensityMatrix4 {
    bell_state(3)
}

/// Reshuffles a density matrix into 𝒟̃ = Per\[𝒟\].
pub fn dtilde(rho: &DensityMatrix4) -> DTilde {
    DTilde(per(rho.matrix()))
}

/// Undoes [`dtilde`]: Per is an involution, so the state is Per[𝒟̃],
/// revalidated on the way back.
pub fn rho_from_dtilde(dt: &DTilde) -> Result<DensityMatrix4, QuantumError> {
    DensityMatrix4::new(per(&dt.0))
}

/// Reads the two-photon Stokes parameters off a state by tracing against
/// the 16 products σ_(α) ⊗ σ_(β).
pub fn two_photon_stokes(rho: &DensityMatrix4) -> TwoPhotonStokes {
    let mut d = [[0.0; 4]; 4];
    let scale = rho.matrix().inf_norm().max(1.0);
    for alpha in 0..4 {
        for beta in 0..4 {
            let t = (kron(&pauli_basis(alpha), &pauli_basis(beta)) * *rho.matrix()).trace();
            debug_assert!(t.im.abs() <= 1e-12 * scale);
            d[alpha][beta] = t.re;
        }
    }
    TwoPhotonStokes(d)
}

/// Result of scattering one photon: the raw output matrix, which is a valid
/// state only up to its trace, since a lossy channel removes intensity.
#[derive(Clone, Copy, Debug)]
pub struct ScatterOutcome {
    /// Per[𝓜𝒟̃], before any renormalization.
    pub raw: ComplexMatrix4,
    /// Trace of `raw`; 1 exactly when the channel preserves the trace.
    pub trace: f64,
    /// Whether the Mueller matrix passed the complete-positivity test; a
    /// false value warns that `raw` need not be a physical state.
    pub input_physical: bool,
}

impl ScatterOutcome {
    /// The outcome scaled to unit trace and validated as a density matrix.
    pub fn renormalized(&self) -> Result<DensityMatrix4, QuantumError> {
        if self.trace <= 0.0 {
            return Err(QuantumError::NonpositiveTrace { trace: self.trace });
        }
        DensityMatrix4::new(self.raw.scaled(1.0 / self.trace))
    }
}

/// Acts with a Mueller matrix on the first photon of a two-photon state:
/// ρ' = Per[𝓜 𝒟̃] with 𝓜 = Λ M Λ†. Equivalently the two-photon Stokes
/// table transforms as D' = M D on the first index. The output is returned
/// unnormalized because the action is linear and renormalizing here would
/// break reconstruction; see [`ScatterOutcome::renormalized`].
pub fn scatter_one_photon(rho: &DensityMatrix4, m: &MuellerMatrix) -> ScatterOutcome {
    let mm = mueller_to_standard(m);
    let raw = per(&(mm.0 * dtilde(rho).0));
    ScatterOutcome {
        raw,
        trace: raw.trace().re,
        input_physical: is_physical(m, DEFAULT_PHYSICALITY_TOL).cp,
    }
}

/// Exchanges the two photons, ρ_{ij,kl} → ρ_{ji,lk}, so a channel can be
/// applied to the second photon by swapping, scattering, and swapping back.
pub fn swap_photons(rho: &DensityMatrix4) -> DensityMatrix4 {
    let src = rho.matrix();
    let swapped = ComplexMatrix4::from_fn(|row, col| {
        let (i, j) = (row / 2, row % 2);
        let (k, l) = (col / 2, col % 2);
        src.0[2 * j + i][2 * l + k]
    });
    DensityMatrix4::new(swapped).expect("photon exchange preserves state validity")
}

/// Recovers the Mueller matrix of the channel that turned `probe` into
/// `outcome`, M = Λ† 𝒟̃' 𝒟̃⁻¹ Λ. The outcome may be an unnormalized
/// [`ScatterOutcome::raw`]; feeding a renormalized state recovers M only up
/// to the intensity lost by the channel. Probes whose 𝒟̃ is singular (some
/// pure product states) cannot be inverted.
pub fn reconstruct_mueller(
    probe: &DensityMatrix4,
    outcome: &ComplexMatrix4,
) -> Result<MuellerMatrix, QuantumError> {
    let dt_in = dtilde(probe).0;
    let det_magnitude = dt_in.determinant().norm();
    if det_magnitude <= PROBE_DET_TOL {
        return Err(QuantumError::SingularProbe {
            det_magnitude,
            threshold: PROBE_DET_TOL,
        });
    }
    let inv = dt_in.inverse().expect("determinant gate passed");
    let lam = lambda_matrix();
    let m_complex = lam.dagger() * per(outcome) * inv * lam;

    let scale = m_complex.inf_norm().max(1.0);
    let mut residue = 0.0f64;
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            residue = residue.max(m_complex.0[i][j].im.abs());
            m[i][j] = m_complex.0[i][j].re;
        }
    }
    let tol = RECONSTRUCTION_REALNESS_TOL * scale;
    if residue > tol {
        return Err(QuantumError::ResidueNotReal { residue, tol });
    }
    Ok(MuellerMatrix(m))
}

/// The branch function of the MEMS family: g = γ/2 once γ ≥ 2/3, pinned at
/// 1/3 below that.
pub fn mems_g(gamma: f64) -> f64 {
    if gamma >= 2.0 / 3.0 {
        gamma / 2.0
    } else {
        1.0 / 3.0
    }
}

/// Maximally entangled mixed state with concurrence parameter γ ∈ [0, 1]:
/// corners g and γ/2 on the |00⟩/|11⟩ block and 1 − 2g on |01⟩⟨01|.
pub fn mems_target(gamma: f64) -> Result<DensityMatrix4, QuantumError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(QuantumError::ParameterOutOfRange {
            name: "gamma",
            value: gamma,
        });
    }
    let g = mems_g(gamma);
    let mut rho = ComplexMatrix4::zeros();
    rho.0[0][0] = cr(g);
    rho.0[3][3] = cr(g);
    rho.0[0][3] = cr(gamma / 2.0);
    rho.0[3][0] = cr(gamma / 2.0);
    rho.0[1][1] = cr(1.0 - 2.0 * g);
    DensityMatrix4::new(rho)
}

/// The Mueller matrix whose one-sided action takes the singlet to the MEMS
/// state of the same γ.
pub fn mems_mueller(gamma: f64) -> Result<MuellerMatrix, QuantumError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(QuantumError::ParameterOutOfRange {
            name: "gamma",
            value: gamma,
        });
    }
    let g = mems_g(gamma);
    Ok(MuellerMatrix([
        [1.0, 0.0, 0.0, 1.0 - 2.0 * g],
        [0.0, -gamma, 0.0, 0.0],
        [0.0, 0.0, gamma, 0.0],
        [1.0 - 2.0 * g, 0.0, 0.0, 1.0 - 4.0 * g],
    ]))
}

/// Werner state with singlet weight p ∈ [0, 1]: the convex mixture of the
/// singlet and the maximally mixed state.
pub fn werner_target(p: f64) -> Result<DensityMatrix4, QuantumError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QuantumError::ParameterOutOfRange { name: "p", value: p });
    }
    let mut rho = ComplexMatrix4::zeros();
    rho.0[0][0] = cr((1.0 - p) / 4.0);
    rho.0[3][3] = cr((1.0 - p) / 4.0);
    rho.0[1][1] = cr((1.0 + p) / 4.0);
    rho.0[2][2] = cr((1.0 + p) / 4.0);
    rho.0[1][2] = cr(-p / 2.0);
    rho.0[2][1] = cr(-p / 2.0);
    DensityMatrix4::new(rho)
}

/// The Mueller matrix whose one-sided action takes the singlet to the
/// Werner state of the same p: the isotropic partial depolarizer.
pub fn werner_mueller(p: f64) -> Result<MuellerMatrix, QuantumError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QuantumError::ParameterOutOfRange { name: "p", value: p });
    }
    Ok(MuellerMatrix::from_diag([1.0, p, p, p]))
}

/// Single-photon Stokes vector of a 2×2 state, s_α = Tr{σ_(α) ρ}; used by
/// the factorization tests for uncorrelated pairs.
pub fn stokes_of_qubit(rho: &ComplexMatrix2) -> [f64; 4] {
    let mut s = [0.0; 4];
    for alpha in 0..4 {
        s[alpha] = (crate::bases::pauli_basis(alpha) * *rho).trace().re;
    }
    s
}
