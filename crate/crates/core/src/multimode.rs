//! The 2N-mode single-particle model: per-mode polarization frames, the
//! six-analyzer POVM and its four Stokes operators, reduced and relevant
//! density matrices, and the effective single-photon and two-photon Mueller
//! matrices of mode-dependent channels.

use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;
use thiserror::Error;

use crate::algebra::{cr, ComplexMatrix2, ComplexMatrixN, C_ZERO};
use crate::bases::{pauli_basis, pauli_unnormalized};
use crate::mueller::MuellerMatrix;

/// Largest number of spatial modes; keeps every object desk-scale
/// (single-particle space ≤ 16-dim, two-photon Mueller 16×16 over ≤ 64
/// mode pairs).
pub const MAX_MODES: usize = 8;

/// Largest number of Kraus operators in a family.
pub const MAX_KRAUS_OPERATORS: usize = 16;

/// Orthonormality gate for frame vectors.
const FRAME_TOL: f64 = 1e-12;

/// Normalization gate for Kraus families, Σᵢ ÂᵢÂᵢ† = Î.
pub const KRAUS_NORMALIZATION_TOL: f64 = 1e-9;

/// Gates shared with the density-matrix checks of the quantum layer.
const STATE_GATE: f64 = 1e-12;
const STATE_PSD_GATE: f64 = -1e-10;

/// Trace gate for input mode matrices R.
const MODE_TRACE_TOL: f64 = 1e-9;

/// Errors from the multimode layer.
#[derive(Debug, Error)]
pub enum MultimodeError {
    #[error("frame vectors {first} and {second} are not orthonormal: defect {defect:.3e}")]
    FrameNotOrthonormal {
        first: usize,
        second: usize,
        defect: f64,
    },
    #[error("no modes supplied")]
    NoModes,
    #[error("{n_modes} modes exceed the supported maximum of {MAX_MODES}")]
    TooManyModes { n_modes: usize },
    #[error("{count} Kraus operators exceed the supported maximum of {MAX_KRAUS_OPERATORS}")]
    TooManyKraus { count: usize },
    #[error("a Kraus family needs at least one operator")]
    EmptyKraus,
    #[error("Kraus operator dimension {found} differs from {expected}")]
    MixedKrausDimensions { expected: usize, found: usize },
    #[error("single-particle dimension {dim} is not twice a mode count")]
    OddDimension { dim: usize },
    #[error(
        "Kraus family violates Σ A A^dagger = I: defect {defect:.3e} exceeds {tol:.1e}"
    )]
    NormalizationViolation { defect: f64, tol: f64 },
    #[error("mode matrix is not Hermitian: defect {defect:.3e}")]
    ModeMatrixNotHermitian { defect: f64 },
    #[error("mode matrix trace is {trace:.9}, expected 1")]
    ModeMatrixTraceNotOne { trace: f64 },
    #[error("mode matrix dimension {found} does not match {expected}")]
    ModeMatrixWrongDimension { expected: usize, found: usize },
    #[error("state dimension {state_dim} does not match 2N = {expected}")]
    StateDimensionMismatch { state_dim: usize, expected: usize },
    #[error("state is not Hermitian: defect {defect:.3e}")]
    StateNotHermitian { defect: f64 },
    #[error("state trace is {trace:.9}, expected 1")]
    StateTraceNotOne { trace: f64 },
    #[error("state is not positive semidefinite: eigenvalue {min_eigenvalue:.3e}")]
    StateNotPositive { min_eigenvalue: f64 },
    #[error(
        "measured Stokes parameters admit no state: intensity² {intensity_sq:.6e} is \
         below the polarization sum {polarization_sq:.6e}"
    )]
    NotReconstructible {
        intensity_sq: f64,
        polarization_sq: f64,
    },
    #[error("measured intensity {value:.6e} must be positive")]
    NonpositiveIntensity { value: f64 },
}

type Vec3 = [Complex64; 3];
type Mat3 = [[Complex64; 3]; 3];

fn inner3(a: &Vec3, b: &Vec3) -> Complex64 {
    (0..3).map(|k| a[k].conj() * b[k]).sum()
}

fn apply3(m: &Mat3, v: &Vec3) -> Vec3 {
    std::array::from_fn(|i| (0..3).map(|k| m[i][k] * v[k]).sum())
}

fn dyad3(a: &Vec3, b: &Vec3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i] * b[j].conj()))
}

/// σ_(𝒜) (unnormalized form) embedded in the upper-left block of 3-space,
/// acting trivially along the longitudinal axis.
fn embedded_pauli(a: usize) -> Mat3 {
    let p = pauli_unnormalized(a);
    let mut out = [[C_ZERO; 3]; 3];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = p.0[i][j];
        }
    }
    out
}

/// Orthonormal polarization triad of one spatial mode: two supplied
/// transverse directions and the derived third one, ε₂ = (ε₀ × ε₁)*, whose
/// conjugation makes the triple complete under the Hermitian inner product
/// even for complex (elliptic) frames. The mode frequency tags the mode but
/// enters no formula here.
#[derive(Clone, Copy, Debug)]
pub struct ModeFrame {
    eps: [Vec3; 3],
    pub frequency: f64,
}

impl ModeFrame {
    /// Validates orthonormality of the supplied pair and derives the third
    /// vector.
    pub fn new(eps0: Vec3, eps1: Vec3) -> Result<Self, MultimodeError> {
        let pairs = [(0usize, eps0, eps0), (1, eps1, eps1), (0, eps0, eps1)];
        for (idx, (i, a, b)) in pairs.iter().enumerate() {
            let expect = if idx < 2 { 1.0 } else { 0.0 };
            let defect = (inner3(a, b) - cr(expect)).norm();
            if defect > FRAME_TOL {
                return Err(MultimodeError::FrameNotOrthonormal {
                    first: *i,
                    second: if idx < 2 { *i } else { 1 },
                    defect,
                });
            }
        }
        let cross = [
            eps0[1] * eps1[2] - eps0[2] * eps1[1],
            eps0[2] * eps1[0] - eps0[0] * eps1[2],
            eps0[0] * eps1[1] - eps0[1] * eps1[0],
        ];
        let eps2 = std::array::from_fn(|k| cross[k].conj());
        let frame = ModeFrame {
            eps: [eps0, eps1, eps2],
            frequency: 0.0,
        };
        debug_assert!(frame.completeness_defect() < 1e-12);
        Ok(frame)
    }

    /// The canonical transverse frame along the global 𝒙 and 𝒚 axes.
    pub fn canonical() -> Self {
        let x = [cr(1.0), C_ZERO, C_ZERO];
        let y = [C_ZERO, cr(1.0), C_ZERO];
        ModeFrame::new(x, y).expect("the canonical frame is orthonormal")
    }

    /// Same frame carrying a mode frequency as metadata.
    pub fn with_frequency(mut self, frequency: f64) -> Self {
        self.frequency = frequency;
        self
    }

    /// The α-th triad vector, α ∈ {0, 1, 2}.
    pub fn epsilon(&self, alpha: usize) -> &Vec3 {
        &self.eps[alpha]
    }

    /// ‖(𝒫 + 𝒬) − I₃‖∞ where 𝒫 sums the transverse dyads and 𝒬 is the
    /// longitudinal one; zero for every valid frame.
    pub fn completeness_defect(&self) -> f64 {
        let mut defect = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let sum: Complex64 = (0..3).map(|a| self.eps[a][i] * self.eps[a][j].conj()).sum();
                let expect = if i == j { cr(1.0) } else { C_ZERO };
                defect = defect.max((sum - expect).norm());
            }
        }
        defect
    }
}

fn check_mode_count(frames: &[ModeFrame]) -> Result<usize, MultimodeError> {
    if frames.is_empty() {
        return Err(MultimodeError::NoModes);
    }
    if frames.len() > MAX_MODES {
        return Err(MultimodeError::TooManyModes {
            n_modes: frames.len(),
        });
    }
    Ok(frames.len())
}

/// The six lab-fixed analyzer directions: the canonical pair, the diagonal
/// pair, and the circular pair, forming three mutually unbiased bases of
/// the global transverse plane.
pub fn mub_analyzers() -> [Vec3; 6] {
    let h = cr(FRAC_1_SQRT_2);
    let ih = Complex64::new(0.0, FRAC_1_SQRT_2);
    [
        [cr(1.0), C_ZERO, C_ZERO],
        [C_ZERO, cr(1.0), C_ZERO],
        [h, h, C_ZERO],
        [h, -h, C_ZERO],
        [h, ih, C_ZERO],
        [h, -ih, C_ZERO],
    ]
}

/// The 4×6 synthesis matrix P combining the six analyzer intensities into
/// the four Stokes operators; its rows are orthonormal, P P† = I₄.
pub fn stokes_synthesis() -> [[f64; 6]; 4] {
    let h = FRAC_1_SQRT_2;
    [
        [h, h, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, h, -h, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, h, -h],
        [h, -h, 0.0, 0.0, 0.0, 0.0],
    ]
}

/// 2×2 restriction of the embedded unnormalized σ_(𝒜) to one mode's
/// transverse plane; exact integer arithmetic for frames with exact
/// entries.
fn sigma_block_unnormalized(frame: &ModeFrame, a: usize) -> ComplexMatrix2 {
    let omega = embedded_pauli(a);
    ComplexMatrix2::from_fn(|alpha, beta| {
        inner3(frame.epsilon(alpha), &apply3(&omega, frame.epsilon(beta)))
    })
}

/// The per-mode restricted Pauli matrix σ_{n(𝒜)} in the trace-projection
/// normalization.
pub fn restricted_pauli(frame: &ModeFrame, a: usize) -> ComplexMatrix2 {
    sigma_block_unnormalized(frame, a).scaled(FRAC_1_SQRT_2)
}

/// Hermitian operator on the 2N-dimensional single-particle space, in the
/// |nα⟩ basis with flat index 2n + α.
#[derive(Clone, Debug)]
pub struct SingleParticleOperator {
    matrix: ComplexMatrixN,
}

impl SingleParticleOperator {
    pub fn matrix(&self) -> &ComplexMatrixN {
        &self.matrix
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.dim() / 2
    }
}

/// The four Stokes operators of a frame family: block-diagonal with blocks
/// ⟨nα|Ŝ_(𝒜)|nβ⟩ = (ε_{nα}, Ω_(𝒜) ε_{nβ}), Ω_(𝒜) the embedded σ_(𝒜).
/// A canonical frame reproduces σ_(𝒜) itself in every block.
pub fn stokes_operators(
    frames: &[ModeFrame],
) -> Result<[SingleParticleOperator; 4], MultimodeError> {
    let n = check_mode_count(frames)?;
    Ok(std::array::from_fn(|a| {
        let mut m = ComplexMatrixN::zeros(2 * n);
        for (mode, frame) in frames.iter().enumerate() {
            let block = restricted_pauli(frame, a);
            for alpha in 0..2 {
                for beta in 0..2 {
                    m.set(2 * mode + alpha, 2 * mode + beta, block.0[alpha][beta]);
                }
            }
        }
        SingleParticleOperator { matrix: m }
    }))
}

/// Sums the six analyzer POVM elements on the single-particle sector and
/// returns ‖Σᵢ F̂ᵢ − I‖∞. The defect vanishes whenever every frame lies in
/// the global transverse plane; out-of-plane components leak intensity past
/// the analyzers and show up here.
pub fn povm_check(frames: &[ModeFrame]) -> Result<f64, MultimodeError> {
    check_mode_count(frames)?;
    // Σᵢ |fᵢ⟩⟨fᵢ| over three mutually unbiased bases resolves the
    // transverse plane three times over, hence the 1/3.
    let mut total = [[C_ZERO; 3]; 3];
    for f in &mub_analyzers() {
        let d = dyad3(f, f);
        for i in 0..3 {
            for j in 0..3 {
                total[i][j] += d[i][j] / 3.0;
            }
        }
    }
    let mut defect = 0.0f64;
    for frame in frames {
        for alpha in 0..2 {
            for beta in 0..2 {
                let got = inner3(frame.epsilon(alpha), &apply3(&total, frame.epsilon(beta)));
                let expect = if alpha == beta { cr(1.0) } else { C_ZERO };
                defect = defect.max((got - expect).norm());
            }
        }
    }
    Ok(defect)
}

/// Δ_{𝒜ℬ}(n) = Tr{σ_{n(𝒜)} σ_(ℬ)}, the mixing matrix between the mode's
/// restricted Paulis and the global ones. Canonical frames give the
/// identity exactly; the entries are real for every frame.
pub fn delta_matrix(n: usize, frames: &[ModeFrame]) -> Result<[[f64; 4]; 4], MultimodeError> {
    check_mode_count(frames)?;
    assert!(n < frames.len(), "mode index {n} out of range");
    let frame = &frames[n];
    let mut delta = [[0.0; 4]; 4];
    for a in 0..4 {
        let s = sigma_block_unnormalized(frame, a);
        for b in 0..4 {
            let t = (s * pauli_unnormalized(b)).trace() * 0.5;
            debug_assert!(t.im.abs() < 1e-12);
            delta[a][b] = t.re;
        }
    }
    Ok(delta)
}

/// Density matrix on the 2N-dimensional single-particle space.
#[derive(Clone, Debug)]
pub struct SingleParticleState {
    rho: ComplexMatrixN,
}

impl SingleParticleState {
    /// Validates Hermiticity, unit trace, and positive semidefiniteness.
    pub fn new(rho: ComplexMatrixN) -> Result<Self, MultimodeError> {
        let dim = rho.dim();
        if dim % 2 != 0 || dim == 0 {
            return Err(MultimodeError::OddDimension { dim });
        }
        if dim > 2 * MAX_MODES {
            return Err(MultimodeError::TooManyModes { n_modes: dim / 2 });
        }
        let defect = rho.hermiticity_defect();
        if defect > STATE_GATE * rho.inf_norm().max(1.0) {
            return Err(MultimodeError::StateNotHermitian { defect });
        }
        let trace = rho.trace().re;
        if (trace - 1.0).abs() > STATE_GATE {
            return Err(MultimodeError::StateTraceNotOne { trace });
        }
        let eigenvalues = rho
            .eigenvalues_hermitian(1e-10)
            .expect("Hermiticity was just checked");
        let min_eigenvalue = *eigenvalues.last().expect("nonzero dimension");
        if min_eigenvalue < STATE_PSD_GATE {
            return Err(MultimodeError::StateNotPositive { min_eigenvalue });
        }
        Ok(SingleParticleState { rho })
    }

    /// Embeds a single-mode 2×2 state as the N = 1 case.
    pub fn single_mode(rho: ComplexMatrix2) -> Result<Self, MultimodeError> {
        Self::new(ComplexMatrixN::from_fn(2, |i, j| rho.0[i][j]))
    }

    pub fn matrix(&self) -> &ComplexMatrixN {
        &self.rho
    }

    pub fn n_modes(&self) -> usize {
        self.rho.dim() / 2
    }

    /// The n-th 2×2 diagonal block 𝒟_n.
    fn mode_block(&self, n: usize) -> ComplexMatrix2 {
        ComplexMatrix2::from_fn(|alpha, beta| self.rho.get(2 * n + alpha, 2 * n + beta))
    }
}

/// Measured Stokes expectations ⟨Ŝ_(𝒜)⟩ with their scaled form
/// s_𝒜 = ⟨Ŝ_(𝒜)⟩ / (√2 ⟨Ŝ₀⟩), which pins s₀ = 1/√2.
#[derive(Clone, Copy, Debug)]
pub struct MeasuredStokes {
    pub values: [f64; 4],
    pub scaled: [f64; 4],
}

impl MeasuredStokes {
    /// Wraps raw expectation values; the intensity must be positive for the
    /// scaling to exist.
    pub fn from_expectations(values: [f64; 4]) -> Result<Self, MultimodeError> {
        if values[0] <= 0.0 {
            return Err(MultimodeError::NonpositiveIntensity { value: values[0] });
        }
        let scale = 1.0 / (std::f64::consts::SQRT_2 * values[0]);
        Ok(MeasuredStokes {
            values,
            scaled: std::array::from_fn(|a| values[a] * scale),
        })
    }
}

/// ⟨Ŝ_(𝒜)⟩ = Σ_n Tr{𝒟_n σ_{n(𝒜)}}, evaluated blockwise; identical to the
/// full operator trace because the Stokes operators are block-diagonal.
pub fn expectation_stokes(
    state: &SingleParticleState,
    frames: &[ModeFrame],
) -> Result<MeasuredStokes, MultimodeError> {
    let n = check_mode_count(frames)?;
    if state.matrix().dim() != 2 * n {
        return Err(MultimodeError::StateDimensionMismatch {
            state_dim: state.matrix().dim(),
            expected: 2 * n,
        });
    }
    let mut values = [0.0; 4];
    for a in 0..4 {
        let mut total = C_ZERO;
        for (mode, frame) in frames.iter().enumerate() {
            let block = state.mode_block(mode);
            total += (block * restricted_pauli(frame, a)).trace();
        }
        debug_assert!(total.im.abs() < 1e-12 * total.norm().max(1.0));
        values[a] = total.re;
    }
    MeasuredStokes::from_expectations(values)
}

/// The mode-summed 2×2 reduced density matrix \[𝒟\]_{αβ} = Σ_n ρ_{nα,nβ};
/// Hermitian with unit trace by construction.
pub fn reduced_density(state: &SingleParticleState) -> ComplexMatrix2 {
    let mut d = ComplexMatrix2::zeros();
    for n in 0..state.n_modes() {
        d = d + state.mode_block(n);
    }
    d
}

/// Maximum-entropy 2×2 state compatible with measured Stokes parameters:
/// 𝒟ᴿ = Σ_𝒜 s_𝒜 σ_(𝒜). Exists only when the expectations satisfy
/// ⟨Ŝ₀⟩² ≥ Σ_B ⟨Ŝ_B⟩², which is exactly positive semidefiniteness of the
/// result.
pub fn relevant_density(measured: &MeasuredStokes) -> Result<ComplexMatrix2, MultimodeError> {
    let v = &measured.values;
    let intensity_sq = v[0] * v[0];
    let polarization_sq = v[1] * v[1] + v[2] * v[2] + v[3] * v[3];
    if intensity_sq < polarization_sq - 1e-12 * intensity_sq {
        return Err(MultimodeError::NotReconstructible {
            intensity_sq,
            polarization_sq,
        });
    }
    let mut d = ComplexMatrix2::zeros();
    for a in 0..4 {
        d = d + pauli_basis(a).scaled(measured.scaled[a]);
    }
    Ok(d)
}

/// A family of Kraus operators on the single-particle space, each a 2N×2N
/// matrix of 2×2 polarization blocks A_i(m,n) indexed by mode pairs.
#[derive(Clone, Debug)]
pub struct KrausFamily {
    ops: Vec<ComplexMatrixN>,
    n_modes: usize,
}

impl KrausFamily {
    fn validate_shape(ops: &[ComplexMatrixN]) -> Result<usize, MultimodeError> {
        let first = ops.first().ok_or(MultimodeError::EmptyKraus)?;
        if ops.len() > MAX_KRAUS_OPERATORS {
            return Err(MultimodeError::TooManyKraus { count: ops.len() });
        }
        let dim = first.dim();
        if dim % 2 != 0 || dim == 0 {
            return Err(MultimodeError::OddDimension { dim });
        }
        if dim > 2 * MAX_MODES {
            return Err(MultimodeError::TooManyModes { n_modes: dim / 2 });
        }
        for op in ops {
            if op.dim() != dim {
                return Err(MultimodeError::MixedKrausDimensions {
                    expected: dim,
                    found: op.dim(),
                });
            }
        }
        Ok(dim / 2)
    }

    /// Builds a normalized family, enforcing Σᵢ Âᵢ Âᵢ† = Î to 1e-9. The
    /// normalization is stated operator-first, so it constrains the row
    /// space rather than the usual column space.
    pub fn new(ops: Vec<ComplexMatrixN>) -> Result<Self, MultimodeError> {
        let n_modes = Self::validate_shape(&ops)?;
        let dim = 2 * n_modes;
        let mut sum = ComplexMatrixN::zeros(dim);
        for op in &ops {
            let term = op
                .mul(&op.dagger())
                .expect("dimensions were just validated");
            sum = sum.add(&term).expect("dimensions match");
        }
        let defect = sum
            .sub(&ComplexMatrixN::identity(dim))
            .expect("dimensions match")
            .inf_norm();
        if defect > KRAUS_NORMALIZATION_TOL {
            return Err(MultimodeError::NormalizationViolation {
                defect,
                tol: KRAUS_NORMALIZATION_TOL,
            });
        }
        Ok(KrausFamily { ops, n_modes })
    }

    /// Builds a family without the normalization check, for lossy or
    /// amplifying devices whose intensity scale is meaningful.
    pub fn new_unnormalized(ops: Vec<ComplexMatrixN>) -> Result<Self, MultimodeError> {
        let n_modes = Self::validate_shape(&ops)?;
        Ok(KrausFamily { ops, n_modes })
    }

    /// The identity channel on N modes.
    pub fn identity(n_modes: usize) -> Result<Self, MultimodeError> {
        if n_modes == 0 {
            return Err(MultimodeError::NoModes);
        }
        if n_modes > MAX_MODES {
            return Err(MultimodeError::TooManyModes { n_modes });
        }
        Ok(KrausFamily {
            ops: vec![ComplexMatrixN::identity(2 * n_modes)],
            n_modes,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// The (m, n) polarization block of the i-th operator.
    pub fn block(&self, i: usize, m: usize, n: usize) -> ComplexMatrix2 {
        ComplexMatrix2::from_fn(|alpha, beta| self.ops[i].get(2 * m + alpha, 2 * n + beta))
    }
}

/// Builds mode-independent Kraus operators: each 2×2 block repeats on the
/// mode diagonal, A_i(m,n) = δ_{mn} A_i.
pub fn mode_independent_ops(blocks: &[ComplexMatrix2], n_modes: usize) -> Vec<ComplexMatrixN> {
    blocks
        .iter()
        .map(|b| {
            let mut op = ComplexMatrixN::zeros(2 * n_modes);
            for n in 0..n_modes {
                for alpha in 0..2 {
                    for beta in 0..2 {
                        op.set(2 * n + alpha, 2 * n + beta, b.0[alpha][beta]);
                    }
                }
            }
            op
        })
        .collect()
}

fn check_mode_matrix(
    r: &ComplexMatrixN,
    expected_dim: usize,
) -> Result<(), MultimodeError> {
    if r.dim() != expected_dim {
        return Err(MultimodeError::ModeMatrixWrongDimension {
            expected: expected_dim,
            found: r.dim(),
        });
    }
    let defect = r.hermiticity_defect();
    if defect > STATE_GATE * r.inf_norm().max(1.0) {
        return Err(MultimodeError::ModeMatrixNotHermitian { defect });
    }
    let trace = r.trace().re;
    if (trace - 1.0).abs() > MODE_TRACE_TOL {
        return Err(MultimodeError::ModeMatrixTraceNotOne { trace });
    }
    Ok(())
}

/// Per-photon partial Mueller matrix of the mode pair (p, q):
/// [P(p,q)]_{𝒜𝒞} = Σ_{n,ℬ} Δ_{𝒜ℬ}(n) Σᵢ Tr{σ_(ℬ) A_i(n,p) σ_(𝒞) A_i(n,q)†}.
/// Contracting it with a mode matrix R gives the effective Mueller matrix;
/// its conjugate symmetry in (p, q) makes that contraction real for
/// Hermitian R.
fn mode_pair_mueller(
    kraus: &KrausFamily,
    deltas: &[[[f64; 4]; 4]],
    p: usize,
    q: usize,
) -> [[Complex64; 4]; 4] {
    let n_modes = kraus.n_modes();
    let mut out = [[C_ZERO; 4]; 4];
    for a in 0..4 {
        for c in 0..4 {
            let mut total = C_ZERO;
            for n in 0..n_modes {
                for b in 0..4 {
                    let weight = deltas[n][a][b];
                    if weight == 0.0 {
                        continue;
                    }
                    let mut block_sum = C_ZERO;
                    for i in 0..kraus.len() {
                        let anp = kraus.block(i, n, p);
                        let anq = kraus.block(i, n, q);
                        block_sum +=
                            (pauli_basis(b) * anp * pauli_basis(c) * anq.dagger()).trace();
                    }
                    total += block_sum * weight;
                }
            }
            out[a][c] = total;
        }
    }
    out
}

fn deltas_for(frames: &[ModeFrame]) -> Result<Vec<[[f64; 4]; 4]>, MultimodeError> {
    (0..frames.len()).map(|n| delta_matrix(n, frames)).collect()
}

/// Effective single-photon Mueller matrix of a mode-dependent channel with
/// input mode matrix R: M_{𝒜𝒞} = Σ_{p,q} [P(p,q)]_{𝒜𝒞} R_{pq}. With one
/// mode and canonical frame this collapses to the classical Mueller matrix
/// of the Kraus blocks.
pub fn effective_mueller(
    kraus: &KrausFamily,
    r_in: &ComplexMatrixN,
    frames: &[ModeFrame],
) -> Result<MuellerMatrix, MultimodeError> {
    let n = check_mode_count(frames)?;
    if kraus.n_modes() != n {
        return Err(MultimodeError::StateDimensionMismatch {
            state_dim: 2 * kraus.n_modes(),
            expected: 2 * n,
        });
    }
    check_mode_matrix(r_in, n)?;
    let deltas = deltas_for(frames)?;

    let mut m_complex = [[C_ZERO; 4]; 4];
    for p in 0..n {
        for q in 0..n {
            let r_pq = r_in.get(p, q);
            if r_pq == C_ZERO {
                continue;
            }
            let partial = mode_pair_mueller(kraus, &deltas, p, q);
            for a in 0..4 {
                for c in 0..4 {
                    m_complex[a][c] += partial[a][c] * r_pq;
                }
            }
        }
    }

    let mut m = [[0.0; 4]; 4];
    let mut residue = 0.0f64;
    let mut scale = 1.0f64;
    for a in 0..4 {
        for c in 0..4 {
            residue = residue.max(m_complex[a][c].im.abs());
            scale = scale.max(m_complex[a][c].re.abs());
            m[a][c] = m_complex[a][c].re;
        }
    }
    assert!(
        residue <= 1e-10 * scale,
        "effective Mueller matrix has imaginary residue {residue:.3e}; \
         the mode matrix was checked Hermitian, so this is an internal error"
    );
    Ok(MuellerMatrix(m))
}

/// Effective two-photon Mueller matrix, 16×16 in the flat index Φ = 4𝒜 + ℬ.
#[derive(Clone, Debug)]
pub struct TwoPhotonMueller(pub Box<[[f64; 16]; 16]>);

impl TwoPhotonMueller {
    /// Applies the matrix to a flattened two-photon Stokes table.
    pub fn apply(&self, s: &[f64; 16]) -> [f64; 16] {
        std::array::from_fn(|i| (0..16).map(|k| self.0[i][k] * s[k]).sum())
    }

    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &TwoPhotonMueller) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..16 {
            for j in 0..16 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        worst
    }
}

/// Two-photon effective Mueller matrix for independent channels on the two
/// photons and a factorized paraxial input whose mode-pair matrix R is
/// indexed by the flat pair N·a + b. Mode-independent channels factorize it
/// into the Kronecker product of the two classical matrices.
pub fn two_photon_mueller(
    kraus_a: &KrausFamily,
    kraus_b: &KrausFamily,
    r_in: &ComplexMatrixN,
    frames: &[ModeFrame],
) -> Result<TwoPhotonMueller, MultimodeError> {
    let n = check_mode_count(frames)?;
    for kraus in [kraus_a, kraus_b] {
        if kraus.n_modes() != n {
            return Err(MultimodeError::StateDimensionMismatch {
                state_dim: 2 * kraus.n_modes(),
                expected: 2 * n,
            });
        }
    }
    check_mode_matrix(r_in, n * n)?;
    let deltas = deltas_for(frames)?;

    // Cache the per-photon partial matrices over all mode pairs.
    let partial = |kraus: &KrausFamily| -> Vec<[[Complex64; 4]; 4]> {
        let mut table = Vec::with_capacity(n * n);
        for p in 0..n {
            for q in 0..n {
                table.push(mode_pair_mueller(kraus, &deltas, p, q));
            }
        }
        table
    };
    let pa = partial(kraus_a);
    let pb = partial(kraus_b);

    let mut big = vec![[C_ZERO; 16]; 16];
    for ap in 0..n {
        for app in 0..n {
            let block_a = &pa[ap * n + app];
            for bp in 0..n {
                for bpp in 0..n {
                    let r = r_in.get(n * ap + bp, n * app + bpp);
                    if r == C_ZERO {
                        continue;
                    }
                    let block_b = &pb[bp * n + bpp];
                    for a in 0..4 {
                        for c in 0..4 {
                            let left = block_a[a][c] * r;
                            if left == C_ZERO {
                                continue;
                            }
                            for b in 0..4 {
                                for d in 0..4 {
                                    big[4 * a + b][4 * c + d] += left * block_b[b][d];
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    let mut out = Box::new([[0.0; 16]; 16]);
    let mut residue = 0.0f64;
    let mut scale = 1.0f64;
    for i in 0..16 {
        for j in 0..16 {
            residue = residue.max(big[i][j].im.abs());
            scale = scale.max(big[i][j].re.abs());
            out[i][j] = big[i][j].re;
        }
    }
    assert!(
        residue <= 1e-9 * scale,
        "two-photon Mueller matrix has imaginary residue {residue:.3e}; \
         the mode matrix was checked Hermitian, so this is an internal error"
    );
    Ok(TwoPhotonMueller(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{c, kron};
    use crate::mueller::{mueller_from_jones, JonesMatrix};
    use crate::quantum::{scatter_one_photon, singlet_state, two_photon_stokes};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::SQRT_2;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
        c(
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        )
    }

    /// Frame from a random unitary combination of the transverse axes; it
    /// stays inside the analyzer plane.
    fn random_transverse_frame(rng: &mut ChaCha8Rng) -> ModeFrame {
        let a = random_complex(rng);
        let b = random_complex(rng);
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (a, b) = (a / norm, b / norm);
        let eps0 = [a, b, C_ZERO];
        let eps1 = [-b.conj(), a.conj(), C_ZERO];
        ModeFrame::new(eps0, eps1).expect("unitary combinations stay orthonormal")
    }

    fn random_jones(rng: &mut ChaCha8Rng) -> ComplexMatrix2 {
        ComplexMatrix2::from_fn(|_, _| random_complex(rng))
    }

    /// Random valid state: a random Hermitian matrix lifted past its worst
    /// possible eigenvalue (the spectral norm is at most dim times the
    /// largest entry) and normalized to unit trace.
    fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> SingleParticleState {
        let raw = random_mode_matrix(rng, dim);
        let lift = dim as f64 * raw.inf_norm();
        let lifted = raw
            .add(&ComplexMatrixN::identity(dim).scaled(cr(lift)))
            .unwrap();
        let trace = lifted.trace().re;
        SingleParticleState::new(lifted.scaled(cr(1.0 / trace))).unwrap()
    }

    /// Random Hermitian trace-one mode matrix of the given dimension.
    fn random_mode_matrix(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrixN {
        let mut m = ComplexMatrixN::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                let v = random_complex(rng);
                m.set(i, j, v);
            }
        }
        let sym = m.add(&m.dagger()).unwrap().scaled(cr(0.5));
        let shift: f64 = (0..dim).map(|i| sym.get(i, i).re).sum();
        let mut out = sym;
        let bump = (1.0 - shift) / dim as f64;
        for i in 0..dim {
            let v = out.get(i, i) + cr(bump);
            out.set(i, i, v);
        }
        out
    }

    #[test]
    fn canonical_stokes_operators_are_the_paulis() {
        let ops = stokes_operators(&[ModeFrame::canonical()]).unwrap();
        for a in 0..4 {
            let sigma = pauli_basis(a);
            for alpha in 0..2 {
                for beta in 0..2 {
                    assert!(ops[a].matrix().get(alpha, beta) == sigma.0[alpha][beta]);
                }
            }
        }
    }

    #[test]
    fn synthesis_matrix_has_orthonormal_rows() {
        let p = stokes_synthesis();
        for r in 0..4 {
            for s in 0..4 {
                let dot: f64 = (0..6).map(|i| p[r][i] * p[s][i]).sum();
                let expect = if r == s { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn analyzers_form_mutually_unbiased_bases() {
        let f = mub_analyzers();
        for basis in 0..3 {
            for other in 0..3 {
                for i in 0..2 {
                    for j in 0..2 {
                        let overlap = inner3(&f[2 * basis + i], &f[2 * other + j]).norm_sqr();
                        let expect = if basis == other {
                            if i == j {
                                1.0
                            } else {
                                0.0
                            }
                        } else {
                            0.5
                        };
                        assert!((overlap - expect).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn synthesized_operators_match_the_embedded_paulis() {
        // Ω_(𝒜) = Σᵢ P_{𝒜i} |fᵢ⟩⟨fᵢ| equals σ_(𝒜) embedded in 3-space.
        let f = mub_analyzers();
        let p = stokes_synthesis();
        for a in 0..4 {
            let mut omega = [[C_ZERO; 3]; 3];
            for i in 0..6 {
                let d = dyad3(&f[i], &f[i]);
                for r in 0..3 {
                    for s in 0..3 {
                        omega[r][s] += d[r][s] * p[a][i];
                    }
                }
            }
            let expect = embedded_pauli(a);
            for r in 0..3 {
                for s in 0..3 {
                    let want = expect[r][s] * FRAC_1_SQRT_2;
                    assert!((omega[r][s] - want).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn tilted_frame_operators_are_direct_inner_products() {
        let theta = 0.2f64;
        let eps0 = [cr(1.0), C_ZERO, C_ZERO];
        let eps1 = [C_ZERO, cr(theta.cos()), cr(theta.sin())];
        let frame = ModeFrame::new(eps0, eps1).unwrap();
        let ops = stokes_operators(&[frame]).unwrap();
        for a in 0..4 {
            let omega = embedded_pauli(a);
            for alpha in 0..2 {
                for beta in 0..2 {
                    let direct = inner3(frame.epsilon(alpha), &apply3(&omega, frame.epsilon(beta)))
                        * FRAC_1_SQRT_2;
                    assert!((ops[a].matrix().get(alpha, beta) - direct).norm() < 1e-15);
                }
            }
            assert!(ops[a].matrix().hermiticity_defect() < 1e-14);
        }
    }

    #[test]
    fn povm_resolves_the_identity_for_transverse_frames() {
        // The diagonal and circular analyzer dyads carry entries 1/2 computed
        // as (1/√2)², one ulp above 0.5, so the defect is tiny but not zero.
        let frames: Vec<ModeFrame> = (0..3).map(|_| ModeFrame::canonical()).collect();
        assert!(povm_check(&frames).unwrap() < 1e-15);

        let mut r = rng(101);
        for _ in 0..20 {
            let frames: Vec<ModeFrame> =
                (0..2).map(|_| random_transverse_frame(&mut r)).collect();
            assert!(povm_check(&frames).unwrap() < 1e-12);
        }
    }

    #[test]
    fn malformed_frames_are_rejected() {
        let x = [cr(1.0), C_ZERO, C_ZERO];
        let y_short = [C_ZERO, cr(0.9), C_ZERO];
        assert!(matches!(
            ModeFrame::new(x, y_short),
            Err(MultimodeError::FrameNotOrthonormal { .. })
        ));

        let not_orthogonal = [cr(FRAC_1_SQRT_2), cr(FRAC_1_SQRT_2), C_ZERO];
        let x2 = [cr(1.0), C_ZERO, C_ZERO];
        assert!(matches!(
            ModeFrame::new(x2, not_orthogonal),
            Err(MultimodeError::FrameNotOrthonormal { .. })
        ));
    }

    #[test]
    fn frames_complete_three_space() {
        let mut r = rng(102);
        for _ in 0..20 {
            let frame = random_transverse_frame(&mut r);
            assert!(frame.completeness_defect() < 1e-14);
        }
        // An elliptic frame with a longitudinal third vector.
        let eps0 = [cr(FRAC_1_SQRT_2), c(0.0, FRAC_1_SQRT_2), C_ZERO];
        let eps1 = [cr(FRAC_1_SQRT_2), c(0.0, -FRAC_1_SQRT_2), C_ZERO];
        let frame = ModeFrame::new(eps0, eps1).unwrap();
        assert!(frame.completeness_defect() < 1e-15);
        assert!((inner3(frame.epsilon(2), frame.epsilon(2)) - cr(1.0)).norm() < 1e-15);
    }

    #[test]
    fn delta_of_the_canonical_frame_is_exactly_the_identity() {
        let delta = delta_matrix(0, &[ModeFrame::canonical()]).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!(delta[a][b] == expect);
            }
        }
    }

    #[test]
    fn delta_of_the_rotated_frame_is_a_signed_diagonal() {
        // ε₀ = 𝒚, ε₁ = −𝒙: a 90° rotation about the propagation axis flips
        // the sign of the two Paulis that are odd under the exchange.
        let eps0 = [C_ZERO, cr(1.0), C_ZERO];
        let eps1 = [cr(-1.0), C_ZERO, C_ZERO];
        let frame = ModeFrame::new(eps0, eps1).unwrap();
        let delta = delta_matrix(0, &[frame]).unwrap();
        let expect = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
        ];
        for a in 0..4 {
            for b in 0..4 {
                assert!(delta[a][b] == expect[a][b]);
            }
        }
    }

    #[test]
    fn expectation_examples() {
        let frames = [ModeFrame::canonical()];

        let unpolarized =
            SingleParticleState::single_mode(ComplexMatrix2::identity().scaled(0.5)).unwrap();
        let m = expectation_stokes(&unpolarized, &frames).unwrap();
        assert!((m.values[0] - 1.0 / SQRT_2).abs() < 1e-15);
        for a in 1..4 {
            assert!(m.values[a].abs() < 1e-15);
        }
        assert!((m.scaled[0] - 1.0 / SQRT_2).abs() < 1e-15);

        let mut pure = ComplexMatrix2::zeros();
        pure.0[0][0] = cr(1.0);
        let state = SingleParticleState::single_mode(pure).unwrap();
        let m = expectation_stokes(&state, &frames).unwrap();
        assert!((m.values[0] - 1.0 / SQRT_2).abs() < 1e-15);
        assert!((m.values[3] - 1.0 / SQRT_2).abs() < 1e-15);
        assert!(m.values[1].abs() < 1e-15);
        assert!(m.values[2].abs() < 1e-15);
    }

    #[test]
    fn blockwise_expectations_match_the_operator_trace() {
        let mut r = rng(103);
        let frames: Vec<ModeFrame> = (0..3).map(|_| random_transverse_frame(&mut r)).collect();
        let rho = random_state(&mut r, 6);

        let blockwise = expectation_stokes(&rho, &frames).unwrap();
        let ops = stokes_operators(&frames).unwrap();
        for a in 0..4 {
            let full = rho
                .matrix()
                .mul(ops[a].matrix())
                .unwrap()
                .trace()
                .re;
            assert!((blockwise.values[a] - full).abs() < 1e-12);
        }
    }

    #[test]
    fn reduced_density_sums_mode_blocks() {
        // Equal mixture of |0⟩ polarization in mode 0 and |1⟩ in mode 1.
        let mut rho = ComplexMatrixN::zeros(4);
        rho.set(0, 0, cr(0.5));
        rho.set(3, 3, cr(0.5));
        let state = SingleParticleState::new(rho).unwrap();
        let d = reduced_density(&state);
        assert!(d.max_diff(&ComplexMatrix2::identity().scaled(0.5)) < 1e-15);

        let single =
            SingleParticleState::single_mode(ComplexMatrix2::identity().scaled(0.5)).unwrap();
        let d = reduced_density(&single);
        assert!(d.max_diff(&ComplexMatrix2::identity().scaled(0.5)) < 1e-15);
    }

    #[test]
    fn paraxial_reduction_ties_reduced_density_to_expectations() {
        let mut r = rng(104);
        let frames: Vec<ModeFrame> = (0..2).map(|_| ModeFrame::canonical()).collect();
        let rho = random_state(&mut r, 4);
        let d = reduced_density(&rho);
        let m = expectation_stokes(&rho, &frames).unwrap();
        for a in 0..4 {
            let via_reduced = (d * pauli_basis(a)).trace().re;
            assert!((via_reduced - m.values[a]).abs() < 1e-13);
        }
    }

    #[test]
    fn relevant_density_examples() {
        let unpolarized =
            MeasuredStokes::from_expectations([1.0 / SQRT_2, 0.0, 0.0, 0.0]).unwrap();
        let d = relevant_density(&unpolarized).unwrap();
        assert!(d.max_diff(&ComplexMatrix2::identity().scaled(0.5)) < 1e-15);

        // Boundary value: fully polarized along the first axis gives the
        // rank-one projector onto (|0⟩ + |1⟩)/√2.
        let pure = MeasuredStokes::from_expectations([1.0, 1.0, 0.0, 0.0]).unwrap();
        let d = relevant_density(&pure).unwrap();
        let expect = ComplexMatrix2([[cr(0.5), cr(0.5)], [cr(0.5), cr(0.5)]]);
        assert!(d.max_diff(&expect) < 1e-15);
        let det = d.0[0][0] * d.0[1][1] - d.0[0][1] * d.0[1][0];
        assert!(det.norm() < 1e-15);

        assert!(matches!(
            relevant_density(
                &MeasuredStokes::from_expectations([1.0, 1.0, 1.0, 0.0]).unwrap()
            ),
            Err(MultimodeError::NotReconstructible { .. })
        ));

        assert!(matches!(
            MeasuredStokes::from_expectations([0.0, 0.0, 0.0, 0.0]),
            Err(MultimodeError::NonpositiveIntensity { .. })
        ));
    }

    #[test]
    fn relevant_density_reproduces_its_constraints() {
        let mut r = rng(105);
        for _ in 0..50 {
            // Random physical expectations: polarization inside the sphere.
            let s0 = r.random::<f64>() + 0.2;
            let frac = r.random::<f64>();
            let dir: [f64; 3] = std::array::from_fn(|_| r.random::<f64>() * 2.0 - 1.0);
            let norm = (dir.iter().map(|x| x * x).sum::<f64>()).sqrt().max(1e-9);
            let values = [
                s0,
                s0 * frac * dir[0] / norm,
                s0 * frac * dir[1] / norm,
                s0 * frac * dir[2] / norm,
            ];
            let measured = MeasuredStokes::from_expectations(values).unwrap();
            let d = relevant_density(&measured).unwrap();

            assert!(d.hermiticity_defect() < 1e-15);
            assert!((d.trace().re - 1.0).abs() < 1e-14);
            for a in 0..4 {
                let got = (d * pauli_basis(a)).trace().re;
                assert!((got - measured.scaled[a]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kraus_normalization_is_enforced() {
        // Two weighted unitaries satisfy Σ A A† = I.
        let w = 0.3f64;
        let u1 = ComplexMatrixN::identity(2).scaled(cr(w.sqrt()));
        let mut u2 = ComplexMatrixN::zeros(2);
        u2.set(0, 1, cr((1.0 - w).sqrt()));
        u2.set(1, 0, cr(-(1.0 - w).sqrt()));
        assert!(KrausFamily::new(vec![u1.clone(), u2]).is_ok());

        assert!(matches!(
            KrausFamily::new(vec![u1]),
            Err(MultimodeError::NormalizationViolation { .. })
        ));

        let lossy = {
            let mut m = ComplexMatrixN::zeros(2);
            m.set(0, 0, cr(0.5));
            m.set(1, 1, cr(0.5));
            m
        };
        assert!(KrausFamily::new_unnormalized(vec![lossy]).is_ok());

        assert!(matches!(
            KrausFamily::new(vec![]),
            Err(MultimodeError::EmptyKraus)
        ));

        let odd = ComplexMatrixN::identity(3);
        assert!(matches!(
            KrausFamily::new_unnormalized(vec![odd]),
            Err(MultimodeError::OddDimension { .. })
        ));

        let mismatched = vec![ComplexMatrixN::identity(2), ComplexMatrixN::identity(4)];
        assert!(matches!(
            KrausFamily::new_unnormalized(mismatched),
            Err(MultimodeError::MixedKrausDimensions { .. })
        ));

        let too_many: Vec<ComplexMatrixN> =
            (0..17).map(|_| ComplexMatrixN::identity(2)).collect();
        assert!(matches!(
            KrausFamily::new_unnormalized(too_many),
            Err(MultimodeError::TooManyKraus { .. })
        ));
    }

    #[test]
    fn identity_channel_has_identity_mueller() {
        let mut r = rng(106);
        for n in [1usize, 2, 3] {
            let frames: Vec<ModeFrame> = (0..n).map(|_| ModeFrame::canonical()).collect();
            let kraus = KrausFamily::identity(n).unwrap();
            let r_in = random_mode_matrix(&mut r, n);
            let m = effective_mueller(&kraus, &r_in, &frames).unwrap();
            assert!(m.max_diff(&MuellerMatrix::identity()) < 1e-12);
        }
    }

    #[test]
    fn single_mode_channel_is_the_classical_mueller_matrix() {
        let mut r = rng(107);
        for _ in 0..50 {
            let t = random_jones(&mut r);
            let kraus =
                KrausFamily::new_unnormalized(mode_independent_ops(&[t], 1)).unwrap();
            let r_in = ComplexMatrixN::identity(1);
            let m = effective_mueller(&kraus, &r_in, &[ModeFrame::canonical()]).unwrap();
            let classical = mueller_from_jones(&JonesMatrix(t));
            assert!(m.max_diff(&classical) < 1e-10);
        }
    }

    #[test]
    fn mode_independent_channels_reduce_to_the_classical_matrix() {
        let mut r = rng(108);
        let n = 3;
        let frames: Vec<ModeFrame> = (0..n).map(|_| ModeFrame::canonical()).collect();
        for _ in 0..30 {
            let t = random_jones(&mut r);
            let kraus =
                KrausFamily::new_unnormalized(mode_independent_ops(&[t], n)).unwrap();
            let r_in = random_mode_matrix(&mut r, n);
            let m = effective_mueller(&kraus, &r_in, &frames).unwrap();
            let classical = mueller_from_jones(&JonesMatrix(t));
            assert!(m.max_diff(&classical) < 1e-10);
        }
    }

    #[test]
    fn mode_matrix_preconditions_are_checked() {
        let kraus = KrausFamily::identity(2).unwrap();
        let frames = [ModeFrame::canonical(), ModeFrame::canonical()];

        let wrong_trace = ComplexMatrixN::identity(2);
        assert!(matches!(
            effective_mueller(&kraus, &wrong_trace, &frames),
            Err(MultimodeError::ModeMatrixTraceNotOne { .. })
        ));

        let mut skew = ComplexMatrixN::identity(2).scaled(cr(0.5));
        skew.set(0, 1, cr(0.3));
        assert!(matches!(
            effective_mueller(&kraus, &skew, &frames),
            Err(MultimodeError::ModeMatrixNotHermitian { .. })
        ));

        let wrong_dim = ComplexMatrixN::identity(3).scaled(cr(1.0 / 3.0));
        assert!(matches!(
            effective_mueller(&kraus, &wrong_dim, &frames),
            Err(MultimodeError::ModeMatrixWrongDimension { .. })
        ));
    }

    #[test]
    fn sigma_products_are_orthonormal() {
        for a in 0..4 {
            for b in 0..4 {
                for ap in 0..4 {
                    for bp in 0..4 {
                        let left = kron(&pauli_basis(a), &pauli_basis(b));
                        let right = kron(&pauli_basis(ap), &pauli_basis(bp));
                        let overlap = (left.dagger() * right).trace();
                        let expect = if a == ap && b == bp { 1.0 } else { 0.0 };
                        assert!((overlap - cr(expect)).norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn two_photon_identity_channels_give_the_identity() {
        let n = 2;
        let frames: Vec<ModeFrame> = (0..n).map(|_| ModeFrame::canonical()).collect();
        let kraus = KrausFamily::identity(n).unwrap();
        let mut r = rng(109);
        let r_in = random_mode_matrix(&mut r, n * n);
        let m = two_photon_mueller(&kraus, &kraus, &r_in, &frames).unwrap();
        let mut expect = TwoPhotonMueller(Box::new([[0.0; 16]; 16]));
        for i in 0..16 {
            expect.0[i][i] = 1.0;
        }
        assert!(m.max_diff(&expect) < 1e-10);
    }

    #[test]
    fn mode_independent_two_photon_channels_factorize() {
        let mut r = rng(110);
        let n = 2;
        let frames: Vec<ModeFrame> = (0..n).map(|_| ModeFrame::canonical()).collect();
        for _ in 0..10 {
            let ta = random_jones(&mut r);
            let tb = random_jones(&mut r);
            let ka = KrausFamily::new_unnormalized(mode_independent_ops(&[ta], n)).unwrap();
            let kb = KrausFamily::new_unnormalized(mode_independent_ops(&[tb], n)).unwrap();
            let r_in = random_mode_matrix(&mut r, n * n);
            let m = two_photon_mueller(&ka, &kb, &r_in, &frames).unwrap();

            let ma = mueller_from_jones(&JonesMatrix(ta));
            let mb = mueller_from_jones(&JonesMatrix(tb));
            let mut expect = TwoPhotonMueller(Box::new([[0.0; 16]; 16]));
            for a in 0..4 {
                for b in 0..4 {
                    for cc in 0..4 {
                        for d in 0..4 {
                            expect.0[4 * a + b][4 * cc + d] = ma.0[a][cc] * mb.0[b][d];
                        }
                    }
                }
            }
            assert!(m.max_diff(&expect) < 1e-10);
        }
    }

    #[test]
    fn one_sided_channel_agrees_with_the_two_photon_scattering_picture() {
        let mut r = rng(111);
        let frames = [ModeFrame::canonical()];
        let r_in = ComplexMatrixN::identity(1);
        for _ in 0..20 {
            let ta = random_jones(&mut r);
            let ka = KrausFamily::new_unnormalized(mode_independent_ops(&[ta], 1)).unwrap();
            let kb = KrausFamily::identity(1).unwrap();
            let m = two_photon_mueller(&ka, &kb, &r_in, &frames).unwrap();

            // Input: the singlet's two-photon Stokes table, flattened.
            let singlet = singlet_state();
            let d_in = two_photon_stokes(&singlet);
            let mut s_in = [0.0; 16];
            for a in 0..4 {
                for b in 0..4 {
                    s_in[4 * a + b] = d_in.0[a][b];
                }
            }
            let s_out = m.apply(&s_in);

            // The scattering picture produces the same table.
            let classical = mueller_from_jones(&JonesMatrix(ta));
            let out = scatter_one_photon(&singlet, &classical);
            for a in 0..4 {
                for b in 0..4 {
                    let trace =
                        (kron(&pauli_basis(a), &pauli_basis(b)) * out.raw).trace().re;
                    assert!((s_out[4 * a + b] - trace).abs() < 1e-9);
                }
            }
        }
    }
}
