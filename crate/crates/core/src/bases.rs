//! The constant matrix families everything else is expressed in: the standard
//! basis ε of 2×2 matrices, the normalized Pauli basis σ, the change-of-basis
//! Λ between them, the structure matrices Υ, the 16 Hermitian Γ matrices, the
//! 4×4 standard basis E, and the Bell matrix B.
//!
//! Every table is computed once from its defining formula and then compared
//! against its known closed form; a mismatch aborts the process, so an index
//! convention bug cannot survive initialization. The same checks back the
//! `selftest` subcommand of the CLI.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::algebra::{c, cr, hs_inner, kron, ComplexMatrix2, ComplexMatrix4, C_I, C_ONE, C_ZERO};

/// Greek basis index, valid values 0 through 3. Out-of-range values panic via
/// bounds checks in the table lookups.
pub type BasisIndex = usize;

/// Unnormalized Pauli matrices with entries in {0, ±1, ±i}; all constant
/// tables are assembled from these so that entries stay exactly representable
/// until the single final scaling.
pub(crate) fn pauli_unnormalized(mu: BasisIndex) -> ComplexMatrix2 {
    let m = [
        [[C_ONE, C_ZERO], [C_ZERO, C_ONE]],
        [[C_ZERO, C_ONE], [C_ONE, C_ZERO]],
        [[C_ZERO, c(0.0, -1.0)], [C_I, C_ZERO]],
        [[C_ONE, C_ZERO], [C_ZERO, c(-1.0, 0.0)]],
    ];
    ComplexMatrix2(m[mu])
}

/// The four single-entry basis matrices ε_(μ), with the 1 at (μ/2, μ%2).
pub fn epsilon_basis(mu: BasisIndex) -> ComplexMatrix2 {
    assert!(mu < 4, "basis index out of range: {mu}");
    let mut m = ComplexMatrix2::zeros();
    m.0[mu / 2][mu % 2] = C_ONE;
    m
}

/// The normalized Pauli basis σ_(μ) = (unnormalized Pauli)/√2, orthonormal
/// under the Hilbert-Schmidt inner product.
pub fn pauli_basis(mu: BasisIndex) -> ComplexMatrix2 {
    pauli_unnormalized(mu).scaled(FRAC_1_SQRT_2)
}

struct ConstantTables {
    lambda: ComplexMatrix4,
    upsilon: [ComplexMatrix4; 4],
    gamma: [ComplexMatrix4; 16],
    bell: ComplexMatrix4,
}

static TABLES: OnceLock<ConstantTables> = OnceLock::new();

fn tables() -> &'static ConstantTables {
    TABLES.get_or_init(|| {
        let t = build_tables();
        for check in run_self_checks(&t) {
            if !check.passed {
                panic!(
                    "constant-table self check '{}' failed: {}",
                    check.name, check.detail
                );
            }
        }
        t
    })
}

/// Λ before the 1/√2 factor; entries are in {0, ±1, ±i}.
fn lambda_unscaled() -> ComplexMatrix4 {
    ComplexMatrix4::from_fn(|alpha, mu| {
        (epsilon_basis(alpha).transpose() * pauli_unnormalized(mu)).trace()
    })
}

fn build_tables() -> ConstantTables {
    let lambda = lambda_unscaled().scaled(FRAC_1_SQRT_2);

    // Tr{σ_μ σ_α σ_β} = (1/√2)³ Tr{p_μ p_α p_β}; the unnormalized trace is a
    // Gaussian integer, so each entry is an exact multiple of 1/√2.
    let upsilon = core::array::from_fn(|mu| {
        ComplexMatrix4::from_fn(|alpha, beta| {
            let t = (pauli_unnormalized(mu) * pauli_unnormalized(alpha) * pauli_unnormalized(beta))
                .trace();
            t * cr(0.5) * cr(FRAC_1_SQRT_2)
        })
    });

    // Γ_(μν) = Λ†(σ_μ ⊗ σ_ν*)Λ = (1/4)·L†(p_μ ⊗ p_ν*)L with L = √2·Λ, so the
    // entries are quarter-Gaussian-integers and relations like
    // [Γ_(μν)]₀₀ = δ_{μν}/2 hold exactly in floating point.
    let l = lambda_unscaled();
    let gamma = core::array::from_fn(|a| {
        let (mu, nu) = (a / 4, a % 4);
        (l.dagger() * kron(&pauli_unnormalized(mu), &pauli_unnormalized(nu).conj()) * l)
            .scaled(0.25)
    });

    // Bell matrix: row α holds the coordinates of the α-th Bell ket in the
    // product basis |2i+j⟩ = |ij⟩.
    let bell_rows: [[f64; 4]; 4] = [
        [1.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, -1.0],
        [0.0, 1.0, 1.0, 0.0],
        [0.0, 1.0, -1.0, 0.0],
    ];
    let bell = ComplexMatrix4::from_fn(|i, j| cr(bell_rows[i][j] * FRAC_1_SQRT_2));

    ConstantTables {
        lambda,
        upsilon,
        gamma,
        bell,
    }
}

/// The unitary change of basis Λ with Λ_{αμ} = Tr{ε_(α)ᵀ σ_(μ)}; its μ-th
/// column is the vectorized σ_(μ).
pub fn lambda_matrix() -> ComplexMatrix4 {
    tables().lambda
}

/// The structure matrix Υ_(μ) with entries [Υ_(μ)]_{αβ} = Tr{σ_(μ)σ_(α)σ_(β)}.
pub fn upsilon_matrix(mu: BasisIndex) -> ComplexMatrix4 {
    tables().upsilon[mu]
}

/// The Hermitian matrix Γ_(μν) = Λ†(σ_(μ) ⊗ σ_(ν)*)Λ. The 16 of them are
/// orthonormal under the Hilbert-Schmidt inner product.
pub fn gamma_matrix(mu: BasisIndex, nu: BasisIndex) -> ComplexMatrix4 {
    assert!(mu < 4 && nu < 4, "basis index out of range: ({mu},{nu})");
    tables().gamma[4 * mu + nu]
}

/// All 16 Γ matrices, stored under the flat index 𝒜 = 4μ + ν.
pub fn gamma_table() -> &'static [ComplexMatrix4; 16] {
    &tables().gamma
}

/// Independent construction of Γ_(μν) as Υ_(μ)ᵀΥ_(ν); agrees with
/// [`gamma_matrix`] to 1e-14 and exists to cross-check it.
pub fn gamma_matrix_alt(mu: BasisIndex, nu: BasisIndex) -> ComplexMatrix4 {
    upsilon_matrix(mu).transpose() * upsilon_matrix(nu)
}

/// The unitary Bell matrix B; row α lists the coordinates of the α-th Bell
/// ket, so the α = 3 row is the singlet (0, 1, −1, 0)/√2.
pub fn bell_matrix() -> ComplexMatrix4 {
    tables().bell
}

/// Single-entry basis matrix E_(μν) of the 4×4 matrices, with the 1 at (μ,ν).
/// Satisfies Per[E_(μν)] = ε_(μ) ⊗ ε_(ν).
pub fn e_basis(mu: BasisIndex, nu: BasisIndex) -> ComplexMatrix4 {
    assert!(mu < 4 && nu < 4, "basis index out of range: ({mu},{nu})");
    let mut m = ComplexMatrix4::zeros();
    m.0[mu][nu] = C_ONE;
    m
}

/// Outcome of one table self check.
#[derive(Clone, Debug)]
pub struct SelfCheckResult {
    /// Stable identifier, printed by the CLI selftest.
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed deviation and the limit it was held to.
    pub detail: String,
}

fn check(name: &'static str, worst: f64, limit: f64) -> SelfCheckResult {
    SelfCheckResult {
        name,
        passed: worst <= limit,
        detail: format!("max deviation {worst:.3e}, limit {limit:.1e}"),
    }
}

fn run_self_checks(t: &ConstantTables) -> Vec<SelfCheckResult> {
    let mut results = Vec::new();
    let h = FRAC_1_SQRT_2;

    let lambda_golden = ComplexMatrix4([
        [cr(h), C_ZERO, C_ZERO, cr(h)],
        [C_ZERO, cr(h), c(0.0, -h), C_ZERO],
        [C_ZERO, cr(h), c(0.0, h), C_ZERO],
        [cr(h), C_ZERO, C_ZERO, cr(-h)],
    ]);
    results.push(check(
        "lambda-golden",
        t.lambda.max_diff(&lambda_golden),
        1e-15,
    ));
    results.push(check(
        "lambda-unitary",
        (t.lambda.dagger() * t.lambda)
            .max_diff(&ComplexMatrix4::identity()),
        1e-15,
    ));

    let upsilon_golden = [
        ComplexMatrix4::identity().scaled(h),
        ComplexMatrix4([
            [C_ZERO, cr(h), C_ZERO, C_ZERO],
            [cr(h), C_ZERO, C_ZERO, C_ZERO],
            [C_ZERO, C_ZERO, C_ZERO, c(0.0, h)],
            [C_ZERO, C_ZERO, c(0.0, -h), C_ZERO],
        ]),
        ComplexMatrix4([
            [C_ZERO, C_ZERO, cr(h), C_ZERO],
            [C_ZERO, C_ZERO, C_ZERO, c(0.0, -h)],
            [cr(h), C_ZERO, C_ZERO, C_ZERO],
            [C_ZERO, c(0.0, h), C_ZERO, C_ZERO],
        ]),
        ComplexMatrix4([
            [C_ZERO, C_ZERO, C_ZERO, cr(h)],
            [C_ZERO, C_ZERO, c(0.0, h), C_ZERO],
            [C_ZERO, c(0.0, -h), C_ZERO, C_ZERO],
            [cr(h), C_ZERO, C_ZERO, C_ZERO],
        ]),
    ];
    let worst_upsilon = (0..4)
        .map(|mu| t.upsilon[mu].max_diff(&upsilon_golden[mu]))
        .fold(0.0, f64::max);
    results.push(check("upsilon-golden", worst_upsilon, 1e-15));

    let worst_gamma_alt = (0..16)
        .map(|a| {
            let (mu, nu) = (a / 4, a % 4);
            t.gamma[a].max_diff(&(t.upsilon[mu].transpose() * t.upsilon[nu]))
        })
        .fold(0.0, f64::max);
    results.push(check("gamma-two-constructions", worst_gamma_alt, 1e-14));

    let worst_gamma_ortho = (0..16)
        .flat_map(|a| (0..16).map(move |b| (a, b)))
        .map(|(a, b)| {
            let expect = if a == b { 1.0 } else { 0.0 };
            (hs_inner(&t.gamma[a], &t.gamma[b]) - cr(expect)).norm()
        })
        .fold(0.0, f64::max);
    results.push(check("gamma-orthonormal", worst_gamma_ortho, 1e-13));

    let worst_gamma_00 = (0..16)
        .map(|a| {
            let expect = if a / 4 == a % 4 { cr(0.5) } else { C_ZERO };
            (t.gamma[a].0[0][0] - expect).norm()
        })
        .fold(0.0, f64::max);
    results.push(check("gamma-first-entry-exact", worst_gamma_00, 0.0));

    let mut worst_complete = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let sum: Complex64 = (0..4)
                        .map(|mu| {
                            let s = pauli_basis(mu);
                            s.0[i][j] * s.0[k][l].conj()
                        })
                        .sum();
                    let expect = if i == k && j == l { C_ONE } else { C_ZERO };
                    worst_complete = worst_complete.max((sum - expect).norm());
                }
            }
        }
    }
    results.push(check("pauli-completeness", worst_complete, 1e-15));

    results.push(check(
        "bell-unitary",
        (t.bell.dagger() * t.bell).max_diff(&ComplexMatrix4::identity()),
        1e-15,
    ));

    results
}

/// Rebuilds the constant tables from their defining formulas and reruns every
/// golden-form comparison, returning one result per check.
pub fn self_test() -> Vec<SelfCheckResult> {
    run_self_checks(tables())
}
