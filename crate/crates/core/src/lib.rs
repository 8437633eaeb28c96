//! Polarization calculus built on the correspondence between Jones, Mueller,
//! and coherency representations of optical devices and light beams.
//!
//! The crate is organized bottom-up:
//!
//! * [`algebra`]: fixed-size complex matrices, the Kronecker product with the
//!   double-index convention used throughout, the `Per` row exchange, and a
//!   Jacobi eigensolver for Hermitian matrices.
//! * [`bases`]: the constant matrix families (standard basis ε, normalized
//!   Pauli basis σ, the change-of-basis Λ, the structure matrices Υ, the 16
//!   Γ matrices, the Bell matrix B), built from first principles and
//!   self-checked against their known closed forms.
//! * [`polarization`]: Stokes vectors in several sign conventions and the
//!   2×2 coherency matrix J.
//! * [`mueller`]: Mueller matrices from Jones matrices, the F/H/C companion
//!   matrices, and physical-realizability tests.
//! * [`decomposition`]: spectral decomposition of a Mueller matrix into at
//!   most four Mueller-Jones factors, with the associated Kraus operators.
//! * [`quantum`]: two-photon states, one-sided channel action, and Mueller
//!   reconstruction from a single entangled probe.
//! * [`multimode`]: the 2N-mode Stokes-operator model, polarization POVM,
//!   and effective Mueller matrices in and beyond the paraxial limit.
//! * [`cli`]: the line-delimited document format and subcommand logic behind
//!   the `mueller-stokes` binary.

pub mod algebra;
pub mod bases;
pub mod cli;
pub mod decomposition;
pub mod mueller;
pub mod multimode;
pub mod polarization;
pub mod quantum;

pub use num_complex::Complex64;
