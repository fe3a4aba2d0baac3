//! Symmetry-projected quantum metrology at exactly-diagonalizable scale.
//!
//! States confined to one symmetry sector, probed by a generator that maps the
//! sector entirely onto its complement, have a quantum Fisher information equal
//! to `4⟨G²⟩` whatever their purity, and the sector projector itself is an
//! optimal observable. This crate builds the objects needed to check that
//! statement numerically:
//!
//! - [`operators`]: labeled Hilbert spaces, dense operators, density operators,
//!   spectral decomposition and unitary evolution.
//! - [`symmetry`]: parity, magnetization and boson-number projectors, and the
//!   sector-support / off-diagonality checks.
//! - [`metrology`]: QFI, signal-to-noise, projector sensitivity curves, the
//!   equality-chain verifier and the separability witness.
//! - [`spins`]: spin-1/2 Hamiltonians, the Dicke sector, one-axis twisting and
//!   quasi-adiabatic ramps.
//! - [`bosons`]: truncated Fock spaces for paired bosonic modes, tunneling
//!   generator and the closed-form condensate QFI.
//! - [`circuit`]: CNOT-ladder parity extraction with an ancilla and
//!   post-selection.

pub mod bosons;
pub mod circuit;
mod error;
pub mod metrology;
pub mod operators;
pub mod spins;
pub mod symmetry;
mod tolerance;

pub use error::{Error, Result};
pub use tolerance::Tolerances;

/// Complex scalar used throughout.
pub type Complex = faer::c64;
/// Dense complex matrix storage.
pub type Matrix = faer::Mat<Complex>;
