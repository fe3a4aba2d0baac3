//! Hilbert-space algebra: spaces, dense operators, states, spectra, evolution.

mod density;
pub mod dump;
mod operator;
mod random;
mod space;
mod spectral;
mod spin;

pub use density::{evolve, expectation, variance, DensityOperator};
pub(crate) use density::{second_moment, Spectrum, Support};
pub use operator::{tensor, Operator, HERMITIAN_TOL};
pub(crate) use operator::{max_abs, trace_of_product};
#[cfg(test)]
pub(crate) use operator::max_abs_diff;
pub use random::{
    gaussian_matrix, random_density, random_density_in_sector, random_hermitian, random_state_vector, rng,
};
pub use space::{HilbertSpace, MAX_REGISTER_SPINS};
pub(crate) use space::ensure_same;
pub use spectral::{spectral_decompose, SpectralDecomposition};
pub(crate) use spectral::hermitian_eigen;
pub use spin::{
    collective_spin, pauli_matrix, pauli_on_site, pauli_string, polarized_qubit, product_state, single_site, Axis,
};
pub(crate) use spin::{bit_of, site_mask};
