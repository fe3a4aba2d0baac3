use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::operators::{DensityOperator, HilbertSpace, Operator};
use crate::symmetry::SectorProjector;
use crate::{Complex, Error, Matrix, Result};

/// Seeded generator used for every randomized construction in the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// d × cols matrix of standard complex Gaussians (unit variance per entry).
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = Matrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            m[(i, j)] = Complex::new(re * scale, im * scale);
        }
    }
    m
}

fn gram_density(space: HilbertSpace, y: &Matrix) -> DensityOperator {
    let rho = y * y.adjoint();
    let op = Operator::from_matrix_unchecked(space, rho);
    let trace = op.trace().re;
    DensityOperator::from_trusted(op.scale_real(1.0 / trace))
}

/// ρ = P X X† P / Tr(P X X† P) with X a seeded complex Gaussian of width `rank`.
pub fn random_density_in_sector(projector: &SectorProjector, rank: usize, seed: u64) -> Result<DensityOperator> {
    let sector_dim = projector.rank();
    if rank == 0 || rank > sector_dim {
        return Err(Error::InvalidRank { rank, sector_dim });
    }
    let p = projector.op();
    let x = gaussian_matrix(p.dim(), rank, &mut rng(seed));
    let y = p.matrix() * &x;
    Ok(gram_density(p.space().clone(), &y))
}

/// Random mixed state of the given rank on the whole space.
pub fn random_density(space: HilbertSpace, rank: usize, seed: u64) -> Result<DensityOperator> {
    let dim = space.dim();
    if rank == 0 || rank > dim {
        return Err(Error::InvalidRank { rank, sector_dim: dim });
    }
    let x = gaussian_matrix(dim, rank, &mut rng(seed));
    Ok(gram_density(space, &x))
}

/// Random Hermitian operator (X + X†)/2 with Gaussian X.
pub fn random_hermitian(space: HilbertSpace, seed: u64) -> Operator {
    let dim = space.dim();
    let x = gaussian_matrix(dim, dim, &mut rng(seed));
    Operator::from_fn(space, |i, j| (x[(i, j)] + x[(j, i)].conj()) * 0.5)
}

/// Normalized random state vector.
pub fn random_state_vector(dim: usize, seed: u64) -> Vec<Complex> {
    let x = gaussian_matrix(dim, 1, &mut rng(seed));
    let norm = x.col(0).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    x.col(0).iter().map(|z| z / norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::{is_supported_in_sector, parity_projector, Parity};
    use crate::operators::Axis;

    #[test]
    fn deterministic_per_seed() {
        let p = parity_projector(Axis::X, Parity::Even, 3).unwrap();
        let a = random_density_in_sector(&p, 2, 11).unwrap();
        let b = random_density_in_sector(&p, 2, 11).unwrap();
        let c = random_density_in_sector(&p, 2, 12).unwrap();
        assert_eq!(a.op().distance(b.op()).unwrap(), 0.0);
        assert!(a.op().distance(c.op()).unwrap() > 1e-3);
    }

    #[test]
    fn rank_one_in_rank_one_sector_is_pure() {
        let p = crate::symmetry::magnetization_projector(1.0, 2).unwrap();
        assert_eq!(p.rank(), 1);
        let rho = random_density_in_sector(&p, 1, 3).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sector_states_are_mixed_and_supported() {
        let p = parity_projector(Axis::X, Parity::Even, 4).unwrap();
        let rho = random_density_in_sector(&p, 3, 5).unwrap();
        assert!(rho.purity() < 1.0 - 1e-3);
        assert!(is_supported_in_sector(&rho, &p, 1e-12).unwrap().supported);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!(rho.eigenvalues()[0] > -1e-12);
    }

    #[test]
    fn rank_bounds() {
        let p = parity_projector(Axis::X, Parity::Even, 2).unwrap();
        assert!(matches!(
            random_density_in_sector(&p, 3, 0),
            Err(Error::InvalidRank { rank: 3, sector_dim: 2 })
        ));
        assert!(random_density_in_sector(&p, 0, 0).is_err());
    }
}
