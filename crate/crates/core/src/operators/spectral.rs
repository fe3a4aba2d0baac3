use faer::Side;

use crate::operators::operator::max_abs_diff;
use crate::operators::{HilbertSpace, Operator, HERMITIAN_TOL};
use crate::{Complex, Error, Matrix, Result};

/// Eigen-decomposition `A = V diag(λ) V†` of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    space: HilbertSpace,
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
}

impl SpectralDecomposition {
    /// Assembles a decomposition whose eigenvalues are already ascending.
    pub(crate) fn from_parts(space: HilbertSpace, eigenvalues: Vec<f64>, eigenvectors: Matrix) -> Self {
        debug_assert!(eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        Self {
            space,
            eigenvalues,
            eigenvectors,
        }
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unitary whose columns are the eigenvectors, in eigenvalue order.
    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, k: usize) -> Vec<Complex> {
        self.eigenvectors.col(k).iter().copied().collect()
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> Complex) -> Operator {
        let v = &self.eigenvectors;
        let n = self.dim();
        let fv: Vec<Complex> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let scaled = Matrix::from_fn(n, n, |i, k| v[(i, k)] * fv[k]);
        Operator::from_matrix_unchecked(self.space.clone(), &scaled * v.adjoint())
    }

    pub fn reconstruct(&self) -> Operator {
        self.map(|l| Complex::new(l, 0.0))
    }

    /// `e^{-iAt}`.
    pub fn propagator(&self, t: f64) -> Operator {
        self.map(|l| Complex::from_polar(1.0, -l * t))
    }

    /// max |V†V - 𝟙|.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.dim();
        let gram = self.eigenvectors.adjoint() * &self.eigenvectors;
        max_abs_diff(&gram, &Matrix::identity(n, n))
    }

    /// Eigenvalue groups whose adjacent members differ by at most `gap`.
    /// Returns index ranges into the ascending eigenvalue list.
    pub fn degenerate_groups(&self, gap: f64) -> Vec<std::ops::Range<usize>> {
        let mut groups = Vec::new();
        let mut start = 0;
        for k in 1..=self.dim() {
            if k == self.dim() || self.eigenvalues[k] - self.eigenvalues[k - 1] > gap {
                groups.push(start..k);
                start = k;
            }
        }
        groups
    }
}

/// Diagonalizes a Hermitian operator; eigenvalues come back ascending.
pub fn spectral_decompose(a: &Operator) -> Result<SpectralDecomposition> {
    a.ensure_hermitian(HERMITIAN_TOL)?;
    let (eigenvalues, eigenvectors) = hermitian_eigen(a.matrix())?;
    Ok(SpectralDecomposition {
        space: a.space().clone(),
        eigenvalues,
        eigenvectors,
    })
}

/// Ascending eigenpairs of a matrix assumed Hermitian (lower triangle is read).
pub(crate) fn hermitian_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigensolver)?;
    let values: Vec<f64> = evd.S().column_vector().iter().map(|l| l.re).collect();
    let vectors = evd.U();
    let n = values.len();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let sorted = order.iter().map(|&k| values[k]).collect();
    Ok((sorted, Matrix::from_fn(n, n, |i, k| vectors[(i, order[k])])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{pauli_on_site, random_hermitian, Axis};

    #[test]
    fn pauli_z_spectrum() {
        let z = pauli_on_site(Axis::Z, 0, 1).unwrap();
        let d = spectral_decompose(&z).unwrap();
        assert_eq!(d.eigenvalues(), &[-1.0, 1.0]);
    }

    #[test]
    fn identity_spectrum() {
        let id = Operator::identity(HilbertSpace::spin_register(3).unwrap());
        let d = spectral_decompose(&id).unwrap();
        assert!(d.eigenvalues().iter().all(|&l| (l - 1.0).abs() < 1e-14));
        assert!(d.orthonormality_residual() < 1e-12);
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let space = HilbertSpace::spin_register(3).unwrap();
        for seed in 0..5 {
            let a = random_hermitian(space.clone(), seed);
            let d = spectral_decompose(&a).unwrap();
            assert!(d.reconstruct().distance(&a).unwrap() <= 1e-10);
            assert!(d.orthonormality_residual() <= 1e-10);
            assert!(d.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let space = HilbertSpace::spin_register(1).unwrap();
        let a = Operator::from_fn(space, |i, j| Complex::new((i + 2 * j) as f64, 0.0));
        assert!(matches!(spectral_decompose(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn degenerate_grouping() {
        let space = HilbertSpace::spin_register(2).unwrap();
        let a = Operator::diagonal(space, &[0.0, 1.0, 1.0 + 1e-12, 3.0]).unwrap();
        let d = spectral_decompose(&a).unwrap();
        assert_eq!(d.degenerate_groups(1e-10), vec![0..1, 1..3, 3..4]);
    }
}
