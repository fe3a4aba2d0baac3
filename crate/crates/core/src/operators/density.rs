use std::sync::{Arc, OnceLock};

use crate::operators::operator::{max_abs_diff, trace_of_product};
use crate::operators::space::ensure_same;
use crate::operators::{spectral_decompose, HilbertSpace, Operator, SpectralDecomposition};
use crate::{Complex, Error, Matrix, Result, Tolerances};

/// Eigenpairs spanning the support of ρ, with everything orthogonal to
/// `vectors` known to carry exactly zero weight.
#[derive(Clone, Debug)]
pub(crate) struct Support {
    pub probs: Vec<f64>,
    /// d × r, orthonormal columns.
    pub vectors: Matrix,
}

#[derive(Clone, Debug)]
pub(crate) enum Spectrum {
    Full(SpectralDecomposition),
    Support(Support),
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    op: Operator,
    spectrum: OnceLock<Arc<Spectrum>>,
}

impl DensityOperator {
    /// Validates with the default [`Tolerances`].
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_tolerances(op, &Tolerances::default())
    }

    pub fn with_tolerances(op: Operator, tol: &Tolerances) -> Result<Self> {
        let residual = op.hermiticity_residual();
        if residual > tol.hermitian * op.max_abs().max(1.0) {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (max |ρ - ρ†| = {residual:e})"
            )));
        }
        let op = op.hermitian_part();
        let trace = op.trace().re;
        if (trace - 1.0).abs() > tol.trace {
            return Err(Error::InvalidDensity(format!("trace is {trace}, expected 1")));
        }
        let decomposition = spectral_decompose(&op)?;
        let min = decomposition.eigenvalues()[0];
        if min < -tol.positivity {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        let spectrum = OnceLock::new();
        let _ = spectrum.set(Arc::new(Spectrum::Full(decomposition)));
        Ok(Self { op, spectrum })
    }

    /// |ψ⟩⟨ψ| for a nonzero vector, normalized here.
    pub fn pure(space: HilbertSpace, psi: &[Complex]) -> Result<Self> {
        Self::from_ensemble(space, &[1.0], &[psi.to_vec()])
    }

    /// Σ_k p_k |v_k⟩⟨v_k| for orthogonal `vectors` (normalized here) and
    /// nonnegative weights (renormalized to sum one).
    pub fn from_ensemble(space: HilbertSpace, probs: &[f64], vectors: &[Vec<Complex>]) -> Result<Self> {
        let dim = space.dim();
        if probs.len() != vectors.len() || probs.is_empty() {
            return Err(Error::InvalidDensity("ensemble weights and vectors disagree".into()));
        }
        if probs.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
            return Err(Error::InvalidDensity("ensemble weights must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDensity("ensemble weights sum to zero".into()));
        }
        let mut kept_probs = Vec::new();
        let mut columns = Vec::new();
        for (&p, v) in probs.iter().zip(vectors) {
            if v.len() != dim {
                return Err(Error::ShapeMismatch {
                    rows: v.len(),
                    cols: 1,
                    dim,
                });
            }
            let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::InvalidDensity("zero-norm ensemble vector".into()));
            }
            if p == 0.0 {
                continue;
            }
            kept_probs.push(p / total);
            columns.push(v.iter().map(|x| x / norm).collect::<Vec<_>>());
        }
        let r = columns.len();
        let vectors = Matrix::from_fn(dim, r, |i, k| columns[k][i]);
        let gram = vectors.adjoint() * &vectors;
        let overlap = max_abs_diff(&gram, &Matrix::identity(r, r));
        if overlap > 1e-10 {
            return Err(Error::InvalidDensity(format!(
                "ensemble vectors are not orthogonal (overlap {overlap:e})"
            )));
        }
        Ok(Self::from_support(
            space,
            Support {
                probs: kept_probs,
                vectors,
            },
        ))
    }

    /// Convex combination Σ w_k ρ_k with weights renormalized to one.
    pub fn mixture(components: &[(f64, &DensityOperator)]) -> Result<Self> {
        let (_, first) = components
            .first()
            .ok_or_else(|| Error::InvalidDensity("empty mixture".into()))?;
        let total: f64 = components.iter().map(|(w, _)| *w).sum();
        if components.iter().any(|(w, _)| *w < 0.0) || total <= 0.0 {
            return Err(Error::InvalidDensity("mixture weights must be nonnegative".into()));
        }
        let mut acc = Operator::zeros(first.space().clone());
        for (w, rho) in components {
            ensure_same(first.space(), rho.space())?;
            acc = &acc + &rho.op.scale_real(w / total);
        }
        Ok(Self::from_trusted(acc))
    }

    /// 𝟙/d.
    pub fn maximally_mixed(space: HilbertSpace) -> Self {
        let d = space.dim();
        let probs = vec![1.0 / d as f64; d];
        Self::from_support(
            space,
            Support {
                probs,
                vectors: Matrix::identity(d, d),
            },
        )
    }

    /// Builds ρ = V diag(p) V† from a known orthonormal support.
    pub(crate) fn from_support(space: HilbertSpace, support: Support) -> Self {
        let v = &support.vectors;
        let (d, r) = (v.nrows(), v.ncols());
        let weighted = Matrix::from_fn(d, r, |i, k| v[(i, k)] * support.probs[k]);
        let matrix = &weighted * v.adjoint();
        let op = Operator::from_matrix_unchecked(space, matrix).hermitian_part();
        let spectrum = OnceLock::new();
        let _ = spectrum.set(Arc::new(Spectrum::Support(support)));
        Self { op, spectrum }
    }

    /// Wraps the output of a trace- and positivity-preserving computation.
    pub(crate) fn from_trusted(op: Operator) -> Self {
        Self {
            op: op.hermitian_part(),
            spectrum: OnceLock::new(),
        }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn matrix(&self) -> &Matrix {
        self.op.matrix()
    }

    pub fn space(&self) -> &HilbertSpace {
        self.op.space()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        let m = self.matrix();
        let mut acc = 0.0;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                acc += m[(i, j)].norm_sqr();
            }
        }
        acc
    }

    pub fn trace(&self) -> f64 {
        self.op.trace().re
    }

    pub(crate) fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| {
            let d = spectral_decompose(&self.op).expect("density operators are Hermitian");
            Arc::new(Spectrum::Full(d))
        })
    }

    /// Eigenvalues of ρ, ascending, including the implicit zeros of a known
    /// low-rank support.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self.spectrum() {
            Spectrum::Full(d) => d.eigenvalues().to_vec(),
            Spectrum::Support(s) => {
                let mut all = vec![0.0; self.dim() - s.probs.len()];
                all.extend_from_slice(&s.probs);
                all.sort_by(f64::total_cmp);
                all
            }
        }
    }

    /// Eigenpairs with eigenvalue above `threshold`.
    pub(crate) fn support_above(&self, threshold: f64) -> Support {
        let (probs, vectors) = match self.spectrum() {
            Spectrum::Full(d) => (d.eigenvalues(), d.eigenvectors()),
            Spectrum::Support(s) => (&s.probs[..], &s.vectors),
        };
        let keep: Vec<usize> = (0..probs.len()).filter(|&k| probs[k] > threshold).collect();
        Support {
            probs: keep.iter().map(|&k| probs[k]).collect(),
            vectors: Matrix::from_fn(vectors.nrows(), keep.len(), |i, c| vectors[(i, keep[c])]),
        }
    }

    /// Uhlmann fidelity (Tr √(√ρ σ √ρ))².
    ///
    /// Evaluated on the support of the lower-rank argument so that rounding
    /// noise in the kernel does not leak in through the square roots.
    pub fn fidelity(&self, other: &DensityOperator) -> Result<f64> {
        ensure_same(self.space(), other.space())?;
        const SUPPORT_FLOOR: f64 = 1e-14;
        let mine = self.support_above(SUPPORT_FLOOR);
        let theirs = other.support_above(SUPPORT_FLOOR);
        let (support, sigma) = if mine.probs.len() <= theirs.probs.len() {
            (mine, other)
        } else {
            (theirs, self)
        };
        let v = &support.vectors;
        let r = v.ncols();
        let sqrt_p: Vec<f64> = support.probs.iter().map(|p| p.sqrt()).collect();
        let projected = v.adjoint() * sigma.matrix() * v;
        let m = Matrix::from_fn(r, r, |i, j| {
            let sym = (projected[(i, j)] + projected[(j, i)].conj()) * 0.5;
            sym * (sqrt_p[i] * sqrt_p[j])
        });
        let evd = m
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|_| Error::Eigensolver)?;
        let root_sum: f64 = evd.S().column_vector().iter().map(|mu| mu.re.max(0.0).sqrt()).sum();
        Ok(root_sum * root_sum)
    }

    /// U ρ U† for a unitary U on the same space. Known supports are carried along.
    pub(crate) fn conjugate_by(&self, unitary: &Operator) -> Self {
        let u = unitary.matrix();
        if let Spectrum::Support(s) = self.spectrum() {
            let vectors = u * &s.vectors;
            return Self::from_support(
                self.space().clone(),
                Support {
                    probs: s.probs.clone(),
                    vectors,
                },
            );
        }
        let m = u * self.matrix() * u.adjoint();
        Self::from_trusted(Operator::from_matrix_unchecked(self.space().clone(), m))
    }
}

/// Tr(ρO).
pub fn expectation(rho: &DensityOperator, o: &Operator) -> Result<Complex> {
    ensure_same(rho.space(), o.space())?;
    Ok(trace_of_product(rho.matrix(), o.matrix()))
}

/// ⟨O²⟩ - ⟨O⟩² for Hermitian O.
pub fn variance(rho: &DensityOperator, o: &Operator) -> Result<f64> {
    ensure_same(rho.space(), o.space())?;
    o.ensure_hermitian(crate::operators::HERMITIAN_TOL)?;
    let mean = trace_of_product(rho.matrix(), o.matrix()).re;
    let second = second_moment(rho, o);
    Ok(second - mean * mean)
}

/// ⟨O²⟩ = Tr(O ρ O) for Hermitian O.
pub(crate) fn second_moment(rho: &DensityOperator, o: &Operator) -> f64 {
    let o_rho = o.matrix() * rho.matrix();
    trace_of_product(&o_rho, o.matrix()).re
}

/// e^{-iHt} ρ e^{+iHt}, with the exponential taken through the spectrum of H.
pub fn evolve(rho: &DensityOperator, h: &Operator, t: f64) -> Result<DensityOperator> {
    ensure_same(rho.space(), h.space())?;
    let decomposition = spectral_decompose(h)?;
    Ok(rho.conjugate_by(&decomposition.propagator(t)))
}
