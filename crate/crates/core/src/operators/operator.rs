use std::ops::{Add, Mul, Neg, Sub};

use crate::operators::space::ensure_same;
use crate::operators::HilbertSpace;
use crate::{Complex, Error, Matrix, Result};

/// Default absolute bound on max |A - A†| for entries of order one.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Dense complex operator on a labeled Hilbert space.
#[derive(Clone, Debug)]
pub struct Operator {
    space: HilbertSpace,
    matrix: Matrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: Matrix) -> Result<Self> {
        let dim = space.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::ShapeMismatch {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
                dim,
            });
        }
        Ok(Self { space, matrix })
    }

    /// Like [`Operator::new`], but also verifies Hermiticity at [`HERMITIAN_TOL`].
    pub fn hermitian(space: HilbertSpace, matrix: Matrix) -> Result<Self> {
        let op = Self::new(space, matrix)?;
        op.ensure_hermitian(HERMITIAN_TOL)?;
        Ok(op)
    }

    pub(crate) fn from_matrix_unchecked(space: HilbertSpace, matrix: Matrix) -> Self {
        debug_assert_eq!(matrix.nrows(), space.dim());
        Self { space, matrix }
    }

    pub fn from_fn(space: HilbertSpace, f: impl FnMut(usize, usize) -> Complex) -> Self {
        let dim = space.dim();
        Self {
            matrix: Matrix::from_fn(dim, dim, f),
            space,
        }
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let dim = space.dim();
        Self {
            matrix: Matrix::identity(dim, dim),
            space,
        }
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        let dim = space.dim();
        Self {
            matrix: Matrix::zeros(dim, dim),
            space,
        }
    }

    /// Real diagonal operator.
    pub fn diagonal(space: HilbertSpace, diag: &[f64]) -> Result<Self> {
        let dim = space.dim();
        if diag.len() != dim {
            return Err(Error::ShapeMismatch {
                rows: diag.len(),
                cols: 1,
                dim,
            });
        }
        let mut matrix = Matrix::zeros(dim, dim);
        for (i, &d) in diag.iter().enumerate() {
            matrix[(i, i)] = Complex::new(d, 0.0);
        }
        Ok(Self { space, matrix })
    }

    /// |ψ⟩⟨φ|.
    pub fn outer(space: HilbertSpace, ket: &[Complex], bra: &[Complex]) -> Result<Self> {
        let dim = space.dim();
        if ket.len() != dim || bra.len() != dim {
            return Err(Error::ShapeMismatch {
                rows: ket.len(),
                cols: bra.len(),
                dim,
            });
        }
        Ok(Self::from_fn(space, |i, j| ket[i] * bra[j].conj()))
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.adjoint().to_owned(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// max |A - A†| over entries.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in j..n {
                let d = (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Hermitian within `tol · max(1, max|A|)`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol * self.max_abs().max(1.0)
    }

    pub(crate) fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let residual = self.hermiticity_residual();
        if residual <= tol * self.max_abs().max(1.0) {
            Ok(())
        } else {
            Err(Error::NotHermitian { residual })
        }
    }

    /// (A + A†)/2, removing rounding-level anti-Hermitian parts.
    pub fn hermitian_part(&self) -> Self {
        let m = &self.matrix;
        Self::from_fn(self.space.clone(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
    }

    pub fn trace(&self) -> Complex {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn scale(&self, factor: Complex) -> Self {
        let m = &self.matrix;
        Self::from_fn(self.space.clone(), |i, j| m[(i, j)] * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex::new(factor, 0.0))
    }

    /// `self + shift·𝟙`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for i in 0..out.dim() {
            out.matrix[(i, i)] += Complex::new(shift, 0.0);
        }
        out
    }

    /// Checked product `self · rhs`.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        ensure_same(&self.space, &rhs.space)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &rhs.matrix,
        })
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        ensure_same(&self.space, &rhs.space)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix + &rhs.matrix,
        })
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self> {
        ensure_same(&self.space, &rhs.space)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix - &rhs.matrix,
        })
    }

    /// [A, B] = AB - BA.
    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        ensure_same(&self.space, &rhs.space)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &rhs.matrix - &rhs.matrix * &self.matrix,
        })
    }

    /// {A, B} = AB + BA.
    pub fn anticommutator(&self, rhs: &Self) -> Result<Self> {
        ensure_same(&self.space, &rhs.space)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &rhs.matrix + &rhs.matrix * &self.matrix,
        })
    }

    pub fn square(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: &self.matrix * &self.matrix,
        }
    }

    /// Matrix-vector product A|v⟩.
    pub fn apply(&self, v: &[Complex]) -> Vec<Complex> {
        let n = self.dim();
        assert_eq!(v.len(), n, "vector length does not match operator dimension");
        let mut out = vec![Complex::new(0.0, 0.0); n];
        for (j, &vj) in v.iter().enumerate() {
            if vj == Complex::new(0.0, 0.0) {
                continue;
            }
            let col = self.matrix.col(j);
            for (o, &a) in out.iter_mut().zip(col.iter()) {
                *o += a * vj;
            }
        }
        out
    }

    /// max |A - B| over entries.
    pub fn distance(&self, rhs: &Self) -> Result<f64> {
        ensure_same(&self.space, &rhs.space)?;
        Ok(max_abs_diff(&self.matrix, &rhs.matrix))
    }

    /// Kronecker product on the product space.
    pub fn tensor(&self, rhs: &Self) -> Self {
        let (a, b) = (&self.matrix, &rhs.matrix);
        let (da, db) = (a.nrows(), b.nrows());
        let mut m = Matrix::zeros(da * db, da * db);
        for ja in 0..da {
            for ia in 0..da {
                let x = a[(ia, ja)];
                if x == Complex::new(0.0, 0.0) {
                    continue;
                }
                for jb in 0..db {
                    for ib in 0..db {
                        m[(ia * db + ib, ja * db + jb)] = x * b[(ib, jb)];
                    }
                }
            }
        }
        Self {
            space: self.space.tensor(&rhs.space),
            matrix: m,
        }
    }
}

/// Kronecker product `A ⊗ B`.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    a.tensor(b)
}

pub(crate) fn max_abs(m: &Matrix) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}

pub(crate) fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

/// Tr(AB) without forming the product.
pub(crate) fn trace_of_product(a: &Matrix, b: &Matrix) -> Complex {
    let n = a.nrows();
    let mut acc = Complex::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;

    fn add(self, rhs: &'a Operator) -> Operator {
        self.try_add(rhs).expect("operator addition across spaces")
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;

    fn sub(self, rhs: &'a Operator) -> Operator {
        self.try_sub(rhs).expect("operator subtraction across spaces")
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;

    fn mul(self, rhs: &'a Operator) -> Operator {
        self.compose(rhs).expect("operator product across spaces")
    }
}

impl Neg for &Operator {
    type Output = Operator;

    fn neg(self) -> Operator {
        self.scale_real(-1.0)
    }
}
