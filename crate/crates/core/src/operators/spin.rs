use serde::{Deserialize, Serialize};

use crate::operators::{HilbertSpace, Operator};
use crate::{Complex, Error, Matrix, Result};

/// Cartesian spin axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::InvalidArgument(format!("unknown axis `{other}`"))),
        }
    }
}

const ZERO: Complex = Complex { re: 0.0, im: 0.0 };
const ONE: Complex = Complex { re: 1.0, im: 0.0 };
const I: Complex = Complex { re: 0.0, im: 1.0 };

/// 2×2 Pauli matrix.
pub fn pauli_matrix(axis: Axis) -> Matrix {
    let entries = match axis {
        Axis::X => [[ZERO, ONE], [ONE, ZERO]],
        Axis::Y => [[ZERO, -I], [I, ZERO]],
        Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
    };
    Matrix::from_fn(2, 2, |i, j| entries[i][j])
}

#[inline]
pub(crate) fn bit_of(index: usize, site: usize, spins: usize) -> usize {
    (index >> (spins - 1 - site)) & 1
}

#[inline]
pub(crate) fn site_mask(site: usize, spins: usize) -> usize {
    1 << (spins - 1 - site)
}

/// σ^a acting on basis state |b⟩: returns (image index, amplitude).
#[inline]
pub(crate) fn pauli_action(axis: Axis, index: usize, site: usize, spins: usize) -> (usize, Complex) {
    let bit = bit_of(index, site, spins);
    let flipped = index ^ site_mask(site, spins);
    match axis {
        Axis::X => (flipped, ONE),
        // σʸ|0⟩ = i|1⟩, σʸ|1⟩ = -i|0⟩
        Axis::Y => (flipped, if bit == 0 { I } else { -I }),
        Axis::Z => (index, if bit == 0 { ONE } else { -ONE }),
    }
}

/// Pauli matrix on `site` of an `spins`-qubit register, identity elsewhere.
/// Site 0 is the leftmost Kronecker factor.
pub fn pauli_on_site(axis: Axis, site: usize, spins: usize) -> Result<Operator> {
    let space = HilbertSpace::spin_register(spins)?;
    if site >= spins {
        return Err(Error::SiteOutOfRange { site, spins });
    }
    let dim = space.dim();
    let mut m = Matrix::zeros(dim, dim);
    for b in 0..dim {
        let (to, amp) = pauli_action(axis, b, site, spins);
        m[(to, b)] = amp;
    }
    Ok(Operator::from_matrix_unchecked(space, m))
}

/// Collective spin J^a = Σᵢ σᵢᵃ/2 on the full register.
pub fn collective_spin(axis: Axis, spins: usize) -> Result<Operator> {
    let space = HilbertSpace::spin_register(spins)?;
    let dim = space.dim();
    let mut m = Matrix::zeros(dim, dim);
    for b in 0..dim {
        for site in 0..spins {
            let (to, amp) = pauli_action(axis, b, site, spins);
            m[(to, b)] += amp * 0.5;
        }
    }
    Ok(Operator::from_matrix_unchecked(space, m))
}

/// ∏ᵢ σᵢᵃ.
pub fn pauli_string(axis: Axis, spins: usize) -> Result<Operator> {
    let space = HilbertSpace::spin_register(spins)?;
    let dim = space.dim();
    let mut m = Matrix::zeros(dim, dim);
    for b in 0..dim {
        let mut index = b;
        let mut amp = ONE;
        for site in 0..spins {
            let (to, a) = pauli_action(axis, index, site, spins);
            index = to;
            amp *= a;
        }
        m[(index, b)] = amp;
    }
    Ok(Operator::from_matrix_unchecked(space, m))
}

/// Embeds a single-qubit 2×2 matrix on `site`.
pub fn single_site(local: &Matrix, site: usize, spins: usize) -> Result<Operator> {
    let space = HilbertSpace::spin_register(spins)?;
    if site >= spins {
        return Err(Error::SiteOutOfRange { site, spins });
    }
    if local.nrows() != 2 || local.ncols() != 2 {
        return Err(Error::ShapeMismatch {
            rows: local.nrows(),
            cols: local.ncols(),
            dim: 2,
        });
    }
    let dim = space.dim();
    let mask = site_mask(site, spins);
    let mut m = Matrix::zeros(dim, dim);
    for col in 0..dim {
        let bc = bit_of(col, site, spins);
        for br in 0..2 {
            let row = if br == bc { col } else { col ^ mask };
            m[(row, col)] = local[(br, bc)];
        }
    }
    Ok(Operator::from_matrix_unchecked(space, m))
}

/// Normalized single-qubit state polarized along +axis.
pub fn polarized_qubit(axis: Axis) -> [Complex; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match axis {
        Axis::X => [Complex::new(h, 0.0), Complex::new(h, 0.0)],
        Axis::Y => [Complex::new(h, 0.0), Complex::new(0.0, h)],
        Axis::Z => [ONE, ZERO],
    }
}

/// Kronecker product of single-qubit states, site 0 leftmost.
pub fn product_state(sites: &[[Complex; 2]]) -> Vec<Complex> {
    let mut psi = vec![ONE];
    for q in sites {
        psi = psi.iter().flat_map(|&a| [a * q[0], a * q[1]]).collect();
    }
    psi
}
