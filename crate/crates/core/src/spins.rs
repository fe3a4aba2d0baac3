//! Spin-1/2 ensembles: model Hamiltonians, the Dicke sector, one-axis twisting
//! and parity-preserving ramps.
//!
//! Register conventions follow [`crate::operators`]: site 0 is the most
//! significant bit and |0⟩ is the σᶻ = +1 state. Dicke basis vector k is the
//! symmetric state with k spins down, so Jᶻ|k⟩ = (N/2 - k)|k⟩.

use serde::{Deserialize, Serialize};

use crate::operators::{
    bit_of, collective_spin, hermitian_eigen, pauli_string, polarized_qubit, product_state, second_moment, site_mask,
    spectral_decompose, trace_of_product, Axis, DensityOperator, HilbertSpace, Operator, SpectralDecomposition,
};
use crate::symmetry::{from_involution, is_supported_in_sector, Parity, SectorLabel, SectorProjector, HYPOTHESIS_TOL};
use crate::{Complex, Error, Matrix, Result};

/// Adjacent eigenvalues closer than this share an eigenprojector.
pub const DEGENERACY_GAP: f64 = 1e-10;

/// Tolerance on coupling symmetry and on family constraints.
const COUPLING_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Ising,
    Xy,
    Xxz,
    Field,
    Oat,
    CustomXyz,
}

/// H = -Σ_{i<j} Σ_a J^a_ij σᵢᵃσⱼᵃ - Σᵢ Ωᵢ σᵢˣ, or χ(Jᶻ)²/N for the `oat` family.
///
/// Empty coupling matrices or field vectors stand for zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub family: Family,
    pub spins: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jx: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jy: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jz: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<f64>,
    #[serde(default)]
    pub chi: f64,
}

impl HamiltonianSpec {
    fn empty(family: Family, spins: usize) -> Self {
        Self {
            family,
            spins,
            jx: Vec::new(),
            jy: Vec::new(),
            jz: Vec::new(),
            fields: Vec::new(),
            chi: 0.0,
        }
    }

    /// -Σ J_ij σᶻσᶻ - Ω Σ σˣ.
    pub fn ising(couplings: Vec<Vec<f64>>, omega: f64) -> Self {
        let spins = couplings.len();
        Self {
            jz: couplings,
            fields: vec![omega; spins],
            ..Self::empty(Family::Ising, spins)
        }
    }

    /// -Σ J_ij (σˣσˣ + σʸσʸ).
    pub fn xy(couplings: Vec<Vec<f64>>) -> Self {
        Self {
            jx: couplings.clone(),
            jy: couplings.clone(),
            ..Self::empty(Family::Xy, couplings.len())
        }
    }

    /// -Σ J_ij (σˣσˣ + σʸσʸ - σᶻσᶻ).
    pub fn xxz(couplings: Vec<Vec<f64>>) -> Self {
        let negated = couplings.iter().map(|row| row.iter().map(|v| -v).collect()).collect();
        Self {
            jx: couplings.clone(),
            jy: couplings.clone(),
            jz: negated,
            ..Self::empty(Family::Xxz, couplings.len())
        }
    }

    /// -Σ Ωᵢ σᵢˣ.
    pub fn field(fields: Vec<f64>) -> Self {
        Self {
            fields: fields.clone(),
            ..Self::empty(Family::Field, fields.len())
        }
    }

    /// χ(Jᶻ)²/N.
    pub fn oat(spins: usize, chi: f64) -> Self {
        Self {
            chi,
            ..Self::empty(Family::Oat, spins)
        }
    }

    pub fn custom_xyz(jx: Vec<Vec<f64>>, jy: Vec<Vec<f64>>, jz: Vec<Vec<f64>>, fields: Vec<f64>) -> Self {
        let spins = jx.len().max(jy.len()).max(jz.len()).max(fields.len());
        Self {
            jx,
            jy,
            jz,
            fields,
            ..Self::empty(Family::CustomXyz, spins)
        }
    }

    /// Replaces the field vector with a uniform Ω.
    pub fn with_uniform_field(mut self, omega: f64) -> Self {
        self.fields = vec![omega; self.spins];
        self
    }

    fn coupling(&self, axis: Axis) -> &[Vec<f64>] {
        match axis {
            Axis::X => &self.jx,
            Axis::Y => &self.jy,
            Axis::Z => &self.jz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidHamiltonian(msg));
        HilbertSpace::spin_register(self.spins)?;
        let n = self.spins;
        for axis in Axis::ALL {
            let j = self.coupling(axis);
            if j.is_empty() {
                continue;
            }
            if j.len() != n || j.iter().any(|row| row.len() != n) {
                return bad(format!("J^{axis} must be {n}×{n}"));
            }
            for a in 0..n {
                for b in 0..n {
                    if !j[a][b].is_finite() {
                        return bad(format!("J^{axis}[{a}][{b}] is not finite"));
                    }
                    if (j[a][b] - j[b][a]).abs() > COUPLING_TOL {
                        return bad(format!("J^{axis} is not symmetric at ({a}, {b})"));
                    }
                }
                if j[a][a].abs() > COUPLING_TOL {
                    return bad(format!("J^{axis} has a nonzero diagonal entry at {a}"));
                }
            }
        }
        if !self.fields.is_empty() && self.fields.len() != n {
            return bad(format!("expected {n} fields, got {}", self.fields.len()));
        }
        if self.fields.iter().any(|f| !f.is_finite()) || !self.chi.is_finite() {
            return bad("fields and χ must be finite".into());
        }

        let zero = |axis| is_zero(self.coupling(axis));
        let equal_xy = max_diff(&self.jx, &self.jy, n) <= COUPLING_TOL;
        let no_chi = self.chi == 0.0;
        let ok = match self.family {
            Family::Ising => zero(Axis::X) && zero(Axis::Y) && no_chi,
            Family::Xy => equal_xy && zero(Axis::Z) && no_chi,
            Family::Xxz => equal_xy && no_chi,
            Family::Field => Axis::ALL.iter().all(|&a| zero(a)) && no_chi,
            Family::Oat => Axis::ALL.iter().all(|&a| zero(a)) && self.fields.iter().all(|&f| f == 0.0),
            Family::CustomXyz => no_chi,
        };
        if !ok {
            return bad(format!("couplings inconsistent with the {:?} family", self.family));
        }
        Ok(())
    }
}

fn is_zero(j: &[Vec<f64>]) -> bool {
    j.iter().flatten().all(|&v| v.abs() <= COUPLING_TOL)
}

fn entry(j: &[Vec<f64>], a: usize, b: usize) -> f64 {
    if j.is_empty() {
        0.0
    } else {
        j[a][b]
    }
}

fn max_diff(x: &[Vec<f64>], y: &[Vec<f64>], n: usize) -> f64 {
    let mut d: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            d = d.max((entry(x, a, b) - entry(y, a, b)).abs());
        }
    }
    d
}

/// J_ij = J for |i - j| = 1 on an open chain.
pub fn nearest_neighbor_chain(spins: usize, j: f64) -> Vec<Vec<f64>> {
    power_law_chain(spins, j, f64::INFINITY)
}

/// J_ij = J/|i - j|^α on an open chain; α = ∞ keeps nearest neighbours only.
pub fn power_law_chain(spins: usize, j: f64, alpha: f64) -> Vec<Vec<f64>> {
    (0..spins)
        .map(|a| {
            (0..spins)
                .map(|b| {
                    let r = a.abs_diff(b);
                    match r {
                        0 => 0.0,
                        1 => j,
                        _ if alpha.is_infinite() => 0.0,
                        _ => j / (r as f64).powf(alpha),
                    }
                })
                .collect()
        })
        .collect()
}

/// Dense Hamiltonian on the 2^N register.
pub fn build_hamiltonian(spec: &HamiltonianSpec) -> Result<Operator> {
    spec.validate()?;
    let n = spec.spins;
    let space = HilbertSpace::spin_register(n)?;
    let dim = space.dim();
    let mut m = Matrix::zeros(dim, dim);
    let sign = |b: usize, site: usize| if bit_of(b, site, n) == 0 { 1.0 } else { -1.0 };

    if spec.family == Family::Oat {
        for b in 0..dim {
            let mz: f64 = (0..n).map(|i| sign(b, i)).sum::<f64>() / 2.0;
            m[(b, b)] = Complex::new(spec.chi * mz * mz / n as f64, 0.0);
        }
        return Operator::hermitian(space, m);
    }

    for b in 0..dim {
        for i in 0..n {
            for j in i + 1..n {
                let (jx, jy, jz) = (entry(&spec.jx, i, j), entry(&spec.jy, i, j), entry(&spec.jz, i, j));
                let zz = sign(b, i) * sign(b, j);
                m[(b, b)] -= Complex::new(jz * zz, 0.0);
                // σʸσʸ carries -sᵢsⱼ relative to σˣσˣ.
                let flip = b ^ site_mask(i, n) ^ site_mask(j, n);
                m[(flip, b)] -= Complex::new(jx - jy * zz, 0.0);
            }
        }
        for (i, &omega) in spec.fields.iter().enumerate() {
            m[(b ^ site_mask(i, n), b)] -= Complex::new(omega, 0.0);
        }
    }
    Operator::hermitian(space, m)
}

/// Which space a collective state is represented in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    Full,
    Dicke,
}

/// Jˣ, Jʸ, Jᶻ for j = N/2 on the Dicke sector.
pub fn dicke_operators(spins: usize) -> Result<[Operator; 3]> {
    let space = HilbertSpace::dicke(spins)?;
    let dim = spins + 1;
    let j = spins as f64 / 2.0;
    let mut plus = Matrix::zeros(dim, dim);
    for k in 1..dim {
        let m = j - k as f64;
        // J₊|j, m⟩ = √(j(j+1) - m(m+1)) |j, m+1⟩, and m + 1 is basis index k - 1.
        plus[(k - 1, k)] = Complex::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let half = Complex::new(0.5, 0.0);
    let minus_half_i = Complex::new(0.0, -0.5);
    let jx = Matrix::from_fn(dim, dim, |a, b| (plus[(a, b)] + plus[(b, a)].conj()) * half);
    let jy = Matrix::from_fn(dim, dim, |a, b| (plus[(a, b)] - plus[(b, a)].conj()) * minus_half_i);
    let jz: Vec<f64> = (0..dim).map(|k| j - k as f64).collect();
    Ok([
        Operator::hermitian(space.clone(), jx)?,
        Operator::hermitian(space.clone(), jy)?,
        Operator::diagonal(space, &jz)?,
    ])
}

/// Collective spin components for a register or a Dicke sector.
pub fn collective_operators(space: &HilbertSpace) -> Result<[Operator; 3]> {
    match *space {
        HilbertSpace::SpinRegister { spins } => Ok([
            collective_spin(Axis::X, spins)?,
            collective_spin(Axis::Y, spins)?,
            collective_spin(Axis::Z, spins)?,
        ]),
        HilbertSpace::DickeSector { spins } => dicke_operators(spins),
        _ => Err(Error::InvalidArgument(format!("{space} carries no collective spin"))),
    }
}

/// ln C(n, k).
fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

/// Dicke amplitudes of the product state |q⟩^⊗N: √C(N,k) a^{N-k} b^k.
pub(crate) fn dicke_product_amplitudes(q: [Complex; 2], spins: usize) -> Vec<Complex> {
    (0..=spins)
        .map(|k| {
            let weight = (0.5 * ln_binomial(spins, k)).exp();
            q[0].powi((spins - k) as i32) * q[1].powi(k as i32) * weight
        })
        .collect()
}

/// Pure state with every spin polarized along +axis.
pub fn coherent_spin_state(axis: Axis, spins: usize, representation: Representation) -> Result<DensityOperator> {
    let q = polarized_qubit(axis);
    match representation {
        Representation::Full => {
            let space = HilbertSpace::spin_register(spins)?;
            DensityOperator::pure(space, &product_state(&vec![q; spins]))
        }
        Representation::Dicke => {
            let space = HilbertSpace::dicke(spins)?;
            DensityOperator::pure(space, &dicke_product_amplitudes(q, spins))
        }
    }
}

/// Columns are the Dicke states written in the 2^N register.
pub fn dicke_isometry(spins: usize) -> Result<Matrix> {
    let register = HilbertSpace::spin_register(spins)?;
    let mut v = Matrix::zeros(register.dim(), spins + 1);
    for b in 0..register.dim() {
        let k = (b as u64).count_ones() as usize;
        v[(b, k)] = Complex::new((-0.5 * ln_binomial(spins, k)).exp(), 0.0);
    }
    Ok(v)
}

/// Embeds a Dicke-sector state into the full register, ρ ↦ VρV†.
pub fn lift_to_register(rho: &DensityOperator) -> Result<DensityOperator> {
    let HilbertSpace::DickeSector { spins } = *rho.space() else {
        return Err(Error::InvalidArgument(format!("expected a Dicke-sector state, got {}", rho.space())));
    };
    let v = dicke_isometry(spins)?;
    let lifted = &v * rho.matrix() * v.adjoint();
    let space = HilbertSpace::spin_register(spins)?;
    Ok(DensityOperator::from_trusted(Operator::from_matrix_unchecked(space, lifted)))
}

/// ∏σᵢᵃ restricted to the Dicke sector.
///
/// The string maps |k⟩ to |N - k⟩ for x and y and is diagonal for z, so the
/// matrix is assembled entry by entry; it coincides with e^{iπ(j - Jˣ)} for x.
pub fn dicke_parity_operator(axis: Axis, spins: usize) -> Result<Operator> {
    let space = HilbertSpace::dicke(spins)?;
    let dim = spins + 1;
    let mut m = Matrix::zeros(dim, dim);
    let alternating = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    // i^N
    let i_pow = Complex::new(0.0, 1.0).powi(spins as i32);
    for k in 0..dim {
        match axis {
            Axis::X => m[(spins - k, k)] = Complex::new(1.0, 0.0),
            Axis::Y => m[(spins - k, k)] = i_pow * alternating(k),
            Axis::Z => m[(k, k)] = Complex::new(alternating(k), 0.0),
        }
    }
    Ok(Operator::from_matrix_unchecked(space, m))
}

/// Parity projector (𝟙 ± ∏σᵃ)/2 on the Dicke sector.
pub fn dicke_parity_projector(axis: Axis, parity: Parity, spins: usize) -> Result<SectorProjector> {
    let string = dicke_parity_operator(axis, spins)?;
    SectorProjector::from_exact(from_involution(&string, parity), SectorLabel::Parity { axis, parity })
}

/// x-parity projector for a register or Dicke sector.
pub fn x_parity_projector(space: &HilbertSpace, parity: Parity) -> Result<SectorProjector> {
    match *space {
        HilbertSpace::SpinRegister { spins } => crate::symmetry::parity_projector(Axis::X, parity, spins),
        HilbertSpace::DickeSector { spins } => dicke_parity_projector(Axis::X, parity, spins),
        _ => Err(Error::InvalidArgument(format!("{space} has no spin parity"))),
    }
}

/// Basis permutation implemented by ∏σˣ.
fn x_flip(space: &HilbertSpace) -> Option<Vec<usize>> {
    match *space {
        HilbertSpace::SpinRegister { spins } => {
            let all = (1usize << spins) - 1;
            Some((0..space.dim()).map(|b| b ^ all).collect())
        }
        HilbertSpace::DickeSector { spins } => Some((0..=spins).map(|k| spins - k).collect()),
        _ => None,
    }
}

/// max |[H, ∏σˣ]|, evaluated as max |H_{π(a)π(b)} - H_{ab}|.
pub fn parity_commutator_residual(h: &Operator) -> Result<f64> {
    let perm = x_flip(h.space()).ok_or_else(|| Error::InvalidArgument(format!("{} has no spin parity", h.space())))?;
    let dim = h.dim();
    let mut r: f64 = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            r = r.max((h.get(perm[a], perm[b]) - h.get(a, b)).norm());
        }
    }
    Ok(r)
}

/// Real orthonormal bases of the even and odd ∏σˣ eigenspaces.
fn parity_bases(perm: &[usize]) -> [Matrix; 2] {
    let dim = perm.len();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut even = Vec::new();
    let mut odd = Vec::new();
    for a in 0..dim {
        let b = perm[a];
        if b == a {
            even.push(vec![(a, 1.0)]);
        } else if a < b {
            even.push(vec![(a, h), (b, h)]);
            odd.push(vec![(a, h), (b, -h)]);
        }
    }
    [even, odd].map(|cols| {
        let mut m = Matrix::zeros(dim, cols.len());
        for (c, col) in cols.iter().enumerate() {
            for &(row, v) in col {
                m[(row, c)] = Complex::new(v, 0.0);
            }
        }
        m
    })
}

/// Eigendecomposition of one parity block, eigenvectors in the full space.
fn block_spectrum(h: &Operator, basis: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let block = basis.adjoint() * h.matrix() * basis;
    let n = block.nrows();
    let block = Matrix::from_fn(n, n, |i, j| (block[(i, j)] + block[(j, i)].conj()) * 0.5);
    let (values, vectors) = hermitian_eigen(&block)?;
    Ok((values, basis * &vectors))
}

fn parity_tol(h: &Operator) -> f64 {
    1e-12 * h.max_abs().max(1.0)
}

/// Eigendecomposition of H whose eigenvectors are exact x-parity eigenstates
/// whenever H commutes with ∏σˣ; otherwise a plain dense decomposition.
///
/// Resolving the parity blocks separately keeps nearly degenerate
/// even/odd doublets from mixing.
pub fn parity_adapted_spectrum(h: &Operator) -> Result<SpectralDecomposition> {
    let Some(perm) = x_flip(h.space()) else {
        return spectral_decompose(h);
    };
    if parity_commutator_residual(h)? > parity_tol(h) {
        return spectral_decompose(h);
    }
    h.ensure_hermitian(crate::operators::HERMITIAN_TOL)?;
    let [even, odd] = parity_bases(&perm);
    let (ve, we) = block_spectrum(h, &even)?;
    let (vo, wo) = if odd.ncols() > 0 {
        block_spectrum(h, &odd)?
    } else {
        (Vec::new(), Matrix::zeros(h.dim(), 0))
    };
    let mut cols: Vec<(f64, &Matrix, usize)> = ve
        .iter()
        .enumerate()
        .map(|(k, &l)| (l, &we, k))
        .chain(vo.iter().enumerate().map(|(k, &l)| (l, &wo, k)))
        .collect();
    cols.sort_by(|a, b| a.0.total_cmp(&b.0));
    let dim = h.dim();
    let vectors = Matrix::from_fn(dim, dim, |i, c| cols[c].1[(i, cols[c].2)]);
    let values = cols.iter().map(|c| c.0).collect();
    Ok(SpectralDecomposition::from_parts(h.space().clone(), values, vectors))
}

/// Lowest eigenpair of H restricted to one x-parity sector.
pub fn sector_ground_state(h: &Operator, parity: Parity) -> Result<(f64, Vec<Complex>)> {
    let perm = x_flip(h.space()).ok_or_else(|| Error::InvalidArgument(format!("{} has no spin parity", h.space())))?;
    let residual = parity_commutator_residual(h)?;
    if residual > parity_tol(h) {
        return Err(Error::InvalidHamiltonian(format!(
            "H does not conserve x parity (residual {residual:.3e})"
        )));
    }
    let [even, odd] = parity_bases(&perm);
    let basis = match parity {
        Parity::Even => even,
        Parity::Odd => odd,
    };
    if basis.ncols() == 0 {
        return Err(Error::InvalidArgument("the odd sector of a single Dicke level is empty".into()));
    }
    let (values, vectors) = block_spectrum(h, &basis)?;
    Ok((values[0], vectors.col(0).iter().copied().collect()))
}

/// e^{-iχt(Jᶻ)²/N} applied to the coherent state along `axis`, in the Dicke sector.
pub fn oat_evolve(spins: usize, chi: f64, t: f64, axis: Axis) -> Result<DensityOperator> {
    if spins < 2 {
        return Err(Error::InvalidArgument(format!("one-axis twisting needs N ≥ 2, got {spins}")));
    }
    let space = HilbertSpace::dicke(spins)?;
    let j = spins as f64 / 2.0;
    let psi: Vec<Complex> = dicke_product_amplitudes(polarized_qubit(axis), spins)
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let m = j - k as f64;
            c * Complex::from_polar(1.0, -chi * t * m * m / spins as f64)
        })
        .collect();
    DensityOperator::pure(space, &psi)
}

/// The same evolution on the full 2^N register, for cross-checks.
pub fn oat_evolve_register(spins: usize, chi: f64, t: f64, axis: Axis) -> Result<DensityOperator> {
    if spins < 2 {
        return Err(Error::InvalidArgument(format!("one-axis twisting needs N ≥ 2, got {spins}")));
    }
    let space = HilbertSpace::spin_register(spins)?;
    let psi0 = product_state(&vec![polarized_qubit(axis); spins]);
    let psi: Vec<Complex> = psi0
        .iter()
        .enumerate()
        .map(|(b, &c)| {
            let m = spins as f64 / 2.0 - (b as u64).count_ones() as f64;
            c * Complex::from_polar(1.0, -chi * t * m * m / spins as f64)
        })
        .collect();
    DensityOperator::pure(space, &psi)
}

/// Wineland parameter ξ² = N min Var(J⊥) / ⟨Jˣ⟩², minimizing over quadratures
/// in the y-z plane. Assumes the mean spin points along x.
pub fn squeezing_parameter(rho: &DensityOperator) -> Result<f64> {
    let spins = rho
        .space()
        .spins()
        .ok_or_else(|| Error::InvalidArgument(format!("{} carries no collective spin", rho.space())))?;
    let [jx, jy, jz] = collective_operators(rho.space())?;
    let mean = |o: &Operator| trace_of_product(rho.matrix(), o.matrix()).re;
    let (mx, my, mz) = (mean(&jx), mean(&jy), mean(&jz));
    let vyy = second_moment(rho, &jy) - my * my;
    let vzz = second_moment(rho, &jz) - mz * mz;
    let cyz = 0.5 * mean(&jy.anticommutator(&jz)?) - my * mz;
    let min_var = 0.5 * (vyy + vzz) - (0.25 * (vyy - vzz).powi(2) + cyz * cyz).sqrt();
    Ok(spins as f64 * min_var / (mx * mx))
}

/// Piecewise-linear Ω(t) ramp on top of a fixed interaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSchedule {
    pub interaction: HamiltonianSpec,
    pub duration: f64,
    pub steps: usize,
    /// (t, Ω) knots, ascending in t; Ω is held constant outside them.
    pub omega: Vec<[f64; 2]>,
}

impl RampSchedule {
    /// Linear ramp from `omega_from` at t = 0 to `omega_to` at t = T.
    pub fn linear(interaction: HamiltonianSpec, omega_from: f64, omega_to: f64, duration: f64, steps: usize) -> Self {
        Self {
            interaction,
            duration,
            steps,
            omega: vec![[0.0, omega_from], [duration, omega_to]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.interaction.validate()?;
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("ramp: {msg}")));
        if self.steps == 0 {
            return bad("steps must be at least 1");
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad("duration must be positive");
        }
        if self.omega.is_empty() {
            return bad("the Ω profile needs at least one knot");
        }
        if self.omega.iter().flatten().any(|v| !v.is_finite()) {
            return bad("Ω knots must be finite");
        }
        if self.omega.windows(2).any(|w| w[1][0] < w[0][0]) {
            return bad("Ω knots must be sorted by time");
        }
        Ok(())
    }

    pub fn omega_at(&self, t: f64) -> f64 {
        let knots = &self.omega;
        let first = knots[0];
        let last = knots[knots.len() - 1];
        if t <= first[0] {
            return first[1];
        }
        if t >= last[0] {
            return last[1];
        }
        let k = knots.partition_point(|p| p[0] <= t);
        let ([t0, w0], [t1, w1]) = (knots[k - 1], knots[k]);
        if t1 == t0 {
            w1
        } else {
            w0 + (w1 - w0) * (t - t0) / (t1 - t0)
        }
    }

    pub fn step(&self) -> f64 {
        self.duration / self.steps as f64
    }

    /// H_int - Ω Σσˣ at time t.
    pub fn hamiltonian_at(&self, interaction: &Operator, t: f64) -> Result<Operator> {
        let field = build_hamiltonian(&HamiltonianSpec::field(vec![self.omega_at(t); self.interaction.spins]))?;
        interaction.try_add(&field)
    }
}

/// Diagnostics recorded after each ramp step (and at t = 0).
#[derive(Clone, Debug, Serialize)]
pub struct RampPoint {
    pub time: f64,
    pub omega: f64,
    pub energy: f64,
    /// Lowest energy within the initial parity sector.
    pub ground_energy: f64,
    /// (⟨H⟩ - E₀)/N.
    pub energy_density: f64,
    /// ⟨∏σˣ⟩.
    pub parity: f64,
    /// ⟨P⟩ for the initial sector's projector.
    pub sector_weight: f64,
    pub four_jz2: f64,
}

#[derive(Clone, Debug)]
pub struct RampOutcome {
    pub final_state: DensityOperator,
    /// H at t = T.
    pub final_hamiltonian: Operator,
    /// Sector ground state of the final Hamiltonian.
    pub final_ground_state: Vec<Complex>,
    pub trajectory: Vec<RampPoint>,
}

/// Piecewise-constant evolution: each step applies e^{-iH(t_mid)dt}.
pub fn quasi_adiabatic_ramp(schedule: &RampSchedule, initial: &DensityOperator) -> Result<RampOutcome> {
    schedule.validate()?;
    let n = schedule.interaction.spins;
    let register = HilbertSpace::spin_register(n)?;
    crate::operators::ensure_same(initial.space(), &register)?;

    let mut sector = None;
    for parity in [Parity::Even, Parity::Odd] {
        let p = x_parity_projector(&register, parity)?;
        if is_supported_in_sector(initial, &p, HYPOTHESIS_TOL)?.supported {
            sector = Some((parity, p));
            break;
        }
    }
    let Some((parity, projector)) = sector else {
        return Err(Error::InvalidArgument("the initial state is not supported in an x-parity sector".into()));
    };

    let h_int = build_hamiltonian(&schedule.interaction)?;
    let string = pauli_string(Axis::X, n)?;
    let jz2 = collective_spin(Axis::Z, n)?.square();
    let record = |t: f64, rho: &DensityOperator| -> Result<(RampPoint, Operator, Vec<Complex>)> {
        let h = schedule.hamiltonian_at(&h_int, t)?;
        let (e0, ground) = sector_ground_state(&h, parity)?;
        let energy = trace_of_product(rho.matrix(), h.matrix()).re;
        let point = RampPoint {
            time: t,
            omega: schedule.omega_at(t),
            energy,
            ground_energy: e0,
            energy_density: (energy - e0) / n as f64,
            parity: trace_of_product(rho.matrix(), string.matrix()).re,
            sector_weight: trace_of_product(rho.matrix(), projector.op().matrix()).re,
            four_jz2: 4.0 * trace_of_product(rho.matrix(), jz2.matrix()).re,
        };
        Ok((point, h, ground))
    };

    let dt = schedule.step();
    let mut rho = initial.clone();
    let mut trajectory = Vec::with_capacity(schedule.steps + 1);
    trajectory.push(record(0.0, &rho)?.0);
    let mut last = None;
    for k in 0..schedule.steps {
        let mid = (k as f64 + 0.5) * dt;
        let h = schedule.hamiltonian_at(&h_int, mid)?;
        let u = parity_adapted_spectrum(&h)?.propagator(dt);
        rho = rho.conjugate_by(&u);
        let t = if k + 1 == schedule.steps {
            schedule.duration
        } else {
            (k + 1) as f64 * dt
        };
        let (point, h_t, ground) = record(t, &rho)?;
        trajectory.push(point);
        last = Some((h_t, ground));
    }
    let (final_hamiltonian, final_ground_state) = last.expect("at least one step");
    Ok(RampOutcome {
        final_state: rho,
        final_hamiltonian,
        final_ground_state,
        trajectory,
    })
}

/// ρ_DE = Σ_n Π_n ρ Π_n over eigenprojectors of H, with levels closer than
/// [`DEGENERACY_GAP`] merged.
pub fn diagonal_ensemble(rho: &DensityOperator, h: &Operator) -> Result<DensityOperator> {
    crate::operators::ensure_same(rho.space(), h.space())?;
    let spectrum = parity_adapted_spectrum(h)?;
    let v = spectrum.eigenvectors();
    let mut in_basis = v.adjoint() * rho.matrix() * v;
    let dim = h.dim();
    let mut group = vec![0usize; dim];
    for (g, range) in spectrum.degenerate_groups(DEGENERACY_GAP).into_iter().enumerate() {
        for k in range {
            group[k] = g;
        }
    }
    for a in 0..dim {
        for b in 0..dim {
            if group[a] != group[b] {
                in_basis[(a, b)] = Complex::new(0.0, 0.0);
            }
        }
    }
    let back = v * &in_basis * v.adjoint();
    Ok(DensityOperator::from_trusted(Operator::from_matrix_unchecked(rho.space().clone(), back)))
}
