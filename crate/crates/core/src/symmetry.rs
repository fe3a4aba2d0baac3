//! Sector projectors and the two hypotheses of the projection theorem:
//! the state lives in the sector (PρP = ρ) and the generator only connects
//! the sector to its complement (PGP = 0, PGQ + QGP = G).

use serde::{Deserialize, Serialize};

use crate::operators::{
    ensure_same, max_abs, pauli_string, trace_of_product, Axis, DensityOperator, HilbertSpace, Operator,
};
use crate::{Complex, Error, Matrix, Result};

/// Default residual bound for the sector-support and off-diagonality checks.
pub const HYPOTHESIS_TOL: f64 = 1e-10;

/// Eigenvalue of a parity operator: even ↔ +1, odd ↔ -1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SectorLabel {
    /// Eigenspace of ∏ᵢσᵢᵃ (or its Dicke-sector restriction).
    Parity { axis: Axis, parity: Parity },
    /// Eigenspace J^z = twice_m / 2.
    Magnetization { twice_m: i64 },
    /// Fock block with N_A bosons in the A modes.
    BosonNumber { n_a: usize },
}

/// Orthogonal projector onto a labeled symmetry sector.
#[derive(Clone, Debug)]
pub struct SectorProjector {
    op: Operator,
    label: SectorLabel,
    rank: usize,
}

impl SectorProjector {
    /// Verifies P = P† and P² = P at 1e-12 and reads the rank off the trace.
    pub fn new(op: Operator, label: SectorLabel) -> Result<Self> {
        const TOL: f64 = 1e-12;
        let herm = op.hermiticity_residual();
        if herm > TOL {
            return Err(Error::InvalidProjector(format!("P ≠ P† (residual {herm:e})")));
        }
        let idem = op.square().distance(&op)?;
        if idem > TOL {
            return Err(Error::InvalidProjector(format!("P² ≠ P (residual {idem:e})")));
        }
        Self::with_trace_rank(op, label)
    }

    /// For constructions that are exact projectors by design.
    pub(crate) fn from_exact(op: Operator, label: SectorLabel) -> Result<Self> {
        Self::with_trace_rank(op, label)
    }

    fn with_trace_rank(op: Operator, label: SectorLabel) -> Result<Self> {
        let trace = op.trace().re;
        let rank = trace.round();
        if (trace - rank).abs() > 1e-8 || rank < 0.0 {
            return Err(Error::InvalidProjector(format!("trace {trace} is not an integer")));
        }
        Ok(Self {
            op,
            label,
            rank: rank as usize,
        })
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn label(&self) -> &SectorLabel {
        &self.label
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn space(&self) -> &HilbertSpace {
        self.op.space()
    }

    /// Q = 𝟙 - P.
    pub fn complement(&self) -> Operator {
        &Operator::identity(self.space().clone()) - &self.op
    }

    /// P A P.
    pub fn sandwich(&self, a: &Operator) -> Result<Operator> {
        ensure_same(self.space(), a.space())?;
        let p = self.op.matrix();
        Operator::new(a.space().clone(), p * a.matrix() * p)
    }
}

/// P = (𝟙 + s ∏ᵢσᵢᵃ)/2 with s = ±1 for even/odd.
pub fn parity_projector(axis: Axis, parity: Parity, spins: usize) -> Result<SectorProjector> {
    let string = pauli_string(axis, spins)?;
    let p = from_involution(&string, parity);
    SectorProjector::from_exact(p, SectorLabel::Parity { axis, parity })
}

/// (𝟙 + s A)/2 for an involution A.
pub(crate) fn from_involution(a: &Operator, parity: Parity) -> Operator {
    let s = parity.sign();
    let m = a.matrix();
    Operator::from_fn(a.space().clone(), |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        (Complex::new(id, 0.0) + m[(i, j)] * s) * 0.5
    })
}

/// Projector onto the J^z = m eigenspace of the full register.
pub fn magnetization_projector(m: f64, spins: usize) -> Result<SectorProjector> {
    let space = HilbertSpace::spin_register(spins)?;
    let twice = 2.0 * m;
    let twice_m = twice.round() as i64;
    let n = spins as i64;
    if (twice - twice_m as f64).abs() > 1e-12 || twice_m.abs() > n || (n - twice_m) % 2 != 0 {
        return Err(Error::NotAnEigenvalue { m, spins });
    }
    // J^z |b⟩ = (N - 2·popcount(b))/2 |b⟩.
    let diag: Vec<f64> = (0..space.dim())
        .map(|b| {
            let twice_jz = n - 2 * (b as u64).count_ones() as i64;
            if twice_jz == twice_m {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let op = Operator::diagonal(space, &diag)?;
    SectorProjector::from_exact(op, SectorLabel::Magnetization { twice_m })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupportCheck {
    pub supported: bool,
    /// max |PρP - ρ|.
    pub residual: f64,
}

/// PρP = ρ within `tol` (max-entry norm).
pub fn is_supported_in_sector(rho: &DensityOperator, projector: &SectorProjector, tol: f64) -> Result<SupportCheck> {
    let sandwiched = projector.sandwich(rho.op())?;
    let residual = sandwiched.distance(rho.op())?;
    Ok(SupportCheck {
        supported: residual <= tol,
        residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OffDiagonalCheck {
    pub off_diagonal: bool,
    /// max |PGP|.
    pub diagonal_residual: f64,
    /// max |PGQ + QGP - G|.
    pub completion_residual: f64,
}

/// PGP = 0 and PGQ + QGP = G, both within `tol`.
pub fn is_off_diagonal(g: &Operator, projector: &SectorProjector, tol: f64) -> Result<OffDiagonalCheck> {
    ensure_same(g.space(), projector.space())?;
    let p = projector.op().matrix();
    let q = projector.complement();
    let q = q.matrix();
    let gm = g.matrix();
    let pgp = p * gm * p;
    let pgq = p * gm * q;
    let qgp = q * gm * p;
    let completion = &pgq + &qgp - gm;
    let diagonal_residual = max_abs(&pgp);
    let completion_residual = max_abs(&completion);
    Ok(OffDiagonalCheck {
        off_diagonal: diagonal_residual <= tol && completion_residual <= tol,
        diagonal_residual,
        completion_residual,
    })
}

/// One side of a sector split: its weight and, if nonempty, the normalized state.
#[derive(Clone, Debug)]
pub struct SectorBranch {
    pub weight: f64,
    pub state: Option<DensityOperator>,
}

impl SectorBranch {
    pub fn is_empty(&self) -> bool {
        self.state.is_none()
    }
}

/// ρ → (PρP/w_P, w_P) and (QρQ/w_Q, w_Q).
#[derive(Clone, Debug)]
pub struct SectorSplit {
    pub inside: SectorBranch,
    pub outside: SectorBranch,
}

/// Weights below this are reported as empty branches.
pub const EMPTY_BRANCH_WEIGHT: f64 = 1e-14;

pub fn sector_split(rho: &DensityOperator, projector: &SectorProjector) -> Result<SectorSplit> {
    ensure_same(rho.space(), projector.space())?;
    let q = projector.complement();
    let inside = project_branch(rho, projector.op().matrix());
    let outside = project_branch(rho, q.matrix());
    Ok(SectorSplit { inside, outside })
}

pub(crate) fn project_branch(rho: &DensityOperator, p: &Matrix) -> SectorBranch {
    let weight = trace_of_product(p, rho.matrix()).re;
    if weight < EMPTY_BRANCH_WEIGHT {
        return SectorBranch {
            weight: weight.max(0.0),
            state: None,
        };
    }
    let projected = p * rho.matrix() * p;
    let op = Operator::new(rho.space().clone(), projected)
        .expect("projection keeps the dimension")
        .scale_real(1.0 / weight);
    SectorBranch {
        weight,
        state: Some(DensityOperator::from_trusted(op)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{
        collective_spin, expectation, pauli_on_site, polarized_qubit, product_state, random_density,
        random_density_in_sector, random_hermitian,
    };
    use proptest::prelude::*;

    fn css_x(n: usize) -> DensityOperator {
        let psi = product_state(&vec![polarized_qubit(Axis::X); n]);
        DensityOperator::pure(HilbertSpace::spin_register(n).unwrap(), &psi).unwrap()
    }

    fn assert_projector(p: &SectorProjector) {
        assert!(p.op().hermiticity_residual() <= 1e-12);
        assert!(p.op().square().distance(p.op()).unwrap() <= 1e-12);
    }

    #[test]
    fn parity_projectors() {
        for axis in [Axis::X, Axis::Z] {
            let even = parity_projector(axis, Parity::Even, 2).unwrap();
            let odd = parity_projector(axis, Parity::Odd, 2).unwrap();
            assert_projector(&even);
            assert_projector(&odd);
            assert_eq!(even.rank(), 2);
            let sum = even.op() + odd.op();
            assert_eq!(sum.distance(&Operator::identity(sum.space().clone())).unwrap(), 0.0);
        }
        for n in 1..=5 {
            assert_eq!(parity_projector(Axis::X, Parity::Odd, n).unwrap().rank(), 1 << (n - 1));
        }
    }

    #[test]
    fn coherent_state_is_parity_even() {
        let p = parity_projector(Axis::X, Parity::Even, 4).unwrap();
        let rho = css_x(4);
        let check = is_supported_in_sector(&rho, &p, HYPOTHESIS_TOL).unwrap();
        assert!(check.supported, "residual {}", check.residual);
        assert!((expectation(&rho, p.op()).unwrap().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn z_parity_matches_magnetization_form() {
        // (-1)^{N/2 - J^z} written out on the register equals ∏σᶻ.
        let n = 4;
        let jz = collective_spin(Axis::Z, n).unwrap();
        let diag: Vec<f64> = (0..1 << n)
            .map(|b| {
                let exponent = (n as f64 / 2.0 - jz.get(b, b).re).round() as i64;
                if exponent % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let from_magnetization = Operator::diagonal(jz.space().clone(), &diag).unwrap();
        let string = pauli_string(Axis::Z, n).unwrap();
        assert_eq!(from_magnetization.distance(&string).unwrap(), 0.0);
    }

    #[test]
    fn magnetization_projectors() {
        let p = magnetization_projector(1.0, 2).unwrap();
        assert_eq!(p.rank(), 1);
        assert_eq!(p.op().get(0, 0).re, 1.0);
        assert_eq!(magnetization_projector(0.0, 4).unwrap().rank(), 6);
        let n = 5;
        let mut sum = Operator::zeros(HilbertSpace::spin_register(n).unwrap());
        for k in 0..=n {
            let m = n as f64 / 2.0 - k as f64;
            let p = magnetization_projector(m, n).unwrap();
            assert_projector(&p);
            sum = &sum + p.op();
        }
        assert_eq!(sum.distance(&Operator::identity(sum.space().clone())).unwrap(), 0.0);
        assert!(matches!(magnetization_projector(0.5, 2), Err(Error::NotAnEigenvalue { .. })));
        assert!(magnetization_projector(1.5, 2).is_err());
    }

    #[test]
    fn new_rejects_non_projectors() {
        let space = HilbertSpace::spin_register(1).unwrap();
        let twice = Operator::identity(space.clone()).scale_real(2.0);
        assert!(SectorProjector::new(twice, SectorLabel::BosonNumber { n_a: 0 }).is_err());
        let p = pauli_on_site(Axis::Z, 0, 1).unwrap();
        let p = from_involution(&p, Parity::Even);
        assert_eq!(SectorProjector::new(p, SectorLabel::BosonNumber { n_a: 0 }).unwrap().rank(), 1);
    }

    #[test]
    fn maximally_mixed_is_not_supported() {
        let p = parity_projector(Axis::Z, Parity::Even, 3).unwrap();
        let rho = DensityOperator::maximally_mixed(p.space().clone());
        let check = is_supported_in_sector(&rho, &p, HYPOTHESIS_TOL).unwrap();
        assert!(!check.supported);
        assert!((check.residual - 1.0 / 8.0).abs() < 1e-14);
    }

    #[test]
    fn off_diagonal_examples() {
        let p = parity_projector(Axis::X, Parity::Even, 4).unwrap();
        let jy = collective_spin(Axis::Y, 4).unwrap();
        let jx = collective_spin(Axis::X, 4).unwrap();
        assert!(is_off_diagonal(&jy, &p, HYPOTHESIS_TOL).unwrap().off_diagonal);
        let bad = is_off_diagonal(&jx, &p, HYPOTHESIS_TOL).unwrap();
        assert!(!bad.off_diagonal);
        assert!(bad.diagonal_residual > 0.1);
    }

    #[test]
    fn split_of_coherent_state_by_z_parity() {
        let p = parity_projector(Axis::Z, Parity::Even, 3).unwrap();
        let split = sector_split(&css_x(3), &p).unwrap();
        assert!((split.inside.weight - 0.5).abs() < 1e-14);
        assert!((split.outside.weight - 0.5).abs() < 1e-14);
    }

    #[test]
    fn split_of_sector_state_has_empty_complement() {
        let p = parity_projector(Axis::X, Parity::Even, 3).unwrap();
        let rho = css_x(3);
        let split = sector_split(&rho, &p).unwrap();
        assert!((split.inside.weight - 1.0).abs() < 1e-12);
        assert!(split.outside.is_empty());
        let inside = split.inside.state.unwrap();
        assert!(inside.op().distance(rho.op()).unwrap() < 1e-12);
    }

    #[test]
    fn split_of_z_diagonal_mixture_stays_diagonal() {
        let space = HilbertSpace::spin_register(2).unwrap();
        let rho = DensityOperator::new(Operator::diagonal(space, &[0.1, 0.2, 0.3, 0.4]).unwrap()).unwrap();
        let p = parity_projector(Axis::Z, Parity::Even, 2).unwrap();
        let split = sector_split(&rho, &p).unwrap();
        assert!((split.inside.weight - 0.5).abs() < 1e-14);
        for branch in [&split.inside, &split.outside] {
            let s = branch.state.as_ref().unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    if i != j {
                        assert_eq!(s.op().get(i, j), Complex::new(0.0, 0.0));
                    }
                }
            }
        }
        let even = split.inside.state.unwrap();
        assert!((even.op().get(0, 0).re - 0.2).abs() < 1e-14);
        assert!((even.op().get(3, 3).re - 0.8).abs() < 1e-14);
    }

    /// Hermitian G with PGP = 0 and QGQ = 0 built from a random Hermitian matrix.
    fn random_off_diagonal(p: &SectorProjector, seed: u64) -> Operator {
        let h = random_hermitian(p.space().clone(), seed);
        let pm = p.op().matrix();
        let q = p.complement();
        let qm = q.matrix();
        let g = pm * h.matrix() * qm + qm * h.matrix() * pm;
        Operator::new(p.space().clone(), g).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn block_off_diagonal_generators_pass(seed in any::<u64>(), n in 1usize..5, odd in any::<bool>()) {
            let parity = if odd { Parity::Odd } else { Parity::Even };
            let p = parity_projector(Axis::X, parity, n).unwrap();
            let g = random_off_diagonal(&p, seed);
            let check = is_off_diagonal(&g, &p, HYPOTHESIS_TOL).unwrap();
            prop_assert!(check.off_diagonal, "{:?}", check);
        }

        #[test]
        fn z_parity_split_preserves_x_correlations(seed in any::<u64>(), n in 2usize..5) {
            let rho = random_density(HilbertSpace::spin_register(n).unwrap(), 1 << n, seed).unwrap();
            let p = parity_projector(Axis::Z, Parity::Even, n).unwrap();
            let split = sector_split(&rho, &p).unwrap();
            prop_assert!((split.inside.weight + split.outside.weight - 1.0).abs() < 1e-10);
            for i in 0..n {
                for j in 0..n {
                    if i == j { continue; }
                    let xx = &pauli_on_site(Axis::X, i, n).unwrap() * &pauli_on_site(Axis::X, j, n).unwrap();
                    let before = expectation(&rho, &xx).unwrap().re;
                    let mut after = 0.0;
                    for branch in [&split.inside, &split.outside] {
                        if let Some(s) = &branch.state {
                            after += branch.weight * expectation(s, &xx).unwrap().re;
                        }
                    }
                    prop_assert!((before - after).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn sector_states_pass_support_check(seed in any::<u64>(), n in 1usize..5, rank_pick in 0usize..100) {
            let p = parity_projector(Axis::X, Parity::Even, n).unwrap();
            let rank = 1 + rank_pick % p.rank();
            let rho = random_density_in_sector(&p, rank, seed).unwrap();
            let check = is_supported_in_sector(&rho, &p, 1e-12).unwrap();
            prop_assert!(check.supported, "residual {}", check.residual);
        }
    }
}
