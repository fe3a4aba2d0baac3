//! Parity extraction by a CNOT ladder onto an ancilla, followed by
//! measurement of the ancilla and post-selection.
//!
//! The ancilla is the last qubit of an (N+1)-qubit register and starts in
//! |0⟩. After CNOT(i → ancilla) for every system qubit, the ancilla holds
//! Σᵢ zᵢ mod 2, with zᵢ = 1 meaning σᶻ = -1. Outcome 0 therefore selects the
//! even sector, the +1 eigenspace of ∏σᶻ, and outcome 1 the odd one.

use serde::{Deserialize, Serialize};

use crate::operators::{
    pauli_on_site, polarized_qubit, product_state, single_site, trace_of_product, Axis, DensityOperator,
    HilbertSpace, Operator, MAX_REGISTER_SPINS,
};
use crate::spins::dicke_product_amplitudes;
use crate::symmetry::{project_branch, EMPTY_BRANCH_WEIGHT};
use crate::{Complex, Error, Matrix, Result};

/// Standard controlled-NOT on an `qubits`-qubit register.
pub fn cnot(control: usize, target: usize, qubits: usize) -> Result<Operator> {
    let space = HilbertSpace::spin_register(qubits)?;
    for site in [control, target] {
        if site >= qubits {
            return Err(Error::SiteOutOfRange { site, spins: qubits });
        }
    }
    if control == target {
        return Err(Error::InvalidArgument(format!("control and target are both qubit {control}")));
    }
    let c = 1usize << (qubits - 1 - control);
    let t = 1usize << (qubits - 1 - target);
    let image = |x: usize| if x & c != 0 { x ^ t } else { x };
    Ok(Operator::from_fn(space, |y, x| {
        Complex::new(if image(x) == y { 1.0 } else { 0.0 }, 0.0)
    }))
}

/// H^⊗N.
pub fn hadamard_layer(qubits: usize) -> Result<Operator> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let local = Matrix::from_fn(2, 2, |i, j| Complex::new(if i == 1 && j == 1 { -h } else { h }, 0.0));
    let mut acc = Operator::identity(HilbertSpace::spin_register(qubits)?);
    for site in 0..qubits {
        acc = &acc * &single_site(&local, site, qubits)?;
    }
    Ok(acc)
}

/// CNOT(i → N) for i = 0..N on N system qubits plus the ancilla.
pub fn parity_ladder(system: usize) -> Result<Operator> {
    let qubits = system + 1;
    let mut acc = Operator::identity(HilbertSpace::spin_register(qubits)?);
    for i in 0..system {
        acc = &cnot(i, system, qubits)? * &acc;
    }
    Ok(acc)
}

/// Which parity ∏σᵃ the circuit extracts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityBasis {
    /// CNOT ladder as is.
    Z,
    /// Ladder conjugated by Hadamards on every system qubit.
    X,
}

#[derive(Clone, Debug)]
pub struct CircuitOutcome {
    pub outcome_bit: u8,
    pub probability: f64,
    /// Normalized post-selected state; `None` when the outcome has zero weight.
    pub post_state: Option<DensityOperator>,
}

#[derive(Clone, Debug)]
pub struct ParityExtraction {
    /// Ancilla outcome 0.
    pub even: CircuitOutcome,
    /// Ancilla outcome 1.
    pub odd: CircuitOutcome,
}

/// Runs the ladder on ρ ⊗ |0⟩⟨0|, measures the ancilla and returns both
/// post-selected system states.
pub fn parity_extraction(rho: &DensityOperator, basis: ParityBasis) -> Result<ParityExtraction> {
    let HilbertSpace::SpinRegister { spins: n } = *rho.space() else {
        return Err(Error::InvalidArgument(format!("parity extraction needs a qubit register, got {}", rho.space())));
    };
    if n + 1 > MAX_REGISTER_SPINS {
        return Err(Error::TooManySpins {
            spins: n + 1,
            cap: MAX_REGISTER_SPINS,
        });
    }
    let system = match basis {
        ParityBasis::Z => rho.matrix().clone(),
        ParityBasis::X => {
            let h = hadamard_layer(n)?;
            h.matrix() * rho.matrix() * h.matrix()
        }
    };
    // ρ ⊗ |0⟩⟨0|: system index i sits at 2i.
    let qubits = n + 1;
    let dim = 1usize << qubits;
    let extended = Matrix::from_fn(dim, dim, |r, c| {
        if r & 1 == 0 && c & 1 == 0 {
            system[(r >> 1, c >> 1)]
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    let u = parity_ladder(n)?;
    let evolved = u.matrix() * &extended * u.matrix().adjoint();

    let back = match basis {
        ParityBasis::Z => None,
        ParityBasis::X => Some(hadamard_layer(n)?),
    };
    let space = rho.space().clone();
    let branch = |bit: usize| -> CircuitOutcome {
        // ⟨b|_anc evolved |b⟩_anc, the trace over a projected ancilla.
        let sys_dim = 1usize << n;
        let mut reduced = Matrix::from_fn(sys_dim, sys_dim, |i, j| evolved[((i << 1) | bit, (j << 1) | bit)]);
        if let Some(h) = &back {
            reduced = h.matrix() * &reduced * h.matrix();
        }
        let probability = (0..sys_dim).map(|i| reduced[(i, i)].re).sum::<f64>();
        let post_state = (probability > EMPTY_BRANCH_WEIGHT).then(|| {
            let normalized = Matrix::from_fn(sys_dim, sys_dim, |i, j| reduced[(i, j)] / probability);
            DensityOperator::from_trusted(Operator::from_matrix_unchecked(space.clone(), normalized))
        });
        CircuitOutcome {
            outcome_bit: bit as u8,
            probability: probability.clamp(0.0, 1.0),
            post_state,
        }
    };
    Ok(ParityExtraction {
        even: branch(0),
        odd: branch(1),
    })
}

/// Sign of the superposition (|→ₓ⟩^⊗N ± |←ₓ⟩^⊗N)/√2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CatSign {
    /// Eigenvalue +1 of ∏σᶻ; produced by outcome 0.
    Plus,
    /// Eigenvalue -1 of ∏σᶻ; produced by outcome 1.
    Minus,
}

/// (|→ₓ⟩^⊗N ± |←ₓ⟩^⊗N)/√2 on an N-qubit register.
pub fn cat_state(spins: usize, sign: CatSign) -> Result<DensityOperator> {
    let space = HilbertSpace::spin_register(spins)?;
    let right = product_state(&vec![polarized_qubit(Axis::X); spins]);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let left = product_state(&vec![[Complex::new(h, 0.0), Complex::new(-h, 0.0)]; spins]);
    let s = match sign {
        CatSign::Plus => 1.0,
        CatSign::Minus => -1.0,
    };
    let psi: Vec<Complex> = right.iter().zip(&left).map(|(r, l)| r + l * s).collect();
    DensityOperator::pure(space, &psi)
}

/// The same cat written in the Dicke sector: amplitudes c_k (1 ± (-1)^k)/√2
/// on top of the x-polarized coherent state's c_k.
pub fn dicke_cat_state(spins: usize, sign: CatSign) -> Result<DensityOperator> {
    let space = HilbertSpace::dicke(spins)?;
    let s = match sign {
        CatSign::Plus => 1.0,
        CatSign::Minus => -1.0,
    };
    let psi: Vec<Complex> = dicke_product_amplitudes(polarized_qubit(Axis::X), spins)
        .into_iter()
        .enumerate()
        .map(|(k, c)| c * ((1.0 + s * if k % 2 == 0 { 1.0 } else { -1.0 }) * std::f64::consts::FRAC_1_SQRT_2))
        .collect();
    DensityOperator::pure(space, &psi)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CorrelationRow {
    pub i: usize,
    pub j: usize,
    /// Tr(ρ σᵢˣσⱼˣ).
    pub before: f64,
    /// Tr[(PρP + QρQ) σᵢˣσⱼˣ] with P the even z-parity projector.
    pub after: f64,
}

impl CorrelationRow {
    pub fn difference(&self) -> f64 {
        (self.after - self.before).abs()
    }
}

/// ⟨σᵢˣσⱼˣ⟩ before and after the z-parity measurement for each pair; every
/// pair i < j when `pairs` is empty.
pub fn correlation_preservation_report(rho: &DensityOperator, pairs: &[(usize, usize)]) -> Result<Vec<CorrelationRow>> {
    let HilbertSpace::SpinRegister { spins: n } = *rho.space() else {
        return Err(Error::InvalidArgument(format!("expected a qubit register, got {}", rho.space())));
    };
    let all: Vec<(usize, usize)>;
    let pairs = if pairs.is_empty() {
        all = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        &all[..]
    } else {
        pairs
    };
    let parity = crate::symmetry::parity_projector(Axis::Z, crate::symmetry::Parity::Even, n)?;
    let p = parity.op().matrix();
    let q = parity.complement();
    let even = project_branch(rho, p);
    let odd = project_branch(rho, q.matrix());
    let mut rows = Vec::with_capacity(pairs.len());
    for &(i, j) in pairs {
        if i == j {
            return Err(Error::InvalidArgument(format!("pair ({i}, {j}) repeats a site")));
        }
        let xx = &pauli_on_site(Axis::X, i, n)? * &pauli_on_site(Axis::X, j, n)?;
        let before = trace_of_product(rho.matrix(), xx.matrix()).re;
        let mut after = 0.0;
        for branch in [&even, &odd] {
            if let Some(state) = &branch.state {
                after += branch.weight * trace_of_product(state.matrix(), xx.matrix()).re;
            }
        }
        rows.push(CorrelationRow { i, j, before, after });
    }
    Ok(rows)
}
