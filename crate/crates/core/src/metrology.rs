//! Phase-estimation figures of merit.
//!
//! Conventions: the phase is imprinted by U_θ = e^{-iθG}, expectation values at
//! phase θ are ⟨O⟩_θ = Tr(U_θ† O U_θ ρ), and i∂_θ⟨O⟩_θ = ⟨[O, G]⟩_θ.

use serde::Serialize;

use crate::operators::{
    bit_of, ensure_same, second_moment, single_site, spectral_decompose, trace_of_product, DensityOperator,
    HilbertSpace, Operator, SpectralDecomposition, Spectrum, HERMITIAN_TOL,
};
use crate::symmetry::{is_off_diagonal, is_supported_in_sector, SectorProjector, HYPOTHESIS_TOL};
use crate::{Complex, Error, Matrix, Result, Tolerances};

/// Pairs with p_n + p_m at or below this are dropped from the QFI sum.
pub const DEFAULT_EIG_CUTOFF: f64 = 1e-12;

/// Largest phase used for the θ → 0 extrapolation of ξ_P⁻².
pub const RICHARDSON_THETA: f64 = 1e-4;

/// Variances at or below this leave a signal-to-noise ratio undefined.
pub const ZERO_VARIANCE: f64 = 1e-14;

/// Quantum Fisher information
/// F_Q = 2 Σ_{nm} (p_n - p_m)²/(p_n + p_m) |⟨n|G|m⟩|² over the eigenbasis of ρ.
///
/// When ρ was built from a known orthonormal ensemble, the sum over its kernel
/// is carried out through completeness, Σ_{m∈ker} |⟨n|G|m⟩|² = ⟨n|G²|n⟩ - Σ_{m∈supp} |⟨n|G|m⟩|²,
/// which is exact because those eigenvalues vanish identically.
pub fn qfi(rho: &DensityOperator, g: &Operator, eig_cutoff: f64) -> Result<f64> {
    ensure_same(rho.space(), g.space())?;
    g.ensure_hermitian(HERMITIAN_TOL)?;
    let total = match rho.spectrum() {
        Spectrum::Full(d) => {
            let v = d.eigenvectors();
            let p = d.eigenvalues();
            let gm = v.adjoint() * g.matrix() * v;
            pair_sum(p, &gm, eig_cutoff)
        }
        Spectrum::Support(s) => {
            let p = &s.probs;
            let gv = g.matrix() * &s.vectors;
            let gm = s.vectors.adjoint() * &gv;
            let mut total = pair_sum(p, &gm, eig_cutoff);
            for (n, &pn) in p.iter().enumerate() {
                if pn <= eig_cutoff {
                    continue;
                }
                let g2: f64 = gv.col(n).iter().map(|z| z.norm_sqr()).sum();
                let inside: f64 = (0..p.len()).map(|m| gm[(n, m)].norm_sqr()).sum();
                // Ordered pairs (n, m) and (m, n) with m in the kernel.
                total += 4.0 * pn * (g2 - inside).max(0.0);
            }
            total
        }
    };
    Ok(total)
}

pub(crate) fn pair_sum(p: &[f64], gm: &Matrix, cutoff: f64) -> f64 {
    let mut total = 0.0;
    for n in 0..p.len() {
        for m in 0..p.len() {
            let denom = p[n] + p[m];
            if denom > cutoff {
                let diff = p[n] - p[m];
                total += diff * diff / denom * gm[(n, m)].norm_sqr();
            }
        }
    }
    2.0 * total
}

/// The unitary family e^{-iθG}, diagonalized once and reused across phases.
#[derive(Clone, Debug)]
pub struct PhaseEncoding {
    generator: Operator,
    spectrum: SpectralDecomposition,
}

impl PhaseEncoding {
    pub fn new(generator: &Operator) -> Result<Self> {
        let spectrum = spectral_decompose(generator)?;
        Ok(Self {
            generator: generator.clone(),
            spectrum,
        })
    }

    pub fn generator(&self) -> &Operator {
        &self.generator
    }

    /// U_θ = e^{-iθG}.
    pub fn unitary(&self, theta: f64) -> Operator {
        self.spectrum.propagator(theta)
    }

    /// ρ_θ = U_θ ρ U_θ†, so that Tr(ρ_θ O) = ⟨O⟩_θ.
    pub fn encode(&self, rho: &DensityOperator, theta: f64) -> Result<DensityOperator> {
        ensure_same(rho.space(), self.generator.space())?;
        Ok(rho.conjugate_by(&self.unitary(theta)))
    }
}

/// Squared signal-to-noise ratio ξ_O⁻² = |⟨[O,G]⟩_θ|² / Var(O)_θ.
///
/// A vanishing variance yields [`Error::ZeroVariance`] rather than zero.
pub fn signal_to_noise(rho: &DensityOperator, o: &Operator, g: &Operator, theta: f64) -> Result<f64> {
    ensure_same(rho.space(), o.space())?;
    o.ensure_hermitian(HERMITIAN_TOL)?;
    let encoding = PhaseEncoding::new(g)?;
    signal_to_noise_with(&encoding, rho, o, theta)
}

/// [`signal_to_noise`] with a pre-diagonalized generator.
pub fn signal_to_noise_with(encoding: &PhaseEncoding, rho: &DensityOperator, o: &Operator, theta: f64) -> Result<f64> {
    ensure_same(rho.space(), o.space())?;
    let rho_theta = encoding.encode(rho, theta)?;
    let commutator = o.commutator(encoding.generator())?;
    let signal = trace_of_product(rho_theta.matrix(), commutator.matrix());
    let mean = trace_of_product(rho_theta.matrix(), o.matrix()).re;
    let variance = second_moment(&rho_theta, o) - mean * mean;
    if variance <= ZERO_VARIANCE {
        return Err(Error::ZeroVariance { variance });
    }
    Ok(signal.norm_sqr() / variance)
}

/// ⟨P⟩_θ evaluated through 1 - ⟨Q⟩_θ, plus ⟨[P, G]⟩_θ.
///
/// For ρ = PρP the complement weight is Tr(A ρ A†) with A = Q U_θ P, whose
/// entries are O(θ); forming it first keeps ⟨Q⟩_θ accurate to relative
/// rounding even when it is of order θ².
struct ProjectorResponse {
    q: f64,
    signal: Complex,
}

fn projector_response(
    encoding: &PhaseEncoding,
    rho: &DensityOperator,
    projector: &SectorProjector,
    in_sector: bool,
    theta: f64,
) -> ProjectorResponse {
    let u = encoding.unitary(theta);
    let p = projector.op().matrix();
    let q_op = projector.complement();
    let q = q_op.matrix();
    let complement_weight = if in_sector {
        let a = q * u.matrix() * p;
        trace_of_product(&(&a * rho.matrix()), &a.adjoint().to_owned()).re
    } else {
        let rho_theta = u.matrix() * rho.matrix() * u.matrix().adjoint();
        trace_of_product(&rho_theta, q).re
    };
    let rho_theta = u.matrix() * rho.matrix() * u.matrix().adjoint();
    let g = encoding.generator().matrix();
    let commutator = p * g - g * p;
    ProjectorResponse {
        q: complement_weight,
        signal: trace_of_product(&rho_theta, &commutator),
    }
}

/// ξ_P⁻² at phase θ for a sector projector P, using Var(P)_θ = ⟨P⟩_θ⟨Q⟩_θ.
pub fn projector_signal_to_noise(
    encoding: &PhaseEncoding,
    rho: &DensityOperator,
    projector: &SectorProjector,
    theta: f64,
) -> Result<f64> {
    ensure_same(rho.space(), projector.space())?;
    let in_sector = is_supported_in_sector(rho, projector, HYPOTHESIS_TOL)?.supported;
    let r = projector_response(encoding, rho, projector, in_sector, theta);
    let variance = (1.0 - r.q) * r.q;
    if variance <= ZERO_VARIANCE {
        return Err(Error::ZeroVariance { variance });
    }
    Ok(r.signal.norm_sqr() / variance)
}

/// θ → 0 limit of ξ_P⁻² by Richardson extrapolation from θ* and θ*/2.
pub fn projector_signal_to_noise_limit(
    encoding: &PhaseEncoding,
    rho: &DensityOperator,
    projector: &SectorProjector,
    theta_star: f64,
) -> Result<f64> {
    let coarse = projector_signal_to_noise(encoding, rho, projector, theta_star)?;
    let fine = projector_signal_to_noise(encoding, rho, projector, theta_star / 2.0)?;
    Ok(2.0 * fine - coarse)
}

/// ⟨P⟩_θ on a grid of phases.
#[derive(Clone, Debug, Serialize)]
pub struct SensitivityCurve {
    pub thetas: Vec<f64>,
    pub p_values: Vec<f64>,
    /// (1 - ⟨P⟩_θ)/θ² at the smallest nonzero |θ|; approaches ⟨G²⟩.
    pub curvature_estimate: Option<f64>,
}

/// Exact ⟨P⟩_θ along `thetas`; requires both theorem hypotheses at 1e-10.
pub fn projector_sensitivity_curve(
    rho: &DensityOperator,
    projector: &SectorProjector,
    g: &Operator,
    thetas: &[f64],
) -> Result<SensitivityCurve> {
    let support = is_supported_in_sector(rho, projector, HYPOTHESIS_TOL)?;
    let offdiag = is_off_diagonal(g, projector, HYPOTHESIS_TOL)?;
    if !(support.supported && offdiag.off_diagonal) {
        return Err(Error::HypothesisViolation {
            sector: support.residual,
            diagonal: offdiag.diagonal_residual,
            completion: offdiag.completion_residual,
        });
    }
    let encoding = PhaseEncoding::new(g)?;
    let mut p_values = Vec::with_capacity(thetas.len());
    let mut curvature: Option<(f64, f64)> = None;
    for &theta in thetas {
        let q = if theta == 0.0 {
            0.0
        } else {
            projector_response(&encoding, rho, projector, true, theta).q
        };
        p_values.push(1.0 - q);
        if theta != 0.0 && curvature.is_none_or(|(t, _)| theta.abs() < t) {
            curvature = Some((theta.abs(), q / (theta * theta)));
        }
    }
    Ok(SensitivityCurve {
        thetas: thetas.to_vec(),
        p_values,
        curvature_estimate: curvature.map(|(_, c)| c),
    })
}

/// Outcome of checking ξ_P⁻² = 4⟨G²⟩ = F_Q(G) on one state.
#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub qfi: f64,
    pub four_g2: f64,
    pub four_var: f64,
    /// `None` when Var(P)_θ vanishes, e.g. when G commutes with P.
    pub xi_p_inv2: Option<f64>,
    pub sector_residual: f64,
    pub diagonal_residual: f64,
    pub completion_residual: f64,
    /// |F_Q - 4⟨G²⟩| / max(1, 4⟨G²⟩).
    pub qfi_gap: f64,
    /// |ξ_P⁻² - F_Q| / max(1, F_Q).
    pub xi_gap: Option<f64>,
    pub pass: bool,
}

/// Evaluates every link of the equality chain independently and compares.
///
/// Hypothesis failures do not error; they show up as residuals and `pass = false`.
pub fn check_theorem(
    rho: &DensityOperator,
    projector: &SectorProjector,
    g: &Operator,
    tol: &Tolerances,
) -> Result<TheoremReport> {
    ensure_same(rho.space(), g.space())?;
    let support = is_supported_in_sector(rho, projector, tol.hypothesis)?;
    let offdiag = is_off_diagonal(g, projector, tol.hypothesis)?;

    let f_q = qfi(rho, g, tol.eig_cutoff)?;
    let g2 = second_moment(rho, g);
    let mean = trace_of_product(rho.matrix(), g.matrix()).re;
    let four_g2 = 4.0 * g2;
    let four_var = 4.0 * (g2 - mean * mean);

    let encoding = PhaseEncoding::new(g)?;
    let xi = match projector_signal_to_noise_limit(&encoding, rho, projector, RICHARDSON_THETA) {
        Ok(x) => Some(x),
        Err(Error::ZeroVariance { .. }) => None,
        Err(e) => return Err(e),
    };

    let qfi_gap = (f_q - four_g2).abs() / four_g2.max(1.0);
    let xi_gap = xi.map(|x| (x - f_q).abs() / f_q.max(1.0));
    let pass = support.supported
        && offdiag.off_diagonal
        && qfi_gap <= tol.qfi_equality
        && xi_gap.is_some_and(|gap| gap <= tol.xi_equality);

    Ok(TheoremReport {
        qfi: f_q,
        four_g2,
        four_var,
        xi_p_inv2: xi,
        sector_residual: support.residual,
        diagonal_residual: offdiag.diagonal_residual,
        completion_residual: offdiag.completion_residual,
        qfi_gap,
        xi_gap,
        pass,
    })
}

/// ⟨G²⟩ > Σᵢ⟨Gᵢ²⟩, the form the witness takes when PGᵢP = 0 for every i.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReducedWitness {
    pub g2: f64,
    pub local_g2_sum: f64,
    pub entangled: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub qfi: f64,
    /// 4 Σᵢ Var(Gᵢ).
    pub bound: f64,
    pub entangled: bool,
    pub reduced: Option<ReducedWitness>,
}

/// Margin by which a witness must be violated to count.
pub const WITNESS_MARGIN: f64 = 1e-8;

/// Separability is excluded when F_Q(Σᵢ Gᵢ) > 4 Σᵢ Var(Gᵢ).
///
/// Each term must act on a single site of a spin register. When `sector` is
/// given, ρ lies in it and every term satisfies PGᵢP = 0, the reduced
/// comparison of ⟨G²⟩ with Σᵢ⟨Gᵢ²⟩ is reported as well.
pub fn separability_witness(
    rho: &DensityOperator,
    locals: &[Operator],
    sector: Option<&SectorProjector>,
) -> Result<WitnessReport> {
    if locals.is_empty() {
        return Err(Error::InvalidArgument("the witness needs at least one local term".into()));
    }
    for (index, term) in locals.iter().enumerate() {
        ensure_same(rho.space(), term.space())?;
        term.ensure_hermitian(HERMITIAN_TOL)?;
        if local_site(term).is_none() {
            return Err(Error::NonLocalTerm { index });
        }
    }
    let mut g = Operator::zeros(rho.space().clone());
    let mut bound = 0.0;
    let mut local_g2_sum = 0.0;
    for term in locals {
        g = &g + term;
        let m = trace_of_product(rho.matrix(), term.matrix()).re;
        let t2 = second_moment(rho, term);
        bound += 4.0 * (t2 - m * m);
        local_g2_sum += t2;
    }
    let f_q = qfi(rho, &g, DEFAULT_EIG_CUTOFF)?;

    let reduced = match sector {
        Some(p) => {
            let supported = is_supported_in_sector(rho, p, HYPOTHESIS_TOL)?.supported;
            let mut all_off = true;
            for term in locals {
                if crate::operators::max_abs(p.sandwich(term)?.matrix()) > HYPOTHESIS_TOL {
                    all_off = false;
                }
            }
            (supported && all_off).then(|| {
                let g2 = second_moment(rho, &g);
                ReducedWitness {
                    g2,
                    local_g2_sum,
                    entangled: g2 > local_g2_sum + WITNESS_MARGIN,
                }
            })
        }
        None => None,
    };

    Ok(WitnessReport {
        qfi: f_q,
        bound,
        entangled: f_q > bound + WITNESS_MARGIN,
        reduced,
    })
}

/// Site on which `op` acts nontrivially, if it is a single-site operator.
/// Multiples of the identity report site 0.
fn local_site(op: &Operator) -> Option<usize> {
    let HilbertSpace::SpinRegister { spins } = *op.space() else {
        return None;
    };
    let tol = 1e-12 * op.max_abs().max(1.0);
    (0..spins).find(|&site| {
        let local = reduce_to_site(op, site, spins);
        single_site(&local, site, spins)
            .ok()
            .and_then(|e| e.distance(op).ok())
            .is_some_and(|d| d <= tol)
    })
}

/// Normalized partial trace over every site except `site`.
fn reduce_to_site(op: &Operator, site: usize, spins: usize) -> Matrix {
    let dim = op.dim();
    let mask = 1usize << (spins - 1 - site);
    let mut local = Matrix::zeros(2, 2);
    for col in 0..dim {
        let bc = bit_of(col, site, spins);
        for br in 0..2 {
            let row = if br == bc { col } else { col ^ mask };
            local[(br, bc)] += op.get(row, col);
        }
    }
    let norm = (dim / 2) as f64;
    Matrix::from_fn(2, 2, |i, j| local[(i, j)] / norm)
}
