//! Two species of bosons on N mode pairs (aᵢ, bᵢ) in a truncated Fock space.
//!
//! The universe is the direct sum of fixed-number blocks (N_A + k, N_B - k)
//! for |k| ≤ k_max. Inside a block, occupation vectors (n_{a1}..n_{aN},
//! n_{b1}..n_{bN}) are listed in ascending lexicographic order, which makes a
//! block the Kronecker product of the two single-species bases (A outer).
//!
//! Single-species states live on `FockBlock { n_b: 0, k_max: 0 }` spaces.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::metrology::{pair_sum, DEFAULT_EIG_CUTOFF};
use crate::operators::{random_density, DensityOperator, HilbertSpace, Operator, Support, HERMITIAN_TOL};
use crate::symmetry::{SectorLabel, SectorProjector};
use crate::{Complex, Error, Matrix, Result};

/// Largest Fock universe that is enumerated.
pub const MAX_FOCK_DIM: usize = 20_000;

/// Coherence statistics above this count as a witness.
pub const COHERENCE_THRESHOLD: f64 = 1e-10;

/// Occupation numbers of one basis state.
pub type Occupation = Vec<u16>;

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n.checked_sub(k)?);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// C(n + N - 1, N - 1): ways to place n bosons in N modes.
pub fn species_dimension(modes: usize, particles: usize) -> Option<usize> {
    if modes == 0 {
        return None;
    }
    binomial(particles + modes - 1, modes - 1)
}

/// C(N_A + N - 1, N - 1) · C(N_B + N - 1, N - 1).
pub fn block_dimension(modes: usize, n_a: usize, n_b: usize) -> Option<usize> {
    species_dimension(modes, n_a)?.checked_mul(species_dimension(modes, n_b)?)
}

/// All occupation vectors of `particles` bosons in `modes` modes, ascending.
pub fn species_basis(modes: usize, particles: usize) -> Vec<Occupation> {
    fn fill(pos: usize, remaining: usize, cur: &mut Occupation, out: &mut Vec<Occupation>) {
        if pos + 1 == cur.len() {
            cur[pos] = remaining as u16;
            out.push(cur.clone());
            return;
        }
        for v in 0..=remaining {
            cur[pos] = v as u16;
            fill(pos + 1, remaining - v, cur, out);
        }
    }
    let mut out = Vec::new();
    fill(0, particles, &mut vec![0; modes], &mut out);
    out
}

fn check_modes(modes: usize) -> Result<()> {
    if modes == 0 {
        return Err(Error::InvalidArgument("at least one mode pair is required".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BlockInfo {
    pub n_a: usize,
    pub n_b: usize,
    pub offset: usize,
    pub dim: usize,
}

/// Enumerated basis of the blocks (N_A + k, N_B - k), |k| ≤ k_max.
#[derive(Clone, Debug)]
pub struct FockUniverse {
    modes: usize,
    n_a: usize,
    n_b: usize,
    k_max: usize,
    blocks: Vec<BlockInfo>,
    states: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

impl FockUniverse {
    /// `k_max` must be at least 1 so that G² closes on the central block.
    pub fn new(modes: usize, n_a: usize, n_b: usize, k_max: usize) -> Result<Self> {
        check_modes(modes)?;
        if k_max < 1 {
            return Err(Error::InvalidArgument(
                "k_max must be at least 1 so that the generator can leave the central block".into(),
            ));
        }
        let k_max_i = k_max as i64;
        let mut blocks = Vec::new();
        let mut total = 0usize;
        for k in -k_max_i..=k_max_i {
            let (a, b) = (n_a as i64 + k, n_b as i64 - k);
            if a < 0 || b < 0 {
                continue;
            }
            let (a, b) = (a as usize, b as usize);
            let dim = block_dimension(modes, a, b).unwrap_or(usize::MAX);
            total = total.saturating_add(dim);
            if total > MAX_FOCK_DIM {
                return Err(Error::DimensionCap {
                    dim: total,
                    cap: MAX_FOCK_DIM,
                });
            }
            blocks.push(BlockInfo {
                n_a: a,
                n_b: b,
                offset: total - dim,
                dim,
            });
        }
        let mut states = Vec::with_capacity(total);
        for block in &blocks {
            let basis_b = species_basis(modes, block.n_b);
            for occ_a in species_basis(modes, block.n_a) {
                for occ_b in &basis_b {
                    let mut occ = occ_a.clone();
                    occ.extend_from_slice(occ_b);
                    states.push(occ);
                }
            }
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self {
            modes,
            n_a,
            n_b,
            k_max,
            blocks,
            states,
            index,
        })
    }

    /// Rebuilds the universe that a `FockBlock` space label describes.
    pub fn for_space(space: &HilbertSpace) -> Result<Self> {
        let HilbertSpace::FockBlock {
            modes,
            n_a,
            n_b,
            k_max,
            ..
        } = *space
        else {
            return Err(Error::InvalidArgument(format!("{space} is not a Fock universe")));
        };
        let universe = Self::new(modes, n_a, n_b, k_max)?;
        crate::operators::ensure_same(&universe.space(), space)?;
        Ok(universe)
    }

    pub fn space(&self) -> HilbertSpace {
        HilbertSpace::FockBlock {
            modes: self.modes,
            n_a: self.n_a,
            n_b: self.n_b,
            k_max: self.k_max,
            dim: self.dim(),
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn blocks(&self) -> &[BlockInfo] {
        &self.blocks
    }

    /// The block holding `n_a` bosons of species A.
    pub fn block(&self, n_a: usize) -> Option<&BlockInfo> {
        self.blocks.iter().find(|b| b.n_a == n_a)
    }

    pub fn occupation(&self, index: usize) -> &[u16] {
        &self.states[index]
    }

    pub fn index_of(&self, occupation: &[u16]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// G|x⟩ for G = -½ Σᵢ (aᵢ†bᵢ + bᵢ†aᵢ), as (target occupation, amplitude).
    fn generator_action(&self, occ: &[u16]) -> Vec<(Occupation, f64)> {
        let n = self.modes;
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            let (a, b) = (occ[i] as f64, occ[n + i] as f64);
            if occ[n + i] > 0 {
                let mut t = occ.to_vec();
                t[i] += 1;
                t[n + i] -= 1;
                out.push((t, -0.5 * ((a + 1.0) * b).sqrt()));
            }
            if occ[i] > 0 {
                let mut t = occ.to_vec();
                t[i] -= 1;
                t[n + i] += 1;
                out.push((t, -0.5 * (a * (b + 1.0)).sqrt()));
            }
        }
        out
    }
}

/// Dense G = -½ Σᵢ (aᵢ†bᵢ + bᵢ†aᵢ) on the universe; transitions leaving it are dropped.
pub fn tunneling_generator(universe: &FockUniverse) -> Result<Operator> {
    let dim = universe.dim();
    let mut m = Matrix::zeros(dim, dim);
    for x in 0..dim {
        for (target, amp) in universe.generator_action(&universe.states[x]) {
            if let Some(y) = universe.index_of(&target) {
                m[(y, x)] += Complex::new(amp, 0.0);
            }
        }
    }
    Operator::hermitian(universe.space(), m)
}

/// Projector onto the block with `n_a` bosons of species A.
pub fn number_projector(universe: &FockUniverse, n_a: usize) -> Result<SectorProjector> {
    let block = universe
        .block(n_a)
        .ok_or_else(|| Error::InvalidArgument(format!("no block with N_A = {n_a} in the universe")))?;
    let diag: Vec<f64> = (0..universe.dim())
        .map(|i| {
            if (block.offset..block.offset + block.dim).contains(&i) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let op = Operator::diagonal(universe.space(), &diag)?;
    SectorProjector::from_exact(op, SectorLabel::BosonNumber { n_a })
}

/// ⟨aᵢ†aⱼ⟩ for one species.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SpdmRepr", into = "SpdmRepr")]
pub struct SingleParticleDensityMatrix {
    entries: Matrix,
    particles: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpdmRepr {
    particles: f64,
    /// Row-major [re, im] pairs.
    entries: Vec<Vec<[f64; 2]>>,
}

impl TryFrom<SpdmRepr> for SingleParticleDensityMatrix {
    type Error = Error;

    fn try_from(r: SpdmRepr) -> Result<Self> {
        let n = r.entries.len();
        if n == 0 || r.entries.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidArgument("SPDM entries must form a nonempty square matrix".into()));
        }
        let m = Matrix::from_fn(n, n, |i, j| Complex::new(r.entries[i][j][0], r.entries[i][j][1]));
        Self::new(m, r.particles)
    }
}

impl From<SingleParticleDensityMatrix> for SpdmRepr {
    fn from(s: SingleParticleDensityMatrix) -> Self {
        let n = s.modes();
        SpdmRepr {
            particles: s.particles,
            entries: (0..n)
                .map(|i| (0..n).map(|j| [s.entries[(i, j)].re, s.entries[(i, j)].im]).collect())
                .collect(),
        }
    }
}

impl SingleParticleDensityMatrix {
    /// Validates Hermiticity (1e-12), positivity (-1e-10) and the trace (1e-10).
    pub fn new(entries: Matrix, particles: f64) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::InvalidArgument("SPDM must be a nonempty square matrix".into()));
        }
        let space = HilbertSpace::FockBlock {
            modes: n,
            n_a: 1,
            n_b: 0,
            k_max: 0,
            dim: n,
        };
        let op = Operator::new(space, entries)?;
        let residual = op.hermiticity_residual();
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        let op = op.hermitian_part();
        let (values, _) = crate::operators::hermitian_eigen(op.matrix())?;
        if values[0] < -1e-10 {
            return Err(Error::InvalidArgument(format!("SPDM has negative eigenvalue {:e}", values[0])));
        }
        let trace = op.trace().re;
        if (trace - particles).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("SPDM trace {trace} differs from {particles}")));
        }
        Ok(Self {
            entries: op.into_matrix(),
            particles,
        })
    }

    /// All entries N_A/N, as for an ideal condensate.
    pub fn uniform(modes: usize, particles: usize) -> Result<Self> {
        check_modes(modes)?;
        let v = particles as f64 / modes as f64;
        Self::new(Matrix::from_fn(modes, modes, |_, _| Complex::new(v, 0.0)), particles as f64)
    }

    /// diag(n₁, …, n_N).
    pub fn diagonal(occupations: &[f64]) -> Result<Self> {
        check_modes(occupations.len())?;
        let n = occupations.len();
        let m = Matrix::from_fn(n, n, |i, j| Complex::new(if i == j { occupations[i] } else { 0.0 }, 0.0));
        Self::new(m, occupations.iter().sum())
    }

    pub fn modes(&self) -> usize {
        self.entries.nrows()
    }

    pub fn particles(&self) -> f64 {
        self.particles
    }

    pub fn get(&self, i: usize, j: usize) -> Complex {
        self.entries[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.entries
    }
}

/// A fixed-number state of one species.
#[derive(Clone, Debug)]
pub struct SpeciesState {
    modes: usize,
    particles: usize,
    rho: DensityOperator,
}

impl SpeciesState {
    /// Space label for `particles` bosons in `modes` modes.
    pub fn space(modes: usize, particles: usize) -> Result<HilbertSpace> {
        check_modes(modes)?;
        let dim = species_dimension(modes, particles)
            .filter(|&d| d <= MAX_FOCK_DIM)
            .ok_or(Error::DimensionCap {
                dim: usize::MAX,
                cap: MAX_FOCK_DIM,
            })?;
        Ok(HilbertSpace::FockBlock {
            modes,
            n_a: particles,
            n_b: 0,
            k_max: 0,
            dim,
        })
    }

    /// (Σᵢ aᵢ†/√N)^n |vac⟩, normalized.
    pub fn condensate(modes: usize, particles: usize) -> Result<Self> {
        Self::condensate_with_phases(particles, &vec![0.0; modes])
    }

    /// (Σᵢ e^{iφᵢ} aᵢ†/√N)^n |vac⟩, normalized.
    pub fn condensate_with_phases(particles: usize, phases: &[f64]) -> Result<Self> {
        let modes = phases.len();
        let space = Self::space(modes, particles)?;
        let psi: Vec<Complex> = species_basis(modes, particles)
            .iter()
            .map(|occ| {
                let phase: f64 = occ.iter().zip(phases).map(|(&k, &phi)| k as f64 * phi).sum();
                Complex::from_polar(multinomial_probability(occ, modes).sqrt(), phase)
            })
            .collect();
        Ok(Self {
            modes,
            particles,
            rho: DensityOperator::pure(space, &psi)?,
        })
    }

    /// The condensate with all inter-mode coherences removed: a diagonal
    /// mixture with multinomial weights and ⟨aᵢ†aⱼ⟩ = δᵢⱼ n/N.
    pub fn dephased_condensate(modes: usize, particles: usize) -> Result<Self> {
        let space = Self::space(modes, particles)?;
        let probs: Vec<f64> = species_basis(modes, particles)
            .iter()
            .map(|occ| multinomial_probability(occ, modes))
            .collect();
        let d = probs.len();
        let rho = DensityOperator::from_support(
            space,
            Support {
                probs,
                vectors: Matrix::identity(d, d),
            },
        );
        Ok(Self { modes, particles, rho })
    }

    /// |n₁, …, n_N⟩.
    pub fn fock(occupations: &[usize]) -> Result<Self> {
        let modes = occupations.len();
        let particles = occupations.iter().sum();
        let space = Self::space(modes, particles)?;
        let target: Occupation = occupations.iter().map(|&k| k as u16).collect();
        let psi: Vec<Complex> = species_basis(modes, particles)
            .iter()
            .map(|occ| Complex::new(if *occ == target { 1.0 } else { 0.0 }, 0.0))
            .collect();
        Ok(Self {
            modes,
            particles,
            rho: DensityOperator::pure(space, &psi)?,
        })
    }

    /// Seeded random state of the given rank.
    pub fn random(modes: usize, particles: usize, rank: usize, seed: u64) -> Result<Self> {
        let space = Self::space(modes, particles)?;
        Ok(Self {
            modes,
            particles,
            rho: random_density(space, rank, seed)?,
        })
    }

    pub fn from_density(modes: usize, particles: usize, rho: DensityOperator) -> Result<Self> {
        crate::operators::ensure_same(&Self::space(modes, particles)?, rho.space())?;
        Ok(Self { modes, particles, rho })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn density(&self) -> &DensityOperator {
        &self.rho
    }

    /// ⟨aᵢ†aⱼ⟩ = Σ_x ρ[x, y] c, where aᵢ†aⱼ|x⟩ = c|y⟩.
    pub fn spdm(&self) -> Result<SingleParticleDensityMatrix> {
        let basis = species_basis(self.modes, self.particles);
        let index: HashMap<&[u16], usize> = basis.iter().enumerate().map(|(k, o)| (o.as_slice(), k)).collect();
        let rho = self.rho.matrix();
        let n = self.modes;
        let mut m = Matrix::zeros(n, n);
        for (x, occ) in basis.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    if occ[j] == 0 {
                        continue;
                    }
                    let mut t = occ.clone();
                    t[j] -= 1;
                    t[i] += 1;
                    let c = (occ[j] as f64 * t[i] as f64).sqrt();
                    let y = index[t.as_slice()];
                    m[(i, j)] += rho[(x, y)] * c;
                }
            }
        }
        SingleParticleDensityMatrix::new(m, self.particles as f64)
    }
}

/// n!/(Πᵢ nᵢ!) N^{-n}.
fn multinomial_probability(occ: &[u16], modes: usize) -> f64 {
    let ln_fact = |k: u16| (1..=k as usize).map(|v| (v as f64).ln()).sum::<f64>();
    let n: u16 = occ.iter().sum();
    let ln = ln_fact(n) - occ.iter().map(|&k| ln_fact(k)).sum::<f64>() - n as f64 * (modes as f64).ln();
    ln.exp()
}

/// ρ_A ⊗ ρ_B with fixed boson numbers.
#[derive(Clone, Debug)]
pub struct FockProductState {
    pub a: SpeciesState,
    pub b: SpeciesState,
}

impl FockProductState {
    pub fn new(a: SpeciesState, b: SpeciesState) -> Result<Self> {
        if a.modes != b.modes {
            return Err(Error::InvalidArgument(format!(
                "species live on {} and {} modes",
                a.modes, b.modes
            )));
        }
        Ok(Self { a, b })
    }

    /// Two ideal condensates.
    pub fn ideal(modes: usize, n_a: usize, n_b: usize) -> Result<Self> {
        Self::new(SpeciesState::condensate(modes, n_a)?, SpeciesState::condensate(modes, n_b)?)
    }

    /// Two dephased condensates (diagonal SPDMs).
    pub fn dephased(modes: usize, n_a: usize, n_b: usize) -> Result<Self> {
        Self::new(
            SpeciesState::dephased_condensate(modes, n_a)?,
            SpeciesState::dephased_condensate(modes, n_b)?,
        )
    }

    pub fn modes(&self) -> usize {
        self.a.modes
    }

    /// Universe centred on this state's block.
    pub fn universe(&self, k_max: usize) -> Result<FockUniverse> {
        FockUniverse::new(self.modes(), self.a.particles, self.b.particles, k_max)
    }

    pub fn spdms(&self) -> Result<(SingleParticleDensityMatrix, SingleParticleDensityMatrix)> {
        Ok((self.a.spdm()?, self.b.spdm()?))
    }

    /// Eigenpairs of ρ_A ⊗ ρ_B in block coordinates.
    fn block_support(&self) -> Support {
        let sa = self.a.rho.support_above(0.0);
        let sb = self.b.rho.support_above(0.0);
        let (da, db) = (sa.vectors.nrows(), sb.vectors.nrows());
        let (ra, rb) = (sa.probs.len(), sb.probs.len());
        let probs = (0..ra * rb).map(|k| sa.probs[k / rb] * sb.probs[k % rb]).collect();
        let vectors = Matrix::from_fn(da * db, ra * rb, |row, k| {
            sa.vectors[(row / db, k / rb)] * sb.vectors[(row % db, k % rb)]
        });
        Support { probs, vectors }
    }

    fn locate<'u>(&self, universe: &'u FockUniverse) -> Result<&'u BlockInfo> {
        if universe.modes != self.modes() {
            return Err(Error::InvalidArgument("state and universe disagree on the mode count".into()));
        }
        universe
            .block(self.a.particles)
            .filter(|b| b.n_b == self.b.particles)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "block ({}, {}) is not part of the universe",
                    self.a.particles, self.b.particles
                ))
            })
    }

    /// Dense density operator on the universe.
    pub fn density(&self, universe: &FockUniverse) -> Result<DensityOperator> {
        let block = self.locate(universe)?;
        let s = self.block_support();
        let vectors = Matrix::from_fn(universe.dim(), s.probs.len(), |row, k| {
            if (block.offset..block.offset + block.dim).contains(&row) {
                s.vectors[(row - block.offset, k)]
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        Ok(DensityOperator::from_support(
            universe.space(),
            Support {
                probs: s.probs,
                vectors,
            },
        ))
    }
}

/// Pure ideal-condensate product state on the universe with k_max = 1.
pub fn ideal_bec_state(modes: usize, n_a: usize, n_b: usize) -> Result<DensityOperator> {
    let state = FockProductState::ideal(modes, n_a, n_b)?;
    state.density(&state.universe(1)?)
}

/// F_Q(G) = 4⟨G²⟩ = N_A + N_B + Σᵢⱼ (⟨aᵢ†aⱼ⟩⟨bⱼ†bᵢ⟩ + c.c.).
pub fn qfi_closed_form(a: &SingleParticleDensityMatrix, b: &SingleParticleDensityMatrix) -> Result<f64> {
    if a.modes() != b.modes() {
        return Err(Error::InvalidArgument("SPDMs of different sizes".into()));
    }
    let n = a.modes();
    let mut cross = Complex::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            cross += a.get(i, j) * b.get(j, i);
        }
    }
    Ok(a.particles() + b.particles() + 2.0 * cross.re)
}

/// N(n_A + n_B) + 2N² n_A n_B for two ideal condensates.
pub fn ideal_bec_qfi(modes: usize, n_a: usize, n_b: usize) -> f64 {
    let n = modes as f64;
    let (da, db) = (n_a as f64 / n, n_b as f64 / n);
    n * (da + db) + 2.0 * n * n * da * db
}

/// F_sep = N(n_A + n_B + 2 n_A n_B) in terms of the densities n = N_X/N.
pub fn separable_bound(modes: usize, density_a: f64, density_b: f64) -> f64 {
    modes as f64 * (density_a + density_b + 2.0 * density_a * density_b)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoherenceWitness {
    /// Σ_{i≠j} Re⟨aᵢ†aⱼ⟩.
    pub statistic: f64,
    pub entangled: bool,
    /// F_sep + 2 n_B · statistic, the QFI implied by a uniform ideal B side.
    pub implied_qfi: f64,
    pub separable_bound: f64,
}

/// Mode-entanglement test for an A side facing a uniform ideal condensate of
/// `n_b` bosons. Only the sign of the statistic is used; no converse is claimed.
pub fn coherence_witness(a: &SingleParticleDensityMatrix, n_b: usize, modes: usize) -> Result<CoherenceWitness> {
    if a.modes() != modes {
        return Err(Error::InvalidArgument(format!(
            "SPDM covers {} modes, expected {modes}",
            a.modes()
        )));
    }
    let mut statistic = 0.0;
    for i in 0..modes {
        for j in 0..modes {
            if i != j {
                statistic += a.get(i, j).re;
            }
        }
    }
    let density_b = n_b as f64 / modes as f64;
    let bound = separable_bound(modes, a.particles() / modes as f64, density_b);
    Ok(CoherenceWitness {
        statistic,
        entangled: statistic > COHERENCE_THRESHOLD,
        implied_qfi: bound + 2.0 * density_b * statistic,
        separable_bound: bound,
    })
}

#[derive(Clone, Copy)]
enum Slot {
    Inside(usize),
    Outside(usize),
}

/// F_Q(G) from the eigen-sum definition on the Fock universe.
///
/// G is applied to each eigenvector of ρ_A ⊗ ρ_B directly in the occupation
/// basis; the kernel contribution uses ⟨n|G²|n⟩ = ‖G|n⟩‖². If part of G|n⟩
/// falls outside the universe the two sides of that identity disagree and
/// [`Error::TruncationInsufficient`] is returned.
pub fn brute_force_qfi(state: &FockProductState, universe: &FockUniverse) -> Result<f64> {
    let block = *state.locate(universe)?;
    let support = state.block_support();
    let r = support.probs.len();

    // G restricted to columns of the block: in-universe targets and escapes.
    let mut escapes: HashMap<Occupation, usize> = HashMap::new();
    let mut columns: Vec<Vec<(Slot, f64)>> = Vec::with_capacity(block.dim);
    for x in block.offset..block.offset + block.dim {
        let col = universe
            .generator_action(&universe.states[x])
            .into_iter()
            .map(|(target, amp)| {
                let slot = match universe.index_of(&target) {
                    Some(y) => Slot::Inside(y),
                    None => {
                        let next = escapes.len();
                        Slot::Outside(*escapes.entry(target).or_insert(next))
                    }
                };
                (slot, amp)
            })
            .collect();
        columns.push(col);
    }

    let zero = Complex::new(0.0, 0.0);
    let mut w = vec![zero; universe.dim()];
    let mut lost = vec![zero; escapes.len()];
    let mut w_block = Matrix::zeros(block.dim, r);
    let mut g2 = vec![0.0; r];
    let mut worst: f64 = 0.0;
    for k in 0..r {
        w.iter_mut().for_each(|z| *z = zero);
        lost.iter_mut().for_each(|z| *z = zero);
        for (x, col) in columns.iter().enumerate() {
            let v = support.vectors[(x, k)];
            if v == zero {
                continue;
            }
            for &(slot, amp) in col {
                match slot {
                    Slot::Inside(y) => w[y] += v * amp,
                    Slot::Outside(e) => lost[e] += v * amp,
                }
            }
        }
        g2[k] = w.iter().map(|z| z.norm_sqr()).sum();
        let escaped: f64 = lost.iter().map(|z| z.norm_sqr()).sum();
        if support.probs[k] > 0.0 {
            worst = worst.max(escaped / g2[k].max(1.0));
        }
        for x in 0..block.dim {
            w_block[(x, k)] = w[block.offset + x];
        }
    }
    if worst > 1e-10 {
        return Err(Error::TruncationInsufficient {
            k_max: universe.k_max,
            discrepancy: worst,
        });
    }

    let gm = support.vectors.adjoint() * &w_block;
    let mut total = pair_sum(&support.probs, &gm, DEFAULT_EIG_CUTOFF);
    for (n, &p) in support.probs.iter().enumerate() {
        if p <= DEFAULT_EIG_CUTOFF {
            continue;
        }
        let inside: f64 = (0..r).map(|m| gm[(n, m)].norm_sqr()).sum();
        total += 4.0 * p * (g2[n] - inside).max(0.0);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrology::{check_theorem, projector_sensitivity_curve, qfi};
    use crate::operators::{expectation, max_abs, second_moment, variance};
    use crate::symmetry::is_off_diagonal;
    use crate::Tolerances;
    use proptest::prelude::*;

    #[test]
    fn dimensions_and_ordering() {
        assert_eq!(block_dimension(3, 2, 1), Some(6 * 3));
        let basis = species_basis(3, 2);
        assert_eq!(basis.len(), 6);
        assert_eq!(basis[0], vec![0, 0, 2]);
        assert_eq!(basis[5], vec![2, 0, 0]);
        assert!(basis.windows(2).all(|w| w[0] < w[1]));

        let u = FockUniverse::new(2, 1, 1, 1).unwrap();
        let dims: Vec<usize> = u.blocks().iter().map(|b| b.dim).collect();
        assert_eq!(dims, vec![3, 4, 3]);
        assert_eq!(u.dim(), 10);
        for (i, occ) in u.states.iter().enumerate() {
            assert_eq!(u.index_of(occ), Some(i));
        }
        assert_eq!(FockUniverse::for_space(&u.space()).unwrap().dim(), 10);
    }

    #[test]
    fn universe_limits() {
        assert!(FockUniverse::new(2, 1, 1, 0).is_err());
        assert!(FockUniverse::new(0, 1, 1, 1).is_err());
        assert!(matches!(FockUniverse::new(8, 10, 10, 1), Err(Error::DimensionCap { .. })));
        // Blocks with negative occupation are skipped.
        let u = FockUniverse::new(2, 0, 2, 2).unwrap();
        assert_eq!(u.blocks().len(), 3);
    }

    #[test]
    fn generator_second_moment_single_pair() {
        let u = FockUniverse::new(1, 1, 1, 1).unwrap();
        let g = tunneling_generator(&u).unwrap();
        let x = u.index_of(&[1, 1]).unwrap();
        assert!((g.square().get(x, x).re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn generator_is_off_diagonal_in_number() {
        let u = FockUniverse::new(3, 2, 1, 1).unwrap();
        let g = tunneling_generator(&u).unwrap();
        let p = number_projector(&u, 2).unwrap();
        let check = is_off_diagonal(&g, &p, 1e-12).unwrap();
        assert!(check.off_diagonal, "{check:?}");
        // Every central basis state is moved somewhere.
        let block = u.block(2).unwrap();
        for x in block.offset..block.offset + block.dim {
            assert!((0..u.dim()).any(|y| g.get(y, x).norm() > 0.0));
        }
    }

    #[test]
    fn number_projectors_resolve_identity() {
        let u = FockUniverse::new(2, 2, 2, 2).unwrap();
        let mut sum = Operator::zeros(u.space());
        for b in u.blocks() {
            let p = number_projector(&u, b.n_a).unwrap();
            assert_eq!(p.rank(), b.dim);
            assert!(p.op().square().distance(p.op()).unwrap() < 1e-15);
            sum = &sum + p.op();
        }
        assert!(sum.distance(&Operator::identity(u.space())).unwrap() < 1e-15);
        assert!(number_projector(&u, 9).is_err());
    }

    #[test]
    fn ideal_bec_two_modes() {
        let a = SpeciesState::condensate(2, 1).unwrap();
        // Basis (0,1), (1,0): both amplitudes 1/√2.
        let rho = a.density().matrix();
        for i in 0..2 {
            for j in 0..2 {
                assert!((rho[(i, j)].re - 0.5).abs() < 1e-15);
            }
        }
        let rho = ideal_bec_state(2, 1, 1).unwrap();
        let u = FockUniverse::for_space(rho.space()).unwrap();
        let g = tunneling_generator(&u).unwrap();
        assert!((4.0 * second_moment(&rho, &g) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_spdm_is_uniform() {
        for (modes, n) in [(2, 1), (3, 4), (4, 3)] {
            let s = SpeciesState::condensate(modes, n).unwrap().spdm().unwrap();
            for i in 0..modes {
                for j in 0..modes {
                    assert!((s.get(i, j) - Complex::new(n as f64 / modes as f64, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dephased_spdm_is_diagonal() {
        let s = SpeciesState::dephased_condensate(3, 3).unwrap().spdm().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((s.get(i, j).re - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let one = SingleParticleDensityMatrix::uniform(1, 1).unwrap();
        assert!((qfi_closed_form(&one, &one).unwrap() - 4.0).abs() < 1e-15);
        let half = SingleParticleDensityMatrix::uniform(2, 1).unwrap();
        assert!((qfi_closed_form(&half, &half).unwrap() - 4.0).abs() < 1e-15);
        assert!((ideal_bec_qfi(2, 1, 1) - 4.0).abs() < 1e-15);
        let a = SingleParticleDensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        let b = SingleParticleDensityMatrix::diagonal(&[1.5, 0.5]).unwrap();
        let expected = 1.0 + 2.0 + 2.0 * (0.3 * 1.5 + 0.7 * 0.5);
        assert!((qfi_closed_form(&a, &b).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn separable_bound_examples() {
        assert!((separable_bound(2, 0.5, 0.5) - 3.0).abs() < 1e-15);
        assert!((separable_bound(5, 0.0, 0.8) - 4.0).abs() < 1e-15);
        assert!(ideal_bec_qfi(2, 1, 1) > separable_bound(2, 0.5, 0.5));
    }

    #[test]
    fn spdm_validation() {
        let m = Matrix::from_fn(2, 2, |i, j| Complex::new(if i == j { 0.5 } else { 1.0 }, 0.0));
        assert!(SingleParticleDensityMatrix::new(m.clone(), 1.0).is_err());
        let skew = Matrix::from_fn(2, 2, |i, j| Complex::new(0.5, if i < j { 0.1 } else { 0.0 }));
        assert!(matches!(
            SingleParticleDensityMatrix::new(skew, 1.0),
            Err(Error::NotHermitian { .. })
        ));
        assert!(SingleParticleDensityMatrix::diagonal(&[0.5, 0.5]).unwrap().particles() == 1.0);
        assert!(SingleParticleDensityMatrix::new(Matrix::identity(2, 2), 3.0).is_err());
        let text = serde_json::to_string(&SingleParticleDensityMatrix::uniform(2, 3).unwrap()).unwrap();
        let back: SingleParticleDensityMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back.get(0, 1), Complex::new(1.5, 0.0));
        assert!(serde_json::from_str::<SingleParticleDensityMatrix>(r#"{"particles":1,"entries":[[[1,0],[0,0]],[[0,0],[-1,0]]]}"#).is_err());
    }

    #[test]
    fn coherence_witness_examples() {
        let ideal = SpeciesState::condensate(3, 2).unwrap().spdm().unwrap();
        let w = coherence_witness(&ideal, 2, 3).unwrap();
        // N(N - 1) off-diagonal entries of N_A/N each.
        assert!((w.statistic - 2.0 * 2.0).abs() < 1e-12);
        assert!(w.entangled);
        let uniform_b = SingleParticleDensityMatrix::uniform(3, 2).unwrap();
        assert!((w.implied_qfi - qfi_closed_form(&ideal, &uniform_b).unwrap()).abs() < 1e-12);

        let diag = SpeciesState::dephased_condensate(3, 2).unwrap().spdm().unwrap();
        let w = coherence_witness(&diag, 2, 3).unwrap();
        assert!(w.statistic.abs() < 1e-12);
        assert!(!w.entangled);
        assert!((w.implied_qfi - w.separable_bound).abs() < 1e-12);
    }

    #[test]
    fn staggered_phases_flip_the_statistic() {
        // aⱼ → (-1)ʲaⱼ: the coherence statistic changes sign while the QFI
        // against an equally staggered B side is unchanged.
        let modes = 2;
        let staggered: Vec<f64> = (0..modes).map(|j| std::f64::consts::PI * j as f64).collect();
        let a = SpeciesState::condensate_with_phases(2, &staggered).unwrap();
        let b = SpeciesState::condensate_with_phases(2, &staggered).unwrap();
        let stat = coherence_witness(&a.spdm().unwrap(), 2, modes).unwrap().statistic;
        assert!(stat < -0.5);
        let f = qfi_closed_form(&a.spdm().unwrap(), &b.spdm().unwrap()).unwrap();
        assert!((f - ideal_bec_qfi(modes, 2, 2)).abs() < 1e-12);
    }

    #[test]
    fn brute_force_matches_dense_qfi() {
        for state in [
            FockProductState::ideal(2, 1, 1).unwrap(),
            FockProductState::dephased(2, 2, 1).unwrap(),
            FockProductState::new(SpeciesState::random(2, 2, 2, 3).unwrap(), SpeciesState::random(2, 1, 2, 4).unwrap())
                .unwrap(),
            FockProductState::new(SpeciesState::fock(&[2, 0, 1]).unwrap(), SpeciesState::condensate(3, 1).unwrap())
                .unwrap(),
        ] {
            let u = state.universe(1).unwrap();
            let rho = state.density(&u).unwrap();
            let g = tunneling_generator(&u).unwrap();
            // Dense route through a freshly computed eigendecomposition.
            let full = DensityOperator::new(rho.op().clone()).unwrap();
            let dense = qfi(&full, &g, DEFAULT_EIG_CUTOFF).unwrap();
            let brute = brute_force_qfi(&state, &u).unwrap();
            assert!((dense - brute).abs() < 1e-9 * brute.max(1.0), "{dense} vs {brute}");
        }
    }

    #[test]
    fn brute_force_ideal_two_modes() {
        let state = FockProductState::ideal(2, 1, 1).unwrap();
        let f = brute_force_qfi(&state, &state.universe(1).unwrap()).unwrap();
        assert!((f - 4.0).abs() < 1e-12);
        let (a, b) = state.spdms().unwrap();
        assert!((qfi_closed_form(&a, &b).unwrap() - f).abs() < 1e-12);
    }

    #[test]
    fn brute_force_detects_truncation() {
        // A state on the edge block of the universe leaks out under G.
        let u = FockUniverse::new(2, 2, 2, 1).unwrap();
        let edge = FockProductState::ideal(2, 3, 1).unwrap();
        assert!(matches!(brute_force_qfi(&edge, &u), Err(Error::TruncationInsufficient { .. })));
    }

    #[test]
    fn pure_sector_state_gives_four_variance() {
        let state = FockProductState::ideal(3, 2, 1).unwrap();
        let u = state.universe(1).unwrap();
        let rho = state.density(&u).unwrap();
        let g = tunneling_generator(&u).unwrap();
        let f = brute_force_qfi(&state, &u).unwrap();
        assert!((f - 4.0 * variance(&rho, &g).unwrap()).abs() < 1e-10);
        assert!(expectation(&rho, &g).unwrap().norm() < 1e-14);
    }

    #[test]
    fn theorem_with_number_projector() {
        let state = FockProductState::new(
            SpeciesState::random(2, 2, 3, 11).unwrap(),
            SpeciesState::dephased_condensate(2, 1).unwrap(),
        )
        .unwrap();
        let u = state.universe(1).unwrap();
        let rho = state.density(&u).unwrap();
        let g = tunneling_generator(&u).unwrap();
        let p = number_projector(&u, 2).unwrap();
        let report = check_theorem(&rho, &p, &g, &Tolerances::default()).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn number_probability_follows_curvature_law() {
        let state = FockProductState::ideal(3, 2, 2).unwrap();
        let u = state.universe(1).unwrap();
        let rho = state.density(&u).unwrap();
        let g = tunneling_generator(&u).unwrap();
        let p = number_projector(&u, 2).unwrap();
        let (a, b) = state.spdms().unwrap();
        let g2 = qfi_closed_form(&a, &b).unwrap() / 4.0;
        for t in [1e-2, 1e-3] {
            let c = projector_sensitivity_curve(&rho, &p, &g, &[t]).unwrap().curvature_estimate.unwrap();
            assert!((c - g2).abs() <= 10.0 * t * g2);
        }
    }

    #[test]
    fn heisenberg_versus_standard_scaling() {
        let ratio = |n: usize| {
            let half = n / 2;
            let ideal = qfi_closed_form(
                &SingleParticleDensityMatrix::uniform(n, half).unwrap(),
                &SingleParticleDensityMatrix::uniform(n, half).unwrap(),
            )
            .unwrap();
            let dephased = FockProductState::dephased(n, half, half).unwrap();
            let (a, b) = dephased.spdms().unwrap();
            ideal / qfi_closed_form(&a, &b).unwrap()
        };
        // Exactly 1.5 from N=2 to N=4 (ratios 4/3 and 2).
        assert!(ratio(4) / ratio(2) >= 1.5 - 1e-9);
    }

    #[test]
    fn dephased_condensate_reaches_separable_bound() {
        for (modes, n_a, n_b) in [(2, 1, 1), (3, 3, 2), (4, 2, 2)] {
            let state = FockProductState::dephased(modes, n_a, n_b).unwrap();
            let f = brute_force_qfi(&state, &state.universe(1).unwrap()).unwrap();
            let bound = separable_bound(modes, n_a as f64 / modes as f64, n_b as f64 / modes as f64);
            assert!((f - bound).abs() < 1e-10 * bound.max(1.0), "{f} vs {bound}");
        }
    }

    #[test]
    fn dense_generator_is_real_symmetric() {
        let u = FockUniverse::new(3, 2, 2, 2).unwrap();
        let g = tunneling_generator(&u).unwrap();
        assert!(max_abs(&Matrix::from_fn(u.dim(), u.dim(), |i, j| g.get(i, j) - g.get(j, i))) == 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn closed_form_matches_brute_force(
            seed in any::<u64>(),
            modes in 1usize..4,
            n_a in 0usize..4,
            n_b in 0usize..4,
            rank_a in 1usize..4,
            rank_b in 1usize..4,
        ) {
            let da = species_dimension(modes, n_a).unwrap();
            let db = species_dimension(modes, n_b).unwrap();
            let a = SpeciesState::random(modes, n_a, rank_a.min(da), seed).unwrap();
            let b = SpeciesState::random(modes, n_b, rank_b.min(db), seed ^ 0x55).unwrap();
            let state = FockProductState::new(a, b).unwrap();
            let (sa, sb) = state.spdms().unwrap();
            let closed = qfi_closed_form(&sa, &sb).unwrap();
            let brute = brute_force_qfi(&state, &state.universe(1).unwrap()).unwrap();
            prop_assert!((closed - brute).abs() <= 1e-8 * closed.max(1.0), "{} vs {}", closed, brute);
        }

        #[test]
        fn qfi_never_exceeds_heisenberg_value(modes in 1usize..5, n_a in 0usize..5, n_b in 0usize..5) {
            let ideal = ideal_bec_qfi(modes, n_a, n_b);
            let state = FockProductState::dephased(modes, n_a, n_b).unwrap();
            let (a, b) = state.spdms().unwrap();
            prop_assert!(qfi_closed_form(&a, &b).unwrap() <= ideal + 1e-10);
        }
    }
}
