//! One grid point in, result rows out.

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use symproj::bosons::{
    coherence_witness, brute_force_qfi, ideal_bec_qfi, number_projector, qfi_closed_form, separable_bound,
    tunneling_generator, FockProductState, FockUniverse,
};
use symproj::circuit::{cat_state, correlation_preservation_report, dicke_cat_state, parity_extraction, ParityBasis};
use symproj::metrology::{check_theorem, qfi, separability_witness, TheoremReport, WITNESS_MARGIN};
use symproj::operators::{
    pauli_on_site, random_density, random_density_in_sector, expectation, Axis, DensityOperator, HilbertSpace,
    Operator,
};
use symproj::spins::{
    build_hamiltonian, coherent_spin_state, collective_operators, diagonal_ensemble, dicke_parity_projector,
    nearest_neighbor_chain, oat_evolve, oat_evolve_register, power_law_chain, quasi_adiabatic_ramp,
    sector_ground_state, squeezing_parameter, HamiltonianSpec, RampSchedule, Representation,
};
use symproj::symmetry::{magnetization_projector, parity_projector, sector_split, Parity, SectorProjector};

use crate::scenario::{BecKind, Experiment, GeneratorSpec, Model, Point, Preparation, ProjectorSpec, Scenario, System};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Clone, Debug)]
pub struct Row {
    pub index: usize,
    pub value: Option<f64>,
    pub seed: u64,
    pub columns: Vec<(&'static str, Cell)>,
    pub pass: bool,
}

#[derive(Debug)]
pub struct PointResult {
    pub rows: Vec<Row>,
    /// Extra checks that do not fit a row, reported in the summary.
    pub extra: Option<Value>,
    pub extra_pass: bool,
}

pub fn evaluate(point: &Point) -> Result<PointResult> {
    let s = &point.scenario;
    let single = |columns: Vec<(&'static str, Cell)>, pass: bool| PointResult {
        rows: vec![Row {
            index: point.index,
            value: point.value,
            seed: point.seed,
            columns,
            pass,
        }],
        extra: None,
        extra_pass: true,
    };
    match s.experiment {
        Experiment::TheoremCheck => {
            let setup = Setup::new(s, point.seed)?;
            let report = check_theorem(&setup.state, &setup.projector()?, &setup.generator, &s.tolerances)?;
            let pass = report.pass;
            Ok(single(theorem_columns(&report), pass))
        }
        Experiment::OatSweep => {
            let setup = Setup::new(s, point.seed)?;
            let projector = setup.projector()?;
            let report = check_theorem(&setup.state, &projector, &setup.generator, &s.tolerances)?;
            let Preparation::Oat { chi, t } = s.preparation else {
                bail!("oat-sweep needs an oat preparation");
            };
            let weight = expectation(&setup.state, projector.op())?.re;
            let mut columns = vec![("chi", chi.into()), ("t", t.into())];
            columns.extend(theorem_columns(&report));
            let jx = collective_operators(&setup.space)?[0].clone();
            columns.push(("qfi_jx", qfi(&setup.state, &jx, s.tolerances.eig_cutoff)?.into()));
            columns.push(("sector_weight", weight.into()));
            columns.push(("squeezing", squeezing_parameter(&setup.state).ok().into()));
            let pass = report.pass;
            Ok(single(columns, pass))
        }
        Experiment::Circuit => {
            let setup = Setup::new(s, point.seed)?;
            let (columns, pass) = circuit_columns(s, &setup)?;
            Ok(single(columns, pass))
        }
        Experiment::Witness => {
            let setup = Setup::new(s, point.seed)?;
            let (columns, pass) = witness_columns(s, &setup)?;
            Ok(single(columns, pass))
        }
        Experiment::Bec => {
            let (columns, pass) = bec_columns(s)?;
            Ok(single(columns, pass))
        }
        Experiment::Ramp => ramp(point),
    }
}

fn theorem_columns(r: &TheoremReport) -> Vec<(&'static str, Cell)> {
    vec![
        ("qfi", r.qfi.into()),
        ("four_g2", r.four_g2.into()),
        ("four_var", r.four_var.into()),
        ("xi_p_inv2", r.xi_p_inv2.into()),
        ("qfi_gap", r.qfi_gap.into()),
        ("xi_gap", r.xi_gap.into()),
        ("sector_residual", r.sector_residual.into()),
        ("diagonal_residual", r.diagonal_residual.into()),
        ("completion_residual", r.completion_residual.into()),
    ]
}

/// State, space, generator and projector resolved from a scenario.
struct Setup {
    space: HilbertSpace,
    universe: Option<FockUniverse>,
    state: DensityOperator,
    generator: Operator,
    projector_spec: ProjectorSpec,
}

impl Setup {
    fn new(s: &Scenario, seed: u64) -> Result<Self> {
        let universe = match s.system {
            System::Bosons { modes, n_a, n_b, k_max } => Some(FockUniverse::new(modes, n_a, n_b, k_max)?),
            System::Spins { .. } => None,
        };
        let space = match (&s.system, &universe) {
            (System::Spins { spins, representation }, _) => match representation {
                Representation::Full => HilbertSpace::spin_register(*spins)?,
                Representation::Dicke => HilbertSpace::dicke(*spins)?,
            },
            (System::Bosons { .. }, Some(u)) => u.space(),
            (System::Bosons { .. }, None) => unreachable!(),
        };
        let projector_spec = s.projector.clone().unwrap_or(match s.system {
            System::Spins { .. } => ProjectorSpec::Parity {
                axis: if s.experiment == Experiment::Circuit { Axis::Z } else { Axis::X },
                parity: Parity::Even,
            },
            System::Bosons { n_a, .. } => ProjectorSpec::BosonNumber { n_a },
        });
        let generator_spec = s.generator.clone().unwrap_or(match (&s.system, s.experiment) {
            (System::Bosons { .. }, _) => GeneratorSpec::Tunneling,
            (_, Experiment::Circuit) => GeneratorSpec::Collective { axis: Axis::X },
            (_, Experiment::Witness) => GeneratorSpec::Collective { axis: Axis::Z },
            _ => GeneratorSpec::Collective { axis: Axis::Y },
        });
        let generator = match (generator_spec, &universe) {
            (GeneratorSpec::Collective { axis }, None) => {
                let [jx, jy, jz] = collective_operators(&space)?;
                match axis {
                    Axis::X => jx,
                    Axis::Y => jy,
                    Axis::Z => jz,
                }
            }
            (GeneratorSpec::Tunneling, Some(u)) => tunneling_generator(u)?,
            (g, _) => bail!("generator {g:?} does not fit the system"),
        };
        let mut setup = Self {
            state: DensityOperator::maximally_mixed(space.clone()),
            space,
            universe,
            generator,
            projector_spec,
        };
        setup.state = setup.prepare(s, seed)?;
        Ok(setup)
    }

    fn projector(&self) -> Result<SectorProjector> {
        Ok(match (&self.projector_spec, &self.space) {
            (ProjectorSpec::Parity { axis, parity }, HilbertSpace::SpinRegister { spins }) => {
                parity_projector(*axis, *parity, *spins)?
            }
            (ProjectorSpec::Parity { axis, parity }, HilbertSpace::DickeSector { spins }) => {
                dicke_parity_projector(*axis, *parity, *spins)?
            }
            (ProjectorSpec::Magnetization { m }, HilbertSpace::SpinRegister { spins }) => {
                magnetization_projector(*m, *spins)?
            }
            (ProjectorSpec::BosonNumber { n_a }, _) => {
                number_projector(self.universe.as_ref().context("boson-number needs a bosons system")?, *n_a)?
            }
            (p, space) => bail!("projector {p:?} does not fit {space}"),
        })
    }

    fn prepare(&self, s: &Scenario, row_seed: u64) -> Result<DensityOperator> {
        let dicke = matches!(self.space, HilbertSpace::DickeSector { .. });
        let spins = self.space.spins();
        Ok(match &s.preparation {
            Preparation::CoherentState { axis } => {
                let repr = if dicke { Representation::Dicke } else { Representation::Full };
                coherent_spin_state(*axis, spins.context("spins expected")?, repr)?
            }
            Preparation::Oat { chi, t } => {
                let n = spins.context("spins expected")?;
                if dicke {
                    oat_evolve(n, *chi, *t, Axis::X)?
                } else {
                    oat_evolve_register(n, *chi, *t, Axis::X)?
                }
            }
            Preparation::Cat { sign } => {
                let n = spins.context("spins expected")?;
                if dicke {
                    dicke_cat_state(n, *sign)?
                } else {
                    cat_state(n, *sign)?
                }
            }
            Preparation::RandomSector { rank, seed } => {
                let p = self.projector()?;
                let seed = seed.unwrap_or(row_seed);
                let rank = rank.unwrap_or(1 + (seed % p.rank() as u64) as usize);
                random_density_in_sector(&p, rank, seed)?
            }
            Preparation::Random { rank, seed } => {
                let seed = seed.unwrap_or(row_seed);
                let rank = rank.unwrap_or(1 + (seed % self.space.dim() as u64) as usize);
                random_density(self.space.clone(), rank, seed)?
            }
            Preparation::Bec { state, .. } => {
                let u = self.universe.as_ref().context("bec needs a bosons system")?;
                let (modes, n_a, n_b) = bec_sizes(s)?;
                bec_state(*state, modes, n_a, n_b)?.density(u)?
            }
            Preparation::Ramp { .. } => bail!("ramp preparations are handled by the ramp experiment"),
        })
    }
}

fn bec_sizes(s: &Scenario) -> Result<(usize, usize, usize)> {
    match s.system {
        System::Bosons { modes, n_a, n_b, .. } => Ok((modes, n_a, n_b)),
        System::Spins { .. } => bail!("bosons system expected"),
    }
}

fn bec_state(kind: BecKind, modes: usize, n_a: usize, n_b: usize) -> Result<FockProductState> {
    Ok(match kind {
        BecKind::Ideal => FockProductState::ideal(modes, n_a, n_b)?,
        BecKind::Dephased => FockProductState::dephased(modes, n_a, n_b)?,
    })
}

fn circuit_columns(s: &Scenario, setup: &Setup) -> Result<(Vec<(&'static str, Cell)>, bool)> {
    let ProjectorSpec::Parity { axis, .. } = setup.projector_spec else {
        bail!("the circuit takes a parity projector");
    };
    let basis = match axis {
        Axis::Z => ParityBasis::Z,
        Axis::X => ParityBasis::X,
        Axis::Y => bail!("the circuit extracts z or x parity only"),
    };
    let n = setup.space.spins().context("spins expected")?;
    let tol = s.tolerances.hypothesis;
    let out = parity_extraction(&setup.state, basis)?;
    let split = sector_split(&setup.state, &parity_projector(axis, Parity::Even, n)?)?;

    let mut pass = (out.even.probability - split.inside.weight).abs() <= tol;
    let mut fidelities = [None, None];
    let mut qfis = [None, None];
    for (k, (branch, reference)) in [(&out.even, &split.inside), (&out.odd, &split.outside)].into_iter().enumerate() {
        match (&branch.post_state, &reference.state) {
            (Some(a), Some(b)) => {
                let f = a.fidelity(b)?;
                pass &= f >= 1.0 - tol;
                fidelities[k] = Some(f);
                qfis[k] = Some(qfi(a, &setup.generator, s.tolerances.eig_cutoff)?);
            }
            (None, None) => {}
            _ => pass = false,
        }
    }
    let gap = match basis {
        ParityBasis::Z => {
            let rows = correlation_preservation_report(&setup.state, &[])?;
            let g = rows.iter().map(|r| r.difference()).fold(0.0, f64::max);
            pass &= g <= tol;
            Some(g)
        }
        ParityBasis::X => None,
    };
    Ok((
        vec![
            ("p_even", out.even.probability.into()),
            ("p_odd", out.odd.probability.into()),
            ("qfi_even", qfis[0].into()),
            ("qfi_odd", qfis[1].into()),
            ("fidelity_even", fidelities[0].into()),
            ("fidelity_odd", fidelities[1].into()),
            ("max_correlation_gap", gap.into()),
        ],
        pass,
    ))
}

fn witness_columns(s: &Scenario, setup: &Setup) -> Result<(Vec<(&'static str, Cell)>, bool)> {
    let n = match setup.space {
        HilbertSpace::SpinRegister { spins } => spins,
        _ => bail!("the witness needs a full register"),
    };
    let axis = match &s.generator {
        Some(GeneratorSpec::Collective { axis }) => *axis,
        None => Axis::Z,
        Some(_) => bail!("the witness takes a collective generator"),
    };
    let locals = (0..n)
        .map(|i| Ok(pauli_on_site(axis, i, n)?.scale_real(0.5)))
        .collect::<Result<Vec<_>>>()?;
    let sector = match s.projector {
        Some(_) => Some(setup.projector()?),
        None => None,
    };
    let report = separability_witness(&setup.state, &locals, sector.as_ref())?;
    let reduced = report.reduced;
    let pass = reduced.is_none_or(|r| r.entangled == report.entangled);
    Ok((
        vec![
            ("qfi", report.qfi.into()),
            ("bound", report.bound.into()),
            ("entangled", report.entangled.into()),
            ("g2", reduced.map(|r| r.g2).into()),
            ("local_g2_sum", reduced.map(|r| r.local_g2_sum).into()),
            ("reduced_entangled", reduced.map(|r| r.entangled).into()),
        ],
        pass,
    ))
}

fn bec_columns(s: &Scenario) -> Result<(Vec<(&'static str, Cell)>, bool)> {
    let Preparation::Bec { state, brute_force } = s.preparation else {
        bail!("bec needs a bec preparation");
    };
    let System::Bosons { modes, n_a, n_b, k_max } = s.system else {
        bail!("bec needs a bosons system");
    };
    let product = bec_state(state, modes, n_a, n_b)?;
    let (a, b) = product.spdms()?;
    let closed = qfi_closed_form(&a, &b)?;
    let m = modes as f64;
    let f_sep = separable_bound(modes, n_a as f64 / m, n_b as f64 / m);
    let coherence = coherence_witness(&a, n_b, modes)?;
    let (brute, gap) = if brute_force {
        let u = product.universe(k_max)?;
        let f = brute_force_qfi(&product, &u)?;
        (Some(f), Some((f - closed).abs() / closed.abs().max(1.0)))
    } else {
        (None, None)
    };
    let pass = gap.is_none_or(|g| g <= s.tolerances.qfi_equality);
    Ok((
        vec![
            ("modes", modes.into()),
            ("n_a", n_a.into()),
            ("n_b", n_b.into()),
            ("qfi", closed.into()),
            ("qfi_ideal_formula", (state == BecKind::Ideal).then(|| ideal_bec_qfi(modes, n_a, n_b)).into()),
            ("f_sep", f_sep.into()),
            ("entangled", (closed > f_sep + WITNESS_MARGIN).into()),
            ("coherence_statistic", coherence.statistic.into()),
            ("implied_qfi", coherence.implied_qfi.into()),
            ("brute_force_qfi", brute.into()),
            ("brute_force_gap", gap.into()),
        ],
        pass,
    ))
}

fn ramp(point: &Point) -> Result<PointResult> {
    let s = &point.scenario;
    let Preparation::Ramp {
        model,
        coupling,
        alpha,
        omega_from,
        omega_to,
        duration,
        steps,
    } = s.preparation
    else {
        bail!("the ramp experiment needs a ramp preparation");
    };
    let n = s.spins().context("ramp needs spins")?;
    let couplings = match alpha {
        Some(a) => power_law_chain(n, coupling, a),
        None => nearest_neighbor_chain(n, coupling),
    };
    let interaction = match model {
        Model::Ising => HamiltonianSpec::ising(couplings, 0.0),
        Model::Xy => HamiltonianSpec::xy(couplings),
        Model::Xxz => HamiltonianSpec::xxz(couplings),
    };
    let schedule = RampSchedule::linear(interaction, omega_from, omega_to, duration, steps);
    schedule.validate()?;
    let h0 = schedule.hamiltonian_at(&build_hamiltonian(&schedule.interaction)?, 0.0)?;
    let (_, ground) = sector_ground_state(&h0, Parity::Even)?;
    let initial = DensityOperator::pure(h0.space().clone(), &ground)?;
    let outcome = quasi_adiabatic_ramp(&schedule, &initial)?;

    let tol = s.tolerances;
    let rows = outcome
        .trajectory
        .iter()
        .enumerate()
        .map(|(k, p)| Row {
            index: k,
            value: Some(p.time),
            seed: point.seed,
            columns: vec![
                ("time", p.time.into()),
                ("omega", p.omega.into()),
                ("energy", p.energy.into()),
                ("ground_energy", p.ground_energy.into()),
                ("energy_density", p.energy_density.into()),
                ("parity", p.parity.into()),
                ("sector_weight", p.sector_weight.into()),
                ("four_jz2", p.four_jz2.into()),
            ],
            pass: (p.sector_weight - 1.0).abs() <= tol.hypothesis,
        })
        .collect();

    let projector = parity_projector(Axis::X, Parity::Even, n)?;
    let jz = collective_operators(outcome.final_state.space())?[2].clone();
    let pure = check_theorem(&outcome.final_state, &projector, &jz, &tol)?;
    let ensemble = diagonal_ensemble(&outcome.final_state, &outcome.final_hamiltonian)?;
    let mixed = check_theorem(&ensemble, &projector, &jz, &tol)?;
    let ground = DensityOperator::pure(outcome.final_state.space().clone(), &outcome.final_ground_state)?;
    let extra = json!({
        "final_fidelity_to_sector_ground_state": outcome.final_state.fidelity(&ground)?,
        "final_state": pure,
        "diagonal_ensemble": mixed,
        "diagonal_ensemble_purity": ensemble.purity(),
    });
    Ok(PointResult {
        rows,
        extra: Some(extra),
        extra_pass: pure.pass && mixed.pass,
    })
}
