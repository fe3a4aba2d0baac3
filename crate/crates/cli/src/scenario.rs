//! Scenario configuration: what to prepare, which sector and generator to
//! test, the sweep grid, tolerances and output paths.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use symproj::bosons::{FockUniverse, MAX_FOCK_DIM};
use symproj::circuit::CatSign;
use symproj::operators::{Axis, MAX_REGISTER_SPINS};
use symproj::spins::Representation;
use symproj::symmetry::Parity;
use symproj::Tolerances;

/// The published JSON schema for scenario files.
pub const SCHEMA: &str = include_str!("../scenario.schema.json");

/// Largest Dicke sector accepted, N + 1 levels.
pub const MAX_DICKE_SPINS: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub experiment: Experiment,
    pub system: System,
    pub preparation: Preparation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projector: Option<ProjectorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    TheoremCheck,
    OatSweep,
    Ramp,
    Bec,
    Circuit,
    Witness,
}

impl Experiment {
    pub fn label(self) -> &'static str {
        match self {
            Self::TheoremCheck => "theorem-check",
            Self::OatSweep => "oat-sweep",
            Self::Ramp => "ramp",
            Self::Bec => "bec",
            Self::Circuit => "circuit",
            Self::Witness => "witness",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum System {
    Spins {
        spins: usize,
        #[serde(default = "full")]
        representation: Representation,
    },
    Bosons {
        modes: usize,
        n_a: usize,
        n_b: usize,
        #[serde(default = "one")]
        k_max: usize,
    },
}

fn full() -> Representation {
    Representation::Full
}

fn one() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Ising,
    Xy,
    Xxz,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BecKind {
    /// Uniform condensates on both sides.
    Ideal,
    /// Both sides with a diagonal SPDM (random phases averaged out).
    Dephased,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Preparation {
    /// Every spin along +axis.
    CoherentState { axis: Axis },
    /// e^{-iχt(Jᶻ)²/N} on the x-polarized coherent state.
    Oat { chi: f64, t: f64 },
    /// Ground state of H(Ω_from) in the even x-parity sector, then a linear ramp.
    Ramp {
        model: Model,
        #[serde(default = "unit")]
        coupling: f64,
        /// Power-law exponent; nearest-neighbor chain when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        omega_from: f64,
        omega_to: f64,
        duration: f64,
        #[serde(default = "default_steps")]
        steps: usize,
    },
    /// Random mixed state inside the projector's sector. The rank cycles through
    /// 1..=dim(sector) with the row seed when absent; the seed defaults to the
    /// row seed.
    RandomSector {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rank: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Random mixed state on the whole space.
    Random {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rank: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Cat { sign: CatSign },
    Bec {
        state: BecKind,
        /// Also evaluate the QFI by brute force on the Fock universe.
        #[serde(default)]
        brute_force: bool,
    },
}

fn unit() -> f64 {
    1.0
}

fn default_steps() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProjectorSpec {
    Parity { axis: Axis, parity: Parity },
    /// Jᶻ = m on a register.
    Magnetization { m: f64 },
    BosonNumber { n_a: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Collective { axis: Axis },
    Tunneling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parameter {
    /// Repeat the scenario; the value is only a label and the row seed varies.
    Replica,
    T,
    Chi,
    Rank,
    #[serde(rename = "n_a")]
    NA,
    #[serde(rename = "n_b")]
    NB,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: Parameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    /// Defaults to `<name>.csv` in the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Defaults to `<name>.summary.json`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
}

/// One grid point after the sweep value has been substituted.
#[derive(Clone, Debug)]
pub struct Point {
    pub index: usize,
    pub value: Option<f64>,
    /// seed ⊕ index.
    pub seed: u64,
    pub scenario: Scenario,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let scenario: Self = serde_json::from_str(text).context("scenario does not match the schema")?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn csv_path(&self) -> PathBuf {
        self.output.csv.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", self.name)))
    }

    pub fn summary_path(&self) -> PathBuf {
        self.output
            .summary
            .clone()
            .unwrap_or_else(|| PathBuf::from(format!("{}.summary.json", self.name)))
    }

    /// Structural checks and size caps for every grid point.
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.name.is_empty(), "scenario name is empty");
        ensure!(
            !self.name.contains(['/', '\\']),
            "scenario name `{}` must not contain path separators",
            self.name
        );
        self.tolerances.validate()?;
        if let Some(sweep) = &self.sweep {
            ensure!(!sweep.values.is_empty(), "sweep over {:?} has no values", sweep.parameter);
            ensure!(
                sweep.values.iter().all(|v| v.is_finite()),
                "sweep values must be finite"
            );
            ensure!(self.experiment != Experiment::Ramp, "ramp scenarios take no sweep; rows follow the time grid");
        }
        for point in self.points()? {
            point.scenario.validate_point()?;
        }
        Ok(())
    }

    fn validate_point(&self) -> Result<()> {
        use Experiment as E;
        match &self.system {
            System::Spins { spins, representation } => {
                ensure!(*spins >= 1, "at least one spin is needed");
                match representation {
                    Representation::Full => ensure!(
                        *spins <= MAX_REGISTER_SPINS,
                        "{spins} spins exceeds the register cap of {MAX_REGISTER_SPINS}"
                    ),
                    Representation::Dicke => {
                        ensure!(
                            *spins <= MAX_DICKE_SPINS,
                            "{spins} spins exceeds the Dicke cap of {MAX_DICKE_SPINS}"
                        );
                        ensure!(
                            matches!(self.experiment, E::TheoremCheck | E::OatSweep),
                            "{} runs on a full register only",
                            self.experiment.label()
                        );
                    }
                }
                if self.experiment == E::Circuit {
                    ensure!(
                        *spins < MAX_REGISTER_SPINS,
                        "the circuit adds an ancilla; {spins} + 1 qubits exceeds the cap of {MAX_REGISTER_SPINS}"
                    );
                }
                ensure!(self.experiment != E::Bec, "bec needs a bosons system");
            }
            System::Bosons {
                modes,
                n_a,
                n_b,
                k_max,
            } => {
                ensure!(
                    matches!(self.experiment, E::Bec | E::TheoremCheck),
                    "{} needs a spins system",
                    self.experiment.label()
                );
                let universe = FockUniverse::new(*modes, *n_a, *n_b, *k_max)
                    .with_context(|| format!("Fock universe is capped at dimension {MAX_FOCK_DIM}"))?;
                drop(universe);
            }
        }

        let spins_system = matches!(self.system, System::Spins { .. });
        match &self.preparation {
            Preparation::CoherentState { .. } | Preparation::Cat { .. } | Preparation::Random { .. } => {
                ensure!(spins_system, "this preparation needs a spins system")
            }
            Preparation::Oat { chi, t } => {
                ensure!(spins_system, "oat needs a spins system");
                ensure!(chi.is_finite() && t.is_finite(), "oat parameters must be finite");
                ensure!(self.spins() >= Some(2), "one-axis twisting needs N ≥ 2");
            }
            Preparation::Ramp {
                coupling,
                alpha,
                omega_from,
                omega_to,
                duration,
                steps,
                ..
            } => {
                ensure!(self.experiment == E::Ramp, "ramp preparations belong to the ramp experiment");
                ensure!(
                    [*coupling, *omega_from, *omega_to].iter().all(|v| v.is_finite()),
                    "ramp parameters must be finite"
                );
                ensure!(alpha.is_none_or(|a| a.is_finite() && a >= 0.0), "alpha must be finite and nonnegative");
                ensure!(duration.is_finite() && *duration > 0.0, "ramp duration must be positive");
                ensure!(*steps >= 1, "ramp needs at least one step");
                ensure!(self.spins() >= Some(2), "a ramp needs at least two spins");
            }
            Preparation::RandomSector { rank, .. } => {
                ensure!(self.projector.is_some(), "random-sector needs a projector");
                ensure!(*rank != Some(0), "rank must be at least 1");
            }
            Preparation::Bec { .. } => ensure!(!spins_system, "bec preparation needs a bosons system"),
        }
        if let Preparation::Random { rank: Some(0), .. } = self.preparation {
            bail!("rank must be at least 1");
        }
        if self.experiment == E::Ramp {
            ensure!(matches!(self.preparation, Preparation::Ramp { .. }), "the ramp experiment needs a ramp preparation");
        }
        if self.experiment == E::OatSweep {
            ensure!(matches!(self.preparation, Preparation::Oat { .. }), "oat-sweep needs an oat preparation");
        }

        if let Some(p) = &self.projector {
            match (p, &self.system) {
                (ProjectorSpec::Parity { .. }, System::Spins { .. }) => {}
                (ProjectorSpec::Magnetization { m }, System::Spins { representation, .. }) => {
                    ensure!(m.is_finite(), "m must be finite");
                    ensure!(
                        *representation == Representation::Full,
                        "magnetization projectors are built on the full register"
                    );
                }
                (ProjectorSpec::BosonNumber { .. }, System::Bosons { .. }) => {}
                _ => bail!("projector {p:?} does not fit the system"),
            }
        }
        if self.experiment == E::Circuit {
            if let Some(ProjectorSpec::Parity { axis, .. }) = &self.projector {
                ensure!(*axis != Axis::Y, "the circuit extracts z or x parity only");
            } else if self.projector.is_some() {
                bail!("the circuit takes a parity projector");
            }
        }
        if let Some(g) = &self.generator {
            match (g, &self.system) {
                (GeneratorSpec::Collective { .. }, System::Spins { .. }) | (GeneratorSpec::Tunneling, System::Bosons { .. }) => {}
                _ => bail!("generator {g:?} does not fit the system"),
            }
        }
        Ok(())
    }

    pub fn spins(&self) -> Option<usize> {
        match self.system {
            System::Spins { spins, .. } => Some(spins),
            System::Bosons { .. } => None,
        }
    }

    /// Grid points in order, each with its sweep value substituted.
    pub fn points(&self) -> Result<Vec<Point>> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![Point {
                index: 0,
                value: None,
                seed: self.seed,
                scenario: self.clone(),
            }]);
        };
        sweep
            .values
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                let mut scenario = self.clone();
                scenario.apply(sweep.parameter, value)?;
                Ok(Point {
                    index,
                    value: Some(value),
                    seed: self.seed ^ index as u64,
                    scenario,
                })
            })
            .collect()
    }

    fn apply(&mut self, parameter: Parameter, value: f64) -> Result<()> {
        let count = |v: f64| -> Result<usize> {
            ensure!(v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64, "sweep value {v} is not a count");
            Ok(v as usize)
        };
        match parameter {
            Parameter::Replica => {}
            Parameter::T | Parameter::Chi => {
                let Preparation::Oat { chi, t } = &mut self.preparation else {
                    bail!("sweeping {parameter:?} needs an oat preparation");
                };
                *if parameter == Parameter::T { t } else { chi } = value;
            }
            Parameter::Rank => match &mut self.preparation {
                Preparation::RandomSector { rank, .. } | Preparation::Random { rank, .. } => *rank = Some(count(value)?),
                _ => bail!("sweeping rank needs a random preparation"),
            },
            Parameter::NA | Parameter::NB => {
                let System::Bosons { n_a, n_b, .. } = &mut self.system else {
                    bail!("sweeping particle numbers needs a bosons system");
                };
                let target = if parameter == Parameter::NA { n_a } else { n_b };
                *target = count(value)?;
                if parameter == Parameter::NA {
                    if let Some(ProjectorSpec::BosonNumber { n_a: p }) = &mut self.projector {
                        *p = *target;
                    }
                }
            }
        }
        Ok(())
    }
}
