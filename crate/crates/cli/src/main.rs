//! `symproj`: scenario runner for the symmetry-projected metrology checks.
//!
//! Exit codes: 0 when every pass flag holds, 2 when a theorem or witness
//! check fails, 1 on configuration or runtime errors (no output written).

mod experiments;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use symproj::circuit::CatSign;
use symproj::operators::Axis;
use symproj::spins::Representation;
use symproj::symmetry::Parity;
use symproj::Tolerances;

use crate::experiments::evaluate;
use crate::output::Timed;
use crate::scenario::{
    BecKind, Experiment, GeneratorSpec, Model, Output, Parameter, Preparation, ProjectorSpec, Scenario, Sweep, System,
};

#[derive(Parser)]
#[command(name = "symproj", version, about = "Symmetry-projected quantum metrology scenarios")]
struct Cli {
    /// Worker threads for grid points.
    #[arg(long, env = "SYMPROJ_WORKERS", global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a JSON scenario file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the scenario JSON schema.
    Schema,
    /// Check ξ_P⁻² = 4⟨G²⟩ = F_Q on random sector states.
    TheoremCheck(TheoremArgs),
    /// F_Q and 4⟨G²⟩ along one-axis-twisting dynamics.
    OatSweep(OatArgs),
    /// Quasi-adiabatic field ramp with parity diagnostics.
    Ramp(RampArgs),
    /// Closed-form condensate QFI against the separable bound.
    Bec(BecArgs),
    /// CNOT-ladder parity extraction against the projector path.
    Circuit(CircuitArgs),
    /// QFI separability witness for a collective generator.
    Witness(WitnessArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Check the scenario and exit without running it.
    #[arg(long)]
    validate_only: bool,
    /// Scenario name, also the default output stem.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON summary path.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    X,
    Y,
    Z,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::X => Axis::X,
            AxisArg::Y => Axis::Y,
            AxisArg::Z => Axis::Z,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ParityArg {
    Even,
    Odd,
}

impl From<ParityArg> for Parity {
    fn from(p: ParityArg) -> Self {
        match p {
            ParityArg::Even => Parity::Even,
            ParityArg::Odd => Parity::Odd,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Input {
    CssX,
    CssY,
    CssZ,
    CatPlus,
    CatMinus,
    Random,
}

impl Input {
    fn preparation(self, rank: Option<usize>) -> Preparation {
        match self {
            Input::CssX => Preparation::CoherentState { axis: Axis::X },
            Input::CssY => Preparation::CoherentState { axis: Axis::Y },
            Input::CssZ => Preparation::CoherentState { axis: Axis::Z },
            Input::CatPlus => Preparation::Cat { sign: CatSign::Plus },
            Input::CatMinus => Preparation::Cat { sign: CatSign::Minus },
            Input::Random => Preparation::Random { rank, seed: None },
        }
    }
}

#[derive(Args)]
struct TheoremArgs {
    #[arg(long = "N")]
    n: usize,
    /// Work in the Dicke sector instead of the full register.
    #[arg(long)]
    dicke: bool,
    #[arg(long, value_enum, default_value = "x")]
    projector_axis: AxisArg,
    #[arg(long, value_enum, default_value = "even")]
    parity: ParityArg,
    #[arg(long, value_enum, default_value = "y")]
    generator: AxisArg,
    /// Number of random states, one per row.
    #[arg(long, default_value_t = 50)]
    seeds: usize,
    /// Fixed rank; cycles through the sector dimension when absent.
    #[arg(long)]
    rank: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct OatArgs {
    #[arg(long = "N")]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    chi: f64,
    /// End of the time grid; πN/(2χ) when absent.
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, default_value_t = 17)]
    points: usize,
    #[arg(long, value_enum, default_value = "y")]
    generator: AxisArg,
    /// Use the full register instead of the Dicke sector.
    #[arg(long)]
    full: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Ising,
    Xy,
    Xxz,
}

#[derive(Args)]
struct RampArgs {
    #[arg(long = "N")]
    n: usize,
    #[arg(long, value_enum, default_value = "ising")]
    model: ModelArg,
    #[arg(long = "J", default_value_t = 1.0)]
    coupling: f64,
    /// Power-law exponent; nearest-neighbor chain when absent.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    omega_from: f64,
    #[arg(long, allow_negative_numbers = true)]
    omega_to: f64,
    #[arg(long = "T")]
    duration: f64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BecArgs {
    /// Number of modes per species.
    #[arg(long = "N")]
    modes: usize,
    #[arg(long = "NA")]
    n_a: usize,
    #[arg(long = "NB")]
    n_b: usize,
    #[arg(long, conflicts_with = "dephased")]
    ideal: bool,
    #[arg(long)]
    dephased: bool,
    /// Cross-check against brute force on the Fock universe.
    #[arg(long)]
    brute_force: bool,
    #[arg(long, default_value_t = 1)]
    k_max: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CircuitArgs {
    #[arg(long = "N")]
    n: usize,
    #[arg(long, value_enum, default_value = "css-x")]
    input: Input,
    #[arg(long, value_enum, default_value = "z")]
    basis: AxisArg,
    #[arg(long, value_enum, default_value = "x")]
    generator: AxisArg,
    /// Repetitions, useful with `--input random`.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    #[arg(long)]
    rank: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct WitnessArgs {
    #[arg(long = "N")]
    n: usize,
    #[arg(long, value_enum, default_value = "css-x")]
    input: Input,
    #[arg(long, value_enum, default_value = "z")]
    generator: AxisArg,
    /// Also report the reduced form inside this parity sector (x axis).
    #[arg(long, value_enum)]
    sector: Option<ParityArg>,
    #[arg(long)]
    rank: Option<usize>,
    #[command(flatten)]
    common: Common,
}

fn replicas(count: usize) -> Option<Sweep> {
    (count > 1).then(|| Sweep {
        parameter: Parameter::Replica,
        values: (0..count).map(|k| k as f64).collect(),
    })
}

fn spins(n: usize, dicke: bool) -> System {
    System::Spins {
        spins: n,
        representation: if dicke { Representation::Dicke } else { Representation::Full },
    }
}

fn scenario(experiment: Experiment, system: System, preparation: Preparation, common: &Common) -> Scenario {
    Scenario {
        name: common.name.clone().unwrap_or_else(|| experiment.label().to_string()),
        experiment,
        system,
        preparation,
        projector: None,
        generator: None,
        sweep: None,
        seed: common.seed.unwrap_or(0),
        tolerances: Tolerances::default(),
        output: Output {
            csv: common.csv.clone(),
            summary: common.summary.clone(),
        },
    }
}

fn build(command: Command) -> Result<Option<(Scenario, Common)>> {
    Ok(Some(match command {
        Command::Schema => {
            print!("{}", scenario::SCHEMA);
            return Ok(None);
        }
        Command::Run { config, common } => {
            let mut s = Scenario::load(&config)?;
            if let Some(name) = &common.name {
                s.name = name.clone();
            }
            if let Some(seed) = common.seed {
                s.seed = seed;
            }
            if common.csv.is_some() {
                s.output.csv = common.csv.clone();
            }
            if common.summary.is_some() {
                s.output.summary = common.summary.clone();
            }
            (s, common)
        }
        Command::TheoremCheck(a) => {
            let mut s = scenario(
                Experiment::TheoremCheck,
                spins(a.n, a.dicke),
                Preparation::RandomSector {
                    rank: a.rank,
                    seed: None,
                },
                &a.common,
            );
            s.projector = Some(ProjectorSpec::Parity {
                axis: a.projector_axis.into(),
                parity: a.parity.into(),
            });
            s.generator = Some(GeneratorSpec::Collective { axis: a.generator.into() });
            s.sweep = replicas(a.seeds);
            (s, a.common)
        }
        Command::OatSweep(a) => {
            let t_max = a.t_max.unwrap_or(std::f64::consts::PI * a.n as f64 / (2.0 * a.chi));
            let mut s = scenario(
                Experiment::OatSweep,
                spins(a.n, !a.full),
                Preparation::Oat { chi: a.chi, t: 0.0 },
                &a.common,
            );
            s.generator = Some(GeneratorSpec::Collective { axis: a.generator.into() });
            let points = a.points.max(2);
            s.sweep = Some(Sweep {
                parameter: Parameter::T,
                values: (0..points).map(|k| t_max * k as f64 / (points - 1) as f64).collect(),
            });
            (s, a.common)
        }
        Command::Ramp(a) => {
            let model = match a.model {
                ModelArg::Ising => Model::Ising,
                ModelArg::Xy => Model::Xy,
                ModelArg::Xxz => Model::Xxz,
            };
            let s = scenario(
                Experiment::Ramp,
                spins(a.n, false),
                Preparation::Ramp {
                    model,
                    coupling: a.coupling,
                    alpha: a.alpha,
                    omega_from: a.omega_from,
                    omega_to: a.omega_to,
                    duration: a.duration,
                    steps: a.steps,
                },
                &a.common,
            );
            (s, a.common)
        }
        Command::Bec(a) => {
            let state = if a.dephased { BecKind::Dephased } else { BecKind::Ideal };
            let s = scenario(
                Experiment::Bec,
                System::Bosons {
                    modes: a.modes,
                    n_a: a.n_a,
                    n_b: a.n_b,
                    k_max: a.k_max,
                },
                Preparation::Bec {
                    state,
                    brute_force: a.brute_force,
                },
                &a.common,
            );
            (s, a.common)
        }
        Command::Circuit(a) => {
            let mut s = scenario(Experiment::Circuit, spins(a.n, false), a.input.preparation(a.rank), &a.common);
            s.projector = Some(ProjectorSpec::Parity {
                axis: a.basis.into(),
                parity: Parity::Even,
            });
            s.generator = Some(GeneratorSpec::Collective { axis: a.generator.into() });
            s.sweep = replicas(a.seeds);
            (s, a.common)
        }
        Command::Witness(a) => {
            let mut s = scenario(Experiment::Witness, spins(a.n, false), a.input.preparation(a.rank), &a.common);
            s.generator = Some(GeneratorSpec::Collective { axis: a.generator.into() });
            s.projector = a.sector.map(|p| ProjectorSpec::Parity {
                axis: Axis::X,
                parity: p.into(),
            });
            (s, a.common)
        }
    }))
}

/// Runs every grid point and writes the outputs. Returns whether all checks passed.
fn execute(s: &Scenario, workers: Option<usize>) -> Result<bool> {
    let start = Instant::now();
    let points = s.points()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        anyhow::ensure!(w >= 1, "worker count must be at least 1");
        builder = builder.num_threads(w);
    }
    let pool = builder.build().context("starting the worker pool")?;
    let results = pool.install(|| {
        points
            .par_iter()
            .map(|p| {
                let t = Instant::now();
                let r = evaluate(p).with_context(|| format!("grid point {}", p.index));
                r.map(|r| (r, t.elapsed().as_secs_f64()))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rows = Vec::new();
    let mut extras = Vec::new();
    let mut all_pass = true;
    for (r, wall_time) in results {
        all_pass &= r.extra_pass;
        extras.extend(r.extra);
        for row in r.rows {
            all_pass &= row.pass;
            rows.push(Timed { row, wall_time });
        }
    }
    let csv = output::render_csv(s, &rows)?;
    let summary = output::render_summary(
        s,
        &rows,
        extras,
        all_pass,
        pool.current_num_threads(),
        start.elapsed().as_secs_f64(),
    )?;
    output::commit(&[(s.csv_path(), csv), (s.summary_path(), summary)])?;
    println!(
        "{}: {} rows, {} -> {}",
        s.name,
        rows.len(),
        if all_pass { "all pass" } else { "FAILURES" },
        s.csv_path().display()
    );
    Ok(all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = (|| -> Result<Option<bool>> {
        let Some((s, common)) = build(cli.command)? else {
            return Ok(None);
        };
        s.validate()?;
        if common.validate_only {
            println!("{}: valid, {} grid points", s.name, s.points()?.len());
            return Ok(None);
        }
        execute(&s, cli.workers).map(Some)
    })();
    match outcome {
        Ok(None) | Ok(Some(true)) => ExitCode::SUCCESS,
        Ok(Some(false)) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
