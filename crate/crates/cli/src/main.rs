use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fpu_lindstedt::compare::DEFAULT_DIVERGENCE_THRESHOLD;
use fpu_lindstedt::io::{fmt_sig, parse_ics, parse_list};
use fpu_lindstedt::lattice::DEFAULT_RESONANCE_TOL;
use fpu_lindstedt::series::write_term_dump;
use fpu_lindstedt::{
    integrate, repro_n2, rho_first_order, rho_self_consistent, run_compare, CompareOptions, Error,
    IntegratorConfig, Lattice, LatticeConfig, ModeState, SeriesSolution, ShiftMethod, Trajectory,
};

/// First-order Lindstedt series and reference integrators for the FPU-β chain.
#[derive(Parser)]
#[command(name = "fpu-lindstedt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the harmonic spectrum ω_k.
    Spectrum {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Print one coupling coefficient C_klmn, or every nonzero entry.
    Coupling {
        #[arg(long)]
        n: usize,
        /// Four 1-based mode indices k l m n.
        #[arg(num_args = 4, value_names = ["K", "L", "M", "N"])]
        indices: Option<Vec<usize>>,
        #[command(flatten)]
        output: Output,
    },
    /// Amplitude-dependent frequency shifts ρ_k and β_k.
    Rho {
        #[command(flatten)]
        setup: Setup,
        #[command(flatten)]
        output: Output,
    },
    /// Sample the series solution, or dump its source-term table.
    Series {
        #[command(flatten)]
        setup: Setup,
        #[command(flatten)]
        grid: Grid,
        /// Write the restricted source-term table instead of samples.
        #[arg(long)]
        terms: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Integrate the mode-space equations of motion.
    Integrate {
        #[command(flatten)]
        setup: Setup,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, value_enum, default_value_t = MethodArg::Rk4)]
        method: MethodArg,
        /// Record H(t) in an extra column.
        #[arg(long)]
        energy: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Compare the series against RK4 and report error metrics.
    Compare {
        #[command(flatten)]
        setup: Setup,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, default_value_t = DEFAULT_DIVERGENCE_THRESHOLD)]
        threshold: f64,
        /// Path for the per-sample comparison columns.
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Reproduce the two-particle example.
    ReproN2 {
        /// Path for the per-sample comparison columns.
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct Setup {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Initial mode amplitudes, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    q0: Option<String>,
    /// Initial mode velocities, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    p0: Option<String>,
    /// File with one `Q_k(0) Qdot_k(0)` pair per line.
    #[arg(long, conflicts_with_all = ["q0", "p0"])]
    ics_file: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_RESONANCE_TOL)]
    resonance_tol: f64,
    /// Solve the frequency shifts self-consistently.
    #[arg(long)]
    self_consistent: bool,
}

#[derive(Args)]
struct Grid {
    #[arg(long, default_value_t = 100.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Number of output intervals; must divide t_max/dt. Defaults to every
    /// tenth step.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Rk4,
    Leapfrog,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } | Error::BlowUp { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Spectrum { n, output } => spectrum(n, &output),
        Command::Coupling { n, indices, output } => coupling_cmd(n, indices, &output),
        Command::Rho { setup, output } => rho(&setup, &output),
        Command::Series {
            setup,
            grid,
            terms,
            output,
        } => series(&setup, &grid, terms, &output),
        Command::Integrate {
            setup,
            grid,
            method,
            energy,
            output,
        } => integrate_cmd(&setup, &grid, method, energy, &output),
        Command::Compare {
            setup,
            grid,
            threshold,
            data,
            output,
        } => compare(&setup, &grid, threshold, data, &output),
        Command::ReproN2 { data, output } => repro(data, &output),
    }
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn json_array(xs: &[f64]) -> serde_json::Value {
    serde_json::Value::Array(xs.iter().map(|&x| serde_json::json!(x)).collect())
}

fn build(setup: &Setup) -> Result<(Lattice<f64>, ModeState<f64>), Failure> {
    let ics = match (&setup.ics_file, &setup.q0) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            parse_ics(&text)?
        }
        (None, Some(q0)) => {
            let q: Vec<f64> = parse_list(q0)?;
            let qdot = match &setup.p0 {
                Some(p0) => parse_list(p0)?,
                None => vec![0.0; q.len()],
            };
            ModeState::new(q, qdot)?
        }
        (None, None) => match setup.n {
            Some(n) => ModeState::zeros(n),
            None => return Err(Failure::Usage("one of --n, --q0 or --ics-file is required".into())),
        },
    };
    let n = setup.n.unwrap_or(ics.len());
    if ics.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: ics.len(),
        }
        .into());
    }
    let config = LatticeConfig::new(n, setup.epsilon)?.with_resonance_tol(setup.resonance_tol)?;
    Ok((Lattice::new(config)?, ics))
}

fn shift_method(setup: &Setup) -> ShiftMethod {
    if setup.self_consistent {
        ShiftMethod::SelfConsistent
    } else {
        ShiftMethod::FirstOrder
    }
}

/// Sample stride for a grid, validated against the step count.
fn stride(grid: &Grid) -> Result<usize, Failure> {
    let steps = IntegratorConfig::rk4(grid.dt, grid.t_max).steps()?;
    match grid.samples {
        Some(0) => Err(Failure::Usage("--samples must be positive".into())),
        Some(s) if steps % s != 0 => Err(Failure::Usage(format!("--samples {s} does not divide {steps} steps"))),
        Some(s) => Ok(steps / s),
        None if steps % 10 == 0 => Ok(10),
        None => Ok(1),
    }
}

fn spectrum(n: usize, output: &Output) -> CliResult {
    let lattice = Lattice::<f64>::new(LatticeConfig::new(n, 0.0)?)?;
    let omega = lattice.spectrum().as_slice();
    let mut out = sink(&output.out)?;
    match output.format {
        Some(Format::Json) => writeln!(out, "{}", serde_json::json!({ "omega": json_array(omega) }))?,
        Some(Format::Csv) => {
            writeln!(out, "k,omega")?;
            for (k, w) in omega.iter().enumerate() {
                writeln!(out, "{},{}", k + 1, fmt_sig(*w))?;
            }
        }
        None => {
            for w in omega {
                writeln!(out, "{}", fmt_sig(*w))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn coupling_cmd(n: usize, indices: Option<Vec<usize>>, output: &Output) -> CliResult {
    let lattice = Lattice::<f64>::new(LatticeConfig::new(n, 0.0)?)?;
    let mut out = sink(&output.out)?;
    if let Some(ix) = indices {
        let c = lattice.coupling(ix[0], ix[1], ix[2], ix[3])?;
        match output.format {
            Some(Format::Json) => writeln!(out, "{}", serde_json::json!({ "index": ix, "C": c }))?,
            _ => writeln!(out, "{c}")?,
        }
    } else {
        let entries = lattice.nonzero_couplings();
        match output.format {
            Some(Format::Json) => {
                let rows: Vec<_> = entries
                    .iter()
                    .map(|&(k, l, m, nn, c)| serde_json::json!([k, l, m, nn, c]))
                    .collect();
                writeln!(out, "{}", serde_json::json!({ "n": n, "nonzero": rows }))?;
            }
            _ => {
                writeln!(out, "k,l,m,n,C")?;
                for (k, l, m, nn, c) in entries {
                    writeln!(out, "{k},{l},{m},{nn},{c}")?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn rho(setup: &Setup, output: &Output) -> CliResult {
    let (lattice, ics) = build(setup)?;
    let shift = if setup.self_consistent {
        rho_self_consistent(
            &lattice,
            &ics,
            fpu_lindstedt::series::DEFAULT_SELF_CONSISTENT_MAX_ITER,
            fpu_lindstedt::series::DEFAULT_SELF_CONSISTENT_TOL,
        )?
    } else {
        rho_first_order(&lattice, &ics)?
    };
    let shifted = shift.shifted_omega(lattice.spectrum().as_slice());
    let mut out = sink(&output.out)?;
    match output.format {
        Some(Format::Json) => writeln!(
            out,
            "{}",
            serde_json::json!({
                "rho": json_array(&shift.rho),
                "beta": json_array(&shift.beta),
                "shifted_omega": json_array(&shifted),
            })
        )?,
        Some(Format::Csv) => {
            writeln!(out, "k,rho,beta,shifted_omega")?;
            for k in 0..lattice.n() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    k + 1,
                    fmt_sig(shift.rho[k]),
                    fmt_sig(shift.beta[k]),
                    fmt_sig(shifted[k])
                )?;
            }
        }
        None => {
            for k in 0..lattice.n() {
                writeln!(
                    out,
                    "rho_{0} = {1}  beta_{0} = {2}  beta_{0}*omega_{0} = {3}",
                    k + 1,
                    fmt_sig(shift.rho[k]),
                    fmt_sig(shift.beta[k]),
                    fmt_sig(shifted[k])
                )?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn series(setup: &Setup, grid: &Grid, terms: bool, output: &Output) -> CliResult {
    let (lattice, ics) = build(setup)?;
    let solution = SeriesSolution::new(&lattice, ics, shift_method(setup))?;
    for w in solution.resonances().warnings() {
        eprintln!("warning: {w}");
    }
    let mut out = sink(&output.out)?;
    if terms {
        write_term_dump(solution.term_tables(), &mut out)?;
    } else {
        let stride = stride(grid)?;
        let steps = IntegratorConfig::rk4(grid.dt, grid.t_max).steps()?;
        let times: Vec<f64> = (0..=steps / stride).map(|i| (i * stride) as f64 * grid.dt).collect();
        let states = times.iter().map(|&t| solution.eval(t)).collect();
        Trajectory {
            times,
            states,
            energy: None,
        }
        .write_csv(&mut out)?;
    }
    out.flush()?;
    Ok(())
}

fn integrate_cmd(setup: &Setup, grid: &Grid, method: MethodArg, energy: bool, output: &Output) -> CliResult {
    let (lattice, ics) = build(setup)?;
    let mut icfg = match method {
        MethodArg::Rk4 => IntegratorConfig::rk4(grid.dt, grid.t_max),
        MethodArg::Leapfrog => IntegratorConfig::leapfrog(grid.dt, grid.t_max),
    }
    .sample_every(stride(grid)?);
    if energy {
        icfg = icfg.with_energy();
    }
    let trajectory = integrate(&lattice, &ics, &icfg)?;
    if let Some(drift) = trajectory.max_relative_energy_drift() {
        eprintln!("max relative energy drift: {}", fmt_sig(drift));
    }
    let mut out = sink(&output.out)?;
    trajectory.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn compare(setup: &Setup, grid: &Grid, threshold: f64, data: Option<PathBuf>, output: &Output) -> CliResult {
    let (lattice, ics) = build(setup)?;
    let opts = CompareOptions::new(grid.t_max)
        .dt(grid.dt)
        .sample_every(stride(grid)?)
        .threshold(threshold)
        .shift(shift_method(setup));
    let comparison = run_compare(&lattice, &ics, &opts)?;
    for w in comparison.solution.resonances().warnings() {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &data {
        let mut f = sink(&Some(path.clone()))?;
        comparison.write_csv(&mut f)?;
        f.flush()?;
    }
    let mut out = sink(&output.out)?;
    match output.format {
        Some(Format::Csv) => comparison.report.write_csv(&mut out)?,
        _ => writeln!(out, "{}", serde_json::to_string_pretty(&comparison.report.to_json()).unwrap())?,
    }
    out.flush()?;
    Ok(())
}

fn repro(data: Option<PathBuf>, output: &Output) -> CliResult {
    let repro = repro_n2()?;
    if let Some(path) = &data {
        let mut f = sink(&Some(path.clone()))?;
        repro.comparison.write_csv(&mut f)?;
        f.flush()?;
    }
    let mut out = sink(&output.out)?;
    match output.format {
        Some(Format::Json) => writeln!(out, "{}", serde_json::to_string_pretty(&repro.report().to_json()).unwrap())?,
        Some(Format::Csv) => repro.report().write_csv(&mut out)?,
        None => write!(out, "{repro}")?,
    }
    out.flush()?;
    Ok(())
}
