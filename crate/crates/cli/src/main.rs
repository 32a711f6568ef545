//! `spinrestrict` command-line interface.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use spinrestrict::bounds::Intermediates;
use spinrestrict::normflow::{self, NormFlowParams};
use spinrestrict::propagate::{self, EvolveOptions};
use spinrestrict::superop::{build_h1, build_h2, build_r1, assemble_liouvillian};
use spinrestrict::{
    equilibrium_state, initial_state, parse_system, required_order, short_time_horizon, Basis,
    BoundQuery, Error, InitialSpec, RelaxationLaw,
};

const THREADS_ENV: &str = "SPINRESTRICT_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "spinrestrict",
    version,
    about = "Correlation-order-restricted spin dynamics, norm-transport model and truncation bounds",
    after_help = "All frequencies and rates are in Hz. Set SPINRESTRICT_THREADS to fix the worker thread count."
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Csv)]
    format: Format,

    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Report errors on stderr as a JSON object.
    #[arg(long, global = true)]
    json_errors: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Law {
    Linear,
    Sqrt,
    Constant,
}

impl From<Law> for RelaxationLaw {
    fn from(l: Law) -> Self {
        match l {
            Law::Linear => RelaxationLaw::Linear,
            Law::Sqrt => RelaxationLaw::Sqrt,
            Law::Constant => RelaxationLaw::Constant,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Smallest truncation order k keeping the leaked norm fraction below xi.
    ///
    /// h and r may be given in any common unit; only h/r matters.
    Advise(AdviseArgs),
    /// Propagate a spin system and write per-order norm trajectories.
    Simulate(SimulateArgs),
    /// Integrate the scalar norm chain.
    Normflow(NormflowArgs),
    /// Evaluate the continuum norm profile.
    Profile(ProfileArgs),
}

#[derive(Args, Debug)]
struct AdviseArgs {
    /// Coupling scale h.
    #[arg(long)]
    h: f64,
    /// Base relaxation rate r (same unit as h).
    #[arg(long)]
    r: f64,
    /// Tolerated leaked fraction, 0 < xi <= 1.
    #[arg(long)]
    xi: f64,
    #[arg(long, value_enum, default_value_t = Law::Linear)]
    law: Law,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Spin system JSON document.
    #[arg(long)]
    system: PathBuf,
    /// Maximum correlation order kept.
    #[arg(long)]
    k: usize,
    /// Initial state: all_x, all_z or singlet:I,J.
    #[arg(long, default_value = "all_x")]
    rho0: InitialSpec,
    /// Detection state (defaults to the initial state).
    #[arg(long)]
    obs: Option<InitialSpec>,
    /// Total time in seconds.
    #[arg(long)]
    t_total: f64,
    /// Output interval in seconds.
    #[arg(long)]
    dt: f64,
    /// Also run the full space and report the truncation error.
    #[arg(long)]
    full_compare: bool,
    /// Where to write the comparison report (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Export the Liouvillian in coordinate text format.
    #[arg(long)]
    export_liouvillian: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NormflowArgs {
    #[arg(long)]
    h: f64,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    r0: f64,
    #[arg(long)]
    levels: usize,
    #[arg(long, value_enum, default_value_t = Law::Linear)]
    law: Law,
    #[arg(long)]
    t_total: f64,
    #[arg(long)]
    dt: f64,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[arg(long)]
    h: f64,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    r0: f64,
    #[arg(long, value_enum, default_value_t = Law::Linear)]
    law: Law,
    /// Time of the transient profile.
    #[arg(long, conflicts_with = "stationary", required_unless_present = "stationary")]
    t: Option<f64>,
    /// Evaluate the stationary profile instead.
    #[arg(long)]
    stationary: bool,
    #[arg(long, default_value_t = 20.0)]
    x_max: f64,
    #[arg(long, default_value_t = 401)]
    nx: usize,
    /// Where to write the delta sidecar (JSON); defaults next to --output.
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

/// Failure classes with their exit codes.
#[derive(Debug)]
enum Failure {
    Usage { flag: Option<String>, message: String },
    Runtime(anyhow::Error),
}

impl Failure {
    fn usage(flag: impl Into<String>, message: impl Into<String>) -> Self {
        Failure::Usage {
            flag: Some(flag.into()),
            message: message.into(),
        }
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Usage { .. } => 2,
            Failure::Runtime(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage { message, .. } => message.clone(),
            Failure::Runtime(e) => format!("{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<Error>() {
            Ok(lib) => lib.into(),
            Err(e) => Failure::Runtime(e),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

/// Library parameter errors become usage errors naming the flag.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { name, reason } => {
                let flag = format!("--{}", name.replace('_', "-"));
                Failure::Usage {
                    message: format!("invalid value for {flag}: {reason}"),
                    flag: Some(flag),
                }
            }
            other => Failure::Runtime(other.into()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let json_errors = std::env::args().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            if json_errors {
                report_json("usage", None, &e.to_string(), 2);
            } else {
                let _ = e.print();
            }
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            if cli.json_errors {
                let (kind, flag) = match &f {
                    Failure::Usage { flag, .. } => ("usage", flag.as_deref()),
                    Failure::Runtime(_) => ("runtime", None),
                };
                report_json(kind, flag, &f.message(), code);
            } else {
                eprintln!("error: {}", f.message());
            }
            ExitCode::from(code)
        }
    }
}

fn report_json(kind: &str, flag: Option<&str>, message: &str, code: u8) {
    let doc = json!({
        "error": kind,
        "flag": flag,
        "message": message.trim(),
        "exit_code": code,
    });
    eprintln!("{doc}");
}

fn run(cli: &Cli) -> CmdResult {
    configure_threads()?;
    match &cli.command {
        Command::Advise(a) => advise(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Normflow(a) => normflow_cmd(cli, a),
        Command::Profile(a) => profile(cli, a),
    }
}

fn configure_threads() -> CmdResult {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(THREADS_ENV, format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Runtime(e.into()))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(path: Option<&Path>, value: &impl serde::Serialize) -> CmdResult {
    let mut w = open_output(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Runtime(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn finite(flag: &str, v: f64) -> CmdResult {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(flag, format!("invalid value for {flag}: must be finite, got {v}")))
    }
}

fn positive(flag: &str, v: f64) -> CmdResult {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(flag, format!("invalid value for {flag}: must be finite and > 0, got {v}")))
    }
}

fn advise(cli: &Cli, a: &AdviseArgs) -> CmdResult {
    let started = Instant::now();
    let q = BoundQuery::new(a.h, a.r, a.xi, a.law.into())?;
    let b = required_order(&q)?;
    let horizon = short_time_horizon(b.k_int, a.h);
    let elapsed = started.elapsed().as_secs_f64();
    if cli.format == Format::Json {
        return write_json(
            cli.output.as_deref(),
            &json!({
                "query": q,
                "k_real": b.k_real,
                "k_int": b.k_int,
                "intermediates": b.intermediates,
                "short_time_horizon": horizon,
                "elapsed_s": elapsed,
            }),
        );
    }
    let mut w = open_output(cli.output.as_deref())?;
    writeln!(w, "quantity,value")?;
    writeln!(w, "law,{}", RelaxationLaw::from(a.law))?;
    writeln!(w, "h,{}", a.h)?;
    writeln!(w, "r,{}", a.r)?;
    writeln!(w, "xi,{}", a.xi)?;
    writeln!(w, "k_real,{:.12}", b.k_real)?;
    writeln!(w, "k_int,{}", b.k_int)?;
    match b.intermediates {
        Intermediates::Linear {
            erfc_argument,
            erfc_value,
            scaled_target,
            erfc_inv_value,
        } => {
            writeln!(w, "erfc_argument,{erfc_argument:.12e}")?;
            writeln!(w, "erfc_value,{erfc_value:.12e}")?;
            writeln!(w, "scaled_target,{scaled_target:.12e}")?;
            writeln!(w, "erfc_inv_value,{erfc_inv_value:.12e}")?;
        }
        Intermediates::Sqrt {
            e13_argument,
            e13_value,
            ratio_at_k,
            iterations,
        } => {
            writeln!(w, "e13_argument,{e13_argument:.12e}")?;
            writeln!(w, "e13_value,{e13_value:.12e}")?;
            writeln!(w, "ratio_at_k,{ratio_at_k:.12e}")?;
            writeln!(w, "bisection_iterations,{iterations}")?;
        }
        Intermediates::Constant { log_inverse_xi } => {
            writeln!(w, "log_inverse_xi,{log_inverse_xi:.12e}")?;
        }
    }
    writeln!(w, "short_time_horizon,{horizon:.12e}")?;
    w.flush()?;
    Ok(())
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> CmdResult {
    positive("--dt", a.dt)?;
    finite("--t-total", a.t_total)?;
    if a.t_total < 0.0 {
        return Err(Failure::usage("--t-total", "invalid value for --t-total: must be >= 0"));
    }
    if a.full_compare && a.report.is_none() && cli.output.is_none() {
        return Err(Failure::usage(
            "--report",
            "--full-compare needs --report (or --output, next to which the report is written)",
        ));
    }
    let text = std::fs::read_to_string(&a.system)
        .with_context(|| format!("cannot read {}", a.system.display()))?;
    let system = parse_system(&text).map_err(|e| Failure::Runtime(e.into()))?;
    if a.k > system.len() {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "--k {} exceeds the number of spins ({})",
            a.k,
            system.len()
        )));
    }
    let obs = a.obs.unwrap_or(a.rho0);
    let nsteps = (a.t_total / a.dt).round() as usize;

    let basis = Basis::build(&system, a.k).map_err(|e| Failure::Runtime(e.into()))?;
    let h1 = build_h1::<f64>(&system, &basis).map_err(|e| Failure::Runtime(e.into()))?;
    let h2 = build_h2::<f64>(&system, &basis).map_err(|e| Failure::Runtime(e.into()))?;
    let r1 = build_r1::<f64>(&system, &basis).map_err(|e| Failure::Runtime(e.into()))?;
    let eq = equilibrium_state::<f64>(&system, &basis).map_err(|e| Failure::Runtime(e.into()))?;
    let (l, drive) =
        assemble_liouvillian(&h1, &h2, &r1, &eq).map_err(|e| Failure::Runtime(e.into()))?;
    if let Some(path) = &a.export_liouvillian {
        let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        l.write_coordinate(BufWriter::new(f))?;
    }
    let rho0 = initial_state::<f64>(&system, &basis, a.rho0).map_err(|e| Failure::Runtime(e.into()))?;
    let run = propagate::run_streamed(
        &l,
        &drive,
        &rho0,
        None,
        &basis,
        a.dt,
        nsteps,
        &EvolveOptions::default(),
    )
    .map_err(|e| Failure::Runtime(e.into()))?;

    if cli.format == Format::Json {
        write_json(cli.output.as_deref(), &run.norms)?;
    } else {
        let mut w = open_output(cli.output.as_deref())?;
        run.norms.write_csv(&mut w)?;
        w.flush()?;
    }

    if a.full_compare {
        let report = propagate::compare_restricted_full(&system, a.k, a.rho0, obs, a.t_total, a.dt)
            .map_err(|e| Failure::Runtime(e.into()))?;
        let path = a.report.clone().unwrap_or_else(|| {
            let mut p = cli.output.clone().expect("checked above").into_os_string();
            p.push(".report.json");
            PathBuf::from(p)
        });
        write_json(Some(&path), &report)?;
    }
    Ok(())
}

fn normflow_cmd(cli: &Cli, a: &NormflowArgs) -> CmdResult {
    positive("--dt", a.dt)?;
    finite("--t-total", a.t_total)?;
    let params = NormFlowParams::new(a.h, a.r, a.r0, a.levels, a.law.into())?;
    let mut init = vec![0.0; a.levels];
    init[0] = 1.0;
    let traj = normflow::solve_chain(&params, &init, a.t_total, a.dt)?;
    if cli.format == Format::Json {
        return write_json(cli.output.as_deref(), &traj);
    }
    let mut w = open_output(cli.output.as_deref())?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn profile(cli: &Cli, a: &ProfileArgs) -> CmdResult {
    positive("--x-max", a.x_max)?;
    if a.nx < 2 {
        return Err(Failure::usage("--nx", "invalid value for --nx: need at least 2 points"));
    }
    let params = NormFlowParams::new(a.h, a.r, a.r0, 2, a.law.into())?;
    if a.h <= 0.0 {
        return Err(Failure::usage("--h", "invalid value for --h: must be > 0"));
    }
    let grid: Vec<f64> = (0..a.nx)
        .map(|i| a.x_max * i as f64 / (a.nx - 1) as f64)
        .collect();
    let prof = match a.t {
        Some(t) => {
            finite("--t", t)?;
            normflow::transient_profile(&params, &grid, t)?
        }
        None => normflow::stationary_profile(&params, &grid)?,
    };
    if cli.format == Format::Json {
        return write_json(cli.output.as_deref(), &prof);
    }
    let mut w = open_output(cli.output.as_deref())?;
    prof.write_csv(&mut w)?;
    w.flush()?;
    drop(w);
    if let Some(sidecar) = prof.sidecar_json() {
        let path = a.sidecar.clone().or_else(|| {
            cli.output.as_ref().map(|o| {
                let mut p = o.clone().into_os_string();
                p.push(".delta.json");
                PathBuf::from(p)
            })
        });
        match path {
            Some(p) => std::fs::write(&p, sidecar + "\n")
                .with_context(|| format!("cannot write {}", p.display()))?,
            None => eprintln!("{sidecar}"),
        }
    }
    Ok(())
}
