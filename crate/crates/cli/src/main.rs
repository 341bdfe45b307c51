use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use netsing::continuation::Fig2Panel;
use netsing::io::{
    analyze, bifurcate, exit_code, kron_network, parse_currents, parse_network, parse_seeds, reduce_network,
    write_diagram_csv, BifurcateRequest, DiagramSidecar, ReduceOptions,
};
use netsing::linalg::DEFAULT_RANK_TOL;
use netsing::singularity::{FdOptions, DEFAULT_TOL_CLASS};
use netsing::{Error, NetworkModel};

#[derive(Parser)]
#[command(name = "netsing", version, about = "Singularities and bifurcations of signed resistive networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Network file (JSON).
    file: PathBuf,
    /// Relative rank cut for singular values.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    rank_tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum, corank and definiteness of L(0), with the critical gain certificate.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Kron-reduce the network onto its terminals at an operating point.
    Kron {
        #[command(flatten)]
        common: Common,
        /// Output path; stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Terminal potentials, comma separated (default all zero).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        zb: Option<Vec<f64>>,
    },
    /// Lyapunov-Schmidt coefficients and bifurcation class at the singular point.
    Reduce {
        #[command(flatten)]
        common: Common,
        /// Override the parameter `beta`.
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        /// Parameter driven by the bifurcation parameter (default: gain of the negative edge).
        #[arg(long)]
        param_dir: Option<String>,
        /// Finite-difference step (default: chosen from the coefficient scale).
        #[arg(long)]
        fd_step: Option<f64>,
        /// Agreement required between the two finite-difference step sizes.
        #[arg(long, default_value_t = FdOptions::default().tol)]
        fd_tol: f64,
        /// Relative zero threshold for the coefficients.
        #[arg(long, default_value_t = DEFAULT_TOL_CLASS)]
        tol_class: f64,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Trace a bifurcation diagram and write it as CSV plus a JSON sidecar.
    Bifurcate {
        #[command(flatten)]
        common: Common,
        /// Continuation parameter.
        #[arg(long)]
        param: Option<String>,
        /// Parameter interval `a:b` with a < b.
        #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
        range: Option<(f64, f64)>,
        /// Boundary currents: a JSON array or {"u_B": [...]}.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Extra starting points: JSON array of {"lambda", "z"}.
        #[arg(long)]
        seeds: Option<PathBuf>,
        /// CSV output path; stdout when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Sidecar path (default: the CSV path with extension .json).
        #[arg(long)]
        sidecar: Option<PathBuf>,
        /// Named scenario: fig2-top, fig2-center or fig2-bottom.
        #[arg(long)]
        preset: Option<Fig2Panel>,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected `a:b`")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("lower end: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("upper end: {e}"))?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(format!("need finite a < b, got {a}:{b}"));
    }
    Ok((a, b))
}

fn read(path: &Path) -> netsing::Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> netsing::Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(Error::from),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn load(c: &Common) -> netsing::Result<NetworkModel> {
    if !(c.rank_tol > 0.0 && c.rank_tol < 1.0) {
        return Err(Error::InvalidArgument(format!("--rank-tol must lie in (0, 1), got {}", c.rank_tol)));
    }
    parse_network(&c.file)
}

fn run(cmd: Command) -> netsing::Result<()> {
    match cmd {
        Command::Analyze { common, json } => {
            let rep = analyze(&load(&common)?, common.rank_tol)?;
            write_out(None, &if json { to_json(&rep) } else { rep.to_string() })
        }
        Command::Kron { common, out, zb } => {
            let net = load(&common)?;
            let zb = zb.map(DVector::from_vec);
            let rep = kron_network(&net, zb.as_ref())?;
            write_out(out.as_deref(), &to_json(&rep))
        }
        Command::Reduce { common, beta, param_dir, fd_step, fd_tol, tol_class, json } => {
            let net = load(&common)?;
            let opts = ReduceOptions { beta, param_dir, fd_step, fd_tol, tol_class, rank_tol: common.rank_tol };
            let rep = reduce_network(&net, &opts)?;
            write_out(None, &if json { to_json(&rep) } else { rep.to_string() })
        }
        Command::Bifurcate { common, param, range, input, seeds, out, sidecar, preset } => {
            let net = load(&common)?;
            let currents = input.as_deref().map(read).transpose()?.map(|t| parse_currents(&t)).transpose()?;
            let seeds = match seeds {
                Some(p) => parse_seeds(&read(&p)?)?,
                None => Vec::new(),
            };
            let req = BifurcateRequest { param, range, currents, seeds, preset };
            let (path, diagram) = bifurcate(&net, &req)?;
            let mut csv = Vec::new();
            write_diagram_csv(&diagram, &mut csv)?;
            write_out(out.as_deref(), &String::from_utf8(csv).expect("csv is utf-8"))?;
            let sidecar = sidecar.or_else(|| out.as_ref().map(|p| p.with_extension("json")));
            if let Some(p) = sidecar {
                write_out(Some(&p), &to_json(&DiagramSidecar::new(&path, &diagram)))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
