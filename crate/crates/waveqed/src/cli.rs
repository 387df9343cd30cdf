//! Command-line front end: `solve`, `sweep`, `verify` and `dump-chain`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 bad input (flags or network
//! document, with the offending field path in the message), 3 numerical
//! failure (singular node or ill-conditioned system), 4 verification
//! failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::model::parse_network;
use crate::scattering::{flux_report, solve_direct, solve_transfer, ScatteringResult, SolveError};
use crate::selfcheck::{run_suite, GridSize};
use crate::sweep::{run_sweep, write_csv, Axis, AxisParam, FixedParams, SweepSpec};
use crate::transfer::{build_chain, matrix_to_json, FactorKind, NodeSign};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;

#[derive(Parser)]
#[command(
    name = "waveqed",
    version,
    about = "Single-photon scattering in qubit-waveguide networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a network description and print the scattering result.
    Solve {
        /// Path to a JSON network document.
        network: PathBuf,
        /// Solution path; `auto` tries the transfer cascade and falls back
        /// to the direct solver when a node gamma is singular.
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        #[arg(long, value_enum, default_value_t = OutputArg::Json)]
        output: OutputArg,
    },
    /// Sweep interferometer parameters and emit a CSV table.
    ///
    /// Axes take the form `name:from:to:steps` with name one of phi, theta,
    /// re_gamma, im_gamma; the remaining parameters must be fixed with
    /// --gamma / --theta / --phi.
    Sweep {
        /// Fixed gamma as `re,im`.
        #[arg(long)]
        gamma: Option<String>,
        /// Fixed common path phase theta (radians).
        #[arg(long)]
        theta: Option<f64>,
        /// Fixed extra mode-2 phase phi (radians).
        #[arg(long)]
        phi: Option<f64>,
        /// First (outer) axis, `name:from:to:steps`.
        #[arg(long)]
        axis1: String,
        /// Optional second (inner) axis, `name:from:to:steps`.
        #[arg(long)]
        axis2: Option<String>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in verification suite and print a pass/fail table.
    Verify {
        #[arg(long, value_enum, default_value_t = GridArg::Coarse)]
        grid: GridArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Run every transfer-path solve with the flipped node sign to
        /// demonstrate that the suite catches the wrong convention.
        #[arg(long, hide = true)]
        flip_node_sign: bool,
    },
    /// Print the transfer chain of a network as JSON matrices.
    DumpChain {
        /// Path to a JSON network document.
        network: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Transfer,
    Direct,
    Auto,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputArg {
    Json,
    Pretty,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridArg {
    Coarse,
    Fine,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

/// Parse the process arguments, dispatch, and return the exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve {
            network,
            method,
            output,
        } => cmd_solve(&network, method, output),
        Command::Sweep {
            gamma,
            theta,
            phi,
            axis1,
            axis2,
            out,
        } => cmd_sweep(gamma, theta, phi, &axis1, axis2.as_deref(), out.as_deref()),
        Command::Verify {
            grid,
            seed,
            flip_node_sign,
        } => return cmd_verify(grid, seed, flip_node_sign),
        Command::DumpChain { network } => cmd_dump_chain(&network),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

fn read_network(path: &Path) -> Result<crate::model::NetworkSpec, Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::new(EXIT_IO, format!("cannot read {}: {e}", path.display())))?;
    parse_network(&bytes).map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))
}

fn cmd_solve(path: &Path, method: MethodArg, output: OutputArg) -> Result<(), Failure> {
    let net = read_network(path)?;
    let solved = match method {
        MethodArg::Transfer => solve_transfer(&net),
        MethodArg::Direct => solve_direct(&net),
        MethodArg::Auto => match solve_transfer(&net) {
            Err(SolveError::SingularNode(_)) => solve_direct(&net),
            other => other,
        },
    };
    let result = solved.map_err(|e| Failure::new(EXIT_NUMERIC, e.to_string()))?;
    match output {
        OutputArg::Json => println!("{}", result.to_json()),
        OutputArg::Pretty => print_pretty(&result),
    }
    Ok(())
}

fn print_pretty(result: &ScatteringResult) {
    println!("method     {}", result.method.as_str());
    println!("condition  {:.3e}", result.condition);
    println!(
        "{:<6} {:<26} {:>10}   {:<26} {:>10}",
        "mode", "transmitted", "|t|", "reflected", "|r|"
    );
    for (m, (t, r)) in result
        .transmitted
        .iter()
        .zip(result.reflected.iter())
        .enumerate()
    {
        println!(
            "{:<6} {:<26} {:>10.6}   {:<26} {:>10.6}",
            m + 1,
            format!("{:+.6}{:+.6}i", t.re, t.im),
            t.norm(),
            format!("{:+.6}{:+.6}i", r.re, r.im),
            r.norm()
        );
    }
    if let Some(qs) = &result.qubit_amplitudes {
        for (j, q) in qs.iter().enumerate() {
            println!("qubit {:<4} q = {:+.6}{:+.6}i", j + 1, q.re, q.im);
        }
    }
    let flux = flux_report(result);
    println!(
        "flux       in {:.6}   out {:.6}   absorbed {:.6}",
        flux.incoming, flux.outgoing, flux.absorbed
    );
}

fn cmd_sweep(
    gamma: Option<String>,
    theta: Option<f64>,
    phi: Option<f64>,
    axis1: &str,
    axis2: Option<&str>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let axis1 = parse_axis(axis1)?;
    let axis2 = axis2.map(parse_axis).transpose()?;
    let mut fixed = FixedParams::default();
    if let Some(text) = gamma {
        let (re, im) = parse_gamma(&text)?;
        fixed.re_gamma = Some(re);
        fixed.im_gamma = Some(im);
    }
    fixed.theta = theta;
    fixed.phi = phi;
    let spec = SweepSpec {
        axis1,
        axis2,
        fixed,
    };
    spec.validate()
        .map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))?;
    let workers = workers_from_env()?;
    let table = run_sweep(&spec, workers).map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))?;
    match out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| {
                Failure::new(EXIT_IO, format!("cannot create {}: {e}", path.display()))
            })?;
            let mut writer = io::BufWriter::new(file);
            write_csv(&table, &mut writer)
                .and_then(|()| writer.flush())
                .map_err(|e| Failure::new(EXIT_IO, format!("write failed: {e}")))?;
        }
        None => {
            let stdout = io::stdout();
            write_csv(&table, stdout.lock())
                .map_err(|e| Failure::new(EXIT_IO, format!("write failed: {e}")))?;
        }
    }
    Ok(())
}

fn parse_axis(text: &str) -> Result<Axis, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(Failure::new(
            EXIT_INPUT,
            format!("axis `{text}` must have the form name:from:to:steps"),
        ));
    }
    let param: AxisParam = parts[0]
        .parse()
        .map_err(|e| Failure::new(EXIT_INPUT, format!("axis `{text}`: {e}")))?;
    let from: f64 = parts[1]
        .parse()
        .map_err(|_| Failure::new(EXIT_INPUT, format!("axis `{text}`: bad `from` value")))?;
    let to: f64 = parts[2]
        .parse()
        .map_err(|_| Failure::new(EXIT_INPUT, format!("axis `{text}`: bad `to` value")))?;
    let steps: usize = parts[3]
        .parse()
        .map_err(|_| Failure::new(EXIT_INPUT, format!("axis `{text}`: bad `steps` value")))?;
    Ok(Axis {
        param,
        from,
        to,
        steps,
    })
}

fn parse_gamma(text: &str) -> Result<(f64, f64), Failure> {
    let err = || Failure::new(EXIT_INPUT, format!("--gamma `{text}` must be `re,im`"));
    let (re, im) = text.split_once(',').ok_or_else(err)?;
    Ok((
        re.trim().parse().map_err(|_| err())?,
        im.trim().parse().map_err(|_| err())?,
    ))
}

/// WAVEQED_WORKERS caps sweep parallelism; defaults to the available CPUs.
fn workers_from_env() -> Result<usize, Failure> {
    match std::env::var("WAVEQED_WORKERS") {
        Ok(text) => match text.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Failure::new(
                EXIT_INPUT,
                format!("WAVEQED_WORKERS must be a positive integer, got `{text}`"),
            )),
        },
        Err(_) => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)),
    }
}

fn cmd_verify(grid: GridArg, seed: u64, flip_node_sign: bool) -> i32 {
    let grid = match grid {
        GridArg::Coarse => GridSize::Coarse,
        GridArg::Fine => GridSize::Fine,
    };
    let sign = if flip_node_sign {
        NodeSign::Plus
    } else {
        NodeSign::Minus
    };
    let report = run_suite(grid, seed, sign);
    print!("{}", report.render());
    if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    }
}

fn cmd_dump_chain(path: &Path) -> Result<(), Failure> {
    let net = read_network(path)?;
    let chain = build_chain(&net).map_err(|e| Failure::new(EXIT_NUMERIC, e.to_string()))?;
    let factors: Vec<_> = chain
        .factors
        .iter()
        .map(|f| {
            let label = match f.kind {
                FactorKind::Node { index } => format!("node {}", index + 1),
                FactorKind::Segment { index } => format!("segment {}-{}", index + 1, index + 2),
            };
            json!({ "factor": label, "matrix": matrix_to_json(&f.matrix) })
        })
        .collect();
    println!(
        "{}",
        json!({
            "modes": net.modes,
            "nodes": net.nodes(),
            "factors": factors,
            "product": matrix_to_json(&chain.product),
        })
    );
    Ok(())
}
