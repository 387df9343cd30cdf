//! Built-in verification suite behind the `verify` subcommand.
//!
//! The checks ship in the released binary so the consistency arguments that
//! back the solvers can be re-run against any build: single-qubit limits,
//! transfer-vs-direct oracle equivalence on randomized networks, flux
//! accounting, closed-form agreement, fringe periodicity, and the
//! large-detuning transmission limit. Running the suite with
//! [`NodeSign::Plus`] demonstrates that the opposite node-sign convention
//! breaks the single-qubit limit and the cross-checks.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

use crate::interferometer::{closed_form, equivalent_network, InterferometerPoint};
use crate::model::{Direction, DriveSpec, Gamma, NetworkSpec, QubitParams, SegmentParams};
use crate::scattering::{solve_direct, solve_transfer_signed};
use crate::transfer::NodeSign;

/// Problem-size preset for the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSize {
    Coarse,
    Fine,
}

impl GridSize {
    pub fn as_str(self) -> &'static str {
        match self {
            GridSize::Coarse => "coarse",
            GridSize::Fine => "fine",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub grid: GridSize,
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Deterministic text table; identical bytes for identical inputs.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "self-check  grid={}  seed={}",
            self.grid.as_str(),
            self.seed
        );
        let _ = writeln!(
            out,
            "{:<24} {:>13} {:>10}  result",
            "check", "max deviation", "tolerance"
        );
        for check in &self.checks {
            let _ = writeln!(
                out,
                "{:<24} {:>13} {:>10}  {}",
                check.name,
                format!("{:.2e}", check.max_deviation),
                format!("{:.0e}", check.tolerance),
                if check.passed { "pass" } else { "FAIL" }
            );
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        if failed == 0 {
            let _ = writeln!(out, "result: all {} checks passed", self.checks.len());
        } else {
            let _ = writeln!(
                out,
                "result: {} of {} checks FAILED",
                failed,
                self.checks.len()
            );
        }
        out
    }
}

/// Draw a random validated network: 1..=3 modes, 1..=5 nodes, gammas with
/// Re in [0.1, 3] and Im in [-3, 3] (or exactly lossless, Re = 0 and |Im|
/// in [0.3, 3]), random segments and drive. Roughly half the qubits are
/// expressed through physical (omega10, Gamma, g) triples that reproduce
/// the drawn gamma, the rest through overrides.
pub fn random_network(rng: &mut impl Rng, lossless: bool) -> NetworkSpec {
    let modes = rng.gen_range(1..=3);
    let nodes = rng.gen_range(1..=5);
    let k = rng.gen_range(0.5..3.0);
    let qubits = (0..nodes)
        .map(|_| {
            let re = if lossless { 0.0 } else { rng.gen_range(0.1..3.0) };
            let im = if lossless {
                let magnitude = rng.gen_range(0.3..3.0);
                if rng.gen_bool(0.5) {
                    magnitude
                } else {
                    -magnitude
                }
            } else {
                rng.gen_range(-3.0..3.0)
            };
            let coupling = rng.gen_range(0.5..2.0);
            let omega10 = k + im * coupling * coupling;
            if rng.gen_bool(0.5) && omega10 >= 0.0 {
                // Physical parameterization hitting the same gamma exactly.
                QubitParams {
                    omega10,
                    decay: 2.0 * re * coupling * coupling,
                    coupling,
                    gamma_override: None,
                }
            } else {
                QubitParams::from_gamma(Gamma::new(re, im))
            }
        })
        .collect();
    let segments = (1..nodes)
        .map(|_| SegmentParams {
            lengths: (0..modes).map(|_| rng.gen_range(0.0..3.0)).collect(),
            extra_phases: (0..modes)
                .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect(),
        })
        .collect();
    NetworkSpec {
        modes,
        k,
        qubits,
        segments,
        drive: DriveSpec {
            mode: rng.gen_range(1..=modes),
            direction: if rng.gen_bool(0.5) {
                Direction::Right
            } else {
                Direction::Left
            },
            amplitude: Complex64::new(rng.gen_range(0.2..1.5), rng.gen_range(-1.0..1.0)),
        },
    }
}

/// Run the complete suite. `sign` selects the node-matrix convention used on
/// every transfer-path solve; `Plus` is the deliberately broken variant.
pub fn run_suite(grid: GridSize, seed: u64, sign: NodeSign) -> Report {
    let (oracle_count, flux_count, form_grid, periodicity_gammas) = match grid {
        GridSize::Coarse => (50, 30, (10, 10, 3), 2),
        GridSize::Fine => (200, 100, (20, 20, 5), 5),
    };
    let checks = vec![
        single_qubit_physics(sign),
        oracle_equivalence(seed, oracle_count, sign),
        flux_conservation(seed, flux_count, sign),
        passivity(seed, flux_count, sign),
        closed_form_agreement(seed, form_grid, sign),
        fringe_periodicity(seed, periodicity_gammas),
        large_detuning_limit(),
    ];
    Report { grid, seed, checks }
}

fn single_qubit(gamma: Complex64) -> NetworkSpec {
    NetworkSpec {
        modes: 1,
        k: 1.0,
        qubits: vec![QubitParams::from_gamma(Gamma(gamma))],
        segments: vec![],
        drive: DriveSpec::default(),
    }
}

/// Resonant limits of one emitter: full reflection at gamma = 0 (direct
/// path), t = 1/2 and r = -1/2 at gamma = 1, near-unity transmission at
/// |gamma| = 100. The gamma = 1 equality is the node-sign discriminator.
fn single_qubit_physics(sign: NodeSign) -> CheckOutcome {
    let tolerance = 1e-12;
    let mut dev: f64 = 0.0;
    let mut passed = true;

    match solve_direct(&single_qubit(Complex64::new(0.0, 0.0))) {
        Ok(result) => {
            dev = dev
                .max(result.transmitted[0].norm())
                .max((result.reflected[0] + Complex64::ONE).norm());
        }
        Err(_) => passed = false,
    }

    match solve_transfer_signed(&single_qubit(Complex64::new(1.0, 0.0)), sign) {
        Ok(result) => {
            dev = dev
                .max((result.transmitted[0] - Complex64::new(0.5, 0.0)).norm())
                .max((result.reflected[0] + Complex64::new(0.5, 0.0)).norm());
        }
        Err(_) => {
            passed = false;
            dev = f64::INFINITY;
        }
    }

    for gamma in [
        Complex64::new(100.0, 0.0),
        Complex64::new(0.0, 100.0),
        Complex64::new(-60.0, 80.0),
    ] {
        match solve_transfer_signed(&single_qubit(gamma), sign) {
            Ok(result) => {
                if result.transmitted[0].norm() <= 0.98 {
                    passed = false;
                    dev = dev.max(1.0 - result.transmitted[0].norm());
                }
            }
            Err(_) => passed = false,
        }
    }

    CheckOutcome {
        name: "single_qubit_physics",
        max_deviation: dev,
        tolerance,
        passed: passed && dev <= tolerance,
    }
}

/// Transfer cascade vs. direct stationary solve on randomized networks.
fn oracle_equivalence(seed: u64, count: usize, sign: NodeSign) -> CheckOutcome {
    let tolerance = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dev: f64 = 0.0;
    let mut passed = true;
    for _ in 0..count {
        let net = random_network(&mut rng, false);
        match (solve_transfer_signed(&net, sign), solve_direct(&net)) {
            (Ok(transfer), Ok(direct)) => {
                for (a, b) in transfer
                    .transmitted
                    .iter()
                    .zip(&direct.transmitted)
                    .chain(transfer.reflected.iter().zip(&direct.reflected))
                {
                    dev = dev.max((a - b).norm());
                }
            }
            _ => {
                passed = false;
                dev = f64::INFINITY;
            }
        }
    }
    CheckOutcome {
        name: "oracle_equivalence",
        max_deviation: dev,
        tolerance,
        passed: passed && dev <= tolerance,
    }
}

/// Lossless networks (all Gamma = 0) must conserve flux exactly.
fn flux_conservation(seed: u64, count: usize, sign: NodeSign) -> CheckOutcome {
    let tolerance = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut dev: f64 = 0.0;
    let mut passed = true;
    for _ in 0..count {
        let net = random_network(&mut rng, true);
        for result in [solve_transfer_signed(&net, sign), solve_direct(&net)] {
            match result {
                Ok(r) => dev = dev.max((r.outgoing_flux - r.incoming_flux).abs()),
                Err(_) => {
                    passed = false;
                    dev = f64::INFINITY;
                }
            }
        }
    }
    CheckOutcome {
        name: "flux_conservation",
        max_deviation: dev,
        tolerance,
        passed: passed && dev <= tolerance,
    }
}

/// Lossy networks never emit more flux than was sent in.
fn passivity(seed: u64, count: usize, sign: NodeSign) -> CheckOutcome {
    let tolerance = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut dev: f64 = 0.0;
    let mut passed = true;
    for _ in 0..count {
        let net = random_network(&mut rng, false);
        match solve_transfer_signed(&net, sign) {
            Ok(r) => dev = dev.max((r.outgoing_flux - r.incoming_flux).max(0.0)),
            Err(_) => {
                passed = false;
                dev = f64::INFINITY;
            }
        }
    }
    CheckOutcome {
        name: "passivity",
        max_deviation: dev,
        tolerance,
        passed: passed && dev <= tolerance,
    }
}

/// Interferometer closed forms vs. the engine over a (phi, theta, gamma)
/// grid with Re gamma >= 0.1, where no singular denominators exist.
fn closed_form_agreement(seed: u64, grid: (usize, usize, usize), sign: NodeSign) -> CheckOutcome {
    let tolerance = 1e-10;
    let (phi_steps, theta_steps, gamma_count) = grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
    let gammas: Vec<Complex64> = (0..gamma_count)
        .map(|_| Complex64::new(rng.gen_range(0.1..3.0), rng.gen_range(-3.0..3.0)))
        .collect();
    let mut dev: f64 = 0.0;
    let mut passed = true;
    for gamma in gammas {
        for i in 0..phi_steps {
            let phi = -3.1 + 6.2 * i as f64 / (phi_steps - 1) as f64;
            for j in 0..theta_steps {
                let theta = 0.05 + 6.1 * j as f64 / (theta_steps - 1) as f64;
                let point = InterferometerPoint {
                    theta,
                    phi,
                    gamma: Gamma(gamma),
                };
                let forms = match closed_form(&point) {
                    Ok(f) => f,
                    Err(_) => continue,
                };
                match solve_transfer_signed(&equivalent_network(&point), sign) {
                    Ok(result) => {
                        let engine = [
                            result.transmitted[0],
                            result.transmitted[1],
                            result.reflected[0],
                            result.reflected[1],
                        ];
                        for (a, b) in forms.as_array().iter().zip(engine.iter()) {
                            dev = dev.max((a - b).norm());
                        }
                    }
                    Err(_) => {
                        passed = false;
                        dev = f64::INFINITY;
                    }
                }
            }
        }
    }
    CheckOutcome {
        name: "closed_form_agreement",
        max_deviation: dev,
        tolerance,
        passed: passed && dev <= tolerance,
    }
}

/// |t1| is 2 pi periodic in phi and pi periodic in theta for random gammas.
fn fringe_periodicity(seed: u64, gamma_count: usize) -> CheckOutcome {
    let tolerance = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(4));
    let mut dev: f64 = 0.0;
    for _ in 0..gamma_count {
        let gamma = Gamma::new(rng.gen_range(0.1..3.0), rng.gen_range(-3.0..3.0));
        let report = crate::interferometer::periodicity_check(gamma);
        dev = dev
            .max(report.max_phi_deviation)
            .max(report.max_theta_deviation);
    }
    CheckOutcome {
        name: "fringe_periodicity",
        max_deviation: dev,
        tolerance,
        passed: dev <= tolerance,
    }
}

/// |t1| grows monotonically with detuning and approaches unity.
fn large_detuning_limit() -> CheckOutcome {
    let samples = 13usize;
    let mut passed = true;
    let mut last = 0.0;
    for i in 0..=samples {
        let detuning = 5.0 * (100.0f64 / 5.0).powf(i as f64 / samples as f64);
        let point = InterferometerPoint {
            theta: std::f64::consts::FRAC_PI_2,
            phi: 0.0,
            gamma: Gamma::new(1.0, -detuning),
        };
        match closed_form(&point) {
            Ok(outputs) => {
                let t1 = outputs.t1.norm();
                if t1 <= last {
                    passed = false;
                }
                last = t1;
            }
            Err(_) => passed = false,
        }
    }
    let tolerance = 0.05;
    let max_deviation = 1.0 - last;
    CheckOutcome {
        name: "large_detuning_limit",
        max_deviation,
        tolerance,
        passed: passed && max_deviation <= tolerance,
    }
}
