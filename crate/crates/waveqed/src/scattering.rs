//! Outgoing amplitudes for a driven network, computed two independent ways:
//! boundary conditions applied to the transfer cascade, and a direct dense
//! solve of the full stationary equation system.
//!
//! The two paths share boundary conventions: exactly one incoming channel
//! carries the drive, all other incoming channels are zero. `transmitted`
//! holds the outgoing amplitudes on the far side of the network from the
//! drive, `reflected` those returning toward the source, both evaluated at
//! the outermost node positions.

use nalgebra::DVector;
use num_complex::Complex64;
use serde_json::json;
use thiserror::Error;

use crate::model::{Direction, NetworkSpec};
use crate::transfer::{build_chain_signed, CMatrix, NodeSign, SingularNode};

type CVector = DVector<Complex64>;

/// Condition-number ceiling for the dense solves.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Transfer,
    Direct,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Transfer => "transfer",
            Method::Direct => "direct",
        }
    }
}

/// Outgoing amplitudes and flux summary for one solve.
#[derive(Debug, Clone)]
pub struct ScatteringResult {
    pub method: Method,
    /// Per-mode outgoing amplitude beyond the far boundary.
    pub transmitted: Vec<Complex64>,
    /// Per-mode outgoing amplitude returning toward the drive.
    pub reflected: Vec<Complex64>,
    /// Qubit excitation amplitudes q, available on the direct path only.
    pub qubit_amplitudes: Option<Vec<Complex64>>,
    pub incoming_flux: f64,
    pub outgoing_flux: f64,
    /// Condition number of the solved linear system.
    pub condition: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxReport {
    pub incoming: f64,
    pub outgoing: f64,
    pub absorbed: f64,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    SingularNode(#[from] SingularNode),
    #[error("linear system condition number {condition:.3e} exceeds {MAX_CONDITION:.0e}")]
    IllConditioned { condition: f64 },
}

/// Solve via the transfer cascade. Requires every node gamma to be
/// non-singular; [`solve_direct`] covers the remaining cases.
pub fn solve_transfer(net: &NetworkSpec) -> Result<ScatteringResult, SolveError> {
    solve_transfer_signed(net, NodeSign::Minus)
}

/// [`solve_transfer`] with an explicit node-sign convention, used by the
/// self-check suite to demonstrate that the `Plus` sign breaks the physics.
pub fn solve_transfer_signed(
    net: &NetworkSpec,
    sign: NodeSign,
) -> Result<ScatteringResult, SolveError> {
    let chain = build_chain_signed(net, sign)?;
    let p = &chain.product;
    let modes = net.modes;
    let n = 2 * modes;
    let drive_mode = net.drive.mode - 1;
    let amp = net.drive.amplitude;

    // Unknowns u = [t_1..t_M, r_1..r_M]; the cascade relates the state left
    // of the first node to the state right of the last node, X_R = P X_L.
    let mut system = CMatrix::zeros(n, n);
    let mut rhs = CVector::zeros(n);
    match net.drive.direction {
        Direction::Right => {
            // Drive enters at the left boundary: X_L carries the drive in its
            // right-mover slot and the unknown reflections in the left-mover
            // slots; X_R carries the unknown transmissions, no incoming.
            for row in 0..n {
                for m in 0..modes {
                    if row == 2 * m {
                        system[(row, m)] = -Complex64::ONE;
                    }
                    system[(row, modes + m)] = p[(row, 2 * m + 1)];
                }
                rhs[row] = -amp * p[(row, 2 * drive_mode)];
            }
        }
        Direction::Left => {
            // Drive enters at the right boundary in a left-mover slot; the
            // transmissions exit at the left boundary as left-movers.
            for row in 0..n {
                for m in 0..modes {
                    system[(row, m)] = p[(row, 2 * m + 1)];
                    if row == 2 * m {
                        system[(row, modes + m)] = -Complex64::ONE;
                    }
                }
                rhs[row] = if row == 2 * drive_mode + 1 {
                    amp
                } else {
                    Complex64::ZERO
                };
            }
        }
    }

    let (solution, condition) = solve_dense(system, rhs)?;
    let transmitted: Vec<_> = (0..modes).map(|m| solution[m]).collect();
    let reflected: Vec<_> = (0..modes).map(|m| solution[modes + m]).collect();
    Ok(assemble(
        Method::Transfer,
        transmitted,
        reflected,
        None,
        amp,
        condition,
    ))
}

/// Independent oracle: assemble the full stationary system in the
/// piecewise-constant amplitudes and qubit excitations, and solve it by
/// dense elimination. Works for any validated network, including gamma = 0.
pub fn solve_direct(net: &NetworkSpec) -> Result<ScatteringResult, SolveError> {
    let modes = net.modes;
    let nodes = net.nodes();
    let regions = nodes + 1;
    let amp = net.drive.amplitude;
    let drive_mode = net.drive.mode - 1;

    // Accumulated optical phase of each mode at each node; inserted segment
    // phases fold into the same accumulator as the k*length terms.
    let mut psi = vec![vec![0.0f64; nodes]; modes];
    for j in 1..nodes {
        let seg = &net.segments[j - 1];
        for m in 0..modes {
            psi[m][j] = psi[m][j - 1] + net.k * seg.lengths[m] + seg.extra_phases[m];
        }
    }
    let phase = |m: usize, j: usize| Complex64::from_polar(1.0, psi[m][j]);

    let size = 2 * modes * regions + nodes;
    let idx_a = |region: usize, m: usize| 2 * modes * region + 2 * m;
    let idx_b = |region: usize, m: usize| 2 * modes * region + 2 * m + 1;
    let idx_q = |node: usize| 2 * modes * regions + node;

    let mut system = CMatrix::zeros(size, size);
    let mut rhs = CVector::zeros(size);
    let mut row = 0;

    for j in 0..nodes {
        let gamma = net.gamma(j).value();
        let g = net.qubits[j].coupling;
        for m in 0..modes {
            let f = phase(m, j);
            // Right-mover jump: i f (a_{j+1} - a_j) = g q_j.
            system[(row, idx_a(j + 1, m))] = Complex64::I * f;
            system[(row, idx_a(j, m))] = -Complex64::I * f;
            system[(row, idx_q(j))] = Complex64::from(-g);
            row += 1;
            // Left-mover jump: -i conj(f) (b_{j+1} - b_j) = g q_j.
            system[(row, idx_b(j + 1, m))] = -Complex64::I * f.conj();
            system[(row, idx_b(j, m))] = Complex64::I * f.conj();
            system[(row, idx_q(j))] = Complex64::from(-g);
            row += 1;
        }
        // Qubit equation; the detuning/loss coefficient k - omega10 + i Gamma/2
        // equals i g^2 gamma.
        system[(row, idx_q(j))] = Complex64::I * g * g * gamma;
        let half_g = Complex64::from(g / 2.0);
        for m in 0..modes {
            let f = phase(m, j);
            system[(row, idx_a(j, m))] -= half_g * f;
            system[(row, idx_a(j + 1, m))] -= half_g * f;
            system[(row, idx_b(j, m))] -= half_g * f.conj();
            system[(row, idx_b(j + 1, m))] -= half_g * f.conj();
        }
        row += 1;
    }

    // Boundary conditions: the drive occupies exactly one incoming channel.
    match net.drive.direction {
        Direction::Right => {
            for m in 0..modes {
                system[(row, idx_a(0, m))] = Complex64::ONE;
                if m == drive_mode {
                    rhs[row] = amp;
                }
                row += 1;
                system[(row, idx_b(nodes, m))] = Complex64::ONE;
                row += 1;
            }
        }
        Direction::Left => {
            for m in 0..modes {
                system[(row, idx_a(0, m))] = Complex64::ONE;
                row += 1;
                // Incoming left-mover amplitude is fixed at the last node's
                // position, so the phase factor stays in the coefficient.
                system[(row, idx_b(nodes, m))] = phase(m, nodes - 1).conj();
                if m == drive_mode {
                    rhs[row] = amp;
                }
                row += 1;
            }
        }
    }
    debug_assert_eq!(row, size);

    let (solution, condition) = solve_dense(system, rhs)?;
    let outer = |m: usize| solution[idx_a(nodes, m)] * phase(m, nodes - 1);
    let (transmitted, reflected): (Vec<_>, Vec<_>) = match net.drive.direction {
        Direction::Right => (
            (0..modes).map(outer).collect(),
            (0..modes).map(|m| solution[idx_b(0, m)]).collect(),
        ),
        Direction::Left => (
            (0..modes).map(|m| solution[idx_b(0, m)]).collect(),
            (0..modes).map(outer).collect(),
        ),
    };
    let qubit_amplitudes = (0..nodes).map(|j| solution[idx_q(j)]).collect();
    Ok(assemble(
        Method::Direct,
        transmitted,
        reflected,
        Some(qubit_amplitudes),
        amp,
        condition,
    ))
}

/// Flux bookkeeping; `absorbed` is the non-guided loss.
pub fn flux_report(result: &ScatteringResult) -> FluxReport {
    FluxReport {
        incoming: result.incoming_flux,
        outgoing: result.outgoing_flux,
        absorbed: result.incoming_flux - result.outgoing_flux,
    }
}

impl ScatteringResult {
    /// Wire-format JSON rendering.
    pub fn to_json(&self) -> serde_json::Value {
        let pair = |z: &Complex64| [z.re, z.im];
        json!({
            "method": self.method.as_str(),
            "transmitted": self.transmitted.iter().map(pair).collect::<Vec<_>>(),
            "reflected": self.reflected.iter().map(pair).collect::<Vec<_>>(),
            "flux": { "in": self.incoming_flux, "out": self.outgoing_flux },
        })
    }
}

fn assemble(
    method: Method,
    transmitted: Vec<Complex64>,
    reflected: Vec<Complex64>,
    qubit_amplitudes: Option<Vec<Complex64>>,
    amp: Complex64,
    condition: f64,
) -> ScatteringResult {
    let outgoing_flux = transmitted
        .iter()
        .chain(reflected.iter())
        .map(|z| z.norm_sqr())
        .sum();
    ScatteringResult {
        method,
        transmitted,
        reflected,
        qubit_amplitudes,
        incoming_flux: amp.norm_sqr(),
        outgoing_flux,
        condition,
    }
}

fn solve_dense(system: CMatrix, rhs: CVector) -> Result<(CVector, f64), SolveError> {
    let singular_values = system.clone().singular_values();
    let smax = singular_values.max();
    let smin = singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(SolveError::IllConditioned { condition });
    }
    match system.lu().solve(&rhs) {
        Some(solution) => Ok((solution, condition)),
        None => Err(SolveError::IllConditioned {
            condition: f64::INFINITY,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DriveSpec, Gamma, QubitParams, SegmentParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
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

    fn interferometer(theta: f64, phi: f64, gamma: Complex64) -> NetworkSpec {
        let qubit = QubitParams::from_gamma(Gamma(gamma));
        NetworkSpec {
            modes: 2,
            k: 1.0,
            qubits: vec![qubit.clone(), qubit],
            segments: vec![SegmentParams {
                lengths: vec![theta, theta],
                extra_phases: vec![0.0, phi],
            }],
            drive: DriveSpec::default(),
        }
    }

    fn max_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn transfer_single_qubit_resonant_lossy() {
        // gamma = 1: t = gamma/(1+gamma) = 1/2, r = -1/(1+gamma) = -1/2,
        // half the flux lost to the non-guided channel.
        let result = solve_transfer(&single_qubit(c(1.0, 0.0))).unwrap();
        assert!((result.transmitted[0] - c(0.5, 0.0)).norm() < 1e-14);
        assert!((result.reflected[0] - c(-0.5, 0.0)).norm() < 1e-14);
        assert!((result.outgoing_flux - 0.5).abs() < 1e-14);
        let report = flux_report(&result);
        assert!((report.absorbed - 0.5).abs() < 1e-14);
    }

    #[test]
    fn transfer_single_qubit_transparent_limit() {
        let result = solve_transfer(&single_qubit(c(1e9, 0.0))).unwrap();
        assert!((result.transmitted[0] - c(1.0, 0.0)).norm() < 1e-8);
        assert!(result.reflected[0].norm() < 1e-8);
    }

    #[test]
    fn direct_single_qubit_full_reflection_at_zero_gamma() {
        let result = solve_direct(&single_qubit(c(0.0, 0.0))).unwrap();
        assert_eq!(result.transmitted[0], c(0.0, 0.0));
        assert_eq!(result.reflected[0], c(-1.0, 0.0));
        // The qubit amplitude is finite: q = -i for g = 1.
        let q = result.qubit_amplitudes.as_ref().unwrap()[0];
        assert!((q - c(0.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn direct_single_qubit_lossless_detuned_conserves_flux() {
        let result = solve_direct(&single_qubit(c(0.0, -1.0))).unwrap();
        assert!((result.outgoing_flux - result.incoming_flux).abs() < 1e-14);
        // t = gamma/(1+gamma) with gamma = -i.
        let expected_t = c(0.0, -1.0) / c(1.0, -1.0);
        assert!((result.transmitted[0] - expected_t).norm() < 1e-14);
    }

    #[test]
    fn transfer_matches_analytic_single_qubit_formula() {
        for gamma in [c(0.7, 0.0), c(0.5, -1.3), c(2.0, 2.0), c(0.0, 0.4)] {
            let result = solve_transfer(&single_qubit(gamma)).unwrap();
            let t = gamma / (c(1.0, 0.0) + gamma);
            let r = -Complex64::ONE / (c(1.0, 0.0) + gamma);
            assert!((result.transmitted[0] - t).norm() < 1e-13);
            assert!((result.reflected[0] - r).norm() < 1e-13);
        }
    }

    #[test]
    fn interferometer_golden_point() {
        // theta = pi/2, phi = 0, gamma = 1: the stationary system gives
        // t = [7i/13, -6i/13], r = [-4/13, -4/13], outgoing flux 9/13.
        let net = interferometer(std::f64::consts::FRAC_PI_2, 0.0, c(1.0, 0.0));
        for result in [solve_transfer(&net).unwrap(), solve_direct(&net).unwrap()] {
            assert!((result.transmitted[0] - c(0.0, 7.0 / 13.0)).norm() < 1e-13);
            assert!((result.transmitted[1] - c(0.0, -6.0 / 13.0)).norm() < 1e-13);
            assert!((result.reflected[0] - c(-4.0 / 13.0, 0.0)).norm() < 1e-13);
            assert!((result.reflected[1] - c(-4.0 / 13.0, 0.0)).norm() < 1e-13);
            assert!((result.outgoing_flux - 9.0 / 13.0).abs() < 1e-13);
            assert!((flux_report(&result).absorbed - 4.0 / 13.0).abs() < 1e-13);
        }
    }

    #[test]
    fn oracle_equivalence_on_seeded_random_networks() {
        use crate::selfcheck::random_network;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let net = random_network(&mut rng, false);
            let transfer = solve_transfer(&net).unwrap();
            let direct = solve_direct(&net).unwrap();
            assert!(max_dev(&transfer.transmitted, &direct.transmitted) < 1e-10);
            assert!(max_dev(&transfer.reflected, &direct.reflected) < 1e-10);
        }
    }

    #[test]
    fn lossless_networks_conserve_flux() {
        use crate::selfcheck::random_network;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let net = random_network(&mut rng, true);
            let result = solve_transfer(&net).unwrap();
            assert!(
                (result.outgoing_flux - result.incoming_flux).abs() < 1e-12,
                "flux not conserved: in {} out {}",
                result.incoming_flux,
                result.outgoing_flux
            );
        }
    }

    #[test]
    fn lossy_networks_are_passive() {
        use crate::selfcheck::random_network;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..25 {
            let net = random_network(&mut rng, false);
            let result = solve_direct(&net).unwrap();
            assert!(result.outgoing_flux <= result.incoming_flux + 1e-10);
        }
    }

    #[test]
    fn outputs_scale_linearly_with_the_drive() {
        let mut net = interferometer(1.1, 0.7, c(0.8, -0.4));
        let base = solve_transfer(&net).unwrap();
        let scale = c(0.3, 1.9);
        net.drive.amplitude = scale;
        let scaled = solve_transfer(&net).unwrap();
        for m in 0..2 {
            assert!((scaled.transmitted[m] - scale * base.transmitted[m]).norm() < 1e-12);
            assert!((scaled.reflected[m] - scale * base.reflected[m]).norm() < 1e-12);
        }
    }

    #[test]
    fn single_qubit_cell_is_reciprocal() {
        for gamma in [c(0.9, 0.0), c(0.4, -1.2), c(1.5, 0.8)] {
            let mut net = single_qubit(gamma);
            let from_left = solve_transfer(&net).unwrap();
            net.drive.direction = Direction::Left;
            let from_right = solve_transfer(&net).unwrap();
            assert!(
                (from_left.transmitted[0].norm() - from_right.transmitted[0].norm()).abs() < 1e-13
            );
            assert!(
                (from_left.reflected[0].norm() - from_right.reflected[0].norm()).abs() < 1e-13
            );
        }
    }

    #[test]
    fn left_incident_drive_agrees_between_methods() {
        let mut net = interferometer(0.8, 1.9, c(1.2, -0.5));
        net.drive = DriveSpec {
            mode: 2,
            direction: Direction::Left,
            amplitude: c(0.6, 0.2),
        };
        let transfer = solve_transfer(&net).unwrap();
        let direct = solve_direct(&net).unwrap();
        assert!(max_dev(&transfer.transmitted, &direct.transmitted) < 1e-12);
        assert!(max_dev(&transfer.reflected, &direct.reflected) < 1e-12);
    }

    #[test]
    fn transfer_rejects_singular_gamma() {
        let err = solve_transfer(&single_qubit(c(0.0, 0.0))).unwrap_err();
        assert!(matches!(err, SolveError::SingularNode(_)));
    }

    #[test]
    fn result_serializes_to_the_wire_format() {
        let result = solve_transfer(&single_qubit(c(1.0, 0.0))).unwrap();
        let value = result.to_json();
        assert_eq!(value["method"], "transfer");
        assert_eq!(value["transmitted"].as_array().unwrap().len(), 1);
        assert!((value["flux"]["in"].as_f64().unwrap() - 1.0).abs() < 1e-15);
        assert!((value["flux"]["out"].as_f64().unwrap() - 0.5).abs() < 1e-13);
    }
}
