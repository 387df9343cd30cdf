//! Closed-form outputs of the two-qubit, two-mode interferometer with
//! identical qubits: a drive in mode 1 scatters into four components, two
//! transmitted and two reflected, as functions of the common path phase
//! theta, the extra mode-2 phase phi, and the shared gamma.
//!
//! The four amplitudes are the exact solution of the two-node cascade; the
//! qubit couples all channels with one excitation amplitude, so the jump it
//! imprints is identical in every mode, which fixes all relative signs.
//! [`verify_against_engine`] checks the forms against the full solvers.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::model::{DriveSpec, Gamma, NetworkSpec, QubitParams, SegmentParams};
use crate::scattering::{solve_direct, solve_transfer, Method, ScatteringResult, SolveError};
use crate::transfer::GAMMA_MIN;

/// Denominator magnitudes at or below this are treated as singular; sized to
/// double-precision roundoff accumulated over the handful of complex
/// operations in the forms.
pub const DENOMINATOR_MIN: f64 = 1e-12;

/// One operating point of the interferometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerPoint {
    /// Common path phase theta = k L (radians).
    pub theta: f64,
    /// Extra phase inserted in mode 2 (radians).
    pub phi: f64,
    /// Shared gamma of the two identical qubits.
    pub gamma: Gamma,
}

/// The four scattered amplitudes for unit input in mode 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferometerOutputs {
    /// Transmission in the driven mode.
    pub t1: Complex64,
    /// Transmission into mode 2.
    pub t2: Complex64,
    /// Reflection in the driven mode.
    pub r1: Complex64,
    /// Reflection in mode 2.
    pub r2: Complex64,
}

impl InterferometerOutputs {
    pub fn as_array(&self) -> [Complex64; 4] {
        [self.t1, self.t2, self.r1, self.r2]
    }

    /// Total outgoing flux; at most 1 whenever Re gamma >= 0.
    pub fn total_flux(&self) -> f64 {
        self.as_array().iter().map(|z| z.norm_sqr()).sum()
    }
}

#[derive(Debug, Error)]
pub enum InterferometerError {
    #[error(
        "singular denominator |D| = {abs_d:.3e} at theta = {theta}, phi = {phi} \
         (threshold {DENOMINATOR_MIN:.0e})"
    )]
    SingularDenominator { abs_d: f64, theta: f64, phi: f64 },
    #[error(transparent)]
    Engine(#[from] SolveError),
}

/// Evaluate the four closed-form amplitudes at one operating point.
pub fn closed_form(
    point: &InterferometerPoint,
) -> Result<InterferometerOutputs, InterferometerError> {
    let gamma = point.gamma.value();
    let theta = point.theta;
    let phi = point.phi;
    let one = Complex64::ONE;

    let e_t = Complex64::from_polar(1.0, theta);
    let e_p = Complex64::from_polar(1.0, phi);
    let e_2t = Complex64::from_polar(1.0, 2.0 * theta);
    let e_p2t = Complex64::from_polar(1.0, phi + 2.0 * theta);
    let e_2pt = Complex64::from_polar(1.0, 2.0 * (phi + theta));
    let cos_half = (phi / 2.0).cos();

    let denom = 4.0 * cos_half * cos_half * e_p2t - (gamma + 2.0) * (gamma + 2.0);
    if denom.norm() <= DENOMINATOR_MIN {
        return Err(InterferometerError::SingularDenominator {
            abs_d: denom.norm(),
            theta,
            phi,
        });
    }

    let t1 = e_t * (-e_p + e_2pt + e_p2t - (one + gamma) * (one + gamma)) / denom;
    let t2 = e_t * (one + e_p) * (one + gamma - e_p2t) / denom;
    let r1 = (2.0 * (one - e_p2t) + gamma * (one + e_2t)) / denom;
    let r2 = (2.0 * one - e_2t - e_2pt + gamma * (one + e_p2t)) / denom;
    Ok(InterferometerOutputs { t1, t2, r1, r2 })
}

/// The network description equivalent to an operating point: two identical
/// gamma-specified qubits, equal path lengths, the extra phase on mode 2,
/// unit drive in mode 1. Theta is reduced modulo 2 pi so the path length is
/// non-negative; the amplitudes are exactly 2 pi periodic in theta.
pub fn equivalent_network(point: &InterferometerPoint) -> NetworkSpec {
    let qubit = QubitParams::from_gamma(point.gamma);
    let length = point.theta.rem_euclid(TAU);
    NetworkSpec {
        modes: 2,
        k: 1.0,
        qubits: vec![qubit.clone(), qubit],
        segments: vec![SegmentParams {
            lengths: vec![length, length],
            extra_phases: vec![0.0, point.phi],
        }],
        drive: DriveSpec::default(),
    }
}

/// Outcome of a closed-form vs. engine comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineComparison {
    /// Largest |difference| over the four amplitudes.
    pub max_abs_diff: f64,
    /// Which solver ran.
    pub method: Method,
}

/// Solve the equivalent network with the full engine and report the largest
/// entrywise deviation from the closed forms. Falls back to the direct
/// solver when gamma is too small for the transfer path.
pub fn verify_against_engine(
    point: &InterferometerPoint,
) -> Result<EngineComparison, InterferometerError> {
    let forms = closed_form(point)?;
    let net = equivalent_network(point);
    let result: ScatteringResult = if point.gamma.value().norm() > GAMMA_MIN {
        solve_transfer(&net)?
    } else {
        solve_direct(&net)?
    };
    let engine = [
        result.transmitted[0],
        result.transmitted[1],
        result.reflected[0],
        result.reflected[1],
    ];
    let max_abs_diff = forms
        .as_array()
        .iter()
        .zip(engine.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok(EngineComparison {
        max_abs_diff,
        method: result.method,
    })
}

/// |t1| sampled over a phi grid at fixed gamma and theta.
#[derive(Debug, Clone)]
pub struct FringeScan {
    /// (phi, |t1|) in grid order.
    pub samples: Vec<(f64, f64)>,
    /// (max - min) / (max + min) over the scan.
    pub visibility: f64,
}

pub fn fringe_scan(
    gamma: Gamma,
    theta: f64,
    phi_grid: &[f64],
) -> Result<FringeScan, InterferometerError> {
    let mut samples = Vec::with_capacity(phi_grid.len());
    for &phi in phi_grid {
        let outputs = closed_form(&InterferometerPoint { theta, phi, gamma })?;
        samples.push((phi, outputs.t1.norm()));
    }
    let max = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let min = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let visibility = if max + min > 0.0 {
        (max - min) / (max + min)
    } else {
        0.0
    };
    Ok(FringeScan {
        samples,
        visibility,
    })
}

/// Outcome of the fringe-periodicity probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicityReport {
    /// |t1| unchanged under phi -> phi + 2 pi.
    pub phi_period_ok: bool,
    /// |t1| unchanged under theta -> theta + pi. Holds for the modulus only;
    /// the complex amplitude flips sign.
    pub theta_period_ok: bool,
    pub max_phi_deviation: f64,
    pub max_theta_deviation: f64,
}

/// Check the fringe periods on a 32 x 32 grid offset away from the isolated
/// singular points, to 1e-10 in |t1|.
pub fn periodicity_check(gamma: Gamma) -> PeriodicityReport {
    const STEPS: usize = 32;
    const TOL: f64 = 1e-10;
    let mut max_phi_deviation: f64 = 0.0;
    let mut max_theta_deviation: f64 = 0.0;
    for i in 0..STEPS {
        let phi = 0.0371 + TAU * i as f64 / STEPS as f64;
        for j in 0..STEPS {
            let theta = 0.0529 + PI * j as f64 / STEPS as f64;
            let at = |theta: f64, phi: f64| -> Option<f64> {
                closed_form(&InterferometerPoint { theta, phi, gamma })
                    .ok()
                    .map(|o| o.t1.norm())
            };
            let (Some(base), Some(phi_shift), Some(theta_shift)) =
                (at(theta, phi), at(theta, phi + TAU), at(theta + PI, phi))
            else {
                continue;
            };
            max_phi_deviation = max_phi_deviation.max((phi_shift - base).abs());
            max_theta_deviation = max_theta_deviation.max((theta_shift - base).abs());
        }
    }
    PeriodicityReport {
        phi_period_ok: max_phi_deviation <= TOL,
        theta_period_ok: max_theta_deviation <= TOL,
        max_phi_deviation,
        max_theta_deviation,
    }
}
