//! Coherent single-photon scattering through networks of two-level emitters
//! coupled to M quasi-one-dimensional bosonic modes.
//!
//! A network is a chain of qubit nodes threaded by M waveguide modes. Each
//! node is characterized at fixed photon energy by one complex number gamma
//! combining its non-guided loss and detuning; propagation between nodes is
//! a diagonal phase. Scattering is solved two independent ways:
//!
//! * [`scattering::solve_transfer`] cascades 2M x 2M node and phase factors
//!   and applies scattering boundary conditions to the product;
//! * [`scattering::solve_direct`] assembles the full stationary equation
//!   system in the piecewise-constant mode amplitudes and the qubit
//!   excitations, and solves it by dense elimination.
//!
//! The two paths cross-check each other; `waveqed verify` runs that and the
//! rest of the consistency suite from the command line.
//!
//! The two-qubit, two-mode special case is a fluorescence interferometer:
//! one qubit splits the incoming field, the second recombines it, and the
//! transmission fringes track the phase difference between the arms. Module
//! [`interferometer`] evaluates its closed-form outputs and
//! [`sweep`] reproduces the transmission maps as CSV tables.
//!
//! ```
//! use waveqed::interferometer::{closed_form, InterferometerPoint};
//! use waveqed::model::Gamma;
//!
//! let point = InterferometerPoint {
//!     theta: std::f64::consts::FRAC_PI_2,
//!     phi: 0.0,
//!     gamma: Gamma::new(1.0, 0.0),
//! };
//! let outputs = closed_form(&point).unwrap();
//! assert!((outputs.t1.norm() - 7.0 / 13.0).abs() < 1e-14);
//! ```
//!
//! The `examples/` directory holds one runnable program per capability; see
//! the README for the list and for the `waveqed` binary reference.

pub mod cli;
pub mod interferometer;
pub mod model;
pub mod scattering;
pub mod selfcheck;
pub mod sweep;
pub mod transfer;

pub use interferometer::{
    closed_form, fringe_scan, periodicity_check, verify_against_engine, InterferometerOutputs,
    InterferometerPoint,
};
pub use model::{compute_gamma, parse_network, Gamma, NetworkSpec};
pub use scattering::{flux_report, solve_direct, solve_transfer, Method, ScatteringResult};
pub use sweep::{run_sweep, write_csv, SweepSpec};
