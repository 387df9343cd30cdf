//! Network description: physical qubit parameters, inter-node segments,
//! drive specification, and the per-node gamma parameter.
//!
//! Units are fixed to hbar = v = 1 throughout, so the photon energy equals
//! the wavenumber `k` and gamma is dimensionless.

use num_complex::Complex64;
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;

/// Complex node parameter combining non-guided loss and detuning,
/// `gamma = Gamma / (2 g^2) - i (k - omega10) / g^2`.
///
/// The real part is non-negative for any physical qubit (`Gamma >= 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gamma(pub Complex64);

impl Gamma {
    pub fn new(re: f64, im: f64) -> Self {
        Gamma(Complex64::new(re, im))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }
}

/// Physical parameters of one two-level emitter.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitParams {
    /// Transition frequency omega10 (units of 1/time).
    pub omega10: f64,
    /// Non-guided decay rate Gamma (>= 0).
    pub decay: f64,
    /// Qubit-mode coupling g (> 0).
    pub coupling: f64,
    /// When set, used verbatim as the node gamma; the physical fields are
    /// ignored by [`compute_gamma`]. Real part must be >= 0.
    pub gamma_override: Option<Complex64>,
}

impl QubitParams {
    /// Qubit specified directly by its gamma value.
    pub fn from_gamma(gamma: Gamma) -> Self {
        QubitParams {
            omega10: 0.0,
            decay: 0.0,
            coupling: 1.0,
            gamma_override: Some(gamma.value()),
        }
    }
}

/// Propagation paths between two consecutive nodes, one entry per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentParams {
    /// Path length per mode (units of length, >= 0).
    pub lengths: Vec<f64>,
    /// Additional inserted phase per mode (radians).
    pub extra_phases: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Right,
    Left,
}

/// The single incoming field feeding the network.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveSpec {
    /// Driven mode, 1-based, in `[1, M]`.
    pub mode: usize,
    pub direction: Direction,
    /// Nonzero complex drive amplitude.
    pub amplitude: Complex64,
}

impl Default for DriveSpec {
    fn default() -> Self {
        DriveSpec {
            mode: 1,
            direction: Direction::Right,
            amplitude: Complex64::new(1.0, 0.0),
        }
    }
}

/// Full description of a scattering network: M modes, N ordered qubit nodes,
/// N-1 inter-node segments, photon wavenumber and drive.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub modes: usize,
    /// Photon wavenumber; the photon energy in hbar = v = 1 units.
    pub k: f64,
    pub qubits: Vec<QubitParams>,
    pub segments: Vec<SegmentParams>,
    pub drive: DriveSpec,
}

/// Parse or validation failure for a network document. Validation errors
/// carry the path of the offending field.
#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("malformed network document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid network at `{path}`: {reason}")]
    Validation { path: String, reason: String },
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> NetworkError {
    NetworkError::Validation {
        path: path.into(),
        reason: reason.into(),
    }
}

/// Gamma of a node at photon wavenumber `k`:
/// `Gamma/(2 g^2) - i (k - omega10)/g^2`, or the override verbatim.
pub fn compute_gamma(qubit: &QubitParams, k: f64) -> Gamma {
    if let Some(gamma) = qubit.gamma_override {
        return Gamma(gamma);
    }
    let g2 = qubit.coupling * qubit.coupling;
    Gamma(Complex64::new(
        qubit.decay / (2.0 * g2),
        -(k - qubit.omega10) / g2,
    ))
}

// Wire-format mirror types. Unknown keys are rejected; integers are read
// signed so that out-of-range values surface as validation errors rather
// than type errors.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    modes: i64,
    k: f64,
    qubits: Vec<RawQubit>,
    #[serde(default)]
    segments: Vec<RawSegment>,
    #[serde(default)]
    drive: Option<RawDrive>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQubit {
    omega10: f64,
    #[serde(rename = "Gamma")]
    decay: f64,
    g: f64,
    #[serde(default)]
    gamma: Option<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    lengths: Vec<f64>,
    extra_phases: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    #[serde(default = "default_drive_mode")]
    mode: i64,
    #[serde(default)]
    direction: RawDirection,
    #[serde(default = "default_drive_amplitude")]
    amplitude: [f64; 2],
}

fn default_drive_mode() -> i64 {
    1
}

fn default_drive_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Deserialize, Default, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum RawDirection {
    #[default]
    Right,
    Left,
}

/// Parse and validate a UTF-8 JSON network document.
///
/// Defaults: `segments` may be omitted for single-qubit networks; `drive`
/// defaults to mode 1, direction right, amplitude 1+0i.
pub fn parse_network(text: &[u8]) -> Result<NetworkSpec, NetworkError> {
    let raw: RawNetwork = serde_json::from_slice(text)?;
    if raw.modes < 1 {
        return Err(invalid("modes", format!("must be >= 1, got {}", raw.modes)));
    }
    let drive = match raw.drive {
        Some(d) => {
            if d.mode < 1 {
                return Err(invalid(
                    "drive.mode",
                    format!("must be >= 1, got {}", d.mode),
                ));
            }
            DriveSpec {
                mode: d.mode as usize,
                direction: match d.direction {
                    RawDirection::Right => Direction::Right,
                    RawDirection::Left => Direction::Left,
                },
                amplitude: Complex64::new(d.amplitude[0], d.amplitude[1]),
            }
        }
        None => DriveSpec::default(),
    };
    let net = NetworkSpec {
        modes: raw.modes as usize,
        k: raw.k,
        qubits: raw
            .qubits
            .into_iter()
            .map(|q| QubitParams {
                omega10: q.omega10,
                decay: q.decay,
                coupling: q.g,
                gamma_override: q.gamma.map(|[re, im]| Complex64::new(re, im)),
            })
            .collect(),
        segments: raw
            .segments
            .into_iter()
            .map(|s| SegmentParams {
                lengths: s.lengths,
                extra_phases: s.extra_phases,
            })
            .collect(),
        drive,
    };
    net.validate()?;
    Ok(net)
}

impl NetworkSpec {
    /// Number of qubit nodes.
    pub fn nodes(&self) -> usize {
        self.qubits.len()
    }

    /// Gamma of node `j` (0-based) at this network's wavenumber.
    pub fn gamma(&self, j: usize) -> Gamma {
        compute_gamma(&self.qubits[j], self.k)
    }

    /// Check every structural and physical invariant, reporting the first
    /// violation with its field path.
    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.modes < 1 {
            return Err(invalid("modes", "must be >= 1"));
        }
        if !self.k.is_finite() || self.k <= 0.0 {
            return Err(invalid("k", format!("must be finite and > 0, got {}", self.k)));
        }
        if self.qubits.is_empty() {
            return Err(invalid("qubits", "at least one qubit is required"));
        }
        for (i, q) in self.qubits.iter().enumerate() {
            let at = |field: &str| format!("qubits[{i}].{field}");
            if !q.omega10.is_finite() || q.omega10 < 0.0 {
                return Err(invalid(at("omega10"), "must be finite and >= 0"));
            }
            if !q.decay.is_finite() || q.decay < 0.0 {
                return Err(invalid(at("Gamma"), "must be finite and >= 0"));
            }
            if !q.coupling.is_finite() || q.coupling <= 0.0 {
                return Err(invalid(at("g"), "must be finite and > 0"));
            }
            if let Some(gamma) = q.gamma_override {
                if !gamma.re.is_finite() || !gamma.im.is_finite() {
                    return Err(invalid(at("gamma"), "must be finite"));
                }
                if gamma.re < 0.0 {
                    return Err(invalid(at("gamma"), "real part must be >= 0"));
                }
            }
        }
        if self.segments.len() != self.qubits.len() - 1 {
            return Err(invalid(
                "segments",
                format!(
                    "expected {} segments for {} qubits, got {}",
                    self.qubits.len() - 1,
                    self.qubits.len(),
                    self.segments.len()
                ),
            ));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            let at = |field: &str| format!("segments[{i}].{field}");
            if seg.lengths.len() != self.modes {
                return Err(invalid(
                    at("lengths"),
                    format!("expected {} entries, got {}", self.modes, seg.lengths.len()),
                ));
            }
            if seg.extra_phases.len() != self.modes {
                return Err(invalid(
                    at("extra_phases"),
                    format!(
                        "expected {} entries, got {}",
                        self.modes,
                        seg.extra_phases.len()
                    ),
                ));
            }
            if seg.lengths.iter().any(|l| !l.is_finite() || *l < 0.0) {
                return Err(invalid(at("lengths"), "entries must be finite and >= 0"));
            }
            if seg.extra_phases.iter().any(|p| !p.is_finite()) {
                return Err(invalid(at("extra_phases"), "entries must be finite"));
            }
        }
        if self.drive.mode < 1 || self.drive.mode > self.modes {
            return Err(invalid(
                "drive.mode",
                format!("must be in [1, {}], got {}", self.modes, self.drive.mode),
            ));
        }
        let amp = self.drive.amplitude;
        if !amp.re.is_finite() || !amp.im.is_finite() || amp.norm_sqr() == 0.0 {
            return Err(invalid("drive.amplitude", "must be finite and nonzero"));
        }
        Ok(())
    }

    /// Render this network in the JSON wire format accepted by
    /// [`parse_network`]; `parse_network(to_json_string(net)) == net`.
    pub fn to_json(&self) -> serde_json::Value {
        let qubits: Vec<_> = self
            .qubits
            .iter()
            .map(|q| {
                let mut obj = json!({
                    "omega10": q.omega10,
                    "Gamma": q.decay,
                    "g": q.coupling,
                });
                if let Some(gamma) = q.gamma_override {
                    obj["gamma"] = json!([gamma.re, gamma.im]);
                }
                obj
            })
            .collect();
        let segments: Vec<_> = self
            .segments
            .iter()
            .map(|s| json!({ "lengths": s.lengths, "extra_phases": s.extra_phases }))
            .collect();
        json!({
            "modes": self.modes,
            "k": self.k,
            "qubits": qubits,
            "segments": segments,
            "drive": {
                "mode": self.drive.mode,
                "direction": match self.drive.direction {
                    Direction::Right => "right",
                    Direction::Left => "left",
                },
                "amplitude": [self.drive.amplitude.re, self.drive.amplitude.im],
            },
        })
    }

    pub fn to_json_string(&self) -> String {
        self.to_json().to_string()
    }
}
