//! Parameter-grid evaluation of the interferometer transmission maps and
//! deterministic CSV emission.
//!
//! Grid points are independent pure evaluations; they may run on a worker
//! pool, but rows are assembled in row-major grid order so the emitted bytes
//! never depend on scheduling.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::interferometer::{
    closed_form, InterferometerError, InterferometerOutputs, InterferometerPoint,
};
use crate::model::Gamma;

/// A sweepable interferometer parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisParam {
    Phi,
    Theta,
    ReGamma,
    ImGamma,
}

impl AxisParam {
    pub const ALL: [AxisParam; 4] = [
        AxisParam::Phi,
        AxisParam::Theta,
        AxisParam::ReGamma,
        AxisParam::ImGamma,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AxisParam::Phi => "phi",
            AxisParam::Theta => "theta",
            AxisParam::ReGamma => "re_gamma",
            AxisParam::ImGamma => "im_gamma",
        }
    }
}

impl fmt::Display for AxisParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxisParam {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, SweepError> {
        match s {
            "phi" => Ok(AxisParam::Phi),
            "theta" => Ok(AxisParam::Theta),
            "re_gamma" => Ok(AxisParam::ReGamma),
            "im_gamma" => Ok(AxisParam::ImGamma),
            other => Err(SweepError::UnknownParam(other.to_string())),
        }
    }
}

/// One sweep axis: `steps` uniformly spaced samples including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub param: AxisParam,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl Axis {
    /// Sample `i`; both endpoints land exactly on `from` and `to`.
    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.steps {
            self.to
        } else {
            self.from + (self.to - self.from) * i as f64 / (self.steps - 1).max(1) as f64
        }
    }
}

/// Values of the parameters held constant during a sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FixedParams {
    pub phi: Option<f64>,
    pub theta: Option<f64>,
    pub re_gamma: Option<f64>,
    pub im_gamma: Option<f64>,
}

impl FixedParams {
    pub fn get(&self, param: AxisParam) -> Option<f64> {
        match param {
            AxisParam::Phi => self.phi,
            AxisParam::Theta => self.theta,
            AxisParam::ReGamma => self.re_gamma,
            AxisParam::ImGamma => self.im_gamma,
        }
    }

    pub fn set(&mut self, param: AxisParam, value: f64) {
        match param {
            AxisParam::Phi => self.phi = Some(value),
            AxisParam::Theta => self.theta = Some(value),
            AxisParam::ReGamma => self.re_gamma = Some(value),
            AxisParam::ImGamma => self.im_gamma = Some(value),
        }
    }
}

/// A 1-D or 2-D sweep: one or two axes plus fixed values for the remaining
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub fixed: FixedParams,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("unknown sweep parameter `{0}` (expected phi, theta, re_gamma or im_gamma)")]
    UnknownParam(String),
    #[error("axis parameter `{0}` appears on both axes")]
    DuplicateAxes(AxisParam),
    #[error("axis `{param}` needs at least 2 steps, got {steps}")]
    TooFewSteps { param: AxisParam, steps: usize },
    #[error("axis `{param}` range must satisfy from < to, got {from} .. {to}")]
    BadRange { param: AxisParam, from: f64, to: f64 },
    #[error("parameter `{0}` is neither swept nor fixed")]
    MissingParam(AxisParam),
    #[error("parameter `{0}` is both swept and fixed")]
    OverlappingParam(AxisParam),
}

impl fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}",
            self.axis1.param, self.axis1.from, self.axis1.to, self.axis1.steps
        )?;
        if let Some(axis2) = &self.axis2 {
            write!(f, " x {}:{}:{}:{}", axis2.param, axis2.from, axis2.to, axis2.steps)?;
        }
        Ok(())
    }
}

impl SweepSpec {
    /// Enforce the user-facing rules: distinct axes, at least two steps,
    /// increasing ranges, and exact coverage of all four parameters.
    pub fn validate(&self) -> Result<(), SweepError> {
        let mut axes = vec![self.axis1];
        if let Some(axis2) = self.axis2 {
            if axis2.param == self.axis1.param {
                return Err(SweepError::DuplicateAxes(axis2.param));
            }
            axes.push(axis2);
        }
        for axis in &axes {
            if axis.steps < 2 {
                return Err(SweepError::TooFewSteps {
                    param: axis.param,
                    steps: axis.steps,
                });
            }
            if !(axis.from < axis.to) {
                return Err(SweepError::BadRange {
                    param: axis.param,
                    from: axis.from,
                    to: axis.to,
                });
            }
        }
        self.check_coverage()
    }

    fn check_coverage(&self) -> Result<(), SweepError> {
        for param in AxisParam::ALL {
            let swept = self.axis1.param == param
                || self.axis2.map(|a| a.param == param).unwrap_or(false);
            let fixed = self.fixed.get(param).is_some();
            match (swept, fixed) {
                (true, true) => return Err(SweepError::OverlappingParam(param)),
                (false, false) => return Err(SweepError::MissingParam(param)),
                _ => {}
            }
        }
        Ok(())
    }
}

/// One evaluated grid point. `outputs` is `None` (and the value columns are
/// NaN) when the point hit a singular denominator.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub axis1: f64,
    pub axis2: Option<f64>,
    pub outputs: Option<InterferometerOutputs>,
    pub flux: f64,
    pub singular: bool,
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub two_dimensional: bool,
}

/// Evaluate the sweep row-major over (axis1, axis2) on up to `workers`
/// threads. Singular points are flagged per row, never fatal.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepTable, SweepError> {
    spec.check_coverage()?;
    let inner_steps = spec.axis2.map(|a| a.steps).unwrap_or(1);
    let mut points = Vec::with_capacity(spec.axis1.steps * inner_steps);
    for i in 0..spec.axis1.steps {
        let v1 = spec.axis1.value(i);
        match spec.axis2 {
            Some(axis2) => {
                for j in 0..axis2.steps {
                    points.push((v1, Some(axis2.value(j))));
                }
            }
            None => points.push((v1, None)),
        }
    }

    let eval = |&(v1, v2): &(f64, Option<f64>)| evaluate_row(spec, v1, v2);
    let rows = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool");
        pool.install(|| points.par_iter().map(eval).collect())
    } else {
        points.iter().map(eval).collect()
    };
    Ok(SweepTable {
        rows,
        two_dimensional: spec.axis2.is_some(),
    })
}

fn evaluate_row(spec: &SweepSpec, v1: f64, v2: Option<f64>) -> SweepRow {
    let mut params = spec.fixed;
    params.set(spec.axis1.param, v1);
    if let (Some(axis2), Some(v2)) = (spec.axis2, v2) {
        params.set(axis2.param, v2);
    }
    let point = InterferometerPoint {
        theta: params.theta.unwrap(),
        phi: params.phi.unwrap(),
        gamma: Gamma::new(params.re_gamma.unwrap(), params.im_gamma.unwrap()),
    };
    match closed_form(&point) {
        Ok(outputs) => SweepRow {
            axis1: v1,
            axis2: v2,
            outputs: Some(outputs),
            flux: outputs.total_flux(),
            singular: false,
        },
        Err(InterferometerError::SingularDenominator { .. }) => SweepRow {
            axis1: v1,
            axis2: v2,
            outputs: None,
            flux: f64::NAN,
            singular: true,
        },
        Err(InterferometerError::Engine(_)) => unreachable!("closed form never runs the engine"),
    }
}

/// 17 significant digits: every f64 round-trips losslessly.
fn fmt_value(x: f64) -> String {
    format!("{x:.16e}")
}

/// Emit the table as CSV: fixed header, 17-significant-digit values, LF line
/// ends, one final LF. The `axis2` column is omitted for 1-D sweeps.
pub fn write_csv<W: Write>(table: &SweepTable, mut out: W) -> io::Result<()> {
    let value_header = "re_t1,im_t1,abs_t1,re_t2,im_t2,abs_t2,\
                        re_r1,im_r1,abs_r1,re_r2,im_r2,abs_r2,flux,singular";
    if table.two_dimensional {
        writeln!(out, "axis1,axis2,{value_header}")?;
    } else {
        writeln!(out, "axis1,{value_header}")?;
    }
    let nan = Complex64::new(f64::NAN, f64::NAN);
    for row in &table.rows {
        write!(out, "{}", fmt_value(row.axis1))?;
        if let Some(v2) = row.axis2 {
            write!(out, ",{}", fmt_value(v2))?;
        }
        let amplitudes = row
            .outputs
            .map(|o| o.as_array())
            .unwrap_or([nan, nan, nan, nan]);
        for z in amplitudes {
            write!(
                out,
                ",{},{},{}",
                fmt_value(z.re),
                fmt_value(z.im),
                fmt_value(z.norm())
            )?;
        }
        writeln!(out, ",{},{}", fmt_value(row.flux), row.singular)?;
    }
    Ok(())
}
