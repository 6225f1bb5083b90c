//! Conductance functionals.
//!
//! Every conductance is returned in units of `e²/h`, that is `2π` times the
//! raw trace, as a [`TraceValue`] that keeps the discarded imaginary part.
//! Raw traces (the zero-trace check, `Π_E`) are documented where they occur.
//!
//! On a torus `tr[A, B] = 0` for any pair of matrices, so bulk formulas are
//! evaluated with a local [`TraceWindow`] around the crossing point of the two
//! switch lines. The full trace is still available and is what the purely
//! algebraic identities are checked against.

pub mod chern;
pub mod comparator;
pub mod edge;
pub mod hall;
pub mod sweep;

pub use chern::{chern_oracle, ChernReport};
pub use comparator::{bulk_comparator_trace, hall_switch_integral, pi_e_integral};
pub use edge::{edge_unregularized, zero_trace_twist_average, CommutatorScheme, EdgeSetup, EdgeTraces, ZeroTraceReport};
pub use hall::{check_dec_hall, hall_double_commutator, hall_pi_e, hall_position_local, hall_switch, pi_e, pi_e_time_average, PositionHall};
pub use sweep::{convergence_in_a, AConvergenceRow};

use std::f64::consts::PI;

use faer::{c64, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Boundary, Geometry};
use crate::linalg;

pub const TWO_PI: f64 = 2.0 * PI;

/// Imaginary parts above this are reported as suspicious.
pub const IMAG_TOL: f64 = 1e-8;

/// Real part of a trace that should be real, plus what was thrown away.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceValue {
    pub value: f64,
    pub imag: f64,
}

impl TraceValue {
    pub fn from_complex(z: c64) -> Self {
        TraceValue { value: z.re, imag: z.im }
    }

    /// `2π · z`.
    pub fn conductance(z: c64) -> Self {
        Self::from_complex(z * TWO_PI)
    }

    pub fn flagged(&self) -> bool {
        self.imag.abs() > IMAG_TOL
    }
}

/// Which diagonal entries enter a trace.
#[derive(Clone, Debug, PartialEq)]
pub enum TraceWindow {
    Full,
    /// Per-site weights (usually an indicator).
    Sites(Vec<f64>),
}

impl TraceWindow {
    /// Indicator of the box `|d₁| < Lx/4`, `|d₂| < Ly/4` around `center`,
    /// with minimum-image distances along periodic axes. On a torus this
    /// keeps the switch crossing at `center` and excludes the spurious ones at
    /// the seams.
    pub fn crossing_box(geometry: &Geometry, center: (f64, f64)) -> Self {
        let half = (geometry.lx as f64 / 4.0, geometry.ly as f64 / 4.0);
        Self::centered_box(geometry, center, half)
    }

    /// Indicator of `|d₁| < half.0`, `|d₂| < half.1` around `center`.
    pub fn centered_box(geometry: &Geometry, center: (f64, f64), half: (f64, f64)) -> Self {
        let w = geometry
            .coords()
            .into_iter()
            .map(|(x1, x2)| {
                let d1 = axis_distance(geometry, 0, x1 as f64 - center.0);
                let d2 = axis_distance(geometry, 1, x2 as f64 - center.1);
                if d1.abs() < half.0 && d2.abs() < half.1 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        TraceWindow::Sites(w)
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match self {
            TraceWindow::Full => None,
            TraceWindow::Sites(w) => Some(w),
        }
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self {
            TraceWindow::Sites(w) if w.len() != n => Err(Error::Dimension { expected: n, got: w.len() }),
            _ => Ok(()),
        }
    }

    /// Number of sites (total weight) in the window.
    pub fn size(&self, n: usize) -> f64 {
        match self {
            TraceWindow::Full => n as f64,
            TraceWindow::Sites(w) => w.iter().sum(),
        }
    }

    pub fn trace(&self, a: MatRef<'_, c64>) -> c64 {
        match self {
            TraceWindow::Full => linalg::trace(a),
            TraceWindow::Sites(w) => linalg::weighted_trace(w, a),
        }
    }

    pub fn trace_product(&self, a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> c64 {
        match self {
            TraceWindow::Full => linalg::trace_product(a, b),
            TraceWindow::Sites(w) => linalg::weighted_trace_product(w, a, b),
        }
    }
}

fn axis_distance(geometry: &Geometry, axis: usize, d: f64) -> f64 {
    if geometry.boundary(axis) == Boundary::Open {
        return d;
    }
    let l = if axis == 0 { geometry.lx } else { geometry.ly } as f64;
    d - l * (d / l).round()
}

/// Energy interval handed to the edge formulas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyWindow {
    pub lo: f64,
    pub hi: f64,
    /// Free-form note, e.g. "lowest gap" or "band tail".
    #[serde(default)]
    pub label: String,
}

impl EnergyWindow {
    pub fn new(lo: f64, hi: f64, label: impl Into<String>) -> Self {
        EnergyWindow { lo, hi, label: label.into() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidArgument(format!("energy window needs lo < hi (got [{}, {}])", self.lo, self.hi)));
        }
        Ok(())
    }

    /// An edge run needs the wall above the whole window.
    pub fn check_wall(&self, height: f64) -> Result<()> {
        if height <= self.hi {
            return Err(Error::InvalidArgument(format!(
                "wall height {height} does not exceed the top of the energy window {}",
                self.hi
            )));
        }
        Ok(())
    }
}

/// One row of a regularized-edge table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeTableRow {
    pub a: f64,
    pub t: f64,
    pub sigma_edge_reg: f64,
}

/// Aggregate of the bulk and edge numbers for one realization.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConductanceReport {
    pub sigma_hall: Option<f64>,
    pub sigma_hall_alt1: Option<f64>,
    pub sigma_hall_alt2: Option<f64>,
    pub chern_oracle: Option<i64>,
    pub sigma_edge_unreg: Option<f64>,
    pub sigma_edge_reg: Vec<EdgeTableRow>,
    /// `(T, remainder)` pairs.
    pub remainder_avg: Vec<(f64, f64)>,
    pub definition_residuals: Vec<f64>,
    /// Names of traces whose imaginary part exceeded [`IMAG_TOL`].
    pub flags: Vec<String>,
}

impl ConductanceReport {
    pub fn note(&mut self, name: &str, v: &TraceValue) -> f64 {
        if v.flagged() {
            self.flags.push(format!("{name}: imaginary part {:.3e}", v.imag));
        }
        v.value
    }
}
