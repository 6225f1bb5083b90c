//! Localization probes: dynamical moments, kernel decay of projectors and
//! commutators, and resolvent (Combes–Thomas) decay.
//!
//! Cells are single lattice sites, so `‖χ_x A χ_y‖₂ = |A_xy|`. Distances are
//! ℓ¹ with wraparound along periodic axes.

mod decay;
mod moment;

pub use decay::{
    combes_thomas_check, commutator_kernel_decay, fit_profile, projector_kernel_decay, rates_nondecreasing, CommutatorDecay,
    CtRow, DecayFit, DecayOptions, DecayProfile, ProfileBin, ZetaChoice,
};
pub use moment::{averaged_moment, central_site, Estimate, MomentProbe};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Boundary, Geometry};

/// Smooth bump `4s(1−s)` with `s` the cubic smoothstep across `[lo, hi]`:
/// nonnegative, supported in the window, maximum 1 at its center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyBump {
    pub lo: f64,
    pub hi: f64,
}

impl EnergyBump {
    pub fn new(lo: f64, hi: f64) -> Self {
        EnergyBump { lo, hi }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidArgument(format!("energy bump needs lo < hi (got [{}, {}])", self.lo, self.hi)));
        }
        Ok(())
    }

    pub fn value(&self, e: f64) -> f64 {
        if e <= self.lo || e >= self.hi {
            return 0.0;
        }
        let u = (e - self.lo) / (self.hi - self.lo);
        let s = u * u * (3.0 - 2.0 * u);
        4.0 * s * (1.0 - s)
    }
}

/// Distance along one axis, with wraparound if the axis is periodic.
pub fn axis_distance(geometry: &Geometry, axis: usize, a: i64, b: i64) -> i64 {
    let d = (a - b).abs();
    if geometry.boundary(axis) == Boundary::Periodic {
        let l = if axis == 0 { geometry.lx } else { geometry.ly } as i64;
        d.min(l - d)
    } else {
        d
    }
}

pub fn site_distance(geometry: &Geometry, x: (i64, i64), y: (i64, i64)) -> i64 {
    axis_distance(geometry, 0, x.0, y.0) + axis_distance(geometry, 1, x.1, y.1)
}
