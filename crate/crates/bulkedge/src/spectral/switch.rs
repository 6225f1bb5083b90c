use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::jet::Jet;
use crate::error::{Error, Result};
use crate::lattice::{Boundary, Geometry};

/// Steepness of the `erf` profile: `½ erfc(κ s)` on `s ∈ (−1, 1)`. At κ = 5
/// the jump left at `|s| = 1` is below 1e−12, so the profile is smooth to
/// working precision.
pub const ERF_STEEPNESS: f64 = 5.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothness {
    Smoothstep3,
    #[default]
    Smoothstep5,
    Erf,
}

impl Smoothness {
    /// Number of continuous derivatives; `None` for infinitely smooth.
    pub fn continuity(self) -> Option<usize> {
        match self {
            Smoothness::Smoothstep3 => Some(1),
            Smoothness::Smoothstep5 => Some(2),
            Smoothness::Erf => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    OneOnLeft,
}

/// Smooth monotone step from 1 (left) to 0 (right) over
/// `(center − half_width, center + half_width)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchProfile {
    pub center: f64,
    pub half_width: f64,
    #[serde(default)]
    pub orientation: Orientation,
    #[serde(default)]
    pub smoothness: Smoothness,
}

// 1 − s(u) as polynomials in u.
const STEP3: [f64; 4] = [1.0, 0.0, -3.0, 2.0];
const STEP5: [f64; 6] = [1.0, 0.0, 0.0, -10.0, 15.0, -6.0];

/// Antiderivative of y ↦ erfc(y).
fn erfc_primitive(y: f64) -> f64 {
    y * erfc(y) - (-y * y).exp() / std::f64::consts::PI.sqrt()
}

impl SwitchProfile {
    pub fn new(center: f64, half_width: f64, smoothness: Smoothness) -> Self {
        SwitchProfile { center, half_width, orientation: Orientation::OneOnLeft, smoothness }
    }

    /// Energy switch of the window `[lo, hi]`: 1 below `lo`, 0 above `hi`.
    pub fn window(lo: f64, hi: f64, smoothness: Smoothness) -> Self {
        SwitchProfile::new(0.5 * (lo + hi), 0.5 * (hi - lo), smoothness)
    }

    pub fn lo(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite() && self.center.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "switch profile needs finite center and half_width > 0 (got {}, {})",
                self.center, self.half_width
            )));
        }
        Ok(())
    }

    fn poly(&self) -> &'static [f64] {
        match self.smoothness {
            Smoothness::Smoothstep3 => &STEP3,
            _ => &STEP5,
        }
    }

    /// The erf profile is not clipped to `[lo, hi]`: clipping leaves jumps of
    /// order one in its sixth derivative, which the quadrature sees.
    pub fn value(&self, x: f64) -> f64 {
        if self.smoothness == Smoothness::Erf {
            return 0.5 * erfc(ERF_STEEPNESS * (x - self.center) / self.half_width);
        }
        if x <= self.lo() {
            return 1.0;
        }
        if x >= self.hi() {
            return 0.0;
        }
        let u = (x - self.lo()) / (2.0 * self.half_width);
        self.poly().iter().rev().fold(0.0, |acc, p| acc * u + p)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.jet(x, 1).derivative(1)
    }

    /// Taylor jet of the profile at `x` up to `order`.
    pub fn jet(&self, x: f64, order: usize) -> Jet {
        let t = Jet::variable(x, order);
        if self.smoothness == Smoothness::Erf {
            let k = ERF_STEEPNESS / self.half_width;
            let y = t.offset(-self.center).scale(k);
            let slope = (&y * &y).scale(-1.0).exp().scale(-k / std::f64::consts::PI.sqrt());
            return slope.integrate(0.5 * erfc(y.value()));
        }
        if x <= self.lo() {
            return Jet::constant(1.0, order);
        }
        if x >= self.hi() {
            return Jet::constant(0.0, order);
        }
        let u = t.offset(-self.lo()).scale(0.5 / self.half_width);
        u.polynomial(self.poly())
    }

    /// `∫_x^∞ profile(s) ds`.
    pub fn primitive(&self, x: f64) -> f64 {
        let hw = self.half_width;
        if self.smoothness == Smoothness::Erf {
            // erfc_primitive vanishes at +∞.
            return -hw / (2.0 * ERF_STEEPNESS) * erfc_primitive(ERF_STEEPNESS * (x - self.center) / hw);
        }
        if x >= self.hi() {
            return 0.0;
        }
        let u = ((x - self.lo()) / (2.0 * hw)).max(0.0);
        // ∫_u^1 (1 − s) = (1 − u) − (S(1) − S(u)), S(1) = 1/2.
        let big_s = match self.smoothness {
            Smoothness::Smoothstep3 => u.powi(3) - 0.5 * u.powi(4),
            _ => 2.5 * u.powi(4) - 3.0 * u.powi(5) + u.powi(6),
        };
        let inner = 2.0 * hw * ((1.0 - u) - (0.5 - big_s));
        inner + (self.lo() - x).max(0.0)
    }

    /// Taylor jet of the primitive at `x`.
    pub fn primitive_jet(&self, x: f64, order: usize) -> Jet {
        (-&self.jet(x, order)).integrate(self.primitive(x))
    }
}

/// Diagonal of the switch operator `Λ(x_axis)` (axis 0 = x₁, 1 = x₂).
pub fn switch_matrix(profile: &SwitchProfile, axis: usize, geometry: &Geometry) -> Result<Vec<f64>> {
    profile.validate()?;
    if axis > 1 {
        return Err(Error::InvalidArgument(format!("axis must be 0 or 1 (got {axis})")));
    }
    let (lo, hi) = geometry.coord_range(axis);
    if geometry.boundary(axis) == Boundary::Periodic {
        let inside = profile.hi() > lo as f64 && profile.lo() < hi as f64;
        let clear = profile.lo() - (lo as f64 - 0.5) >= 2.0 && (hi as f64 + 0.5) - profile.hi() >= 2.0;
        if inside && !clear {
            return Err(Error::InvalidArgument(format!(
                "switch transition ({}, {}) crosses or touches the periodic seam of axis {axis}",
                profile.lo(),
                profile.hi()
            )));
        }
    }
    Ok((0..geometry.dim())
        .map(|s| {
            let (x1, x2) = geometry.coord(s);
            profile.value(if axis == 0 { x1 } else { x2 } as f64)
        })
        .collect())
}
