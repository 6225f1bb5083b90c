//! Helffer–Sjöstrand functional calculus on a finite grid.
//!
//! With `∂̄ = ½(∂_u + i∂_v)` and `R(z) = (H − z)^{-1}`:
//!
//! * first order: `f(H) = (1/π) ∫ ∂̄f̃ R`
//! * primitive, second order: `g(H) = (1/π) ∫ ∂̄G̃ R²`
//! * primitive, third order: `g′(H) = −(2/π) ∫ ∂̄G̃ R³`
//!
//! where `G(x) = ∫_x^∞ g`. The extension of a function `F` is
//! `F̃(u+iv) = Σ_{k≤N} F^(k)(u) (iv)^k / k! · χ(v / v_max)`, whose `∂̄`
//! collapses to the top Taylor term plus the cutoff derivative. `F` is made
//! compactly supported by a smooth rise `ψ` just above `u_min`.

use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use super::jet::Jet;
use super::switch::{Smoothness, SwitchProfile};
use crate::error::{Error, Result};
use crate::exec::{self, Workers};
use crate::linalg::{self, CMat};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsGrid {
    pub u_min: f64,
    pub u_max: f64,
    pub v_max: f64,
    pub h: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HsVariant {
    /// `f(H)` from the extension of `g` itself.
    FirstOrder,
    /// `g(H)` from the primitive and `R²`.
    PrimitiveSecondOrder,
    /// `g′(H)` from the primitive and `R³`.
    PrimitiveDerivativeThirdOrder,
}

impl HsVariant {
    fn power(self) -> usize {
        match self {
            HsVariant::FirstOrder => 1,
            HsVariant::PrimitiveSecondOrder => 2,
            HsVariant::PrimitiveDerivativeThirdOrder => 3,
        }
    }

    fn prefactor(self) -> f64 {
        match self {
            HsVariant::PrimitiveDerivativeThirdOrder => -2.0 / std::f64::consts::PI,
            _ => 1.0 / std::f64::consts::PI,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiAnalyticExtension {
    /// The energy switch `g`.
    pub base: SwitchProfile,
    pub order: usize,
    pub grid: HsGrid,
    /// Length over which the lower cutoff rises from 0 to 1, starting at
    /// `u_min`.
    pub cutoff_width: f64,
    /// Quadrature tolerance used to flag results.
    pub tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct HsResult {
    pub matrix: CMat,
    /// Grid points with a nonzero integrand.
    pub points: usize,
    /// Richardson estimate from a run at twice the step, when requested.
    pub estimated_error: Option<f64>,
    /// `estimated_error` exceeds the extension tolerance.
    pub flagged: bool,
}

const QUAD_CHUNKS: usize = 32;

impl QuasiAnalyticExtension {
    pub fn new(base: SwitchProfile, order: usize, grid: HsGrid) -> Self {
        QuasiAnalyticExtension { base, order, grid, cutoff_width: 2.0, tolerance: 1e-6 }
    }

    pub fn with_step(&self, h: f64) -> Self {
        let mut e = self.clone();
        e.grid.h = h;
        e
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let g = &self.grid;
        if self.order < 2 {
            return Err(Error::InvalidArgument(format!("extension order must be >= 2 (got {})", self.order)));
        }
        // A jump in f^(k), k <= N, puts part of the plane integrand on a line
        // the quadrature never samples.
        if let Some(c) = self.base.smoothness.continuity() {
            if c < self.order {
                return Err(Error::InvalidArgument(format!(
                    "an order-{} extension needs a switch with {} continuous derivatives; {:?} has {c}",
                    self.order, self.order, self.base.smoothness
                )));
            }
        }
        if !(g.h > 0.0 && g.v_max > g.h && g.u_max > g.u_min + self.cutoff_width && self.cutoff_width > 0.0) {
            return Err(Error::InvalidArgument(format!("degenerate Helffer-Sjostrand grid {g:?}")));
        }
        if self.base.hi() > g.u_max {
            return Err(Error::InvalidArgument("grid must cover the switch transition".into()));
        }
        Ok(())
    }

    // Half as wide as the nominal transition so that erfc is below 1e-40
    // at both ends of `[u_min, u_min + cutoff_width]`.
    fn lower_cutoff(&self) -> SwitchProfile {
        let w = 0.5 * self.cutoff_width;
        SwitchProfile::new(self.grid.u_min + w, 0.5 * w, Smoothness::Erf)
    }

    fn v_cutoff() -> SwitchProfile {
        SwitchProfile::new(0.75, 0.25, Smoothness::Erf)
    }

    /// Jet of the compactly supported function whose extension is integrated.
    pub fn base_jet(&self, variant: HsVariant, u: f64, order: usize) -> Jet {
        let f = match variant {
            HsVariant::FirstOrder => self.base.jet(u, order),
            _ => self.base.primitive_jet(u, order),
        };
        let psi = self.lower_cutoff().jet(u, order);
        let rise = &Jet::constant(1.0, order) - &psi;
        &f * &rise
    }

    fn dbar_from(&self, d: &[f64], v: f64) -> c64 {
        let n = self.order;
        let s = v.abs() / self.grid.v_max;
        let chi = Self::v_cutoff().jet(s, 1);
        let (chi0, chi1) = (chi.value(), chi.derivative(1) * v.signum() / self.grid.v_max);
        let iv = c64::new(0.0, v);
        let mut pow = c64::new(1.0, 0.0);
        let mut sum = c64::new(0.0, 0.0);
        for (k, dk) in d.iter().enumerate().take(n + 1) {
            if k > 0 {
                pow = pow * iv / k as f64;
            }
            sum += pow * *dk;
        }
        // pow now holds (iv)^N / N!.
        let top = pow * d[n + 1] * chi0;
        (top + c64::new(0.0, 1.0) * sum * chi1) * 0.5
    }

    /// `∂̄F̃(u + iv)`.
    pub fn dbar(&self, variant: HsVariant, u: f64, v: f64) -> c64 {
        let d = self.base_jet(variant, u, self.order + 1).derivatives();
        self.dbar_from(&d, v)
    }

    /// Nonzero integrand weights on the `v > 0` half of the grid.
    fn points(&self, variant: HsVariant) -> Vec<(c64, c64)> {
        let g = &self.grid;
        let nu = ((g.u_max - g.u_min) / g.h).ceil() as usize;
        let nv = (g.v_max / g.h).ceil() as usize;
        let mut pts = Vec::new();
        for j in 0..nu {
            let u = g.u_min + (j as f64 + 0.5) * g.h;
            let d = self.base_jet(variant, u, self.order + 1).derivatives();
            if d.iter().all(|&x| x == 0.0) {
                continue;
            }
            for k in 0..nv {
                let v = (k as f64 + 0.5) * g.h;
                let w = self.dbar_from(&d, v);
                if w.norm() > 0.0 {
                    pts.push((c64::new(u, v), w));
                }
            }
        }
        pts
    }
}

/// Resolvent `(H − z)^{-1}` by a dense LU solve.
pub fn resolvent(h: MatRef<'_, c64>, z: c64) -> CMat {
    let n = h.nrows();
    let m = Mat::from_fn(n, n, |i, j| if i == j { h[(i, j)] - z } else { h[(i, j)] });
    m.partial_piv_lu().inverse()
}

/// Gershgorin enclosure `[lo, hi]` of the spectrum of `h`.
pub fn gershgorin(h: MatRef<'_, c64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..h.nrows() {
        let r: f64 = (0..h.ncols()).filter(|&j| j != i).map(|j| h[(i, j)].norm()).sum();
        lo = lo.min(h[(i, i)].re - r);
        hi = hi.max(h[(i, i)].re + r);
    }
    (lo, hi)
}

fn quadrature(h: MatRef<'_, c64>, ext: &QuasiAnalyticExtension, variant: HsVariant, workers: Workers) -> (CMat, usize) {
    let n = h.nrows();
    let pts = ext.points(variant);
    let chunk = pts.len().div_ceil(QUAD_CHUNKS).max(1);
    let chunks: Vec<&[(c64, c64)]> = pts.chunks(chunk).collect();
    let power = variant.power();
    let partial = exec::map(workers, &chunks, |c| {
        let mut acc = Mat::<c64>::zeros(n, n);
        for &(z, w) in c.iter() {
            let r = resolvent(h, z);
            let rk = match power {
                1 => r,
                2 => &r * &r,
                _ => &r * (&r * &r),
            };
            acc += faer::Scale(w) * rk;
        }
        acc
    });
    let mut s = Mat::<c64>::zeros(n, n);
    for p in partial {
        s += p;
    }
    let scale = variant.prefactor() * ext.grid.h * ext.grid.h;
    let total = Mat::from_fn(n, n, |i, j| (s[(i, j)] + s[(j, i)].conj()) * scale);
    (total, pts.len())
}

/// Plane-integral approximation of `g(H)` (or `g′(H)`) from resolvents.
pub fn apply_function_hs(
    h: MatRef<'_, c64>,
    ext: &QuasiAnalyticExtension,
    variant: HsVariant,
    estimate_error: bool,
    workers: Workers,
) -> Result<HsResult> {
    ext.validate()?;
    let (lo, hi) = gershgorin(h);
    if lo < ext.grid.u_min + ext.cutoff_width || hi > ext.grid.u_max {
        return Err(Error::InvalidArgument(format!(
            "spectrum enclosure [{lo:.3}, {hi:.3}] not inside the grid's plateau [{:.3}, {:.3}]",
            ext.grid.u_min + ext.cutoff_width,
            ext.grid.u_max
        )));
    }
    let (matrix, points) = quadrature(h, ext, variant, workers);
    let estimated_error = if estimate_error {
        let coarse = ext.with_step(2.0 * ext.grid.h);
        let (m2, _) = quadrature(h, &coarse, variant, workers);
        let p = (ext.order + 1).saturating_sub(variant.power()).max(1) as i32;
        Some(linalg::max_abs_diff(matrix.as_ref(), m2.as_ref()) / (2f64.powi(p) - 1.0))
    } else {
        None
    };
    let flagged = estimated_error.is_some_and(|e| e > ext.tolerance);
    Ok(HsResult { matrix, points, estimated_error, flagged })
}
