//! Bulk Hall conductance in its switch, double-commutator and position forms,
//! and the operator `Π_E`.

use faer::{c64, MatRef};
use serde::{Deserialize, Serialize};

use super::{TraceValue, TraceWindow, TWO_PI};
use crate::error::Result;
use crate::lattice::Geometry;
use crate::linalg::{self, CMat, I, ZERO};
use crate::spectral::{SpectralData, TimeAverageKernel};

/// `P D P` for diagonal `D`.
fn sandwich(p: MatRef<'_, c64>, d: &[f64]) -> CMat {
    p * linalg::diag_left(d, p)
}

/// `2π Re(−i tr_W [PΛ₂P, PΛ₁P])`.
pub fn hall_switch(p: MatRef<'_, c64>, l1: &[f64], l2: &[f64], window: &TraceWindow) -> Result<TraceValue> {
    window.check_dim(p.nrows())?;
    let a = sandwich(p, l2);
    let b = sandwich(p, l1);
    let t = window.trace_product(a.as_ref(), b.as_ref()) - window.trace_product(b.as_ref(), a.as_ref());
    Ok(TraceValue::conductance(-I * t))
}

/// `2π Re(−i tr_W P[[P,Λ₂],[P,Λ₁]])`. Equal to [`hall_switch`] as an
/// operator identity because the switches commute.
pub fn hall_double_commutator(p: MatRef<'_, c64>, l1: &[f64], l2: &[f64], window: &TraceWindow) -> Result<TraceValue> {
    window.check_dim(p.nrows())?;
    // [P, D] = −[D, P]; the two signs cancel in the product.
    let c2 = linalg::commutator_diag(p, l2);
    let c1 = linalg::commutator_diag(p, l1);
    let d = &c2 * &c1 - &c1 * &c2;
    Ok(TraceValue::conductance(-I * window.trace_product(p, d.as_ref())))
}

/// Position-operator Hall conductance per site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositionHall {
    pub value: f64,
    pub imag: f64,
    pub sites: usize,
    /// The averaging box reaches a periodic seam or open edge, where the
    /// position operator jumps.
    pub touches_boundary: bool,
}

/// `2π Re(−i tr{χ P[[P,X₂],[P,X₁]]χ}) / |χ|` with `χ` the box of
/// `(2·half + 1)²` sites centered at the origin.
pub fn hall_position_local(p: MatRef<'_, c64>, geometry: &Geometry, half: usize) -> Result<PositionHall> {
    let n = geometry.dim();
    if p.nrows() != n {
        return Err(crate::Error::Dimension { expected: n, got: p.nrows() });
    }
    let coords = geometry.coords();
    let x1: Vec<f64> = coords.iter().map(|c| c.0 as f64).collect();
    let x2: Vec<f64> = coords.iter().map(|c| c.1 as f64).collect();
    let h = half as f64 + 0.5;
    let window = TraceWindow::centered_box(geometry, (0.0, 0.0), (h, h));
    let (lo1, hi1) = geometry.coord_range(0);
    let (lo2, hi2) = geometry.coord_range(1);
    let half = half as i64;
    let touches_boundary = -half <= lo1 + 1 || half >= hi1 - 1 || -half <= lo2 + 1 || half >= hi2 - 1;

    let c2 = linalg::commutator_diag(p, &x2);
    let c1 = linalg::commutator_diag(p, &x1);
    let d = &c2 * &c1 - &c1 * &c2;
    let sites = window.size(n);
    let z = -I * window.trace_product(p, d.as_ref()) * (TWO_PI / sites);
    Ok(PositionHall { value: z.re, imag: z.im, sites: sites as usize, touches_boundary })
}

/// `Π_E = PΛ₂P^⊥Λ₁P − P^⊥Λ₂PΛ₁P^⊥`.
pub fn pi_e(p: MatRef<'_, c64>, l1: &[f64], l2: &[f64]) -> CMat {
    let n = p.nrows();
    let q = linalg::identity(n) - p;
    let a = p * linalg::diag_left(l2, q.as_ref()) * linalg::diag_left(l1, p);
    let b = &q * linalg::diag_left(l2, p) * linalg::diag_left(l1, q.as_ref());
    a - b
}

/// `|σ_switch − 2π Re(i tr Π_E)|` with full traces. Zero up to rounding for
/// every projector.
pub fn check_dec_hall(p: MatRef<'_, c64>, l1: &[f64], l2: &[f64]) -> Result<f64> {
    let s = hall_switch(p, l1, l2, &TraceWindow::Full)?;
    let pie = pi_e(p, l1, l2);
    let alt = TraceValue::conductance(I * linalg::trace(pie.as_ref()));
    Ok((s.value - alt.value).abs())
}

/// `2π Re(i tr_W Π_E)`.
pub fn hall_pi_e(p: MatRef<'_, c64>, l1: &[f64], l2: &[f64], window: &TraceWindow) -> Result<TraceValue> {
    window.check_dim(p.nrows())?;
    let pie = pi_e(p, l1, l2);
    Ok(TraceValue::conductance(I * window.trace(pie.as_ref())))
}

/// Raw full trace of `Π_E` with `Λ₁` replaced by its kernel time average
/// `⟨e^{itH}Λ₁e^{−itH}⟩_T`. Only matrix elements between occupied and empty
/// states enter, so the result decays like `1/T` when no eigenvalue pair
/// straddling `E` is degenerate.
pub fn pi_e_time_average(spectral: &SpectralData, e: f64, l1: &[f64], l2: &[f64], kernel: TimeAverageKernel) -> c64 {
    let lam = &spectral.eigenvalues;
    let n = lam.len();
    let rank = lam.partition_point(|&l| l <= e);
    let l1e = spectral.diag_to_eigenbasis(l1);
    let l2e = spectral.diag_to_eigenbasis(l2);
    let mut s = ZERO;
    // Σ_{i∈P, j∈Q} Λ₂_ij ⟨Λ₁⟩_ji − Σ_{i∈Q, j∈P} Λ₂_ij ⟨Λ₁⟩_ji
    for j in rank..n {
        for i in 0..rank {
            s += l2e[(i, j)] * l1e[(j, i)] * kernel.filter(lam[j] - lam[i]);
        }
    }
    for j in 0..rank {
        for i in rank..n {
            s -= l2e[(i, j)] * l1e[(j, i)] * kernel.filter(lam[j] - lam[i]);
        }
    }
    s
}
