//! Bulk side of the edge/bulk comparison.
//!
//! The time-averaged `tr_W [g(H), Λ₂](⟨Λ₁⟩_T − Λ₁)` on a torus is written in
//! the eigenbasis and cycled so that the window `W` sits between the two
//! states that share the same side of each eigenvalue `λ_j`:
//!
//! `S = Σ_j Σ_{k,l} W_{lk} (Λ₂)_{kj} M_{jl} c_j(k,l)`, with
//! `M = Λ₁ ∘ (F − 1)` and `c_j(k,l)` nonzero only when `λ_k, λ_l` both lie
//! below or both above `λ_j`. Without the cycling, finite-size states that
//! are extended along the transition line make the windowed trace collapse.

use std::num::NonZeroUsize;

use faer::{c64, Mat};
use gauss_quad::legendre::GaussLegendre;

use super::hall::{hall_switch, pi_e};
use super::{TraceValue, TraceWindow};
use crate::error::{Error, Result};
use crate::linalg::{self, I, ZERO};
use crate::spectral::{SpectralData, SwitchProfile, TimeAverageKernel};

/// `2π Re(−i S)` for every kernel in `kernels`; `S` as in the module docs.
pub fn bulk_comparator_trace(
    spectral: &SpectralData,
    g: &SwitchProfile,
    l1: &[f64],
    l2: &[f64],
    window: &TraceWindow,
    kernels: &[TimeAverageKernel],
) -> Result<Vec<TraceValue>> {
    let n = spectral.dim();
    for d in [l1.len(), l2.len()] {
        if d != n {
            return Err(Error::Dimension { expected: n, got: d });
        }
    }
    window.check_dim(n)?;
    let lam = &spectral.eigenvalues;
    let gv: Vec<f64> = lam.iter().map(|&l| g.value(l)).collect();
    let we = match window {
        TraceWindow::Full => linalg::identity(n),
        TraceWindow::Sites(w) => spectral.diag_to_eigenbasis(w),
    };
    let l1e = spectral.diag_to_eigenbasis(l1);
    let l2e = spectral.diag_to_eigenbasis(l2);

    // Eigenvalues are ascending; `below[j]` / `above[j]` bound the index
    // ranges strictly below / above `λ_j`.
    let below: Vec<usize> = (0..n).map(|j| lam.partition_point(|&x| x < lam[j])).collect();
    let above: Vec<usize> = (0..n).map(|j| lam.partition_point(|&x| x <= lam[j])).collect();

    let mut out = Vec::with_capacity(kernels.len());
    for kernel in kernels {
        let m = Mat::from_fn(n, n, |j, l| l1e[(j, l)] * (kernel.filter(lam[j] - lam[l]) - 1.0));
        let mut s = ZERO;
        for j in 0..n {
            let mrow: Vec<c64> = (0..n).map(|l| m[(j, l)]).collect();
            let mut sj = ZERO;
            // Both below: c = −(g_j − g(max(λ_k, λ_l))).
            for k in 0..below[j] {
                let a = l2e[(k, j)];
                for l in 0..below[j] {
                    let gmax = gv[k.max(l)];
                    let c = gmax - gv[j];
                    if c != 0.0 {
                        sj += we[(l, k)] * a * mrow[l] * c;
                    }
                }
            }
            // Both above: c = g(min(λ_k, λ_l)) − g_j.
            for k in above[j]..n {
                let a = l2e[(k, j)];
                for l in above[j]..n {
                    let gmin = gv[k.min(l)];
                    let c = gmin - gv[j];
                    if c != 0.0 {
                        sj += we[(l, k)] * a * mrow[l] * c;
                    }
                }
            }
            s += sj;
        }
        out.push(TraceValue::conductance(-I * s));
    }
    Ok(out)
}

/// `−∫ g′(E) σ_Π(E) dE` by Gauss–Legendre on the support of `g′`, with
/// `σ_Π(E) = 2π Re(i tr_W Π_E)`. This is the limit the bulk comparator
/// should reach for large `T`.
pub fn pi_e_integral(
    spectral: &SpectralData,
    g: &SwitchProfile,
    l1: &[f64],
    l2: &[f64],
    window: &TraceWindow,
    nodes: usize,
) -> Result<TraceValue> {
    let nodes = NonZeroUsize::new(nodes).ok_or_else(|| Error::InvalidArgument("need at least one node".into()))?;
    window.check_dim(spectral.dim())?;
    let rule = GaussLegendre::new(nodes);
    let (lo, hi) = (g.lo(), g.hi());
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let mut s = ZERO;
    for &(x, w) in rule.as_node_weight_pairs() {
        let e = mid + half * x;
        let p = spectral.fermi_projector(e);
        let t = window.trace(pi_e(p.matrix.as_ref(), l1, l2).as_ref());
        s += t * (w * half * g.derivative(e));
    }
    Ok(TraceValue::conductance(-I * s))
}

/// `−∫ g′(E) σ_switch(E) dE` by Gauss–Legendre on the support of `g′`: the
/// bulk Hall conductance seen through the same energy window as the edge.
pub fn hall_switch_integral(
    spectral: &SpectralData,
    g: &SwitchProfile,
    l1: &[f64],
    l2: &[f64],
    window: &TraceWindow,
    nodes: usize,
) -> Result<TraceValue> {
    let nodes = NonZeroUsize::new(nodes).ok_or_else(|| Error::InvalidArgument("need at least one node".into()))?;
    let rule = GaussLegendre::new(nodes);
    let (lo, hi) = (g.lo(), g.hi());
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let (mut re, mut im) = (0.0, 0.0);
    for &(x, w) in rule.as_node_weight_pairs() {
        let e = mid + half * x;
        let p = spectral.fermi_projector(e);
        let v = hall_switch(p.matrix.as_ref(), l1, l2, window)?;
        let c = -w * half * g.derivative(e);
        re += c * v.value;
        im += c * v.imag;
    }
    Ok(TraceValue { value: re, imag: im })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::diagonalize_matrix;

    #[test]
    fn zero_at_t_zero_limit() {
        let h = Mat::from_fn(6, 6, |i, j| match (i as i64 - j as i64).abs() {
            0 => c64::new(i as f64, 0.0),
            1 => c64::new(-1.0, 0.0),
            _ => ZERO,
        });
        let sd = diagonalize_matrix(h.as_ref(), String::new()).unwrap();
        let g = SwitchProfile::window(1.0, 3.0, Default::default());
        let l1 = [1.0, 1.0, 0.7, 0.3, 0.0, 0.0];
        let l2 = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        let v = bulk_comparator_trace(&sd, &g, &l1, &l2, &TraceWindow::Full, &[TimeAverageKernel::UniformWindow { t: 0.0 }])
            .unwrap();
        assert!(v[0].value.abs() < 1e-14);
    }
}
