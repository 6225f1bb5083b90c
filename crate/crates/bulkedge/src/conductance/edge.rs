//! Edge conductance on a cylinder with a confining wall.
//!
//! All traces are evaluated in the eigenbasis of `H`, where `g(H)` and
//! `g′(H)` are diagonal and the time average of `Λ₁(t) = e^{itH}Λ₁e^{−itH}`
//! is an entrywise filter. The commutator with `g(H)` becomes a divided
//! difference: `([g(H), K])_{ij} = (g_i − g_j)/(λ_i − λ_j) · ([H, K])_{ij}`.
//!
//! On a cylinder the transverse switch `Λ₂` jumps twice, once at its
//! transition and once at the periodic seam. The [`CommutatorScheme::Cut`]
//! scheme keeps only the first jump by restricting `[H, Λ₂]` to a strip
//! around it; this is the quantity that carries the edge current. The
//! [`CommutatorScheme::Literal`] scheme keeps the full commutator and is
//! useful for exact algebraic checks (its zero trace is identically 0).

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use super::TraceValue;
use crate::error::{Error, Result};
use crate::exec::{self, Workers};
use crate::lattice::{build_edge, Geometry, HamiltonianMatrix, ModelSpec};
use crate::linalg::{self, CMat, I, ZERO};
use crate::spectral::{self, switch_matrix, SpectralData, SwitchProfile, TimeAverageKernel};

/// Eigenvalue gaps below this use the derivative in divided differences.
const DIVIDED_DIFFERENCE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CommutatorScheme {
    /// Full `[H, Λ₂]`.
    Literal,
    /// `χ[H, Λ₂]χ` with `χ` the strip `|x₂| < half_width`; `None` means
    /// `Ly/4`.
    Cut { half_width: Option<f64> },
}

/// Switches and energy window for one edge evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSetup {
    /// Energy switch `g`: 1 below the window, 0 above.
    pub g: SwitchProfile,
    /// Along x₁; 1 on the wall side.
    pub lambda1: SwitchProfile,
    /// Along x₂.
    pub lambda2: SwitchProfile,
    pub scheme: CommutatorScheme,
}

impl EdgeSetup {
    /// Unit-width smoothstep5 switches at the origin and the cut scheme.
    pub fn standard(g: SwitchProfile) -> Self {
        let unit = SwitchProfile::new(0.0, 1.0, Default::default());
        EdgeSetup { g, lambda1: unit.clone(), lambda2: unit, scheme: CommutatorScheme::Cut { half_width: None } }
    }

    pub fn validate(&self) -> Result<()> {
        self.g.validate()?;
        self.lambda1.validate()?;
        self.lambda2.validate()?;
        if let CommutatorScheme::Cut { half_width: Some(w) } = self.scheme {
            if !(w > self.lambda2.half_width) {
                return Err(Error::InvalidArgument(format!(
                    "cut strip half width {w} must exceed the Λ₂ transition half width {}",
                    self.lambda2.half_width
                )));
            }
        }
        Ok(())
    }

    fn commutator(&self, h: MatRef<'_, c64>, geometry: &Geometry, l2: &[f64]) -> CMat {
        let k = linalg::commutator_diag(h, l2);
        match self.scheme {
            CommutatorScheme::Literal => k,
            CommutatorScheme::Cut { half_width } => {
                let w = half_width.unwrap_or(geometry.ly as f64 / 4.0);
                let chi: Vec<f64> = geometry
                    .coords()
                    .iter()
                    .map(|&(_, x2)| if ((x2 as f64) - self.lambda2.center).abs() < w { 1.0 } else { 0.0 })
                    .collect();
                Mat::from_fn(k.nrows(), k.ncols(), |i, j| k[(i, j)] * (chi[i] * chi[j]))
            }
        }
    }
}

/// Eigenbasis data shared by all edge traces of one Hamiltonian.
pub struct EdgeTraces {
    eigenvalues: Vec<f64>,
    /// `V†KV` with `K` the (possibly cut) `[H, Λ₂]`.
    ke: CMat,
    /// `V†Λ₁V`.
    l1e: CMat,
    gp: Vec<f64>,
    /// Divided differences of `g`.
    dk: CMat,
}

impl EdgeTraces {
    pub fn new(hm: &HamiltonianMatrix, spectral: &SpectralData, setup: &EdgeSetup) -> Result<Self> {
        setup.validate()?;
        if spectral.dim() != hm.dim() {
            return Err(Error::Dimension { expected: hm.dim(), got: spectral.dim() });
        }
        let l1 = switch_matrix(&setup.lambda1, 0, &hm.geometry)?;
        let l2 = switch_matrix(&setup.lambda2, 1, &hm.geometry)?;
        let k = setup.commutator(hm.matrix.as_ref(), &hm.geometry, &l2);
        Ok(Self::from_parts(spectral, k.as_ref(), &l1, &setup.g))
    }

    /// Builds from an explicit `K` and `Λ₁` (both in the site basis).
    pub fn from_parts(spectral: &SpectralData, k: MatRef<'_, c64>, l1: &[f64], g: &SwitchProfile) -> Self {
        let lam = spectral.eigenvalues.clone();
        let gv: Vec<f64> = lam.iter().map(|&l| g.value(l)).collect();
        let gp: Vec<f64> = lam.iter().map(|&l| g.derivative(l)).collect();
        let n = lam.len();
        let dk = Mat::from_fn(n, n, |i, j| {
            let d = lam[i] - lam[j];
            if d.abs() > DIVIDED_DIFFERENCE_TOL {
                linalg::real((gv[i] - gv[j]) / d)
            } else {
                linalg::real(0.5 * (gp[i] + gp[j]))
            }
        });
        EdgeTraces {
            ke: spectral.to_eigenbasis(k),
            l1e: spectral.diag_to_eigenbasis(l1),
            eigenvalues: lam,
            gp,
            dk,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `Σ_ij c_ij K_ij Λ₁_ji f(λ_j − λ_i)`.
    fn contract<C, F>(&self, coef: C, filter: F) -> c64
    where
        C: Fn(usize, usize) -> c64,
        F: Fn(f64) -> c64,
    {
        let n = self.dim();
        let lam = &self.eigenvalues;
        let mut s = ZERO;
        for i in 0..n {
            let mut row = ZERO;
            for j in 0..n {
                let c = coef(i, j);
                if c == ZERO {
                    continue;
                }
                row += c * self.ke[(i, j)] * self.l1e[(j, i)] * filter(lam[j] - lam[i]);
            }
            s += row;
        }
        s
    }

    fn gp_coef(&self) -> impl Fn(usize, usize) -> c64 + '_ {
        |i, _| linalg::real(self.gp[i])
    }

    fn dk_coef(&self) -> impl Fn(usize, usize) -> c64 + '_ {
        |i, j| self.dk[(i, j)]
    }

    /// `2π Re(−i tr g′(H) K Λ₁)`: the edge conductance without time
    /// averaging.
    pub fn unregularized(&self) -> TraceValue {
        self.integrand(0.0)
    }

    /// `2π Re(−i tr g′(H) K)`, i.e. `Λ₁ = I`. On a cylinder this adds the
    /// currents of both edges, which cancel for a clean gap.
    pub fn total_current(&self) -> TraceValue {
        let s: c64 = (0..self.dim()).map(|i| self.ke[(i, i)] * self.gp[i]).sum();
        TraceValue::conductance(-I * s)
    }

    /// `2π Re(−i tr g′(H) K Λ₁(t))`.
    pub fn integrand(&self, t: f64) -> TraceValue {
        TraceValue::conductance(-I * self.contract(self.gp_coef(), |d| c64::cis(t * d)))
    }

    /// Time-averaged edge conductance `2π Re(−i tr g′(H) K ⟨Λ₁⟩_T)`.
    pub fn regularized(&self, kernel: TimeAverageKernel) -> TraceValue {
        TraceValue::conductance(-I * self.contract(self.gp_coef(), |d| kernel.filter(d)))
    }

    /// `2π Re(−i tr [g(H), Λ₂] ⟨Λ₁⟩_T)` with the same commutator scheme.
    pub fn commutator_term(&self, kernel: TimeAverageKernel) -> TraceValue {
        TraceValue::conductance(-I * self.contract(self.dk_coef(), |d| kernel.filter(d)))
    }

    /// Time average of the remainder trace: regularized minus commutator term.
    pub fn remainder(&self, kernel: TimeAverageKernel) -> TraceValue {
        let s = self.contract(|i, j| linalg::real(self.gp[i]) - self.dk[(i, j)], |d| kernel.filter(d));
        TraceValue::conductance(-I * s)
    }

    /// `2π Re(−i tr [g(H), Λ₂](⟨Λ₁⟩_T − Λ₁))`, the edge side of the bulk
    /// comparison.
    pub fn comparator(&self, kernel: TimeAverageKernel) -> TraceValue {
        let s = self.contract(self.dk_coef(), |d| kernel.filter(d) - 1.0);
        TraceValue::conductance(-I * s)
    }

    /// Raw complex `tr [g(H), Λ₂] Λ₁`.
    pub fn zero_trace_complex(&self) -> c64 {
        self.contract(self.dk_coef(), |_| linalg::real(1.0))
    }

    /// `|tr [g(H), Λ₂] Λ₁|` (raw, no `2π`).
    pub fn zero_trace(&self) -> f64 {
        self.zero_trace_complex().norm()
    }
}

/// Zero trace averaged over threaded boundary fluxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroTraceReport {
    pub twists: Vec<f64>,
    /// `|tr [g(H_θ), Λ₂] Λ₁|` for each twist.
    pub per_twist: Vec<f64>,
    /// Modulus of the twist-averaged complex trace.
    pub averaged: f64,
}

/// Evaluates the zero trace at `count` equally spaced boundary twists
/// `θ = m/count` (flux quanta) and averages the complex traces. A finite
/// cylinder quantizes the transverse momentum of edge states; averaging over
/// the threaded flux integrates the momentum instead and removes the
/// resulting discretization error.
pub fn zero_trace_twist_average(spec: &ModelSpec, setup: &EdgeSetup, count: usize, workers: Workers) -> Result<ZeroTraceReport> {
    if count == 0 {
        return Err(Error::InvalidArgument("twist count must be positive".into()));
    }
    let twists: Vec<f64> = (0..count).map(|m| m as f64 / count as f64).collect();
    let traces = exec::map(workers, &twists, |&theta| -> Result<c64> {
        let mut s = spec.clone();
        s.boundary_twist += theta;
        let hm = build_edge(&s)?;
        let sd = spectral::diagonalize(&hm)?;
        Ok(EdgeTraces::new(&hm, &sd, setup)?.zero_trace_complex())
    });
    let traces: Vec<c64> = traces.into_iter().collect::<Result<_>>()?;
    let mean: c64 = traces.iter().copied().sum::<c64>() / count as f64;
    Ok(ZeroTraceReport { twists, per_twist: traces.iter().map(|z| z.norm()).collect(), averaged: mean.norm() })
}

/// Unregularized edge conductance of a clean cylinder, one call.
pub fn edge_unregularized(spec: &ModelSpec, setup: &EdgeSetup) -> Result<TraceValue> {
    let hm = build_edge(spec)?;
    let sd = spectral::diagonalize(&hm)?;
    Ok(EdgeTraces::new(&hm, &sd, setup)?.unregularized())
}
