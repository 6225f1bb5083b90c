//! Wall-position sweeps for a fixed disorder realization.

use serde::{Deserialize, Serialize};

use super::edge::{EdgeSetup, EdgeTraces};
use crate::error::{Error, Result};
use crate::exec::{self, Workers};
use crate::lattice::{build_edge, ModelSpec};
use crate::spectral::{self, TimeAverageKernel};

/// Edge traces at one `(a, T)` point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AConvergenceRow {
    pub a: f64,
    pub t: f64,
    pub sigma_edge_reg: f64,
    pub commutator_term: f64,
    pub remainder: f64,
    /// `2π Re(−i tr [g(H_a), Λ₂](⟨Λ₁⟩_T − Λ₁))`.
    pub edge_comparator: f64,
    /// `|edge_comparator − bulk|` when a bulk reference was supplied.
    pub deviation: Option<f64>,
    pub max_imag: f64,
}

/// Evaluates the edge traces on `base` with its wall moved to each `a` in
/// `a_grid` and every kernel in `kernels`. Disorder is keyed by lattice
/// coordinate, so every `a` sees the same realization. `bulk_reference`, if
/// given, holds the bulk comparator for each kernel (same order).
pub fn convergence_in_a(
    base: &ModelSpec,
    setup: &EdgeSetup,
    a_grid: &[f64],
    kernels: &[TimeAverageKernel],
    bulk_reference: Option<&[f64]>,
    workers: Workers,
) -> Result<Vec<AConvergenceRow>> {
    let wall = base.wall.as_ref().ok_or_else(|| Error::InvalidModel("convergence_in_a needs an edge model".into()))?;
    if let Some(r) = bulk_reference {
        if r.len() != kernels.len() {
            return Err(Error::Dimension { expected: kernels.len(), got: r.len() });
        }
    }
    let specs: Vec<ModelSpec> = a_grid
        .iter()
        .map(|&a| {
            let mut s = base.clone();
            s.wall = Some(crate::lattice::WallSpec { a, ..wall.clone() });
            s.validate().map(|_| s)
        })
        .collect::<Result<_>>()?;

    let per_a = exec::map(workers, &specs, |s| -> Result<Vec<AConvergenceRow>> {
        let hm = build_edge(s)?;
        let sd = spectral::diagonalize(&hm)?;
        let tr = EdgeTraces::new(&hm, &sd, setup)?;
        let a = s.wall.as_ref().map(|w| w.a).unwrap_or_default();
        Ok(kernels
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let reg = tr.regularized(k);
                let com = tr.commutator_term(k);
                let rem = tr.remainder(k);
                let cmp = tr.comparator(k);
                let max_imag = [reg.imag, com.imag, rem.imag, cmp.imag].iter().fold(0.0f64, |m, v| m.max(v.abs()));
                AConvergenceRow {
                    a,
                    t: k.horizon(),
                    sigma_edge_reg: reg.value,
                    commutator_term: com.value,
                    remainder: rem.value,
                    edge_comparator: cmp.value,
                    deviation: bulk_reference.map(|r| (cmp.value - r[i]).abs()),
                    max_imag,
                }
            })
            .collect())
    });
    let mut rows = Vec::new();
    for r in per_a {
        rows.extend(r?);
    }
    Ok(rows)
}
