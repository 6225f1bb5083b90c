use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SweepPlan;
use crate::error::{Error, Result};
use crate::lattice::{sample_disorder, ModelSpec};

/// Bulk torus and edge cylinder built from the same disorder draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub seed: u64,
    pub bulk: ModelSpec,
    pub edge: ModelSpec,
    /// Sites present in both lattices.
    pub shared_sites: usize,
}

/// One matched pair per distinct `(seed, W, L, a)` of the plan. Disorder is a
/// function of the lattice coordinate, so the two realizations agree on the
/// overlap by construction; the overlap is checked anyway.
pub fn pair_bulk_edge(plan: &SweepPlan) -> Result<Vec<MatchedPair>> {
    if plan.edge.is_none() {
        return Err(Error::InvalidArgument("pairing needs plan.edge".into()));
    }
    let mut seen = BTreeMap::new();
    for t in plan.tasks() {
        let p = &t.point;
        let key = (p.seed, p.disorder.to_bits(), p.size, p.a.map(f64::to_bits));
        if seen.contains_key(&key) {
            continue;
        }
        let bulk = plan.bulk_model(p);
        let edge = plan.edge_model(p).expect("plan.edge checked above");
        let shared_sites = check_pair(&bulk, &edge)?;
        seen.insert(key, MatchedPair { seed: p.seed, bulk, edge, shared_sites });
    }
    Ok(seen.into_values().collect())
}

/// Verifies that the bulk window around the origin lies inside the edge
/// lattice and that both draws coincide there. Returns the overlap size.
fn check_pair(bulk: &ModelSpec, edge: &ModelSpec) -> Result<usize> {
    if bulk.flux != edge.flux {
        return Err(Error::InvalidModel("paired models have different flux".into()));
    }
    let (bg, eg) = (&bulk.geometry, &edge.geometry);
    for axis in 0..2 {
        let (blo, bhi) = bg.coord_range(axis);
        let (elo, ehi) = eg.coord_range(axis);
        let l = if axis == 0 { bg.lx } else { bg.ly } as i64;
        // The bulk traces only look at |x| < L/4.
        if -l / 4 < elo || l / 4 > ehi || blo > bhi {
            return Err(Error::InvalidModel(format!(
                "edge lattice does not cover the bulk trace window along axis {axis}: bulk |x| < {}, edge [{elo}, {ehi}]",
                l / 4
            )));
        }
    }
    let rb = sample_disorder(&bulk.disorder, bg)?;
    let re = sample_disorder(&edge.disorder, eg)?;
    let mut shared = 0;
    for (s, (x1, x2)) in bg.coords().into_iter().enumerate() {
        let (elo1, ehi1) = eg.coord_range(0);
        let (elo2, ehi2) = eg.coord_range(1);
        if x1 < elo1 || x1 > ehi1 || x2 < elo2 || x2 > ehi2 {
            continue;
        }
        let (o1, o2) = eg.offset();
        let t = eg.index((x1 + o1) as usize, (x2 + o2) as usize);
        if rb.values[s].to_bits() != re.values[t].to_bits() {
            return Err(Error::InvalidModel(format!("disorder differs at shared site ({x1}, {x2})")));
        }
        shared += 1;
    }
    Ok(shared)
}
