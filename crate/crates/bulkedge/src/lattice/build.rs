use std::f64::consts::PI;

use faer::{c64, Mat};

use super::{
    sample_disorder, Boundary, DisorderKind, HamiltonianMatrix, ModelSpec, Realization, WallKind, WallSpec,
};
use crate::error::{Error, Result};

fn smoothstep3(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Decreasing wall profile: `height` for `x1 <= -a-w`, zero for `x1 >= -a+w`.
pub fn wall_profile(wall: &WallSpec, x1: f64) -> f64 {
    let left = -wall.a - wall.width;
    wall.height * (1.0 - smoothstep3((x1 - left) / (2.0 * wall.width)))
}

/// Builds a torus (or any wall-free) Hamiltonian.
pub fn build_bulk(spec: &ModelSpec) -> Result<HamiltonianMatrix> {
    if spec.wall.is_some() {
        return Err(Error::InvalidModel("build_bulk: spec has a wall; use build_edge".into()));
    }
    spec.validate()?;
    let real = sample_disorder(&spec.disorder, &spec.geometry)?;
    Ok(assemble(spec, &real))
}

/// Builds a cylinder Hamiltonian with the confining wall of `spec.wall`.
pub fn build_edge(spec: &ModelSpec) -> Result<HamiltonianMatrix> {
    if spec.wall.is_none() {
        return Err(Error::InvalidModel("build_edge: spec has no wall".into()));
    }
    spec.validate()?;
    let real = sample_disorder(&spec.disorder, &spec.geometry)?;
    Ok(assemble(spec, &real))
}

pub fn build_model(spec: &ModelSpec) -> Result<HamiltonianMatrix> {
    if spec.wall.is_some() {
        build_edge(spec)
    } else {
        build_bulk(spec)
    }
}

/// Accumulated Landau-gauge phase (in flux quanta) carried by the x₂-bonds of
/// column `x1`. Differences between neighbouring columns give the plaquette
/// flux, so the magnetic wall only has to be integrated once.
fn column_phases(spec: &ModelSpec) -> Vec<f64> {
    let g = &spec.geometry;
    let (lo, hi) = g.coord_range(0);
    let phi = spec.flux.phi();
    let flux_at = |x1: i64| -> f64 {
        match &spec.wall {
            Some(w) if w.kind == WallKind::Magnetic => phi + wall_profile(w, x1 as f64),
            _ => phi,
        }
    };
    let mut beta = vec![0.0; (hi - lo + 1) as usize];
    let zero = (-lo) as usize;
    for x1 in 0..hi {
        let k = (x1 - lo) as usize;
        beta[k + 1] = beta[k] + flux_at(x1);
    }
    for x1 in (lo..0).rev() {
        let k = (x1 - lo) as usize;
        beta[k] = beta[k + 1] - flux_at(x1);
    }
    debug_assert_eq!(beta[zero], 0.0);
    beta
}

fn assemble(spec: &ModelSpec, real: &Realization) -> HamiltonianMatrix {
    let g = &spec.geometry;
    let n = g.dim();
    let (lo, _) = g.coord_range(0);
    let beta = column_phases(spec);
    let mut h = Mat::<c64>::zeros(n, n);

    let diag = 4.0 + spec.energy_shift;
    for s in 0..n {
        let (x1, _) = g.coord(s);
        let mut v = diag;
        if real.kind == DisorderKind::Electric {
            v += real.values[s];
        }
        if let Some(w) = &spec.wall {
            if w.kind == WallKind::Electric {
                v += wall_profile(w, x1 as f64);
            }
        }
        h[(s, s)] = c64::new(v, 0.0);
    }

    for i1 in 0..g.lx {
        for i2 in 0..g.ly {
            let a = g.index(i1, i2);
            let (x1, _) = g.coord(a);

            if i1 + 1 < g.lx || g.bc_x1 == Boundary::Periodic {
                let b = g.index((i1 + 1) % g.lx, i2);
                h[(b, a)] -= c64::new(1.0, 0.0);
                h[(a, b)] -= c64::new(1.0, 0.0);
            }
            if i2 + 1 < g.ly || g.bc_x2 == Boundary::Periodic {
                let b = g.index(i1, (i2 + 1) % g.ly);
                let mut theta = 2.0 * PI * beta[(x1 - lo) as usize];
                if real.kind == DisorderKind::Magnetic {
                    theta += real.values[a];
                }
                if i2 + 1 == g.ly {
                    theta += 2.0 * PI * spec.boundary_twist;
                }
                let t = c64::cis(theta);
                h[(b, a)] -= t;
                h[(a, b)] -= t.conj();
            }
        }
    }
    HamiltonianMatrix { matrix: h, geometry: g.clone(), spec_hash: spec.hash() }
}

/// Measured flux (in flux quanta, reduced to `(-1/2, 1/2]`) through every
/// plaquette, labelled by its lower-left corner.
pub fn plaquette_fluxes(hm: &HamiltonianMatrix) -> Vec<((i64, i64), f64)> {
    let g = &hm.geometry;
    let h = &hm.matrix;
    let hop = |to: usize, from: usize| -h[(to, from)];
    let mut out = Vec::new();
    for i1 in 0..g.lx {
        if i1 + 1 == g.lx && g.bc_x1 == Boundary::Open {
            continue;
        }
        for i2 in 0..g.ly {
            if i2 + 1 == g.ly && g.bc_x2 == Boundary::Open {
                continue;
            }
            let j1 = (i1 + 1) % g.lx;
            let j2 = (i2 + 1) % g.ly;
            let a = g.index(i1, i2);
            let b = g.index(j1, i2);
            let c = g.index(j1, j2);
            let d = g.index(i1, j2);
            let loop_phase = hop(b, a) * hop(c, b) * hop(d, c) * hop(a, d);
            let mut f = loop_phase.arg() / (2.0 * PI);
            if f <= -0.5 {
                f += 1.0;
            }
            out.push((g.coord(a), f));
        }
    }
    out
}
