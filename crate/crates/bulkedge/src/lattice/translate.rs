use std::f64::consts::PI;

use faer::c64;

use super::{Boundary, FluxSpec, Geometry};
use crate::error::{Error, Result};

/// Magnetic translation by the lattice vector `alpha` on a torus.
///
/// In the Landau gauge used by the builders the operator reads
/// `(U ψ)(x) = exp(i 2π φ α₁ x₂) ψ(x − α)`; it commutes with the clean
/// Hamiltonian whenever it is single valued on the torus.
pub fn magnetic_translate(state: &[c64], alpha: (i64, i64), flux: &FluxSpec, geometry: &Geometry) -> Result<Vec<c64>> {
    if geometry.bc_x1 != Boundary::Periodic || geometry.bc_x2 != Boundary::Periodic {
        return Err(Error::InvalidArgument("magnetic_translate needs a torus".into()));
    }
    if state.len() != geometry.dim() {
        return Err(Error::Dimension { expected: geometry.dim(), got: state.len() });
    }
    flux.validate()?;
    if (flux.p * geometry.lx as i64) % flux.q != 0 || (flux.p * alpha.0 * geometry.ly as i64) % flux.q != 0 {
        return Err(Error::InvalidArgument(format!(
            "translation by {:?} is not single valued on a {}x{} torus at flux {}/{}",
            alpha, geometry.lx, geometry.ly, flux.p, flux.q
        )));
    }
    let (lx, ly) = (geometry.lx as i64, geometry.ly as i64);
    let phi = flux.phi();
    let mut out = vec![c64::new(0.0, 0.0); state.len()];
    for (s, slot) in out.iter_mut().enumerate() {
        let i1 = (s / geometry.ly) as i64;
        let i2 = (s % geometry.ly) as i64;
        let src = geometry.index((i1 - alpha.0).rem_euclid(lx) as usize, (i2 - alpha.1).rem_euclid(ly) as usize);
        let (_, x2) = geometry.coord(s);
        *slot = state[src] * c64::cis(2.0 * PI * phi * (alpha.0 * x2) as f64);
    }
    Ok(out)
}
