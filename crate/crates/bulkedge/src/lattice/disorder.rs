use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DisorderKind, DisorderSpec, Distribution, Geometry};
use crate::error::{Error, Result};

/// One disorder draw, stored per site in the lattice's index order.
///
/// Electric: on-site potential `V(x)`. Magnetic: extra phase (radians) on the
/// x₂-bond leaving site `x` towards `x + e₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub kind: DisorderKind,
    pub values: Vec<f64>,
}

impl Realization {
    pub fn zeros(kind: DisorderKind, dim: usize) -> Self {
        Realization { kind, values: vec![0.0; dim] }
    }

    /// Little-endian dump: an 8-byte length header followed by the values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(kind: DisorderKind, mut r: R) -> Result<Self> {
        let mut head = [0u8; 8];
        r.read_exact(&mut head)?;
        let n = u64::from_le_bytes(head) as usize;
        let mut values = Vec::with_capacity(n);
        let mut buf = [0u8; 8];
        for _ in 0..n {
            r.read_exact(&mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        Ok(Realization { kind, values })
    }
}

fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

/// Uniform `[0, 1)` variate attached to the lattice point `(x1, x2)`.
///
/// Each coordinate owns its own ChaCha stream, so the value depends only on
/// `(seed, x1, x2)` and not on the sample size. A bulk torus and an edge
/// cylinder built from the same seed therefore share the disorder on their
/// common sites.
pub fn unit_draw(seed: u64, x1: i64, x2: i64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((zigzag(x1) << 32) ^ zigzag(x2));
    rng.random::<f64>()
}

pub fn sample_disorder(spec: &DisorderSpec, geometry: &Geometry) -> Result<Realization> {
    spec.validate()?;
    let dim = geometry.dim();
    if !spec.is_active() {
        return Ok(Realization::zeros(spec.kind, dim));
    }
    let shift = match spec.resolved_distribution() {
        Distribution::UniformUnit => 0.0,
        Distribution::UniformCentered => -0.5,
    };
    let scale = match spec.kind {
        DisorderKind::Electric => spec.strength,
        DisorderKind::Magnetic => 2.0 * std::f64::consts::PI * spec.strength,
        DisorderKind::None => return Err(Error::InvalidModel("unreachable disorder kind".into())),
    };
    let values = (0..dim)
        .map(|s| {
            let (x1, x2) = geometry.coord(s);
            scale * (unit_draw(spec.seed, x1, x2) + shift)
        })
        .collect();
    Ok(Realization { kind: spec.kind, values })
}
