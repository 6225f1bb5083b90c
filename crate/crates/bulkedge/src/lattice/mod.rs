//! Finite-lattice discretization of the bulk and edge magnetic operators.
//!
//! Sites are indexed row-major as `i1 * Ly + i2` with `0 <= i1 < Lx`,
//! `0 <= i2 < Ly`; the physical coordinate of a site is `i - origin_offset`
//! so that `x = 0` sits in the middle of the sample.

mod build;
mod disorder;
mod translate;

pub use build::{build_bulk, build_edge, build_model, plaquette_fluxes, wall_profile};
pub use disorder::{sample_disorder, unit_draw, Realization};
pub use translate::magnetic_translate;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Version tag written into every serialized [`ModelSpec`].
pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    #[serde(rename = "Lx")]
    pub lx: usize,
    #[serde(rename = "Ly")]
    pub ly: usize,
    pub bc_x1: Boundary,
    pub bc_x2: Boundary,
    /// Defaults to `(Lx/2, Ly/2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_offset: Option<(i64, i64)>,
}

impl Geometry {
    pub fn torus(lx: usize, ly: usize) -> Self {
        Geometry { lx, ly, bc_x1: Boundary::Periodic, bc_x2: Boundary::Periodic, origin_offset: None }
    }

    /// Open in x₁, periodic in x₂.
    pub fn cylinder(lx: usize, ly: usize) -> Self {
        Geometry { lx, ly, bc_x1: Boundary::Open, bc_x2: Boundary::Periodic, origin_offset: None }
    }

    pub fn dim(&self) -> usize {
        self.lx * self.ly
    }

    pub fn offset(&self) -> (i64, i64) {
        self.origin_offset.unwrap_or((self.lx as i64 / 2, self.ly as i64 / 2))
    }

    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.ly + i2
    }

    /// Integer coordinates `(x1, x2)` of a site.
    pub fn coord(&self, site: usize) -> (i64, i64) {
        let (o1, o2) = self.offset();
        ((site / self.ly) as i64 - o1, (site % self.ly) as i64 - o2)
    }

    /// Coordinate range `[min, max]` along an axis (0 or 1).
    pub fn coord_range(&self, axis: usize) -> (i64, i64) {
        let (o1, o2) = self.offset();
        match axis {
            0 => (-o1, self.lx as i64 - 1 - o1),
            _ => (-o2, self.ly as i64 - 1 - o2),
        }
    }

    pub fn boundary(&self, axis: usize) -> Boundary {
        if axis == 0 {
            self.bc_x1
        } else {
            self.bc_x2
        }
    }

    pub fn coords(&self) -> Vec<(i64, i64)> {
        (0..self.dim()).map(|s| self.coord(s)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lx < 4 || self.ly < 4 {
            return Err(Error::InvalidModel(format!(
                "geometry.Lx and geometry.Ly must be >= 4 (got {}x{})",
                self.lx, self.ly
            )));
        }
        if let Some((o1, o2)) = self.origin_offset {
            if o1 < 0 || o2 < 0 || o1 >= self.lx as i64 || o2 >= self.ly as i64 {
                return Err(Error::InvalidModel("geometry.origin_offset must lie inside the lattice".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gauge {
    #[default]
    Landau,
}

/// Flux per plaquette `p/q` in units of the flux quantum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSpec {
    pub p: i64,
    pub q: i64,
    #[serde(default)]
    pub gauge: Gauge,
}

impl FluxSpec {
    pub fn new(p: i64, q: i64) -> Self {
        FluxSpec { p, q, gauge: Gauge::Landau }
    }

    pub fn phi(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.q <= 0 {
            return Err(Error::InvalidModel(format!("flux.q must be positive (got {})", self.q)));
        }
        if self.p < 0 || self.p >= self.q {
            return Err(Error::InvalidModel(format!("flux p/q must satisfy 0 <= p/q < 1 (got {}/{})", self.p, self.q)));
        }
        if gcd(self.p, self.q) != 1 {
            return Err(Error::InvalidModel(format!("flux p/q must be reduced (gcd({}, {}) != 1)", self.p, self.q)));
        }
        Ok(())
    }
}

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisorderKind {
    #[default]
    None,
    Electric,
    Magnetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    /// Uniform on `[0, 1]`, scaled by `W`.
    UniformUnit,
    /// Uniform on `[-1/2, 1/2]`, scaled by `W`.
    UniformCentered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    #[serde(default)]
    pub kind: DisorderKind,
    #[serde(default)]
    pub strength: f64,
    /// `None` picks `uniform_unit` for electric and `uniform_centered` for
    /// magnetic disorder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<Distribution>,
    #[serde(default)]
    pub single_site_support: u32,
    #[serde(default)]
    pub seed: u64,
}

impl Default for DisorderSpec {
    fn default() -> Self {
        DisorderSpec::none()
    }
}

impl DisorderSpec {
    pub fn none() -> Self {
        DisorderSpec { kind: DisorderKind::None, strength: 0.0, distribution: None, single_site_support: 0, seed: 0 }
    }

    pub fn electric(strength: f64, seed: u64) -> Self {
        DisorderSpec { kind: DisorderKind::Electric, strength, seed, ..DisorderSpec::none() }
    }

    pub fn magnetic(strength: f64, seed: u64) -> Self {
        DisorderSpec { kind: DisorderKind::Magnetic, strength, seed, ..DisorderSpec::none() }
    }

    pub fn resolved_distribution(&self) -> Distribution {
        self.distribution.unwrap_or(match self.kind {
            DisorderKind::Magnetic => Distribution::UniformCentered,
            _ => Distribution::UniformUnit,
        })
    }

    /// Bounds `(-M1, M2)` of the single-site values.
    pub fn bounds(&self) -> (f64, f64) {
        if self.kind == DisorderKind::None {
            return (0.0, 0.0);
        }
        match self.resolved_distribution() {
            Distribution::UniformUnit => (0.0, self.strength),
            Distribution::UniformCentered => (-0.5 * self.strength, 0.5 * self.strength),
        }
    }

    pub fn is_active(&self) -> bool {
        self.kind != DisorderKind::None && self.strength != 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strength >= 0.0 && self.strength.is_finite()) {
            return Err(Error::InvalidModel(format!("disorder.strength must be finite and >= 0 (got {})", self.strength)));
        }
        if self.single_site_support != 0 {
            return Err(Error::InvalidModel("disorder.single_site_support: only radius 0 is implemented".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WallKind {
    Electric,
    Magnetic,
}

/// Confining wall centered near `x1 = -a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSpec {
    pub kind: WallKind,
    pub a: f64,
    /// `U₋` in energy units for electric walls, `B₋` in flux quanta per
    /// plaquette for magnetic walls.
    pub height: f64,
    pub width: f64,
}

impl WallSpec {
    pub fn electric(a: f64, height: f64, width: f64) -> Self {
        WallSpec { kind: WallKind::Electric, a, height, width }
    }

    pub fn magnetic(a: f64, height: f64, width: f64) -> Self {
        WallSpec { kind: WallKind::Magnetic, a, height, width }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default = "schema_version")]
    pub version: u32,
    pub geometry: Geometry,
    pub flux: FluxSpec,
    #[serde(default)]
    pub disorder: DisorderSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall: Option<WallSpec>,
    #[serde(default)]
    pub energy_shift: f64,
    /// Extra Aharonov–Bohm flux (in flux quanta) threaded through the periodic
    /// x₂ direction, carried by the seam bonds.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub boundary_twist: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn schema_version() -> u32 {
    MODEL_SCHEMA_VERSION
}

impl ModelSpec {
    pub fn bulk(geometry: Geometry, flux: FluxSpec, disorder: DisorderSpec) -> Self {
        ModelSpec { version: MODEL_SCHEMA_VERSION, geometry, flux, disorder, wall: None, energy_shift: 0.0, boundary_twist: 0.0 }
    }

    pub fn edge(geometry: Geometry, flux: FluxSpec, disorder: DisorderSpec, wall: WallSpec) -> Self {
        ModelSpec { version: MODEL_SCHEMA_VERSION, geometry, flux, disorder, wall: Some(wall), energy_shift: 0.0, boundary_twist: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MODEL_SCHEMA_VERSION {
            return Err(Error::InvalidModel(format!("version: unsupported schema version {}", self.version)));
        }
        self.geometry.validate()?;
        self.flux.validate()?;
        self.disorder.validate()?;
        if !self.energy_shift.is_finite() {
            return Err(Error::InvalidModel("energy_shift must be finite".into()));
        }
        if !self.boundary_twist.is_finite() {
            return Err(Error::InvalidModel("boundary_twist must be finite".into()));
        }
        if self.boundary_twist != 0.0 && self.geometry.bc_x2 != Boundary::Periodic {
            return Err(Error::InvalidModel("boundary_twist requires geometry.bc_x2 = periodic".into()));
        }
        let g = &self.geometry;
        if g.bc_x1 == Boundary::Periodic && (self.flux.p * g.lx as i64) % self.flux.q != 0 {
            return Err(Error::InvalidModel(format!(
                "flux not quantized on the torus: Lx*p/q = {}*{}/{} is not an integer (Landau gauge needs q | Lx)",
                g.lx, self.flux.p, self.flux.q
            )));
        }
        if let Some(w) = &self.wall {
            if g.bc_x1 != Boundary::Open {
                return Err(Error::InvalidModel("wall requires geometry.bc_x1 = open".into()));
            }
            if !(w.a >= 0.0 && w.width > 0.0 && w.height.is_finite()) {
                return Err(Error::InvalidModel("wall: need a >= 0, width > 0 and finite height".into()));
            }
            let (lo, _) = g.coord_range(0);
            if -w.a - w.width <= lo as f64 {
                return Err(Error::InvalidModel(format!(
                    "wall extends past the lattice: -a-w = {} but the left edge is x1 = {}",
                    -w.a - w.width,
                    lo
                )));
            }
        }
        Ok(())
    }

    /// Canonical JSON text; field order is fixed by the struct layout.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("ModelSpec serializes")
    }

    /// Stable hex digest of the canonical JSON.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Dense Hermitian Hamiltonian together with its lattice.
#[derive(Clone, Debug)]
pub struct HamiltonianMatrix {
    pub matrix: Mat<c64>,
    pub geometry: Geometry,
    pub spec_hash: String,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn site_coords(&self) -> Vec<(i64, i64)> {
        self.geometry.coords()
    }

    /// Digest of the matrix entries, used to key spectral caches.
    pub fn content_hash(&self) -> String {
        matrix_hash(&self.matrix)
    }
}

pub(crate) fn matrix_hash(m: &Mat<c64>) -> String {
    let mut h = Sha256::new();
    h.update((m.nrows() as u64).to_le_bytes());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            h.update(z.re.to_le_bytes());
            h.update(z.im.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}
