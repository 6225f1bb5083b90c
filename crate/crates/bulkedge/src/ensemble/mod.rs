//! Seeded disorder ensembles and parameter sweeps.
//!
//! A [`SweepPlan`] expands into tasks, one per point of the Cartesian product
//! of its axes. Every task has a stable key derived from the plan's physics
//! (not its axes or output location) and the point itself, so extending an
//! axis leaves existing keys, and therefore existing results, untouched.
//! Realizations are identified by the seed axis alone: all energies, times
//! and wall positions of one seed see the same disorder draw.

mod pair;
mod probes;
mod run;

pub use pair::{pair_bulk_edge, MatchedPair};
pub use run::{
    aggregate, execute_sweep, read_records, AggregateGroup, AggregateReport, RunRecord, Stat, SweepOutcome, TaskStatus,
    AGGREGATE_FILE, RECORDS_FILE,
};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conductance::{CommutatorScheme, EnergyWindow};
use crate::error::{Error, Result};
use crate::lattice::{Boundary, DisorderKind, Geometry, ModelSpec, WallSpec};
use crate::localization::DecayOptions;
use crate::spectral::Smoothness;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Probe {
    Hall,
    Edge,
    Moments,
    Decay,
    Diagnostics,
}

/// Sweep axes. An empty axis contributes the single value taken from the
/// base model or the probe settings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    #[serde(default, rename = "E")]
    pub energy: Vec<f64>,
    #[serde(default, rename = "W")]
    pub disorder: Vec<f64>,
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default, rename = "T")]
    pub horizon: Vec<f64>,
    #[serde(default)]
    pub seed: Vec<u64>,
    /// Linear size of the bulk torus.
    #[serde(default, rename = "L")]
    pub size: Vec<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    Uniform,
    Exponential,
}

/// Edge cylinder paired with the bulk torus of the plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeModel {
    #[serde(rename = "Lx")]
    pub lx: usize,
    #[serde(rename = "Ly")]
    pub ly: usize,
    pub wall: WallSpec,
    #[serde(default = "default_scheme")]
    pub scheme: CommutatorScheme,
}

fn default_scheme() -> CommutatorScheme {
    CommutatorScheme::Cut { half_width: None }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSettings {
    /// Support of `g′` for edge traces and of the moment bump.
    pub window: EnergyWindow,
    /// Fermi energy when the plan has no `E` axis; defaults to the window
    /// midpoint.
    #[serde(default)]
    pub energy: Option<f64>,
    /// Time horizon when the plan has no `T` axis.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub smoothness: Smoothness,
    /// Half width of the spatial switches.
    #[serde(default = "one")]
    pub switch_half_width: f64,
    #[serde(default)]
    pub kernel: KernelKind,
    /// Gauss–Legendre nodes for energy integrals over the window.
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
    /// Half side of the position-formula averaging box.
    #[serde(default = "default_position_half")]
    pub position_half: usize,
    #[serde(default = "default_moment_m")]
    pub moment_m: f64,
    #[serde(default = "one")]
    pub moment_zeta: f64,
    #[serde(default)]
    pub decay: DecayOptions,
}

fn default_horizon() -> f64 {
    1000.0
}
fn one() -> f64 {
    1.0
}
fn default_nodes() -> usize {
    9
}
fn default_position_half() -> usize {
    4
}
fn default_moment_m() -> f64 {
    0.5
}

impl ProbeSettings {
    pub fn new(window: EnergyWindow) -> Self {
        ProbeSettings {
            window,
            energy: None,
            horizon: default_horizon(),
            smoothness: Smoothness::default(),
            switch_half_width: 1.0,
            kernel: KernelKind::default(),
            quadrature_nodes: default_nodes(),
            position_half: default_position_half(),
            moment_m: default_moment_m(),
            moment_zeta: 1.0,
            decay: DecayOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    /// Bulk torus model; its disorder seed is replaced per task.
    pub base: ModelSpec,
    #[serde(default)]
    pub edge: Option<EdgeModel>,
    #[serde(default)]
    pub axes: SweepAxes,
    pub probes: Vec<Probe>,
    pub settings: ProbeSettings,
    #[serde(default)]
    pub base_seed: u64,
    pub output_dir: PathBuf,
}

/// One point of the sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskPoint {
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "W")]
    pub disorder: f64,
    pub a: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub seed: u64,
    #[serde(rename = "L")]
    pub size: usize,
}

impl TaskPoint {
    /// Label of the point with the seed removed; tasks sharing it form one
    /// ensemble.
    pub fn ensemble_label(&self) -> String {
        let a = self.a.map(|a| format!("{a}")).unwrap_or_else(|| "-".into());
        format!("E={} W={} a={} T={} L={}", self.energy, self.disorder, a, self.horizon, self.size)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub key: String,
    pub point: TaskPoint,
}

fn or_default<T: Clone>(axis: &[T], default: T) -> Vec<T> {
    if axis.is_empty() {
        vec![default]
    } else {
        axis.to_vec()
    }
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.base.wall.is_some() || self.base.geometry.bc_x1 != Boundary::Periodic || self.base.geometry.bc_x2 != Boundary::Periodic {
            return Err(Error::InvalidArgument("plan.base must be a wall-free torus".into()));
        }
        self.settings.window.validate()?;
        if self.probes.is_empty() {
            return Err(Error::InvalidArgument("plan.probes is empty".into()));
        }
        if self.probes.contains(&Probe::Edge) && self.edge.is_none() {
            return Err(Error::InvalidArgument("probe 'edge' needs plan.edge".into()));
        }
        if let Some(e) = &self.edge {
            self.settings.window.check_wall(e.wall.height)?;
        }
        if self.base.disorder.kind == DisorderKind::None && self.axes.disorder.iter().any(|&w| w != 0.0) {
            return Err(Error::InvalidArgument("axis W needs base.disorder.kind to be electric or magnetic".into()));
        }
        if !self.axes.a.is_empty() && self.edge.is_none() {
            return Err(Error::InvalidArgument("axis a needs plan.edge".into()));
        }
        for spec in self.models()? {
            spec.validate()?;
        }
        Ok(())
    }

    /// Hash of everything that defines the physics of a task other than its
    /// point.
    pub fn fingerprint(&self) -> String {
        let v = serde_json::json!({
            "base": self.base,
            "edge": self.edge,
            "probes": self.probes,
            "settings": self.settings,
            "base_seed": self.base_seed,
        });
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }

    pub fn tasks(&self) -> Vec<Task> {
        let fp = self.fingerprint();
        let energy = self.settings.energy.unwrap_or(0.5 * (self.settings.window.lo + self.settings.window.hi));
        let es = or_default(&self.axes.energy, energy);
        let ws = or_default(&self.axes.disorder, self.base.disorder.strength);
        let a_default = self.edge.as_ref().map(|e| e.wall.a);
        let as_: Vec<Option<f64>> = if self.axes.a.is_empty() { vec![a_default] } else { self.axes.a.iter().map(|&a| Some(a)).collect() };
        let ts = or_default(&self.axes.horizon, self.settings.horizon);
        let seeds = or_default(&self.axes.seed, 0);
        let ls = or_default(&self.axes.size, self.base.geometry.lx);
        let mut out = Vec::new();
        for &size in &ls {
            for &disorder in &ws {
                for &seed in &seeds {
                    for &a in &as_ {
                        for &energy in &es {
                            for &horizon in &ts {
                                let point = TaskPoint { energy, disorder, a, horizon, seed, size };
                                out.push(Task { key: task_key(&fp, &point), point });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Disorder seed of realization `seed` (depends on nothing else).
    pub fn realization_seed(&self, seed: u64) -> u64 {
        derive_seed(self.base_seed, seed)
    }

    /// Bulk torus for one point.
    pub fn bulk_model(&self, point: &TaskPoint) -> ModelSpec {
        let mut spec = self.base.clone();
        spec.geometry = Geometry { lx: point.size, ly: point.size, ..self.base.geometry.clone() };
        spec.disorder.strength = point.disorder;
        spec.disorder.seed = self.realization_seed(point.seed);
        spec
    }

    /// Edge cylinder for one point, if the plan has one.
    pub fn edge_model(&self, point: &TaskPoint) -> Option<ModelSpec> {
        let e = self.edge.as_ref()?;
        let mut wall = e.wall.clone();
        if let Some(a) = point.a {
            wall.a = a;
        }
        let mut spec = ModelSpec::edge(Geometry::cylinder(e.lx, e.ly), self.base.flux.clone(), self.base.disorder.clone(), wall);
        spec.energy_shift = self.base.energy_shift;
        spec.disorder.strength = point.disorder;
        spec.disorder.seed = self.realization_seed(point.seed);
        Some(spec)
    }

    fn models(&self) -> Result<Vec<ModelSpec>> {
        let mut out = Vec::new();
        for t in self.tasks() {
            out.push(self.bulk_model(&t.point));
            if let Some(e) = self.edge_model(&t.point) {
                out.push(e);
            }
        }
        Ok(out)
    }
}

fn task_key(fingerprint: &str, point: &TaskPoint) -> String {
    let mut h = Sha256::new();
    h.update(fingerprint.as_bytes());
    h.update(serde_json::to_string(point).expect("TaskPoint serializes").as_bytes());
    hex::encode(&h.finalize()[..12])
}

/// `hash(base_seed, seed)` folded to 64 bits.
pub fn derive_seed(base_seed: u64, seed: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(b"realization");
    h.update(base_seed.to_le_bytes());
    h.update(seed.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}
