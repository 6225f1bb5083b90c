//! Run configuration: defaults, JSON file, `--set` overrides, validation.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use bulkedge::conductance::{CommutatorScheme, EnergyWindow};
use bulkedge::ensemble::{KernelKind, Probe};
use bulkedge::lattice::{DisorderSpec, FluxSpec, Geometry, ModelSpec, WallSpec};
use bulkedge::localization::DecayOptions;
use bulkedge::spectral::{Smoothness, SwitchProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Bulk,
    Edge,
    Compare,
    Localize,
    Oracle,
    Sweep,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Bulk => "bulk",
            Subcommand::Edge => "edge",
            Subcommand::Compare => "compare",
            Subcommand::Localize => "localize",
            Subcommand::Oracle => "oracle",
            Subcommand::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Spatial and energy switch parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Switches {
    pub smoothness: Smoothness,
    pub lambda_half_width: f64,
    pub lambda1_center: f64,
    pub lambda2_center: f64,
}

impl Switches {
    pub fn lambda1(&self) -> SwitchProfile {
        SwitchProfile::new(self.lambda1_center, self.lambda_half_width, self.smoothness)
    }

    pub fn lambda2(&self) -> SwitchProfile {
        SwitchProfile::new(self.lambda2_center, self.lambda_half_width, self.smoothness)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSection {
    #[serde(rename = "Lx")]
    pub lx: usize,
    #[serde(rename = "Ly")]
    pub ly: usize,
    /// `a` is taken from `a_grid`.
    pub wall: WallSpec,
    pub scheme: CommutatorScheme,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizeSection {
    pub moment_m: f64,
    pub moment_zeta: f64,
    pub decay: DecayOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    /// Bulk model. Its disorder seed is the base seed of `seeds`.
    pub model: ModelSpec,
    pub window: EnergyWindow,
    pub switches: Switches,
    #[serde(rename = "E_grid")]
    pub e_grid: Vec<f64>,
    #[serde(rename = "T_grid")]
    pub t_grid: Vec<f64>,
    pub a_grid: Vec<f64>,
    /// Disorder strengths for `sweep`; empty means `model.disorder.strength`.
    #[serde(rename = "W_grid")]
    pub w_grid: Vec<f64>,
    /// Torus sizes for `sweep`; empty means `model.geometry.lx`.
    #[serde(rename = "L_grid")]
    pub l_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    pub kernel: KernelKind,
    pub edge: EdgeSection,
    /// Helffer–Sjöstrand extension order for the `bulk` cross-check.
    pub hs_order: usize,
    /// Run the Helffer–Sjöstrand cross-check of `g(H)` in `bulk` (with an
    /// erf-shaped `g`; slow beyond a few hundred sites).
    pub hs_check: bool,
    pub quadrature_nodes: usize,
    pub position_half: usize,
    pub localize: LocalizeSection,
    pub bz_grid: usize,
    /// Probes evaluated by `sweep`.
    pub probes: Vec<Probe>,
    pub format: Format,
    pub verbosity: u8,
}

impl RunConfig {
    pub fn defaults(subcommand: Subcommand) -> Self {
        let window = EnergyWindow::new(2.05, 3.22, "lowest gap");
        RunConfig {
            subcommand,
            model: ModelSpec::bulk(Geometry::torus(24, 24), FluxSpec::new(1, 3), DisorderSpec::none()),
            switches: Switches { smoothness: Smoothness::Smoothstep5, lambda_half_width: 1.0, lambda1_center: 0.0, lambda2_center: 0.0 },
            e_grid: vec![0.5 * (window.lo + window.hi)],
            t_grid: vec![10.0, 100.0, 1000.0],
            a_grid: vec![4.0, 6.0, 8.0],
            w_grid: Vec::new(),
            l_grid: Vec::new(),
            seeds: (0..5).collect(),
            kernel: KernelKind::Uniform,
            edge: EdgeSection {
                lx: 24,
                ly: 24,
                wall: WallSpec::electric(8.0, 10.0 * window.hi, 1.0),
                scheme: CommutatorScheme::Cut { half_width: None },
            },
            hs_order: 5,
            hs_check: false,
            quadrature_nodes: 9,
            position_half: 4,
            localize: LocalizeSection { moment_m: 0.5, moment_zeta: 1.0, decay: DecayOptions::default() },
            bz_grid: 24,
            probes: vec![Probe::Hall],
            format: Format::Csv,
            verbosity: 0,
            window,
        }
    }

    /// First 12 hex digits of the SHA-256 of the canonical JSON.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(text.as_bytes())[..6])
    }
}

/// Merges `overlay` into `base`, recursing into objects.
fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Applies `path.to.key=value`. The value is parsed as JSON, falling back to
/// a plain string.
fn apply_set(root: &mut Value, assignment: &str) -> Result<(), String> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| format!("--set '{assignment}': expected key=value"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        if key.is_empty() {
            return Err(format!("--set '{assignment}': empty key in path"));
        }
        let last = i + 1 == keys.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), value);
                    return Ok(());
                }
                // Missing keys are created so deserialization can name them.
                map.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = key.parse().map_err(|_| format!("--set '{assignment}': '{key}' indexes an array"))?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| format!("--set '{assignment}': index {idx} out of range ({len})"))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(format!("--set '{assignment}': '{}' is not an object", keys[..i].join("."))),
        };
    }
    Ok(())
}

/// Builds the resolved configuration. Errors name the offending field.
pub fn resolve(subcommand: Subcommand, file: Option<&str>, sets: &[String]) -> Result<RunConfig, String> {
    let mut root = serde_json::to_value(RunConfig::defaults(subcommand)).expect("defaults serialize");
    if let Some(text) = file {
        let user: Value = serde_json::from_str(text).map_err(|e| format!("config is not valid JSON: {e}"))?;
        if !user.is_object() {
            return Err("config must be a JSON object".into());
        }
        if let Some(s) = user.get("subcommand") {
            if s != &Value::String(subcommand.name().into()) {
                return Err(format!("subcommand: config says {s} but the command line says \"{}\"", subcommand.name()));
            }
        }
        merge(&mut root, user);
    }
    for s in sets {
        apply_set(&mut root, s)?;
    }
    if root.get("subcommand") != Some(&Value::String(subcommand.name().into())) {
        return Err("subcommand: cannot be overridden".into());
    }
    let cfg: RunConfig = serde_path_to_error::deserialize(root).map_err(|e| {
        let path = e.path().to_string();
        format!("{path}: {}", e.into_inner())
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

fn field(name: &'static str) -> impl Fn(bulkedge::Error) -> String {
    move |e| format!("{name}: {e}")
}

fn validate(cfg: &RunConfig) -> Result<(), String> {
    cfg.model.validate().map_err(field("model"))?;
    cfg.window.validate().map_err(field("window"))?;
    cfg.switches.lambda1().validate().map_err(field("switches"))?;
    let finite = |name: &str, xs: &[f64], positive: bool| -> Result<(), String> {
        if xs.iter().any(|x| !x.is_finite() || (positive && *x <= 0.0)) {
            return Err(format!("{name}: entries must be finite{}", if positive { " and positive" } else { "" }));
        }
        Ok(())
    };
    finite("E_grid", &cfg.e_grid, false)?;
    finite("T_grid", &cfg.t_grid, true)?;
    finite("a_grid", &cfg.a_grid, true)?;
    finite("W_grid", &cfg.w_grid, false)?;
    let needs = |name: &str, empty: bool| if empty { Err(format!("{name}: must not be empty for {}", cfg.subcommand.name())) } else { Ok(()) };
    match cfg.subcommand {
        Subcommand::Bulk => needs("E_grid", cfg.e_grid.is_empty())?,
        Subcommand::Edge | Subcommand::Compare => {
            needs("T_grid", cfg.t_grid.is_empty())?;
            needs("a_grid", cfg.a_grid.is_empty())?;
            cfg.window.check_wall(cfg.edge.wall.height).map_err(field("edge.wall.height"))?;
            for &a in &cfg.a_grid {
                edge_model(cfg, a).validate().map_err(field("edge"))?;
            }
        }
        Subcommand::Localize => {
            needs("E_grid", cfg.e_grid.is_empty())?;
            needs("T_grid", cfg.t_grid.is_empty())?;
        }
        Subcommand::Oracle => {
            if cfg.bz_grid < 2 {
                return Err("bz_grid: must be at least 2".into());
            }
        }
        Subcommand::Sweep => needs("probes", cfg.probes.is_empty())?,
    }
    if matches!(cfg.subcommand, Subcommand::Compare | Subcommand::Localize) {
        needs("seeds", cfg.seeds.is_empty())?;
    }
    if cfg.subcommand == Subcommand::Bulk && cfg.hs_check && cfg.hs_order < 2 {
        return Err("hs_order: must be at least 2".into());
    }
    Ok(())
}

/// Edge cylinder of the run with its wall at `a`.
pub fn edge_model(cfg: &RunConfig, a: f64) -> ModelSpec {
    let mut wall = cfg.edge.wall.clone();
    wall.a = a;
    let mut spec = ModelSpec::edge(Geometry::cylinder(cfg.edge.lx, cfg.edge.ly), cfg.model.flux.clone(), cfg.model.disorder.clone(), wall);
    spec.energy_shift = cfg.model.energy_shift;
    spec
}
