//! Subcommand implementations. Each returns a table plus warnings.

use std::path::Path;

use serde_json::{json, Value};

use bulkedge::conductance::{
    chern_oracle, check_dec_hall, hall_double_commutator, hall_position_local, hall_switch, EdgeSetup, EdgeTraces, TraceValue,
    TraceWindow,
};
use bulkedge::ensemble::{execute_sweep, EdgeModel, KernelKind, Probe, ProbeSettings, SweepAxes, SweepPlan};
use bulkedge::exec;
use bulkedge::lattice::{build_model, DisorderSpec, ModelSpec};
use bulkedge::linalg;
use bulkedge::localization::{central_site, projector_kernel_decay, EnergyBump, MomentProbe};
use bulkedge::spectral::{
    self, apply_function_hs, gershgorin, switch_matrix, HsGrid, HsVariant, QuasiAnalyticExtension, Smoothness, SwitchProfile, TimeAverageKernel,
};
use bulkedge::{Result, Workers};

use crate::config::{edge_model, RunConfig, Subcommand};

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub warnings: Vec<String>,
    /// Scalars reported once per run.
    pub diagnostics: Vec<(String, Value)>,
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new(), warnings: Vec::new(), diagnostics: Vec::new() }
    }

    fn trace(&mut self, what: &str, v: TraceValue) -> f64 {
        if v.flagged() {
            self.warnings.push(format!("{what}: imaginary part {:.3e}", v.imag));
        }
        v.value
    }
}

fn kernel(kind: KernelKind, t: f64) -> TimeAverageKernel {
    match kind {
        KernelKind::Uniform => TimeAverageKernel::UniformWindow { t },
        KernelKind::Exponential => TimeAverageKernel::Exponential { t },
    }
}

fn energy_switch(cfg: &RunConfig) -> SwitchProfile {
    SwitchProfile::window(cfg.window.lo, cfg.window.hi, cfg.switches.smoothness)
}

fn with_seed(spec: &ModelSpec, seed: u64) -> ModelSpec {
    let mut s = spec.clone();
    s.disorder = DisorderSpec { seed, ..s.disorder.clone() };
    s
}

pub fn run(cfg: &RunConfig, out_dir: &Path, workers: Workers) -> Result<Table> {
    match cfg.subcommand {
        Subcommand::Bulk => bulk(cfg, workers),
        Subcommand::Edge => edge(cfg, workers),
        Subcommand::Compare => compare(cfg, out_dir, workers),
        Subcommand::Localize => localize(cfg, workers),
        Subcommand::Oracle => oracle(cfg),
        Subcommand::Sweep => sweep(cfg, out_dir, workers),
    }
}

fn bulk(cfg: &RunConfig, workers: Workers) -> Result<Table> {
    let hm = build_model(&cfg.model)?;
    let sd = spectral::diagonalize(&hm)?;
    let l1 = switch_matrix(&cfg.switches.lambda1(), 0, &hm.geometry)?;
    let l2 = switch_matrix(&cfg.switches.lambda2(), 1, &hm.geometry)?;
    let window = TraceWindow::crossing_box(&hm.geometry, (cfg.switches.lambda1_center, cfg.switches.lambda2_center));
    let mut t = Table::new(vec![
        "E",
        "rank",
        "sigma_hall",
        "sigma_hall_alt1",
        "sigma_hall_alt2",
        "dec_hall_residual",
        "switch_alt1_diff",
        "sigma_hall_imag",
        "near_degenerate",
    ]);
    for &e in &cfg.e_grid {
        let p = sd.fermi_projector(e);
        if p.near_degenerate {
            t.warnings.push(format!("E = {e}: eigenvalue within tolerance, projector ill-defined"));
        }
        let pm = p.matrix.as_ref();
        let s = hall_switch(pm, &l1, &l2, &window)?;
        let alt1 = hall_double_commutator(pm, &l1, &l2, &window)?;
        let alt2 = hall_position_local(pm, &hm.geometry, cfg.position_half)?;
        if alt2.touches_boundary {
            t.warnings.push(format!("E = {e}: position-formula box touches the lattice boundary"));
        }
        let res = check_dec_hall(pm, &l1, &l2)?;
        let sv = t.trace(&format!("sigma_hall at E = {e}"), s);
        t.rows.push(vec![
            json!(e),
            json!(p.rank),
            json!(sv),
            json!(alt1.value),
            json!(alt2.value),
            json!(res),
            json!((s.value - alt1.value).abs()),
            json!(s.imag),
            json!(p.near_degenerate),
        ]);
    }
    if cfg.hs_check {
        // The extension needs a C^∞ switch, so the check uses the erf profile.
        let g = SwitchProfile::window(cfg.window.lo, cfg.window.hi, Smoothness::Erf);
        let (lo, hi) = gershgorin(hm.matrix.as_ref());
        let grid = HsGrid { u_min: lo - 2.5, u_max: hi + 0.5, v_max: 1.0, h: 0.025 };
        let ext = QuasiAnalyticExtension::new(g, cfg.hs_order, grid);
        let hs = apply_function_hs(hm.matrix.as_ref(), &ext, HsVariant::FirstOrder, true, workers)?;
        let exact = sd.apply_real(|x| g.value(x));
        let diff = linalg::max_abs_diff(hs.matrix.as_ref(), exact.as_ref());
        if hs.flagged {
            t.warnings.push(format!("Helffer-Sjostrand quadrature error estimate {:?} above tolerance", hs.estimated_error));
        }
        t.diagnostics.push(("hs_g_max_diff".into(), json!(diff)));
        t.diagnostics.push(("hs_points".into(), json!(hs.points)));
    }
    Ok(t)
}

fn edge_setup(cfg: &RunConfig) -> EdgeSetup {
    EdgeSetup {
        g: energy_switch(cfg),
        lambda1: cfg.switches.lambda1(),
        lambda2: cfg.switches.lambda2(),
        scheme: cfg.edge.scheme.clone(),
    }
}

fn edge(cfg: &RunConfig, workers: Workers) -> Result<Table> {
    let setup = edge_setup(cfg);
    let traces = exec::map(workers, &cfg.a_grid, |&a| -> Result<EdgeTraces> {
        let hm = build_model(&edge_model(cfg, a))?;
        let sd = spectral::diagonalize(&hm)?;
        EdgeTraces::new(&hm, &sd, &setup)
    });
    let mut t = Table::new(vec![
        "a",
        "T",
        "sigma_edge_reg",
        "commutator_term",
        "remainder",
        "sigma_edge_unreg",
        "zero_trace",
        "max_imag",
    ]);
    for (&a, tr) in cfg.a_grid.iter().zip(traces) {
        let tr = tr?;
        let unreg = tr.unregularized();
        let zero = tr.zero_trace();
        for &time in &cfg.t_grid {
            let k = kernel(cfg.kernel, time);
            let reg = tr.regularized(k);
            let com = tr.commutator_term(k);
            let rem = tr.remainder(k);
            let max_imag = [reg, com, rem, unreg].iter().map(|v| v.imag.abs()).fold(0.0, f64::max);
            let label = format!("a = {a}, T = {time}");
            let reg_v = t.trace(&format!("sigma_edge_reg at {label}"), reg);
            t.rows.push(vec![
                json!(a),
                json!(time),
                json!(reg_v),
                json!(com.value),
                json!(rem.value),
                json!(unreg.value),
                json!(zero),
                json!(max_imag),
            ]);
        }
    }
    Ok(t)
}

fn plan_settings(cfg: &RunConfig) -> ProbeSettings {
    let mut s = ProbeSettings::new(cfg.window.clone());
    s.smoothness = cfg.switches.smoothness;
    s.switch_half_width = cfg.switches.lambda_half_width;
    s.kernel = cfg.kernel;
    s.quadrature_nodes = cfg.quadrature_nodes;
    s.position_half = cfg.position_half;
    s.moment_m = cfg.localize.moment_m;
    s.moment_zeta = cfg.localize.moment_zeta;
    s.decay = cfg.localize.decay;
    if let [e] = cfg.e_grid[..] {
        s.energy = Some(e);
    }
    s
}

fn plan(cfg: &RunConfig, out_dir: &Path, probes: Vec<Probe>, axes: SweepAxes) -> SweepPlan {
    let edge = probes.contains(&Probe::Edge).then(|| EdgeModel {
        lx: cfg.edge.lx,
        ly: cfg.edge.ly,
        wall: cfg.edge.wall.clone(),
        scheme: cfg.edge.scheme.clone(),
    });
    SweepPlan {
        base: cfg.model.clone(),
        edge,
        axes,
        probes,
        settings: plan_settings(cfg),
        base_seed: cfg.model.disorder.seed,
        output_dir: out_dir.join(format!("{}_{}.runs", cfg.subcommand.name(), cfg.hash())),
    }
}

fn compare(cfg: &RunConfig, out_dir: &Path, workers: Workers) -> Result<Table> {
    let axes = SweepAxes { a: cfg.a_grid.clone(), horizon: cfg.t_grid.clone(), seed: cfg.seeds.clone(), ..Default::default() };
    let plan = plan(cfg, out_dir, vec![Probe::Hall, Probe::Edge], axes);
    plan.validate()?;
    let outcome = execute_sweep(&plan, workers)?;
    let mut t = Table::new(vec!["seed", "a", "T", "sigma_hall", "sigma_edge_reg", "abs_diff", "remainder"]);
    for g in &outcome.report.groups {
        t.warnings.extend(g.flags.iter().map(|f| format!("{}: {f}", g.label)));
    }
    for (key, why) in &outcome.report.failures {
        t.warnings.push(format!("task {key} failed: {why}"));
    }
    let records = bulkedge::ensemble::read_records(&plan.output_dir.join(bulkedge::ensemble::RECORDS_FILE))?;
    for task in plan.tasks() {
        let Some(res) = records.iter().rev().find(|r| r.key == task.key).and_then(|r| r.result.as_ref()) else { continue };
        let get = |k: &str| json!(res.values.get(k).copied());
        t.rows.push(vec![
            json!(task.point.seed),
            json!(task.point.a),
            json!(task.point.horizon),
            get("sigma_hall_window"),
            get("sigma_edge_reg"),
            get("abs_diff_edge_hall"),
            get("remainder"),
        ]);
    }
    if let Some(g) = outcome.report.groups.iter().find(|g| g.stats.contains_key("abs_diff_edge_hall")) {
        let s = &g.stats["abs_diff_edge_hall"];
        t.diagnostics.push(("first_group".into(), json!(g.label)));
        t.diagnostics.push(("mean_abs_diff".into(), json!(s.mean)));
    }
    t.diagnostics.push(("run_dir".into(), json!(plan.output_dir)));
    Ok(t)
}

fn localize(cfg: &RunConfig, workers: Workers) -> Result<Table> {
    let per_seed = exec::map(workers, &cfg.seeds, |&seed| -> Result<Vec<Vec<Value>>> {
        let hm = build_model(&with_seed(&cfg.model, bulkedge::ensemble::derive_seed(cfg.model.disorder.seed, seed)))?;
        let sd = spectral::diagonalize(&hm)?;
        let probe = MomentProbe {
            m: cfg.localize.moment_m,
            zeta: cfg.localize.moment_zeta,
            bump: EnergyBump::new(cfg.window.lo, cfg.window.hi),
            chi0: vec![central_site(&hm.geometry)],
        };
        let moments = probe.averaged(&sd, &hm.geometry, &cfg.t_grid)?;
        let mut rows = Vec::new();
        for &e in &cfg.e_grid {
            let p = sd.fermi_projector(e);
            let (fit, _) = projector_kernel_decay(p.matrix.as_ref(), &hm.geometry, &cfg.localize.decay)?;
            for (&time, m) in cfg.t_grid.iter().zip(&moments) {
                rows.push(vec![
                    json!(seed),
                    json!(e),
                    json!(time),
                    json!(m),
                    json!(fit.rate),
                    json!(fit.prefactor),
                    json!(fit.zeta),
                    json!(fit.fit_residual),
                ]);
            }
        }
        Ok(rows)
    });
    let mut t = Table::new(vec!["seed", "E", "T", "moment_avg", "decay_rate", "decay_prefactor", "decay_zeta", "decay_residual"]);
    for rows in per_seed {
        t.rows.extend(rows?);
    }
    Ok(t)
}

fn oracle(cfg: &RunConfig) -> Result<Table> {
    let flux = &cfg.model.flux;
    let mut t = Table::new(vec!["p", "q", "bands_below", "chern", "raw", "min_gap"]);
    for nb in 1..=flux.q as usize {
        let r = chern_oracle(flux, nb, cfg.bz_grid)?;
        t.rows.push(vec![json!(flux.p), json!(flux.q), json!(nb), json!(r.chern), json!(r.raw), json!(r.min_gap)]);
    }
    Ok(t)
}

fn sweep(cfg: &RunConfig, out_dir: &Path, workers: Workers) -> Result<Table> {
    let axes = SweepAxes {
        energy: if cfg.e_grid.len() > 1 { cfg.e_grid.clone() } else { Vec::new() },
        disorder: cfg.w_grid.clone(),
        a: if cfg.probes.contains(&Probe::Edge) { cfg.a_grid.clone() } else { Vec::new() },
        horizon: cfg.t_grid.clone(),
        seed: cfg.seeds.clone(),
        size: cfg.l_grid.clone(),
    };
    let plan = plan(cfg, out_dir, cfg.probes.clone(), axes);
    plan.validate()?;
    let outcome = execute_sweep(&plan, workers)?;
    let mut t = Table::new(vec!["E", "W", "a", "T", "L", "quantity", "mean", "stderr", "min", "max", "n"]);
    let tasks = plan.tasks();
    for g in &outcome.report.groups {
        let Some(task) = tasks.iter().find(|t| t.point.ensemble_label() == g.label) else { continue };
        let p = &task.point;
        for (name, s) in &g.stats {
            t.rows.push(vec![
                json!(p.energy),
                json!(p.disorder),
                json!(p.a),
                json!(p.horizon),
                json!(p.size),
                json!(name),
                json!(s.mean),
                json!(s.stderr),
                json!(s.min),
                json!(s.max),
                json!(s.n),
            ]);
        }
        t.warnings.extend(g.flags.iter().map(|f| format!("{}: {f}", g.label)));
    }
    for (key, why) in &outcome.report.failures {
        t.warnings.push(format!("task {key} failed: {why}"));
    }
    t.diagnostics.push(("run_dir".into(), json!(plan.output_dir)));
    t.diagnostics.push(("tasks_computed".into(), json!(outcome.computed)));
    Ok(t)
}
