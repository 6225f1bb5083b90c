//! Acceptance suite: eleven numerical criteria at fixed tolerances.
//!
//! Run with `cargo test -p bulkedge --test acceptance -- --nocapture` to see
//! one PASS/FAIL line per criterion. The whole suite takes several minutes.

use std::time::Instant;

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bulkedge::conductance::{
    chern_oracle, check_dec_hall, hall_double_commutator, hall_switch, pi_e_time_average, zero_trace_twist_average,
    CommutatorScheme, EdgeSetup, EdgeTraces, EnergyWindow, TraceWindow,
};
use bulkedge::ensemble::{
    derive_seed, execute_sweep, EdgeModel, KernelKind, Probe, ProbeSettings, SweepAxes, SweepPlan, AGGREGATE_FILE,
};
use bulkedge::lattice::{build_model, DisorderSpec, FluxSpec, Geometry, HamiltonianMatrix, ModelSpec, WallSpec};
use bulkedge::linalg;
use bulkedge::localization::{
    averaged_moment, central_site, combes_thomas_check, projector_kernel_decay, rates_nondecreasing, DecayOptions,
    EnergyBump, MomentProbe,
};
use bulkedge::spectral::{
    apply_function_hs, diagonalize, diagonalize_matrix, gershgorin, switch_matrix, HsGrid, HsVariant,
    QuasiAnalyticExtension, Smoothness, SpectralData, SwitchProfile, TimeAverageKernel,
};
use bulkedge::stats::{loglog_slope, percentile};
use bulkedge::Workers;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn torus(l: usize, flux: FluxSpec, disorder: DisorderSpec) -> (HamiltonianMatrix, SpectralData) {
    let hm = build_model(&ModelSpec::bulk(Geometry::torus(l, l), flux, disorder)).unwrap();
    let sd = diagonalize(&hm).unwrap();
    (hm, sd)
}

fn unit_switches(geometry: &Geometry) -> (Vec<f64>, Vec<f64>) {
    let unit = SwitchProfile::new(0.0, 1.0, Smoothness::Smoothstep5);
    (switch_matrix(&unit, 0, geometry).unwrap(), switch_matrix(&unit, 1, geometry).unwrap())
}

fn phi_third() -> FluxSpec {
    FluxSpec::new(1, 3)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (hm, sd) = torus(24, phi_third(), DisorderSpec::none());
    // Lowest spectral gap of the finite torus.
    let nb = sd.dim() / 3;
    let (below, above) = (sd.eigenvalues[nb - 1], sd.eigenvalues[nb]);
    let e = 0.5 * (below + above);
    let (l1, l2) = unit_switches(&hm.geometry);
    let window = TraceWindow::crossing_box(&hm.geometry, (0.0, 0.0));
    let p = sd.fermi_projector(e);
    let sigma = hall_switch(p.matrix.as_ref(), &l1, &l2, &window).unwrap().value;
    let chern = chern_oracle(&phi_third(), 1, 24).unwrap();
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        id: 1,
        name: "bulk quantization",
        pass: (0.97..=1.03).contains(&sigma) && chern.chern == 1 && secs < 60.0,
        detail: format!("gap ({below:.3}, {above:.3}), E = {e:.3}: hall_switch = {sigma:.5}, chern = {} (raw {:.6}), {secs:.1} s", chern.chern, chern.raw),
    }
}

fn random_projector(rng: &mut ChaCha8Rng, n: usize) -> (Mat<c64>, usize) {
    let a = Mat::from_fn(n, n, |_, _| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let h = &a + a.adjoint();
    let sd = diagonalize_matrix(h.as_ref(), String::new()).unwrap();
    let rank = rng.random_range(1..n);
    let v = sd.vectors().subcols(0, rank);
    (v * v.adjoint(), rank)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // dim 40, open along x1 so the periodic axis has room for the switch.
    let g = Geometry::cylinder(5, 8);
    let (l1, l2) = unit_switches(&g);
    let window = TraceWindow::crossing_box(&g, (0.0, 0.0));
    let (mut worst_dec, mut worst_alt) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let (p, _) = random_projector(&mut rng, g.dim());
        worst_dec = worst_dec.max(check_dec_hall(p.as_ref(), &l1, &l2).unwrap());
        let s = hall_switch(p.as_ref(), &l1, &l2, &window).unwrap().value;
        let d = hall_double_commutator(p.as_ref(), &l1, &l2, &window).unwrap().value;
        worst_alt = worst_alt.max((s - d).abs());
    }
    let (mut model_dec, mut model_alt) = (0.0f64, 0.0f64);
    for seed in 0..10 {
        let (hm, sd) = torus(12, phi_third(), DisorderSpec::electric(1.0, seed));
        let (l1, l2) = unit_switches(&hm.geometry);
        let window = TraceWindow::crossing_box(&hm.geometry, (0.0, 0.0));
        let p = sd.fermi_projector(2.9);
        model_dec = model_dec.max(check_dec_hall(p.matrix.as_ref(), &l1, &l2).unwrap());
        let s = hall_switch(p.matrix.as_ref(), &l1, &l2, &window).unwrap().value;
        let d = hall_double_commutator(p.matrix.as_ref(), &l1, &l2, &window).unwrap().value;
        model_alt = model_alt.max((s - d).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let dec = worst_dec.max(model_dec);
    let alt = worst_alt.max(model_alt);
    Outcome {
        id: 2,
        name: "definition equivalence",
        pass: dec < 1e-9 && alt < 1e-8 && secs < 10.0,
        detail: format!("max dec residual {dec:.2e}, max |switch - double commutator| {alt:.2e}, {secs:.1} s"),
    }
}

fn criterion_3() -> Outcome {
    let (hm, sd) = torus(6, phi_third(), DisorderSpec::electric(0.5, 3));
    let order = 5;
    let g = SwitchProfile::window(2.05, 3.22, Smoothness::Erf);
    let exact_g = sd.apply_real(|x| g.value(x));
    let exact_dg = sd.apply_real(|x| g.derivative(x));
    let (lo, hi) = gershgorin(hm.matrix.as_ref());
    let steps = [0.1, 0.05, 0.025, 0.0125];
    let mut errs = Vec::new();
    for &h in &steps {
        let grid = HsGrid { u_min: lo - 2.5, u_max: hi + 0.5, v_max: 1.0, h };
        let ext = QuasiAnalyticExtension::new(g, order, grid);
        let rg = apply_function_hs(hm.matrix.as_ref(), &ext, HsVariant::FirstOrder, false, Workers::all()).unwrap();
        let rd = apply_function_hs(hm.matrix.as_ref(), &ext, HsVariant::PrimitiveDerivativeThirdOrder, false, Workers::all()).unwrap();
        errs.push((
            linalg::max_abs_diff(rg.matrix.as_ref(), exact_g.as_ref()),
            linalg::max_abs_diff(rd.matrix.as_ref(), exact_dg.as_ref()),
        ));
    }
    let orders: Vec<(f64, f64)> = errs.windows(2).map(|w| ((w[0].0 / w[1].0).log2(), (w[0].1 / w[1].1).log2())).collect();
    let eg_all: Vec<f64> = errs.iter().map(|e| e.0).collect();
    let ed_all: Vec<f64> = errs.iter().map(|e| e.1).collect();
    let fitted = (loglog_slope(&steps, &eg_all), loglog_slope(&steps, &ed_all));
    let (eg, ed) = *errs.last().unwrap();
    Outcome {
        id: 3,
        name: "functional-calculus cross-check",
        pass: eg < 1e-6 && ed < 1e-5 && fitted.0.min(fitted.1) >= (order - 1) as f64,
        detail: format!(
            "finest h = {}: |g diff| {eg:.2e}, |g' diff| {ed:.2e}; fitted order {:.1}/{:.1}, per halving {:?}",
            steps[3],
            fitted.0,
            fitted.1,
            orders.iter().map(|o| format!("{:.1}/{:.1}", o.0, o.1)).collect::<Vec<_>>()
        ),
    }
}

fn criterion_4() -> Outcome {
    let energies: Vec<f64> = (0..7).map(|k| 2.35 + k as f64 * (3.40 - 2.35) / 6.0).collect();
    let mut worst = 0.0f64;
    let mut ranks_fixed = true;
    for seed in 0..10 {
        let (hm, sd) = torus(24, phi_third(), DisorderSpec::electric(0.5, derive_seed(4, seed)));
        let (l1, l2) = unit_switches(&hm.geometry);
        let window = TraceWindow::crossing_box(&hm.geometry, (0.0, 0.0));
        let mut vals = Vec::new();
        let mut ranks = Vec::new();
        for &e in &energies {
            let p = sd.fermi_projector(e);
            ranks.push(p.rank);
            vals.push(hall_switch(p.matrix.as_ref(), &l1, &l2, &window).unwrap().value);
        }
        ranks_fixed &= ranks.iter().all(|&r| r == ranks[0]);
        let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = worst.max(spread);
    }
    Outcome {
        id: 4,
        name: "plateau constancy",
        pass: worst < 2e-2,
        detail: format!("E in [2.35, 3.40], 10 seeds: max per-seed spread {worst:.2e} (gap open on all seeds: {ranks_fixed})"),
    }
}

/// Picks the band-tail window whose Fermi projector at the lower edge decays
/// fastest; returns it with a log of the candidates.
fn select_tail_window() -> (EnergyWindow, String) {
    let candidates = [(2.3, 3.3), (2.4, 3.4), (2.55, 3.5)];
    let opts = DecayOptions { d_max: Some(12), ..DecayOptions::default() };
    let spectra: Vec<_> = (0..3).map(|s| torus(24, phi_third(), DisorderSpec::electric(1.0, derive_seed(0, s)))).collect();
    let mut best = (f64::NEG_INFINITY, candidates[0]);
    let mut log = Vec::new();
    for &(lo, hi) in &candidates {
        let (mut rate, mut resid) = (f64::INFINITY, 0.0f64);
        for (hm, sd) in &spectra {
            let p = sd.fermi_projector(lo);
            let (fit, _) = projector_kernel_decay(p.matrix.as_ref(), &hm.geometry, &opts).unwrap();
            rate = rate.min(fit.rate);
            resid = resid.max(fit.fit_residual);
        }
        log.push(format!("[{lo}, {hi}] rate {rate:.2} resid {resid:.2}"));
        if rate > best.0 {
            best = (rate, (lo, hi));
        }
    }
    (EnergyWindow::new(best.1 .0, best.1 .1, "band tail"), log.join("; "))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let (window, selection) = select_tail_window();
    let dir = tempfile::tempdir().unwrap();
    let wall = WallSpec::electric(8.0, 10.0 * window.hi, 1.0);
    let a_grid = [4.0, 6.0, 8.0];
    let t_grid = [10.0, 100.0, 1000.0];
    let plan = SweepPlan {
        base: ModelSpec::bulk(Geometry::torus(24, 24), phi_third(), DisorderSpec::electric(1.0, 0)),
        edge: Some(EdgeModel { lx: 40, ly: 36, wall, scheme: CommutatorScheme::Cut { half_width: None } }),
        axes: SweepAxes { a: a_grid.to_vec(), horizon: t_grid.to_vec(), seed: (0..20).collect(), ..Default::default() },
        probes: vec![Probe::Hall, Probe::Edge],
        settings: ProbeSettings::new(window.clone()),
        base_seed: 0,
        output_dir: dir.path().to_path_buf(),
    };
    let report = execute_sweep(&plan, Workers(2)).unwrap().report;
    let secs = start.elapsed().as_secs_f64();
    let group = |a: f64, t: f64| {
        report
            .groups
            .iter()
            .find(|g| g.label.contains(&format!("a={a} T={t} ")))
            .unwrap_or_else(|| panic!("missing group a={a} T={t}"))
    };
    let mut table = Vec::new();
    let mut monotone = true;
    for &t in &t_grid {
        let devs: Vec<f64> = a_grid.iter().map(|&a| group(a, t).stats["abs_diff_edge_hall"].mean).collect();
        monotone &= devs.windows(2).all(|w| w[1] < w[0]);
        table.push(format!("T={t}: {}", devs.iter().map(|d| format!("{d:.4}")).collect::<Vec<_>>().join(" ")));
    }
    // In T the deviation may not grow by more than one standard error.
    let at8: Vec<_> = t_grid.iter().map(|&t| group(8.0, t).stats["abs_diff_edge_hall"]).collect();
    monotone &= at8.windows(2).all(|w| w[1].mean <= w[0].mean + w[1].stderr);
    let fin = group(8.0, 1000.0);
    let mean = fin.stats["abs_diff_edge_hall"].mean;
    let p90 = percentile(&fin.per_seed["abs_diff_edge_hall"], 0.9);
    Outcome {
        id: 5,
        name: "bulk-edge equality",
        pass: mean < 5e-2 && p90 < 1e-1 && monotone && secs < 1800.0,
        detail: format!(
            "window [{}, {}] (candidates: {selection}); a=8, T=1e3: mean |diff| {mean:.4}, p90 {p90:.4}; mean |diff| over a=4,6,8: {}; monotone {monotone}; {secs:.0} s",
            window.lo,
            window.hi,
            table.join(", ")
        ),
    }
}

fn criterion_6() -> Outcome {
    let ts = [10.0, 100.0, 1000.0, 10000.0];
    let cases = [("clean", 0.0, 0u64, (2.05, 3.22)), ("W=0.5 seed 0", 0.5, 0, (2.4, 3.4)), ("W=0.5 seed 1", 0.5, 1, (2.4, 3.4))];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, w, seed, (lo, hi)) in cases {
        let spec = ModelSpec::edge(
            Geometry::cylinder(48, 36),
            phi_third(),
            DisorderSpec::electric(w, seed),
            WallSpec::electric(8.0, 10.0 * hi, 1.0),
        );
        let hm = build_model(&spec).unwrap();
        let sd = diagonalize(&hm).unwrap();
        let tr = EdgeTraces::new(&hm, &sd, &EdgeSetup::standard(SwitchProfile::window(lo, hi, Smoothness::Smoothstep5))).unwrap();
        let r: Vec<f64> = ts.iter().map(|&t| tr.remainder(TimeAverageKernel::UniformWindow { t }).value.abs()).collect();
        let slope = loglog_slope(&ts, &r);
        pass &= (slope + 1.0).abs() <= 0.3;
        parts.push(format!("{name}: slope {slope:.3}"));
    }
    Outcome { id: 6, name: "remainder vanishing", pass, detail: parts.join(", ") }
}

fn criterion_7() -> Outcome {
    let ts = [10.0, 100.0, 1000.0, 10000.0];
    let e = 2.9;
    let mut sums = vec![0.0; ts.len()];
    let mut slopes = Vec::new();
    let mut min_spacing = f64::INFINITY;
    let seeds = 10;
    for seed in 0..seeds {
        let (hm, sd) = torus(24, phi_third(), DisorderSpec::electric(1.0, derive_seed(7, seed)));
        min_spacing = min_spacing.min(sd.eigenvalues.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min));
        let (l1, l2) = unit_switches(&hm.geometry);
        let vals: Vec<f64> =
            ts.iter().map(|&t| pi_e_time_average(&sd, e, &l1, &l2, TimeAverageKernel::UniformWindow { t }).norm()).collect();
        slopes.push(loglog_slope(&ts, &vals));
        for (s, v) in sums.iter_mut().zip(&vals) {
            *s += v / seeds as f64;
        }
    }
    let slope = loglog_slope(&ts, &sums);
    Outcome {
        id: 7,
        name: "Pi_E time-average decay",
        pass: (slope + 1.0).abs() <= 0.2 && min_spacing > 1e-10,
        detail: format!(
            "ensemble-mean slope {slope:.3}; per-seed slopes {:?}; min level spacing {min_spacing:.1e}",
            slopes.iter().map(|s| format!("{s:.2}")).collect::<Vec<_>>()
        ),
    }
}

fn criterion_8() -> Outcome {
    let (lo, hi) = (2.05, 3.22);
    let spec = ModelSpec::edge(Geometry::cylinder(48, 36), phi_third(), DisorderSpec::none(), WallSpec::electric(8.0, 10.0 * hi, 1.0));
    let setup = EdgeSetup::standard(SwitchProfile::window(lo, hi, Smoothness::Smoothstep5));
    let report = zero_trace_twist_average(&spec, &setup, 8, Workers(2)).unwrap();
    Outcome {
        id: 8,
        name: "zero trace",
        pass: report.averaged < 1e-4,
        detail: format!("8-twist average {:.2e} (single twist {:.2e})", report.averaged, report.per_twist[0]),
    }
}

fn criterion_9() -> Outcome {
    let etas = [0.2, 0.5, 1.0, 2.0];
    let mut pass = true;
    let mut parts = Vec::new();
    for seed in 0..5 {
        let (hm, sd) = torus(24, phi_third(), DisorderSpec::electric(2.0, derive_seed(9, seed)));
        let zs: Vec<c64> = etas.iter().map(|&eta| c64::new(sd.eigenvalues[0] - eta, 0.0)).collect();
        let rows = combes_thomas_check(hm.matrix.as_ref(), &sd, &hm.geometry, &zs, &DecayOptions::default()).unwrap();
        pass &= rates_nondecreasing(&rows);
        parts.push(rows.iter().map(|r| format!("{:.3}", r.fit.rate)).collect::<Vec<_>>().join("<="));
    }
    Outcome { id: 9, name: "Combes-Thomas monotonicity", pass, detail: format!("rates per seed: {}", parts.join(", ")) }
}

fn moment_growth(flux: FluxSpec, w: f64, seeds: u64, lo: f64, hi: f64) -> f64 {
    let horizons = [100.0, 1000.0, 10000.0];
    let runs: Vec<_> = (0..seeds).map(|s| torus(24, flux.clone(), DisorderSpec::electric(w, derive_seed(10, s)))).collect();
    let geometry = runs[0].0.geometry.clone();
    let probe = MomentProbe { m: 0.5, zeta: 1.0, bump: EnergyBump::new(lo, hi), chi0: vec![central_site(&geometry)] };
    let spectra: Vec<&SpectralData> = runs.iter().map(|r| &r.1).collect();
    let est = averaged_moment(&probe, &spectra, &geometry, &horizons).unwrap();
    est[2].mean / est[0].mean
}

fn criterion_10() -> Outcome {
    let localized = moment_growth(phi_third(), 2.0, 20, 3.2, 3.6);
    let clean = moment_growth(FluxSpec::new(1, 8), 0.0, 1, 0.69, 0.73);
    Outcome {
        id: 10,
        name: "localization probe separation",
        pass: localized < 1.2 && clean > 5.0,
        detail: format!("M(1e4)/M(1e2): band tail W=2, 20 seeds {localized:.3}, clean band centre {clean:.1}"),
    }
}

fn criterion_11() -> Outcome {
    let run = |workers: usize| {
        let dir = tempfile::tempdir().unwrap();
        let mut settings = ProbeSettings::new(EnergyWindow::new(2.3, 3.3, "tail"));
        settings.kernel = KernelKind::Exponential;
        let plan = SweepPlan {
            base: ModelSpec::bulk(Geometry::torus(12, 12), phi_third(), DisorderSpec::electric(1.0, 0)),
            edge: None,
            axes: SweepAxes { energy: vec![2.6, 3.0], horizon: vec![10.0, 100.0], seed: vec![0, 1, 2], ..Default::default() },
            probes: vec![Probe::Hall, Probe::Moments, Probe::Decay, Probe::Diagnostics],
            settings,
            base_seed: 11,
            output_dir: dir.path().to_path_buf(),
        };
        let outcome = execute_sweep(&plan, Workers(workers)).unwrap();
        (outcome.report.tasks_done, std::fs::read(dir.path().join(AGGREGATE_FILE)).unwrap())
    };
    let (n1, a1) = run(1);
    let (n8, a8) = run(8);
    Outcome {
        id: 11,
        name: "determinism across workers",
        pass: n1 == 12 && n8 == 12 && a1 == a8,
        detail: format!("{n1} and {n8} tasks done; aggregate.json identical: {}", a1 == a8),
    }
}

#[test]
fn acceptance_suite() {
    let criteria: [fn() -> Outcome; 11] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
    ];
    // ACCEPTANCE_ONLY=8,9 runs a subset while iterating.
    let only: Option<Vec<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    for (i, c) in criteria.into_iter().enumerate() {
        if only.as_ref().is_some_and(|o| !o.contains(&(i + 1))) {
            continue;
        }
        let o = c();
        println!("{} {:>2} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.name, o.detail);
        if !o.pass {
            failed.push(o.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
