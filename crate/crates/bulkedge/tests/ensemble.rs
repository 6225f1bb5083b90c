use std::path::Path;

use bulkedge::conductance::{CommutatorScheme, EnergyWindow};
use bulkedge::ensemble::{
    derive_seed, execute_sweep, pair_bulk_edge, read_records, AggregateGroup, EdgeModel, Probe, ProbeSettings, SweepAxes,
    SweepPlan, TaskStatus, RECORDS_FILE,
};
use bulkedge::lattice::{sample_disorder, DisorderSpec, FluxSpec, Geometry, ModelSpec, WallSpec};
use bulkedge::Workers;

fn plan(dir: &Path, w: f64, seeds: Vec<u64>) -> SweepPlan {
    SweepPlan {
        base: ModelSpec::bulk(Geometry::torus(9, 9), FluxSpec::new(1, 3), DisorderSpec::electric(w, 0)),
        edge: None,
        axes: SweepAxes { seed: seeds, ..Default::default() },
        probes: vec![Probe::Hall, Probe::Moments],
        settings: ProbeSettings::new(EnergyWindow::new(2.0, 3.4, "gap")),
        base_seed: 5,
        output_dir: dir.to_path_buf(),
    }
}

fn only_group(groups: &[AggregateGroup]) -> &AggregateGroup {
    assert_eq!(groups.len(), 1);
    &groups[0]
}

#[test]
fn single_seed_has_zero_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let report = execute_sweep(&plan(dir.path(), 1.0, vec![0]), Workers(1)).unwrap().report;
    let g = only_group(&report.groups);
    for (name, stat) in &g.stats {
        assert_eq!(stat.n, 1, "{name}");
        assert_eq!(stat.stderr, 0.0, "{name}");
        assert_eq!(stat.min, stat.max);
    }
}

#[test]
fn stderr_is_the_sample_standard_error() {
    let dir = tempfile::tempdir().unwrap();
    let report = execute_sweep(&plan(dir.path(), 3.0, (0..6).collect()), Workers(1)).unwrap().report;
    let g = only_group(&report.groups);
    for (name, values) in &g.per_seed {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let stat = &g.stats[name];
        assert!((stat.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0), "{name}");
        assert!((stat.stderr - (var / n).sqrt()).abs() <= 1e-12 * stat.stderr.max(1e-300), "{name}");
    }
}

#[test]
fn stderr_shrinks_like_inverse_root_n() {
    let dir = tempfile::tempdir().unwrap();
    let small = execute_sweep(&plan(dir.path(), 3.0, (0..5).collect()), Workers(1)).unwrap().report;
    // Same directory: the first five seeds are reused.
    let large = execute_sweep(&plan(dir.path(), 3.0, (0..20).collect()), Workers(1)).unwrap();
    assert_eq!(large.computed, 15);
    let s5 = only_group(&small.groups).stats["moment_avg"].stderr;
    let s20 = only_group(&large.report.groups).stats["moment_avg"].stderr;
    let ratio = s5 / s20;
    assert!((ratio - 2.0).abs() < 0.5, "{s5} / {s20} = {ratio}");
}

#[test]
fn rerun_computes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let p = plan(dir.path(), 1.0, vec![0, 1]);
    let first = execute_sweep(&p, Workers(1)).unwrap();
    assert_eq!(first.computed, 2);
    let second = execute_sweep(&p, Workers(1)).unwrap();
    assert_eq!(second.computed, 0);
    assert_eq!(first.report, second.report);
    let records = read_records(&dir.path().join(RECORDS_FILE)).unwrap();
    assert_eq!(records.len(), 2);
    assert!(records.iter().all(|r| r.status == TaskStatus::Done));
}

#[test]
fn task_keys_survive_axis_extension() {
    let dir = tempfile::tempdir().unwrap();
    let short = plan(dir.path(), 1.0, vec![0, 1]).tasks();
    let long = plan(dir.path(), 1.0, vec![0, 1, 2]).tasks();
    for t in &short {
        assert!(long.iter().any(|u| u.key == t.key && u.point == t.point));
    }
    // The output location is not part of the physics.
    let elsewhere = plan(Path::new("/nonexistent"), 1.0, vec![0, 1]).tasks();
    assert_eq!(short, elsewhere);
}

#[test]
fn realization_seed_depends_only_on_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let p = plan(dir.path(), 1.0, vec![3]);
    assert_eq!(p.realization_seed(3), derive_seed(5, 3));
    assert_ne!(derive_seed(5, 3), derive_seed(5, 4));
    assert_ne!(derive_seed(5, 3), derive_seed(6, 3));
    let t = &p.tasks()[0];
    assert_eq!(p.bulk_model(&t.point).disorder.seed, derive_seed(5, 3));
}

fn edge_plan(dir: &Path, w: f64) -> SweepPlan {
    let mut p = plan(dir, w, vec![0, 1]);
    p.base.geometry = Geometry::torus(12, 12);
    p.edge = Some(EdgeModel {
        lx: 18,
        ly: 12,
        wall: WallSpec::electric(4.0, 40.0, 1.0),
        scheme: CommutatorScheme::Cut { half_width: None },
    });
    p.probes = vec![Probe::Hall, Probe::Edge];
    p
}

#[test]
fn paired_realizations_agree_on_shared_sites() {
    let dir = tempfile::tempdir().unwrap();
    let p = edge_plan(dir.path(), 2.0);
    let pairs = pair_bulk_edge(&p).unwrap();
    assert_eq!(pairs.len(), 2);
    for pair in &pairs {
        assert_eq!(pair.bulk.disorder.seed, pair.edge.disorder.seed);
        let rb = sample_disorder(&pair.bulk.disorder, &pair.bulk.geometry).unwrap();
        let re = sample_disorder(&pair.edge.disorder, &pair.edge.geometry).unwrap();
        let (bg, eg) = (&pair.bulk.geometry, &pair.edge.geometry);
        let (o1, o2) = eg.offset();
        let mut shared = 0;
        for (s, (x1, x2)) in bg.coords().into_iter().enumerate() {
            let (lo1, hi1) = eg.coord_range(0);
            let (lo2, hi2) = eg.coord_range(1);
            if (lo1..=hi1).contains(&x1) && (lo2..=hi2).contains(&x2) {
                let t = eg.index((x1 + o1) as usize, (x2 + o2) as usize);
                assert_eq!(rb.values[s].to_bits(), re.values[t].to_bits());
                shared += 1;
            }
        }
        assert_eq!(shared, pair.shared_sites);
        assert_eq!(shared, bg.dim());
    }
    assert_ne!(pairs[0].bulk.disorder.seed, pairs[1].bulk.disorder.seed);
}

#[test]
fn clean_pairs_carry_no_disorder() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = pair_bulk_edge(&edge_plan(dir.path(), 0.0)).unwrap();
    for pair in &pairs {
        let re = sample_disorder(&pair.edge.disorder, &pair.edge.geometry).unwrap();
        assert!(re.values.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn pairing_needs_an_edge() {
    let dir = tempfile::tempdir().unwrap();
    assert!(pair_bulk_edge(&plan(dir.path(), 1.0, vec![0])).is_err());
}

#[test]
fn invalid_plans_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = plan(dir.path(), 1.0, vec![0]);
    p.probes.clear();
    assert!(p.validate().is_err());
    let mut p = plan(dir.path(), 1.0, vec![0]);
    p.probes.push(Probe::Edge);
    assert!(p.validate().is_err());
    let mut p = plan(dir.path(), 1.0, vec![0]);
    p.axes.a = vec![1.0];
    assert!(p.validate().is_err());
    let mut p = plan(dir.path(), 1.0, vec![0]);
    p.base.disorder = DisorderSpec::none();
    p.axes.disorder = vec![1.0];
    assert!(p.validate().is_err());
}
