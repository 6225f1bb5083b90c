use faer::{c64, Mat};
use proptest::prelude::*;

use bulkedge::conductance::{check_dec_hall, hall_switch, TraceWindow};
use bulkedge::lattice::{build_model, sample_disorder, DisorderSpec, FluxSpec, Geometry, ModelSpec, WallSpec};
use bulkedge::linalg;
use bulkedge::spectral::{diagonalize, diagonalize_matrix, switch_matrix, Smoothness, SwitchProfile};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

fn flux() -> impl Strategy<Value = FluxSpec> {
    prop_oneof![Just(FluxSpec::new(0, 1)), Just(FluxSpec::new(1, 3)), Just(FluxSpec::new(2, 3))]
}

fn disorder() -> impl Strategy<Value = DisorderSpec> {
    (0.0..4.0f64, any::<u64>(), any::<bool>())
        .prop_map(|(w, seed, magnetic)| if magnetic { DisorderSpec::magnetic(w / 4.0, seed) } else { DisorderSpec::electric(w, seed) })
}

fn unit_switches(g: &Geometry) -> (Vec<f64>, Vec<f64>) {
    let s = SwitchProfile::new(0.0, 1.0, Smoothness::Smoothstep5);
    (switch_matrix(&s, 0, g).unwrap(), switch_matrix(&s, 1, g).unwrap())
}

fn diff_norm(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    linalg::max_abs_diff(a.as_ref(), b.as_ref())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn models_are_hermitian(flux in flux(), dis in disorder(), edge in any::<bool>(), a in 0.0..3.0f64, height in 0.0..50.0f64) {
        let spec = if edge {
            ModelSpec::edge(Geometry::cylinder(12, 6), flux, dis, WallSpec::electric(a, height, 1.0))
        } else {
            ModelSpec::bulk(Geometry::torus(6, 6), flux, dis)
        };
        let hm = build_model(&spec).unwrap();
        prop_assert!(linalg::hermitian_defect(hm.matrix.as_ref()) < 1e-14);
    }

    #[test]
    fn disorder_stays_in_range(w in 0.0..5.0f64, seed in any::<u64>()) {
        let r = sample_disorder(&DisorderSpec::electric(w, seed), &Geometry::torus(6, 6)).unwrap();
        prop_assert!(r.values.iter().all(|&v| (0.0..=w).contains(&v)));
    }

    #[test]
    fn fermi_projectors_are_projectors(dis in disorder(), e in 0.0..8.0f64) {
        let hm = build_model(&ModelSpec::bulk(Geometry::torus(6, 6), FluxSpec::new(1, 3), dis)).unwrap();
        let sd = diagonalize(&hm).unwrap();
        let p = sd.fermi_projector(e);
        let m = &p.matrix;
        prop_assert!(diff_norm(&(m * m), m) < 1e-10);
        prop_assert!(linalg::hermitian_defect(m.as_ref()) < 1e-12);
        let below = sd.eigenvalues.iter().filter(|&&x| x <= e).count();
        prop_assert_eq!(p.rank, below);
        prop_assert!((linalg::trace(m.as_ref()).re - below as f64).abs() < 1e-9);
        // P commutes with H.
        let h = &hm.matrix;
        prop_assert!(diff_norm(&(h * m), &(m * h)) < 1e-9);
    }

    #[test]
    fn hall_switch_is_antisymmetric_and_decomposes(dis in disorder(), e in 1.0..7.0f64) {
        let hm = build_model(&ModelSpec::bulk(Geometry::torus(9, 9), FluxSpec::new(1, 3), dis)).unwrap();
        let sd = diagonalize(&hm).unwrap();
        let p = sd.fermi_projector(e);
        let p = p.matrix.as_ref();
        let (l1, l2) = unit_switches(&hm.geometry);
        let w = TraceWindow::crossing_box(&hm.geometry, (0.0, 0.0));
        let s = hall_switch(p, &l1, &l2, &w).unwrap().value;
        let t = hall_switch(p, &l2, &l1, &w).unwrap().value;
        prop_assert!((s + t).abs() < 1e-12);
        prop_assert!(check_dec_hall(p, &l1, &l2).unwrap() < 1e-9);
    }

    #[test]
    fn hall_switch_is_gauge_invariant(dis in disorder(), e in 1.0..7.0f64, phases in prop::collection::vec(0.0..std::f64::consts::TAU, 81)) {
        let hm = build_model(&ModelSpec::bulk(Geometry::torus(9, 9), FluxSpec::new(1, 3), dis)).unwrap();
        let d: Vec<c64> = phases.iter().map(|&t| c64::cis(t)).collect();
        let n = hm.dim();
        let gauged = Mat::from_fn(n, n, |i, j| d[i] * hm.matrix[(i, j)] * d[j].conj());
        let sd = diagonalize(&hm).unwrap();
        let sg = diagonalize_matrix(gauged.as_ref(), String::new()).unwrap();
        let (l1, l2) = unit_switches(&hm.geometry);
        let w = TraceWindow::crossing_box(&hm.geometry, (0.0, 0.0));
        // Stay away from eigenvalues so both projectors have the same rank.
        let gap = sd.eigenvalues.iter().map(|x| (x - e).abs()).fold(f64::INFINITY, f64::min);
        prop_assume!(gap > 1e-6);
        let a = hall_switch(sd.fermi_projector(e).matrix.as_ref(), &l1, &l2, &w).unwrap().value;
        let b = hall_switch(sg.fermi_projector(e).matrix.as_ref(), &l1, &l2, &w).unwrap().value;
        prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
    }

    #[test]
    fn switch_profiles_are_monotone_steps(c in -5.0..5.0f64, hw in 0.2..4.0f64, x in -10.0..10.0f64, dx in 0.0..3.0f64,
                                          k in 0usize..3) {
        let sm = [Smoothness::Smoothstep3, Smoothness::Smoothstep5, Smoothness::Erf][k];
        let s = SwitchProfile::new(c, hw, sm);
        let (u, v) = (s.value(x), s.value(x + dx));
        prop_assert!((0.0..=1.0).contains(&u));
        prop_assert!(v <= u + 1e-15);
    }
}
