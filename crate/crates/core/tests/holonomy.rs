use std::f64::consts::PI;
use std::sync::Arc;

use holonome_core::chart::{ChartId, ChartPoint};
use holonome_core::connection::{builtin, curvature_at, gauge_transform};
use holonome_core::expr::MatrixExpr;
use holonome_core::group::{so2_generator, Matrix};
use holonome_core::holonomy::{
    area_sweep_family, flatness_verdict, holonomy, homotopy_scan, shrinking_loop_curvature,
    HomotopyFamily, Verdict,
};
use holonome_core::path::PathSpec;
use holonome_core::transport::{transport, EngineOracle, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C: ChartId = ChartId(0);

#[test]
fn zero_connection_has_trivial_holonomy_and_curvature() {
    let conn = builtin::flat_so2().unwrap();
    let cfg = SolverConfig::default();
    let h = holonomy(&conn, &PathSpec::circle(C, &[0.3, 0.1], 1.2).unwrap(), &cfg).unwrap();
    assert!((h.g.matrix() - Matrix::identity(2, 2)).norm() < 1e-12);
    let oracle = EngineOracle::new(&conn, cfg);
    let x = ChartPoint::new(C, vec![0.2, 0.1]);
    let f = shrinking_loop_curvature(&oracle, &x, 0, 1, &[0.2, 0.1, 0.05]).unwrap();
    assert!(f.extrapolated.norm() < 1e-10);
    assert!(f.order.is_none());
}

#[test]
fn shrinking_loops_recover_the_abelian_field() {
    let conn = builtin::abelian_area(1.5).unwrap();
    let oracle = EngineOracle::new(&conn, SolverConfig::default());
    let x = ChartPoint::new(C, vec![0.2, 0.1]);
    let f = shrinking_loop_curvature(&oracle, &x, 0, 1, &[0.2, 0.1, 0.05]).unwrap();
    assert!((f.extrapolated - so2_generator() * 1.5).norm() < 2e-3);
}

#[test]
fn shrinking_loops_converge_to_the_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let eps = [0.2, 0.1, 0.05, 0.025];
    for name in ["constant-so3", "levi-civita-s2-stereo"] {
        let conn = builtin::builtin(name).unwrap();
        let oracle = EngineOracle::new(&conn, SolverConfig::default());
        for _ in 0..3 {
            let x = ChartPoint::new(C, vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            let exact = curvature_at(&conn, &x).unwrap().component(0, 1);
            let f = shrinking_loop_curvature(&oracle, &x, 0, 1, &eps).unwrap();
            assert!((&f.extrapolated - &exact).norm() < 5e-3, "{name} at {:?}", x.coords);
            // Order of the raw estimates against the exact value.
            let errors: Vec<f64> = f.estimates.iter().map(|e| (e - &exact).norm()).collect();
            let slope = holonome_core::reconstruct::log_log_slope(&eps, &errors);
            assert!(slope >= 0.9, "{name}: slope {slope}, errors {errors:?}");
            assert!(f.order.unwrap() >= 0.9, "{name}: {:?}", f.order);
        }
    }
}

#[test]
fn moving_the_basepoint_conjugates_holonomy() {
    let conn = builtin::constant_so3(0.8, 0.5).unwrap();
    let cfg = SolverConfig::default();
    let corners = [vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.8], vec![-0.2, 0.6]];
    let loop_a = PathSpec::polygon(C, &corners, true).unwrap();
    let mut shifted = corners.to_vec();
    shifted.rotate_left(1);
    let loop_b = PathSpec::polygon(C, &shifted, true).unwrap();
    let ha = holonomy(&conn, &loop_a, &cfg).unwrap();
    let hb = holonomy(&conn, &loop_b, &cfg).unwrap();
    let first_side = transport(&conn, &PathSpec::line(C, &corners[0], &corners[1]).unwrap(), &cfg).unwrap();
    let p = first_side.g.matrix();
    let conjugated = p * ha.g.matrix() * p.transpose();
    assert!((conjugated - hb.g.matrix()).norm() < 1e-8);
    assert!((ha.angle.unwrap() - hb.angle.unwrap()).abs() < 1e-8);
}

fn rotation_gauge(source: &str) -> Arc<MatrixExpr> {
    let c = format!("cos({source})");
    let s = format!("sin({source})");
    Arc::new(MatrixExpr::parse(&[vec![c.clone(), format!("-{s}")], vec![s, c]], 2).unwrap())
}

#[test]
fn gauge_transform_conjugates_curvature_and_holonomy() {
    let conn = builtin::levi_civita_s2_stereo().unwrap();
    let gauge = rotation_gauge("x1*x2 + 0.5*x1");
    let moved = gauge_transform(&conn, C, gauge.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let x = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let p = ChartPoint::new(C, x.clone());
        let g = gauge.eval(&x).unwrap();
        let f = curvature_at(&conn, &p).unwrap().component(0, 1);
        let f2 = curvature_at(&moved, &p).unwrap().component(0, 1);
        assert!((f2 - g.transpose() * f * &g).norm() < 1e-8);
    }
    let cfg = SolverConfig::default();
    let loop_ = PathSpec::circle(C, &[0.4, -0.3], 0.9).unwrap();
    let h = holonomy(&conn, &loop_, &cfg).unwrap();
    let h2 = holonomy(&moved, &loop_, &cfg).unwrap();
    let g0 = gauge.eval(&loop_.start().unwrap().coords).unwrap();
    assert!((h2.g.matrix() - g0.transpose() * h.g.matrix() * &g0).norm() < 1e-8);
}

#[test]
fn gauge_transform_of_a_two_chart_connection_stays_consistent() {
    let conn = builtin::levi_civita_s2_twochart().unwrap();
    let moved = gauge_transform(&conn, C, rotation_gauge("0.3*x2")).unwrap();
    moved.check_compatibility().unwrap();
    let identity = gauge_transform(&conn, C, rotation_gauge("0")).unwrap();
    let x = ChartPoint::new(C, vec![0.7, -0.2]);
    assert!((curvature_at(&identity, &x).unwrap().component(0, 1) - curvature_at(&conn, &x).unwrap().component(0, 1)).norm() < 1e-9);
}

#[test]
fn homotopy_spread_follows_the_swept_area() {
    let cfg = SolverConfig::default();
    let conn = builtin::abelian_area(1.5).unwrap();
    let scan = homotopy_scan(&EngineOracle::new(&conn, cfg), &area_sweep_family(C)).unwrap();
    // Rotations by −1.5·ΔA for swept areas ΔA ∈ [0, 1].
    let expected = 2.0 * 2f64.sqrt() * (0.75f64).sin();
    assert!((scan.spread - expected).abs() < 1e-7);
    assert!(scan.spread >= 0.5);

    let straight_to_arc =
        HomotopyFamily::parse(C, &["1 - 2*x1", "x2*sin(3.141592653589793*x1)"], 11).unwrap();
    for conn in [builtin::pure_gauge().unwrap(), builtin::pure_gauge_so3().unwrap(), builtin::flat_so2().unwrap()] {
        let scan = homotopy_scan(&EngineOracle::new(&conn, cfg), &straight_to_arc).unwrap();
        assert!(scan.spread <= 1e-7, "{scan:?}");
    }
}

#[test]
fn flatness_verdicts_agree_on_every_builtin() {
    let cfg = SolverConfig::default();
    for (name, expected) in [
        ("flat-so2", Verdict::Flat),
        ("pure-gauge", Verdict::Flat),
        ("pure-gauge-so3", Verdict::Flat),
        ("abelian-area(1.5)", Verdict::Curved),
        ("constant-so3", Verdict::Curved),
        ("levi-civita-s2-stereo", Verdict::Curved),
        ("levi-civita-s2-twochart", Verdict::Curved),
    ] {
        let v = flatness_verdict(&builtin::builtin(name).unwrap(), &cfg).unwrap();
        assert_eq!(v.verdict, expected, "{name}: {v:?}");
        if expected == Verdict::Flat {
            assert!(v.max_spread() <= 1e-7, "{name}: {v:?}");
        }
    }
}

#[test]
fn latitude_closed_forms() {
    let conn = builtin::levi_civita_s2_stereo().unwrap();
    let h = holonomy(&conn, &PathSpec::circle(C, &[0.0, 0.0], 1.0).unwrap(), &SolverConfig::default()).unwrap();
    // −2π(1 − cos π/2) = −2π ≡ 0.
    assert!(holonome_core::holonomy::angle_distance(h.angle.unwrap(), 0.0) < 1e-6);
    let h = holonomy(&conn, &PathSpec::circle(C, &[0.0, 0.0], 3f64.sqrt()).unwrap(), &SolverConfig::default()).unwrap();
    assert!(holonome_core::holonomy::angle_distance(h.angle.unwrap(), -PI) < 1e-6);
}
