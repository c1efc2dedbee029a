use holonome_core::chart::{ChartId, ChartPoint, TangentVector};
use holonome_core::connection::{builtin, eval_connection};
use holonome_core::group::{expm, so3_generator, GroupElement, Matrix, StructureGroup};
use holonome_core::path::{PathSpec, Segment};
use holonome_core::reconstruct::{
    default_grid, equivariance_deviation, horizontal_space, lemma_independence_check, lift_vector,
    reconstruct_connection, roundtrip_report, split_horizontal_vertical, LemmaReport,
};
use holonome_core::transport::{EngineOracle, SolverConfig};
use holonome_core::{ConnectionForm, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C: ChartId = ChartId(0);

/// Curves through `x` with velocity `v` at `t = 0`: a line, a parabola, a
/// circular arc tangent to `v`, and a cubic.
fn same_velocity_curves(x: &[f64], v: &[f64]) -> Vec<PathSpec> {
    let (w1, w2) = (0.7, -0.4);
    let speed = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let rho = 0.6;
    let (n1, n2) = (-v[1] / speed, v[0] / speed);
    let (c1, c2) = (x[0] + rho * n1, x[1] + rho * n2);
    let theta0 = (x[1] - c2).atan2(x[0] - c1);
    let omega = speed / rho;
    let sources = [
        [format!("{:?} + {:?}*x1", x[0], v[0]), format!("{:?} + {:?}*x1", x[1], v[1])],
        [
            format!("{:?} + {:?}*x1 + {w1:?}*x1^2", x[0], v[0]),
            format!("{:?} + {:?}*x1 + {w2:?}*x1^2", x[1], v[1]),
        ],
        [
            format!("{c1:?} + {rho:?}*cos({theta0:?} + {omega:?}*x1)"),
            format!("{c2:?} + {rho:?}*sin({theta0:?} + {omega:?}*x1)"),
        ],
        [
            format!("{:?} + {:?}*x1 - 2*x1^3", x[0], v[0]),
            format!("{:?} + {:?}*x1 + x1^3", x[1], v[1]),
        ],
    ];
    sources
        .iter()
        .map(|s| PathSpec::new(vec![Segment::parse(C, s, 0.0, 1.0).unwrap()]).unwrap())
        .collect()
}

fn lemma(conn: &ConnectionForm, x: &[f64], v: &[f64]) -> LemmaReport {
    let oracle = EngineOracle::new(conn, SolverConfig::default());
    let p = ChartPoint::new(C, x.to_vec());
    let tv = TangentVector::new(p.clone(), v.to_vec()).unwrap();
    lemma_independence_check(
        &oracle,
        &p,
        &conn.group().identity(),
        &tv,
        &same_velocity_curves(x, v),
        &[1e-2, 5e-3, 2.5e-3],
    )
    .unwrap()
}

#[test]
fn lemma_on_curved_builtins() {
    for name in ["abelian-area(1.5)", "constant-so3", "levi-civita-s2-stereo", "pure-gauge", "pure-gauge-so3"] {
        let conn = builtin::builtin(name).unwrap();
        let r = lemma(&conn, &[0.3, -0.2], &[0.8, 0.5]);
        assert!(!r.degenerate(), "{name}: {r:?}");
        assert!(r.slope.unwrap() >= 0.9, "{name}: {r:?}");
        assert!(r.monotone, "{name}: {r:?}");
        assert!(r.extrapolated_deviation <= 1e-6, "{name}: {r:?}");
    }
}

#[test]
fn lemma_on_the_zero_connection_is_exact() {
    let conn = builtin::flat_so2().unwrap();
    let r = lemma(&conn, &[0.3, -0.2], &[0.8, 0.5]);
    assert!(r.degenerate());
    assert!(r.deviations.iter().all(|d| *d <= 1e-11));
}

#[test]
fn lemma_rejects_mismatched_velocities() {
    let conn = builtin::abelian_area(1.5).unwrap();
    let oracle = EngineOracle::new(&conn, SolverConfig::default());
    let p = ChartPoint::new(C, vec![0.0, 0.0]);
    let v = TangentVector::new(p.clone(), vec![1.0, 0.0]).unwrap();
    let curves = vec![
        PathSpec::line(C, &[0.0, 0.0], &[1.0, 0.0]).unwrap(),
        PathSpec::line(C, &[0.0, 0.0], &[1.0, 0.1]).unwrap(),
    ];
    let r = lemma_independence_check(&oracle, &p, &conn.group().identity(), &v, &curves, &[1e-2, 5e-3]);
    assert!(matches!(r, Err(Error::VelocityMismatch { .. })));
}

#[test]
fn lifts_estimate_minus_the_connection() {
    let conn = builtin::constant_so3(0.8, 0.5).unwrap();
    let oracle = EngineOracle::new(&conn, SolverConfig::default());
    let x = ChartPoint::new(C, vec![0.4, 0.1]);
    let basis = horizontal_space(&oracle, &x, &conn.group().identity(), 1e-3).unwrap();
    for (mu, a) in [(0, 0.8), (1, 0.5)] {
        assert_eq!(basis.lifts[mu].base_part.components, if mu == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] });
        assert!((basis.lifts[mu].vertical_part.matrix() + so3_generator(mu) * a).norm() < 2e-4);
    }
}

#[test]
fn lifts_are_linear() {
    let conn = builtin::levi_civita_s2_stereo().unwrap();
    let oracle = EngineOracle::new(&conn, SolverConfig::default());
    let x = ChartPoint::new(C, vec![0.4, -0.7]);
    let id = conn.group().identity();
    let lift = |v: Vec<f64>| {
        let tv = TangentVector::new(x.clone(), v).unwrap();
        lift_vector(&oracle, &x, &id, &tv, 1e-3).unwrap().vertical_part.into_matrix()
    };
    let (a, b) = (1.3, -0.6);
    let (v, w) = ([0.2, 0.9], [-1.1, 0.4]);
    let combined = lift(vec![a * v[0] + b * w[0], a * v[1] + b * w[1]]);
    assert!((combined - lift(v.to_vec()) * a - lift(w.to_vec()) * b).norm() < 5e-4);
    let exact = eval_connection(&conn, &x, &TangentVector::new(x.clone(), v.to_vec()).unwrap()).unwrap();
    assert!((lift(v.to_vec()) + exact.matrix()).norm() < 5e-4);
}

fn random_so3(rng: &mut ChaCha8Rng) -> GroupElement {
    let a = (0..3).fold(Matrix::zeros(3, 3), |acc, i| acc + so3_generator(i) * rng.random_range(-2.0..2.0));
    GroupElement::new(expm(&a), StructureGroup::SO(3)).unwrap()
}

#[test]
fn splitting_recomposes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let conn = builtin::constant_so3(0.8, 0.5).unwrap();
    let oracle = EngineOracle::new(&conn, SolverConfig::default());
    let mut count = 0;
    for _ in 0..10 {
        let x = ChartPoint::new(C, vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        let p = random_so3(&mut rng);
        let basis = horizontal_space(&oracle, &x, &p, 1e-3).unwrap();
        for _ in 0..10 {
            let base: Vec<f64> = (0..2).map(|_| rng.random_range(-2.0..2.0)).collect();
            let fiber = (0..3).fold(Matrix::zeros(3, 3), |acc, i| acc + so3_generator(i) * rng.random_range(-2.0..2.0));
            let split = split_horizontal_vertical(&basis, &base, &fiber).unwrap();
            let (b, f) = split.recompose();
            assert_eq!(b, base);
            assert!((f - &fiber).norm() <= 1e-10);
            count += 1;
        }
        // A basis vector is purely horizontal; a vertical vector stays vertical.
        let first = split_horizontal_vertical(&basis, &[1.0, 0.0], basis.lifts[0].vertical_part.matrix()).unwrap();
        assert!(first.vertical.matrix().norm() <= 1e-10);
        let vertical = so3_generator(2) * 0.3;
        let split = split_horizontal_vertical(&basis, &[0.0, 0.0], &vertical).unwrap();
        assert_eq!(split.vertical.matrix(), &vertical);
        assert_eq!(split.horizontal_fiber, Matrix::zeros(3, 3));
    }
    assert_eq!(count, 100);
}

#[test]
fn zero_connection_splits_into_coordinates() {
    let conn = builtin::flat_so2().unwrap();
    let oracle = EngineOracle::new(&conn, SolverConfig::default());
    let x = ChartPoint::new(C, vec![0.1, 0.2]);
    let basis = horizontal_space(&oracle, &x, &conn.group().identity(), 1e-3).unwrap();
    let fiber = holonome_core::group::so2_generator() * 0.7;
    let split = split_horizontal_vertical(&basis, &[0.5, -1.0], &fiber).unwrap();
    assert!((split.vertical.matrix() - &fiber).norm() < 1e-12);
}

#[test]
fn horizontal_spaces_are_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let conn = builtin::constant_so3(0.8, 0.5).unwrap();
    let oracle = EngineOracle::new(&conn, SolverConfig::default());
    let x = ChartPoint::new(C, vec![0.3, -0.5]);
    let p = random_so3(&mut rng);
    for _ in 0..5 {
        let g = random_so3(&mut rng);
        assert!(equivariance_deviation(&oracle, &x, &p, &g, 1e-3).unwrap() <= 1e-6);
    }
}

#[test]
fn reconstruction_of_the_zero_connection_is_zero() {
    let conn = builtin::flat_so2().unwrap();
    let oracle = EngineOracle::new(&conn, SolverConfig::default());
    let table = reconstruct_connection(&oracle, &default_grid(&conn, 5), 1e-3).unwrap();
    assert_eq!(table.entries.len(), 25);
    assert!(table.entries.iter().flat_map(|e| &e.coefficients).all(|a| a.norm() <= 1e-10));
}

#[test]
fn roundtrips() {
    let cfg = SolverConfig::default();
    for (name, bound) in [("abelian-area(1.5)", 3e-4), ("constant-so3", 3e-4), ("levi-civita-s2-stereo", 5e-4)] {
        let conn = builtin::builtin(name).unwrap();
        let grid = default_grid(&conn, 5);
        let r = roundtrip_report(&conn, &cfg, &grid, &[1e-3]).unwrap();
        assert!(r.errors[0] <= bound, "{name}: {r:?}");
        let sweep = roundtrip_report(&conn, &cfg, &grid, &[1e-2, 5e-3, 2.5e-3]).unwrap();
        assert!(sweep.pass, "{name}: {sweep:?}");
    }
    // Linear and constant coefficients are reconstructed exactly along
    // straight lines; the sphere shows the generic second order.
    let sphere = builtin::levi_civita_s2_stereo().unwrap();
    let r = roundtrip_report(&sphere, &cfg, &default_grid(&sphere, 5), &[1e-2, 5e-3, 2.5e-3]).unwrap();
    assert!(!r.degenerate);
    assert!((r.order.unwrap() - 2.0).abs() < 0.3, "{r:?}");
}
