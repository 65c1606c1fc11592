use rainbow::copula::{CopulaModel, Family};
use rainbow::quad::{integrate, QuadConfig};
use rand::Rng;

fn families() -> Vec<CopulaModel<f64>> {
    vec![
        CopulaModel::gaussian(0.2822).unwrap(),
        CopulaModel::gaussian(-0.7).unwrap(),
        CopulaModel::student_t(0.3, 4.0).unwrap(),
        CopulaModel::with_theta(Family::Clayton, 0.1766).unwrap(),
        CopulaModel::with_theta(Family::Clayton, 3.0).unwrap(),
        CopulaModel::with_theta(Family::Frank, 2.3166).unwrap(),
        CopulaModel::with_theta(Family::Frank, 12.0).unwrap(),
        CopulaModel::with_theta(Family::Gumbel, 1.344).unwrap(),
        CopulaModel::with_theta(Family::Gumbel, 4.0).unwrap(),
        CopulaModel::with_theta(Family::Galambos, 0.5995).unwrap(),
        CopulaModel::with_theta(Family::HuslerReiss, 0.9798).unwrap(),
        CopulaModel::with_theta(Family::HuslerReiss, 3.0).unwrap(),
        CopulaModel::with_theta(Family::Tawn, 0.6868).unwrap(),
        CopulaModel::with_theta(Family::Tawn, 1.0).unwrap(),
        CopulaModel::independence(),
        CopulaModel::comonotone(),
        CopulaModel::countermonotone(),
    ]
}

#[test]
fn frechet_hoeffding_bounds_on_a_grid() {
    for c in families() {
        for i in 0..50 {
            for j in 0..50 {
                let (u, v) = ((i as f64 + 0.5) / 50.0, (j as f64 + 0.5) / 50.0);
                let x = c.cdf(u, v);
                assert!(x >= (u + v - 1.0).max(0.0) - 1e-15 && x <= u.min(v) + 1e-15, "{c} at ({u}, {v}): {x}");
            }
        }
    }
}

#[test]
fn rectangles_carry_nonnegative_mass() {
    let mut rng = rainbow::rng::seeded(2024);
    for c in families() {
        for _ in 0..10_000 {
            let (a1, b1) = ordered(rng.random(), rng.random());
            let (a2, b2) = ordered(rng.random(), rng.random());
            let mass = c.cdf(b1, b2) - c.cdf(a1, b2) - c.cdf(b1, a2) + c.cdf(a1, a2);
            assert!(mass >= -1e-12, "{c}: [{a1}, {b1}] x [{a2}, {b2}] has mass {mass}");
        }
    }
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[test]
fn extreme_value_families_are_max_stable() {
    for c in families().into_iter().filter(|c| c.family().is_extreme_value()) {
        for (u, v) in [(0.3, 0.6), (0.05, 0.9), (0.8, 0.85), (0.5, 0.01)] {
            for t in [0.5, 2.0, 3.7] {
                let lhs = c.cdf(f64::powf(u, t), f64::powf(v, t));
                let rhs = c.cdf(u, v).powf(t);
                assert!((lhs - rhs).abs() < 1e-12, "{c} at ({u}, {v}), t = {t}");
            }
        }
    }
}

#[test]
fn densities_integrate_to_one() {
    let cfg = QuadConfig { abs_tol: 1e-10, rel_tol: 1e-10, max_intervals: 2000 };
    for c in families() {
        if matches!(c.family(), Family::Comonotone | Family::Countermonotone) {
            continue;
        }
        let inner = |u: f64| integrate(|v| c.density(u, v).unwrap(), 0.0, 1.0, &cfg).unwrap().value;
        let total = integrate(inner, 0.0, 1.0, &cfg).unwrap().value;
        assert!((total - 1.0).abs() < 1e-6, "{c}: {total}");
    }
}

#[test]
fn samples_follow_the_cdf() {
    let n = 100_000;
    for c in families() {
        let xs = c.sample(n, 77).unwrap();
        let mut worst: f64 = 0.0;
        for i in 1..=20 {
            for j in 1..=20 {
                let (u, v) = (i as f64 / 20.0, j as f64 / 20.0);
                let emp = xs.iter().filter(|p| p.0 <= u && p.1 <= v).count() as f64 / n as f64;
                worst = worst.max((emp - c.cdf(u, v)).abs());
            }
        }
        assert!(worst < 0.02, "{c}: sup distance {worst}");
        assert!(xs.iter().all(|p| (0.0..=1.0).contains(&p.0) && (0.0..=1.0).contains(&p.1)));
    }
}

#[test]
fn survival_copula_is_a_copula() {
    for c in families() {
        for u in [0.0, 0.2, 0.5, 1.0] {
            let s = c.survival_cdf(&[u, 1.0]).unwrap();
            assert!((s - u).abs() < 1e-15);
            assert!(c.survival_cdf(&[u, 0.0]).unwrap().abs() < 1e-15);
        }
        let mut rng = rainbow::rng::seeded(5);
        for _ in 0..500 {
            let (a1, b1) = ordered(rng.random(), rng.random());
            let (a2, b2) = ordered(rng.random(), rng.random());
            let s = |x: f64, y: f64| c.survival_cdf(&[x, y]).unwrap();
            assert!(s(b1, b2) - s(a1, b2) - s(b1, a2) + s(a1, a2) >= -1e-12);
        }
    }
}
