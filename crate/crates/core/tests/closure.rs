use geomech::fields::{closure_residuals, closure_residuals_extrapolated, double_monopole, momentum_monopole_uniform_e, FieldModel};
use geomech::linalg::Vec3;
use geomech::souriau::PhasePoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> PhasePoint {
    let mut dir = || loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if v.norm() > 0.2 {
            break v * (1.0 / v.norm());
        }
    };
    let (a, b) = (dir(), dir());
    PhasePoint::new(a * rng.random_range(lo..hi), b * rng.random_range(lo..hi), 0.0)
}

fn models() -> Vec<FieldModel> {
    vec![double_monopole(1.0, 1.0).unwrap(), momentum_monopole_uniform_e(1.0, Vec3::new(0.3, -0.2, 1.0))]
}

#[test]
fn monopole_models_close_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for m in models() {
        for _ in 0..50 {
            let x = random_point(&mut rng, 2.0, 4.0);
            let r = closure_residuals(&m, &x, 1e-3).unwrap();
            assert!(r.max_abs() <= 1e-6, "{} at {x:?}: {:?}", m.name(), r.components());
        }
    }
}

#[test]
fn extrapolation_reaches_closer_to_the_loci() {
    // the plain stencil error grows like step²/|r|⁵
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for m in models() {
        for _ in 0..50 {
            let x = random_point(&mut rng, 0.5, 4.0);
            let r = closure_residuals_extrapolated(&m, &x, 1e-3).unwrap();
            assert!(r.max_abs() <= 1e-6, "{} at {x:?}: {:?}", m.name(), r.components());
        }
    }
}

#[test]
fn residuals_shrink_quadratically_with_the_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in models() {
        for _ in 0..20 {
            let x = random_point(&mut rng, 2.0, 4.0);
            let coarse = closure_residuals(&m, &x, 1e-3).unwrap().components();
            let fine = closure_residuals(&m, &x, 5e-4).unwrap().components();
            for ((name, c), (_, f)) in coarse.iter().zip(&fine) {
                if c.abs() < 1e-12 {
                    continue;
                }
                let ratio = c / f;
                assert!((3.5..=4.5).contains(&ratio), "{} {name}: {c:e} / {f:e} = {ratio}", m.name());
            }
        }
    }
}
