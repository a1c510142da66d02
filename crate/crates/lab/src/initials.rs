use geomech::dynamics::initial_for_angular_momentum;
use geomech::fields::PlanarPoint;
use geomech::linalg::{Vec2, Vec3};
use geomech::souriau::PhasePoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::InitialsSpec;

/// Rotation of `v` by `angle` about the unit vector `k` (Rodrigues).
fn rotate(v: Vec3, k: Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    v * c + k.cross(v) * s + k * (k.dot(v) * (1.0 - c))
}

pub fn random_direction(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v * (1.0 / n);
        }
    }
}

/// Point with `|r|` and `|p|` uniform in the given ranges and independent
/// random directions.
pub fn random_point(rng: &mut ChaCha8Rng, r_range: [f64; 2], p_range: [f64; 2]) -> PhasePoint {
    let mut modulus = |[lo, hi]: [f64; 2]| if hi > lo { rng.random_range(lo..hi) } else { lo };
    let (r, p) = (modulus(r_range), modulus(p_range));
    PhasePoint::new(random_direction(rng) * r, random_direction(rng) * p, 0.0)
}

/// Double-monopole initials with `|j| ∈ [j_min, j_max]`, angle between `r`
/// and `p` in `[0.3, 2.8]`, `|p| ∈ [0.6, 1.5]`, randomly rotated. With
/// `j_min > |θ|+|e|` the orbits never reach `M* = 0`.
pub fn random_regular(count: usize, j_min: f64, j_max: f64, e: f64, theta: f64, rng: &mut ChaCha8Rng) -> Vec<PhasePoint> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let j = if j_max > j_min { rng.random_range(j_min..j_max) } else { j_min };
        let alpha = rng.random_range(0.3..2.8);
        let p = rng.random_range(0.6..1.5);
        let Ok(x) = initial_for_angular_momentum(j, alpha, p, e, theta) else { continue };
        let k = random_direction(rng);
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        out.push(PhasePoint::new(rotate(x.r, k, angle), rotate(x.p, k, angle), 0.0));
    }
    out
}

/// Three-dimensional initial states described by `spec`.
pub fn space_initials(spec: &InitialsSpec, e: f64, theta: f64, seed: u64) -> Result<Vec<PhasePoint>, String> {
    match spec {
        InitialsSpec::Explicit { points } => Ok(points
            .iter()
            .map(|p| PhasePoint::new(Vec3::new(p.r[0], p.r[1], p.r[2]), Vec3::new(p.p[0], p.p[1], p.p[2]), 0.0))
            .collect()),
        InitialsSpec::AngularMomentum { j, alpha, p } => j
            .iter()
            .map(|jm| initial_for_angular_momentum(*jm, *alpha, *p, e, theta).map_err(|err| err.to_string()))
            .collect(),
        InitialsSpec::ImpactGrid { b, z0, p0 } => {
            Ok(b.iter().map(|bb| PhasePoint::new(Vec3::new(*bb, 0.0, *z0), Vec3::new(0.0, 0.0, *p0), 0.0)).collect())
        }
        InitialsSpec::RandomRegular { count, j_min, j_max } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(random_regular(*count, *j_min, *j_max, e, theta, &mut rng))
        }
    }
}

pub fn planar_initials(spec: &InitialsSpec) -> Result<Vec<PlanarPoint>, String> {
    match spec {
        InitialsSpec::Explicit { points } => Ok(points
            .iter()
            .map(|p| PlanarPoint::new(Vec2::new(p.r[0], p.r[1]), Vec2::new(p.p[0], p.p[1]), 0.0))
            .collect()),
        _ => Err("planar models take explicit initial points only".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use geomech::poisson::angular_momentum;

    #[test]
    fn random_initials_have_the_requested_angular_momentum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for x in random_regular(20, 2.1, 4.0, 1.0, 1.0, &mut rng) {
            let j = angular_momentum(&x, 1.0, 1.0).unwrap().norm();
            assert!((2.1..4.0).contains(&j), "{j}");
        }
    }

    #[test]
    fn same_seed_same_points() {
        let spec = InitialsSpec::RandomRegular { count: 5, j_min: 2.1, j_max: 3.0 };
        assert_eq!(space_initials(&spec, 1.0, 1.0, 4).unwrap(), space_initials(&spec, 1.0, 1.0, 4).unwrap());
        assert_ne!(space_initials(&spec, 1.0, 1.0, 4).unwrap(), space_initials(&spec, 1.0, 1.0, 5).unwrap());
    }
}
