use std::f64::consts::PI;

use crate::linalg::Vec3;

/// Gauss–Legendre nodes and weights on [−1, 1] (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n > 0, "quadrature order must be positive");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Outward flux `∮ F·dS` through the sphere of given center and radius.
///
/// Product rule: `quadrature_order` Gauss–Legendre nodes in `cos ϑ` times
/// `2·quadrature_order` equispaced nodes in `φ` (exact for trigonometric
/// polynomials of that degree).
pub fn flux_integral<F>(field: F, center: Vec3, radius: f64, quadrature_order: usize) -> f64
where
    F: Fn(Vec3) -> Vec3,
{
    assert!(radius > 0.0, "radius must be positive");
    let nodes = gauss_legendre(quadrature_order.max(1));
    let nphi = 2 * quadrature_order.max(1);
    let dphi = 2.0 * PI / nphi as f64;
    let mut total = 0.0;
    for &(c, w) in &nodes {
        let s = (1.0 - c * c).max(0.0).sqrt();
        let mut ring = 0.0;
        for k in 0..nphi {
            let phi = (k as f64 + 0.5) * dphi;
            let n = Vec3::new(s * phi.cos(), s * phi.sin(), c);
            ring += field(center + n * radius).dot(n);
        }
        total += w * ring * dphi;
    }
    total * radius * radius
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_polynomials() {
        let q = gauss_legendre(5);
        let sum: f64 = q.iter().map(|(_, w)| w).sum();
        assert!((sum - 2.0).abs() < 1e-14);
        // ∫ x⁸ = 2/9, exact for n = 5
        let m8: f64 = q.iter().map(|(x, w)| w * x.powi(8)).sum();
        assert!((m8 - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn coulomb_flux() {
        let f = |v: Vec3| v * (1.0 / v.norm().powi(3));
        for r in [0.5, 1.0, 3.0] {
            assert!((flux_integral(f, Vec3::ZERO, r, 16) - 4.0 * PI).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_field_has_no_flux() {
        let f = |_: Vec3| Vec3::new(0.3, -1.0, 2.0);
        assert!(flux_integral(f, Vec3::new(1.0, 2.0, 3.0), 1.5, 8).abs() < 1e-10);
    }

    #[test]
    fn off_center_sphere_still_encloses_charge() {
        let f = |v: Vec3| v * (0.5 / v.norm().powi(3));
        let flux = flux_integral(f, Vec3::new(0.3, 0.0, -0.2), 2.0, 32);
        assert!((flux - 2.0 * PI).abs() < 1e-8, "{flux}");
    }
}
