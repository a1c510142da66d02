use geomech::fields::{double_monopole, flux_integral, momentum_monopole_uniform_e, FieldSample};
use geomech::linalg::{axial_to_matrix, cross, levi_civita, nullspace, pfaffian, AntisymMatrix, Vec3};
use geomech::poisson::{
    angular_momentum, bracket, cosymplectic_double_monopole, cosymplectic_general, jacobi_residual, mstar, Observable,
};
use geomech::souriau::{assemble_sigma, effective_mass_velocity, kernel_velocity, sigma_at, PhasePoint};
use nalgebra::Matrix3;
use proptest::prelude::*;
use proptest::strategy::ValueTree;

fn vec3(lo: f64, hi: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(lo..hi).prop_map(Vec3::from_array)
}

fn direction() -> impl Strategy<Value = Vec3> {
    vec3(-1.0, 1.0).prop_filter("non-degenerate direction", |v| v.norm() > 0.2).prop_map(|v| v * (1.0 / v.norm()))
}

/// Double-monopole point with moduli in `[lo, hi]` and `M*` well away from zero.
fn regular_point(lo: f64, hi: f64) -> impl Strategy<Value = PhasePoint> {
    (direction(), direction(), lo..hi, lo..hi)
        .prop_map(|(a, b, r, p)| PhasePoint::new(a * r, b * p, 0.0))
        .prop_filter("M* away from zero", |x| {
            mstar(x, 1.0, 1.0).abs() > 0.05 * (x.r.norm() * x.p.norm()).powi(3)
        })
}

fn antisym<const N: usize>(entries: &[f64]) -> AntisymMatrix<N> {
    let mut k = 0;
    AntisymMatrix::from_upper(|_, _| {
        k += 1;
        entries[k - 1]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn pfaffian_squares_to_determinant(e in prop::collection::vec(-2.0f64..2.0, 15)) {
        let a = antisym::<6>(&e);
        let pf = pfaffian(&a).unwrap();
        let det = a.as_matrix().determinant();
        prop_assert!((pf * pf - det).abs() <= 1e-10 * det.abs().max(1.0), "{} vs {}", pf * pf, det);
    }
}

proptest! {
    #[test]
    fn odd_antisymmetric_has_orthonormal_kernel(e in prop::collection::vec(-1.0f64..1.0, 10)) {
        let a = antisym::<5>(&e);
        let ker = nullspace(&a, 1e-10);
        prop_assert!(!ker.is_empty());
        for (i, u) in ker.iter().enumerate() {
            prop_assert!((a.mul_vec(u)).norm() < 1e-10);
            for (j, v) in ker.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((u.dot(v) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cross_product_jacobi_identity(a in vec3(-3.0, 3.0), b in vec3(-3.0, 3.0), c in vec3(-3.0, 3.0)) {
        let s = cross(a, cross(b, c)) + cross(b, cross(c, a)) + cross(c, cross(a, b));
        prop_assert!(s.max_abs() < 1e-12);
    }

    #[test]
    fn axial_matrix_acts_as_cross_product(v in vec3(-3.0, 3.0), w in vec3(-3.0, 3.0)) {
        let m = axial_to_matrix(v);
        let mw = m.to_mat3() * w.to_na();
        prop_assert!((Vec3::from_na(&mw) - v.cross(w)).max_abs() < 1e-12);
        prop_assert_eq!(levi_civita(v).to_mat3(), -m.to_mat3());
        prop_assert!((m.axial_vector() - v).max_abs() < 1e-15);
    }

    #[test]
    fn sigma_is_affine_in_the_fields(
        e1 in vec3(-1.0, 1.0), b1 in vec3(-1.0, 1.0), k1 in vec3(-1.0, 1.0),
        e2 in vec3(-1.0, 1.0), b2 in vec3(-1.0, 1.0), k2 in vec3(-1.0, 1.0),
        g in vec3(-1.0, 1.0),
    ) {
        let s = |e: Vec3, b: Vec3, k: Vec3| FieldSample { e_field: e, b_field: b, kappa: k, g, ..Default::default() };
        let zero = assemble_sigma(&s(Vec3::ZERO, Vec3::ZERO, Vec3::ZERO), 1.3).a;
        let a = assemble_sigma(&s(e1, b1, k1), 1.3).a;
        let b = assemble_sigma(&s(e2, b2, k2), 1.3).a;
        let ab = assemble_sigma(&s(e1 + e2, b1 + b2, k1 + k2), 1.3).a;
        let lhs = ab.as_matrix() + zero.as_matrix();
        let rhs = a.as_matrix() + b.as_matrix();
        prop_assert!((lhs - rhs).abs().max() < 1e-14);
    }

    #[test]
    fn double_monopole_sigma_has_rank_six(x in regular_point(0.5, 3.0)) {
        let m = double_monopole(1.0, 1.0).unwrap();
        let s = sigma_at(&m, &x).unwrap();
        prop_assert_eq!(s.a.rank(1e-10), 6);
    }

    #[test]
    fn kernel_matches_closed_form(x in regular_point(0.5, 3.0)) {
        let m = double_monopole(1.0, 1.0).unwrap();
        let k = kernel_velocity(&sigma_at(&m, &x).unwrap(), 1e-10).regular().unwrap();
        let (r, p) = (x.r.norm(), x.p.norm());
        let ms = mstar(&x, 1.0, 1.0);
        let rdot = (x.p * (r * p).powi(3) - x.r * (p * p)) * (1.0 / ms);
        let pdot = x.p.cross(x.r) * (p.powi(3) / ms);
        let scale = rdot.norm().max(pdot.norm());
        prop_assert!((k.rdot - rdot).norm() <= 1e-9 * scale, "{:?} vs {:?}", k.rdot, rdot);
        prop_assert!((k.pdot - pdot).norm() <= 1e-9 * scale);
        let em = effective_mass_velocity(&m.sample(&x).unwrap(), 1.0).unwrap();
        prop_assert!((em.rdot - rdot).norm() <= 1e-9 * scale);
    }

    #[test]
    fn brackets_are_bilinear_and_leibniz(x in regular_point(0.7, 2.0), a in -2.0f64..2.0) {
        let p = cosymplectic_double_monopole(&x, 1.0, 1.0).unwrap();
        let r1 = Observable::coordinate(0);
        let p2 = Observable::coordinate(4);
        let h = Observable::hamiltonian();
        let b = |f: &Observable, g: &Observable| bracket(f, g, &x, &p, 1e-4).unwrap();
        let comb = Observable::new("a r1 + H", move |y: &PhasePoint| a * y.r.x + 0.5 * y.p.norm_sq());
        let lin = b(&comb, &p2) - (a * b(&r1, &p2) + b(&h, &p2));
        prop_assert!(lin.abs() < 1e-7, "{lin}");
        let prod = Observable::new("r1 H", |y: &PhasePoint| y.r.x * 0.5 * y.p.norm_sq());
        let leib = b(&prod, &p2) - (x.r.x * b(&h, &p2) + 0.5 * x.p.norm_sq() * b(&r1, &p2));
        prop_assert!(leib.abs() < 1e-6 * (1.0 + b(&r1, &p2).abs()), "{leib}");
        prop_assert!((b(&r1, &p2) + b(&p2, &r1)).abs() < 1e-9);
    }

    #[test]
    fn general_structure_inverts_symplectic_form(b in vec3(-0.6, 0.6), k in vec3(-0.6, 0.6)) {
        let bm = axial_to_matrix(b);
        let km = levi_civita(k);
        let p = cosymplectic_general(&Matrix3::zeros(), &bm, &km).unwrap();
        let omega = geomech::poisson::symplectic_matrix(&Matrix3::zeros(), &bm, &km);
        let prod = p.a.as_matrix() * omega.as_matrix();
        let id = nalgebra::SMatrix::<f64, 6, 6>::identity();
        prop_assert!((prod - id).abs().max() < 1e-12);
        prop_assert!((pfaffian(&omega).unwrap() - p.degeneracy_factor).abs() < 1e-13);
    }
}

#[test]
fn angular_momentum_components_close_and_commute_with_energy() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..100 {
        let x = regular_point(0.7, 2.5).new_tree(&mut runner).unwrap().current();
        let p = cosymplectic_double_monopole(&x, 1.0, 1.0).unwrap();
        let j = angular_momentum(&x, 1.0, 1.0).unwrap();
        let jo: Vec<_> = (0..3).map(|i| Observable::angular_momentum(1.0, 1.0, i)).collect();
        let h = Observable::hamiltonian();
        for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let v = bracket(&jo[a], &jo[b], &x, &p, 1e-4).unwrap();
            assert!((v - j.get(c)).abs() < 1e-6, "{{j{a},j{b}}} = {v}, j{c} = {}", j.get(c));
        }
        for ji in &jo {
            assert!(bracket(ji, &h, &x, &p, 1e-4).unwrap().abs() < 1e-6);
        }
    }
}

#[test]
fn pfaffian_of_structure_matches_effective_mass() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..100 {
        let x = regular_point(0.5, 3.0).new_tree(&mut runner).unwrap().current();
        let p = cosymplectic_double_monopole(&x, 1.0, 1.0).unwrap();
        let expect = (x.r.norm() * x.p.norm()).powi(3) / mstar(&x, 1.0, 1.0).abs();
        let pf = p.pfaffian().unwrap().abs();
        assert!((pf - expect).abs() <= 1e-10 * expect, "{pf} vs {expect}");
    }
}

#[test]
fn jacobi_identity_holds_away_from_the_loci() {
    let builder = |y: &[f64; 6]| cosymplectic_double_monopole(&PhasePoint::from_array6(*y, 0.0), 1.0, 1.0);
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    for _ in 0..30 {
        let x = regular_point(0.5, 2.5).new_tree(&mut runner).unwrap().current();
        let r = jacobi_residual(builder, &x.to_array6(), 1e-4).unwrap();
        assert!(r <= 1e-5, "{x:?}: {r}");
    }
}

#[test]
fn dual_flux_is_independent_of_the_sphere() {
    for theta in [0.5, 1.0, -2.0] {
        let m = momentum_monopole_uniform_e(theta, Vec3::new(0.0, 0.0, 1.0));
        for radius in [0.25, 1.0, 4.0] {
            let f = flux_integral(
                |p| m.sample(&PhasePoint::new(Vec3::ZERO, p, 0.0)).unwrap().kappa,
                Vec3::ZERO,
                radius,
                24,
            );
            assert!((f - 4.0 * std::f64::consts::PI * theta).abs() < 1e-6, "θ = {theta}, R = {radius}: {f}");
        }
    }
}
