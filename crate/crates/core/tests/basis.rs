use std::f64::consts::PI;

use approx::assert_relative_eq;
use nonrad::exact_evolution::{chain_lift, max_chain_index, ChainKind, ExactExterior};
use nonrad::exterior_basis::{build_exterior_mode, radial_span, ModeSpec};
use nonrad::sphere3::{analyze, analyze_all, sph_harm_eval, synthesize, SphereField, SphereGrid};
use proptest::prelude::*;

fn mode_strategy() -> impl Strategy<Value = (usize, usize, f64, Vec<f64>, Vec<f64>)> {
    (3usize..=9, 0usize..=4, 0.5f64..3.0).prop_flat_map(|(d, nu, radius)| {
        let spec = ModeSpec::new(d, nu).unwrap();
        (
            Just(d),
            Just(nu),
            Just(radius),
            prop::collection::vec(-2.0f64..2.0, spec.k1_count()),
            prop::collection::vec(-2.0f64..2.0, spec.k2_count()),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn norms_are_quadratic_in_the_coefficients((d, nu, radius, a, b) in mode_strategy(), c in -3.0f64..3.0) {
        let spec = ModeSpec::new(d, nu).unwrap();
        let base = build_exterior_mode(spec, radius, a.clone(), b.clone()).unwrap().series_norms();
        let scaled = build_exterior_mode(
            spec,
            radius,
            a.iter().map(|x| c * x).collect(),
            b.iter().map(|x| c * x).collect(),
        )
        .unwrap()
        .series_norms();
        for (x, y) in [(base.angular, scaled.angular), (base.u1_norm2, scaled.u1_norm2), (base.du0_norm2, scaled.du0_norm2)] {
            prop_assert!((c * c * x - y).abs() <= 1e-12 * y.abs().max(1e-300));
        }
    }

    #[test]
    fn gradient_tail_is_nonincreasing((d, nu, radius, a, b) in mode_strategy(), s in 2.0f64..6.0, ds in 0.0f64..4.0) {
        let mode = build_exterior_mode(ModeSpec::new(d, nu).unwrap(), radius, a, b).unwrap();
        let near = mode.decay_bound_check(s * radius).unwrap();
        let far = mode.decay_bound_check((s + ds) * radius).unwrap();
        prop_assert!(far.tail <= near.tail);
        prop_assert!(near.tail >= 0.0);
    }

    #[test]
    fn sphere_round_trip(c in prop::collection::vec(-2.0f64..2.0, 16)) {
        let grid = SphereGrid::for_band_limit(3).unwrap();
        let modes: Vec<(usize, i64, Vec<f64>)> = (0..=3usize)
            .flat_map(|l| (-(l as i64)..=l as i64).map(move |m| (l, m)))
            .zip(&c)
            .map(|((l, m), v)| (l, m, vec![*v, 2.0 * v]))
            .collect();
        let field = synthesize(&modes, vec![1.0, 2.0], grid).unwrap();
        let back = analyze_all(&field, 3).unwrap();
        for (proj, (_, _, want)) in back.iter().zip(&modes) {
            prop_assert!((proj.coefficient[0] - want[0]).abs() <= 1e-12);
            prop_assert!((proj.coefficient[1] - want[1]).abs() <= 1e-12);
        }
    }
}

/// `u_tt - u_rr - (D-1)/r u_r` by central differences of the closed form.
fn fd_wave_residual(u: impl Fn(f64, f64) -> f64, dim: usize, r: f64, t: f64) -> (f64, f64) {
    let h = 1e-3;
    let utt = (u(r, t + h) - 2.0 * u(r, t) + u(r, t - h)) / (h * h);
    let urr = (u(r + h, t) - 2.0 * u(r, t) + u(r - h, t)) / (h * h);
    let ur = (u(r + h, t) - u(r - h, t)) / (2.0 * h);
    let residual = utt - urr - (dim as f64 - 1.0) / r * ur;
    (residual, utt.abs() + urr.abs() + ((dim as f64 - 1.0) / r * ur).abs())
}

#[test]
fn chain_solutions_solve_the_lifted_wave_equation() {
    for d in 3..=9 {
        for nu in 0..=3 {
            let spec = ModeSpec::new(d, nu).unwrap();
            for kind in [ChainKind::Position, ChainKind::Velocity] {
                for k in 1..=max_chain_index(&spec, kind) {
                    let chain = chain_lift(spec, k, kind).unwrap();
                    let u = |r: f64, t: f64| chain.eval_exact(r, t).unwrap().u;
                    for (r, t) in [(4.0, 0.5), (6.0, 1.5), (9.0, -2.0)] {
                        let (res, scale) = fd_wave_residual(u, spec.lifted_dim(), r, t);
                        assert!(
                            res.abs() <= 1e-5 * scale.max(1e-12),
                            "d={d} nu={nu} k={k} {kind:?}: {res} vs {scale}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn exterior_evolution_starts_from_the_data() {
    let mode = build_exterior_mode(ModeSpec::new(5, 1).unwrap(), 1.5, vec![0.7, -1.1], vec![0.4]).unwrap();
    let ext = ExactExterior::from_mode(&mode).unwrap();
    let u0 = mode.u0_power_law();
    let u1 = mode.u1_power_law();
    // the evolution is carried in the lifted frame, u / r^nu
    for r in [2.0f64, 3.5, 8.0] {
        assert_relative_eq!(ext.u(0.0).value(r), u0.value(r) / r, max_relative = 1e-13);
        assert_relative_eq!(ext.ut(0.0).value(r), u1.value(r) / r, max_relative = 1e-13);
    }
}

#[test]
fn three_dimensional_radial_span() {
    assert_eq!(radial_span(3).u0_exponents, vec![-1]);
    assert!(radial_span(3).u1_exponents.is_empty());
    assert_eq!(radial_span(7).u0_exponents, vec![-5, -3]);
}

#[test]
fn low_harmonics_in_closed_form() {
    for (theta, phi) in [(0.3f64, 1.0f64), (1.2, -2.0), (2.9, 0.4)] {
        let c = theta.cos();
        let s = theta.sin();
        assert_relative_eq!(
            sph_harm_eval(0, 0, theta, phi).unwrap(),
            (1.0 / (4.0 * PI)).sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            sph_harm_eval(1, 0, theta, phi).unwrap(),
            (3.0 / (4.0 * PI)).sqrt() * c,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            sph_harm_eval(1, 1, theta, phi).unwrap(),
            (3.0 / (4.0 * PI)).sqrt() * s * phi.cos(),
            max_relative = 1e-13
        );
        assert_relative_eq!(
            sph_harm_eval(2, 0, theta, phi).unwrap(),
            (5.0 / (16.0 * PI)).sqrt() * (3.0 * c * c - 1.0),
            max_relative = 1e-12
        );
    }
}

#[test]
fn projection_of_a_solid_harmonic() {
    // u = r z = r^2 cos(theta) is the l = 1 mode with coefficient sqrt(4 pi / 3) r^2
    let grid = SphereGrid::for_band_limit(4).unwrap();
    let radii = vec![0.5, 1.0, 2.0];
    let field = SphereField::from_fn(radii.clone(), grid, |r, theta, _| r * r * theta.cos()).unwrap();
    let p = analyze(&field, 1, 0).unwrap();
    for (i, r) in radii.iter().enumerate() {
        assert_relative_eq!(p.coefficient[i], (4.0 * PI / 3.0).sqrt() * r * r, max_relative = 1e-13);
        assert_relative_eq!(p.lifted[i], (4.0 * PI / 3.0).sqrt() * r, max_relative = 1e-13);
    }
    assert!(analyze(&field, 2, 1)
        .unwrap()
        .coefficient
        .iter()
        .all(|c| c.abs() < 1e-14));
}
