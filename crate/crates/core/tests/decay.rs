use std::f64::consts::PI;

use approx::assert_relative_eq;
use nonrad::decay_lab::{
    fit_exponent, gamma_sequence, geometric_radii, nonlinear_decay_pipeline, worst_case_s, DecayReport, PipelineInput,
    RecursionParams, Seed,
};
use nonrad::exterior_basis::{build_exterior_mode, ModeSpec};
use nonrad::radial_solver::{Nonlinearity, RadialGridField, SolverConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn ladder_reaches_the_limit() {
    let p = RecursionParams::new(1.0, 5.0, 0.1).unwrap();
    let g = gamma_sequence(&p, 50).unwrap();
    assert!((g[50] - 0.8).abs() < 1e-6);
}

#[test]
fn paper_exponent_for_quintic_recursion() {
    let kappa = 0.19;
    let p = RecursionParams::with_default_seed(5.0 * kappa, 5.0).unwrap();
    assert_relative_eq!(p.limit(), 4.0 * kappa, max_relative = 1e-15);
    let g = gamma_sequence(&p, 200).unwrap();
    assert!((g[200] - 0.76).abs() < 1e-6);
}

proptest! {
    #[test]
    fn ladder_contracts(alpha in 0.05f64..5.0, l in 1.05f64..10.0, frac in 0.01f64..0.99) {
        let p = RecursionParams::new(alpha, l, frac * (1.0 - 1.0 / l) * alpha).unwrap();
        let limit = p.limit();
        let g = gamma_sequence(&p, 60).unwrap();
        for w in g.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-15 * limit);
            prop_assert!(w[1] <= limit * (1.0 + 1e-15));
            let lhs = limit - w[1];
            let rhs = alpha / (alpha + w[0] * l) * (limit - w[0]);
            prop_assert!((lhs - rhs).abs() <= 1e-14 * limit.max(1.0));
        }
    }

    #[test]
    fn fit_recovers_scaled_power_laws(beta in -3.0f64..3.0, c in 0.01f64..100.0) {
        let s: Vec<(f64, f64)> = (0..12).map(|k| {
            let r = 1.5f64.powi(k);
            (r, c * r.powf(-beta))
        }).collect();
        let f = fit_exponent(&s).unwrap();
        prop_assert!((f.beta - beta).abs() < 1e-10);
    }
}

#[test]
fn fit_tolerates_log_periodic_ripple() {
    let s: Vec<(f64, f64)> = (0..200)
        .map(|k| {
            let r = 10f64.powf(k as f64 / 40.0);
            (r, (1.0 + 0.01 * r.ln().sin()) / r)
        })
        .collect();
    let f = fit_exponent(&s).unwrap();
    assert!((f.beta - 1.0).abs() < 0.02, "{f:?}");
}

fn grid_ratio(l: f64) -> f64 {
    (0.01 * (l - 1.0) / 8.0).exp()
}

#[test]
fn worst_case_exponent_for_alpha_one_l_five() {
    let p = RecursionParams::with_default_seed(1.0, 5.0).unwrap();
    let rep = worst_case_s(&p, Seed::PowerLaw, 1.0, 1e6, grid_ratio(5.0)).unwrap();
    let beta = rep.final_decade.beta.unwrap();
    assert!((0.78..=0.80).contains(&beta), "beta {beta}");
    assert!(rep.induction_holds);
}

#[test]
fn worst_case_exponent_tracks_the_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..6 {
        let alpha = rng.gen_range(0.2..3.0);
        let l = rng.gen_range(2.0..8.0);
        let p = RecursionParams::with_default_seed(alpha, l).unwrap();
        let rep = worst_case_s(&p, Seed::PowerLaw, 1.0, 1e6, grid_ratio(l)).unwrap();
        let beta = rep.final_decade.beta.unwrap();
        assert!(
            (beta - p.limit()).abs() <= 0.02,
            "alpha {alpha} l {l} beta {beta} limit {}",
            p.limit()
        );
        assert!(beta <= p.limit() + 0.02);
    }
}

#[test]
fn zero_seed_follows_the_envelope() {
    let p = RecursionParams::with_default_seed(1.0, 5.0).unwrap();
    let rep = worst_case_s(&p, Seed::Zero, 1.0, 1e6, grid_ratio(5.0)).unwrap();
    let m = rep.band.0;
    for &(r, s) in rep.profile.iter().filter(|(r, _)| *r > rep.band.1) {
        assert!(s <= 0.5 * m / r * (1.0 + 1e-12));
    }
    let beta = rep.final_decade.beta.unwrap();
    assert!(beta >= 1.0 - 1e-3, "{beta}");
}

#[test]
fn worst_case_scales_with_radius() {
    let p = RecursionParams::with_default_seed(1.0, 3.0).unwrap();
    let a = worst_case_s(&p, Seed::PowerLaw, 1.0, 1e5, grid_ratio(3.0)).unwrap();
    let b = worst_case_s(&p, Seed::PowerLaw, 7.0, 7e5, grid_ratio(3.0)).unwrap();
    assert_eq!(a.profile.len(), b.profile.len());
    for (x, y) in a.profile.iter().zip(&b.profile) {
        assert_relative_eq!(7.0 * x.0, y.0, max_relative = 1e-12);
        assert_eq!(x.1, y.1);
    }
}

#[test]
fn worst_case_rejects_coarse_grids() {
    let p = RecursionParams::with_default_seed(1.0, 5.0).unwrap();
    assert!(worst_case_s(&p, Seed::PowerLaw, 1.0, 1e6, 1.1).is_err());
    assert!(worst_case_s(&p, Seed::PowerLaw, 1.0, 1.0, grid_ratio(5.0)).is_err());
}

#[test]
fn decay_report_rejects_unsorted_samples() {
    assert!(DecayReport::from_samples(vec![(2.0, 1.0), (1.0, 1.0)]).is_err());
    let zeros = DecayReport::from_samples(vec![(1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0)]).unwrap();
    assert!(zeros.beta.is_none());
}

fn coulomb_input(amplitude: f64) -> PipelineInput {
    let mut solver = SolverConfig::new(50.0, 2501, 4.0);
    solver.nonlinearity = Nonlinearity::DefocusingQuintic;
    solver.snapshots = 40;
    let mode = build_exterior_mode(ModeSpec::radial(3).unwrap(), 1.0, vec![amplitude], vec![]).unwrap();
    PipelineInput {
        data: RadialGridField::from_mode(&mode, 5, &solver).unwrap(),
        solver,
        radius: 1.0,
        probe_radii: geometric_radii(2.0, 2.0, 5),
        floor: 1e-12,
    }
}

#[test]
fn pipeline_on_coulomb_exterior() {
    let a = 0.5;
    let rep = nonlinear_decay_pipeline(&coulomb_input(a)).unwrap();
    assert!(rep.s_vanishes_beyond_radius, "S beyond R = {}", rep.s_max_beyond_radius);
    assert!(rep.s_nonincreasing);
    assert!(!rep.exploratory);
    for &(r, v) in &rep.dr_u0_report.samples {
        assert_relative_eq!(v, 4.0 * PI * a * a / r, max_relative = 1e-12);
    }
    assert!((rep.dr_u0_report.beta.unwrap() - 1.0).abs() < 1e-9);
    let beta = rep.l6_report.beta.unwrap();
    assert!(beta >= 1.8, "{beta}");
    assert!(rep.blow_up.is_none());
    assert!(rep.energy_drift < 1e-3);
    let again = nonlinear_decay_pipeline(&coulomb_input(a)).unwrap();
    assert_eq!(rep, again);
}

#[test]
fn pipeline_rejects_bad_probes_and_linear_runs() {
    let mut input = coulomb_input(0.5);
    input.probe_radii = vec![2.0, 3.0, 5.0];
    assert!(nonlinear_decay_pipeline(&input).is_err());
    let mut input = coulomb_input(0.5);
    input.solver.nonlinearity = Nonlinearity::None;
    assert!(nonlinear_decay_pipeline(&input).is_err());
    let mut input = coulomb_input(0.5);
    input.probe_radii = geometric_radii(2.0, 2.0, 6);
    assert!(nonlinear_decay_pipeline(&input).is_err());
}
