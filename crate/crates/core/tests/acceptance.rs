//! End-to-end acceptance checks. One line per criterion; nonzero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nonrad::decay_lab::{
    gamma_sequence, geometric_radii, nonlinear_decay_pipeline, worst_case_s, PipelineInput, RecursionParams, Seed,
};
use nonrad::exact_evolution::{chain_lift, max_chain_index, ChainKind, ExactExterior};
use nonrad::exterior_basis::{build_exterior_mode, ExteriorModeData, ModeSpec};
use nonrad::polylib::legendre::{legendre_rodrigues, modified_legendre_ode_residual, modified_legendre_rodrigues};
use nonrad::polylib::{gauss_nodes, legendre_eval, lemma_sweep, modified_legendre_eval, rat, LemmaVariant, RatPoly};
use nonrad::radial_solver::{
    solve_mode_linear, solve_quintic, ExteriorKnowledge, Nonlinearity, RadialGridField, Scheme, SolverConfig,
};
use nonrad::radiation3::{channel_identity, forward_radiation, inverse_radiation};
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn legendre_identities() -> Outcome {
    let rule = gauss_nodes(40).unwrap();
    let mut worst = 0.0f64;
    for n in 0..=20 {
        let p = rule.integrate(|x| legendre_eval(n, x).powi(2));
        let q = rule.integrate(|x| (x + 1.0) * modified_legendre_eval(n, x).powi(2));
        worst = worst
            .max(rel(p, 2.0 / (2 * n + 1) as f64))
            .max(rel(q, 1.0 / (2 * (n + 1)) as f64));
        let one = BigRational::one();
        let exact_p = legendre_rodrigues(n).pow(2).integrate(&-one.clone(), &one);
        let weight = RatPoly::new(vec![rat(1), rat(1)]);
        let exact_q = (&weight * &modified_legendre_rodrigues(n).pow(2)).integrate(&-one.clone(), &one);
        if exact_p != BigRational::new(2.into(), (2 * n + 1).into())
            || exact_q != BigRational::new(1.into(), (2 * (n + 1)).into())
        {
            return Err(format!("exact norm mismatch at n={n}"));
        }
    }
    let residual_free = (0..=15).all(|n| modified_legendre_ode_residual(n).is_zero());
    check(
        worst <= 1e-12 && residual_free,
        format!("max relative norm error {worst:.2e}, ODE residuals zero: {residual_free}"),
    )
}

fn lemma_inequalities() -> Outcome {
    let start = Instant::now();
    let mut violations = 0;
    let mut notes = Vec::new();
    for variant in LemmaVariant::ALL {
        let sweep = lemma_sweep(variant, 15, 1000, 2024).map_err(|e| e.to_string())?;
        violations += sweep.violations;
        notes.push(format!("{}={}", variant.name(), sweep.violations));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        violations == 0 && secs < 60.0,
        format!("violations [{}] in {secs:.1}s", notes.join(" ")),
    )
}

fn chain_residuals() -> Outcome {
    let mut count = 0;
    for d in 2..=13 {
        for nu in 0..=6 {
            let spec = ModeSpec::new(d, nu).unwrap();
            for kind in [ChainKind::Position, ChainKind::Velocity] {
                for k in 1..=max_chain_index(&spec, kind) {
                    let chain = chain_lift(spec, k, kind).map_err(|e| e.to_string())?;
                    if !chain.wave_residual().is_empty() {
                        return Err(format!("nonzero residual d={d} nu={nu} k={k} {}", kind.name()));
                    }
                    count += 1;
                }
            }
        }
    }
    let d7 = chain_lift(ModeSpec::radial(7).unwrap(), 2, ChainKind::Position).map_err(|e| e.to_string())?;
    check(
        d7.c.len() == 2 && d7.c[1] == rat(-3),
        format!("{count} chains exact; d=7 k=2 coefficient {}", d7.c[1]),
    )
}

fn random_mode(rng: &mut ChaCha8Rng, d: usize) -> ExteriorModeData {
    let nu = rng.gen_range(0..=3);
    let spec = ModeSpec::new(d, nu).unwrap();
    let radius = rng.gen_range(0.5..3.0);
    let a = (0..spec.k1_count()).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let b = (0..spec.k2_count()).map(|_| rng.gen_range(-2.0..2.0)).collect();
    build_exterior_mode(spec, radius, a, b).unwrap()
}

/// `int_R^inf f(r) dr` with `z = 1/r`, composite Gauss–Legendre in `z`.
fn exterior_integral(radius: f64, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_nodes(48).unwrap();
    let panels = 8;
    let h = 1.0 / radius / panels as f64;
    (0..panels)
        .map(|k| rule.integrate_on(k as f64 * h, (k + 1) as f64 * h, |z| f(1.0 / z) / (z * z)))
        .sum()
}

fn basis_norms() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let d = 3 + i % 5;
        let mode = random_mode(&mut rng, d);
        let spec = mode.spec();
        let lambda = (spec.nu() * (spec.nu() + d - 2)) as f64;
        let e = |r: f64| mode.eval_profiles(r).unwrap();
        let di = d as i32;
        let angular = exterior_integral(mode.radius(), |r| lambda * e(r).u0.powi(2) * r.powi(di - 3));
        let u1 = exterior_integral(mode.radius(), |r| e(r).u1.powi(2) * r.powi(di - 1));
        let du0 = exterior_integral(mode.radius(), |r| e(r).du0_dr.powi(2) * r.powi(di - 1));
        let s = mode.series_norms();
        for (series, quad) in [(s.angular, angular), (s.u1_norm2, u1), (s.du0_norm2, du0)] {
            if quad != 0.0 || series != 0.0 {
                worst = worst.max(rel(series, quad));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-10 && secs < 60.0,
        format!("100 modes, max relative difference {worst:.2e} in {secs:.1}s"),
    )
}

fn decay_inequality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a = rng.gen_range(-3.0..3.0);
        let radius = rng.gen_range(0.5..4.0);
        let mode = build_exterior_mode(ModeSpec::radial(3).unwrap(), radius, vec![a], vec![]).unwrap();
        let c = mode.decay_bound_check(2.0 * radius).map_err(|e| e.to_string())?;
        worst = worst.max((c.ratio - 1.0).abs());
    }
    let mut monotone = true;
    for i in 0..100 {
        let mode = random_mode(&mut rng, 3 + i % 5);
        let tails: Vec<f64> = (0..40)
            .map(|k| {
                mode.decay_bound_check(mode.radius() * (2.0 + 0.25 * k as f64))
                    .unwrap()
                    .tail
            })
            .collect();
        monotone &= tails.windows(2).all(|w| w[1] <= w[0]);
    }
    check(
        worst <= 1e-10 && monotone,
        format!("A/r ratio deviation {worst:.2e}; tails nonincreasing: {monotone}"),
    )
}

fn bump(r: f64) -> f64 {
    (-2.0 * (r - 3.0).powi(2)).exp() + (-2.0 * (r + 3.0).powi(2)).exp()
}

fn bump_prime(r: f64) -> f64 {
    -4.0 * ((r - 3.0) * (-2.0 * (r - 3.0).powi(2)).exp() + (r + 3.0) * (-2.0 * (r + 3.0).powi(2)).exp())
}

fn dalembert(r: f64, t: f64) -> f64 {
    if r == 0.0 {
        return bump(t) + t * bump_prime(t);
    }
    let f = |x: f64| x * bump(x);
    (f(r + t) + f(r - t)) / (2.0 * r)
}

fn radial3() -> ModeSpec {
    ModeSpec::radial(3).unwrap()
}

fn dalembert_error(n: usize, scheme: Scheme) -> f64 {
    let mut config = SolverConfig::new(20.0, n, 5.0);
    config.scheme = scheme;
    config.snapshots = 10;
    let field = RadialGridField::sample(
        radial3(),
        &config,
        bump,
        |_| 0.0,
        ExteriorKnowledge::Compact { support: 8.0 },
    )
    .unwrap();
    let traj = solve_mode_linear(&field, &config).unwrap();
    let k = traj.times.len() - 1;
    let t = traj.times[k];
    let front = config.contamination_front(t);
    traj.r
        .iter()
        .zip(&traj.u[k])
        .filter(|(r, _)| **r < front)
        .map(|(r, u)| (u - dalembert(*r, t)).abs())
        .fold(0.0, f64::max)
}

fn chain_error(n: usize) -> f64 {
    let mode = build_exterior_mode(ModeSpec::radial(7).unwrap(), 1.0, vec![0.0, 1.0], vec![0.0]).unwrap();
    let mut config = SolverConfig::new(20.0, n, 5.0);
    config.snapshots = 10;
    let field = RadialGridField::from_mode(&mode, 5, &config).unwrap();
    let exact = ExactExterior::from_mode(&mode).unwrap();
    let traj = solve_mode_linear(&field, &config).unwrap();
    let k = traj.times.len() - 1;
    let t = traj.times[k];
    let u = exact.u(t);
    let front = config.contamination_front(t);
    traj.r
        .iter()
        .zip(&traj.u[k])
        .filter(|(r, _)| **r > 1.0 + t && **r < front)
        .map(|(r, v)| (v - u.value(*r)).abs())
        .fold(0.0, f64::max)
}

fn ratios(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| w[0] / w[1]).collect()
}

fn solver_convergence() -> Outcome {
    let grids = [501, 1001, 2001];
    let mut all = Vec::new();
    for scheme in [Scheme::Leapfrog, Scheme::Rk4Mol] {
        all.extend(ratios(&grids.map(|n| dalembert_error(n, scheme))));
    }
    all.extend(ratios(&grids.map(chain_error)));
    let in_band = all.iter().all(|r| (3.6..=4.4).contains(r));

    let mut config = SolverConfig::new(30.0, 3001, 20.0);
    config.snapshots = 40;
    let field = RadialGridField::sample(
        radial3(),
        &config,
        bump,
        |r| 0.5 * bump(r),
        ExteriorKnowledge::Compact { support: 8.0 },
    )
    .unwrap();
    let linear = solve_mode_linear(&field, &config)
        .map_err(|e| e.to_string())?
        .energy_drift();

    let mut config = SolverConfig::new(50.0, 2001, 20.0);
    config.nonlinearity = Nonlinearity::DefocusingQuintic;
    config.snapshots = 100;
    let field = RadialGridField::sample(
        radial3(),
        &config,
        bump,
        |_| 0.0,
        ExteriorKnowledge::Compact { support: 8.0 },
    )
    .unwrap();
    let traj = solve_quintic(&field, &config).map_err(|e| e.to_string())?;
    let quintic = traj.energy_drift();
    let shown: Vec<String> = all.iter().map(|r| format!("{r:.3}")).collect();
    check(
        in_band && linear <= 1e-4 && quintic <= 1e-3 && traj.blow_up.is_none(),
        format!(
            "ratios [{}]; linear drift {linear:.2e}; quintic drift {quintic:.2e}",
            shown.join(" ")
        ),
    )
}

fn channel_config() -> SolverConfig {
    let mut c = SolverConfig::new(50.0, 2501, 20.0);
    c.snapshots = 40;
    c
}

fn gaussian(a: f64, b: f64, c: f64) -> impl Fn(f64) -> f64 {
    move |r| a * ((-b * (r - c).powi(2)).exp() + (-b * (r + c).powi(2)).exp())
}

fn channel_energy() -> Outcome {
    let start = Instant::now();
    let config = channel_config();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (a0, b0, c0) = (
            rng.gen_range(-1.5..1.5),
            rng.gen_range(1.0..3.0),
            rng.gen_range(2.0..4.0),
        );
        let (a1, b1, c1) = (
            rng.gen_range(-1.5..1.5),
            rng.gen_range(1.0..3.0),
            rng.gen_range(2.0..4.0),
        );
        let radius = rng.gen_range(0.5..2.0);
        let field = RadialGridField::sample(
            radial3(),
            &config,
            gaussian(a0, b0, c0),
            gaussian(a1, b1, c1),
            ExteriorKnowledge::Compact { support: 11.0 },
        )
        .unwrap();
        let id = channel_identity(&field, &config, radius, 1e-3).map_err(|e| e.to_string())?;
        worst = worst.max(id.relative_mismatch());
    }
    let mut basis_worst = 0.0f64;
    for (a, radius) in [(1.0, 1.0), (-0.7, 2.0), (2.5, 1.5)] {
        let mode = build_exterior_mode(radial3(), radius, vec![a], vec![]).unwrap();
        let field = RadialGridField::from_mode(&mode, 5, &config).unwrap();
        let id = channel_identity(&field, &config, radius, 1e-3).map_err(|e| e.to_string())?;
        basis_worst = basis_worst.max(id.lhs.abs().max(id.rhs.abs()) / id.total_energy);
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-2 && basis_worst < 1e-6,
        format!("max mismatch {worst:.2e}; basis data sides / energy {basis_worst:.2e}; {secs:.1}s"),
    )
}

/// `4 pi int_0^U (u0'^2 + u1^2) r^2 dr` by composite Gauss–Legendre.
fn direct_energy(u0_prime: impl Fn(f64) -> f64, u1: impl Fn(f64) -> f64, upper: f64) -> f64 {
    let rule = gauss_nodes(24).unwrap();
    let cells = (upper * 4.0) as usize;
    let h = upper / cells as f64;
    4.0 * PI
        * (0..cells)
            .map(|k| {
                rule.integrate_on(k as f64 * h, (k + 1) as f64 * h, |r| {
                    (u0_prime(r).powi(2) + u1(r).powi(2)) * r * r
                })
            })
            .sum::<f64>()
}

fn radiation_isometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut iso, mut trip) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (a0, b0, c0) = (
            rng.gen_range(-1.5..1.5),
            rng.gen_range(0.5..2.0),
            rng.gen_range(1.0..5.0),
        );
        let (a1, b1, c1) = (
            rng.gen_range(-1.5..1.5),
            rng.gen_range(0.5..2.0),
            rng.gen_range(1.0..5.0),
        );
        let d0 = move |r: f64| {
            -2.0 * a0 * b0 * ((r - c0) * (-b0 * (r - c0).powi(2)).exp() + (r + c0) * (-b0 * (r + c0).powi(2)).exp())
        };
        let config = SolverConfig::new(20.0, 4001, 1.0);
        let field = RadialGridField::sample(
            radial3(),
            &config,
            gaussian(a0, b0, c0),
            gaussian(a1, b1, c1),
            ExteriorKnowledge::Compact { support: 12.0 },
        )
        .unwrap();
        let g = forward_radiation(&field).map_err(|e| e.to_string())?;
        let direct = direct_energy(d0, gaussian(a1, b1, c1), 20.0);
        iso = iso.max(rel(2.0 * g.norm2(), direct));
        let back = inverse_radiation(&g).map_err(|e| e.to_string())?;
        for (x, y) in back.u0.iter().zip(&field.u0).chain(back.u1.iter().zip(&field.u1)) {
            trip = trip.max((x - y).abs());
        }
    }
    check(
        iso <= 1e-6 && trip <= 1e-8,
        format!("isometry relative error {iso:.2e}; round trip {trip:.2e}"),
    )
}

fn recursion_lemma() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut pairs = vec![(1.0, 5.0)];
    pairs.extend((0..10).map(|_| (rng.gen_range(0.2..3.0), rng.gen_range(2.0..8.0))));
    let (mut gamma_err, mut fit_err) = (0.0f64, 0.0f64);
    for (alpha, l) in pairs {
        let p = RecursionParams::with_default_seed(alpha, l).map_err(|e| e.to_string())?;
        let limit = (1.0 - 1.0 / l) * alpha;
        let g = gamma_sequence(&p, 200).map_err(|e| e.to_string())?;
        gamma_err = gamma_err.max((g[200] - limit).abs());
        let grid = (0.01 * (l - 1.0) / 8.0).exp();
        let rep = worst_case_s(&p, Seed::PowerLaw, 1.0, 1e6, grid).map_err(|e| e.to_string())?;
        let beta = rep.final_decade.beta.ok_or("no exponent fitted")?;
        fit_err = fit_err.max((beta - limit).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        gamma_err <= 1e-6 && fit_err <= 0.02,
        format!("gamma_200 error {gamma_err:.2e}; worst-case exponent error {fit_err:.4}; {secs:.1}s"),
    )
}

fn nonlinear_pipeline() -> Outcome {
    let start = Instant::now();
    let a = 0.5;
    let mut solver = SolverConfig::new(50.0, 2501, 4.0);
    solver.nonlinearity = Nonlinearity::DefocusingQuintic;
    solver.snapshots = 40;
    let mode = build_exterior_mode(radial3(), 1.0, vec![a], vec![]).unwrap();
    let input = PipelineInput {
        data: RadialGridField::from_mode(&mode, 5, &solver).unwrap(),
        solver,
        radius: 1.0,
        probe_radii: geometric_radii(2.0, 2.0, 5),
        floor: 1e-12,
    };
    let rep = nonlinear_decay_pipeline(&input).map_err(|e| e.to_string())?;
    let b = rep.dr_u0_report.beta.ok_or("no (b) exponent")?;
    let c = rep.l6_report.beta.ok_or("no (c) exponent")?;
    let secs = start.elapsed().as_secs_f64();
    check(
        (b - 1.0).abs() <= 0.05 && c >= 1.8 && rep.s_max_beyond_radius <= 1e-12 && secs <= 600.0,
        format!(
            "(b) exponent {b:.4}; (c) exponent {c:.3}; max S beyond R {:.1e}; {secs:.1}s",
            rep.s_max_beyond_radius
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("legendre identities", legendre_identities),
        ("polynomial lemma inequalities", lemma_inequalities),
        ("chain solutions", chain_residuals),
        ("basis norms vs quadrature", basis_norms),
        ("exterior decay inequality", decay_inequality),
        ("solver convergence and conservation", solver_convergence),
        ("exterior energy channel identity", channel_energy),
        ("radiation isometry and inversion", radiation_isometry),
        ("recursion lemma", recursion_lemma),
        ("nonlinear decay pipeline", nonlinear_pipeline),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
