//! Subcommand bodies. Each returns the `result` section of its JSON report.

use nonrad::decay_lab::{
    gamma_sequence, geometric_radii, nonlinear_decay_pipeline, worst_case_s, DecayReport, PipelineInput,
    RecursionParams,
};
use nonrad::exact_evolution::{ChainKind, ExactExterior};
use nonrad::exterior_basis::{radial_span, ExteriorModeData};
use nonrad::polylib::{gauss_nodes, lemma_sweep};
use nonrad::radial_solver::{
    cone_energy, cone_energy_limits, duhamel_check, l6_tail, solve_mode_linear, solve_quintic, ynorm_estimate,
    Nonlinearity, RadialGridField, Trajectory,
};
use nonrad::radiation3::{
    channel_identity, data_energy, forward_radiation, inverse_radiation, numeric_radiation, tail_s, RadiationProfile,
    Side,
};
use serde_json::{json, Value};

use crate::config::{
    BasisCheck, BasisParams, DataSpec, EnergyParams, EvolveParams, ExperimentConfig, LemmasParams, NlwParams,
    PipelineParams, RadiationParams,
};
use crate::output::Sink;

/// A failed run: exit code, a short kind, an actionable message and diagnostics.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: String,
    pub message: String,
    pub diagnostic: Value,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            kind: "validation".into(),
            message: message.into(),
            diagnostic: Value::Null,
        }
    }

    pub fn numerical(kind: &str, message: impl Into<String>, diagnostic: Value) -> Self {
        Failure {
            code: 2,
            kind: kind.into(),
            message: message.into(),
            diagnostic,
        }
    }
}

impl From<nonrad::Error> for Failure {
    fn from(e: nonrad::Error) -> Self {
        use nonrad::Error as E;
        let (code, kind) = match &e {
            E::NonFinite { .. } => (2, "non_finite"),
            E::NotStabilized { .. } => (2, "not_stabilized"),
            E::InvalidArgument { .. } => (1, "invalid_argument"),
            E::MismatchedWeight { .. } => (1, "mismatched_weight"),
            E::WrongLength { .. } => (1, "wrong_length"),
            E::NotExterior { .. } => (1, "not_exterior"),
            E::InadmissibleChain { .. } => (1, "inadmissible_chain"),
            E::UnderResolved { .. } => (1, "under_resolved"),
            E::Cfl { .. } => (1, "cfl"),
            E::DomainTooSmall { .. } => (1, "domain_too_small"),
            E::ContaminatedCone { .. } => (1, "contaminated_cone"),
            E::GridTooCoarse(_) => (1, "grid_too_coarse"),
            E::TooFewSamples { .. } => (1, "too_few_samples"),
            E::NonPositive { .. } => (1, "non_positive"),
        };
        Failure {
            code,
            kind: kind.into(),
            message: e.to_string(),
            diagnostic: Value::Null,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure {
            code: 1,
            kind: "io".into(),
            message: format!("{e:#}"),
            diagnostic: Value::Null,
        }
    }
}

type Outcome = Result<Value, Failure>;

fn rows(cols: &[&[f64]]) -> Vec<Vec<f64>> {
    (0..cols[0].len())
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect()
}

fn trajectory_rows(traj: &Trajectory) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(traj.times.len() * traj.r.len());
    for (k, &t) in traj.times.iter().enumerate() {
        for (i, &r) in traj.r.iter().enumerate() {
            out.push(vec![t, r, traj.u[k][i], traj.ut[k][i]]);
        }
    }
    out
}

fn decay_csv(sink: &mut Sink, name: &str, report: &DecayReport) -> anyhow::Result<()> {
    let table: Vec<Vec<f64>> = report.samples.iter().map(|&(r, v)| vec![r, v]).collect();
    sink.csv(name, &["r", "value"], &table)
}

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// `int_{|x|>R} g` for a radial integrand, through `r = 1/z` and Gauss-Legendre in `z`.
fn exterior_quadrature(mode: &ExteriorModeData, nodes: usize, g: impl Fn(f64) -> f64) -> nonrad::Result<f64> {
    let rule = gauss_nodes(nodes)?;
    Ok(rule.integrate_on(0.0, 1.0 / mode.radius(), |z| {
        let r = 1.0 / z;
        g(r) / (z * z)
    }))
}

pub fn basis(cfg: &ExperimentConfig<BasisParams>, sink: &mut Sink) -> Outcome {
    let p = &cfg.params;
    let spec = nonrad::exterior_basis::ModeSpec::new(p.d, p.nu)?;
    let mode = nonrad::exterior_basis::build_exterior_mode(spec, p.radius, p.a.clone(), p.b.clone())?;
    let norms = mode.series_norms();
    let mut result = json!({
        "mu": spec.mu(),
        "lifted_dim": spec.lifted_dim(),
        "k1": spec.k1_count(),
        "k2": spec.k2_count(),
        "p_exponents": (1..=spec.k1_count()).map(|k| spec.p_exponent(k)).collect::<Vec<_>>(),
        "q_exponents": (1..=spec.k2_count()).map(|k| spec.q_exponent(k)).collect::<Vec<_>>(),
        "series_norms": norms,
    });
    if p.nu == 0 {
        result["radial_span"] = serde_json::to_value(radial_span(p.d)).expect("serializable");
    }
    if p.checks.contains(&BasisCheck::Part2) {
        let d = p.d as i32;
        let lambda = spec.angular_eigenvalue() as f64;
        let eval = |r: f64| mode.eval_profiles(r).expect("quadrature nodes lie outside R");
        let angular = exterior_quadrature(&mode, p.quadrature_nodes, |r| {
            lambda * eval(r).u0.powi(2) * r.powi(d - 3)
        })?;
        let u1 = exterior_quadrature(&mode, p.quadrature_nodes, |r| eval(r).u1.powi(2) * r.powi(d - 1))?;
        let du0 = exterior_quadrature(&mode, p.quadrature_nodes, |r| eval(r).du0_dr.powi(2) * r.powi(d - 1))?;
        let entry = |series: f64, quad: f64| json!({"series": series, "quadrature": quad, "relative_difference": relative(series, quad)});
        result["part2"] = json!({
            "angular": entry(norms.angular, angular),
            "u1_norm2": entry(norms.u1_norm2, u1),
            "du0_norm2": entry(norms.du0_norm2, du0),
        });
    }
    if p.checks.contains(&BasisCheck::Part3) {
        let radii = if p.r1.is_empty() {
            vec![2.0 * p.radius]
        } else {
            p.r1.clone()
        };
        let checks = radii
            .iter()
            .map(|&r1| mode.decay_bound_check(r1).map(|c| json!({"r1": r1, "check": c})))
            .collect::<nonrad::Result<Vec<_>>>()?;
        result["part3"] = Value::from(checks);
    }
    let table: Vec<Vec<f64>> = (1..=200)
        .map(|k| {
            let r = p.radius * (1.0 + 0.05 * k as f64);
            let v = mode.eval_profiles(r).expect("r > R");
            vec![r, v.u0, v.u1, v.du0_dr]
        })
        .collect();
    sink.csv("basis_profiles.csv", &["r", "u0", "u1", "du0_dr"], &table)?;
    Ok(result)
}

fn chain_json(ext: &ExactExterior) -> Value {
    Value::from(
        ext.chains
            .iter()
            .map(|(w, c)| {
                json!({
                    "kind": c.kind.name(),
                    "k": c.k,
                    "weight": w,
                    "coefficients": c.c.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                    "terms": c.terms().iter().map(|(x, tp, rp)| json!({"c": x.to_string(), "t_power": tp, "r_power": rp})).collect::<Vec<_>>(),
                })
            })
            .collect::<Vec<_>>(),
    )
}

pub fn evolve(cfg: &ExperimentConfig<EvolveParams>, sink: &mut Sink) -> Outcome {
    let p = &cfg.params;
    if p.exact {
        let mode = p
            .data
            .mode()?
            .ok_or_else(|| Failure::validation("`exact` evolution requires data of kind \"mode\""))?;
        p.solver.validate()?;
        let ext = ExactExterior::from_mode(&mode)?;
        let grid = p.solver.grid();
        let frames = p.solver.snapshots.max(1);
        let mut table = Vec::new();
        for k in 0..=frames {
            let t = p.solver.t_final * k as f64 / frames as f64;
            let (u, ut) = (ext.u(t), ext.ut(t));
            for &r in grid.iter().filter(|&&r| r > mode.radius() + t) {
                table.push(vec![t, r, u.value(r), ut.value(r)]);
            }
        }
        sink.csv("evolve_exact.csv", &["t", "r", "u", "ut"], &table)?;
        return Ok(json!({
            "frame": "lifted",
            "valid_region": "r > R + |t|",
            "chains": chain_json(&ext),
            "has_position_chain": ext.chains.iter().any(|(_, c)| c.kind == ChainKind::Position),
        }));
    }
    let field = p.data.field(&p.solver)?;
    let traj = solve_mode_linear(&field, &p.solver)?;
    sink.csv("evolve_trajectory.csv", &["t", "r", "u", "ut"], &trajectory_rows(&traj))?;
    Ok(json!({
        "frames": traj.times.len(),
        "dt": traj.dt,
        "energy_initial": traj.energy[0],
        "energy_final": traj.energy[traj.energy.len() - 1],
        "energy_drift": traj.energy_drift(),
    }))
}

fn cone_radius(data: &DataSpec, given: Option<f64>, what: &str) -> Result<f64, Failure> {
    given
        .or(data.radius())
        .ok_or_else(|| Failure::validation(format!("`{what}` is required for data without an exterior radius")))
}

pub fn energy(cfg: &ExperimentConfig<EnergyParams>, sink: &mut Sink) -> Outcome {
    let p = &cfg.params;
    let radius = cone_radius(&p.data, p.cone_radius, "cone_radius")?;
    let field = p.data.field(&p.solver)?;
    let traj = solve_mode_linear(&field, &p.solver)?;
    let series = cone_energy(&traj, radius)?;
    let tolerance = cfg.tolerances.stabilization * traj.energy[0].abs();
    let limit = cone_energy_limits(&series, tolerance)?;
    sink.csv(
        "energy_series.csv",
        &["t", "E_ext"],
        &rows(&[&series.times, &series.values]),
    )?;
    let mut result = json!({
        "radius": radius,
        "total_energy": traj.energy[0],
        "truncated": series.truncated,
        "limit": limit,
    });
    if let Some(mode) = p.data.mode()? {
        let ext = ExactExterior::from_mode(&mode)?;
        if radius >= mode.radius() {
            let dim = mode.spec().lifted_dim();
            let worst = series
                .times
                .iter()
                .zip(&series.values)
                .map(|(&t, &e)| relative(e, ext.energy_tail(radius + t.abs(), t, dim)))
                .fold(0.0, f64::max);
            result["max_relative_deviation_from_exact"] = json!(worst);
        }
    }
    if p.channel {
        let id = channel_identity(&field, &p.solver, radius, cfg.tolerances.stabilization)?;
        result["channel_identity"] = json!({"identity": id, "relative_mismatch": id.relative_mismatch()});
        if !id.stabilized {
            return Err(Failure::numerical(
                "not_stabilized",
                "cone energy limits in the channel identity did not stabilize; lengthen t_final or loosen tolerances.stabilization",
                result,
            ));
        }
    }
    if !limit.stabilized {
        return Err(Failure::numerical(
            "not_stabilized",
            format!(
                "cone energy limit did not stabilize: Cauchy difference {} exceeds {}; lengthen t_final",
                limit.cauchy_difference, tolerance
            ),
            result,
        ));
    }
    Ok(result)
}

fn profile_rows(g: &RadiationProfile) -> Vec<Vec<f64>> {
    rows(&[&g.s, &g.g])
}

fn max_abs_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn radiation(cfg: &ExperimentConfig<RadiationParams>, sink: &mut Sink) -> Outcome {
    let p = &cfg.params;
    let field = p.data.field(&p.solver)?;
    let minus = forward_radiation(&field)?;
    let energy = data_energy(&field)?;
    let inverse = inverse_radiation(&minus)?;
    let round_trip = json!({
        "u0_max_error": max_abs_difference(&inverse.u0, &field.u0),
        "u1_max_error": max_abs_difference(&inverse.u1, &field.u1),
        "u0_scale": max_abs(&field.u0),
        "u1_scale": max_abs(&field.u1),
    });
    let g = match p.side {
        Side::Minus => minus,
        Side::Plus => minus.reflected()?,
    };
    let norm2 = g.norm2();
    let tails: Vec<Value> = p
        .tail_radii
        .iter()
        .map(|&r| json!({"r": r, "s": tail_s(&g, r)}))
        .collect();
    sink.csv("radiation.csv", &["s", "g"], &profile_rows(&g))?;
    let mut result = json!({
        "side": g.side,
        "norm2": norm2,
        "data_energy": energy,
        "isometry_ratio": if norm2 > 0.0 { energy / (2.0 * norm2) } else { f64::NAN },
        "support_radius": g.support_radius(),
        "tails": tails,
        "round_trip": round_trip,
    });
    if p.numeric {
        let traj = match p.side {
            Side::Plus => solve_mode_linear(&field, &p.solver)?,
            Side::Minus => solve_mode_linear(&field.time_reversed(), &p.solver)?,
        };
        let num = numeric_radiation(&traj, p.side, cfg.tolerances.stabilization)?;
        let deviation = num
            .profile
            .s
            .iter()
            .zip(&num.profile.g)
            .map(|(&s, &v)| (v - g.value(s)).abs())
            .fold(0.0, f64::max);
        sink.csv("radiation_numeric.csv", &["s", "g"], &profile_rows(&num.profile))?;
        result["numeric"] = json!({
            "times": num.times,
            "difference": num.difference,
            "relative_difference": num.relative_difference,
            "stabilized": num.stabilized,
            "max_deviation_from_data_formula": deviation,
            "scale": max_abs(&g.g),
        });
        if !num.stabilized {
            return Err(Failure::numerical(
                "not_stabilized",
                format!(
                    "radiation extraction did not stabilize: relative difference {} exceeds {}; lengthen t_final",
                    num.relative_difference, cfg.tolerances.stabilization
                ),
                result,
            ));
        }
    }
    Ok(result)
}

fn require_nonlinear(n: &Nonlinearity) -> Result<(), Failure> {
    if n.is_linear() {
        return Err(Failure::validation(
            "solver.nonlinearity must be \"defocusing_quintic\" or \"focusing_quintic\" for this subcommand",
        ));
    }
    Ok(())
}

fn blow_up_failure(t: f64, traj: &Trajectory, result: Value) -> Failure {
    let mut diagnostic = result;
    diagnostic["blow_up_time"] = json!(t);
    diagnostic["energy_series"] = json!(traj
        .times
        .iter()
        .zip(&traj.energy)
        .map(|(t, e)| [*t, *e])
        .collect::<Vec<_>>());
    Failure::numerical(
        "blow_up",
        format!(
            "solution exceeded blowup_threshold = {} at t = {t}; reduce the data amplitude or raise the threshold",
            traj.config.blowup_threshold
        ),
        diagnostic,
    )
}

pub fn nlw(cfg: &ExperimentConfig<NlwParams>, sink: &mut Sink) -> Outcome {
    let p = &cfg.params;
    require_nonlinear(&p.solver.nonlinearity)?;
    let field = p.data.field(&p.solver)?;
    let traj = solve_quintic(&field, &p.solver)?;
    sink.csv("nlw_trajectory.csv", &["t", "r", "u", "ut"], &trajectory_rows(&traj))?;
    sink.csv("nlw_energy.csv", &["t", "E"], &rows(&[&traj.times, &traj.energy]))?;
    let mut result = json!({
        "frames": traj.times.len(),
        "dt": traj.dt,
        "energy_drift": traj.energy_drift(),
        "blow_up": traj.blow_up,
    });
    if let Some(t) = traj.blow_up {
        return Err(blow_up_failure(t, &traj, result));
    }
    let probes = p
        .probe_radii
        .iter()
        .map(|&r| -> nonrad::Result<Value> {
            Ok(json!({"r": r, "l6_tail": l6_tail(&traj, r)?, "ynorm": ynorm_estimate(&traj, None, r)?}))
        })
        .collect::<nonrad::Result<Vec<_>>>()?;
    result["probes"] = Value::from(probes);
    if p.duhamel {
        let mut linear = p.solver.clone();
        linear.nonlinearity = Nonlinearity::None;
        let lin = solve_mode_linear(&field, &linear)?;
        result["duhamel"] = json!(duhamel_check(&traj, &lin, traj.times.len() - 1)?);
    }
    Ok(result)
}

pub fn lemmas(cfg: &ExperimentConfig<LemmasParams>, sink: &mut Sink) -> Outcome {
    let p = &cfg.params;
    let sweeps = p
        .variant
        .variants()
        .into_iter()
        .map(|v| lemma_sweep(v, p.degree_max, p.trials, cfg.seed))
        .collect::<nonrad::Result<Vec<_>>>()?;
    let violations: usize = sweeps.iter().map(|s| s.violations).sum();
    let mut result = json!({"violations": violations, "sweeps": sweeps});
    if let Some(run) = &p.recursion {
        let params = match run.gamma0 {
            Some(g) => RecursionParams::new(run.alpha, run.l, g)?,
            None => RecursionParams::with_default_seed(run.alpha, run.l)?,
        };
        let gammas = gamma_sequence(&params, run.gamma_steps)?;
        let grid_ratio = run.grid_ratio.unwrap_or_else(|| (0.01 * (run.l - 1.0) / 8.0).exp());
        let report = worst_case_s(&params, run.seed_kind, 1.0, run.r_max_ratio, grid_ratio)?;
        let table: Vec<Vec<f64>> = report.profile.iter().map(|&(r, s)| vec![r, s]).collect();
        sink.csv("lemmas_recursion.csv", &["r", "value"], &table)?;
        let last = gammas[gammas.len() - 1];
        result["recursion"] = json!({
            "params": params,
            "limit": params.limit(),
            "gamma_last": last,
            "gamma_gap": params.limit() - last,
            "gamma_sequence": gammas,
            "grid_ratio": grid_ratio,
            "final_decade_beta": report.final_decade.beta,
            "final_decade_residual": report.final_decade.residual,
            "beta_gap": report.final_decade.beta.map(|b| params.limit() - b),
            "band": report.band,
            "induction_holds": report.induction_holds,
            "thresholds": report.thresholds,
        });
    }
    Ok(result)
}

pub fn pipeline(cfg: &ExperimentConfig<PipelineParams>, sink: &mut Sink) -> Outcome {
    let p = &cfg.params;
    require_nonlinear(&p.solver.nonlinearity)?;
    let radius = cone_radius(&p.data, p.radius, "radius")?;
    if p.probe_count < 2 {
        return Err(Failure::validation("probe_count must be at least 2"));
    }
    let data: RadialGridField = p.data.field(&p.solver)?;
    let input = PipelineInput {
        data,
        solver: p.solver.clone(),
        radius,
        probe_radii: geometric_radii(p.probe_start.unwrap_or(2.0 * radius), p.probe_ratio, p.probe_count),
        floor: cfg.tolerances.floor,
    };
    let report = nonlinear_decay_pipeline(&input)?;
    let result = serde_json::to_value(&report).map_err(|e| Failure::from(anyhow::Error::from(e)))?;
    if let Some(t) = report.blow_up {
        return Err(Failure::numerical(
            "blow_up",
            format!("nonlinear run exceeded blowup_threshold at t = {t}; reduce the data amplitude"),
            result,
        ));
    }
    decay_csv(sink, "pipeline_s.csv", &report.s_report)?;
    decay_csv(sink, "pipeline_dr_u0.csv", &report.dr_u0_report)?;
    decay_csv(sink, "pipeline_l6.csv", &report.l6_report)?;
    decay_csv(sink, "pipeline_ynorm.csv", &report.linear_ynorm)?;
    Ok(result)
}
