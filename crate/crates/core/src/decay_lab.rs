//! The recursion lemma as an executable object, power-law fitting, and the
//! end-to-end decay pipeline for radial data in three dimensions.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::radial_solver::{
    l6_tail, solve_mode_linear, solve_quintic, ynorm_estimate, ExteriorKnowledge, Nonlinearity, RadialGridField,
    SolverConfig,
};
use crate::radiation3::{derivative4, forward_radiation, tail_s};

/// `ln(M / R)` for the seed band `[M, M^l]`.
pub const SEED_BAND_LOG: f64 = 0.01;

/// Parameters of `S(r2) <= c (r1/r2)^alpha + c S(r1)^l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecursionParams {
    pub alpha: f64,
    pub l: f64,
    pub gamma0: f64,
    #[serde(default = "default_half")]
    pub half_constant: f64,
}

fn default_half() -> f64 {
    0.5
}

impl RecursionParams {
    pub fn new(alpha: f64, l: f64, gamma0: f64) -> Result<Self> {
        let p = RecursionParams {
            alpha,
            l,
            gamma0,
            half_constant: 0.5,
        };
        p.validate()?;
        Ok(p)
    }

    /// Default seed exponent: half of the limit.
    pub fn with_default_seed(alpha: f64, l: f64) -> Result<Self> {
        Self::new(alpha, l, 0.5 * (1.0 - 1.0 / l) * alpha)
    }

    /// `(1 - 1/l) alpha`
    pub fn limit(&self) -> f64 {
        (1.0 - 1.0 / self.l) * self.alpha
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(invalid("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if !(self.l.is_finite() && self.l > 1.0 + 1e-9) {
            return Err(invalid("l", format!("must exceed 1, got {}", self.l)));
        }
        if !(self.gamma0 > 0.0 && self.gamma0 <= self.limit()) {
            return Err(invalid(
                "gamma0",
                format!(
                    "must lie in (0, (1-1/l) alpha] = (0, {}], got {}",
                    self.limit(),
                    self.gamma0
                ),
            ));
        }
        if !(self.half_constant > 0.0 && self.half_constant <= 0.5) {
            return Err(invalid(
                "half_constant",
                format!("must lie in (0, 1/2], got {}", self.half_constant),
            ));
        }
        Ok(())
    }

    fn step(&self, g: f64) -> f64 {
        self.alpha * g * self.l / (self.alpha + g * self.l)
    }
}

/// `gamma_0, ..., gamma_n` with `gamma_{k+1} = alpha gamma_k l / (alpha + gamma_k l)`.
pub fn gamma_sequence(params: &RecursionParams, n: usize) -> Result<Vec<f64>> {
    params.validate()?;
    let mut out = Vec::with_capacity(n + 1);
    let mut g = params.gamma0;
    out.push(g);
    for _ in 0..n {
        g = params.step(g);
        out.push(g);
    }
    Ok(out)
}

/// Samples `(r, value)` with a fitted power `value ~ r^{-beta}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub samples: Vec<(f64, f64)>,
    /// `None` when the samples do not admit a log-log fit (zeros).
    pub beta: Option<f64>,
    pub residual: Option<f64>,
}

impl DecayReport {
    pub fn from_samples(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(invalid("samples", "radii must be strictly increasing"));
        }
        if let Some(&(r, value)) = samples.iter().find(|(_, v)| !(*v >= 0.0)) {
            return Err(Error::NonPositive { r, value });
        }
        let fit = fit_exponent(&samples).ok();
        Ok(DecayReport {
            beta: fit.map(|f| f.beta),
            residual: fit.map(|f| f.residual),
            samples,
        })
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].1 <= w[0].1)
    }

    pub fn max_value(&self) -> f64 {
        self.samples.iter().map(|s| s.1).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub beta: f64,
    /// RMS of the log-space residuals.
    pub residual: f64,
}

/// Least squares `ln v = c - beta ln r`.
pub fn fit_exponent(samples: &[(f64, f64)]) -> Result<ExponentFit> {
    if samples.len() < 4 {
        return Err(Error::TooFewSamples {
            needed: 4,
            got: samples.len(),
        });
    }
    if let Some(&(r, value)) = samples.iter().find(|(r, v)| !(*v > 0.0 && *r > 0.0)) {
        return Err(Error::NonPositive { r, value });
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("samples", "radii must not all coincide"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - icept - slope * x).powi(2)).sum();
    Ok(ExponentFit {
        beta: -slope,
        residual: (rss / n).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub enum Seed {
    /// `S = c (r/R)^{-gamma0}` on the seed band.
    #[default]
    PowerLaw,
    /// `S = 0` on the seed band.
    Zero,
}

/// Scale thresholds `r2 >= ratio r1`, `r1 >= floor R` reported with the construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub ratio: f64,
    pub floor: f64,
    /// Grid points whose minimizing probe falls inside the thresholds.
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCaseReport {
    pub params: RecursionParams,
    pub seed: Seed,
    /// `S` on the geometric grid from `M` to `r_max`, radii in absolute units.
    pub profile: Vec<(f64, f64)>,
    /// Fit over the final decade.
    pub final_decade: DecayReport,
    pub target: f64,
    pub band: (f64, f64),
    /// `S(r) <= (r/R)^{-gamma0}` everywhere past `M`.
    pub induction_holds: bool,
    pub thresholds: Thresholds,
}

/// Largest `S` certified by the recursion at the lemma's probes.
///
/// Radii are measured in units of `R`. On `[M, M^l]` with `M = e^{0.01} R` the seed is
/// `c (r/R)^{-gamma0}` (or zero); beyond it `S(r2)` is the minimum of
/// `c (r1/r2)^alpha + c S(r1)^l` over the probes `r1 = M` and `r1 = r2^{theta_k}`,
/// `theta_k = alpha / (alpha + gamma_k l)` along the gamma ladder. `S(r1)` between grid
/// points is interpolated geometrically.
pub fn worst_case_s(
    params: &RecursionParams,
    seed: Seed,
    radius: f64,
    r_max: f64,
    grid_ratio: f64,
) -> Result<WorstCaseReport> {
    params.validate()?;
    if !(radius > 0.0) {
        return Err(invalid("R", format!("must be positive, got {radius}")));
    }
    if !(grid_ratio > 1.0) {
        return Err(invalid("grid_ratio", format!("must exceed 1, got {grid_ratio}")));
    }
    let h = grid_ratio.ln();
    let m = SEED_BAND_LOG;
    let band_end = params.l * m;
    if h > (band_end - m) / 4.0 {
        return Err(Error::GridTooCoarse(format!(
            "grid ratio {grid_ratio} leaves fewer than 4 cells in the seed band [M, M^l]; need ratio <= {}",
            ((band_end - m) / 4.0).exp()
        )));
    }
    let x_max = (r_max / radius).ln();
    if !(x_max > band_end + 10.0f64.ln()) {
        return Err(invalid(
            "r_max",
            "need r_max / R beyond the seed band by at least a decade",
        ));
    }
    let c = params.half_constant;
    let thetas: Vec<f64> = {
        let mut g = params.gamma0;
        let mut out = Vec::new();
        for _ in 0..400 {
            let th = params.alpha / (params.alpha + g * params.l);
            if out.last().is_some_and(|&t: &f64| (t - th).abs() < 1e-14) {
                break;
            }
            out.push(th);
            g = params.step(g);
        }
        out
    };

    let i0 = (m / h).round() as usize;
    let n = (x_max / h).floor() as usize + 1;
    let x = |i: usize| i as f64 * h;
    let mut s = vec![0.0f64; n];
    let at = |s: &[f64], x1: f64| -> f64 {
        let i = ((x1 / h).floor() as usize).clamp(i0, n - 2);
        let t = (x1 - x(i)) / h;
        let (a, b) = (s[i], s[i + 1]);
        if a > 0.0 && b > 0.0 {
            (a.ln() * (1.0 - t) + b.ln() * t).exp()
        } else {
            a * (1.0 - t) + b * t
        }
    };
    let mut violations = 0;
    for i in i0..n {
        let xi = x(i);
        if xi <= band_end + 1e-12 {
            s[i] = match seed {
                Seed::PowerLaw => c * (-params.gamma0 * xi).exp(),
                Seed::Zero => 0.0,
            };
            continue;
        }
        let s_m = s[i0];
        let mut best = c * (-params.alpha * (xi - x(i0))).exp() + c * s_m.powf(params.l);
        let mut best_x1 = x(i0);
        for &th in &thetas {
            let x1 = (th * xi).max(x(i0));
            if x1 >= x(i - 1) {
                continue;
            }
            let v = c * (-params.alpha * (xi - x1)).exp() + c * at(&s, x1).powf(params.l);
            if v < best {
                best = v;
                best_x1 = x1;
            }
        }
        if xi - best_x1 < 4.0f64.ln() || best_x1 < 16.0f64.ln() {
            violations += 1;
        }
        s[i] = best;
    }

    let profile: Vec<(f64, f64)> = (i0..n).map(|i| (radius * x(i).exp(), s[i])).collect();
    let induction_holds = (i0..n).all(|i| s[i] <= (-params.gamma0 * x(i)).exp() * (1.0 + 1e-12));
    let cut = r_max / 10.0;
    let final_decade = DecayReport::from_samples(profile.iter().copied().filter(|p| p.0 >= cut).collect())?;
    Ok(WorstCaseReport {
        params: *params,
        seed,
        profile,
        final_decade,
        target: params.limit(),
        band: (radius * m.exp(), radius * band_end.exp()),
        induction_holds,
        thresholds: Thresholds {
            ratio: 4.0,
            floor: 16.0,
            violations,
        },
    })
}

/// Inputs of the decay pipeline.
#[derive(Debug, Clone)]
pub struct PipelineInput {
    pub data: RadialGridField,
    pub solver: SolverConfig,
    pub radius: f64,
    pub probe_radii: Vec<f64>,
    /// Values of `S` at or below this count as zero.
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub radius: f64,
    pub probe_radii: Vec<f64>,
    /// `S(r)` of the data's backward radiation field.
    pub s_report: DecayReport,
    pub s_max_beyond_radius: f64,
    pub s_vanishes_beyond_radius: bool,
    pub s_nonincreasing: bool,
    /// `int_{|x|>r} |d_r u0|^2 dx`
    pub dr_u0_report: DecayReport,
    /// `max_t int_{|x|>r+|t|} |u|^6 dx` along the nonlinear run.
    pub l6_report: DecayReport,
    /// `||S_L(u0, u1)||_{Y(r)}` over the computed window.
    pub linear_ynorm: DecayReport,
    pub energy_drift: f64,
    pub blow_up: Option<f64>,
    /// The exterior of the data is not an exact basis combination.
    pub exploratory: bool,
}

fn require_geometric(radii: &[f64]) -> Result<()> {
    if radii.len() < 2 || radii[0] <= 0.0 {
        return Err(invalid("probe_radii", "need at least two positive radii"));
    }
    let q = radii[1] / radii[0];
    if !(q > 1.0) || radii.windows(2).any(|w| ((w[1] / w[0]) / q - 1.0).abs() > 1e-9) {
        return Err(invalid(
            "probe_radii",
            "radii must form an increasing geometric sequence",
        ));
    }
    Ok(())
}

/// `4 pi int_r^inf |u0'|^2 rho^2 d rho`, analytic beyond an exact exterior radius.
fn radial_gradient_tail(data: &RadialGridField, r: f64) -> f64 {
    let h = data.r[1] - data.r[0];
    let r_end = data.r[data.r.len() - 1];
    let (numeric_end, analytic) = match &data.exterior {
        ExteriorKnowledge::Exact(ext) => {
            let ur = ext.u(0.0).differentiate();
            let density = ur.mul(&ur).shift(2);
            let from = r.max(ext.radius);
            (from, density.tail_integral(from).unwrap_or(f64::INFINITY))
        }
        ExteriorKnowledge::Compact { support } => (support.min(r_end), 0.0),
        ExteriorKnowledge::Unknown => (r_end, 0.0),
    };
    let du = derivative4(&data.u0, h, false);
    let f: Vec<f64> = du.iter().zip(&data.r).map(|(d, x)| d * d * x * x).collect();
    let mut numeric = 0.0;
    if numeric_end > r {
        let a = r;
        let b = numeric_end;
        let at = |x: f64| -> f64 {
            let i = ((x / h).floor() as usize).min(f.len() - 2);
            let t = (x - data.r[i]) / h;
            f[i] * (1.0 - t) + f[i + 1] * t
        };
        let ia = (a / h).floor() as usize + 1;
        let ib = ((b / h).floor() as usize).min(f.len() - 1);
        if ia > ib {
            numeric = 0.5 * (at(a) + at(b)) * (b - a);
        } else {
            numeric = 0.5 * (at(a) + f[ia]) * (data.r[ia] - a);
            for i in ia..ib {
                numeric += 0.5 * h * (f[i] + f[i + 1]);
            }
            numeric += 0.5 * (f[ib] + at(b)) * (b - data.r[ib]);
        }
    }
    4.0 * PI * (numeric + analytic)
}

/// Radiation tail, gradient tail and nonlinear `L^6` tail at each probe radius.
pub fn nonlinear_decay_pipeline(input: &PipelineInput) -> Result<PipelineReport> {
    let data = &input.data;
    require_geometric(&input.probe_radii)?;
    if !(input.radius > 0.0) {
        return Err(invalid("R", format!("must be positive, got {}", input.radius)));
    }
    if matches!(input.solver.nonlinearity, Nonlinearity::None) {
        return Err(invalid(
            "nonlinearity",
            "the pipeline evolves a quintic equation; choose one",
        ));
    }
    let r_last = input.probe_radii[input.probe_radii.len() - 1];
    input.solver.require_uncontaminated(r_last)?;

    let g = forward_radiation(data)?;
    let s_samples: Vec<(f64, f64)> = input.probe_radii.iter().map(|&r| (r, tail_s(&g, r))).collect();
    let s_report = DecayReport::from_samples(s_samples)?;
    let grid_step = data.r[1] - data.r[0];
    let beyond: Vec<f64> =
        g.s.iter()
            .map(|s| s.abs())
            .filter(|s| *s >= input.radius)
            .step_by(((input.radius / grid_step).ceil() as usize).max(1))
            .map(|s| tail_s(&g, s))
            .collect();
    let s_max_beyond_radius = beyond.iter().copied().fold(tail_s(&g, input.radius), f64::max);

    let dr_u0_report = DecayReport::from_samples(
        input
            .probe_radii
            .iter()
            .map(|&r| (r, radial_gradient_tail(data, r)))
            .collect(),
    )?;

    let nonlinear = solve_quintic(data, &input.solver)?;
    let l6: Vec<(f64, f64)> = input
        .probe_radii
        .par_iter()
        .map(|&r| l6_tail(&nonlinear, r).map(|v| (r, v)))
        .collect::<Result<_>>()?;
    let l6_report = DecayReport::from_samples(l6)?;

    let mut linear_config = input.solver.clone();
    linear_config.nonlinearity = Nonlinearity::None;
    let forward = solve_mode_linear(data, &linear_config)?;
    let backward = solve_mode_linear(&data.time_reversed(), &linear_config)?;
    let ynorm: Vec<(f64, f64)> = input
        .probe_radii
        .par_iter()
        .map(|&r| ynorm_estimate(&forward, Some(&backward), r).map(|y| (r, y.value)))
        .collect::<Result<_>>()?;

    Ok(PipelineReport {
        radius: input.radius,
        probe_radii: input.probe_radii.clone(),
        s_nonincreasing: s_report.is_nonincreasing(),
        s_vanishes_beyond_radius: s_max_beyond_radius <= input.floor,
        s_max_beyond_radius,
        s_report,
        dr_u0_report,
        l6_report,
        linear_ynorm: DecayReport::from_samples(ynorm)?,
        energy_drift: nonlinear.energy_drift(),
        blow_up: nonlinear.blow_up,
        exploratory: !matches!(data.exterior, ExteriorKnowledge::Exact(_)),
    })
}

/// Probe radii `R0 q^j`, `j = 0..n`.
pub fn geometric_radii(r0: f64, q: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| r0 * q.powi(j as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fixed_point_is_constant() {
        let p = RecursionParams::new(1.0, 5.0, 0.8).unwrap();
        for g in gamma_sequence(&p, 20).unwrap() {
            assert_relative_eq!(g, 0.8, max_relative = 1e-15);
        }
    }

    #[test]
    fn params_reject_degenerate_values() {
        assert!(RecursionParams::new(1.0, 1.0, 0.1).is_err());
        assert!(RecursionParams::new(1.0, 1.0 + 1e-12, 1e-13).is_err());
        assert!(RecursionParams::new(0.0, 5.0, 0.1).is_err());
        assert!(RecursionParams::new(1.0, 5.0, 0.9).is_err());
        assert!(RecursionParams::new(1.0, 5.0, 0.0).is_err());
    }

    #[test]
    fn exact_power_law_fit() {
        let s: Vec<(f64, f64)> = (1..=10).map(|k| (k as f64, 3.0 / k as f64)).collect();
        let f = fit_exponent(&s).unwrap();
        assert!((f.beta - 1.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn constant_fit_is_flat() {
        let s: Vec<(f64, f64)> = (1..=6).map(|k| (k as f64, 2.5)).collect();
        assert!(fit_exponent(&s).unwrap().beta.abs() < 1e-14);
    }

    #[test]
    fn fit_rejects_bad_samples() {
        assert!(matches!(
            fit_exponent(&[(1.0, 1.0); 3]),
            Err(Error::TooFewSamples { .. })
        ));
        let s = [(1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 1.0)];
        assert!(matches!(fit_exponent(&s), Err(Error::NonPositive { .. })));
    }

    #[test]
    fn geometric_check() {
        assert!(require_geometric(&geometric_radii(2.0, 2.0, 5)).is_ok());
        assert!(require_geometric(&[1.0, 2.0, 3.0]).is_err());
    }
}
