use std::f64::consts::PI;

use serde::Serialize;

use super::{ExteriorKnowledge, Trajectory};
use crate::error::{invalid, Error, Result};

/// `int_a^b f dr` for samples on a uniform grid starting at 0, linear between nodes.
pub(crate) fn integrate_between(r: &[f64], f: &[f64], a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = r[1] - r[0];
    let n = r.len();
    let at = |x: f64| -> f64 {
        let i = ((x / h).floor() as usize).min(n - 2);
        let s = (x - r[i]) / h;
        f[i] * (1.0 - s) + f[i + 1] * s
    };
    let ia = ((a / h).floor() as usize + 1).min(n - 1);
    let ib = ((b / h).floor() as usize).min(n - 1);
    if ia > ib {
        return 0.5 * (at(a) + at(b)) * (b - a);
    }
    let mut total = 0.5 * (at(a) + f[ia]) * (r[ia] - a);
    for i in ia..ib {
        total += 0.5 * h * (f[i] + f[i + 1]);
    }
    total + 0.5 * (f[ib] + at(b)) * (b - r[ib])
}

/// Exterior cone energy `int_{R+|t|}^inf (u_t^2 + u_r^2) r^{D-1} dr` per frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeEnergySeries {
    pub radius: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Some frame lacks an exact description of the solution beyond the uncontaminated region.
    pub truncated: bool,
}

/// Upper limit of the numerical integral at time `t` and whether the rest is known exactly.
fn numeric_window(traj: &Trajectory, a: f64, t: f64, radius: f64) -> Result<(f64, bool)> {
    let front = traj.config.contamination_front(t);
    if a >= front {
        return Err(Error::ContaminatedCone { radius, t });
    }
    let exact = match &traj.exterior {
        ExteriorKnowledge::Exact(e) => e.radius + t.abs() <= front,
        ExteriorKnowledge::Compact { support } => support + t.abs() <= front,
        ExteriorKnowledge::Unknown => false,
    };
    Ok((front, exact))
}

pub fn cone_energy(traj: &Trajectory, radius: f64) -> Result<ConeEnergySeries> {
    if !(radius > 0.0) {
        return Err(invalid("R", format!("cone radius must be positive, got {radius}")));
    }
    let dim = traj.lifted_dim();
    let p = dim as i32 - 1;
    let mut values = Vec::with_capacity(traj.times.len());
    let mut truncated = false;
    for (k, &t) in traj.times.iter().enumerate() {
        let a = radius + t.abs();
        let (b, exact) = numeric_window(traj, a, t, radius)?;
        let ur = traj.ur(k);
        let f: Vec<f64> = (0..traj.r.len())
            .map(|i| (traj.ut[k][i].powi(2) + ur[i].powi(2)) * traj.r[i].powi(p))
            .collect();
        let mut e = integrate_between(&traj.r, &f, a, b);
        if exact {
            if let ExteriorKnowledge::Exact(ext) = &traj.exterior {
                e += ext.energy_tail(b, t, dim);
            }
        } else {
            truncated = true;
        }
        values.push(e);
    }
    Ok(ConeEnergySeries {
        radius,
        times: traj.times.clone(),
        values,
        truncated,
    })
}

/// Limit of the cone energy as `|t| -> inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeLimit {
    pub limit: f64,
    /// Energy at the last frame.
    pub last: f64,
    /// Difference between the extrapolations from `(T/4, T/2)` and `(T/2, T)`.
    pub cauchy_difference: f64,
    pub stabilized: bool,
}

/// Extrapolate `E(t) = E_inf + K / (R + |t|)` from the frames at `T/4`, `T/2` and `T`.
pub fn cone_energy_limits(series: &ConeEnergySeries, tolerance: f64) -> Result<ConeLimit> {
    let n = series.times.len();
    if n < 5 {
        return Err(Error::TooFewSamples { needed: 5, got: n });
    }
    let last = n - 1;
    let (i0, i1, i2) = (last / 4, last / 2, last);
    let a = |i: usize| series.radius + series.times[i].abs();
    let fit = |i: usize, j: usize| -> f64 {
        let (ei, ej) = (series.values[i], series.values[j]);
        let k = (ei - ej) / (1.0 / a(i) - 1.0 / a(j));
        ej - k / a(j)
    };
    let limit = fit(i1, i2);
    let cauchy_difference = (limit - fit(i0, i1)).abs();
    Ok(ConeLimit {
        limit,
        last: series.values[last],
        cauchy_difference,
        stabilized: cauchy_difference <= tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YNormReport {
    pub value: f64,
    /// Same estimate restricted to the first half of the time window.
    pub half_window: f64,
    pub relative_change: f64,
    pub truncated: bool,
}

fn require_three(traj: &Trajectory) -> Result<()> {
    if traj.lifted_dim() != 3 {
        return Err(invalid(
            "trajectory",
            "space-time norms are defined for radial data in d = 3",
        ));
    }
    Ok(())
}

/// `4 pi int_{r+|t|}^inf |u|^p rho^2 d rho` for frame `k`.
fn power_integral(traj: &Trajectory, k: usize, r: f64, p: usize) -> Result<(f64, bool)> {
    let t = traj.times[k];
    let a = r + t.abs();
    let (b, exact) = numeric_window(traj, a, t, r)?;
    let f: Vec<f64> = traj.u[k]
        .iter()
        .zip(&traj.r)
        .map(|(u, rho)| u.abs().powi(p as i32) * rho * rho)
        .collect();
    let mut v = integrate_between(&traj.r, &f, a, b);
    if exact {
        if let ExteriorKnowledge::Exact(ext) = &traj.exterior {
            v += ext.power_tail(b, t, p, 3);
        }
    }
    Ok((4.0 * PI * v, !exact))
}

/// `(int (int_{|x|>r+|t|} |u|^10 dx)^{1/2} dt)^{1/5}` over the computed window.
///
/// `backward` (data `(u0, -u1)` evolved forward) supplies negative times.
pub fn ynorm_estimate(forward: &Trajectory, backward: Option<&Trajectory>, r: f64) -> Result<YNormReport> {
    require_three(forward)?;
    let mut truncated = false;
    let mut side = |traj: &Trajectory| -> Result<(f64, f64)> {
        require_three(traj)?;
        let g: Vec<f64> = (0..traj.times.len())
            .map(|k| {
                power_integral(traj, k, r, 10).map(|(v, tr)| {
                    truncated |= tr;
                    v.sqrt()
                })
            })
            .collect::<Result<_>>()?;
        let trap = |m: usize| -> f64 {
            (0..m)
                .map(|k| 0.5 * (traj.times[k + 1] - traj.times[k]) * (g[k] + g[k + 1]))
                .sum()
        };
        let last = g.len() - 1;
        Ok((trap(last), trap(last / 2)))
    };
    let (mut full, mut half) = side(forward)?;
    if let Some(b) = backward {
        let (f2, h2) = side(b)?;
        full += f2;
        half += h2;
    }
    let value = full.powf(0.2);
    let half_window = half.powf(0.2);
    Ok(YNormReport {
        value,
        half_window,
        relative_change: if value > 0.0 {
            (value - half_window).abs() / value
        } else {
            0.0
        },
        truncated,
    })
}

/// `max_t int_{|x|>r+|t|} |u|^6 dx` over the stored frames.
pub fn l6_tail(traj: &Trajectory, r: f64) -> Result<f64> {
    require_three(traj)?;
    let mut best: f64 = 0.0;
    for k in 0..traj.times.len() {
        best = best.max(power_integral(traj, k, r, 6)?.0);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DuhamelReport {
    pub time: f64,
    /// `max |r (u_nl - u_lin) - Duhamel integral|` over the uncontaminated region.
    pub max_difference: f64,
    /// `max |r (u_nl - u_lin)|` over the same region.
    pub max_nonlinear_part: f64,
}

/// Compare `r (u - u_lin)` at frame `k` with the explicit Duhamel integral
/// `1/2 int_0^t int_{r-(t-s)}^{r+(t-s)} rho F(u(rho, s)) d rho ds` (odd extension in `rho`).
pub fn duhamel_check(nonlinear: &Trajectory, linear: &Trajectory, k: usize) -> Result<DuhamelReport> {
    require_three(nonlinear)?;
    if nonlinear.times.len() != linear.times.len() || nonlinear.r != linear.r || k >= nonlinear.times.len() {
        return Err(invalid(
            "trajectories",
            "nonlinear and linear runs must share grid and frames",
        ));
    }
    let r = &nonlinear.r;
    let h = r[1] - r[0];
    let n = r.len();
    let t = nonlinear.times[k];
    let nl = &nonlinear.config.nonlinearity;
    // cumulative S_j(rho) = int_0^rho s(., tau_j)
    let cumulative: Vec<Vec<f64>> = (0..=k)
        .map(|j| {
            let s: Vec<f64> = r
                .iter()
                .zip(&nonlinear.u[j])
                .map(|(rho, u)| rho * nl.source(*u))
                .collect();
            let mut c = vec![0.0; n];
            for i in 1..n {
                c[i] = c[i - 1] + 0.5 * h * (s[i] + s[i - 1]);
            }
            c
        })
        .collect();
    let interp = |c: &[f64], x: f64| -> f64 {
        let x = x.abs().min(r[n - 1]);
        let i = ((x / h).floor() as usize).min(n - 2);
        let s = (x - r[i]) / h;
        c[i] * (1.0 - s) + c[i + 1] * s
    };
    let front = nonlinear.config.contamination_front(t);
    let mut max_difference: f64 = 0.0;
    let mut max_part: f64 = 0.0;
    for (i, &ri) in r.iter().enumerate() {
        if ri + t >= front {
            break;
        }
        let inner: Vec<f64> = (0..=k)
            .map(|j| {
                let span = t - nonlinear.times[j];
                let c = &cumulative[j];
                // S is even in rho since the odd-extended source integrates to an even function
                interp(c, ri + span) - interp(c, ri - span)
            })
            .collect();
        let mut duhamel = 0.0;
        for j in 0..k {
            duhamel += 0.5 * (nonlinear.times[j + 1] - nonlinear.times[j]) * (inner[j] + inner[j + 1]);
        }
        duhamel *= 0.5;
        let part = ri * (nonlinear.u[k][i] - linear.u[k][i]);
        max_difference = max_difference.max((part - duhamel).abs());
        max_part = max_part.max(part.abs());
    }
    Ok(DuhamelReport {
        time: t,
        max_difference,
        max_nonlinear_part: max_part,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrate_linear_function_exactly() {
        let r: Vec<f64> = (0..11).map(|i| i as f64 * 0.5).collect();
        let f: Vec<f64> = r.iter().map(|x| 2.0 * x + 1.0).collect();
        // int_{0.3}^{3.7} (2x+1) dx
        let exact = (3.7f64 * 3.7 + 3.7) - (0.3f64 * 0.3 + 0.3);
        assert_relative_eq!(integrate_between(&r, &f, 0.3, 3.7), exact, max_relative = 1e-14);
        assert_relative_eq!(
            integrate_between(&r, &f, 0.6, 0.9),
            0.9 * 0.9 + 0.9 - 0.6 * 0.6 - 0.6,
            max_relative = 1e-14
        );
    }

    #[test]
    fn limit_of_exact_model() {
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.5).collect();
        let values = times.iter().map(|t| 0.3 + 2.0 / (1.0 + t)).collect();
        let s = ConeEnergySeries {
            radius: 1.0,
            times,
            values,
            truncated: false,
        };
        let l = cone_energy_limits(&s, 1e-12).unwrap();
        assert_relative_eq!(l.limit, 0.3, max_relative = 1e-12);
        assert!(l.stabilized);
    }
}
