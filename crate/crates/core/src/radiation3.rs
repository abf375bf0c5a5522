//! Radiation fields of radial waves.
//!
//! For radial data in three dimensions `w = r u` solves the one-dimensional wave
//! equation, `w(r, t) = psi(r + t) - psi(t - r)`, and the backward radiation field is
//! `G_-(s) = psi'(s)`. Explicit transforms are provided for that case; other lifted
//! dimensions are handled by sampling `r^{(D-1)/2} u_t` along outgoing rays.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact_evolution::ExactExterior;
use crate::exterior_basis::{build_exterior_mode, ModeSpec, RadialProfile};
use crate::radial_solver::{
    cone_energy, cone_energy_limits, solve_mode_linear, ConeLimit, ExteriorKnowledge, RadialGridField, SolverConfig,
    Trajectory,
};

/// Factor between `psi'` and `G_-`, fixed by `||(u0, u1)||^2 = 2 ||G_-||^2`.
pub const RADIATION_NORMALIZATION: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub enum Side {
    Plus,
    Minus,
}

/// Samples of a radiation field on an increasing `s` grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiationProfile {
    pub s: Vec<f64>,
    pub g: Vec<f64>,
    /// Quadrature weights for integrals in `s`.
    pub weights: Vec<f64>,
    pub side: Side,
    pub spec: ModeSpec,
}

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    2.0 * PI.powf(half) / gamma_half_integer(d)
}

/// `Gamma(d/2)` for positive integers `d`.
fn gamma_half_integer(d: usize) -> f64 {
    let (mut acc, mut x) = if d.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    while x < d as f64 / 2.0 {
        acc *= x;
        x += 1.0;
    }
    acc
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

impl RadiationProfile {
    pub fn zero_like(&self) -> Self {
        RadiationProfile {
            g: vec![0.0; self.g.len()],
            ..self.clone()
        }
    }

    /// Angular factor of `L^2(R x S^{d-1})`: the sphere area for radial modes, 1 for a
    /// mode against an `L^2`-normalized harmonic.
    pub fn angular_measure(&self) -> f64 {
        if self.spec.nu() == 0 {
            sphere_area(self.spec.d())
        } else {
            1.0
        }
    }

    fn masked_norm2(&self, keep: impl Fn(f64) -> bool) -> f64 {
        let sum: f64 = (0..self.s.len())
            .filter(|&j| keep(self.s[j]))
            .map(|j| self.weights[j] * self.g[j] * self.g[j])
            .sum();
        self.angular_measure() * sum
    }

    /// `||G||^2_{L^2(R x S^{d-1})}`.
    pub fn norm2(&self) -> f64 {
        self.masked_norm2(|_| true)
    }

    /// Largest `|s|` carrying a nonzero sample, `None` for the zero profile.
    pub fn support_radius(&self) -> Option<f64> {
        self.s
            .iter()
            .zip(&self.g)
            .filter(|(_, g)| **g != 0.0)
            .map(|(s, _)| s.abs())
            .reduce(f64::max)
    }

    /// The field on the other side: `G_+(s) = (-1)^{(D-1)/2} G_-(-s)` for odd `D`.
    pub fn reflected(&self) -> Result<Self> {
        let dim = self.spec.lifted_dim();
        if dim.is_multiple_of(2) {
            return Err(invalid(
                "profile",
                "the reflection formula is only available in odd dimensions",
            ));
        }
        let sign = if ((dim - 1) / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(RadiationProfile {
            s: self.s.iter().rev().map(|s| -s).collect(),
            g: self.g.iter().rev().map(|g| sign * g).collect(),
            weights: self.weights.iter().rev().copied().collect(),
            side: match self.side {
                Side::Plus => Side::Minus,
                Side::Minus => Side::Plus,
            },
            spec: self.spec,
        })
    }

    /// Linear interpolation of `g` at `s`, zero outside the grid.
    pub fn value(&self, s: f64) -> f64 {
        let n = self.s.len();
        if n == 0 || s < self.s[0] || s > self.s[n - 1] {
            return 0.0;
        }
        let j = self.s.partition_point(|x| *x <= s).clamp(1, n - 1);
        let (a, b) = (self.s[j - 1], self.s[j]);
        let t = if b > a { (s - a) / (b - a) } else { 0.0 };
        self.g[j - 1] * (1.0 - t) + self.g[j] * t
    }
}

fn require_radial_three(spec: ModeSpec) -> Result<()> {
    if spec.d() != 3 || spec.nu() != 0 {
        return Err(invalid(
            "data",
            format!(
                "explicit radiation transforms need radial data in d = 3, got d={}, nu={}",
                spec.d(),
                spec.nu()
            ),
        ));
    }
    Ok(())
}

/// Uniform spacing of a grid starting at 0.
fn uniform_spacing(r: &[f64]) -> Result<f64> {
    if r.len() < 5 {
        return Err(Error::TooFewSamples {
            needed: 5,
            got: r.len(),
        });
    }
    let h = r[1] - r[0];
    if r[0] != 0.0 || !(h > 0.0) {
        return Err(invalid("r", "grid must start at 0 with positive spacing"));
    }
    let tol = 1e-9 * h;
    if r.iter()
        .enumerate()
        .any(|(i, x)| (x - i as f64 * h).abs() > tol * (i as f64 + 1.0))
    {
        return Err(invalid("r", "grid must be uniform"));
    }
    Ok(h)
}

/// Fourth-order derivative of uniform samples, one-sided near the ends.
///
/// With `odd_origin` the samples are treated as an odd function about `f[0] = 0`,
/// so the stencils near the origin stay centered.
pub fn derivative4(f: &[f64], h: f64, odd_origin: bool) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5, "derivative4 needs at least 5 samples");
    let c = 1.0 / (12.0 * h);
    let mut d = vec![0.0; n];
    if odd_origin {
        d[0] = c * (16.0 * f[1] - 2.0 * f[2]);
        d[1] = c * (-f[1] - 8.0 * f[0] + 8.0 * f[2] - f[3]);
    } else {
        d[0] = c * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
        d[1] = c * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
    }
    for i in 2..n - 2 {
        d[i] = c * (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]);
    }
    let m = n - 1;
    d[m - 1] = -c * (-3.0 * f[m] - 10.0 * f[m - 1] + 18.0 * f[m - 2] - 6.0 * f[m - 3] + f[m - 4]);
    d[m] = -c * (-25.0 * f[m] + 48.0 * f[m - 1] - 36.0 * f[m - 2] + 16.0 * f[m - 3] - 3.0 * f[m - 4]);
    d
}

/// Cumulative integral `int_0^{r_i} f`, cubic interpolation per cell.
pub fn cumulative4(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 4, "cumulative4 needs at least 4 samples");
    let c = h / 24.0;
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let cell = if i == 0 {
            c * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if i == n - 2 {
            c * (9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4])
        } else {
            c * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
        };
        out[i + 1] = out[i] + cell;
    }
    out
}

/// Assemble `G_-` on the symmetric grid from `(r u0)'` and `r u1` on `r_i = i h`.
fn assemble_minus(dw0: &[f64], rw1: &[f64], h: f64) -> RadiationProfile {
    let n = dw0.len();
    let m = 2 * n - 1;
    let mut s = Vec::with_capacity(m);
    let mut g = Vec::with_capacity(m);
    let c = 0.5 * RADIATION_NORMALIZATION;
    for i in (1..n).rev() {
        s.push(-(i as f64) * h);
        g.push(c * (dw0[i] - rw1[i]));
    }
    for i in 0..n {
        s.push(i as f64 * h);
        g.push(c * (dw0[i] + rw1[i]));
    }
    RadiationProfile {
        s,
        g,
        weights: trapezoid_weights(m, h),
        side: Side::Minus,
        spec: ModeSpec::radial(3).expect("d = 3 is valid"),
    }
}

/// `G_-` of sampled radial data in `d = 3`.
///
/// From the radius of an exact exterior description on, the derivative of `r u0` is
/// taken from the closed form instead of finite differences.
pub fn forward_radiation(field: &RadialGridField) -> Result<RadiationProfile> {
    require_radial_three(field.spec)?;
    let h = uniform_spacing(&field.r)?;
    let w0: Vec<f64> = field.r.iter().zip(&field.u0).map(|(r, u)| r * u).collect();
    let mut dw0 = derivative4(&w0, h, true);
    if let ExteriorKnowledge::Exact(ext) = &field.exterior {
        let w = ext.u(0.0).shift(1);
        for (i, &r) in field.r.iter().enumerate() {
            if r >= ext.radius {
                dw0[i] = w.derivative(r, 1);
            }
        }
    }
    let rw1: Vec<f64> = field.r.iter().zip(&field.u1).map(|(r, u)| r * u).collect();
    if dw0.iter().chain(&rw1).any(|v| !v.is_finite()) {
        return Err(invalid("data", "radial data must be finite"));
    }
    Ok(assemble_minus(&dw0, &rw1, h))
}

/// `G_-` of analytically described radial data on `n` points of `[0, r_max]`.
pub fn forward_radiation_analytic(
    u0: &RadialProfile,
    u1: &RadialProfile,
    r_max: f64,
    n: usize,
) -> Result<RadiationProfile> {
    if !(r_max > 0.0) || n < 5 {
        return Err(invalid("grid", "need r_max > 0 and at least 5 points"));
    }
    let h = r_max / (n - 1) as f64;
    let r: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let dw0: Vec<f64> = r.iter().map(|&x| u0.value(x) + x * u0.derivative(x, 1)).collect();
    let rw1: Vec<f64> = r.iter().map(|&x| x * u1.value(x)).collect();
    if dw0.iter().chain(&rw1).any(|v| !v.is_finite()) {
        return Err(invalid("data", "radial data must be finite"));
    }
    Ok(assemble_minus(&dw0, &rw1, h))
}

/// `||(u0, u1)||^2 = 4 pi int (u0'^2 + u1^2) r^2 dr` for sampled `d = 3` radial data.
pub fn data_energy(field: &RadialGridField) -> Result<f64> {
    require_radial_three(field.spec)?;
    let h = uniform_spacing(&field.r)?;
    let du0 = derivative4(&field.u0, h, false);
    let f: Vec<f64> = (0..field.r.len())
        .map(|i| (du0[i] * du0[i] + field.u1[i] * field.u1[i]) * field.r[i] * field.r[i])
        .collect();
    let w = trapezoid_weights(f.len(), h);
    let mut e: f64 = f.iter().zip(&w).map(|(a, b)| a * b).sum();
    if let ExteriorKnowledge::Exact(ext) = &field.exterior {
        e += ext.energy_tail(field.r[field.r.len() - 1], 0.0, 3);
    }
    Ok(4.0 * PI * e)
}

/// Radial `d = 3` data with backward radiation field `G`.
///
/// When `G` vanishes for `|s| > rho` the result equals `A / r` beyond `rho + 2h`,
/// and that exterior is recorded exactly.
pub fn inverse_radiation(profile: &RadiationProfile) -> Result<RadialGridField> {
    require_radial_three(profile.spec)?;
    if profile.side != Side::Minus {
        return Err(invalid("profile", "inverse transform expects the backward field G_-"));
    }
    let m = profile.s.len();
    if m.is_multiple_of(2) || m < 9 {
        return Err(invalid(
            "profile",
            "inverse transform needs a symmetric grid with an odd number of at least 9 samples",
        ));
    }
    let n = m.div_ceil(2);
    let r: Vec<f64> = profile.s[n - 1..].to_vec();
    let h = uniform_spacing(&r)?;
    if (0..n).any(|i| (profile.s[n - 1 - i] + r[i]).abs() > 1e-9 * h * (i as f64 + 1.0)) {
        return Err(invalid("profile", "s grid must be symmetric about 0"));
    }
    let c = 1.0 / RADIATION_NORMALIZATION;
    let dw0: Vec<f64> = (0..n)
        .map(|i| c * (profile.g[n - 1 + i] + profile.g[n - 1 - i]))
        .collect();
    let w1: Vec<f64> = (0..n)
        .map(|i| c * (profile.g[n - 1 + i] - profile.g[n - 1 - i]))
        .collect();
    let w0 = cumulative4(&dw0, h);
    let mut u0: Vec<f64> = (0..n).map(|i| if i == 0 { dw0[0] } else { w0[i] / r[i] }).collect();
    let mut u1: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { w1[i] / r[i] }).collect();
    // w1 is odd: difference quotients at h and 2h, then Richardson
    let near = (8.0 * w1[1] - w1[2]) / (6.0 * h);
    let far = (8.0 * w1[2] - w1[4]) / (12.0 * h);
    u1[0] = (16.0 * near - far) / 15.0;
    let spec = profile.spec;
    let exterior = match profile.support_radius() {
        None => ExteriorKnowledge::Compact { support: 0.0 },
        Some(rho) if rho + 2.0 * h < r[n - 1] => {
            let radius = rho + 2.0 * h;
            let i0 = ((radius / h).ceil() as usize).min(n - 1);
            let a = w0[i0];
            for i in i0..n {
                u0[i] = a / r[i];
                u1[i] = 0.0;
            }
            if a == 0.0 {
                ExteriorKnowledge::Compact { support: radius }
            } else {
                let mode = build_exterior_mode(spec, radius, vec![a], vec![])?;
                ExteriorKnowledge::Exact(ExactExterior::from_mode(&mode)?)
            }
        }
        Some(_) => ExteriorKnowledge::Unknown,
    };
    Ok(RadialGridField {
        spec,
        r,
        u0,
        u1,
        exterior,
    })
}

fn masked(profile: &RadiationProfile, keep: impl Fn(f64) -> bool) -> RadiationProfile {
    RadiationProfile {
        g: profile
            .s
            .iter()
            .zip(&profile.g)
            .map(|(s, g)| if keep(*s) { *g } else { 0.0 })
            .collect(),
        ..profile.clone()
    }
}

/// `G1 = G 1_{|s| <= r1}` and `G2 = G - G1`.
pub fn split_radiation(profile: &RadiationProfile, r1: f64) -> Result<(RadiationProfile, RadiationProfile)> {
    if !(r1 > 0.0) {
        return Err(invalid("r1", format!("split radius must be positive, got {r1}")));
    }
    Ok((masked(profile, |s| s.abs() <= r1), masked(profile, |s| s.abs() > r1)))
}

/// Pieces `|s| <= R0` and `2^{j-1} R0 < |s| <= 2^j R0`, up to the grid extent.
pub fn dyadic_split(profile: &RadiationProfile, r0: f64) -> Result<Vec<RadiationProfile>> {
    if !(r0 > 0.0) {
        return Err(invalid("R0", format!("dyadic base radius must be positive, got {r0}")));
    }
    let extent = profile.s.iter().map(|s| s.abs()).fold(0.0, f64::max);
    let mut pieces = vec![masked(profile, |s| s.abs() <= r0)];
    let mut outer = r0;
    while outer < extent {
        let inner = outer;
        outer *= 2.0;
        pieces.push(masked(profile, |s| s.abs() > inner && s.abs() <= outer));
    }
    Ok(pieces)
}

/// `S(r) = ||G||_{L^2({|s| > r} x S^{d-1})}`.
pub fn tail_s(profile: &RadiationProfile, r: f64) -> f64 {
    let n = profile.s.len();
    if n < 2 {
        return profile.masked_norm2(|s| s.abs() > r).sqrt();
    }
    let half = 0.5 * (profile.s[1] - profile.s[0]);
    let (first, last) = (profile.s[0], profile.s[n - 1]);
    // each sample stands for the cell of width `h` around it, cut at `|s| = r`
    let sum: f64 = (0..n)
        .map(|j| {
            let lo = (profile.s[j] - half).max(first);
            let hi = (profile.s[j] + half).min(last);
            let width = hi - lo;
            if width <= 0.0 {
                return 0.0;
            }
            let inner = (hi.min(r) - lo.max(-r)).max(0.0);
            profile.weights[j] * profile.g[j] * profile.g[j] * (1.0 - inner / width).max(0.0)
        })
        .sum();
    (profile.angular_measure() * sum).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericRadiation {
    /// Extraction at the final frame.
    pub profile: RadiationProfile,
    /// Times of the two extractions.
    pub times: (f64, f64),
    /// `||extraction(T) - extraction(2T)||`.
    pub difference: f64,
    pub relative_difference: f64,
    pub stabilized: bool,
}

/// Four-point Lagrange interpolation on `r_i = i h`.
fn interpolate(f: &[f64], h: f64, x: f64) -> f64 {
    let n = f.len();
    let i = ((x / h).floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let mut acc = 0.0;
    for a in 0..4 {
        let mut l = 1.0;
        for b in 0..4 {
            if a != b {
                l *= (x - (i + b) as f64 * h) / ((a as f64 - b as f64) * h);
            }
        }
        acc += l * f[i + a];
    }
    acc
}

/// Sample `r^{(D-1)/2} u_t` along `s = r - t` at `T = t_final / 2` and `2T`.
///
/// For `Side::Minus` the trajectory must be the forward evolution of time-reversed data;
/// the sign flip of `u_t` is applied here.
pub fn numeric_radiation(traj: &Trajectory, side: Side, tolerance: f64) -> Result<NumericRadiation> {
    if !traj.config.nonlinearity.is_linear() {
        return Err(invalid(
            "trajectory",
            "radiation fields are extracted from linear evolutions",
        ));
    }
    let last = traj.times.len() - 1;
    let t2 = traj.times[last];
    let k1 = (0..=last)
        .min_by(|&a, &b| {
            (traj.times[a] - 0.5 * t2)
                .abs()
                .total_cmp(&(traj.times[b] - 0.5 * t2).abs())
        })
        .unwrap_or(0);
    let t1 = traj.times[k1];
    if !(t1 > 0.0 && t2 > t1) {
        return Err(invalid(
            "trajectory",
            "extraction needs two distinct positive frame times",
        ));
    }
    let h = traj.config.dr();
    let s_hi = traj.config.contamination_front(t2) - t2;
    let j_lo = (-t1 / h).ceil() as i64;
    let j_hi = (s_hi / h).floor() as i64;
    if j_hi - j_lo < 4 {
        return Err(Error::DomainTooSmall {
            r_max: traj.config.r_max,
            needed: 2.0 * t2 + 10.0 * h,
        });
    }
    let half = (traj.lifted_dim() as f64 - 1.0) / 2.0;
    let sign = match side {
        Side::Plus => 1.0,
        Side::Minus => -1.0,
    };
    let s: Vec<f64> = (j_lo..=j_hi).map(|j| j as f64 * h).collect();
    let extract = |k: usize, t: f64| -> Vec<f64> {
        s.iter()
            .map(|&si| {
                let r = (si + t).max(0.0);
                sign * r.powf(half) * interpolate(&traj.ut[k], h, r)
            })
            .collect()
    };
    let g1 = extract(k1, t1);
    let g2 = extract(last, t2);
    let profile = RadiationProfile {
        weights: trapezoid_weights(s.len(), h),
        s,
        g: g2,
        side,
        spec: traj.spec,
    };
    let diff = RadiationProfile {
        g: profile.g.iter().zip(&g1).map(|(a, b)| a - b).collect(),
        ..profile.clone()
    };
    let difference = diff.norm2().sqrt();
    let norm = profile.norm2().sqrt();
    let relative_difference = if norm > 0.0 { difference / norm } else { 0.0 };
    Ok(NumericRadiation {
        profile,
        times: (t1, t2),
        difference,
        relative_difference,
        stabilized: relative_difference <= tolerance,
    })
}

/// Both sides of `sum_+- lim E_ext(t; R) = 2 int_{|s|>R} |G_-|^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelIdentity {
    pub radius: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub total_energy: f64,
    pub forward: ConeLimit,
    pub backward: ConeLimit,
    /// Both limits passed the Cauchy test.
    pub stabilized: bool,
    /// Some cone energy lacked an exact exterior description.
    pub truncated: bool,
}

impl ChannelIdentity {
    /// `|lhs - rhs| / rhs`, infinite when only the right side vanishes.
    pub fn relative_mismatch(&self) -> f64 {
        let d = (self.lhs - self.rhs).abs();
        if self.rhs > 0.0 {
            d / self.rhs
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Evaluate both sides for `d = 3` radial data; `tolerance` is relative to the data energy.
pub fn channel_identity(
    field: &RadialGridField,
    config: &SolverConfig,
    radius: f64,
    tolerance: f64,
) -> Result<ChannelIdentity> {
    require_radial_three(field.spec)?;
    config.require_uncontaminated(radius)?;
    let total_energy = data_energy(field)?;
    let cauchy = tolerance * total_energy / (4.0 * PI);
    let forward_traj = solve_mode_linear(field, config)?;
    let backward_traj = solve_mode_linear(&field.time_reversed(), config)?;
    let fs = cone_energy(&forward_traj, radius)?;
    let bs = cone_energy(&backward_traj, radius)?;
    let forward = cone_energy_limits(&fs, cauchy)?;
    let backward = cone_energy_limits(&bs, cauchy)?;
    let g = forward_radiation(field)?;
    let tail = tail_s(&g, radius);
    Ok(ChannelIdentity {
        radius,
        lhs: 4.0 * PI * (forward.limit + backward.limit),
        rhs: 2.0 * tail * tail,
        total_energy,
        stabilized: forward.stabilized && backward.stabilized,
        truncated: fs.truncated || bs.truncated,
        forward,
        backward,
    })
}
