//! Finite-difference evolution of radial waves in the lifted dimension `D`,
//! linear or with a radial quintic nonlinearity in dimension 3.
//!
//! In `D = 3` the unknown is `w = r u`, which satisfies the one-dimensional wave
//! equation with `w(0) = 0`. In other dimensions the unknown is `u` itself with
//! the conservative operator `r^{1-D} d_r (r^{D-1} d_r u)` and the l'Hopital
//! limit `2D (u_1 - u_0) / h^2` at the origin. The time step is `cfl` times the
//! stability limit of the spatial operator (which is exactly `h` in `D = 3`).

mod diagnostics;

pub use diagnostics::{
    cone_energy, cone_energy_limits, duhamel_check, l6_tail, ynorm_estimate, ConeEnergySeries, ConeLimit,
    DuhamelReport, YNormReport,
};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exact_evolution::ExactExterior;
use crate::exterior_basis::{ExteriorModeData, ModeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub enum Scheme {
    #[default]
    Leapfrog,
    Rk4Mol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub enum OuterBoundary {
    /// First-order Sommerfeld condition `u_t + u_r + (D-1)/(2r) u = 0`.
    #[default]
    Outgoing,
    /// Hold the initial boundary value.
    Dirichlet,
    /// Mirror ghost node.
    Neumann,
}

/// User-supplied source `F(u)` with declared bound `|F(u)| <= constant |u|^5`.
#[derive(Clone)]
pub struct CustomNonlinearity {
    pub source: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Potential `V` with `V' = -F`, used for the conserved energy when present.
    pub potential: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub constant: f64,
}

impl fmt::Debug for CustomNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomNonlinearity")
            .field("constant", &self.constant)
            .finish_non_exhaustive()
    }
}

/// Right-hand side `F(u)` of `u_tt - Delta u = F(u)`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub enum Nonlinearity {
    #[default]
    None,
    /// `F = -u^5`
    DefocusingQuintic,
    /// `F = u^5`
    FocusingQuintic,
    #[serde(skip)]
    Custom(CustomNonlinearity),
}

impl Nonlinearity {
    pub fn is_linear(&self) -> bool {
        matches!(self, Nonlinearity::None)
    }

    pub fn source(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::None => 0.0,
            Nonlinearity::DefocusingQuintic => -u.powi(5),
            Nonlinearity::FocusingQuintic => u.powi(5),
            Nonlinearity::Custom(c) => (c.source)(u),
        }
    }

    /// Twice the potential energy density, so that `u_t^2 + u_r^2 + 2V(u)` is conserved.
    pub fn potential2(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::None => 0.0,
            Nonlinearity::DefocusingQuintic => u.powi(6) / 3.0,
            Nonlinearity::FocusingQuintic => -u.powi(6) / 3.0,
            Nonlinearity::Custom(c) => c.potential.as_ref().map_or(0.0, |v| 2.0 * v(u)),
        }
    }
}

fn default_cfl() -> f64 {
    0.9
}

fn default_snapshots() -> usize {
    200
}

fn default_blowup() -> f64 {
    1e6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[cfg_attr(feature = "schema", derive(schemars::JsonSchema))]
pub struct SolverConfig {
    /// Inner edge of the grid; only regular data at the origin is supported.
    #[serde(default)]
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_final: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
    #[serde(default)]
    pub outer_boundary: OuterBoundary,
    /// Number of stored time intervals (the trajectory has `snapshots + 1` frames).
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    /// `max |u|` above which a nonlinear run is declared blown up.
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
}

impl SolverConfig {
    pub fn new(r_max: f64, n_r: usize, t_final: f64) -> Self {
        SolverConfig {
            r_min: 0.0,
            r_max,
            n_r,
            cfl: default_cfl(),
            t_final,
            scheme: Scheme::default(),
            nonlinearity: Nonlinearity::None,
            outer_boundary: OuterBoundary::default(),
            snapshots: default_snapshots(),
            blowup_threshold: default_blowup(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r_min != 0.0 {
            return Err(invalid(
                "r_min",
                "only grids starting at the origin (r_min = 0) are supported",
            ));
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(invalid("r_max", format!("must be positive, got {}", self.r_max)));
        }
        if self.n_r < 8 {
            return Err(invalid("n_r", format!("need at least 8 grid points, got {}", self.n_r)));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::Cfl { ratio: self.cfl });
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(invalid(
                "t_final",
                format!("must be finite and nonnegative, got {}", self.t_final),
            ));
        }
        if self.snapshots == 0 {
            return Err(invalid("snapshots", "need at least one stored interval"));
        }
        Ok(())
    }

    pub fn dr(&self) -> f64 {
        self.r_max / (self.n_r - 1) as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.dr();
        (0..self.n_r).map(|i| i as f64 * h).collect()
    }

    /// Radius beyond which the outer boundary may have influenced the solution at time `t`.
    pub fn contamination_front(&self, t: f64) -> f64 {
        self.r_max - t.abs() - 10.0 * self.dr()
    }

    /// `r_max >= R + 2 t_final + 10 dr`.
    pub fn require_uncontaminated(&self, radius: f64) -> Result<()> {
        let needed = radius + 2.0 * self.t_final + 10.0 * self.dr();
        if self.r_max < needed {
            return Err(Error::DomainTooSmall {
                r_max: self.r_max,
                needed,
            });
        }
        Ok(())
    }
}

/// What is known about the solution beyond the computational domain.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ExteriorKnowledge {
    /// Data vanishes for `r > support`.
    Compact { support: f64 },
    /// Data equals exact chain data for `r > radius`.
    Exact(ExactExterior),
    #[default]
    Unknown,
}

impl ExteriorKnowledge {
    pub fn time_reversed(&self) -> Self {
        match self {
            ExteriorKnowledge::Exact(e) => ExteriorKnowledge::Exact(ExactExterior {
                radius: e.radius,
                chains: e
                    .chains
                    .iter()
                    .map(|(w, c)| {
                        let sign = match c.kind {
                            crate::exact_evolution::ChainKind::Position => 1.0,
                            crate::exact_evolution::ChainKind::Velocity => -1.0,
                        };
                        (sign * w, c.clone())
                    })
                    .collect(),
            }),
            other => other.clone(),
        }
    }
}

/// Radial data `(u, u_t)` sampled on the solver grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGridField {
    pub spec: ModeSpec,
    pub r: Vec<f64>,
    pub u0: Vec<f64>,
    pub u1: Vec<f64>,
    pub exterior: ExteriorKnowledge,
}

impl RadialGridField {
    pub fn sample(
        spec: ModeSpec,
        config: &SolverConfig,
        u0: impl Fn(f64) -> f64,
        u1: impl Fn(f64) -> f64,
        exterior: ExteriorKnowledge,
    ) -> Result<Self> {
        config.validate()?;
        let r = config.grid();
        let f = RadialGridField {
            spec,
            u0: r.iter().map(|&x| u0(x)).collect(),
            u1: r.iter().map(|&x| u1(x)).collect(),
            r,
            exterior,
        };
        if f.u0.iter().chain(&f.u1).any(|v| !v.is_finite()) {
            return Err(invalid("initial", "initial data must be finite on the grid"));
        }
        Ok(f)
    }

    /// Lifted data of one mode, extended inside `R` with `blend_order` matched derivatives.
    pub fn from_mode(data: &ExteriorModeData, blend_order: usize, config: &SolverConfig) -> Result<Self> {
        let ext = data.extend(blend_order)?.lifted();
        Self::sample(
            data.spec(),
            config,
            |r| ext.u0.value(r),
            |r| ext.u1.value(r),
            ExteriorKnowledge::Exact(ExactExterior::from_mode(data)?),
        )
    }

    /// Data `(u0, -u1)`, whose forward evolution is the backward evolution of `self`.
    pub fn time_reversed(&self) -> Self {
        RadialGridField {
            spec: self.spec,
            r: self.r.clone(),
            u0: self.u0.clone(),
            u1: self.u1.iter().map(|v| -v).collect(),
            exterior: self.exterior.time_reversed(),
        }
    }
}

/// Stored solution frames at uniformly spaced times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub spec: ModeSpec,
    pub config: SolverConfig,
    pub r: Vec<f64>,
    pub dt: f64,
    pub times: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub ut: Vec<Vec<f64>>,
    /// Conserved functional `int (u_t^2 + u_r^2 + 2V(u)) r^{D-1} dr` per frame.
    pub energy: Vec<f64>,
    pub exterior: ExteriorKnowledge,
    /// Time at which a nonlinear run exceeded the blow-up threshold.
    pub blow_up: Option<f64>,
}

impl Trajectory {
    /// Trajectory assembled from given frames (synthetic fields, tests, imports).
    pub fn from_frames(
        spec: ModeSpec,
        config: SolverConfig,
        times: Vec<f64>,
        u: Vec<Vec<f64>>,
        ut: Vec<Vec<f64>>,
        exterior: ExteriorKnowledge,
    ) -> Result<Self> {
        config.validate()?;
        let r = config.grid();
        if times.len() != u.len() || times.len() != ut.len() || u.iter().chain(&ut).any(|f| f.len() != r.len()) {
            return Err(invalid("frames", "frame count or frame length does not match the grid"));
        }
        let dim = spec.lifted_dim();
        let energy = u
            .iter()
            .zip(&ut)
            .map(|(a, b)| total_energy(&r, a, b, dim, &config.nonlinearity))
            .collect();
        let dt = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
        Ok(Trajectory {
            spec,
            config,
            r,
            dt,
            times,
            u,
            ut,
            energy,
            exterior,
            blow_up: None,
        })
    }

    pub fn lifted_dim(&self) -> usize {
        self.spec.lifted_dim()
    }

    /// Edge of the discrete domain of influence of the cone `r <= R + |t|`:
    /// `R + |t| dr/dt` plus 2 cells (leapfrog) or 20 cells (RK4, whose stages
    /// reach further with rapidly decaying amplitude).
    pub fn numerical_cone(&self, radius: f64, t: f64) -> f64 {
        let h = self.r[1] - self.r[0];
        let cells = match self.config.scheme {
            Scheme::Leapfrog => 2.0,
            Scheme::Rk4Mol => 20.0,
        };
        radius + t.abs() * h / self.dt + cells * h
    }

    /// Relative spread `max |E - E_0| / E_0` of the conserved functional.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        if e0 == 0.0 {
            return 0.0;
        }
        self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs()
    }

    /// Radial derivative of frame `k`.
    pub fn ur(&self, k: usize) -> Vec<f64> {
        radial_derivative(&self.r, &self.u[k], self.lifted_dim())
    }
}

/// Second-order radial derivative of a sampled profile (exact for `1/r` when `D = 3`).
pub fn radial_derivative(r: &[f64], u: &[f64], lifted_dim: usize) -> Vec<f64> {
    let n = r.len();
    let h = r[1] - r[0];
    if lifted_dim == 3 {
        let w: Vec<f64> = r.iter().zip(u).map(|(a, b)| a * b).collect();
        let mut out = vec![0.0; n];
        for i in 1..n {
            let wr = if i + 1 < n {
                (w[i + 1] - w[i - 1]) / (2.0 * h)
            } else {
                (3.0 * w[i] - 4.0 * w[i - 1] + w[i - 2]) / (2.0 * h)
            };
            out[i] = (wr - u[i]) / r[i];
        }
        return out;
    }
    let mut out = vec![0.0; n];
    for i in 1..n {
        out[i] = if i + 1 < n {
            (u[i + 1] - u[i - 1]) / (2.0 * h)
        } else {
            (3.0 * u[i] - 4.0 * u[i - 1] + u[i - 2]) / (2.0 * h)
        };
    }
    out
}

/// Spatial operator acting on the evolved variable.
struct Operator {
    lifted_dim: usize,
    h: f64,
    /// `r_{i+1/2}^{D-1} / (r_i^{D-1} h^2)` and `r_{i-1/2}^{D-1} / (r_i^{D-1} h^2)`.
    up: Vec<f64>,
    down: Vec<f64>,
    r: Vec<f64>,
    outer: OuterBoundary,
    boundary_value: f64,
}

impl Operator {
    fn new(r: &[f64], lifted_dim: usize, outer: OuterBoundary, boundary_value: f64) -> Self {
        let n = r.len();
        let h = r[1] - r[0];
        let mut up = vec![0.0; n];
        let mut down = vec![0.0; n];
        if lifted_dim == 3 {
            for i in 1..n {
                up[i] = 1.0 / (h * h);
                down[i] = 1.0 / (h * h);
            }
        } else {
            let p = lifted_dim as i32 - 1;
            up[0] = 2.0 * lifted_dim as f64 / (h * h);
            for i in 1..n {
                let ri = r[i].powi(p);
                up[i] = (r[i] + 0.5 * h).powi(p) / (ri * h * h);
                down[i] = (r[i] - 0.5 * h).powi(p) / (ri * h * h);
            }
        }
        Operator {
            lifted_dim,
            h,
            up,
            down,
            r: r.to_vec(),
            outer,
            boundary_value,
        }
    }

    fn is_w_form(&self) -> bool {
        self.lifted_dim == 3
    }

    /// Largest stable `dt` for leapfrog: `2 / sqrt(Gershgorin bound)` of the symmetrized operator.
    fn stable_dt(&self) -> f64 {
        let n = self.r.len();
        // symmetrizing volumes V_i with up_i V_i = down_{i+1} V_{i+1}
        let mut vol = vec![1.0; n];
        let start = usize::from(self.is_w_form());
        for i in start..n - 1 {
            vol[i + 1] = vol[i] * self.up[i] / self.down[i + 1];
        }
        let mut rho: f64 = 0.0;
        for i in start..n {
            let diag = self.up[i] + self.down[i];
            let mut row = diag;
            if i + 1 < n {
                row += self.up[i] * (vol[i] / vol[i + 1]).sqrt();
            }
            if i > start {
                row += self.down[i] * (vol[i] / vol[i - 1]).sqrt();
            }
            rho = rho.max(row);
        }
        (2.0 / rho.sqrt()).min(self.h)
    }

    /// `L x` on interior nodes; boundary rows are handled by the stepper.
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        if self.is_w_form() {
            out[0] = 0.0;
        } else {
            out[0] = self.up[0] * (x[1] - x[0]);
        }
        for i in 1..n - 1 {
            out[i] = self.up[i] * (x[i + 1] - x[i]) - self.down[i] * (x[i] - x[i - 1]);
        }
        out[n - 1] = match self.outer {
            OuterBoundary::Neumann => (self.up[n - 1] + self.down[n - 1]) * (x[n - 2] - x[n - 1]),
            _ => 0.0,
        };
    }

    /// Outgoing boundary rate `-(x_N - x_{N-1})/h - k x_N`.
    fn outgoing_rate(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let k = if self.is_w_form() {
            0.0
        } else {
            (self.lifted_dim as f64 - 1.0) / (2.0 * self.r[n - 1])
        };
        -(x[n - 1] - x[n - 2]) / self.h - k * x[n - 1]
    }

    fn to_state(&self, u: &[f64]) -> Vec<f64> {
        if self.is_w_form() {
            u.iter().zip(&self.r).map(|(a, b)| a * b).collect()
        } else {
            u.to_vec()
        }
    }

    fn to_u(&self, x: &[f64]) -> Vec<f64> {
        if self.is_w_form() {
            let mut u: Vec<f64> = x
                .iter()
                .zip(&self.r)
                .map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 })
                .collect();
            // w is odd in r: (8 w_1 - w_2) / (6h) recovers u(0) to fourth order
            u[0] = (8.0 * x[1] - x[2]) / (6.0 * self.h);
            u
        } else {
            x.to_vec()
        }
    }

    fn source(&self, nl: &Nonlinearity, x: &[f64], out: &mut [f64]) {
        if nl.is_linear() {
            return;
        }
        for i in 0..x.len() {
            out[i] += if self.is_w_form() {
                if self.r[i] > 0.0 {
                    self.r[i] * nl.source(x[i] / self.r[i])
                } else {
                    0.0
                }
            } else {
                nl.source(x[i])
            };
        }
    }
}

fn total_energy(r: &[f64], u: &[f64], ut: &[f64], lifted_dim: usize, nl: &Nonlinearity) -> f64 {
    let ur = radial_derivative(r, u, lifted_dim);
    let p = lifted_dim as i32 - 1;
    let f: Vec<f64> = (0..r.len())
        .map(|i| (ut[i] * ut[i] + ur[i] * ur[i] + nl.potential2(u[i])) * r[i].powi(p))
        .collect();
    let h = r[1] - r[0];
    h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[f.len() - 1]))
}

/// Linear evolution of lifted radial data.
pub fn solve_mode_linear(initial: &RadialGridField, config: &SolverConfig) -> Result<Trajectory> {
    if !config.nonlinearity.is_linear() {
        return Err(invalid(
            "nonlinearity",
            "solve_mode_linear requires nonlinearity = none",
        ));
    }
    evolve(initial, config)
}

/// Radial quintic evolution in dimension 3.
pub fn solve_quintic(initial: &RadialGridField, config: &SolverConfig) -> Result<Trajectory> {
    if initial.spec.lifted_dim() != 3 {
        return Err(invalid(
            "spec",
            format!(
                "the nonlinear solver is radial in d = 3, got lifted dimension {}",
                initial.spec.lifted_dim()
            ),
        ));
    }
    evolve(initial, config)
}

fn evolve(initial: &RadialGridField, config: &SolverConfig) -> Result<Trajectory> {
    config.validate()?;
    let r = config.grid();
    if initial.r.len() != r.len()
        || initial
            .r
            .iter()
            .zip(&r)
            .any(|(a, b)| (a - b).abs() > 1e-12 * config.r_max)
    {
        return Err(invalid("initial", "initial data is not sampled on the configured grid"));
    }
    let dim = initial.spec.lifted_dim();
    let n = r.len();
    let nl = &config.nonlinearity;
    let x0 = {
        let probe = Operator::new(&r, dim, config.outer_boundary, 0.0);
        probe.to_state(&initial.u0)
    };
    let op = Operator::new(&r, dim, config.outer_boundary, x0[n - 1]);
    let v0 = op.to_state(&initial.u1);

    let dt_max = config.cfl * op.stable_dt();
    let n_steps = if config.t_final == 0.0 {
        0
    } else {
        let raw = (config.t_final / dt_max).ceil() as usize;
        raw.div_ceil(config.snapshots) * config.snapshots
    };
    let dt = if n_steps == 0 {
        dt_max
    } else {
        config.t_final / n_steps as f64
    };
    let stride = (n_steps / config.snapshots).max(1);

    let mut traj = Trajectory {
        spec: initial.spec,
        config: config.clone(),
        r: r.clone(),
        dt,
        times: Vec::new(),
        u: Vec::new(),
        ut: Vec::new(),
        energy: Vec::new(),
        exterior: initial.exterior.clone(),
        blow_up: None,
    };
    let record = |traj: &mut Trajectory, t: f64, x: &[f64], v: &[f64]| {
        let u = op.to_u(x);
        let ut = op.to_u(v);
        traj.energy.push(total_energy(&r, &u, &ut, dim, nl));
        traj.times.push(t);
        traj.u.push(u);
        traj.ut.push(ut);
    };

    let check = |x: &[f64], t: f64| -> Result<bool> {
        let mut max = 0.0f64;
        for (i, v) in x.iter().enumerate() {
            if !v.is_finite() {
                return if nl.is_linear() {
                    Err(Error::NonFinite { t })
                } else {
                    Ok(true)
                };
            }
            let u = if op.is_w_form() && r[i] > 0.0 { v / r[i] } else { *v };
            max = max.max(u.abs());
        }
        Ok(!nl.is_linear() && max > config.blowup_threshold)
    };

    let rhs = |x: &[f64], out: &mut [f64]| {
        op.apply(x, out);
        op.source(nl, x, out);
    };

    match config.scheme {
        Scheme::Leapfrog => {
            let mut lx = vec![0.0; n];
            let mut lv = vec![0.0; n];
            rhs(&x0, &mut lx);
            op.apply(&v0, &mut lv);
            let mut prev = x0.clone();
            let mut cur: Vec<f64> = (0..n)
                .map(|i| x0[i] + dt * v0[i] + 0.5 * dt * dt * lx[i] + dt * dt * dt / 6.0 * lv[i])
                .collect();
            fix_boundaries(&op, &mut cur, &prev, dt, config.outer_boundary);
            record(&mut traj, 0.0, &x0, &v0);
            let mut acc = vec![0.0; n];
            for step in 1..=n_steps {
                // cur holds level `step`, prev level `step - 1`
                rhs(&cur, &mut acc);
                let next: Vec<f64> = {
                    let mut nx: Vec<f64> = (0..n).map(|i| 2.0 * cur[i] - prev[i] + dt * dt * acc[i]).collect();
                    fix_boundaries(&op, &mut nx, &cur, dt, config.outer_boundary);
                    nx
                };
                let t = step as f64 * dt;
                if check(&next, t)? {
                    traj.blow_up = Some(t);
                    break;
                }
                if step % stride == 0 {
                    let v: Vec<f64> = (0..n).map(|i| (next[i] - prev[i]) / (2.0 * dt)).collect();
                    record(&mut traj, t, &cur, &v);
                }
                prev = std::mem::replace(&mut cur, next);
            }
        }
        Scheme::Rk4Mol => {
            let deriv = |x: &[f64], v: &[f64], dx: &mut [f64], dv: &mut [f64]| {
                dx.copy_from_slice(v);
                rhs(x, dv);
                if op.is_w_form() {
                    dx[0] = 0.0;
                    dv[0] = 0.0;
                }
                match config.outer_boundary {
                    OuterBoundary::Outgoing => {
                        dx[n - 1] = op.outgoing_rate(x);
                        dv[n - 1] = 0.0;
                    }
                    OuterBoundary::Dirichlet => {
                        dx[n - 1] = 0.0;
                        dv[n - 1] = 0.0;
                    }
                    OuterBoundary::Neumann => {}
                }
            };
            let mut x = x0.clone();
            let mut v = v0.clone();
            record(&mut traj, 0.0, &x, &v);
            let mut k = [(); 4].map(|_| (vec![0.0; n], vec![0.0; n]));
            let mut xs = vec![0.0; n];
            let mut vs = vec![0.0; n];
            for step in 1..=n_steps {
                for stage in 0..4 {
                    let c = match stage {
                        0 => 0.0,
                        3 => dt,
                        _ => 0.5 * dt,
                    };
                    if stage == 0 {
                        xs.copy_from_slice(&x);
                        vs.copy_from_slice(&v);
                    } else {
                        let (px, pv) = &k[stage - 1];
                        for i in 0..n {
                            xs[i] = x[i] + c * px[i];
                            vs[i] = v[i] + c * pv[i];
                        }
                    }
                    let (dx, dv) = &mut k[stage];
                    deriv(&xs, &vs, dx, dv);
                }
                for i in 0..n {
                    x[i] += dt / 6.0 * (k[0].0[i] + 2.0 * k[1].0[i] + 2.0 * k[2].0[i] + k[3].0[i]);
                    v[i] += dt / 6.0 * (k[0].1[i] + 2.0 * k[1].1[i] + 2.0 * k[2].1[i] + k[3].1[i]);
                }
                if config.outer_boundary == OuterBoundary::Outgoing {
                    v[n - 1] = op.outgoing_rate(&x);
                }
                let t = step as f64 * dt;
                if check(&x, t)? {
                    traj.blow_up = Some(t);
                    break;
                }
                if step % stride == 0 {
                    record(&mut traj, t, &x, &v);
                }
            }
        }
    }
    Ok(traj)
}

/// Boundary rows of a leapfrog step producing `next` from `cur` (and `prev`).
fn fix_boundaries(op: &Operator, next: &mut [f64], cur: &[f64], dt: f64, outer: OuterBoundary) {
    let n = next.len();
    if op.is_w_form() {
        next[0] = 0.0;
    }
    match outer {
        OuterBoundary::Outgoing => next[n - 1] = cur[n - 1] + dt * op.outgoing_rate(cur),
        OuterBoundary::Dirichlet => next[n - 1] = op.boundary_value,
        OuterBoundary::Neumann => {}
    }
}
