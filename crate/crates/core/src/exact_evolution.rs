//! Closed-form evolution of single power-law data in the lifted dimension `D`.
//!
//! Position data `r^{-D+2k}` evolves into `f = sum_j c_j t^{2j} r^{-D+2k-2j}` and
//! velocity data into `g = sum_j c_j t^{2j+1} r^{-D+2k-2j}`. Matching powers in
//! `d_t^2 - d_r^2 - (D-1)/r d_r` gives
//!
//! ```text
//! position:  c_{j+1} (2j+2)(2j+1) = c_j (2k-2j-D)(2k-2j-2)
//! velocity:  c_{j+1} (2j+3)(2j+2) = c_j (2k-2j-D)(2k-2j-2)
//! ```
//!
//! and the chain stops at `j = k-1`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exterior_basis::{ModeSpec, PowerLaw};
use crate::polylib::poly::{rat, rat_to_f64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainKind {
    Position,
    Velocity,
}

impl ChainKind {
    pub fn name(self) -> &'static str {
        match self {
            ChainKind::Position => "position",
            ChainKind::Velocity => "velocity",
        }
    }

    fn time_offset(self) -> i64 {
        match self {
            ChainKind::Position => 0,
            ChainKind::Velocity => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSolution {
    pub spec: ModeSpec,
    pub k: usize,
    pub kind: ChainKind,
    pub c: Vec<BigRational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactValues {
    pub u: f64,
    pub ut: f64,
    pub ur: f64,
}

/// Largest admissible `k` for the kind (the number of exterior coefficients).
pub fn max_chain_index(spec: &ModeSpec, kind: ChainKind) -> usize {
    match kind {
        ChainKind::Position => spec.k1_count(),
        ChainKind::Velocity => spec.k2_count(),
    }
}

/// Build the coefficient chain for datum `r^{-D+2k}` of the given kind.
pub fn chain_lift(spec: ModeSpec, k: usize, kind: ChainKind) -> Result<ChainSolution> {
    let max = max_chain_index(&spec, kind);
    if k == 0 || k > max {
        return Err(Error::InadmissibleChain {
            k,
            max,
            kind: kind.name(),
            d: spec.d(),
            nu: spec.nu(),
        });
    }
    let big_d = spec.lifted_dim() as i64;
    let k = k as i64;
    let mut c = vec![BigRational::one()];
    for j in 0..k - 1 {
        let num = (2 * k - 2 * j - big_d) * (2 * k - 2 * j - 2);
        let den = match kind {
            ChainKind::Position => (2 * j + 2) * (2 * j + 1),
            ChainKind::Velocity => (2 * j + 3) * (2 * j + 2),
        };
        let next = &c[j as usize] * BigRational::new(num.into(), den.into());
        c.push(next);
    }
    Ok(ChainSolution {
        spec,
        k: k as usize,
        kind,
        c,
    })
}

impl ChainSolution {
    /// `(coefficient, t power, r power)` of every term of the sum.
    pub fn terms(&self) -> Vec<(BigRational, i64, i64)> {
        let big_d = self.spec.lifted_dim() as i64;
        let k = self.k as i64;
        let off = self.kind.time_offset();
        self.c
            .iter()
            .enumerate()
            .map(|(j, c)| (c.clone(), 2 * j as i64 + off, -big_d + 2 * k - 2 * j as i64))
            .collect()
    }

    /// Power of `r` in the initial datum.
    pub fn datum_power(&self) -> i32 {
        2 * self.k as i32 - self.spec.lifted_dim() as i32
    }

    /// Nonzero monomials of `u_tt - u_rr - (D-1)/r u_r`, keyed by `(t power, r power)`.
    pub fn wave_residual(&self) -> BTreeMap<(i64, i64), BigRational> {
        let big_d = self.spec.lifted_dim() as i64;
        let mut out: BTreeMap<(i64, i64), BigRational> = BTreeMap::new();
        for (c, a, b) in self.terms() {
            if a >= 2 {
                *out.entry((a - 2, b)).or_insert_with(BigRational::zero) += &c * rat(a * (a - 1));
            }
            // radial Laplacian of r^b in dimension D
            *out.entry((a, b - 2)).or_insert_with(BigRational::zero) -= &c * rat(b * (b + big_d - 2));
        }
        out.retain(|_, v| !v.is_zero());
        out
    }

    fn at_time(&self, t: f64, dt: bool, dr: bool) -> PowerLaw {
        PowerLaw::new(
            self.terms()
                .into_iter()
                .filter_map(|(c, a, b)| {
                    let mut coef = rat_to_f64(&c);
                    let mut ta = a;
                    let mut rb = b;
                    if dt {
                        if ta == 0 {
                            return None;
                        }
                        coef *= ta as f64;
                        ta -= 1;
                    }
                    if dr {
                        coef *= rb as f64;
                        rb -= 1;
                    }
                    Some((coef * t.powi(ta as i32), rb as i32))
                })
                .collect(),
        )
    }

    /// Profile `u(., t)` as a power sum in `r`.
    pub fn profile(&self, t: f64) -> PowerLaw {
        self.at_time(t, false, false)
    }

    /// Profile `u_t(., t)` as a power sum in `r`.
    pub fn velocity_profile(&self, t: f64) -> PowerLaw {
        self.at_time(t, true, false)
    }

    pub fn eval_exact(&self, r: f64, t: f64) -> Result<ExactValues> {
        if !(r > 0.0) {
            return Err(crate::error::invalid(
                "r",
                format!("evaluation radius must be positive, got {r}"),
            ));
        }
        Ok(ExactValues {
            u: self.at_time(t, false, false).value(r),
            ut: self.at_time(t, true, false).value(r),
            ur: self.at_time(t, false, true).value(r),
        })
    }

    /// `int_{R+|t|}^inf (u_t^2 + u_r^2) r^{D-1} dr` in closed form.
    pub fn exact_cone_energy(&self, radius: f64, t: f64) -> Result<f64> {
        if !(radius > 0.0) {
            return Err(crate::error::invalid(
                "R",
                format!("cone radius must be positive, got {radius}"),
            ));
        }
        let ut = self.at_time(t, true, false);
        let ur = self.at_time(t, false, true);
        let density = PowerLaw::new(ut.mul(&ut).terms.into_iter().chain(ur.mul(&ur).terms).collect())
            .shift(self.spec.lifted_dim() as i32 - 1);
        let e = density
            .tail_integral(radius + t.abs())
            .expect("admissible chains have finite exterior energy");
        Ok(e)
    }

    /// Coefficients as `f64` (for reports).
    pub fn coefficients_f64(&self) -> Vec<f64> {
        self.c.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }
}


/// Exact solution beyond the cone `r > R + |t|` for data whose exterior part is a
/// finite combination of chain data.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactExterior {
    pub radius: f64,
    pub chains: Vec<(f64, ChainSolution)>,
}

impl ExactExterior {
    /// Lifted-frame evolution of the exterior data of one mode.
    pub fn from_mode(data: &crate::exterior_basis::ExteriorModeData) -> Result<Self> {
        let spec = data.spec();
        let mut chains = Vec::new();
        for (kind, coeffs) in [(ChainKind::Position, data.a()), (ChainKind::Velocity, data.b())] {
            for (i, &c) in coeffs.iter().enumerate() {
                if c != 0.0 {
                    chains.push((c, chain_lift(spec, i + 1, kind)?));
                }
            }
        }
        Ok(ExactExterior {
            radius: data.radius(),
            chains,
        })
    }

    fn combine(&self, f: impl Fn(&ChainSolution) -> PowerLaw) -> PowerLaw {
        let mut terms = Vec::new();
        for (w, c) in &self.chains {
            terms.extend(f(c).scale(*w).terms);
        }
        PowerLaw::new(merge_powers(terms))
    }

    pub fn u(&self, t: f64) -> PowerLaw {
        self.combine(|c| c.profile(t))
    }

    pub fn ut(&self, t: f64) -> PowerLaw {
        self.combine(|c| c.velocity_profile(t))
    }

    pub fn ur(&self, t: f64) -> PowerLaw {
        self.combine(|c| c.profile(t).differentiate())
    }

    /// `int_a^inf (u_t^2 + u_r^2) r^{D-1} dr`, valid for `a >= R + |t|`.
    pub fn energy_tail(&self, a: f64, t: f64, lifted_dim: usize) -> f64 {
        let (ut, ur) = (self.ut(t), self.ur(t));
        let density = PowerLaw::new(ut.mul(&ut).terms.into_iter().chain(ur.mul(&ur).terms).collect());
        density
            .shift(lifted_dim as i32 - 1)
            .tail_integral(a)
            .expect("admissible chains have finite exterior energy")
    }

    /// `int_a^inf |u|^p r^{D-1} dr` for even `p`, valid for `a >= R + |t|`.
    pub fn power_tail(&self, a: f64, t: f64, p: usize, lifted_dim: usize) -> f64 {
        let u = self.u(t);
        let mut acc = PowerLaw::new(vec![(1.0, 0)]);
        for _ in 0..p {
            acc = acc.mul(&u);
        }
        if acc.is_zero() {
            return 0.0;
        }
        acc.shift(lifted_dim as i32 - 1)
            .tail_integral(a)
            .expect("integrable power of admissible exterior data")
    }
}

fn merge_powers(terms: Vec<(f64, i32)>) -> Vec<(f64, i32)> {
    let mut out: Vec<(f64, i32)> = Vec::new();
    for (c, p) in terms {
        match out.iter_mut().find(|(_, q)| *q == p) {
            Some(slot) => slot.0 += c,
            None => out.push((c, p)),
        }
    }
    out
}
