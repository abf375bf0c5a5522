//! Real orthonormal spherical harmonics on the 2-sphere, product quadrature and
//! mode projection of sampled fields.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::polylib::gauss_nodes;

/// Normalized associated Legendre values `Pbar_{j,|m|}(x)` for `j = |m|..=l`,
/// so that `Pbar * trig` is orthonormal on the sphere (no Condon-Shortley phase).
fn normalized_legendre_column(l: usize, m: usize, x: f64) -> Vec<f64> {
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for k in 1..=m {
        let kf = k as f64;
        pmm *= ((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * s;
    }
    let mut out = vec![pmm];
    if l == m {
        return out;
    }
    let mf = m as f64;
    out.push((2.0 * mf + 3.0).sqrt() * x * pmm);
    for j in m + 2..=l {
        let jf = j as f64;
        let a = ((4.0 * jf * jf - 1.0) / (jf * jf - mf * mf)).sqrt();
        let b = (((jf - 1.0).powi(2) - mf * mf) / (4.0 * (jf - 1.0).powi(2) - 1.0)).sqrt();
        let next = a * (x * out[j - m - 1] - b * out[j - m - 2]);
        out.push(next);
    }
    out
}

fn check_order(l: usize, m: i64) -> Result<()> {
    if m.unsigned_abs() as usize > l {
        return Err(invalid(
            "m",
            format!("harmonic order must satisfy |m| <= l = {l}, got {m}"),
        ));
    }
    Ok(())
}

fn azimuthal(m: i64, phi: f64) -> (f64, f64) {
    let mf = m.unsigned_abs() as f64;
    match m.signum() {
        0 => (1.0, 0.0),
        1 => (2f64.sqrt() * (mf * phi).cos(), -2f64.sqrt() * mf * (mf * phi).sin()),
        _ => (2f64.sqrt() * (mf * phi).sin(), 2f64.sqrt() * mf * (mf * phi).cos()),
    }
}

/// Real orthonormal harmonic `Y_{l,m}(theta, phi)`; `m < 0` selects the sine branch.
pub fn sph_harm_eval(l: usize, m: i64, theta: f64, phi: f64) -> Result<f64> {
    check_order(l, m)?;
    let col = normalized_legendre_column(l, m.unsigned_abs() as usize, theta.cos());
    Ok(col[col.len() - 1] * azimuthal(m, phi).0)
}

/// Components `(d_theta Y, (1/sin theta) d_phi Y)` of the surface gradient; `theta` off the poles.
pub fn sph_harm_grad(l: usize, m: i64, theta: f64, phi: f64) -> Result<(f64, f64)> {
    check_order(l, m)?;
    let ma = m.unsigned_abs() as usize;
    let x = theta.cos();
    let s = theta.sin();
    if s.abs() < 1e-300 {
        return Err(invalid("theta", "surface gradient is evaluated off the poles"));
    }
    let col = normalized_legendre_column(l, ma, x);
    let p = col[col.len() - 1];
    let lf = l as f64;
    let mf = ma as f64;
    // (x^2-1) dPbar_l/dx = l x Pbar_l - sqrt((2l+1)(l^2-m^2)/(2l-1)) Pbar_{l-1}
    let lower = if l > ma {
        ((2.0 * lf + 1.0) * (lf * lf - mf * mf) / (2.0 * lf - 1.0)).sqrt() * col[col.len() - 2]
    } else {
        0.0
    };
    let dp_dtheta = (lf * x * p - lower) / s;
    let (trig, dtrig) = azimuthal(m, phi);
    Ok((dp_dtheta * trig, p * dtrig / s))
}

/// Gauss–Legendre in `cos theta` times a uniform rule in `phi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphereGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub theta: Vec<f64>,
    pub theta_weights: Vec<f64>,
    pub phi: Vec<f64>,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_phi == 0 {
            return Err(invalid("n_phi", "azimuthal node count must be positive"));
        }
        let rule = gauss_nodes(n_theta)?;
        Ok(SphereGrid {
            n_theta,
            n_phi,
            theta: rule.nodes.iter().map(|x| x.acos()).collect(),
            theta_weights: rule.weights,
            phi: (0..n_phi).map(|k| 2.0 * PI * k as f64 / n_phi as f64).collect(),
        })
    }

    /// Smallest grid that integrates spherical polynomials of degree `2 * lmax` exactly.
    pub fn for_band_limit(lmax: usize) -> Result<Self> {
        Self::new(lmax + 1, 2 * lmax + 1)
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Highest total degree integrated exactly.
    pub fn exactness(&self) -> usize {
        (2 * self.n_theta - 1).min(self.n_phi - 1)
    }

    /// Highest harmonic degree that can be projected exactly.
    pub fn resolved_degree(&self) -> usize {
        self.exactness() / 2
    }

    /// Quadrature weight of node `(i, j)`.
    pub fn weight(&self, i: usize, _j: usize) -> f64 {
        self.theta_weights[i] * 2.0 * PI / self.n_phi as f64
    }

    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        let mut total = 0.0;
        for (i, &th) in self.theta.iter().enumerate() {
            for (j, &ph) in self.phi.iter().enumerate() {
                total += self.weight(i, j) * f(th, ph);
            }
        }
        total
    }

    /// Samples of `Y_{l,m}` in node order.
    fn harmonic_samples(&self, l: usize, m: i64) -> Vec<f64> {
        let ma = m.unsigned_abs() as usize;
        let mut out = Vec::with_capacity(self.len());
        for &th in &self.theta {
            let col = normalized_legendre_column(l, ma, th.cos());
            let p = col[col.len() - 1];
            for &ph in &self.phi {
                out.push(p * azimuthal(m, ph).0);
            }
        }
        out
    }
}

/// Samples `u(r_i, theta_j, phi_k)` on radial shells; node index runs fastest in `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereField {
    pub radii: Vec<f64>,
    pub grid: SphereGrid,
    pub values: Vec<f64>,
}

impl SphereField {
    pub fn from_fn<F: Fn(f64, f64, f64) -> f64 + Sync>(radii: Vec<f64>, grid: SphereGrid, f: F) -> Result<Self> {
        if radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|&r| !(r > 0.0)) {
            return Err(invalid("radii", "radial grid must be positive and strictly increasing"));
        }
        let mut values = Vec::with_capacity(radii.len() * grid.len());
        for &r in &radii {
            for &th in &grid.theta {
                for &ph in &grid.phi {
                    values.push(f(r, th, ph));
                }
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(invalid("values", format!("field samples must be finite, got {v}")));
        }
        Ok(SphereField { radii, grid, values })
    }

    pub fn shell(&self, i: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// `int u(r_i theta)^2 dtheta` per shell.
    pub fn shell_norm2(&self) -> Vec<f64> {
        (0..self.radii.len())
            .map(|i| {
                self.shell(i)
                    .iter()
                    .enumerate()
                    .map(|(k, v)| self.grid.weight(k / self.grid.n_phi, k % self.grid.n_phi) * v * v)
                    .sum()
            })
            .collect()
    }
}

/// Coefficient `c(r) = int u Y_{l,m}` and its lift `r^{-l} c(r)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeProjection {
    pub l: usize,
    pub m: i64,
    pub coefficient: Vec<f64>,
    pub lifted: Vec<f64>,
}

pub fn analyze(field: &SphereField, l: usize, m: i64) -> Result<ModeProjection> {
    check_order(l, m)?;
    let resolved = field.grid.resolved_degree();
    if l > resolved {
        return Err(Error::UnderResolved { requested: l, resolved });
    }
    let y = field.grid.harmonic_samples(l, m);
    let n_phi = field.grid.n_phi;
    let weighted: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(k, v)| v * field.grid.weight(k / n_phi, k % n_phi))
        .collect();
    let coefficient: Vec<f64> = (0..field.radii.len())
        .map(|i| field.shell(i).iter().zip(&weighted).map(|(u, w)| u * w).sum())
        .collect();
    let lifted = coefficient
        .iter()
        .zip(&field.radii)
        .map(|(c, r)| c * r.powi(-(l as i32)))
        .collect();
    Ok(ModeProjection {
        l,
        m,
        coefficient,
        lifted,
    })
}

/// All projections with `l <= lmax`, computed in parallel.
pub fn analyze_all(field: &SphereField, lmax: usize) -> Result<Vec<ModeProjection>> {
    let modes: Vec<(usize, i64)> = (0..=lmax)
        .flat_map(|l| (-(l as i64)..=l as i64).map(move |m| (l, m)))
        .collect();
    modes.par_iter().map(|&(l, m)| analyze(field, l, m)).collect()
}

/// Assemble `sum c_{l,m}(r) Y_{l,m}` on the grid.
pub fn synthesize(modes: &[(usize, i64, Vec<f64>)], radii: Vec<f64>, grid: SphereGrid) -> Result<SphereField> {
    let mut samples = Vec::with_capacity(modes.len());
    for (l, m, c) in modes {
        check_order(*l, *m)?;
        if c.len() != radii.len() {
            return Err(invalid(
                "coefficients",
                format!("mode ({l},{m}) has {} radial values, grid has {}", c.len(), radii.len()),
            ));
        }
        samples.push(grid.harmonic_samples(*l, *m));
    }
    let n = grid.len();
    let mut values = vec![0.0; radii.len() * n];
    for ((_, _, c), y) in modes.iter().zip(&samples) {
        for (i, ci) in c.iter().enumerate() {
            for (v, yk) in values[i * n..(i + 1) * n].iter_mut().zip(y) {
                *v += ci * yk;
            }
        }
    }
    SphereField::from_fn(radii, grid, |_, _, _| 0.0).map(|mut f| {
        f.values = values;
        f
    })
}
