//! Radial profiles given as finite sums of power laws, glued across a radius.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `sum c_i r^{p_i}` with integer powers.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerLaw {
    pub terms: Vec<(f64, i32)>,
}

/// `p (p-1) ... (p-j+1)`
fn falling(p: i32, j: usize) -> f64 {
    (0..j).map(|i| (p - i as i32) as f64).product()
}

impl PowerLaw {
    pub fn new(terms: Vec<(f64, i32)>) -> Self {
        PowerLaw {
            terms: terms.into_iter().filter(|(c, _)| *c != 0.0).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `j`-th radial derivative at `r`.
    pub fn derivative(&self, r: f64, j: usize) -> f64 {
        self.terms
            .iter()
            .map(|&(c, p)| {
                let f = falling(p, j);
                // skip annihilated terms so r = 0 never produces 0 * inf
                if f == 0.0 {
                    0.0
                } else {
                    c * f * r.powi(p - j as i32)
                }
            })
            .sum()
    }

    pub fn value(&self, r: f64) -> f64 {
        self.derivative(r, 0)
    }

    /// Multiply by `r^k`.
    pub fn shift(&self, k: i32) -> PowerLaw {
        PowerLaw::new(self.terms.iter().map(|&(c, p)| (c, p + k)).collect())
    }

    pub fn scale(&self, s: f64) -> PowerLaw {
        PowerLaw::new(self.terms.iter().map(|&(c, p)| (c * s, p)).collect())
    }

    pub fn differentiate(&self) -> PowerLaw {
        PowerLaw::new(self.terms.iter().map(|&(c, p)| (c * p as f64, p - 1)).collect())
    }

    /// Product of two power sums.
    pub fn mul(&self, other: &PowerLaw) -> PowerLaw {
        let mut out: Vec<(f64, i32)> = Vec::new();
        for &(a, p) in &self.terms {
            for &(b, q) in &other.terms {
                match out.iter_mut().find(|(_, e)| *e == p + q) {
                    Some(slot) => slot.0 += a * b,
                    None => out.push((a * b, p + q)),
                }
            }
        }
        PowerLaw::new(out)
    }

    /// `int_a^inf self(r) dr`; `None` if some term is not integrable at infinity.
    pub fn tail_integral(&self, a: f64) -> Option<f64> {
        let mut total = 0.0;
        for &(c, p) in &self.terms {
            if p >= -1 {
                return None;
            }
            total += -c * a.powi(p + 1) / (p + 1) as f64;
        }
        Some(total)
    }
}

/// A profile equal to `interior` on `[0, radius]` and `exterior` beyond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub radius: f64,
    pub interior: PowerLaw,
    pub exterior: PowerLaw,
}

impl RadialProfile {
    pub fn zero() -> Self {
        RadialProfile {
            radius: 0.0,
            interior: PowerLaw::default(),
            exterior: PowerLaw::default(),
        }
    }

    pub fn derivative(&self, r: f64, j: usize) -> f64 {
        if r <= self.radius {
            self.interior.derivative(r, j)
        } else {
            self.exterior.derivative(r, j)
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.derivative(r, 0)
    }

    pub fn shift(&self, k: i32) -> RadialProfile {
        RadialProfile {
            radius: self.radius,
            interior: self.interior.shift(k),
            exterior: self.exterior.shift(k),
        }
    }

    /// Extend `exterior` inside `radius` by `r^base * q(r^2)` with `deg q = order`,
    /// matching the value and the first `order` derivatives at `radius`.
    pub fn blend(exterior: PowerLaw, radius: f64, base: i32, order: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(invalid("R", format!("blend radius must be positive, got {radius}")));
        }
        let n = order + 1;
        let powers: Vec<i32> = (0..n).map(|i| base + 2 * i as i32).collect();
        let m = DMatrix::from_fn(n, n, |j, i| falling(powers[i], j) * radius.powi(powers[i] - j as i32));
        let rhs = DVector::from_fn(n, |j, _| exterior.derivative(radius, j));
        let coeffs = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| invalid("order", format!("blend of order {order} is singular")))?;
        let interior = PowerLaw::new(powers.iter().zip(coeffs.iter()).map(|(&p, &c)| (c, p)).collect());
        Ok(RadialProfile {
            radius,
            interior,
            exterior,
        })
    }
}
