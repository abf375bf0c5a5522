use serde::{Deserialize, Serialize};

use super::legendre::{legendre_eval, legendre_norm2, modified_legendre_eval, modified_legendre_norm2};
use super::poly::FloatPoly;
use super::quadrature::gauss_nodes;
use crate::error::{invalid, Error, Result};

pub const MAX_PROJECT_DEGREE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Legendre,
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    /// `dx`
    Unit,
    /// `(x+1) dx`
    XPlusOne,
}

impl Family {
    pub fn eval(self, n: usize, x: f64) -> f64 {
        match self {
            Family::Legendre => legendre_eval(n, x),
            Family::Modified => modified_legendre_eval(n, x),
        }
    }

    pub fn norm2(self, n: usize) -> f64 {
        match self {
            Family::Legendre => legendre_norm2(n),
            Family::Modified => modified_legendre_norm2(n),
        }
    }

    pub fn weight(self) -> Weight {
        match self {
            Family::Legendre => Weight::Unit,
            Family::Modified => Weight::XPlusOne,
        }
    }
}

impl Weight {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Weight::Unit => 1.0,
            Weight::XPlusOne => x + 1.0,
        }
    }
}

/// Expansion coefficients of `poly` in the orthogonal `family` for `weight`.
///
/// Returns `deg + 1` coefficients `a_n` with `poly = sum a_n phi_n`.
pub fn project(poly: &FloatPoly, family: Family, weight: Weight) -> Result<Vec<f64>> {
    if family.weight() != weight {
        return Err(Error::MismatchedWeight {
            family: match family {
                Family::Legendre => "Legendre",
                Family::Modified => "modified Legendre",
            },
            expected: match family {
                Family::Legendre => "dx",
                Family::Modified => "(x+1)dx",
            },
        });
    }
    let deg = poly.degree();
    if deg > MAX_PROJECT_DEGREE {
        return Err(invalid(
            "poly",
            format!("degree {deg} exceeds the projection limit {MAX_PROJECT_DEGREE}"),
        ));
    }
    // integrand degree <= 2*deg + 1
    let rule = gauss_nodes(deg + 2)?;
    Ok((0..=deg)
        .map(|n| {
            let inner = rule.integrate(|x| weight.eval(x) * poly.eval(&x) * family.eval(n, x));
            inner / family.norm2(n)
        })
        .collect())
}

/// Weighted `L^2([-1,1])` norm squared by Gauss quadrature.
pub fn weighted_norm2(poly: &FloatPoly, weight: Weight) -> Result<f64> {
    let rule = gauss_nodes(poly.degree() + 2)?;
    Ok(rule.integrate(|x| weight.eval(x) * poly.eval(&x).powi(2)))
}
