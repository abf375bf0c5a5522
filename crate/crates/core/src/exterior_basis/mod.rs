//! Exterior data `r^{-mu} P(1/r)`, `r^{-mu-1} Q(1/r)` of a single spherical-harmonic
//! mode, with the exact norm identities and tail estimates of that family.
//!
//! All improper integrals over `r > R` are evaluated through `z = 1/r`, which
//! turns them into exact polynomial integrals on `(0, 1/R)`: with unit weight
//! `dz` in odd dimension and `z dz` in even dimension.

mod profile;

pub use profile::{PowerLaw, RadialProfile};

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::polylib::poly::{rat, rat_from_f64, rat_to_f64};
use crate::polylib::{FloatPoly, RatPoly};

/// Ambient dimension `d` and harmonic degree `nu` of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawModeSpec")]
pub struct ModeSpec {
    d: usize,
    nu: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModeSpec {
    d: usize,
    nu: usize,
}

impl TryFrom<RawModeSpec> for ModeSpec {
    type Error = Error;
    fn try_from(raw: RawModeSpec) -> Result<Self> {
        ModeSpec::new(raw.d, raw.nu)
    }
}

impl ModeSpec {
    pub fn new(d: usize, nu: usize) -> Result<Self> {
        if d < 2 {
            return Err(invalid("d", format!("dimension must be at least 2, got {d}")));
        }
        Ok(ModeSpec { d, nu })
    }

    /// Radial mode in dimension `d`.
    pub fn radial(d: usize) -> Result<Self> {
        Self::new(d, 0)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn is_odd(&self) -> bool {
        self.d % 2 == 1
    }

    /// `(d-1)/2` for odd `d`, `d/2` for even `d`.
    pub fn mu(&self) -> usize {
        if self.is_odd() {
            (self.d - 1) / 2
        } else {
            self.d / 2
        }
    }

    /// Lifted dimension `d + 2 nu`.
    pub fn lifted_dim(&self) -> usize {
        self.d + 2 * self.nu
    }

    /// Eigenvalue `nu (d - 2 + nu)` of `-Delta` on the sphere.
    pub fn angular_eigenvalue(&self) -> usize {
        self.nu * (self.d - 2 + self.nu)
    }

    /// Number of `A` coefficients.
    pub fn k1_count(&self) -> usize {
        let s = self.mu() + self.nu;
        if self.is_odd() {
            s.div_ceil(2)
        } else {
            s / 2
        }
    }

    /// Number of `B` coefficients.
    pub fn k2_count(&self) -> usize {
        let s = self.mu() + self.nu;
        if self.is_odd() {
            s / 2
        } else {
            s.saturating_sub(1) / 2
        }
    }

    /// Power of `z` carried by `A_{k1}` in `P(z)`, `k1 >= 1`.
    pub fn p_exponent(&self, k1: usize) -> usize {
        let top = self.mu() + self.nu + usize::from(self.is_odd());
        top - 2 * k1
    }

    /// Power of `z` carried by `B_{k2}` in `Q(z)`, `k2 >= 1`.
    pub fn q_exponent(&self, k2: usize) -> usize {
        let top = self.mu() + self.nu + usize::from(self.is_odd());
        top - 1 - 2 * k2
    }

    /// Power of `z` in the integration weight after `z = 1/r`.
    fn weight_power(&self) -> usize {
        usize::from(!self.is_odd())
    }
}

/// Exterior data of a single mode with radius `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModeData", into = "RawModeData")]
pub struct ExteriorModeData {
    spec: ModeSpec,
    radius: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModeData {
    d: usize,
    nu: usize,
    #[serde(rename = "R")]
    radius: f64,
    #[serde(rename = "A", default)]
    a: Vec<f64>,
    #[serde(rename = "B", default)]
    b: Vec<f64>,
}

impl TryFrom<RawModeData> for ExteriorModeData {
    type Error = Error;
    fn try_from(raw: RawModeData) -> Result<Self> {
        build_exterior_mode(ModeSpec::new(raw.d, raw.nu)?, raw.radius, raw.a, raw.b)
    }
}

impl From<ExteriorModeData> for RawModeData {
    fn from(m: ExteriorModeData) -> Self {
        RawModeData {
            d: m.spec.d,
            nu: m.spec.nu,
            radius: m.radius,
            a: m.a,
            b: m.b,
        }
    }
}

/// Validate lengths and radius and assemble the mode.
pub fn build_exterior_mode(spec: ModeSpec, radius: f64, a: Vec<f64>, b: Vec<f64>) -> Result<ExteriorModeData> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(invalid(
            "R",
            format!("radius must be positive and finite, got {radius}"),
        ));
    }
    for (which, seq, expected) in [("A", &a, spec.k1_count()), ("B", &b, spec.k2_count())] {
        if seq.len() != expected {
            return Err(Error::WrongLength {
                which,
                got: seq.len(),
                expected,
                d: spec.d,
                nu: spec.nu,
            });
        }
        if let Some(x) = seq.iter().find(|x| !x.is_finite()) {
            return Err(invalid(which, format!("coefficients must be finite, got {x}")));
        }
    }
    Ok(ExteriorModeData { spec, radius, a, b })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileValues {
    pub u0: f64,
    pub u1: f64,
    pub du0_dr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesNorms {
    /// `int_{|x|>R} |angular gradient of u0|^2`
    pub angular: f64,
    /// `int_{|x|>R} |u1|^2`
    pub u1_norm2: f64,
    /// `int_{|x|>R} |d_r u0|^2`
    pub du0_norm2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayCheck {
    pub tail: f64,
    pub reference: f64,
    pub ratio: f64,
    /// Both sides vanish.
    pub trivial: bool,
}

/// Exterior and interior pieces of `(u0, u1)` for one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeExtension {
    pub spec: ModeSpec,
    pub u0: RadialProfile,
    pub u1: RadialProfile,
}

impl ModeExtension {
    /// Profiles divided by `r^nu`: radial data in the lifted dimension.
    pub fn lifted(&self) -> ModeExtension {
        let k = -(self.spec.nu as i32);
        ModeExtension {
            spec: self.spec,
            u0: self.u0.shift(k),
            u1: self.u1.shift(k),
        }
    }
}

impl ExteriorModeData {
    pub fn spec(&self) -> ModeSpec {
        self.spec
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(&self.b).all(|&x| x == 0.0)
    }

    fn assemble<T: Clone>(
        &self,
        coeffs: &[f64],
        exp: impl Fn(usize) -> usize,
        conv: impl Fn(f64) -> T,
    ) -> Vec<(T, usize)> {
        coeffs.iter().enumerate().map(|(i, &c)| (conv(c), exp(i + 1))).collect()
    }

    /// `P(z) = sum A_{k1} z^{p_exponent(k1)}`
    pub fn p_poly(&self) -> FloatPoly {
        poly_from(self.assemble(&self.a, |k| self.spec.p_exponent(k), |c| c))
    }

    /// `Q(z) = sum B_{k2} z^{q_exponent(k2)}`
    pub fn q_poly(&self) -> FloatPoly {
        poly_from(self.assemble(&self.b, |k| self.spec.q_exponent(k), |c| c))
    }

    pub fn p_exact(&self) -> RatPoly {
        poly_from(self.assemble(&self.a, |k| self.spec.p_exponent(k), rat_from_f64))
    }

    pub fn q_exact(&self) -> RatPoly {
        poly_from(self.assemble(&self.b, |k| self.spec.q_exponent(k), rat_from_f64))
    }

    /// `u0 = r^{-mu} P(1/r)` as a power sum in `r`.
    pub fn u0_power_law(&self) -> PowerLaw {
        let mu = self.spec.mu() as i32;
        PowerLaw::new(
            self.a
                .iter()
                .enumerate()
                .map(|(i, &c)| (c, -mu - self.spec.p_exponent(i + 1) as i32))
                .collect(),
        )
    }

    /// `u1 = r^{-mu-1} Q(1/r)` as a power sum in `r`.
    pub fn u1_power_law(&self) -> PowerLaw {
        let mu = self.spec.mu() as i32;
        PowerLaw::new(
            self.b
                .iter()
                .enumerate()
                .map(|(i, &c)| (c, -mu - 1 - self.spec.q_exponent(i + 1) as i32))
                .collect(),
        )
    }

    /// Pointwise exterior profiles (coefficients of the normalized harmonic).
    pub fn eval_profiles(&self, r: f64) -> Result<ProfileValues> {
        if !(r > self.radius) {
            return Err(Error::NotExterior { r, radius: self.radius });
        }
        let z = 1.0 / r;
        let mu = self.spec.mu() as f64;
        let p = self.p_poly();
        let pz = p.eval(&z);
        let rm = r.powf(-mu);
        Ok(ProfileValues {
            u0: rm * pz,
            u1: rm * z * self.q_poly().eval(&z),
            du0_dr: rm * z * (-mu * pz - z * p.derivative().eval(&z)),
        })
    }

    /// `mu P + z P'`; `-r^{mu+1} d_r u0` in the `z` variable.
    fn radial_derivative_poly(&self) -> RatPoly {
        let p = self.p_exact();
        &p.scale(&rat(self.spec.mu() as i64)) + &p.derivative().shift(1)
    }

    fn z_integral(&self, integrand: &RatPoly, upper: &BigRational) -> BigRational {
        integrand
            .shift(self.spec.weight_power())
            .integrate(&BigRational::zero(), upper)
    }

    /// The three exterior norms of the mode, exactly.
    pub fn series_norms(&self) -> SeriesNorms {
        let top = rat_from_f64(self.radius).recip();
        let p = self.p_exact();
        let q = self.q_exact();
        let lambda = rat(self.spec.angular_eigenvalue() as i64);
        SeriesNorms {
            angular: rat_to_f64(&(lambda * self.z_integral(&p.pow(2), &top))),
            u1_norm2: rat_to_f64(&self.z_integral(&q.pow(2), &top)),
            du0_norm2: rat_to_f64(&self.z_integral(&self.radial_derivative_poly().pow(2), &top)),
        }
    }

    /// Radial-derivative tail beyond `R1` against `(R/R1)` times the exterior energy.
    pub fn decay_bound_check(&self, r1: f64) -> Result<DecayCheck> {
        if !(r1 >= 2.0 * self.radius) {
            return Err(invalid(
                "R1",
                format!("requires R1 >= 2R = {}, got {r1}", 2.0 * self.radius),
            ));
        }
        let tail_exact = self.z_integral(&self.radial_derivative_poly().pow(2), &rat_from_f64(r1).recip());
        let norms = self.series_norms();
        let energy = if self.spec.nu == 0 {
            norms.du0_norm2 + norms.angular
        } else {
            norms.angular
        };
        let tail = rat_to_f64(&tail_exact);
        let reference = self.radius / r1 * energy;
        if reference == 0.0 {
            assert!(tail == 0.0, "nonzero tail {tail} with vanishing reference");
            return Ok(DecayCheck {
                tail,
                reference,
                ratio: 0.0,
                trivial: true,
            });
        }
        Ok(DecayCheck {
            tail,
            reference,
            ratio: tail / reference,
            trivial: false,
        })
    }

    /// Exterior profiles glued to `r^nu q(r^2)` inside `R`, matching `order` derivatives.
    pub fn extend(&self, order: usize) -> Result<ModeExtension> {
        let base = self.spec.nu as i32;
        Ok(ModeExtension {
            spec: self.spec,
            u0: RadialProfile::blend(self.u0_power_law(), self.radius, base, order)?,
            u1: RadialProfile::blend(self.u1_power_law(), self.radius, base, order)?,
        })
    }
}

fn poly_from<T: crate::polylib::poly::Coeff>(terms: Vec<(T, usize)>) -> crate::polylib::Poly<T> {
    let deg = terms.iter().map(|(_, e)| *e).max().unwrap_or(0);
    let mut coeffs = vec![T::zero(); deg + 1];
    for (c, e) in terms {
        coeffs[e] = coeffs[e].clone() + c;
    }
    crate::polylib::Poly::new(coeffs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RadialSpan {
    pub u0_exponents: Vec<i64>,
    pub u1_exponents: Vec<i64>,
}

/// Powers of `r` spanning the radial non-radiative data in dimension `d`.
pub fn radial_span(d: usize) -> RadialSpan {
    let d = d as i64;
    RadialSpan {
        u0_exponents: (1..=(d + 1) / 4).map(|k| 2 * k - d).collect(),
        u1_exponents: (1..=(d - 1) / 4).map(|k| 2 * k - d).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mode(d: usize, nu: usize, r: f64, a: &[f64], b: &[f64]) -> ExteriorModeData {
        build_exterior_mode(ModeSpec::new(d, nu).unwrap(), r, a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn counts_and_exponents() {
        let s = ModeSpec::new(3, 0).unwrap();
        assert_eq!((s.k1_count(), s.k2_count(), s.p_exponent(1)), (1, 0, 0));
        let s = ModeSpec::new(5, 0).unwrap();
        assert_eq!((s.k1_count(), s.k2_count()), (1, 1));
        assert_eq!((s.p_exponent(1), s.q_exponent(1)), (1, 0));
        let s = ModeSpec::new(4, 0).unwrap();
        assert_eq!((s.k1_count(), s.k2_count(), s.p_exponent(1)), (1, 0, 0));
    }

    #[test]
    fn d5_profiles_are_r_minus_three() {
        let m = mode(5, 0, 1.0, &[2.0], &[3.0]);
        assert_eq!(m.u0_power_law().terms, vec![(2.0, -3)]);
        assert_eq!(m.u1_power_law().terms, vec![(3.0, -3)]);
    }

    #[test]
    fn d4_profile_is_r_minus_two() {
        let m = mode(4, 0, 1.0, &[1.0], &[]);
        assert_eq!(m.u0_power_law().terms, vec![(1.0, -2)]);
    }

    #[test]
    fn wrong_lengths_rejected() {
        let s = ModeSpec::new(3, 0).unwrap();
        assert!(matches!(
            build_exterior_mode(s, 1.0, vec![], vec![]),
            Err(Error::WrongLength { .. })
        ));
        assert!(build_exterior_mode(s, 1.0, vec![1.0], vec![1.0]).is_err());
        assert!(build_exterior_mode(s, -1.0, vec![1.0], vec![]).is_err());
        assert!(ModeSpec::new(1, 0).is_err());
    }

    #[test]
    fn inverse_r_profiles() {
        let v = mode(3, 0, 1.0, &[1.0], &[]).eval_profiles(2.0).unwrap();
        assert_eq!((v.u0, v.u1, v.du0_dr), (0.5, 0.0, -0.25));
        assert!(mode(3, 0, 1.0, &[1.0], &[]).eval_profiles(1.0).is_err());
    }

    #[test]
    fn d7_second_coefficient() {
        let v = mode(7, 0, 1.0, &[0.0, 1.0], &[0.0]).eval_profiles(2.0).unwrap();
        assert_eq!(v.u0, 0.125);
    }

    #[test]
    fn leading_coefficient_at_infinity() {
        let m = mode(7, 0, 1.0, &[0.7, -1.3], &[0.2]);
        let r = 1e4;
        let v = m.eval_profiles(r).unwrap();
        assert_relative_eq!(v.u0 * r.powi(3), -1.3, max_relative = 1e-6);
    }

    #[test]
    fn d3_radial_norms() {
        let n = mode(3, 0, 2.0, &[3.0], &[]).series_norms();
        assert_relative_eq!(n.du0_norm2, 4.5);
        assert_eq!((n.angular, n.u1_norm2), (0.0, 0.0));
    }

    #[test]
    fn d3_dipole_angular_norm() {
        // P(z) = A z for d=3, nu=1
        let n = mode(3, 1, 1.0, &[1.5], &[0.0]).series_norms();
        assert_relative_eq!(n.angular, 2.0 * 1.5 * 1.5 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn inverse_r_decay_ratio_is_one() {
        let c = mode(3, 0, 1.0, &[1.7], &[]).decay_bound_check(2.0).unwrap();
        assert_relative_eq!(c.tail, 1.7 * 1.7 / 2.0, max_relative = 1e-15);
        assert_relative_eq!(c.ratio, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn zero_data_is_trivial() {
        let c = mode(5, 0, 1.0, &[0.0], &[0.0]).decay_bound_check(2.0).unwrap();
        assert!(c.trivial);
        assert!(mode(5, 0, 1.0, &[1.0], &[0.0]).decay_bound_check(1.5).is_err());
    }

    #[test]
    fn span_examples() {
        assert_eq!(
            radial_span(3),
            RadialSpan {
                u0_exponents: vec![-1],
                u1_exponents: vec![]
            }
        );
        assert_eq!(
            radial_span(2),
            RadialSpan {
                u0_exponents: vec![],
                u1_exponents: vec![]
            }
        );
        assert_eq!(
            radial_span(7),
            RadialSpan {
                u0_exponents: vec![-5, -3],
                u1_exponents: vec![-5]
            }
        );
    }

    #[test]
    fn json_round_trip() {
        let m: ExteriorModeData = serde_json::from_str(r#"{"d":5,"nu":0,"R":1.5,"A":[1.0],"B":[-2.0]}"#).unwrap();
        assert_eq!(m.b(), &[-2.0]);
        let back: ExteriorModeData = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ExteriorModeData>(r#"{"d":5,"nu":0,"R":1,"A":[1],"B":[1],"x":1}"#).is_err());
        assert!(serde_json::from_str::<ExteriorModeData>(r#"{"d":3,"nu":0,"R":1,"A":[1,2]}"#).is_err());
    }

    #[test]
    fn lifted_extension_is_even_polynomial_inside() {
        let m = mode(3, 2, 1.0, &[1.0, 0.5], &[0.3]);
        let ext = m.extend(2).unwrap().lifted();
        assert!(ext.u0.interior.terms.iter().all(|&(_, p)| p >= 0 && p % 2 == 0));
    }
}
