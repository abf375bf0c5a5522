//! Sup-norm and derivative inequalities for polynomials on `[0, L]`.
//!
//! For a polynomial `P` of degree `k` and `L >= 2l > 0`:
//!
//! | variant      | lhs                          | rhs                                  |
//! |--------------|------------------------------|--------------------------------------|
//! | `sup_odd`    | `max_[0,L] |P|^2`            | `(k+1)^2/L * int_0^L |P|^2`          |
//! | `deriv_odd`  | `int_0^l |zP'|^2`            | `2k(k+1) l/L * int_0^L |P|^2`        |
//! | `sup_even`   | `max_[0,L] z|P|^2`           | `2(k+1)^2/L * int_0^L z|P|^2`        |
//! | `deriv_even` | `int_0^l z|zP'|^2`           | `2k(k+2) l/L * int_0^L z|P|^2`       |
//!
//! Integrals are exact rational computations. Maxima are bracketed by exact
//! root isolation of the critical-point polynomial (Sturm sequences) plus a
//! rigorous derivative bound on each isolating interval, so `holds` is a
//! proof-grade decision rather than a floating-point comparison.

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::poly::{rat, rat_to_f64, ratio, FloatPoly, RatPoly};
use crate::error::{invalid, Result};

/// Above this degree the maximum is located by Chebyshev sampling in `f64`.
pub const EXACT_MAX_DEGREE: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaVariant {
    SupOdd,
    DerivOdd,
    SupEven,
    DerivEven,
}

impl LemmaVariant {
    pub const ALL: [LemmaVariant; 4] = [
        LemmaVariant::SupOdd,
        LemmaVariant::DerivOdd,
        LemmaVariant::SupEven,
        LemmaVariant::DerivEven,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaVariant::SupOdd => "sup_odd",
            LemmaVariant::DerivOdd => "deriv_odd",
            LemmaVariant::SupEven => "sup_even",
            LemmaVariant::DerivEven => "deriv_even",
        }
    }

    fn is_derivative(self) -> bool {
        matches!(self, LemmaVariant::DerivOdd | LemmaVariant::DerivEven)
    }

    /// Exponent of the `z` weight (0 for the odd variants, 1 for the even ones).
    fn weight_power(self) -> usize {
        match self {
            LemmaVariant::SupOdd | LemmaVariant::DerivOdd => 0,
            LemmaVariant::SupEven | LemmaVariant::DerivEven => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub variant: LemmaVariant,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `lhs` is exact (integral variants, or a maximum attained at a rational point).
    pub lhs_exact: bool,
}

/// Check one inequality on `[0, L]`. `small_l` is ignored by the sup variants.
pub fn lemma_check(
    poly: &RatPoly,
    variant: LemmaVariant,
    big_l: &BigRational,
    small_l: &BigRational,
) -> Result<LemmaCheck> {
    if !big_l.is_positive() {
        return Err(invalid("L", "interval length L must be positive"));
    }
    if variant.is_derivative() {
        if !small_l.is_positive() {
            return Err(invalid("l", "derivative variants require l > 0"));
        }
        if &(small_l * rat(2)) > big_l {
            return Err(invalid(
                "l",
                format!(
                    "derivative variants require L >= 2l, got L={}, l={}",
                    rat_to_f64(big_l),
                    rat_to_f64(small_l)
                ),
            ));
        }
    }
    if poly.is_zero() {
        return Ok(LemmaCheck {
            variant,
            lhs: 0.0,
            rhs: 0.0,
            holds: true,
            lhs_exact: true,
        });
    }

    let kappa = rat(poly.degree() as i64);
    let w = variant.weight_power();
    let zero = BigRational::zero();
    let mass = poly.pow(2).shift(w).integrate(&zero, big_l);

    let rhs = match variant {
        LemmaVariant::SupOdd => (&kappa + rat(1)).pow(2) / big_l * &mass,
        LemmaVariant::SupEven => rat(2) * (&kappa + rat(1)).pow(2) / big_l * &mass,
        LemmaVariant::DerivOdd => rat(2) * &kappa * (&kappa + rat(1)) * small_l / big_l * &mass,
        LemmaVariant::DerivEven => rat(2) * &kappa * (&kappa + rat(2)) * small_l / big_l * &mass,
    };

    if variant.is_derivative() {
        let zp = poly.derivative().shift(1);
        let lhs = zp.pow(2).shift(w).integrate(&zero, small_l);
        return Ok(LemmaCheck {
            variant,
            lhs: rat_to_f64(&lhs),
            rhs: rat_to_f64(&rhs),
            holds: lhs <= rhs,
            lhs_exact: true,
        });
    }

    if poly.degree() > EXACT_MAX_DEGREE {
        let lhs = sampled_max(&poly.to_f64(), w, rat_to_f64(big_l));
        let rhs = rat_to_f64(&rhs);
        return Ok(LemmaCheck {
            variant,
            lhs,
            rhs,
            holds: lhs <= rhs * (1.0 + 1e-12),
            lhs_exact: false,
        });
    }

    let decision = decide_max(poly, w, big_l, &rhs);
    Ok(LemmaCheck {
        variant,
        lhs: rat_to_f64(&decision.lower),
        rhs: rat_to_f64(&rhs),
        holds: decision.holds,
        lhs_exact: decision.exact,
    })
}

/// Same inequalities in the `[-1, 1]` parametrization with `0 < delta <= 1`.
///
/// `p(x)` on `[-1,1]` corresponds to `P(z) = p(z - 1)` on `[0, 2]` with `l = delta`,
/// which reproduces the unit-interval constants (`(k+1)^2/2`, `k(k+1)delta`,
/// `(k+1)^2`, `k(k+2)delta`) exactly.
pub fn lemma_check_unit(poly: &RatPoly, variant: LemmaVariant, delta: &BigRational) -> Result<LemmaCheck> {
    let shifted = poly.compose_affine(&rat(1), &rat(-1));
    lemma_check(&shifted, variant, &rat(2), delta)
}

struct MaxDecision {
    holds: bool,
    /// Attained value of the weighted square (a certified lower bound on the max).
    lower: BigRational,
    exact: bool,
}

/// Unreduced fraction with a positive denominator.
#[derive(Debug, Clone)]
struct Frac {
    n: BigInt,
    d: BigInt,
}

impl Frac {
    fn of(x: &BigRational) -> Self {
        Frac {
            n: x.numer().clone(),
            d: x.denom().clone(),
        }
    }

    fn abs(self) -> Self {
        Frac {
            n: self.n.abs(),
            d: self.d,
        }
    }

    fn add(&self, o: &Frac) -> Frac {
        Frac {
            n: &self.n * &o.d + &o.n * &self.d,
            d: &self.d * &o.d,
        }
    }

    fn mul(&self, o: &Frac) -> Frac {
        Frac {
            n: &self.n * &o.n,
            d: &self.d * &o.d,
        }
    }

    fn cmp(&self, o: &Frac) -> Ordering {
        (&self.n * &o.d).cmp(&(&o.n * &self.d))
    }

    fn reduced(&self) -> BigRational {
        BigRational::new(self.n.clone(), self.d.clone())
    }
}

/// `p = c / den` with integer `c`: exact evaluation without intermediate gcds.
#[derive(Debug, Clone)]
struct Scaled {
    c: Vec<BigInt>,
    den: BigInt,
}

impl Scaled {
    fn new(p: &RatPoly) -> Self {
        let den = p.coeffs().iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let c = p.coeffs().iter().map(|x| x.numer() * (&den / x.denom())).collect();
        Scaled { c, den }
    }

    /// Coefficientwise absolute value: `sum |c_i| x^i` bounds `|p|` on `[-x, x]`.
    fn abs(&self) -> Self {
        Scaled {
            c: self.c.iter().map(|x| x.abs()).collect(),
            den: self.den.clone(),
        }
    }

    fn eval(&self, x: &BigRational) -> Frac {
        let (a, b) = (x.numer(), x.denom());
        let mut it = self.c.iter().rev();
        let mut v = it.next().cloned().unwrap_or_else(BigInt::zero);
        let mut bp = BigInt::one();
        for ci in it {
            bp *= b;
            v = v * a + ci * &bp;
        }
        Frac {
            n: v,
            d: bp * &self.den,
        }
    }

    fn sign(&self, x: &BigRational) -> Sign {
        self.eval(x).n.sign()
    }
}

/// `z^w p(z)^2`
fn weighted_square(p: &Scaled, w: usize, z: &BigRational) -> Frac {
    let v = p.eval(z);
    let sq = v.mul(&v);
    if w == 1 {
        sq.mul(&Frac::of(z))
    } else {
        sq
    }
}

fn larger(a: Frac, b: Frac) -> Frac {
    if b.cmp(&a) == Ordering::Greater {
        b
    } else {
        a
    }
}

fn decide_max(p: &RatPoly, w: usize, big_l: &BigRational, target: &BigRational) -> MaxDecision {
    let zero = BigRational::zero();
    let ps = Scaled::new(p);
    let target = Frac::of(target);
    let mut lower = larger(weighted_square(&ps, w, &zero), weighted_square(&ps, w, big_l));

    // critical points of z^w p^2 other than the zeros of p
    let critical = if w == 0 {
        p.derivative()
    } else {
        p + &p.derivative().shift(1).scale(&rat(2))
    };
    let mut roots = if critical.degree() == 0 {
        Vec::new()
    } else {
        isolate_roots(&critical.square_free(), &zero, big_l)
    };
    // max |p'| on [a, b] inside [0, L] is at most this majorant at b
    let slope = Scaled::new(&p.derivative()).abs();

    for _ in 0..400 {
        let mut undecided = false;
        let mut interval_lower = lower.clone();
        for root in &roots {
            match root {
                Root::Exact(z) => {
                    interval_lower = larger(interval_lower, weighted_square(&ps, w, z));
                }
                Root::Bracket { a, b, .. } => {
                    let mid = (a + b) / rat(2);
                    interval_lower = larger(interval_lower, weighted_square(&ps, w, &mid));
                    let half = Frac::of(&((b - a) / rat(2)));
                    let env = ps.eval(&mid).abs().add(&slope.eval(b).mul(&half));
                    let mut upper = env.mul(&env);
                    if w == 1 {
                        upper = upper.mul(&Frac::of(b));
                    }
                    if upper.cmp(&target) == Ordering::Greater {
                        undecided = true;
                    }
                }
            }
        }
        if interval_lower.cmp(&target) == Ordering::Greater {
            return MaxDecision {
                holds: false,
                lower: interval_lower.reduced(),
                exact: false,
            };
        }
        lower = interval_lower;
        if !undecided {
            let brackets_tight = roots.iter().all(|r| match r {
                Root::Exact(_) => true,
                Root::Bracket { a, b, .. } => rat_to_f64(&(b - a)) <= 1e-9 * rat_to_f64(big_l),
            });
            if brackets_tight {
                return MaxDecision {
                    holds: true,
                    lower: lower.reduced(),
                    exact: roots.iter().all(|r| matches!(r, Root::Exact(_))),
                };
            }
        }
        for root in roots.iter_mut() {
            root.bisect();
        }
    }
    // Only reachable when the maximum equals the bound to within 2^-400.
    MaxDecision {
        holds: lower.cmp(&target) != Ordering::Greater,
        lower: lower.reduced(),
        exact: false,
    }
}

#[derive(Debug, Clone)]
enum Root {
    Exact(BigRational),
    Bracket {
        a: BigRational,
        b: BigRational,
        poly: Scaled,
        sign_a: Sign,
    },
}

impl Root {
    fn bisect(&mut self) {
        if let Root::Bracket { a, b, poly, sign_a } = self {
            let mid = (&*a + &*b) / rat(2);
            let s = poly.sign(&mid);
            if s == Sign::NoSign {
                *self = Root::Exact(mid);
            } else if s == *sign_a {
                *a = mid;
            } else {
                *b = mid;
            }
        }
    }
}

fn sturm_chain(p: &RatPoly) -> Vec<Scaled> {
    let mut chain = vec![p.monic_keep_sign(), p.derivative().monic_keep_sign()];
    loop {
        let n = chain.len();
        if chain[n - 1].degree() == 0 {
            break;
        }
        let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
        if r.is_zero() {
            break;
        }
        // positive rescaling keeps the sign pattern
        chain.push((-&r).monic_keep_sign());
    }
    chain.iter().map(Scaled::new).collect()
}

trait KeepSign {
    fn monic_keep_sign(&self) -> RatPoly;
}

impl KeepSign for RatPoly {
    fn monic_keep_sign(&self) -> RatPoly {
        let lead = self.leading().abs();
        self.scale(&(BigRational::one() / lead))
    }
}

fn sign_variations(chain: &[Scaled], x: &BigRational) -> usize {
    let mut last: Option<Sign> = None;
    let mut count = 0;
    for p in chain {
        let s = p.sign(x);
        if s == Sign::NoSign {
            continue;
        }
        if last.is_some_and(|prev| prev != s) {
            count += 1;
        }
        last = Some(s);
    }
    count
}

/// Isolate the roots of a square-free polynomial in the open interval `(lo, hi)`.
fn isolate_roots(p: &RatPoly, lo: &BigRational, hi: &BigRational) -> Vec<Root> {
    let mut p = p.clone();
    // endpoint roots are covered by the endpoint candidates
    for end in [lo, hi] {
        if p.eval(end).is_zero() {
            let linear = RatPoly::new(vec![-end.clone(), BigRational::one()]);
            p = p.div_rem(&linear).0;
        }
    }
    if p.degree() == 0 {
        return Vec::new();
    }
    let chain = sturm_chain(&p);
    let ps = Scaled::new(&p);
    let mut out = Vec::new();
    let mut stack = vec![(lo.clone(), hi.clone())];
    while let Some((a, b)) = stack.pop() {
        let count = sign_variations(&chain, &a) - sign_variations(&chain, &b);
        match count {
            0 => {}
            1 => {
                out.push(Root::Bracket {
                    sign_a: ps.sign(&a),
                    a,
                    b,
                    poly: ps.clone(),
                });
            }
            _ => {
                let mut mid = (&a + &b) / rat(2);
                let mut k = 3u32;
                while ps.sign(&mid) == Sign::NoSign {
                    // nudge off an exact rational root so both halves stay well posed
                    out.push(Root::Exact(mid.clone()));
                    let nudge = (&b - &a) / rat(1i64 << k);
                    mid = &mid + nudge;
                    k += 1;
                }
                stack.push((a, mid.clone()));
                stack.push((mid, b));
            }
        }
    }
    out.retain(|r| match r {
        Root::Exact(z) => z > lo && z < hi,
        _ => true,
    });
    out
}

/// Maximum of `z^w p(z)^2` on `[0, L]` from `10k+1` Chebyshev samples and a Newton step.
fn sampled_max(p: &FloatPoly, w: usize, big_l: f64) -> f64 {
    let g = |z: f64| z.powi(w as i32) * p.eval(&z).powi(2);
    let critical = if w == 0 {
        p.derivative()
    } else {
        p + &p.derivative().shift(1).scale(&2.0)
    };
    let dcrit = critical.derivative();
    let n = 10 * p.degree() + 1;
    let mut best = g(0.0).max(g(big_l));
    for i in 0..n {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
        let z0 = 0.5 * big_l * (1.0 - theta.cos());
        best = best.max(g(z0));
        let d = dcrit.eval(&z0);
        if d != 0.0 {
            let z1 = z0 - critical.eval(&z0) / d;
            if (0.0..=big_l).contains(&z1) {
                best = best.max(g(z1));
            }
        }
    }
    best
}

/// Outcome of checking one variant on a batch of random rational polynomials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSweep {
    pub variant: LemmaVariant,
    pub trials: usize,
    pub degree_max: usize,
    pub violations: usize,
    /// Largest `lhs / rhs` observed.
    pub max_ratio: f64,
}

/// Random polynomial of degree at most `degree_max`, coefficients `p/q` with
/// `|p| <= 20`, `1 <= q <= 9`.
pub fn random_rational_poly<R: Rng>(rng: &mut R, degree_max: usize) -> RatPoly {
    let degree = rng.gen_range(0..=degree_max);
    let coeffs = (0..=degree)
        .map(|_| ratio(rng.gen_range(-20..=20), rng.gen_range(1..=9)))
        .collect();
    RatPoly::new(coeffs)
}

/// Check `variant` on `trials` random polynomials with random `L >= 2l > 0`.
///
/// Inputs are drawn sequentially from a ChaCha stream seeded with `seed`, so the
/// result depends only on the arguments.
pub fn lemma_sweep(variant: LemmaVariant, degree_max: usize, trials: usize, seed: u64) -> Result<LemmaSweep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(RatPoly, BigRational, BigRational)> = (0..trials)
        .map(|_| {
            let p = random_rational_poly(&mut rng, degree_max);
            let big_l = ratio(rng.gen_range(1..=24), rng.gen_range(1..=4));
            let den = rng.gen_range(1..=6);
            let small_l = &big_l * ratio(rng.gen_range(1..=den), 2 * den);
            (p, big_l, small_l)
        })
        .collect();
    let checks: Vec<LemmaCheck> = cases
        .par_iter()
        .map(|(p, big_l, small_l)| lemma_check(p, variant, big_l, small_l))
        .collect::<Result<_>>()?;
    let violations = checks.iter().filter(|c| !c.holds).count();
    let max_ratio = checks
        .iter()
        .filter(|c| c.rhs > 0.0)
        .map(|c| c.lhs / c.rhs)
        .fold(0.0, f64::max);
    Ok(LemmaSweep {
        variant,
        trials,
        degree_max,
        violations,
        max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polylib::poly::ratio;

    #[test]
    fn constant_sup_odd_equality() {
        let c = lemma_check(&RatPoly::constant(rat(1)), LemmaVariant::SupOdd, &rat(2), &rat(1)).unwrap();
        assert_eq!(c.lhs, 1.0);
        assert_eq!(c.rhs, 1.0);
        assert!(c.holds && c.lhs_exact);
    }

    #[test]
    fn constant_sup_even_equality() {
        let c = lemma_check(&RatPoly::constant(rat(3)), LemmaVariant::SupEven, &rat(5), &rat(1)).unwrap();
        assert_eq!(c.lhs, c.rhs);
        assert!(c.holds);
    }

    #[test]
    fn x_deriv_odd_unit_form() {
        let c = lemma_check_unit(&RatPoly::x(), LemmaVariant::DerivOdd, &rat(1)).unwrap();
        assert!((c.lhs - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.rhs - 4.0 / 3.0).abs() < 1e-15);
        assert!(c.holds);
    }

    #[test]
    fn zero_polynomial_trivial() {
        for v in LemmaVariant::ALL {
            let c = lemma_check(&RatPoly::zero(), v, &rat(2), &rat(1)).unwrap();
            assert_eq!((c.lhs, c.rhs, c.holds), (0.0, 0.0, true));
        }
    }

    #[test]
    fn rejects_short_interval() {
        let err = lemma_check(&RatPoly::x(), LemmaVariant::DerivEven, &rat(1), &ratio(3, 4));
        assert!(err.is_err());
        // sup variants do not use l
        assert!(lemma_check(&RatPoly::x(), LemmaVariant::SupEven, &rat(1), &ratio(3, 4)).is_ok());
    }

    #[test]
    fn interior_maximum_is_bracketed() {
        // P = 1 - 3z + z^2 on [0, 3]: endpoints give 1, the critical point
        // z=3/2 gives P=-5/4.
        let p = RatPoly::new(vec![rat(1), rat(-3), rat(1)]);
        let c = lemma_check(&p, LemmaVariant::SupOdd, &rat(3), &rat(1)).unwrap();
        assert!((c.lhs - 25.0 / 16.0).abs() < 1e-15);
        assert!(c.lhs_exact);
    }

    #[test]
    fn irrational_critical_point() {
        // P = z^3 - 2z on [0, 2]: P' = 3z^2 - 2, root sqrt(2/3), |P| = (4/3)sqrt(2/3)
        let p = RatPoly::new(vec![rat(0), rat(-2), rat(0), rat(1)]);
        let c = lemma_check(&p, LemmaVariant::SupOdd, &rat(2), &rat(1)).unwrap();
        // endpoint z=2 gives P=4 -> 16 dominates
        assert_eq!(c.lhs, 16.0);
        let c = lemma_check(&p, LemmaVariant::SupOdd, &ratio(11, 10), &rat(0)).unwrap();
        let expected = (4.0f64 / 3.0).powi(2) * (2.0 / 3.0);
        assert!((c.lhs - expected).abs() < 1e-15, "{} vs {}", c.lhs, expected);
        assert!(!c.lhs_exact);
    }

    #[test]
    fn sampled_matches_exact_on_moderate_degree() {
        let p = RatPoly::new((0..9).map(|k| ratio((k * 7 % 5) - 2, k + 1)).collect());
        for (w, v) in [(0, LemmaVariant::SupOdd), (1, LemmaVariant::SupEven)] {
            let exact = lemma_check(&p, v, &ratio(7, 3), &rat(1)).unwrap().lhs;
            let sampled = sampled_max(&p.to_f64(), w, 7.0 / 3.0);
            assert!((exact - sampled).abs() <= 1e-9 * exact.max(1.0));
        }
    }
}
