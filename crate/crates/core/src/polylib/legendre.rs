//! Legendre polynomials and the modified family orthogonal for `(x+1)dx`.
//!
//! The modified polynomial of degree `n` is
//! `Q_n(x) = 1/(2^{n+1}(n+1)!) d^{n+1}/dx^{n+1} [(x+1)^n (x-1)^{n+1}]`,
//! which coincides with half the Jacobi polynomial `P_n^{(0,1)}`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::poly::{rat, RatPoly};

/// `P_n(x)` by the three-term recurrence.
pub fn legendre_eval(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// `Q_n(x)` by the Jacobi `(0,1)` recurrence
/// `(n+1)(2n-1) J_n = [(4n^2-1)x - 1] J_{n-1} - (n-1)(2n+1) J_{n-2}`, `Q_n = J_n / 2`.
pub fn modified_legendre_eval(n: usize, x: f64) -> f64 {
    let (mut j0, mut j1) = (1.0, 0.5 * (3.0 * x - 1.0));
    if n == 0 {
        return 0.5;
    }
    for k in 2..=n {
        let kf = k as f64;
        let j2 = (((4.0 * kf * kf - 1.0) * x - 1.0) * j1 - (kf - 1.0) * (2.0 * kf + 1.0) * j0)
            / ((kf + 1.0) * (2.0 * kf - 1.0));
        j0 = j1;
        j1 = j2;
    }
    0.5 * j1
}

/// `||P_n||^2 = 2/(2n+1)` on `[-1,1]`.
pub fn legendre_norm2(n: usize) -> f64 {
    2.0 / (2.0 * n as f64 + 1.0)
}

/// `||Q_n||^2 = 1/(2(n+1))` in `L^2([-1,1]; (x+1)dx)`.
pub fn modified_legendre_norm2(n: usize) -> f64 {
    1.0 / (2.0 * (n as f64 + 1.0))
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Exact `P_n` from the Rodrigues formula.
pub fn legendre_rodrigues(n: usize) -> RatPoly {
    let x2m1 = RatPoly::new(vec![rat(-1), rat(0), rat(1)]);
    let denom = BigRational::from_integer((BigInt::one() << n) * factorial(n));
    x2m1.pow(n).nth_derivative(n).scale(&(BigRational::one() / denom))
}

/// Exact `Q_n` from its Rodrigues-type definition.
pub fn modified_legendre_rodrigues(n: usize) -> RatPoly {
    let xp1 = RatPoly::new(vec![rat(1), rat(1)]);
    let xm1 = RatPoly::new(vec![rat(-1), rat(1)]);
    let base = &xp1.pow(n) * &xm1.pow(n + 1);
    let denom = BigRational::from_integer((BigInt::one() << (n + 1)) * factorial(n + 1));
    base.nth_derivative(n + 1).scale(&(BigRational::one() / denom))
}

/// Exact leading coefficient `(2n+1)! / (2^{n+1} n! (n+1)!)` of `Q_n`.
pub fn modified_legendre_leading(n: usize) -> BigRational {
    BigRational::new(
        factorial(2 * n + 1),
        (BigInt::one() << (n + 1)) * factorial(n) * factorial(n + 1),
    )
}

/// Exact `d/dx[(x+1)(1-x^2) Q_n'] + n(n+2)(x+1) Q_n`; identically zero.
pub fn modified_legendre_ode_residual(n: usize) -> RatPoly {
    let q = modified_legendre_rodrigues(n);
    let xp1 = RatPoly::new(vec![rat(1), rat(1)]);
    let one_minus_x2 = RatPoly::new(vec![rat(1), rat(0), rat(-1)]);
    let flux = &(&xp1 * &one_minus_x2) * &q.derivative();
    let n = n as i64;
    let potential = (&xp1 * &q).scale(&rat(n * (n + 2)));
    &flux.derivative() + &potential
}

/// Exact `d/dx[(1-x^2) P_n'] + n(n+1) P_n`; identically zero.
pub fn legendre_ode_residual(n: usize) -> RatPoly {
    let p = legendre_rodrigues(n);
    let one_minus_x2 = RatPoly::new(vec![rat(1), rat(0), rat(-1)]);
    let n = n as i64;
    &(&one_minus_x2 * &p.derivative()).derivative() + &p.scale(&rat(n * (n + 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polylib::poly::ratio;
    use crate::polylib::quadrature::gauss_nodes;
    use approx::assert_abs_diff_eq;

    #[test]
    fn p0_is_one() {
        assert_eq!(legendre_eval(0, 0.37), 1.0);
    }

    #[test]
    fn p3_at_half() {
        assert_abs_diff_eq!(legendre_eval(3, 0.5), -0.4375, epsilon = 1e-15);
    }

    #[test]
    fn p2_norm() {
        let q = gauss_nodes(8).unwrap();
        assert_abs_diff_eq!(q.integrate(|x| legendre_eval(2, x).powi(2)), 0.4, epsilon = 1e-14);
    }

    #[test]
    fn q0_and_q1() {
        for x in [-1.0, -0.3, 0.0, 0.9] {
            assert_abs_diff_eq!(modified_legendre_eval(0, x), 0.5, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(modified_legendre_eval(1, 1.0), 0.5, epsilon = 1e-15);
        assert_eq!(
            modified_legendre_rodrigues(1),
            RatPoly::new(vec![ratio(-1, 4), ratio(3, 4)])
        );
    }

    #[test]
    fn q1_weighted_norm() {
        let q = gauss_nodes(8).unwrap();
        let v = q.integrate(|x| (x + 1.0) * modified_legendre_eval(1, x).powi(2));
        assert_abs_diff_eq!(v, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn leading_coefficients() {
        for n in 0..=12 {
            assert_eq!(modified_legendre_rodrigues(n).leading(), modified_legendre_leading(n));
        }
    }

    #[test]
    fn legendre_bounded_by_one() {
        for n in 0..=30 {
            for i in 0..=200 {
                let x = -1.0 + i as f64 / 100.0;
                assert!(legendre_eval(n, x).abs() <= 1.0 + 1e-14);
            }
        }
    }

    #[test]
    fn ode_residuals_vanish_exactly() {
        for n in 0..=15 {
            assert!(modified_legendre_ode_residual(n).is_zero(), "n={n}");
            assert!(legendre_ode_residual(n).is_zero(), "n={n}");
        }
    }
}
