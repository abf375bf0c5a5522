//! Exact and floating-point polynomials, Gauss–Legendre quadrature, the
//! Legendre families and the polynomial inequality checks.

pub mod legendre;
pub mod lemma;
pub mod poly;
pub mod project;
pub mod quadrature;

pub use legendre::{legendre_eval, modified_legendre_eval};
pub use lemma::{
    lemma_check, lemma_check_unit, lemma_sweep, random_rational_poly, LemmaCheck, LemmaSweep, LemmaVariant,
};
pub use poly::{rat, ratio, FloatPoly, Poly, RatPoly};
pub use project::{project, weighted_norm2, Family, Weight};
pub use quadrature::{gauss_nodes, QuadratureRule};
