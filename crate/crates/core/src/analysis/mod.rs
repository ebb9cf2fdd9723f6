//! Numerical lab for the bound chain behind the sensitivity estimate.
//!
//! Exact checks (the transformed LP, its dual polynomials, the bad
//! polynomial's interval values) run in rationals. Everything on complex
//! circles runs in `f64` with an explicit derivative-based grid slack.

mod circle;
mod dual;
mod poly;

pub use circle::{
    lemma4_check, lemma4_exponent, mobius, relaxation_gap_check, sup_on_circle, sup_on_circle_refined,
    three_circle_check, CircleSup, DiskSpec, Lemma4Report, Lemma4Status, RelaxationReport,
    ThreeCircleReport, translated_unit_sup, DEFAULT_GRID, GRID_TOLERANCE,
};
pub use dual::{dual_optimum, transformed_lp, DualPolynomials, DualReport};
pub use poly::{
    bad_polynomial, bad_polynomial_interval_sup, coeff_l1, translate_poly, translate_real, RationalPolynomial,
    RealPolynomial,
};
