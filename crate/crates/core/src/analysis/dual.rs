use num_traits::{One, Zero};

use super::poly::{coeff_l1, translate_poly, RationalPolynomial};
use crate::error::{Error, Result};
use crate::inverse::check_eps;
use crate::lp::{self, LinearProgram, LpStatus};
use crate::matrices::{build_transformed, vandermonde_rows, RationalMatrix};
use crate::rational::Q;

/// The local inverse program after the change of basis `v = V λ`, over
/// variables `(λ₀, …, λₙ, σ)`, all free:
///
/// ```text
/// min σ   s.t.   Bλ ≥ e₀ − ε𝟙,   −Bλ ≥ −e₀ − ε𝟙,   Vλ + σ𝟙 ≥ 0,   −Vλ + σ𝟙 ≥ 0,   σ ≥ 0
/// ```
///
/// with `B = A V`. The last row is redundant for the primal but gives the
/// dual its `Σ(q⁺ + q⁻) ≤ 1` form.
pub fn transformed_lp(n: usize, mu: &Q, eps: &Q, alphas: &[Q]) -> Result<LinearProgram> {
    check_eps(eps)?;
    if alphas.len() != n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} nodes for degree {n}",
            alphas.len()
        )));
    }
    let b = build_transformed(n, mu, alphas)?;
    let v = vandermonde_rows(alphas, n + 1)?;
    let k = n + 1;
    let mut g = RationalMatrix::zeros(4 * k + 1, k + 1);
    let mut h = Vec::with_capacity(4 * k + 1);
    let e = |i: usize| if i == 0 { Q::one() } else { Q::zero() };
    for i in 0..k {
        for j in 0..k {
            g.set(i, j, b.get(i, j).clone());
            g.set(k + i, j, -b.get(i, j).clone());
            g.set(2 * k + i, j, v.get(i, j).clone());
            g.set(3 * k + i, j, -v.get(i, j).clone());
        }
        g.set(2 * k + i, k, Q::one());
        g.set(3 * k + i, k, Q::one());
    }
    g.set(4 * k, k, Q::one());
    h.extend((0..k).map(|i| e(i) - eps));
    h.extend((0..k).map(|i| -e(i) - eps));
    h.extend(std::iter::repeat_n(Q::zero(), 2 * k + 1));
    let mut c = vec![Q::zero(); k + 1];
    c[k] = Q::one();
    LinearProgram::new(c, g, h, (0..=k).collect())
}

/// `p = p⁺ − p⁻` and `q = q⁺ − q⁻` read off the optimal dual.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualPolynomials {
    pub p: RationalPolynomial,
    pub q: RationalPolynomial,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualReport {
    pub primal_value: Q,
    pub dual_value: Q,
    pub lambda: Vec<Q>,
    /// `V λ`, the estimator in the standard basis.
    pub v: Vec<Q>,
    pub polynomials: DualPolynomials,
}

/// Solves the transformed program and verifies the dual polynomial picture:
/// `q(x) = p(1 + μ(x−1))` identically, `‖q‖₁ ≤ 1`, and
/// `σ = p(0) − ε‖p‖₁`.
pub fn dual_optimum(n: usize, mu: &Q, eps: &Q, alphas: &[Q]) -> Result<DualReport> {
    let program = transformed_lp(n, mu, eps, alphas)?;
    let sol = lp::solve(&program);
    if sol.status != LpStatus::Optimal {
        return Err(Error::Internal(format!("transformed program reported {:?}", sol.status)));
    }
    let check = lp::check_certificate(&program, &sol);
    if !check.is_valid() {
        return Err(Error::Internal(format!("certificate rejected: {:?}", check.violations)));
    }
    let k = n + 1;
    let y = &sol.dual;
    let p = RationalPolynomial::new((0..k).map(|i| &y[i] - &y[k + i]).collect());
    let q = RationalPolynomial::new((0..k).map(|i| &y[3 * k + i] - &y[2 * k + i]).collect());
    if translate_poly(&p, mu)? != q {
        return Err(Error::Internal("dual polynomials are not related by translation".into()));
    }
    if coeff_l1(&q) > Q::one() {
        return Err(Error::Internal("‖q‖₁ exceeds 1".into()));
    }
    let dual_value = lp::dual_objective(&program, y);
    if dual_value != &p.coeffs[0] - eps * coeff_l1(&p) {
        return Err(Error::Internal("dual value differs from p(0) − ε‖p‖₁".into()));
    }
    let lambda = sol.primal[..k].to_vec();
    let v = vandermonde_rows(alphas, k)?.mul_vec(&lambda)?;
    Ok(DualReport {
        primal_value: sol.objective_value,
        dual_value,
        lambda,
        v,
        polynomials: DualPolynomials { p, q },
    })
}
