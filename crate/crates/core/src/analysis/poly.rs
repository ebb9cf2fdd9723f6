use num_complex::Complex64;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::matrices::{build_channel_matrix, pascal};
use crate::rational::{qi, to_f64, Q};

/// `p(x) = Σ p_j x^j` with float coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPolynomial {
    pub coeffs: Vec<f64>,
}

impl RealPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        RealPolynomial { coeffs }
    }

    pub fn monomial(k: usize, scale: f64) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = scale;
        RealPolynomial { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// `Σ_j j |p_j| R^{j-1}`: bounds `|p'(z)|` on `|z| ≤ R`.
    pub fn derivative_bound(&self, radius: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| j as f64 * c.abs() * radius.powi(j as i32 - 1))
            .sum()
    }
}

/// Exact counterpart of [`RealPolynomial`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalPolynomial {
    pub coeffs: Vec<Q>,
}

impl RationalPolynomial {
    pub fn new(coeffs: Vec<Q>) -> Self {
        RationalPolynomial { coeffs }
    }

    pub fn eval(&self, x: &Q) -> Q {
        self.coeffs.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
    }

    pub fn to_real(&self) -> RealPolynomial {
        RealPolynomial::new(self.coeffs.iter().map(to_f64).collect())
    }

    /// Drops trailing zero coefficients (keeps at least one).
    pub fn trimmed(&self) -> Self {
        let keep = self.coeffs.iter().rposition(|c| !c.is_zero()).map_or(1, |i| i + 1);
        RationalPolynomial::new(self.coeffs[..keep.min(self.coeffs.len()).max(1)].to_vec())
    }
}

pub fn coeff_l1(p: &RationalPolynomial) -> Q {
    p.coeffs.iter().map(|c| c.abs()).fold(Q::zero(), |a, b| a + b)
}

/// `q(x) = p(1 + μ(x − 1))`. Coefficientwise this is `q = Aᵀ p`.
pub fn translate_poly(p: &RationalPolynomial, mu: &Q) -> Result<RationalPolynomial> {
    if p.coeffs.is_empty() {
        return Ok(p.clone());
    }
    let a = build_channel_matrix(p.coeffs.len() - 1, mu)?;
    Ok(RationalPolynomial::new(a.transpose().mul_vec(&p.coeffs)?))
}

/// Float version of [`translate_poly`] by binomial expansion of `(1−μ+μx)^j`.
pub fn translate_real(p: &RealPolynomial, mu: f64) -> RealPolynomial {
    let n = p.coeffs.len().saturating_sub(1);
    let binom = pascal(n);
    let mut out = vec![0.0; p.coeffs.len()];
    for (j, pj) in p.coeffs.iter().enumerate() {
        for (k, slot) in out.iter_mut().enumerate().take(j + 1) {
            let c = to_f64(&Q::from_integer(binom[j][k].clone()));
            *slot += pj * c * mu.powi(k as i32) * (1.0 - mu).powi((j - k) as i32);
        }
    }
    RealPolynomial::new(out)
}

/// `(1/C)(1 − x²)^{n/2}` with `C = (2μ − μ²)^{n/2}`.
pub fn bad_polynomial(n: usize, mu: &Q) -> Result<RationalPolynomial> {
    if n % 2 == 1 {
        return Err(Error::InvalidParameter(format!("degree {n} is odd")));
    }
    crate::types::check_mu(mu)?;
    let half = n / 2;
    let c = num_traits::pow(qi(2) * mu - mu * mu, half);
    let binom = pascal(half);
    let mut coeffs = vec![Q::zero(); n + 1];
    for (k, b) in binom[half].iter().enumerate() {
        let sign = if k % 2 == 0 { Q::one() } else { -Q::one() };
        coeffs[2 * k] = sign * Q::from_integer(b.clone()) / &c;
    }
    Ok(RationalPolynomial::new(coeffs))
}

/// Exact `max |p|` over `[lo, hi]` for a bad polynomial, with its argmax.
/// The only critical points of `(1 − x²)^{n/2}` are `−1, 0, 1`.
pub fn bad_polynomial_interval_sup(p: &RationalPolynomial, lo: &Q, hi: &Q) -> (Q, Q) {
    let mut points = vec![lo.clone(), hi.clone()];
    points.extend([-Q::one(), Q::zero(), Q::one()].into_iter().filter(|x| x > lo && x < hi));
    points
        .into_iter()
        .map(|x| (p.eval(&x).abs(), x))
        .fold(None::<(Q, Q)>, |best, (v, x)| match best {
            Some((bv, bx)) if bv >= v => Some((bv, bx)),
            _ => Some((v, x)),
        })
        .expect("interval has endpoints")
}
