//! Exact rational matrices for the erasure channel.
//!
//! `A[i][j] = C(i,j) mu^j (1-mu)^(i-j)` is the probability that a source
//! string with `i` ones shows `j` revealed ones. Geometric vectors
//! `v^alpha = [1, alpha, ..., alpha^n]` satisfy `A v^alpha = v^(1+mu(alpha-1))`,
//! which gives the closed form of `B = A V` for a Vandermonde basis `V`.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{abs_max, format_fraction, Q};
use crate::types::check_mu;

/// Dense row-major matrix of exact rationals.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Q>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            entries: vec![Q::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(RationalMatrix {
            rows: r,
            cols: c,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Q {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Q) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Q] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Q> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[Q]) -> Result<Vec<Q>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, _)| !a.is_zero())
                    .fold(Q::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect())
    }

    pub fn mul(&self, other: &RationalMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let cur = &mut out.entries[i * other.cols + j];
                        *cur += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Columns reordered so that new column `k` is old column `perm[k]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, perm.len());
        for i in 0..self.rows {
            for (k, &j) in perm.iter().enumerate() {
                out.set(i, k, self.get(i, j).clone());
            }
        }
        out
    }
}

/// Debug dump: one row per line, `p/q` entries separated by spaces.
impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(format_fraction).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Coefficient vector of a linear estimator, indexed by observed ones-count.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EstimatorVector {
    pub coords: Vec<Q>,
}

impl EstimatorVector {
    pub fn new(coords: Vec<Q>) -> Self {
        EstimatorVector { coords }
    }

    /// `[1, alpha, alpha^2, ..., alpha^n]`, with `0^0 = 1`.
    pub fn geometric(alpha: &Q, n: usize) -> Self {
        let mut coords = Vec::with_capacity(n + 1);
        let mut cur = Q::one();
        for _ in 0..=n {
            coords.push(cur.clone());
            cur *= alpha;
        }
        EstimatorVector { coords }
    }

    pub fn unit(n: usize, k: usize) -> Self {
        let mut coords = vec![Q::zero(); n + 1];
        coords[k] = Q::one();
        EstimatorVector { coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// `max_i |v_i|`.
    pub fn sup_norm(&self) -> Q {
        abs_max(&self.coords)
    }

    /// `v` with a trailing zero coordinate, the embedding into length `n + 1`.
    pub fn padded(&self) -> Self {
        let mut coords = self.coords.clone();
        coords.push(Q::zero());
        EstimatorVector { coords }
    }
}

/// Row `n` of Pascal's triangle for every `0..=n`, in exact integers.
pub fn pascal(n: usize) -> Vec<Vec<BigInt>> {
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut row = vec![BigInt::one(); i + 1];
        for j in 1..i {
            row[j] = &rows[i - 1][j - 1] + &rows[i - 1][j];
        }
        rows.push(row);
    }
    rows
}

fn powers(x: &Q, n: usize) -> Vec<Q> {
    EstimatorVector::geometric(x, n).coords
}

/// The `(n+1) x (n+1)` channel count matrix. Lower-triangular and row-stochastic.
pub fn build_channel_matrix(n: usize, mu: &Q) -> Result<RationalMatrix> {
    check_mu(mu)?;
    let binom = pascal(n);
    let keep = powers(mu, n);
    let lose = powers(&(Q::one() - mu), n);
    let mut a = RationalMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=i {
            let c = Q::from_integer(binom[i][j].clone());
            a.set(i, j, c * &keep[j] * &lose[i - j]);
        }
    }
    Ok(a)
}

fn check_distinct(alphas: &[Q]) -> Result<()> {
    let mut seen = HashSet::new();
    for a in alphas {
        if !seen.insert(a) {
            return Err(Error::DuplicateNode(format_fraction(a)));
        }
    }
    Ok(())
}

/// `rows x alphas.len()` matrix whose column `j` is `[1, a_j, ..., a_j^(rows-1)]`.
pub fn vandermonde_rows(alphas: &[Q], rows: usize) -> Result<RationalMatrix> {
    check_distinct(alphas)?;
    let mut v = RationalMatrix::zeros(rows, alphas.len());
    for (j, a) in alphas.iter().enumerate() {
        for (i, p) in powers(a, rows.saturating_sub(1)).into_iter().take(rows).enumerate() {
            v.set(i, j, p);
        }
    }
    Ok(v)
}

/// Square Vandermonde basis `V[i][j] = alpha_j^i`.
pub fn build_vandermonde(alphas: &[Q]) -> Result<RationalMatrix> {
    vandermonde_rows(alphas, alphas.len())
}

/// `B[i][j] = (1 + mu(alpha_j - 1))^i` for `i in 0..=n`, i.e. `A V` in closed form.
pub fn build_transformed(n: usize, mu: &Q, alphas: &[Q]) -> Result<RationalMatrix> {
    check_mu(mu)?;
    let images: Vec<Q> = alphas.iter().map(|a| image_node(mu, a)).collect();
    check_distinct(alphas)?;
    let mut b = RationalMatrix::zeros(n + 1, alphas.len());
    for (j, x) in images.iter().enumerate() {
        for (i, p) in powers(x, n).into_iter().enumerate() {
            b.set(i, j, p);
        }
    }
    Ok(b)
}

/// `1 + mu(alpha - 1)`: where `A` sends the geometric vector of ratio `alpha`.
pub fn image_node(mu: &Q, alpha: &Q) -> Q {
    Q::one() + mu * (alpha - Q::one())
}

/// Default basis nodes `alpha_j = -1 + 2j/n`; `[0]` when `n = 0`.
pub fn canonical_nodes(n: usize) -> Vec<Q> {
    if n == 0 {
        return vec![Q::zero()];
    }
    (0..=n)
        .map(|j| Q::new(BigInt::from(2 * j as i64 - n as i64), BigInt::from(n as i64)))
        .collect()
}

/// Exact `M v`.
pub fn apply(m: &RationalMatrix, v: &EstimatorVector) -> Result<EstimatorVector> {
    Ok(EstimatorVector::new(m.mul_vec(&v.coords)?))
}
