//! Exact rational linear programming.
//!
//! Problems have the form `min c·x` subject to `G x ≥ h`, with `x_j ≥ 0`
//! for every variable not listed in `free_vars`. The solver runs a dense
//! two-phase primal simplex with Bland's rule on the equality-form dual
//!
//! ```text
//! max h·y   s.t.  (Gᵀy)_j = c_j (j free),  (Gᵀy)_j ≤ c_j (j ≥ 0),  y ≥ 0
//! ```
//!
//! which has one row per primal variable instead of one per constraint. The
//! primal optimum is read off the final simplex multipliers, so every optimal
//! answer comes with both a primal and a dual vector.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::matrices::RationalMatrix;
use crate::rational::Q;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearProgram {
    objective: Vec<Q>,
    constraints: RationalMatrix,
    rhs: Vec<Q>,
    free_vars: BTreeSet<usize>,
}

impl LinearProgram {
    pub fn new(
        objective: Vec<Q>,
        constraints: RationalMatrix,
        rhs: Vec<Q>,
        free_vars: BTreeSet<usize>,
    ) -> Result<Self> {
        if constraints.cols() != objective.len() {
            return Err(Error::MalformedLp(format!(
                "{} objective coefficients for {} columns",
                objective.len(),
                constraints.cols()
            )));
        }
        if constraints.rows() != rhs.len() {
            return Err(Error::MalformedLp(format!(
                "{} right-hand sides for {} rows",
                rhs.len(),
                constraints.rows()
            )));
        }
        if let Some(&j) = free_vars.iter().find(|&&j| j >= objective.len()) {
            return Err(Error::MalformedLp(format!("free variable {j} out of range")));
        }
        if let Some(i) = (0..constraints.rows()).find(|&i| constraints.row(i).iter().all(Q::is_zero)) {
            return Err(Error::MalformedLp(format!("constraint row {i} is identically zero")));
        }
        Ok(LinearProgram {
            objective,
            constraints,
            rhs,
            free_vars,
        })
    }

    pub fn objective(&self) -> &[Q] {
        &self.objective
    }

    pub fn constraints(&self) -> &RationalMatrix {
        &self.constraints
    }

    pub fn rhs(&self) -> &[Q] {
        &self.rhs
    }

    pub fn free_vars(&self) -> &BTreeSet<usize> {
        &self.free_vars
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_free(&self, j: usize) -> bool {
        self.free_vars.contains(&j)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver output. `primal`, `dual` and `objective_value` are meaningful only
/// when `status` is [`LpStatus::Optimal`]; otherwise the vectors are empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<Q>,
    pub dual: Vec<Q>,
    pub objective_value: Q,
    pub pivots: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, pivots: usize) -> Self {
        LpSolution {
            status,
            primal: Vec::new(),
            dual: Vec::new(),
            objective_value: Q::zero(),
            pivots,
        }
    }
}

/// `min cost·z  s.t.  rows z = rhs,  z ≥ 0` with `rhs ≥ 0`.
struct StandardForm {
    rows: Vec<Vec<Q>>,
    rhs: Vec<Q>,
    cost: Vec<Q>,
}

enum Outcome {
    Optimal {
        /// Simplex multipliers `c_Bᵀ B⁻¹`, one per row.
        multipliers: Vec<Q>,
        values: Vec<Q>,
        value: Q,
    },
    Infeasible,
    Unbounded,
}

/// Dense tableau with one artificial column per row, kept to the end so the
/// multipliers can be read from their reduced costs.
struct Tableau {
    structural: usize,
    /// `m` rows of `structural + m + 1` entries; the last entry is the rhs.
    t: Vec<Vec<Q>>,
    /// Reduced costs, with `-objective` in the last slot.
    obj: Vec<Q>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn new(sf: &StandardForm) -> Self {
        let m = sf.rows.len();
        let s = sf.cost.len();
        let width = s + m + 1;
        let mut t = Vec::with_capacity(m);
        for (i, row) in sf.rows.iter().enumerate() {
            let mut r = vec![Q::zero(); width];
            r[..s].clone_from_slice(row);
            r[s + i] = Q::from_integer(1.into());
            r[width - 1] = sf.rhs[i].clone();
            t.push(r);
        }
        // Phase one: minimise the sum of artificials.
        let mut obj = vec![Q::zero(); width];
        for r in &t {
            for j in 0..s {
                obj[j] -= &r[j];
            }
            obj[width - 1] -= &r[width - 1];
        }
        Tableau {
            structural: s,
            t,
            obj,
            basis: (s..s + m).collect(),
            pivots: 0,
        }
    }

    fn width(&self) -> usize {
        self.structural + self.t.len() + 1
    }

    fn pivot(&mut self, r: usize, k: usize) {
        let piv = self.t[r][k].clone();
        let nz: Vec<usize> = (0..self.width()).filter(|&j| !self.t[r][j].is_zero()).collect();
        for &j in &nz {
            self.t[r][j] /= &piv;
        }
        let prow = std::mem::take(&mut self.t[r]);
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r || row.is_empty() || row[k].is_zero() {
                continue;
            }
            let f = row[k].clone();
            for &j in &nz {
                row[j] -= &f * &prow[j];
            }
        }
        if !self.obj[k].is_zero() {
            let f = self.obj[k].clone();
            for &j in &nz {
                self.obj[j] -= &f * &prow[j];
            }
        }
        self.t[r] = prow;
        self.basis[r] = k;
        self.pivots += 1;
    }

    /// Bland's rule: lowest-index improving structural column, ties in the
    /// ratio test broken by lowest basic index. `Ok(true)` at optimality,
    /// `Err(())` when unbounded.
    fn step(&mut self) -> std::result::Result<bool, ()> {
        let rhs = self.width() - 1;
        let entering = (0..self.structural).find(|&j| self.obj[j].is_negative());
        let Some(k) = entering else {
            return Ok(true);
        };
        let mut best: Option<(usize, Q)> = None;
        for i in 0..self.t.len() {
            if !self.t[i][k].is_positive() {
                continue;
            }
            let ratio = &self.t[i][rhs] / &self.t[i][k];
            let better = match &best {
                None => true,
                Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
            };
            if better {
                best = Some((i, ratio));
            }
        }
        match best {
            None => Err(()),
            Some((r, _)) => {
                self.pivot(r, k);
                Ok(false)
            }
        }
    }

    fn run(&mut self) -> std::result::Result<(), ()> {
        while !self.step()? {}
        Ok(())
    }
}

fn simplex(sf: &StandardForm) -> (Outcome, usize) {
    let s = sf.cost.len();
    let m = sf.rows.len();
    let mut tab = Tableau::new(sf);
    let rhs = tab.width() - 1;

    if tab.run().is_err() {
        // Phase one is bounded below by zero.
        unreachable!("phase one cannot be unbounded");
    }
    if !tab.obj[rhs].is_zero() {
        return (Outcome::Infeasible, tab.pivots);
    }
    for i in 0..m {
        if tab.basis[i] >= s {
            if let Some(j) = (0..s).find(|&j| !tab.t[i][j].is_zero()) {
                tab.pivot(i, j);
            }
        }
    }

    // Phase two: reduced costs d = c - c_Bᵀ T over every column.
    let mut obj = vec![Q::zero(); tab.width()];
    obj[..s].clone_from_slice(&sf.cost);
    for (i, row) in tab.t.iter().enumerate() {
        let b = tab.basis[i];
        if b >= s || sf.cost[b].is_zero() {
            continue;
        }
        let cb = &sf.cost[b];
        for (j, x) in row.iter().enumerate() {
            if !x.is_zero() {
                obj[j] -= cb * x;
            }
        }
    }
    tab.obj = obj;
    if tab.run().is_err() {
        return (Outcome::Unbounded, tab.pivots);
    }

    let mut values = vec![Q::zero(); s];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < s {
            values[b] = tab.t[i][rhs].clone();
        }
    }
    let multipliers = (0..m).map(|i| -tab.obj[s + i].clone()).collect();
    let value = -tab.obj[rhs].clone();
    (
        Outcome::Optimal {
            multipliers,
            values,
            value,
        },
        tab.pivots,
    )
}

/// Equality-form dual of `lp` with cost vector `c` (normally `lp.objective`).
/// Returns the standard form and the row signs applied to keep `rhs ≥ 0`.
fn dual_standard_form(lp: &LinearProgram, c: &[Q]) -> (StandardForm, Vec<bool>) {
    let g = lp.constraints();
    let m = lp.num_constraints();
    let nv = lp.num_vars();
    let slack_of: Vec<Option<usize>> = {
        let mut next = m;
        (0..nv)
            .map(|j| {
                (!lp.is_free(j)).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    };
    let cols = m + slack_of.iter().flatten().count();
    let mut rows = Vec::with_capacity(nv);
    let mut rhs = Vec::with_capacity(nv);
    let mut flipped = Vec::with_capacity(nv);
    for j in 0..nv {
        let mut row = vec![Q::zero(); cols];
        for (r, slot) in row.iter_mut().enumerate().take(m) {
            *slot = g.get(r, j).clone();
        }
        if let Some(t) = slack_of[j] {
            row[t] = Q::from_integer(1.into());
        }
        let flip = c[j].is_negative();
        if flip {
            row.iter_mut().for_each(|x| *x = -x.clone());
        }
        rows.push(row);
        rhs.push(c[j].abs());
        flipped.push(flip);
    }
    let mut cost = vec![Q::zero(); cols];
    for (r, h) in lp.rhs().iter().enumerate() {
        cost[r] = -h.clone();
    }
    (StandardForm { rows, rhs, cost }, flipped)
}

/// Solves `lp` exactly. Never panics on infeasible or unbounded input.
pub fn solve(lp: &LinearProgram) -> LpSolution {
    let m = lp.num_constraints();
    let (sf, flipped) = dual_standard_form(lp, lp.objective());
    let (outcome, pivots) = simplex(&sf);
    match outcome {
        Outcome::Optimal {
            multipliers,
            values,
            value,
        } => {
            let primal = multipliers
                .into_iter()
                .zip(&flipped)
                .map(|(p, &f)| if f { p } else { -p })
                .collect();
            LpSolution {
                status: LpStatus::Optimal,
                primal,
                dual: values[..m].to_vec(),
                objective_value: -value,
                pivots,
            }
        }
        // Dual unbounded: the primal is infeasible.
        Outcome::Unbounded => LpSolution::without_point(LpStatus::Infeasible, pivots),
        // Dual infeasible: the primal is unbounded if it is feasible at all.
        // With zero costs the dual is feasible at y = 0 and bounded exactly
        // when the primal constraints can be met.
        Outcome::Infeasible => {
            let zeros = vec![Q::zero(); lp.num_vars()];
            let (sf0, _) = dual_standard_form(lp, &zeros);
            let (probe, extra) = simplex(&sf0);
            let status = match probe {
                Outcome::Optimal { .. } => LpStatus::Unbounded,
                _ => LpStatus::Infeasible,
            };
            LpSolution::without_point(status, pivots + extra)
        }
    }
}

/// Result of an independent re-check of an optimal solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertificateCheck {
    pub primal_feasible: bool,
    pub dual_feasible: bool,
    pub objectives_match: bool,
    pub violations: Vec<String>,
}

impl CertificateCheck {
    pub fn is_valid(&self) -> bool {
        self.primal_feasible && self.dual_feasible && self.objectives_match
    }
}

pub fn dual_objective(lp: &LinearProgram, y: &[Q]) -> Q {
    lp.rhs().iter().zip(y).fold(Q::zero(), |acc, (h, y)| acc + h * y)
}

pub fn primal_objective(lp: &LinearProgram, x: &[Q]) -> Q {
    lp.objective().iter().zip(x).fold(Q::zero(), |acc, (c, x)| acc + c * x)
}

/// Verifies primal feasibility, dual feasibility and `c·x = h·y = value`,
/// without reusing anything from the solver.
pub fn check_certificate(lp: &LinearProgram, sol: &LpSolution) -> CertificateCheck {
    let mut violations = Vec::new();
    let g = lp.constraints();
    let (nv, m) = (lp.num_vars(), lp.num_constraints());

    if sol.status != LpStatus::Optimal {
        violations.push(format!("status is {:?}", sol.status));
    }
    let shapes_ok = sol.primal.len() == nv && sol.dual.len() == m;
    if !shapes_ok {
        violations.push("solution vectors have the wrong length".into());
    }

    let mut primal_feasible = shapes_ok;
    let mut dual_feasible = shapes_ok;
    if shapes_ok {
        for i in 0..m {
            let lhs = g.row(i).iter().zip(&sol.primal).fold(Q::zero(), |a, (g, x)| a + g * x);
            if lhs < lp.rhs()[i] {
                primal_feasible = false;
                violations.push(format!("constraint {i} violated"));
            }
        }
        for j in 0..nv {
            if !lp.is_free(j) && sol.primal[j].is_negative() {
                primal_feasible = false;
                violations.push(format!("variable {j} negative"));
            }
        }
        for (r, y) in sol.dual.iter().enumerate() {
            if y.is_negative() {
                dual_feasible = false;
                violations.push(format!("dual {r} negative"));
            }
        }
        for j in 0..nv {
            let col = (0..m).fold(Q::zero(), |a, r| a + g.get(r, j) * &sol.dual[r]);
            let c = &lp.objective()[j];
            let ok = if lp.is_free(j) { col == *c } else { col <= *c };
            if !ok {
                dual_feasible = false;
                violations.push(format!("dual constraint for variable {j} violated"));
            }
        }
    }

    let objectives_match = shapes_ok
        && primal_objective(lp, &sol.primal) == sol.objective_value
        && dual_objective(lp, &sol.dual) == sol.objective_value;
    if shapes_ok && !objectives_match {
        violations.push("primal, dual and reported objective values differ".into());
    }

    CertificateCheck {
        primal_feasible,
        dual_feasible,
        objectives_match,
        violations,
    }
}
