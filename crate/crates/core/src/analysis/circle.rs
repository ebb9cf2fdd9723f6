use std::f64::consts::PI;

use num_complex::Complex64;

use super::poly::{translate_real, RealPolynomial};

pub const DEFAULT_GRID: usize = 4096;
/// Relative slack at which grid refinement stops, and the additive
/// tolerance (in log space) for the inequality checks.
pub const GRID_TOLERANCE: f64 = 1e-6;
const MAX_GRID: usize = 1 << 22;

/// Closed disk `D_ρ(β)`; its boundary is the circle `C_ρ(β)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskSpec {
    pub center: Complex64,
    pub radius: f64,
}

impl DiskSpec {
    pub fn new(center: Complex64, radius: f64) -> Self {
        assert!(radius > 0.0, "disk radius must be positive");
        DiskSpec { center, radius }
    }

    pub fn at(re: f64, im: f64, radius: f64) -> Self {
        DiskSpec::new(Complex64::new(re, im), radius)
    }

    pub fn centered(radius: f64) -> Self {
        DiskSpec::new(Complex64::new(0.0, 0.0), radius)
    }

    pub fn unit() -> Self {
        DiskSpec::centered(1.0)
    }

    /// `D_μ(1−μ)`, the image of `D₁` under `x ↦ 1 + μ(x − 1)`.
    pub fn image_of_unit(mu: f64) -> Self {
        DiskSpec::new(Complex64::new(1.0 - mu, 0.0), mu)
    }

    pub fn inside_unit_disk(&self) -> bool {
        self.center.norm() + self.radius <= 1.0 + 1e-12
    }

    pub fn point(&self, theta: f64) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, theta)
    }
}

/// Grid maximum of `|p|` on a circle plus a rigorous bound on what the grid
/// can miss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleSup {
    pub max: f64,
    pub argmax: Complex64,
    pub slack: f64,
    pub points: usize,
}

impl CircleSup {
    pub fn upper(&self) -> f64 {
        self.max + self.slack
    }
}

/// Max of `|p|` over `grid_points` equispaced points of the boundary of `disk`.
///
/// The true maximiser is within half a step `π/N` of a grid point. The slack
/// is the smaller of two bounds on the loss over that gap: the first-order
/// bound `ρ (π/N) Σ j|p_j| R^{j−1}` with `R = |β| + ρ`, and the second-order
/// bound from Bernstein's inequality for `|p|²` as a trigonometric polynomial
/// of degree `d`, `M ≤ max / √(1 − (dπ/N)²/2)`.
pub fn sup_on_circle(p: &RealPolynomial, disk: &DiskSpec, grid_points: usize) -> CircleSup {
    assert!(grid_points >= 64, "need at least 64 grid points");
    let step = 2.0 * PI / grid_points as f64;
    let (mut max, mut argmax) = (0.0f64, disk.point(0.0));
    for k in 0..grid_points {
        let z = disk.point(k as f64 * step);
        let v = p.eval(z).norm();
        if v > max {
            max = v;
            argmax = z;
        }
    }
    let half = step / 2.0;
    let first = disk.radius * half * p.derivative_bound(disk.center.norm() + disk.radius);
    let t = p.degree() as f64 * half;
    let second = if 2.0 * t * t < 1.0 {
        max * (1.0 / (1.0 - 2.0 * t * t).sqrt() - 1.0)
    } else {
        f64::INFINITY
    };
    CircleSup {
        max,
        argmax,
        slack: first.min(second),
        points: grid_points,
    }
}

/// [`sup_on_circle`] from `start` points, doubling until the slack drops
/// below `GRID_TOLERANCE` of the maximum.
pub fn sup_on_circle_refined(p: &RealPolynomial, disk: &DiskSpec, start: usize) -> CircleSup {
    let mut n = start.max(64);
    loop {
        let s = sup_on_circle(p, disk, n);
        if s.slack <= GRID_TOLERANCE * s.max || n >= MAX_GRID {
            return s;
        }
        n *= 2;
    }
}

/// `φ_β(x) = (β + x)/(1 + β̄x)`.
pub fn mobius(beta: Complex64, x: Complex64) -> Complex64 {
    (beta + x) / (1.0 + beta.conj() * x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThreeCircleReport {
    pub radii: [f64; 3],
    pub m_a: CircleSup,
    pub m_b: CircleSup,
    pub m_c: CircleSup,
    /// `ln(c/a) ln M_b` from the grid maximum on `C_b`.
    pub lhs: f64,
    /// `ln(c/b) ln M_a + ln(b/a) ln M_c` from upper bounds on `C_a`, `C_c`.
    pub rhs: f64,
    /// The same right-hand side from grid maxima only.
    pub rhs_grid: f64,
    pub holds: bool,
}

impl ThreeCircleReport {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Hadamard's three-circle inequality for `p` on `C_a, C_b, C_c`.
pub fn three_circle_check(p: &RealPolynomial, a: f64, b: f64, c: f64, grid: usize) -> ThreeCircleReport {
    assert!(0.0 < a && a <= b && b <= c, "need 0 < a ≤ b ≤ c");
    let sup = |r: f64| sup_on_circle_refined(p, &DiskSpec::centered(r), grid);
    let (m_a, m_b, m_c) = (sup(a), sup(b), sup(c));
    let lhs = (c / a).ln() * m_b.max.ln();
    let rhs = (c / b).ln() * m_a.upper().ln() + (b / a).ln() * m_c.upper().ln();
    let rhs_grid = (c / b).ln() * m_a.max.ln() + (b / a).ln() * m_c.max.ln();
    let zero = p.coeffs.iter().all(|x| *x == 0.0);
    ThreeCircleReport {
        radii: [a, b, c],
        m_a,
        m_b,
        m_c,
        lhs,
        rhs,
        rhs_grid,
        holds: zero || lhs <= rhs + GRID_TOLERANCE,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Lemma4Status {
    Holds,
    Violated,
    NotApplicable(String),
}

/// `d = (1 − |β|)/ln(2/ρ)`.
pub fn lemma4_exponent(beta_abs: f64, rho: f64) -> f64 {
    (1.0 - beta_abs) / (2.0 / rho).ln()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lemma4Report {
    pub status: Lemma4Status,
    pub p0: f64,
    pub d: f64,
    pub disk_sup: CircleSup,
    pub unit_sup: CircleSup,
    /// `ln ‖p‖_{C₁} − (1+d) ln |p(0)|`, from the grid maximum.
    pub margin: f64,
}

/// Checks `‖p‖_{C₁} ≥ |p(0)|^{1+d}` given `‖p‖_D ≤ 1` for `D ⊆ D₁`.
pub fn lemma4_check(p: &RealPolynomial, disk: &DiskSpec, grid: usize) -> Lemma4Report {
    let p0 = p.eval(Complex64::new(0.0, 0.0)).norm();
    let d = lemma4_exponent(disk.center.norm(), disk.radius);
    let disk_sup = sup_on_circle_refined(p, disk, grid);
    let unit_sup = sup_on_circle_refined(p, &DiskSpec::unit(), grid);
    let margin = unit_sup.max.ln() - (1.0 + d) * p0.ln();
    let status = if !disk.inside_unit_disk() {
        Lemma4Status::NotApplicable("disk is not inside the unit disk".into())
    } else if p0 <= 1.0 {
        Lemma4Status::NotApplicable(format!("|p(0)| = {p0} is at most 1"))
    } else if disk_sup.upper() > 1.0 + GRID_TOLERANCE {
        Lemma4Status::NotApplicable(format!("sup over the disk is {} > 1", disk_sup.max))
    } else if margin >= -GRID_TOLERANCE {
        Lemma4Status::Holds
    } else {
        Lemma4Status::Violated
    };
    Lemma4Report {
        status,
        p0,
        d,
        disk_sup,
        unit_sup,
        margin,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelaxationReport {
    pub status: Lemma4Status,
    /// `p(0) − ε ‖p‖_{D₁}` with the grid maximum, so never an underestimate.
    pub objective: f64,
    /// `(1/ε)^{1/d}` with `d = μ/ln(2/μ)`.
    pub bound: f64,
    pub constraint_sup: CircleSup,
    pub unit_sup: CircleSup,
}

impl RelaxationReport {
    pub fn margin(&self) -> f64 {
        self.bound - self.objective
    }
}

/// The `D₁`-sup relaxation objective against `(1/ε)^{1/d}`, for `p` with
/// `‖p‖_{D_μ(1−μ)} ≤ 1`.
pub fn relaxation_gap_check(p: &RealPolynomial, mu: f64, eps: f64, grid: usize) -> RelaxationReport {
    let constraint_sup = sup_on_circle_refined(p, &DiskSpec::image_of_unit(mu), grid);
    let unit_sup = sup_on_circle_refined(p, &DiskSpec::unit(), grid);
    let objective = p.eval_real(0.0) - eps * unit_sup.max;
    let d = lemma4_exponent(1.0 - mu, mu);
    let bound = (1.0 / eps).powf(1.0 / d);
    let status = if constraint_sup.upper() > 1.0 + GRID_TOLERANCE {
        Lemma4Status::NotApplicable(format!("sup over D_mu(1-mu) is {} > 1", constraint_sup.max))
    } else if objective <= bound * (1.0 + GRID_TOLERANCE) {
        Lemma4Status::Holds
    } else {
        Lemma4Status::Violated
    };
    RelaxationReport {
        status,
        objective,
        bound,
        constraint_sup,
        unit_sup,
    }
}

/// `‖q‖_{C₁}` for `q(x) = p(1 + μ(x−1))`, computed through the translated
/// coefficients rather than the image circle.
pub fn translated_unit_sup(p: &RealPolynomial, mu: f64, grid: usize) -> CircleSup {
    sup_on_circle_refined(&translate_real(p, mu), &DiskSpec::unit(), grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::poly::bad_polynomial;
    use crate::rational::q;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn monomial_sup_is_radius_power() {
        for (k, r) in [(0, 0.7), (3, 0.5), (7, 1.3)] {
            let s = sup_on_circle(&RealPolynomial::monomial(k, 1.0), &DiskSpec::centered(r), 64);
            assert!((s.max - r.powi(k as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn slack_bounds_a_finer_grid() {
        let p = RealPolynomial::new(vec![0.3, -1.0, 0.7, 0.2, -0.9, 0.5]);
        let disk = DiskSpec::new(Complex64::new(0.2, -0.1), 0.8);
        let coarse = sup_on_circle(&p, &disk, 64);
        let fine = sup_on_circle(&p, &disk, 1 << 16);
        assert!(coarse.max <= fine.max + 1e-12);
        assert!(fine.max <= coarse.upper());
        let refined = sup_on_circle_refined(&p, &disk, DEFAULT_GRID);
        assert!(refined.slack <= GRID_TOLERANCE * refined.max);
    }

    #[test]
    fn image_circle_matches_translated_polynomial() {
        let p = RealPolynomial::new(vec![1.0, -2.0, 0.5, 3.0, -0.25]);
        for mu in [0.1, 0.3, 0.5] {
            let direct = sup_on_circle_refined(&p, &DiskSpec::image_of_unit(mu), DEFAULT_GRID);
            let via_q = translated_unit_sup(&p, mu, DEFAULT_GRID);
            assert!((direct.max - via_q.max).abs() <= 1e-6 * direct.max);
        }
    }

    #[test]
    fn mobius_facts() {
        let beta = Complex64::new(0.6, -0.3);
        assert!(mobius(beta, -beta).norm() < 1e-15);
        let x = Complex64::new(0.1, 0.4);
        assert_eq!(mobius(Complex64::new(0.0, 0.0), x), x);
        let rho = 1.0 - beta.norm();
        let disk = DiskSpec::new(beta, rho);
        for k in 0..1000 {
            let w = Complex64::from_polar(1.0, k as f64 * 2.0 * PI / 1000.0);
            assert!((mobius(beta, w).norm() - 1.0).abs() < 1e-12);
            let inner = mobius(beta, w * (rho / 2.0));
            assert!((inner - disk.center).norm() <= disk.radius + 1e-12);
        }
    }

    #[test]
    fn three_circle_special_cases() {
        let r = three_circle_check(&RealPolynomial::monomial(5, 1.0), 0.3, 0.9, 1.7, DEFAULT_GRID);
        assert!(r.holds);
        assert!((r.lhs - r.rhs_grid).abs() < 1e-9);
        let r = three_circle_check(&RealPolynomial::new(vec![2.5]), 0.2, 0.5, 1.5, DEFAULT_GRID);
        assert!(r.holds && (r.lhs - r.rhs).abs() < 1e-12);
    }

    #[test]
    fn three_circle_random_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..40 {
            let deg = rng.random_range(0..=20);
            let p = RealPolynomial::new((0..=deg).map(|_| rng.random_range(-1.0..=1.0)).collect());
            let mut r: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..=2.0)).collect();
            r.sort_by(f64::total_cmp);
            let rep = three_circle_check(&p, r[0], r[1], r[2], DEFAULT_GRID);
            assert!(rep.holds, "{rep:?}");
        }
    }

    #[test]
    fn lemma4_not_applicable_cases() {
        let half = RealPolynomial::new(vec![0.5]);
        let r = lemma4_check(&half, &DiskSpec::image_of_unit(0.3), DEFAULT_GRID);
        assert!(matches!(r.status, Lemma4Status::NotApplicable(_)));
        let r = lemma4_check(&RealPolynomial::monomial(6, 40.0), &DiskSpec::unit(), DEFAULT_GRID);
        assert!(matches!(r.status, Lemma4Status::NotApplicable(_)));
    }

    #[test]
    fn lemma4_holds_for_a_normalised_polynomial() {
        // Large at the origin, at most 1 on D_0.3(0.7) after rescaling.
        let mu = 0.3;
        let base = RealPolynomial::new(vec![1.0, -1.0]);
        let mut p = RealPolynomial::new(vec![1.0]);
        for _ in 0..8 {
            let mut next = vec![0.0; p.coeffs.len() + 1];
            for (i, c) in p.coeffs.iter().enumerate() {
                next[i] += c * base.coeffs[0];
                next[i + 1] += c * base.coeffs[1];
            }
            p = RealPolynomial::new(next);
        }
        let disk = DiskSpec::image_of_unit(mu);
        let s = sup_on_circle_refined(&p, &disk, DEFAULT_GRID).upper();
        let p = RealPolynomial::new(p.coeffs.iter().map(|c| c / s).collect());
        let r = lemma4_check(&p, &disk, DEFAULT_GRID);
        assert_eq!(r.status, Lemma4Status::Holds, "{r:?}");
        let g = relaxation_gap_check(&p, mu, 0.1, DEFAULT_GRID);
        assert_eq!(g.status, Lemma4Status::Holds);
    }

    #[test]
    fn relaxation_constant_one() {
        let r = relaxation_gap_check(&RealPolynomial::new(vec![1.0]), 0.2, 0.1, DEFAULT_GRID);
        assert_eq!(r.status, Lemma4Status::Holds);
        assert!((r.objective - 0.9).abs() < 1e-12);
    }

    #[test]
    fn bad_polynomial_exceeds_one_on_the_image_disk() {
        let p = bad_polynomial(10, &q(3, 10)).unwrap().to_real();
        let r = lemma4_check(&p, &DiskSpec::image_of_unit(0.3), DEFAULT_GRID);
        assert!(matches!(r.status, Lemma4Status::NotApplicable(_)));
        assert!((r.unit_sup.max - 32.0 * r.p0).abs() < 1e-6 * r.unit_sup.max);
    }

    proptest! {
        #[test]
        fn unit_circle_sup_below_coefficient_l1(coeffs in prop::collection::vec(-1.0f64..1.0, 1..15)) {
            let p = RealPolynomial::new(coeffs);
            let s = sup_on_circle(&p, &DiskSpec::unit(), 256);
            prop_assert!(s.max <= p.l1() + 1e-12);
            let interval = (0..=200).map(|k| p.eval_real(-1.0 + k as f64 / 100.0).abs()).fold(0.0, f64::max);
            prop_assert!(interval <= s.upper() + 1e-12);
        }

        #[test]
        fn random_constrained_polynomials_meet_the_relaxation_bound(
            coeffs in prop::collection::vec(-1.0f64..1.0, 1..12),
            mu in 0.1f64..0.5,
            eps in 0.02f64..0.5,
        ) {
            let p = RealPolynomial::new(coeffs);
            let s = sup_on_circle_refined(&p, &DiskSpec::image_of_unit(mu), 256).upper();
            prop_assume!(s > 0.0);
            let p = RealPolynomial::new(p.coeffs.iter().map(|c| c / s).collect());
            let r = relaxation_gap_check(&p, mu, eps, 256);
            prop_assert_eq!(r.status, Lemma4Status::Holds);
        }
    }
}
