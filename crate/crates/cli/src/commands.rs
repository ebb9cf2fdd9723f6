use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use poprec_core::analysis::{
    bad_polynomial, bad_polynomial_interval_sup, coeff_l1, dual_optimum, lemma4_check, relaxation_gap_check,
    sup_on_circle_refined, three_circle_check, CircleSup, DiskSpec, Lemma4Status, RationalPolynomial,
    RealPolynomial,
};
use poprec_core::channel::{RecordedSamples, SampleOracle};
use poprec_core::estimate::compute_sample_count;
use poprec_core::inverse::{check_eps, check_sensitivity_bound, solve_local_inverse};
use poprec_core::io::{read_distribution, read_samples, write_distribution};
use poprec_core::matrices::canonical_nodes;
use poprec_core::rational::{format_both, format_decimal, format_fraction, parse_rational, to_f64};
use poprec_core::recover::{recover_population, recover_single, RecoveryConfig};
use poprec_core::types::{check_mu, check_open_unit};
use poprec_core::{BitString, LossySample, Params, SparseDistribution, Q};

use crate::{AnalyzeCommand, CliError, Outcome};

type Res<T> = Result<T, CliError>;

fn rational(flag: &str, v: &Option<String>) -> Res<Option<Q>> {
    v.as_deref()
        .map(|s| parse_rational(s).map_err(|_| CliError::Domain(format!("--{flag}: `{s}` is not a rational"))))
        .transpose()
}

fn required<T>(flag: &str, v: Option<T>) -> Res<T> {
    v.ok_or_else(|| CliError::Usage(format!("missing required argument --{flag}")))
}

fn mu_arg(v: &Option<String>) -> Res<Option<Q>> {
    let mu = rational("mu", v)?;
    if let Some(m) = &mu {
        check_mu(m)?;
    }
    Ok(mu)
}

fn open_unit_arg(flag: &str, v: &Option<String>) -> Res<Option<Q>> {
    let x = rational(flag, v)?;
    if let Some(x) = &x {
        check_open_unit(flag, x)?;
    }
    Ok(x)
}

#[derive(Default)]
struct Params_(BTreeMap<String, String>);

impl Params_ {
    fn q(&mut self, k: &str, v: &Q) -> &mut Self {
        self.0.insert(k.into(), format_fraction(v));
        self
    }

    fn s(&mut self, k: &str, v: impl ToString) -> &mut Self {
        self.0.insert(k.into(), v.to_string());
        self
    }
}

fn outcome(output: String, params: Params_, seed: Option<u64>, inputs: Vec<PathBuf>) -> Res<Outcome> {
    Ok(Outcome {
        output: output.into_bytes(),
        params: params.0,
        seed,
        inputs,
    })
}

pub fn gen(a: &crate::GenArgs) -> Res<Outcome> {
    let mut p = Params_::default();
    let dist = if !a.strings.is_empty() {
        if a.support.is_some() || a.n.is_some() {
            return Err(CliError::Usage("--strings cannot be combined with --n/--support".into()));
        }
        let refs: Vec<&str> = a.strings.iter().map(String::as_str).collect();
        p.s("strings", a.strings.join(","));
        SparseDistribution::uniform(&refs)?
    } else {
        if a.n == Some(0) {
            return Err(CliError::Domain("n must be at least 1".into()));
        }
        if a.support == Some(0) {
            return Err(CliError::Domain("support must be at least 1".into()));
        }
        if let (Some(n), Some(k)) = (a.n, a.support) {
            if n < 64 && k as u128 > 1u128 << n {
                return Err(CliError::Domain(format!("cannot pick {k} distinct strings of length {n}")));
            }
        }
        let n = required("n", a.n)?;
        let k = required("support", a.support)?;
        let seed = required("seed", a.seed)?;
        p.s("n", n).s("support", k).s("uniform", a.uniform).s("seed", seed);
        random_distribution(n, k, a.uniform, seed)?
    };
    let mut buf = Vec::new();
    write_distribution(&mut buf, &dist)?;
    Ok(Outcome {
        output: buf,
        params: p.0,
        seed: a.seed,
        inputs: Vec::new(),
    })
}

fn random_distribution(n: usize, k: usize, uniform: bool, seed: u64) -> Res<SparseDistribution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut strings = BTreeSet::new();
    while strings.len() < k {
        let bits: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        strings.insert(BitString::from_bits(&bits));
    }
    let weights: Vec<u64> = (0..k).map(|_| if uniform { 1 } else { rng.random_range(1..=20) }).collect();
    let total: u64 = weights.iter().sum();
    let support = strings
        .into_iter()
        .zip(weights)
        .map(|(s, w)| (s, Q::new(w.into(), total.into())))
        .collect();
    Ok(SparseDistribution::new(n, support)?)
}

pub fn sample(a: &crate::SampleArgs) -> Res<Outcome> {
    let mu = mu_arg(&a.mu)?;
    let path = required("dist", a.dist.clone())?;
    let mu = required("mu", mu)?;
    let count = required("count", a.count)?;
    let seed = required("seed", a.seed)?;
    let dist = read_distribution(&path)?;
    let mut oracle = SampleOracle::new(dist.clone(), mu.clone(), seed)?;
    let mut out = String::with_capacity(count as usize * (dist.n() + 1));
    let mut s = LossySample::all_erased(dist.n());
    for _ in 0..count {
        oracle.draw_into(&mut s);
        writeln!(out, "{s}").unwrap();
    }
    let mut p = Params_::default();
    p.s("dist", path.display()).q("mu", &mu).s("count", count).s("seed", seed);
    outcome(out, p, Some(seed), vec![path])
}

pub fn estimate(a: &crate::EstimateArgs) -> Res<Outcome> {
    let mu = mu_arg(&a.mu)?;
    let eps = open_unit_arg("eps", &a.eps)?;
    let delta = open_unit_arg("delta", &a.delta)?;
    let target: Option<BitString> = a.target.as_deref().map(str::parse).transpose()?;
    let path = required("samples", a.samples.clone())?;
    let target = required("target", target)?;
    let (mu, eps, delta) = (required("mu", mu)?, required("eps", eps)?, required("delta", delta)?);
    let (n, samples) = read_samples(&path)?;
    if target.len() != n {
        return Err(CliError::Domain(format!(
            "target has length {} but samples have length {n}",
            target.len()
        )));
    }
    let available = samples.len();
    let cfg = RecoveryConfig::new(Params::new(n, mu.clone(), eps.clone(), delta.clone(), 0)?);
    let est = recover_single(&mut RecordedSamples::new(n, samples)?, &target, &cfg)?;
    let mut out = String::new();
    writeln!(out, "target {target}").unwrap();
    writeln!(out, "estimate {}", format_both(&est.value)).unwrap();
    writeln!(out, "samples_used {}", est.samples_used).unwrap();
    writeln!(out, "samples_available {available}").unwrap();
    let mut p = Params_::default();
    p.s("samples", path.display()).s("target", &target).q("mu", &mu).q("eps", &eps).q("delta", &delta);
    outcome(out, p, None, vec![path])
}

pub fn inverse(a: &crate::InverseArgs) -> Res<Outcome> {
    let mu = mu_arg(&a.mu)?;
    let eps = rational("eps", &a.eps)?;
    if let Some(e) = &eps {
        check_eps(e)?;
    }
    let n = required("n", a.n)?;
    let mu = required("mu", mu)?;
    let eps = required("eps", eps)?;
    let cert = solve_local_inverse(n, &mu, &eps)?;
    let bound = check_sensitivity_bound(&cert);
    let mut out = String::new();
    writeln!(out, "n {n}").unwrap();
    writeln!(out, "mu {}", format_both(&mu)).unwrap();
    writeln!(out, "eps {}", format_both(&eps)).unwrap();
    writeln!(out, "status optimal").unwrap();
    writeln!(out, "sigma {}", format_both(&cert.sigma)).unwrap();
    writeln!(out, "residual {}", format_both(&cert.residual)).unwrap();
    writeln!(out, "dual_value {}", format_both(&cert.dual_value)).unwrap();
    writeln!(
        out,
        "sensitivity_bound {} ln_sigma={:.6} ln_bound={:.6} margin_nats={:.6}",
        if bound.holds { "holds" } else { "violated" },
        bound.log_sigma,
        bound.log_bound,
        bound.margin
    )
    .unwrap();
    for (i, v) in cert.v.coords.iter().enumerate() {
        writeln!(out, "v{i} {}", format_both(v)).unwrap();
    }
    let mut p = Params_::default();
    p.s("n", n).q("mu", &mu).q("eps", &eps);
    outcome(out, p, None, Vec::new())
}

pub fn recover(a: &crate::RecoverArgs) -> Res<Outcome> {
    let mu = mu_arg(&a.mu)?;
    let eps = open_unit_arg("eps", &a.eps)?;
    let delta = open_unit_arg("delta", &a.delta)?;
    let (mu, eps, delta) = (required("mu", mu)?, required("eps", eps)?, required("delta", delta)?);
    let mut p = Params_::default();
    p.q("mu", &mu).q("eps", &eps).q("delta", &delta).s("reuse_samples", a.reuse_samples);
    let check_n = |n: usize| match a.n {
        Some(m) if m != n => Err(CliError::Domain(format!("--n {m} but the input has length {n}"))),
        _ => Ok(()),
    };
    let (result, cfg, input, seed) = match (&a.dist, &a.samples) {
        (Some(path), None) => {
            let seed = required("seed", a.seed)?;
            let dist = read_distribution(path)?;
            check_n(dist.n())?;
            let mut cfg = RecoveryConfig::new(Params::new(dist.n(), mu.clone(), eps, delta, seed)?);
            cfg.fresh_samples_per_stage = !a.reuse_samples;
            let mut oracle = SampleOracle::new(dist, mu, seed)?;
            p.s("dist", path.display()).s("seed", seed);
            (recover_population(&mut oracle, &cfg)?, cfg, path.clone(), Some(seed))
        }
        (None, Some(path)) => {
            let (n, samples) = read_samples(path)?;
            check_n(n)?;
            let mut cfg = RecoveryConfig::new(Params::new(n, mu, eps, delta, a.seed.unwrap_or(0))?);
            cfg.fresh_samples_per_stage = !a.reuse_samples;
            p.s("samples", path.display());
            (recover_population(&mut RecordedSamples::new(n, samples)?, &cfg)?, cfg, path.clone(), None)
        }
        _ => return Err(CliError::Usage("exactly one of --dist or --samples is required".into())),
    };
    p.s("n", cfg.params.n)
        .q("stage_accuracy", &cfg.stage_accuracy)
        .q("prune_threshold", &cfg.prune_threshold);
    let mut out = String::new();
    for (s, v) in &result.entries {
        writeln!(out, "{s} {}", format_both(v)).unwrap();
    }
    writeln!(out, "# entries {}", result.entries.len()).unwrap();
    writeln!(out, "# samples_consumed {}", result.samples_consumed).unwrap();
    for st in &result.stages {
        writeln!(
            out,
            "# stage {} candidates {} survivors {} samples {} sigma {}",
            st.length,
            st.candidates,
            st.survivors,
            st.samples,
            format_decimal(&st.sigma, 6)
        )
        .unwrap();
    }
    outcome(out, p, seed, vec![input])
}

pub fn analyze(cmd: &AnalyzeCommand) -> Res<Outcome> {
    match cmd {
        AnalyzeCommand::Dual(a) => dual(a),
        AnalyzeCommand::ThreeCircle(a) => three_circle(a),
        AnalyzeCommand::Lemma4(a) => lemma4(a),
        AnalyzeCommand::Relaxation(a) => relaxation(a),
        AnalyzeCommand::BadPoly(a) => bad_poly(a),
    }
}

fn poly_line(name: &str, p: &RationalPolynomial) -> String {
    let coeffs: Vec<String> = p.coeffs.iter().map(format_fraction).collect();
    format!("{name} {}", coeffs.join(" "))
}

fn dual(a: &crate::DualArgs) -> Res<Outcome> {
    let mu = mu_arg(&a.mu)?;
    let eps = rational("eps", &a.eps)?;
    if let Some(e) = &eps {
        check_eps(e)?;
    }
    let alphas = a
        .alphas
        .iter()
        .map(|s| parse_rational(s).map_err(|_| CliError::Domain(format!("--alphas: `{s}` is not a rational"))))
        .collect::<Res<Vec<Q>>>()?;
    let n = required("n", a.n)?;
    let mu = required("mu", mu)?;
    let eps = required("eps", eps)?;
    let alphas = if alphas.is_empty() { canonical_nodes(n) } else { alphas };
    let r = dual_optimum(n, &mu, &eps, &alphas)?;
    let (pp, qq) = (&r.polynomials.p, &r.polynomials.q);
    let mut out = String::new();
    writeln!(out, "primal_value {}", format_both(&r.primal_value)).unwrap();
    writeln!(out, "dual_value {}", format_both(&r.dual_value)).unwrap();
    writeln!(out, "{}", poly_line("p", pp)).unwrap();
    writeln!(out, "{}", poly_line("q", qq)).unwrap();
    writeln!(out, "p_l1 {}", format_both(&coeff_l1(pp))).unwrap();
    writeln!(out, "q_l1 {}", format_both(&coeff_l1(qq))).unwrap();
    writeln!(out, "objective p(0)-eps*|p|_1 {}", format_both(&(&pp.coeffs[0] - &eps * coeff_l1(pp)))).unwrap();
    writeln!(out, "translation_identity holds").unwrap();
    let mut p = Params_::default();
    let nodes: Vec<String> = alphas.iter().map(format_fraction).collect();
    p.s("n", n).q("mu", &mu).q("eps", &eps).s("alphas", nodes.join(","));
    outcome(out, p, None, Vec::new())
}

fn polynomial(a: &crate::PolyArgs, mu: &Option<Q>, p: &mut Params_) -> Res<RealPolynomial> {
    if a.grid < 64 {
        return Err(CliError::Domain("--grid must be at least 64".into()));
    }
    p.s("grid", a.grid);
    match (a.coeffs.is_empty(), a.bad) {
        (false, None) => {
            let c = a
                .coeffs
                .iter()
                .map(|s| parse_rational(s).map_err(|_| CliError::Domain(format!("--coeffs: `{s}` is not a rational"))))
                .collect::<Res<Vec<Q>>>()?;
            p.s("coeffs", a.coeffs.join(","));
            Ok(RationalPolynomial::new(c).to_real())
        }
        (true, Some(n)) => {
            let mu = required("mu", mu.clone())?;
            p.s("bad", n);
            Ok(bad_polynomial(n, &mu)?.to_real())
        }
        _ => Err(CliError::Usage("give exactly one of --coeffs or --bad".into())),
    }
}

fn sup_line(name: &str, s: &CircleSup) -> String {
    format!(
        "{name} max={:.12e} slack={:.3e} argmax=({:.9},{:.9}) points={}",
        s.max, s.slack, s.argmax.re, s.argmax.im, s.points
    )
}

fn status_line(s: &Lemma4Status) -> String {
    match s {
        Lemma4Status::Holds => "result pass".into(),
        Lemma4Status::Violated => "result fail".into(),
        Lemma4Status::NotApplicable(why) => format!("result not-applicable ({why})"),
    }
}

fn three_circle(a: &crate::ThreeCircleArgs) -> Res<Outcome> {
    let mu = mu_arg(&a.mu)?;
    if let (Some(x), Some(y), Some(z)) = (a.a, a.b, a.c) {
        if !(0.0 < x && x <= y && y <= z) {
            return Err(CliError::Domain("need 0 < a <= b <= c".into()));
        }
    }
    let mut p = Params_::default();
    let poly = polynomial(&a.poly, &mu, &mut p)?;
    let (x, y, z) = (required("a", a.a)?, required("b", a.b)?, required("c", a.c)?);
    p.s("a", x).s("b", y).s("c", z);
    if let Some(m) = &mu {
        p.q("mu", m);
    }
    let r = three_circle_check(&poly, x, y, z, a.poly.grid);
    let mut out = String::new();
    writeln!(out, "{}", sup_line("M_a", &r.m_a)).unwrap();
    writeln!(out, "{}", sup_line("M_b", &r.m_b)).unwrap();
    writeln!(out, "{}", sup_line("M_c", &r.m_c)).unwrap();
    writeln!(out, "lhs {:.12e}", r.lhs).unwrap();
    writeln!(out, "rhs {:.12e}", r.rhs).unwrap();
    writeln!(out, "margin {:.6e}", r.margin()).unwrap();
    writeln!(out, "result {}", if r.holds { "pass" } else { "fail" }).unwrap();
    outcome(out, p, None, Vec::new())
}

fn lemma4(a: &crate::Lemma4Args) -> Res<Outcome> {
    let mu = mu_arg(&a.mu)?;
    if a.center.len() > 2 {
        return Err(CliError::Domain("--center takes re or re,im".into()));
    }
    if let Some(r) = a.radius {
        if r <= 0.0 {
            return Err(CliError::Domain("--radius must be positive".into()));
        }
    }
    let mut p = Params_::default();
    let poly = polynomial(&a.poly, &mu, &mut p)?;
    let disk = match (&a.center[..], a.radius, &mu) {
        ([re], Some(r), _) => DiskSpec::at(*re, 0.0, r),
        ([re, im], Some(r), _) => DiskSpec::at(*re, *im, r),
        ([], None, Some(m)) => DiskSpec::image_of_unit(to_f64(m)),
        _ => return Err(CliError::Usage("give --center and --radius, or --mu for D_mu(1-mu)".into())),
    };
    p.s("center", format!("{},{}", disk.center.re, disk.center.im)).s("radius", disk.radius);
    if let Some(m) = &mu {
        p.q("mu", m);
    }
    let r = lemma4_check(&poly, &disk, a.poly.grid);
    let mut out = String::new();
    writeln!(out, "p0_abs {:.12e}", r.p0).unwrap();
    writeln!(out, "d {:.12}", r.d).unwrap();
    writeln!(out, "{}", sup_line("disk_sup", &r.disk_sup)).unwrap();
    writeln!(out, "{}", sup_line("unit_sup", &r.unit_sup)).unwrap();
    writeln!(out, "margin_nats {:.6e}", r.margin).unwrap();
    writeln!(out, "{}", status_line(&r.status)).unwrap();
    outcome(out, p, None, Vec::new())
}

fn relaxation(a: &crate::RelaxationArgs) -> Res<Outcome> {
    let mu = mu_arg(&a.mu)?;
    let eps = open_unit_arg("eps", &a.eps)?;
    let mut p = Params_::default();
    let poly = polynomial(&a.poly, &mu, &mut p)?;
    let mu = required("mu", mu)?;
    let eps = required("eps", eps)?;
    p.q("mu", &mu).q("eps", &eps);
    let r = relaxation_gap_check(&poly, to_f64(&mu), to_f64(&eps), a.poly.grid);
    let mut out = String::new();
    writeln!(out, "objective {:.12e}", r.objective).unwrap();
    writeln!(out, "bound {:.12e}", r.bound).unwrap();
    writeln!(out, "margin {:.6e}", r.margin()).unwrap();
    writeln!(out, "{}", sup_line("constraint_sup", &r.constraint_sup)).unwrap();
    writeln!(out, "{}", sup_line("unit_sup", &r.unit_sup)).unwrap();
    writeln!(out, "{}", status_line(&r.status)).unwrap();
    outcome(out, p, None, Vec::new())
}

fn bad_poly(a: &crate::BadPolyArgs) -> Res<Outcome> {
    let mu = mu_arg(&a.mu)?;
    if a.grid < 64 {
        return Err(CliError::Domain("--grid must be at least 64".into()));
    }
    let n = required("n", a.n)?;
    let mu = required("mu", mu)?;
    let poly = bad_polynomial(n, &mu)?;
    let c = Q::one() / poly.eval(&Q::zero());
    let lo = Q::one() - (&mu + &mu);
    let (sup, at) = bad_polynomial_interval_sup(&poly, &lo, &Q::one());
    let real = poly.to_real();
    let unit = sup_on_circle_refined(&real, &DiskSpec::unit(), a.grid);
    let mu_f = to_f64(&mu);
    let lemma = lemma4_check(&real, &DiskSpec::image_of_unit(mu_f), a.grid);
    let mut out = String::new();
    writeln!(out, "C {}", format_both(&c)).unwrap();
    writeln!(out, "p(0) {}", format_both(&poly.eval(&Q::zero()))).unwrap();
    writeln!(out, "interval [{}, 1]", format_fraction(&lo)).unwrap();
    writeln!(out, "interval_sup {} at {}", format_both(&sup), format_fraction(&at)).unwrap();
    writeln!(out, "interval_sup_is_one {}", sup == Q::one()).unwrap();
    writeln!(out, "{}", sup_line("unit_sup", &unit)).unwrap();
    writeln!(out, "{}", sup_line("disk_sup", &lemma.disk_sup)).unwrap();
    writeln!(out, "lemma4 {}", status_line(&lemma.status)).unwrap();
    let mut p = Params_::default();
    p.s("n", n).q("mu", &mu).s("grid", a.grid);
    outcome(out, p, None, Vec::new())
}

fn parse_lengths(spec: &str) -> Res<Vec<usize>> {
    let bad = || CliError::Domain(format!("--n: cannot parse `{spec}`"));
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        return Ok((lo..=hi).collect());
    }
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

pub const BENCH_HEADER: &str = "n,mu,eps,sigma,theorem3_bound,margin,samples_required,lp_time";

pub fn bench(a: &crate::BenchArgs) -> Res<Outcome> {
    let mus = a
        .mu
        .iter()
        .map(|s| mu_arg(&Some(s.clone())).map(Option::unwrap))
        .collect::<Res<Vec<Q>>>()?;
    let epss = a
        .eps
        .iter()
        .map(|s| open_unit_arg("eps", &Some(s.clone())).map(Option::unwrap))
        .collect::<Res<Vec<Q>>>()?;
    let delta = open_unit_arg("delta", &Some(a.delta.clone()))?.unwrap();
    let lengths = parse_lengths(&required("n", a.n.clone())?)?;
    let cells: Vec<(usize, Q, Q)> = lengths
        .iter()
        .flat_map(|&n| {
            mus.iter()
                .flat_map(|m| epss.iter().map(move |e| (n, m.clone(), e.clone())))
                .collect::<Vec<_>>()
        })
        .collect();
    if cells.is_empty() {
        return Err(CliError::Domain("empty grid".into()));
    }
    let rows = cells
        .par_iter()
        .map(|(n, mu, eps)| {
            let start = Instant::now();
            let cert = solve_local_inverse(*n, mu, eps)?;
            let elapsed = start.elapsed().as_secs_f64();
            let bound = check_sensitivity_bound(&cert);
            let m = compute_sample_count(*n, &cert.sigma, eps, &delta)?;
            let time = if a.timing { format!("{elapsed:.6}") } else { "NA".into() };
            Ok(format!(
                "{n},{},{},{},{:.6e},{:.6},{m},{time}",
                format_fraction(mu),
                format_fraction(eps),
                format_decimal(&cert.sigma, 12),
                bound.log_bound.exp(),
                bound.margin
            ))
        })
        .collect::<Result<Vec<String>, poprec_core::Error>>()?;
    let mut out = format!("# schema=1\n{BENCH_HEADER}\n");
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    let mut p = Params_::default();
    let fmt = |xs: &[Q]| xs.iter().map(format_fraction).collect::<Vec<_>>().join(",");
    p.s("n", a.n.as_deref().unwrap_or(""))
        .s("mu", fmt(&mus))
        .s("eps", fmt(&epss))
        .q("delta", &delta)
        .s("timing", a.timing);
    outcome(out, p, None, Vec::new())
}
