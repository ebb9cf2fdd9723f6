use std::fs;

use poprec_cli::{replay, run_with, sidecar_path, RunManifest};

fn run(args: &[&str]) -> (i32, String, String) {
    let argv = std::iter::once("poprec").chain(args.iter().copied());
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn inverse_prints_certificate_and_manifest() {
    let (code, out, err) = run(&["inverse", "--n", "1", "--mu", "1/4", "--eps", "1/10"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("sigma 23/10"), "{out}");
    let m = RunManifest::from_json(&err).unwrap();
    assert_eq!(m.subcommand, "inverse");
    assert!(m.output.is_none());
    assert_eq!(m.output_sha256, poprec_cli::manifest::sha256_hex(out.as_bytes()));
}

#[test]
fn domain_errors_exit_one() {
    let (code, out, err) = run(&["inverse", "--n", "3", "--mu", "0", "--eps", "1/10"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("mu must be in (0,1]"), "{err}");

    let (code, _, err) = run(&["inverse", "--n", "3", "--mu", "1/2", "--eps", "1"]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["inverse", "--n", "3"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["inverse", "--n", "x", "--mu", "1/2", "--eps", "1/10"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn bench_grid_edges() {
    let (code, _, err) = run(&["bench", "--n", "5..3", "--mu", "1/2", "--eps", "1/10"]);
    assert_eq!(code, 1, "{err}");

    let (code, out, err) = run(&["bench", "--n", "2", "--mu", "1/2", "--eps", "1/10"]);
    assert_eq!(code, 0, "{err}");
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "n,mu,eps,sigma,theorem3_bound,margin,samples_required,lp_time");
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("2,1/2,1/10,"), "{}", rows[1]);
}

#[test]
fn out_writes_sidecar_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let dist = dir.path().join("d.txt");
    let d = dist.to_str().unwrap();
    let (code, out, err) = run(&["gen", "--strings", "0110,1001", "--out", d]);
    assert_eq!(code, 0, "{err}");
    assert!(out.is_empty() && err.is_empty());
    let side = sidecar_path(&dist);
    assert!(side.exists());
    assert!(fs::read_to_string(&dist).unwrap().contains("0110"));

    let samples = dir.path().join("s.txt");
    let s = samples.to_str().unwrap();
    let (code, _, err) = run(&["sample", "--dist", d, "--mu", "1/2", "--count", "1000", "--seed", "3", "--out", s]);
    assert_eq!(code, 0, "{err}");
    let m = RunManifest::read(&sidecar_path(&samples)).unwrap();
    assert_eq!(m.seed, Some(3));
    assert_eq!(m.inputs.len(), 1);

    let report = replay(&sidecar_path(&samples)).unwrap();
    assert!(report.starts_with("identical "));
    let (code, out, _) = run(&["replay", sidecar_path(&samples).to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out, report);

    // Editing an input invalidates the manifest.
    fs::write(&dist, "0110 1\n").unwrap();
    assert!(replay(&sidecar_path(&samples)).is_err());
}

#[test]
fn same_seed_same_samples() {
    let dir = tempfile::tempdir().unwrap();
    let dist = dir.path().join("d.txt");
    run(&["gen", "--n", "6", "--support", "4", "--seed", "1", "--out", dist.to_str().unwrap()]);
    let draw = |seed: &str| {
        let (code, out, err) =
            run(&["sample", "--dist", dist.to_str().unwrap(), "--mu", "0.3", "--count", "200", "--seed", seed]);
        assert_eq!(code, 0, "{err}");
        out
    };
    assert_eq!(draw("9"), draw("9"));
    assert_ne!(draw("9"), draw("10"));
}

#[test]
fn estimate_reads_sample_file() {
    let dir = tempfile::tempdir().unwrap();
    let dist = dir.path().join("d.txt");
    let samples = dir.path().join("s.txt");
    run(&["gen", "--strings", "000", "--out", dist.to_str().unwrap()]);
    run(&["sample", "--dist", dist.to_str().unwrap(), "--mu", "1", "--count", "5000", "--seed", "0", "--out",
        samples.to_str().unwrap()]);
    let (code, out, err) = run(&[
        "estimate", "--samples", samples.to_str().unwrap(), "--target", "000", "--mu", "1", "--eps", "0.5",
        "--delta", "0.5",
    ]);
    assert_eq!(code, 0, "{err}");
    // mu = 1 reveals everything; the estimate is the inverse coefficient v0 = 1 - eps/2.
    assert!(out.contains("estimate 3/4"), "{out}");

    let (code, _, err) = run(&[
        "estimate", "--samples", samples.to_str().unwrap(), "--target", "0000", "--mu", "1", "--eps", "0.5",
        "--delta", "0.5",
    ]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn analyze_bad_poly_reports_values() {
    let (code, out, err) = run(&["analyze", "bad-poly", "--n", "4", "--mu", "1/10"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("1296/361"), "{out}");
    assert_eq!(run(&["analyze", "bad-poly", "--n", "3", "--mu", "1/10"]).0, 1);
}
