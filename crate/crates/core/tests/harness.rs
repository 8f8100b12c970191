use std::fs;
use std::path::Path;
use std::process::Command;

use tabayes::harness::config::{Experiment, ExperimentConfig};
use tabayes::harness::data::MarModel;
use tabayes::harness::experiment::{run_experiment, run_posterior};
use tabayes::harness::{gen_mar, gen_meanvar, hpd_1d, Dataset};
use tabayes::posterior::Method;
use tabayes::prob::sample_normal;
use tabayes::rng::RngHandle;

fn small(experiment: Experiment, methods: &[Method]) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(experiment);
    c.methods = methods.to_vec();
    c.n = 30;
    c.replicates = 4;
    c.chain.length = 3_000;
    c.chain.burn_in = 300;
    c.prior_q_draws = 5_000;
    c
}

fn scratch(name: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("tabayes-harness-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    d
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn same_seed_gives_byte_identical_outputs() {
    let mut c = small(Experiment::Meanvar, &Method::ALL);
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    c.out = Some(a.clone());
    run_experiment(&c).unwrap();
    c.out = Some(b.clone());
    run_experiment(&c).unwrap();
    let (fa, fb) = (read_all(&a), read_all(&b));
    assert_eq!(fa.len(), 3);
    // config.txt records the output path; everything else must match exactly.
    for ((na, da), (nb, db)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        if na != "config.txt" {
            assert!(da == db, "{na} differs");
        }
    }
    c.seed = 2;
    c.out = None;
    let other = run_experiment(&c).unwrap();
    c.seed = 1;
    let again = run_experiment(&c).unwrap();
    assert_ne!(other.rows, again.rows);
}

#[test]
fn methods_do_not_share_random_streams() {
    // Dropping a method leaves the others' results untouched.
    let all = run_experiment(&small(Experiment::Meanvar, &[Method::Tab, Method::Bb, Method::Gb])).unwrap();
    let some = run_experiment(&small(Experiment::Meanvar, &[Method::Bb])).unwrap();
    assert_eq!(all.row(Method::Bb, "meanvar-joint"), some.row(Method::Bb, "meanvar-joint"));
}

#[test]
fn single_replicate_bootstrap_row() {
    let mut c = small(Experiment::Meanvar, &[Method::Bb]);
    c.replicates = 1;
    let out = run_experiment(&c).unwrap();
    assert_eq!(out.rows.len(), 3);
    for r in &out.rows {
        assert_eq!(r.replicates, 1);
        assert!(r.cp == 0.0 || r.cp == 1.0);
    }
}

#[test]
fn metrics_rows_are_consistent() {
    let out = run_experiment(&small(Experiment::Mar(MarModel::new(1).unwrap()), &[Method::Tab, Method::Bb])).unwrap();
    for r in &out.rows {
        assert!((0.0..=1.0).contains(&r.cp));
        assert!(r.size >= 0.0 && r.risk >= 0.0);
        assert!(r.risk >= r.abs_bias * r.abs_bias - 3.0 * r.risk_se, "{r:?}");
    }
}

#[test]
fn generators_match_their_moments() {
    let x = gen_meanvar(1_000_000, &mut RngHandle::new(1));
    let m = x.iter().sum::<f64>() / x.len() as f64;
    assert!((m - 3.5).abs() < 0.01, "{m}");
    for model in MarModel::ALL {
        let d = gen_mar(model, 200_000, &mut RngHandle::new(2));
        let obs = d.iter().filter(|p| p.c).count() as f64 / d.len() as f64;
        assert!((obs - 0.5).abs() < 0.01, "{model}: {obs}");
        assert!(d.iter().all(|p| p.c || p.cy == 0.0));
    }
}

#[test]
fn hpd_1d_contains_the_mode_bin() {
    for seed in 0..20 {
        let mut rng = RngHandle::new(seed);
        let x: Vec<f64> = (0..2000)
            .map(|_| {
                let z = sample_normal(0.0, 1.0, &mut rng).unwrap();
                z * z
            })
            .collect();
        let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        let width = (hi - lo) / 50.0;
        let mut counts = [0usize; 50];
        for v in &x {
            counts[(((v - lo) / width) as usize).min(49)] += 1;
        }
        let k = (0..50).max_by_key(|&i| counts[i]).unwrap();
        let center = lo + (k as f64 + 0.5) * width;
        let region = hpd_1d(&x, 0.95).unwrap();
        match region {
            tabayes::harness::HpdRegion::Interval { lo, hi, .. } => assert!(lo <= center && center <= hi),
            _ => unreachable!(),
        }
    }
}

#[test]
fn posterior_for_one_dataset_is_deterministic() {
    let mut c = small(Experiment::Meanvar, &[Method::Tab]);
    c.seed = 9;
    let data = Dataset::Scalar(gen_meanvar(25, &mut RngHandle::new(3)));
    let a = run_posterior(&c, Method::Tab, &data).unwrap();
    let b = run_posterior(&c, Method::Tab, &data).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), c.chain.kept());
    let mar = Dataset::Mar(gen_mar(MarModel::new(2).unwrap(), 40, &mut RngHandle::new(4)));
    assert!(run_posterior(&c, Method::Tab, &mar).is_err());
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tabayes")).args(args).output().unwrap()
}

#[test]
fn cli_simulate_report_and_posterior() {
    let dir = scratch("cli");
    let out = dir.join("run");
    let run = |o: &Path| {
        cli(&[
            "simulate", "--experiment", "mar-3", "--n", "40", "--replicates", "2", "--methods", "tab,bb",
            "--chain-length", "2000", "--seed", "5", "--out", o.to_str().unwrap(),
        ])
    };
    let r = run(&out);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let first = fs::read(out.join("metrics.csv")).unwrap();
    let r = run(&out);
    assert!(r.status.success());
    assert_eq!(first, fs::read(out.join("metrics.csv")).unwrap());

    let rep = cli(&["report", "--in", out.to_str().unwrap(), "--format", "csv"]);
    assert!(rep.status.success());
    let text = String::from_utf8(rep.stdout).unwrap();
    assert!(text.starts_with("method,model,n,replicates,excluded,cp,cp_se,size,size_se,abs_bias,bias_se,risk,risk_se"));
    assert_eq!(text.lines().count(), 3);
    let md = cli(&["report", "--in", out.to_str().unwrap(), "--format", "markdown"]);
    assert!(String::from_utf8(md.stdout).unwrap().contains("| TAB |"));

    let data = dir.join("data.csv");
    Dataset::Scalar(gen_meanvar(30, &mut RngHandle::new(6)))
        .write_csv(fs::File::create(&data).unwrap())
        .unwrap();
    let cfg = dir.join("config.txt");
    fs::write(&cfg, "experiment = meanvar\nchain_length = 2000\nseed = 3\n").unwrap();
    let draws = dir.join("draws.csv");
    let p = cli(&[
        "posterior", "--method", "bel", "--data", data.to_str().unwrap(), "--config", cfg.to_str().unwrap(),
        "--out", draws.to_str().unwrap(),
    ]);
    assert!(p.status.success(), "{}", String::from_utf8_lossy(&p.stderr));
    let text = fs::read_to_string(&draws).unwrap();
    assert!(text.starts_with("# method=bel seed="));
    assert_eq!(text.lines().count(), 2 + 1800);

    // Bad input fails cleanly.
    let bad = cli(&["simulate", "--experiment", "mar-1", "--methods", "gb"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("error:"));
    let _ = fs::remove_dir_all(&dir);
}
