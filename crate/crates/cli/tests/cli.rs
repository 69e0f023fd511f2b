use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use codescale::io::{write_law, write_runfile};
use codescale::reference::code_chinchilla;
use codescale::{canonical_sweep, plan_sweep, FarseerLaw, LawHandle, Provenance, RunRecord};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codescale"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    stdout(&o)
}

fn chinchilla_grid(dir: &Path) -> String {
    let law = code_chinchilla();
    let records: Vec<RunRecord> = plan_sweep(&canonical_sweep())
        .unwrap()
        .into_iter()
        .map(|p| RunRecord::new(p.n, p.d, law.eval(p.n as f64, p.d as f64).unwrap()).unwrap())
        .collect();
    let path = dir.join("chinchilla.csv");
    write_runfile(&records, &path).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn every_subcommand_has_help() {
    assert!(run(&["--help"]).status.success());
    for cmd in [
        "fit", "predict", "score", "optimal", "frontier", "limit", "compare", "sweep", "arch", "gpus", "surface",
        "slice",
    ] {
        let o = run(&[cmd, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{cmd}");
        assert!(stdout(&o).contains("Usage:"), "{cmd}");
    }
}

#[test]
fn predict_and_limit_on_fixtures() {
    let out = ok(&[
        "predict",
        "--params",
        &fixture("code_farseer.json"),
        "--n",
        "2.27e9",
        "--d",
        "341e9",
    ]);
    let v: f64 = out.trim().parse().unwrap();
    assert!((v - 0.253488).abs() < 2e-3);
    assert_eq!(
        ok(&["limit", "--params", &fixture("code_chinchilla.json")]).trim(),
        "0.2193"
    );
    let v: f64 = ok(&["limit", "--params", &fixture("code_farseer.json")])
        .trim()
        .parse()
        .unwrap();
    assert!((v / 8.0e-7 - 1.0).abs() < 0.01);
}

#[test]
fn fit_then_score_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let runs = chinchilla_grid(dir.path());
    let law = dir.path().join("fit.json").to_string_lossy().into_owned();
    let out = ok(&[
        "fit",
        "--law",
        "chinchilla",
        "--input",
        &runs,
        "--out",
        &law,
        "--seed",
        "3",
    ]);
    assert!(out.contains("mre_permille: "));
    let scored = ok(&["score", "--params", &law, "--input", &runs]);
    let mre: f64 = scored
        .lines()
        .find_map(|l| l.strip_prefix("mre_permille: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(mre <= 0.1, "{mre}");

    let again = dir.path().join("fit2.json").to_string_lossy().into_owned();
    ok(&[
        "fit",
        "--law",
        "chinchilla",
        "--input",
        &runs,
        "--out",
        &again,
        "--seed",
        "3",
    ]);
    assert_eq!(std::fs::read(&law).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn score_reproduces_table_columns() {
    let out = ok(&[
        "score",
        "--params",
        &fixture("code_chinchilla.json"),
        "--input",
        &fixture("validation_runs.csv"),
        "--format",
        "csv",
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "n,d,predicted,actual,re_permille");
    let want = [34.55, 33.67, 16.99];
    for (line, w) in lines[1..].iter().zip(want) {
        let re: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((re - w).abs() < 2.0, "{re} vs {w}");
    }
}

#[test]
fn series_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        ok(&[
            "frontier",
            "--params",
            &fixture("code_farseer.json"),
            "--c-min",
            "1e20",
            "--c-max",
            "1e22",
            "--points",
            "2",
            "--format",
            "csv",
            "--out",
            p.to_str().unwrap(),
        ]);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.ends_with('\n'));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let json = ok(&[
        "surface",
        "--params",
        &fixture("code_chinchilla.json"),
        "--n-grid",
        "log:1e8:1e10:3",
        "--d-grid",
        "1e9,1e10,1e11",
        "--format",
        "json",
    ]);
    let objects: Vec<&str> = json.lines().filter(|l| l.trim_start().starts_with('{')).collect();
    assert_eq!(objects.len(), 9);
    assert!(objects
        .iter()
        .all(|o| o.contains("\"n\": ") && o.contains("\"d\": ") && o.contains("\"loss\": ")));
}

#[test]
fn planners() {
    let out = ok(&["sweep", "--canonical", "--format", "csv"]);
    assert_eq!(out.lines().count(), 118);
    let out = ok(&["gpus", "--gbz", "1080", "--mbz-max", "9"]);
    assert!(out.contains("gpus: 120") && out.contains("mbz: 9") && out.contains("accum: 1"));
    let out = ok(&["arch", "--target", "2.27e9"]);
    assert!(out.contains("d_model: 2304") && out.contains("n_layer: 36"));
    let out = ok(&[
        "optimal",
        "--params",
        &fixture("code_farseer.json"),
        "--compute",
        "5.36e21",
    ]);
    let dn: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("dn_ratio: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((100.0..=250.0).contains(&dn));
}

#[test]
fn compare_reports_crossover() {
    let dir = tempfile::tempdir().unwrap();
    let a = code_chinchilla();
    let b = codescale::ChinchillaLaw {
        coef_b: a.coef_b / 2.0,
        e_irr: a.e_irr + 0.01,
        ..a
    };
    let pa = dir.path().join("base.json");
    let pb = dir.path().join("mix.json");
    write_law(&LawHandle::new(a, Provenance::source("test")), &pa).unwrap();
    write_law(&LawHandle::new(b, Provenance::source("test")), &pb).unwrap();
    let out = ok(&[
        "compare",
        "--params",
        pa.to_str().unwrap(),
        pb.to_str().unwrap(),
        "--fixed-n",
        "1e9",
        "--dn-min",
        "1",
        "--dn-max",
        "1e4",
        "--format",
        "csv",
    ]);
    let crossings: Vec<&str> = out.lines().filter(|l| l.starts_with("crossover,")).collect();
    assert_eq!(crossings.len(), 1, "{out}");
    assert!(crossings[0].ends_with("base|mix"));
    assert!(out.lines().any(|l| l.starts_with("cell,") && l.ends_with(",mix")));
}

#[test]
fn error_exit_codes() {
    let o = run(&["predict", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr(&o).trim_end().lines().count(), 1);
    assert!(stdout(&o).is_empty());

    let o = run(&["sweep", "--canonical", "--n-values", "1e9"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&[
        "predict",
        "--params",
        "/nonexistent/law.json",
        "--n",
        "1e9",
        "--d",
        "1e10",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/law.json"));

    let o = run(&["gpus", "--gbz", "1001", "--mbz-max", "16"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("1000") && stderr(&o).contains("1008"));

    let o = run(&[
        "sweep",
        "--n-values",
        "log:2e8:3.8e9:9",
        "--d-values",
        "log:2e9:128e9:13",
        "--dn-min",
        "1e6",
        "--dn-max",
        "2e6",
    ]);
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("runs.csv");
    std::fs::write(&bad, "n_params,d_tokens,loss\n1e9,2e10,0.3\n1e9,2e10,-1\n").unwrap();
    let o = run(&[
        "score",
        "--params",
        &fixture("code_chinchilla.json"),
        "--input",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 3") && stderr(&o).contains("loss"));

    // Prefactor grows without bound while the data exponent stays positive.
    let path_dependent = FarseerLaw {
        t1_coef: -0.1,
        t1_exp: 0.2,
        t1_offset: -1.0,
        t2_coef: 1.0,
        t2_exp: 0.1,
        t2_offset: 0.0,
        ex_coef: 0.0,
        ex_exp: 0.2,
        ex_offset: -1.0,
    };
    let p = dir.path().join("pd.json");
    write_law(&LawHandle::new(path_dependent, Provenance::source("test")), &p).unwrap();
    let o = run(&["limit", "--params", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}
