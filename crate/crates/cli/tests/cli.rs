use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kcontact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kcontact"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (Output, Option<String>) {
    let path = dir.join(name);
    let p = path.to_str().unwrap();
    let mut all = vec!["--output", p];
    all.extend_from_slice(args);
    let out = kcontact(&all);
    (out, fs::read_to_string(&path).ok())
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn decay_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let (out, text) = run_to(
        dir.path(),
        "decay.csv",
        &["--lambda", "1", "--mu", "0.25", "--dim", "1", "--replicas", "4000", "--seed", "7", "decay"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = text.unwrap();
    assert!(text.starts_with("# kcontact decay\n"));
    assert!(text.contains("# seed = 7\n"));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "t,mean,se,closed_form");
    assert_eq!(lines.len(), 5);
    for l in &lines[1..] {
        let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[1] - f[3]).abs() <= 5.0 * f[2], "{l}");
        assert!((f[3] / (-0.5 * f[0]).exp() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn same_seed_same_bytes_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--lambdas", "1,3", "--mus", "0.5,1", "--size", "15", "--horizon", "4", "--replicas", "40", "--seed", "11",
    ];
    let mut texts = Vec::new();
    for (i, jobs) in ["1", "4", "4"].iter().enumerate() {
        let mut a = args.to_vec();
        a.extend_from_slice(&["--jobs", jobs, "sweep"]);
        let (out, text) = run_to(dir.path(), &format!("s{i}.csv"), &a);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        texts.push(text.unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    assert_eq!(texts[1], texts[2]);
    assert_eq!(data_lines(&texts[0]).len(), 5);
}

#[test]
fn mu_out_of_range_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (out, text) = run_to(dir.path(), "x.csv", &["--mu", "1.2", "--seed", "1", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mu"));
    assert!(text.is_none());
}

#[test]
fn failed_run_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    // survives already at the low end of the bracket
    let (out, text) = run_to(
        dir.path(),
        "crit.csv",
        &[
            "--kind", "contact", "--fixed", "1", "--bracket", "20,30", "--size", "11", "--horizon", "2",
            "--replicas", "20", "--seed", "3", "critical",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bracket"));
    assert!(text.is_none());
}

#[test]
fn couple_check_exits_zero_without_violations() {
    let out = kcontact(&[
        "--lambda", "1", "--mu", "0.3", "--lambda2", "2", "--mu2", "0.8", "--size", "15", "--horizon", "5",
        "--replicas", "100", "--seed", "5", "couple-check",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = data_lines(&text);
    assert_eq!(rows.len(), 101);
    assert!(rows[1..].iter().all(|r| r.contains(",true,")));
}

#[test]
fn config_file_without_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    let csv = dir.path().join("perc.csv");
    fs::write(
        &cfg,
        format!("# percolation\ncommand = perc\np = 0.8\ndepth = 6\ndim = 1\nseed = 2\noutput = {}\n", csv.display()),
    )
    .unwrap();
    let out = kcontact(&["--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.contains("# p = 0.8\n"));
    let rows = data_lines(&text);
    assert_eq!(rows[0], "level,wet_count");
    assert_eq!(rows[1], "0,1");
    assert_eq!(rows.len(), 8);

    fs::write(&cfg, "command = perc\nprobability = 0.8\n").unwrap();
    let out = kcontact(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("probability"));
}

#[test]
fn pgm_snapshot_is_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let (out, text) = run_to(
        dir.path(),
        "snap.pgm",
        &["--dim", "2", "--size", "9", "--lambda", "2", "--mu", "0.5", "--horizon", "2", "--seed", "4", "snapshot"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = text.unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("P2"));
    assert_eq!(lines.next(), Some("# kcontact snapshot"));
    let rest: Vec<&str> = lines.filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rest[0], "9 9");
    assert_eq!(rest[1], "255");
    assert_eq!(rest.len(), 11);
    for row in &rest[2..] {
        let px: Vec<u32> = row.split(' ').map(|x| x.parse().unwrap()).collect();
        assert_eq!(px.len(), 9);
        assert!(px.iter().all(|p| *p <= 255));
    }
}

#[test]
fn paths_and_simulate_and_invade_run() {
    let out = kcontact(&["--size", "11", "--horizon", "2", "--cap", "50", "--seed", "9", "paths"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("path,i,from,to,s,sigma,tau,doubles"));

    let out = kcontact(&[
        "--domain", "lazy", "--dim", "2", "--times", "1,2", "--horizon", "2", "--replicas", "3", "--seed", "9",
        "simulate",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = data_lines(&text);
    assert_eq!(rows[0], "replica,time,observable,value");
    // lazy domains have no density row
    assert_eq!(rows.len(), 1 + 3 * 2 * 4);
    assert!(rows[1].starts_with("0,1,total_knowledge,"));

    let out = kcontact(&["--epsilon", "0.2", "--mu", "0.5", "--replicas", "200", "--seed", "9", "invade"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<f64> = data_lines(&text)[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert!(row[9] >= row[11] - 3.0 * row[10].max(0.01), "{row:?}");
}

#[test]
fn missing_seed_is_reported_and_recorded() {
    let out = kcontact(&["--p", "0.5", "--depth", "3", "perc"]);
    assert!(out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    let seed = err.lines().find_map(|l| l.strip_prefix("seed = ")).expect("seed printed");
    assert!(String::from_utf8(out.stdout).unwrap().contains(&format!("# seed = {seed}\n")));
}
