use std::path::Path;
use std::process::Command;

fn stochopt(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_stochopt"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn run_writes_kw_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "kw.toml",
        "function = \"quartic\"\nnoise_levels = [0.1]\ncheckpoints = [6000]\nalgorithms = [\"kw\"]\n",
    );
    let out = dir.path().join("nested/out");
    let res = stochopt(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let table = rows(&out.join("trajectory.csv"));
    assert_eq!(
        table[0],
        [
            "iter",
            "pairs_used",
            "x_1",
            "solution_gap",
            "optimality_gap"
        ]
    );
    assert_eq!(table.len(), 6001);
    assert_eq!(table[1][1], "1");
    assert_eq!(table.last().unwrap()[1], "6000");
    // bound to bound for the first few thousand iterations
    for row in &table[1..4000] {
        assert_eq!(row[3].parse::<f64>().unwrap(), 50.0);
    }
}

#[test]
fn run_noiseless_descent_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sphere.toml",
        "function = \"sphere\"\ndimension = 2\nx0 = [3.0]\nnoise_levels = [0.0]\ncheckpoints = [2000]\nalgorithms = [\"corcfd\"]\n",
    );
    let res = stochopt(&[
        "run",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let table = rows(&dir.path().join("trajectory.csv"));
    let gaps: Vec<f64> = table[1..].iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
    let last_pairs: f64 = table.last().unwrap()[1].parse().unwrap();
    assert!(last_pairs <= 2000.0);
}

#[test]
fn bench_writes_table_with_oscillation_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "t.toml",
        "function = \"quartic\"\nnoise_levels = [0.1]\ncheckpoints = [100, 10000]\nreplications = 200\nalgorithms = [\"kw\"]\n",
    );
    let res = stochopt(&[
        "bench",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
        "--profile",
        "desk",
    ]);
    assert!(res.status.success());
    let table = rows(&dir.path().join("table.csv"));
    assert_eq!(
        table[0],
        ["sigma", "method", "metric", "checkpoint", "value"]
    );
    assert_eq!(table.len(), 1 + 4 + 3);
    assert!(table.contains(&vec![
        "0.1".into(),
        "KW".into(),
        "osc_median".into(),
        "".into(),
        "4999".into()
    ]));
}

#[test]
fn config_errors_exit_with_two_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let empty = write(
        dir.path(),
        "empty.toml",
        "function = \"quartic\"\nnoise_levels = [1.0]\ncheckpoints = [100]\nalgorithms = []\n",
    );
    let res = stochopt(&["bench", "--config", &empty, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.join("table.csv").exists());

    let missing = dir.path().join("nope.toml");
    let res = stochopt(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!res.stderr.is_empty());

    let res = stochopt(&["bench", "--config", &empty, "--profile", "huge"]);
    assert_eq!(res.status.code(), Some(2));
    let res = stochopt(&["frobnicate"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn grid_reports_single_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "g.toml",
        "function = \"fn213\"\ndimension = 4\nnoise_levels = [1.0]\ncheckpoints = [50]\nreplications = 3\n\
         [spsa]\ngrid_a = [1e-6]\ngrid_c = [2.0]\n",
    );
    let res = stochopt(&[
        "grid",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert!(res.status.success());
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("best a = 0.000001, c = 2"), "{stdout}");
    let table = rows(&dir.path().join("grid.csv"));
    assert_eq!(table[0], ["a", "c", "sigma", "rmse_opt_gap"]);
    assert_eq!(table.len(), 2);
}

#[test]
fn estimate_recovers_quartic_constants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "e.toml",
        "function = \"quartic\"\nx0 = [1.0]\nnoise_levels = [0.0]\ncheckpoints = [1000]\n[corcfd]\nn0 = 1000\n",
    );
    let res = stochopt(&[
        "estimate",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let table = rows(&dir.path().join("diagnostics.csv"));
    assert_eq!(
        table[0],
        [
            "c_hat",
            "sigma2_hat",
            "mu3_hat",
            "intercept",
            "estimate",
            "pairs_used"
        ]
    );
    let mu3: f64 = table[1][2].parse().unwrap();
    let intercept: f64 = table[1][3].parse().unwrap();
    assert!((mu3 - 24.0).abs() < 1e-3 && (intercept - 4.0).abs() < 1e-3);
    assert_eq!(table[1][5], "1000");
}

#[test]
fn estimate_uses_d_times_n_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "e.toml",
        "function = \"fn213\"\ndimension = 6\nnoise_levels = [1.0]\ncheckpoints = [1000]\n[corcfd]\nn0 = 30\n",
    );
    let res = stochopt(&[
        "estimate",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
        "--seed",
        "4",
    ]);
    assert!(res.status.success());
    let table = rows(&dir.path().join("diagnostics.csv"));
    assert_eq!(table.len(), 7);
    assert_eq!(table.last().unwrap()[5], "180");
}
