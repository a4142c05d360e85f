use std::path::Path;

use abpole::cli::{main_with_args, run, Args, Command, Status};

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn args(command: Command, config: Option<&Path>, out: &Path) -> Args {
    Args {
        command,
        config: config.map(Path::to_path_buf),
        out: Some(out.to_path_buf()),
        jobs: Some(1),
        seed: None,
        k: None,
    }
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn identities_with_defaults_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&args(Command::Identities, None, &out));
    assert_eq!(o.status, Status::Ok, "{:?}", o.error);
    assert!(!o.gates.is_empty() && o.gates.iter().all(|g| g.pass));
    let csv = read(&out.join("identities.csv"));
    assert!(csv.starts_with("check,k,value,threshold,pass\n"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
    let manifest: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "identities");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn mk_run_is_negative_and_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[mk]\nh_seq = [0.0625, 0.03125]\nr_seq = [4.0, 8.0]\n");
    let mut first = args(Command::Mk, Some(&cfg), &dir.path().join("a"));
    first.k = Some(1);
    let o = run(&first);
    assert_eq!(o.status, Status::Ok, "{:?}", o.error);
    let second = Args {
        out: Some(dir.path().join("b")),
        ..first.clone()
    };
    assert_eq!(run(&second).status, Status::Ok);

    let table = read(&dir.path().join("a/mk.csv"));
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "k,route,limit,error,observed_order,used_order,flag");
    for line in lines {
        let limit: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(limit < 0.0, "{line}");
    }
    for name in ["mk.csv", "mk_rows.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join("a").join(name)).unwrap(),
            std::fs::read(dir.path().join("b").join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
    let m = |d: &str| -> serde_json::Value {
        serde_json::from_str(&read(&dir.path().join(d).join("manifest.json"))).unwrap()
    };
    assert_eq!(m("a")["config_file_sha256"], m("b")["config_file_sha256"]);
    assert!(m("a")["grids"].as_array().unwrap().len() == 4);
}

#[test]
fn empty_sweep_writes_header_only_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[sweep]\nangles = []\nradii = [0.07]\nh_seq = [0.03125, 0.015625]\n",
    );
    let out = dir.path().join("out");
    let o = run(&args(Command::Sweep, Some(&cfg), &out));
    assert_eq!(o.status, Status::Ok, "{:?}", o.error);
    let text = read(&out.join("sweep.csv"));
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("alpha,radius,a1,a2,difference,"));
    assert_eq!(read(&out.join("sweep_levels.csv")), "alpha,radius,h,lambda\n");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for text in [
        "[mk]\nkk = 1\n",
        "[mk]\nk = 2\n",
        "[mk]\nh_seq = [0.03125, 0.0625]\n",
        "[sweep]\nradii = [0.001]\n",
        "[eig]\npole = [3.0, 0.0]\n",
        "not toml at all = = =",
    ] {
        let cfg = write_config(dir.path(), text);
        let command = if text.contains("sweep") {
            Command::Sweep
        } else if text.contains("eig") {
            Command::Eig
        } else {
            Command::Mk
        };
        let o = run(&args(command, Some(&cfg), &out));
        assert_eq!(o.status, Status::ConfigError, "{text}");
    }
    let missing = dir.path().join("nope.toml");
    assert_eq!(run(&args(Command::Mk, Some(&missing), &out)).status, Status::ConfigError);

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"").unwrap();
    let o = run(&args(Command::Identities, None, &blocker.join("sub")));
    assert_eq!(o.status, Status::ConfigError);
    assert!(o.error.unwrap().contains("file"));

    assert_eq!(main_with_args(["abpole", "bogus"]), 2);
    assert_eq!(main_with_args(["abpole", "--help"]), 0);
}

#[test]
fn degenerate_base_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[sweep]\nbase = [0.0, 0.0]\nangles = [0.0]\nradii = [0.1]\nh_seq = [0.03125, 0.015625]\n",
    );
    let o = run(&args(Command::Sweep, Some(&cfg), &dir.path().join("out")));
    assert_eq!(o.status, Status::SolverFailure);
    assert!(o.error.unwrap().contains("clustered"));
    let manifest = read(&dir.path().join("out/manifest.json"));
    assert!(manifest.contains("solver-failure"));
}

fn synthetic_sweep(path: &Path, value: impl Fn(f64, f64) -> f64) {
    let mut text = String::from(
        "alpha,radius,a1,a2,difference,difference_error,difference_order,lambda_limit,lambda_limit_error,status,message\n",
    );
    for j in 0..16 {
        let alpha = std::f64::consts::TAU * j as f64 / 16.0;
        for r in [0.02, 0.03, 0.045] {
            let (a1, a2) = (r * alpha.cos(), r * alpha.sin());
            text += &format!("{alpha},{r},{a1},{a2},{},1e-9,1,0,0,ok,\n", value(a1, a2));
        }
    }
    text += "0,0.5,0.5,0,nan,nan,,,,failed,\"eigensolver did not converge, see log\"\n";
    std::fs::write(path, text).unwrap();
}

#[test]
fn fit_recovers_a_synthetic_harmonic_table() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.csv");
    let (c0, shift) = (2.0_f64, 0.7_f64);
    synthetic_sweep(&sweep, |a1, a2| c0 * (a1 * shift.cos() + a2 * shift.sin()));
    let cfg = write_config(dir.path(), &format!("[fit]\nk = 1\nsweep_csv = {:?}\n", sweep));
    let out = dir.path().join("out");
    let o = run(&args(Command::Fit, Some(&cfg), &out));
    assert_eq!(o.status, Status::Ok, "{:?} {:?}", o.error, o.gates);
    let summary = read(&out.join("fit_summary.csv"));
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    let c: f64 = row[1].parse().unwrap();
    let a: f64 = row[2].parse().unwrap();
    assert!((c - c0).abs() < 1e-8 && (a - shift).abs() < 1e-8, "{summary}");
    for name in ["fit_angular.dat", "fit_harmonic.dat", "fit_points.dat"] {
        let text = read(&out.join(name));
        assert!(text.lines().all(|l| l.split_whitespace().count() == 2), "{name}");
    }
}

#[test]
fn non_harmonic_fit_is_an_acceptance_failure() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep.csv");
    synthetic_sweep(&sweep, |a1, _| a1 * a1 * a1);
    let cfg = write_config(dir.path(), &format!("[fit]\nk = 3\nsweep_csv = {:?}\n", sweep));
    let o = run(&args(Command::Fit, Some(&cfg), &dir.path().join("out")));
    assert_eq!(o.status, Status::AcceptanceFailure);
    assert!(o.gates.iter().any(|g| g.name == "harmonicity_defect" && !g.pass));
}

#[test]
fn falpha_writes_overlay_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[falpha]\nangles = 4\nr_seq = [4.0, 8.0]\nh_seq = [0.0625, 0.03125]\n",
    );
    let out = dir.path().join("out");
    let o = run(&args(Command::Falpha, Some(&cfg), &out));
    assert_eq!(o.status, Status::Ok, "{:?} {:?}", o.error, o.gates);
    let points = read(&out.join("falpha.dat"));
    assert_eq!(points.lines().count(), 4);
    let fit = read(&out.join("falpha_fit.dat"));
    assert_eq!(fit.lines().count(), 361);
    let parse = |l: &str| -> Vec<f64> { l.split_whitespace().map(|v| v.parse().unwrap()).collect() };
    let first = parse(points.lines().next().unwrap());
    let curve = parse(fit.lines().next().unwrap());
    assert_eq!(first[0], 0.0);
    assert!((first[1] - curve[1]).abs() < 0.02 * first[1].abs());
}
