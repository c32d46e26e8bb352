use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn critnls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critnls"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn run(sub: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    critnls(&args)
}

fn summary(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn check_is_deterministic_and_exits_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "check.conf",
        "kind = repulsive\nR = 20\nN = 1024\nprofile = gaussian\nt1 = 1\ndt = 1e-3\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run("check", &cfg, out, &[]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stdout)
        );
    }
    for file in ["summary.json", "checks.csv"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
    assert!(a.join("timing.json").exists());
    assert_eq!(summary(&a)["passed"], true);
}

#[test]
fn configuration_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cases = [
        ("unknown.conf", "kind = free\nR = 20\nN = 256\nprofile = gaussian\nt1 = 1\ndt = 1e-2\ncolour = red\n"),
        ("negative.conf", "kind = free\nR = 20\nN = 256\nprofile = gaussian\nt1 = 1\ndt = -1e-2\n"),
        ("period.conf", "kind = confining\nR = 20\nN = 256\nprofile = gaussian\nt1 = 10\ndt = 3.2\n"),
        ("json.conf", "{\"kind\": \"free\", \"R\": 20, \"N\": \"many\"}"),
        ("ladder.conf", "kind = free\nR = 20\nN = 256\nprofile = gaussian\nt1 = 1\ndt = 1e-2\nladder = 1e-2, 6e-3, 1e-3\n"),
    ];
    for (name, text) in cases {
        let cfg = write_config(dir.path(), name, text);
        let sub = if name == "ladder.conf" {
            "convergence"
        } else {
            "simulate"
        };
        let o = run(sub, &cfg, &out, &[]);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty());
    }
    let missing = dir.path().join("absent.conf");
    assert_eq!(
        run("simulate", missing.to_str().unwrap(), &out, &[])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(critnls(&["simulate"]).status.code(), Some(2));
}

#[test]
fn watchdog_trip_exits_one_with_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "wall.conf",
        "kind = free\nR = 10\nN = 256\nprofile = ring\ncenter = 8\nt1 = 2\ndt = 1e-2\nrho = 1\n",
    );
    let out = dir.path().join("out");
    let o = run("simulate", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("STOPPED"));
    let s = summary(&out);
    assert_eq!(s["passed"], false);
    assert!(s["stopped"].is_string());
    assert!(out.join("diagnostics.csv").exists() && out.join("field_final.bin").exists());
}

#[test]
fn simulate_then_resume_from_checkpoint() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "a.conf",
        "kind = confining\nR = 20\nN = 512\nprofile = gaussian\nt1 = 0.5\ndt = 5e-3\n",
    );
    let first = dir.path().join("first");
    assert_eq!(run("simulate", &cfg, &first, &[]).status.code(), Some(0));
    let resume = format!(
        "kind = confining\nR = 20\nN = 512\nprofile = checkpoint\ncheckpoint_path = {}\nt0 = 0.5\nt1 = 1\ndt = 5e-3\n",
        first.join("field_final.bin").display()
    );
    let cfg = write_config(dir.path(), "b.conf", &resume);
    let second = dir.path().join("second");
    let o = run("simulate", &cfg, &second, &["--seed", "42"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let s = summary(&second);
    assert_eq!(s["config"]["seed"], 42);
    assert_eq!(s["final_record"]["t"], 1.0);
}

#[test]
fn thin_drivers() {
    let dir = TempDir::new().unwrap();
    let period = write_config(
        dir.path(),
        "p.conf",
        "kind = confining\nR = 20\nN = 512\nprofile = gaussian\nnonlinear = false\nt1 = 6.283185307179586\ndt = 1e-2\n",
    );
    let out = dir.path().join("propagate");
    let o = run("propagate", &period, &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS full_period_sign"));

    let zero = write_config(
        dir.path(),
        "z.conf",
        "kind = repulsive\nR = 20\nN = 256\nprofile = gaussian\namplitude = 0\nt1 = 0.1\ndt = 1e-3\n",
    );
    let out = dir.path().join("picard");
    assert_eq!(run("picard", &zero, &out, &[]).status.code(), Some(0));
    assert!(out.join("picard.json").exists());

    let out = dir.path().join("waveop");
    assert_eq!(run("waveop", &zero, &out, &[]).status.code(), Some(0));
    assert!(out.join("waveop.json").exists() && out.join("field_u0.bin").exists());

    let ladder = write_config(
        dir.path(),
        "c.conf",
        "kind = free\nR = 20\nN = 256\nprofile = gaussian\nt1 = 0.5\ndt = 8e-3\n",
    );
    let out = dir.path().join("convergence");
    assert_eq!(
        run("convergence", &ladder, &out, &[]).status.code(),
        Some(0)
    );
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert!(csv.starts_with("observable,level,parameter,error,pairwise_order,estimate"));
}
