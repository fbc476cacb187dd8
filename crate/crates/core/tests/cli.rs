use std::path::Path;
use std::process::{Command, Output};

fn jbesim(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_jbesim"));
    cmd.args(args).env_remove("JBESIM_OUT");
    if let Some(out) = out {
        cmd.arg("--out").arg(out);
    }
    cmd.output().unwrap()
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

const FILES: [&str; 5] = [
    "summary.csv",
    "speeds.csv",
    "gaps.csv",
    "cbr.csv",
    "beacons.csv",
];

#[test]
fn run_writes_five_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let o = jbesim(
        &[
            "run",
            "--scenario",
            "stopping",
            "--scheme",
            "jbe",
            "--density",
            "desk",
            "--seed",
            "1",
        ],
        Some(&out),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in FILES {
        let bytes = std::fs::read(out.join(f)).unwrap();
        assert!(bytes.ends_with(b"\n"), "{f}");
        assert!(!rows(&out.join(f)).is_empty(), "{f}");
    }
    assert!(!out.join("channel.csv").exists());
    let summary = rows(&out.join("summary.csv"));
    assert_eq!(summary.len(), 1);
    assert_eq!(&summary[0][0], "jbe");
    assert_eq!(&summary[0][1], "stopping");
    assert_eq!(&summary[0][4], "false");
}

#[test]
fn headers_are_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let o = jbesim(
        &[
            "run",
            "--scenario",
            "slowdown",
            "--scheme",
            "jb",
            "--density",
            "desk",
            "--duration",
            "3",
        ],
        Some(dir.path()),
    );
    assert!(o.status.success());
    let header = |f: &str| {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        text.lines().next().unwrap().to_string()
    };
    assert_eq!(
        header("summary.csv"),
        "scheme,scenario,seed,min_distance,crash,avg_cbr,protocol_failures,inter_platoon_min_distance"
    );
    assert_eq!(header("speeds.csv"), "time,vehicle,speed");
    assert_eq!(header("gaps.csv"), "time,pair,gap");
    assert_eq!(header("cbr.csv"), "window,mean_cbr");
    assert_eq!(header("beacons.csv"), "time,sender,type,payload,outcome");
}

#[test]
fn channel_trace_flag_adds_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = jbesim(
        &[
            "run",
            "--scenario",
            "slowdown",
            "--scheme",
            "jb",
            "--density",
            "desk",
            "--duration",
            "1",
            "--channel-trace",
        ],
        Some(dir.path()),
    );
    assert!(o.status.success());
    let trace = rows(&dir.path().join("channel.csv"));
    assert!(!trace.is_empty());
    assert!(trace
        .iter()
        .all(|r| ["delivered", "collided", "out-of-range"].contains(&&r[3])));
}

#[test]
fn stability_scenario_has_eight_vehicles() {
    let dir = tempfile::tempdir().unwrap();
    let o = jbesim(
        &["run", "--scenario", "stability", "--scheme", "jbe"],
        Some(dir.path()),
    );
    assert!(o.status.success());
    let speeds = rows(&dir.path().join("speeds.csv"));
    let mut ids: Vec<String> = speeds.iter().map(|r| r[1].to_string()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 8);
}

#[test]
fn matrix_writes_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = jbesim(
        &[
            "matrix",
            "--seeds",
            "10",
            "--density",
            "desk",
            "--jobs",
            "4",
        ],
        Some(dir.path()),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = rows(&dir.path().join("summary.csv"));
    assert_eq!(summary.len(), 60);
    let sub = dir.path().join("jbe_stopping_seed7");
    for f in FILES {
        assert!(sub.join(f).exists());
    }
}

#[test]
fn env_var_sets_the_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_jbesim"))
        .args([
            "run",
            "--scenario",
            "slowdown",
            "--scheme",
            "jbe",
            "--density",
            "desk",
            "--duration",
            "1",
        ])
        .env("JBESIM_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("summary.csv").exists());
}

#[test]
fn validate_config_prints_and_touches_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[scenario]\ndensity = \"desk\"\n[jb]\nmax_bi = 0.5\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_jbesim"))
        .current_dir(dir.path())
        .args(["validate-config", "--config", "c.toml"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("\"jb.max_bi\" = 0.5"), "{text}");
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[jb]\nmin_bi = 0.9\n").unwrap();
    let bad = bad.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "run",
            "--scenario",
            "stopping",
            "--scheme",
            "jbe",
            "--config",
            bad,
        ],
        vec!["run", "--scenario", "stopping"],
        vec!["run", "--scenario", "stopping", "--scheme", "xyz"],
        vec!["run", "--scenario", "stopping", "--scheme", "jb", "--bogus"],
        vec!["matrix", "--seeds", "0"],
        vec!["validate-config", "--config", "/nonexistent/x.toml"],
        vec![
            "run",
            "--scenario",
            "stopping",
            "--scheme",
            "jb",
            "--duration",
            "-1",
        ],
    ];
    for args in cases {
        let out = dir.path().join("o");
        let o = jbesim(
            &args,
            (args[0] != "validate-config").then_some(out.as_path()),
        );
        assert_eq!(
            o.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty());
    }
    assert!(!dir.path().join("o").exists());
}
