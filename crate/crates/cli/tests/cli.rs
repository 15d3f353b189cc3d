use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qedk(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qedk"))
        .args(args)
        .current_dir(cwd)
        .env_remove("QEDK_OUT")
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).display().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

const STEP: &str = "[medium.chi_e]\nkind = \"step\"\nbeta = 0.2\n[scenario]\nkind = \"example3\"\nomega_q = 1\ntime = { t1 = 4, dt = 0.25 }\n";

#[test]
fn examples_list_names_every_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = qedk(&["examples", "list"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for kind in ["kernels", "coupling", "commutator", "energy", "kk", "example1", "example2", "example3", "example4"] {
        assert!(text.lines().any(|l| l.starts_with(kind)), "{kind} missing from\n{text}");
    }
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for config in ["example3.toml", "kernels_box.toml", "example4.toml"] {
        let (a, b) = (dir.path().join(format!("a_{config}")), dir.path().join(format!("b_{config}")));
        for target in [&a, &b] {
            let out = qedk(&["run", &scenario(config), "--out", &target.display().to_string()], dir.path());
            assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        }
        let (fa, fb) = (files(&a), files(&b));
        assert!(fa.len() >= 3, "{config}: {:?}", fa.iter().map(|f| &f.0).collect::<Vec<_>>());
        assert_eq!(fa, fb, "{config}");
    }
}

#[test]
fn missing_omega_q_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &STEP.replace("omega_q = 1\n", ""));
    for cmd in ["run", "check"] {
        let out = qedk(&[cmd, &cfg], dir.path());
        assert_eq!(out.status.code(), Some(2));
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains("scenario.omega_q"), "{err}");
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    }
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1, "nothing but the config");
}

#[test]
fn io_and_syntax_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qedk(&["check", "does-not-exist.toml"], dir.path()).status.code(), Some(2));
    let bad = write(dir.path(), "bad.toml", "[scenario\nkind = 1");
    assert_eq!(qedk(&["check", &bad], dir.path()).status.code(), Some(2));
    let typo = write(dir.path(), "typo.toml", &STEP.replace("beta", "betta"));
    let out = qedk(&["check", &typo], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("medium.chi_e.betta"));
}

#[test]
fn failing_check_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    // A 16-node grid to ω = 5 cannot resolve the step kernel's spectrum.
    let cfg = write(
        dir.path(),
        "coarse.toml",
        "[medium.chi_e]\nkind = \"step\"\nbeta = 0.2\n[scenario]\nkind = \"coupling\"\n\
         time = { t0 = 0.5, t1 = 5, dt = 0.5 }\ngrid = { n = 16, omega_max = 5 }\n",
    );
    let out = qedk(&["check", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL chi_round_trip_electric"));
}

#[test]
fn check_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", STEP);
    let out = qedk(&["check", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("PASS example3_z"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", STEP);
    let run = |extra: &[&str], env: Option<&str>| {
        let mut args = vec!["run", cfg.as_str()];
        args.extend_from_slice(extra);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qedk"));
        cmd.args(&args).current_dir(dir.path()).env_remove("QEDK_OUT");
        if let Some(v) = env {
            cmd.env("QEDK_OUT", v);
        }
        assert_eq!(cmd.output().unwrap().status.code(), Some(0));
    };
    run(&[], Some("from_env"));
    assert!(dir.path().join("from_env/summary.json").exists());
    run(&["--out", "from_flag"], Some("from_env"));
    assert!(dir.path().join("from_flag/summary.json").exists());
    let with_output = write(dir.path(), "o.toml", &format!("{STEP}output = \"from_config\"\n"));
    let out = Command::new(env!("CARGO_BIN_EXE_qedk")).args(["run", &with_output]).current_dir(dir.path()).env("QEDK_OUT", "unused").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("from_config/summary.json").exists());
    assert!(!dir.path().join("unused").exists());
}

#[test]
fn vacuum_series_starts_at_unity() {
    let dir = tempfile::tempdir().unwrap();
    let out = qedk(&["run", &scenario("example1.toml"), "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("o/Z_wq1_forward.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,re,im"));
    assert_eq!(lines.next(), Some("0,1,0"));
    assert!(text.ends_with('\n'));
}

#[test]
fn step_row_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", STEP);
    assert_eq!(qedk(&["run", &cfg, "--out", "o"], dir.path()).status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("o/Z_wq1_forward.csv")).unwrap();
    let row: Vec<f64> = text.lines().find(|l| l.starts_with("1,")).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let w = 0.99f64.sqrt();
    let (s, c) = w.sin_cos();
    let decay = (-0.1f64).exp();
    let (re, im) = (decay * (c + 0.1 / w * s), -decay * s / w);
    for (got, want) in [(row[1], re), (row[2], im)] {
        assert!((got - want).abs() <= 4.0 * f64::EPSILON * want.abs(), "{got} vs {want}");
    }
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/example3_z.json")).unwrap()).unwrap();
    for key in ["check", "medium", "params", "grid", "samples", "max_residual", "tolerance", "pass"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}
