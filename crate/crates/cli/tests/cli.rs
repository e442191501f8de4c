use std::fs;
use std::path::Path;
use std::process::Command;

use moyal_cli::run::prepare;
use moyal_cli::{bundled, Registry};

fn moyal() -> Command {
    Command::new(env!("CARGO_BIN_EXE_moyal"))
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn malformed_scenarios_report_the_offending_path() {
    let registry = Registry::builtin();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/malformed");
    let mut seen = 0;
    let mut wrong = Vec::new();
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let want = text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix("# expect: "))
            .unwrap_or_else(|| panic!("{} has no expect header", path.display()))
            .trim()
            .to_string();
        seen += 1;
        match prepare(&text, &registry, None) {
            Ok(_) => wrong.push(format!("{}: accepted", path.display())),
            Err(e) if e.path != want => wrong.push(format!("{}: got `{}` ({}), want `{want}`", path.display(), e.path, e.message)),
            Err(_) => {}
        }
    }
    assert!(seen >= 30, "only {seen} cases");
    assert!(wrong.is_empty(), "{}", wrong.join("\n"));
}

#[test]
fn bundled_scenarios_validate() {
    let registry = Registry::builtin();
    for (name, text) in moyal_cli::BUNDLED {
        prepare(text, &registry, None).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(bundled(&format!("{name}.scenario")).is_some());
    }
}

#[test]
fn seed_override_replaces_the_file_seed() {
    let text = bundled("two-slit").unwrap();
    let (s, _) = prepare(text, &Registry::builtin(), Some(99)).unwrap();
    assert_eq!(s.seed, 99);
}

#[test]
fn invalid_scenario_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("bad.scenario");
    fs::copy(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/malformed/zero-hbar.scenario"), &file).unwrap();
    let out = moyal().arg("run").arg(&file).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("physics.hbar"));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn missing_file_exits_with_two() {
    let out = moyal().args(["run", "/nonexistent/none.scenario"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn passing_run_exits_with_zero_and_names_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = moyal().args(["run", "wigner-cat", "--out"]).arg(tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let names: Vec<String> = read_dir_sorted(tmp.path()).into_iter().map(|(n, _)| n).collect();
    assert!(names.contains(&"summary.json".to_string()), "{names:?}");
    for n in names.iter().filter(|n| *n != "summary.json") {
        let (index, rest) = n.split_at(2);
        assert!(index.chars().all(|c| c.is_ascii_digit()), "{n}");
        assert!(rest.starts_with('-') && (n.ends_with(".csv") || n.ends_with(".svg")), "{n}");
    }
    assert!(names.iter().any(|n| n.ends_with(".svg")));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], serde_json::Value::Bool(true));
}

#[test]
fn no_plots_skips_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let out = moyal().args(["run", "wigner-cat", "--no-plots", "--out"]).arg(tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(read_dir_sorted(tmp.path()).iter().all(|(n, _)| !n.ends_with(".svg")));
}

#[test]
fn tightened_tolerance_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = moyal()
        .args(["run", "shadow-gaussian", "--tolerance-scale", "1e-3", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], serde_json::Value::Bool(false));
}

#[test]
fn unreachable_expectation_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("strict.scenario");
    let text = bundled("shadow-cat").unwrap().replace("expect_above = 0.1", "expect_above = 1e6");
    assert!(text.contains("1e6"));
    fs::write(&file, text).unwrap();
    let out = moyal().arg("run").arg(&file).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_tolerance_scale_exits_with_two() {
    let out = moyal().args(["run", "wigner-cat", "--tolerance-scale", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_suite_exits_with_two() {
    let out = moyal().args(["check", "no-such-suite"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_prints_a_json_report() {
    let out = moyal().args(["check", "clifford-identities"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["suite"], "clifford-identities");
    assert_eq!(report["passed"], true);
}

#[test]
fn list_and_version() {
    let out = moyal().arg("list-scenarios").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for (name, _) in moyal_cli::BUNDLED {
        assert!(text.contains(name), "{name} missing");
    }
    let out = moyal().arg("version").output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains(moyal_cli::VERSION));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = moyal().args(["run", "shadow-cat", "--out"]).arg(dir.path()).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(read_dir_sorted(a.path()), read_dir_sorted(b.path()));
}

#[test]
fn env_var_sets_the_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = moyal().args(["run", "clifford-demo"]).env("MOYAL_OUT", tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("summary.json").exists());
}
