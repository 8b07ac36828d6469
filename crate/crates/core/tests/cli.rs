use multiauto::cli_runner::{run_experiment, sha256_hex, ExperimentConfig, ExperimentKind, RawConfig};
use multiauto::Error;
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn bundled() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("examples"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    v.sort();
    v
}

fn multiauto(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multiauto")).args(args).output().unwrap()
}

fn run_cfg(cfg: &Path, out: &Path) -> Output {
    multiauto(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("exp.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

fn result(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("result.json")).unwrap()).unwrap()
}

const MINIMAL: &str = "[experiment]\nkind = aa_test\n\n[function]\ncatalogue = sin_sqrt2\n\n[probe]\nfreqs = 1, sqrt2\n";

#[test]
fn bundled_configs_round_trip() {
    let files = bundled();
    assert!(files.len() >= 10);
    for f in files {
        let text = std::fs::read_to_string(&f).unwrap();
        let cfg = ExperimentConfig::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        let again = ExperimentConfig::parse(&cfg.print()).unwrap();
        assert_eq!(cfg, again, "{}", f.display());
        assert_eq!(again.print(), cfg.print());
    }
}

#[test]
fn config_grammar_errors() {
    let bad = [
        ("key = 1\n", "before any section"),
        ("[experiment]\nkind = aa_test\n[experiment]\n", "duplicate section"),
        ("[experiment]\nkind = aa_test\nkind = heat\n", "duplicate key"),
        ("[experiment]\nkind\n", "missing ="),
        ("[experiment]\nkind =\n", "empty value"),
        ("[Experiment]\nkind = aa_test\n", "bad section name"),
        ("[experiment\nkind = aa_test\n", "unclosed header"),
    ];
    for (text, why) in bad {
        let e = RawConfig::parse(text).and_then(ExperimentConfig::from_raw).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{why}: {e}");
    }
    for text in [
        "[experiment]\nkind = nope\n",
        "[experiment]\nkind = aa_test\nexpect = maybe\n",
        "[experiment]\nkind = aa_test\nseed = -1\n",
        "[experiment]\nkind = aa_test\n\n[memory]\na = 1\n",
        "[function]\ncatalogue = levitan\n",
    ] {
        assert!(matches!(ExperimentConfig::parse(text), Err(Error::Config(_))), "{text}");
    }
}

#[test]
fn every_kind_has_a_name() {
    for k in ExperimentKind::ALL {
        assert_eq!(ExperimentKind::from_name(k.name()).unwrap(), k);
        assert!(!k.sections().is_empty());
    }
}

#[test]
fn section_3_1_config_exits_zero() {
    let out = tempfile::tempdir().unwrap();
    let o = run_cfg(&example("vie_section_3_1.cfg"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = result(out.path());
    assert_eq!(r["passed"], true);
    let trace = &r["report"]["trace"];
    assert!(trace["residual"].as_f64().unwrap() <= 1e-5);
    assert!((trace["certificate"]["theta"].as_f64().unwrap() - 0.1).abs() < 1e-9);
    let csv = std::fs::read_to_string(out.path().join("solution.csv")).unwrap();
    assert!(csv.starts_with("t1,t2,value,err_bound\n"));
    assert_eq!(csv.lines().count(), 33 * 33 + 1);
}

#[test]
fn manifest_lists_existing_files() {
    let out = tempfile::tempdir().unwrap();
    let o = run_cfg(&example("heat_sin_sqrt2.cfg"), out.path());
    assert_eq!(o.status.code(), Some(0));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(out.path().join("manifest.json")).unwrap()).unwrap();
    let arts = m["artifacts"].as_array().unwrap();
    assert_eq!(arts.len(), 3);
    for a in arts {
        let bytes = std::fs::read(out.path().join(a["file"].as_str().unwrap())).unwrap();
        assert_eq!(bytes.len() as u64, a["bytes"].as_u64().unwrap());
        assert_eq!(sha256_hex(&bytes), a["sha256"].as_str().unwrap());
    }
    let canonical = std::fs::read(out.path().join("config.cfg")).unwrap();
    assert_eq!(m["config_sha256"].as_str().unwrap(), sha256_hex(&canonical));
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["verdict"]["passed"], true);
    assert!(m["started"].as_str().unwrap() <= m["finished"].as_str().unwrap());
}

#[test]
fn unknown_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), &format!("{MINIMAL}colour = blue\n"));
    let o = run_cfg(&cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key `colour` in [probe]"));
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["[experiment\nkind = aa_test\n", "just text\n", ""] {
        let cfg = write_cfg(dir.path(), text);
        assert_eq!(run_cfg(&cfg, &dir.path().join("out")).status.code(), Some(2), "{text:?}");
    }
    assert_eq!(run_cfg(&dir.path().join("missing.cfg"), dir.path()).status.code(), Some(2));
    assert_eq!(multiauto(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn invalid_certificate_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(example("vie_section_3_1.cfg")).unwrap().replace("param = 0.1", "param = 1.5");
    let o = run_cfg(&write_cfg(dir.path(), &text), &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("CertificateInvalid: theta="));
}

#[test]
fn verdict_failure_exits_one_unless_expected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cfg(&example("orthant_counterexample.cfg"), &dir.path().join("a"));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(result(&dir.path().join("a"))["passed"], false);
    let text = std::fs::read_to_string(example("orthant_counterexample.cfg"))
        .unwrap()
        .replace("expect = fail\n", "");
    let o = run_cfg(&write_cfg(dir.path(), &text), &dir.path().join("b"));
    assert_eq!(o.status.code(), Some(1));
    // a passing verdict that was expected to fail
    let cfg = write_cfg(dir.path(), &MINIMAL.replace("kind = aa_test\n", "kind = aa_test\nexpect = fail\n"));
    assert_eq!(run_cfg(&cfg, &dir.path().join("c")).status.code(), Some(1));
}

#[test]
fn runs_are_byte_identical() {
    for name in ["aa_sin_sqrt2.cfg", "vie_section_3_1.cfg", "memory_nonlinear.cfg"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::parse(&std::fs::read_to_string(example(name)).unwrap()).unwrap();
        let ra = run_experiment(&cfg, Some(a.path())).unwrap();
        let rb = run_experiment(&cfg, Some(b.path())).unwrap();
        assert_eq!(ra.artifacts.len(), rb.artifacts.len());
        for (x, y) in ra.artifacts.iter().zip(&rb.artifacts) {
            assert_eq!(x.file, y.file);
            assert_eq!(
                std::fs::read(a.path().join(&x.file)).unwrap(),
                std::fs::read(b.path().join(&y.file)).unwrap(),
                "{name}: {}",
                x.file
            );
        }
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = example("bikernel.cfg");
    let one = Command::new(env!("CARGO_BIN_EXE_multiauto"))
        .env("MULTIAUTO_THREADS", "1")
        .args(["run", cfg.to_str().unwrap(), "--out", a.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(run_cfg(&cfg, b.path()).status.code(), Some(0));
    for f in ["result.json", "solution.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
    let bad = Command::new(env!("CARGO_BIN_EXE_multiauto"))
        .env("MULTIAUTO_THREADS", "many")
        .arg("version")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn seed_defaults_and_overrides() {
    let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
    assert_eq!(cfg.seed, multiauto::numerics::rng::DEFAULT_SEED);
    let seeded = ExperimentConfig::parse(&MINIMAL.replace("kind = aa_test\n", "kind = aa_test\nseed = 42\n")).unwrap();
    assert_eq!(seeded.seed, 42);
    assert!(seeded.print().contains("seed = 42"));
}

#[test]
fn catalogue_listing() {
    let o = multiauto(&["catalogue"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for needle in ["levitan (Example 2.6)", "green_exp (Example 2.3)", "tensor (Example 2.5)"] {
        assert!(text.contains(needle), "{needle}");
    }
    let all = text.lines().count();
    assert_eq!(all, multiauto::function_core::catalogue::entries().len());
    let kernels = String::from_utf8(multiauto(&["catalogue", "kernel"]).stdout).unwrap();
    assert!(kernels.lines().count() > 0 && kernels.lines().count() < all);
    assert!(kernels.lines().all(|l| l.contains("[kernel]")));
    let empty = String::from_utf8(multiauto(&["catalogue", ""]).stdout).unwrap();
    assert_eq!(empty.lines().count(), all);
}

#[test]
fn version_prints_crate_version() {
    let o = multiauto(&["version"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), format!("multiauto {}", env!("CARGO_PKG_VERSION")));
}

#[test]
fn every_bundled_config_meets_its_expectation() {
    for f in bundled() {
        let out = tempfile::tempdir().unwrap();
        let o = run_cfg(&f, out.path());
        assert_eq!(o.status.code(), Some(0), "{}: {}", f.display(), String::from_utf8_lossy(&o.stderr));
    }
}
