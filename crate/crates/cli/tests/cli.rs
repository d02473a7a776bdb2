use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use homlab_cli::catalogue::CATALOGUE;
use homlab_cli::config::{RunConfig, SCHEMA};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn homlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homlab")).args(args).env_remove("HOMLAB_BUDGET").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Column `col` of every data row.
fn column(csv: &str, col: &str) -> Vec<f64> {
    let mut lines = csv.lines().skip(1);
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == col).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn harmonic_fixture_reaches_sqrt3() {
    let o = homlab(&["run", "--config", fixture("1d_harmonic.cfg").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    let err = column(&csv, "error");
    assert!(*err.last().unwrap() < 2e-2);
    assert!(err.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(column(&csv, "n").last().copied(), Some(32.0));
}

#[test]
fn constant_coefficients_have_zero_schur_gaps() {
    let o = homlab(&["run", "--config", fixture("schur_identity.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = stdout(&o);
    for c in ["gap_m00inv", "gap_m01", "gap_m10", "gap_ms"] {
        assert!(column(&csv, c).iter().all(|&g| g <= 1e-9), "{c}");
    }
}

#[test]
fn missing_n_list_exits_2_naming_the_key() {
    let o = homlab(&["run", "--config", fixture("missing_n_list.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("experiment.n_list"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_key_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_cfg(dir.path(), "[experiment]\nkind = hconv\nn_list = 1,2,4\n\n[domain]\ncells = 3\n");
    let o = homlab(&["run", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("line 6") && e.contains("`cells`"), "{e}");
}

#[test]
fn failing_assertion_exits_1_with_summary() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("1d_harmonic.cfg")).unwrap().replace("limit = 1.7320508075688772", "limit = 2");
    let o = homlab(&["run", "--config", write_cfg(dir.path(), &text).to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).lines().any(|l| l.starts_with("FAIL kind=hconv check=final_error")), "{}", stderr(&o));
    // the table is still written
    assert_eq!(column(&stdout(&o), "n").len(), 6);
}

#[test]
fn strict_turns_warnings_into_failures() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("hconv.cfg")).unwrap().replace("limit = auto", "limit = estimate");
    let p = write_cfg(dir.path(), &text);
    let lax = homlab(&["run", "--config", p.to_str().unwrap()]);
    assert_eq!(lax.status.code(), Some(0));
    assert!(stderr(&lax).contains("WARN kind=hconv"));
    let strict = homlab(&["--strict", "run", "--config", p.to_str().unwrap()]);
    assert_eq!(strict.status.code(), Some(1));
    assert!(stderr(&strict).contains("FAIL kind=hconv check=warning"));
}

#[test]
fn budget_guard_honours_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_homlab")).args(["hconv"]).env("HOMLAB_BUDGET", "100").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("budget"), "{}", stderr(&o));
}

#[test]
fn kind_mismatch_and_bad_usage_exit_2() {
    let o = homlab(&["cell", "--config", fixture("1d_harmonic.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(homlab(&["run"]).status.code(), Some(2));
    assert_eq!(homlab(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(homlab(&["describe", "nothing"]).status.code(), Some(2));
}

#[test]
fn csv_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = fixture("1d_harmonic.cfg");
    for (dir, jobs) in [(&a, "1"), (&b, "3")] {
        let o = homlab(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--jobs", jobs]);
        assert!(o.status.success());
    }
    let x = std::fs::read(a.path().join("1d_harmonic.csv")).unwrap();
    let y = std::fs::read(b.path().join("1d_harmonic.csv")).unwrap();
    assert_eq!(x, y);

    let runs: Vec<String> = (0..2).map(|_| stdout(&homlab(&["recover", "--seed", "7"]))).collect();
    assert_eq!(runs[0], runs[1]);
    assert_ne!(runs[0], stdout(&homlab(&["recover", "--seed", "8"])));
}

#[test]
fn header_carries_schema_and_config_digest() {
    let text = std::fs::read_to_string(fixture("schur_identity.cfg")).unwrap();
    let o = homlab(&["run", "--config", fixture("schur_identity.cfg").to_str().unwrap(), "--seed", "5"]);
    let first = stdout(&o).lines().next().unwrap().to_string();
    let mut cfg = RunConfig::parse(&text).unwrap();
    cfg.set("probes", "seed", "5");
    assert_eq!(first, format!("# homlab schema=1 kind=schur-gap digest={}", cfg.digest()));
    assert_eq!(cfg.digest().len(), 64);
}

#[test]
fn list_matches_catalogue() {
    let o = homlab(&["list"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), CATALOGUE.len());
    for e in CATALOGUE {
        assert!(out.lines().any(|l| l.split_whitespace().next() == Some(e.name)), "{}", e.name);
    }
    assert_eq!(CATALOGUE.len(), 13);
}

#[test]
fn describe_names_the_statement() {
    let hconv = stdout(&homlab(&["describe", "hconv"]));
    assert!(hconv.contains("Definition of H-convergence"), "{hconv}");
    let cell = stdout(&homlab(&["describe", "cell"]));
    assert!(cell.contains("homogenised coefficient a_hom"), "{cell}");
}

#[test]
fn shipped_defaults_parse_and_match_their_kind() {
    for e in CATALOGUE {
        let cfg = RunConfig::parse(e.fixture).unwrap();
        assert_eq!(cfg.get("experiment", "kind"), Some(e.name));
        assert_eq!(stdout(&homlab(&["fixture", e.name])), e.fixture);
    }
}

#[test]
fn out_dir_uses_kind_when_unnamed() {
    let dir = tempfile::tempdir().unwrap();
    let o = homlab(&["helmholtz", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("helmholtz.csv")).unwrap();
    assert_eq!(column(&csv, "harmonic"), vec![0.0; 4]);
}

#[test]
fn every_shipped_fixture_runs_to_its_expected_exit_code() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let mut names: Vec<String> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert!(names.len() >= CATALOGUE.len() + 3);
    for name in names {
        let o = homlab(&["run", "--config", dir.join(&name).to_str().unwrap()]);
        let want = if name == "missing_n_list.cfg" { 2 } else { 0 };
        assert_eq!(o.status.code(), Some(want), "{name}: {}", stderr(&o));
        if want == 0 {
            assert!(stderr(&o).lines().all(|l| l.starts_with("PASS")), "{name}: {}", stderr(&o));
        }
    }
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    let pairs: Vec<(String, String)> =
        SCHEMA.iter().flat_map(|(s, keys)| keys.iter().map(move |k| (s.to_string(), k.to_string()))).collect();
    prop::collection::vec((prop::sample::select(pairs), "[a-z0-9_.,+-]{1,12}( [a-z0-9]{1,4})?"), 0..20).prop_map(|entries| {
        let mut c = RunConfig::default();
        for ((s, k), v) in entries {
            c.set(&s, &k, v);
        }
        c
    })
}

proptest! {
    #[test]
    fn parse_render_round_trip(cfg in arb_config()) {
        let text = cfg.render();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.digest(), cfg.digest());
    }

    #[test]
    fn layout_does_not_change_the_digest(cfg in arb_config()) {
        // comments, blank lines and spacing around `=` are not part of the config
        let noisy: String = cfg.render().lines().map(|l| if l.starts_with('[') { format!("\n# c\n{l}\n") } else { format!("  {}\n", l.replacen(" = ", "=", 1)) }).collect();
        prop_assert_eq!(RunConfig::parse(&noisy).unwrap().digest(), cfg.digest());
    }
}
