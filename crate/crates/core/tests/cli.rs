use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn randlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

/// Relative path and content of every file under `dir`.
fn tree(dir: &Path) -> Vec<(String, String)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, String)>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read_to_string(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

fn write_scenario(dir: &Path, body: &str) -> String {
    let path = dir.join("s.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn empty_scenario_reports_all_unresolved() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "name = \"empty\"\n");
    let out = randlab(&["run", &path]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("== interaction.csv =="));
    let csv: Vec<&str> = stdout
        .lines()
        .skip_while(|l| *l != "== interaction.csv ==")
        .skip(2)
        .take(16)
        .collect();
    assert_eq!(csv.len(), 16);
    assert!(csv.iter().all(|l| l.contains(",unresolved,")));
}

#[test]
fn bundled_scenarios_match_golden_reports() {
    for name in ["fireworks_small", "kg_coding", "minpair", "conversion_sweep"] {
        let dir = tempfile::tempdir().unwrap();
        let scenario = scenarios().join(format!("{name}.toml"));
        let out = randlab(&[
            "run",
            scenario.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", text(&out.stderr));
        let golden = tree(&scenarios().join("golden").join(name));
        assert_eq!(tree(dir.path()), golden, "{name} differs from its golden report");
        assert_eq!(text(&out.stdout), golden.iter().find(|f| f.0 == "summary.txt").unwrap().1);
    }
}

#[test]
fn runs_are_byte_identical() {
    let scenario = scenarios().join("minpair.toml");
    let a = randlab(&["run", scenario.to_str().unwrap(), "--seed", "9"]);
    let b = randlab(&["run", scenario.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
    let c = randlab(&["run", scenario.to_str().unwrap(), "--seed", "10"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn parse_errors_name_the_line_and_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "name = \"bad\"\n\n[[experiment]\n");
    let out = randlab(&["run", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("line 3"), "{}", text(&out.stderr));
    let out = randlab(&["run", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_references_and_kinds_are_violations() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        r#"
name = "broken"

[[experiment]]
name = "mystery"
kind = "no_such_kind"

[[experiment]]
name = "missing"
kind = "verify_demuth"
params = { test = "nowhere" }
"#,
    );
    let out = randlab(&["run", &path]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("no_such_kind"));
    assert!(stdout.contains("nowhere"));
}

#[test]
fn subcommand_selects_one_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = scenarios().join("fireworks_small.toml");
    let out = randlab(&[
        "fireworks",
        "sweep",
        scenario.to_str().unwrap(),
        "--experiment",
        "sweep_sparse_k2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let file = "sweep_sparse_k2/failure_probability.csv";
    let golden = scenarios().join("golden/fireworks_small").join(file);
    assert_eq!(
        fs::read_to_string(dir.path().join(file)).unwrap(),
        fs::read_to_string(golden).unwrap()
    );
    assert!(!dir.path().join("sweep_dense_k2").exists());
}

#[test]
fn adhoc_experiment_from_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        r#"
name = "adhoc"

[[enumerator]]
name = "once"
entries = [{ stage = 3, strings = ["1"] }]
"#,
    );
    let out = randlab(&[
        "fireworks",
        "sweep",
        &path,
        "--adversaries",
        "once",
        "--k",
        "1",
        "--cap-bound",
        "constant:4",
        "--target-length",
        "8",
        "--horizon",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("4,1,1/2^2,1/2^2,true"), "{stdout}");
}

#[test]
fn dense_opens_flag_reads_a_file() {
    let scenario = scenarios().join("w2r_coding.toml");
    let opens = scenarios().join("dense_opens.txt");
    let out = randlab(&[
        "w2r",
        "claim2",
        scenario.to_str().unwrap(),
        "--dense-opens",
        opens.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert_eq!(stdout.matches("inside = true").count(), 4);
    assert!(stdout.contains("weakly-2-random,n-generic,may-compute (witnessed)"));
}
