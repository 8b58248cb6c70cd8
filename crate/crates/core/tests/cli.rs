use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_delayflock"));
    c.env_remove("FLOCK_OUT_DIR");
    c
}

fn scenario(name: &str) -> String {
    format!("{}/scenarios/{name}.toml", env!("CARGO_MANIFEST_DIR"))
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
}

#[test]
fn analyze_graph_reports_figure_metrics() {
    let o = bin().args(["analyze-graph", &scenario("fig2-digraph")]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(value(&s, "gamma_g"), Some("2"));
    assert_eq!(value(&s, "n_infinity"), Some("1"));
    assert_eq!(value(&s, "roots"), Some("1 2 3"));
    assert_eq!(value(&s, "neighbors_4"), Some("3"));
}

#[test]
fn check_condition_prints_certificate() {
    let o = bin().args(["check-condition", &scenario("fig2-digraph")]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(value(&s, "verdict"), Some("guaranteed"));
    assert_eq!(value(&s, "regime"), Some("critical"));

    let o = bin().args(["check-condition", &scenario("fig3-digraph")]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&stdout(&o), "verdict"), Some("not-guaranteed"));

    let o = bin().args(["check-condition", &scenario("discrete-fig2-digraph")]).output().unwrap();
    let s = stdout(&o);
    assert_eq!(value(&s, "verdict"), Some("guaranteed"));
    assert!(s.contains("warning="));
}

#[test]
fn invalid_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("fig2-digraph")).unwrap();

    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, text.replace("model = ", "colour = \"red\"\nmodel = ")).unwrap();
    let o = bin().args(["simulate", unknown.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    let no_tree = dir.path().join("no_tree.toml");
    std::fs::write(&no_tree, text.replace(", [3, 4]]", "]")).unwrap();
    let o = bin().args(["check-condition", no_tree.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    let disc = std::fs::read_to_string(scenario("discrete-fig2-digraph")).unwrap();
    let gate = dir.path().join("gate.toml");
    std::fs::write(&gate, disc.replace("h = 0.05", "h = 1.5")).unwrap();
    let o = bin().args(["simulate", gate.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stability gate"));

    let o = bin().args(["reproduce", "fig9-digraph"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .args(["sweep", &scenario("fig2-digraph"), "--axis", "gamma=1:2:3"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_exits_with_1() {
    let o = bin().args(["simulate", "/nonexistent/scenario.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

fn expect_outputs(dir: &Path, name: &str) {
    for suffix in ["trajectory.csv", "diameters.csv", "certificate.txt", "report.txt"] {
        let p = dir.join(format!("{name}.{suffix}"));
        assert!(p.is_file(), "missing {}", p.display());
    }
}

#[test]
fn simulate_writes_to_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .env("FLOCK_OUT_DIR", dir.path())
        .args(["simulate", &scenario("fig2-digraph"), "--t-end", "5"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert_eq!(value(&s, "defects"), Some("0"));
    expect_outputs(dir.path(), "fig2-digraph");
    let traj = std::fs::read_to_string(dir.path().join("fig2-digraph.trajectory.csv")).unwrap();
    assert!(traj.starts_with("# delayflock"));
    // 501 knots of 4 agents, plus the comment and header lines
    assert_eq!(traj.lines().count(), 501 * 4 + 2);
}

#[test]
fn out_flag_beats_env_dir() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let o = bin()
        .env("FLOCK_OUT_DIR", env_dir.path())
        .args(["reproduce", "discrete-fig2-digraph", "--out", flag_dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    expect_outputs(flag_dir.path(), "discrete-fig2-digraph");
    assert_eq!(std::fs::read_dir(env_dir.path()).unwrap().count(), 0);
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = bin()
        .args([
            "sweep",
            &scenario("fig2-digraph"),
            "--axis",
            "beta=0.1:0.5:3",
            "--axis",
            "scale=1e-9:1:2:log",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(value(&stdout(&o), "rows"), Some("6"));
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(&out)
        .unwrap();
    assert_eq!(rd.headers().unwrap().get(1), Some("beta"));
    assert_eq!(rd.records().count(), 6);
}
