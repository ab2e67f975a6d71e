use std::path::Path;
use std::process::{Command, Output};

fn empc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_empc")).args(args).output().expect("binary runs")
}

fn toy() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data/toy_z_ge_1.json")
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn no_arguments_prints_usage() {
    let o = empc(&[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(empc(&["solve", "--bogus"]).status.code(), Some(1));
}

#[test]
fn help_documents_flags() {
    let o = empc(&["solve", "--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for flag in ["--no-visited", "--budget", "--tol-violation", "--tol-lambda", "--tol-singular", "--oracle", "--warm"] {
        assert!(text.contains(flag), "{flag} missing");
    }
}

#[test]
fn toy_solve() {
    let o = empc(&["solve", "--problem", &toy(), "--theta", "1,0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("z* = 1\n"), "{text}");
    assert!(text.contains("active set = 0x1"), "{text}");
}

#[test]
fn toy_solve_with_oracles() {
    for oracle in ["enumerate", "dual"] {
        let o = empc(&["solve", "--problem", &toy(), "--theta", "1,0", "--oracle", oracle]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains("active set = 0x1"));
    }
}

#[test]
fn budget_exit_code() {
    let o = empc(&["solve", "--problem", &toy(), "--theta", "1,0", "--no-visited", "--budget", "0"]);
    // a zero budget is rejected as invalid input
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_file_is_io_error() {
    let o = empc(&["solve", "--problem", "/nonexistent/p.json", "--theta", "1,0"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn wrong_theta_length() {
    let o = empc(&["solve", "--problem", &toy(), "--theta", "1,0,3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn infeasible_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inf.json");
    let (p, _) = empc_core::testing::infeasible_problem();
    p.save(&path).unwrap();
    let o = empc(&["solve", "--problem", path.to_str().unwrap(), "--theta", "1,0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("Infeasible"));
    let b = empc(&["solve", "--problem", path.to_str().unwrap(), "--theta", "1,0", "--no-visited", "--budget", "20"]);
    assert_eq!(b.status.code(), Some(3));
}

#[test]
fn lift_dumps_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let o = empc(&["lift", "--problem", &toy(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for name in ["H", "F", "G", "S", "W", "const"] {
        let m = empc_core::io::load_matrix(&dir.path().join(format!("{name}.txt"))).unwrap();
        assert!(m.nrows() > 0);
    }
    let g = std::fs::read_to_string(dir.path().join("G.txt")).unwrap();
    assert_eq!(g, "1 1\n-1.0000000000000000e0\n");
}

#[test]
fn beam_build_then_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("beam10.json");
    let o = empc(&["beam", "build", "--horizon", "10", "--out", prob.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("p_tilde = 58"));

    let csv = dir.path().join("log.csv");
    let o = empc(&["simulate", "--problem", prob.to_str().unwrap(), "--t-end", "0.25", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,t,u1,u2,j_opt,cumulative_cost,mean_x1,mean_x4,active_set,candidates_visited,licq_failures,kkt_solves,solve_time_s,state_norm"
    );
    assert_eq!(lines.count(), 32);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("r.json");
    assert_eq!(empc(&["random", "--seed", "9", "--out", prob.to_str().unwrap()]).status.code(), Some(0));
    let p = empc_core::ProblemDefinition::load(&prob).unwrap();
    let x0 = vec!["0.1"; p.nx()].join(",");
    let run = |out: &Path| {
        let o = empc(&[
            "simulate", "--problem", prob.to_str().unwrap(), "--h", "0.1", "--t-end", "2", "--x0", &x0, "--seed", "3",
            "--no-timing", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out).unwrap()
    };
    let a = run(&dir.path().join("a.csv"));
    let b = run(&dir.path().join("b.csv"));
    assert_eq!(a, b);
}

#[test]
fn random_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    empc(&["random", "--seed", "4", "--out", a.to_str().unwrap()]);
    empc(&["random", "--seed", "4", "--out", b.to_str().unwrap()]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn benchmark_table_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = empc(&["benchmark", "--horizons", "20", "--algorithms", "eMPC", "--t-end", "0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "N,algorithm,runtime_s,J_d,p_tilde,log2_candidates");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "20");
    assert_eq!(row[1], "eMPC");
    assert_eq!(row[4], "118");
}
