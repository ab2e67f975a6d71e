use empc_core::beam::{build_benchmark_problem, check_boundary_matrices, BenchmarkConfig};
use empc_core::linalg::Vector;
use empc_core::sim::{run_closed_loop, PlantMode, SimulationConfig};

fn small(n: usize) -> empc_core::ProblemDefinition {
    build_benchmark_problem(&BenchmarkConfig {
        horizon: n,
        ..BenchmarkConfig::default()
    })
    .unwrap()
}

#[test]
fn boundary_matrices_pass() {
    assert!(check_boundary_matrices());
}

#[test]
fn zero_initial_state_stays_at_rest() {
    let p = small(5);
    let cfg = SimulationConfig {
        t_end: 0.125,
        ..SimulationConfig::default()
    };
    let run = run_closed_loop(&cfg, &p, Some(&Vector::zeros(36))).unwrap();
    assert_eq!(run.logs.len(), 16);
    for l in &run.logs {
        assert_eq!((l.u1, l.u2), (0.0, 0.0));
        assert_eq!(l.j_opt, 0.0);
    }
}

#[test]
fn perfect_and_fd_agree_initially() {
    let p = small(20);
    let base = SimulationConfig {
        t_end: 0.0625,
        ..SimulationConfig::default()
    };
    let a = run_closed_loop(&base, &p, None).unwrap();
    let b = run_closed_loop(
        &SimulationConfig {
            mode: PlantMode::FiniteDifference,
            ..base
        },
        &p,
        None,
    )
    .unwrap();
    for (x, y) in a.logs.iter().zip(&b.logs) {
        assert!((x.u1 - y.u1).abs() < 1e-2, "{} vs {}", x.u1, y.u1);
        assert!((x.mean_x1 - y.mean_x1).abs() < 1e-2);
    }
}

#[test]
fn physical_inputs_respect_bounds() {
    let p = small(20);
    let cfg = SimulationConfig {
        t_end: 1.0,
        certify: true,
        ..SimulationConfig::default()
    };
    let run = run_closed_loop(&cfg, &p, None).unwrap();
    assert!(run.certificate_failures.is_empty());
    for l in &run.logs {
        assert!(l.u1.abs() <= 0.5 + 1e-10 && l.u2.abs() <= 0.5 + 1e-10);
        assert!(l.mean_x1 <= 0.45 + 1e-8 && l.mean_x4 >= -0.3 - 1e-8);
    }
}
