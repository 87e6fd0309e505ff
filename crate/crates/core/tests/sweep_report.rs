use std::path::Path;
use std::sync::Arc;

use pk_laplace::nonlinearity::ZeroTerm;
use pk_laplace::report::{emit_report, parse_spec_str, read_report, render, run_sweep, ReportFormat, CSV_HEADER};
use pk_laplace::solver::SolverConfig;
use pk_laplace::{ExponentProfile, ProblemSpec};

const EXAMPLE: &str = r#"{"T": 3, "p": "const:2", "nonlinearity": "example1-corrected",
    "alpha": 1, "beta": 1, "gamma": 0.1, "lambda": 1, "solver": {"n_starts": 16, "seed": 5}}"#;

fn example() -> (ProblemSpec, SolverConfig) {
    let parsed = parse_spec_str(EXAMPLE, Path::new("example.json")).unwrap();
    (parsed.spec, parsed.solver)
}

#[test]
fn free_template_gives_one_trivial_point_per_cell() {
    let spec = ProblemSpec::new(
        ExponentProfile::linear(4, 2.0, 1.0).unwrap(),
        Arc::new(ZeroTerm),
        Arc::new(ZeroTerm),
        1.0,
        1.0,
    )
    .unwrap();
    let cfg = SolverConfig { n_starts: 8, ..Default::default() };
    let report = run_sweep(&spec, &[0.1, 1.0, 10.0], &[0.5, 2.0], &cfg).unwrap();
    assert_eq!(report.cells.len(), 6);
    for c in &report.cells {
        assert_eq!((c.n_critical, c.n_nontrivial), (1, 0));
        assert!(!c.theorem_consistent);
        assert_eq!(c.min_energy, Some(0.0));
    }
}

#[test]
fn single_trivial_cell_csv() {
    let spec = ProblemSpec::new(
        ExponentProfile::constant(2, 2.0).unwrap(),
        Arc::new(ZeroTerm),
        Arc::new(ZeroTerm),
        1.0,
        1.0,
    )
    .unwrap();
    let report = run_sweep(&spec, &[1.0], &[1.0], &SolverConfig { n_starts: 2, ..Default::default() }).unwrap();
    let csv = render(&report, ReportFormat::Csv);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(
        lines[1],
        "1.0000000000000000e0,1.0000000000000000e0,1,0,0.0000000000000000e0,0.0000000000000000e0,0,0"
    );
}

#[test]
fn json_round_trip() {
    let (spec, cfg) = example();
    let report = run_sweep(&spec, &[0.05, 0.1], &[1.0, 2.5], &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    emit_report(&report, ReportFormat::Json, &path).unwrap();
    let back = read_report(&path).unwrap();
    assert_eq!(back, report);
    for (a, b) in back.cells.iter().zip(&report.cells) {
        assert_eq!((a.n_critical, a.n_nontrivial), (b.n_critical, b.n_nontrivial));
    }
    // csv from the re-read report is identical
    assert_eq!(render(&back, ReportFormat::Csv), render(&report, ReportFormat::Csv));
}

#[test]
fn io_errors_carry_the_path() {
    let (spec, cfg) = example();
    let report = run_sweep(&spec, &[0.1], &[1.0], &cfg).unwrap();
    let err = emit_report(&report, ReportFormat::Csv, Path::new("/nonexistent/dir/r.csv")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir/r.csv"));
    assert!(read_report(Path::new("/nonexistent/r.json")).is_err());
}

#[test]
fn reruns_are_byte_identical_except_wall_time() {
    let (spec, cfg) = example();
    let mut a = run_sweep(&spec, &[0.05, 0.15], &[0.5, 3.0], &cfg).unwrap();
    let mut b = run_sweep(&spec, &[0.05, 0.15], &[0.5, 3.0], &cfg).unwrap();
    assert_eq!(render(&a, ReportFormat::Csv), render(&b, ReportFormat::Csv));
    a.wall_time_seconds = 0.0;
    b.wall_time_seconds = 0.0;
    assert_eq!(render(&a, ReportFormat::Json), render(&b, ReportFormat::Json));
}

#[test]
fn more_starts_never_lose_points() {
    let (spec, cfg) = example();
    let gammas = [0.05, 0.15];
    let lambdas = [0.5, 1.5, 3.0];
    let few = run_sweep(&spec, &gammas, &lambdas, &SolverConfig { n_starts: 10, ..cfg.clone() }).unwrap();
    let many = run_sweep(&spec, &gammas, &lambdas, &SolverConfig { n_starts: 30, ..cfg }).unwrap();
    for (a, b) in few.cells.iter().zip(&many.cells) {
        assert!(b.n_critical >= a.n_critical, "({}, {}): {} -> {}", a.gamma, a.lambda, a.n_critical, b.n_critical);
        for p in &a.points {
            assert!(b.points.iter().any(|q| q.point.sup_distance(&p.point) <= 1e-6));
        }
    }
}

#[test]
fn nontrivial_never_exceeds_total() {
    let (spec, cfg) = example();
    let report = run_sweep(&spec, &[0.02, 0.1], &[0.3, 3.0], &cfg).unwrap();
    for c in &report.cells {
        assert!(c.n_nontrivial <= c.n_critical);
        assert_eq!(c.theorem_consistent, c.n_critical >= 3 && c.n_nontrivial >= 2);
        assert!(c.error.is_none());
    }
    assert!(report.constants.is_some());
}
