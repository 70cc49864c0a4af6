mod common;

use std::process::Command;

use lattice_kernel::experiments::sobol::sobol_points;
use lattice_kernel::experiments::studies::{run_interp_convergence, setup_problem, surrogate_error};
use lattice_kernel::experiments::{StudyConfig, StudyKind};
use lattice_kernel::fem::{CoefficientField, FemMesh, FemSolver, Source};
use lattice_kernel::interpolant::CirculantFactor;
use lattice_kernel::kernel::frac;
use lattice_kernel::lattice::cbc_construct;
use lattice_kernel::Interpolant;

fn small_config() -> StudyConfig {
    let mut cfg = StudyConfig::new(StudyKind::InterpConvergence);
    cfg.s = 4;
    cfg.n_list = vec![16, 32, 64];
    cfg.samples = 3;
    cfg.mesh_level = 3;
    cfg.timings = false;
    cfg
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn csv_identical_across_thread_counts() {
    let cfg = small_config();
    let one = in_pool(1, || run_interp_convergence(&cfg, |_| Ok(())).unwrap().to_csv(false));
    let three = in_pool(3, || run_interp_convergence(&cfg, |_| Ok(())).unwrap().to_csv(false));
    assert_eq!(one, three);
    assert_eq!(one.lines().count(), 4);
}

struct Setup {
    spec: lattice_kernel::KernelSpec,
    solver: FemSolver,
    field: CoefficientField,
}

fn setup(cfg: &StudyConfig) -> Setup {
    let problem = setup_problem(cfg).unwrap();
    let mesh = FemMesh::new(cfg.mesh_level);
    let field = CoefficientField::new(&mesh, &problem.model);
    Setup { spec: problem.spec, solver: FemSolver::new(mesh, Source::X2), field }
}

#[test]
fn shared_spectrum_matches_per_node_builds() {
    let cfg = small_config();
    let st = setup(&cfg);
    let lat = cbc_construct(&st.spec, 32, cfg.s).unwrap().lattice();
    let data: Vec<Vec<f64>> = (1..=32)
        .map(|k| {
            let c = st.field.coefficients(&lat.point_mod(k), cfg.s).unwrap();
            st.solver.solve_with_coefficients(&c).unwrap().values
        })
        .collect();
    let factor = CirculantFactor::new(&st.spec, &lat).unwrap();
    for i in 0..st.solver.mesh().unknowns() {
        let vals: Vec<f64> = data.iter().map(|u| u[i]).collect();
        let shared = factor.solve(&vals).unwrap();
        let own = Interpolant::build(&st.spec, &lat, &vals).unwrap();
        let scale = own.coeffs().iter().map(|a| a.abs()).fold(0.0, f64::max);
        for (a, b) in shared.iter().zip(own.coeffs()) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn surrogate_error_matches_pointwise_evaluation() {
    let cfg = small_config();
    let st = setup(&cfg);
    let n = 16;
    let lat = cbc_construct(&st.spec, n, cfg.s).unwrap().lattice();
    let shifts = sobol_points(cfg.s, 2, 0).unwrap();
    let fast = surrogate_error(&st.spec, &st.solver, &st.field, &lat, &shifts).unwrap();

    let solve = |y: &[f64]| {
        let c = st.field.coefficients(y, cfg.s).unwrap();
        st.solver.solve_with_coefficients(&c).unwrap().values
    };
    let data: Vec<Vec<f64>> = (1..=n).map(|k| solve(&lat.point_mod(k))).collect();
    let nodes = st.solver.mesh().unknowns();
    let itps: Vec<Interpolant> = (0..nodes)
        .map(|i| Interpolant::build(&st.spec, &lat, &data.iter().map(|u| u[i]).collect::<Vec<_>>()).unwrap())
        .collect();
    let mut total = 0.0;
    for y in &shifts {
        for k in 1..=n {
            let p: Vec<f64> = lat.point_mod(k).iter().zip(y).map(|(t, v)| frac(t + v)).collect();
            let exact = solve(&p);
            let e: Vec<f64> = (0..nodes).map(|i| exact[i] - itps[i].evaluate(&p).unwrap()).collect();
            total += st.solver.l2_norm(&e).unwrap().powi(2);
        }
    }
    let slow = (total / (2 * n) as f64).sqrt();
    assert!((fast - slow).abs() <= 1e-9 * slow, "{fast} vs {slow}");
}

#[test]
fn error_invariant_under_shift_permutation() {
    let cfg = small_config();
    let st = setup(&cfg);
    let lat = cbc_construct(&st.spec, 16, cfg.s).unwrap().lattice();
    let mut shifts = sobol_points(cfg.s, 4, 0).unwrap();
    let a = surrogate_error(&st.spec, &st.solver, &st.field, &lat, &shifts).unwrap();
    shifts.reverse();
    shifts.swap(0, 2);
    let b = surrogate_error(&st.spec, &st.solver, &st.field, &lat, &shifts).unwrap();
    assert!((a - b).abs() <= 1e-12 * a);
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lattice-kernel"))
}

#[test]
fn cli_cbc_writes_vector_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z.txt");
    let status = cli()
        .args(["cbc", "--weights", "spod", "--p", "0.4545", "--s", "10", "--n", "64", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body.len(), 10);
    assert_eq!(body[0], "1 1");
}

#[test]
fn cli_exit_codes() {
    assert_eq!(cli().arg("selftest").output().unwrap().status.code(), Some(0));
    let bad = cli().args(["interp-study", "--n-list", "64,32"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("strictly increasing"));
    let unknown = cli().args(["interp-study", "--bogus"]).output().unwrap();
    assert_ne!(unknown.status.code(), Some(0));
    let pod = cli().args(["cbc", "--weights", "pod", "--p", "0.5", "--n", "16"]).output().unwrap();
    assert_eq!(pod.status.code(), Some(1));
}

#[test]
fn cli_study_with_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("study.conf");
    let out = dir.path().join("rows.csv");
    std::fs::write(&conf, "# small run\ns = 3\nn-list = 8,16,32\nL = 2\nmesh-level = 2\ntimings = false\n").unwrap();
    let status = cli().args(["interp-study", "--config"]).arg(&conf).args(["--n-list", "8,16"]).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,error,slope_so_far,seconds");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("8,") && lines[1].ends_with(",NA,NA"));
}
