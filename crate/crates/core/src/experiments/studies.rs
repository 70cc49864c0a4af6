//! Convergence studies on the parametric diffusion problem.

use std::time::Instant;

use rayon::prelude::*;

use super::config::{StudyConfig, StudyKind};
use super::sobol::sobol_points;
use super::{fit_rate, RateFit};
use crate::fem::{CoefficientField, DiffusionModel, FemMesh, FemSolver, Source};
use crate::interpolant::CirculantFactor;
use crate::kernel::{frac, KernelSpec};
use crate::lattice::{cbc_construct, parse_genvec, read_genvec, CbcReport, Lattice};
use crate::numerics::Complex64;
use crate::weights::{derive, derive_product, DerivedParams, PdeWeightInput};
use crate::{Error, Result};

/// CBC-built quadrature vector for the truncation study (`n = 8192`, 512 dimensions, product weights).
pub const DIMTRUNC_GENVEC: &str = include_str!("../../data/dimtrunc-n8192-s512.txt");

pub const INTERP_HEADER: &str = "n,error,slope_so_far,seconds";
pub const DIMTRUNC_HEADER: &str = "s,error";

/// Model, weights and kernel for one configuration.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: DiffusionModel,
    pub params: DerivedParams,
    pub spec: KernelSpec,
}

pub fn setup_problem(cfg: &StudyConfig) -> Result<Problem> {
    let model = DiffusionModel::new(cfg.c, cfg.theta, cfg.s)?;
    let input = PdeWeightInput::new(cfg.p(), model.decay_sequence(cfg.s), cfg.delta)?;
    let params = derive(cfg.weights, &input, cfg.s)?;
    let spec = KernelSpec::new(params.alpha, &params.scheme, cfg.s)?.with_extended(cfg.extended);
    Ok(Problem { model, params, spec })
}

/// Lattice for `n` points: the configured vector file, else a CBC construction.
pub fn lattice_for(cfg: &StudyConfig, spec: &KernelSpec, n: u64) -> Result<(Lattice, Option<CbcReport>)> {
    match &cfg.genvec {
        Some(path) => Ok((read_genvec(path)?.lattice(Some(n), spec.s())?, None)),
        None => {
            let report = cbc_construct(spec, n, spec.s())?;
            Ok((report.lattice(), Some(report)))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpRow {
    pub n: u64,
    pub error: f64,
    pub slope_so_far: Option<f64>,
    pub seconds: f64,
}

impl InterpRow {
    pub fn csv_line(&self, timings: bool) -> String {
        let slope = self.slope_so_far.map_or_else(|| "NA".to_string(), |v| format!("{v:.6e}"));
        let secs = if timings { format!("{:.3}", self.seconds) } else { "NA".to_string() };
        format!("{},{:.12e},{},{}", self.n, self.error, slope, secs)
    }
}

#[derive(Debug, Clone)]
pub struct InterpStudy {
    pub rows: Vec<InterpRow>,
    pub fit: Option<RateFit>,
    pub params: DerivedParams,
}

impl InterpStudy {
    pub fn to_csv(&self, timings: bool) -> String {
        let mut out = format!("{INTERP_HEADER}\n");
        for r in &self.rows {
            out.push_str(&r.csv_line(timings));
            out.push('\n');
        }
        out
    }
}

fn solve_at(solver: &FemSolver, field: &CoefficientField, y: &[f64], s: usize) -> Result<Vec<f64>> {
    Ok(solver.solve_with_coefficients(&field.coefficients(y, s)?)?.values)
}

/// `√((1/(Ln)) Σ_ℓ Σ_k ‖u(y_ℓ + t_k) − u_n(y_ℓ + t_k)‖²_{L2(D)}` for the
/// kernel interpolant of the FEM solution on `lat`.
pub fn surrogate_error(
    spec: &KernelSpec,
    solver: &FemSolver,
    field: &CoefficientField,
    lat: &Lattice,
    shifts: &[Vec<f64>],
) -> Result<f64> {
    let n = lat.n();
    let s = spec.s();
    let data: Vec<Vec<f64>> = (1..=n)
        .into_par_iter()
        .map(|k| solve_at(solver, field, &lat.point_mod(k), s))
        .collect::<Result<_>>()?;
    let factor = CirculantFactor::new(spec, lat)?;
    let nodes = solver.mesh().unknowns();
    // one shared circulant spectrum; each node costs one forward transform
    let spectra: Vec<Vec<Complex64>> = (0..nodes)
        .into_par_iter()
        .map(|i| {
            let vals: Vec<f64> = data.iter().map(|u| u[i]).collect();
            Ok(factor.solve_spectrum(&vals)?)
        })
        .collect::<Result<_>>()?;
    drop(data);
    let mut total = 0.0;
    for y in shifts {
        let column = factor.shifted_spectrum(y)?;
        let approx: Vec<Vec<f64>> = spectra.par_iter().map(|a| factor.correlate(a, &column)).collect();
        let errs: Vec<f64> = (1..=n)
            .into_par_iter()
            .map(|k| {
                let p: Vec<f64> = lat.point_mod(k).iter().zip(y).map(|(t, v)| frac(t + v)).collect();
                let u = solve_at(solver, field, &p, s)?;
                let e: Vec<f64> = u.iter().enumerate().map(|(i, ui)| ui - approx[i][k as usize - 1]).collect();
                let norm = solver.l2_norm(&e)?;
                Ok(norm * norm)
            })
            .collect::<Result<_>>()?;
        total += errs.iter().sum::<f64>();
    }
    Ok((total / (shifts.len() as f64 * n as f64)).sqrt())
}

/// Interpolation error of the PDE surrogate across the configured `n` schedule.
/// `on_row` sees each row as soon as it is complete.
pub fn run_interp_convergence<F>(cfg: &StudyConfig, mut on_row: F) -> Result<InterpStudy>
where
    F: FnMut(&InterpRow) -> Result<()>,
{
    cfg.validate()?;
    let problem = setup_problem(cfg)?;
    log::info!(
        "weights {:?}: alpha = {}, lambda = {:.4}, theoretical rate {:.3}",
        cfg.weights,
        problem.params.alpha,
        problem.params.lambda,
        problem.params.rate
    );
    let mesh = FemMesh::new(cfg.mesh_level);
    let field = CoefficientField::new(&mesh, &problem.model);
    let solver = FemSolver::new(mesh, Source::X2);
    let shifts = sobol_points(cfg.s, cfg.samples, cfg.seed)?;
    let mut rows: Vec<InterpRow> = Vec::new();
    for &n in &cfg.n_list {
        let start = Instant::now();
        let (lat, _) = lattice_for(cfg, &problem.spec, n)?;
        let error = surrogate_error(&problem.spec, &solver, &field, &lat, &shifts)?;
        let mut ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let mut es: Vec<f64> = rows.iter().map(|r| r.error).collect();
        ns.push(n as f64);
        es.push(error);
        let slope_so_far = fit_rate(&ns, &es).ok().map(|f| f.slope);
        let row = InterpRow { n, error, slope_so_far, seconds: start.elapsed().as_secs_f64() };
        log::info!("n = {n}: error {error:.4e}");
        on_row(&row)?;
        rows.push(row);
    }
    let fit = fit_rate(
        &rows.iter().map(|r| r.n as f64).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.error).collect::<Vec<_>>(),
    )
    .ok();
    Ok(InterpStudy { rows, fit, params: problem.params })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimTruncRow {
    pub s: usize,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct DimTruncStudy {
    pub rows: Vec<DimTruncRow>,
    pub fit: Option<RateFit>,
    /// Slope predicted for `b_j ∝ j^{−θ}`: `−(θ − 1/2)`.
    pub expected_slope: f64,
}

impl DimTruncStudy {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{DIMTRUNC_HEADER}\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:.12e}\n", r.s, r.error));
        }
        out
    }
}

/// Quadrature lattice for the truncation study.
pub fn dimtrunc_lattice(cfg: &StudyConfig, model: &DiffusionModel) -> Result<Lattice> {
    let (n, s) = (cfg.quad_n, cfg.reference_dim);
    if let Some(path) = &cfg.genvec {
        return Ok(read_genvec(path)?.lattice(Some(n), s)?);
    }
    let shipped = parse_genvec(DIMTRUNC_GENVEC)?;
    if shipped.n == Some(n) && shipped.z.len() >= s {
        return Ok(shipped.lattice(None, s)?);
    }
    if !cfg.cbc_fallback {
        return Err(Error::Config(format!(
            "no generating vector for n = {n}, s = {s}; pass --genvec or enable the CBC fallback"
        )));
    }
    log::info!("building a quadrature vector by CBC for n = {n}, s = {s}");
    let input = PdeWeightInput::new(cfg.p(), model.decay_sequence(s), cfg.delta)?;
    let params = derive_product(&input, s)?;
    let spec = KernelSpec::new(params.alpha, &params.scheme, s)?.with_extended(false);
    Ok(cbc_construct(&spec, n, s)?.lattice())
}

/// Truncation levels `4, 8, ..., s'/2`.
pub fn truncation_levels(reference_dim: usize) -> Vec<usize> {
    std::iter::successors(Some(4usize), |&s| Some(2 * s))
        .take_while(|&s| s < reference_dim)
        .collect()
}

/// `√(∫∫ (u_{s'} − u_s)²)` for `s = 4, 8, ..., s'/2`, integrating over the
/// parameter by a rank-1 lattice rule.
pub fn run_dim_truncation<F>(cfg: &StudyConfig, mut on_row: F) -> Result<DimTruncStudy>
where
    F: FnMut(&DimTruncRow) -> Result<()>,
{
    let mut cfg = cfg.clone();
    cfg.kind = StudyKind::DimTruncation;
    cfg.validate()?;
    let sref = cfg.reference_dim;
    let model = DiffusionModel::new(cfg.c, cfg.theta, sref)?;
    let lat = dimtrunc_lattice(&cfg, &model)?;
    let mesh = FemMesh::new(cfg.mesh_level);
    let field = CoefficientField::new(&mesh, &model);
    let solver = FemSolver::new(mesh, Source::X2);
    let levels = truncation_levels(sref);
    let mut all = levels.clone();
    all.push(sref);
    let per_point: Vec<Vec<f64>> = (1..=lat.n())
        .into_par_iter()
        .map(|k| {
            let y = lat.point_mod(k);
            let coeffs = field.truncations(&y, &all)?;
            let reference = solver.solve_with_coefficients(&coeffs[levels.len()])?.values;
            levels
                .iter()
                .enumerate()
                .map(|(i, _)| {
                    let u = solver.solve_with_coefficients(&coeffs[i])?.values;
                    let d: Vec<f64> = reference.iter().zip(&u).map(|(a, b)| a - b).collect();
                    let e = solver.l2_norm(&d)?;
                    Ok(e * e)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(levels.len());
    for (i, &s) in levels.iter().enumerate() {
        let sum: f64 = per_point.iter().map(|v| v[i]).sum();
        let row = DimTruncRow { s, error: (sum / lat.n() as f64).sqrt() };
        on_row(&row)?;
        rows.push(row);
    }
    let max_s = cfg.fit_max_s.unwrap_or(sref / 4);
    let fit_rows: Vec<&DimTruncRow> = rows.iter().filter(|r| r.s <= max_s).collect();
    let fit = fit_rate(
        &fit_rows.iter().map(|r| r.s as f64).collect::<Vec<_>>(),
        &fit_rows.iter().map(|r| r.error).collect::<Vec<_>>(),
    )
    .ok();
    Ok(DimTruncStudy { rows, fit, expected_slope: -(cfg.theta - 0.5) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels() {
        assert_eq!(truncation_levels(512), vec![4, 8, 16, 32, 64, 128, 256]);
        assert_eq!(truncation_levels(8), vec![4]);
    }

    #[test]
    fn shipped_vector_is_valid() {
        let g = parse_genvec(DIMTRUNC_GENVEC).unwrap();
        assert_eq!(g.n, Some(8192));
        assert_eq!(g.z.len(), 512);
        g.lattice(None, 512).unwrap();
    }

    #[test]
    fn degenerate_run_emits_one_row() {
        let mut cfg = StudyConfig::new(StudyKind::InterpConvergence);
        cfg.s = 3;
        cfg.n_list = vec![1];
        cfg.samples = 1;
        cfg.mesh_level = 2;
        cfg.genvec = None;
        let mut seen = 0;
        let study = run_interp_convergence(&cfg, |_| {
            seen += 1;
            Ok(())
        });
        // CBC needs n ≥ 2, so a one-point study must come with a vector file
        assert!(study.is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.txt");
        crate::lattice::write_genvec(&path, &[1, 1, 1], 1).unwrap();
        cfg.genvec = Some(path);
        let study = run_interp_convergence(&cfg, |_| {
            seen += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(study.rows.len(), 1);
        assert_eq!(seen, 1);
        assert!(study.rows[0].error > 0.0);
        assert!(study.fit.is_none());
    }

    #[test]
    fn csv_layout() {
        let row = InterpRow { n: 16, error: 0.5, slope_so_far: None, seconds: 1.25 };
        assert_eq!(row.csv_line(false), "16,5.000000000000e-1,NA,NA");
        assert_eq!(row.csv_line(true), "16,5.000000000000e-1,NA,1.250");
    }
}
