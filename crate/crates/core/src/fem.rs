//! P1 finite elements for `−∇·(a(x, y)∇u) = q` on the unit square with
//! homogeneous Dirichlet data and the periodic random coefficient
//! `a(x, y) = a₀ + (1/√6) Σ_j sin(2π y_j) ψ_j(x)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::numerics::{zeta, NumericsError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FemError {
    #[error("invalid diffusion model: {0}")]
    InvalidModel(String),
    #[error("coefficient {value} outside [{min}, {max}]")]
    CoefficientOutOfBounds { value: f64, min: f64, max: f64 },
    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("expected a vector of length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("parameter has {got} coordinates but {need} are required")]
    DimensionMismatch { need: usize, got: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

const BOUNDS_SLACK: f64 = 1e-12;

/// Relative residual at which conjugate gradients stops.
pub const CG_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionModel {
    pub a0: f64,
    pub c: f64,
    pub theta: f64,
    /// Number of terms kept in the expansion.
    pub s: usize,
    a_min: f64,
    a_max: f64,
}

impl DiffusionModel {
    pub fn new(c: f64, theta: f64, s: usize) -> Result<Self, FemError> {
        Self::with_mean(1.0, c, theta, s)
    }

    pub fn with_mean(a0: f64, c: f64, theta: f64, s: usize) -> Result<Self, FemError> {
        if !(c >= 0.0) || !(theta > 1.0) {
            return Err(FemError::InvalidModel(format!("need c ≥ 0 and theta > 1, got c = {c}, theta = {theta}")));
        }
        let spread = c / 6f64.sqrt() * zeta(theta)?;
        let (a_min, a_max) = (a0 - spread, a0 + spread);
        if !(a_min > 0.0) {
            return Err(FemError::InvalidModel(format!("a_min = {a_min} is not positive")));
        }
        Ok(DiffusionModel { a0, c, theta, s, a_min, a_max })
    }

    pub fn a_min(&self) -> f64 {
        self.a_min
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    /// `ψ_j(x) = c j^{−θ} sin(jπx₁) sin(jπx₂)` for 1-based `j`.
    pub fn psi(&self, j: usize, x: [f64; 2]) -> f64 {
        let jf = j as f64;
        self.c * jf.powf(-self.theta) * (jf * PI * x[0]).sin() * (jf * PI * x[1]).sin()
    }

    /// `b_j = c j^{−θ} / (√6 a_min)` for `j = 1..=s`.
    pub fn decay_sequence(&self, s: usize) -> Vec<f64> {
        (1..=s)
            .map(|j| self.c * (j as f64).powf(-self.theta) / (6f64.sqrt() * self.a_min))
            .collect()
    }

    pub fn with_dimension(&self, s: usize) -> Self {
        DiffusionModel { s, ..self.clone() }
    }
}

/// `sin(2π {y})`; the reduction makes the coefficient periodic in each `y_j`.
#[inline]
fn periodic_sin(y: f64) -> f64 {
    (2.0 * PI * crate::kernel::frac(y)).sin()
}

pub fn diffusion_at(model: &DiffusionModel, x: [f64; 2], y: &[f64]) -> Result<f64, FemError> {
    if y.len() < model.s {
        return Err(FemError::DimensionMismatch { need: model.s, got: y.len() });
    }
    let mut a = model.a0;
    for j in 0..model.s {
        a += periodic_sin(y[j]) * model.psi(j + 1, x) / 6f64.sqrt();
    }
    if a < model.a_min - BOUNDS_SLACK || a > model.a_max + BOUNDS_SLACK {
        return Err(FemError::CoefficientOutOfBounds { value: a, min: model.a_min, max: model.a_max });
    }
    Ok(a)
}

/// Uniform triangulation of `[0,1]²` with `2^m` cells per side, each cell
/// cut along its lower-left to upper-right diagonal.
#[derive(Debug, Clone)]
pub struct FemMesh {
    pub m: u32,
    pub h: f64,
    /// Cells per side.
    pub cells: usize,
    /// Grid nodes, row-major in `(x₁, x₂)` with `x₁` fastest.
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Unknown index of each grid node; `None` on the boundary.
    pub interior_index: Vec<Option<usize>>,
    /// Grid node of each unknown.
    pub interior_nodes: Vec<usize>,
}

impl FemMesh {
    pub fn new(m: u32) -> Self {
        let cells = 1usize << m;
        let h = 1.0 / cells as f64;
        let side = cells + 1;
        let id = |i: usize, j: usize| j * side + i;
        let mut nodes = Vec::with_capacity(side * side);
        let mut interior_index = Vec::with_capacity(side * side);
        let mut interior_nodes = Vec::new();
        for j in 0..side {
            for i in 0..side {
                nodes.push([i as f64 * h, j as f64 * h]);
                if i == 0 || j == 0 || i == cells || j == cells {
                    interior_index.push(None);
                } else {
                    interior_index.push(Some(interior_nodes.len()));
                    interior_nodes.push(id(i, j));
                }
            }
        }
        let mut triangles = Vec::with_capacity(2 * cells * cells);
        for j in 0..cells {
            for i in 0..cells {
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        FemMesh { m, h, cells, nodes, triangles, interior_index, interior_nodes }
    }

    pub fn unknowns(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1])).abs()
    }

    /// `∫ ∇φ_a·∇φ_b` over triangle `t` for its local vertices.
    fn local_stiffness(&self, t: usize) -> [[f64; 3]; 3] {
        let v = self.triangles[t].map(|i| self.nodes[i]);
        let area = self.area(t);
        let mut g = [[0.0; 2]; 3];
        for a in 0..3 {
            let (p, q) = (v[(a + 1) % 3], v[(a + 2) % 3]);
            g[a] = [p[1] - q[1], q[0] - p[0]];
        }
        let mut k = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                k[a][b] = (g[a][0] * g[b][0] + g[a][1] * g[b][1]) / (4.0 * area);
            }
        }
        k
    }

    /// Interior vector extended by zero boundary values.
    pub fn full_values(&self, interior: &[f64]) -> Vec<f64> {
        self.interior_index
            .iter()
            .map(|ix| ix.map_or(0.0, |i| interior[i]))
            .collect()
    }
}

/// Sparse symmetric matrix in compressed rows.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for r in 0..self.dim() {
            let mut acc = 0.0;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.val[p] * x[self.col[p]];
            }
            out[r] = acc;
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        (self.row_ptr[r]..self.row_ptr[r + 1])
            .find(|&p| self.col[p] == c)
            .map_or(0.0, |p| self.val[p])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|r| self.get(r, r)).collect()
    }
}

/// Right-hand side `q`.
#[derive(Clone, Copy)]
pub enum Source<'a> {
    /// `q(x) = x₂`, integrated exactly.
    X2,
    /// Arbitrary `q`, replaced by its nodal interpolant and integrated exactly.
    Interpolated(&'a (dyn Fn([f64; 2]) -> f64 + Sync)),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FemSolution {
    /// Values at interior nodes; boundary values are zero.
    pub values: Vec<f64>,
    pub iterations: usize,
}

impl FemSolution {
    /// `(x₁, x₂, value)` rows over all grid nodes.
    pub fn to_csv(&self, mesh: &FemMesh) -> String {
        let mut out = String::from("x1,x2,value\n");
        for (p, v) in mesh.nodes.iter().zip(mesh.full_values(&self.values)) {
            let _ = writeln!(out, "{},{},{:e}", p[0], p[1], v);
        }
        out
    }
}

/// Mesh, sparsity pattern and load vector, reused across parameter values.
#[derive(Debug, Clone)]
pub struct FemSolver {
    mesh: FemMesh,
    pattern: CsrMatrix,
    /// CSR slot of each local pair; `usize::MAX` when either vertex is on the boundary.
    slots: Vec<[[usize; 3]; 3]>,
    local: Vec<[[f64; 3]; 3]>,
    load: Vec<f64>,
}

impl FemSolver {
    pub fn new(mesh: FemMesh, source: Source<'_>) -> Self {
        let n = mesh.unknowns();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for tri in &mesh.triangles {
            for &a in tri {
                let Some(ia) = mesh.interior_index[a] else { continue };
                for &b in tri {
                    if let Some(ib) = mesh.interior_index[b] {
                        rows[ia].push(ib);
                    }
                }
            }
        }
        let mut row_ptr = vec![0];
        let mut col = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            col.extend_from_slice(r);
            row_ptr.push(col.len());
        }
        let val = vec![0.0; col.len()];
        let pattern = CsrMatrix { row_ptr, col, val };
        let slots = mesh
            .triangles
            .iter()
            .map(|tri| {
                let mut s = [[usize::MAX; 3]; 3];
                for a in 0..3 {
                    for b in 0..3 {
                        if let (Some(ia), Some(ib)) = (mesh.interior_index[tri[a]], mesh.interior_index[tri[b]]) {
                            let range = pattern.row_ptr[ia]..pattern.row_ptr[ia + 1];
                            s[a][b] = range.clone().find(|&p| pattern.col[p] == ib).expect("pattern slot");
                        }
                    }
                }
                s
            })
            .collect();
        let local = (0..mesh.triangles.len()).map(|t| mesh.local_stiffness(t)).collect();
        let load = assemble_load(&mesh, source);
        FemSolver { mesh, pattern, slots, local, load }
    }

    pub fn mesh(&self) -> &FemMesh {
        &self.mesh
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    /// Stiffness matrix for per-triangle coefficient values.
    pub fn assemble(&self, coeff: &[f64]) -> Result<CsrMatrix, FemError> {
        let nt = self.mesh.triangles.len();
        if coeff.len() != nt {
            return Err(FemError::LengthMismatch { expected: nt, got: coeff.len() });
        }
        let mut a = self.pattern.clone();
        for t in 0..nt {
            for p in 0..3 {
                for q in 0..3 {
                    let slot = self.slots[t][p][q];
                    if slot != usize::MAX {
                        a.val[slot] += coeff[t] * self.local[t][p][q];
                    }
                }
            }
        }
        Ok(a)
    }

    /// Galerkin solution for per-triangle coefficient values.
    pub fn solve_with_coefficients(&self, coeff: &[f64]) -> Result<FemSolution, FemError> {
        let a = self.assemble(coeff)?;
        let (values, iterations) = conjugate_gradient(&a, &self.load, CG_TOLERANCE, 10 * self.mesh.unknowns().max(1))?;
        Ok(FemSolution { values, iterations })
    }

    /// `√(vᵀ M v)` for an interior nodal vector.
    pub fn l2_norm(&self, v: &[f64]) -> Result<f64, FemError> {
        l2_norm(&self.mesh, v)
    }
}

fn assemble_load(mesh: &FemMesh, source: Source<'_>) -> Vec<f64> {
    let mut b = vec![0.0; mesh.unknowns()];
    let nodal: Option<Vec<f64>> = match source {
        Source::X2 => None,
        Source::Interpolated(f) => Some(mesh.nodes.iter().map(|&p| f(p)).collect()),
    };
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.area(t);
        let vals: [f64; 3] = match &nodal {
            None => tri.map(|i| mesh.nodes[i][1]),
            Some(q) => tri.map(|i| q[i]),
        };
        let sum: f64 = vals.iter().sum();
        for a in 0..3 {
            if let Some(ia) = mesh.interior_index[tri[a]] {
                // ∫_T φ_a q_I = |T| (Σ_b q_b + q_a) / 12
                b[ia] += area * (sum + vals[a]) / 12.0;
            }
        }
    }
    b
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize), FemError> {
    let n = a.dim();
    if b.len() != n {
        return Err(FemError::LengthMismatch { expected: n, got: b.len() });
    }
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(FemError::NotConverged { iterations: it, residual: dot(&r, &r).sqrt() / bnorm });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = dot(&r, &r).sqrt() / bnorm;
        if res <= tol {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(FemError::NotConverged { iterations: max_iter, residual: dot(&r, &r).sqrt() / bnorm })
}

/// Values `ψ_j` at triangle centroids, laid out triangle-major.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    model: DiffusionModel,
    triangles: usize,
    psi: Vec<f64>,
}

impl CoefficientField {
    pub fn new(mesh: &FemMesh, model: &DiffusionModel) -> Self {
        let s = model.s;
        let mut psi = Vec::with_capacity(mesh.triangles.len() * s);
        for t in 0..mesh.triangles.len() {
            let x = mesh.centroid(t);
            for j in 1..=s {
                psi.push(model.psi(j, x) / 6f64.sqrt());
            }
        }
        CoefficientField { model: model.clone(), triangles: mesh.triangles.len(), psi }
    }

    pub fn model(&self) -> &DiffusionModel {
        &self.model
    }

    /// Centroid coefficients keeping the first `s` terms of `y`.
    pub fn coefficients(&self, y: &[f64], s: usize) -> Result<Vec<f64>, FemError> {
        Ok(self.truncations(y, &[s])?.pop().expect("one level"))
    }

    /// Centroid coefficients for several truncation levels in one pass.
    pub fn truncations(&self, y: &[f64], levels: &[usize]) -> Result<Vec<Vec<f64>>, FemError> {
        let s = self.model.s;
        let top = levels.iter().copied().max().unwrap_or(0);
        if top > s {
            return Err(FemError::DimensionMismatch { need: top, got: s });
        }
        if y.len() < top {
            return Err(FemError::DimensionMismatch { need: top, got: y.len() });
        }
        let w: Vec<f64> = y[..top].iter().map(|&v| periodic_sin(v)).collect();
        let mut out = vec![Vec::with_capacity(self.triangles); levels.len()];
        let (lo, hi) = (self.model.a_min - BOUNDS_SLACK, self.model.a_max + BOUNDS_SLACK);
        let mut order: Vec<usize> = (0..levels.len()).collect();
        order.sort_by_key(|&i| levels[i]);
        for t in 0..self.triangles {
            let row = &self.psi[t * s..t * s + top];
            let mut acc = self.model.a0;
            let mut done = 0;
            for &i in &order {
                for j in done..levels[i] {
                    acc += w[j] * row[j];
                }
                done = levels[i];
                if !(lo..=hi).contains(&acc) {
                    return Err(FemError::CoefficientOutOfBounds { value: acc, min: self.model.a_min, max: self.model.a_max });
                }
                out[i].push(acc);
            }
        }
        Ok(out)
    }
}

/// Galerkin solution for the parameter `y` (first `model.s` coordinates used).
pub fn fem_solve(mesh: &FemMesh, model: &DiffusionModel, y: &[f64], source: Source<'_>) -> Result<FemSolution, FemError> {
    truncated_solve(mesh, model, y, model.s, source)
}

/// Solve with `y_j` set to zero for `j > s`.
pub fn truncated_solve(
    mesh: &FemMesh,
    model: &DiffusionModel,
    y: &[f64],
    s: usize,
    source: Source<'_>,
) -> Result<FemSolution, FemError> {
    if s > model.s {
        return Err(FemError::DimensionMismatch { need: s, got: model.s });
    }
    let solver = FemSolver::new(mesh.clone(), source);
    let field = CoefficientField::new(mesh, model);
    solver.solve_with_coefficients(&field.coefficients(y, s)?)
}

/// `√(vᵀ M v)` with the consistent P1 mass matrix, for an interior vector
/// (zero boundary) or a vector over all grid nodes.
pub fn l2_norm(mesh: &FemMesh, v: &[f64]) -> Result<f64, FemError> {
    let full;
    let vals: &[f64] = if v.len() == mesh.unknowns() {
        full = mesh.full_values(v);
        &full
    } else if v.len() == mesh.nodes.len() {
        v
    } else {
        return Err(FemError::LengthMismatch { expected: mesh.unknowns(), got: v.len() });
    };
    let mut sum = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let x = tri.map(|i| vals[i]);
        let s1: f64 = x.iter().sum();
        let s2: f64 = x.iter().map(|a| a * a).sum();
        sum += mesh.area(t) * (s1 * s1 + s2) / 12.0;
    }
    Ok(sum.sqrt())
}
