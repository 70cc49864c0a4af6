//! Kernel interpolants on rank-1 lattices.
//!
//! The Gram matrix `K(t_k, t_{k'})` is circulant, so coefficients come from
//! one forward and one inverse transform. Internally the lattice index `m`
//! runs over `0..n` with `m = 0` standing for `t_n = t_0 = 0`; public vectors
//! are ordered `k = 1..=n`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::kernel::{eta, eta_table, rnorm, KernelError, KernelSpec};
use crate::lattice::{Lattice, LatticeError};
use crate::numerics::{Complex64, DftPlan};

/// Spectrum entries below this fraction of the largest are treated as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InterpolantError {
    #[error("kernel dimension {kernel} does not match lattice dimension {lattice}")]
    DimensionMismatch { kernel: usize, lattice: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("circulant spectrum entry {index} has relative magnitude {ratio:e}; kernel matrix is near singular")]
    NearSingular { index: usize, ratio: f64 },
    #[error("interpolant dump line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Public `k = 1..=n` order to internal `m = k mod n` order.
fn to_internal<T: Copy>(v: &[T]) -> Vec<T> {
    let n = v.len();
    (0..n).map(|m| v[(m + n - 1) % n]).collect()
}

fn to_public<T: Copy>(v: &[T]) -> Vec<T> {
    let n = v.len();
    (0..n).map(|i| v[(i + 1) % n]).collect()
}

/// Kernel column `[K(t_m, 0)]_m` of a lattice, factored once and shared by
/// every interpolant on the same points.
#[derive(Debug, Clone)]
pub struct CirculantFactor {
    spec: KernelSpec,
    lat: Lattice,
    column: Vec<f64>,
    spectrum: Vec<Complex64>,
    plan: DftPlan,
}

impl CirculantFactor {
    pub fn new(spec: &KernelSpec, lat: &Lattice) -> Result<Self, InterpolantError> {
        if spec.s() != lat.s() {
            return Err(InterpolantError::DimensionMismatch { kernel: spec.s(), lattice: lat.s() });
        }
        let n = lat.n() as usize;
        let table = eta_table(spec.alpha(), n)?;
        let column = (0..n)
            .into_par_iter()
            .map(|m| {
                let etas: Vec<f64> = (0..lat.s()).map(|j| table[lat.residue(m as u64, j) as usize]).collect();
                spec.eval_etas(&etas)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let plan = DftPlan::new(n);
        let mut spectrum: Vec<Complex64> = column.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        plan.forward(&mut spectrum);
        let max = spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if let Some((index, c)) = spectrum
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.norm() >= SINGULAR_THRESHOLD * max))
        {
            return Err(InterpolantError::NearSingular { index, ratio: c.norm() / max });
        }
        Ok(CirculantFactor { spec: spec.clone(), lat: lat.clone(), column, spectrum, plan })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lat
    }

    pub fn n(&self) -> usize {
        self.column.len()
    }

    /// `K(t_k, 0)` in `k = 1..=n` order.
    pub fn first_column(&self) -> Vec<f64> {
        to_public(&self.column)
    }

    /// Eigenvalues of the circulant Gram matrix, in transform order.
    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    pub fn plan(&self) -> &DftPlan {
        &self.plan
    }

    /// Solves the Gram system for values ordered `k = 1..=n`.
    pub fn solve(&self, values: &[f64]) -> Result<Vec<f64>, InterpolantError> {
        let mut buf = self.solve_spectrum(values)?;
        self.plan.inverse(&mut buf);
        Ok(to_public(&buf.iter().map(|c| c.re).collect::<Vec<_>>()))
    }

    /// Transformed coefficient vector `DFT(a)` straight from values, skipping
    /// the inverse transform of [`CirculantFactor::solve`].
    pub fn solve_spectrum(&self, values: &[f64]) -> Result<Vec<Complex64>, InterpolantError> {
        if values.len() != self.n() {
            return Err(InterpolantError::LengthMismatch { expected: self.n(), got: values.len() });
        }
        let mut buf: Vec<Complex64> = to_internal(values).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        self.plan.forward(&mut buf);
        for (b, l) in buf.iter_mut().zip(&self.spectrum) {
            *b /= *l;
        }
        Ok(buf)
    }

    /// Kernel column `[K(t_m, y)]_m` in internal order.
    pub fn shifted_column(&self, y: &[f64]) -> Result<Vec<f64>, InterpolantError> {
        let s = self.lat.s();
        if y.len() != s {
            return Err(KernelError::DimensionMismatch { expected: s, got: y.len() }.into());
        }
        let n = self.n() as f64;
        let alpha = self.spec.alpha();
        let mut etas = vec![0.0; s];
        (0..self.n())
            .map(|m| {
                for j in 0..s {
                    etas[j] = eta(alpha, self.lat.residue(m as u64, j) as f64 / n - y[j])?;
                }
                Ok(self.spec.eval_etas(&etas)?)
            })
            .collect()
    }

    /// Forward transform of the coefficient vector (public order), for reuse
    /// across many shifts.
    pub fn coefficient_spectrum(&self, coeffs: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = to_internal(coeffs).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        self.plan.forward(&mut buf);
        buf
    }

    /// `[f_n(y + t_{k'})]_{k'}` in public order from a transformed coefficient
    /// vector and a transformed shifted column.
    pub fn correlate(&self, coeff_spectrum: &[Complex64], column_spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = coeff_spectrum
            .iter()
            .zip(column_spectrum)
            .map(|(a, c)| a * c.conj())
            .collect();
        self.plan.inverse(&mut buf);
        to_public(&buf.iter().map(|c| c.re).collect::<Vec<_>>())
    }

    /// Transformed shifted column for [`CirculantFactor::correlate`].
    pub fn shifted_spectrum(&self, y: &[f64]) -> Result<Vec<Complex64>, InterpolantError> {
        let mut buf: Vec<Complex64> = self.shifted_column(y)?.into_iter().map(|c| Complex64::new(c, 0.0)).collect();
        self.plan.forward(&mut buf);
        Ok(buf)
    }
}

/// `f_n(y) = Σ_k a_k K(t_k, y)` interpolating given values at the lattice points.
#[derive(Debug, Clone)]
pub struct Interpolant {
    factor: Arc<CirculantFactor>,
    coeffs: Vec<f64>,
    residual: f64,
}

impl Interpolant {
    /// Interpolant of `values[k-1] = f(t_k)`, `k = 1..=n`.
    pub fn build(spec: &KernelSpec, lat: &Lattice, values: &[f64]) -> Result<Self, InterpolantError> {
        let factor = Arc::new(CirculantFactor::new(spec, lat)?);
        Self::from_factor(factor, values)
    }

    pub fn from_factor(factor: Arc<CirculantFactor>, values: &[f64]) -> Result<Self, InterpolantError> {
        let coeffs = factor.solve(values)?;
        let mut it = Interpolant { factor, coeffs, residual: 0.0 };
        let nodes = it.node_values();
        it.residual = nodes.iter().zip(values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(it)
    }

    /// Interpolant with given coefficients (public order).
    pub fn from_coefficients(factor: Arc<CirculantFactor>, coeffs: Vec<f64>) -> Result<Self, InterpolantError> {
        if coeffs.len() != factor.n() {
            return Err(InterpolantError::LengthMismatch { expected: factor.n(), got: coeffs.len() });
        }
        Ok(Interpolant { factor, coeffs, residual: f64::NAN })
    }

    pub fn factor(&self) -> &Arc<CirculantFactor> {
        &self.factor
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.factor.spec
    }

    pub fn lattice(&self) -> &Lattice {
        &self.factor.lat
    }

    /// Coefficients `a_k`, `k = 1..=n`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `max_k |f_n(t_k) − f(t_k)|` observed at build time.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `[f_n(t_k)]_{k=1..=n}` by one circulant product.
    pub fn node_values(&self) -> Vec<f64> {
        let a = self.factor.coefficient_spectrum(&self.coeffs);
        self.factor.correlate(&a, &self.factor.spectrum)
    }

    pub fn evaluate(&self, y: &[f64]) -> Result<f64, InterpolantError> {
        let lat = &self.factor.lat;
        let s = lat.s();
        if y.len() != s {
            return Err(KernelError::DimensionMismatch { expected: s, got: y.len() }.into());
        }
        let n = lat.n();
        let alpha = self.factor.spec.alpha();
        let mut etas = vec![0.0; s];
        let mut total = 0.0;
        for (i, a) in self.coeffs.iter().enumerate() {
            let k = (i as u64 + 1) % n;
            for j in 0..s {
                etas[j] = eta(alpha, lat.residue(k, j) as f64 / n as f64 - y[j])?;
            }
            total += a * self.factor.spec.eval_etas(&etas)?;
        }
        Ok(total)
    }

    /// `[f_n(y + t_{k'})]_{k'=1..=n}` by one circulant correlation.
    pub fn evaluate_shifted_union(&self, y: &[f64]) -> Result<Vec<f64>, InterpolantError> {
        let a = self.factor.coefficient_spectrum(&self.coeffs);
        let c = self.factor.shifted_spectrum(y)?;
        Ok(self.factor.correlate(&a, &c))
    }

    /// `f̂_n(h) = (Σ_k a_k e^{−2πi h·t_k}) / r(h)`.
    pub fn fourier_coefficient(&self, h: &[i64]) -> Result<Complex64, InterpolantError> {
        let lat = &self.factor.lat;
        let n = lat.n();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, a) in self.coeffs.iter().enumerate() {
            let k = (i as u64 + 1) % n;
            // h·t_k mod 1 in exact integer arithmetic
            let mut r: i128 = 0;
            for (j, &hj) in h.iter().enumerate() {
                r += hj as i128 * lat.residue(k, j) as i128;
            }
            let phase = -2.0 * PI * (r.rem_euclid(n as i128) as f64) / n as f64;
            acc += Complex64::from_polar(*a, phase);
        }
        let r = rnorm(&self.factor.spec, h)?.to_f64().map_err(KernelError::from)?;
        Ok(acc / r)
    }

    /// Plain-text dump: a `key = value` header then one coefficient per line.
    pub fn to_text(&self, scheme_ref: &str) -> String {
        let lat = &self.factor.lat;
        let mut out = String::from("# lattice-kernel interpolant\n");
        let _ = writeln!(out, "n = {}", lat.n());
        let _ = writeln!(out, "s = {}", lat.s());
        let _ = writeln!(out, "alpha = {}", self.factor.spec.alpha());
        let _ = writeln!(out, "scheme = {scheme_ref}");
        let z: Vec<String> = lat.z().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "z = {}", z.join(" "));
        let _ = writeln!(out, "[coefficients]");
        for a in &self.coeffs {
            let _ = writeln!(out, "{a:e}");
        }
        out
    }

    /// Restores a dump written by [`Interpolant::to_text`] against a matching kernel.
    pub fn from_text(text: &str, spec: &KernelSpec) -> Result<Self, InterpolantError> {
        let perr = |line: usize, msg: String| InterpolantError::Parse { line, msg };
        let (mut n, mut s, mut alpha, mut z) = (None, None, None, None);
        let mut coeffs = Vec::new();
        let mut body = false;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "[coefficients]" {
                body = true;
                continue;
            }
            if body {
                coeffs.push(line.parse::<f64>().map_err(|_| perr(ln, format!("bad coefficient {line:?}")))?);
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| perr(ln, "expected key = value".into()))?;
            let v = v.trim();
            let int = |t: &str| t.parse::<u64>().map_err(|_| perr(ln, format!("bad integer {t:?}")));
            match k.trim() {
                "n" => n = Some(int(v)?),
                "s" => s = Some(int(v)? as usize),
                "alpha" => alpha = Some(int(v)? as u32),
                "scheme" => {}
                "z" => z = Some(v.split_whitespace().map(int).collect::<Result<Vec<_>, _>>()?),
                other => return Err(perr(ln, format!("unknown key {other:?}"))),
            }
        }
        let n = n.ok_or_else(|| perr(0, "missing n".into()))?;
        let z = z.ok_or_else(|| perr(0, "missing z".into()))?;
        if s != Some(z.len()) || s != Some(spec.s()) {
            return Err(InterpolantError::DimensionMismatch { kernel: spec.s(), lattice: z.len() });
        }
        if alpha != Some(spec.alpha()) {
            return Err(perr(0, format!("dump has alpha {alpha:?}, kernel has {}", spec.alpha())));
        }
        let lat = Lattice::new(n, z)?;
        Self::from_coefficients(Arc::new(CirculantFactor::new(spec, &lat)?), coeffs)
    }
}

/// `√((1/(Ln)) Σ_ℓ Σ_k (f(y_ℓ + t_k) − f_n(y_ℓ + t_k))²)` over injected shifts `y_ℓ`.
pub fn l2_error_estimate<F>(itp: &Interpolant, f_true: F, shifts: &[Vec<f64>]) -> Result<f64, InterpolantError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let lat = itp.lattice();
    let n = lat.n();
    let a = itp.factor.coefficient_spectrum(&itp.coeffs);
    let per_shift = shifts
        .par_iter()
        .map(|y| {
            let c = itp.factor.shifted_spectrum(y)?;
            let approx = itp.factor.correlate(&a, &c);
            let mut sum = 0.0;
            for (i, v) in approx.iter().enumerate() {
                let t = lat.point_mod(i as u64 + 1);
                let p: Vec<f64> = t.iter().zip(y).map(|(a, b)| crate::kernel::frac(a + b)).collect();
                let d = f_true(&p) - v;
                sum += d * d;
            }
            Ok(sum)
        })
        .collect::<Result<Vec<f64>, InterpolantError>>()?;
    let total: f64 = per_shift.iter().sum();
    Ok((total / (shifts.len() as f64 * n as f64)).sqrt())
}

/// Finite Fourier series `Σ_h f̂(h) e^{2πi h·y}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigPolynomial {
    pub terms: BTreeMap<Vec<i64>, Complex64>,
}

impl TrigPolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(h: Vec<i64>, c: Complex64) -> Self {
        let mut p = Self::new();
        p.terms.insert(h, c);
        p
    }

    pub fn add_term(&mut self, h: Vec<i64>, c: Complex64) {
        *self.terms.entry(h).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    /// Adds `c e^{2πi h·y} + conj(c) e^{−2πi h·y}`, keeping the function real.
    pub fn add_real_pair(&mut self, h: Vec<i64>, c: Complex64) {
        if h.iter().all(|&v| v == 0) {
            self.add_term(h, Complex64::new(2.0 * c.re, 0.0));
            return;
        }
        let neg: Vec<i64> = h.iter().map(|v| -v).collect();
        self.add_term(h, c);
        self.add_term(neg, c.conj());
    }

    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        self.terms.iter().all(|(h, c)| {
            let neg: Vec<i64> = h.iter().map(|v| -v).collect();
            let other = self.terms.get(&neg).copied().unwrap_or_default();
            (other - c.conj()).norm() <= tol
        })
    }

    pub fn eval(&self, y: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(h, c)| {
                let dot: f64 = h.iter().zip(y).map(|(a, b)| *a as f64 * b).sum();
                c * Complex64::from_polar(1.0, 2.0 * PI * dot)
            })
            .sum()
    }

    pub fn eval_real(&self, y: &[f64]) -> f64 {
        self.eval(y).re
    }

    pub fn scale(&mut self, by: f64) {
        for c in self.terms.values_mut() {
            *c *= by;
        }
    }

    /// `‖f‖_{L2}` by Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `‖f‖_H = √(Σ_h r(h) |f̂(h)|²)`.
pub fn h_norm(spec: &KernelSpec, f: &TrigPolynomial) -> Result<f64, InterpolantError> {
    let mut sum = 0.0;
    for (h, c) in &f.terms {
        let r = rnorm(spec, h)?.to_f64().map_err(KernelError::from)?;
        sum += r * c.norm_sqr();
    }
    Ok(sum.sqrt())
}
