//! The periodic reproducing kernel
//! `K(t, y) = Σ_u γ_u Π_{j∈u} η_α(t_j − y_j)` and its per-family fast paths.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul};

use crate::numerics::{bernoulli_poly, ExtendedReal, NumericsError};
use crate::weights::{WeightScheme, WeightsError, MAX_ENUMERATION};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("smoothness alpha = {0} unsupported (even values 2..=16 only)")]
    UnsupportedAlpha(u32),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("kernel value 2^{log2:.1} overflows f64")]
    Overflow { log2: f64 },
    #[error("dimension {0} too large for subset enumeration")]
    TooLarge(usize),
    #[error(transparent)]
    Weights(#[from] WeightsError),
    #[error(transparent)]
    Numerics(NumericsError),
}

impl From<NumericsError> for KernelError {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::OutOfRange { log2 } => KernelError::Overflow { log2 },
            other => KernelError::Numerics(other),
        }
    }
}

/// `{x}` in `[0, 1)`; rounding that lands exactly on 1 is folded to 0.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

fn eta_prefactor(alpha: u32) -> Result<f64, KernelError> {
    if alpha == 0 || alpha % 2 == 1 || alpha > 16 {
        return Err(KernelError::UnsupportedAlpha(alpha));
    }
    let sign = if (alpha / 2) % 2 == 1 { 1.0 } else { -1.0 };
    let fact: f64 = (1..=alpha).map(f64::from).product();
    Ok(sign * (2.0 * PI).powi(alpha as i32) / fact)
}

/// `η_α(δ) = (2π)^α / ((−1)^{α/2+1} α!) · B_α({δ})`.
///
/// `η_α` is even, so `|δ|` is reduced; this makes `K(t, y)` and `K(y, t)`
/// bitwise equal.
pub fn eta(alpha: u32, delta: f64) -> Result<f64, KernelError> {
    let c = eta_prefactor(alpha)?;
    Ok(c * bernoulli_poly(alpha, frac(delta.abs()))?)
}

/// `[η_α(m/n)]_{m=0..n-1}`: every difference of two lattice coordinates is one of these.
///
/// Entries `m` and `n - m` are bitwise equal, so `z` and `n - z` give identical sums.
pub fn eta_table(alpha: u32, n: usize) -> Result<Vec<f64>, KernelError> {
    let c = eta_prefactor(alpha)?;
    (0..n)
        .map(|m| Ok(c * bernoulli_poly(alpha, m.min(n - m) as f64 / n as f64)?))
        .collect()
}

/// Accumulator used by the kernel recursions: plain `f64` or [`ExtendedReal`].
pub trait Accum: Copy + Add<Output = Self> + AddAssign + Mul<Output = Self> + Mul<f64, Output = Self> {
    const ZERO: Self;
    const ONE: Self;
    fn from_ext(x: ExtendedReal) -> Self;
    fn to_ext(self) -> ExtendedReal;
}

impl Accum for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    #[inline]
    fn from_ext(x: ExtendedReal) -> Self {
        x.to_f64_lossy()
    }
    #[inline]
    fn to_ext(self) -> ExtendedReal {
        ExtendedReal::from_f64(self)
    }
}

impl Accum for ExtendedReal {
    const ZERO: Self = ExtendedReal::ZERO;
    const ONE: Self = ExtendedReal::ONE;
    #[inline]
    fn from_ext(x: ExtendedReal) -> Self {
        x
    }
    #[inline]
    fn to_ext(self) -> ExtendedReal {
        self
    }
}

/// Smoothness `α` together with a weight scheme restricted to dimension `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    alpha: u32,
    scheme: WeightScheme,
    extended: bool,
}

impl KernelSpec {
    /// Uses the first `s` coordinates of `scheme`.
    pub fn new(alpha: u32, scheme: &WeightScheme, s: usize) -> Result<Self, KernelError> {
        eta_prefactor(alpha)?;
        let scheme = scheme.truncate(s)?;
        Ok(KernelSpec { alpha, scheme, extended: true })
    }

    /// Selects `f64` accumulation for product and SPOD weights. POD weights
    /// always accumulate in extended range.
    pub fn with_extended(mut self, extended: bool) -> Self {
        self.extended = extended || matches!(self.scheme, WeightScheme::Pod { .. });
        self
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    pub fn s(&self) -> usize {
        self.scheme.dim()
    }

    pub fn scheme(&self) -> &WeightScheme {
        &self.scheme
    }

    pub fn extended(&self) -> bool {
        self.extended
    }

    /// Length of the recursion row: `1` for product weights, else `s·σ + 1`.
    pub fn row_len(&self) -> usize {
        match &self.scheme {
            WeightScheme::Product { .. } => 1,
            WeightScheme::Pod { gamma, .. } => gamma.len() + 1,
            WeightScheme::Spod { sigma, gamma, .. } => gamma.len() * sigma + 1,
        }
    }

    /// Fresh recursion row for zero coordinates.
    ///
    /// Product rows hold `K − 1` rather than `K`, so that small kernel
    /// excesses are not rounded against the constant term.
    pub fn empty_row<S: Accum>(&self) -> Vec<S> {
        let mut row = vec![S::ZERO; self.row_len()];
        if !matches!(self.scheme, WeightScheme::Product { .. }) {
            row[0] = S::ONE;
        }
        row
    }

    /// Folds coordinate `j` (0-based) with kernel factor `η` into the row.
    /// Rows must be extended in coordinate order `0, 1, ...`.
    #[inline]
    pub fn push_coordinate<S: Accum>(&self, row: &mut [S], j: usize, eta: f64) {
        match &self.scheme {
            WeightScheme::Product { gamma } => {
                let x = gamma[j] * eta;
                row[0] = row[0] + (S::ONE + row[0]) * x;
            }
            WeightScheme::Pod { gamma, .. } => {
                let g = gamma[j] * eta;
                for l in (1..=j + 1).rev() {
                    let prev = row[l - 1];
                    row[l] += prev * g;
                }
            }
            WeightScheme::Spod { sigma, gamma, .. } => {
                let sigma = *sigma;
                let gj = &gamma[j];
                for l in (1..=(j + 1) * sigma).rev() {
                    let mut acc = S::ZERO;
                    for nu in 1..=sigma.min(l) {
                        acc += row[l - nu] * gj[nu - 1];
                    }
                    row[l] += acc * eta;
                }
            }
        }
    }

    /// `Σ_ℓ Γ_ℓ P_ℓ` (or the running product for product weights).
    #[inline]
    pub fn finish<S: Accum>(&self, row: &[S]) -> ExtendedReal {
        self.finish_excess(row) + ExtendedReal::ONE
    }

    /// `K − 1 = Σ_{ℓ≥1} Γ_ℓ P_ℓ`, free of the rounding in `K`.
    #[inline]
    pub fn finish_excess<S: Accum>(&self, row: &[S]) -> ExtendedReal {
        match &self.scheme {
            WeightScheme::Product { .. } => row[0].to_ext(),
            WeightScheme::Pod { order, .. } | WeightScheme::Spod { order, .. } => {
                let mut total = ExtendedReal::ZERO;
                for (p, g) in row.iter().zip(order).skip(1) {
                    total += p.to_ext() * *g;
                }
                total
            }
        }
    }

    fn eval_etas_with<S: Accum>(&self, etas: &[f64]) -> ExtendedReal {
        let mut row = self.empty_row::<S>();
        for (j, &e) in etas.iter().enumerate() {
            self.push_coordinate(&mut row, j, e);
        }
        self.finish(&row)
    }

    /// Kernel value from precomputed factors `η_α(t_j − y_j)`, in extended range.
    pub fn eval_etas_ext(&self, etas: &[f64]) -> Result<ExtendedReal, KernelError> {
        if etas.len() != self.s() {
            return Err(KernelError::DimensionMismatch { expected: self.s(), got: etas.len() });
        }
        Ok(if self.extended {
            self.eval_etas_with::<ExtendedReal>(etas)
        } else {
            self.eval_etas_with::<f64>(etas)
        })
    }

    pub fn eval_etas(&self, etas: &[f64]) -> Result<f64, KernelError> {
        Ok(self.eval_etas_ext(etas)?.to_f64()?)
    }
}

fn check_dims(spec: &KernelSpec, t: &[f64], y: &[f64]) -> Result<(), KernelError> {
    for v in [t, y] {
        if v.len() != spec.s() {
            return Err(KernelError::DimensionMismatch { expected: spec.s(), got: v.len() });
        }
    }
    Ok(())
}

/// `r(h) = γ_{supp h}^{-1} Π_{j ∈ supp h} |h_j|^α`.
pub fn rnorm(spec: &KernelSpec, h: &[i64]) -> Result<ExtendedReal, KernelError> {
    if h.len() != spec.s() {
        return Err(KernelError::DimensionMismatch { expected: spec.s(), got: h.len() });
    }
    let support: Vec<usize> = (0..h.len()).filter(|&j| h[j] != 0).map(|j| j + 1).collect();
    let gamma = spec.scheme.weight_of(&support)?;
    let mut prod = ExtendedReal::ONE;
    for &j in &support {
        prod *= ExtendedReal::from_f64(h[j - 1].unsigned_abs() as f64).powi(spec.alpha as i32);
    }
    Ok(prod / gamma)
}

/// `K(t, y)` by the recursion matching the weight family.
pub fn kernel_eval(spec: &KernelSpec, t: &[f64], y: &[f64]) -> Result<f64, KernelError> {
    check_dims(spec, t, y)?;
    let etas = t
        .iter()
        .zip(y)
        .map(|(a, b)| eta(spec.alpha, a - b))
        .collect::<Result<Vec<_>, _>>()?;
    spec.eval_etas(&etas)
}

/// `K(t, y)` by direct summation over all `2^s` subsets.
pub fn kernel_eval_bruteforce(spec: &KernelSpec, t: &[f64], y: &[f64]) -> Result<f64, KernelError> {
    check_dims(spec, t, y)?;
    let s = spec.s();
    if s > MAX_ENUMERATION {
        return Err(KernelError::TooLarge(s));
    }
    let etas = t
        .iter()
        .zip(y)
        .map(|(a, b)| eta(spec.alpha, a - b))
        .collect::<Result<Vec<_>, _>>()?;
    let mut total = ExtendedReal::ZERO;
    let mut u = Vec::with_capacity(s);
    for mask in 0u32..(1u32 << s) {
        u.clear();
        let mut prod = 1.0;
        for (j, e) in etas.iter().enumerate() {
            if mask & (1 << j) != 0 {
                u.push(j + 1);
                prod *= e;
            }
        }
        total += spec.scheme.weight_of(&u)? * prod;
    }
    Ok(total.to_f64()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::zeta;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn point(rng: &mut ChaCha8Rng, s: usize) -> Vec<f64> {
        (0..s).map(|_| rng.gen::<f64>()).collect()
    }

    fn pod_scheme(s: usize) -> WeightScheme {
        let order = (0..=s).map(|l| ExtendedReal::factorial(l as u64).powf(1.3)).collect();
        WeightScheme::pod(order, (1..=s).map(|j| 0.7 / (j * j) as f64).collect()).unwrap()
    }

    fn spod_scheme(s: usize, sigma: usize) -> WeightScheme {
        let order = (0..=s * sigma).map(|l| ExtendedReal::factorial(l as u64).powf(1.5)).collect();
        let gamma = (1..=s)
            .map(|j| (1..=sigma).map(|nu| 0.3f64.powi(nu as i32) / j as f64).collect())
            .collect();
        WeightScheme::spod(sigma, order, gamma).unwrap()
    }

    #[test]
    fn eta_values() {
        assert_relative_eq!(eta(2, 0.0).unwrap(), PI * PI / 3.0, max_relative = 1e-14);
        assert_relative_eq!(eta(2, 0.0).unwrap(), 2.0 * zeta(2.0).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(eta(2, 0.5).unwrap(), -PI * PI / 6.0, max_relative = 1e-14);
        assert_relative_eq!(eta(4, 0.0).unwrap(), PI.powi(4) / 45.0, max_relative = 1e-14);
        assert!(matches!(eta(3, 0.1), Err(KernelError::UnsupportedAlpha(3))));
    }

    #[test]
    fn eta_matches_fourier_series() {
        // η_α(δ) = Σ_{h≠0} e^{2πihδ}/|h|^α
        for &alpha in &[2u32, 4, 6] {
            for &d in &[0.0, 0.13, 0.5, 0.77] {
                let mut s = 0.0;
                for h in (1..200_000).rev() {
                    s += 2.0 * (2.0 * PI * h as f64 * d).cos() / (h as f64).powi(alpha as i32);
                }
                assert!((eta(alpha, d).unwrap() - s).abs() < 2e-5, "alpha={alpha} d={d}");
            }
        }
    }

    #[test]
    fn frac_clamps() {
        assert_eq!(frac(-1e-20), 0.0);
        assert_eq!(frac(3.25), 0.25);
        assert!(frac(-0.25) == 0.75);
    }

    #[test]
    fn product_examples() {
        let spec = KernelSpec::new(2, &WeightScheme::product(vec![1.0]).unwrap(), 1).unwrap();
        assert_relative_eq!(kernel_eval(&spec, &[0.3], &[0.3]).unwrap(), 1.0 + PI * PI / 3.0, max_relative = 1e-14);
        let tiny = WeightScheme::product(vec![1e-16; 4]).unwrap();
        let spec = KernelSpec::new(2, &tiny, 4).unwrap();
        assert_relative_eq!(kernel_eval(&spec, &[0.0; 4], &[0.0; 4]).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn rnorm_examples() {
        let spec = KernelSpec::new(2, &WeightScheme::product(vec![0.5, 0.3, 0.2]).unwrap(), 3).unwrap();
        assert_eq!(rnorm(&spec, &[0, 0, 0]).unwrap(), ExtendedReal::ONE);
        assert_relative_eq!(rnorm(&spec, &[3, 0, 0]).unwrap().to_f64().unwrap(), 18.0, max_relative = 1e-15);
        let a = rnorm(&spec, &[2, 0, -1]).unwrap().to_f64().unwrap();
        let b = rnorm(&spec, &[4, 0, -2]).unwrap().to_f64().unwrap();
        assert_relative_eq!(b / a, 16.0, max_relative = 1e-14);
    }

    #[test]
    fn recursions_match_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for s in 1..=6 {
            for (alpha, scheme) in [
                (2, WeightScheme::product((1..=s).map(|j| 0.9 / j as f64).collect()).unwrap()),
                (2, pod_scheme(s)),
                (4, spod_scheme(s, 2)),
                (6, spod_scheme(s, 3)),
            ] {
                let spec = KernelSpec::new(alpha, &scheme, s).unwrap();
                for _ in 0..5 {
                    let t = point(&mut rng, s);
                    let y = point(&mut rng, s);
                    let a = kernel_eval(&spec, &t, &y).unwrap();
                    let b = kernel_eval_bruteforce(&spec, &t, &y).unwrap();
                    assert!((a - b).abs() <= 1e-10 * b.abs(), "s={s} {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn product_expansion_two_dims() {
        let (g1, g2) = (0.4, 0.7);
        let spec = KernelSpec::new(4, &WeightScheme::product(vec![g1, g2]).unwrap(), 2).unwrap();
        let (t, y) = ([0.1, 0.8], [0.55, 0.3]);
        let e1 = eta(4, t[0] - y[0]).unwrap();
        let e2 = eta(4, t[1] - y[1]).unwrap();
        let expect = 1.0 + g1 * e1 + g2 * e2 + g1 * g2 * e1 * e2;
        assert_relative_eq!(kernel_eval_bruteforce(&spec, &t, &y).unwrap(), expect, max_relative = 1e-14);
        assert_relative_eq!(kernel_eval(&spec, &t, &y).unwrap(), expect, max_relative = 1e-14);
    }

    #[test]
    fn symmetry_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = KernelSpec::new(4, &spod_scheme(5, 2), 5).unwrap();
        for _ in 0..20 {
            let t = point(&mut rng, 5);
            let y = point(&mut rng, 5);
            assert_eq!(kernel_eval(&spec, &t, &y).unwrap(), kernel_eval(&spec, &y, &t).unwrap());
        }
    }

    #[test]
    fn f64_and_extended_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ext = KernelSpec::new(4, &spod_scheme(8, 2), 8).unwrap();
        let plain = ext.clone().with_extended(false);
        assert!(!plain.extended());
        for _ in 0..10 {
            let t = point(&mut rng, 8);
            let y = point(&mut rng, 8);
            let a = kernel_eval(&ext, &t, &y).unwrap();
            let b = kernel_eval(&plain, &t, &y).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs());
        }
        let pod = KernelSpec::new(2, &pod_scheme(3), 3).unwrap().with_extended(false);
        assert!(pod.extended());
    }

    #[test]
    fn dimension_checks() {
        let spec = KernelSpec::new(2, &pod_scheme(3), 3).unwrap();
        assert!(matches!(kernel_eval(&spec, &[0.1; 2], &[0.1; 3]), Err(KernelError::DimensionMismatch { .. })));
        assert!(KernelSpec::new(2, &pod_scheme(3), 4).is_err());
        let big = KernelSpec::new(2, &pod_scheme(13), 13).unwrap();
        assert!(matches!(kernel_eval_bruteforce(&big, &[0.0; 13], &[0.0; 13]), Err(KernelError::TooLarge(13))));
    }

    #[test]
    fn pod_overflow_reports_log2() {
        let s = 200;
        let order = (0..=s).map(|l| ExtendedReal::factorial(2 * l as u64).powi(2)).collect();
        let scheme = WeightScheme::pod(order, vec![1.0; s]).unwrap();
        let spec = KernelSpec::new(2, &scheme, s).unwrap();
        match kernel_eval(&spec, &vec![0.0; s], &vec![0.0; s]) {
            Err(KernelError::Overflow { log2 }) => assert!(log2 > 1024.0),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn eta_table_matches_eta() {
        let tab = eta_table(4, 9).unwrap();
        for (m, v) in tab.iter().enumerate() {
            assert_relative_eq!(*v, eta(4, m as f64 / 9.0).unwrap(), max_relative = 1e-13);
            assert_eq!(*v, tab[(9 - m) % 9]);
        }
    }
}
