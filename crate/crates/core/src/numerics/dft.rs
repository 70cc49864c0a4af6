//! Discrete Fourier transforms of arbitrary length.
//!
//! Backed by `rustfft`, which selects mixed-radix or Bluestein algorithms per
//! length, so prime lengths stay `O(n log n)`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `X_j = Σ_k v_k e^{-2πi jk/n}`
    Forward,
    /// conjugate transform scaled by `1/n`
    Inverse,
}

/// A complex vector carried through the transforms.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector(pub Vec<Complex64>);

impl ComplexVector {
    pub fn from_real(v: &[f64]) -> Self {
        ComplexVector(v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn re(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.re).collect()
    }
}

/// Planned forward/inverse pair for one length; cheap to clone and share.
#[derive(Clone)]
pub struct DftPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for DftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DftPlan").field("len", &self.len).finish()
    }
}

impl DftPlan {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "transform length must be positive");
        let mut planner = FftPlanner::new();
        DftPlan {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
    }

    /// Inverse transform including the `1/n` scaling.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        self.inverse.process(buf);
        let scale = 1.0 / self.len as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    pub fn apply(&self, buf: &mut [Complex64], dir: Direction) {
        match dir {
            Direction::Forward => self.forward(buf),
            Direction::Inverse => self.inverse(buf),
        }
    }
}

/// One-shot transform. Repeated transforms of the same length should reuse a
/// [`DftPlan`].
pub fn dft(v: &ComplexVector, direction: Direction) -> ComplexVector {
    let mut out = v.0.clone();
    DftPlan::new(v.len()).apply(&mut out, direction);
    ComplexVector(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive(v: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = v.len();
        (0..n)
            .map(|j| {
                v.iter()
                    .enumerate()
                    .map(|(k, x)| {
                        let ang = sign * 2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
                        x * Complex64::new(ang.cos(), ang.sin())
                    })
                    .sum()
            })
            .collect()
    }

    fn random(n: usize, seed: u64) -> ComplexVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexVector((0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
    }

    #[test]
    fn delta_and_constant() {
        let d = dft(&ComplexVector::from_real(&[1.0, 0.0, 0.0, 0.0]), Direction::Forward);
        for c in d.as_slice() {
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        let c = dft(&ComplexVector::from_real(&[1.0, 1.0, 1.0]), Direction::Forward);
        assert!((c.0[0] - Complex64::new(3.0, 0.0)).norm() < 1e-14);
        assert!(c.0[1].norm() < 1e-14 && c.0[2].norm() < 1e-14);
    }

    #[test]
    fn matches_naive_and_round_trips() {
        let v = random(97, 1);
        let f = dft(&v, Direction::Forward);
        let oracle = naive(v.as_slice(), -1.0);
        let scale: f64 = oracle.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (a, b) in f.as_slice().iter().zip(&oracle) {
            assert!((a - b).norm() <= 1e-12 * scale);
        }
        let back = dft(&f, Direction::Inverse);
        for (a, b) in back.as_slice().iter().zip(v.as_slice()) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0));
        }
    }

    #[test]
    fn parseval_and_linearity() {
        for (i, &n) in [7usize, 64, 97, 1000].iter().enumerate() {
            let v = random(n, 10 + i as u64);
            let w = random(n, 100 + i as u64);
            let fv = dft(&v, Direction::Forward);
            let fw = dft(&w, Direction::Forward);
            let e_time: f64 = v.as_slice().iter().map(|c| c.norm_sqr()).sum();
            let e_freq: f64 = fv.as_slice().iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
            assert!((e_time - e_freq).abs() <= 1e-10 * e_time);
            let a = Complex64::new(0.3, -1.2);
            let comb = ComplexVector(v.0.iter().zip(&w.0).map(|(x, y)| a * x + y).collect());
            let fc = dft(&comb, Direction::Forward);
            for j in 0..n {
                let expect = a * fv.0[j] + fw.0[j];
                assert!((fc.0[j] - expect).norm() <= 1e-10 * (1.0 + expect.norm()));
            }
        }
    }
}
