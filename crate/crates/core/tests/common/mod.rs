//! Independent oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::f64::consts::PI;

use lattice_kernel::fem::DiffusionModel;
use lattice_kernel::interpolant::TrigPolynomial;
use lattice_kernel::kernel::{kernel_eval, KernelSpec};
use lattice_kernel::numerics::Complex64;
use lattice_kernel::weights::{derive, PdeWeightInput, WeightKind, WeightScheme};
use lattice_kernel::{DerivedParams, Lattice};
use rand::Rng;

/// Weights derived from the diffusion model with `θ = 2.4`, `p = 1/2.2`.
pub fn pde_params(kind: WeightKind, c: f64, s: usize) -> DerivedParams {
    let model = DiffusionModel::new(c, 2.4, s).unwrap();
    let input = PdeWeightInput::new(1.0 / 2.2, model.decay_sequence(s), 0.1).unwrap();
    derive(kind, &input, s).unwrap()
}

pub fn pde_spec(kind: WeightKind, c: f64, s: usize) -> KernelSpec {
    let p = pde_params(kind, c, s);
    KernelSpec::new(p.alpha, &p.scheme, s).unwrap()
}

pub fn product_spec(alpha: u32, gamma: &[f64]) -> KernelSpec {
    KernelSpec::new(alpha, &WeightScheme::product(gamma.to_vec()).unwrap(), gamma.len()).unwrap()
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// `[K(t_k, t_l)]` by direct kernel evaluation, `k, l = 1..=n`.
pub fn gram(spec: &KernelSpec, lat: &Lattice) -> Vec<Vec<f64>> {
    let pts: Vec<Vec<f64>> = (1..=lat.n()).map(|k| lat.point_mod(k)).collect();
    pts.iter()
        .map(|a| pts.iter().map(|b| kernel_eval(spec, a, b).unwrap()).collect())
        .collect()
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// `1/r(h)` for product weights.
pub fn inv_r_product(alpha: u32, gamma: &[f64], h: &[i64]) -> f64 {
    h.iter()
        .zip(gamma)
        .map(|(&hj, g)| if hj == 0 { 1.0 } else { g / (hj.unsigned_abs() as f64).powi(alpha as i32) })
        .product()
}

/// All `h ∈ [−m, m]^s`.
pub fn box_indices(s: usize, m: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..s {
        out = out
            .into_iter()
            .flat_map(|h| (-m..=m).map(move |v| [h.clone(), vec![v]].concat()))
            .collect();
    }
    out
}

/// `Σ_h Σ_{h'} 1/(r(h) r(h'))` over `h, h' ∈ [−m, m]^s` with `h + h'` in the
/// dual lattice and `h' ≠ −h`, plus the bound `2 T K(0,0)` on the omitted
/// pairs, `T` being the mass of `1/r` outside the box.
pub fn dual_lattice_criterion(alpha: u32, gamma: &[f64], lat: &Lattice, m: i64) -> (f64, f64) {
    let n = lat.n() as i64;
    let hs = box_indices(gamma.len(), m);
    let weights: Vec<f64> = hs.iter().map(|h| inv_r_product(alpha, gamma, h)).collect();
    let residues: Vec<i64> = hs
        .iter()
        .map(|h| h.iter().zip(lat.z()).map(|(a, &z)| a * z as i64).sum::<i64>().rem_euclid(n))
        .collect();
    let mut by_residue = vec![0.0; n as usize];
    for (r, w) in residues.iter().zip(&weights) {
        by_residue[*r as usize] += w;
    }
    let mut total = 0.0;
    for ((r, w), h) in residues.iter().zip(&weights).zip(&hs) {
        let partner = ((n - r) % n) as usize;
        // the pair h' = −h always lies in the class of −h·z; drop it
        let minus_h = inv_r_product(alpha, gamma, &h.iter().map(|v| -v).collect::<Vec<_>>());
        total += w * (by_residue[partner] - minus_h);
    }
    let zeta_a: f64 = (1..2_000_000u64).map(|k| (k as f64).powi(-(alpha as i32))).sum();
    let inside: f64 = (1..=m).map(|k| (k as f64).powi(-(alpha as i32))).sum();
    let all: f64 = gamma.iter().map(|g| 1.0 + 2.0 * g * zeta_a).product();
    let boxed: f64 = gamma.iter().map(|g| 1.0 + 2.0 * g * inside).product();
    (total, 2.0 * (all - boxed) * all)
}

/// Real trig polynomial with random terms in `[−m, m]^s`, unit `H` norm.
pub fn random_unit_trig(rng: &mut impl Rng, spec: &KernelSpec, terms: usize, m: i64) -> TrigPolynomial {
    let s = spec.s();
    let mut f = TrigPolynomial::new();
    for _ in 0..terms {
        let h: Vec<i64> = (0..s).map(|_| rng.gen_range(-m..=m)).collect();
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        f.add_real_pair(h, c);
    }
    let norm = lattice_kernel::interpolant::h_norm(spec, &f).unwrap();
    f.scale(1.0 / norm);
    f
}

/// `q(y) = e^{2πi h₁ y₁} − e^{−2πi h₂ y₂}` from a dual vector `h`.
pub fn fooling(h: &[i64], y: &[f64]) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * h[0] as f64 * y[0]) - Complex64::from_polar(1.0, -2.0 * PI * h[1] as f64 * y[1])
}

/// Midpoint rule on an `m × m` grid of `[0,1)²`.
pub fn midpoint_2d(m: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            total += f(&[(i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64]);
        }
    }
    total / (m * m) as f64
}
