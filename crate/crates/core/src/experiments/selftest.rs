//! Quick oracle checks run by the `selftest` subcommand.

use crate::interpolant::Interpolant;
use crate::kernel::{eta, kernel_eval, kernel_eval_bruteforce, KernelSpec};
use crate::lattice::{cbc_candidates, cbc_construct, criterion_S, Lattice};
use crate::numerics::{bernoulli_poly, zeta};
use crate::weights::WeightScheme;
use crate::ExtendedReal;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> crate::Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

fn small_spod() -> crate::Result<WeightScheme> {
    let order = (0..=8).map(|l| ExtendedReal::factorial(l as u64)).collect();
    let gamma = vec![vec![0.9, 0.3], vec![0.5, 0.2], vec![0.4, 0.1], vec![0.3, 0.05]];
    Ok(WeightScheme::spod(2, order, gamma)?)
}

fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
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

pub fn run() -> Vec<Check> {
    vec![
        check("eta matches its cosine series", || {
            let d = 0.3;
            let series: f64 = (1..200_000).map(|h| 2.0 * (2.0 * std::f64::consts::PI * h as f64 * d).cos() / (h as f64).powi(2)).sum();
            let got = eta(2, d)?;
            let err = (got - series).abs();
            Ok((err < 1e-4, format!("|diff| = {err:.2e}")))
        }),
        check("Bernoulli and zeta values", || {
            let b = bernoulli_poly(4, 0.25)?;
            let expect = 0.25f64.powi(4) - 2.0 * 0.25f64.powi(3) + 0.25f64.powi(2) - 1.0 / 30.0;
            let z = zeta(4.0)? - std::f64::consts::PI.powi(4) / 90.0;
            Ok(((b - expect).abs() < 1e-15 && z.abs() < 1e-14, format!("{:.1e}, {:.1e}", b - expect, z)))
        }),
        check("SPOD kernel recursion equals enumeration", || {
            let spec = KernelSpec::new(2, &small_spod()?, 4)?;
            let t = [0.1, 0.7, 0.35, 0.9];
            let y = [0.6, 0.2, 0.95, 0.45];
            let a = kernel_eval(&spec, &t, &y)?;
            let b = kernel_eval_bruteforce(&spec, &t, &y)?;
            Ok(((a - b).abs() <= 1e-12 * b.abs(), format!("{a} vs {b}")))
        }),
        check("CBC picks an exhaustive minimizer for n = 13", || {
            let spec = KernelSpec::new(2, &small_spod()?, 2)?;
            let report = cbc_construct(&spec, 13, 2)?;
            let best = cbc_candidates(13)
                .into_iter()
                .map(|c| criterion_S(&spec, &Lattice::new(13, vec![report.z[0], c]).unwrap()))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let got = report.criterion_trace[1];
            Ok((got <= best * (1.0 + 1e-12), format!("{got} vs {best}")))
        }),
        check("circulant solve equals dense solve", || {
            let spec = KernelSpec::new(2, &small_spod()?, 3)?;
            let lat = Lattice::new(11, vec![1, 4, 5])?;
            let pts: Vec<Vec<f64>> = (1..=11).map(|k| lat.point_mod(k)).collect();
            let f: Vec<f64> = pts.iter().map(|p| (p[0] - 0.5).powi(2) + p[1] * p[2]).collect();
            let gram: Vec<Vec<f64>> = pts
                .iter()
                .map(|a| pts.iter().map(|b| kernel_eval(&spec, a, b)).collect::<Result<_, _>>())
                .collect::<Result<_, _>>()?;
            let dense = dense_solve(gram, f.clone());
            let itp = Interpolant::build(&spec, &lat, &f)?;
            let err = itp.coeffs().iter().zip(&dense).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = dense.iter().map(|v| v.abs()).fold(0.0, f64::max);
            Ok((err <= 1e-10 * scale, format!("max |diff| = {err:.2e}")))
        }),
    ]
}
