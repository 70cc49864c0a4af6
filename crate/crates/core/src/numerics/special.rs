use std::sync::OnceLock;

use super::NumericsError;

/// Highest Bernoulli degree kept in the cache.
pub const MAX_BERNOULLI_DEGREE: u32 = 16;

/// Terms summed explicitly before the Euler–Maclaurin tail in [`zeta`].
const ZETA_TERMS: u64 = 10_000;

/// `e^{1/e}`, the bound constant for `max(|u|, 1) ≤ (e^{1/e})^{|u|}`.
pub fn e_pow_inv_e() -> f64 {
    static CONST: OnceLock<f64> = OnceLock::new();
    *CONST.get_or_init(|| (1.0 / std::f64::consts::E).exp())
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Ratio {
    num: i128,
    den: i128,
}

impl Ratio {
    fn new(num: i128, den: i128) -> Self {
        let g = gcd_i128(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Ratio { num: s * num / g, den: s * den / g }
    }

    fn sub(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.den - o.num * self.den, self.den * o.den)
    }

    fn scale(self, k: i128) -> Ratio {
        Ratio::new(self.num * k, self.den)
    }

    fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Bernoulli numbers `b_0..=b_16` with the `b_1 = -1/2` convention, computed
/// exactly by the Akiyama–Tanigawa recurrence.
fn bernoulli_numbers() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = MAX_BERNOULLI_DEGREE as usize;
        let mut out = Vec::with_capacity(n + 1);
        let mut row: Vec<Ratio> = Vec::with_capacity(n + 1);
        for m in 0..=n {
            row.push(Ratio::new(1, m as i128 + 1));
            for j in (1..=m).rev() {
                row[j - 1] = row[j - 1].sub(row[j]).scale(j as i128);
            }
            out.push(row[0].to_f64());
        }
        // Akiyama–Tanigawa yields b_1 = +1/2
        out[1] = -0.5;
        out
    })
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut c = 1u64;
    for i in 0..k as u64 {
        c = c * (n as u64 - i) / (i + 1);
    }
    c as f64
}

/// Bernoulli number `b_m` (`b_1 = -1/2`).
pub fn bernoulli_number(m: u32) -> Result<f64, NumericsError> {
    if m > MAX_BERNOULLI_DEGREE {
        return Err(NumericsError::UnsupportedDegree(m));
    }
    Ok(bernoulli_numbers()[m as usize])
}

/// Bernoulli polynomial `B_m(x)` for even `m` in `2..=16`.
pub fn bernoulli_poly(degree: u32, x: f64) -> Result<f64, NumericsError> {
    if degree == 0 || degree % 2 == 1 || degree > MAX_BERNOULLI_DEGREE {
        return Err(NumericsError::UnsupportedDegree(degree));
    }
    let b = bernoulli_numbers();
    // Horner in x over coefficients C(m,k) b_k of x^{m-k}
    let mut acc = 0.0;
    for k in 0..=degree {
        acc = acc * x + binomial(degree, k) * b[k as usize];
    }
    Ok(acc)
}

/// Riemann zeta `ζ(x)` for real `x > 1`.
///
/// Sums the first 10⁴ terms explicitly (smallest first) and adds the
/// Euler–Maclaurin tail with the `B_2` and `B_4` corrections.
pub fn zeta(x: f64) -> Result<f64, NumericsError> {
    if !(x > 1.0) {
        return Err(NumericsError::Domain(format!("zeta requires x > 1, got {x}")));
    }
    let n = ZETA_TERMS as f64;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for k in (1..ZETA_TERMS).rev() {
        let term = (k as f64).powf(-x) - comp;
        let t = sum + term;
        comp = (t - sum) - term;
        sum = t;
    }
    let nx = n.powf(-x);
    let tail = n * nx / (x - 1.0) + 0.5 * nx + x * nx / (12.0 * n)
        - x * (x + 1.0) * (x + 2.0) * nx / (720.0 * n * n * n);
    Ok(sum + tail)
}

/// Stirling number of the second kind `S(σ, m)`; zero when `m > σ`.
pub fn stirling2(sigma: u32, m: u32) -> u128 {
    if m > sigma {
        return 0;
    }
    let mut row = vec![0u128; sigma as usize + 1];
    row[0] = 1;
    for n in 1..=sigma as usize {
        for k in (1..=n).rev() {
            row[k] = k as u128 * row[k] + row[k - 1];
        }
        row[0] = 0;
    }
    row[m as usize]
}

/// Touchard polynomial `Σ_{m=0}^{σ} S(σ,m) x^m`.
pub fn bell_touchard(sigma: u32, x: f64) -> f64 {
    (0..=sigma).rev().fold(0.0, |acc, m| acc * x + stirling2(sigma, m) as f64)
}
