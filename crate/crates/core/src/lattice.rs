//! Rank-1 lattices, the CBC construction and generating-vector files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::kernel::{eta_table, Accum, KernelError, KernelSpec};
use crate::numerics::{zeta, ExtendedReal};
use crate::weights::WeightScheme;

/// Results below this fraction of the minuend are flagged as cancellation-limited.
pub const CANCELLATION_THRESHOLD: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LatticeError {
    #[error("point count must be at least {min}, got {n}")]
    InvalidN { n: u64, min: u64 },
    #[error("z_{j} = {z} is not a unit modulo n = {n}")]
    NotCoprime { j: usize, z: u64, n: u64 },
    #[error("point index {k} outside 1..={n}")]
    IndexOutOfRange { k: u64, n: u64 },
    #[error("generating vector needs at least {need} dimensions, got {got}")]
    TooFewDimensions { need: usize, got: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("file has no '# n=' header and no point count was supplied")]
    MissingN,
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Point set `t_k = {k z / n}`, `k = 1..=n`, with `t_n = t_0 = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    n: u64,
    z: Vec<u64>,
}

impl Lattice {
    pub fn new(n: u64, z: Vec<u64>) -> Result<Self, LatticeError> {
        if n == 0 {
            return Err(LatticeError::InvalidN { n, min: 1 });
        }
        if n > 1 {
            for (j, &zj) in z.iter().enumerate() {
                if zj == 0 || zj >= n || gcd(zj, n) != 1 {
                    return Err(LatticeError::NotCoprime { j: j + 1, z: zj, n });
                }
            }
        }
        Ok(Lattice { n, z })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn z(&self) -> &[u64] {
        &self.z
    }

    pub fn s(&self) -> usize {
        self.z.len()
    }

    /// Restriction to the first `s` coordinates.
    pub fn truncate(&self, s: usize) -> Result<Self, LatticeError> {
        if s > self.s() {
            return Err(LatticeError::TooFewDimensions { need: s, got: self.s() });
        }
        Ok(Lattice { n: self.n, z: self.z[..s].to_vec() })
    }

    /// `k z_j mod n`, valid for any `k ≥ 0`.
    #[inline]
    pub fn residue(&self, k: u64, j: usize) -> u64 {
        ((k as u128 * self.z[j] as u128) % self.n as u128) as u64
    }

    /// `t_k` for `k` in `1..=n`.
    pub fn point(&self, k: u64) -> Result<Vec<f64>, LatticeError> {
        if k == 0 || k > self.n {
            return Err(LatticeError::IndexOutOfRange { k, n: self.n });
        }
        Ok(self.point_mod(k))
    }

    /// `t_{k mod n}` for any `k`.
    pub fn point_mod(&self, k: u64) -> Vec<f64> {
        (0..self.s()).map(|j| self.residue(k, j) as f64 / self.n as f64).collect()
    }
}

/// `t_k` for `k` in `1..=n`.
pub fn lattice_point(lat: &Lattice, k: u64) -> Result<Vec<f64>, LatticeError> {
    lat.point(k)
}

/// Value of the CBC criterion together with its cancellation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionValue {
    /// Clamped at zero.
    pub value: f64,
    /// Value before clamping.
    pub raw: f64,
    /// `(1/n) Σ_k K(t_k, 0)² − 1`, accumulated from `K − 1` directly
    pub minuend: f64,
    /// Set when the result fell below `1e-13 ×` the minuend.
    pub cancelled: bool,
}

impl CriterionValue {
    fn from_parts(minuend: ExtendedReal, subtrahend: ExtendedReal) -> Result<Self, KernelError> {
        let raw = (minuend - subtrahend).to_f64()?;
        let m = minuend.to_f64()?;
        let cancelled = raw < CANCELLATION_THRESHOLD * m;
        if cancelled {
            log::warn!("criterion {raw:e} lost to cancellation against minuend {m:e}");
        }
        Ok(CriterionValue { value: raw.max(0.0), raw, minuend: m, cancelled })
    }

    /// `√2 · 𝒮^{1/4}`, the worst-case `L2` error bound.
    pub fn wce_bound(&self) -> f64 {
        2f64.sqrt() * self.value.powf(0.25)
    }
}

/// Incrementally built `Σ_u γ_u² (2ζ(2α))^{|u|}` for the prefix `{1:d}`.
#[derive(Debug, Clone)]
pub struct AliasFloor<'a> {
    spec: &'a KernelSpec,
    c: f64,
    state: FloorState,
    dim: usize,
}

#[derive(Debug, Clone)]
enum FloorState {
    /// excess over `γ_∅² = 1`
    Product(ExtendedReal),
    Pod(Vec<ExtendedReal>),
    /// `q[ℓ][ℓ']` sums `Π_j c γ_{j,ν_j} γ_{j,ν'_j}` over pairs with `|ν| = ℓ`, `|ν'| = ℓ'`
    Spod(Vec<Vec<ExtendedReal>>),
}

impl<'a> AliasFloor<'a> {
    pub fn new(spec: &'a KernelSpec) -> Result<Self, KernelError> {
        let c = 2.0 * zeta(2.0 * spec.alpha() as f64)?;
        let len = spec.row_len();
        let state = match spec.scheme() {
            WeightScheme::Product { .. } => FloorState::Product(ExtendedReal::ZERO),
            WeightScheme::Pod { .. } => {
                let mut row = vec![ExtendedReal::ZERO; len];
                row[0] = ExtendedReal::ONE;
                FloorState::Pod(row)
            }
            WeightScheme::Spod { .. } => {
                let mut q = vec![vec![ExtendedReal::ZERO; len]; len];
                q[0][0] = ExtendedReal::ONE;
                FloorState::Spod(q)
            }
        };
        Ok(AliasFloor { spec, c, state, dim: 0 })
    }

    /// Adds the next coordinate.
    pub fn push(&mut self) {
        let j = self.dim;
        let c = self.c;
        match (&mut self.state, self.spec.scheme()) {
            (FloorState::Product(p), WeightScheme::Product { gamma }) => {
                let x = c * gamma[j] * gamma[j];
                *p = *p + (ExtendedReal::ONE + *p) * x;
            }
            (FloorState::Pod(row), WeightScheme::Pod { gamma, .. }) => {
                let g = c * gamma[j] * gamma[j];
                for l in (1..=j + 1).rev() {
                    let prev = row[l - 1];
                    row[l] += prev * g;
                }
            }
            (FloorState::Spod(q), WeightScheme::Spod { sigma, gamma, .. }) => {
                let sigma = *sigma;
                let gj = &gamma[j];
                let top = (j + 1) * sigma;
                for l in (0..=top).rev() {
                    for lp in (0..=top).rev() {
                        if l == 0 && lp == 0 {
                            continue;
                        }
                        let mut acc = ExtendedReal::ZERO;
                        for nu in 1..=sigma.min(l) {
                            for nup in 1..=sigma.min(lp) {
                                acc += q[l - nu][lp - nup] * (gj[nu - 1] * gj[nup - 1]);
                            }
                        }
                        q[l][lp] += acc * c;
                    }
                }
            }
            _ => unreachable!("floor state matches scheme kind"),
        }
        self.dim += 1;
    }

    pub fn value(&self) -> ExtendedReal {
        self.excess() + ExtendedReal::ONE
    }

    /// `value() − 1`, the sum over nonempty `u`.
    pub fn excess(&self) -> ExtendedReal {
        match (&self.state, self.spec.scheme()) {
            (FloorState::Product(p), _) => *p,
            (FloorState::Pod(row), WeightScheme::Pod { order, .. }) => {
                let mut t = ExtendedReal::ZERO;
                for (p, g) in row.iter().zip(order).skip(1) {
                    t += *p * *g * *g;
                }
                t
            }
            (FloorState::Spod(q), WeightScheme::Spod { order, .. }) => {
                let mut t = ExtendedReal::ZERO;
                for (l, qr) in q.iter().enumerate() {
                    for (lp, v) in qr.iter().enumerate() {
                        if (l, lp) != (0, 0) && !v.is_zero() {
                            t += *v * order[l] * order[lp];
                        }
                    }
                }
                t
            }
            _ => unreachable!("floor state matches scheme kind"),
        }
    }
}

fn check_dim(spec: &KernelSpec, lat: &Lattice) -> Result<(), LatticeError> {
    if spec.s() != lat.s() {
        return Err(KernelError::DimensionMismatch { expected: spec.s(), got: lat.s() }.into());
    }
    Ok(())
}

/// Sum in increasing order, so any permutation of the same terms gives the
/// same bits. Candidates related by a symmetry of the lattice then tie exactly.
fn sorted_sum(terms: &mut [ExtendedReal]) -> ExtendedReal {
    terms.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut sum = ExtendedReal::ZERO;
    for v in terms.iter() {
        sum += *v;
    }
    sum
}

fn kernel_square_sum<S: Accum + Send>(spec: &KernelSpec, lat: &Lattice, table: &[f64]) -> ExtendedReal {
    let n = lat.n();
    let mut squares: Vec<ExtendedReal> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut row = spec.empty_row::<S>();
            for j in 0..lat.s() {
                spec.push_coordinate(&mut row, j, table[lat.residue(k, j) as usize]);
            }
            let r = spec.finish_excess(&row);
            r * (r + ExtendedReal::from_f64(2.0))
        })
        .collect();
    sorted_sum(&mut squares)
}

/// `𝒮_s(z) = (1/n) Σ_k K(t_k, 0)² − Σ_u γ_u² (2ζ(2α))^{|u|}` with diagnostics.
pub fn criterion_detailed(spec: &KernelSpec, lat: &Lattice) -> Result<CriterionValue, LatticeError> {
    check_dim(spec, lat)?;
    let table = eta_table(spec.alpha(), lat.n() as usize)?;
    let sum = if spec.extended() {
        kernel_square_sum::<ExtendedReal>(spec, lat, &table)
    } else {
        kernel_square_sum::<f64>(spec, lat, &table)
    };
    let minuend = sum * (1.0 / lat.n() as f64);
    let mut floor = AliasFloor::new(spec)?;
    for _ in 0..spec.s() {
        floor.push();
    }
    Ok(CriterionValue::from_parts(minuend, floor.excess())?)
}

/// `𝒮_s(z)`, clamped at zero.
#[allow(non_snake_case)]
pub fn criterion_S(spec: &KernelSpec, lat: &Lattice) -> Result<f64, LatticeError> {
    Ok(criterion_detailed(spec, lat)?.value)
}

/// Output of [`cbc_construct`].
#[derive(Debug, Clone, PartialEq)]
pub struct CbcReport {
    pub n: u64,
    pub z: Vec<u64>,
    /// `𝒮_d(z_1..z_d)` for `d = 1..=s`
    pub criterion_trace: Vec<f64>,
    /// `√2 · 𝒮_d^{1/4}`
    pub wce_bound_trace: Vec<f64>,
    /// Dimensions whose criterion value hit the cancellation floor.
    pub cancelled: Vec<usize>,
    pub n_is_prime: bool,
}

impl CbcReport {
    pub fn lattice(&self) -> Lattice {
        Lattice { n: self.n, z: self.z.clone() }
    }

    /// `dimension,z,criterion,bound` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dimension,z,criterion,bound\n");
        for d in 0..self.z.len() {
            let _ = writeln!(
                out,
                "{},{},{:e},{:e}",
                d + 1,
                self.z[d],
                self.criterion_trace[d],
                self.wce_bound_trace[d]
            );
        }
        out
    }
}

/// Units modulo `n` in increasing order (`{1}` for `n = 2`).
pub fn cbc_candidates(n: u64) -> Vec<u64> {
    (1..n).filter(|&c| gcd(c, n) == 1).collect()
}

fn cbc_run<S: Accum + Send + Sync>(spec: &KernelSpec, n: u64, s: usize) -> Result<CbcReport, LatticeError> {
    let table = eta_table(spec.alpha(), n as usize)?;
    let candidates = cbc_candidates(n);
    let mut rows: Vec<Vec<S>> = (0..n).map(|_| spec.empty_row::<S>()).collect();
    let mut floor = AliasFloor::new(spec)?;
    let inv_n = 1.0 / n as f64;
    let mut report = CbcReport {
        n,
        z: Vec::with_capacity(s),
        criterion_trace: Vec::with_capacity(s),
        wce_bound_trace: Vec::with_capacity(s),
        cancelled: Vec::new(),
        n_is_prime: is_prime(n),
    };
    for d in 0..s {
        let minuends: Vec<ExtendedReal> = candidates
            .par_iter()
            .map_init(
                || (rows[0].clone(), Vec::with_capacity(rows.len())),
                |(scratch, terms), &c| {
                    terms.clear();
                    for (k, row) in rows.iter().enumerate() {
                        scratch.copy_from_slice(row);
                        let m = ((k as u128 * c as u128) % n as u128) as usize;
                        spec.push_coordinate(scratch, d, table[m]);
                        let r = spec.finish_excess(scratch);
                        terms.push(r * (r + ExtendedReal::from_f64(2.0)));
                    }
                    sorted_sum(terms) * inv_n
                },
            )
            .collect();
        let best = select_candidate(&minuends);
        let zd = candidates[best];
        rows.par_iter_mut().enumerate().for_each(|(k, row)| {
            let m = ((k as u128 * zd as u128) % n as u128) as usize;
            spec.push_coordinate(row, d, table[m]);
        });
        floor.push();
        let cv = CriterionValue::from_parts(minuends[best], floor.excess())?;
        if cv.cancelled {
            report.cancelled.push(d + 1);
        }
        report.z.push(zd);
        report.criterion_trace.push(cv.value);
        report.wce_bound_trace.push(cv.wce_bound());
    }
    Ok(report)
}

/// Index of the smallest score; exact ties go to the first (smallest) candidate.
pub fn select_candidate(scores: &[ExtendedReal]) -> usize {
    let mut best = 0;
    for (i, v) in scores.iter().enumerate().skip(1) {
        if *v < scores[best] {
            best = i;
        }
    }
    best
}

/// Component-by-component construction of `z` for `s` dimensions.
///
/// Each `z_d` minimizes `𝒮_d` over the units modulo `n` given the prefix;
/// exact ties go to the smallest candidate. The per-point recursion rows are
/// cached between steps.
pub fn cbc_construct(spec: &KernelSpec, n: u64, s: usize) -> Result<CbcReport, LatticeError> {
    if n < 2 {
        return Err(LatticeError::InvalidN { n, min: 2 });
    }
    if s > spec.s() {
        return Err(LatticeError::TooFewDimensions { need: s, got: spec.s() });
    }
    let spec = KernelSpec::new(spec.alpha(), spec.scheme(), s)?.with_extended(spec.extended());
    if !is_prime(n) {
        log::info!("CBC with composite n = {n}");
    }
    if spec.extended() {
        cbc_run::<ExtendedReal>(&spec, n, s)
    } else {
        cbc_run::<f64>(&spec, n, s)
    }
}

/// Nonzero `h* = (h_1, h_2, 0, ...)` with `|h_j| ≤ ⌊√n⌋` and `h*·z ≡ 0 (mod n)`,
/// from the first residue collision on the grid `[0, ⌊√n⌋]²`.
pub fn fooling_vector(n: u64, z: &[u64]) -> Result<Vec<i64>, LatticeError> {
    if z.len() < 2 {
        return Err(LatticeError::TooFewDimensions { need: 2, got: z.len() });
    }
    if n == 0 {
        return Err(LatticeError::InvalidN { n, min: 1 });
    }
    let m = (n as f64).sqrt().floor() as u64;
    let m = if (m + 1) * (m + 1) <= n { m + 1 } else { m };
    let mut seen: HashMap<u64, (u64, u64)> = HashMap::new();
    for h1 in 0..=m {
        for h2 in 0..=m {
            let r = ((h1 as u128 * z[0] as u128 + h2 as u128 * z[1] as u128) % n as u128) as u64;
            if let Some(&(a, b)) = seen.get(&r) {
                let mut h = vec![0i64; z.len()];
                h[0] = h1 as i64 - a as i64;
                h[1] = h2 as i64 - b as i64;
                let dot = h[0] as i128 * z[0] as i128 + h[1] as i128 * z[1] as i128;
                assert!(dot.rem_euclid(n as i128) == 0, "fooling vector congruence");
                return Ok(h);
            }
            seen.insert(r, (h1, h2));
        }
    }
    unreachable!("pigeonhole guarantees a collision")
}

/// Generating vector read from a table file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenVec {
    pub n: Option<u64>,
    pub z: Vec<u64>,
}

impl GenVec {
    /// Lattice from the first `s` entries; `n` falls back to the file header.
    pub fn lattice(&self, n: Option<u64>, s: usize) -> Result<Lattice, LatticeError> {
        let n = n.or(self.n).ok_or(LatticeError::MissingN)?;
        if s > self.z.len() {
            return Err(LatticeError::TooFewDimensions { need: s, got: self.z.len() });
        }
        Lattice::new(n, self.z[..s].iter().map(|&zj| zj % n.max(1)).collect())
    }
}

pub fn parse_genvec(text: &str) -> Result<GenVec, LatticeError> {
    let mut n = None;
    let mut z = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let ln = i + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("n=") {
                n = Some(v.trim().parse().map_err(|_| LatticeError::Parse {
                    line: ln,
                    msg: format!("bad point count {v:?}"),
                })?);
            }
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(LatticeError::Parse { line: ln, msg: format!("expected 'index value', found {line:?}") });
        }
        let parse = |t: &str| {
            t.parse::<u64>()
                .map_err(|_| LatticeError::Parse { line: ln, msg: format!("non-integer token {t:?}") })
        };
        let idx = parse(toks[0])?;
        if idx as usize != z.len() + 1 {
            return Err(LatticeError::Parse {
                line: ln,
                msg: format!("dimension gap: expected index {}, found {idx}", z.len() + 1),
            });
        }
        z.push(parse(toks[1])?);
    }
    Ok(GenVec { n, z })
}

pub fn read_genvec(path: &Path) -> Result<GenVec, LatticeError> {
    let text = std::fs::read_to_string(path).map_err(|e| LatticeError::Io(format!("{}: {e}", path.display())))?;
    parse_genvec(&text)
}

pub fn format_genvec(z: &[u64], n: u64) -> String {
    let mut out = format!("# n={n}\n");
    for (i, zj) in z.iter().enumerate() {
        let _ = writeln!(out, "{} {}", i + 1, zj);
    }
    out
}

pub fn write_genvec(path: &Path, z: &[u64], n: u64) -> Result<(), LatticeError> {
    std::fs::write(path, format_genvec(z, n)).map_err(|e| LatticeError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::kernel_eval;
    use approx::assert_relative_eq;

    fn product_spec(alpha: u32, gamma: Vec<f64>) -> KernelSpec {
        let s = gamma.len();
        KernelSpec::new(alpha, &WeightScheme::product(gamma).unwrap(), s).unwrap()
    }

    #[test]
    fn points() {
        let lat = Lattice::new(5, vec![1, 2]).unwrap();
        assert_eq!(lattice_point(&lat, 1).unwrap(), vec![0.2, 0.4]);
        assert_eq!(lattice_point(&lat, 5).unwrap(), vec![0.0, 0.0]);
        assert!(lattice_point(&lat, 0).is_err());
        assert!(lattice_point(&lat, 6).is_err());
        assert!(matches!(Lattice::new(6, vec![1, 2]), Err(LatticeError::NotCoprime { j: 2, .. })));
    }

    #[test]
    fn group_property() {
        let lat = Lattice::new(11, vec![1, 4, 7]).unwrap();
        for k in 1..=11 {
            for kp in 1..=11 {
                let a = lat.point(k).unwrap();
                let b = lat.point(kp).unwrap();
                let c = lat.point_mod((k + 11 - kp) % 11);
                for j in 0..3 {
                    let d = crate::kernel::frac(a[j] - b[j]);
                    assert!((d - c[j]).abs() < 1e-12 || (d - c[j]).abs() > 1.0 - 1e-12);
                }
            }
        }
    }

    #[test]
    fn criterion_single_point() {
        let z2 = zeta(2.0).unwrap();
        let z4 = zeta(4.0).unwrap();
        let spec = product_spec(2, vec![1.0]);
        let lat = Lattice::new(1, vec![1]).unwrap();
        let v = criterion_S(&spec, &lat).unwrap();
        let expect = 4.0 * z2 + 4.0 * z2 * z2 - 2.0 * z4;
        assert_relative_eq!(v, expect, max_relative = 1e-12);
        assert!((v - 15.238).abs() < 1e-3);
    }

    #[test]
    fn criterion_vanishes_for_negligible_weights() {
        let spec = product_spec(2, vec![1e-30; 3]);
        let lat = Lattice::new(7, vec![1, 2, 3]).unwrap();
        let cv = criterion_detailed(&spec, &lat).unwrap();
        assert!(cv.value < 1e-25);
        assert!(cv.raw > -1e-10 * cv.minuend);
    }

    #[test]
    fn alias_floor_matches_enumeration() {
        let order: Vec<ExtendedReal> = (0..=8).map(|l| ExtendedReal::factorial(l).powf(1.2)).collect();
        let gamma: Vec<Vec<f64>> = (1..=4).map(|j| vec![0.4 / j as f64, 0.1 / j as f64]).collect();
        let spod = WeightScheme::spod(2, order.clone(), gamma).unwrap();
        let pod = WeightScheme::pod(order[..=4].to_vec(), vec![0.5, 0.3, 0.2, 0.1]).unwrap();
        for (alpha, scheme) in [(4, spod), (2, pod), (2, WeightScheme::product(vec![0.5, 0.3, 0.2, 0.1]).unwrap())] {
            let spec = KernelSpec::new(alpha, &scheme, 4).unwrap();
            let c = 2.0 * zeta(2.0 * alpha as f64).unwrap();
            let mut floor = AliasFloor::new(&spec).unwrap();
            for _ in 0..4 {
                floor.push();
            }
            let mut expect = ExtendedReal::ZERO;
            for mask in 0u32..16 {
                let u: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
                let g = scheme.weight_of(&u).unwrap();
                expect += g * g * c.powi(u.len() as i32);
            }
            let got = floor.value();
            assert!(((got / expect).to_f64().unwrap() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn criterion_equals_kernel_square_mean_minus_floor() {
        let spec = product_spec(2, vec![0.8, 0.4]);
        let lat = Lattice::new(9, vec![1, 4]).unwrap();
        let mut m = 0.0;
        for k in 1..=9 {
            let t = lat.point(k).unwrap();
            m += kernel_eval(&spec, &t, &[0.0, 0.0]).unwrap().powi(2);
        }
        m /= 9.0;
        let c = 2.0 * zeta(4.0).unwrap();
        let floor = (1.0 + c * 0.64) * (1.0 + c * 0.16);
        assert_relative_eq!(criterion_S(&spec, &lat).unwrap(), m - floor, max_relative = 1e-11);
    }

    #[test]
    fn cbc_first_coordinate_is_one() {
        let spec = product_spec(2, vec![0.7]);
        let vals: Vec<f64> = cbc_candidates(7)
            .iter()
            .map(|&c| criterion_S(&spec, &Lattice::new(7, vec![c]).unwrap()).unwrap())
            .collect();
        for v in &vals {
            assert_relative_eq!(*v, vals[0], max_relative = 1e-13);
        }
        let rep = cbc_construct(&spec, 7, 1).unwrap();
        assert_eq!(rep.z, vec![1]);
        assert!(rep.n_is_prime);
    }

    #[test]
    fn cbc_two_points() {
        let spec = product_spec(2, vec![0.5, 0.25]);
        let rep = cbc_construct(&spec, 2, 2).unwrap();
        assert_eq!(rep.z, vec![1, 1]);
        assert!(cbc_construct(&spec, 1, 2).is_err());
    }

    #[test]
    fn cbc_trace_matches_direct_criterion() {
        let order: Vec<ExtendedReal> = (0..=10).map(|l| ExtendedReal::factorial(l).powf(1.4)).collect();
        let gamma: Vec<Vec<f64>> = (1..=5).map(|j| vec![0.3 / j as f64, 0.05 / j as f64]).collect();
        let spec = KernelSpec::new(4, &WeightScheme::spod(2, order, gamma).unwrap(), 5).unwrap();
        let rep = cbc_construct(&spec, 32, 5).unwrap();
        assert!(!rep.n_is_prime);
        for d in 1..=5 {
            let sub = KernelSpec::new(4, spec.scheme(), d).unwrap();
            let lat = rep.lattice().truncate(d).unwrap();
            let direct = criterion_S(&sub, &lat).unwrap();
            assert_relative_eq!(rep.criterion_trace[d - 1], direct, max_relative = 1e-10);
            assert_relative_eq!(rep.wce_bound_trace[d - 1], 2f64.sqrt() * direct.powf(0.25), max_relative = 1e-10);
        }
        for w in rep.criterion_trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("dimension,z,criterion,bound\n1,1,"));
    }

    #[test]
    fn fooling_vector_small() {
        let h = fooling_vector(4, &[1, 1]).unwrap();
        assert!(h[0] != 0 || h[1] != 0);
        assert_eq!((h[0] + h[1]).rem_euclid(4), 0);
        assert!(h[0].abs() <= 2 && h[1].abs() <= 2);
        assert!(fooling_vector(4, &[1]).is_err());
    }

    #[test]
    fn genvec_formats() {
        let g = parse_genvec("1 1\n2 182667\n").unwrap();
        assert_eq!(g.z, vec![1, 182667]);
        assert_eq!(g.n, None);
        assert!(matches!(g.lattice(None, 2), Err(LatticeError::MissingN)));
        assert_eq!(g.lattice(Some(1048576), 2).unwrap().z(), &[1, 182667]);
        assert!(matches!(parse_genvec("1 1\n3 5\n"), Err(LatticeError::Parse { line: 2, .. })));
        assert!(matches!(parse_genvec("# n=8\n1 x\n"), Err(LatticeError::Parse { line: 2, .. })));
        assert!(matches!(parse_genvec("1 1 1\n"), Err(LatticeError::Parse { line: 1, .. })));
        let text = format_genvec(&[1, 3, 5], 8);
        let back = parse_genvec(&text).unwrap();
        assert_eq!(back, GenVec { n: Some(8), z: vec![1, 3, 5] });
    }
}
