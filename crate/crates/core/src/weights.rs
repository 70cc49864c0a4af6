//! Product, POD and SPOD weight families and their PDE-driven choices.
//!
//! Weights are always kept in factored form: the per-coordinate sequences
//! plus, for the order-dependent families, the order weights `Γ_ℓ`.
//! [`WeightScheme::weight_of`] enumerates a single `γ_u` and is meant for
//! oracles and diagnostics only.

use std::fmt::Write as _;
use std::path::Path;

use crate::numerics::{bell_touchard, e_pow_inv_e, stirling2, zeta, ExtendedReal, NumericsError};

/// Largest `|u|` that [`WeightScheme::weight_of`] will enumerate for SPOD weights.
pub const MAX_ENUMERATION: usize = 12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightsError {
    #[error("invalid weight input: {0}")]
    InvalidInput(String),
    #[error(
        "p = {p} is not admissible for POD weights; nearest admissible interval with p̃ > p is ({lower}, {upper})"
    )]
    InadmissiblePod { p: f64, lower: f64, upper: f64 },
    #[error("product weights require p < 1/2, got p = {0}")]
    ProductUnsupported(f64),
    #[error("delta = {delta} outside admissible interval (0, {upper}]")]
    InvalidDelta { delta: f64, upper: f64 },
    #[error("subset of size {0} too large to enumerate; use the recursive kernel evaluation instead")]
    TooLarge(usize),
    #[error("coordinate {index} outside scheme dimension {dim}")]
    OutOfDimension { index: usize, dim: usize },
    #[error("weight file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightKind {
    Product,
    Pod,
    Spod,
}

impl WeightKind {
    pub fn name(&self) -> &'static str {
        match self {
            WeightKind::Product => "product",
            WeightKind::Pod => "pod",
            WeightKind::Spod => "spod",
        }
    }
}

impl std::str::FromStr for WeightKind {
    type Err = WeightsError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "product" | "prod" => Ok(WeightKind::Product),
            "pod" => Ok(WeightKind::Pod),
            "spod" => Ok(WeightKind::Spod),
            other => Err(WeightsError::InvalidInput(format!("unknown weight kind {other:?}"))),
        }
    }
}

/// A structured weight family. `γ_∅ = 1` in every variant.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    /// `γ_u = Π_{j∈u} γ_j`
    Product { gamma: Vec<f64> },
    /// `γ_u = Γ_{|u|} Π_{j∈u} γ_j`, with `order[ℓ] = Γ_ℓ` for `ℓ = 0..=s`
    Pod { order: Vec<ExtendedReal>, gamma: Vec<f64> },
    /// `γ_u = Σ_{ν∈{1:σ}^{|u|}} Γ_{|ν|} Π_{j∈u} γ_{j,ν_j}`; `gamma[j-1][ν-1] = γ_{j,ν}`
    /// and `order[ℓ] = Γ_ℓ` for `ℓ = 0..=s·σ`
    Spod {
        sigma: usize,
        order: Vec<ExtendedReal>,
        gamma: Vec<Vec<f64>>,
    },
}

fn check_positive(seq: &[f64], what: &str) -> Result<(), WeightsError> {
    match seq.iter().position(|&g| !(g > 0.0) || !g.is_finite()) {
        Some(i) => Err(WeightsError::InvalidInput(format!("{what}[{}] = {} is not a positive finite number", i + 1, seq[i]))),
        None => Ok(()),
    }
}

fn check_order(order: &[ExtendedReal], needed: usize) -> Result<(), WeightsError> {
    if order.len() < needed {
        return Err(WeightsError::InvalidInput(format!(
            "order weights defined up to {} but {} are required",
            order.len().saturating_sub(1),
            needed - 1
        )));
    }
    if order.iter().any(|g| !(*g > ExtendedReal::ZERO)) {
        return Err(WeightsError::InvalidInput("order weights must be positive".into()));
    }
    if order[0] != ExtendedReal::ONE {
        return Err(WeightsError::InvalidInput("Γ_0 must equal 1 so that γ_∅ = 1".into()));
    }
    Ok(())
}

impl WeightScheme {
    pub fn product(gamma: Vec<f64>) -> Result<Self, WeightsError> {
        check_positive(&gamma, "gamma")?;
        Ok(WeightScheme::Product { gamma })
    }

    pub fn pod(order: Vec<ExtendedReal>, gamma: Vec<f64>) -> Result<Self, WeightsError> {
        check_positive(&gamma, "gamma")?;
        check_order(&order, gamma.len() + 1)?;
        Ok(WeightScheme::Pod { order, gamma })
    }

    pub fn spod(sigma: usize, order: Vec<ExtendedReal>, gamma: Vec<Vec<f64>>) -> Result<Self, WeightsError> {
        if sigma == 0 {
            return Err(WeightsError::InvalidInput("SPOD degree must be positive".into()));
        }
        for (j, row) in gamma.iter().enumerate() {
            if row.len() != sigma {
                return Err(WeightsError::InvalidInput(format!("gamma row {} has {} entries, expected {sigma}", j + 1, row.len())));
            }
            check_positive(row, "gamma_j_nu")?;
        }
        check_order(&order, gamma.len() * sigma + 1)?;
        Ok(WeightScheme::Spod { sigma, order, gamma })
    }

    pub fn kind(&self) -> WeightKind {
        match self {
            WeightScheme::Product { .. } => WeightKind::Product,
            WeightScheme::Pod { .. } => WeightKind::Pod,
            WeightScheme::Spod { .. } => WeightKind::Spod,
        }
    }

    /// Number of coordinates the scheme is defined for.
    pub fn dim(&self) -> usize {
        match self {
            WeightScheme::Product { gamma } | WeightScheme::Pod { gamma, .. } => gamma.len(),
            WeightScheme::Spod { gamma, .. } => gamma.len(),
        }
    }

    /// SPOD degree; 1 for product and POD weights.
    pub fn sigma(&self) -> usize {
        match self {
            WeightScheme::Spod { sigma, .. } => *sigma,
            _ => 1,
        }
    }

    /// Restriction to the first `s` coordinates.
    pub fn truncate(&self, s: usize) -> Result<Self, WeightsError> {
        if s > self.dim() {
            return Err(WeightsError::OutOfDimension { index: s, dim: self.dim() });
        }
        Ok(match self {
            WeightScheme::Product { gamma } => WeightScheme::Product { gamma: gamma[..s].to_vec() },
            WeightScheme::Pod { order, gamma } => WeightScheme::Pod {
                order: order[..=s].to_vec(),
                gamma: gamma[..s].to_vec(),
            },
            WeightScheme::Spod { sigma, order, gamma } => WeightScheme::Spod {
                sigma: *sigma,
                order: order[..=s * sigma].to_vec(),
                gamma: gamma[..s].to_vec(),
            },
        })
    }

    /// Explicit `γ_u` for a subset of 1-based coordinate indices.
    pub fn weight_of(&self, u: &[usize]) -> Result<ExtendedReal, WeightsError> {
        let dim = self.dim();
        for &j in u {
            if j == 0 || j > dim {
                return Err(WeightsError::OutOfDimension { index: j, dim });
            }
        }
        let mut sorted = u.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.is_empty() {
            return Ok(ExtendedReal::ONE);
        }
        match self {
            WeightScheme::Product { gamma } => {
                Ok(sorted.iter().fold(ExtendedReal::ONE, |acc, &j| acc * ExtendedReal::from(gamma[j - 1])))
            }
            WeightScheme::Pod { order, gamma } => {
                let prod = sorted.iter().fold(ExtendedReal::ONE, |acc, &j| acc * ExtendedReal::from(gamma[j - 1]));
                Ok(order[sorted.len()] * prod)
            }
            WeightScheme::Spod { sigma, order, gamma } => {
                if sorted.len() > MAX_ENUMERATION {
                    return Err(WeightsError::TooLarge(sorted.len()));
                }
                let k = sorted.len();
                let mut nu = vec![1usize; k];
                let mut total = ExtendedReal::ZERO;
                loop {
                    let mut prod = ExtendedReal::ONE;
                    for (i, &j) in sorted.iter().enumerate() {
                        prod *= ExtendedReal::from(gamma[j - 1][nu[i] - 1]);
                    }
                    let ord: usize = nu.iter().sum();
                    total += order[ord] * prod;
                    // odometer over {1..σ}^k
                    let mut pos = 0;
                    while pos < k {
                        if nu[pos] < *sigma {
                            nu[pos] += 1;
                            break;
                        }
                        nu[pos] = 1;
                        pos += 1;
                    }
                    if pos == k {
                        break;
                    }
                }
                Ok(total)
            }
        }
    }
}

/// Decay data feeding the weight choices: summability exponent `p`, the
/// sequence `b_j` and the product-weight rate sacrifice `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeWeightInput {
    pub p: f64,
    pub b: Vec<f64>,
    pub delta: f64,
}

impl PdeWeightInput {
    pub fn new(p: f64, b: Vec<f64>, delta: f64) -> Result<Self, WeightsError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(WeightsError::InvalidInput(format!("p must lie in (0,1), got {p}")));
        }
        check_positive(&b, "b")?;
        if b.windows(2).any(|w| w[1] > w[0]) {
            return Err(WeightsError::InvalidInput("b must be non-increasing".into()));
        }
        Ok(PdeWeightInput { p, b, delta })
    }

    fn prefix(&self, s: usize) -> Result<&[f64], WeightsError> {
        self.b.get(..s).ok_or_else(|| {
            WeightsError::InvalidInput(format!("b has {} entries but dimension {s} was requested", self.b.len()))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductScenario {
    /// `p ∈ ∪_k [2/(4k+3), 2/(4k+1)]`
    A,
    /// `p ∈ (2/5, 1/2) ∪ ∪_k (2/(4k+5), 2/(4k+3))`
    B,
}

/// Smoothness, rate exponent and weights chosen for a PDE problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedParams {
    pub alpha: u32,
    pub sigma: u32,
    pub lambda: f64,
    pub scheme: WeightScheme,
    /// Theoretical convergence rate `r` of the interpolation error `O(n^{-r})`.
    pub rate: f64,
    pub scenario: Option<ProductScenario>,
}

impl DerivedParams {
    fn validate(&self) -> Result<(), WeightsError> {
        let lo = 1.0 / self.alpha as f64;
        if !(self.lambda > lo && self.lambda <= 1.0) {
            return Err(WeightsError::InvalidInput(format!(
                "lambda = {} outside (1/alpha, 1] = ({lo}, 1]",
                self.lambda
            )));
        }
        Ok(())
    }
}

fn lambda_from_p(p: f64) -> f64 {
    p / (2.0 - p)
}

/// SPOD weights with `α = 2⌊1/p + 1/2⌋`, `λ = p/(2-p)`.
pub fn derive_spod(input: &PdeWeightInput, s: usize) -> Result<DerivedParams, WeightsError> {
    let p = input.p;
    let b = input.prefix(s)?;
    let sigma = (1.0 / p + 0.5).floor() as u32;
    let alpha = 2 * sigma;
    let lambda = lambda_from_p(p);
    let expo = 2.0 / (1.0 + lambda);
    let denom = (2.0 * e_pow_inv_e() * zeta(alpha as f64 * lambda)?).sqrt();
    let sig = sigma as usize;

    let mut order = Vec::with_capacity(s * sig + 1);
    let mut fact = ExtendedReal::ONE;
    for l in 0..=s * sig {
        if l > 0 {
            fact *= ExtendedReal::from_f64(l as f64);
        }
        order.push(fact.powf(expo));
    }
    let gamma = b
        .iter()
        .map(|&bj| {
            (1..=sig)
                .map(|nu| (bj.powi(nu as i32) * stirling2(sigma, nu as u32) as f64 / denom).powf(expo))
                .collect()
        })
        .collect();
    let params = DerivedParams {
        alpha,
        sigma,
        lambda,
        scheme: WeightScheme::spod(sig, order, gamma)?,
        rate: 1.0 / (2.0 * p) - 0.25,
        scenario: None,
    };
    params.validate()?;
    Ok(params)
}

/// Admissible POD interval containing `p`, or the nearest one above `p`.
fn pod_interval(p: f64) -> Result<u32, (f64, f64)> {
    let x = 1.0 / p;
    let k = x.floor();
    if k >= 1.0 && x > k && x < k + 0.5 {
        return Ok(k as u32);
    }
    // p̃ > p means 1/p̃ < x: step down to the interval just below x
    let kk = if x - k >= 0.5 { k } else { k - 1.0 };
    if kk < 1.0 {
        return Err((2.0 / 3.0, 1.0));
    }
    Err((2.0 / (2.0 * kk + 1.0), 1.0 / kk))
}

/// POD weights with `α = 2⌊1/p⌋`, `λ = p/(2-p)`.
pub fn derive_pod(input: &PdeWeightInput, s: usize) -> Result<DerivedParams, WeightsError> {
    let p = input.p;
    let b = input.prefix(s)?;
    let sigma = pod_interval(p).map_err(|(lower, upper)| WeightsError::InadmissiblePod { p, lower, upper })?;
    let alpha = 2 * sigma;
    let lambda = lambda_from_p(p);
    let two_zeta = 2.0 * zeta(alpha as f64 * lambda)?;
    let expo = 1.0 / (1.0 + lambda);

    let mut order = Vec::with_capacity(s + 1);
    for l in 0..=s {
        let f = ExtendedReal::factorial(sigma as u64 * l as u64);
        let den = ExtendedReal::from_f64(l.max(1) as f64) * ExtendedReal::from_f64(two_zeta).powi(l as i32);
        order.push((f * f / den).powf(expo));
    }
    let gamma = b.iter().map(|&bj| bell_touchard(sigma, bj).powf(2.0 * expo)).collect();
    let params = DerivedParams {
        alpha,
        sigma,
        lambda,
        scheme: WeightScheme::pod(order, gamma)?,
        rate: 1.0 / (2.0 * p) - 0.25,
        scenario: None,
    };
    params.validate()?;
    Ok(params)
}

const DELTA_SLACK: f64 = 1e-12;

/// Product weights; the scenario follows from which interval contains `p`.
pub fn derive_product(input: &PdeWeightInput, s: usize) -> Result<DerivedParams, WeightsError> {
    let p = input.p;
    if !(p < 0.5) {
        return Err(WeightsError::ProductUnsupported(p));
    }
    let b = input.prefix(s)?;
    let delta = input.delta;
    let x = 1.0 / (2.0 * p) - 0.25;
    let frac = x - x.floor();
    let (scenario, sigma, lambda, upper, rate) = if frac > 0.5 {
        let sigma = x.ceil();
        let upper = 1.0 / (2.0 * p) - 0.5 - sigma / 2.0;
        let lambda = 1.0 / (2.0 / p - 1.0 - 2.0 * sigma - 4.0 * delta);
        (ProductScenario::B, sigma, lambda, upper, 1.0 / (2.0 * p) - 0.25 - sigma / 2.0 - delta)
    } else {
        let sigma = x.floor();
        let upper = sigma / 2.0 - 0.25;
        let lambda = 1.0 / (2.0 * sigma - 4.0 * delta);
        (ProductScenario::A, sigma, lambda, upper, sigma / 2.0 - delta)
    };
    if !(delta > 0.0 && delta <= upper + DELTA_SLACK) {
        return Err(WeightsError::InvalidDelta { delta, upper });
    }
    // δ at the closed end gives λ = 1 up to rounding
    let lambda = lambda.min(1.0);
    let sigma_u = sigma as u32;
    let alpha = 2 * sigma_u;
    let denom = 2.0 * e_pow_inv_e() * zeta(alpha as f64 * lambda)?;
    let gamma = b
        .iter()
        .enumerate()
        .map(|(i, &bj)| {
            let j = (i + 1) as f64;
            let t = (j * sigma).powf(sigma) * bell_touchard(sigma_u, bj);
            (t * t / denom).powf(1.0 / (1.0 + lambda))
        })
        .collect();
    let params = DerivedParams {
        alpha,
        sigma: sigma_u,
        lambda,
        scheme: WeightScheme::product(gamma)?,
        rate,
        scenario: Some(scenario),
    };
    params.validate()?;
    Ok(params)
}

pub fn derive(kind: WeightKind, input: &PdeWeightInput, s: usize) -> Result<DerivedParams, WeightsError> {
    match kind {
        WeightKind::Product => derive_product(input, s),
        WeightKind::Pod => derive_pod(input, s),
        WeightKind::Spod => derive_spod(input, s),
    }
}

/// `κ = √2 · max(6, 2.5 + 2^{2αλ+1})^{1/(4λ)}`
pub fn kappa(alpha: u32, lambda: f64) -> f64 {
    let inner = 6f64.max(2.5 + 2f64.powf(2.0 * alpha as f64 * lambda + 1.0));
    2f64.sqrt() * inner.powf(1.0 / (4.0 * lambda))
}

/// Theoretical worst-case `L2` bound
/// `κ n^{-1/(4λ)} (Σ_u max(|u|,1) γ_u^λ [2ζ(αλ)]^{|u|})^{1/(2λ)}` for small `s`.
pub fn theory_error_constant(params: &DerivedParams, s: usize, n: u64) -> Result<f64, WeightsError> {
    if s > MAX_ENUMERATION {
        return Err(WeightsError::TooLarge(s));
    }
    let lambda = params.lambda;
    let two_zeta = 2.0 * zeta(params.alpha as f64 * lambda)?;
    let mut sum = ExtendedReal::ZERO;
    let mut u = Vec::with_capacity(s);
    for mask in 0u32..(1u32 << s) {
        u.clear();
        u.extend((0..s).filter(|i| mask & (1 << i) != 0).map(|i| i + 1));
        let g = params.scheme.weight_of(&u)?;
        let term = ExtendedReal::from_f64(u.len().max(1) as f64)
            * g.powf(lambda)
            * ExtendedReal::from_f64(two_zeta).powi(u.len() as i32);
        sum += term;
    }
    let bound = ExtendedReal::from_f64(kappa(params.alpha, lambda) * (n as f64).powf(-1.0 / (4.0 * lambda)))
        * sum.powf(1.0 / (2.0 * lambda));
    Ok(bound.to_f64()?)
}

/// Plain-text `key = value` serialization of derived parameters and their
/// weight sequences.
///
/// ```text
/// kind = spod
/// alpha = 4
/// sigma = 2
/// lambda = 2.9411764705882354e-1
/// s = 10
/// [order]
/// 0 1e0
/// ...
/// [gamma]
/// 1 <γ_{1,1}> <γ_{1,2}>
/// ```
pub fn params_to_text(params: &DerivedParams) -> String {
    let scheme = &params.scheme;
    let mut out = String::new();
    let _ = writeln!(out, "# lattice-kernel weight scheme");
    let _ = writeln!(out, "kind = {}", scheme.kind().name());
    let _ = writeln!(out, "alpha = {}", params.alpha);
    let _ = writeln!(out, "sigma = {}", params.sigma);
    let _ = writeln!(out, "lambda = {:e}", params.lambda);
    let _ = writeln!(out, "rate = {:e}", params.rate);
    if let Some(sc) = params.scenario {
        let _ = writeln!(out, "scenario = {}", if sc == ProductScenario::A { "A" } else { "B" });
    }
    let _ = writeln!(out, "s = {}", scheme.dim());
    let order = match scheme {
        WeightScheme::Product { .. } => None,
        WeightScheme::Pod { order, .. } | WeightScheme::Spod { order, .. } => Some(order),
    };
    if let Some(order) = order {
        let _ = writeln!(out, "[order]");
        for (l, g) in order.iter().enumerate() {
            let _ = writeln!(out, "{l} {g}");
        }
    }
    let _ = writeln!(out, "[gamma]");
    match scheme {
        WeightScheme::Product { gamma } | WeightScheme::Pod { gamma, .. } => {
            for (j, g) in gamma.iter().enumerate() {
                let _ = writeln!(out, "{} {:e}", j + 1, g);
            }
        }
        WeightScheme::Spod { gamma, .. } => {
            for (j, row) in gamma.iter().enumerate() {
                let _ = write!(out, "{}", j + 1);
                for g in row {
                    let _ = write!(out, " {g:e}");
                }
                let _ = writeln!(out);
            }
        }
    }
    out
}

pub fn params_from_text(text: &str) -> Result<DerivedParams, WeightsError> {
    let perr = |line: usize, msg: String| WeightsError::Parse { line, msg };
    let mut kind = None;
    let mut alpha = None;
    let mut sigma = None;
    let mut lambda = None;
    let mut rate = f64::NAN;
    let mut scenario = None;
    let mut dim = None;
    let mut order: Vec<ExtendedReal> = Vec::new();
    let mut gamma: Vec<Vec<f64>> = Vec::new();
    let mut section = "";
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            section = match line {
                "[order]" => "order",
                "[gamma]" => "gamma",
                other => return Err(perr(ln, format!("unknown section {other}"))),
            };
            continue;
        }
        if section.is_empty() {
            let (k, v) = line.split_once('=').ok_or_else(|| perr(ln, "expected key = value".into()))?;
            let v = v.trim();
            let num = |v: &str| v.parse::<f64>().map_err(|_| perr(ln, format!("bad number {v:?}")));
            let int = |v: &str| v.parse::<u32>().map_err(|_| perr(ln, format!("bad integer {v:?}")));
            match k.trim() {
                "kind" => kind = Some(v.parse::<WeightKind>().map_err(|e| perr(ln, e.to_string()))?),
                "alpha" => alpha = Some(int(v)?),
                "sigma" => sigma = Some(int(v)?),
                "lambda" => lambda = Some(num(v)?),
                "rate" => rate = num(v)?,
                "s" => dim = Some(int(v)? as usize),
                "scenario" => {
                    scenario = Some(match v {
                        "A" => ProductScenario::A,
                        "B" => ProductScenario::B,
                        _ => return Err(perr(ln, format!("bad scenario {v:?}"))),
                    })
                }
                other => return Err(perr(ln, format!("unknown key {other:?}"))),
            }
            continue;
        }
        let mut toks = line.split_whitespace();
        let idx: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(ln, "missing index".into()))?;
        match section {
            "order" => {
                if idx != order.len() {
                    return Err(perr(ln, format!("expected order index {}, found {idx}", order.len())));
                }
                let tok = toks.next().ok_or_else(|| perr(ln, "missing value".into()))?;
                order.push(tok.parse::<ExtendedReal>().map_err(|e| perr(ln, e.to_string()))?);
            }
            _ => {
                if idx != gamma.len() + 1 {
                    return Err(perr(ln, format!("expected coordinate {}, found {idx}", gamma.len() + 1)));
                }
                let row = toks
                    .map(|t| t.parse::<f64>().map_err(|_| perr(ln, format!("bad number {t:?}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                gamma.push(row);
            }
        }
    }
    let kind = kind.ok_or_else(|| perr(0, "missing kind".into()))?;
    let alpha = alpha.ok_or_else(|| perr(0, "missing alpha".into()))?;
    let sigma = sigma.unwrap_or(alpha / 2);
    let lambda = lambda.ok_or_else(|| perr(0, "missing lambda".into()))?;
    if let Some(d) = dim {
        if d != gamma.len() {
            return Err(perr(0, format!("header says s = {d} but {} gamma rows found", gamma.len())));
        }
    }
    let flat = |gamma: Vec<Vec<f64>>| -> Result<Vec<f64>, WeightsError> {
        gamma
            .into_iter()
            .enumerate()
            .map(|(j, r)| match r.as_slice() {
                [g] => Ok(*g),
                _ => Err(perr(0, format!("coordinate {} must have exactly one weight", j + 1))),
            })
            .collect()
    };
    let scheme = match kind {
        WeightKind::Product => WeightScheme::product(flat(gamma)?)?,
        WeightKind::Pod => WeightScheme::pod(order, flat(gamma)?)?,
        WeightKind::Spod => WeightScheme::spod(sigma as usize, order, gamma)?,
    };
    Ok(DerivedParams { alpha, sigma, lambda, scheme, rate, scenario })
}

pub fn write_params(path: &Path, params: &DerivedParams) -> Result<(), WeightsError> {
    std::fs::write(path, params_to_text(params)).map_err(|e| WeightsError::Io(format!("{}: {e}", path.display())))
}

pub fn read_params(path: &Path) -> Result<DerivedParams, WeightsError> {
    let text = std::fs::read_to_string(path).map_err(|e| WeightsError::Io(format!("{}: {e}", path.display())))?;
    params_from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn decay(s: usize, theta: f64) -> Vec<f64> {
        (1..=s).map(|j| 0.1 * (j as f64).powf(-theta)).collect()
    }

    #[test]
    fn spod_parameters() {
        let inp = PdeWeightInput::new(1.0 / 2.2, decay(10, 2.4), 0.1).unwrap();
        let p = derive_spod(&inp, 10).unwrap();
        assert_eq!((p.alpha, p.sigma), (4, 2));
        assert_relative_eq!(p.lambda, 5.0 / 17.0, max_relative = 1e-14);
        assert_relative_eq!(p.rate, 0.85, max_relative = 1e-12);

        let inp = PdeWeightInput::new(1.0 / 1.1, decay(5, 1.2), 0.1).unwrap();
        let p = derive_spod(&inp, 5).unwrap();
        assert_eq!((p.alpha, p.sigma), (2, 1));
        assert_relative_eq!(p.lambda, 5.0 / 6.0, max_relative = 1e-14);
    }

    #[test]
    fn spod_weight_vanishes_with_fluctuation() {
        let inp = PdeWeightInput::new(1.0 / 2.2, vec![1e-12], 0.1).unwrap();
        let p = derive_spod(&inp, 1).unwrap();
        let g = p.scheme.weight_of(&[1]).unwrap().to_f64().unwrap();
        assert!(g < 1e-15);
    }

    #[test]
    fn pod_parameters_and_admissibility() {
        let inp = PdeWeightInput::new(1.0 / 2.2, decay(8, 2.4), 0.1).unwrap();
        let p = derive_pod(&inp, 8).unwrap();
        assert_eq!((p.alpha, p.sigma), (4, 2));
        assert_relative_eq!(p.lambda, 5.0 / 17.0, max_relative = 1e-14);
        assert_eq!(p.scheme.weight_of(&[]).unwrap(), ExtendedReal::ONE);
        if let WeightScheme::Pod { order, .. } = &p.scheme {
            assert_eq!(order[0], ExtendedReal::ONE);
        }

        let half = PdeWeightInput::new(0.5, decay(3, 2.4), 0.1).unwrap();
        match derive_pod(&half, 3) {
            Err(WeightsError::InadmissiblePod { lower, upper, .. }) => {
                assert_relative_eq!(lower, 2.0 / 3.0);
                assert_relative_eq!(upper, 1.0);
            }
            other => panic!("expected inadmissible, got {other:?}"),
        }
        // 1/p = 2.6 sits in the gap [2.5, 3): nearest interval is (2/5, 1/2)
        let gap = PdeWeightInput::new(1.0 / 2.6, decay(3, 2.4), 0.1).unwrap();
        match derive_pod(&gap, 3) {
            Err(WeightsError::InadmissiblePod { lower, upper, .. }) => {
                assert_relative_eq!(lower, 0.4);
                assert_relative_eq!(upper, 0.5);
            }
            other => panic!("expected inadmissible, got {other:?}"),
        }
    }

    #[test]
    fn pod_order_weights_do_not_overflow() {
        let inp = PdeWeightInput::new(1.0 / 2.2, decay(100, 2.4), 0.1).unwrap();
        let p = derive_pod(&inp, 100).unwrap();
        let WeightScheme::Pod { order, .. } = &p.scheme else { panic!() };
        let g100 = order[100];
        assert!(g100 > ExtendedReal::ZERO);
        assert!(g100.to_f64().is_err(), "Γ_100 should exceed f64");
        // Stirling's approximation of ((200!)^2 / (100 (2ζ)^100))^{1/(1+λ)}
        let lambda = p.lambda;
        let two_zeta = 2.0 * zeta(4.0 * lambda).unwrap();
        let n = 200f64;
        let ln_fact = n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln();
        let ln_expected = (2.0 * ln_fact - 100f64.ln() - 100.0 * two_zeta.ln()) / (1.0 + lambda);
        let log2_expected = ln_expected / std::f64::consts::LN_2;
        assert!((g100.log2() - log2_expected).abs() < 0.01 * log2_expected.abs());
    }

    #[test]
    fn product_scenarios() {
        let inp = PdeWeightInput::new(1.0 / 2.2, decay(4, 2.4), 0.1).unwrap();
        let p = derive_product(&inp, 4).unwrap();
        assert_eq!(p.scenario, Some(ProductScenario::B));
        assert_eq!((p.alpha, p.sigma), (2, 1));
        assert_relative_eq!(p.lambda, 1.0, max_relative = 1e-12);
        assert_relative_eq!(p.rate, 0.25, max_relative = 1e-9);

        let inp = PdeWeightInput::new(1.0 / 3.3, decay(4, 3.6), 0.1).unwrap();
        let p = derive_product(&inp, 4).unwrap();
        assert_eq!(p.scenario, Some(ProductScenario::A));
        assert_eq!((p.alpha, p.sigma), (2, 1));
        assert_relative_eq!(p.lambda, 1.0 / 1.6, max_relative = 1e-12);

        let inp = PdeWeightInput::new(0.6, decay(4, 3.6), 0.1).unwrap();
        assert!(matches!(derive_product(&inp, 4), Err(WeightsError::ProductUnsupported(_))));
        let inp = PdeWeightInput::new(1.0 / 3.3, decay(4, 3.6), 0.3).unwrap();
        assert!(matches!(derive_product(&inp, 4), Err(WeightsError::InvalidDelta { .. })));
    }

    #[test]
    fn weight_of_examples() {
        let s = WeightScheme::product(vec![0.5, 0.25]).unwrap();
        assert_relative_eq!(s.weight_of(&[1, 2]).unwrap().to_f64().unwrap(), 0.125);
        assert_eq!(s.weight_of(&[]).unwrap(), ExtendedReal::ONE);
        assert!(s.weight_of(&[3]).is_err());

        let (a, b) = (0.3, 0.7);
        let order = vec![1.0, 2.0, 5.0].into_iter().map(ExtendedReal::from).collect();
        let sp = WeightScheme::spod(2, order, vec![vec![a, b]]).unwrap();
        assert_relative_eq!(sp.weight_of(&[1]).unwrap().to_f64().unwrap(), 2.0 * a + 5.0 * b, max_relative = 1e-15);
    }

    #[test]
    fn spod_sigma_one_matches_pod() {
        let gam: Vec<f64> = (1..=6).map(|j| 0.8 / j as f64).collect();
        let order: Vec<ExtendedReal> = (0..=6).map(|l| ExtendedReal::factorial(l).powf(1.4)).collect();
        let pod = WeightScheme::pod(order.clone(), gam.clone()).unwrap();
        let spod = WeightScheme::spod(1, order, gam.iter().map(|g| vec![*g]).collect()).unwrap();
        for mask in 0u32..64 {
            let u: Vec<usize> = (0..6).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
            let a = pod.weight_of(&u).unwrap();
            let b = spod.weight_of(&u).unwrap();
            assert!(((a / b).to_f64().unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn product_monotone() {
        let s = WeightScheme::product(vec![0.9, 0.5, 0.2]).unwrap();
        let a = s.weight_of(&[1]).unwrap();
        let b = s.weight_of(&[1, 3]).unwrap();
        assert!(b < a);
    }

    #[test]
    fn kappa_example() {
        assert_relative_eq!(kappa(2, 1.0), 2f64.sqrt() * 34.5f64.powf(0.25), max_relative = 1e-14);
        assert!((kappa(2, 1.0) - 3.428).abs() < 1e-3);
    }

    #[test]
    fn theory_bound_power_law() {
        let inp = PdeWeightInput::new(1.0 / 2.2, decay(4, 2.4), 0.1).unwrap();
        let p = derive_spod(&inp, 4).unwrap();
        let b1 = theory_error_constant(&p, 4, 64).unwrap();
        let b2 = theory_error_constant(&p, 4, 128).unwrap();
        assert_relative_eq!(b2 / b1, 2f64.powf(-1.0 / (4.0 * p.lambda)), max_relative = 1e-12);
        let b0 = theory_error_constant(&p, 0, 64).unwrap();
        assert_relative_eq!(b0, kappa(p.alpha, p.lambda) * 64f64.powf(-1.0 / (4.0 * p.lambda)), max_relative = 1e-12);
        assert!(theory_error_constant(&p, 13, 64).is_err());
    }

    #[test]
    fn lambda_inside_range_for_all_families() {
        for &pp in &[1.0 / 1.1, 1.0 / 2.2, 1.0 / 3.3] {
            let inp = PdeWeightInput::new(pp, decay(6, 1.0 / pp), 0.1).unwrap();
            for kind in [WeightKind::Spod, WeightKind::Pod, WeightKind::Product] {
                if let Ok(par) = derive(kind, &inp, 6) {
                    assert!(par.lambda > 1.0 / par.alpha as f64 && par.lambda <= 1.0, "{kind:?} {pp}");
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let inp = PdeWeightInput::new(1.0 / 2.2, decay(7, 2.4), 0.1).unwrap();
        for kind in [WeightKind::Spod, WeightKind::Pod, WeightKind::Product] {
            let p = derive(kind, &inp, 7).unwrap();
            let back = params_from_text(&params_to_text(&p)).unwrap();
            assert_eq!(back.alpha, p.alpha);
            assert_eq!(back.scheme.kind(), kind);
            for u in [vec![1], vec![2, 5], vec![1, 3, 4, 7]] {
                let a = p.scheme.weight_of(&u).unwrap();
                let b = back.scheme.weight_of(&u).unwrap();
                assert!(((a / b).to_f64().unwrap() - 1.0).abs() < 1e-14);
            }
        }
        assert!(matches!(params_from_text("kind = spod\nalpha = x\n"), Err(WeightsError::Parse { line: 2, .. })));
    }
}
