//! Study configuration: defaults, `key = value` files and validation.

use std::path::{Path, PathBuf};

use crate::weights::{derive, PdeWeightInput, WeightKind};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    InterpConvergence,
    DimTruncation,
    CbcOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub weights: WeightKind,
    pub c: f64,
    pub theta: f64,
    /// Summability exponent; `12/(11θ)` when unset.
    pub p: Option<f64>,
    pub delta: f64,
    pub s: usize,
    pub n_list: Vec<u64>,
    pub mesh_level: u32,
    /// Number of outer Sobol′ shifts.
    pub samples: usize,
    /// Offset into the Sobol′ sequence.
    pub seed: u64,
    pub genvec: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    /// Write wall-clock seconds into the CSV; off for byte-comparable output.
    pub timings: bool,
    /// Accumulate kernel sums in extended range for product and SPOD weights.
    pub extended: bool,
    /// Reference dimension `s'` of the truncation study.
    pub reference_dim: usize,
    /// Quadrature points of the truncation study.
    pub quad_n: u64,
    /// Largest truncation level entering the truncation rate fit.
    pub fit_max_s: Option<usize>,
    /// Build a quadrature vector by CBC when none is available.
    pub cbc_fallback: bool,
}

impl StudyConfig {
    pub fn new(kind: StudyKind) -> Self {
        let (c, s, n_list) = match kind {
            StudyKind::DimTruncation => (0.4, 512, vec![8192]),
            _ => (0.2, 10, (4..=12).map(|k| 1u64 << k).collect()),
        };
        StudyConfig {
            kind,
            weights: WeightKind::Spod,
            c,
            theta: 2.4,
            p: None,
            delta: 0.1,
            s,
            n_list,
            mesh_level: 5,
            samples: 100,
            seed: 0,
            genvec: None,
            out: None,
            threads: None,
            timings: true,
            extended: true,
            reference_dim: 512,
            quad_n: 8192,
            fit_max_s: None,
            cbc_fallback: true,
        }
    }

    pub fn p(&self) -> f64 {
        self.p.unwrap_or(12.0 / (11.0 * self.theta))
    }

    /// Applies one `key = value` setting; keys match the long CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Error> {
        let bad = |what: &str| Error::Config(format!("invalid value {value:?} for {what}"));
        let num = |what: &str| value.parse::<f64>().map_err(|_| bad(what));
        let int = |what: &str| value.parse::<u64>().map_err(|_| bad(what));
        let flag = |what: &str| match value {
            "true" | "yes" | "1" | "on" => Ok(true),
            "false" | "no" | "0" | "off" => Ok(false),
            _ => Err(bad(what)),
        };
        match key {
            "weights" => self.weights = value.parse().map_err(|_| bad(key))?,
            "c" => self.c = num(key)?,
            "theta" => self.theta = num(key)?,
            "p" => self.p = Some(num(key)?),
            "delta" => self.delta = num(key)?,
            "s" => self.s = int(key)? as usize,
            "n-list" | "n_list" => self.n_list = parse_n_list(value)?,
            "mesh-level" | "mesh_level" => self.mesh_level = int(key)? as u32,
            "L" | "samples" => self.samples = int(key)? as usize,
            "seed" => self.seed = int(key)?,
            "genvec" => self.genvec = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "threads" => self.threads = Some(int(key)? as usize),
            "timings" => self.timings = flag(key)?,
            "extended" => self.extended = flag(key)?,
            "reference-dim" | "reference_dim" => self.reference_dim = int(key)? as usize,
            "quad-n" | "quad_n" => self.quad_n = int(key)?,
            "fit-max-s" | "fit_max_s" => self.fit_max_s = Some(int(key)? as usize),
            "cbc-fallback" | "cbc_fallback" => self.cbc_fallback = flag(key)?,
            other => return Err(Error::Config(format!("unknown setting {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), Error> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("config line {}: expected key = value", i + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n_list.is_empty() {
            return Err(Error::Config("n list is empty".into()));
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("n list must be strictly increasing".into()));
        }
        if self.n_list[0] == 0 {
            return Err(Error::Config("point counts must be positive".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("L must be at least 1".into()));
        }
        if self.s == 0 {
            return Err(Error::Config("s must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        if self.kind == StudyKind::DimTruncation {
            if self.reference_dim < 8 || !self.reference_dim.is_power_of_two() {
                return Err(Error::Config("reference dimension must be a power of two ≥ 8".into()));
            }
            if self.quad_n < 2 {
                return Err(Error::Config("quadrature needs at least 2 points".into()));
            }
            return Ok(());
        }
        let model = crate::fem::DiffusionModel::new(self.c, self.theta, self.s)?;
        let input = PdeWeightInput::new(self.p(), model.decay_sequence(self.s), self.delta)?;
        derive(self.weights, &input, self.s)?;
        Ok(())
    }
}

pub fn parse_n_list(text: &str) -> Result<Vec<u64>, Error> {
    text.split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("invalid point count {t:?} in n list")))
        })
        .collect()
}
