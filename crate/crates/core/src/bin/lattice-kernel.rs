use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lattice_kernel::experiments::studies::{
    run_dim_truncation, run_interp_convergence, setup_problem, DIMTRUNC_HEADER, INTERP_HEADER,
};
use lattice_kernel::experiments::{selftest, StudyConfig, StudyKind};
use lattice_kernel::lattice::{cbc_construct, write_genvec};
use lattice_kernel::weights::{params_to_text, WeightKind};
use lattice_kernel::{Error, Result};

#[derive(Parser)]
#[command(name = "lattice-kernel", version, about = "Lattice-point kernel interpolation and PDE surrogate studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a generating vector by CBC and write it with its criterion trace.
    Cbc {
        #[command(flatten)]
        common: Common,
        /// Number of lattice points.
        #[arg(long)]
        n: u64,
        /// CSV with the per-dimension criterion and error bound.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also write the derived weight parameters.
        #[arg(long)]
        params_out: Option<PathBuf>,
    },
    /// Interpolation error of the PDE surrogate against n.
    InterpStudy {
        #[command(flatten)]
        common: Common,
    },
    /// Dimension truncation error against s.
    DimtruncStudy {
        #[command(flatten)]
        common: Common,
        /// Reference dimension s′ (power of two).
        #[arg(long)]
        reference_dim: Option<usize>,
        /// Quadrature points.
        #[arg(long)]
        quad_n: Option<u64>,
        /// Largest s used in the rate fit.
        #[arg(long)]
        fit_max_s: Option<usize>,
    },
    /// Run quick built-in consistency checks.
    Selftest,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// `key = value` file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Weight family: product, pod or spod.
    #[arg(long)]
    weights: Option<WeightKind>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Parameter dimension.
    #[arg(long)]
    s: Option<usize>,
    /// Comma-separated point counts.
    #[arg(long)]
    n_list: Option<String>,
    /// Mesh level m (h = 2^-m).
    #[arg(long)]
    mesh_level: Option<u32>,
    /// Number of random shifts.
    #[arg(long = "L")]
    samples: Option<usize>,
    /// Generating vector file.
    #[arg(long)]
    genvec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sobol′ offset.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Leave the seconds column out of study CSVs.
    #[arg(long)]
    no_timings: bool,
    /// Accumulate product and SPOD kernel sums in f64.
    #[arg(long)]
    no_extended: bool,
}

impl Common {
    fn config(&self, kind: StudyKind) -> Result<StudyConfig> {
        let mut cfg = StudyConfig::new(kind);
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = &self.$field { cfg.$field = v.clone(); } )* };
        }
        take!(weights, theta, c, delta, s, mesh_level, samples, seed);
        if let Some(v) = self.p {
            cfg.p = Some(v);
        }
        if let Some(v) = &self.n_list {
            cfg.set("n-list", v)?;
        }
        if self.genvec.is_some() {
            cfg.genvec = self.genvec.clone();
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        if self.no_timings {
            cfg.timings = false;
        }
        if self.no_extended {
            cfg.extended = false;
        }
        Ok(cfg)
    }
}

fn init_threads(cfg: &StudyConfig) -> Result<()> {
    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(Error::Config("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// CSV sink that flushes every row, or stdout when no path is given.
fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout()),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Cbc { common, n, report, params_out } => {
            let mut cfg = common.config(StudyKind::CbcOnly)?;
            cfg.n_list = vec![n];
            cfg.validate()?;
            init_threads(&cfg)?;
            let problem = setup_problem(&cfg)?;
            let rep = cbc_construct(&problem.spec, n, cfg.s)?;
            if !rep.cancelled.is_empty() {
                log::warn!("criterion hit the cancellation floor at dimensions {:?}", rep.cancelled);
            }
            match &cfg.out {
                Some(path) => write_genvec(path, &rep.z, n)?,
                None => print!("{}", lattice_kernel::lattice::format_genvec(&rep.z, n)),
            }
            if let Some(path) = report {
                std::fs::write(path, rep.to_csv())?;
            }
            if let Some(path) = params_out {
                std::fs::write(path, params_to_text(&problem.params))?;
            }
            Ok(())
        }
        Command::InterpStudy { common } => {
            let cfg = common.config(StudyKind::InterpConvergence)?;
            cfg.validate()?;
            init_threads(&cfg)?;
            let mut out = sink(cfg.out.as_deref())?;
            writeln!(out, "{INTERP_HEADER}")?;
            out.flush()?;
            let study = run_interp_convergence(&cfg, |row| {
                writeln!(out, "{}", row.csv_line(cfg.timings))?;
                out.flush()?;
                Ok(())
            })?;
            match &study.fit {
                Some(f) => eprintln!(
                    "fitted slope {:.3} (theory {:.3}, rms residual {:.3})",
                    f.slope, -study.params.rate, f.residual
                ),
                None => eprintln!("too few points for a rate fit"),
            }
            Ok(())
        }
        Command::DimtruncStudy { common, reference_dim, quad_n, fit_max_s } => {
            let mut cfg = common.config(StudyKind::DimTruncation)?;
            if let Some(v) = reference_dim {
                cfg.reference_dim = v;
            }
            if let Some(v) = quad_n {
                cfg.quad_n = v;
            }
            if fit_max_s.is_some() {
                cfg.fit_max_s = fit_max_s;
            }
            cfg.validate()?;
            init_threads(&cfg)?;
            let mut out = sink(cfg.out.as_deref())?;
            writeln!(out, "{DIMTRUNC_HEADER}")?;
            out.flush()?;
            let study = run_dim_truncation(&cfg, |row| {
                writeln!(out, "{},{:.12e}", row.s, row.error)?;
                out.flush()?;
                Ok(())
            })?;
            match &study.fit {
                Some(f) => eprintln!("fitted slope {:.3} (expected {:.3})", f.slope, study.expected_slope),
                None => eprintln!("too few points for a rate fit"),
            }
            Ok(())
        }
        Command::Selftest => {
            let checks = selftest::run();
            let mut failed = 0;
            for c in &checks {
                println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(Error::Config(format!("{failed} self-test check(s) failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
