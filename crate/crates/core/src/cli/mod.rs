//! Command-line front end: `degrade`, `deblur`, `blind`, `priors`, `evaluate`.
//!
//! Every command accepts `--config FILE` with flat `key = value` lines;
//! explicit flags win over the file.

mod config;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
use config::{BLIND_KEYS, SOLVER_KEYS};

use crate::blind::{solve_blind, BlindConfig};
use crate::degrade::{degrade, NoiseSpec, PsfSpec};
use crate::io::{read_image, read_kernel, write_image, write_kernel, write_kernel_image};
use crate::metrics::{capped_psnr, psnr, quality, QualityReport};
use crate::priors::{joint_range, zero_count, Histogram, PriorKind, PriorSet, ZERO_EPS};
use crate::solver::{solve_nonblind_tracked, Norm, SolverConfig, Tracking};

#[derive(Debug, Parser)]
#[command(name = "fpmp", version, about = "Poissonian deblurring with a framelet local-minimal prior")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Blur a clean image and add Poisson noise.
    Degrade(DegradeArgs),
    /// Restore an image blurred by a known kernel.
    Deblur(DeblurArgs),
    /// Estimate image and kernel together.
    Blind(BlindArgs),
    /// Histogram data of FPMP, FDC, PMP and DC for a clear/blurred pair.
    Priors(PriorsArgs),
    /// Print PSNR, SSIM and MSE of an image against a reference.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// `gaussian:SIZE:SIGMA`, `motion:LEN:ANGLE`, `average:SIZE` or `disk:RADIUS`.
    #[arg(long)]
    pub psf: Option<PsfSpec>,
    #[arg(long)]
    pub peak: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Kernel text file; defaults to `<out stem>.kernel.txt`.
    #[arg(long)]
    pub kout: Option<PathBuf>,
    /// Also write the clean image scaled to count units.
    #[arg(long)]
    pub ref_out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct SolverFlags {
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gl_len: Option<usize>,
    #[arg(long)]
    pub patch: Option<usize>,
    /// `l1` or `l0`.
    #[arg(long)]
    pub norm: Option<Norm>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub sweeps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DeblurArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub kernel: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-iteration history CSV.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    /// Clean reference; adds PSNR/SSIM to the history.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    /// PSNR peak; defaults to the reference maximum.
    #[arg(long)]
    pub peak: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct BlindArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Odd kernel side length.
    #[arg(long)]
    pub ksize: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub kout: Option<PathBuf>,
    /// Kernel rendering; defaults to the `--kout` path with a `.png` extension.
    #[arg(long)]
    pub kimg: Option<PathBuf>,
    #[arg(long)]
    pub no_boundary_prep: bool,
    #[arg(long)]
    pub varrho_over_mu: Option<f64>,
    #[arg(long)]
    pub outer_tol: Option<f64>,
    #[arg(long)]
    pub outer_max_iter: Option<usize>,
    #[arg(long)]
    pub inner_iter: Option<usize>,
    /// Per-outer-iteration history CSV.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct PriorsArgs {
    #[arg(long)]
    pub clear: PathBuf,
    #[arg(long)]
    pub blurred: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Odd patch size.
    #[arg(long, default_value_t = 15)]
    pub patch: usize,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Magnitude counted as zero in the summary.
    #[arg(long, default_value_t = ZERO_EPS)]
    pub eps: f64,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long, default_value_t = 255.0)]
    pub peak: f64,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run(Cli::parse_from(args))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Degrade(a) => cmd_degrade(a),
        Command::Deblur(a) => cmd_deblur(a),
        Command::Blind(a) => cmd_blind(a),
        Command::Priors(a) => cmd_priors(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    }
}

fn load_config(path: &Option<PathBuf>, allowed: &[&str]) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p, allowed),
        None => Ok(RunConfig::default()),
    }
}

fn keys(groups: &[&[&'static str]]) -> Vec<&'static str> {
    groups.iter().flat_map(|g| g.iter().copied()).collect()
}

/// Merges flags, config and defaults into a solver configuration.
pub fn solver_config(flags: &SolverFlags, cfg: &RunConfig) -> Result<SolverConfig> {
    let d = SolverConfig::default();
    let f = |flag: Option<f64>, key: &str, default: f64| -> Result<f64> { Ok(cfg.pick(flag, key)?.unwrap_or(default)) };
    let u = |flag: Option<usize>, key: &str, default: usize| -> Result<usize> { Ok(cfg.pick(flag, key)?.unwrap_or(default)) };
    let out = SolverConfig {
        mu: f(flags.mu, "mu", d.mu)?,
        lambda: f(flags.lambda, "lambda", d.lambda)?,
        gamma: f(flags.gamma, "gamma", d.gamma)?,
        eta: f(flags.eta, "eta", d.eta)?,
        beta: f(flags.beta, "beta", d.beta)?,
        rho: f(flags.rho, "rho", d.rho)?,
        alpha: f(flags.alpha, "alpha", d.alpha)?,
        gl_len: u(flags.gl_len, "gl_len", d.gl_len)?,
        patch: u(flags.patch, "patch", d.patch)?,
        norm: cfg.pick(flags.norm, "norm")?.unwrap_or(d.norm),
        tol: f(flags.tol, "tol", d.tol)?,
        max_iter: u(flags.max_iter, "max_iter", d.max_iter)?,
        sweeps: u(flags.sweeps, "sweeps", d.sweeps)?,
    };
    out.validate()?;
    Ok(out)
}

fn path_of(flag: Option<PathBuf>, cfg: &RunConfig, key: &str) -> Option<PathBuf> {
    flag.or_else(|| cfg.get_str(key).map(PathBuf::from))
}

fn require_path(flag: Option<PathBuf>, cfg: &RunConfig, key: &str) -> Result<PathBuf> {
    match path_of(flag, cfg, key) {
        Some(p) => Ok(p),
        None => bail!("missing required path '{key}' (flag or config)"),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_degrade(a: DegradeArgs) -> Result<()> {
    let cfg = load_config(&a.config, &["in", "out", "psf", "peak", "seed", "kout", "ref_out"])?;
    let input = require_path(a.input, &cfg, "in")?;
    let out = require_path(a.out, &cfg, "out")?;
    let psf: PsfSpec = cfg.require(a.psf, "psf")?;
    let peak: f64 = cfg.require(a.peak, "peak")?;
    let seed: u64 = cfg.require(a.seed, "seed")?;
    let kout = path_of(a.kout, &cfg, "kout").unwrap_or_else(|| with_suffix(&out, ".kernel.txt"));
    let ref_out = path_of(a.ref_out, &cfg, "ref_out");

    let clean = read_image(&input).with_context(|| format!("reading {}", input.display()))?;
    let d = degrade(&clean.field, &psf, &NoiseSpec { peak, seed })?;
    write_image(&out, &d.observed, clean.depth).with_context(|| format!("writing {}", out.display()))?;
    write_kernel(&kout, &d.kernel)?;
    if let Some(p) = ref_out {
        write_image(&p, &d.reference, clean.depth)?;
    }
    let ref_peak = d.reference.max().max(f64::MIN_POSITIVE);
    println!("psnr(degraded, clean) = {:.4} dB", capped_psnr(psnr(&d.observed, &d.reference, ref_peak)?));
    println!("wrote {} and {}", out.display(), kout.display());
    Ok(())
}

fn cmd_deblur(a: DeblurArgs) -> Result<()> {
    let allowed = keys(&[SOLVER_KEYS, &["in", "kernel", "out", "curves", "ref", "peak"]]);
    let cfg = load_config(&a.config, &allowed)?;
    let input = require_path(a.input, &cfg, "in")?;
    let kpath = require_path(a.kernel, &cfg, "kernel")?;
    let out = require_path(a.out, &cfg, "out")?;
    let curves = path_of(a.curves, &cfg, "curves");
    let ref_path = path_of(a.reference, &cfg, "ref");
    let peak: Option<f64> = cfg.pick(a.peak, "peak")?;
    let solver = solver_config(&a.solver, &cfg)?;

    let y = read_image(&input).with_context(|| format!("reading {}", input.display()))?;
    let k = read_kernel(&kpath).with_context(|| format!("reading kernel {}", kpath.display()))?;
    let reference = ref_path.map(|p| read_image(&p).map(|r| r.field)).transpose()?;
    let tracking = reference.as_ref().map(|r| match peak {
        Some(p) => Tracking { reference: r, peak: p },
        None => Tracking::new(r),
    });
    let (x, history) = solve_nonblind_tracked(&y.field, &k, &solver, tracking)?;
    write_image(&out, &x, y.depth).with_context(|| format!("writing {}", out.display()))?;
    if let Some(c) = curves {
        history.write_csv(BufWriter::new(File::create(&c)?))?;
    }
    let status = if history.converged { "converged" } else { "reached max_iter" };
    println!("{status} after {} iterations", history.len());
    if let Some(t) = tracking {
        let q = quality(&x, t.reference, t.peak)?;
        println!("{}\n{}", QualityReport::CSV_HEADER, q.csv_row());
    }
    Ok(())
}

fn cmd_blind(a: BlindArgs) -> Result<()> {
    let allowed = keys(&[SOLVER_KEYS, BLIND_KEYS, &["in", "out", "kout", "kimg", "curves"]]);
    let cfg = load_config(&a.config, &allowed)?;
    let input = require_path(a.input, &cfg, "in")?;
    let out = require_path(a.out, &cfg, "out")?;
    let kout = require_path(a.kout, &cfg, "kout")?;
    let kimg = path_of(a.kimg, &cfg, "kimg").unwrap_or_else(|| kout.with_extension("png"));
    let curves = path_of(a.curves, &cfg, "curves");
    let ksize: usize = cfg.require(a.ksize, "ksize")?;
    let d = BlindConfig::default();
    let prep_cfg: bool = cfg.get("boundary_prep")?.unwrap_or(d.boundary_prep);
    let blind = BlindConfig {
        inner: solver_config(&a.solver, &cfg)?,
        varrho_over_mu: cfg.pick(a.varrho_over_mu, "varrho_over_mu")?.unwrap_or(d.varrho_over_mu),
        kernel_size: (ksize, ksize),
        outer_tol: cfg.pick(a.outer_tol, "outer_tol")?.unwrap_or(d.outer_tol),
        outer_max_iter: cfg.pick(a.outer_max_iter, "outer_max_iter")?.unwrap_or(d.outer_max_iter),
        inner_iter: cfg.pick(a.inner_iter, "inner_iter")?.unwrap_or(d.inner_iter),
        boundary_prep: prep_cfg && !a.no_boundary_prep,
    };

    let y = read_image(&input).with_context(|| format!("reading {}", input.display()))?;
    let (x, k, history) = solve_blind(&y.field, &blind)?;
    write_image(&out, &x, y.depth).with_context(|| format!("writing {}", out.display()))?;
    write_kernel(&kout, &k)?;
    write_kernel_image(&kimg, &k)?;
    if let Some(c) = curves {
        history.write_csv(BufWriter::new(File::create(&c)?))?;
    }
    let status = if history.converged { "converged" } else { "reached outer_max_iter" };
    println!("{status} after {} outer iterations", history.outer.len());
    println!("wrote {}, {} and {}", out.display(), kout.display(), kimg.display());
    Ok(())
}

fn cmd_priors(a: PriorsArgs) -> Result<()> {
    let clear = read_image(&a.clear)?.field;
    let blurred = read_image(&a.blurred)?.field;
    clear.check_same_shape(&blurred, "priors")?;
    let pc = PriorSet::compute(&clear, a.patch)?;
    let pb = PriorSet::compute(&blurred, a.patch)?;
    fs::create_dir_all(&a.out_dir)?;
    let mut summary = String::from("prior,zero_clear,zero_blurred,gap\n");
    for kind in PriorKind::ALL {
        let (c, b) = (pc.get(kind), pb.get(kind));
        let (lo, hi) = joint_range(c, b);
        for (tag, vals) in [("clear", c), ("blurred", b)] {
            let h = Histogram::new(vals, lo, hi, a.bins)?;
            fs::write(a.out_dir.join(format!("{tag}_{}.csv", kind.name())), h.to_csv())?;
        }
        let (zc, zb) = (zero_count(c, a.eps), zero_count(b, a.eps));
        summary.push_str(&format!("{},{zc},{zb},{}\n", kind.name(), zb as i64 - zc as i64));
    }
    fs::write(a.out_dir.join("summary.csv"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let u = read_image(&a.input)?.field;
    let r = read_image(&a.reference)?.field;
    let q = quality(&u, &r, a.peak)?;
    println!("{}\n{}", QualityReport::CSV_HEADER, q.csv_row());
    Ok(())
}
