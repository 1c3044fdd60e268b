//! Run configuration: defaults, JSON config file, flag overrides, and
//! parameter validation.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use catfilter_core::cat::CatModelParams;
use catfilter_core::chain::TruncationConfig;
use catfilter_core::C64;
use clap::Args;
use serde::{Deserialize, Serialize};

/// Flags shared by every subcommand. Values given here override the
/// config file; anything left unset falls back to the documented default.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON config file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Atom-cat coupling probability in [0, 1].
    #[arg(long)]
    pub p: Option<f64>,
    /// Observation frequency (events per unit time), > 0.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Real part of the ground amplitude.
    #[arg(long = "alpha-re", alias = "alpha")]
    pub alpha_re: Option<f64>,
    /// Imaginary part of the ground amplitude.
    #[arg(long = "alpha-im")]
    pub alpha_im: Option<f64>,
    /// Real part of the excited amplitude.
    #[arg(long = "beta-re", alias = "beta")]
    pub beta_re: Option<f64>,
    /// Imaginary part of the excited amplitude.
    #[arg(long = "beta-im")]
    pub beta_im: Option<f64>,
    /// Atomic energy gap (excited minus ground).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Time horizon.
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    /// Integrator step size.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Trajectory count (also the trial count for purify-demo).
    #[arg(long = "n-traj")]
    pub n_traj: Option<usize>,
    /// Manual truncation order for chain sums (default: certified
    /// automatically to tail <= 1e-12).
    #[arg(long = "n-max")]
    pub n_max: Option<usize>,
    /// Base RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path prefix; files are written as <out>.csv / <out>.json
    /// (plus <out>_classes.csv for simulate).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Config-file schema: every field optional, same names as the flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub p: Option<f64>,
    pub nu: Option<f64>,
    pub alpha_re: Option<f64>,
    pub alpha_im: Option<f64>,
    pub beta_re: Option<f64>,
    pub beta_im: Option<f64>,
    pub eps: Option<f64>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
    pub n_traj: Option<usize>,
    pub n_max: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub p: f64,
    pub nu: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub beta_re: f64,
    pub beta_im: f64,
    pub eps: f64,
    pub t_max: f64,
    pub dt: f64,
    pub n_traj: usize,
    pub n_max: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

impl RunConfig {
    /// Merges defaults, config file and flags (flags win), then validates.
    /// Amplitudes off normalization by up to 1e-6 are renormalized with a
    /// warning on stderr; anything worse is rejected.
    pub fn load(subcommand: &str, args: &RunArgs) -> anyhow::Result<Self> {
        let file = match &args.config {
            Some(path) => read_file_config(path)?,
            None => FileConfig::default(),
        };
        let pick_f =
            |flag: &Option<f64>, file_v: Option<f64>, dflt: f64| flag.or(file_v).unwrap_or(dflt);
        let mut cfg = RunConfig {
            subcommand: subcommand.to_string(),
            p: pick_f(&args.p, file.p, 1.0),
            nu: pick_f(&args.nu, file.nu, 1.0),
            alpha_re: pick_f(&args.alpha_re, file.alpha_re, FRAC_1_SQRT_2),
            alpha_im: pick_f(&args.alpha_im, file.alpha_im, 0.0),
            beta_re: pick_f(&args.beta_re, file.beta_re, FRAC_1_SQRT_2),
            beta_im: pick_f(&args.beta_im, file.beta_im, 0.0),
            eps: pick_f(&args.eps, file.eps, 0.0),
            t_max: pick_f(&args.t_max, file.t_max, 1.0),
            dt: pick_f(&args.dt, file.dt, 1e-3),
            n_traj: args.n_traj.or(file.n_traj).unwrap_or(10_000),
            n_max: args.n_max.or(file.n_max),
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from(format!("catfilter_{subcommand}"))),
        };
        if !(0.0..=1.0).contains(&cfg.p) {
            bail!("parameter `p` must lie in [0, 1] (got {})", cfg.p);
        }
        if !(cfg.nu > 0.0) {
            bail!("parameter `nu` must be positive (got {})", cfg.nu);
        }
        if !(cfg.t_max >= 0.0) {
            bail!("parameter `t_max` must be non-negative (got {})", cfg.t_max);
        }
        if !(cfg.dt > 0.0) {
            bail!("parameter `dt` must be positive (got {})", cfg.dt);
        }
        if cfg.n_traj == 0 {
            bail!("parameter `n_traj` must be at least 1");
        }
        let norm2 = cfg.alpha_re * cfg.alpha_re
            + cfg.alpha_im * cfg.alpha_im
            + cfg.beta_re * cfg.beta_re
            + cfg.beta_im * cfg.beta_im;
        let norm = norm2.sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            bail!(
                "initial amplitudes are not normalized: |alpha|^2 + |beta|^2 = {norm2:.9} \
                 (allowed deviation 1e-6)"
            );
        }
        if (norm - 1.0).abs() > 1e-13 {
            eprintln!(
                "warning: renormalizing initial amplitudes (norm deviated by {:.3e})",
                (norm - 1.0).abs()
            );
            cfg.alpha_re /= norm;
            cfg.alpha_im /= norm;
            cfg.beta_re /= norm;
            cfg.beta_im /= norm;
        }
        Ok(cfg)
    }

    pub fn params(&self) -> anyhow::Result<CatModelParams> {
        CatModelParams::new(
            self.p,
            self.nu,
            C64::new(self.alpha_re, self.alpha_im),
            C64::new(self.beta_re, self.beta_im),
            0.0,
            self.eps,
        )
        .map_err(|e| anyhow::anyhow!("invalid model parameters: {e}"))
    }

    /// Truncation for chain sums at intensity `lambda`: the manual order
    /// when given, otherwise certified to tail <= 1e-12.
    pub fn truncation(&self, lambda: f64) -> anyhow::Result<TruncationConfig> {
        match self.n_max {
            Some(n) => Ok(TruncationConfig::with_order(n, lambda)),
            None => TruncationConfig::for_accuracy(lambda, 1e-12)
                .map_err(|e| anyhow::anyhow!("truncation: {e}")),
        }
    }

    /// One-line JSON rendering for CSV metadata comments.
    pub fn as_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

fn read_file_config(path: &Path) -> anyhow::Result<FileConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("malformed config file {}", path.display()))
}
