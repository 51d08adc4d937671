//! Command-line surface and the validated run manifest it produces.

use crate::error::CliError;
use clap::{Args, Parser, Subcommand, ValueEnum};
use glad_core::diffusion::{EdgeForm, EdgeStopping, SolverConfig};
use glad_core::metrics::{NoiseSpec, SsimMode};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "glad",
    version,
    about = "Fractional anisotropic diffusion denoiser for 8-bit PGM images"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

/// `X,Y,WIDTH,HEIGHT` rectangle applied to inputs right after reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropRect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

fn parse_crop(s: &str) -> Result<CropRect, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err("expected X,Y,WIDTH,HEIGHT".into());
    }
    let mut v = [0usize; 4];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| format!("bad crop component {part:?}"))?;
    }
    Ok(CropRect {
        x: v[0],
        y: v[1],
        width: v[2],
        height: v[3],
    })
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Denoise one image; optionally corrupt it with seeded noise first.
    Denoise {
        /// Input image (PGM, P2 or P5)
        input: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        /// Noise standard deviation added before denoising (0 = none)
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        /// Noise seed
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Append a quality row to this CSV (needs --sigma > 0)
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Work on a sub-rectangle of the input
        #[arg(long, value_name = "X,Y,W,H", value_parser = parse_crop)]
        crop: Option<CropRect>,
    },
    /// Run the full method comparison over images and noise levels.
    Benchmark {
        /// Input images (PGM)
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        solver: SolverFlags,
        /// Noise levels to sweep
        #[arg(long, value_delimiter = ',', default_values_t = [10.0, 15.0, 20.0, 25.0])]
        sigmas: Vec<f64>,
        /// Base noise seed; each (image, sigma) cell derives its own stream
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory for processed images
        #[arg(long)]
        out: PathBuf,
        /// Results table destination
        #[arg(long)]
        csv: PathBuf,
        /// Work on a sub-rectangle of every input
        #[arg(long, value_name = "X,Y,W,H", value_parser = parse_crop)]
        crop: Option<CropRect>,
    },
    /// Write normalized |grad u| and |grad^beta u| maps for one image.
    FeatureMap {
        input: PathBuf,
        /// Edge-detection order
        #[arg(long, default_value_t = 1.55)]
        beta: f64,
        /// Retained stencil points per side
        #[arg(long, default_value_t = 15)]
        mem: usize,
        #[arg(long)]
        out: PathBuf,
        /// Work on a sub-rectangle of the input
        #[arg(long, value_name = "X,Y,W,H", value_parser = parse_crop)]
        crop: Option<CropRect>,
    },
    /// Emit the frequency-response curves omega^alpha as CSV.
    Response {
        /// Orders to tabulate
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 1.5])]
        alphas: Vec<f64>,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Dump the GL coefficients and the two-sided kernel.
    Kernel {
        #[arg(long, default_value_t = 1.67)]
        alpha: f64,
        #[arg(long, default_value_t = 15)]
        mem: usize,
        #[arg(long, default_value_t = 1.0)]
        h: f64,
        /// Write to this file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EdgeFormFlag {
    Rational,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SsimFlag {
    Global,
    Windowed,
}

/// Solver parameters shared by the denoise and benchmark commands.
#[derive(Debug, Args)]
pub struct SolverFlags {
    /// Flux order alpha in (1.25, 1.75)
    #[arg(long, default_value_t = 1.67)]
    pub alpha: f64,
    /// Edge-detection order beta in (1, 2)
    #[arg(long, default_value_t = 1.55)]
    pub beta: f64,
    /// Time step
    #[arg(long, default_value_t = 0.5)]
    pub dt: f64,
    /// Iteration count
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    /// Retained stencil points per side
    #[arg(long, default_value_t = 15)]
    pub mem: usize,
    /// Edge-stopping form
    #[arg(long, value_enum, default_value_t = EdgeFormFlag::Rational)]
    pub edge: EdgeFormFlag,
    /// Edge-stopping exponent
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2), default_value_t = 2)]
    pub gamma: u32,
    /// Fixed edge threshold K
    #[arg(long = "K", conflicts_with = "k_percentile")]
    pub k: Option<f64>,
    /// Re-estimate K each step as this percentile of |grad^beta u|
    #[arg(long = "K-percentile")]
    pub k_percentile: Option<f64>,
    /// SSIM statistics window
    #[arg(long, value_enum, default_value_t = SsimFlag::Global)]
    pub ssim: SsimFlag,
}

impl SolverFlags {
    pub fn to_config(&self) -> Result<SolverConfig, CliError> {
        let form = match self.edge {
            EdgeFormFlag::Rational => EdgeForm::Rational,
            EdgeFormFlag::Exponential => EdgeForm::Exponential,
        };
        let edge = match (self.k, self.k_percentile) {
            (Some(k), None) => EdgeStopping::new(form, k, self.gamma)?,
            (None, p) => EdgeStopping::new(form, 1.0, self.gamma)?
                .with_percentile(p.unwrap_or(90.0))?,
            (Some(_), Some(_)) => unreachable!("clap rejects conflicting K flags"),
        };
        let cfg = SolverConfig {
            alpha: self.alpha,
            beta: self.beta,
            h: 1.0,
            dt: self.dt,
            n_mem: self.mem,
            n_steps: self.steps,
            edge,
            clamp_output: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn ssim_mode(&self) -> SsimMode {
        match self.ssim {
            SsimFlag::Global => SsimMode::Global,
            SsimFlag::Windowed => SsimMode::Windowed8,
        }
    }
}

/// A fully validated invocation: every path checked, every parameter inside
/// its documented range, before any computation starts.
#[derive(Debug)]
pub struct RunManifest {
    pub command: CommandSpec,
}

#[derive(Debug)]
pub enum CommandSpec {
    Denoise {
        input: PathBuf,
        out_dir: PathBuf,
        csv: Option<PathBuf>,
        cfg: SolverConfig,
        noise: NoiseSpec,
        ssim_mode: SsimMode,
        crop: Option<CropRect>,
    },
    Benchmark {
        inputs: Vec<PathBuf>,
        out_dir: PathBuf,
        csv: PathBuf,
        cfg: SolverConfig,
        sigmas: Vec<f64>,
        seed: u64,
        ssim_mode: SsimMode,
        crop: Option<CropRect>,
    },
    FeatureMap {
        input: PathBuf,
        out_dir: PathBuf,
        beta: f64,
        n_mem: usize,
        crop: Option<CropRect>,
    },
    Response {
        csv: PathBuf,
        alphas: Vec<f64>,
    },
    Kernel {
        alpha: f64,
        n_mem: usize,
        h: f64,
        out: Option<PathBuf>,
    },
}

fn check_input(path: &Path) -> Result<(), CliError> {
    if !path.is_file() {
        return Err(CliError::Usage(format!(
            "input {} does not exist or is not a file",
            path.display()
        )));
    }
    Ok(())
}

fn prepare_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn prepare_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            prepare_dir(parent)?;
        }
    }
    Ok(())
}

impl RunManifest {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let command = match cli.command {
            CliCommand::Denoise {
                input,
                solver,
                sigma,
                seed,
                out,
                csv,
                crop,
            } => {
                if !(sigma >= 0.0) {
                    return Err(CliError::Usage(format!(
                        "--sigma must be non-negative, got {sigma}"
                    )));
                }
                check_input(&input)?;
                prepare_dir(&out)?;
                if let Some(csv) = &csv {
                    prepare_parent(csv)?;
                }
                CommandSpec::Denoise {
                    input,
                    out_dir: out,
                    csv,
                    cfg: solver.to_config()?,
                    noise: NoiseSpec { sigma, seed },
                    ssim_mode: solver.ssim_mode(),
                    crop,
                }
            }
            CliCommand::Benchmark {
                inputs,
                solver,
                sigmas,
                seed,
                out,
                csv,
                crop,
            } => {
                for input in &inputs {
                    check_input(input)?;
                }
                if sigmas.is_empty() || sigmas.iter().any(|s| !(*s > 0.0)) {
                    return Err(CliError::Usage(
                        "--sigmas needs at least one positive value".into(),
                    ));
                }
                prepare_dir(&out)?;
                prepare_parent(&csv)?;
                CommandSpec::Benchmark {
                    inputs,
                    out_dir: out,
                    csv,
                    cfg: solver.to_config()?,
                    sigmas,
                    seed,
                    ssim_mode: solver.ssim_mode(),
                    crop,
                }
            }
            CliCommand::FeatureMap {
                input,
                beta,
                mem,
                out,
                crop,
            } => {
                check_input(&input)?;
                prepare_dir(&out)?;
                if !(beta > 1.0 && beta < 2.0) {
                    return Err(CliError::Usage(format!(
                        "--beta must lie in (1, 2), got {beta}"
                    )));
                }
                CommandSpec::FeatureMap {
                    input,
                    out_dir: out,
                    beta,
                    n_mem: mem,
                    crop,
                }
            }
            CliCommand::Response { alphas, csv } => {
                if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0)) {
                    return Err(CliError::Usage(
                        "--alphas needs at least one positive order".into(),
                    ));
                }
                prepare_parent(&csv)?;
                CommandSpec::Response { csv, alphas }
            }
            CliCommand::Kernel {
                alpha,
                mem,
                h,
                out,
            } => {
                if let Some(out) = &out {
                    prepare_parent(out)?;
                }
                CommandSpec::Kernel {
                    alpha,
                    n_mem: mem,
                    h,
                    out,
                }
            }
        };
        Ok(Self { command })
    }
}
