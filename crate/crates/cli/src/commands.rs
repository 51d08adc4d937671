//! Command implementations behind the CLI surface.

use crate::error::CliError;
use crate::manifest::{CommandSpec, CropRect, RunManifest};
use crate::pgm::{read_pgm, write_pgm, PgmMode};
use glad_core::baselines::{gaussian_filter, median_filter, FilterSpec};
use glad_core::diffusion::{denoise_observed, pm_denoise_observed, SolverConfig};
use glad_core::field::{central_gradient_magnitude, gradient_magnitude};
use glad_core::fracops::{dump_coefficients, GLKernel, TwoSidedKernel};
use glad_core::metrics::{add_gaussian_noise, NoiseSpec, QualityReport, SsimMode};
use glad_core::Grid;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Results-table schema written by the benchmark command. `psnr_db` and
/// `ssim` are each the best over the sweep/steps; `best_step` and `mse` refer
/// to the PSNR-maximizing step; `param_note` records the parameters behind
/// that cell.
pub const BENCHMARK_CSV_HEADER: &str = "image,method,sigma,param_note,best_step,psnr_db,ssim,mse";

/// Gaussian baseline sweep: (sigma, radius ~ 3 sigma).
const GAUSSIAN_SWEEP: [(f64, usize); 4] = [(0.8, 3), (1.0, 3), (1.5, 5), (2.0, 6)];
/// Median baseline sweep: window radii.
const MEDIAN_SWEEP: [usize; 2] = [1, 2];
/// The explicit integer-order baseline needs a smaller step; it runs twice
/// the iterations to cover the same total time as the fractional solver.
const PM_DT: f64 = 0.25;

pub fn run(manifest: &RunManifest) -> Result<(), CliError> {
    match &manifest.command {
        CommandSpec::Denoise {
            input,
            out_dir,
            csv,
            cfg,
            noise,
            ssim_mode,
            crop,
        } => cmd_denoise(input, out_dir, csv.as_deref(), cfg, noise, *ssim_mode, *crop),
        CommandSpec::Benchmark {
            inputs,
            out_dir,
            csv,
            cfg,
            sigmas,
            seed,
            ssim_mode,
            crop,
        } => cmd_benchmark(inputs, out_dir, csv, cfg, sigmas, *seed, *ssim_mode, *crop),
        CommandSpec::FeatureMap {
            input,
            out_dir,
            beta,
            n_mem,
            crop,
        } => cmd_feature_map(input, out_dir, *beta, *n_mem, *crop),
        CommandSpec::Response { csv, alphas } => cmd_response(csv, alphas),
        CommandSpec::Kernel {
            alpha,
            n_mem,
            h,
            out,
        } => cmd_kernel(*alpha, *n_mem, *h, out.as_deref()),
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_input(path: &Path, crop: Option<CropRect>) -> Result<Grid, CliError> {
    let grid = read_pgm(path)?;
    match crop {
        Some(c) => Ok(grid.crop(c.x, c.y, c.width, c.height)?),
        None => Ok(grid),
    }
}

/// Append rows, writing the header only when the file starts empty.
fn append_csv(path: &Path, header: &str, rows: &[String]) -> Result<(), CliError> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    if fresh {
        writeln!(file, "{header}").map_err(io_err(path))?;
    }
    for row in rows {
        writeln!(file, "{row}").map_err(io_err(path))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_denoise(
    input: &Path,
    out_dir: &Path,
    csv: Option<&Path>,
    cfg: &SolverConfig,
    noise: &NoiseSpec,
    ssim_mode: SsimMode,
    crop: Option<CropRect>,
) -> Result<(), CliError> {
    let clean = read_input(input, crop)?;
    let name = stem(input);
    let has_reference = noise.sigma > 0.0;
    let work = if has_reference {
        let noisy = add_gaussian_noise(&clean, noise);
        write_pgm(
            &noisy,
            &out_dir.join(format!("{name}_noisy.pgm")),
            PgmMode::Binary,
        )?;
        noisy
    } else {
        clean.clone()
    };
    let result = denoise_observed(&work, cfg, |_, _| {})?;
    let out_path = out_dir.join(format!("{name}_denoised.pgm"));
    write_pgm(&result, &out_path, PgmMode::Binary)?;
    println!("wrote {}", out_path.display());
    if has_reference {
        let report = QualityReport::on(&result, &clean, ssim_mode)?;
        println!(
            "{name}: sigma={} psnr={:.4} dB ssim={:.6}",
            noise.sigma, report.psnr_db, report.ssim
        );
        if let Some(csv) = csv {
            append_csv(
                csv,
                QualityReport::CSV_HEADER,
                &[report.csv_row(&name, "proposed", noise.sigma, cfg.n_steps)],
            )?;
        }
    }
    Ok(())
}

/// Best-over-trajectory bookkeeping for one method on one noisy image.
struct Tracker<'a> {
    reference: &'a Grid,
    ssim_mode: SsimMode,
    best_psnr: f64,
    best_ssim: f64,
    best_step: usize,
    mse_at_best: f64,
    best_grid: Grid,
}

impl<'a> Tracker<'a> {
    fn starting_from(reference: &'a Grid, start: &Grid, ssim_mode: SsimMode) -> Self {
        let mut t = Self {
            reference,
            ssim_mode,
            best_psnr: f64::NEG_INFINITY,
            best_ssim: f64::NEG_INFINITY,
            best_step: 0,
            mse_at_best: f64::INFINITY,
            best_grid: start.clone(),
        };
        t.observe(0, start);
        t
    }

    fn observe(&mut self, step: usize, grid: &Grid) {
        let psnr = glad_core::metrics::psnr(grid, self.reference).expect("shapes match");
        let ssim = glad_core::metrics::ssim(grid, self.reference, self.ssim_mode)
            .expect("shapes match");
        if psnr > self.best_psnr {
            self.best_psnr = psnr;
            self.best_step = step;
            self.mse_at_best = glad_core::metrics::mse(grid, self.reference).expect("shapes match");
            self.best_grid = grid.clone();
        }
        if ssim > self.best_ssim {
            self.best_ssim = ssim;
        }
    }

    fn row(&self, image: &str, method: &str, sigma: f64, note: &str) -> String {
        format!(
            "{image},{method},{sigma},{note},{},{:.4},{:.6},{:.6}",
            self.best_step, self.best_psnr, self.best_ssim, self.mse_at_best
        )
    }

    fn into_cell(
        self,
        method: &'static str,
        image: &str,
        sigma: f64,
        note: &str,
    ) -> BenchmarkCell {
        let row = self.row(image, method, sigma, note);
        BenchmarkCell {
            method,
            row,
            best_grid: self.best_grid,
            best_psnr: self.best_psnr,
            best_ssim: self.best_ssim,
            best_step: self.best_step,
        }
    }
}

pub struct BenchmarkCell {
    pub method: &'static str,
    pub row: String,
    pub best_grid: Grid,
    pub best_psnr: f64,
    pub best_ssim: f64,
    pub best_step: usize,
}

/// All methods on one (clean, noisy) pair. Exposed for the test harness;
/// the benchmark command wraps it with I/O.
pub fn benchmark_methods(
    clean: &Grid,
    noisy: &Grid,
    image: &str,
    sigma: f64,
    cfg: &SolverConfig,
    ssim_mode: SsimMode,
) -> Result<Vec<BenchmarkCell>, CliError> {
    let mut cells = Vec::new();

    let noisy_tracker = Tracker::starting_from(clean, noisy, ssim_mode);
    cells.push(noisy_tracker.into_cell("noisy", image, sigma, "-"));

    let mut tracker = Tracker::starting_from(clean, noisy, ssim_mode);
    let mut note = String::from("-");
    for (step, &(g_sigma, radius)) in GAUSSIAN_SWEEP.iter().enumerate() {
        let spec = FilterSpec::gaussian(radius, g_sigma)?;
        let out = gaussian_filter(noisy, &spec)?;
        let before = tracker.best_step;
        tracker.observe(step + 1, &out);
        if tracker.best_step != before {
            note = format!("sigma={g_sigma} radius={radius}");
        }
    }
    cells.push(tracker.into_cell("gaussian", image, sigma, &note));

    let mut tracker = Tracker::starting_from(clean, noisy, ssim_mode);
    let mut note = String::from("-");
    for (step, &radius) in MEDIAN_SWEEP.iter().enumerate() {
        let out = median_filter(noisy, &FilterSpec::median(radius)?)?;
        let before = tracker.best_step;
        tracker.observe(step + 1, &out);
        if tracker.best_step != before {
            note = format!("radius={radius}");
        }
    }
    cells.push(tracker.into_cell("median", image, sigma, &note));

    let pm_steps = 2 * cfg.n_steps;
    let mut tracker = Tracker::starting_from(clean, noisy, ssim_mode);
    pm_denoise_observed(noisy, &cfg.edge, PM_DT, pm_steps, false, |step, grid| {
        tracker.observe(step, grid)
    })?;
    let note = format!("dt={PM_DT} steps={pm_steps}");
    cells.push(tracker.into_cell("pm", image, sigma, &note));

    let mut tracker = Tracker::starting_from(clean, noisy, ssim_mode);
    let unclamped = SolverConfig {
        clamp_output: false,
        ..cfg.clone()
    };
    denoise_observed(noisy, &unclamped, |step, grid| tracker.observe(step, grid))?;
    let note = format!(
        "alpha={} beta={} dt={} N={} steps={}",
        cfg.alpha, cfg.beta, cfg.dt, cfg.n_mem, cfg.n_steps
    );
    cells.push(tracker.into_cell("proposed", image, sigma, &note));

    Ok(cells)
}

/// Noise stream for one benchmark cell; plain arithmetic keeps runs with the
/// same manifest bitwise identical while separating every (image, sigma).
pub fn cell_seed(base: u64, image_index: usize, sigma_index: usize) -> u64 {
    base.wrapping_add(1_000_003u64.wrapping_mul(image_index as u64))
        .wrapping_add(sigma_index as u64)
}

#[allow(clippy::too_many_arguments)]
fn cmd_benchmark(
    inputs: &[PathBuf],
    out_dir: &Path,
    csv: &Path,
    cfg: &SolverConfig,
    sigmas: &[f64],
    seed: u64,
    ssim_mode: SsimMode,
    crop: Option<CropRect>,
) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for (img_idx, input) in inputs.iter().enumerate() {
        let clean = read_input(input, crop)?;
        let name = stem(input);
        for (sig_idx, &sigma) in sigmas.iter().enumerate() {
            let spec = NoiseSpec {
                sigma,
                seed: cell_seed(seed, img_idx, sig_idx),
            };
            let noisy = add_gaussian_noise(&clean, &spec);
            let cells = benchmark_methods(&clean, &noisy, &name, sigma, cfg, ssim_mode)?;
            for cell in &cells {
                let file = out_dir.join(format!("{name}_s{sigma}_{}.pgm", cell.method));
                write_pgm(&cell.best_grid.clamped(0.0, 255.0), &file, PgmMode::Binary)?;
                rows.push(cell.row.clone());
            }
            println!("{name} sigma={sigma}: done");
        }
    }
    append_csv(csv, BENCHMARK_CSV_HEADER, &rows)?;
    println!("wrote {}", csv.display());
    Ok(())
}

fn normalize_to_255(g: &Grid) -> Grid {
    let (lo, hi) = g.min_max();
    if hi > lo {
        g.map(|v| (v - lo) / (hi - lo) * 255.0)
    } else {
        g.map(|_| 0.0)
    }
}

fn cmd_feature_map(
    input: &Path,
    out_dir: &Path,
    beta: f64,
    n_mem: usize,
    crop: Option<CropRect>,
) -> Result<(), CliError> {
    let u = read_input(input, crop)?;
    let name = stem(input);
    let central = central_gradient_magnitude(&u);
    let kernel = TwoSidedKernel::new(beta, n_mem, 1.0)?;
    let fractional = gradient_magnitude(&u, &kernel)?;
    for (suffix, map) in [("grad_central", central), ("grad_frac", fractional)] {
        let path = out_dir.join(format!("{name}_{suffix}.pgm"));
        write_pgm(&normalize_to_255(&map), &path, PgmMode::Binary)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Log-spaced frequency grid used for the response curves.
pub fn response_frequencies() -> Vec<f64> {
    const POINTS: usize = 200;
    (0..POINTS)
        .map(|i| 10f64.powf(-2.0 + 3.0 * i as f64 / (POINTS - 1) as f64))
        .collect()
}

fn cmd_response(csv: &Path, alphas: &[f64]) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for &alpha in alphas {
        for &omega in &response_frequencies() {
            let r = glad_core::fracops::amplitude_response(alpha, omega);
            rows.push(format!("{omega:.8e},{alpha},{r:.8e}"));
        }
    }
    append_csv(csv, "omega,alpha,response", &rows)?;
    println!("wrote {}", csv.display());
    Ok(())
}

fn cmd_kernel(alpha: f64, n_mem: usize, h: f64, out: Option<&Path>) -> Result<(), CliError> {
    let gl = GLKernel::new(alpha, n_mem)?;
    let two_sided = TwoSidedKernel::new(alpha, n_mem, h)?;
    let text = format!(
        "{}{}",
        dump_coefficients(alpha, n_mem, h, gl.weights()),
        two_sided.dump_text()
    );
    match out {
        Some(path) => {
            std::fs::write(path, &text).map_err(io_err(path))?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
