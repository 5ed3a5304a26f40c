use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::{error, info, warn};

use texmap::config::{read_config, Overrides, RunConfig};
use texmap::run::{expand_inputs, run_batch};
use texmap::Error;

/// Moving-window FFT texture analysis: scree-plot component estimate and
/// NMF decomposition into spatial loadings and spectral factors.
#[derive(Debug, Parser)]
#[command(name = "texmap", version)]
struct Cli {
    /// Image files or glob patterns (TIFF, PNG, JPEG, BMP).
    #[arg(required = true)]
    inputs: Vec<String>,

    /// Window side in pixels.
    #[arg(long)]
    elemsize: Option<usize>,
    #[arg(long)]
    xstep: Option<usize>,
    #[arg(long)]
    ystep: Option<usize>,
    /// Number of NMF components; overrides the scree estimate.
    #[arg(long)]
    components: Option<usize>,
    /// Principal components kept for the scree plot.
    #[arg(long)]
    n_scree: Option<usize>,
    /// Resample to 2048 px width before analysis.
    #[arg(long = "rescale-2048")]
    rescale_2048: bool,
    #[arg(long)]
    pixel_size_nm: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Relative objective change that stops NMF.
    #[arg(long)]
    tol: Option<f64>,
    /// Radius in bins around DC ignored when locating factor peaks.
    #[arg(long)]
    dc_exclusion: Option<f64>,
    /// Annulus max/mean below which a factor counts as ring-like.
    #[arg(long)]
    isotropy_threshold: Option<f64>,
    /// Three-point moving average of the log scree before elbow detection.
    #[arg(long)]
    smooth_scree: bool,
    /// Scree gradients closer than this (decades) are treated as equal.
    #[arg(long)]
    scree_tie_tol: Option<f64>,
    /// Window sizes for a component-count sweep, e.g. 16,32,64,128,256,512.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<usize>>,
    /// Output directory; each input gets a subdirectory named after it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Flat `key = value` file with the same keys as the long flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            elemsize: self.elemsize,
            xstep: self.xstep,
            ystep: self.ystep,
            rescale_2048: self.rescale_2048.then_some(true),
            components: self.components,
            n_scree: self.n_scree,
            max_iter: self.max_iter,
            tol: self.tol,
            pixel_size_nm: self.pixel_size_nm,
            dc_exclusion: self.dc_exclusion,
            isotropy_threshold: self.isotropy_threshold,
            smooth_scree: self.smooth_scree.then_some(true),
            scree_tie_tol: self.scree_tie_tol,
            sweep: self.sweep.clone(),
            out: self.out.clone(),
            threads: self.threads,
        }
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    let file = cli.config.as_deref().map(read_config).transpose()?;
    let cfg = RunConfig::resolve(file.as_ref(), &cli.overrides())?;
    let inputs = expand_inputs(&cli.inputs)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Usage(format!("cannot start thread pool: {e}")))?;
    let summary = pool.install(|| run_batch(&cfg, &inputs))?;

    for o in &summary.outcomes {
        match &o.result {
            Ok(r) => {
                if r.scree.auto_k_fallback && r.k_source == "auto" {
                    warn!("{}: no scree elbow found, using k = 1", o.input.display());
                }
                let cands: Vec<String> = r.scree.candidates.iter().map(|c| c.to_string()).collect();
                println!(
                    "{}: k={} ({}) candidates=[{}] windows={} time={:.2}s -> {}",
                    o.input.display(),
                    r.k,
                    r.k_source,
                    cands.join(","),
                    r.grid.n_windows,
                    o.seconds,
                    o.dir.display()
                );
            }
            Err(e) => error!("{}: {e}", o.input.display()),
        }
    }
    if summary.outcomes.len() > 1 {
        info!(
            "{} of {} inputs succeeded",
            summary.outcomes.len() - summary.failures(),
            summary.outcomes.len()
        );
    }
    Ok(summary.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
