//! Single-image and batch orchestration.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use texmap_core::nmf::component_energies;
use texmap_core::{analyze_with, rescale_width, sweep_elemsize, Stage};

use crate::config::{RunConfig, CANONICAL_WIDTH};
use crate::error::{Error, Result};
use crate::io::load_image;
use crate::render::{draw_component_panel, draw_sweep, render_scree_plot};
use crate::report::{
    peak_lines, render_html, render_index, BatchEntry, ComponentInfo, GridInfo, InputInfo, NmfInfo, OutputFiles,
    RunReport, ScreeInfo, SweepInfo, Timings, ToolInfo,
};
use crate::stack::write_tiff_stack;

pub const LOADINGS_FILE: &str = "loadings.tif";
pub const FACTORS_FILE: &str = "factors.tif";
pub const SCREE_FILE: &str = "scree.png";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_PNG: &str = "sweep.png";

pub fn panel_name(index: usize) -> String {
    format!("component_{index:02}.png")
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Loads, analyses and writes every output of one image into `dir`.
pub fn run_single(cfg: &RunConfig, input: &Path, dir: &Path) -> Result<RunReport> {
    let t_total = Instant::now();
    let mut timings = Timings::default();

    let t = Instant::now();
    let original = load_image(input)?;
    let (ow, oh) = (original.width(), original.height());
    let mut img = original.with_pixel_size(cfg.pixel_size_nm)?;
    if cfg.rescale_2048 {
        img = rescale_width(&img, CANONICAL_WIDTH)?;
    }
    timings.load = ms(t);

    let params = cfg.analysis_params();
    let mut marks: Vec<(Stage, Instant)> = Vec::new();
    let analysis = analyze_with(&img, &params, |s| marks.push((s, Instant::now())))?;
    let end = Instant::now();
    for (i, (stage, start)) in marks.iter().enumerate() {
        let stop = marks.get(i + 1).map_or(end, |m| m.1);
        let v = (stop - *start).as_secs_f64() * 1e3;
        match stage {
            Stage::Grid => timings.grid = v,
            Stage::Spectra => timings.spectra = v,
            Stage::Pca => timings.pca = v,
            Stage::Nmf => timings.nmf = v,
            Stage::Characterize => timings.characterize = v,
        }
    }

    let t = Instant::now();
    let sweep = match &cfg.sweep {
        Some(sizes) => Some(sweep_elemsize(&img, sizes, cfg.xstep, cfg.ystep, cfg.n_scree, &params.pca)?),
        None => None,
    };
    timings.sweep = ms(t);

    let t = Instant::now();
    create_dir(dir)?;
    let dec = &analysis.decomposition;
    write_tiff_stack(&dir.join(LOADINGS_FILE), &analysis.images.maps)?;
    write_tiff_stack(&dir.join(FACTORS_FILE), &analysis.images.factors)?;

    let energies = component_energies(dec);
    let components: Vec<ComponentInfo> = analysis
        .peaks
        .iter()
        .enumerate()
        .map(|(j, p)| ComponentInfo {
            index: j + 1,
            energy: energies[j],
            peak: p.as_ref().ok().cloned(),
            peak_error: p.as_ref().err().map(|e| e.to_string()),
            panel: panel_name(j + 1),
        })
        .collect();

    let report = RunReport {
        tool: ToolInfo::default(),
        input: InputInfo {
            path: input.display().to_string(),
            original_width: ow,
            original_height: oh,
            width: img.width(),
            height: img.height(),
            pixel_size_nm: img.pixel_size_nm(),
        },
        config: cfg.clone(),
        grid: GridInfo {
            elemsize: analysis.grid.elemsize,
            xstep: analysis.grid.xstep,
            ystep: analysis.grid.ystep,
            nx: analysis.grid.nx(),
            ny: analysis.grid.ny(),
            n_windows: analysis.grid.n_windows(),
        },
        scree: ScreeInfo {
            variance_ratio: analysis.scree.variance_ratio.clone(),
            candidates: analysis.scree.candidates.clone(),
            auto_k: analysis.scree.auto_k.k,
            auto_k_fallback: analysis.scree.auto_k.fallback,
        },
        k: analysis.k,
        k_source: if analysis.k_explicit { "explicit" } else { "auto" }.to_string(),
        nmf: NmfInfo {
            iterations_run: dec.iterations_run,
            converged: dec.converged,
            initial_objective: dec.objective_trace[0],
            final_objective: dec.final_objective(),
            relative_error: analysis.relative_error(),
        },
        components,
        sweep: sweep.as_ref().map(|rows| {
            rows.iter()
                .map(|r| match &r.outcome {
                    Ok(row) => SweepInfo {
                        elemsize: r.elemsize,
                        n_windows: Some(row.n_windows),
                        auto_k: Some(row.auto_k),
                        candidates: Some(row.candidates.clone()),
                        error: None,
                    },
                    Err(e) => SweepInfo {
                        elemsize: r.elemsize,
                        n_windows: None,
                        auto_k: None,
                        candidates: None,
                        error: Some(e.to_string()),
                    },
                })
                .collect()
        }),
        outputs: OutputFiles {
            loadings: LOADINGS_FILE.into(),
            factors: FACTORS_FILE.into(),
            scree: SCREE_FILE.into(),
            sweep_csv: sweep.as_ref().map(|_| SWEEP_CSV.into()),
            sweep_png: sweep.as_ref().map(|_| SWEEP_PNG.into()),
        },
        timings_ms: Timings::default(),
    };

    render_scree_plot(&dir.join(SCREE_FILE), &report.scree.variance_ratio, &report.scree.candidates, report.k)?;
    for (j, c) in report.components.iter().enumerate() {
        let title = format!("component {} of {}", c.index, report.k);
        let panel = draw_component_panel(&title, &analysis.images.maps[j], &analysis.images.factors[j], &peak_lines(c));
        panel.save(&dir.join(&c.panel))?;
    }
    if let Some(rows) = &report.sweep {
        write_file(&dir.join(SWEEP_CSV), &sweep_csv(rows))?;
        let pts: Vec<(usize, Option<usize>)> = rows.iter().map(|r| (r.elemsize, r.auto_k)).collect();
        draw_sweep(&pts).save(&dir.join(SWEEP_PNG))?;
    }
    write_file(&dir.join("report.html"), &render_html(&report, dir)?)?;
    timings.write = ms(t);
    timings.total = ms(t_total);

    let report = RunReport {
        timings_ms: timings,
        ..report
    };
    write_file(&dir.join("report.json"), &report.to_json())?;
    Ok(report)
}

pub fn sweep_csv(rows: &[SweepInfo]) -> String {
    let mut s = String::from("elemsize,n_windows,auto_k,candidates,error\n");
    for r in rows {
        let cands = r
            .candidates
            .as_ref()
            .map(|c| c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        let err = r.error.as_deref().unwrap_or("").replace('"', "'");
        let _ = writeln!(
            s,
            "{},{},{},{},\"{}\"",
            r.elemsize,
            r.n_windows.map_or(String::new(), |v| v.to_string()),
            r.auto_k.map_or(String::new(), |v| v.to_string()),
            cands,
            err
        );
    }
    s
}

/// Expands glob patterns; plain paths pass through unchanged.
pub fn expand_inputs(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in patterns {
        if Path::new(p).exists() {
            out.push(PathBuf::from(p));
            continue;
        }
        let matches: Vec<PathBuf> = glob::glob(p)
            .map_err(|e| Error::Usage(format!("bad pattern {p:?}: {e}")))?
            .filter_map(|r| r.ok())
            .filter(|p| p.is_file())
            .collect();
        if matches.is_empty() {
            return Err(Error::Usage(format!("no input matches {p:?}")));
        }
        out.extend(matches);
    }
    if out.is_empty() {
        return Err(Error::Usage("no inputs given".into()));
    }
    Ok(out)
}

/// Output directory names: the file stem, with `-2`, `-3`, ... appended
/// to later inputs that share a stem.
pub fn output_dirs(inputs: &[PathBuf]) -> Vec<String> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    inputs
        .iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "input".into());
            let n = seen.entry(stem.clone()).or_insert(0);
            *n += 1;
            if *n == 1 {
                stem
            } else {
                format!("{stem}-{n}")
            }
        })
        .collect()
}

#[derive(Debug)]
pub struct BatchOutcome {
    pub input: PathBuf,
    pub dir: PathBuf,
    pub seconds: f64,
    pub result: Result<RunReport>,
}

#[derive(Debug)]
pub struct BatchSummary {
    pub outcomes: Vec<BatchOutcome>,
}

impl BatchSummary {
    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| o.result.is_err()).count()
    }

    /// 0 when every input succeeded, else the most severe failure code.
    pub fn exit_code(&self) -> i32 {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().err().map(Error::exit_code))
            .max()
            .unwrap_or(0)
    }
}

/// Processes every input independently on the current rayon pool. A failing
/// input does not stop the others. With more than one input an `index.html`
/// and `summary.json` are written to the output directory.
pub fn run_batch(cfg: &RunConfig, inputs: &[PathBuf]) -> Result<BatchSummary> {
    if inputs.is_empty() {
        return Err(Error::Usage("no inputs given".into()));
    }
    create_dir(&cfg.out)?;
    let names = output_dirs(inputs);
    let outcomes: Vec<BatchOutcome> = inputs
        .par_iter()
        .zip(names.par_iter())
        .map(|(input, name)| {
            let dir = cfg.out.join(name);
            let t = Instant::now();
            let result = run_single(cfg, input, &dir);
            BatchOutcome {
                input: input.clone(),
                dir,
                seconds: t.elapsed().as_secs_f64(),
                result,
            }
        })
        .collect();

    if inputs.len() > 1 {
        let entries: Vec<BatchEntry> = outcomes
            .iter()
            .zip(&names)
            .map(|(o, name)| BatchEntry {
                input: o.input.display().to_string(),
                dir: o.result.is_ok().then(|| name.clone()),
                k: o.result.as_ref().ok().map(|r| r.k),
                error: o.result.as_ref().err().map(|e| e.to_string()),
                seconds: o.seconds,
            })
            .collect();
        write_file(&cfg.out.join("index.html"), &render_index(&entries))?;
        let json = serde_json::to_string_pretty(&entries).expect("summary serializes") + "\n";
        write_file(&cfg.out.join("summary.json"), &json)?;
    }
    Ok(BatchSummary { outcomes })
}
