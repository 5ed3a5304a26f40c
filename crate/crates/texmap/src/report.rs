//! The run report: a JSON record of everything a run computed, and an HTML
//! page built only from that record and the rendered PNGs.
//!
//! `timings_ms` is the only field that differs between identical runs; see
//! [`VOLATILE_FIELDS`].

use std::fmt::Write as _;
use std::path::Path;

use base64::Engine;
use serde::{Deserialize, Serialize};

use texmap_core::PeakInfo;

use crate::config::RunConfig;
use crate::error::{Error, Result};

/// Top-level report keys excluded from run-to-run comparisons.
pub const VOLATILE_FIELDS: &[&str] = &["timings_ms"];

/// JSON Schema (draft-07) that every `report.json` satisfies.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: ToolInfo,
    pub input: InputInfo,
    pub config: RunConfig,
    pub grid: GridInfo,
    pub scree: ScreeInfo,
    pub k: usize,
    /// `"auto"` when k came from the scree, `"explicit"` when given.
    pub k_source: String,
    pub nmf: NmfInfo,
    pub components: Vec<ComponentInfo>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sweep: Option<Vec<SweepInfo>>,
    pub outputs: OutputFiles,
    pub timings_ms: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub path: String,
    pub original_width: usize,
    pub original_height: usize,
    /// Dimensions after optional rescaling; the grid is planned on these.
    pub width: usize,
    pub height: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pixel_size_nm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub elemsize: usize,
    pub xstep: usize,
    pub ystep: usize,
    pub nx: usize,
    pub ny: usize,
    pub n_windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeInfo {
    pub variance_ratio: Vec<f64>,
    pub candidates: Vec<usize>,
    pub auto_k: usize,
    /// No candidate was found and `auto_k` fell back to 1.
    pub auto_k_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmfInfo {
    pub iterations_run: usize,
    pub converged: bool,
    pub initial_objective: f64,
    pub final_objective: f64,
    /// `||X - WH||_F / ||X||_F` at the end.
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentInfo {
    /// 1-based, in component order.
    pub index: usize,
    pub energy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub peak: Option<PeakInfo>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub peak_error: Option<String>,
    pub panel: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepInfo {
    pub elemsize: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_windows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub auto_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub candidates: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFiles {
    pub loadings: String,
    pub factors: String,
    pub scree: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sweep_csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sweep_png: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub load: f64,
    pub grid: f64,
    pub spectra: f64,
    pub pca: f64,
    pub nmf: f64,
    pub characterize: f64,
    pub sweep: f64,
    pub write: f64,
    pub total: f64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Report JSON with the volatile fields removed.
pub fn stable_json(json: &str) -> serde_json::Result<serde_json::Value> {
    let mut v: serde_json::Value = serde_json::from_str(json)?;
    if let Some(obj) = v.as_object_mut() {
        for k in VOLATILE_FIELDS {
            obj.remove(*k);
        }
    }
    Ok(v)
}

/// Annotation lines shared by the panel PNG and the HTML table.
pub fn peak_lines(c: &ComponentInfo) -> Vec<String> {
    match (&c.peak, &c.peak_error) {
        (Some(p), _) => vec![
            format!("radius {:.2} bins, angle {:.1} deg", p.radius_bins, p.angle_deg),
            format!("spacing {:.2} px, {}", p.spacing_window_px, fmt_nm(p.spacing_nm)),
            format!(
                "{} (isotropy {:.2})",
                if p.isotropic { "ring-like" } else { "directional" },
                p.isotropy_ratio
            ),
        ],
        (None, Some(e)) => vec![format!("no peak: {e}")],
        (None, None) => vec!["no peak".to_string()],
    }
}

pub fn fmt_nm(v: Option<f64>) -> String {
    match v {
        Some(nm) => format!("{nm:.2} nm"),
        None => "n/a".to_string(),
    }
}

fn embed_png(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(format!(
        "data:image/png;base64,{}",
        base64::engine::general_purpose::STANDARD.encode(bytes)
    ))
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const STYLE: &str = "body{font-family:sans-serif;margin:2em;max-width:70em}\
table{border-collapse:collapse}td,th{border:1px solid #ccc;padding:.25em .6em;text-align:right}\
th{background:#f2f2f2}img{max-width:100%}.warn{color:#b00}";

/// Self-contained HTML page; every PNG is inlined.
pub fn render_html(report: &RunReport, dir: &Path) -> Result<String> {
    let mut h = String::new();
    let title = format!("texmap report: {}", report.input.path);
    let _ = write!(
        h,
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{}</title><style>{STYLE}</style></head><body>\n",
        esc(&title)
    );
    let _ = writeln!(h, "<h1>{}</h1>", esc(&title));
    let i = &report.input;
    let _ = writeln!(
        h,
        "<p>Image {}&times;{} (analysed at {}&times;{}), pixel size {}. Window {} px, steps {}&times;{}, grid {}&times;{} = {} windows.</p>",
        i.original_width,
        i.original_height,
        i.width,
        i.height,
        i.pixel_size_nm.map_or("n/a".to_string(), |p| format!("{p} nm")),
        report.grid.elemsize,
        report.grid.xstep,
        report.grid.ystep,
        report.grid.nx,
        report.grid.ny,
        report.grid.n_windows
    );

    h.push_str("<h2>Scree plot</h2>\n");
    let _ = writeln!(h, "<img alt=\"scree plot\" src=\"{}\">", embed_png(dir, &report.outputs.scree)?);
    let cands: Vec<String> = report.scree.candidates.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(
        h,
        "<p>Elbow candidates: {}. Components used: {} ({}).</p>",
        if cands.is_empty() { "none".to_string() } else { cands.join(", ") },
        report.k,
        report.k_source
    );
    if report.scree.auto_k_fallback {
        h.push_str("<p class=\"warn\">No elbow candidate was found; the component count fell back to 1.</p>\n");
    }

    h.push_str("<h2>Components</h2>\n<table><tr><th>#</th><th>radius (bins)</th><th>angle (deg)</th><th>spacing (px)</th><th>spacing (nm)</th><th>pattern</th></tr>\n");
    for c in &report.components {
        match &c.peak {
            Some(p) => {
                let _ = writeln!(
                    h,
                    "<tr><td>{}</td><td>{:.2}</td><td>{:.1}</td><td>{:.2}</td><td>{}</td><td>{}</td></tr>",
                    c.index,
                    p.radius_bins,
                    p.angle_deg,
                    p.spacing_window_px,
                    p.spacing_nm.map_or("n/a".to_string(), |v| format!("{v:.2}")),
                    if p.isotropic { "ring-like" } else { "directional" }
                );
            }
            None => {
                let _ = writeln!(
                    h,
                    "<tr><td>{}</td><td colspan=\"5\">{}</td></tr>",
                    c.index,
                    esc(c.peak_error.as_deref().unwrap_or("no peak"))
                );
            }
        }
    }
    h.push_str("</table>\n");
    for c in &report.components {
        let _ = writeln!(
            h,
            "<h3>Component {}</h3>\n<img alt=\"component {}\" src=\"{}\">\n<p>{}</p>",
            c.index,
            c.index,
            embed_png(dir, &c.panel)?,
            peak_lines(c).iter().map(|l| esc(l)).collect::<Vec<_>>().join("<br>")
        );
    }

    let n = &report.nmf;
    let _ = writeln!(
        h,
        "<h2>Factorization</h2>\n<p>{} iterations ({}), objective {:.6e} &rarr; {:.6e}, relative error {:.4}.</p>",
        n.iterations_run,
        if n.converged { "converged" } else { "iteration cap reached" },
        n.initial_objective,
        n.final_objective,
        n.relative_error
    );

    if let Some(rows) = &report.sweep {
        h.push_str("<h2>Window size sweep</h2>\n");
        if let Some(png) = &report.outputs.sweep_png {
            let _ = writeln!(h, "<img alt=\"sweep\" src=\"{}\">", embed_png(dir, png)?);
        }
        h.push_str("<table><tr><th>window</th><th>windows</th><th>k</th><th>candidates</th></tr>\n");
        for r in rows {
            match &r.error {
                Some(e) => {
                    let _ = writeln!(h, "<tr><td>{}</td><td colspan=\"3\">{}</td></tr>", r.elemsize, esc(e));
                }
                None => {
                    let _ = writeln!(
                        h,
                        "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
                        r.elemsize,
                        r.n_windows.unwrap_or(0),
                        r.auto_k.unwrap_or(0),
                        r.candidates
                            .as_ref()
                            .map(|c| c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "))
                            .unwrap_or_default()
                    );
                }
            }
        }
        h.push_str("</table>\n");
    }

    let _ = writeln!(
        h,
        "<p>Loadings: <code>{}</code>, factors: <code>{}</code> (32-bit float TIFF, one page per component).</p>",
        esc(&report.outputs.loadings),
        esc(&report.outputs.factors)
    );
    let _ = writeln!(h, "<p><small>{} {}</small></p>\n</body></html>", report.tool.name, report.tool.version);
    Ok(h)
}

/// One line per input of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchEntry {
    pub input: String,
    /// Report directory relative to the batch output directory.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub seconds: f64,
}

pub fn render_index(entries: &[BatchEntry]) -> String {
    let mut h = String::new();
    let _ = write!(
        h,
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>texmap batch</title><style>{STYLE}</style></head><body>\n<h1>texmap batch</h1>\n"
    );
    let ok = entries.iter().filter(|e| e.error.is_none()).count();
    let _ = writeln!(h, "<p>{ok} of {} inputs succeeded.</p>", entries.len());
    h.push_str("<table><tr><th>input</th><th>components</th><th>time (s)</th><th>status</th></tr>\n");
    for e in entries {
        let status = match (&e.error, &e.dir) {
            (Some(err), _) => format!("<span class=\"warn\">{}</span>", esc(err)),
            (None, Some(d)) => format!("<a href=\"{0}/report.html\">report</a>", esc(d)),
            (None, None) => "ok".to_string(),
        };
        let _ = writeln!(
            h,
            "<tr><td>{}</td><td>{}</td><td>{:.2}</td><td>{status}</td></tr>",
            esc(&e.input),
            e.k.map_or("-".to_string(), |k| k.to_string()),
            e.seconds
        );
    }
    h.push_str("</table>\n</body></html>\n");
    h
}
