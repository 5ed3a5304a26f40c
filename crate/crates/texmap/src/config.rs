//! Run configuration: defaults, a flat `key = value` file, and flag overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use texmap_core::characterize::{DEFAULT_DC_EXCLUSION, DEFAULT_ISOTROPY_THRESHOLD};
use texmap_core::nmf::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use texmap_core::pca::{DEFAULT_N_SCREE, DEFAULT_TIE_TOL};
use texmap_core::pipeline::{DEFAULT_ELEMSIZE, DEFAULT_STEP};
use texmap_core::{AnalysisParams, NmfOptions, PcaOptions, PeakOptions};

use crate::error::{Error, Result};

/// Width used by `rescale_2048`.
pub const CANONICAL_WIDTH: usize = 2048;

/// Every analysis setting of a run. Serialized into the report as the
/// effective configuration; the output directory and thread count do not
/// affect results and are left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub elemsize: usize,
    pub xstep: usize,
    pub ystep: usize,
    pub rescale_2048: bool,
    pub components: Option<usize>,
    pub n_scree: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub pixel_size_nm: Option<f64>,
    pub dc_exclusion: f64,
    pub isotropy_threshold: f64,
    pub smooth_scree: bool,
    pub scree_tie_tol: f64,
    pub sweep: Option<Vec<usize>>,
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            elemsize: DEFAULT_ELEMSIZE,
            xstep: DEFAULT_STEP,
            ystep: DEFAULT_STEP,
            rescale_2048: false,
            components: None,
            n_scree: DEFAULT_N_SCREE,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            pixel_size_nm: None,
            dc_exclusion: DEFAULT_DC_EXCLUSION,
            isotropy_threshold: DEFAULT_ISOTROPY_THRESHOLD,
            smooth_scree: false,
            scree_tie_tol: DEFAULT_TIE_TOL,
            sweep: None,
            out: PathBuf::from("texmap-out"),
            threads: None,
        }
    }
}

/// A partial configuration; unset fields fall through to the layer below.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub elemsize: Option<usize>,
    pub xstep: Option<usize>,
    pub ystep: Option<usize>,
    pub rescale_2048: Option<bool>,
    pub components: Option<usize>,
    pub n_scree: Option<usize>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub pixel_size_nm: Option<f64>,
    pub dc_exclusion: Option<f64>,
    pub isotropy_threshold: Option<f64>,
    pub smooth_scree: Option<bool>,
    pub scree_tie_tol: Option<f64>,
    pub sweep: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($f:ident),*) => {
                $(if let Some(v) = &o.$f { self.$f = v.clone(); })*
            };
        }
        take!(elemsize, xstep, ystep, rescale_2048, n_scree, max_iter, tol, dc_exclusion, isotropy_threshold, smooth_scree, scree_tie_tol, out);
        if o.components.is_some() {
            self.components = o.components;
        }
        if o.pixel_size_nm.is_some() {
            self.pixel_size_nm = o.pixel_size_nm;
        }
        if o.sweep.is_some() {
            self.sweep = o.sweep.clone();
        }
        if o.threads.is_some() {
            self.threads = o.threads;
        }
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(file: Option<&Overrides>, flags: &Overrides) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(f) = file {
            cfg.apply(f);
        }
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Usage(what.to_string()));
        if self.xstep == 0 || self.ystep == 0 {
            return bad("steps must be >= 1");
        }
        if self.components == Some(0) {
            return bad("components must be >= 1");
        }
        if self.n_scree == 0 {
            return bad("n-scree must be >= 1");
        }
        if !(self.tol >= 0.0) {
            return bad("tol must be >= 0");
        }
        if let Some(p) = self.pixel_size_nm {
            if !(p > 0.0 && p.is_finite()) {
                return bad("pixel-size-nm must be positive");
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be >= 1");
        }
        if let Some(s) = &self.sweep {
            if s.is_empty() {
                return bad("sweep needs at least one size");
            }
        }
        Ok(())
    }

    pub fn analysis_params(&self) -> AnalysisParams {
        AnalysisParams {
            elemsize: self.elemsize,
            xstep: self.xstep,
            ystep: self.ystep,
            n_scree: self.n_scree,
            components: self.components,
            pca: PcaOptions {
                smooth: self.smooth_scree,
                tie_tol: self.scree_tie_tol,
                ..Default::default()
            },
            nmf: NmfOptions {
                max_iter: self.max_iter,
                tol: self.tol,
                ..Default::default()
            },
            peak: PeakOptions {
                dc_exclusion: self.dc_exclusion,
                isotropy_threshold: self.isotropy_threshold,
                pixel_size_nm: self.pixel_size_nm,
            },
        }
    }
}

pub fn parse_size_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad size {t:?}: {e}")))
        .collect()
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got {s:?}")),
    }
}

fn parse_num<T: FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| format!("{s:?}: {e}"))
}

/// Parses a config file body. Keys match the long flag names; `-` and `_`
/// are interchangeable. `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Overrides> {
    let mut o = Overrides::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| Error::Config { line: line_no, reason };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let r: std::result::Result<(), String> = (|| {
            match key.as_str() {
                "elemsize" => o.elemsize = Some(parse_num(value)?),
                "xstep" => o.xstep = Some(parse_num(value)?),
                "ystep" => o.ystep = Some(parse_num(value)?),
                "rescale-2048" => o.rescale_2048 = Some(parse_bool(value)?),
                "components" => o.components = Some(parse_num(value)?),
                "n-scree" => o.n_scree = Some(parse_num(value)?),
                "max-iter" => o.max_iter = Some(parse_num(value)?),
                "tol" => o.tol = Some(parse_num(value)?),
                "pixel-size-nm" => o.pixel_size_nm = Some(parse_num(value)?),
                "dc-exclusion" => o.dc_exclusion = Some(parse_num(value)?),
                "isotropy-threshold" => o.isotropy_threshold = Some(parse_num(value)?),
                "smooth-scree" => o.smooth_scree = Some(parse_bool(value)?),
                "scree-tie-tol" => o.scree_tie_tol = Some(parse_num(value)?),
                "sweep" => o.sweep = Some(parse_size_list(value)?),
                "out" => o.out = Some(PathBuf::from(value)),
                "threads" => o.threads = Some(parse_num(value)?),
                other => return Err(format!("unknown key {other:?}")),
            }
            Ok(())
        })();
        r.map_err(err)?;
    }
    Ok(o)
}

pub fn read_config(path: &Path) -> Result<Overrides> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
