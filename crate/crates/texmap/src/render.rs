//! PNG figures: scree plot, per-component panels and the sweep curve.

use std::path::Path;

use font8x8::{UnicodeFonts, BASIC_FONTS};
use image::{Rgb, RgbImage};

use texmap_core::Matrix;

use crate::error::{Error, Result};

const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
const BLACK: Rgb<u8> = Rgb([0, 0, 0]);
const GRID: Rgb<u8> = Rgb([225, 225, 225]);
const BLUE: Rgb<u8> = Rgb([31, 90, 180]);
const RED: Rgb<u8> = Rgb([200, 30, 30]);

/// A raster with a few drawing primitives.
pub struct Canvas {
    pub img: RgbImage,
}

impl Canvas {
    pub fn new(w: u32, h: u32) -> Self {
        Canvas {
            img: RgbImage::from_pixel(w, h, WHITE),
        }
    }

    pub fn put(&mut self, x: i64, y: i64, c: Rgb<u8>) {
        if x >= 0 && y >= 0 && (x as u32) < self.img.width() && (y as u32) < self.img.height() {
            self.img.put_pixel(x as u32, y as u32, c);
        }
    }

    pub fn fill_rect(&mut self, x: i64, y: i64, w: i64, h: i64, c: Rgb<u8>) {
        for yy in y..y + h {
            for xx in x..x + w {
                self.put(xx, yy, c);
            }
        }
    }

    pub fn line(&mut self, (mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64), c: Rgb<u8>) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let mut err = dx + dy;
        loop {
            self.put(x0, y0, c);
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }

    pub fn ring(&mut self, cx: i64, cy: i64, r: i64, c: Rgb<u8>) {
        for yy in -r..=r {
            for xx in -r..=r {
                let d = ((xx * xx + yy * yy) as f64).sqrt();
                if (d - r as f64).abs() < 0.75 {
                    self.put(cx + xx, cy + yy, c);
                }
            }
        }
    }

    /// 8x8 bitmap text; returns the drawn width.
    pub fn text(&mut self, x: i64, y: i64, s: &str, c: Rgb<u8>) -> i64 {
        for (i, ch) in s.chars().enumerate() {
            let glyph = BASIC_FONTS.get(ch).or_else(|| BASIC_FONTS.get('?')).unwrap_or([0; 8]);
            for (row, bits) in glyph.iter().enumerate() {
                for col in 0..8 {
                    if bits >> col & 1 == 1 {
                        self.put(x + 8 * i as i64 + col, y + row as i64, c);
                    }
                }
            }
        }
        8 * s.chars().count() as i64
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.img.save_with_format(path, image::ImageFormat::Png).map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::format(path, other.to_string()),
        })
    }
}

/// Where each scree point landed, for checking the rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreeLayout {
    pub points: Vec<(i64, i64)>,
    pub marked: Vec<usize>,
    pub warning: Option<String>,
}

const PLOT_W: i64 = 640;
const PLOT_H: i64 = 420;
const LEFT: i64 = 72;
const RIGHT: i64 = 20;
const TOP: i64 = 36;
const BOTTOM: i64 = 48;

/// Log-scale scatter of variance ratios; candidates are ringed, the chosen
/// count filled red.
pub fn draw_scree(ratios: &[f64], candidates: &[usize], chosen: usize) -> (Canvas, ScreeLayout) {
    let mut cv = Canvas::new(PLOT_W as u32, PLOT_H as u32);
    let (pw, ph) = (PLOT_W - LEFT - RIGHT, PLOT_H - TOP - BOTTOM);
    let logs: Vec<f64> = ratios.iter().map(|r| r.log10()).collect();
    let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil().min(0.0);
    let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min).floor();
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (-1.0, 0.0) };
    let n = ratios.len().max(1);
    let px = |i: usize| LEFT + ((i as f64 + 0.5) / n as f64 * pw as f64).round() as i64;
    let py = |l: f64| TOP + ((hi - l) / (hi - lo) * ph as f64).round() as i64;

    let step = ((hi - lo) / 8.0).ceil().max(1.0) as i64;
    let mut dec = lo as i64;
    while dec <= hi as i64 {
        let y = py(dec as f64);
        cv.line((LEFT, y), (LEFT + pw, y), GRID);
        cv.text(4, y - 4, &format!("1e{dec}"), BLACK);
        dec += step;
    }
    cv.line((LEFT, TOP), (LEFT, TOP + ph), BLACK);
    cv.line((LEFT, TOP + ph), (LEFT + pw, TOP + ph), BLACK);
    let tick = ((n as f64 / 10.0).ceil() as usize).max(1);
    for i in (0..n).filter(|i| (i + 1) % tick == 0 || *i == 0) {
        let x = px(i);
        cv.line((x, TOP + ph), (x, TOP + ph + 4), BLACK);
        let label = (i + 1).to_string();
        cv.text(x - 4 * label.len() as i64, TOP + ph + 8, &label, BLACK);
    }
    cv.text(LEFT + pw / 2 - 64, PLOT_H - 16, "component number", BLACK);
    cv.text(LEFT, 8, "explained variance ratio", BLACK);

    let points: Vec<(i64, i64)> = logs.iter().enumerate().map(|(i, &l)| (px(i), py(l))).collect();
    for &(x, y) in &points {
        cv.fill_rect(x - 2, y - 2, 5, 5, BLUE);
    }
    let mut marked = Vec::new();
    for &c in candidates {
        if let Some(&(x, y)) = points.get(c - 1) {
            cv.ring(x, y, 7, RED);
            if c == chosen {
                cv.fill_rect(x - 2, y - 2, 5, 5, RED);
            }
            marked.push(c);
        }
    }
    let warning = candidates
        .is_empty()
        .then(|| format!("no elbow candidate found, using k = {chosen}"));
    if let Some(w) = &warning {
        cv.text(LEFT + 8, TOP + 8, w, RED);
    }
    (cv, ScreeLayout { points, marked, warning })
}

pub fn render_scree_plot(path: &Path, ratios: &[f64], candidates: &[usize], chosen: usize) -> Result<ScreeLayout> {
    let (cv, layout) = draw_scree(ratios, candidates, chosen);
    cv.save(path)?;
    Ok(layout)
}

/// Linear gray levels over the value range; a constant input maps to mid-gray.
pub fn gray_levels(values: &[f64]) -> Vec<u8> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|&v| {
            if span > 0.0 && span.is_finite() {
                (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8
            } else {
                128
            }
        })
        .collect()
}

const PANEL: i64 = 256;

fn blit_scaled(cv: &mut Canvas, m: &Matrix, levels: &[u8], x0: i64, y0: i64) {
    let (rows, cols) = (m.rows() as i64, m.cols() as i64);
    let scale = (PANEL as f64 / rows.max(cols) as f64).max(f64::MIN_POSITIVE);
    let (w, h) = ((cols as f64 * scale).round() as i64, (rows as f64 * scale).round() as i64);
    let (ox, oy) = (x0 + (PANEL - w) / 2, y0 + (PANEL - h) / 2);
    for y in 0..h {
        let r = ((y as f64 / scale) as i64).min(rows - 1);
        for x in 0..w {
            let c = ((x as f64 / scale) as i64).min(cols - 1);
            let g = levels[(r * cols + c) as usize];
            cv.put(ox + x, oy + y, Rgb([g, g, g]));
        }
    }
}

/// Loading map (linear gray) beside its factor spectrum (`log1p` gray),
/// with annotation lines underneath.
pub fn draw_component_panel(title: &str, map: &Matrix, factor: &Matrix, lines: &[String]) -> Canvas {
    let pad = 16;
    let w = 3 * pad + 2 * PANEL;
    let h = pad + 16 + PANEL + pad + 12 * lines.len() as i64 + pad;
    let mut cv = Canvas::new(w as u32, h as u32);
    cv.text(pad, 8, title, BLACK);
    let top = pad + 16;
    blit_scaled(&mut cv, map, &gray_levels(map.as_slice()), pad, top);
    let logged: Vec<f64> = factor.as_slice().iter().map(|v| v.max(0.0).ln_1p()).collect();
    blit_scaled(&mut cv, factor, &gray_levels(&logged), 2 * pad + PANEL, top);
    for (i, l) in lines.iter().enumerate() {
        cv.text(pad, top + PANEL + pad + 12 * i as i64, l, BLACK);
    }
    cv
}

/// `auto_k` against window size on a log2 axis; failed sizes are skipped.
pub fn draw_sweep(rows: &[(usize, Option<usize>)]) -> Canvas {
    let mut cv = Canvas::new(PLOT_W as u32, PLOT_H as u32);
    let (pw, ph) = (PLOT_W - LEFT - RIGHT, PLOT_H - TOP - BOTTOM);
    let sizes: Vec<f64> = rows.iter().map(|r| (r.0 as f64).log2()).collect();
    let (xlo, xhi) = sizes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    let (xlo, xhi) = if xhi > xlo { (xlo - 0.5, xhi + 0.5) } else { (xlo - 1.0, xlo + 1.0) };
    let kmax = rows.iter().filter_map(|r| r.1).max().unwrap_or(1).max(1) + 1;
    let px = |s: f64| LEFT + ((s - xlo) / (xhi - xlo) * pw as f64).round() as i64;
    let py = |k: usize| TOP + ph - (k as f64 / kmax as f64 * ph as f64).round() as i64;

    for k in 0..=kmax {
        let y = py(k);
        cv.line((LEFT, y), (LEFT + pw, y), GRID);
        cv.text(LEFT - 12 - 8 * k.to_string().len() as i64, y - 4, &k.to_string(), BLACK);
    }
    cv.line((LEFT, TOP), (LEFT, TOP + ph), BLACK);
    cv.line((LEFT, TOP + ph), (LEFT + pw, TOP + ph), BLACK);
    for (r, &s) in rows.iter().zip(&sizes) {
        let x = px(s);
        let label = r.0.to_string();
        cv.text(x - 4 * label.len() as i64, TOP + ph + 8, &label, BLACK);
    }
    cv.text(LEFT + pw / 2 - 80, PLOT_H - 16, "window size (pixels)", BLACK);
    cv.text(LEFT, 8, "estimated number of components", BLACK);

    let pts: Vec<(i64, i64)> = rows
        .iter()
        .zip(&sizes)
        .filter_map(|(r, &s)| r.1.map(|k| (px(s), py(k))))
        .collect();
    for w in pts.windows(2) {
        cv.line(w[0], w[1], BLUE);
    }
    for &(x, y) in &pts {
        cv.fill_rect(x - 3, y - 3, 7, 7, BLUE);
    }
    cv
}
