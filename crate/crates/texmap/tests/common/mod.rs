#![allow(dead_code)]

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use tiff::encoder::{colortype, TiffEncoder};

use texmap::RunConfig;
use texmap_core::synthetic::two_texture;
use texmap_core::{GrayImage, Matrix};

pub fn image_matrix(img: &GrayImage) -> Matrix {
    Matrix::from_vec(img.height(), img.width(), img.data().to_vec())
}

pub fn write_f32_tiff(path: &Path, img: &GrayImage) {
    let data: Vec<f32> = img.data().iter().map(|&v| v as f32).collect();
    let mut enc = TiffEncoder::new(BufWriter::new(File::create(path).unwrap())).unwrap();
    enc.write_image::<colortype::Gray32Float>(img.width() as u32, img.height() as u32, &data)
        .unwrap();
}

pub fn write_f64_tiff(path: &Path, w: u32, h: u32, data: &[f64]) {
    let mut enc = TiffEncoder::new(BufWriter::new(File::create(path).unwrap())).unwrap();
    enc.write_image::<colortype::Gray64Float>(w, h, data).unwrap();
}

pub fn write_u8_tiff(path: &Path, w: u32, h: u32, data: &[u8]) {
    let mut enc = TiffEncoder::new(BufWriter::new(File::create(path).unwrap())).unwrap();
    enc.write_image::<colortype::Gray8>(w, h, data).unwrap();
}

pub fn write_u16_tiff(path: &Path, w: u32, h: u32, data: &[u16]) {
    let mut enc = TiffEncoder::new(BufWriter::new(File::create(path).unwrap())).unwrap();
    enc.write_image::<colortype::Gray16>(w, h, data).unwrap();
}

pub fn write_rgb8_tiff(path: &Path, w: u32, h: u32, data: &[u8]) {
    let mut enc = TiffEncoder::new(BufWriter::new(File::create(path).unwrap())).unwrap();
    enc.write_image::<colortype::RGB8>(w, h, data).unwrap();
}

/// Small two-texture scene written as a float TIFF.
pub fn small_scene(dir: &Path, name: &str, seed: u64) -> PathBuf {
    let path = dir.join(name);
    write_f32_tiff(&path, &two_texture(256, seed).unwrap());
    path
}

/// Settings sized for the 256 px scenes above.
pub fn small_config(out: &Path) -> RunConfig {
    RunConfig {
        elemsize: 64,
        xstep: 32,
        ystep: 32,
        n_scree: 20,
        max_iter: 60,
        out: out.to_path_buf(),
        ..RunConfig::default()
    }
}
