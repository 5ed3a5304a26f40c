//! Loading images from disk as [`GrayImage`].
//!
//! TIFF goes through the `tiff` crate so that 16-bit and float samples keep
//! their raw values; PNG, JPEG and BMP go through `image`. Integer samples
//! are promoted to `f64` without rescaling and color is reduced to luma.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use image::{DynamicImage, ImageReader};
use tiff::decoder::{Decoder, DecodingResult, Limits};
use tiff::ColorType;

use texmap_core::{to_grayscale, GrayImage};

use crate::error::{Error, Result};

/// Reads a grayscale or color image, picking the decoder from the file
/// signature rather than the extension.
pub fn load_image(path: &Path) -> Result<GrayImage> {
    let mut magic = [0u8; 4];
    let n = File::open(path)
        .and_then(|mut f| read_prefix(&mut f, &mut magic))
        .map_err(|e| Error::io(path, e))?;
    if is_tiff(&magic[..n]) {
        load_tiff(path)
    } else {
        load_raster(path)
    }
}

fn read_prefix(f: &mut File, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match f.read(&mut buf[filled..])? {
            0 => break,
            k => filled += k,
        }
    }
    Ok(filled)
}

fn is_tiff(magic: &[u8]) -> bool {
    matches!(magic, [b'I', b'I', 42 | 43, 0] | [b'M', b'M', 0, 42 | 43])
}

fn tiff_error(path: &Path, e: tiff::TiffError) -> Error {
    match e {
        tiff::TiffError::IoError(io) => match io.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::format(path, format!("truncated TIFF: {io}")),
            _ => Error::io(path, io),
        },
        other => Error::format(path, format!("TIFF: {other}")),
    }
}

fn load_tiff(path: &Path) -> Result<GrayImage> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut dec = Decoder::new(BufReader::new(file))
        .map_err(|e| tiff_error(path, e))?
        .with_limits(Limits::unlimited());
    let (w, h) = dec.dimensions().map_err(|e| tiff_error(path, e))?;
    let color = dec.colortype().map_err(|e| tiff_error(path, e))?;
    let (w, h) = (w as usize, h as usize);
    let pixels = dec.read_image().map_err(|e| tiff_error(path, e))?;

    let channels = match color {
        ColorType::Gray(_) => 1,
        ColorType::RGB(_) => 3,
        ColorType::RGBA(_) => 4,
        other => {
            return Err(Error::format(path, format!("unsupported TIFF color type {other:?}")));
        }
    };
    let samples: Vec<f64> = match (&pixels, color) {
        (DecodingResult::U8(v), ColorType::Gray(8) | ColorType::RGB(8) | ColorType::RGBA(8)) => {
            v.iter().map(|&s| s as f64).collect()
        }
        (DecodingResult::U16(v), ColorType::Gray(16) | ColorType::RGB(16) | ColorType::RGBA(16)) => {
            v.iter().map(|&s| s as f64).collect()
        }
        (DecodingResult::F32(v), ColorType::Gray(32)) => v.iter().map(|&s| s as f64).collect(),
        (DecodingResult::F64(v), ColorType::Gray(64)) => v.clone(),
        _ => {
            return Err(Error::format(
                path,
                format!("unsupported TIFF sample layout {color:?} ({})", sample_kind(&pixels)),
            ));
        }
    };
    if samples.len() < w * h * channels {
        return Err(Error::format(path, "TIFF holds fewer samples than its dimensions"));
    }
    let data = collapse_channels(&samples[..w * h * channels], channels);
    finish(path, w, h, data)
}

fn sample_kind(r: &DecodingResult) -> &'static str {
    match r {
        DecodingResult::U8(_) => "8-bit unsigned samples",
        DecodingResult::U16(_) => "16-bit unsigned samples",
        DecodingResult::U32(_) => "32-bit unsigned samples",
        DecodingResult::U64(_) => "64-bit unsigned samples",
        DecodingResult::I8(_) => "8-bit signed samples",
        DecodingResult::I16(_) => "16-bit signed samples",
        DecodingResult::I32(_) => "32-bit signed samples",
        DecodingResult::I64(_) => "64-bit signed samples",
        DecodingResult::F32(_) => "32-bit float samples",
        DecodingResult::F64(_) => "64-bit float samples",
    }
}

/// Gray passes through, RGB(A) becomes luma; alpha is dropped.
fn collapse_channels(samples: &[f64], channels: usize) -> Vec<f64> {
    match channels {
        1 => samples.to_vec(),
        2 => samples.chunks_exact(2).map(|p| p[0]).collect(),
        _ => samples
            .chunks_exact(channels)
            .map(|p| to_grayscale(p[0], p[1], p[2]))
            .collect(),
    }
}

fn load_raster(path: &Path) -> Result<GrayImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    if reader.format().is_none() {
        return Err(Error::format(path, "unrecognized file signature"));
    }
    let img = reader.decode().map_err(|e| match e {
        image::ImageError::IoError(io) if io.kind() != std::io::ErrorKind::UnexpectedEof => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img {
        DynamicImage::ImageLuma8(b) => collapse_channels(&widen(b.as_raw()), 1),
        DynamicImage::ImageLumaA8(b) => collapse_channels(&widen(b.as_raw()), 2),
        DynamicImage::ImageRgb8(b) => collapse_channels(&widen(b.as_raw()), 3),
        DynamicImage::ImageRgba8(b) => collapse_channels(&widen(b.as_raw()), 4),
        DynamicImage::ImageLuma16(b) => collapse_channels(&widen(b.as_raw()), 1),
        DynamicImage::ImageLumaA16(b) => collapse_channels(&widen(b.as_raw()), 2),
        DynamicImage::ImageRgb16(b) => collapse_channels(&widen(b.as_raw()), 3),
        DynamicImage::ImageRgba16(b) => collapse_channels(&widen(b.as_raw()), 4),
        DynamicImage::ImageRgb32F(b) => collapse_channels(&widen(b.as_raw()), 3),
        DynamicImage::ImageRgba32F(b) => collapse_channels(&widen(b.as_raw()), 4),
        other => {
            return Err(Error::format(path, format!("unsupported pixel layout {:?}", other.color())));
        }
    };
    finish(path, w, h, data)
}

fn widen<T: Copy + Into<f64>>(v: &[T]) -> Vec<f64> {
    v.iter().map(|&s| s.into()).collect()
}

fn finish(path: &Path, w: usize, h: usize, data: Vec<f64>) -> Result<GrayImage> {
    GrayImage::new(w, h, data).map_err(|e| Error::format(path, e.to_string()))
}
