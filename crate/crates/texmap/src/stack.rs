//! Multi-page float TIFF stacks for loadings and factors.
//!
//! Pages are 32-bit IEEE float, grayscale, uncompressed and little-endian,
//! one page per component in component order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Seek, Write};
use std::path::Path;

use tiff::decoder::{Decoder, DecodingResult, Limits};
use tiff::encoder::{colortype, TiffEncoder};
use tiff::ColorType;

use texmap_core::Matrix;

use crate::error::{Error, Result};

/// One decoded page.
#[derive(Debug, Clone, PartialEq)]
pub struct Page {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Page {
    pub fn from_matrix(m: &Matrix) -> Self {
        Page {
            width: m.cols(),
            height: m.rows(),
            data: m.as_slice().iter().map(|&v| v as f32).collect(),
        }
    }
}

pub fn write_tiff_stack(path: &Path, pages: &[Matrix]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    encode_stack(&mut out, pages).map_err(|e| match e {
        tiff::TiffError::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    })?;
    out.flush().map_err(|e| Error::io(path, e))
}

fn encode_stack<W: Write + Seek>(out: &mut W, pages: &[Matrix]) -> tiff::TiffResult<()> {
    let mut enc = TiffEncoder::new(out)?;
    for m in pages {
        let page = Page::from_matrix(m);
        enc.write_image::<colortype::Gray32Float>(page.width as u32, page.height as u32, &page.data)?;
    }
    Ok(())
}

pub fn read_tiff_stack(path: &Path) -> Result<Vec<Page>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let fmt = |e: tiff::TiffError| Error::format(path, e.to_string());
    let mut dec = Decoder::new(BufReader::new(file)).map_err(fmt)?.with_limits(Limits::unlimited());
    let mut pages = Vec::new();
    loop {
        let (w, h) = dec.dimensions().map_err(fmt)?;
        let color = dec.colortype().map_err(fmt)?;
        match (color, dec.read_image().map_err(fmt)?) {
            (ColorType::Gray(32), DecodingResult::F32(data)) => pages.push(Page {
                width: w as usize,
                height: h as usize,
                data,
            }),
            (c, _) => return Err(Error::format(path, format!("page {} is {c:?}, not 32-bit float", pages.len()))),
        }
        if !dec.more_images() {
            break;
        }
        dec.next_image().map_err(fmt)?;
    }
    Ok(pages)
}
