//! Writes a striped test image as a 32-bit float TIFF.
//!
//! ```text
//! cargo run --release -p texmap --example synth -- two 1024 1 two.tif
//! cargo run --release -p texmap --example synth -- three 1024 1 three.tif
//! ```

use std::path::Path;

use texmap::write_tiff_stack;
use texmap_core::synthetic::{three_texture, two_texture};
use texmap_core::Matrix;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() != 4 {
        eprintln!("usage: synth <two|three> <size> <seed> <out.tif>");
        std::process::exit(1);
    }
    let size: usize = args[1].parse().expect("size");
    let seed: u64 = args[2].parse().expect("seed");
    let img = match args[0].as_str() {
        "two" => two_texture(size, seed),
        "three" => three_texture(size, seed),
        other => {
            eprintln!("unknown scene {other}");
            std::process::exit(1);
        }
    }
    .expect("render");
    let m = Matrix::from_vec(img.height(), img.width(), img.into_data());
    write_tiff_stack(Path::new(&args[3]), &[m]).expect("write");
}
