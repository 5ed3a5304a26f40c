//! Image IO, float TIFF stacks, PNG/HTML/JSON reports and batch runs on top
//! of [`texmap_core`].

pub mod config;
pub mod error;
pub mod io;
pub mod render;
pub mod report;
pub mod run;
pub mod stack;

pub use config::{RunConfig, Overrides};
pub use error::{Error, Result};
pub use io::load_image;
pub use report::RunReport;
pub use run::{run_batch, run_single, BatchSummary};
pub use stack::{read_tiff_stack, write_tiff_stack, Page};
