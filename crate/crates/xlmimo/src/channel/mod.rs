//! Channel synthesis: LoS, scattered, multipath, visibility-masked and
//! correlation-based channels.
//!
//! Matrices are `M_r × M_t`, so visibility masks act on rows. SIMO channels
//! are single-column matrices.

mod correlation;
mod los;
mod nlos;
mod rank;
mod visibility;

use std::io::Write;

pub use correlation::*;
pub use los::*;
pub use nlos::*;
pub use rank::*;
pub use visibility::*;

use crate::CMatrix;

/// Writes a complex matrix as CSV, one row per receive element with
/// `re, im` pairs interleaved across columns.
pub fn write_complex_csv<W: Write>(h: &CMatrix, mut out: W) -> std::io::Result<()> {
    let header: Vec<String> = (0..h.ncols()).flat_map(|j| [format!("re{j}"), format!("im{j}")]).collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..h.nrows() {
        let row: Vec<String> = h.row(i).iter().flat_map(|z| [z.re.to_string(), z.im.to_string()]).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
