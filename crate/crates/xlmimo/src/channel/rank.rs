use crate::linalg::singular_values;
use crate::{CMatrix, Error, Result};

/// Number of singular values at least `fraction` of their sum.
///
/// Wide spectra can leave every singular value below the threshold, in
/// which case the count is zero.
pub fn effective_rank(h: &CMatrix, fraction: f64) -> Result<usize> {
    crate::error::ensure_probability("fraction", fraction)?;
    let sv = singular_values(h);
    let total: f64 = sv.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroInput("channel matrix is zero"));
    }
    Ok(sv.iter().filter(|&&s| s >= fraction * total).count())
}
