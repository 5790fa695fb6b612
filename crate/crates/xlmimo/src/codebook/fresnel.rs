use std::f64::consts::FRAC_PI_2;

use crate::quad::{integrate_complex, Tolerance};
use crate::{Error, Result, C64};

const FRESNEL_TOLERANCE: Tolerance = Tolerance { abs: 1e-13, rel: 1e-12, max_intervals: 4000 };

/// Scan step used to bracket the first crossing before bisection.
const SCAN_STEP: f64 = 1e-2;
/// Upper end of the root search.
pub const LAMBDA_SEARCH_MAX: f64 = 100.0;
/// Absolute tolerance on the returned root.
pub const LAMBDA_TOLERANCE: f64 = 1e-6;

/// Fresnel integrals `C(x) + jS(x) = ∫₀ˣ e^{jπt²/2} dt`.
pub fn fresnel_cs(x: f64) -> C64 {
    if x == 0.0 {
        return C64::new(0.0, 0.0);
    }
    // Splitting at unit steps keeps each piece mildly oscillatory.
    let mut total = C64::new(0.0, 0.0);
    let pieces = x.abs().ceil().max(1.0) as usize;
    let h = x / pieces as f64;
    for i in 0..pieces {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        total += integrate_complex(|t| C64::from_polar(1.0, FRAC_PI_2 * t * t), a, b, FRESNEL_TOLERANCE)
            .expect("Fresnel integrand is smooth on a bounded interval");
    }
    total
}

/// `G(Λ) = (C(Λ) + jS(Λ)) / Λ`, with `G(0) = 1`.
pub fn fresnel_g(lambda: f64) -> C64 {
    if lambda == 0.0 {
        return C64::new(1.0, 0.0);
    }
    fresnel_cs(lambda) / lambda
}

/// Smallest `Λ ≥ 0` with `|G(Λ)| = Δ`.
pub fn solve_lambda(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("must lie in (0, 1), got {delta}")));
    }
    let f = |x: f64| fresnel_g(x).norm() - delta;
    let mut lo = 0.0;
    let mut hi = None;
    let mut x = SCAN_STEP;
    while x <= LAMBDA_SEARCH_MAX {
        if f(x) <= 0.0 {
            hi = Some(x);
            break;
        }
        lo = x;
        x += SCAN_STEP;
    }
    let mut hi = hi.ok_or(Error::NonBracketing { lo: 0.0, hi: LAMBDA_SEARCH_MAX })?;
    while hi - lo > LAMBDA_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
