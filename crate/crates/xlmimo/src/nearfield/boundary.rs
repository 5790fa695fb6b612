//! Field-boundary distances and the near/far region classification.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::pattern::{gain_towards, GainPattern};
use super::response::{exact_distances, taylor_distances, ResponseModel, SourcePoint, TaylorOrder};
use crate::error::ensure_positive;
use crate::geometry::ArrayLayout;
use crate::{Error, Result, Vec3};

/// Relative width at which the bisections stop.
pub const BISECTION_TOLERANCE: f64 = 1e-6;

/// Lower end of the search bracket as a fraction of the aperture.
pub const BRACKET_LOW: f64 = 1e-3;
/// Upper end of the search bracket as a multiple of the aperture.
pub const BRACKET_HIGH: f64 = 1e4;

/// Boundary between the reactive and radiative near field, `0.62 √(D³/λ)`.
pub fn reactive_boundary(aperture: f64, wavelength: f64) -> f64 {
    0.62 * (aperture.powi(3) / wavelength).sqrt()
}

/// Classic Rayleigh distance `2D²/λ`.
pub fn rayleigh_distance(aperture: f64, wavelength: f64) -> f64 {
    2.0 * aperture * aperture / wavelength
}

/// Direction-dependent Rayleigh distance `2D² sin²θ / λ`.
pub fn dd_rayleigh_distance(aperture: f64, wavelength: f64, theta: f64) -> f64 {
    rayleigh_distance(aperture, wavelength) * theta.sin().powi(2)
}

/// Distance beyond which far-field beamforming keeps 95% of the gain,
/// `0.367 sin²θ · 2D²/λ`.
pub fn effective_rayleigh_distance(aperture: f64, wavelength: f64, theta: f64) -> f64 {
    0.367 * theta.sin().powi(2) * rayleigh_distance(aperture, wavelength)
}

/// `2 A_d √M`, with `A_d` the diagonal of a single antenna.
pub fn bjornson_distance(element_diagonal: f64, elements: usize) -> f64 {
    2.0 * element_diagonal * (elements as f64).sqrt()
}

/// MIMO Rayleigh distance `2 (D_T + D_R)² / λ`.
pub fn mimo_rayleigh_distance(tx_aperture: f64, rx_aperture: f64, wavelength: f64) -> f64 {
    rayleigh_distance(tx_aperture + rx_aperture, wavelength)
}

/// Closed-form boundaries that only need the aperture and wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    Reactive,
    Rayleigh,
    DirectionalRayleigh {
        theta: f64,
    },
    EffectiveRayleigh {
        theta: f64,
    },
    Bjornson {
        element_diagonal: f64,
        elements: usize,
    },
    /// `aperture` in [`Boundary::distance`] is taken as the transmit aperture.
    MimoRayleigh {
        rx_aperture: f64,
    },
}

impl Boundary {
    pub fn distance(&self, aperture: f64, wavelength: f64) -> f64 {
        match *self {
            Boundary::Reactive => reactive_boundary(aperture, wavelength),
            Boundary::Rayleigh => rayleigh_distance(aperture, wavelength),
            Boundary::DirectionalRayleigh { theta } => dd_rayleigh_distance(aperture, wavelength, theta),
            Boundary::EffectiveRayleigh { theta } => effective_rayleigh_distance(aperture, wavelength, theta),
            Boundary::Bjornson { element_diagonal, elements } => bjornson_distance(element_diagonal, elements),
            Boundary::MimoRayleigh { rx_aperture } => mimo_rayleigh_distance(aperture, rx_aperture, wavelength),
        }
    }
}

/// Ratio of the weakest to the strongest per-element received power,
/// `min_m (G_m / r_m²) / max_m (G_m / r_m²)`.
pub fn power_ratio(layout: &ArrayLayout, s: &SourcePoint, pattern: &GainPattern) -> f64 {
    let positions = layout.positions();
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for p in &positions {
        let r2 = (p - s.position).norm_squared();
        let g = gain_towards(pattern, layout, p, &s.position);
        let w = if r2 == 0.0 { f64::INFINITY } else { g / r2 };
        lo = lo.min(w);
        hi = hi.max(w);
    }
    if hi == 0.0 || !hi.is_finite() {
        0.0
    } else {
        lo / hi
    }
}

/// Largest phase error of the first-order distance, `max_m 2π/λ (r_m − r_m^{(1)})`.
pub fn phase_error(layout: &ArrayLayout, s: &SourcePoint) -> Result<f64> {
    let k = 2.0 * PI / layout.wavelength();
    let exact = exact_distances(layout, s);
    let first = taylor_distances(layout, s, TaylorOrder::First)?;
    Ok(exact.iter().zip(&first).map(|(e, f)| k * (e - f)).fold(f64::NEG_INFINITY, f64::max))
}

fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::param("threshold", format!("must lie in (0, 1), got {threshold}")))
    }
}

/// Smallest `r` in `[lo, hi]` with `pred(r)`, assuming `pred` switches once
/// from false to true.
fn bisect<F: Fn(f64) -> bool>(pred: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    if pred(lo) || !pred(hi) {
        return Err(Error::NonBracketing { lo, hi });
    }
    while hi - lo > BISECTION_TOLERANCE * hi {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn search_bracket(layout: &ArrayLayout) -> Result<(f64, f64)> {
    let d = layout.physical_dimension();
    if d == 0.0 {
        return Err(Error::DegenerateGeometry("single-element array has no aperture".into()));
    }
    Ok((BRACKET_LOW * d, BRACKET_HIGH * d))
}

/// Uniform-power distance: the smallest range at angle `θ` for which
/// [`power_ratio`] reaches `threshold`, found by bisection.
pub fn uniform_power_distance(layout: &ArrayLayout, theta: f64, threshold: f64, pattern: &GainPattern) -> Result<f64> {
    check_threshold(threshold)?;
    let (lo, hi) = search_bracket(layout)?;
    bisect(|r| power_ratio(layout, &SourcePoint::polar(layout, r, theta), pattern) >= threshold, lo, hi)
}

/// Uniform-power distance found by scanning a log-spaced grid for the first
/// crossing and refining it by bisection. Use when the power ratio may not be
/// monotone in range.
pub fn uniform_power_distance_scan(
    layout: &ArrayLayout,
    theta: f64,
    threshold: f64,
    pattern: &GainPattern,
    points: usize,
) -> Result<f64> {
    check_threshold(threshold)?;
    let (lo, hi) = search_bracket(layout)?;
    let ok = |r: f64| power_ratio(layout, &SourcePoint::polar(layout, r, theta), pattern) >= threshold;
    let n = points.max(2);
    let step = (hi / lo).ln() / (n - 1) as f64;
    let mut prev = lo;
    if ok(lo) {
        return Err(Error::NonBracketing { lo, hi });
    }
    for i in 1..n {
        let r = lo * (step * i as f64).exp();
        if ok(r) {
            return bisect(ok, prev, r);
        }
        prev = r;
    }
    Err(Error::NonBracketing { lo, hi })
}

/// MIMO uniform-power distance: the largest per-transmit-antenna UPD over
/// the given angles `θ_{m_t}` seen by the receive array.
pub fn mimo_uniform_power_distance(
    rx: &ArrayLayout,
    angles: &[f64],
    threshold: f64,
    pattern: &GainPattern,
) -> Result<f64> {
    if angles.is_empty() {
        return Err(Error::param("angles", "need at least one transmit antenna"));
    }
    let mut worst: f64 = 0.0;
    for &theta in angles {
        worst = worst.max(uniform_power_distance(rx, theta, threshold, pattern)?);
    }
    Ok(worst)
}

/// Angles `θ_{m_t}` between `p_R − s_{m_t}` and the receive axis.
pub fn transmit_angles(rx: &ArrayLayout, tx_positions: &[Vec3]) -> Vec<f64> {
    tx_positions.iter().map(|s| SourcePoint::new(*s).angle(rx)).collect()
}

/// Smallest range at angle `θ` where [`phase_error`] drops to `π/8`.
pub fn dd_rayleigh_distance_numeric(layout: &ArrayLayout, theta: f64) -> Result<f64> {
    ensure_positive("aperture", layout.physical_dimension())?;
    let d = layout.physical_dimension();
    let hi = BRACKET_HIGH * rayleigh_distance(d, layout.wavelength()).max(d);
    bisect(
        |r| phase_error(layout, &SourcePoint::polar(layout, r, theta)).map(|e| e <= PI / 8.0).unwrap_or(false),
        BRACKET_LOW * d,
        hi,
    )
}

/// Picks the cheapest adequate response model for a source.
///
/// Beyond both the uniform-power distance and the direction-dependent
/// Rayleigh distance the plane-wave model holds; between them only one of
/// amplitude or phase needs the spherical treatment.
pub fn classify_region(
    layout: &ArrayLayout,
    s: &SourcePoint,
    threshold: f64,
    pattern: &GainPattern,
) -> Result<ResponseModel> {
    let theta = s.incidence_angle(layout);
    let r = s.range(layout);
    let upd = uniform_power_distance(layout, theta, threshold, pattern)?;
    let ddr = dd_rayleigh_distance(layout.physical_dimension(), layout.wavelength(), theta);
    Ok(match (r >= upd, r >= ddr) {
        (true, true) => ResponseModel::Upw,
        (false, true) => ResponseModel::Nupw,
        (true, false) => ResponseModel::Usw,
        (false, false) => ResponseModel::Nusw,
    })
}
