//! Beam focusing patterns, their closed forms and resolution measures.

use serde::{Deserialize, Serialize};

use crate::geometry::{ArrayGeometry, ArrayLayout};
use crate::nearfield::{array_response, GainPattern, ResponseModel, SourcePoint};
use crate::{CVector, Error, Result};

/// Normalised gain `|vᴴa| / (‖v‖ ‖a‖)`; zero if either vector vanishes.
pub fn beam_focusing_gain(v: &CVector, a: &CVector) -> f64 {
    let denom = v.norm() * a.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (v.dotc(a).norm() / denom).min(1.0)
}

/// Dirichlet kernel `sin(π M̃ d̃ Δ) / (M̃ sin(π d̃ Δ))`, continued through
/// the zeros of the denominator.
pub fn dirichlet(count: usize, spacing: f64, delta: f64) -> f64 {
    // Reduce to the nearest period so the ratio keeps full precision near
    // the removable singularities.
    let t = spacing * delta;
    let k = t.round();
    let f = t - k;
    let sign = if (k as i64 * (count as i64 - 1)).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let x = std::f64::consts::PI * f;
    let m = count as f64;
    if x.abs() < 1e-9 {
        return sign * (m * x).cos() / x.cos();
    }
    sign * (m * x).sin() / (m * x.sin())
}

/// Closed-form far-field beam pattern of a linear array against the
/// spatial-frequency difference `Δ = cos θ′ − cos θ`.
pub fn far_field_pattern(geometry: &ArrayGeometry, delta: f64) -> Result<f64> {
    match *geometry {
        ArrayGeometry::CollocatedUla { elements } => Ok(dirichlet(elements, 0.5, delta).abs()),
        ArrayGeometry::ModularUla { modules, per_module, module_separation } => {
            Ok((dirichlet(modules, module_separation / 2.0, delta) * dirichlet(per_module, 0.5, delta)).abs())
        }
        ArrayGeometry::SparseUla { elements, separation } => Ok(dirichlet(elements, separation / 2.0, delta).abs()),
        _ => Err(Error::param("geometry", "closed-form patterns cover linear arrays only")),
    }
}

/// Spacing in half-wavelengths between the lobes of the architecture's
/// periodic factor: `Γ` for modular lines, `I` for sparse ones.
pub fn grating_lobe_separation(geometry: &ArrayGeometry) -> Option<f64> {
    match *geometry {
        ArrayGeometry::ModularUla { module_separation, .. } => Some(2.0 / module_separation),
        ArrayGeometry::SparseUla { separation, .. } => Some(2.0 / separation),
        _ => None,
    }
}

/// Angular and inverse-distance resolutions of a linear array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// Half the null-to-null width in spatial frequency.
    pub angular: f64,
    /// `1 / r_hp` in 1/m.
    pub distance: f64,
}

/// Physical length of a linear array as a multiple of `λ/2`, per architecture.
pub fn architecture_aperture(geometry: &ArrayGeometry, wavelength: f64) -> Result<f64> {
    let half = wavelength / 2.0;
    match *geometry {
        ArrayGeometry::CollocatedUla { elements } => Ok((elements as f64 - 1.0) * half),
        ArrayGeometry::ModularUla { modules, per_module, module_separation } => {
            Ok(((modules as f64 - 1.0) * module_separation + per_module as f64 - 1.0) * half)
        }
        ArrayGeometry::SparseUla { elements, separation } => Ok((elements as f64 - 1.0) * separation * half),
        _ => Err(Error::param("geometry", "resolutions are defined for linear arrays")),
    }
}

/// Half-power effective distance `0.1 sin²θ′ · 2D²/λ`.
pub fn half_power_distance(aperture: f64, wavelength: f64, theta: f64) -> f64 {
    0.1 * theta.sin().powi(2) * 2.0 * aperture * aperture / wavelength
}

/// Resolutions from the architecture formulas.
pub fn resolution(geometry: &ArrayGeometry, wavelength: f64, theta: f64) -> Result<Resolution> {
    geometry.validate()?;
    let angular = match *geometry {
        ArrayGeometry::CollocatedUla { elements } => 2.0 / elements as f64,
        ArrayGeometry::ModularUla { modules, module_separation, .. } => 2.0 / (modules as f64 * module_separation),
        ArrayGeometry::SparseUla { elements, separation } => 2.0 / (elements as f64 * separation),
        _ => return Err(Error::param("geometry", "resolutions are defined for linear arrays")),
    };
    let d = architecture_aperture(geometry, wavelength)?;
    let r_hp = half_power_distance(d, wavelength, theta);
    if !(r_hp > 0.0) {
        return Err(Error::param("theta", "the half-power distance vanishes on the array axis"));
    }
    Ok(Resolution { angular, distance: 1.0 / r_hp })
}

/// Far-field pattern of `layout` towards spatial direction `target` seen at
/// `observed` (both as `cos θ` in [`SourcePoint::spatial`] form), computed
/// from plane-wave responses.
pub fn sampled_far_field_pattern(layout: &ArrayLayout, target: f64, observed: f64) -> Result<f64> {
    let iso = GainPattern::Isotropic;
    let v = array_response(ResponseModel::Upw, layout, &SourcePoint::spatial(layout, 1.0, target), &iso)?;
    let a = array_response(ResponseModel::Upw, layout, &SourcePoint::spatial(layout, 1.0, observed), &iso)?;
    Ok(beam_focusing_gain(&v, &a))
}

/// Near-field focusing pattern: beam focused at `target`, observed at `observed`.
pub fn focusing_pattern(
    model: ResponseModel,
    layout: &ArrayLayout,
    target: &SourcePoint,
    observed: &SourcePoint,
) -> Result<f64> {
    let iso = GainPattern::Isotropic;
    let v = array_response(model, layout, target, &iso)?;
    let a = array_response(model, layout, observed, &iso)?;
    Ok(beam_focusing_gain(&v, &a))
}

/// Distance from the main-lobe centre to the first sampled local minimum of
/// the far-field pattern, scanning `Δ ∈ [0, 2]` with `points` samples.
pub fn measured_angular_resolution(layout: &ArrayLayout, points: usize) -> Result<f64> {
    if points < 3 {
        return Err(Error::param("points", "need at least three samples"));
    }
    let step = 2.0 / (points - 1) as f64;
    let sample = |i: usize| -> Result<f64> {
        let delta = i as f64 * step;
        // Centre the pair on broadside so both spatial angles stay in [-1, 1].
        sampled_far_field_pattern(layout, delta / 2.0, -delta / 2.0)
    };
    let mut prev = sample(0)?;
    let mut cur = sample(1)?;
    for i in 2..points {
        let next = sample(i)?;
        if cur <= prev && cur <= next {
            return Ok((i - 1) as f64 * step);
        }
        prev = cur;
        cur = next;
    }
    Err(Error::DegenerateGeometry("no null found in the sampled far-field pattern".into()))
}

/// Measured inverse-distance resolution of a focused beam.
///
/// The pattern `G((r, θ′); (r′, θ′))` is sampled on `points` values of `1/r`
/// spanning `1/r′ ± span`, the contiguous region around `1/r′` where
/// `10 log10 G ≥ −3` is located with linear interpolation at the edges, and
/// half its width is returned.
pub fn measured_distance_resolution(
    model: ResponseModel,
    layout: &ArrayLayout,
    target_range: f64,
    theta: f64,
    span: f64,
    points: usize,
) -> Result<f64> {
    if points < 3 || !(span > 0.0) {
        return Err(Error::param("points", "need at least three samples and a positive span"));
    }
    let threshold = 10f64.powf(-0.3);
    let centre = 1.0 / target_range;
    let lo = (centre - span).max(centre * 1e-6);
    let hi = centre + span;
    let step = (hi - lo) / (points - 1) as f64;
    let target = SourcePoint::polar(layout, target_range, theta);
    let grid: Vec<f64> = (0..points).map(|i| lo + i as f64 * step).collect();
    let values: Vec<f64> = grid
        .iter()
        .map(|&u| focusing_pattern(model, layout, &target, &SourcePoint::polar(layout, 1.0 / u, theta)))
        .collect::<Result<_>>()?;
    let peak = grid.iter().enumerate().min_by(|a, b| (a.1 - centre).abs().total_cmp(&(b.1 - centre).abs())).unwrap().0;
    if values[peak] < threshold {
        return Err(Error::DegenerateGeometry("pattern at the focus is below the 3 dB level".into()));
    }
    let crossing = |i: usize, j: usize| {
        let t = (threshold - values[i]) / (values[j] - values[i]);
        grid[i] + t * (grid[j] - grid[i])
    };
    let left = (0..peak).rev().find(|&i| values[i] < threshold).map(|i| crossing(i, i + 1));
    let right = (peak + 1..points).find(|&i| values[i] < threshold).map(|i| crossing(i - 1, i));
    match (left, right) {
        (Some(l), Some(r)) => Ok(0.5 * (r - l)),
        _ => Err(Error::DegenerateGeometry("3 dB region extends past the sampled span".into())),
    }
}
