use std::f64::consts::PI;

use crate::geometry::{ArrayGeometry, ArrayLayout};
use crate::nearfield::{free_space_channel, GainPattern, ResponseModel, SourcePoint};
use crate::{CVector, Error, Result};

/// Receive SNR `P̄ ‖h‖²` of maximal-ratio combining.
pub fn mrc_snr(h: &CVector, transmit_snr: f64) -> Result<f64> {
    crate::error::ensure_positive("transmit_snr", transmit_snr)?;
    let energy = h.norm_squared();
    if energy == 0.0 {
        return Err(Error::ZeroInput("channel vector is zero"));
    }
    Ok(transmit_snr * energy)
}

/// Angle subtended at the source by the two ends of an `M`-element line of
/// spacing `d`: `atan(Md/(2r sinθ) + cot θ) + atan(Md/(2r sinθ) − cot θ)`.
pub fn angular_span(elements: usize, spacing: f64, range: f64, theta: f64) -> f64 {
    let half = elements as f64 * spacing / (2.0 * range * theta.sin());
    let cot = theta.cos() / theta.sin();
    (half + cot).atan() + (half - cot).atan()
}

/// Closed-form spherical-wave MRC SNR of a collocated isotropic line,
/// `P̄ λ² / ((4π)² d r sinθ) · span`, from the continuous approximation of
/// the per-element sum.
pub fn nusw_snr_closed_form(
    transmit_snr: f64,
    wavelength: f64,
    spacing: f64,
    elements: usize,
    range: f64,
    theta: f64,
) -> f64 {
    transmit_snr * wavelength * wavelength / ((4.0 * PI).powi(2) * spacing * range * theta.sin())
        * angular_span(elements, spacing, range, theta)
}

/// Plane-wave MRC SNR `P̄ M λ² / (4π r)²`, linear in `M`.
pub fn upw_snr(transmit_snr: f64, wavelength: f64, elements: usize, range: f64) -> f64 {
    transmit_snr * elements as f64 * (wavelength / (4.0 * PI * range)).powi(2)
}

/// Limit of [`nusw_snr_closed_form`] as the array grows without bound,
/// `P̄ λ² π / ((4π)² d r sinθ)`.
pub fn asymptotic_snr_limit(transmit_snr: f64, wavelength: f64, spacing: f64, range: f64, theta: f64) -> Result<f64> {
    let s = theta.sin();
    if !(s.abs() > 1e-12) {
        return Err(Error::param("theta", "the limit diverges for a source on the array axis"));
    }
    Ok(transmit_snr * wavelength * wavelength * PI / ((4.0 * PI).powi(2) * spacing * range * s))
}

/// Numeric MRC SNR alongside the closed form when one applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrReport {
    pub numeric: f64,
    /// Present for collocated lines with isotropic elements.
    pub closed_form: Option<f64>,
}

/// MRC SNR of the free-space channel from `s` to `layout` under `model`.
pub fn free_space_mrc_snr(
    model: ResponseModel,
    layout: &ArrayLayout,
    s: &SourcePoint,
    pattern: &GainPattern,
    transmit_snr: f64,
) -> Result<SnrReport> {
    let h = free_space_channel(model, layout, s, pattern)?;
    let numeric = mrc_snr(&h, transmit_snr)?;
    let closed_form = match layout.geometry() {
        ArrayGeometry::CollocatedUla { elements } if pattern.is_isotropic() && model == ResponseModel::Nusw => {
            Some(nusw_snr_closed_form(
                transmit_snr,
                layout.wavelength(),
                layout.spacing(),
                *elements,
                s.range(layout),
                s.angle(layout),
            ))
        }
        _ => None,
    };
    Ok(SnrReport { numeric, closed_form })
}
