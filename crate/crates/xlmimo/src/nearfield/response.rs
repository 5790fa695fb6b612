use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::pattern::{gain_towards, GainPattern};
use crate::geometry::ArrayLayout;
use crate::{CVector, Error, Result, Vec3, C64};

/// A point emitter or observation location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePoint {
    pub position: Vec3,
}

impl SourcePoint {
    pub fn new(position: Vec3) -> Self {
        SourcePoint { position }
    }

    /// Source at range `r` from the reference point, with `θ` the angle
    /// between `p − s` and the array axis.
    ///
    /// The source lies in the half-space the array faces, so `θ = π/2` is
    /// broadside and `θ = 0` puts the source on the negative axis side.
    pub fn polar(layout: &ArrayLayout, r: f64, theta: f64) -> Self {
        let dir = -layout.axis() * theta.cos() + layout.boresight() * theta.sin();
        SourcePoint { position: layout.reference() + dir * r }
    }

    /// Source at range `r` whose direction from the array has cosine `direction`
    /// with the array axis (the spatial angle used by codebooks).
    pub fn spatial(layout: &ArrayLayout, r: f64, direction: f64) -> Self {
        Self::polar(layout, r, (-direction).clamp(-1.0, 1.0).acos())
    }

    /// Distance from the layout's reference point.
    pub fn range(&self, layout: &ArrayLayout) -> f64 {
        (layout.reference() - self.position).norm()
    }

    /// Angle between `p − s` and the array axis.
    pub fn angle(&self, layout: &ArrayLayout) -> f64 {
        let v = layout.reference() - self.position;
        let r = v.norm();
        if r == 0.0 {
            return std::f64::consts::FRAC_PI_2;
        }
        (v.dot(&layout.axis()) / r).clamp(-1.0, 1.0).acos()
    }

    /// Spatial angle `−cos θ`, the cosine between the array axis and the
    /// direction from the array towards the source.
    pub fn spatial_angle(&self, layout: &ArrayLayout) -> f64 {
        -self.angle(layout).cos()
    }

    /// Angle used by the boundary criteria: [`SourcePoint::angle`] for linear
    /// arrays; for planar arrays, `π/2` minus the angle to the array normal,
    /// so normal incidence maps to `π/2` in both cases.
    pub fn incidence_angle(&self, layout: &ArrayLayout) -> f64 {
        if layout.geometry().is_linear() {
            return self.angle(layout);
        }
        let v = self.position - layout.reference();
        let r = v.norm();
        if r == 0.0 {
            return std::f64::consts::FRAC_PI_2;
        }
        std::f64::consts::FRAC_PI_2 - (v.dot(&layout.boresight()) / r).abs().clamp(0.0, 1.0).acos()
    }
}

/// Array response models, ordered roughly from most to least approximate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseModel {
    /// Uniform plane wave: unit amplitudes, linear phase.
    Upw,
    /// Non-uniform plane wave: per-element amplitudes, linear phase.
    Nupw,
    /// Uniform spherical wave: unit amplitudes, exact phase.
    Usw,
    /// Parabolic wave: unit amplitudes, second-order (Fresnel) phase.
    Pbw,
    /// Non-uniform spherical wave: exact amplitudes and phase.
    Nusw,
}

impl ResponseModel {
    pub const ALL: [ResponseModel; 5] =
        [ResponseModel::Upw, ResponseModel::Nupw, ResponseModel::Usw, ResponseModel::Pbw, ResponseModel::Nusw];

    pub fn name(self) -> &'static str {
        match self {
            ResponseModel::Upw => "UPW",
            ResponseModel::Nupw => "NUPW",
            ResponseModel::Usw => "USW",
            ResponseModel::Pbw => "PBW",
            ResponseModel::Nusw => "NUSW",
        }
    }
}

/// Complex response of every element to a source, tagged with its model.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub model: ResponseModel,
    pub entries: CVector,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_vector(self) -> CVector {
        self.entries
    }
}

impl std::ops::Deref for SteeringVector {
    type Target = CVector;
    fn deref(&self) -> &CVector {
        &self.entries
    }
}

/// Exact element distances `r_m = ‖p_m − s‖`.
pub fn exact_distances(layout: &ArrayLayout, s: &SourcePoint) -> Vec<f64> {
    layout.positions().iter().map(|p| (p - s.position).norm()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaylorOrder {
    First,
    Second,
}

/// Taylor approximations of the element distances around the reference point.
///
/// First order is `r + (p − s)ᵀδ_m / r`, which for a linear array reads
/// `r + δ_m d cos θ`; second order adds `(‖δ_m‖² − ((p − s)ᵀδ_m / r)²) / 2r`,
/// i.e. `δ_m² d² sin²θ / 2r`.
pub fn taylor_distances(layout: &ArrayLayout, s: &SourcePoint, order: TaylorOrder) -> Result<Vec<f64>> {
    let to_ref = layout.reference() - s.position;
    let r = to_ref.norm();
    if r == 0.0 {
        return Err(Error::DegenerateGeometry("source coincides with the reference point".into()));
    }
    Ok(layout
        .offsets()
        .iter()
        .map(|d| {
            let proj = to_ref.dot(d) / r;
            match order {
                TaylorOrder::First => r + proj,
                TaylorOrder::Second => r + proj + (d.norm_squared() - proj * proj) / (2.0 * r),
            }
        })
        .collect())
}

/// Per-element gains `G_m` towards the source and the reference gain `G`
/// evaluated at the reference point.
pub fn element_gains(layout: &ArrayLayout, s: &SourcePoint, pattern: &GainPattern) -> (Vec<f64>, f64) {
    if pattern.is_isotropic() {
        return (vec![1.0; layout.num_elements()], 1.0);
    }
    let gains = layout.positions().iter().map(|p| gain_towards(pattern, layout, p, &s.position)).collect();
    let reference = gain_towards(pattern, layout, &layout.reference(), &s.position);
    (gains, reference)
}

/// Array response vector of `layout` to a source at `s` under `model`.
///
/// Amplitudes of the non-uniform models are `√(G_m / G) · r / r_m`, with `G`
/// the pattern gain at the reference point; phases are relative to the
/// reference point, so the entry of an element at `p` is exactly 1.
pub fn array_response(
    model: ResponseModel,
    layout: &ArrayLayout,
    s: &SourcePoint,
    pattern: &GainPattern,
) -> Result<SteeringVector> {
    let to_ref = layout.reference() - s.position;
    let r = to_ref.norm();
    if r == 0.0 {
        return Err(Error::DegenerateGeometry("source coincides with the reference point".into()));
    }
    let k = 2.0 * PI / layout.wavelength();
    let offsets = layout.offsets();
    let needs_amplitude = matches!(model, ResponseModel::Nupw | ResponseModel::Nusw);

    let (gains, g_ref) = if needs_amplitude { element_gains(layout, s, pattern) } else { (Vec::new(), 1.0) };
    if needs_amplitude && g_ref <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "reference element has zero gain towards the source; amplitudes are undefined".into(),
        ));
    }

    let mut out = CVector::zeros(offsets.len());
    for (m, d) in offsets.iter().enumerate() {
        let rm = (to_ref + d).norm();
        let proj = to_ref.dot(d) / r;
        let phase = match model {
            ResponseModel::Upw | ResponseModel::Nupw => proj,
            ResponseModel::Usw | ResponseModel::Nusw => rm - r,
            ResponseModel::Pbw => proj + (d.norm_squared() - proj * proj) / (2.0 * r),
        };
        let amp = if needs_amplitude {
            if rm == 0.0 {
                return Err(Error::DegenerateGeometry(format!("source coincides with element {m}")));
            }
            (gains[m] / g_ref).sqrt() * r / rm
        } else {
            1.0
        };
        out[m] = C64::from_polar(amp, -k * phase);
    }
    Ok(SteeringVector { model, entries: out })
}

/// Free-space channel `h = α a(s)` with `α = √U / r · e^{−j2πr/λ}` and
/// `U = G (λ/4π)²` at the reference point.
pub fn free_space_channel(
    model: ResponseModel,
    layout: &ArrayLayout,
    s: &SourcePoint,
    pattern: &GainPattern,
) -> Result<CVector> {
    let a = array_response(model, layout, s, pattern)?;
    Ok(a.entries * reference_coefficient(layout, s, pattern))
}

/// The common coefficient `α` of [`free_space_channel`].
pub fn reference_coefficient(layout: &ArrayLayout, s: &SourcePoint, pattern: &GainPattern) -> C64 {
    let lambda = layout.wavelength();
    let r = s.range(layout);
    let g = gain_towards(pattern, layout, &layout.reference(), &s.position);
    let u = g * (lambda / (4.0 * PI)).powi(2);
    C64::from_polar(u.sqrt() / r, -2.0 * PI * r / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArrayGeometry;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn ula(m: usize, lambda: f64) -> ArrayLayout {
        ArrayLayout::along_y(ArrayGeometry::CollocatedUla { elements: m }, lambda).unwrap()
    }

    #[test]
    fn polar_round_trip() {
        let l = ula(5, 0.1);
        let s = SourcePoint::polar(&l, 7.0, 1.1);
        assert!((s.range(&l) - 7.0).abs() < 1e-12);
        assert!((s.angle(&l) - 1.1).abs() < 1e-12);
        assert!(s.position.x > 0.0);
    }

    #[test]
    fn broadside_two_element_distances() {
        let l = ula(2, 0.125);
        let s = SourcePoint::polar(&l, 10.0, FRAC_PI_2);
        let r = exact_distances(&l, &s);
        let want = (100.0f64 + 0.03125 * 0.03125).sqrt();
        assert!((r[0] - want).abs() < 1e-12 && (r[1] - want).abs() < 1e-12);
    }

    #[test]
    fn endfire_distances_are_collinear() {
        // Elements at ±1 m along y, source 10 m away on the axis.
        let l =
            ArrayLayout::along_y(ArrayGeometry::SparseUla { elements: 2, separation: 2.0 / 0.5 * 2.0 }, 0.5).unwrap();
        assert!((l.spacing() - 2.0).abs() < 1e-15);
        let s = SourcePoint::polar(&l, 10.0, 0.0);
        let mut r = exact_distances(&l, &s);
        r.sort_by(f64::total_cmp);
        assert!((r[0] - 9.0).abs() < 1e-12 && (r[1] - 11.0).abs() < 1e-12);
    }

    #[test]
    fn source_at_centre_gives_offset_norms() {
        let l = ula(4, 0.2);
        let s = SourcePoint::new(l.reference());
        let r = exact_distances(&l, &s);
        for (rm, d) in r.iter().zip(l.offsets()) {
            assert_eq!(*rm, d.norm());
        }
    }

    #[test]
    fn taylor_at_broadside() {
        let l = ula(9, 0.1);
        let s = SourcePoint::polar(&l, 3.0, FRAC_PI_2);
        let first = taylor_distances(&l, &s, TaylorOrder::First).unwrap();
        let second = taylor_distances(&l, &s, TaylorOrder::Second).unwrap();
        for ((f, q), d) in first.iter().zip(&second).zip(l.axial_coordinates()) {
            assert!((f - 3.0).abs() < 1e-12);
            assert!((q - f - d * d / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn second_order_error_is_inverse_square() {
        let l = ula(33, 0.1);
        let err = |r: f64| {
            let s = SourcePoint::polar(&l, r, 0.7);
            let exact = exact_distances(&l, &s);
            let approx = taylor_distances(&l, &s, TaylorOrder::Second).unwrap();
            exact.iter().zip(&approx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        // The leading error term is cubic in the aperture over r², so doubling
        // r should cut it by four.
        let ratio = err(20.0) / err(40.0);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn upw_at_broadside_is_flat() {
        let l = ula(6, 0.1);
        let s = SourcePoint::polar(&l, 50.0, FRAC_PI_2);
        let a = array_response(ResponseModel::Upw, &l, &s, &GainPattern::Isotropic).unwrap();
        for z in a.iter() {
            assert!((z - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn upw_matches_textbook_linear_phase() {
        let lambda = 0.125;
        let l = ula(8, lambda);
        let theta = 0.9;
        let s = SourcePoint::polar(&l, 40.0, theta);
        let a = array_response(ResponseModel::Upw, &l, &s, &GainPattern::Isotropic).unwrap();
        let d = lambda / 2.0;
        let beta = C64::from_polar(1.0, PI * 7.0 * d * theta.cos() / lambda);
        for m in 0..8 {
            let want = beta * C64::from_polar(1.0, -2.0 * PI * m as f64 * d * theta.cos() / lambda);
            assert!((a[m] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn nusw_amplitudes_follow_distances() {
        let l = ula(7, 0.1);
        let s = SourcePoint::polar(&l, 0.6, 1.0);
        let a = array_response(ResponseModel::Nusw, &l, &s, &GainPattern::Isotropic).unwrap();
        let r = exact_distances(&l, &s);
        for m in 0..7 {
            assert!((a[m].norm() - 0.6 / r[m]).abs() < 1e-12);
        }
        assert!((a[3] - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn cosine_pattern_reference_gain() {
        let l = ula(3, 0.1);
        let pat = GainPattern::Cosine { q: 1.0 };
        let s = SourcePoint::polar(&l, 2.0, FRAC_PI_2);
        let (g, g_ref) = element_gains(&l, &s, &pat);
        assert!((g_ref - 6.0).abs() < 1e-12);
        assert!(g[0] < g_ref && (g[0] - g[2]).abs() < 1e-12);
        let endfire = SourcePoint::polar(&l, 2.0, 0.0);
        assert!(array_response(ResponseModel::Nusw, &l, &endfire, &pat).is_err());
    }

    #[test]
    fn rejects_zero_range() {
        let l = ula(3, 0.1);
        let s = SourcePoint::new(l.reference());
        assert!(array_response(ResponseModel::Usw, &l, &s, &GainPattern::Isotropic).is_err());
    }

    #[test]
    fn free_space_gain_at_reference() {
        let lambda = 0.125;
        let l = ula(1, lambda);
        let s = SourcePoint::polar(&l, 15.0, 1.0);
        let h = free_space_channel(ResponseModel::Nusw, &l, &s, &GainPattern::Isotropic).unwrap();
        assert!((h[0].norm() - lambda / (4.0 * PI * 15.0)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn expanded_distance_formula(r in 0.5f64..50.0, theta in 0.0f64..PI, m in 1usize..20) {
            let l = ula(m, 0.1);
            let s = SourcePoint::polar(&l, r, theta);
            let exact = exact_distances(&l, &s);
            let to_ref = l.reference() - s.position;
            for (rm, d) in exact.iter().zip(l.offsets()) {
                let expanded = (r * r + 2.0 * to_ref.dot(&d) + d.norm_squared()).sqrt();
                prop_assert!((rm - expanded).abs() <= 1e-12 * rm.max(1.0));
            }
        }

        #[test]
        fn unit_modulus_models(r in 0.5f64..50.0, theta in 0.05f64..3.0) {
            let l = ula(12, 0.1);
            let s = SourcePoint::polar(&l, r, theta);
            for model in [ResponseModel::Upw, ResponseModel::Usw, ResponseModel::Pbw] {
                let a = array_response(model, &l, &s, &GainPattern::Isotropic).unwrap();
                for z in a.iter() {
                    prop_assert!((z.norm() - 1.0).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn self_coherence(r in 0.5f64..50.0, theta in 0.05f64..3.0) {
            let l = ula(16, 0.1);
            let s = SourcePoint::polar(&l, r, theta);
            let a = array_response(ResponseModel::Nusw, &l, &s, &GainPattern::Cosine { q: 1.0 }).unwrap();
            let c = a.dotc(&a).norm() / a.norm_squared();
            prop_assert!((c - 1.0).abs() < 1e-12);
        }
    }
}
