use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::ArrayLayout;
use crate::nearfield::{array_response, gain_towards, GainPattern, ResponseModel, SourcePoint};
use crate::{CMatrix, CVector, Error, Result, C64};

/// How the LoS MIMO matrix is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosMethod {
    /// Every antenna pair gets its own distance, gains and phase.
    Elementwise,
    /// Rank-one product of the two spherical-wave array responses.
    OuterProduct,
    /// Rank-one product of plane-wave responses.
    FarField,
}

/// Transmit response of `layout` towards `target`.
///
/// Departure phases are measured along `target − s_T` rather than
/// `s_T − target`, so this is the complex conjugate of the arrival response
/// [`array_response`] with real amplitudes unchanged. With this convention
/// `a_R(s_T) a_T(p_R)ᴴ` reproduces the pairwise propagation phases.
pub fn transmit_response(
    model: ResponseModel,
    layout: &ArrayLayout,
    target: &SourcePoint,
    pattern: &GainPattern,
) -> Result<CVector> {
    Ok(array_response(model, layout, target, pattern)?.entries.map(|z| z.conj()))
}

/// Common coefficient `α̃ = 4π √(U_R U_T) / (λ r) · e^{−j2πr/λ}` of a LoS link.
pub fn los_coefficient(tx: &ArrayLayout, rx: &ArrayLayout, tx_pattern: &GainPattern, rx_pattern: &GainPattern) -> C64 {
    let lambda = rx.wavelength();
    let r = (rx.reference() - tx.reference()).norm();
    let scale = (lambda / (4.0 * PI)).powi(2);
    let u_r = gain_towards(rx_pattern, rx, &rx.reference(), &tx.reference()) * scale;
    let u_t = gain_towards(tx_pattern, tx, &tx.reference(), &rx.reference()) * scale;
    C64::from_polar(4.0 * PI * (u_r * u_t).sqrt() / (lambda * r), -2.0 * PI * r / lambda)
}

/// `M_r × M_t` free-space LoS channel between two arrays.
///
/// The element-wise entry `α̃ √(U^R U^T / U_R U_T) (r / r_{mr,mt}) e^{−j2π(r_{mr,mt} − r)/λ}`
/// is evaluated in its cancelled form `√(G^R G^T) λ / (4π r_{mr,mt}) e^{−j2π r_{mr,mt}/λ}`,
/// which stays defined when a reference gain vanishes.
pub fn los_channel(
    method: LosMethod,
    tx: &ArrayLayout,
    rx: &ArrayLayout,
    tx_pattern: &GainPattern,
    rx_pattern: &GainPattern,
) -> Result<CMatrix> {
    if (tx.wavelength() - rx.wavelength()).abs() > 1e-15 * rx.wavelength() {
        return Err(Error::param("wavelength", "transmit and receive layouts use different carriers"));
    }
    let r = (rx.reference() - tx.reference()).norm();
    if r == 0.0 {
        return Err(Error::DegenerateGeometry("transmit and receive reference points coincide".into()));
    }
    let lambda = rx.wavelength();
    match method {
        LosMethod::Elementwise => {
            let k = 2.0 * PI / lambda;
            let tx_pos = tx.positions();
            let rx_pos = rx.positions();
            let mut h = CMatrix::zeros(rx_pos.len(), tx_pos.len());
            for (i, p) in rx_pos.iter().enumerate() {
                for (j, s) in tx_pos.iter().enumerate() {
                    let d = (p - s).norm();
                    if d == 0.0 {
                        return Err(Error::DegenerateGeometry(format!("rx element {i} coincides with tx element {j}")));
                    }
                    let g = gain_towards(rx_pattern, rx, p, s) * gain_towards(tx_pattern, tx, s, p);
                    h[(i, j)] = C64::from_polar(g.sqrt() * lambda / (4.0 * PI * d), -k * d);
                }
            }
            Ok(h)
        }
        LosMethod::OuterProduct | LosMethod::FarField => {
            let model = if method == LosMethod::FarField { ResponseModel::Upw } else { ResponseModel::Nusw };
            let alpha = los_coefficient(tx, rx, tx_pattern, rx_pattern);
            let a_r = array_response(model, rx, &SourcePoint::new(tx.reference()), rx_pattern)?.entries;
            let a_t = transmit_response(model, tx, &SourcePoint::new(rx.reference()), tx_pattern)?;
            Ok(a_r * a_t.adjoint() * alpha)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArrayGeometry;
    use crate::linalg::singular_values;
    use crate::Vec3;

    fn pair(mt: usize, mr: usize, r: f64, lambda: f64) -> (ArrayLayout, ArrayLayout) {
        let tx = ArrayLayout::along_y(ArrayGeometry::CollocatedUla { elements: mt }, lambda).unwrap();
        let rx = ArrayLayout::along_y(ArrayGeometry::CollocatedUla { elements: mr }, lambda)
            .unwrap()
            .with_reference(Vec3::new(r, 0.0, 0.0))
            .with_boresight(-Vec3::x())
            .unwrap();
        (tx, rx)
    }

    #[test]
    fn outer_product_is_rank_one() {
        let (tx, rx) = pair(16, 8, 3.0, 0.05);
        let h =
            los_channel(LosMethod::OuterProduct, &tx, &rx, &GainPattern::Isotropic, &GainPattern::Isotropic).unwrap();
        let sv = singular_values(&h);
        assert!(sv[1] <= 1e-10 * sv[0]);
    }

    #[test]
    fn single_antennas_agree() {
        let (tx, rx) = pair(1, 1, 7.0, 0.1);
        let pat = GainPattern::Cosine { q: 1.0 };
        let a = los_channel(LosMethod::Elementwise, &tx, &rx, &pat, &pat).unwrap();
        let b = los_channel(LosMethod::OuterProduct, &tx, &rx, &pat, &pat).unwrap();
        let c = los_channel(LosMethod::FarField, &tx, &rx, &pat, &pat).unwrap();
        assert!((a[(0, 0)] - b[(0, 0)]).norm() < 1e-15);
        assert!((a[(0, 0)] - c[(0, 0)]).norm() < 1e-15);
        assert!((a[(0, 0)].norm() - 6.0 * 0.1 / (4.0 * PI * 7.0)).abs() < 1e-15);
    }

    #[test]
    fn methods_converge_with_distance_off_broadside() {
        let lambda = 0.05;
        let tx = ArrayLayout::along_y(ArrayGeometry::CollocatedUla { elements: 8 }, lambda).unwrap();
        let mut last = f64::INFINITY;
        for r in [2.0, 8.0, 32.0, 128.0] {
            let dir = Vec3::new(0.8, 0.6, 0.0);
            let rx = ArrayLayout::linear(
                ArrayGeometry::CollocatedUla { elements: 6 },
                lambda,
                dir * r,
                Vec3::new(-0.6, 0.8, 0.0),
            )
            .unwrap();
            let iso = GainPattern::Isotropic;
            let a = los_channel(LosMethod::Elementwise, &tx, &rx, &iso, &iso).unwrap();
            let b = los_channel(LosMethod::OuterProduct, &tx, &rx, &iso, &iso).unwrap();
            let rel = (&a - &b).norm() / a.norm();
            assert!(rel < last, "r={r}: {rel} !< {last}");
            last = rel;
        }
        assert!(last < 0.01);
    }

    #[test]
    fn coincident_arrays_rejected() {
        let (tx, _) = pair(2, 2, 1.0, 0.1);
        let rx = tx.clone();
        let iso = GainPattern::Isotropic;
        assert!(los_channel(LosMethod::Elementwise, &tx, &rx, &iso, &iso).is_err());
    }
}
