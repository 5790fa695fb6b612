//! Element gain patterns.
//!
//! Local angles are measured in the element frame: `φ` from the boresight and
//! `ξ` around it, starting at the array axis. A unit direction therefore
//! decomposes as `cos φ · n̂ + sin φ cos ξ · û + sin φ sin ξ · v̂`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::geometry::ArrayLayout;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GainPattern {
    #[default]
    Isotropic,
    /// `2(2q+1) cos^{2q} φ` on the front hemisphere, zero behind.
    Cosine { q: f64 },
    /// Sectorised pattern built from a vertical and a horizontal cut.
    #[serde(rename = "three_gpp")]
    ThreeGpp(ThreeGppPattern),
}

/// Pattern `G_max − min(−(G_V + G_H), A_max)` in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeGppPattern {
    #[serde(default = "ThreeGppPattern::default_max_gain")]
    pub max_gain_db: f64,
    #[serde(default = "ThreeGppPattern::default_front_back")]
    pub max_attenuation_db: f64,
    #[serde(default)]
    pub vertical: PatternCut,
    #[serde(default)]
    pub horizontal: PatternCut,
}

impl ThreeGppPattern {
    fn default_max_gain() -> f64 {
        8.0
    }
    fn default_front_back() -> f64 {
        30.0
    }
}

impl Default for ThreeGppPattern {
    fn default() -> Self {
        ThreeGppPattern {
            max_gain_db: 8.0,
            max_attenuation_db: 30.0,
            vertical: PatternCut::default(),
            horizontal: PatternCut::default(),
        }
    }
}

/// Attenuation (dB, ≤ 0) as a function of the deviation from boresight in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternCut {
    /// `−min(12 (x / beamwidth)², floor)`.
    Parabolic { beamwidth_deg: f64, floor_db: f64 },
    /// Piecewise-linear `(deviation_deg, gain_db)` samples sorted by deviation,
    /// held constant outside the table.
    Tabulated { points: Vec<[f64; 2]> },
}

impl Default for PatternCut {
    fn default() -> Self {
        PatternCut::Parabolic { beamwidth_deg: 65.0, floor_db: 30.0 }
    }
}

impl PatternCut {
    pub fn gain_db(&self, deviation_deg: f64) -> f64 {
        match self {
            PatternCut::Parabolic { beamwidth_deg, floor_db } => {
                -(12.0 * (deviation_deg / beamwidth_deg).powi(2)).min(*floor_db)
            }
            PatternCut::Tabulated { points } => interpolate(points, deviation_deg),
        }
    }
}

fn interpolate(points: &[[f64; 2]], x: f64) -> f64 {
    match points {
        [] => 0.0,
        [only] => only[1],
        _ => {
            if x <= points[0][0] {
                return points[0][1];
            }
            for w in points.windows(2) {
                let ([x0, y0], [x1, y1]) = (w[0], w[1]);
                if x <= x1 {
                    let t = if x1 > x0 { (x - x0) / (x1 - x0) } else { 1.0 };
                    return y0 + t * (y1 - y0);
                }
            }
            points[points.len() - 1][1]
        }
    }
}

impl GainPattern {
    pub fn validate(&self) -> Result<()> {
        match self {
            GainPattern::Isotropic => Ok(()),
            GainPattern::Cosine { q } => {
                if q.is_finite() && *q >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::param("q", format!("must be non-negative, got {q}")))
                }
            }
            GainPattern::ThreeGpp(p) => {
                for cut in [&p.vertical, &p.horizontal] {
                    match cut {
                        PatternCut::Parabolic { beamwidth_deg, floor_db } => {
                            if !(*beamwidth_deg > 0.0) || !(*floor_db >= 0.0) {
                                return Err(Error::param("cut", "beamwidth must be positive and floor non-negative"));
                            }
                        }
                        PatternCut::Tabulated { points } => {
                            if points.is_empty() || points.windows(2).any(|w| w[1][0] < w[0][0]) {
                                return Err(Error::param("points", "need at least one sample, sorted by angle"));
                            }
                        }
                    }
                }
                if !(p.max_attenuation_db >= 0.0) {
                    return Err(Error::param("max_attenuation_db", "must be non-negative"));
                }
                Ok(())
            }
        }
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(self, GainPattern::Isotropic)
    }
}

/// Folds arbitrary angles onto `φ ∈ [0, π]`, `ξ ∈ [0, 2π)`.
pub fn wrap_angles(phi: f64, xi: f64) -> (f64, f64) {
    let mut p = phi.rem_euclid(TAU);
    let mut x = xi;
    if p > PI {
        p = TAU - p;
        x += PI;
    }
    (p, x.rem_euclid(TAU))
}

/// Linear gain of a single element towards local direction `(φ, ξ)`.
pub fn element_gain(pattern: &GainPattern, phi: f64, xi: f64) -> f64 {
    let (phi, xi) = wrap_angles(phi, xi);
    match pattern {
        GainPattern::Isotropic => 1.0,
        GainPattern::Cosine { q } => {
            if phi < FRAC_PI_2 {
                2.0 * (2.0 * q + 1.0) * phi.cos().powf(2.0 * q)
            } else {
                0.0
            }
        }
        GainPattern::ThreeGpp(p) => {
            let (zenith, azimuth) = three_gpp_angles(phi, xi);
            let gv = p.vertical.gain_db(zenith.to_degrees() - 90.0);
            let gh = p.horizontal.gain_db(azimuth.to_degrees());
            let db = p.max_gain_db - (-(gv + gh)).min(p.max_attenuation_db);
            10f64.powf(db / 10.0)
        }
    }
}

/// Zenith (from the vertical axis) and azimuth (from boresight, towards the
/// array axis) of a local direction.
pub fn three_gpp_angles(phi: f64, xi: f64) -> (f64, f64) {
    let (sp, cp) = phi.sin_cos();
    let (sx, cx) = xi.sin_cos();
    let zenith = (sp * sx).clamp(-1.0, 1.0).acos();
    let azimuth = (sp * cx).atan2(cp);
    (zenith, azimuth)
}

/// Local angles `(φ, ξ)` of `target` seen from an element at `origin` of `layout`.
pub fn local_angles(layout: &ArrayLayout, origin: &Vec3, target: &Vec3) -> (f64, f64) {
    let u = (target - origin).normalize();
    let phi = u.dot(&layout.boresight()).clamp(-1.0, 1.0).acos();
    let xi = u.dot(&layout.vertical_axis()).atan2(u.dot(&layout.axis())).rem_euclid(TAU);
    (phi, xi)
}

/// Gain of an element at `origin` towards `target`.
pub fn gain_towards(pattern: &GainPattern, layout: &ArrayLayout, origin: &Vec3, target: &Vec3) -> f64 {
    if pattern.is_isotropic() {
        return 1.0;
    }
    let (phi, xi) = local_angles(layout, origin, target);
    element_gain(pattern, phi, xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, Tolerance};

    fn sphere_integral(pattern: &GainPattern) -> f64 {
        let tol = Tolerance::relative(1e-9);
        integrate(
            |phi| {
                let inner = integrate(|xi| element_gain(pattern, phi, xi), 0.0, TAU, tol).unwrap();
                inner * phi.sin()
            },
            0.0,
            PI,
            tol,
        )
        .unwrap()
    }

    #[test]
    fn cosine_values() {
        let p = GainPattern::Cosine { q: 2.0 };
        assert_eq!(element_gain(&p, 0.0, 0.0), 10.0);
        assert_eq!(element_gain(&p, FRAC_PI_2, 0.0), 0.0);
        assert_eq!(element_gain(&GainPattern::Isotropic, 2.0, 5.0), 1.0);
    }

    #[test]
    fn cosine_conserves_power() {
        for q in [0.0, 0.5, 1.0, 2.0, 3.7] {
            let total = sphere_integral(&GainPattern::Cosine { q });
            assert!((total / (4.0 * PI) - 1.0).abs() < 1e-3, "q={q}: {total}");
        }
    }

    #[test]
    fn three_gpp_boresight_and_back() {
        let p = GainPattern::ThreeGpp(ThreeGppPattern::default());
        let peak = element_gain(&p, 0.0, 0.0);
        assert!((peak - 10f64.powf(0.8)).abs() < 1e-12);
        let back = element_gain(&p, PI, 0.0);
        assert!((back - 10f64.powf((8.0 - 30.0) / 10.0)).abs() < 1e-12);
        // Half the 65° beamwidth off boresight is 3 dB down.
        let side = element_gain(&p, 32.5f64.to_radians(), 0.0);
        assert!((10.0 * (side / peak).log10() + 3.0).abs() < 1e-9);
        let up = element_gain(&p, 32.5f64.to_radians(), FRAC_PI_2);
        assert!((10.0 * (up / peak).log10() + 3.0).abs() < 1e-9);
    }

    #[test]
    fn tabulated_cut_interpolates() {
        let cut = PatternCut::Tabulated { points: vec![[-90.0, -20.0], [0.0, 0.0], [90.0, -20.0]] };
        assert_eq!(cut.gain_db(45.0), -10.0);
        assert_eq!(cut.gain_db(180.0), -20.0);
    }

    #[test]
    fn wrapping() {
        let (p, x) = wrap_angles(-0.3, 0.0);
        assert!((p - 0.3).abs() < 1e-15 && (x - PI).abs() < 1e-15);
        let (p, x) = wrap_angles(0.2, -1.0);
        assert!((p - 0.2).abs() < 1e-15 && (x - (TAU - 1.0)).abs() < 1e-15);
    }
}
