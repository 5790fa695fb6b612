use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::visibility::VisibilityMask;
use crate::geometry::{ArrayGeometry, ArrayLayout};
use crate::nearfield::{
    array_response, free_space_channel, reactive_boundary, GainPattern, ResponseModel, SourcePoint,
};
use crate::{CMatrix, CVector, Error, Result, Vec3, C64, SPEED_OF_LIGHT};

fn unit_amplitude() -> f64 {
    1.0
}

/// A point scatterer of the bistatic NLoS model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scatterer {
    /// Position in metres.
    pub location: [f64; 3],
    /// Radar cross section in m².
    pub rcs: f64,
    /// Additional phase shift of the reflection, radians.
    #[serde(default)]
    pub extra_phase: f64,
    /// Random amplitude factor; the set should have unit mean square.
    #[serde(default = "unit_amplitude")]
    pub amplitude: f64,
}

impl Scatterer {
    pub fn new(location: Vec3, rcs: f64) -> Self {
        Scatterer { location: location.into(), rcs, extra_phase: 0.0, amplitude: 1.0 }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::from(self.location)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rcs > 0.0 && self.rcs.is_finite()) {
            return Err(Error::param("rcs", format!("must be positive, got {}", self.rcs)));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::param("amplitude", format!("must be non-negative, got {}", self.amplitude)));
        }
        if !self.location.iter().all(|x| x.is_finite()) || !self.extra_phase.is_finite() {
            return Err(Error::param("location", "must be finite"));
        }
        Ok(())
    }
}

/// Draws lognormal amplitudes with log-standard-deviation `sigma_db` (dB of
/// power) and rescales them so their mean square is exactly one.
pub fn lognormal_amplitudes(count: usize, sigma_db: f64, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let sigma = sigma_db * std::f64::consts::LN_10 / 20.0;
    let dist = LogNormal::new(0.0, sigma).map_err(|e| Error::param("sigma_db", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g: Vec<f64> = (0..count).map(|_| dist.sample(&mut rng)).collect();
    let ms = g.iter().map(|x| x * x).sum::<f64>() / count as f64;
    let scale = ms.sqrt().recip();
    g.iter_mut().for_each(|x| *x *= scale);
    Ok(g)
}

/// One scattered path between a transmit and a receive array.
#[derive(Debug, Clone, PartialEq)]
pub struct BistaticPath {
    /// Contribution of this path to the channel matrix, `M_r × M_t`.
    pub matrix: CMatrix,
    /// Propagation delay `(t_q + r_q)/c` in seconds.
    pub delay: f64,
    /// Transmitter-to-scatterer distance `t_q`.
    pub tx_distance: f64,
    /// Scatterer-to-receiver distance `r_q`.
    pub rx_distance: f64,
}

/// Total NLoS power `Σ_q λ² σ_q / ((4π)³ t_q² r_q²)`.
pub fn nlos_power(tx: &ArrayLayout, rx: &ArrayLayout, scatterers: &[Scatterer]) -> f64 {
    let lambda = rx.wavelength();
    scatterers
        .iter()
        .map(|s| {
            let e = s.position();
            let t = (e - tx.reference()).norm();
            let r = (e - rx.reference()).norm();
            lambda * lambda * s.rcs / ((4.0 * PI).powi(3) * t * t * r * r)
        })
        .sum()
}

/// Per-scatterer terms of the bistatic NLoS channel.
///
/// Path `q` is `√(β/Q) g_q e^{−j2π(t_q + r_q)/λ + jψ_q} a_R(e_q) a_T(e_q)ᵀ`,
/// where `β` is [`nlos_power`] and both responses are spherical-wave
/// arrival vectors towards the scatterer. The transmit response enters
/// transposed, not conjugated.
pub fn bistatic_paths(
    tx: &ArrayLayout,
    rx: &ArrayLayout,
    scatterers: &[Scatterer],
    tx_pattern: &GainPattern,
    rx_pattern: &GainPattern,
) -> Result<Vec<BistaticPath>> {
    if scatterers.is_empty() {
        return Err(Error::ZeroInput("scatterer set is empty"));
    }
    let lambda = rx.wavelength();
    let tx_reactive = reactive_boundary(tx.physical_dimension(), lambda);
    let rx_reactive = reactive_boundary(rx.physical_dimension(), lambda);
    for (q, s) in scatterers.iter().enumerate() {
        s.validate()?;
        let e = s.position();
        if (e - tx.reference()).norm() <= tx_reactive || (e - rx.reference()).norm() <= rx_reactive {
            return Err(Error::DegenerateGeometry(format!("scatterer {q} lies inside a reactive near-field region")));
        }
    }
    scattered_paths(ResponseModel::Nusw, tx, rx, scatterers, tx_pattern, rx_pattern)
}

/// Bistatic paths with both responses taken from `model`, without the
/// reactive-region screening of [`bistatic_paths`].
///
/// Useful for very large apertures, whose closed-form reactive boundary can
/// exceed the whole scene, and for building the plane-wave channel a
/// far-field receiver would assume.
pub fn scattered_paths(
    model: ResponseModel,
    tx: &ArrayLayout,
    rx: &ArrayLayout,
    scatterers: &[Scatterer],
    tx_pattern: &GainPattern,
    rx_pattern: &GainPattern,
) -> Result<Vec<BistaticPath>> {
    if scatterers.is_empty() {
        return Err(Error::ZeroInput("scatterer set is empty"));
    }
    for s in scatterers {
        s.validate()?;
    }
    let lambda = rx.wavelength();
    let beta = nlos_power(tx, rx, scatterers);
    let common = (beta / scatterers.len() as f64).sqrt();
    let k = 2.0 * PI / lambda;
    scatterers
        .iter()
        .map(|s| {
            let point = SourcePoint::new(s.position());
            let t = point.range(tx);
            let r = point.range(rx);
            let a_r = array_response(model, rx, &point, rx_pattern)?.entries;
            let a_t = array_response(model, tx, &point, tx_pattern)?.entries;
            let coeff = C64::from_polar(common * s.amplitude, -k * (t + r) + s.extra_phase);
            Ok(BistaticPath {
                matrix: a_r * a_t.transpose() * coeff,
                delay: (t + r) / SPEED_OF_LIGHT,
                tx_distance: t,
                rx_distance: r,
            })
        })
        .collect()
}

/// Uplink channel of an isotropic single-antenna user at `user` seen by
/// `array`: the free-space LoS term plus one scattered path per scatterer,
/// all with responses from `model` and no reactive-region screening.
pub fn user_channel(
    model: ResponseModel,
    array: &ArrayLayout,
    user: Vec3,
    scatterers: &[Scatterer],
    pattern: &GainPattern,
) -> Result<CVector> {
    let source = SourcePoint::new(user);
    let mut h = free_space_channel(model, array, &source, pattern)?;
    if !scatterers.is_empty() {
        let antenna =
            ArrayLayout::linear(ArrayGeometry::CollocatedUla { elements: 1 }, array.wavelength(), user, Vec3::y())?;
        for p in scattered_paths(model, &antenna, array, scatterers, &GainPattern::Isotropic, pattern)? {
            h += p.matrix.column(0);
        }
    }
    Ok(h)
}

/// Sum of [`bistatic_paths`].
pub fn nlos_bistatic(
    tx: &ArrayLayout,
    rx: &ArrayLayout,
    scatterers: &[Scatterer],
    tx_pattern: &GainPattern,
    rx_pattern: &GainPattern,
) -> Result<CMatrix> {
    let paths = bistatic_paths(tx, rx, scatterers, tx_pattern, rx_pattern)?;
    let mut h = CMatrix::zeros(rx.num_elements(), tx.num_elements());
    for p in paths {
        h += p.matrix;
    }
    Ok(h)
}

/// A channel component with an optional receive-side visibility mask.
#[derive(Debug, Clone, Copy)]
pub struct PathTerm<'a> {
    pub matrix: &'a CMatrix,
    pub mask: Option<&'a VisibilityMask>,
}

impl<'a> PathTerm<'a> {
    pub fn new(matrix: &'a CMatrix) -> Self {
        PathTerm { matrix, mask: None }
    }

    pub fn masked(matrix: &'a CMatrix, mask: &'a VisibilityMask) -> Self {
        PathTerm { matrix, mask: Some(mask) }
    }
}

/// Superposes an optional LoS term (`None` when the LoS is blocked) and the
/// scattered terms, each masked row-wise by its visibility region.
pub fn multipath_channel(los: Option<PathTerm<'_>>, scattered: &[PathTerm<'_>]) -> Result<CMatrix> {
    let shape = los
        .map(|t| t.matrix.shape())
        .or_else(|| scattered.first().map(|t| t.matrix.shape()))
        .ok_or(Error::ZeroInput("no channel components"))?;
    let mut h = CMatrix::zeros(shape.0, shape.1);
    for term in los.iter().chain(scattered.iter()) {
        if term.matrix.shape() != shape {
            let got = if term.matrix.nrows() != shape.0 { term.matrix.nrows() } else { term.matrix.ncols() };
            let expected = if term.matrix.nrows() != shape.0 { shape.0 } else { shape.1 };
            return Err(Error::DimensionMismatch { expected, got });
        }
        match term.mask {
            Some(mask) => {
                let mut part = term.matrix.clone();
                mask.apply_rows(&mut part)?;
                h += part;
            }
            None => h += term.matrix,
        }
    }
    Ok(h)
}
