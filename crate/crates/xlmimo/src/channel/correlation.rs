//! Spatial correlation matrices and correlated Rayleigh sampling.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::visibility::VrProcess;
use crate::geometry::ArrayLayout;
use crate::linalg::hermitian_sqrt;
use crate::nearfield::{exact_distances, SourcePoint};
use crate::quad::{integrate, integrate_vec, Tolerance};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Allowed deviation of a spectrum's total mass from one.
pub const SPECTRUM_MASS_TOLERANCE: f64 = 1e-3;

const ANGLE_TOLERANCE: Tolerance = Tolerance { abs: 1e-12, rel: 1e-9, max_intervals: 4000 };
const OUTER_TOLERANCE: Tolerance = Tolerance { abs: 1e-10, rel: 1e-7, max_intervals: 2000 };
const INNER_TOLERANCE: Tolerance = Tolerance { abs: 1e-12, rel: 1e-9, max_intervals: 2000 };

/// Shape of a power angular spectrum on `[mean − spread, mean + spread]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AngularSpectrum {
    #[default]
    Uniform,
    /// Gaussian with the given standard deviation, truncated and renormalised.
    Gaussian { std: f64 },
    /// Laplacian with the given scale, truncated and renormalised.
    Laplacian { scale: f64 },
}

impl AngularSpectrum {
    fn shape(&self, offset: f64) -> f64 {
        match *self {
            AngularSpectrum::Uniform => 1.0,
            AngularSpectrum::Gaussian { std } => (-0.5 * (offset / std).powi(2)).exp(),
            AngularSpectrum::Laplacian { scale } => (-offset.abs() / scale).exp(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            AngularSpectrum::Uniform => Ok(()),
            AngularSpectrum::Gaussian { std } => crate::error::ensure_positive("std", std),
            AngularSpectrum::Laplacian { scale } => crate::error::ensure_positive("scale", scale),
        }
    }
}

/// A weighted point of a discrete location spectrum, in the polar
/// coordinates of [`SourcePoint::polar`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedPoint {
    pub range: f64,
    pub angle: f64,
    pub weight: f64,
}

/// Where the scattered power comes from, relative to the array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LocationSpectrum {
    /// Uniform over the annular sector `range ∈ [r_min, r_max]`,
    /// `angle ∈ [angle_min, angle_max]` (density `1/area`).
    UniformSector { r_min: f64, r_max: f64, angle_min: f64, angle_max: f64 },
    /// Discrete scatterer locations with weights summing to one.
    Points { points: Vec<WeightedPoint> },
}

/// Model of the receive correlation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorrelationSpec {
    /// Far-field one-ring: `R_mn = ∫ e^{j2π(x_m − x_n) sin θ / λ} f(θ) dθ`,
    /// with `θ` from broadside and `x` the axial element coordinates.
    OneRing {
        mean_angle: f64,
        spread: f64,
        #[serde(default)]
        spectrum: AngularSpectrum,
    },
    /// Near-field: `R_mn = ∫ r²/(r_m r_n) e^{j2π(r_m − r_n)/λ} f(q) dq`.
    NearField { region: LocationSpectrum },
    /// The inner model multiplied entrywise by `E[b_m b_n]` of a mask process.
    VrMasked { inner: Box<CorrelationSpec>, process: VrProcess },
}

impl CorrelationSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            CorrelationSpec::OneRing { mean_angle, spread, spectrum } => {
                if !mean_angle.is_finite() {
                    return Err(Error::param("mean_angle", "must be finite"));
                }
                if !(*spread > 0.0 && *spread <= PI) {
                    return Err(Error::param("spread", format!("must lie in (0, π], got {spread}")));
                }
                spectrum.validate()?;
                let mass = angular_normaliser(*spread, spectrum)?;
                check_mass(integrate(|t| spectrum.shape(t) / mass, -spread, *spread, ANGLE_TOLERANCE)?)
            }
            CorrelationSpec::NearField { region } => match region {
                LocationSpectrum::UniformSector { r_min, r_max, angle_min, angle_max } => {
                    if !(*r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
                        return Err(Error::param("r_min", "need 0 < r_min < r_max"));
                    }
                    if !(angle_max > angle_min && angle_min.is_finite() && angle_max.is_finite()) {
                        return Err(Error::param("angle_min", "need angle_min < angle_max"));
                    }
                    Ok(())
                }
                LocationSpectrum::Points { points } => {
                    if points.is_empty() {
                        return Err(Error::ZeroInput("location spectrum has no points"));
                    }
                    if points.iter().any(|p| !(p.weight >= 0.0) || !(p.range > 0.0)) {
                        return Err(Error::param("points", "weights must be non-negative and ranges positive"));
                    }
                    check_mass(points.iter().map(|p| p.weight).sum())
                }
            },
            CorrelationSpec::VrMasked { inner, process } => {
                inner.validate()?;
                process.validate()
            }
        }
    }
}

fn check_mass(mass: f64) -> Result<()> {
    if (mass - 1.0).abs() <= SPECTRUM_MASS_TOLERANCE {
        Ok(())
    } else {
        Err(Error::param("spectrum", format!("integrates to {mass}, not 1")))
    }
}

fn angular_normaliser(spread: f64, spectrum: &AngularSpectrum) -> Result<f64> {
    match spectrum {
        AngularSpectrum::Uniform => Ok(2.0 * spread),
        _ => integrate(|t| spectrum.shape(t), -spread, spread, ANGLE_TOLERANCE),
    }
}

/// Number of reals in the packed upper triangle (re, im per entry).
fn packed_len(m: usize) -> usize {
    m * (m + 1)
}

fn unpack(m: usize, packed: &[f64]) -> CMatrix {
    let mut r = CMatrix::zeros(m, m);
    let mut k = 0;
    for i in 0..m {
        for j in i..m {
            let z = C64::new(packed[k], packed[k + 1]);
            k += 2;
            r[(i, j)] = z;
            r[(j, i)] = z.conj();
        }
        r[(i, i)].im = 0.0;
    }
    r
}

/// Writes `w · u_i conj(u_j)` for `i ≤ j` into `out`.
fn accumulate_outer(u: &[C64], w: f64, out: &mut [f64]) {
    let mut k = 0;
    for i in 0..u.len() {
        let ui = u[i] * w;
        for uj in &u[i..] {
            let z = ui * uj.conj();
            out[k] = z.re;
            out[k + 1] = z.im;
            k += 2;
        }
    }
}

/// Correlation matrix of `layout` under `spec`, by adaptive quadrature.
pub fn spatial_correlation(spec: &CorrelationSpec, layout: &ArrayLayout) -> Result<CMatrix> {
    spec.validate()?;
    let m = layout.num_elements();
    let k = 2.0 * PI / layout.wavelength();
    match spec {
        CorrelationSpec::OneRing { mean_angle, spread, spectrum } => {
            if !layout.geometry().is_linear() {
                return Err(Error::param("layout", "the one-ring model needs a linear array"));
            }
            let x = layout.axial_coordinates();
            let norm = angular_normaliser(*spread, spectrum)?;
            let mut u = vec![C64::default(); m];
            let packed = integrate_vec(
                |t, out| {
                    let s = (mean_angle + t).sin();
                    for (ui, xi) in u.iter_mut().zip(&x) {
                        *ui = C64::from_polar(1.0, k * xi * s);
                    }
                    accumulate_outer(&u, spectrum.shape(t) / norm, out);
                },
                packed_len(m),
                -spread,
                *spread,
                ANGLE_TOLERANCE,
            )?;
            Ok(unpack(m, &packed))
        }
        CorrelationSpec::NearField { region } => {
            let weight_vector = |range: f64, angle: f64, u: &mut [C64]| {
                let p = SourcePoint::polar(layout, range, angle);
                for (ui, rm) in u.iter_mut().zip(exact_distances(layout, &p)) {
                    *ui = C64::from_polar(range / rm, k * rm);
                }
            };
            match region {
                LocationSpectrum::Points { points } => {
                    let mut u = vec![C64::default(); m];
                    let mut total = vec![0.0; packed_len(m)];
                    let mut part = vec![0.0; packed_len(m)];
                    for p in points {
                        weight_vector(p.range, p.angle, &mut u);
                        accumulate_outer(&u, p.weight, &mut part);
                        total.iter_mut().zip(&part).for_each(|(t, v)| *t += v);
                    }
                    Ok(unpack(m, &total))
                }
                &LocationSpectrum::UniformSector { r_min, r_max, angle_min, angle_max } => {
                    let area = 0.5 * (angle_max - angle_min) * (r_max * r_max - r_min * r_min);
                    let dim = packed_len(m);
                    let mut failure = None;
                    let packed = integrate_vec(
                        |angle, out| {
                            let mut u = vec![C64::default(); m];
                            let inner = integrate_vec(
                                |range, slot| {
                                    weight_vector(range, angle, &mut u);
                                    accumulate_outer(&u, range / area, slot);
                                },
                                dim,
                                r_min,
                                r_max,
                                INNER_TOLERANCE,
                            );
                            match inner {
                                Ok(v) => out.copy_from_slice(&v),
                                Err(e) => {
                                    out.fill(0.0);
                                    failure.get_or_insert(e);
                                }
                            }
                        },
                        dim,
                        angle_min,
                        angle_max,
                        OUTER_TOLERANCE,
                    )?;
                    if let Some(e) = failure {
                        return Err(e);
                    }
                    Ok(unpack(m, &packed))
                }
            }
        }
        CorrelationSpec::VrMasked { inner, process } => {
            let r = spatial_correlation(inner, layout)?;
            let moments = process.mask_moments(m)?;
            Ok(apply_moments(&r, &moments))
        }
    }
}

fn apply_moments(r: &CMatrix, moments: &DMatrix<f64>) -> CMatrix {
    CMatrix::from_fn(r.nrows(), r.ncols(), |i, j| r[(i, j)] * moments[(i, j)])
}

/// Largest entrywise deviation of `r` from a Toeplitz matrix: the spread of
/// each diagonal about its first entry.
pub fn toeplitz_defect(r: &CMatrix) -> f64 {
    let n = r.nrows().min(r.ncols());
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (a, b) = if i <= j { (0, j - i) } else { (i - j, 0) };
            worst = worst.max((r[(i, j)] - r[(a, b)]).norm());
        }
    }
    worst
}

/// Per-element large-scale fading `ς_m = ε r_m^ν`.
pub fn large_scale_profile(layout: &ArrayLayout, s: &SourcePoint, epsilon: f64, exponent: f64) -> Vec<f64> {
    exact_distances(layout, s).into_iter().map(|r| epsilon * r.powf(exponent)).collect()
}

/// Large-scale power applied to a correlated draw.
#[derive(Debug, Clone, PartialEq)]
pub enum LargeScale {
    Uniform(f64),
    PerElement(Vec<f64>),
}

/// Draws `h = √ς ⊙ R^{1/2} h̃` with `h̃ ~ CN(0, I)` from a fixed square root.
#[derive(Debug, Clone)]
pub struct CorrelatedSampler {
    root: CMatrix,
    scale: Vec<f64>,
}

impl CorrelatedSampler {
    pub fn new(r: &CMatrix, large_scale: &LargeScale) -> Result<Self> {
        let m = r.nrows();
        let scale = match large_scale {
            LargeScale::Uniform(v) => vec![*v; m],
            LargeScale::PerElement(v) => {
                if v.len() != m {
                    return Err(Error::DimensionMismatch { expected: m, got: v.len() });
                }
                v.clone()
            }
        };
        if scale.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::param("large_scale", "must be finite and non-negative"));
        }
        let root = hermitian_sqrt(r)?;
        Ok(CorrelatedSampler { root, scale: scale.into_iter().map(f64::sqrt).collect() })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        let m = self.scale.len();
        let h = CVector::from_fn(m, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        let mut out = &self.root * h;
        for (z, s) in out.iter_mut().zip(&self.scale) {
            *z *= *s;
        }
        out
    }
}

/// One correlated Rayleigh draw, reproducible for a seed.
pub fn sample_correlated_channel(r: &CMatrix, large_scale: &LargeScale, seed: u64) -> Result<CVector> {
    let sampler = CorrelatedSampler::new(r, large_scale)?;
    Ok(sampler.sample(&mut ChaCha8Rng::seed_from_u64(seed)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArrayGeometry;
    use crate::linalg::{hermitian_defect, min_eigenvalue};
    use crate::nearfield::{array_response, GainPattern, ResponseModel};
    use std::f64::consts::FRAC_PI_2;

    fn ula(m: usize) -> ArrayLayout {
        ArrayLayout::along_y(ArrayGeometry::CollocatedUla { elements: m }, 0.1).unwrap()
    }

    #[test]
    fn full_circle_uniform_has_unit_diagonal() {
        let spec = CorrelationSpec::OneRing { mean_angle: 0.3, spread: PI, spectrum: AngularSpectrum::Uniform };
        let r = spatial_correlation(&spec, &ula(6)).unwrap();
        for i in 0..6 {
            assert!((r[(i, i)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        // Full-circle uniform spectrum gives the Bessel kernel J0(π|m − n|).
        assert!((r[(0, 1)].re - (-0.304_242_177_644_093_86)).abs() < 1e-9);
    }

    #[test]
    fn one_ring_is_toeplitz_hermitian_psd() {
        for spectrum in [
            AngularSpectrum::Uniform,
            AngularSpectrum::Gaussian { std: 0.1 },
            AngularSpectrum::Laplacian { scale: 0.2 },
        ] {
            let spec = CorrelationSpec::OneRing { mean_angle: 0.4, spread: 0.3, spectrum };
            let r = spatial_correlation(&spec, &ula(16)).unwrap();
            assert!(toeplitz_defect(&r) <= 1e-9);
            assert!(hermitian_defect(&r) <= 1e-12);
            assert!(min_eigenvalue(&r) >= -1e-10);
        }
    }

    #[test]
    fn near_field_disk_is_not_toeplitz() {
        let layout = ula(16);
        let spec = CorrelationSpec::NearField {
            region: LocationSpectrum::UniformSector { r_min: 1.0, r_max: 1.5, angle_min: 1.2, angle_max: 1.6 },
        };
        let r = spatial_correlation(&spec, &layout).unwrap();
        assert!(toeplitz_defect(&r) > 1e-3);
        assert!(hermitian_defect(&r) <= 1e-12);
        assert!(min_eigenvalue(&r) >= -1e-10);
    }

    #[test]
    fn point_spectrum_matches_steering_vector() {
        let layout = ula(8);
        let spec = CorrelationSpec::NearField {
            region: LocationSpectrum::Points { points: vec![WeightedPoint { range: 2.0, angle: 1.1, weight: 1.0 }] },
        };
        let r = spatial_correlation(&spec, &layout).unwrap();
        let a = array_response(
            ResponseModel::Nusw,
            &layout,
            &SourcePoint::polar(&layout, 2.0, 1.1),
            &GainPattern::Isotropic,
        )
        .unwrap()
        .entries;
        // The integrand's positive phase convention gives conj(a) conj(a)ᴴ.
        let expected = a.map(|z| z.conj()) * a.transpose();
        assert!((r - expected).norm() < 1e-12);
    }

    #[test]
    fn masked_spec_zeroes_invisible_elements() {
        let inner = CorrelationSpec::OneRing { mean_angle: 0.0, spread: 0.5, spectrum: AngularSpectrum::Uniform };
        let spec = CorrelationSpec::VrMasked {
            inner: Box::new(inner.clone()),
            process: VrProcess::Deterministic { visible: vec![1, 2, 5] },
        };
        let layout = ula(6);
        let r = spatial_correlation(&spec, &layout).unwrap();
        let base = spatial_correlation(&inner, &layout).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let vis = |x| [1, 2, 5].contains(&x);
                let expected = if vis(i) && vis(j) { base[(i, j)] } else { C64::default() };
                assert_eq!(r[(i, j)], expected);
            }
        }
    }

    #[test]
    fn spectra_must_be_normalised() {
        let spec = CorrelationSpec::NearField {
            region: LocationSpectrum::Points { points: vec![WeightedPoint { range: 2.0, angle: 1.0, weight: 0.9 }] },
        };
        assert!(spatial_correlation(&spec, &ula(4)).is_err());
        let spec = CorrelationSpec::OneRing { mean_angle: 0.0, spread: 0.0, spectrum: AngularSpectrum::Uniform };
        assert!(spatial_correlation(&spec, &ula(4)).is_err());
    }

    #[test]
    fn identity_gives_iid_rayleigh() {
        let m = 4;
        let sampler = CorrelatedSampler::new(&CMatrix::identity(m, m), &LargeScale::Uniform(1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 10_000;
        let mut var = vec![0.0; m];
        for _ in 0..draws {
            let h = sampler.sample(&mut rng);
            for (v, z) in var.iter_mut().zip(h.iter()) {
                *v += z.norm_sqr() / draws as f64;
            }
        }
        assert!(var.iter().all(|v| (v - 1.0).abs() < 0.05), "{var:?}");
    }

    #[test]
    fn sample_covariance_converges() {
        let spec = CorrelationSpec::OneRing { mean_angle: 0.2, spread: 0.4, spectrum: AngularSpectrum::Uniform };
        let r = spatial_correlation(&spec, &ula(6)).unwrap();
        let varsigma = 2.5;
        let sampler = CorrelatedSampler::new(&r, &LargeScale::Uniform(varsigma)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 100_000;
        let mut acc = CMatrix::zeros(6, 6);
        for _ in 0..draws {
            let h = sampler.sample(&mut rng);
            acc += &h * h.adjoint();
        }
        let est = acc / C64::new(draws as f64 * varsigma, 0.0);
        assert!((est - &r).norm() / r.norm() <= 0.05);
    }

    #[test]
    fn seeded_draws_reproduce() {
        let r = CMatrix::identity(3, 3);
        let a = sample_correlated_channel(&r, &LargeScale::Uniform(1.0), 9).unwrap();
        let b = sample_correlated_channel(&r, &LargeScale::Uniform(1.0), 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let mut r = CMatrix::identity(2, 2);
        r[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(matches!(
            sample_correlated_channel(&r, &LargeScale::Uniform(1.0), 0),
            Err(Error::NotPositiveSemidefinite(_))
        ));
    }

    #[test]
    fn inverse_square_profile_matches_spherical_amplitudes() {
        let layout = ula(32);
        let s = SourcePoint::polar(&layout, 0.8, FRAC_PI_2 - 0.4);
        let profile = large_scale_profile(&layout, &s, 1.0, -2.0);
        let a = array_response(ResponseModel::Nusw, &layout, &s, &GainPattern::Isotropic).unwrap();
        for m in 1..32 {
            let ratio = profile[m] / profile[0];
            let amp = (a[m].norm() / a[0].norm()).powi(2);
            assert!((ratio - amp).abs() < 1e-12);
        }
    }
}
