//! Far-field DFT and near-field polar-domain codebooks.
//!
//! Spatial angles `ϑ` follow [`SourcePoint::spatial`]: the cosine between the
//! array axis and the direction towards the source. Codewords are unit norm
//! with their first entry real and positive.

mod fresnel;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use fresnel::*;

use crate::geometry::{ArrayGeometry, ArrayLayout};
use crate::metrics::beam_focusing_gain;
use crate::nearfield::{array_response, reactive_boundary, GainPattern, ResponseModel, SourcePoint};
use crate::{CVector, Error, Result, C64};

/// Where a codeword points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodewordTag {
    pub angle_index: usize,
    /// Ring index; 0 is the far-field codeword.
    pub ring: usize,
    pub spatial_angle: f64,
    /// `None` for the far-field codeword.
    pub range: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    codewords: Vec<CVector>,
    tags: Vec<CodewordTag>,
    angles: usize,
    /// Correlation target and the derived threshold distance, for polar codebooks.
    pub delta: Option<f64>,
    pub threshold_distance: Option<f64>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codeword(&self, i: usize) -> &CVector {
        &self.codewords[i]
    }

    pub fn codewords(&self) -> &[CVector] {
        &self.codewords
    }

    pub fn tag(&self, i: usize) -> &CodewordTag {
        &self.tags[i]
    }

    pub fn tags(&self) -> &[CodewordTag] {
        &self.tags
    }

    /// Number of sampled angles.
    pub fn angles(&self) -> usize {
        self.angles
    }

    /// Largest number of codewords sharing one angle.
    pub fn max_rings(&self) -> usize {
        let mut counts = vec![0usize; self.angles];
        for t in &self.tags {
            counts[t.angle_index] += 1;
        }
        counts.into_iter().max().unwrap_or(0)
    }

    /// Codeword indices for angle `n`, in ring order.
    pub fn indices_for_angle(&self, n: usize) -> Vec<usize> {
        self.tags.iter().enumerate().filter(|(_, t)| t.angle_index == n).map(|(i, _)| i).collect()
    }

    /// Index of the codeword at `(angle, ring)`.
    pub fn find(&self, angle_index: usize, ring: usize) -> Option<usize> {
        self.tags.iter().position(|t| t.angle_index == angle_index && t.ring == ring)
    }

    /// Writes `angle_index, ring, direction, range` and interleaved `re, im` entries, one row
    /// per codeword. Far-field rows carry `inf` as the distance.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.codewords.first().map_or(0, |c| c.len());
        let mut header = vec!["angle_index".to_string(), "ring".into(), "direction".into(), "range".into()];
        for m in 0..n {
            header.push(format!("re{m}"));
            header.push(format!("im{m}"));
        }
        writeln!(out, "{}", header.join(","))?;
        for (w, t) in self.codewords.iter().zip(&self.tags) {
            let mut row = vec![
                t.angle_index.to_string(),
                t.ring.to_string(),
                t.spatial_angle.to_string(),
                t.range.map_or("inf".to_string(), |r| r.to_string()),
            ];
            for z in w.iter() {
                row.push(z.re.to_string());
                row.push(z.im.to_string());
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Spatial angle `(2n − N + 1)/N` of DFT codeword `n`.
pub fn dft_angle(n: usize, size: usize) -> f64 {
    (2.0 * n as f64 - size as f64 + 1.0) / size as f64
}

/// `(1/√N) [1, e^{jπϑ}, …, e^{jπ(N−1)ϑ}]`.
pub fn dft_codeword(size: usize, direction: f64) -> CVector {
    let scale = (size as f64).sqrt().recip();
    CVector::from_fn(size, |m, _| C64::from_polar(scale, std::f64::consts::PI * m as f64 * direction))
}

/// `N` orthogonal far-field codewords at spatial angles `(2n − N + 1)/N`.
pub fn dft_codebook(size: usize) -> Result<Codebook> {
    if size == 0 {
        return Err(Error::param("size", "need at least one codeword"));
    }
    let mut codewords = Vec::with_capacity(size);
    let mut tags = Vec::with_capacity(size);
    for n in 0..size {
        let theta = dft_angle(n, size);
        codewords.push(dft_codeword(size, theta));
        tags.push(CodewordTag { angle_index: n, ring: 0, spatial_angle: theta, range: None });
    }
    Ok(Codebook { codewords, tags, angles: size, delta: None, threshold_distance: None })
}

/// Correlation `|a_pᴴ a_q| / (‖a_p‖ ‖a_q‖)`.
pub fn codeword_correlation(a: &CVector, b: &CVector) -> f64 {
    beam_focusing_gain(a, b)
}

/// Unit-norm spherical-wave codeword of `layout` at `(ϑ, r)`, re-phased so
/// entry 0 is real and positive. `None` gives the plane-wave limit.
pub fn polar_codeword(layout: &ArrayLayout, direction: f64, range: Option<f64>) -> Result<CVector> {
    let a = match range {
        Some(r) => {
            let s = SourcePoint::spatial(layout, r, direction);
            array_response(ResponseModel::Usw, layout, &s, &GainPattern::Isotropic)?.entries
        }
        None => {
            let k = 2.0 * std::f64::consts::PI / layout.wavelength();
            let x = layout.axial_coordinates();
            CVector::from_fn(x.len(), |m, _| C64::from_polar(1.0, k * x[m] * direction))
        }
    };
    Ok(normalise(a))
}

fn normalise(a: CVector) -> CVector {
    let phase = if a.is_empty() || a[0].norm() == 0.0 { C64::new(1.0, 0.0) } else { a[0].conj() / a[0].norm() };
    let n = a.norm();
    a.map(|z| z * phase / n)
}

/// How distances are sampled along each angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistanceSampling {
    /// Rings `r = Z_Δ (1 − ϑ²) / s` for `s = 0, 1, 2, …`.
    NonUniform,
    /// The far-field codeword followed by the listed distances for every angle.
    Uniform { ranges: Vec<f64> },
}

/// Parameters of a polar-domain codebook.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarSpec {
    /// Correlation bound between adjacent rings, in `(0, 1)`.
    pub delta: f64,
    /// Maximum codewords per angle, counting the far-field one.
    #[serde(default)]
    pub max_rings: Option<usize>,
    /// Rings closer than this are dropped; must lie outside the reactive region.
    #[serde(default)]
    pub min_distance: Option<f64>,
    pub sampling: DistanceSampling,
}

impl PolarSpec {
    /// `delta` with six rings per angle, the usual example setting.
    pub fn non_uniform(delta: f64) -> Self {
        PolarSpec { delta, max_rings: Some(6), min_distance: None, sampling: DistanceSampling::NonUniform }
    }
}

/// Threshold distance `Z_Δ = D² / (2 λ Λ_Δ²)`.
pub fn threshold_distance(aperture: f64, wavelength: f64, lambda_delta: f64) -> f64 {
    aperture * aperture / (2.0 * wavelength * lambda_delta * lambda_delta)
}

/// Ring distance `Z (1 − ϑ²) / s`; `None` (far field) for `s = 0`.
pub fn ring_distance(threshold: f64, direction: f64, ring: usize) -> Option<f64> {
    (ring > 0).then(|| threshold * (1.0 - direction * direction) / ring as f64)
}

/// Polar-domain codebook for a collocated half-wavelength line.
///
/// Angles are those of [`dft_codebook`] with `N` the element count, and the
/// codewords are exact spherical-wave steering vectors.
pub fn polar_codebook(layout: &ArrayLayout, spec: &PolarSpec) -> Result<Codebook> {
    let size = match layout.geometry() {
        ArrayGeometry::CollocatedUla { elements } => *elements,
        _ => return Err(Error::param("layout", "polar codebooks are built for collocated linear arrays")),
    };
    let lambda = layout.wavelength();
    let aperture = layout.physical_dimension();
    let lambda_delta = solve_lambda(spec.delta)?;
    let z = threshold_distance(aperture, lambda, lambda_delta);
    if spec.max_rings.is_none() && spec.min_distance.is_none() && matches!(spec.sampling, DistanceSampling::NonUniform)
    {
        return Err(Error::param("max_rings", "set max_rings or min_distance to bound the ring sequence"));
    }
    if spec.max_rings == Some(0) {
        return Err(Error::param("max_rings", "must be at least 1"));
    }
    if let Some(r_min) = spec.min_distance {
        let reactive = reactive_boundary(aperture, lambda);
        if !(r_min >= reactive) {
            return Err(Error::param(
                "min_distance",
                format!("{r_min} m lies inside the reactive region (boundary {reactive:.4} m)"),
            ));
        }
    }
    if let DistanceSampling::Uniform { ranges } = &spec.sampling {
        if ranges.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::param("ranges", "distances must be positive and finite"));
        }
    }
    let cap = spec.max_rings.unwrap_or(usize::MAX);
    let r_min = spec.min_distance.unwrap_or(0.0);

    let mut codewords = Vec::new();
    let mut tags = Vec::new();
    for n in 0..size {
        let theta = dft_angle(n, size);
        let mut push = |ring: usize, range: Option<f64>| -> Result<()> {
            codewords.push(match range {
                None => dft_codeword(size, theta),
                Some(_) => polar_codeword(layout, theta, range)?,
            });
            tags.push(CodewordTag { angle_index: n, ring, spatial_angle: theta, range });
            Ok(())
        };
        push(0, None)?;
        match &spec.sampling {
            DistanceSampling::NonUniform => {
                let mut s = 1;
                while s < cap {
                    let r = ring_distance(z, theta, s).expect("ring index is positive");
                    if r < r_min {
                        break;
                    }
                    push(s, Some(r))?;
                    s += 1;
                }
            }
            DistanceSampling::Uniform { ranges } => {
                for (i, &r) in ranges.iter().enumerate() {
                    if i + 1 >= cap || r < r_min {
                        break;
                    }
                    push(i + 1, Some(r))?;
                }
            }
        }
    }
    Ok(Codebook { codewords, tags, angles: size, delta: Some(spec.delta), threshold_distance: Some(z) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ula(n: usize, lambda: f64) -> ArrayLayout {
        ArrayLayout::along_y(ArrayGeometry::CollocatedUla { elements: n }, lambda).unwrap()
    }

    #[test]
    fn dft_basics() {
        let one = dft_codebook(1).unwrap();
        assert_eq!(one.codeword(0).as_slice(), &[C64::new(1.0, 0.0)]);
        let cb = dft_codebook(64).unwrap();
        for p in 0..64 {
            assert!((cb.codeword(p).norm() - 1.0).abs() < 1e-12);
            for q in 0..p {
                assert!(cb.codeword(p).dotc(cb.codeword(q)).norm() <= 1e-12);
            }
        }
        let big = dft_codebook(512).unwrap();
        assert_eq!(big.len(), 512);
        assert!((big.tag(0).spatial_angle + 511.0 / 512.0).abs() < 1e-15);
        assert!((big.tag(511).spatial_angle - 511.0 / 512.0).abs() < 1e-15);
    }

    #[test]
    fn threshold_distance_example() {
        let z = threshold_distance(1.0, 0.01, 1.6);
        assert!((z - 19.53).abs() < 0.01);
        let rings: Vec<f64> = (1..4).map(|s| ring_distance(z, 0.0, s).unwrap()).collect();
        assert!((rings[0] - 19.53).abs() < 0.01 && (rings[1] - 9.77).abs() < 0.01 && (rings[2] - 6.51).abs() < 0.01);
        assert!(ring_distance(z, 0.3, 0).is_none());
    }

    #[test]
    fn far_field_codewords_are_dft() {
        let layout = ula(32, 0.01);
        let cb = polar_codebook(&layout, &PolarSpec::non_uniform(0.5)).unwrap();
        let dft = dft_codebook(32).unwrap();
        for n in 0..32 {
            let i = cb.find(n, 0).unwrap();
            assert!((cb.codeword(i) - dft.codeword(n)).norm() < 1e-12);
            // The spherical codeword at a huge range converges to the same vector.
            let far = polar_codeword(&layout, dft_angle(n, 32), Some(1e6)).unwrap();
            assert!((far - dft.codeword(n)).norm() < 1e-4);
        }
        assert_eq!(cb.len(), 32 * 6);
    }

    #[test]
    fn rings_follow_the_sampling_rule() {
        let layout = ula(64, 0.01);
        let cb = polar_codebook(&layout, &PolarSpec::non_uniform(0.5)).unwrap();
        let z = cb.threshold_distance.unwrap();
        for t in cb.tags() {
            assert_eq!(t.range, ring_distance(z, t.spatial_angle, t.ring));
        }
        let idx = cb.indices_for_angle(10);
        let r: Vec<f64> = idx[1..].iter().map(|&i| cb.tag(i).range.unwrap()).collect();
        for w in r.windows(3) {
            assert!(w[0] - w[1] > w[1] - w[2]);
        }
    }

    #[test]
    fn adjacent_rings_are_weakly_correlated() {
        let layout = ula(256, 0.01);
        let reactive = reactive_boundary(layout.physical_dimension(), 0.01);
        let spec = PolarSpec { min_distance: Some(reactive), ..PolarSpec::non_uniform(0.5) };
        let cb = polar_codebook(&layout, &spec).unwrap();
        for n in 0..256 {
            let idx = cb.indices_for_angle(n);
            for w in idx.windows(2) {
                let c = codeword_correlation(cb.codeword(w[0]), cb.codeword(w[1]));
                assert!(c <= 0.6, "angle {n}: {c}");
            }
        }
    }

    #[test]
    fn min_distance_limits_rings() {
        let layout = ula(64, 0.01);
        let spec =
            PolarSpec { delta: 0.5, max_rings: None, min_distance: Some(2.0), sampling: DistanceSampling::NonUniform };
        let cb = polar_codebook(&layout, &spec).unwrap();
        assert!(cb.tags().iter().all(|t| t.range.is_none_or(|r| r >= 2.0)));
        let inside = PolarSpec { min_distance: Some(0.01), ..spec };
        assert!(polar_codebook(&layout, &inside).is_err());
    }

    #[test]
    fn csv_export_layout() {
        let cb = dft_codebook(2).unwrap();
        let mut buf = Vec::new();
        cb.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "angle_index,ring,direction,range,re0,im0,re1,im1");
        assert!(lines.next().unwrap().starts_with("0,0,-0.5,inf,"));
    }
}
