//! Narrowband beam training over DFT and polar-domain codebooks.
//!
//! Every method talks to the channel only through a [`Sounder`], which
//! counts pilot symbols; the reported overhead is that count.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codebook::{dft_angle, polar_codeword, ring_distance, Codebook};
use crate::geometry::{ArrayGeometry, ArrayLayout};
use crate::metrics::beam_focusing_gain;
use crate::{from_db, CVector, Error, Result, C64};

/// Default dominant-region threshold below the phase-1 peak, in dB.
pub const DEFAULT_REGION_DB: f64 = 3.0;

/// Received pilot power `|hᴴw √P̄ + z|²` with unit noise power.
///
/// `noise = None` is the noiseless measurement.
pub fn measure<R: Rng + ?Sized>(h: &CVector, w: &CVector, transmit_snr: f64, noise: Option<&mut R>) -> f64 {
    let mut y = h.dotc(w) * transmit_snr.sqrt();
    if let Some(rng) = noise {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        y += C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
    }
    y.norm_sqr()
}

/// Channel access for one training episode.
pub struct Sounder<'a> {
    h: &'a CVector,
    transmit_snr: f64,
    rng: Option<ChaCha8Rng>,
    used: usize,
}

impl<'a> Sounder<'a> {
    pub fn noiseless(h: &'a CVector, transmit_snr: f64) -> Self {
        Sounder { h, transmit_snr, rng: None, used: 0 }
    }

    pub fn noisy(h: &'a CVector, transmit_snr: f64, seed: u64) -> Self {
        Sounder { h, transmit_snr, rng: Some(ChaCha8Rng::seed_from_u64(seed)), used: 0 }
    }

    pub fn channel(&self) -> &CVector {
        self.h
    }

    pub fn transmit_snr(&self) -> f64 {
        self.transmit_snr
    }

    /// One pilot symbol through beam `w`.
    pub fn probe(&mut self, w: &CVector) -> f64 {
        self.used += 1;
        measure(self.h, w, self.transmit_snr, self.rng.as_mut())
    }

    /// Pilot symbols spent so far.
    pub fn used(&self) -> usize {
        self.used
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingOutcome {
    /// Index into the polar codebook.
    pub chosen: usize,
    pub overhead: usize,
    /// `beam_focusing_gain` of the chosen codeword at the true channel.
    pub achieved_gain: f64,
    /// Whether `chosen` equals the noiseless exhaustive winner.
    pub success: bool,
}

/// Noiseless exhaustive winner: largest `|wᴴh|`, lowest index on ties.
pub fn oracle_index(codebook: &Codebook, h: &CVector) -> usize {
    argmax(codebook.codewords().iter().map(|w| h.dotc(w).norm_sqr()))
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

fn outcome(codebook: &Codebook, chosen: usize, sounder: &Sounder) -> TrainingOutcome {
    let h = sounder.channel();
    TrainingOutcome {
        chosen,
        overhead: sounder.used(),
        achieved_gain: beam_focusing_gain(codebook.codeword(chosen), h),
        success: chosen == oracle_index(codebook, h),
    }
}

fn require_nonempty(codebook: &Codebook, name: &'static str) -> Result<()> {
    if codebook.is_empty() {
        return Err(Error::param(name, "codebook is empty"));
    }
    Ok(())
}

/// Sweeps every codeword; overhead is the codebook size.
pub fn exhaustive(codebook: &Codebook, sounder: &mut Sounder) -> Result<TrainingOutcome> {
    require_nonempty(codebook, "codebook")?;
    let powers: Vec<f64> = codebook.codewords().iter().map(|w| sounder.probe(w)).collect();
    let chosen = argmax(powers.into_iter());
    Ok(outcome(codebook, chosen, sounder))
}

/// Span of DFT indices, on the sorted angle axis, from the first to the last
/// beam within `threshold_db` of the peak.
///
/// Near-field users spread power over a flat-topped band with ripples deeper
/// than 3 dB, so the span is taken rather than the run around the peak.
pub fn dominant_region(powers: &[f64], threshold_db: f64) -> Result<(usize, usize)> {
    let peak = powers.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::ZeroInput("no beam received any power"));
    }
    let floor = peak * from_db(-threshold_db);
    let lo = powers.iter().position(|&p| p >= floor).expect("peak is above the floor");
    let hi = powers.iter().rposition(|&p| p >= floor).expect("peak is above the floor");
    Ok((lo, hi))
}

/// `k` candidate angles centred on position `⌈L/2⌉` of the region
/// `[lo, hi]`, shifted to fit inside `0..size`.
pub fn middle_k(region: (usize, usize), k: usize, size: usize) -> Vec<usize> {
    let k = k.min(size);
    let len = region.1 - region.0 + 1;
    let centre = region.0 + len.div_ceil(2) - 1;
    let start = centre.saturating_sub(k / 2).min(size - k);
    (start..start + k).collect()
}

/// Phase 1 sweeps the DFT beams, phase 2 sweeps the rings of the `k`
/// middle angles of the dominant region. Overhead `N + K·S`.
pub fn two_phase(
    dft: &Codebook,
    polar: &Codebook,
    sounder: &mut Sounder,
    k: usize,
    threshold_db: f64,
) -> Result<TrainingOutcome> {
    require_nonempty(dft, "dft")?;
    require_nonempty(polar, "polar")?;
    if k == 0 {
        return Err(Error::param("k", "need at least one candidate angle"));
    }
    if !(threshold_db >= 0.0) {
        return Err(Error::param("region_threshold_db", format!("must be non-negative, got {threshold_db}")));
    }
    if polar.angles() != dft.len() {
        return Err(Error::DimensionMismatch { expected: dft.len(), got: polar.angles() });
    }
    let powers: Vec<f64> = dft.codewords().iter().map(|w| sounder.probe(w)).collect();
    let region = dominant_region(&powers, threshold_db)?;
    let mut best = (0, f64::NEG_INFINITY);
    let mut candidates: Vec<usize> =
        middle_k(region, k, dft.len()).into_iter().flat_map(|n| polar.indices_for_angle(n)).collect();
    candidates.sort_unstable();
    for i in candidates {
        let p = sounder.probe(polar.codeword(i));
        if p > best.1 {
            best = (i, p);
        }
    }
    Ok(outcome(polar, best.0, sounder))
}

fn masked(mut w: CVector, active: std::ops::Range<usize>) -> CVector {
    for (m, z) in w.iter_mut().enumerate() {
        if !active.contains(&m) {
            *z = C64::new(0.0, 0.0);
        }
    }
    let n = w.norm();
    w / C64::new(n, 0.0)
}

fn central(size: usize, active: usize) -> std::ops::Range<usize> {
    let start = (size - active) / 2;
    start..start + active
}

fn log2_exact(x: usize, name: &'static str) -> Result<u32> {
    if x == 0 || !x.is_power_of_two() {
        return Err(Error::param(name, format!("must be a power of two, got {x}")));
    }
    Ok(x.trailing_zeros())
}

/// Two-stage hierarchical search.
///
/// Stage 1 bisects the spatial angle with far-field beams from the central
/// `subarray` elements, doubling the active aperture at each level (two
/// probes per level). Stage 2 keeps doubling up to the full array and, at
/// each level, probes the four combinations of angle half and ring-index
/// half with spherical-wave beams (four probes per level). The result is
/// the polar codeword nearest the final estimate; with no stage 2 the
/// distance is unresolved and the far-field codeword is taken.
pub fn hierarchical_two_stage(
    layout: &ArrayLayout,
    polar: &Codebook,
    sounder: &mut Sounder,
    subarray: usize,
) -> Result<TrainingOutcome> {
    require_nonempty(polar, "polar")?;
    let size = match layout.geometry() {
        ArrayGeometry::CollocatedUla { elements } => *elements,
        _ => return Err(Error::param("layout", "hierarchical training needs a collocated linear array")),
    };
    let full_levels = log2_exact(size, "elements")?;
    let coarse_levels = log2_exact(subarray, "subarray")?;
    if subarray > size {
        return Err(Error::param("subarray", format!("{subarray} exceeds the array size {size}")));
    }
    if polar.angles() != size || sounder.channel().len() != size {
        return Err(Error::DimensionMismatch { expected: size, got: polar.angles().min(sounder.channel().len()) });
    }
    let threshold =
        polar.threshold_distance.ok_or_else(|| Error::param("polar", "codebook carries no threshold distance"))?;
    let rings = polar.max_rings();

    let (mut lo, mut hi) = (-1.0, 1.0);
    for level in 1..=coarse_levels {
        let active = central(size, 1 << level);
        let mid = 0.5 * (lo + hi);
        let left = sounder.probe(&masked(polar_codeword(layout, 0.5 * (lo + mid), None)?, active.clone()));
        let right = sounder.probe(&masked(polar_codeword(layout, 0.5 * (mid + hi), None)?, active));
        if right > left {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let (mut s_lo, mut s_hi) = (-0.5, rings as f64 - 0.5);
    for level in 1..=(full_levels - coarse_levels) {
        let active = central(size, subarray << level);
        let mid = 0.5 * (lo + hi);
        let s_mid = 0.5 * (s_lo + s_hi);
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, (a_lo, a_hi, r_lo, r_hi)) in
            [(lo, mid, s_lo, s_mid), (lo, mid, s_mid, s_hi), (mid, hi, s_lo, s_mid), (mid, hi, s_mid, s_hi)]
                .into_iter()
                .enumerate()
        {
            let theta = 0.5 * (a_lo + a_hi);
            let ring = (0.5 * (r_lo + r_hi)).max(0.0);
            let range = (ring > 0.0).then(|| threshold * (1.0 - theta * theta) / ring);
            let p = sounder.probe(&masked(polar_codeword(layout, theta, range)?, active.clone()));
            if p > best.1 {
                best = (i, p);
            }
        }
        if best.0 < 2 {
            hi = mid;
        } else {
            lo = mid;
        }
        if best.0 % 2 == 0 {
            s_hi = s_mid;
        } else {
            s_lo = s_mid;
        }
    }

    let theta = 0.5 * (lo + hi);
    let n = ((theta * size as f64 + size as f64 - 1.0) / 2.0).round().clamp(0.0, (size - 1) as f64) as usize;
    let ring = if full_levels == coarse_levels {
        0
    } else {
        (0.5 * (s_lo + s_hi)).round().clamp(0.0, (rings - 1) as f64) as usize
    };
    let chosen = nearest_entry(polar, n, ring);
    Ok(outcome(polar, chosen, sounder))
}

// Angles built with a range floor may have fewer rings than requested.
fn nearest_entry(polar: &Codebook, n: usize, ring: usize) -> usize {
    let entries = polar.indices_for_angle(n);
    polar.find(n, ring).unwrap_or_else(|| *entries.last().expect("every angle has a far-field codeword"))
}

/// Beam-training overheads in pilot symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverheadTable {
    pub exhaustive: usize,
    pub two_phase: usize,
    pub dft_joint: usize,
    pub hierarchical: usize,
    pub deep_learning: usize,
    pub ff_exhaustive: usize,
    pub ff_hierarchical: usize,
    pub rainbow: usize,
}

impl OverheadTable {
    pub const FIELDS: [&'static str; 8] = [
        "exhaustive",
        "two_phase",
        "dft_joint",
        "hierarchical",
        "deep_learning",
        "ff_exhaustive",
        "ff_hierarchical",
        "rainbow",
    ];

    pub fn values(&self) -> [usize; 8] {
        [
            self.exhaustive,
            self.two_phase,
            self.dft_joint,
            self.hierarchical,
            self.deep_learning,
            self.ff_exhaustive,
            self.ff_hierarchical,
            self.rainbow,
        ]
    }
}

fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

/// Overheads for `elements` angles, `rings` per angle, `candidates` kept
/// after a DFT sweep, a `subarray`-element first stage and `compression`
/// beams folded into one by a learned predictor. Logarithms and `N/T` round
/// up for sizes that are not powers of two.
pub fn overhead_table(
    elements: usize,
    rings: usize,
    candidates: usize,
    subarray: usize,
    compression: usize,
) -> Result<OverheadTable> {
    for (name, v) in [
        ("elements", elements),
        ("rings", rings),
        ("candidates", candidates),
        ("subarray", subarray),
        ("compression", compression),
    ] {
        if v == 0 {
            return Err(Error::param(name, "must be a positive integer"));
        }
    }
    if subarray > elements {
        return Err(Error::param("subarray", format!("{subarray} exceeds {elements} elements")));
    }
    Ok(OverheadTable {
        exhaustive: elements * rings,
        two_phase: elements + candidates * rings,
        dft_joint: elements + candidates,
        hierarchical: 2 * ceil_log2(subarray) + 4 * ceil_log2(elements.div_ceil(subarray)),
        deep_learning: elements.div_ceil(compression) + rings,
        ff_exhaustive: elements,
        ff_hierarchical: 2 * ceil_log2(elements),
        rainbow: rings,
    })
}

/// A training procedure and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrainingMethod {
    Exhaustive,
    TwoPhase {
        candidates: usize,
        #[serde(default = "default_region_db")]
        region_threshold_db: f64,
    },
    Hierarchical {
        subarray: usize,
    },
}

fn default_region_db() -> f64 {
    DEFAULT_REGION_DB
}

impl TrainingMethod {
    pub fn name(&self) -> &'static str {
        match self {
            TrainingMethod::Exhaustive => "exhaustive",
            TrainingMethod::TwoPhase { .. } => "two_phase",
            TrainingMethod::Hierarchical { .. } => "hierarchical",
        }
    }
}

/// Array and codebooks shared by all episodes.
#[derive(Debug, Clone)]
pub struct TrainingSetup {
    pub layout: ArrayLayout,
    pub dft: Codebook,
    pub polar: Codebook,
}

impl TrainingSetup {
    pub fn run(&self, method: &TrainingMethod, sounder: &mut Sounder) -> Result<TrainingOutcome> {
        match *method {
            TrainingMethod::Exhaustive => exhaustive(&self.polar, sounder),
            TrainingMethod::TwoPhase { candidates, region_threshold_db } => {
                two_phase(&self.dft, &self.polar, sounder, candidates, region_threshold_db)
            }
            TrainingMethod::Hierarchical { subarray } => {
                hierarchical_two_stage(&self.layout, &self.polar, sounder, subarray)
            }
        }
    }
}

/// Spatial angle and range of polar codebook grid point `(n, ring)`.
pub fn grid_point(polar: &Codebook, n: usize, ring: usize) -> Option<(f64, Option<f64>)> {
    let threshold = polar.threshold_distance?;
    let theta = dft_angle(n, polar.angles());
    Some((theta, ring_distance(threshold, theta, ring)))
}

/// One training episode as written to CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub method: String,
    pub seed: u64,
    pub overhead: usize,
    pub success: bool,
    pub achieved_gain: f64,
    /// Rate with the chosen beam over the rate with perfect-CSI matched filtering.
    pub rate_ratio: f64,
}

impl EpisodeRecord {
    pub const HEADER: &'static str = "method,seed,overhead,success,achieved_gain,rate_ratio";

    pub fn new(method: &TrainingMethod, seed: u64, outcome: &TrainingOutcome, h: &CVector, transmit_snr: f64) -> Self {
        let ideal = (1.0 + transmit_snr * h.norm_squared()).log2();
        let got = (1.0 + transmit_snr * h.norm_squared() * outcome.achieved_gain.powi(2)).log2();
        EpisodeRecord {
            method: method.name().to_string(),
            seed,
            overhead: outcome.overhead,
            success: outcome.success,
            achieved_gain: outcome.achieved_gain,
            rate_ratio: if ideal > 0.0 { got / ideal } else { 0.0 },
        }
    }
}

pub fn write_episodes_csv<W: Write>(records: &[EpisodeRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", EpisodeRecord::HEADER)?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.method, r.seed, r.overhead, r.success as u8, r.achieved_gain, r.rate_ratio
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{dft_codebook, polar_codebook, PolarSpec};
    use crate::nearfield::{array_response, GainPattern, ResponseModel, SourcePoint};

    fn setup(n: usize) -> TrainingSetup {
        let layout = ArrayLayout::along_y(ArrayGeometry::CollocatedUla { elements: n }, 0.01).unwrap();
        let polar = polar_codebook(&layout, &PolarSpec::non_uniform(0.5)).unwrap();
        TrainingSetup { dft: dft_codebook(n).unwrap(), polar, layout }
    }

    fn channel_at(setup: &TrainingSetup, n: usize, ring: usize) -> CVector {
        match grid_point(&setup.polar, n, ring).unwrap() {
            (theta, None) => crate::codebook::dft_codeword(setup.layout.num_elements(), theta),
            (theta, Some(r)) => {
                let s = SourcePoint::spatial(&setup.layout, r, theta);
                array_response(ResponseModel::Usw, &setup.layout, &s, &GainPattern::Isotropic).unwrap().entries
            }
        }
    }

    #[test]
    fn measurement_basics() {
        let h = CVector::from_vec(vec![C64::new(1.0, 0.5), C64::new(-0.3, 0.2)]);
        let w = &h / C64::new(h.norm(), 0.0);
        let p = measure::<ChaCha8Rng>(&h, &w, 4.0, None);
        assert!((p - 4.0 * h.norm_squared()).abs() < 1e-12);
        let perp = CVector::from_vec(vec![-h[1].conj(), h[0].conj()]);
        assert!(measure::<ChaCha8Rng>(&h, &perp, 4.0, None) < 1e-24);
        let a = Sounder::noisy(&h, 4.0, 9).probe(&w);
        let b = Sounder::noisy(&h, 4.0, 9).probe(&w);
        assert_eq!(a, b);
    }

    #[test]
    fn table_example() {
        let t = overhead_table(512, 6, 3, 128, 4).unwrap();
        assert_eq!(t.values(), [3072, 530, 515, 22, 134, 512, 18, 6]);
        assert_eq!(overhead_table(1, 1, 1, 1, 1).unwrap().ff_hierarchical, 0);
        assert!(overhead_table(0, 6, 3, 1, 4).is_err());
    }

    #[test]
    fn region_spans_dips() {
        let p = [0.01, 0.6, 1.0, 0.3, 0.7, 0.9, 0.02];
        assert_eq!(dominant_region(&p, 3.0).unwrap(), (1, 5));
        assert!(dominant_region(&[0.0; 4], 3.0).is_err());
    }

    #[test]
    fn middle_k_rule() {
        assert_eq!(middle_k((10, 14), 3, 64), vec![11, 12, 13]);
        assert_eq!(middle_k((10, 13), 2, 64), vec![10, 11]);
        assert_eq!(middle_k((0, 0), 3, 64), vec![0, 1, 2]);
        assert_eq!(middle_k((63, 63), 3, 64), vec![61, 62, 63]);
    }

    #[test]
    fn exhaustive_finds_grid_point() {
        let s = setup(64);
        for (n, ring) in [(10, 0), (20, 2), (40, 5)] {
            let h = channel_at(&s, n, ring);
            let mut sounder = Sounder::noiseless(&h, 1.0);
            let out = exhaustive(&s.polar, &mut sounder).unwrap();
            assert_eq!(out.overhead, s.polar.len());
            assert_eq!(s.polar.tag(out.chosen).angle_index, n);
            assert_eq!(s.polar.tag(out.chosen).ring, ring);
            assert!(out.success);
        }
    }

    #[test]
    fn ties_go_to_the_lowest_index() {
        assert_eq!(argmax([1.0, 3.0, 3.0, 2.0].into_iter()), 1);
    }

    #[test]
    fn two_phase_far_field() {
        let s = setup(64);
        let h = channel_at(&s, 23, 0);
        let mut sounder = Sounder::noiseless(&h, 1.0);
        let out = two_phase(&s.dft, &s.polar, &mut sounder, 3, DEFAULT_REGION_DB).unwrap();
        assert_eq!(out.overhead, 64 + 3 * 6);
        assert_eq!(*s.polar.tag(out.chosen), *s.polar.tag(s.polar.find(23, 0).unwrap()));
        assert!(out.success);
    }

    #[test]
    fn hierarchical_far_field_full_subarray() {
        let s = setup(64);
        for n in 0..64 {
            let h = channel_at(&s, n, 0);
            let mut sounder = Sounder::noiseless(&h, 1.0);
            let out = hierarchical_two_stage(&s.layout, &s.polar, &mut sounder, 64).unwrap();
            assert_eq!(out.overhead, 12);
            assert!(out.success, "angle {n}");
        }
    }

    #[test]
    fn hierarchical_overhead_and_sizes() {
        let s = setup(64);
        let h = channel_at(&s, 30, 3);
        let mut sounder = Sounder::noiseless(&h, 1.0);
        let out = hierarchical_two_stage(&s.layout, &s.polar, &mut sounder, 16).unwrap();
        assert_eq!(out.overhead, 2 * 4 + 4 * 2);
        let mut sounder = Sounder::noiseless(&h, 1.0);
        assert!(hierarchical_two_stage(&s.layout, &s.polar, &mut sounder, 12).is_err());
    }

    #[test]
    fn episode_csv() {
        let s = setup(16);
        let h = channel_at(&s, 3, 1);
        let mut sounder = Sounder::noiseless(&h, 10.0);
        let m = TrainingMethod::Exhaustive;
        let out = s.run(&m, &mut sounder).unwrap();
        let rec = EpisodeRecord::new(&m, 7, &out, &h, 10.0);
        assert!(rec.rate_ratio > 0.0 && rec.rate_ratio <= 1.0 + 1e-12);
        let mut buf = Vec::new();
        write_episodes_csv(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("method,seed,overhead,success,achieved_gain,rate_ratio\nexhaustive,7,"));
    }
}
