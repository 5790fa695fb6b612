//! Single-carrier delay alignment modulation.
//!
//! Each resolvable path `l` has a transmit-side channel vector `h_l` and an
//! integer delay `n_l`. The transmitter sends `x[n] = Σ_l f_l s[n − κ_l]`
//! with `κ_l = n_max − n_l`, so every path's own beam arrives at lag
//! `n_max`; what remains at other lags is inter-symbol interference.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::BistaticPath;
use crate::linalg::orthogonal_complement;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Resolvable paths with integer sample delays.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathTaps {
    vectors: Vec<CVector>,
    delays: Vec<usize>,
}

impl MultipathTaps {
    pub fn new(vectors: Vec<CVector>, delays: Vec<usize>) -> Result<Self> {
        let first = vectors.first().ok_or(Error::ZeroInput("no paths"))?;
        if delays.len() != vectors.len() {
            return Err(Error::DimensionMismatch { expected: vectors.len(), got: delays.len() });
        }
        let m = first.len();
        if m == 0 {
            return Err(Error::param("vectors", "paths need at least one antenna"));
        }
        if let Some(h) = vectors.iter().find(|h| h.len() != m) {
            return Err(Error::DimensionMismatch { expected: m, got: h.len() });
        }
        let mut sorted = delays.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("delays", "delays must be distinct"));
        }
        Ok(MultipathTaps { vectors, delays })
    }

    /// Delays given in samples as reals; anything not an integer is rejected.
    pub fn with_sample_delays(vectors: Vec<CVector>, delays: &[f64]) -> Result<Self> {
        let mut ints = Vec::with_capacity(delays.len());
        for &d in delays {
            if !(d >= 0.0 && d.is_finite() && d.fract() == 0.0) {
                return Err(Error::param("delays", format!("{d} is not a non-negative integer sample delay")));
            }
            ints.push(d as usize);
        }
        Self::new(vectors, ints)
    }

    pub fn paths(&self) -> usize {
        self.vectors.len()
    }

    pub fn antennas(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    pub fn delays(&self) -> &[usize] {
        &self.delays
    }

    pub fn max_delay(&self) -> usize {
        *self.delays.iter().max().expect("at least one path")
    }

    /// The same paths with every delay shifted by `shift` samples.
    pub fn delayed(&self, shift: usize) -> Self {
        MultipathTaps { vectors: self.vectors.clone(), delays: self.delays.iter().map(|d| d + shift).collect() }
    }
}

/// Taps from bistatic paths towards a single-antenna receiver.
///
/// Each path matrix must be `1 × M`; its row is `h_lᴴ`. Delays are
/// `round(τ / T_s)` relative to the earliest path, and paths landing in the
/// same sample are summed into one tap.
pub fn taps_from_paths(paths: &[BistaticPath], sample_period: f64) -> Result<MultipathTaps> {
    crate::error::ensure_positive("sample_period", sample_period)?;
    if paths.is_empty() {
        return Err(Error::ZeroInput("no paths"));
    }
    let earliest = paths.iter().map(|p| p.delay).fold(f64::INFINITY, f64::min);
    let mut bins: BTreeMap<usize, CVector> = BTreeMap::new();
    for p in paths {
        if p.matrix.nrows() != 1 {
            return Err(Error::param("paths", format!("expected 1 receive antenna, got {}", p.matrix.nrows())));
        }
        let h: CVector = p.matrix.row(0).adjoint();
        let n = ((p.delay - earliest) / sample_period).round() as usize;
        bins.entry(n).and_modify(|acc| *acc += &h).or_insert(h);
    }
    let (delays, vectors) = bins.into_iter().unzip();
    MultipathTaps::new(vectors, delays)
}

/// Pre-compensation delays `κ_l = n_max − n_l`.
pub fn delay_precompensation(delays: &[usize]) -> Result<Vec<usize>> {
    let max = *delays.iter().max().ok_or(Error::ZeroInput("no delays"))?;
    Ok(delays.iter().map(|n| max - n).collect())
}

/// Per-path transmit beams and their pre-compensation delays.
#[derive(Debug, Clone, PartialEq)]
pub struct DamBeamformers {
    pub beams: Vec<CVector>,
    pub precompensation: Vec<usize>,
}

impl DamBeamformers {
    /// Total transmit power `Σ ‖f_l‖²`.
    pub fn power(&self) -> f64 {
        self.beams.iter().map(|f| f.norm_squared()).sum()
    }
}

/// Scales directions `d_l` so that `Σ ‖f_l‖² = P`.
fn scaled(directions: Vec<CVector>, taps: &MultipathTaps, power: f64) -> Result<DamBeamformers> {
    let total: f64 = directions.iter().map(|d| d.norm_squared()).sum();
    if total == 0.0 {
        return Err(Error::ZeroInput("all path beams vanish"));
    }
    let scale = C64::new((power / total).sqrt(), 0.0);
    Ok(DamBeamformers {
        beams: directions.into_iter().map(|d| d * scale).collect(),
        precompensation: delay_precompensation(taps.delays())?,
    })
}

/// Path-based MRT `f_l = √P h_l / √(Σ ‖h_i‖²)`.
pub fn path_mrt(taps: &MultipathTaps, power: f64) -> Result<DamBeamformers> {
    crate::error::ensure_positive("power", power)?;
    scaled(taps.vectors().to_vec(), taps, power)
}

/// Inner beams for path-based ZF.
#[derive(Debug, Clone, PartialEq)]
pub enum ZfCombiners {
    /// `b_l ∝ (H_l^⊥)ᴴ h_l`, with power split in proportion to `‖(H_l^⊥)ᴴ h_l‖²`.
    MaxGain,
    /// Caller-chosen `b_l`, each of length `M − L + 1`; rescaled to meet the power.
    Given(Vec<CVector>),
}

/// Path-based ZF `f_l = H_l^⊥ b_l`, where `H_l^⊥` spans the orthogonal
/// complement of the other paths, so `h_{l'}ᴴ f_l = 0` for `l' ≠ l`.
pub fn path_zf(taps: &MultipathTaps, power: f64, combiners: &ZfCombiners) -> Result<DamBeamformers> {
    crate::error::ensure_positive("power", power)?;
    let (m, l) = (taps.antennas(), taps.paths());
    if m < l {
        return Err(Error::RankDeficient(format!("{l} paths cannot be separated with {m} antennas")));
    }
    if let ZfCombiners::Given(b) = combiners {
        if b.len() != l {
            return Err(Error::DimensionMismatch { expected: l, got: b.len() });
        }
    }
    let mut directions = Vec::with_capacity(l);
    for k in 0..l {
        let others: Vec<&CVector> =
            taps.vectors().iter().enumerate().filter(|(i, _)| *i != k).map(|(_, h)| h).collect();
        let stacked = CMatrix::from_fn(m, others.len(), |r, c| others[c][r]);
        let complement = orthogonal_complement(&stacked)?;
        let b = match combiners {
            ZfCombiners::MaxGain => complement.adjoint() * &taps.vectors()[k],
            ZfCombiners::Given(b) => {
                if b[k].len() != complement.ncols() {
                    return Err(Error::DimensionMismatch { expected: complement.ncols(), got: b[k].len() });
                }
                b[k].clone()
            }
        };
        directions.push(complement * b);
    }
    scaled(directions, taps, power)
}

/// Effective single-antenna channel `g[k]`, `k = 0..=2 n_max`, where
/// `y[n] = Σ_k g[k] s[n − k] + z[n]`. The aligned tap is `g[n_max]`.
pub fn effective_coefficients(taps: &MultipathTaps, beams: &DamBeamformers) -> Result<Vec<C64>> {
    if beams.beams.len() != taps.paths() || beams.precompensation.len() != taps.paths() {
        return Err(Error::DimensionMismatch { expected: taps.paths(), got: beams.beams.len() });
    }
    let n_max = taps.max_delay();
    let mut g = vec![C64::new(0.0, 0.0); 2 * n_max + 1];
    for (h, &n_l) in taps.vectors().iter().zip(taps.delays()) {
        for (f, &kappa) in beams.beams.iter().zip(&beams.precompensation) {
            if f.len() != h.len() {
                return Err(Error::DimensionMismatch { expected: h.len(), got: f.len() });
            }
            g[n_l + kappa] += h.dotc(f);
        }
    }
    Ok(g)
}

/// Signal, ISI and noise powers per received sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPowers {
    pub signal: f64,
    pub isi: f64,
    pub noise: f64,
}

impl LinkPowers {
    pub fn sinr(&self) -> f64 {
        self.signal / (self.isi + self.noise)
    }

    pub fn rate(&self) -> f64 {
        (1.0 + self.sinr()).log2()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DamLink {
    /// `y[n]` for `n = 0..len`, with `s[n] = 0` outside the symbol block.
    pub received: Vec<C64>,
    pub coefficients: Vec<C64>,
    /// Expectations for unit-power i.i.d. symbols.
    pub analytic: LinkPowers,
    /// Sample means of each component over the samples that see only
    /// transmitted symbols, `n ≥ 2 n_max`.
    pub empirical: LinkPowers,
}

/// Unit-power QPSK symbols.
pub fn qpsk_symbols(count: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = std::f64::consts::FRAC_1_SQRT_2;
    (0..count)
        .map(|_| {
            let re = if rng.random::<bool>() { a } else { -a };
            let im = if rng.random::<bool>() { a } else { -a };
            C64::new(re, im)
        })
        .collect()
}

/// Runs a symbol block through the delay-aligned link.
pub fn simulate_dam_link(
    taps: &MultipathTaps,
    beams: &DamBeamformers,
    symbols: &[C64],
    noise_power: f64,
    seed: u64,
) -> Result<DamLink> {
    if !(noise_power >= 0.0 && noise_power.is_finite()) {
        return Err(Error::param("noise_power", format!("must be finite and non-negative, got {noise_power}")));
    }
    let g = effective_coefficients(taps, beams)?;
    let n_max = taps.max_delay();
    let len = symbols.len();
    if len <= 2 * n_max {
        return Err(Error::param("symbols", format!("need more than 2·n_max = {} symbols, got {len}", 2 * n_max)));
    }
    let aligned = g[n_max];
    let analytic = LinkPowers {
        signal: aligned.norm_sqr(),
        isi: g.iter().enumerate().filter(|(k, _)| *k != n_max).map(|(_, c)| c.norm_sqr()).sum(),
        noise: noise_power,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = (noise_power / 2.0).sqrt();
    let mut received = Vec::with_capacity(len);
    let (mut sig, mut isi, mut noi) = (0.0, 0.0, 0.0);
    for n in 0..len {
        let mut interference = C64::new(0.0, 0.0);
        for (k, c) in g.iter().enumerate() {
            if k != n_max && k <= n {
                interference += c * symbols[n - k];
            }
        }
        let wanted = if n >= n_max { aligned * symbols[n - n_max] } else { C64::new(0.0, 0.0) };
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let z = C64::new(re, im) * sigma;
        if n >= 2 * n_max {
            sig += wanted.norm_sqr();
            isi += interference.norm_sqr();
            noi += z.norm_sqr();
        }
        received.push(wanted + interference + z);
    }
    let window = (len - 2 * n_max) as f64;
    Ok(DamLink {
        received,
        coefficients: g,
        analytic,
        empirical: LinkPowers { signal: sig / window, isi: isi / window, noise: noi / window },
    })
}
