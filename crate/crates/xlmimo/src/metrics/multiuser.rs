//! Uplink multi-user receive beamforming.

use serde::{Deserialize, Serialize};

use crate::linalg::{orthonormal_basis, project_out, solve_hpd};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Relative residual below which a ZF projection counts as vanished.
pub const ZF_RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Beamformer {
    Mrc,
    Zf,
    Mmse,
}

impl Beamformer {
    pub const ALL: [Beamformer; 3] = [Beamformer::Mrc, Beamformer::Zf, Beamformer::Mmse];

    pub fn name(self) -> &'static str {
        match self {
            Beamformer::Mrc => "mrc",
            Beamformer::Zf => "zf",
            Beamformer::Mmse => "mmse",
        }
    }
}

/// Per-user SINRs and their sum rate in bps/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiuserOutcome {
    pub sinr: Vec<f64>,
    pub sum_rate: f64,
}

fn check_inputs(channels: &[CVector], powers: &[f64]) -> Result<usize> {
    let first = channels.first().ok_or(Error::ZeroInput("no users"))?;
    if powers.len() != channels.len() {
        return Err(Error::DimensionMismatch { expected: channels.len(), got: powers.len() });
    }
    let m = first.len();
    for h in channels {
        if h.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: h.len() });
        }
    }
    for &p in powers {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::param("powers", format!("must be finite and non-negative, got {p}")));
        }
    }
    Ok(m)
}

fn unit(v: CVector) -> CVector {
    let n = v.norm();
    if n == 0.0 {
        v
    } else {
        v / C64::new(n, 0.0)
    }
}

/// Unit-norm receive combiners designed for `channels`.
///
/// ZF projects each channel onto the orthogonal complement of the others; a
/// user whose projection vanishes gets the zero combiner (and SINR 0). MMSE
/// uses `(Σ_{i≠k} P̄_i h_i h_iᴴ + I)⁻¹ h_k`, applied through the `K − 1`
/// dimensional Woodbury form.
pub fn receive_combiners(beamformer: Beamformer, channels: &[CVector], powers: &[f64]) -> Result<Vec<CVector>> {
    let m = check_inputs(channels, powers)?;
    let k = channels.len();
    match beamformer {
        Beamformer::Mrc => Ok(channels.iter().map(|h| unit(h.clone())).collect()),
        Beamformer::Zf => {
            if m < k {
                return Err(Error::RankDeficient(format!("{k} users cannot be separated with {m} antennas")));
            }
            (0..k)
                .map(|u| {
                    let others: Vec<CVector> =
                        channels.iter().enumerate().filter(|(i, _)| *i != u).map(|(_, h)| h.clone()).collect();
                    let basis = orthonormal_basis(&others, ZF_RESIDUAL_TOLERANCE);
                    let w = project_out(&channels[u], &basis);
                    if w.norm() <= ZF_RESIDUAL_TOLERANCE * channels[u].norm() {
                        Ok(CVector::zeros(m))
                    } else {
                        Ok(unit(w))
                    }
                })
                .collect()
        }
        Beamformer::Mmse => (0..k)
            .map(|u| {
                let others: Vec<usize> = (0..k).filter(|&i| i != u).collect();
                let g = CMatrix::from_fn(m, others.len(), |r, c| channels[others[c]][r] * powers[others[c]].sqrt());
                let h = &channels[u];
                let small = CMatrix::identity(others.len(), others.len()) + g.adjoint() * &g;
                let correction =
                    if others.is_empty() { CVector::zeros(m) } else { &g * solve_hpd(&small, &(g.adjoint() * h))? };
                Ok(unit(h - correction))
            })
            .collect(),
    }
}

/// SINR `P̄_k |v_kᴴ h_k|² / (Σ_{i≠k} P̄_i |v_kᴴ h_i|² + 1)` for given combiners.
pub fn sinr_with_combiners(combiners: &[CVector], channels: &[CVector], powers: &[f64]) -> Result<MultiuserOutcome> {
    check_inputs(channels, powers)?;
    if combiners.len() != channels.len() {
        return Err(Error::DimensionMismatch { expected: channels.len(), got: combiners.len() });
    }
    let mut sinr = Vec::with_capacity(channels.len());
    for (k, v) in combiners.iter().enumerate() {
        if v.len() != channels[k].len() {
            return Err(Error::DimensionMismatch { expected: channels[k].len(), got: v.len() });
        }
        let mut interference = 1.0;
        for (i, h) in channels.iter().enumerate() {
            if i != k {
                interference += powers[i] * v.dotc(h).norm_sqr();
            }
        }
        sinr.push(powers[k] * v.dotc(&channels[k]).norm_sqr() / interference);
    }
    let sum_rate = sinr.iter().map(|g| (1.0 + g).log2()).sum();
    Ok(MultiuserOutcome { sinr, sum_rate })
}

/// Per-user SINRs and sum rate with combiners designed on the true channels.
pub fn multiuser_receive_sinr(
    beamformer: Beamformer,
    channels: &[CVector],
    powers: &[f64],
) -> Result<MultiuserOutcome> {
    let v = receive_combiners(beamformer, channels, powers)?;
    sinr_with_combiners(&v, channels, powers)
}

/// Squared correlation coefficient `|h_1ᴴ h_2|² / (‖h_1‖² ‖h_2‖²)`.
pub fn squared_correlation(h1: &CVector, h2: &CVector) -> f64 {
    let denom = h1.norm_squared() * h2.norm_squared();
    if denom == 0.0 {
        return 0.0;
    }
    (h1.dotc(h2).norm_sqr() / denom).min(1.0)
}

/// Two-user SINRs in closed form, written as the single-user SNR minus an
/// interference penalty that grows with the channel correlation.
pub fn two_user_closed_form(beamformer: Beamformer, h: [&CVector; 2], powers: [f64; 2]) -> [f64; 2] {
    let rho = squared_correlation(h[0], h[1]);
    let snr = [powers[0] * h[0].norm_squared(), powers[1] * h[1].norm_squared()];
    let one = |k: usize| {
        let other = snr[1 - k];
        let penalty = match beamformer {
            Beamformer::Mrc => other * rho / (other * rho + 1.0),
            Beamformer::Zf => rho,
            Beamformer::Mmse => other * rho / (other + 1.0),
        };
        snr[k] * (1.0 - penalty)
    };
    [one(0), one(1)]
}
