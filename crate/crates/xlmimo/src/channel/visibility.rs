//! Visibility regions: which array elements (or scatterer slots) see a path.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::ensure_probability;
use crate::{CMatrix, Error, Result};

/// Binary visibility vector, one flag per element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityMask {
    flags: Vec<bool>,
}

impl VisibilityMask {
    pub fn new(flags: Vec<bool>) -> Self {
        VisibilityMask { flags }
    }

    pub fn all_visible(m: usize) -> Self {
        VisibilityMask { flags: vec![true; m] }
    }

    /// Mask that is visible exactly on `indices`.
    pub fn from_indices(m: usize, indices: &[usize]) -> Result<Self> {
        let mut flags = vec![false; m];
        for &i in indices {
            if i >= m {
                return Err(Error::param("visible", format!("index {i} out of range for {m} elements")));
            }
            flags[i] = true;
        }
        Ok(VisibilityMask { flags })
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn is_visible(&self, m: usize) -> bool {
        self.flags[m]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn visible_count(&self) -> usize {
        self.flags.iter().filter(|&&b| b).count()
    }

    pub fn visible_fraction(&self) -> f64 {
        if self.flags.is_empty() {
            0.0
        } else {
            self.visible_count() as f64 / self.flags.len() as f64
        }
    }

    /// Zeroes the rows of `h` whose element is invisible.
    pub fn apply_rows(&self, h: &mut CMatrix) -> Result<()> {
        if h.nrows() != self.flags.len() {
            return Err(Error::DimensionMismatch { expected: self.flags.len(), got: h.nrows() });
        }
        for (i, &b) in self.flags.iter().enumerate() {
            if !b {
                h.row_mut(i).fill(Default::default());
            }
        }
        Ok(())
    }

    /// `D^{1/2} R D^{1/2}` with `D = diag(b)`.
    pub fn mask_correlation(&self, r: &CMatrix) -> Result<CMatrix> {
        if r.nrows() != self.len() || r.ncols() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: r.nrows() });
        }
        let mut out = r.clone();
        for (i, &b) in self.flags.iter().enumerate() {
            if !b {
                out.row_mut(i).fill(Default::default());
                out.column_mut(i).fill(Default::default());
            }
        }
        Ok(out)
    }
}

/// Random process generating visibility masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VrProcess {
    /// Fixed set of visible indices.
    Deterministic { visible: Vec<usize> },
    /// Two-state chain along the element axis. `p01` is the probability an
    /// invisible element is followed by a visible one, `p10` the reverse.
    /// Without `initial`, the first state is drawn from the stationary law.
    TwoStateMarkov {
        p01: f64,
        p10: f64,
        #[serde(default)]
        initial: Option<bool>,
    },
    /// Scatterer slots evolving over `steps` time steps of length `dt`, each
    /// alive slot surviving with `exp(−death_rate·dt)` and a Poisson number
    /// of newborns with mean `(birth_rate/death_rate)(1 − exp(−death_rate·dt))`
    /// filling the lowest free slots. The pool starts empty.
    BirthDeath { birth_rate: f64, death_rate: f64, dt: f64, steps: usize },
}

impl VrProcess {
    pub fn validate(&self) -> Result<()> {
        match *self {
            VrProcess::Deterministic { .. } => Ok(()),
            VrProcess::TwoStateMarkov { p01, p10, initial } => {
                ensure_probability("p01", p01)?;
                ensure_probability("p10", p10)?;
                if p01 + p10 == 0.0 && initial.is_none() {
                    return Err(Error::param("initial", "required when p01 = p10 = 0 (no stationary law)"));
                }
                Ok(())
            }
            VrProcess::BirthDeath { birth_rate, death_rate, dt, .. } => {
                if !(birth_rate >= 0.0 && birth_rate.is_finite()) {
                    return Err(Error::param("birth_rate", "must be finite and non-negative"));
                }
                crate::error::ensure_positive("death_rate", death_rate)?;
                crate::error::ensure_positive("dt", dt)?;
                Ok(())
            }
        }
    }

    /// Probability that an element is visible in the long run.
    pub fn stationary_visible(&self) -> Option<f64> {
        match *self {
            VrProcess::TwoStateMarkov { p01, p10, .. } if p01 + p10 > 0.0 => Some(p01 / (p01 + p10)),
            _ => None,
        }
    }

    /// `E[b_m b_n]` for all element pairs.
    ///
    /// Birth-death masks describe slot occupancy over time rather than an
    /// element-axis process and have no such closed form; they are rejected.
    pub fn mask_moments(&self, m: usize) -> Result<DMatrix<f64>> {
        self.validate()?;
        match self {
            VrProcess::Deterministic { visible } => {
                let b = VisibilityMask::from_indices(m, visible)?;
                Ok(DMatrix::from_fn(m, m, |i, j| (b.flags[i] && b.flags[j]) as u8 as f64))
            }
            &VrProcess::TwoStateMarkov { p01, p10, initial } => {
                let rho = 1.0 - p01 - p10;
                let pi1 = if p01 + p10 > 0.0 { p01 / (p01 + p10) } else { 0.0 };
                let start = match initial {
                    Some(v) => v as u8 as f64,
                    None => pi1,
                };
                // P(b_i = 1) and P(b_j = 1 | b_i = 1) for j ≥ i.
                let marginal = |i: usize| pi1 + (start - pi1) * rho.powi(i as i32);
                let stay = |lag: usize| pi1 + (1.0 - pi1) * rho.powi(lag as i32);
                Ok(DMatrix::from_fn(m, m, |i, j| {
                    let (a, b) = if i <= j { (i, j) } else { (j, i) };
                    marginal(a) * stay(b - a)
                }))
            }
            VrProcess::BirthDeath { .. } => Err(Error::param(
                "process",
                "birth-death masks have no element-pair moments; use a deterministic or Markov mask",
            )),
        }
    }
}

/// Draws a mask of `m` elements from `process`, reproducibly for a seed.
pub fn sample_vr_mask(process: &VrProcess, m: usize, seed: u64) -> Result<VisibilityMask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_vr_mask_with(process, m, &mut rng)
}

/// [`sample_vr_mask`] drawing from a caller-owned generator.
pub fn sample_vr_mask_with<R: Rng + ?Sized>(process: &VrProcess, m: usize, rng: &mut R) -> Result<VisibilityMask> {
    process.validate()?;
    match process {
        VrProcess::Deterministic { visible } => VisibilityMask::from_indices(m, visible),
        &VrProcess::TwoStateMarkov { p01, p10, initial } => {
            let mut flags = Vec::with_capacity(m);
            if m == 0 {
                return Ok(VisibilityMask { flags });
            }
            let mut state = match initial {
                Some(v) => v,
                None => rng.random::<f64>() < p01 / (p01 + p10),
            };
            flags.push(state);
            for _ in 1..m {
                let flip = if state { p10 } else { p01 };
                if rng.random::<f64>() < flip {
                    state = !state;
                }
                flags.push(state);
            }
            Ok(VisibilityMask { flags })
        }
        &VrProcess::BirthDeath { birth_rate, death_rate, dt, steps } => {
            let trajectory = birth_death_run(birth_rate, death_rate, dt, steps, m, rng)?;
            Ok(trajectory.into_iter().last().unwrap_or_else(|| VisibilityMask { flags: vec![false; m] }))
        }
    }
}

/// Every intermediate state of a birth-death run over `slots` scatterer slots.
pub fn birth_death_trajectory(process: &VrProcess, slots: usize, seed: u64) -> Result<Vec<VisibilityMask>> {
    process.validate()?;
    match *process {
        VrProcess::BirthDeath { birth_rate, death_rate, dt, steps } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            birth_death_run(birth_rate, death_rate, dt, steps, slots, &mut rng)
        }
        _ => Err(Error::param("process", "not a birth-death process")),
    }
}

fn birth_death_run<R: Rng + ?Sized>(
    birth_rate: f64,
    death_rate: f64,
    dt: f64,
    steps: usize,
    slots: usize,
    rng: &mut R,
) -> Result<Vec<VisibilityMask>> {
    let survival = (-death_rate * dt).exp();
    let mean_births = birth_rate / death_rate * (1.0 - survival);
    let births = if mean_births > 0.0 {
        Some(Poisson::new(mean_births).map_err(|e| Error::param("birth_rate", e.to_string()))?)
    } else {
        None
    };
    let mut alive = vec![false; slots];
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        for a in alive.iter_mut().filter(|a| **a) {
            *a = rng.random::<f64>() < survival;
        }
        let mut newborn = births.as_ref().map_or(0, |p| p.sample(rng) as usize);
        for a in alive.iter_mut() {
            if newborn == 0 {
                break;
            }
            if !*a {
                *a = true;
                newborn -= 1;
            }
        }
        out.push(VisibilityMask { flags: alive.clone() });
    }
    Ok(out)
}
