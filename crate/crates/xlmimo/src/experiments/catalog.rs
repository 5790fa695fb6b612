use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{point_layout, Point, ScenarioConfig};
use crate::channel::{effective_rank, los_channel, scattered_paths, user_channel, BistaticPath, LosMethod, Scatterer};
use crate::codebook::{dft_codebook, polar_codebook, PolarSpec};
use crate::dam::{path_mrt, path_zf, qpsk_symbols, simulate_dam_link, taps_from_paths, DamLink, ZfCombiners};
use crate::geometry::{ArrayGeometry, ArrayLayout};
use crate::metrics::{
    asymptotic_snr_limit, dof_approx, edof, far_field_pattern, focusing_pattern, free_space_mrc_snr,
    multiuser_receive_sinr, receive_combiners, sampled_far_field_pattern, sinr_with_combiners, Beamformer, DofGeometry,
};
use crate::nearfield::{
    array_response, dd_rayleigh_distance, dd_rayleigh_distance_numeric, effective_rayleigh_distance,
    free_space_channel, mimo_rayleigh_distance, rayleigh_distance, reactive_boundary, uniform_power_distance,
    GainPattern, ResponseModel, SourcePoint,
};
use crate::training::{overhead_table, EpisodeRecord, Sounder, TrainingMethod, TrainingSetup};
use crate::{from_db, to_db, wavelength, CVector, Error, Result, Vec3, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamDefault {
    Value(f64),
    /// The top-level `frequency_hz`.
    Frequency,
    /// The element count of `layout`.
    Elements,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Real,
    Positive,
    NonNegative,
    /// Open interval (0, 1).
    Fraction,
    /// Degrees in [0, 180].
    Angle,
    /// Integer ≥ 1.
    Count,
    PowerOfTwo,
    /// Distance from the array; checked against the reactive region.
    Range,
}

impl ParamKind {
    pub fn is_integer(self) -> bool {
        matches!(self, ParamKind::Count | ParamKind::PowerOfTwo)
    }

    pub fn describe(self) -> &'static str {
        match self {
            ParamKind::Real => "a finite number",
            ParamKind::Positive => "positive",
            ParamKind::NonNegative => "non-negative",
            ParamKind::Fraction => "in (0, 1)",
            ParamKind::Angle => "an angle in [0, 180] degrees",
            ParamKind::Count => "a positive integer",
            ParamKind::PowerOfTwo => "a power of two",
            ParamKind::Range => "a positive distance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: ParamDefault,
    pub kind: ParamKind,
    pub help: &'static str,
}

const fn param(name: &'static str, default: f64, kind: ParamKind, help: &'static str) -> ParamSpec {
    ParamSpec { name, default: ParamDefault::Value(default), kind, help }
}

const FREQUENCY: ParamSpec = ParamSpec {
    name: "frequency_hz",
    default: ParamDefault::Frequency,
    kind: ParamKind::Positive,
    help: "carrier frequency",
};
const ELEMENTS: ParamSpec =
    ParamSpec { name: "elements", default: ParamDefault::Elements, kind: ParamKind::Count, help: "array elements" };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutNeed {
    None,
    Any,
    Linear,
    CollocatedLinear,
}

impl LayoutNeed {
    pub fn describe(self) -> &'static str {
        match self {
            LayoutNeed::None => "no array",
            LayoutNeed::Any => "any array",
            LayoutNeed::Linear => "a linear array",
            LayoutNeed::CollocatedLinear => "a collocated linear array",
        }
    }
}

type Eval = fn(&ScenarioConfig, &Point, &mut ChaCha8Rng) -> Result<Vec<f64>>;

/// A named experiment: its parameters, output columns and evaluator.
#[derive(Clone, Copy)]
pub struct Experiment {
    pub name: &'static str,
    pub aliases: &'static [&'static str],
    pub summary: &'static str,
    pub params: &'static [ParamSpec],
    pub columns: &'static [&'static str],
    pub layout: LayoutNeed,
    /// Whether `users` / `scatterers` from the config are used.
    pub uses_placements: bool,
    pub(crate) eval: Eval,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment").field("name", &self.name).finish_non_exhaustive()
    }
}

impl Experiment {
    /// CSV header: parameters, then outputs.
    pub fn header(&self) -> Vec<&'static str> {
        self.params.iter().map(|p| p.name).chain(self.columns.iter().copied()).collect()
    }
}

pub const EXPERIMENTS: [Experiment; 10] = [
    Experiment {
        name: "rayleigh_vs_D",
        aliases: &[],
        summary: "Field-boundary distances against the aperture",
        params: &[
            FREQUENCY,
            param("aperture_m", 1.0, ParamKind::Positive, "aperture D"),
            param("theta_deg", 90.0, ParamKind::Angle, "direction from the array axis"),
        ],
        columns: &["wavelength_m", "rayleigh_m", "dd_rayleigh_m", "effective_rayleigh_m", "reactive_m"],
        layout: LayoutNeed::None,
        uses_placements: false,
        eval: rayleigh_vs_aperture,
    },
    Experiment {
        name: "rayleigh_vs_M",
        aliases: &[],
        summary: "Rayleigh and reactive distances against the element count",
        params: &[FREQUENCY, ELEMENTS],
        columns: &["aperture_m", "rayleigh_m", "reactive_m"],
        layout: LayoutNeed::Any,
        uses_placements: false,
        eval: rayleigh_vs_elements,
    },
    Experiment {
        name: "boundary_map",
        aliases: &[],
        summary: "All near/far-field boundaries in one direction",
        params: &[
            FREQUENCY,
            ELEMENTS,
            param("theta_deg", 90.0, ParamKind::Angle, "direction from the array axis"),
            param("upd_threshold", 0.9, ParamKind::Fraction, "weakest/strongest power ratio"),
        ],
        columns: &[
            "aperture_m",
            "reactive_m",
            "rayleigh_m",
            "dd_rayleigh_m",
            "dd_rayleigh_numeric_m",
            "effective_rayleigh_m",
            "upd_m",
        ],
        layout: LayoutNeed::Linear,
        uses_placements: false,
        eval: boundary_map,
    },
    Experiment {
        name: "rank_vs_distance",
        aliases: &[],
        summary: "LoS MIMO effective rank and EDoF between facing linear arrays",
        params: &[
            FREQUENCY,
            ELEMENTS,
            param("rx_elements", 32.0, ParamKind::Count, "receive elements (collocated)"),
            param("distance_m", 10.0, ParamKind::Range, "centre-to-centre distance"),
            param("rank_fraction", 0.1, ParamKind::Fraction, "significance threshold on singular values"),
        ],
        columns: &[
            "mimo_rayleigh_m",
            "rank_elementwise",
            "rank_outer_product",
            "edof_elementwise",
            "dof_approx",
            "method_difference",
        ],
        layout: LayoutNeed::Linear,
        uses_placements: false,
        eval: rank_vs_distance,
    },
    Experiment {
        name: "snr_vs_M",
        aliases: &[],
        summary: "MRC SNR against the element count with its closed form and limit",
        params: &[
            FREQUENCY,
            ELEMENTS,
            param("range_m", 15.0, ParamKind::Range, "user distance"),
            param("theta_deg", 90.0, ParamKind::Angle, "user direction"),
            param("transmit_snr_db", 90.0, ParamKind::Real, "P/σ² in dB"),
        ],
        columns: &["snr_db", "snr_closed_form_db", "snr_upw_db", "snr_limit_db"],
        layout: LayoutNeed::Linear,
        uses_placements: false,
        eval: snr_vs_elements,
    },
    Experiment {
        name: "ff_beam_pattern",
        aliases: &[],
        summary: "Far-field beam pattern against the spatial-angle offset",
        params: &[
            FREQUENCY,
            ELEMENTS,
            param("delta", 0.0, ParamKind::Real, "spatial-angle offset"),
            param("centre", 0.0, ParamKind::Real, "midpoint of target and observation"),
        ],
        columns: &["gain_sampled", "gain_closed_form"],
        layout: LayoutNeed::Linear,
        uses_placements: false,
        eval: ff_beam_pattern,
    },
    Experiment {
        name: "nf_focusing_vs_dr",
        aliases: &["nf_focusing_vs_Δr"],
        summary: "Near-field focusing gain against the range offset",
        params: &[
            FREQUENCY,
            ELEMENTS,
            param("target_range_m", 200.0, ParamKind::Range, "focus distance"),
            param("theta_deg", 90.0, ParamKind::Angle, "focus direction"),
            param("range_offset_m", 0.0, ParamKind::Real, "observation minus focus distance"),
        ],
        columns: &["observed_range_m", "inverse_distance_offset", "gain"],
        layout: LayoutNeed::Linear,
        uses_placements: false,
        eval: nf_focusing,
    },
    Experiment {
        name: "sumrate_vs_M",
        aliases: &[],
        summary: "Uplink sum rate with beamformers designed on spherical or planar wavefronts",
        params: &[
            FREQUENCY,
            ELEMENTS,
            param("transmit_snr_db", 90.0, ParamKind::Real, "per-user P/σ² in dB"),
            param("users", 10.0, ParamKind::Count, "random users"),
            param("scatterers", 9.0, ParamKind::Count, "random scatterers"),
            param("disk_range_m", 600.0, ParamKind::Range, "distance of the user disk centre"),
            param("disk_angle_deg", 90.0, ParamKind::Angle, "direction of the user disk centre"),
            param("disk_radius_m", 200.0, ParamKind::Positive, "user disk radius"),
            param("rcs_min_m2", 1.0, ParamKind::Positive, "smallest scatterer cross-section"),
            param("rcs_max_m2", 10.0, ParamKind::Positive, "largest scatterer cross-section"),
            param("trials", 10.0, ParamKind::Count, "random drops averaged"),
        ],
        columns: &["nf_mrc", "nf_zf", "nf_mmse", "ff_mrc", "ff_zf", "ff_mmse"],
        layout: LayoutNeed::Linear,
        uses_placements: true,
        eval: sumrate,
    },
    Experiment {
        name: "training_compare",
        aliases: &[],
        summary: "Beam-training overhead, success rate and gain per method",
        params: &[
            FREQUENCY,
            ParamSpec {
                name: "elements",
                default: ParamDefault::Elements,
                kind: ParamKind::PowerOfTwo,
                help: "array elements",
            },
            param("candidates", 3.0, ParamKind::Count, "angles kept after the DFT sweep"),
            param("region_threshold_db", 3.0, ParamKind::NonNegative, "dominant-region depth"),
            param("subarray", 64.0, ParamKind::PowerOfTwo, "first-stage subarray of the hierarchical search"),
            param("compression", 4.0, ParamKind::Count, "beams per learned prediction (table only)"),
            param("transmit_snr_db", 20.0, ParamKind::Real, "per-antenna pilot SNR in dB"),
            param("trials", 100.0, ParamKind::Count, "episodes"),
            param("on_grid", 1.0, ParamKind::NonNegative, "1 draws users at codebook grid points"),
        ],
        columns: &[
            "exhaustive_overhead",
            "exhaustive_success",
            "exhaustive_gain",
            "exhaustive_rate_ratio",
            "two_phase_overhead",
            "two_phase_success",
            "two_phase_gain",
            "two_phase_rate_ratio",
            "hierarchical_overhead",
            "hierarchical_success",
            "hierarchical_gain",
            "hierarchical_rate_ratio",
            "table_exhaustive",
            "table_two_phase",
            "table_dft_joint",
            "table_hierarchical",
            "table_deep_learning",
            "table_ff_exhaustive",
            "table_ff_hierarchical",
            "table_rainbow",
        ],
        layout: LayoutNeed::CollocatedLinear,
        uses_placements: false,
        eval: training_compare,
    },
    Experiment {
        name: "dam_isi_vs_M",
        aliases: &[],
        summary: "Delay alignment: ISI and SINR of path MRT and path ZF",
        params: &[
            FREQUENCY,
            ELEMENTS,
            param("paths", 4.0, ParamKind::Count, "LoS plus random scatterers"),
            param("user_range_m", 20.0, ParamKind::Range, "user distance"),
            param("user_angle_deg", 90.0, ParamKind::Angle, "user direction"),
            param("scatter_range_min_m", 5.0, ParamKind::Positive, "closest scatterer"),
            param("scatter_range_max_m", 40.0, ParamKind::Positive, "farthest scatterer"),
            param("sample_period_s", 1e-9, ParamKind::Positive, "symbol period"),
            param("transmit_snr_db", 100.0, ParamKind::Real, "P/σ² in dB"),
            param("symbols", 4096.0, ParamKind::Count, "symbols per block"),
            param("trials", 10.0, ParamKind::Count, "random drops averaged"),
        ],
        columns: &[
            "taps",
            "coherent_power",
            "mrt_signal",
            "mrt_isi",
            "mrt_isi_ratio",
            "mrt_sinr_db",
            "mrt_empirical_sinr_db",
            "zf_signal",
            "zf_isi",
            "zf_sinr_db",
            "zf_empirical_sinr_db",
        ],
        layout: LayoutNeed::Linear,
        uses_placements: true,
        eval: dam_isi,
    },
];

/// Looks an experiment up by name or alias.
pub fn find_experiment(name: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.name == name || e.aliases.contains(&name))
}

fn lambda_at(point: &Point) -> f64 {
    wavelength(point.get("frequency_hz"))
}

fn rayleigh_vs_aperture(_: &ScenarioConfig, p: &Point, _: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let lambda = lambda_at(p);
    let d = p.get("aperture_m");
    let theta = p.get("theta_deg").to_radians();
    Ok(vec![
        lambda,
        rayleigh_distance(d, lambda),
        dd_rayleigh_distance(d, lambda, theta),
        effective_rayleigh_distance(d, lambda, theta),
        reactive_boundary(d, lambda),
    ])
}

fn rayleigh_vs_elements(c: &ScenarioConfig, p: &Point, _: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let layout = point_layout(c, p)?;
    let (d, lambda) = (layout.physical_dimension(), layout.wavelength());
    Ok(vec![d, rayleigh_distance(d, lambda), reactive_boundary(d, lambda)])
}

fn boundary_map(c: &ScenarioConfig, p: &Point, _: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let layout = point_layout(c, p)?;
    let (d, lambda) = (layout.physical_dimension(), layout.wavelength());
    let theta = p.get("theta_deg").to_radians();
    Ok(vec![
        d,
        reactive_boundary(d, lambda),
        rayleigh_distance(d, lambda),
        dd_rayleigh_distance(d, lambda, theta),
        dd_rayleigh_distance_numeric(&layout, theta)?,
        effective_rayleigh_distance(d, lambda, theta),
        uniform_power_distance(&layout, theta, p.get("upd_threshold"), &c.pattern)?,
    ])
}

/// Receive array facing the transmit array across `distance` along `x̂`.
pub fn facing_array(tx: &ArrayLayout, rx_elements: usize, distance: f64) -> Result<ArrayLayout> {
    ArrayLayout::linear(
        ArrayGeometry::CollocatedUla { elements: rx_elements },
        tx.wavelength(),
        Vec3::new(distance, 0.0, 0.0),
        Vec3::y(),
    )?
    .with_boresight(-Vec3::x())
}

fn rank_vs_distance(c: &ScenarioConfig, p: &Point, _: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let tx = point_layout(c, p)?;
    let distance = p.get("distance_m");
    let rx = facing_array(&tx, p.count("rx_elements"), distance)?;
    let fraction = p.get("rank_fraction");
    let exact = los_channel(LosMethod::Elementwise, &tx, &rx, &c.pattern, &c.pattern)?;
    let outer = los_channel(LosMethod::OuterProduct, &tx, &rx, &c.pattern, &c.pattern)?;
    let lambda = tx.wavelength();
    let (dt, dr) = (tx.physical_dimension(), rx.physical_dimension());
    let geometry = DofGeometry::Ula { tx_length: dt, rx_length: dr, distance };
    Ok(vec![
        mimo_rayleigh_distance(dt, dr, lambda),
        effective_rank(&exact, fraction)? as f64,
        effective_rank(&outer, fraction)? as f64,
        edof(&exact)?,
        dof_approx(&geometry, lambda)?,
        (&exact - &outer).norm() / exact.norm(),
    ])
}

fn snr_vs_elements(c: &ScenarioConfig, p: &Point, _: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let layout = point_layout(c, p)?;
    let snr = from_db(p.get("transmit_snr_db"));
    let (r, theta) = (p.get("range_m"), p.get("theta_deg").to_radians());
    let s = SourcePoint::polar(&layout, r, theta);
    let report = free_space_mrc_snr(c.response, &layout, &s, &c.pattern, snr)?;
    let upw = free_space_mrc_snr(ResponseModel::Upw, &layout, &s, &c.pattern, snr)?;
    let limit =
        asymptotic_snr_limit(snr, layout.wavelength(), layout.spacing(), r, theta).map(to_db).unwrap_or(f64::NAN);
    Ok(vec![to_db(report.numeric), report.closed_form.map(to_db).unwrap_or(f64::NAN), to_db(upw.numeric), limit])
}

fn ff_beam_pattern(c: &ScenarioConfig, p: &Point, _: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let layout = point_layout(c, p)?;
    let (delta, centre) = (p.get("delta"), p.get("centre"));
    let (target, observed) = (centre + delta / 2.0, centre - delta / 2.0);
    if target.abs() > 1.0 || observed.abs() > 1.0 {
        return Err(Error::param(
            "delta",
            format!("centre ± delta/2 must stay in [-1, 1] (centre {centre}, delta {delta})"),
        ));
    }
    Ok(vec![sampled_far_field_pattern(&layout, target, observed)?, far_field_pattern(layout.geometry(), delta)?])
}

fn nf_focusing(c: &ScenarioConfig, p: &Point, _: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let layout = point_layout(c, p)?;
    let (r0, theta) = (p.get("target_range_m"), p.get("theta_deg").to_radians());
    let r = r0 + p.get("range_offset_m");
    if !(r > 0.0) {
        return Err(Error::param("range_offset_m", format!("observation distance {r} m is not positive")));
    }
    let target = SourcePoint::polar(&layout, r0, theta);
    let observed = SourcePoint::polar(&layout, r, theta);
    Ok(vec![r, 1.0 / r - 1.0 / r0, focusing_pattern(c.response, &layout, &target, &observed)?])
}

/// Uniform point in a disk in the array's horizontal plane.
fn disk_point(rng: &mut ChaCha8Rng, layout: &ArrayLayout, centre: Vec3, radius: f64) -> Vec3 {
    let rho = radius * rng.random::<f64>().sqrt();
    let phi = TAU * rng.random::<f64>();
    centre + layout.axis() * (rho * phi.cos()) + layout.boresight() * (rho * phi.sin())
}

fn sumrate(c: &ScenarioConfig, p: &Point, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let layout = point_layout(c, p)?;
    let snr = from_db(p.get("transmit_snr_db"));
    let (rcs_lo, rcs_hi) = (p.get("rcs_min_m2"), p.get("rcs_max_m2"));
    if rcs_lo > rcs_hi {
        return Err(Error::param("rcs_min_m2", "exceeds rcs_max_m2"));
    }
    let (disk_r, radius) = (p.get("disk_range_m"), p.get("disk_radius_m"));
    if radius >= disk_r {
        return Err(Error::param("disk_radius_m", "the user disk must not contain the array"));
    }
    let centre = SourcePoint::polar(&layout, disk_r, p.get("disk_angle_deg").to_radians()).position;
    let trials = p.count("trials");
    let mut acc = [0.0; 6];
    for _ in 0..trials {
        let users: Vec<Vec3> = if c.users.is_empty() {
            (0..p.count("users")).map(|_| disk_point(rng, &layout, centre, radius)).collect()
        } else {
            c.users.iter().map(|u| u.position(&layout)).collect()
        };
        let scatterers: Vec<Scatterer> = if c.scatterers.is_empty() {
            (0..p.count("scatterers"))
                .map(|_| {
                    let e = disk_point(rng, &layout, centre, radius);
                    Scatterer::new(e, rcs_lo + (rcs_hi - rcs_lo) * rng.random::<f64>())
                })
                .collect()
        } else {
            c.scatterers.iter().map(|s| Scatterer::new(s.position(&layout), s.rcs_m2)).collect()
        };
        let channels = |model| -> Result<Vec<CVector>> {
            users.iter().map(|u| user_channel(model, &layout, *u, &scatterers, &c.pattern)).collect()
        };
        let truth = channels(c.response)?;
        let planar = channels(ResponseModel::Upw)?;
        let powers = vec![snr; users.len()];
        for (i, bf) in Beamformer::ALL.into_iter().enumerate() {
            if bf == Beamformer::Zf && layout.num_elements() < users.len() {
                acc[i] = f64::NAN;
                acc[3 + i] = f64::NAN;
                continue;
            }
            acc[i] += multiuser_receive_sinr(bf, &truth, &powers)?.sum_rate;
            let v = receive_combiners(bf, &planar, &powers)?;
            acc[3 + i] += sinr_with_combiners(&v, &truth, &powers)?.sum_rate;
        }
    }
    Ok(acc.iter().map(|a| a / trials as f64).collect())
}

fn training_compare(c: &ScenarioConfig, p: &Point, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let layout = point_layout(c, p)?;
    let n = layout.num_elements();
    let spec = c.codebook.clone().unwrap_or_else(|| PolarSpec::non_uniform(0.5));
    let polar = polar_codebook(&layout, &spec)?;
    let setup = TrainingSetup { dft: dft_codebook(n)?, polar, layout: layout.clone() };
    let rings = setup.polar.max_rings();
    let subarray = p.count("subarray");
    if subarray > n {
        return Err(Error::param("subarray", format!("{subarray} exceeds the {n}-element array")));
    }
    let methods = [
        TrainingMethod::Exhaustive,
        TrainingMethod::TwoPhase {
            candidates: p.count("candidates"),
            region_threshold_db: p.get("region_threshold_db"),
        },
        TrainingMethod::Hierarchical { subarray },
    ];
    let snr = from_db(p.get("transmit_snr_db"));
    let on_grid = p.get("on_grid") >= 0.5;
    let lambda = layout.wavelength();
    let r_lo = reactive_boundary(layout.physical_dimension(), lambda).max(spec.min_distance.unwrap_or(0.0));
    let r_hi = setup.polar.threshold_distance.unwrap_or(r_lo).max(r_lo);
    let trials = p.count("trials");
    let mut acc = [0.0; 12];
    for _ in 0..trials {
        let h = if on_grid {
            let i = rng.random_range(0..setup.polar.len());
            setup.polar.codeword(i) * crate::C64::new((n as f64).sqrt(), 0.0)
        } else {
            let direction = 2.0 * rng.random::<f64>() - 1.0;
            let r = r_lo + (r_hi - r_lo) * rng.random::<f64>();
            let s = SourcePoint::spatial(&layout, r, direction);
            array_response(c.response, &layout, &s, &GainPattern::Isotropic)?.entries
        };
        for (k, m) in methods.iter().enumerate() {
            let seed = rng.random::<u64>();
            let mut sounder = Sounder::noisy(&h, snr, seed);
            let out = setup.run(m, &mut sounder)?;
            let rec = EpisodeRecord::new(m, seed, &out, &h, snr);
            acc[4 * k] += out.overhead as f64;
            acc[4 * k + 1] += out.success as u8 as f64;
            acc[4 * k + 2] += out.achieved_gain;
            acc[4 * k + 3] += rec.rate_ratio;
        }
    }
    let table = overhead_table(n, rings, p.count("candidates"), subarray, p.count("compression"))?;
    Ok(acc.iter().map(|a| a / trials as f64).chain(table.values().iter().map(|&v| v as f64)).collect())
}

fn dam_isi(c: &ScenarioConfig, p: &Point, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let bs = point_layout(c, p)?;
    let lambda = bs.wavelength();
    let power = from_db(p.get("transmit_snr_db"));
    let (r_lo, r_hi) = (p.get("scatter_range_min_m"), p.get("scatter_range_max_m"));
    if r_lo > r_hi {
        return Err(Error::param("scatter_range_min_m", "exceeds scatter_range_max_m"));
    }
    let user = match c.users.first() {
        Some(u) => u.position(&bs),
        None => SourcePoint::polar(&bs, p.get("user_range_m"), p.get("user_angle_deg").to_radians()).position,
    };
    let antenna = ArrayLayout::linear(ArrayGeometry::CollocatedUla { elements: 1 }, lambda, user, Vec3::y())?;
    let los = free_space_channel(c.response, &bs, &SourcePoint::new(user), &c.pattern)?;
    let los_row = crate::CMatrix::from_row_slice(1, los.len(), los.as_slice());
    let trials = p.count("trials");
    let symbols = p.count("symbols");
    let mut acc = [0.0; 11];
    let mut mrt_sinr = (0.0, 0.0);
    let mut zf_sinr = (0.0, 0.0);
    for _ in 0..trials {
        let scatterers: Vec<Scatterer> = if c.scatterers.is_empty() {
            (1..p.count("paths"))
                .map(|_| {
                    let r = r_lo + (r_hi - r_lo) * rng.random::<f64>();
                    let theta = PI * (0.1 + 0.8 * rng.random::<f64>());
                    let mut s = Scatterer::new(SourcePoint::polar(&bs, r, theta).position, 1.0);
                    s.extra_phase = TAU * rng.random::<f64>();
                    s
                })
                .collect()
        } else {
            c.scatterers.iter().map(|s| Scatterer::new(s.position(&bs), s.rcs_m2)).collect()
        };
        let r = (user - bs.reference()).norm();
        let mut paths =
            vec![BistaticPath { matrix: los_row.clone(), delay: r / SPEED_OF_LIGHT, tx_distance: r, rx_distance: 0.0 }];
        if !scatterers.is_empty() {
            paths.extend(scattered_paths(c.response, &bs, &antenna, &scatterers, &c.pattern, &GainPattern::Isotropic)?);
        }
        let taps = taps_from_paths(&paths, p.get("sample_period_s"))?;
        let block = qpsk_symbols(symbols.max(2 * taps.max_delay() + 1), rng.random::<u64>());
        let noise_seed = rng.random::<u64>();
        let mrt = path_mrt(&taps, power)?;
        let link = simulate_dam_link(&taps, &mrt, &block, 1.0, noise_seed)?;
        acc[0] += taps.paths() as f64;
        acc[1] += power * taps.vectors().iter().map(|h| h.norm_squared()).sum::<f64>();
        acc[2] += link.analytic.signal;
        acc[3] += link.analytic.isi;
        acc[4] += link.analytic.isi / link.analytic.signal;
        add_sinr(&mut mrt_sinr, &link);
        if taps.antennas() >= taps.paths() {
            let zf = path_zf(&taps, power, &ZfCombiners::MaxGain)?;
            let link = simulate_dam_link(&taps, &zf, &block, 1.0, noise_seed)?;
            acc[7] += link.analytic.signal;
            acc[8] += link.analytic.isi;
            add_sinr(&mut zf_sinr, &link);
        } else {
            acc[7] = f64::NAN;
            acc[8] = f64::NAN;
            zf_sinr = (f64::NAN, f64::NAN);
        }
    }
    let t = trials as f64;
    acc[5] = mrt_sinr.0;
    acc[6] = mrt_sinr.1;
    acc[9] = zf_sinr.0;
    acc[10] = zf_sinr.1;
    Ok(acc.iter().enumerate().map(|(i, a)| if matches!(i, 5 | 6 | 9 | 10) { to_db(a / t) } else { a / t }).collect())
}

fn add_sinr(acc: &mut (f64, f64), link: &DamLink) {
    acc.0 += link.analytic.sinr();
    acc.1 += link.empirical.sinr();
}
