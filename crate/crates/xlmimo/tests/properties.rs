use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use xlmimo::channel::{effective_rank, spatial_correlation, AngularSpectrum, CorrelationSpec};
use xlmimo::codebook::{dft_codebook, polar_codebook, PolarSpec};
use xlmimo::dam::{effective_coefficients, path_mrt, path_zf, MultipathTaps, ZfCombiners};
use xlmimo::experiments::{config_hash, find_experiment, grid, parse_config};
use xlmimo::geometry::{ArrayGeometry, ArrayLayout};
use xlmimo::linalg::{hermitian_defect, min_eigenvalue};
use xlmimo::metrics::{beam_focusing_gain, edof, multiuser_receive_sinr, sampled_far_field_pattern, Beamformer};
use xlmimo::nearfield::{array_response, GainPattern, ResponseModel, SourcePoint};
use xlmimo::training::{overhead_table, Sounder, TrainingMethod, TrainingSetup};
use xlmimo::{CMatrix, CVector, C64};

fn gaussian_vector(rng: &mut ChaCha8Rng, m: usize) -> CVector {
    CVector::from_fn(m, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
    CMatrix::from_fn(r, c, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn ula(elements: usize, lambda: f64) -> ArrayLayout {
    ArrayLayout::along_y(ArrayGeometry::CollocatedUla { elements }, lambda).unwrap()
}

fn random_taps(rng: &mut ChaCha8Rng, m: usize, l: usize) -> MultipathTaps {
    let mut delays: Vec<usize> = Vec::new();
    while delays.len() < l {
        let d = rng.random_range(0..12);
        if !delays.contains(&d) {
            delays.push(d);
        }
    }
    MultipathTaps::new((0..l).map(|_| gaussian_vector(rng, m)).collect(), delays).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn focusing_gain_never_exceeds_one(seed in any::<u64>(), m in 1usize..64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (v, a) = (gaussian_vector(&mut rng, m), gaussian_vector(&mut rng, m));
        prop_assert!(beam_focusing_gain(&v, &a) <= 1.0 + 1e-12);
        prop_assert!((beam_focusing_gain(&v, &v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn far_field_pattern_depends_only_on_the_offset(
        m in 2usize..128,
        target in -0.4f64..0.4,
        delta in -0.4f64..0.4,
        shift in -0.2f64..0.2,
    ) {
        let layout = ula(m, 0.1);
        let base = sampled_far_field_pattern(&layout, target, target - delta).unwrap();
        let moved = sampled_far_field_pattern(&layout, target + shift, target + shift - delta).unwrap();
        prop_assert!((base - moved).abs() <= 1e-12, "{} vs {}", base, moved);
    }

    #[test]
    fn edof_lies_between_one_and_rank(seed in any::<u64>(), r in 1usize..10, c in 1usize..10, k in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = k.min(r).min(c);
        // Product of thin factors has rank k.
        let h = gaussian_matrix(&mut rng, r, k) * gaussian_matrix(&mut rng, k, c);
        let e = edof(&h).unwrap();
        prop_assert!(e >= 1.0 - 1e-9 && e <= k as f64 + 1e-9, "edof {} rank {}", e, k);
        prop_assert!(effective_rank(&h, 1e-6).unwrap() <= k);
    }

    #[test]
    fn mmse_dominates(seed in any::<u64>(), m in 2usize..24, k in 1usize..6, snr_db in 0.0f64..40.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = k.min(m);
        let h: Vec<CVector> = (0..k).map(|_| gaussian_vector(&mut rng, m)).collect();
        let p = vec![10f64.powf(snr_db / 10.0); k];
        let mrc = multiuser_receive_sinr(Beamformer::Mrc, &h, &p).unwrap().sinr;
        let zf = multiuser_receive_sinr(Beamformer::Zf, &h, &p).unwrap().sinr;
        let mmse = multiuser_receive_sinr(Beamformer::Mmse, &h, &p).unwrap().sinr;
        for i in 0..k {
            prop_assert!(mmse[i] >= mrc[i].max(zf[i]) * (1.0 - 1e-9));
        }
    }

    #[test]
    fn path_zf_leaves_a_single_tap(seed in any::<u64>(), l in 1usize..5, extra in 0usize..12, power in 0.1f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let taps = random_taps(&mut rng, l + extra + 1, l);
        let zf = path_zf(&taps, power, &ZfCombiners::MaxGain).unwrap();
        prop_assert!((zf.power() - power).abs() <= 1e-9 * power);
        for (i, f) in zf.beams.iter().enumerate() {
            for (j, h) in taps.vectors().iter().enumerate() {
                if i != j {
                    prop_assert!(h.dotc(f).norm() <= 1e-10 * h.norm() * f.norm());
                }
            }
        }
        let c = effective_coefficients(&taps, &zf).unwrap();
        let n = taps.max_delay();
        for (k, g) in c.iter().enumerate() {
            if k != n {
                prop_assert!(g.norm() <= 1e-10 * c[n].norm().max(1.0));
            }
        }
    }

    #[test]
    fn dam_rate_ignores_common_delay(seed in any::<u64>(), l in 1usize..4, shift in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let taps = random_taps(&mut rng, 8, l);
        let moved = taps.delayed(shift);
        let gain = |t: &MultipathTaps| {
            let zf = path_zf(t, 1.0, &ZfCombiners::MaxGain).unwrap();
            let c = effective_coefficients(t, &zf).unwrap();
            (1.0 + c[t.max_delay()].norm_sqr()).log2()
        };
        prop_assert!((gain(&taps) - gain(&moved)).abs() <= 1e-12 * gain(&taps).max(1.0));
    }

    #[test]
    fn path_mrt_meets_the_power_budget(seed in any::<u64>(), l in 1usize..5, power in 0.1f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let taps = random_taps(&mut rng, 6, l);
        prop_assert!((path_mrt(&taps, power).unwrap().power() - power).abs() <= 1e-12 * power);
    }

    #[test]
    fn one_ring_correlation_is_hermitian_psd(m in 2usize..32, mean in -1.0f64..1.0, spread in 0.01f64..0.5) {
        let spec = CorrelationSpec::OneRing { mean_angle: mean, spread, spectrum: AngularSpectrum::Uniform };
        let r = spatial_correlation(&spec, &ula(m, 0.1)).unwrap();
        prop_assert!(hermitian_defect(&r) <= 1e-12);
        prop_assert!(min_eigenvalue(&r) >= -1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn polar_codewords_are_unit_norm_with_unique_tags(log_n in 3u32..8, delta in 0.2f64..0.8) {
        let n = 1usize << log_n;
        let book = polar_codebook(&ula(n, 0.01), &PolarSpec::non_uniform(delta)).unwrap();
        let mut tags = std::collections::HashSet::new();
        for i in 0..book.len() {
            prop_assert!((book.codeword(i).norm() - 1.0).abs() <= 1e-12);
            prop_assert!(tags.insert((book.tag(i).angle_index, book.tag(i).ring)));
        }
    }

    #[test]
    fn dft_codewords_are_orthonormal(n in 2usize..40) {
        let book = dft_codebook(n).unwrap();
        for p in 0..n {
            for q in 0..n {
                let ip = book.codeword(p).dotc(book.codeword(q)).norm();
                let expected = if p == q { 1.0 } else { 0.0 };
                prop_assert!((ip - expected).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn episodes_spend_the_table_budget(log_n in 4u32..8, k in 1usize..4, log_t in 1u32..4, seed in any::<u64>()) {
        let n = 1usize << log_n;
        let t = (1usize << log_t).min(n);
        let layout = ula(n, 0.01);
        let polar = polar_codebook(&layout, &PolarSpec::non_uniform(0.5)).unwrap();
        let rings = polar.max_rings();
        let table = overhead_table(n, rings, k, t, 4).unwrap();
        let setup = TrainingSetup { dft: dft_codebook(n).unwrap(), polar, layout: layout.clone() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = SourcePoint::spatial(&layout, 2.0 + 20.0 * rng.random::<f64>(), 1.8 * rng.random::<f64>() - 0.9);
        let h = array_response(ResponseModel::Usw, &layout, &s, &GainPattern::Isotropic).unwrap().entries;
        let budgets = [
            (TrainingMethod::Exhaustive, table.exhaustive),
            (TrainingMethod::TwoPhase { candidates: k, region_threshold_db: 3.0 }, table.two_phase),
            (TrainingMethod::Hierarchical { subarray: t }, table.hierarchical),
        ];
        // Codebooks with screened rings hold fewer than N·S entries.
        if setup.polar.len() == n * rings {
            for (m, budget) in budgets {
                let out = setup.run(&m, &mut Sounder::noisy(&h, 100.0, seed)).unwrap();
                prop_assert_eq!(out.overhead, budget, "{}", m.name());
            }
        }
    }

    #[test]
    fn grid_cardinality_is_the_product_of_axes(a in 2usize..6, b in 2usize..6, log in any::<bool>()) {
        let scale = if log { "log" } else { "linear" };
        let cfg = parse_config(&format!(
            "name = \"p\"\nexperiment = \"snr_vs_M\"\nfrequency_hz = 1e9\n[layout]\nkind = \"collocated_ula\"\nelements = 8\n\
             [[sweep]]\nparameter = \"range_m\"\nmin = 20\nmax = 80\nsteps = {a}\nscale = \"{scale}\"\n\
             [[sweep]]\nparameter = \"theta_deg\"\nmin = 30\nmax = 90\nsteps = {b}\n"
        )).unwrap();
        let points = grid(&cfg, find_experiment("snr_vs_M").unwrap()).unwrap();
        prop_assert_eq!(points.len(), a * b);
        prop_assert_eq!(points[0].get("range_m"), 20.0);
        prop_assert_eq!(points[a * b - 1].get("range_m"), 80.0);
        prop_assert_eq!(points[a * b - 1].get("theta_deg"), 90.0);
    }

    #[test]
    fn hash_ignores_output_but_not_seed(seed in any::<u64>(), other in any::<u64>(), dir in "[a-z]{1,8}") {
        let text = format!("name = \"h\"\nexperiment = \"rayleigh_vs_M\"\nfrequency_hz = 1e9\nseed = {seed}\n[layout]\nkind = \"collocated_ula\"\nelements = 8\n");
        let cfg = parse_config(&text).unwrap();
        let mut moved = cfg.clone();
        moved.output = Some(dir.into());
        prop_assert_eq!(config_hash(&cfg), config_hash(&moved));
        let mut reseeded = cfg.clone();
        reseeded.seed = other;
        prop_assert_eq!(config_hash(&cfg) == config_hash(&reseeded), seed == other);
    }
}

#[test]
fn nusw_entries_stay_in_the_upd_band() {
    use xlmimo::nearfield::uniform_power_distance;
    let layout = ula(128, 0.05);
    let iso = GainPattern::Isotropic;
    for theta in [0.3, PI / 4.0, PI / 2.0, 2.5] {
        let r = uniform_power_distance(&layout, theta, 0.9, &iso).unwrap() * 1.001;
        let a = array_response(ResponseModel::Nusw, &layout, &SourcePoint::polar(&layout, r, theta), &iso).unwrap();
        let mags: Vec<f64> = a.entries.iter().map(|x| x.norm()).collect();
        let (lo, hi) = mags.iter().fold((f64::MAX, 0f64), |(l, h), &m| (l.min(m), h.max(m)));
        assert!((lo / hi).powi(2) >= 0.9 - 1e-9, "theta {theta}: {}", (lo / hi).powi(2));
    }
}
