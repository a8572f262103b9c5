use proptest::prelude::*;

use segbench_core::contours::rasterize_slice;
use segbench_core::growcut::{self, GrowCutParams, SeedLabel, SeedSet};
use segbench_core::metrics::{dice, euclidean_distance_transform, hausdorff, hausdorff_squared};
use segbench_core::nrrd::{self, NrrdGrid};
use segbench_core::stats;
use segbench_core::volume::{window_level, Dims, LabelGrid, Plane, Spacing, VolumeGrid};

fn dims_upto(n: usize) -> impl Strategy<Value = Dims> {
    (1..=n, 1..=n, 1..=n).prop_map(|(x, y, z)| Dims::new(x, y, z))
}

fn volume(n: usize) -> impl Strategy<Value = VolumeGrid> {
    (dims_upto(n), 0.05f64..4.0, 0.05f64..4.0, 0.05f64..4.0).prop_flat_map(|(d, sx, sy, sz)| {
        prop::collection::vec(any::<i16>(), d.len())
            .prop_map(move |s| VolumeGrid::new(d, Spacing([sx, sy, sz]), s).unwrap())
    })
}

fn mask_pair(n: usize) -> impl Strategy<Value = (LabelGrid, LabelGrid)> {
    dims_upto(n).prop_flat_map(|d| {
        let m = prop::collection::vec(prop::bool::weighted(0.3), d.len()).prop_map(move |bits| {
            let mut labels: Vec<u8> = bits.into_iter().map(u8::from).collect();
            if labels.iter().all(|&l| l == 0) {
                labels[0] = 1;
            }
            LabelGrid::new(d, Spacing::UNIT, labels).unwrap()
        });
        (m.clone(), m)
    })
}

fn brute_edt(m: &LabelGrid) -> Vec<u64> {
    let d = m.dims();
    let on: Vec<[usize; 3]> = (0..d.len()).filter(|&i| m.labels()[i] != 0).map(|i| d.coords(i)).collect();
    (0..d.len())
        .map(|i| {
            let p = d.coords(i);
            on.iter()
                .map(|q| (0..3).map(|k| (p[k].abs_diff(q[k]) as u64).pow(2)).sum::<u64>())
                .min()
                .unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nrrd_volume_round_trip(v in volume(16)) {
        let back = nrrd::parse_nrrd(&nrrd::write_volume(&v)).unwrap().into_volume().unwrap();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn nrrd_mask_round_trip((a, _) in mask_pair(12)) {
        let bytes = nrrd::write_labels(&a);
        prop_assert!(bytes.windows(11).any(|w| w == b"type: uchar"));
        let back = nrrd::parse_nrrd(&bytes).unwrap();
        prop_assert!(matches!(back, NrrdGrid::Labels(_)));
        prop_assert_eq!(back.into_labels().unwrap(), a);
    }

    #[test]
    fn truncated_payload_is_rejected(v in volume(6), cut in 1usize..4) {
        let bytes = nrrd::write_volume(&v);
        prop_assert!(nrrd::parse_nrrd(&bytes[..bytes.len() - cut]).is_err());
    }

    #[test]
    fn slices_index_the_grid(v in volume(8)) {
        let d = v.dims();
        for plane in Plane::ALL {
            for index in 0..plane.extent(d) {
                let s = v.slice(plane, index).unwrap();
                prop_assert_eq!((s.width, s.height), plane.slice_size(d));
                for vv in 0..s.height {
                    for u in 0..s.width {
                        let [x, y, z] = plane.voxel(index, u, vv);
                        prop_assert_eq!(s.get(u, vv), v.get(x, y, z));
                    }
                }
            }
            prop_assert!(v.slice(plane, plane.extent(d)).is_err());
        }
    }

    #[test]
    fn window_level_is_monotone(v in volume(6), window in 1.0f64..4000.0, level in -1000.0f64..1000.0) {
        let s = v.slice(Plane::Axial, 0).unwrap();
        let out = window_level(&s, window, level).unwrap();
        let mut pairs: Vec<(i16, u8)> = s.samples.iter().copied().zip(out.samples.iter().copied()).collect();
        pairs.sort();
        prop_assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
    }

    #[test]
    fn edt_matches_brute_force((a, _) in mask_pair(9)) {
        let field = euclidean_distance_transform(&a).unwrap();
        prop_assert_eq!(field.squared(), &brute_edt(&a)[..]);
    }

    #[test]
    fn hausdorff_is_a_metric((a, b) in mask_pair(8), seed in any::<u64>()) {
        let hab = hausdorff(&a, &b).unwrap();
        prop_assert_eq!(hab, hausdorff(&b, &a).unwrap());
        prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        // Third mask derived from the seed for the triangle inequality.
        let d = a.dims();
        let mut labels: Vec<u8> = (0..d.len()).map(|i| u8::from((seed >> (i % 64)) & 1 == 1)).collect();
        if labels.iter().all(|&l| l == 0) {
            labels[0] = 1;
        }
        let c = LabelGrid::new(d, Spacing::UNIT, labels).unwrap();
        let hac = hausdorff(&a, &c).unwrap();
        let hcb = hausdorff(&c, &b).unwrap();
        prop_assert!(hab <= hac + hcb + 1e-9);
    }

    #[test]
    fn dice_symmetric_and_bounded((a, b) in mask_pair(10)) {
        let d = dice(&a, &b).unwrap();
        prop_assert_eq!(d, dice(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(dice(&a, &a).unwrap(), 1.0);
        if d == 1.0 {
            prop_assert_eq!(hausdorff_squared(&a, &b).unwrap(), 0);
        }
    }

    #[test]
    fn rasterizer_translation_invariant(
        pts in prop::collection::vec((0i32..40, 0i32..40), 3..9),
        shift in (0i32..8, 0i32..8),
    ) {
        // Quarter-pixel vertices keep the shifted crossings exact.
        let poly: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x as f64 / 4.0, y as f64 / 4.0]).collect();
        let moved: Vec<[f64; 2]> = poly.iter().map(|p| [p[0] + shift.0 as f64, p[1] + shift.1 as f64]).collect();
        let (n, m) = (12usize, 12 + 8usize);
        let a = rasterize_slice(&[poly], n, n).unwrap();
        let b = rasterize_slice(&[moved], m, m).unwrap();
        for j in 0..n {
            for i in 0..n {
                let (si, sj) = (i + shift.0 as usize, j + shift.1 as usize);
                prop_assert_eq!(a[j * n + i], b[sj * m + si]);
            }
        }
    }

    #[test]
    fn rasterizer_ignores_vertex_order(pts in prop::collection::vec((0i32..48, 0i32..48), 3..9)) {
        let poly: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x as f64 / 4.0, y as f64 / 4.0]).collect();
        let mut rev = poly.clone();
        rev.reverse();
        let mut rot = poly.clone();
        rot.rotate_left(1);
        let a = rasterize_slice(&[poly], 12, 12).unwrap();
        prop_assert_eq!(&a, &rasterize_slice(&[rev], 12, 12).unwrap());
        prop_assert_eq!(&a, &rasterize_slice(&[rot], 12, 12).unwrap());
    }

    #[test]
    fn p_value_matches_reference(t in -8.0f64..8.0, df in 1u32..60) {
        use statrs::distribution::{ContinuousCDF, StudentsT};
        let reference = 2.0 * StudentsT::new(0.0, 1.0, df as f64).unwrap().cdf(-t.abs());
        let p = stats::student_t_two_sided_p(t, df as f64);
        prop_assert!((p - reference).abs() < 1e-9, "t {} df {}: {} vs {}", t, df, p, reference);
    }

    #[test]
    fn incomplete_beta_matches_reference(x in 0.0f64..=1.0, a in 0.1f64..30.0, b in 0.1f64..30.0) {
        let reference = statrs::function::beta::beta_reg(a, b, x);
        let got = stats::regularized_incomplete_beta(x, a, b);
        prop_assert!((got - reference).abs() < 1e-9, "{} vs {}", got, reference);
    }

    #[test]
    fn ln_gamma_matches_reference(x in 0.01f64..150.0) {
        let reference = statrs::function::gamma::ln_gamma(x);
        prop_assert!((stats::ln_gamma(x) - reference).abs() < 1e-9 * reference.abs().max(1.0));
    }

    #[test]
    fn paired_stats_invariances(
        pairs in prop::collection::vec((-1000.0f64..1000.0, -1000.0f64..1000.0), 3..20),
        scale in 0.1f64..10.0,
        offset in -100.0f64..100.0,
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        prop_assume!(stats::sample_sd(&a) > 1e-6 && stats::sample_sd(&b) > 1e-6);
        let r = stats::pearson_r(&a, &b).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        let affine: Vec<f64> = a.iter().map(|v| scale * v + offset).collect();
        prop_assert!((stats::pearson_r(&affine, &b).unwrap() - r).abs() < 1e-9);

        let diff_sd = stats::sample_sd(&a.iter().zip(&b).map(|(x, y)| x - y).collect::<Vec<_>>());
        prop_assume!(diff_sd > 1e-6);
        let ab = stats::paired_t_two_sided(&a, &b).unwrap();
        let ba = stats::paired_t_two_sided(&b, &a).unwrap();
        prop_assert!((ab.t + ba.t).abs() < 1e-9 * ab.t.abs().max(1.0));
        prop_assert!((ab.p - ba.p).abs() < 1e-12);
        let sa: Vec<f64> = a.iter().map(|v| v * scale).collect();
        let sb: Vec<f64> = b.iter().map(|v| v * scale).collect();
        let scaled = stats::paired_t_two_sided(&sa, &sb).unwrap();
        prop_assert!((scaled.t - ab.t).abs() < 1e-8 * ab.t.abs().max(1.0));
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }

    #[test]
    fn origin_slope_scales(
        pairs in prop::collection::vec((1.0f64..1000.0, 1.0f64..1000.0), 3..20),
        k in 0.1f64..10.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let fit = stats::regression_through_origin(&x, &y).unwrap();
        let ky: Vec<f64> = y.iter().map(|v| v * k).collect();
        let scaled = stats::regression_through_origin(&x, &ky).unwrap();
        prop_assert!((scaled.slope - k * fit.slope).abs() < 1e-9 * (k * fit.slope).abs());
        prop_assert!((scaled.slope_se - k * fit.slope_se).abs() < 1e-7 * (k * fit.slope_se).abs().max(1e-12));
    }

    #[test]
    fn quartiles_are_ordered(v in prop::collection::vec(-1e6f64..1e6, 1..40)) {
        let f = stats::five_number(&v).unwrap();
        prop_assert!(f.min <= f.q1 && f.q1 <= f.median && f.median <= f.q3 && f.q3 <= f.max);
    }
}

fn seeded_volume(n: usize, seed: u64) -> (VolumeGrid, SeedSet) {
    let dims = Dims::new(n, n, n);
    let mut state = seed | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let v = VolumeGrid::new(dims, Spacing::UNIT, (0..dims.len()).map(|_| (next() % 2000) as i16 - 1000).collect()).unwrap();
    let mut seeds = SeedSet::new(dims);
    let fg = dims.coords((next() as usize) % dims.len());
    seeds.insert(fg, SeedLabel::Foreground).unwrap();
    let bg = dims.coords((next() as usize) % dims.len());
    let _ = seeds.insert(bg, SeedLabel::Background);
    (v, seeds)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn growcut_front_equals_full_sweep(seed in any::<u64>(), n in 2usize..10) {
        let (v, seeds) = seeded_volume(n, seed);
        let (state, summary) = growcut::grow(&v, &seeds, &GrowCutParams::with_max_iterations(10_000)).unwrap();
        let mut full = growcut::init_state(&v, &seeds).unwrap();
        let mut generations = 1;
        while growcut::step(&mut full, &v) > 0 {
            generations += 1;
        }
        prop_assert!(summary.converged);
        prop_assert_eq!(summary.iterations, generations);
        prop_assert_eq!(state.labels(), full.labels());
        prop_assert_eq!(state.strength(), full.strength());
    }

    #[test]
    fn growcut_seed_order_irrelevant(seed in any::<u64>()) {
        let (v, seeds) = seeded_volume(6, seed);
        let mut reversed = SeedSet::new(v.dims());
        let all: Vec<_> = seeds.iter().collect();
        for (c, l) in all.into_iter().rev() {
            reversed.insert(c, l).unwrap();
        }
        let a = growcut::segment(&v, &seeds, &GrowCutParams::default()).unwrap();
        let b = growcut::segment(&v, &reversed, &GrowCutParams::default()).unwrap();
        prop_assert_eq!(a.mask, b.mask);
    }
}
