use lav_core::latent::{compute_stats, read_embeddings, read_stats, write_embeddings, write_stats};
use lav_core::mapping::{leaky_tanh_scalar, onset_blend};
use lav_core::trajectory::{
    default_groups, read_trajectory, resample_track, resampled_len, smooth_hierarchical,
    write_trajectory,
};
use lav_core::{
    EmbeddingSequence, FeatureKind, FeatureTrack, LatentStats, LatentTrack, Matrix,
    SmoothingWindows, StyleTrajectory,
};
use proptest::collection::vec;
use proptest::prelude::*;

fn f32_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    vec(-1e3f32..1e3f32, rows * cols)
        .prop_map(move |v| Matrix::from_vec(rows, cols, v.into_iter().map(f64::from).collect()))
}

fn sized_matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| f32_matrix(r, c))
}

fn odd_window() -> impl Strategy<Value = usize> {
    (0usize..6).prop_map(|k| 2 * k + 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lave_roundtrip(m in sized_matrix(20, 9), rate in 0.0f32..200.0) {
        let seq = EmbeddingSequence::new(m, rate as f64).unwrap();
        let bytes = write_embeddings(&seq);
        let back = read_embeddings(&bytes).unwrap();
        prop_assert_eq!(&back, &seq);
        prop_assert_eq!(write_embeddings(&back), bytes);
    }

    #[test]
    fn lavs_roundtrip(
        dim in 1usize..8,
        layers in 1u32..20,
        count in any::<u64>(),
        seed in any::<u64>(),
    ) {
        let mut rng = lav_core::Xoshiro256StarStar::from_seed(seed);
        let mut draw = |n: usize, lo: f64| -> Vec<f64> {
            (0..n).map(|_| (lo + rng.next_uniform() * 10.0) as f32 as f64).collect()
        };
        let mean = draw(dim, -5.0);
        let std = draw(dim, 0.01);
        let anchors = Matrix::from_vec(12, dim, draw(12 * dim, -5.0));
        let stats = LatentStats::new(mean, std, anchors, layers, count).unwrap();
        let bytes = write_stats(&stats);
        prop_assert_eq!(bytes.len(), 16 + 14 * dim * 4 + 8);
        let back = read_stats(&bytes).unwrap();
        prop_assert_eq!(&back, &stats);
        prop_assert_eq!(write_stats(&back), bytes);
    }

    #[test]
    fn lavt_roundtrip(
        (f, l, d) in (1usize..10, 1usize..6, 1usize..6),
        seed in any::<u64>(),
        fps in 1.0f32..120.0,
    ) {
        let mut rng = lav_core::Xoshiro256StarStar::from_seed(seed);
        let data = (0..f * l * d).map(|_| rng.next_gaussian() as f32 as f64).collect();
        let traj = StyleTrajectory::new(data, f, l, d, fps as f64).unwrap();
        let bytes = write_trajectory(&traj);
        let back = read_trajectory(&bytes).unwrap();
        prop_assert_eq!(&back, &traj);
        prop_assert_eq!(write_trajectory(&back), bytes);
    }

    #[test]
    fn stats_moments_ignore_row_order(m in (24usize..60, 1usize..5).prop_flat_map(|(r, c)| f32_matrix(r, c)), rot in 1usize..23) {
        let n = m.rows();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| m.row((i + rot) % n).to_vec()).collect();
        let a = compute_stats(&m, 18, 1).unwrap();
        let b = compute_stats(&Matrix::from_rows(&rows), 18, 1).unwrap();
        for d in 0..m.cols() {
            prop_assert!((a.mean[d] - b.mean[d]).abs() <= 1e-9 * (1.0 + a.mean[d].abs()));
            prop_assert!((a.std[d] - b.std[d]).abs() <= 1e-9 * (1.0 + a.std[d]));
        }
    }

    #[test]
    fn anchors_lie_within_column_range(m in (24usize..60, 1usize..5).prop_flat_map(|(r, c)| f32_matrix(r, c)), seed in any::<u64>()) {
        let s = compute_stats(&m, 18, seed).unwrap();
        for d in 0..m.cols() {
            let col = m.column(d);
            let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for k in 0..12 {
                let a = s.anchors[(k, d)];
                prop_assert!(a >= lo - 1e-9 && a <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn leaky_tanh_odd_and_bounded_slope(x in -50.0f64..50.0, h in 1e-6f64..1.0, c in 0.0f64..1.0) {
        prop_assert_eq!(leaky_tanh_scalar(-x, c), -leaky_tanh_scalar(x, c));
        let slope = (leaky_tanh_scalar(x + h, c) - leaky_tanh_scalar(x, c)) / h;
        prop_assert!(slope >= c - 1e-9 && slope <= 1.0 + c + 1e-6);
    }

    #[test]
    fn blend_stays_on_segment(
        a in f32_matrix(6, 3),
        b in f32_matrix(6, 3),
        o in vec(0.0f64..=1.0, 6),
    ) {
        let ta = LatentTrack { frames: a.clone(), rate: 50.0 };
        let tb = LatentTrack { frames: b.clone(), rate: 50.0 };
        let onset = FeatureTrack { frames: Matrix::from_vec(6, 1, o), rate: 50.0, kind: FeatureKind::Onset };
        let out = onset_blend(&ta, &tb, &onset).unwrap();
        for i in 0..18 {
            let (x, z, y) = (a.as_slice()[i], b.as_slice()[i], out.frames.as_slice()[i]);
            prop_assert!(y >= x.min(z) - 1e-9 && y <= x.max(z) + 1e-9);
        }
    }

    #[test]
    fn smoothing_is_affine_equivariant(
        seed in any::<u64>(),
        scale in -3.0f64..3.0,
        shift in -10.0f64..10.0,
        (fine, mid, coarse) in (odd_window(), odd_window(), odd_window()),
    ) {
        let mut ws = [fine, mid, coarse];
        ws.sort_unstable();
        let windows = SmoothingWindows::new(ws[2], ws[1], ws[0]).unwrap();
        let (f, l, d) = (16, 5, 3);
        let mut rng = lav_core::Xoshiro256StarStar::from_seed(seed);
        let data: Vec<f64> = (0..f * l * d).map(|_| rng.next_gaussian()).collect();
        let mapped: Vec<f64> = data.iter().map(|v| scale * v + shift).collect();
        let groups = default_groups(l).unwrap();
        let a = smooth_hierarchical(&StyleTrajectory::new(data, f, l, d, 30.0).unwrap(), &groups, &windows).unwrap();
        let b = smooth_hierarchical(&StyleTrajectory::new(mapped, f, l, d, 30.0).unwrap(), &groups, &windows).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((scale * x + shift - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn resample_length_and_endpoints(t in 1usize..300, src in 10.0f64..100.0, dst in 10.0f64..100.0) {
        let track = LatentTrack {
            frames: Matrix::from_vec(t, 1, (0..t).map(|i| i as f64).collect()),
            rate: src,
        };
        let out = resample_track(&track, dst).unwrap();
        prop_assert_eq!(out.len(), resampled_len(t, src, dst));
        prop_assert_eq!(out.frames.row(0)[0], 0.0);
        let last = out.frames.row(out.len() - 1)[0];
        prop_assert!(last <= (t - 1) as f64 + 1e-9);
    }
}
