use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use screenmark::bbox::{extract_peaks_grid, intersect_corners, select_best, MarginLines, QuadCandidate};
use screenmark::embedder::{embed_block, make_location_set, Group, MarkParams};
use screenmark::imaging::{fft2_samples, ifft2_samples, psnr, warp_perspective, wiener_residual, RasterImage};
use screenmark::localizer::{detection_sets, score_magnitudes, DetectParams, DetectionSets, SectorAnalyzer};
use screenmark::metrics::iou;
use screenmark::rectify::{embed_payload, estimate_dims, extract_payload, nc, WatermarkPayload};
use screenmark::simulator::{simulate_shot, ShotConfig};
use screenmark::synth::natural_rgb;
use screenmark::{Error, Homography, Line, Point, Quadrilateral};

fn noise_gray(w: usize, h: usize, seed: u64, lo: u8, hi: u8) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..w * h).map(|_| rng.random_range(lo..=hi)).collect();
    RasterImage::new(w, h, 1, data).unwrap()
}

fn quad_strategy() -> impl Strategy<Value = Quadrilateral> {
    (
        -500.0..500.0f64,
        -500.0..500.0f64,
        20.0..400.0f64,
        20.0..400.0f64,
        prop::array::uniform4(-8.0..8.0f64),
        prop::array::uniform4(-8.0..8.0f64),
    )
        .prop_map(|(x, y, w, h, jx, jy)| {
            let r = Quadrilateral::rect(x, y, w, h);
            Quadrilateral::new(
                r.a.add(Point::new(jx[0], jy[0])),
                r.b.add(Point::new(jx[1], jy[1])),
                r.c.add(Point::new(jx[2], jy[2])),
                r.d.add(Point::new(jx[3], jy[3])),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fft_round_trip(side in prop::sample::select(vec![8usize, 32, 128]), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..side * side).map(|_| rng.random_range(-300.0..300.0)).collect();
        let back = ifft2_samples(&fft2_samples(side, &x));
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_images_have_no_residual(v in any::<u8>(), w in 3usize..40, h in 3usize..40) {
        let r = wiener_residual(&RasterImage::filled(w, h, 1, v), 3).unwrap();
        prop_assert!(r.data.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn psnr_symmetric_and_decreasing(seed in any::<u64>(), d1 in 1u8..20, extra in 1u8..20) {
        let img = noise_gray(24, 16, seed, 0, 200);
        let shift = |d: u8| {
            RasterImage::new(24, 16, 1, img.data().iter().map(|&p| p + d).collect()).unwrap()
        };
        let (near, far) = (shift(d1), shift(d1 + extra));
        prop_assert_eq!(psnr(&img, &near).unwrap(), psnr(&near, &img).unwrap());
        prop_assert!(psnr(&img, &near).unwrap() > psnr(&img, &far).unwrap());
    }

    #[test]
    fn identity_warp(seed in any::<u64>(), w in 1usize..30, h in 1usize..30) {
        let img = noise_gray(w, h, seed, 0, 255);
        let out = warp_perspective(&img, &Homography::translation(0.0, 0.0), w, h).unwrap();
        prop_assert_eq!(out, img);
    }

    #[test]
    fn estimate_dims_ignores_rigid_motion(q in quad_strategy(), angle in 0.0..std::f64::consts::TAU, dx in -1e3..1e3f64, dy in -1e3..1e3f64) {
        let moved = q.map(|p| p.rotate(angle).add(Point::new(dx, dy)));
        let (a, b) = (estimate_dims(&q).unwrap(), estimate_dims(&moved).unwrap());
        // rounding may only disagree on a half-pixel tie
        prop_assert!(a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1);
        let w = (q.a.dist(q.b) + q.c.dist(q.d)) / 2.0;
        if (w.fract() - 0.5).abs() > 1e-6 {
            prop_assert_eq!(a.0, b.0);
        }
    }

    #[test]
    fn iou_bounded_and_symmetric(p in quad_strategy(), q in quad_strategy()) {
        let v = iou(&p, &q);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!((v - iou(&q, &p)).abs() < 1e-9);
        prop_assert!((iou(&p, &p) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nc_identity_and_symmetry(a in prop::collection::vec(0u8..2, 1..=32), flips in prop::collection::vec(any::<bool>(), 32)) {
        let b: Vec<u8> = a.iter().zip(&flips).map(|(&x, &f)| x ^ f as u8).collect();
        let (a, b) = (WatermarkPayload::new(a).unwrap(), WatermarkPayload::new(b).unwrap());
        prop_assert_eq!(nc(&a, &a).unwrap(), 1.0);
        prop_assert_eq!(nc(&a, &b).unwrap(), nc(&b, &a).unwrap());
    }

    #[test]
    fn swapped_sets_negate_every_window(seed in any::<u64>()) {
        let params = DetectParams::default();
        let sets = detection_sets(&params).unwrap();
        let swapped = DetectionSets { set_a: sets.set_b.clone(), set_b: sets.set_a.clone(), ..sets.clone() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let side = params.window_side;
        let window: Vec<f64> = (0..side * side).map(|_| rng.random_range(-20.0..20.0)).collect();
        let (mut fwd, mut rev) = (SectorAnalyzer::new(&sets), SectorAnalyzer::new(&swapped));
        let (a, b) = fwd.analyze(&window);
        let s = score_magnitudes(a, b, params.t_ihm, params.top_k);
        let (a, b) = rev.analyze(&window);
        let r = score_magnitudes(a, b, params.t_ihm, params.top_k);
        prop_assert_eq!(r.d, -s.d);
        prop_assert_eq!(r.value, -s.value);
    }

    #[test]
    fn peaks_have_their_sign_and_stay_on_the_grid(
        rows in 1usize..20, cols in 1usize..20, seed in any::<u64>(), count in 1usize..30,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-3i32..=3) as f64).collect();
        let (maxs, mins) = extract_peaks_grid(&values, rows, cols, count);
        prop_assert!(maxs.len() <= count && mins.len() <= count);
        prop_assert!(maxs.iter().all(|p| p.value > 0.0 && p.row < rows && p.col < cols));
        prop_assert!(mins.iter().all(|p| p.value < 0.0 && p.row < rows && p.col < cols));
    }

    #[test]
    fn corners_follow_similarity_transforms(
        x in -200.0..200.0f64, y in -200.0..200.0f64, w in 50.0..500.0f64, h in 50.0..500.0f64,
        tilt in prop::array::uniform4(-0.1..0.1f64),
        angle in 0.0..std::f64::consts::TAU, k in 0.2..5.0f64, dx in -300.0..300.0f64, dy in -300.0..300.0f64,
    ) {
        // tilts small enough that opposite lines never meet inside the box
        let (sy, sx) = ((h / w).min(1.0), (w / h).min(1.0));
        let lines = MarginLines {
            top: Line::from_slope_y(tilt[0] * sy, y),
            bottom: Line::from_slope_y(tilt[1] * sy, y + h),
            left: Line::from_slope_x(tilt[2] * sx, x),
            right: Line::from_slope_x(tilt[3] * sx, x + w),
        };
        let f = |p: Point| p.rotate(angle).scale(k).add(Point::new(dx, dy));
        let moved = MarginLines {
            top: lines.top.map(f).unwrap(),
            bottom: lines.bottom.map(f).unwrap(),
            left: lines.left.map(f).unwrap(),
            right: lines.right.map(f).unwrap(),
        };
        let expect = intersect_corners(&lines).unwrap().map(f);
        let got = intersect_corners(&moved).unwrap();
        let mut e: Vec<Point> = expect.corners().to_vec();
        for c in got.corners() {
            // canonical labels can rotate with the box, so match corners as a set
            let i = (0..e.len()).min_by(|&i, &j| e[i].dist(c).total_cmp(&e[j].dist(c))).unwrap();
            prop_assert!(e[i].dist(c) < 1e-9 * (1.0 + c.norm()), "{:?} vs {:?}", e[i], c);
            e.remove(i);
        }
    }

    #[test]
    fn best_candidate_ignores_positive_rescaling(
        costs in prop::collection::vec(1u32..50, 1..24), k in 1e-3..1e3f64, decision in 0usize..9,
    ) {
        let cands: Vec<QuadCandidate> = costs
            .iter()
            .enumerate()
            .map(|(i, &c)| QuadCandidate {
                quad: Quadrilateral::rect(0.0, 0.0, 1.0, 1.0),
                ap_cost: 1.0,
                a_cost: c as f64,
                local_cost: c as f64,
                peak_count: 13 + i % 6,
                scale_index: i / 6,
                scale: 1.0,
                support: 0.0,
            })
            .collect();
        let scaled: Vec<QuadCandidate> = cands.iter().map(|c| QuadCandidate { local_cost: c.local_cost * k, ..c.clone() }).collect();
        let a = select_best(&cands, decision).unwrap();
        let b = select_best(&scaled, decision).unwrap();
        prop_assert_eq!((a.peak_count, a.scale_index), (b.peak_count, b.scale_index));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn embedding_terminates_on_any_block(seed in any::<u64>(), lo in any::<u8>(), span in 0u8..=255) {
        let hi = lo.saturating_add(span);
        let params = MarkParams::default();
        let block = noise_gray(params.block_side, params.block_side, seed, lo, hi);
        for group in [Group::A, Group::B] {
            let set = make_location_set(&params, group).unwrap();
            let out = embed_block(&block, &set, &params).unwrap();
            prop_assert!(out.iterations <= params.max_iterations);
        }
    }

    #[test]
    fn location_groups_are_disjoint(
        side in prop::sample::select(vec![64usize, 128, 256]),
        r0 in 8.0..20.0f64, span in 2.0..12.0f64,
    ) {
        let params = MarkParams { block_side: side, radius_min: r0, radius_max: r0 + span, ..MarkParams::default() };
        let a = make_location_set(&params, Group::A).unwrap();
        let b = make_location_set(&params, Group::B).unwrap();
        prop_assert!(a.resolved_bins.iter().all(|&(u, v)| !b.contains(u, v)));
        prop_assert!(a.resolved_bins.iter().all(|&(u, v)| a.contains(-u, -v)));
    }

    #[test]
    fn simulated_area_matches_the_request(area in 0.1..0.8f64, angle in 0.0..30.0f64, seed in any::<u64>()) {
        let content = natural_rgb(256, 192, 5);
        let cfg = ShotConfig { area_proportion: area, angle_deg: angle, magnification: 1.5, seed, ..ShotConfig::default() };
        let (shot, truth) = match simulate_shot(&content, &cfg) {
            // a steep tilt cannot fill most of the frame
            Err(Error::AreaUnreachable(_)) if area > 0.5 => return Ok(()),
            r => r.unwrap(),
        };
        let got = truth.area() / (shot.width() * shot.height()) as f64;
        prop_assert!((got - area).abs() <= 0.02, "asked {area}, got {got}");
        let (again, truth2) = simulate_shot(&content, &cfg).unwrap();
        prop_assert_eq!(truth, truth2);
        prop_assert!(shot == again);
    }
}

/// Swapping whole interior tiles keeps every window's reading, so the vote
/// cannot depend on the order the windows are visited in.
#[test]
fn vote_ignores_window_order() {
    let side = 128;
    let payload = WatermarkPayload::from_hex("b7e1").unwrap();
    let marked = embed_payload(&natural_rgb(1024, 768, 11), &payload, side).unwrap();
    let base = extract_payload(&marked, side, 16, None).unwrap();
    let tiles: Vec<(usize, usize)> = (1..5).flat_map(|r| (1..7).map(move |c| (c * side, r * side))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..3 {
        let mut order = tiles.clone();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let mut shuffled = marked.clone();
        for (&(sx, sy), &(dx, dy)) in tiles.iter().zip(&order) {
            shuffled.paste(&marked.crop(sx, sy, side, side).unwrap(), dx, dy).unwrap();
        }
        let ex = extract_payload(&shuffled, side, 16, None).unwrap();
        assert_eq!(ex.payload, base.payload);
        assert_eq!(ex.windows_used, base.windows_used);
        assert!((ex.confidence - base.confidence).abs() < 1e-12);
    }
}
