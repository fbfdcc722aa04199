use super::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn vehicle_box(cx: f64, cy: f64, w: f64, l: f64, yaw: f64) -> OrientedBox3D {
    OrientedBox3D::new(cx, cy, 0.8, w, l, 1.6, yaw, Label::Vehicle, 1.0)
}

#[test]
fn normalize_angle_half_open() {
    assert!((normalize_angle(std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
    assert!((normalize_angle(-std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
    assert!(normalize_angle(3.0 * std::f64::consts::PI).abs() - std::f64::consts::PI < 1e-12);
    assert!(normalize_angle(0.1).abs() - 0.1 < 1e-12);
}

#[test]
fn transform_quarter_turn() {
    let from = Pose::new(0.0, 0.0, 0.0, std::f64::consts::FRAC_PI_2);
    let world = Pose::origin();
    let out = transform_to_frame(&[[1.0, 0.0, 0.0]], &from, &world);
    assert!((out[0][0] - 0.0).abs() < 1e-12);
    assert!((out[0][1] - 1.0).abs() < 1e-12);
    assert!((out[0][2] - 0.0).abs() < 1e-12);
}

#[test]
fn transform_identity_when_frames_equal() {
    let p = Pose::new(3.0, -2.0, 1.3, 0.7);
    let pts = [[0.4, 1.9, -0.3], [10.0, 0.0, 2.0]];
    let out = transform_to_frame(&pts, &p, &p);
    for (a, b) in pts.iter().zip(out.iter()) {
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-12);
        }
    }
}

#[test]
fn transform_round_trip_random() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..200 {
        let a = Pose::new(
            rng.random_range(-50.0..50.0),
            rng.random_range(-50.0..50.0),
            rng.random_range(0.0..8.0),
            rng.random_range(-3.0..3.0),
        );
        let b = Pose::new(
            rng.random_range(-50.0..50.0),
            rng.random_range(-50.0..50.0),
            rng.random_range(0.0..8.0),
            rng.random_range(-3.0..3.0),
        );
        let pts: Vec<[f64; 3]> = (0..16)
            .map(|_| {
                [
                    rng.random_range(-100.0..100.0),
                    rng.random_range(-100.0..100.0),
                    rng.random_range(-5.0..5.0),
                ]
            })
            .collect();
        let there = transform_to_frame(&pts, &a, &b);
        let back = transform_to_frame(&there, &b, &a);
        for (p, q) in pts.iter().zip(back.iter()) {
            for k in 0..3 {
                assert!((p[k] - q[k]).abs() < 1e-9, "round trip drifted");
            }
        }
    }
}

#[test]
fn iou_identical_boxes() {
    let b = vehicle_box(1.0, 2.0, 2.0, 4.5, 0.3);
    assert!((bev_iou(&b, &b) - 1.0).abs() < 1e-12);
}

#[test]
fn iou_offset_unit_squares() {
    // Intersection 0.5, union 1.5.
    let a = vehicle_box(0.0, 0.0, 1.0, 1.0, 0.0);
    let b = vehicle_box(0.5, 0.0, 1.0, 1.0, 0.0);
    assert!((bev_iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn iou_rotated_square_pair() {
    // 2x2 squares sharing a center, one rotated 45 degrees. Frozen from the
    // jittered-grid Monte-Carlo area oracle at 10^6 samples (tol 1e-3); the
    // octagon intersection also gives the closed form 1/sqrt(2).
    let a = vehicle_box(0.0, 0.0, 2.0, 2.0, 0.0);
    let b = vehicle_box(0.0, 0.0, 2.0, 2.0, std::f64::consts::FRAC_PI_4);
    let expected = 0.707_106_78;
    assert!((bev_iou(&a, &b) - expected).abs() < 1e-3);
    assert!((bev_iou(&b, &a) - bev_iou(&a, &b)).abs() < 1e-15);
}

#[test]
fn iou_disjoint_is_zero() {
    let a = vehicle_box(0.0, 0.0, 2.0, 4.5, 0.0);
    let b = vehicle_box(100.0, 0.0, 2.0, 4.5, 1.0);
    assert_eq!(bev_iou(&a, &b), 0.0);
}

#[test]
fn iou_yaw_invariance_sampled() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..100 {
        let a = vehicle_box(
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(1.0..3.0),
            rng.random_range(2.0..6.0),
            rng.random_range(-3.0..3.0),
        );
        let b = vehicle_box(
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(1.0..3.0),
            rng.random_range(2.0..6.0),
            rng.random_range(-3.0..3.0),
        );
        let base = bev_iou(&a, &b);
        let theta: f64 = rng.random_range(-3.0..3.0);
        let (s, c) = theta.sin_cos();
        let rot = |bx: &OrientedBox3D| {
            let mut r = *bx;
            r.cx = c * bx.cx - s * bx.cy;
            r.cy = s * bx.cx + c * bx.cy;
            r.yaw = normalize_angle(bx.yaw + theta);
            r
        };
        let rotated = bev_iou(&rot(&a), &rot(&b));
        assert!(
            (base - rotated).abs() < 1e-9,
            "iou changed under common rotation: {base} vs {rotated}"
        );
    }
}

#[test]
fn ray_hits_unit_cube_front_face() {
    let b = OrientedBox3D::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, Label::Vehicle, 1.0);
    let ray = Ray::new([-10.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
    let t = ray_box_intersect(&ray, &b).expect("hit");
    assert!((t - 9.5).abs() < 1e-12);
}

#[test]
fn ray_pointing_away_misses() {
    let b = OrientedBox3D::new(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, Label::Vehicle, 1.0);
    let ray = Ray::new([-10.0, 0.0, 0.0], [-1.0, 0.0, 0.0]);
    assert!(ray_box_intersect(&ray, &b).is_none());
}

#[test]
fn ray_from_inside_reports_exit() {
    let b = OrientedBox3D::new(0.0, 0.0, 0.0, 2.0, 2.0, 2.0, 0.0, Label::Vehicle, 1.0);
    let ray = Ray::new([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
    let t = ray_box_intersect(&ray, &b).expect("exit");
    assert!((t - 1.0).abs() < 1e-12);
}

#[test]
fn nms_single_box_passes_through() {
    let b = vehicle_box(0.0, 0.0, 2.0, 4.5, 0.0);
    let out = nms(&[b], 0.5);
    assert_eq!(out.len(), 1);
}

#[test]
fn nms_suppresses_duplicate() {
    let mut hi = vehicle_box(0.0, 0.0, 2.0, 4.5, 0.0);
    hi.confidence = 0.9;
    let mut lo = hi;
    lo.confidence = 0.8;
    let out = nms(&[lo, hi], 0.5);
    assert_eq!(out.len(), 1);
    assert!((out[0].confidence - 0.9).abs() < 1e-15);
}

/// Independent quadratic reference: repeatedly take the most confident
/// unsuppressed box (smaller index on ties) and suppress overlaps.
fn nms_reference(boxes: &[OrientedBox3D], thr: f64) -> Vec<OrientedBox3D> {
    let mut alive: Vec<bool> = vec![true; boxes.len()];
    let mut out = Vec::new();
    loop {
        let mut best: Option<usize> = None;
        for i in 0..boxes.len() {
            if alive[i] && best.is_none_or(|b| boxes[i].confidence > boxes[b].confidence) {
                best = Some(i);
            }
        }
        let Some(b) = best else { break };
        alive[b] = false;
        out.push(boxes[b]);
        for i in 0..boxes.len() {
            if alive[i] && bev_iou(&boxes[b], &boxes[i]) >= thr {
                alive[i] = false;
            }
        }
    }
    out
}

#[test]
fn nms_matches_quadratic_reference() {
    let mut rng = StdRng::seed_from_u64(21);
    for _ in 0..50 {
        let boxes: Vec<OrientedBox3D> = (0..10)
            .map(|_| {
                let mut b = vehicle_box(
                    rng.random_range(-6.0..6.0),
                    rng.random_range(-6.0..6.0),
                    rng.random_range(1.5..2.5),
                    rng.random_range(3.5..6.0),
                    rng.random_range(-3.0..3.0),
                );
                b.confidence = rng.random_range(0.05..1.0);
                b
            })
            .collect();
        let got = nms(&boxes, 0.4);
        let want = nms_reference(&boxes, 0.4);
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g.cx - w.cx).abs() < 1e-12 && (g.confidence - w.confidence).abs() < 1e-12);
        }
    }
}

#[test]
fn min_area_rect_recovers_box_from_corner_view() {
    // Two perpendicular faces of a 4.5 x 2.0 footprint (an L), sampled the
    // way a LiDAR sees a car corner-on. The right-triangle hull makes every
    // edge-aligned rectangle tie on area; support breaks the tie toward the
    // sampled faces.
    let mut pts = Vec::new();
    let mut t = 0.0;
    while t <= 4.5 {
        pts.push([t, 0.0]);
        t += 0.15;
    }
    let mut u = 0.0;
    while u <= 2.0 {
        pts.push([0.0, u]);
        u += 0.15;
    }
    let r = min_area_rect(&pts, 0.05).expect("rect");
    assert!((r.len - 4.5).abs() < 0.11, "len {}", r.len);
    assert!((r.width - 2.0).abs() < 0.11, "width {}", r.width);
    let yaw_mod = normalize_angle(r.yaw).abs();
    let aligned = yaw_mod < 0.02 || (yaw_mod - std::f64::consts::PI).abs() < 0.02;
    assert!(aligned, "fit not face-aligned: yaw {}", r.yaw);
    assert!((r.cx - 2.25).abs() < 0.11 && (r.cy - 1.0).abs() < 0.11);
}

#[test]
fn min_area_rect_axis_aligned_points() {
    let pts = [[0.0, 0.0], [4.0, 0.0], [4.0, 2.0], [0.0, 2.0], [2.0, 1.0]];
    let r = min_area_rect(&pts, 0.05).expect("rect");
    assert!((r.len - 4.0).abs() < 1e-9 && (r.width - 2.0).abs() < 1e-9);
}

#[test]
fn min_area_rect_degenerate_line_is_none() {
    let pts = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
    assert!(min_area_rect(&pts, 0.05).is_none());
}
