//! BEV intersection-over-union of oriented boxes.
//!
//! The intersection of two rotated rectangles is computed with
//! Sutherland-Hodgman convex clipping and its area with the shoelace
//! formula. Degenerate (zero-area) intersections yield 0.

use super::OrientedBox3D;

/// Signed area of a simple polygon (positive if counter-clockwise).
fn shoelace(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % poly.len()];
        acc += x0 * y1 - x1 * y0;
    }
    acc / 2.0
}

/// Clip a polygon against the half-plane left of the directed edge a->b.
fn clip_edge(poly: &[[f64; 2]], a: [f64; 2], b: [f64; 2]) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let side = |p: [f64; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    for i in 0..poly.len() {
        let cur = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let sc = side(cur);
        let sn = side(next);
        if sc >= 0.0 {
            out.push(cur);
        }
        if (sc > 0.0 && sn < 0.0) || (sc < 0.0 && sn > 0.0) {
            let t = sc / (sc - sn);
            out.push([
                cur[0] + t * (next[0] - cur[0]),
                cur[1] + t * (next[1] - cur[1]),
            ]);
        }
    }
    out
}

/// Area of the intersection of two convex counter-clockwise polygons.
pub(crate) fn convex_intersection_area(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> f64 {
    let mut poly: Vec<[f64; 2]> = subject.to_vec();
    for i in 0..clip.len() {
        if poly.len() < 3 {
            return 0.0;
        }
        poly = clip_edge(&poly, clip[i], clip[(i + 1) % clip.len()]);
    }
    shoelace(&poly).abs()
}

/// Bird's-eye-view IoU of two oriented boxes (z is ignored).
///
/// Symmetric by construction and always in [0, 1].
pub fn bev_iou(a: &OrientedBox3D, b: &OrientedBox3D) -> f64 {
    // Swap so the same code path runs regardless of argument order.
    let (first, second) = if (a.cx, a.cy, a.yaw, a.l, a.w) <= (b.cx, b.cy, b.yaw, b.l, b.w) {
        (a, b)
    } else {
        (b, a)
    };
    let inter = convex_intersection_area(&first.corners_bev(), &second.corners_bev());
    if inter <= 0.0 {
        return 0.0;
    }
    let union = first.bev_area() + second.bev_area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}
