//! Exact geometric primitives: poses, oriented boxes, rays, BEV IoU, NMS.
//!
//! Everything here is pure f64 math in a right-handed frame with +z up.
//! Rotations are about +z only (yaw); boxes are upright. The box `l` extent
//! runs along the box's local +x (its heading), `w` across, `h` up.

mod iou;
mod minrect;
mod nms;

pub use iou::bev_iou;
pub use minrect::{convex_hull, min_area_rect, MinAreaRect};
pub use nms::nms;

use serde::{Deserialize, Serialize};

/// Normalize an angle to the half-open interval (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r <= -std::f64::consts::PI {
        r += two_pi;
    } else if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// A rigid planar pose: world position plus heading about +z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            z,
            yaw: normalize_angle(yaw),
        }
    }

    pub fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    /// Map a point from this pose's local frame into the world frame.
    pub fn local_to_world(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        [
            self.x + c * p[0] - s * p[1],
            self.y + s * p[0] + c * p[1],
            self.z + p[2],
        ]
    }

    /// Map a world-frame point into this pose's local frame.
    pub fn world_to_local(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        let dx = p[0] - self.x;
        let dy = p[1] - self.y;
        [c * dx + s * dy, -s * dx + c * dy, p[2] - self.z]
    }
}

/// Object class carried by ground-truth and predicted boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Vehicle,
    NotVehicle,
}

/// An upright oriented box: center, size (w across, l along heading, h up),
/// heading angle, label, and confidence (1.0 for ground truth).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox3D {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub w: f64,
    pub l: f64,
    pub h: f64,
    pub yaw: f64,
    pub label: Label,
    pub confidence: f64,
}

impl OrientedBox3D {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cx: f64,
        cy: f64,
        cz: f64,
        w: f64,
        l: f64,
        h: f64,
        yaw: f64,
        label: Label,
        confidence: f64,
    ) -> Self {
        debug_assert!(w > 0.0 && l > 0.0 && h > 0.0, "box extents must be positive");
        debug_assert!((0.0..=1.0).contains(&confidence));
        Self {
            cx,
            cy,
            cz,
            w,
            l,
            h,
            yaw: normalize_angle(yaw),
            label,
            confidence,
        }
    }

    /// Ground-truth vehicle box sitting with its base at `base_z`.
    pub fn ground_truth(cx: f64, cy: f64, base_z: f64, w: f64, l: f64, h: f64, yaw: f64) -> Self {
        Self::new(cx, cy, base_z + h / 2.0, w, l, h, yaw, Label::Vehicle, 1.0)
    }

    /// BEV footprint corners in world coordinates, counter-clockwise.
    pub fn corners_bev(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.yaw.sin_cos();
        let hl = self.l / 2.0;
        let hw = self.w / 2.0;
        let rot = |lx: f64, ly: f64| [self.cx + c * lx - s * ly, self.cy + s * lx + c * ly];
        [rot(hl, hw), rot(-hl, hw), rot(-hl, -hw), rot(hl, -hw)]
    }

    pub fn bev_area(&self) -> f64 {
        self.w * self.l
    }

    /// Whether a world point lies inside the (closed) box volume.
    pub fn contains_point(&self, p: [f64; 3], margin: f64) -> bool {
        let (s, c) = self.yaw.sin_cos();
        let dx = p[0] - self.cx;
        let dy = p[1] - self.cy;
        let lx = c * dx + s * dy;
        let ly = -s * dx + c * dy;
        let lz = p[2] - self.cz;
        lx.abs() <= self.l / 2.0 + margin
            && ly.abs() <= self.w / 2.0 + margin
            && lz.abs() <= self.h / 2.0 + margin
    }
}

/// A half-infinite ray with unit direction.
#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: [f64; 3],
    pub direction: [f64; 3],
}

impl Ray {
    /// Build a ray, normalizing the direction. Zero directions are invalid.
    pub fn new(origin: [f64; 3], direction: [f64; 3]) -> Self {
        let n = (direction[0] * direction[0]
            + direction[1] * direction[1]
            + direction[2] * direction[2])
            .sqrt();
        debug_assert!(n > 0.0, "ray direction must be nonzero");
        Self {
            origin,
            direction: [direction[0] / n, direction[1] / n, direction[2] / n],
        }
    }

    pub fn point_at(&self, t: f64) -> [f64; 3] {
        [
            self.origin[0] + t * self.direction[0],
            self.origin[1] + t * self.direction[1],
            self.origin[2] + t * self.direction[2],
        ]
    }
}

/// Rigid-transform a point list from one pose's frame into another's.
///
/// Round-trips are exact to well under 1e-9 m; `from == to` is the identity.
pub fn transform_to_frame(points: &[[f64; 3]], from: &Pose, to: &Pose) -> Vec<[f64; 3]> {
    points
        .iter()
        .map(|&p| to.world_to_local(from.local_to_world(p)))
        .collect()
}

/// Smallest nonnegative distance along the ray to the box surface, if any.
///
/// A ray starting inside the box reports the exit distance. Implemented as
/// a slab test in the box's local frame.
pub fn ray_box_intersect(ray: &Ray, b: &OrientedBox3D) -> Option<f64> {
    let (s, c) = b.yaw.sin_cos();
    let ox = ray.origin[0] - b.cx;
    let oy = ray.origin[1] - b.cy;
    let oz = ray.origin[2] - b.cz;
    // Rotate into the box frame (inverse yaw).
    let o = [c * ox + s * oy, -s * ox + c * oy, oz];
    let d = [
        c * ray.direction[0] + s * ray.direction[1],
        -s * ray.direction[0] + c * ray.direction[1],
        ray.direction[2],
    ];
    let half = [b.l / 2.0, b.w / 2.0, b.h / 2.0];

    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for ax in 0..3 {
        if d[ax].abs() < 1e-15 {
            if o[ax].abs() > half[ax] {
                return None;
            }
        } else {
            let inv = 1.0 / d[ax];
            let mut t0 = (-half[ax] - o[ax]) * inv;
            let mut t1 = (half[ax] - o[ax]) * inv;
            if t0 > t1 {
                std::mem::swap(&mut t0, &mut t1);
            }
            t_near = t_near.max(t0);
            t_far = t_far.min(t1);
            if t_near > t_far {
                return None;
            }
        }
    }
    if t_far < 0.0 {
        return None;
    }
    Some(if t_near >= 0.0 { t_near } else { t_far })
}

#[cfg(test)]
mod tests;
