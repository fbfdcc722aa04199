//! Spinning-LiDAR simulation: first-hit ray casting against actor boxes,
//! occluder boxes, and the ground plane.
//!
//! Rays are cast per (channel, azimuth) from the agent's mount pose; each
//! ray keeps its nearest intersection within the range gate, excluding the
//! agent's own body. Azimuth columns are independent, so casting is
//! data-parallel; output order is fixed by (azimuth, channel).

use serde::{Deserialize, Serialize};
use std::io::{self, Read, Write};

use crate::geometry::OrientedBox3D;
use crate::par_map;
use crate::scene::{Scene, VEHICLE_MOUNT_HEIGHT};

/// Beam pattern and range gate of one LiDAR unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarConfig {
    pub n_channels: usize,
    /// (lowest, highest) beam elevation, radians.
    pub vertical_fov: (f64, f64),
    /// Horizontal angle between consecutive azimuth columns, radians.
    /// Must divide a full turn to within 1e-9.
    pub azimuth_step: f64,
    pub min_range: f64,
    pub max_range: f64,
}

impl LidarConfig {
    pub fn new(
        n_channels: usize,
        vertical_fov: (f64, f64),
        azimuth_step: f64,
        min_range: f64,
        max_range: f64,
    ) -> Self {
        assert!(n_channels >= 1);
        assert!(vertical_fov.0 < vertical_fov.1);
        assert!(min_range < max_range && min_range >= 0.0);
        let n = (std::f64::consts::TAU / azimuth_step).round();
        assert!(
            n >= 1.0 && (n * azimuth_step - std::f64::consts::TAU).abs() < 1e-9,
            "azimuth step must divide a full turn"
        );
        Self {
            n_channels,
            vertical_fov,
            azimuth_step,
            min_range,
            max_range,
        }
    }

    /// 32 channels over [-25 deg, +5 deg], 0.5 deg azimuth, 120 m.
    pub fn vehicle_default() -> Self {
        Self::new(
            32,
            ((-25f64).to_radians(), 5f64.to_radians()),
            0.5f64.to_radians(),
            0.5,
            120.0,
        )
    }

    /// 32 channels over [-60 deg, +5 deg] for elevated mounts.
    pub fn infra_default() -> Self {
        Self::new(
            32,
            ((-60f64).to_radians(), 5f64.to_radians()),
            0.5f64.to_radians(),
            0.5,
            120.0,
        )
    }

    pub fn n_azimuths(&self) -> usize {
        (std::f64::consts::TAU / self.azimuth_step).round() as usize
    }

    fn elevations(&self) -> Vec<f64> {
        let (lo, hi) = self.vertical_fov;
        if self.n_channels == 1 {
            return vec![(lo + hi) / 2.0];
        }
        let step = (hi - lo) / (self.n_channels - 1) as f64;
        (0..self.n_channels).map(|i| lo + step * i as f64).collect()
    }
}

/// One agent's returns for one frame, in that agent's sensor frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<[f64; 3]>,
    pub source_agent: usize,
    pub timestamp: usize,
}

impl PointCloud {
    pub fn empty(source_agent: usize, timestamp: usize) -> Self {
        Self {
            points: Vec::new(),
            source_agent,
            timestamp,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Box data flattened for the inner intersection loop.
struct Slab {
    cx: f64,
    cy: f64,
    cz: f64,
    sin: f64,
    cos: f64,
    half: [f64; 3],
}

impl Slab {
    fn from_box(b: &OrientedBox3D) -> Self {
        let (sin, cos) = b.yaw.sin_cos();
        Self {
            cx: b.cx,
            cy: b.cy,
            cz: b.cz,
            sin,
            cos,
            half: [b.l / 2.0, b.w / 2.0, b.h / 2.0],
        }
    }

    /// Nearest nonnegative surface distance, as in
    /// [`crate::geometry::ray_box_intersect`], inlined for the hot loop.
    #[inline]
    fn hit(&self, origin: [f64; 3], dir: [f64; 3]) -> Option<f64> {
        let ox = origin[0] - self.cx;
        let oy = origin[1] - self.cy;
        let o = [
            self.cos * ox + self.sin * oy,
            -self.sin * ox + self.cos * oy,
            origin[2] - self.cz,
        ];
        let d = [
            self.cos * dir[0] + self.sin * dir[1],
            -self.sin * dir[0] + self.cos * dir[1],
            dir[2],
        ];
        let mut t_near = f64::NEG_INFINITY;
        let mut t_far = f64::INFINITY;
        for ax in 0..3 {
            if d[ax].abs() < 1e-15 {
                if o[ax].abs() > self.half[ax] {
                    return None;
                }
            } else {
                let inv = 1.0 / d[ax];
                let mut t0 = (-self.half[ax] - o[ax]) * inv;
                let mut t1 = (self.half[ax] - o[ax]) * inv;
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                if t0 > t_near {
                    t_near = t0;
                }
                if t1 < t_far {
                    t_far = t1;
                }
                if t_near > t_far {
                    return None;
                }
            }
        }
        if t_far < 0.0 {
            None
        } else if t_near >= 0.0 {
            Some(t_near)
        } else {
            Some(t_far)
        }
    }
}

/// Cast the full sweep for one agent at one frame.
///
/// Candidates are the frame's actor boxes (minus the agent's own body),
/// the occluders, and the ground plane z = 0. Each ray returns its nearest
/// intersection within `[min_range, max_range]`. Points are expressed in
/// the sensor frame. Deterministic; azimuth columns run in parallel.
pub fn raycast(scene: &Scene, frame: usize, agent: usize, cfg: &LidarConfig) -> PointCloud {
    assert!(frame < scene.frames.len(), "frame out of bounds");
    assert!(agent < scene.agents.len(), "agent out of bounds");
    let pose = scene.frames[frame].agent_poses[agent];
    let origin = [pose.x, pose.y, pose.z];
    let own_body = scene.agent_body_actor[agent];

    let slabs: Vec<Slab> = scene.frames[frame]
        .actors
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != own_body)
        .map(|(_, b)| Slab::from_box(b))
        .chain(scene.occluders.iter().map(Slab::from_box))
        .collect();

    let elevations = cfg.elevations();
    let trig: Vec<(f64, f64)> = elevations.iter().map(|e| e.sin_cos()).collect();
    let n_az = cfg.n_azimuths();
    let min_r = cfg.min_range;
    let max_r = cfg.max_range;

    let columns: Vec<Vec<[f64; 3]>> = par_map((0..n_az).collect(), |k| {
        let az = pose.yaw + cfg.azimuth_step * k as f64;
        let (saz, caz) = az.sin_cos();
        let mut pts = Vec::new();
        for &(sel, cel) in &trig {
            let dir = [cel * caz, cel * saz, sel];
            let mut best = f64::INFINITY;
            for slab in &slabs {
                if let Some(t) = slab.hit(origin, dir) {
                    if t < best {
                        best = t;
                    }
                }
            }
            // Ground plane z = 0.
            if dir[2] < 0.0 {
                let t = -origin[2] / dir[2];
                if t < best {
                    best = t;
                }
            }
            if best >= min_r && best <= max_r {
                let world = [
                    origin[0] + best * dir[0],
                    origin[1] + best * dir[1],
                    origin[2] + best * dir[2],
                ];
                pts.push(pose.world_to_local(world));
            }
        }
        pts
    });

    PointCloud {
        points: columns.into_iter().flatten().collect(),
        source_agent: agent,
        timestamp: frame,
    }
}

/// Count cloud points inside the actor box inflated by 1 cm. The cloud is
/// in the sensing agent's frame; `agent_pose` maps it to the world.
pub fn points_on_actor(
    cloud: &PointCloud,
    actor: &OrientedBox3D,
    agent_pose: &crate::geometry::Pose,
) -> usize {
    cloud
        .points
        .iter()
        .filter(|&&p| actor.contains_point(agent_pose.local_to_world(p), 0.01))
        .count()
}

/// Default LiDAR for an agent (vehicles get the narrow vertical FOV, poles
/// the steep one).
pub fn default_lidar_for(scene: &Scene, agent: usize) -> LidarConfig {
    match scene.agents[agent].kind {
        crate::scene::AgentKind::Vehicle => LidarConfig::vehicle_default(),
        crate::scene::AgentKind::Infrastructure => LidarConfig::infra_default(),
    }
}

/// Write a cloud as an 8-byte little-endian point count followed by
/// float32 (x, y, z) triples.
pub fn write_cloud<W: Write>(w: &mut W, cloud: &PointCloud) -> io::Result<()> {
    w.write_all(&(cloud.points.len() as u64).to_le_bytes())?;
    for p in &cloud.points {
        for &c in p {
            w.write_all(&(c as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

/// Read a cloud written by [`write_cloud`]. Agent id and timestamp are not
/// part of the dump format.
pub fn read_cloud<R: Read>(r: &mut R) -> io::Result<PointCloud> {
    let mut header = [0u8; 8];
    r.read_exact(&mut header)?;
    let n = u64::from_le_bytes(header) as usize;
    let mut points = Vec::with_capacity(n);
    let mut buf = [0u8; 4];
    for _ in 0..n {
        let mut p = [0.0f64; 3];
        for c in &mut p {
            r.read_exact(&mut buf)?;
            *c = f32::from_le_bytes(buf) as f64;
        }
        points.push(p);
    }
    Ok(PointCloud {
        points,
        source_agent: 0,
        timestamp: 0,
    })
}

/// Hand-build a minimal scene for sensing tests: one agent at the origin
/// plus the given boxes, one frame, no agent body.
pub fn single_agent_scene(
    sensor_z: f64,
    actors: Vec<OrientedBox3D>,
    occluders: Vec<OrientedBox3D>,
) -> Scene {
    use crate::geometry::Pose;
    use crate::scene::{AgentKind, AgentSpec, Frame, SCENE_SCHEMA_VERSION};
    let pose = Pose::new(0.0, 0.0, sensor_z, 0.0);
    Scene {
        schema_version: SCENE_SCHEMA_VERSION,
        spec: None,
        occluders,
        agents: vec![AgentSpec {
            kind: if sensor_z > VEHICLE_MOUNT_HEIGHT + 0.5 {
                AgentKind::Infrastructure
            } else {
                AgentKind::Vehicle
            },
            mount_pose: pose,
            is_ego: true,
        }],
        agent_body_actor: vec![None],
        frames: vec![Frame {
            actors,
            agent_poses: vec![pose],
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Label;

    fn cube(cx: f64, cy: f64, cz: f64, side: f64) -> OrientedBox3D {
        OrientedBox3D::new(cx, cy, cz, side, side, side, 0.0, Label::Vehicle, 1.0)
    }

    #[test]
    fn front_face_hits_only() {
        // Unit cube 10 m ahead at sensor height; every hit lies on the
        // front face plane x = 9.5 and matches the analytic slab distance.
        // Elevation band chosen so downward rays reach the ground only
        // beyond max range: every return is a box hit.
        let scene = single_agent_scene(1.9, vec![cube(10.0, 0.0, 1.9, 1.0)], vec![]);
        let cfg = LidarConfig::new(
            16,
            ((-0.5f64).to_radians(), 2.5f64.to_radians()),
            0.25f64.to_radians(),
            0.5,
            120.0,
        );
        let cloud = raycast(&scene, 0, 0, &cfg);
        assert!(!cloud.is_empty());
        let corner_bound = (9.5f64 * 9.5 + 0.5 * 0.5 + 0.5 * 0.5).sqrt();
        for p in &cloud.points {
            let world = scene.frames[0].agent_poses[0].local_to_world(*p);
            assert!((world[0] - 9.5).abs() < 1e-9, "hit off the front face");
            let dist = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert!(dist >= 9.5 - 1e-9 && dist <= corner_bound + 1e-9);
            let dir_x = p[0] / dist;
            assert!((dist - 9.5 / dir_x).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_scene_upward_beams_return_nothing() {
        let scene = single_agent_scene(1.9, vec![], vec![]);
        let cfg = LidarConfig::new(
            4,
            (0.5f64.to_radians(), 5f64.to_radians()),
            1f64.to_radians(),
            0.5,
            120.0,
        );
        let cloud = raycast(&scene, 0, 0, &cfg);
        assert!(cloud.is_empty());
    }

    #[test]
    fn occluded_actor_visible_only_from_elevation() {
        // A 3.5 m wall 12 m out hides a sedan at 30 m from a vehicle-height
        // sensor; the elevated sensor sees over it.
        let wall = OrientedBox3D::new(12.0, 0.0, 1.75, 0.8, 8.0, 3.5, 0.0, Label::NotVehicle, 1.0);
        let sedan = OrientedBox3D::ground_truth(30.0, 0.0, 0.3, 2.0, 4.5, 1.6, 0.0);
        let cfg = LidarConfig::vehicle_default();

        let low = single_agent_scene(1.9, vec![sedan], vec![wall]);
        let low_cloud = raycast(&low, 0, 0, &cfg);
        let low_pose = low.frames[0].agent_poses[0];
        assert_eq!(points_on_actor(&low_cloud, &sedan, &low_pose), 0);

        let high = single_agent_scene(5.9, vec![sedan], vec![wall]);
        let high_cloud = raycast(&high, 0, 0, &LidarConfig::infra_default());
        let high_pose = high.frames[0].agent_poses[0];
        assert!(points_on_actor(&high_cloud, &sedan, &high_pose) > 0);
    }

    #[test]
    fn first_hit_matches_exhaustive_oracle() {
        let actors = vec![
            cube(8.0, 1.0, 1.0, 2.0),
            cube(14.0, -2.0, 1.0, 2.0),
            OrientedBox3D::ground_truth(11.0, 3.0, 0.3, 2.0, 4.5, 1.6, 0.7),
        ];
        let occluders = vec![OrientedBox3D::new(
            6.0,
            -1.5,
            1.0,
            0.5,
            3.0,
            2.0,
            -0.4,
            Label::NotVehicle,
            1.0,
        )];
        let scene = single_agent_scene(1.9, actors.clone(), occluders.clone());
        let cfg = LidarConfig::new(
            8,
            ((-20f64).to_radians(), 2f64.to_radians()),
            2f64.to_radians(),
            0.5,
            60.0,
        );
        let cloud = raycast(&scene, 0, 0, &cfg);
        let pose = scene.frames[0].agent_poses[0];
        let all: Vec<OrientedBox3D> = actors.iter().chain(occluders.iter()).copied().collect();
        for p in &cloud.points {
            let world = pose.local_to_world(*p);
            let dist = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            let dir = [
                (world[0] - pose.x) / dist,
                (world[1] - pose.y) / dist,
                (world[2] - pose.z) / dist,
            ];
            let ray = crate::geometry::Ray::new([pose.x, pose.y, pose.z], dir);
            let mut best = f64::INFINITY;
            for b in &all {
                if let Some(t) = crate::geometry::ray_box_intersect(&ray, b) {
                    best = best.min(t);
                }
            }
            if dir[2] < 0.0 {
                best = best.min(-pose.z / dir[2]);
            }
            assert!(
                (best - dist).abs() < 1e-6,
                "returned {dist}, exhaustive minimum {best}"
            );
        }
    }

    #[test]
    fn no_point_strictly_inside_any_box() {
        let scene = crate::scene::generate(&crate::scene::ScenarioSpec::new(
            crate::scene::Archetype::MergeRamp,
            2,
        ))
        .unwrap();
        let cfg = LidarConfig::vehicle_default();
        let cloud = raycast(&scene, 0, 0, &cfg);
        let pose = scene.frames[0].agent_poses[0];
        for p in &cloud.points {
            let world = pose.local_to_world(*p);
            for b in scene.frames[0].actors.iter().chain(scene.occluders.iter()) {
                assert!(
                    !b.contains_point(world, -1e-6),
                    "point strictly inside a box"
                );
            }
        }
    }

    #[test]
    fn elevation_monotonicity() {
        let wall = OrientedBox3D::new(10.0, 0.0, 1.25, 0.5, 6.0, 2.5, 0.0, Label::NotVehicle, 1.0);
        let sedan = OrientedBox3D::ground_truth(22.0, 0.0, 0.3, 2.0, 4.5, 1.6, 0.0);
        let mut last = 0usize;
        for &h in &[1.0, 2.0, 3.5, 5.0, 6.5] {
            let scene = single_agent_scene(h, vec![sedan], vec![wall]);
            let cloud = raycast(&scene, 0, 0, &LidarConfig::infra_default());
            let pose = scene.frames[0].agent_poses[0];
            let n = points_on_actor(&cloud, &sedan, &pose);
            assert!(
                n >= last,
                "visibility dropped from {last} to {n} at height {h}"
            );
            last = n;
        }
        assert!(last > 0);
    }

    #[test]
    fn cloud_points_within_range_gate() {
        let scene = crate::scene::generate(&crate::scene::ScenarioSpec::new(
            crate::scene::Archetype::FourWayIntersection,
            1,
        ))
        .unwrap();
        let cfg = LidarConfig::vehicle_default();
        let cloud = raycast(&scene, 0, 0, &cfg);
        for p in &cloud.points {
            let d = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert!(d >= cfg.min_range - 1e-9 && d <= cfg.max_range + 1e-9);
        }
    }

    #[test]
    fn own_body_is_excluded() {
        let scene = crate::scene::generate(&crate::scene::ScenarioSpec::new(
            crate::scene::Archetype::FourWayIntersection,
            1,
        ))
        .unwrap();
        let cloud = raycast(&scene, 0, 0, &LidarConfig::vehicle_default());
        let pose = scene.frames[0].agent_poses[0];
        let own = scene.frames[0].actors[0];
        assert_eq!(points_on_actor(&cloud, &own, &pose), 0);
    }

    #[test]
    fn dump_round_trip() {
        let scene = single_agent_scene(1.9, vec![cube(10.0, 0.0, 1.9, 1.0)], vec![]);
        let cloud = raycast(&scene, 0, 0, &LidarConfig::vehicle_default());
        let mut buf = Vec::new();
        write_cloud(&mut buf, &cloud).unwrap();
        assert_eq!(buf.len(), 8 + cloud.len() * 12);
        let back = read_cloud(&mut buf.as_slice()).unwrap();
        assert_eq!(back.len(), cloud.len());
        for (a, b) in cloud.points.iter().zip(back.points.iter()) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-4); // f32 quantization
            }
        }
    }

    #[test]
    fn invalid_azimuth_step_rejected() {
        let r = std::panic::catch_unwind(|| {
            LidarConfig::new(4, (-0.1, 0.1), 1.0, 0.5, 100.0) // 1 rad doesn't divide tau
        });
        assert!(r.is_err());
    }
}
