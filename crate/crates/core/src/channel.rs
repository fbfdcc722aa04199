//! Agent-to-ego communication: pose noise, latency, and compression.
//!
//! Aux agents ship their sensing to the ego with a reported pose drawn
//! around the true one; the ego's own data never touches the channel, so
//! it stays bit-exact under every setting. Noise streams are keyed by
//! (seed, agent id, frame) - not by list position or worker - so runs are
//! reproducible and scheduling-independent, and the same unit draws are
//! scaled by each sweep level's sigma (common random numbers across a
//! noise sweep).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::fusion::BevGrid;
use crate::geometry::{normalize_angle, Pose};
use crate::scene::{AgentKind, Scene};
use crate::sensing::{default_lidar_for, raycast, PointCloud};

/// Named noise regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseKind {
    Perfect,
    Simple,
    Harsh(u32),
}

/// A complete channel-noise setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSetting {
    pub kind: NoiseKind,
    /// Std of the x and y position error, meters.
    pub sigma_xy: f64,
    /// Std of the heading error, degrees.
    pub sigma_yaw_deg: f64,
    pub latency_frames: usize,
    pub compression_factor: u32,
}

/// Highest level of the harsh sweep.
pub const HARSH_MAX_LEVEL: u32 = 5;

/// Compression factor aux agents apply in every named setting. Bandwidth
/// limits are part of the channel regardless of noise, and the voxel
/// downsample keeps a dense near-field cloud from out-shouting sparse
/// far-field evidence after fusion.
pub const DEFAULT_COMPRESSION: u32 = 4;

impl NoiseSetting {
    /// No noise, no latency.
    pub fn perfect() -> Self {
        Self {
            kind: NoiseKind::Perfect,
            sigma_xy: 0.0,
            sigma_yaw_deg: 0.0,
            latency_frames: 0,
            compression_factor: DEFAULT_COMPRESSION,
        }
    }

    /// Typical GPS/IMU error magnitudes: 0.2 m, 0.2 deg.
    pub fn simple() -> Self {
        Self {
            kind: NoiseKind::Simple,
            sigma_xy: 0.2,
            sigma_yaw_deg: 0.2,
            latency_frames: 0,
            compression_factor: DEFAULT_COMPRESSION,
        }
    }

    /// Harsh sweep level: sigma_xy = 0.1 * level m, sigma_yaw = 0.2 * level
    /// deg. Level 0 coincides with the perfect setting.
    pub fn harsh(level: u32) -> Self {
        assert!(level <= HARSH_MAX_LEVEL, "harsh level out of range");
        Self {
            kind: NoiseKind::Harsh(level),
            sigma_xy: 0.1 * level as f64,
            sigma_yaw_deg: 0.2 * level as f64,
            latency_frames: 0,
            compression_factor: DEFAULT_COMPRESSION,
        }
    }

    pub fn harsh_sweep() -> Vec<Self> {
        (0..=HARSH_MAX_LEVEL).map(Self::harsh).collect()
    }

    pub fn label(&self) -> String {
        match self.kind {
            NoiseKind::Perfect => "perfect".into(),
            NoiseKind::Simple => "simple".into(),
            NoiseKind::Harsh(l) => format!("harsh{l}"),
        }
    }
}

/// Channel configuration: the noise setting plus the seed every per-agent
/// stream derives from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub noise: NoiseSetting,
    pub rng_seed: u64,
}

/// What an aux agent ships to the ego.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    /// Compressed point set in the sender's sensor frame.
    Points(PointCloud),
    /// Pre-extracted occupancy feature (for grid-sharing workflows).
    Grid(BevGrid),
}

/// One agent's contribution to a fusion round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub source_agent: usize,
    pub agent_kind: AgentKind,
    /// Frame index the payload was sensed at (current frame minus latency).
    pub timestamp: usize,
    /// True pose at `timestamp` plus sampled noise; exactly the true pose
    /// for the ego agent.
    pub reported_pose: Pose,
    pub payload: Payload,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic per-(seed, agent, frame) noise stream.
pub fn noise_stream(seed: u64, agent: usize, frame: usize) -> ChaCha12Rng {
    let mut h = seed;
    h = splitmix64(h ^ (agent as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    h = splitmix64(h ^ (frame as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f));
    ChaCha12Rng::seed_from_u64(h)
}

/// Offset a pose by zero-mean Gaussian noise in x, y, and yaw; z unchanged.
///
/// Exactly three unit normals are consumed regardless of the sigmas, so a
/// sweep over levels sees the same draws scaled by its own sigma.
pub fn perturb_pose<R: Rng>(pose: &Pose, setting: &NoiseSetting, rng: &mut R) -> Pose {
    let nx: f64 = rng.sample(StandardNormal);
    let ny: f64 = rng.sample(StandardNormal);
    let nyaw: f64 = rng.sample(StandardNormal);
    Pose {
        x: pose.x + setting.sigma_xy * nx,
        y: pose.y + setting.sigma_xy * ny,
        z: pose.z,
        yaw: normalize_angle(pose.yaw + setting.sigma_yaw_deg.to_radians() * nyaw),
    }
}

/// Edge length of the unit compression voxel, matching the BEV resolution.
pub const BASE_VOXEL: f64 = 0.4;

/// Voxel-grid downsample with edge `BASE_VOXEL * sqrt(factor)`; each
/// occupied voxel is replaced by the centroid of its points. Factor 1 is a
/// lossless pass-through.
pub fn compress(cloud: &PointCloud, factor: u32) -> PointCloud {
    assert!(factor >= 1);
    if factor == 1 {
        return cloud.clone();
    }
    let edge = BASE_VOXEL * (factor as f64).sqrt();
    let mut voxels: std::collections::BTreeMap<(i64, i64, i64), ([f64; 3], usize)> =
        std::collections::BTreeMap::new();
    for p in &cloud.points {
        let key = (
            (p[0] / edge).floor() as i64,
            (p[1] / edge).floor() as i64,
            (p[2] / edge).floor() as i64,
        );
        let e = voxels.entry(key).or_insert(([0.0; 3], 0));
        for k in 0..3 {
            e.0[k] += p[k];
        }
        e.1 += 1;
    }
    PointCloud {
        points: voxels
            .values()
            .map(|(sum, n)| {
                let inv = 1.0 / *n as f64;
                [sum[0] * inv, sum[1] * inv, sum[2] * inv]
            })
            .collect(),
        source_agent: cloud.source_agent,
        timestamp: cloud.timestamp,
    }
}

/// Run one sharing round: the ego's own sensing plus one message per aux
/// agent.
///
/// Message 0 is the ego's: sensed at `frame`, true pose, uncompressed -
/// bit-identical to its raw sensing under every setting. Aux messages carry
/// sensing from `frame - latency` (clamped to 0), the reported pose sampled
/// from the per-(seed, agent, frame) stream, and the compressed cloud.
pub fn share(
    scene: &Scene,
    frame: usize,
    ego: usize,
    aux: &[usize],
    cfg: &ChannelConfig,
) -> Vec<Message> {
    assert!(!aux.contains(&ego), "ego cannot be its own aux agent");
    let mut messages = Vec::with_capacity(aux.len() + 1);

    let ego_cloud = raycast(scene, frame, ego, &default_lidar_for(scene, ego));
    messages.push(Message {
        source_agent: ego,
        agent_kind: scene.agents[ego].kind,
        timestamp: frame,
        reported_pose: scene.frames[frame].agent_poses[ego],
        payload: Payload::Points(ego_cloud),
    });

    let setting = &cfg.noise;
    for &a in aux {
        let t = frame.saturating_sub(setting.latency_frames);
        let true_pose = scene.frames[t].agent_poses[a];
        let mut rng = noise_stream(cfg.rng_seed, a, frame);
        let reported_pose = perturb_pose(&true_pose, setting, &mut rng);
        let cloud = raycast(scene, t, a, &default_lidar_for(scene, a));
        messages.push(Message {
            source_agent: a,
            agent_kind: scene.agents[a].kind,
            timestamp: t,
            reported_pose,
            payload: Payload::Points(compress(&cloud, setting.compression_factor)),
        });
    }
    messages
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate, Archetype, ScenarioSpec};

    #[test]
    fn perfect_setting_leaves_pose_unchanged() {
        let pose = Pose::new(3.0, -1.0, 1.9, 0.4);
        let mut rng = noise_stream(9, 1, 0);
        let out = perturb_pose(&pose, &NoiseSetting::perfect(), &mut rng);
        assert_eq!(out, pose);
    }

    #[test]
    fn yaw_noise_lever_arm() {
        // A 0.5 deg heading error displaces a point laterally by about
        // 100 * tan(0.5 deg) = 0.87 m at 100 m, but only 0.087 m at 10 m.
        let truth = Pose::new(0.0, 0.0, 1.9, 0.0);
        let tilted = Pose::new(0.0, 0.0, 1.9, 0.5f64.to_radians());
        let far = crate::geometry::transform_to_frame(&[[100.0, 0.0, 0.0]], &tilted, &truth);
        let near = crate::geometry::transform_to_frame(&[[10.0, 0.0, 0.0]], &tilted, &truth);
        let disp = |p: &[f64; 3], r: f64| ((p[0] - r).powi(2) + p[1] * p[1]).sqrt();
        let far_disp = disp(&far[0], 100.0);
        let near_disp = disp(&near[0], 10.0);
        assert!((far_disp - 0.873).abs() < 0.01, "far {far_disp}");
        assert!((near_disp - 0.0873).abs() < 0.001, "near {near_disp}");
        assert!((far_disp / near_disp - 10.0).abs() < 1e-6);
    }

    #[test]
    fn sample_std_near_sigma() {
        let setting = NoiseSetting {
            kind: NoiseKind::Harsh(2),
            sigma_xy: 0.2,
            sigma_yaw_deg: 0.0,
            latency_frames: 0,
            compression_factor: 1,
        };
        let pose = Pose::origin();
        let mut rng = noise_stream(1234, 0, 0);
        let n = 10_000;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let p = perturb_pose(&pose, &setting, &mut rng);
            sum_sq += p.x * p.x + p.y * p.y;
        }
        let std = (sum_sq / (2 * n) as f64).sqrt();
        assert!((0.19..=0.21).contains(&std), "sample std {std}");
    }

    #[test]
    fn harsh_sweep_is_monotone_and_starts_at_zero() {
        let sweep = NoiseSetting::harsh_sweep();
        assert_eq!(sweep.len(), 6);
        assert_eq!(sweep[0].sigma_xy, 0.0);
        assert_eq!(sweep[0].sigma_yaw_deg, 0.0);
        for w in sweep.windows(2) {
            assert!(w[1].sigma_xy > w[0].sigma_xy);
            assert!(w[1].sigma_yaw_deg > w[0].sigma_yaw_deg);
        }
    }

    #[test]
    fn common_random_numbers_across_levels() {
        // The same (seed, agent, frame) stream scaled by different sigmas
        // yields proportional offsets.
        let pose = Pose::origin();
        let a = perturb_pose(
            &pose,
            &NoiseSetting::harsh(1),
            &mut noise_stream(7, 3, 11),
        );
        let b = perturb_pose(
            &pose,
            &NoiseSetting::harsh(5),
            &mut noise_stream(7, 3, 11),
        );
        assert!((b.x / a.x - 5.0).abs() < 1e-9);
        assert!((b.y / a.y - 5.0).abs() < 1e-9);
    }

    #[test]
    fn compress_factor_one_is_identity() {
        let cloud = PointCloud {
            points: vec![[0.01, 0.02, 0.03], [5.0, -3.0, 1.0]],
            source_agent: 2,
            timestamp: 4,
        };
        assert_eq!(compress(&cloud, 1), cloud);
    }

    #[test]
    fn compress_empty_is_empty() {
        let cloud = PointCloud::empty(0, 0);
        assert!(compress(&cloud, 4).is_empty());
    }

    #[test]
    fn compress_dense_cloud_reduces_at_least_2x() {
        let mut points = Vec::new();
        for i in 0..40 {
            for j in 0..40 {
                points.push([i as f64 * 0.2, j as f64 * 0.2, 0.5]);
            }
        }
        let cloud = PointCloud {
            points,
            source_agent: 0,
            timestamp: 0,
        };
        let out = compress(&cloud, 4);
        assert!(out.len() * 2 <= cloud.len(), "{} vs {}", out.len(), cloud.len());
    }

    #[test]
    fn compress_monotone_over_nested_factors() {
        let mut rng = noise_stream(5, 0, 0);
        for _ in 0..10 {
            let points: Vec<[f64; 3]> = (0..400)
                .map(|_| {
                    [
                        rng.random_range(-20.0..20.0),
                        rng.random_range(-20.0..20.0),
                        rng.random_range(0.0..3.0),
                    ]
                })
                .collect();
            let cloud = PointCloud {
                points,
                source_agent: 0,
                timestamp: 0,
            };
            let mut last = usize::MAX;
            for factor in [1u32, 4, 16, 64] {
                let n = compress(&cloud, factor).len();
                assert!(n <= last, "count grew from {last} to {n} at factor {factor}");
                last = n;
            }
        }
    }

    fn test_scene() -> Scene {
        generate(&ScenarioSpec::new(Archetype::FourWayIntersection, 3)).unwrap()
    }

    #[test]
    fn perfect_reported_poses_equal_true_poses() {
        let scene = test_scene();
        let cfg = ChannelConfig {
            noise: NoiseSetting::perfect(),
            rng_seed: 42,
        };
        let msgs = share(&scene, 2, 0, &[1, 2], &cfg);
        for m in &msgs {
            assert_eq!(m.reported_pose, scene.frames[m.timestamp].agent_poses[m.source_agent]);
        }
    }

    #[test]
    fn latency_clamps_and_offsets_timestamps() {
        let scene = test_scene();
        let mut noise = NoiseSetting::perfect();
        noise.latency_frames = 2;
        let cfg = ChannelConfig { noise, rng_seed: 0 };
        let msgs = share(&scene, 5, 0, &[1, 2], &cfg);
        assert_eq!(msgs[0].timestamp, 5); // ego
        assert_eq!(msgs[1].timestamp, 3);
        assert_eq!(msgs[2].timestamp, 3);
        let early = share(&scene, 1, 0, &[1], &cfg);
        assert_eq!(early[1].timestamp, 0);
    }

    #[test]
    fn ego_message_bitwise_exempt_under_harsh_noise() {
        let scene = test_scene();
        let cfg = ChannelConfig {
            noise: NoiseSetting::harsh(HARSH_MAX_LEVEL),
            rng_seed: 99,
        };
        let msgs = share(&scene, 4, 0, &[1, 2], &cfg);
        let raw = raycast(&scene, 4, 0, &default_lidar_for(&scene, 0));
        match &msgs[0].payload {
            Payload::Points(c) => assert_eq!(c, &raw),
            Payload::Grid(_) => panic!("ego payload should be raw points"),
        }
        assert_eq!(msgs[0].reported_pose, scene.frames[4].agent_poses[0]);
    }

    #[test]
    fn noise_keyed_by_agent_id_not_list_position() {
        let scene = test_scene();
        let cfg = ChannelConfig {
            noise: NoiseSetting::simple(),
            rng_seed: 7,
        };
        let a = share(&scene, 3, 0, &[1, 2], &cfg);
        let b = share(&scene, 3, 0, &[2, 1], &cfg);
        let pose_of = |msgs: &[Message], agent: usize| {
            msgs.iter()
                .find(|m| m.source_agent == agent)
                .unwrap()
                .reported_pose
        };
        assert_eq!(pose_of(&a, 1), pose_of(&b, 1));
        assert_eq!(pose_of(&a, 2), pose_of(&b, 2));
        assert_ne!(pose_of(&a, 1), scene.frames[3].agent_poses[1]);
    }

    #[test]
    fn share_rejects_ego_in_aux() {
        let scene = test_scene();
        let cfg = ChannelConfig {
            noise: NoiseSetting::perfect(),
            rng_seed: 0,
        };
        let r = std::panic::catch_unwind(|| share(&scene, 0, 0, &[0, 1], &cfg));
        assert!(r.is_err());
    }
}
