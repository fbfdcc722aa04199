//! Procedural scenario generation: archetype layouts, actors, occluders,
//! and agent placements, deterministic in `(spec, seed)`.

mod archetypes;
pub mod catalog;

pub use catalog::{
    ActorClass, GROUND_CLEARANCE, INFRA_MOUNT_HEIGHT, INFRA_MOUNT_HEIGHT_TALL,
    VEHICLE_MOUNT_HEIGHT,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::DetectionRange;
use crate::geometry::{bev_iou, normalize_angle, OrientedBox3D, Pose};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("invalid scenario spec: {0}")]
    InvalidSpec(String),
    #[error("could not place actor {index} without overlap after 1000 attempts")]
    PlacementFailed { index: usize },
    #[error("frame {frame} out of bounds (scene has {n_frames} frames)")]
    FrameOutOfBounds { frame: usize, n_frames: usize },
    #[error("unsupported scene schema version {0}")]
    SchemaVersion(u32),
    #[error("scene deserialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

/// Vehicle (V) or Infrastructure (I).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentKind {
    Vehicle,
    Infrastructure,
}

/// A sensing agent: its kind and the sensor origin at frame 0. Vehicle
/// agents move (see [`Frame::agent_poses`]); poles are static.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub kind: AgentKind,
    pub mount_pose: Pose,
    /// Default-ego hint; the harness may override per CP mode.
    pub is_ego: bool,
}

/// The four scenario archetypes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Archetype {
    FourWayIntersection,
    ThreeWayIntersection,
    MergeRamp,
    TwinIntersections,
}

impl Archetype {
    pub const ALL: [Archetype; 4] = [
        Archetype::FourWayIntersection,
        Archetype::ThreeWayIntersection,
        Archetype::MergeRamp,
        Archetype::TwinIntersections,
    ];

    fn layout(self) -> archetypes::Layout {
        match self {
            Archetype::FourWayIntersection => archetypes::four_way(),
            Archetype::ThreeWayIntersection => archetypes::three_way(),
            Archetype::MergeRamp => archetypes::merge_ramp(),
            Archetype::TwinIntersections => archetypes::twin_intersections(),
        }
    }

    /// Number of designed actor slots (the default `n_actors`).
    pub fn designed_actor_count(self) -> usize {
        self.layout().actor_slots.len()
    }
}

/// Everything needed to generate one scene deterministically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub archetype: Archetype,
    pub n_vehicle_agents: usize,
    pub n_infra_agents: usize,
    /// Actors beyond the agent bodies. Values above the designed slot count
    /// spawn extras on open lane segments by rejection sampling.
    pub n_actors: usize,
    pub occluder_density: f64,
    pub n_frames: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Default configuration: two vehicle agents, one pole, the designed
    /// actor population, all occluders, 20 frames.
    pub fn new(archetype: Archetype, seed: u64) -> Self {
        Self {
            archetype,
            n_vehicle_agents: 2,
            n_infra_agents: 1,
            n_actors: archetype.designed_actor_count(),
            occluder_density: 1.0,
            n_frames: 20,
            seed,
        }
    }
}

/// Per-frame world state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub actors: Vec<OrientedBox3D>,
    pub agent_poses: Vec<Pose>,
}

/// An immutable generated scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub schema_version: u32,
    pub spec: Option<ScenarioSpec>,
    pub occluders: Vec<OrientedBox3D>,
    pub agents: Vec<AgentSpec>,
    /// For each agent, the index of its body box in every frame's actor
    /// list (vehicle agents have bodies; poles do not).
    pub agent_body_actor: Vec<Option<usize>>,
    pub frames: Vec<Frame>,
}

pub const SCENE_SCHEMA_VERSION: u32 = 1;

impl Scene {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    /// Agent pose at a frame (vehicles move along their lane; poles don't).
    pub fn agent_pose(&self, frame: usize, agent: usize) -> Pose {
        self.frames[frame].agent_poses[agent]
    }

    /// Ground-truth boxes for a frame: actors whose centers, expressed in
    /// the ego frame, fall inside the detection range in x, y, and z.
    /// Returned boxes are in the ego frame.
    pub fn ground_truth(
        &self,
        frame: usize,
        range: &DetectionRange,
        ego_pose: &Pose,
    ) -> Result<Vec<OrientedBox3D>, SceneError> {
        self.ground_truth_excluding(frame, range, ego_pose, None)
    }

    /// Like [`Scene::ground_truth`], skipping one actor index (the ego's
    /// own body, which is not a detection target for itself).
    pub fn ground_truth_excluding(
        &self,
        frame: usize,
        range: &DetectionRange,
        ego_pose: &Pose,
        exclude_actor: Option<usize>,
    ) -> Result<Vec<OrientedBox3D>, SceneError> {
        if frame >= self.frames.len() {
            return Err(SceneError::FrameOutOfBounds {
                frame,
                n_frames: self.frames.len(),
            });
        }
        Ok(self.frames[frame]
            .actors
            .iter()
            .enumerate()
            .filter(|&(i, _)| Some(i) != exclude_actor)
            .filter_map(|(_, b)| {
                let local = ego_pose.world_to_local([b.cx, b.cy, b.cz]);
                if range.contains(local) {
                    let mut gt = *b;
                    gt.cx = local[0];
                    gt.cy = local[1];
                    gt.cz = local[2];
                    gt.yaw = normalize_angle(b.yaw - ego_pose.yaw);
                    Some(gt)
                } else {
                    None
                }
            })
            .collect())
    }

    /// Versioned JSON document (the golden-file format).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, SceneError> {
        let scene: Scene = serde_json::from_str(s)?;
        if scene.schema_version != SCENE_SCHEMA_VERSION {
            return Err(SceneError::SchemaVersion(scene.schema_version));
        }
        Ok(scene)
    }
}

/// One actor's placement and constant-velocity motion.
struct ActorIntent {
    class: ActorClass,
    x: f64,
    y: f64,
    yaw: f64,
    speed: f64,
}

impl ActorIntent {
    fn box_at(&self, frame: usize) -> OrientedBox3D {
        let (w, l, h) = self.class.dims();
        let d = self.speed * frame as f64;
        let (s, c) = self.yaw.sin_cos();
        OrientedBox3D::ground_truth(
            self.x + c * d,
            self.y + s * d,
            GROUND_CLEARANCE,
            w,
            l,
            h,
            self.yaw,
        )
    }
}

fn overlaps_any(candidate: &ActorIntent, placed: &[ActorIntent], n_frames: usize) -> bool {
    for f in 0..n_frames {
        let cb = candidate.box_at(f);
        for other in placed {
            if bev_iou(&cb, &other.box_at(f)) > 0.0 {
                return true;
            }
        }
    }
    false
}

fn overlaps_occluder(candidate: &ActorIntent, occluders: &[OrientedBox3D], n_frames: usize) -> bool {
    for f in 0..n_frames {
        let cb = candidate.box_at(f);
        for occ in occluders {
            if bev_iou(&cb, occ) > 0.0 {
                return true;
            }
        }
    }
    false
}

/// Generate a scene. Deterministic in `(spec, spec.seed)`; rejects specs
/// whose population cannot be placed without overlap after 1000 attempts.
pub fn generate(spec: &ScenarioSpec) -> Result<Scene, SceneError> {
    let layout = spec.archetype.layout();
    if spec.n_vehicle_agents < 1 {
        return Err(SceneError::InvalidSpec(
            "at least one vehicle agent required".into(),
        ));
    }
    if spec.n_vehicle_agents > layout.vehicle_slots.len() {
        return Err(SceneError::InvalidSpec(format!(
            "archetype supports at most {} vehicle agents",
            layout.vehicle_slots.len()
        )));
    }
    if spec.n_infra_agents > layout.infra_slots.len() {
        return Err(SceneError::InvalidSpec(format!(
            "archetype supports at most {} infrastructure agents",
            layout.infra_slots.len()
        )));
    }
    if spec.n_frames == 0 {
        return Err(SceneError::InvalidSpec("n_frames must be positive".into()));
    }
    if !(0.0..=1.0).contains(&spec.occluder_density) {
        return Err(SceneError::InvalidSpec(
            "occluder_density must be in [0, 1]".into(),
        ));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);

    let occluders: Vec<OrientedBox3D> = layout
        .occluders
        .iter()
        .filter(|_| spec.occluder_density >= 1.0 || rng.random::<f64>() < spec.occluder_density)
        .copied()
        .collect();

    let mut agents: Vec<AgentSpec> = Vec::new();
    for (i, v) in layout.vehicle_slots[..spec.n_vehicle_agents].iter().enumerate() {
        agents.push(AgentSpec {
            kind: AgentKind::Vehicle,
            mount_pose: Pose::new(v.x, v.y, VEHICLE_MOUNT_HEIGHT, v.yaw),
            is_ego: i == 0,
        });
    }
    for p in &layout.infra_slots[..spec.n_infra_agents] {
        agents.push(AgentSpec {
            kind: AgentKind::Infrastructure,
            mount_pose: *p,
            is_ego: false,
        });
    }
    debug_assert!(agents.iter().all(|a| match a.kind {
        AgentKind::Vehicle => a.mount_pose.z < INFRA_MOUNT_HEIGHT,
        AgentKind::Infrastructure => a.mount_pose.z > VEHICLE_MOUNT_HEIGHT,
    }));

    // Agent bodies come first in the actor list so agent i's body is actor i.
    let mut intents: Vec<ActorIntent> = layout.vehicle_slots[..spec.n_vehicle_agents]
        .iter()
        .map(|v| ActorIntent {
            class: ActorClass::Sedan,
            x: v.x,
            y: v.y,
            yaw: v.yaw,
            speed: v.speed,
        })
        .collect();
    let agent_body_actor: Vec<Option<usize>> = agents
        .iter()
        .enumerate()
        .map(|(i, a)| (a.kind == AgentKind::Vehicle).then_some(i))
        .collect();

    // Designed slots, jittered along-lane, with overlap rejection.
    let n_from_slots = spec.n_actors.min(layout.actor_slots.len());
    for (idx, s) in layout.actor_slots[..n_from_slots].iter().enumerate() {
        let mut placed = false;
        for _attempt in 0..1000 {
            let u = rng.random_range(-s.pos_jitter..=s.pos_jitter);
            let dyaw = rng.random_range(-s.yaw_jitter..=s.yaw_jitter);
            let dspeed = rng.random_range(-0.05..=0.05);
            let (sy, cy) = s.yaw.sin_cos();
            let cand = ActorIntent {
                class: s.class,
                x: s.x + cy * u,
                y: s.y + sy * u,
                yaw: normalize_angle(s.yaw + dyaw),
                speed: (s.speed + dspeed).max(0.0),
            };
            if !overlaps_any(&cand, &intents, spec.n_frames)
                && !overlaps_occluder(&cand, &occluders, spec.n_frames)
            {
                intents.push(cand);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SceneError::PlacementFailed { index: idx });
        }
    }

    // Surplus actors on open lane segments.
    let n_extra = spec.n_actors.saturating_sub(layout.actor_slots.len());
    for e in 0..n_extra {
        let mut placed = false;
        for _attempt in 0..1000 {
            let band = &layout.extra_bands[rng.random_range(0..layout.extra_bands.len())];
            let class = match rng.random_range(0..10) {
                0..6 => ActorClass::Sedan,
                6..9 => ActorClass::Van,
                _ => ActorClass::Bus,
            };
            let cand = ActorIntent {
                class,
                x: rng.random_range(band.x_min..=band.x_max),
                y: rng.random_range(band.y_min..=band.y_max),
                yaw: normalize_angle(band.yaw + rng.random_range(-0.05..=0.05)),
                speed: band.speed,
            };
            if !overlaps_any(&cand, &intents, spec.n_frames)
                && !overlaps_occluder(&cand, &occluders, spec.n_frames)
            {
                intents.push(cand);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SceneError::PlacementFailed {
                index: layout.actor_slots.len() + e,
            });
        }
    }

    let frames: Vec<Frame> = (0..spec.n_frames)
        .map(|f| {
            let actors = intents.iter().map(|i| i.box_at(f)).collect();
            let agent_poses = agents
                .iter()
                .enumerate()
                .map(|(i, a)| match a.kind {
                    AgentKind::Vehicle => {
                        let v = &layout.vehicle_slots[i];
                        let d = v.speed * f as f64;
                        let (s, c) = v.yaw.sin_cos();
                        Pose::new(v.x + c * d, v.y + s * d, VEHICLE_MOUNT_HEIGHT, v.yaw)
                    }
                    AgentKind::Infrastructure => a.mount_pose,
                })
                .collect();
            Frame {
                actors,
                agent_poses,
            }
        })
        .collect();

    Ok(Scene {
        schema_version: SCENE_SCHEMA_VERSION,
        spec: Some(*spec),
        occluders,
        agents,
        agent_body_actor,
        frames,
    })
}

/// Azimuth interval of a box's footprint corners as seen from `from`.
fn azimuth_interval(b: &OrientedBox3D, from: [f64; 2]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in b.corners_bev() {
        let az = (c[1] - from[1]).atan2(c[0] - from[0]);
        lo = lo.min(az);
        hi = hi.max(az);
    }
    (lo, hi)
}

/// Hand-built open scene: one vehicle agent, no occluders, and `n_actors`
/// parked vehicles at corner-view bearings within 10-26 m, placed so that
/// no actor ever shadows another from the moving ego. Used as the
/// unoccluded single-vehicle sanity suite.
pub fn open_sanity_scene(seed: u64, n_actors: usize, n_frames: usize) -> Scene {
    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let agents = vec![AgentSpec {
        kind: AgentKind::Vehicle,
        mount_pose: Pose::new(0.0, 0.0, VEHICLE_MOUNT_HEIGHT, 0.0),
        is_ego: true,
    }];
    let ego_speed = 0.2;
    let mut intents: Vec<ActorIntent> = vec![ActorIntent {
        class: ActorClass::Sedan,
        x: 0.0,
        y: 0.0,
        yaw: 0.0,
        speed: ego_speed,
    }];
    // Ego positions the angular-separation check must hold at.
    let ego_at: Vec<[f64; 2]> = [0usize, n_frames.saturating_sub(1) / 2, n_frames - 1]
        .iter()
        .map(|&f| [ego_speed * f as f64, 0.0])
        .collect();
    let margin = 0.04; // ~2.3 deg of angular clearance between actors
    for k in 0..n_actors {
        let side = if k % 2 == 0 { 1.0 } else { -1.0 };
        let bearing = side * (0.35 + 0.5 * (k / 2) as f64);
        loop {
            let dist = rng.random_range(10.0..26.0);
            let cand = ActorIntent {
                class: ActorClass::Sedan,
                x: dist * bearing.cos(),
                y: dist * bearing.sin(),
                yaw: normalize_angle(bearing + rng.random_range(0.5..0.9)),
                speed: 0.0,
            };
            let cb = cand.box_at(0);
            let clear = ego_at.iter().all(|&e| {
                let (clo, chi) = azimuth_interval(&cb, e);
                intents.iter().skip(1).all(|other| {
                    let (olo, ohi) = azimuth_interval(&other.box_at(0), e);
                    chi + margin < olo || ohi + margin < clo
                })
            });
            if clear && !overlaps_any(&cand, &intents, n_frames) {
                intents.push(cand);
                break;
            }
        }
    }
    let frames = (0..n_frames)
        .map(|f| Frame {
            actors: intents.iter().map(|i| i.box_at(f)).collect(),
            agent_poses: vec![Pose::new(
                0.2 * f as f64,
                0.0,
                VEHICLE_MOUNT_HEIGHT,
                0.0,
            )],
        })
        .collect();
    Scene {
        schema_version: SCENE_SCHEMA_VERSION,
        spec: None,
        occluders: Vec::new(),
        agents,
        agent_body_actor: vec![Some(0)],
        frames,
    }
}
