//! Experiment runner: CP modes, the per-frame pipeline, and batch jobs.
//!
//! A run walks generate -> sense -> share -> extract -> fuse -> detect ->
//! evaluate for every (scenario, seed, frame), with scenario x seed jobs
//! dispatched through [`crate::par_map`]. Determinism is guaranteed by
//! per-(seed, agent, frame) noise streams and order-preserving collection,
//! so reports are byte-identical across runs and worker counts.

mod experiments;
mod render;
mod svg;

pub use experiments::{
    experiment_e1_v2v_vs_v2x, experiment_e2_range_shape, experiment_e3_v2x_vs_i2x,
    experiment_e4_noise_sweep, sanity_no_fusion, ExperimentOutputs, PropertyCheck, DEFAULT_SEEDS,
};
pub use render::render_scene_svg;
pub use svg::line_chart;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{share, ChannelConfig, NoiseSetting, Payload};
use crate::eval::{match_detections, ConfigDescriptor, EvalReport, MatchResult, SceneRun};
use crate::fusion::{
    detect, extract, fuse, late_fuse, ranges, DetectionRange, DetectorConfig, FusionMethod,
    RangeShape,
};
use crate::geometry::{bev_iou, Label, OrientedBox3D, Pose};
use crate::par_map;
use crate::scene::{generate, AgentKind, Archetype, Scene, ScenarioSpec, GROUND_CLEARANCE};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid experiment config: {0}")]
    Invalid(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("scene generation failed: {0}")]
    Scene(#[from] crate::scene::SceneError),
}

/// Who the ego agent is and which aux agents share with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CpMode {
    /// Ego vehicle alone.
    NoFusion,
    /// Ego vehicle; every other vehicle is aux.
    V2V,
    /// Ego vehicle; one aux vehicle is swapped for the infrastructure.
    V2X,
    /// Ego infrastructure; every vehicle is aux.
    I2X,
}

impl CpMode {
    pub fn label(&self) -> &'static str {
        match self {
            CpMode::NoFusion => "no_fusion",
            CpMode::V2V => "v2v",
            CpMode::V2X => "v2x",
            CpMode::I2X => "i2x",
        }
    }

    /// Default detection range for the mode's ego kind.
    pub fn default_range(&self) -> DetectionRange {
        match self {
            CpMode::I2X => ranges::infra_square(),
            _ => ranges::vehicle_rectangle(),
        }
    }
}

/// Batch-job description: a scenario suite run under one CP mode for each
/// noise setting in the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub cp_mode: CpMode,
    pub archetypes: Vec<Archetype>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_n_vehicles")]
    pub n_vehicle_agents: usize,
    #[serde(default = "default_n_infra")]
    pub n_infra_agents: usize,
    /// Actors beyond agent bodies; None uses each archetype's designed count.
    #[serde(default)]
    pub n_actors: Option<usize>,
    #[serde(default = "default_density")]
    pub occluder_density: f64,
    #[serde(default = "default_frames")]
    pub n_frames: usize,
    /// None picks the mode's default range.
    #[serde(default)]
    pub range: Option<DetectionRange>,
    #[serde(default = "default_fusion")]
    pub fusion: FusionMethod,
    /// One entry per noise setting; each produces its own report.
    pub noise: Vec<NoiseSetting>,
    #[serde(default = "default_rng_seed")]
    pub rng_seed: u64,
}

fn default_n_vehicles() -> usize {
    2
}
fn default_n_infra() -> usize {
    1
}
fn default_density() -> f64 {
    1.0
}
fn default_frames() -> usize {
    20
}
fn default_fusion() -> FusionMethod {
    FusionMethod::IntermediateSum
}
fn default_rng_seed() -> u64 {
    0xC0FFEE
}

impl ExperimentConfig {
    pub fn new(cp_mode: CpMode, archetypes: Vec<Archetype>, seeds: Vec<u64>) -> Self {
        Self {
            cp_mode,
            archetypes,
            seeds,
            n_vehicle_agents: default_n_vehicles(),
            n_infra_agents: default_n_infra(),
            n_actors: None,
            occluder_density: default_density(),
            n_frames: default_frames(),
            range: None,
            fusion: default_fusion(),
            noise: vec![NoiseSetting::perfect()],
            rng_seed: default_rng_seed(),
        }
    }

    pub fn from_toml(s: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Reject configurations whose mode cannot be staffed before any work.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.archetypes.is_empty() || self.seeds.is_empty() || self.noise.is_empty() {
            return Err(ConfigError::Invalid(
                "archetypes, seeds, and noise must be non-empty".into(),
            ));
        }
        if self.n_vehicle_agents < 1 {
            return Err(ConfigError::Invalid("need at least one vehicle agent".into()));
        }
        match self.cp_mode {
            CpMode::V2X | CpMode::I2X => {
                if self.n_infra_agents == 0 {
                    return Err(ConfigError::Invalid(format!(
                        "{} requires an infrastructure agent",
                        self.cp_mode.label()
                    )));
                }
            }
            CpMode::V2V => {
                if self.n_vehicle_agents < 2 {
                    return Err(ConfigError::Invalid(
                        "v2v requires at least two vehicle agents".into(),
                    ));
                }
            }
            CpMode::NoFusion => {}
        }
        Ok(())
    }

    fn scenario_spec(&self, archetype: Archetype, seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            archetype,
            n_vehicle_agents: self.n_vehicle_agents,
            n_infra_agents: self.n_infra_agents,
            n_actors: self.n_actors.unwrap_or_else(|| archetype.designed_actor_count()),
            occluder_density: self.occluder_density,
            n_frames: self.n_frames,
            seed,
        }
    }
}

/// Ego index and aux indices for a mode, given the scene's agent roster
/// (vehicles first, then infrastructure).
pub fn team_for_mode(scene: &Scene, mode: CpMode) -> Result<(usize, Vec<usize>), ConfigError> {
    let n_vehicles = scene
        .agents
        .iter()
        .filter(|a| a.kind == AgentKind::Vehicle)
        .count();
    let infra: Vec<usize> = (n_vehicles..scene.agents.len()).collect();
    match mode {
        CpMode::NoFusion => Ok((0, Vec::new())),
        CpMode::V2V => Ok((0, (1..n_vehicles).collect())),
        CpMode::V2X => {
            let first_infra = *infra
                .first()
                .ok_or_else(|| ConfigError::Invalid("v2x scene has no infrastructure".into()))?;
            let mut aux: Vec<usize> = (1..n_vehicles).collect();
            // Swap one aux vehicle for the infrastructure.
            if aux.is_empty() {
                aux.push(first_infra);
            } else {
                *aux.last_mut().expect("non-empty") = first_infra;
            }
            Ok((0, aux))
        }
        CpMode::I2X => {
            let first_infra = *infra
                .first()
                .ok_or_else(|| ConfigError::Invalid("i2x scene has no infrastructure".into()))?;
            Ok((first_infra, (0..n_vehicles).collect()))
        }
    }
}

/// Prior used by the detection head: a sedan-height box resting on the
/// ground, expressed in the ego frame.
fn detector_for(ego_mount_z: f64) -> DetectorConfig {
    DetectorConfig::new(4, GROUND_CLEARANCE + 0.8 - ego_mount_z, 1.6)
}

/// Detections and matches for one frame of one scene.
fn run_frame(
    scene: &Scene,
    frame: usize,
    ego: usize,
    aux: &[usize],
    channel_cfg: &ChannelConfig,
    range: &DetectionRange,
    fusion_method: &FusionMethod,
) -> (MatchResult, MatchResult) {
    let ego_pose = scene.frames[frame].agent_poses[ego];
    let ground_z = -ego_pose.z;
    let detector = detector_for(ego_pose.z);
    let messages = share(scene, frame, ego, aux, channel_cfg);

    // Re-project every payload into the ego frame through reported poses.
    let ego_frame_points = |msg_idx: usize| -> Vec<[f64; 3]> {
        let m = &messages[msg_idx];
        match &m.payload {
            Payload::Points(cloud) => cloud
                .points
                .iter()
                .map(|&p| ego_pose.world_to_local(m.reported_pose.local_to_world(p)))
                .collect(),
            Payload::Grid(_) => Vec::new(),
        }
    };

    let mut detections: Vec<OrientedBox3D> = match fusion_method {
        FusionMethod::Early => {
            let mut merged = Vec::new();
            for i in 0..messages.len() {
                merged.extend(ego_frame_points(i));
            }
            let grid = extract(&merged, range, ranges::RESOLUTION, ground_z);
            detect(&grid, &detector)
        }
        FusionMethod::Late => {
            // Each agent detects in its own frame within its own copy of
            // the range; boxes are then re-projected and de-duplicated.
            let per_agent: Vec<Vec<OrientedBox3D>> = messages
                .iter()
                .map(|m| {
                    let own_points = match &m.payload {
                        Payload::Points(c) => c.points.clone(),
                        Payload::Grid(_) => Vec::new(),
                    };
                    let mount_z = scene.agents[m.source_agent].mount_pose.z;
                    let grid = extract(&own_points, range, ranges::RESOLUTION, -mount_z);
                    detect(&grid, &detector_for(mount_z))
                })
                .collect();
            let reported: Vec<Pose> = messages.iter().map(|m| m.reported_pose).collect();
            late_fuse(&per_agent, &reported, 0.5)
        }
        method => {
            let ego_grid = extract(&ego_frame_points(0), range, ranges::RESOLUTION, ground_z);
            let aux_grids: Vec<_> = (1..messages.len())
                .map(|i| extract(&ego_frame_points(i), range, ranges::RESOLUTION, ground_z))
                .collect();
            let fused = fuse(&ego_grid, &aux_grids, method).expect("grids share a range");
            detect(&fused, &detector)
        }
    };

    // Geometric classification plus standard ego-footprint filtering.
    detections.retain(|d| d.label == Label::Vehicle);
    if let Some(body_idx) = scene.agent_body_actor[ego] {
        let body = &scene.frames[frame].actors[body_idx];
        let local = ego_pose.world_to_local([body.cx, body.cy, body.cz]);
        let mut ego_body = *body;
        ego_body.cx = local[0];
        ego_body.cy = local[1];
        ego_body.yaw = crate::geometry::normalize_angle(body.yaw - ego_pose.yaw);
        detections.retain(|d| bev_iou(d, &ego_body) == 0.0);
    }
    detections.retain(|d| range.contains_xy(d.cx, d.cy));

    let gt = scene
        .ground_truth_excluding(frame, range, &ego_pose, scene.agent_body_actor[ego])
        .expect("frame in bounds");
    (
        match_detections(&detections, &gt, 0.5),
        match_detections(&detections, &gt, 0.7),
    )
}

/// Run one scene under one mode and noise setting.
pub fn run_scene(
    scene: &Scene,
    label: &str,
    seed: u64,
    mode: CpMode,
    range: &DetectionRange,
    fusion_method: &FusionMethod,
    noise: &NoiseSetting,
    rng_seed: u64,
) -> Result<SceneRun, ConfigError> {
    let (ego, aux) = team_for_mode(scene, mode)?;
    let channel_cfg = ChannelConfig {
        noise: *noise,
        rng_seed,
    };
    let mut matches50 = Vec::with_capacity(scene.n_frames());
    let mut matches70 = Vec::with_capacity(scene.n_frames());
    for f in 0..scene.n_frames() {
        let (m50, m70) = run_frame(scene, f, ego, &aux, &channel_cfg, range, fusion_method);
        matches50.push(m50);
        matches70.push(m70);
    }
    Ok(SceneRun {
        scene: label.to_string(),
        seed,
        matches50,
        matches70,
    })
}

fn archetype_label(a: Archetype) -> &'static str {
    match a {
        Archetype::FourWayIntersection => "four_way",
        Archetype::ThreeWayIntersection => "three_way",
        Archetype::MergeRamp => "merge_ramp",
        Archetype::TwinIntersections => "twin_intersections",
    }
}

fn shape_label(s: RangeShape) -> &'static str {
    match s {
        RangeShape::Rectangle => "rectangle",
        RangeShape::Square => "square",
    }
}

fn fusion_label(f: &FusionMethod) -> String {
    match f {
        FusionMethod::Early => "early".into(),
        FusionMethod::Late => "late".into(),
        FusionMethod::IntermediateSum => "intermediate_sum".into(),
        FusionMethod::IntermediateMax => "intermediate_max".into(),
        FusionMethod::IntermediateWeighted(w) => format!("intermediate_weighted{w:?}"),
    }
}

/// Run a full experiment: one report per noise setting, each covering the
/// scenario x seed suite. Scenario x seed jobs run in the worker pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<EvalReport>, ConfigError> {
    cfg.validate()?;
    let range = cfg.range.unwrap_or_else(|| cfg.cp_mode.default_range());

    // Generate (and validate) every scene once, up front.
    let mut jobs: Vec<(Archetype, u64)> = Vec::new();
    for &a in &cfg.archetypes {
        for &s in &cfg.seeds {
            jobs.push((a, s));
        }
    }
    let scenes: Vec<(Archetype, u64, Scene)> = {
        let specs: Vec<(Archetype, u64, ScenarioSpec)> = jobs
            .iter()
            .map(|&(a, s)| (a, s, cfg.scenario_spec(a, s)))
            .collect();
        let generated = par_map(specs, |(a, s, spec)| (a, s, generate(&spec)));
        let mut out = Vec::with_capacity(generated.len());
        for (a, s, scene) in generated {
            out.push((a, s, scene?));
        }
        out
    };
    // Team staffing must hold for every scene before any sensing runs.
    for (_, _, scene) in &scenes {
        team_for_mode(scene, cfg.cp_mode)?;
    }

    let mut reports = Vec::with_capacity(cfg.noise.len());
    for noise in &cfg.noise {
        let runs: Vec<Result<SceneRun, ConfigError>> =
            par_map(scenes.iter().collect::<Vec<_>>(), |(a, s, scene)| {
                run_scene(
                    scene,
                    archetype_label(*a),
                    *s,
                    cfg.cp_mode,
                    &range,
                    &cfg.fusion,
                    noise,
                    cfg.rng_seed,
                )
            });
        let mut scene_runs = Vec::with_capacity(runs.len());
        for r in runs {
            scene_runs.push(r?);
        }
        let descriptor = ConfigDescriptor {
            cp_mode: cfg.cp_mode.label().to_string(),
            range_shape: shape_label(range.shape).to_string(),
            noise: noise.label(),
            fusion: fusion_label(&cfg.fusion),
            rng_seed: cfg.rng_seed,
        };
        reports.push(crate::eval::report(descriptor, &scene_runs));
    }
    Ok(reports)
}
