//! Hand-laid street layouts for the four scenario archetypes.
//!
//! Each layout fixes road geometry, building occluders, agent mount slots,
//! and designed actor slots. Placement follows three clearance rules so
//! that detection quality is limited by occlusion and range rather than by
//! accidents of geometry: actors an agent is meant to see sit where beam
//! columns land at most ~1.2 m apart along their faces (near enough, at a
//! wide enough aspect), lane centerlines stay >= 4 m apart so distinct
//! vehicles never share an occupancy component, and in-lane gaps survive
//! jitter with >= 2.5 m to spare.
//!
//! The sight-line structure the experiments rely on:
//!
//! * intersections: an approach queue surrounds the ego mid-block; the
//!   queue past the junction is visible only from the corner pole and sits
//!   outside the ego's square range; down-road traffic rests beyond LiDAR
//!   reach but inside the pole's rectangle range; a parallel street hides
//!   from everyone behind the building rows inside the ego's square;
//! * merge ramp: the ramp agent is walled off from the main road while a
//!   van-and-bus jam hides the platoon from the ego but not from the
//!   elevated gantry;
//! * twin intersections: the pole at the first junction is redundant with
//!   the ego while the second junction is covered only by the agent there.

use super::catalog::{ActorClass, INFRA_MOUNT_HEIGHT};
use crate::geometry::{Label, OrientedBox3D, Pose};

use std::f64::consts::{FRAC_PI_2, PI};

/// East-west road lane centerlines (y).
const EB_IN: f64 = -1.5;
const EB_OUT: f64 = -6.0;
const WB_IN: f64 = 2.5;
const WB_OUT: f64 = 6.5;
/// North-south road lane centerlines (x).
const NB_IN: f64 = 1.5;
const NB_OUT: f64 = 6.0;
const SB_IN: f64 = -2.5;
const SB_OUT: f64 = -6.5;

/// Designed parking spot for one actor, with per-seed jitter limits.
pub(crate) struct ActorSlot {
    pub class: ActorClass,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    /// Meters per frame along the (jittered) heading.
    pub speed: f64,
    /// Max along-lane position jitter, meters.
    pub pos_jitter: f64,
    /// Max heading jitter, radians.
    pub yaw_jitter: f64,
}

impl ActorSlot {
    fn new(class: ActorClass, x: f64, y: f64, yaw: f64, speed: f64, pos_jitter: f64) -> Self {
        Self {
            class,
            x,
            y,
            yaw,
            speed,
            pos_jitter,
            yaw_jitter: 0.05,
        }
    }
}

/// Mount slot and trajectory for one vehicle agent.
pub(crate) struct VehicleSlot {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub speed: f64,
}

/// Lane segment where surplus actors may be spawned.
pub(crate) struct SpawnBand {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub yaw: f64,
    pub speed: f64,
}

pub(crate) struct Layout {
    pub occluders: Vec<OrientedBox3D>,
    pub vehicle_slots: Vec<VehicleSlot>,
    pub infra_slots: Vec<Pose>,
    pub actor_slots: Vec<ActorSlot>,
    pub extra_bands: Vec<SpawnBand>,
}

fn building(cx: f64, cy: f64, lx: f64, wy: f64, h: f64) -> OrientedBox3D {
    OrientedBox3D::new(cx, cy, h / 2.0, wy, lx, h, 0.0, Label::NotVehicle, 1.0)
}

fn vehicle(x: f64, y: f64, yaw: f64, speed: f64) -> VehicleSlot {
    VehicleSlot { x, y, yaw, speed }
}

fn pole(x: f64, y: f64, yaw: f64) -> Pose {
    Pose::new(x, y, INFRA_MOUNT_HEIGHT, yaw)
}

fn slot(class: ActorClass, x: f64, y: f64, yaw: f64, speed: f64, jit: f64) -> ActorSlot {
    ActorSlot::new(class, x, y, yaw, speed, jit)
}

use ActorClass::{Bus, Sedan, Van};

/// Corner buildings plus block rows continuing along the east-west road.
/// Rows overlap the corner buildings so no alley leaks a sight line to the
/// parallel street.
fn intersection_blocks(occluders: &mut Vec<OrientedBox3D>, with_south_arm: bool) {
    if with_south_arm {
        for &sx in &[-1.0, 1.0] {
            for &sy in &[-1.0, 1.0] {
                occluders.push(building(26.0 * sx, 22.0 * sy, 36.0, 28.0, 9.0));
            }
        }
    } else {
        occluders.push(building(-26.0, 22.0, 36.0, 28.0, 9.0));
        occluders.push(building(26.0, 22.0, 36.0, 28.0, 9.0));
        occluders.push(building(0.0, -25.0, 88.0, 30.0, 9.0));
    }
    for &sy in &[-1.0, 1.0] {
        occluders.push(building(-66.0, 25.0 * sy, 52.0, 30.0, 9.0));
        occluders.push(building(-117.0, 25.0 * sy, 40.0, 30.0, 9.0));
        occluders.push(building(66.0, 25.0 * sy, 52.0, 30.0, 9.0));
        occluders.push(building(117.0, 25.0 * sy, 40.0, 30.0, 9.0));
    }
    // Construction hoarding on the median of the western approach. It
    // screens the mid-block traffic from the corner pole (and vice versa),
    // so each ego type works that zone from its own sensing alone.
    occluders.push(OrientedBox3D::new(
        -18.0,
        0.5,
        2.5,
        0.6,
        12.0,
        5.0,
        0.0,
        Label::NotVehicle,
        1.0,
    ));
}

/// Shared actor population for the intersection archetypes: the approach
/// queue (A) around the ego, the cross-junction queue (B) seen only by the
/// pole, down-road traffic (C) beyond LiDAR reach, and the hidden parallel
/// street (D).
fn intersection_queues(slots: &mut Vec<ActorSlot>) {
    // A: traffic around the mid-block ego at (-55, EB_IN).
    slots.push(slot(Sedan, -46.0, EB_OUT, 0.0, 0.4, 1.5));
    slots.push(slot(Van, -36.0, EB_OUT, 0.0, 0.4, 1.0));
    slots.push(slot(Sedan, -28.0, EB_IN, 0.0, 0.4, 1.5));
    slots.push(slot(Sedan, -42.0, WB_IN, PI, 0.4, 1.5));
    // B: queue past the junction; outside the ego's square range at every
    // frame, within the pole's dense envelope.
    slots.push(slot(Bus, 29.0, EB_IN, 0.0, 0.2, 1.0));
    slots.push(slot(Sedan, 43.0, EB_IN, 0.0, 0.3, 1.0));
    slots.push(slot(Van, 46.0, EB_OUT, 0.0, 0.3, 1.0));
    slots.push(slot(Sedan, 35.0, EB_OUT, 0.0, 0.3, 1.0));
    // C: down-road traffic past the pole's LiDAR range but inside its
    // rectangle-shaped detection range.
    slots.push(slot(Sedan, 130.0, EB_IN, 0.0, 0.2, 1.0));
    slots.push(slot(Sedan, 135.0, EB_OUT, 0.0, 0.2, 1.0));
    slots.push(slot(Sedan, 141.0, EB_IN, 0.0, 0.2, 1.0));
    slots.push(slot(Sedan, 138.0, WB_IN, PI, 0.2, 1.0));
    slots.push(slot(Sedan, 144.0, WB_OUT, PI, 0.2, 1.0));
    // D: parallel street behind the northern building rows; inside the
    // ego's square range, outside the pole's, visible to nobody.
    slots.push(slot(Sedan, -80.0, 48.0, 0.0, 0.25, 1.0));
    slots.push(slot(Van, -95.0, 48.0, 0.0, 0.25, 1.0));
    slots.push(slot(Sedan, -88.0, 52.5, PI, 0.25, 1.0));
    slots.push(slot(Sedan, -102.0, 52.5, PI, 0.25, 1.0));
}

pub(crate) fn four_way() -> Layout {
    let mut occluders = Vec::new();
    intersection_blocks(&mut occluders, true);
    let mut actor_slots = Vec::new();
    intersection_queues(&mut actor_slots);
    // E: cross-street traffic on the north and south arms near the pole,
    // plus one far-north actor outside the rectangle range's y span.
    actor_slots.push(slot(Sedan, NB_IN, 14.0, FRAC_PI_2, 0.3, 1.0));
    actor_slots.push(slot(Van, NB_OUT, 24.0, FRAC_PI_2, 0.3, 1.0));
    actor_slots.push(slot(Sedan, SB_IN, -14.0, -FRAC_PI_2, 0.4, 1.0));
    actor_slots.push(slot(Sedan, SB_OUT, -22.0, -FRAC_PI_2, 0.4, 1.0));
    actor_slots.push(slot(Sedan, NB_IN, 48.0, FRAC_PI_2, 0.2, 1.0));
    Layout {
        occluders,
        vehicle_slots: vec![
            vehicle(-55.0, EB_IN, 0.0, 0.4),
            vehicle(-30.0, EB_OUT, 0.0, 0.4),
            vehicle(-65.0, EB_IN, 0.0, 0.4),
            vehicle(SB_IN, 25.0, -FRAC_PI_2, 0.4),
        ],
        infra_slots: vec![pole(7.5, 7.5, 0.0), pole(-7.5, -7.5, PI)],
        actor_slots,
        extra_bands: vec![SpawnBand {
            x_min: -130.0,
            x_max: -100.0,
            y_min: WB_IN,
            y_max: WB_OUT,
            yaw: PI,
            speed: 0.3,
        }],
    }
}

pub(crate) fn three_way() -> Layout {
    let mut occluders = Vec::new();
    intersection_blocks(&mut occluders, false);
    let mut actor_slots = Vec::new();
    intersection_queues(&mut actor_slots);
    // E: the single north arm plus westbound traffic near the junction.
    actor_slots.push(slot(Sedan, NB_IN, 14.0, FRAC_PI_2, 0.3, 1.0));
    actor_slots.push(slot(Van, NB_OUT, 24.0, FRAC_PI_2, 0.3, 1.0));
    actor_slots.push(slot(Sedan, NB_IN, 48.0, FRAC_PI_2, 0.2, 1.0));
    actor_slots.push(slot(Sedan, -20.0, WB_IN, PI, 0.3, 1.5));
    actor_slots.push(slot(Sedan, -12.0, WB_OUT, PI, 0.3, 1.5));
    Layout {
        occluders,
        vehicle_slots: vec![
            vehicle(-55.0, EB_IN, 0.0, 0.4),
            vehicle(-30.0, EB_OUT, 0.0, 0.4),
            vehicle(-65.0, EB_IN, 0.0, 0.4),
            vehicle(SB_IN, 30.0, -FRAC_PI_2, 0.4),
        ],
        infra_slots: vec![pole(7.5, 7.5, 0.0), pole(-7.5, 7.5, PI)],
        actor_slots,
        extra_bands: vec![SpawnBand {
            x_min: -130.0,
            x_max: -100.0,
            y_min: WB_IN,
            y_max: WB_OUT,
            yaw: PI,
            speed: 0.3,
        }],
    }
}

/// Heading of the on-ramp: from (-40, -45) toward the merge point (0, -8).
const RAMP_YAW: f64 = 0.746_672_413_404_343_1;

pub(crate) fn merge_ramp() -> Layout {
    let mut occluders = Vec::new();
    // Noise wall between the ramp and the main road.
    occluders.push(OrientedBox3D::new(
        5.0,
        -12.0,
        1.75,
        0.8,
        100.0,
        3.5,
        0.0,
        Label::NotVehicle,
        1.0,
    ));
    occluders.push(building(-55.0, 25.0, 60.0, 30.0, 9.0));
    occluders.push(building(25.0, 25.0, 50.0, 30.0, 9.0));
    occluders.push(building(-115.0, 25.0, 40.0, 30.0, 9.0));
    occluders.push(building(95.0, 25.0, 40.0, 30.0, 9.0));

    Layout {
        occluders,
        vehicle_slots: vec![
            vehicle(-42.0, EB_IN, 0.0, 0.25),
            vehicle(-25.0, -31.1, RAMP_YAW, 0.25),
            vehicle(-52.0, EB_OUT, 0.0, 0.25),
            vehicle(-40.0, -45.0, RAMP_YAW, 0.25),
        ],
        infra_slots: vec![pole(10.0, -9.0, 0.0), pole(-20.0, 10.0, 0.0)],
        actor_slots: vec![
            // Jam ahead of the ego; the van and bus wall off the platoon.
            slot(Van, -30.0, EB_IN, 0.0, 0.25, 1.0),
            slot(Bus, -16.0, EB_IN, 0.0, 0.25, 1.0),
            // Platoon on the main road, hidden from every vehicle agent,
            // within 20 m of the gantry.
            slot(Sedan, -2.0, EB_IN, 0.0, 0.25, 1.0),
            slot(Sedan, 6.0, EB_OUT, 0.0, 0.25, 1.0),
            slot(Sedan, 14.0, EB_IN, 0.0, 0.25, 1.0),
            slot(Sedan, 22.0, EB_OUT, 0.0, 0.25, 1.0),
            slot(Sedan, 28.0, EB_IN, 0.0, 0.25, 1.0),
            // Oncoming traffic, close enough for the ego to box.
            slot(Sedan, -26.0, WB_IN, PI, 0.4, 1.5),
            slot(Sedan, -18.0, WB_OUT, PI, 0.4, 1.5),
            // Ramp follower in the adjacent ramp lane, corner-on to the
            // aux vehicle.
            slot(Sedan, -35.4, -35.9, RAMP_YAW, 0.25, 1.0),
        ],
        extra_bands: vec![SpawnBand {
            x_min: 25.0,
            x_max: 55.0,
            y_min: WB_IN,
            y_max: WB_OUT,
            yaw: PI,
            speed: 0.4,
        }],
    }
}

pub(crate) fn twin_intersections() -> Layout {
    let mut occluders = Vec::new();
    for &sx in &[-1.0, 1.0] {
        for &sy in &[-1.0, 1.0] {
            occluders.push(building(26.0 * sx, 22.0 * sy, 36.0, 28.0, 9.0));
            // Second junction 110 m east of the first.
            occluders.push(building(110.0 + 26.0 * sx, 22.0 * sy, 36.0, 28.0, 9.0));
        }
    }
    occluders.push(building(55.0, 25.0, 30.0, 30.0, 9.0));
    occluders.push(building(55.0, -25.0, 30.0, 30.0, 9.0));
    occluders.push(building(-66.0, 25.0, 52.0, 30.0, 9.0));
    occluders.push(building(-66.0, -25.0, 52.0, 30.0, 9.0));

    Layout {
        occluders,
        vehicle_slots: vec![
            vehicle(30.0, EB_IN, 0.0, 0.25),
            vehicle(112.0, -20.0, FRAC_PI_2, 0.25),
            vehicle(18.0, EB_IN, 0.0, 0.25),
            vehicle(SB_IN, 20.0, -FRAC_PI_2, 0.25),
        ],
        infra_slots: vec![pole(7.5, 7.5, 0.0), pole(117.5, 7.5, PI)],
        actor_slots: vec![
            // First junction: traffic the ego sees on its own, also in
            // the pole's near field (so the pole adds nothing new).
            slot(Sedan, 15.0, EB_OUT, 0.0, 0.25, 1.0),
            slot(Sedan, 14.0, WB_IN, PI, 0.3, 1.0),
            slot(Van, 24.0, EB_OUT, 0.0, 0.25, 1.0),
            // Open mid-block traffic ahead of the ego.
            slot(Sedan, 43.0, EB_OUT, 0.0, 0.25, 1.0),
            slot(Sedan, 48.0, WB_IN, PI, 0.3, 1.0),
            // Second junction: cross traffic hidden from the ego by the
            // corner buildings, covered only by the agent stationed there;
            // two of them are mid-turn inside the junction.
            slot(Sedan, 116.0, -12.0, FRAC_PI_2, 0.25, 1.0),
            slot(Sedan, 108.0, -16.0, -FRAC_PI_2, 0.25, 1.0),
            slot(Sedan, 103.5, 6.0, -FRAC_PI_2, 0.25, 1.0),
            slot(Sedan, 113.0, 8.0, 0.785, 0.2, 1.0),
            slot(Sedan, 107.5, 12.0, -2.356, 0.2, 1.0),
        ],
        extra_bands: vec![SpawnBand {
            x_min: -60.0,
            x_max: -25.0,
            y_min: EB_OUT,
            y_max: EB_IN,
            yaw: 0.0,
            speed: 0.3,
        }],
    }
}
