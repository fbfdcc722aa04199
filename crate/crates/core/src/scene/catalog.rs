//! Actor size catalog and mount-height constants.

use serde::{Deserialize, Serialize};

/// A vehicle silhouette from the fixed actor catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActorClass {
    Sedan,
    Van,
    Bus,
}

impl ActorClass {
    /// (width, length, height) in meters.
    pub fn dims(self) -> (f64, f64, f64) {
        match self {
            ActorClass::Sedan => (2.0, 4.5, 1.6),
            ActorClass::Van => (2.4, 6.0, 2.4),
            ActorClass::Bus => (2.5, 12.0, 3.5),
        }
    }
}

/// Gap between the ground plane and the bottom of every vehicle body
/// (wheels and axle clearance). Keeps body points clear of the ground
/// filter and actor centers inside both ego-type z ranges.
pub const GROUND_CLEARANCE: f64 = 0.3;

/// LiDAR mount height for vehicle agents (roof of a sedan).
pub const VEHICLE_MOUNT_HEIGHT: f64 = 1.9;

/// LiDAR mount height for infrastructure poles in wide-range scenes.
pub const INFRA_MOUNT_HEIGHT: f64 = 5.9;

/// Taller pole variant for compact near-range scenes.
pub const INFRA_MOUNT_HEIGHT_TALL: f64 = 7.4;
