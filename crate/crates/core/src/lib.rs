//! Desk-scale multi-agent collaborative-perception simulator.
//!
//! An ego agent (a vehicle or a roadside sensor pole) fuses LiDAR-derived
//! information from auxiliary agents to detect vehicles around it. The crate
//! simulates the full loop on procedural street scenes:
//!
//! 1. [`scene`] builds deterministic scenario layouts (intersections, a merge
//!    ramp, twin intersections) with actors, occluders, and agent mounts.
//! 2. [`sensing`] ray-casts a spinning LiDAR with first-hit occlusion.
//! 3. [`channel`] ships each aux agent's cloud to the ego with pose noise,
//!    latency, and voxel compression; the ego's own data is exempt.
//! 4. [`fusion`] rasterizes clouds to BEV occupancy grids, fuses them
//!    (early/late/intermediate), and fits oriented boxes to components.
//! 5. [`eval`] matches detections against ground truth and computes AP@IoU.
//! 6. [`harness`] runs the built-in experiment suites and writes reports.
//!
//! All randomness is seeded; every run is reproducible byte-for-byte,
//! independent of the worker count (the `parallel` feature switches the
//! data-parallel inner loops between rayon and plain iterators without
//! changing any output).

pub mod channel;
pub mod eval;
pub mod fusion;
pub mod geometry;
pub mod harness;
pub mod scene;
pub mod sensing;

mod exec;

pub use exec::par_map;
