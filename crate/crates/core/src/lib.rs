//! Spinning multi-channel LiDAR simulator for automotive paint panels.
//!
//! The crate models a VLS-128 class sensor scanning flat painted panels on a
//! tilting mount, turns the resulting point clouds into per-panel intensity
//! statistics over a full (paint, angle, distance, surface, run) sweep, and
//! builds condition-binned perception error models (PEMs) from the simulated
//! detections.
//!
//! Module map:
//!
//! * [`rng`], [`scene`], [`scenario`], [`paints`]: shared domain types,
//!   scenario files and deterministic random streams.
//! * [`reflectance`]: paint/angle/range/surface to intensity distribution.
//! * [`scanner`] and [`cloud_io`]: beam generation, ray/panel intersection,
//!   point-cloud assembly and dump formats.
//! * [`analysis`]: ROI extraction, statistics, sweeps and reports.
//! * [`pem`]: detector, association, calibration, injection and validation.

pub mod analysis;
pub mod cloud_io;
pub mod error;
pub mod geometry;
pub mod paints;
pub mod pem;
pub mod reflectance;
pub mod rng;
pub mod scanner;
pub mod scenario;
pub mod scene;

pub use error::{Error, Result};
pub use rng::RandomStream;
pub use scene::{
    BeamPattern, BeamTable, Finish, LidarPoint, PaintParams, PanelSpec, PointCloud, Scene,
    SensorConfig, Surface,
};
