//! Scene direction toolkit: author labeled 3D boxes and a camera over time,
//! render per-frame depth and entity-id maps plus an F×12 camera sequence,
//! and reconstruct such scenes from externally produced masks, depth, poses
//! and point tracks.

pub mod autolabel;
pub mod flow;
pub mod geometry;
pub mod hull;
pub mod io;
pub mod metrics;
pub mod obb;
pub mod par;
pub mod raster;
pub mod render;
pub mod scene;
pub mod synth;
