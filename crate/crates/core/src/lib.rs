//! Geometry, encoding, matching, loss and evaluation kernels for sparse
//! query-based 3D object detection on LiDAR point clouds.
//!
//! Boxes are `(cx, cy, cz, w, l, h, yaw)` in the LiDAR frame: `l` runs
//! along the heading, `w` across it, `h` along z, and `yaw` is measured
//! counter-clockwise from +x.

pub mod bev_roi;
pub mod box_codec;
mod error;
pub mod geom3d;
pub mod kitti_eval;
pub mod loss_engine;
pub mod set_matcher;
pub mod voxel_grid;

pub use error::{Error, Result};
pub use geom3d::{BevBox, Box3D};
