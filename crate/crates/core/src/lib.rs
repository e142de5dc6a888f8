//! Point-set distance metrics and the machinery around them.
//!
//! * [`chamfer`]: Chamfer distance with analytic gradients, brute force or k-d tree.
//! * [`emd`]: Earth Mover's distance, exact (Hungarian) or ε-scaling auction.
//! * [`sampling`]: farthest point sampling, random subsampling, size equalization.
//! * [`voxel`]: volume-averaged splatting into occupancy grids, thresholding, IoU.
//! * [`losses`]: batch loss and Min-of-N loss over candidate predictions.
//! * [`meanshape`]: SGD over free point positions against synthetic shape distributions.
//! * [`bench`]: auction accuracy and timing against the exact solver.
//! * [`selftest`]: invariant checks runnable from the binary.
//! * [`io`]: `.xyz` point clouds, `PSGRID 1` grids, JSON distribution specs and bundle manifests.

pub mod bench;
pub mod chamfer;
pub mod emd;
pub mod error;
pub mod geom;
pub mod io;
pub mod losses;
pub mod meanshape;
pub mod numeric;
pub mod rng;
pub mod sampling;
pub mod selftest;
pub mod voxel;

pub use error::{Error, Result};
pub use geom::{DistanceResult, Point3, PointSet};
pub use rng::RandomSource;
