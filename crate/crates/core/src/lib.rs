//! Camera pose and location from images of circular ceiling luminaires.
//!
//! A luminaire's rim projects to an ellipse; the cone through that ellipse
//! fixes the luminaire's orientation and distance relative to the camera up
//! to a two-fold ambiguity, which a second luminaire resolves. With the
//! luminaires' world coordinates (broadcast over the light itself) the
//! camera pose follows in closed form.
//!
//! - [`frames`]: pixel, image, camera and world frames; Euler angles and
//!   quaternions.
//! - [`conic`]: ellipse fitting, the viewing cone and the luminaire plane.
//! - [`solver`]: the complete-plus-arc and arc-plus-arc pose solvers, the
//!   dispatcher between them and a reprojection-error baseline.
//! - [`sim`]: synthetic scenes, captures, noise and occlusion.
//! - [`harness`]: metrics, Monte Carlo runs, sweeps and result files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conic;
pub mod frames;
pub mod harness;
pub mod sim;
pub mod solver;
