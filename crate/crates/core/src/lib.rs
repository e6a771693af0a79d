//! Grasp planning for two-finger underactuated grippers by slicing the
//! object with the finger plane.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod gripper;
pub mod hull;
pub mod octree;
pub mod parallel;
pub mod planner;
pub mod pool;
pub mod quality;
pub mod refine;
pub mod shape;
pub mod slice;
