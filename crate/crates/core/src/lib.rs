//! Dual-arm geometric peg-in-hole simulation, scripted expert demonstrations,
//! behavior cloning, and seeded evaluation.
//!
//! The geometry and polygon code is generic over [`Real`] (`f32`/`f64`); the
//! aliases below fix the scalar to `f64`, which everything downstream uses.

pub mod env;
pub mod error;
pub mod eval;
pub mod expert;
pub mod geom;
pub mod learn;
pub mod scalar;
pub mod shapes;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Vec2 = geom::Vec2<f64>;
pub type Vec3 = geom::Vec3<f64>;
pub type Mat3 = geom::Mat3<f64>;
pub type Quat = geom::Quat<f64>;
pub type Pose = geom::Pose<f64>;
pub type Rot6D = geom::Rot6D<f64>;
pub type ActionVec = geom::ActionVec<f64>;

pub type Pose32 = geom::Pose<f32>;
pub type Rot6D32 = geom::Rot6D<f32>;
