//! IMU preintegration under two acceleration models, with the lifted
//! switched-linear-system formulation, a synthetic scenario generator,
//! dataset readers/writers and trajectory evaluation.

pub mod error;
pub mod eval;
pub mod io;
pub mod lifted;
pub mod pipeline;
pub mod preint;
pub mod sim;
pub mod so3;
pub mod time;

pub use error::{Error, Result};
pub use preint::{ImuSample, Model, NavState, PreintDelta, Transform, GRAVITY};
pub use so3::{Mat3, RotationMatrix, Vec3};
pub use time::Timestamp;
