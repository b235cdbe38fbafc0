//! Fully actuated hexarotor: propulsion model, tilt-angle design optimizer,
//! rigid-body dynamics, geometric flight control and scenario harness.

pub mod design;
pub mod error;
pub mod flight_control;
pub mod rigid_body;
pub mod scenario;
pub mod wrench;

pub use error::{Error, Result};
pub use nalgebra;
