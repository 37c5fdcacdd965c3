//! Desk-scale simulator for a 10-DOF hobby-servo biped.
//!
//! The pipeline runs from a keyframe table of servo pulses ([`gait`]) through
//! the servo mapping ([`servo`]) and forward kinematics ([`model`]) to static
//! stability and inverted-pendulum ZMP analysis ([`stability`]). [`comm`]
//! emulates the master and slave controllers over a checksummed text
//! protocol, and [`cli`] ties it together for the `gaitforge` binary.

pub mod cli;
pub mod comm;
pub mod gait;
pub mod model;
pub mod servo;
pub mod stability;

pub use gait::{builtin_forward_table, GaitTable, Trajectory};
pub use model::{BipedGeometry, JointId, JointVector};
pub use servo::{PwmFrame, ServoBank};
