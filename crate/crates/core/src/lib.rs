//! Mobility-aware handover planning for upper-limb prosthesis users.
//!
//! The crate models the user's trunk and arm as an 8-DoF chain
//! ([`kinematics`]), scores compensatory movement against an impairment
//! model ([`mobility`]), and solves for the object transfer pose that keeps
//! impaired joints still while the healthy ones stay near a natural posture
//! ([`optimizer`]). [`trajectory`], [`metrics`] and [`harness`] turn solved
//! postures into simulated sessions and compare robot-passing against a
//! human-passing baseline.

pub mod error;
pub mod harness;
pub mod kinematics;
pub mod metrics;
pub mod mobility;
pub mod optimizer;
pub mod parallel;
pub mod trajectory;

pub use error::{Error, Result};
pub use kinematics::{JointVector, KinematicModel, RigidTransform, JOINT_COUNT};
pub use parallel::Execution;
