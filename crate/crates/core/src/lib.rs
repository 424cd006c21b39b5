//! Simulation core for an amphibious salamander-like robot.

pub mod morphology;
pub mod rigidbody;
pub mod actuation;
pub mod env;
pub mod hydro;
pub mod transition;
