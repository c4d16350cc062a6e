//! Discrete-element simulation of porous ice and snow: Burgers viscoelastic
//! contacts, sintered beam bonds that grow, fail and soften, granular
//! friction, and a calibration pipeline for fast-sintering experiments.

pub mod bond;
pub mod calibration;
pub mod contact;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod material;
pub mod rheology;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
