pub mod cli;
pub mod config;
pub mod controller;
pub mod error;
pub mod integrator;
pub mod io;
pub mod planner;
pub mod reference;
pub mod spin_model;
pub mod su_core;

pub use error::{Error, Result};
