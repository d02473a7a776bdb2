//! Config-driven runner for the homlab experiments.

pub mod catalogue;
pub mod config;
pub mod run;
