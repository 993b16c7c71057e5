//! Scripted sessions, metrics and seed sweeps.

pub mod agents;
pub mod metrics;
pub mod sweep;
