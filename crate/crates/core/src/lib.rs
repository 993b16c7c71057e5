//! Deterministic headless simulator for two-user collaborative VR sessions
//! with a shared partner-view window.

pub mod geometry;
pub mod harness;
pub mod netsim;
pub mod rng;
pub mod session;
pub mod viewsync;
pub mod world;
