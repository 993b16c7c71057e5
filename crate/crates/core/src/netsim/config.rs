use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::agents::{AgentKind, AgentPolicy};
use crate::viewsync::{SyncPolicy, Variant};
use crate::world::Complexity;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    /// One-way latency between the host and the remote client.
    pub latency_ms: f64,
    /// Extra delay drawn uniformly from `[0, jitter_ms]` per message.
    pub jitter_ms: f64,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            latency_ms: 50.0,
            jitter_ms: 5.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("duration must be positive and finite, got {0}")]
    Duration(f64),
    #[error("tick rate must be positive")]
    TickRate,
    #[error("latency and jitter must be finite and non-negative")]
    Network,
    #[error("agent tick costs must be at least 1")]
    AgentCosts,
    #[error("sync thresholds must be finite and non-negative")]
    Sync,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub variant: Variant,
    pub complexity: Complexity,
    pub duration_s: f64,
    pub tick_hz: u32,
    pub net: NetConfig,
    pub world_seed: u64,
    pub policies: [AgentPolicy; 2],
    pub sync: SyncPolicy,
    /// Lock lease in ticks; `None` holds locks until release.
    pub lock_timeout_ticks: Option<u64>,
}

impl SessionConfig {
    /// A 10-minute session at 50 Hz with default network and both players
    /// on the same policy kind, everything seeded from `seed`.
    pub fn new(variant: Variant, complexity: Complexity, kind: AgentKind, seed: u64) -> Self {
        SessionConfig {
            variant,
            complexity,
            duration_s: 600.0,
            tick_hz: 50,
            net: NetConfig {
                seed,
                ..NetConfig::default()
            },
            world_seed: seed,
            policies: [
                AgentPolicy::new(kind, seed.wrapping_mul(2)),
                AgentPolicy::new(kind, seed.wrapping_mul(2).wrapping_add(1)),
            ],
            sync: SyncPolicy::default(),
            lock_timeout_ticks: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(ConfigError::Duration(self.duration_s));
        }
        if self.tick_hz == 0 {
            return Err(ConfigError::TickRate);
        }
        let net_ok = |v: f64| v.is_finite() && v >= 0.0;
        if !net_ok(self.net.latency_ms) || !net_ok(self.net.jitter_ms) {
            return Err(ConfigError::Network);
        }
        if self
            .policies
            .iter()
            .any(|p| p.reaction_ticks == 0 || p.recognition_ticks == 0)
        {
            return Err(ConfigError::AgentCosts);
        }
        let s = &self.sync;
        if ![s.pos_threshold, s.rot_threshold, s.interp_duration_s]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
        {
            return Err(ConfigError::Sync);
        }
        Ok(())
    }

    /// Session length in ticks, at least one.
    pub fn total_ticks(&self) -> u64 {
        ((self.duration_s * self.tick_hz as f64).round() as u64).max(1)
    }
}
