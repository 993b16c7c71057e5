//! Many seeded sessions, one metrics row each.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netsim::{SessionConfig, SimError};
use crate::viewsync::Variant;
use crate::world::Complexity;

use super::agents::{run_agents, AgentKind};
use super::metrics::{compute_metrics, Metrics, MetricsError};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One line of sweep output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub variant: Variant,
    pub task: Complexity,
    pub policy: AgentKind,
    pub matched: u32,
    pub placed: u32,
    pub accuracy: Option<f64>,
    pub dist_p1_m: f64,
    pub dist_p2_m: f64,
    pub teleports_p1: u32,
    pub teleports_p2: u32,
    pub use_time: u32,
    pub ticks: u64,
}

impl SweepRow {
    pub fn new(seed: u64, config: &SessionConfig, m: &Metrics) -> Self {
        SweepRow {
            seed,
            variant: config.variant,
            task: config.complexity,
            policy: config.policies[0].kind,
            matched: m.matched,
            placed: m.placed,
            accuracy: m.accuracy,
            dist_p1_m: m.accumulated_distance[0],
            dist_p2_m: m.accumulated_distance[1],
            teleports_p1: m.teleport_count[0],
            teleports_p2: m.teleport_count[1],
            use_time: m.use_time,
            ticks: m.ticks,
        }
    }

    pub fn teleports(&self) -> u32 {
        self.teleports_p1 + self.teleports_p2
    }

    pub fn distance(&self) -> f64 {
        self.dist_p1_m + self.dist_p2_m
    }
}

/// A grid of variants by seeds on one task.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub variants: Vec<Variant>,
    pub complexity: Complexity,
    pub seeds: std::ops::Range<u64>,
    /// Policy for every session; `None` picks each variant's usual one.
    pub policy: Option<AgentKind>,
    pub duration_s: Option<f64>,
}

impl SweepPlan {
    /// Configs in output order: variant-major, then seed.
    pub fn configs(&self) -> Vec<(u64, SessionConfig)> {
        let mut out = Vec::new();
        for &v in &self.variants {
            let kind = self.policy.unwrap_or(AgentKind::default_for(v));
            for seed in self.seeds.clone() {
                let mut c = SessionConfig::new(v, self.complexity, kind, seed);
                if let Some(d) = self.duration_s {
                    c.duration_s = d;
                }
                out.push((seed, c));
            }
        }
        out
    }
}

fn run_one(seed: u64, config: &SessionConfig) -> Result<SweepRow, SweepError> {
    let log = run_agents(config.clone())?;
    let m = compute_metrics(&log)?;
    Ok(SweepRow::new(seed, config, &m))
}

/// Runs every config. Rows come back in input order whether or not the
/// sessions run in parallel.
pub fn run_sweep(configs: &[(u64, SessionConfig)], parallel: bool) -> Result<Vec<SweepRow>, SweepError> {
    if parallel {
        configs.par_iter().map(|(s, c)| run_one(*s, c)).collect()
    } else {
        configs.iter().map(|(s, c)| run_one(*s, c)).collect()
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn to_csv(rows: &[SweepRow]) -> Result<String, SweepError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Ordinary least-squares slope of `y` on `x`. `None` for fewer than two
/// points or no spread in `x`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
