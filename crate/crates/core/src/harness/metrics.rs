//! Behavioral measures derived from a session log.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::netsim::log::{LogEvent, SessionLog};
use crate::session::PlayerId;

/// Minimum planar displacement, exclusive, before a new sample is recorded.
pub const MOVE_RECORD_THRESHOLD: f64 = 0.10;

/// Planar position samples of one player.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MovementTrace {
    pub samples: Vec<(f64, f64)>,
}

impl MovementTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `(x, z)` when the trace is empty or the player moved more
    /// than the threshold from the last sample. Returns whether it did.
    pub fn record(&mut self, position: Vec3) -> bool {
        let p = (position.x, position.z);
        let far_enough = match self.samples.last() {
            None => true,
            Some(&(x, z)) => (p.0 - x).hypot(p.1 - z) > MOVE_RECORD_THRESHOLD,
        };
        if far_enough {
            self.samples.push(p);
        }
        far_enough
    }
}

pub fn record_position(trace: &mut MovementTrace, position: Vec3) -> bool {
    trace.record(position)
}

/// Planar path length through the samples.
pub fn accumulated_distance(trace: &MovementTrace) -> f64 {
    trace
        .samples
        .windows(2)
        .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub matched: u32,
    pub placed: u32,
    pub accuracy: Option<f64>,
    pub accumulated_distance: [f64; 2],
    pub teleport_count: [u32; 2],
    pub use_time: u32,
    pub ticks: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("malformed log: {0}")]
    MalformedLog(String),
}

/// Recounts everything from the log's event stream.
pub fn compute_metrics(log: &SessionLog) -> Result<Metrics, MetricsError> {
    let bad = |m: String| Err(MetricsError::MalformedLog(m));
    let Some((_, ticks)) = log.end() else {
        return bad("missing end record".into());
    };
    let mut traces = [MovementTrace::new(), MovementTrace::new()];
    let mut m = Metrics {
        matched: 0,
        placed: 0,
        accuracy: None,
        accumulated_distance: [0.0; 2],
        teleport_count: [0; 2],
        use_time: 0,
        ticks,
    };
    let mut filled = std::collections::BTreeSet::new();
    let mut last_tick = 0;
    let n = log.records.len();
    for (i, r) in log.records.iter().enumerate() {
        if r.tick < last_tick {
            return bad(format!("record {i} goes back in time"));
        }
        last_tick = r.tick;
        match &r.event {
            LogEvent::Placement {
                slot,
                correct,
                tangram,
                hint,
                ..
            } => {
                if *correct != (tangram == hint) {
                    return bad(format!("record {i}: correctness disagrees with tangram and hint"));
                }
                if !filled.insert(*slot) {
                    return bad(format!("record {i}: slot {slot} filled twice"));
                }
                m.placed += 1;
                m.matched += u32::from(*correct);
            }
            LogEvent::Teleport { player, .. } => m.teleport_count[player.index()] += 1,
            LogEvent::Transfer { .. } => m.use_time += 1,
            LogEvent::MoveSample { player, x, z } => {
                traces[player.index()].samples.push((*x, *z));
            }
            LogEvent::End { .. } if i + 1 != n => return bad("end record before the last line".into()),
            _ => {}
        }
    }
    if m.placed > 0 {
        m.accuracy = Some(m.matched as f64 / m.placed as f64);
    }
    for p in PlayerId::BOTH {
        m.accumulated_distance[p.index()] = accumulated_distance(&traces[p.index()]);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_and_pythagorean() {
        let mut t = MovementTrace::new();
        assert!(t.record(Vec3::new(0.0, 1.6, 0.0)));
        assert_eq!(accumulated_distance(&t), 0.0);
        assert!(t.record(Vec3::new(3.0, 1.6, 4.0)));
        assert_eq!(accumulated_distance(&t), 5.0);
    }

    #[test]
    fn threshold_is_strict_and_cumulative() {
        let mut t = MovementTrace::new();
        t.record(Vec3::ZERO);
        for i in 1..=5 {
            // Oscillate within 5 cm of the origin.
            let x = if i % 2 == 0 { 0.05 } else { -0.05 };
            assert!(!t.record(Vec3::new(x, 0.0, 0.0)));
        }
        assert_eq!(accumulated_distance(&t), 0.0);
        assert!(t.record(Vec3::new(0.12, 0.0, 0.0)));

        let mut t = MovementTrace::new();
        let mut appended = Vec::new();
        for i in 0..=20 {
            if t.record(Vec3::new(0.09 * i as f64, 0.0, 0.0)) {
                appended.push(i);
            }
        }
        assert_eq!(appended, vec![0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20]);
        assert!((accumulated_distance(&t) - 1.8).abs() < 1e-12);
    }

    #[test]
    fn height_is_ignored() {
        let mut t = MovementTrace::new();
        t.record(Vec3::new(1.0, 0.0, 1.0));
        assert!(!t.record(Vec3::new(1.0, 5.0, 1.0)));
    }
}
