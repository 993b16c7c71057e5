//! Newline-delimited session log: one header line carrying the config, then
//! one record per event in emission order.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::session::{Frame, PlayerId};
use crate::viewsync::SyncEventKind;
use crate::world::{ObjectId, SlotId, TangramId};

use super::config::SessionConfig;
use super::net::{DenyReason, Endpoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    Completed,
    Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum LogEvent {
    Input {
        player: PlayerId,
        action: String,
        error: Option<String>,
    },
    LockGranted {
        player: PlayerId,
        object: ObjectId,
    },
    LockDenied {
        player: PlayerId,
        object: ObjectId,
        reason: DenyReason,
        owner: Option<PlayerId>,
    },
    Grab {
        player: PlayerId,
        object: ObjectId,
        grab_distance: f64,
        frame: Frame,
    },
    Release {
        player: PlayerId,
        object: ObjectId,
        position: Vec3,
    },
    Placement {
        player: PlayerId,
        object: ObjectId,
        slot: SlotId,
        tangram: TangramId,
        hint: TangramId,
        correct: bool,
    },
    Teleport {
        player: PlayerId,
        from: Vec3,
        to: Vec3,
    },
    Shuttle {
        player: PlayerId,
        shuttled: bool,
    },
    Transfer {
        player: PlayerId,
        object: ObjectId,
        frame: Frame,
        position: Vec3,
    },
    MoveSample {
        player: PlayerId,
        x: f64,
        z: f64,
    },
    Sync {
        player: PlayerId,
        event: SyncEventKind,
    },
    Undelivered {
        src: Endpoint,
        dst: Endpoint,
        seq: u64,
        send_tick: u64,
        deliver_tick: u64,
        message: String,
    },
    End {
        reason: EndReason,
        ticks: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub tick: u64,
    pub actor: Endpoint,
    #[serde(flatten)]
    pub event: LogEvent,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum HeaderLine {
    Header { config: SessionConfig },
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("log is empty")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub config: SessionConfig,
    pub records: Vec<LogRecord>,
}

impl SessionLog {
    pub fn end(&self) -> Option<(EndReason, u64)> {
        match self.records.last().map(|r| &r.event) {
            Some(LogEvent::End { reason, ticks }) => Some((*reason, *ticks)),
            _ => None,
        }
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header = HeaderLine::Header {
            config: self.config.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_ndjson(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self, LogError> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
            Ok(s) => !s.trim().is_empty(),
            Err(_) => true,
        });
        let (_, first) = lines.next().ok_or(LogError::Empty)?;
        let HeaderLine::Header { config } =
            serde_json::from_str(&first?).map_err(|source| LogError::Json { line: 1, source })?;
        let mut records = Vec::new();
        for (i, line) in lines {
            let line = line?;
            let rec = serde_json::from_str(&line).map_err(|source| LogError::Json { line: i + 1, source })?;
            records.push(rec);
        }
        Ok(SessionLog { config, records })
    }

    pub fn from_ndjson(s: &str) -> Result<Self, LogError> {
        Self::read_from(s.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, LogError> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}
