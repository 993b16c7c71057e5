//! Discrete-time network simulation: a host-authoritative session, two
//! clients, and delayed reliable links between them.

pub mod client;
pub mod config;
pub mod host;
pub mod log;
pub mod net;

use std::ops::Range;

use thiserror::Error;

use crate::session::{PlayerId, Session};
use crate::world::{generate_task, WorldError};

pub use client::{ClientState, Command, LockReply, ReplicaCube, ReplicaSlot};
pub use config::{ConfigError, NetConfig, SessionConfig};
pub use host::{arbitrate_lock, Host};
pub use log::{EndReason, LogError, LogEvent, LogRecord, SessionLog};
pub use net::{quantize_delay, DenyReason, Endpoint, NetMessage, Network, Payload, PlayerSnapshot};

/// Decides what each client does on a tick, seeing only that client's state.
pub trait Driver {
    fn act(&mut self, player: PlayerId, client: &ClientState, tick: u64) -> Vec<Command>;
}

/// Never does anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdleDriver;

impl Driver for IdleDriver {
    fn act(&mut self, _: PlayerId, _: &ClientState, _: u64) -> Vec<Command> {
        Vec::new()
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub delivered: Vec<NetMessage>,
    /// Indices into the log of the records this step produced.
    pub events: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    config: SessionConfig,
    tick: u64,
    total_ticks: u64,
    host: Host,
    clients: [ClientState; 2],
    net: Network,
    log: Vec<LogRecord>,
    end: Option<EndReason>,
}

impl Simulation {
    pub fn new(config: SessionConfig) -> Result<Self, SimError> {
        config.validate()?;
        let world = generate_task(config.complexity, config.world_seed)?;
        let mut session = Session::new(config.variant, world);
        session.locks.timeout_ticks = config.lock_timeout_ticks;
        let clients = PlayerId::BOTH.map(|p| ClientState::join(p, &session));
        for p in PlayerId::BOTH {
            session.player_mut(p).window = clients[p.index()].anchor();
        }
        Ok(Simulation {
            total_ticks: config.total_ticks(),
            net: Network::new(&config.net, config.tick_hz),
            host: Host::new(session),
            clients,
            config,
            tick: 0,
            log: Vec::new(),
            end: None,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn host(&self) -> &Host {
        &self.host
    }

    pub fn client(&self, p: PlayerId) -> &ClientState {
        &self.clients[p.index()]
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn is_finished(&self) -> bool {
        self.end.is_some()
    }

    /// Advances one tick: deliver, apply at the host, replicate, update
    /// windows, let the drivers act.
    pub fn step<D: Driver + ?Sized>(&mut self, driver: &mut D) -> StepReport {
        let first = self.log.len();
        if self.end.is_some() {
            return StepReport {
                delivered: Vec::new(),
                events: first..first,
            };
        }
        let t = self.tick;
        let hz = self.config.tick_hz as f64;

        let delivered = self.net.take_due(t);
        let mut outbox = Vec::new();
        for m in &delivered {
            match m.dst.player() {
                None => self.host.handle(m, t, &mut outbox, &mut self.log),
                Some(p) => self.clients[p.index()].receive(&m.payload),
            }
        }

        self.host.update(t, &mut self.log);
        self.host.replicate(&mut outbox);
        for (dst, payload) in outbox {
            self.net.send(Endpoint::Host, dst, payload, t);
        }

        for p in PlayerId::BOTH {
            let events = self.clients[p.index()].update_window(t, &self.config.sync, hz);
            for e in events {
                self.log.push(LogRecord {
                    tick: t,
                    actor: Endpoint::client(p),
                    event: LogEvent::Sync {
                        player: p,
                        event: e.kind,
                    },
                });
            }
        }

        for p in PlayerId::BOTH {
            let client = &mut self.clients[p.index()];
            let commands = driver.act(p, client, t);
            for payload in client.issue(&commands) {
                self.net.send(Endpoint::client(p), Endpoint::Host, payload, t);
            }
        }

        self.tick += 1;
        if self.host.session.world.is_complete() {
            self.finish(EndReason::Completed, t);
        } else if self.tick >= self.total_ticks {
            self.finish(EndReason::Duration, t);
        }
        StepReport {
            delivered,
            events: first..self.log.len(),
        }
    }

    fn finish(&mut self, reason: EndReason, last_tick: u64) {
        for m in self.net.drain() {
            self.log.push(LogRecord {
                tick: last_tick,
                actor: m.src,
                event: LogEvent::Undelivered {
                    src: m.src,
                    dst: m.dst,
                    seq: m.seq,
                    send_tick: m.send_tick,
                    deliver_tick: m.deliver_tick,
                    message: m.payload.name().to_string(),
                },
            });
        }
        self.log.push(LogRecord {
            tick: last_tick,
            actor: Endpoint::Host,
            event: LogEvent::End {
                reason,
                ticks: self.tick,
            },
        });
        self.end = Some(reason);
    }

    pub fn run_to_completion<D: Driver + ?Sized>(mut self, driver: &mut D) -> SessionLog {
        while self.end.is_none() {
            self.step(driver);
        }
        self.into_log()
    }

    pub fn into_log(self) -> SessionLog {
        SessionLog {
            config: self.config,
            records: self.log,
        }
    }

    /// Lock exclusivity as seen by the host and by both clients' beliefs.
    /// Returns a description of the first violation found.
    pub fn lock_violation(&self) -> Option<String> {
        let s = &self.host.session;
        let held = PlayerId::BOTH.map(|p| s.player(p).held.map(|h| h.object));
        if let (Some(a), Some(b)) = (held[0], held[1]) {
            if a == b {
                return Some(format!("both players hold object {a}"));
            }
        }
        for p in PlayerId::BOTH {
            if let Some(o) = held[p.index()] {
                if s.locks.owner(o) != Some(p) {
                    return Some(format!("player {p} holds {o} without its lock"));
                }
            }
        }
        let [c1, c2] = &self.clients;
        if let Some(o) = c1.owned.intersection(&c2.owned).next() {
            return Some(format!("both clients believe they own object {o}"));
        }
        for c in &self.clients {
            for o in &c.owned {
                let host_owner = s.locks.owner(*o);
                if host_owner.is_some_and(|h| h != c.player) {
                    return Some(format!("client {} believes it owns {o}, host says {:?}", c.player, host_owner));
                }
            }
        }
        None
    }
}
