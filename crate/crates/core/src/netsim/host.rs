//! The authoritative side: applies delivered client input to the session and
//! replicates the resulting state.

use crate::geometry::{Pose, Vec3};
use crate::harness::metrics::MovementTrace;
use crate::session::{Action, Applied, OwnershipTable, PlayerId, Session, SessionError, ARM_REACH};
use crate::world::{ObjectId, SlotId, WorldError};

use super::log::{LogEvent, LogRecord};
use super::net::{DenyReason, Endpoint, NetMessage, Payload, PlayerSnapshot};

/// Lock-only arbitration: grant iff free or already owned by the requester.
pub fn arbitrate_lock(
    table: &mut OwnershipTable,
    player: PlayerId,
    object: ObjectId,
    request: u64,
    tick: u64,
) -> Payload {
    match table.try_acquire(object, player, tick) {
        crate::session::Acquire::Granted => Payload::LockGrant {
            player,
            object,
            request,
        },
        crate::session::Acquire::Denied(owner) => Payload::LockDeny {
            player,
            object,
            request,
            reason: DenyReason::Locked,
            owner: Some(owner),
        },
    }
}

fn deny_reason(e: &SessionError) -> (DenyReason, Option<PlayerId>) {
    match e {
        SessionError::LockDenied(owner) => (DenyReason::Locked, Some(*owner)),
        SessionError::ObjectPlaced => (DenyReason::Placed, None),
        SessionError::AlreadyHolding => (DenyReason::AlreadyHolding, None),
        SessionError::World(WorldError::UnknownObject(_)) => (DenyReason::UnknownObject, None),
        _ => (DenyReason::NotSelected, None),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CubeSnapshot {
    position: Vec3,
    holder: Option<PlayerId>,
    placed_in: Option<SlotId>,
}

/// Outgoing host messages produced while handling one tick.
pub type Outbox = Vec<(Endpoint, Payload)>;

#[derive(Debug, Clone)]
pub struct Host {
    pub session: Session,
    pub traces: [MovementTrace; 2],
    sent_cubes: Vec<CubeSnapshot>,
    sent_players: [PlayerSnapshot; 2],
}

impl Host {
    pub fn new(session: Session) -> Self {
        let sent_cubes = Self::cube_snapshots(&session);
        let sent_players = PlayerId::BOTH.map(|p| Self::player_snapshot(&session, p));
        Host {
            session,
            traces: [MovementTrace::new(), MovementTrace::new()],
            sent_cubes,
            sent_players,
        }
    }

    fn cube_snapshots(session: &Session) -> Vec<CubeSnapshot> {
        session
            .world
            .cubes
            .iter()
            .map(|c| CubeSnapshot {
                position: c.position,
                holder: session.locks.owner(c.id),
                placed_in: c.placed_in,
            })
            .collect()
    }

    pub fn player_snapshot(session: &Session, p: PlayerId) -> PlayerSnapshot {
        let s = session.player(p);
        PlayerSnapshot {
            head: s.head,
            controller: s.controller,
            held: s.held,
            shuttled: s.shuttled,
            highlighted: session.highlighted[p.index()],
        }
    }

    /// Applies one delivered client message.
    pub fn handle(&mut self, msg: &NetMessage, tick: u64, out: &mut Outbox, log: &mut Vec<LogRecord>) {
        let Some(sender) = msg.src.player() else { return };
        match msg.payload {
            Payload::PoseUpdate {
                player,
                head,
                controller_offset,
                controller,
            } if player == sender => {
                if !controller_offset.is_finite() {
                    return;
                }
                let offset = match controller_offset.length() {
                    len if len > ARM_REACH => controller_offset * (ARM_REACH / len),
                    _ => controller_offset,
                };
                let ps = self.session.player_mut(player);
                ps.head.orientation = head;
                ps.controller = Pose::new(ps.head.position + offset, controller);
                self.session.follow_held(player);
            }
            Payload::LockRequest { player, object, request } if player == sender => {
                self.grab(player, object, request, tick, msg.src, out, log);
            }
            Payload::InputEvent { player, action } if player == sender => {
                if let Action::Grab { object } = action {
                    self.grab(player, object, 0, tick, msg.src, out, log);
                    return;
                }
                let result = self.session.apply(player, action, tick);
                log.push(LogRecord {
                    tick,
                    actor: msg.src,
                    event: LogEvent::Input {
                        player,
                        action: action.name().to_string(),
                        error: result.as_ref().err().map(|e| e.to_string()),
                    },
                });
                if let Ok(applied) = result {
                    self.log_applied(player, applied, tick, log);
                }
            }
            Payload::WindowSyncEvent { player, anchor } if player == sender => {
                let valid = anchor.is_none_or(|a| a.distance.is_finite() && a.camera.apex.is_finite());
                if self.session.variant.has_window() && valid {
                    self.session.player_mut(player).window = anchor;
                }
            }
            _ => {}
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn grab(
        &mut self,
        player: PlayerId,
        object: ObjectId,
        request: u64,
        tick: u64,
        src: Endpoint,
        out: &mut Outbox,
        log: &mut Vec<LogRecord>,
    ) {
        log.push(LogRecord {
            tick,
            actor: src,
            event: LogEvent::Input {
                player,
                action: "grab".into(),
                error: None,
            },
        });
        let reply = match self.session.grab(player, object, tick) {
            Ok(g) => {
                log.push(LogRecord {
                    tick,
                    actor: Endpoint::Host,
                    event: LogEvent::LockGranted { player, object },
                });
                log.push(LogRecord {
                    tick,
                    actor: Endpoint::Host,
                    event: LogEvent::Grab {
                        player,
                        object,
                        grab_distance: g.grab_distance,
                        frame: g.frame,
                    },
                });
                Payload::LockGrant {
                    player,
                    object,
                    request,
                }
            }
            Err(e) => {
                let (reason, owner) = deny_reason(&e);
                log.push(LogRecord {
                    tick,
                    actor: Endpoint::Host,
                    event: LogEvent::LockDenied {
                        player,
                        object,
                        reason,
                        owner,
                    },
                });
                Payload::LockDeny {
                    player,
                    object,
                    request,
                    reason,
                    owner,
                }
            }
        };
        out.push((src, reply));
    }

    fn log_applied(&self, player: PlayerId, applied: Applied, tick: u64, log: &mut Vec<LogRecord>) {
        let mut push = |event| {
            log.push(LogRecord {
                tick,
                actor: Endpoint::Host,
                event,
            })
        };
        match applied {
            Applied::Selected(_) => {}
            Applied::Grabbed(_) => {}
            Applied::Released(r) => {
                push(LogEvent::Release {
                    player,
                    object: r.object,
                    position: r.position,
                });
                if let Some(p) = r.placement {
                    push(LogEvent::Placement {
                        player,
                        object: p.object,
                        slot: p.slot,
                        tangram: p.tangram,
                        hint: p.hint,
                        correct: p.correct,
                    });
                }
            }
            Applied::Teleported(t) => push(LogEvent::Teleport {
                player,
                from: t.from,
                to: t.to,
            }),
            Applied::Shuttled { shuttled } => push(LogEvent::Shuttle { player, shuttled }),
            Applied::Transferred(t) => push(LogEvent::Transfer {
                player,
                object: t.object,
                frame: t.frame,
                position: t.position,
            }),
        }
    }

    /// Per-tick host work after input: held objects follow their pointers,
    /// selection highlights refresh, and movement samples are recorded.
    pub fn update(&mut self, tick: u64, log: &mut Vec<LogRecord>) {
        for p in PlayerId::BOTH {
            self.session.follow_held(p);
            self.session.select(p);
            let pos = self.session.player(p).head.position;
            if self.traces[p.index()].record(pos) {
                log.push(LogRecord {
                    tick,
                    actor: Endpoint::Host,
                    event: LogEvent::MoveSample {
                        player: p,
                        x: pos.x,
                        z: pos.z,
                    },
                });
            }
        }
    }

    /// Sends every state change since the last call to both clients.
    pub fn replicate(&mut self, out: &mut Outbox) {
        let clients = [Endpoint::Client1, Endpoint::Client2];
        let now = Self::cube_snapshots(&self.session);
        for (i, (cur, old)) in now.iter().zip(&self.sent_cubes).enumerate() {
            let object = ObjectId(i as u32);
            if cur.position != old.position || cur.holder != old.holder {
                for dst in clients {
                    out.push((
                        dst,
                        Payload::ObjectState {
                            object,
                            position: cur.position,
                            holder: cur.holder,
                        },
                    ));
                }
            }
            if let (Some(slot), None) = (cur.placed_in, old.placed_in) {
                for dst in clients {
                    out.push((dst, Payload::PlacementEvent { object, slot }));
                }
            }
        }
        self.sent_cubes = now;
        for p in PlayerId::BOTH {
            let snap = Self::player_snapshot(&self.session, p);
            if snap != self.sent_players[p.index()] {
                for dst in clients {
                    out.push((dst, Payload::PlayerState { player: p, state: snap }));
                }
                self.sent_players[p.index()] = snap;
            }
        }
    }
}
