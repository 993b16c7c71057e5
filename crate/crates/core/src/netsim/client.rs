//! A client's replicated picture of the session plus its local tracking state.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::{Orientation, Pose, Vec3};
use crate::session::{Action, PlayerId, Session};
use crate::viewsync::{SyncEvent, SyncPolicy, Variant, ViewWindowState, WindowAnchor};
use crate::world::{AreaId, ObjectId, Room, SlotId, TangramId, TargetArea};

use super::host::Host;
use super::net::{DenyReason, Payload, PlayerSnapshot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaCube {
    pub id: ObjectId,
    pub tangram: TangramId,
    pub position: Vec3,
    pub holder: Option<PlayerId>,
    pub placed_in: Option<SlotId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSlot {
    pub id: SlotId,
    pub area: AreaId,
    pub position: Vec3,
    pub hint: TangramId,
    pub filled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LockReply {
    pub object: ObjectId,
    pub request: u64,
    pub granted: bool,
    pub reason: Option<DenyReason>,
}

/// What a driver may ask its client to do in one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Command {
    /// Head orientation and controller pose relative to the head position.
    Pose {
        head: Orientation,
        controller_offset: Vec3,
        controller: Orientation,
    },
    Input(Action),
    RequestLock(ObjectId),
    WindowDistance(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientState {
    pub player: PlayerId,
    pub variant: Variant,
    pub room: Room,
    pub areas: Vec<TargetArea>,
    pub cubes: Vec<ReplicaCube>,
    pub slots: Vec<ReplicaSlot>,
    /// Own state as last replicated by the host.
    pub own: PlayerSnapshot,
    pub partner: PlayerSnapshot,
    pub head: Orientation,
    pub controller_offset: Vec3,
    pub controller: Orientation,
    pub window: Option<ViewWindowState>,
    /// Objects this client believes it holds the lock for.
    pub owned: BTreeSet<ObjectId>,
    pub last_reply: Option<LockReply>,
    requests_sent: u64,
    release_mark: u64,
    sent_anchor: Option<WindowAnchor>,
}

impl ClientState {
    /// Client state at join time, seeded from the host's initial session.
    pub fn join(player: PlayerId, session: &Session) -> Self {
        let world = &session.world;
        let own = Host::player_snapshot(session, player);
        let partner = Host::player_snapshot(session, player.partner());
        let window = ViewWindowState::new(player, session.variant, partner.head, session.lens).ok();
        let sent_anchor = window.as_ref().map(|w| w.anchor());
        ClientState {
            player,
            variant: session.variant,
            room: world.room,
            areas: world.areas.clone(),
            cubes: world
                .cubes
                .iter()
                .map(|c| ReplicaCube {
                    id: c.id,
                    tangram: c.tangram,
                    position: c.position,
                    holder: session.locks.owner(c.id),
                    placed_in: c.placed_in,
                })
                .collect(),
            slots: world
                .slots
                .iter()
                .map(|s| ReplicaSlot {
                    id: s.id,
                    area: s.area,
                    position: s.position,
                    hint: s.hint,
                    filled: !s.is_empty(),
                })
                .collect(),
            own,
            partner,
            head: own.head.orientation,
            controller_offset: own.controller.position - own.head.position,
            controller: own.controller.orientation,
            window,
            owned: BTreeSet::new(),
            last_reply: None,
            requests_sent: 0,
            release_mark: 0,
            sent_anchor,
        }
    }

    /// Local head pose: replicated position, tracked orientation.
    pub fn head_pose(&self) -> Pose {
        Pose::new(self.own.head.position, self.head)
    }

    pub fn controller_pose(&self) -> Pose {
        Pose::new(self.own.head.position + self.controller_offset, self.controller)
    }

    /// Anchor as the host will see it once the latest sync arrives.
    pub fn anchor(&self) -> Option<WindowAnchor> {
        self.window.as_ref().map(|w| w.anchor())
    }

    pub fn receive(&mut self, payload: &Payload) {
        match *payload {
            Payload::ObjectState {
                object,
                position,
                holder,
            } => {
                if let Some(c) = self.cubes.get_mut(object.index()) {
                    c.position = position;
                    c.holder = holder;
                }
            }
            Payload::PlacementEvent { object, slot } => {
                if let Some(c) = self.cubes.get_mut(object.index()) {
                    c.placed_in = Some(slot);
                }
                if let Some(s) = self.slots.get_mut(slot.index()) {
                    s.filled = true;
                }
            }
            Payload::PlayerState { player, state } => {
                if player == self.player {
                    self.own = state;
                } else {
                    self.partner = state;
                }
            }
            Payload::LockGrant {
                player,
                object,
                request,
            } if player == self.player => {
                // A release sent after this request supersedes the grant.
                if request > self.release_mark {
                    self.owned.insert(object);
                }
                self.last_reply = Some(LockReply {
                    object,
                    request,
                    granted: true,
                    reason: None,
                });
            }
            Payload::LockDeny {
                player,
                object,
                request,
                reason,
                ..
            } if player == self.player => {
                self.last_reply = Some(LockReply {
                    object,
                    request,
                    granted: false,
                    reason: Some(reason),
                });
            }
            _ => {}
        }
    }

    pub fn update_window(&mut self, tick: u64, policy: &SyncPolicy, tick_hz: f64) -> Vec<SyncEvent> {
        let partner_head = self.partner.head;
        let shuttled = self.own.shuttled;
        match self.window.as_mut() {
            Some(w) => w.update(partner_head, shuttled, tick, policy, tick_hz),
            None => Vec::new(),
        }
    }

    /// Number of the most recent lock request.
    pub fn requests_sent(&self) -> u64 {
        self.requests_sent
    }

    /// Turns driver commands into outgoing messages. A changed window
    /// anchor is announced first so the host sees it before any input.
    pub fn issue(&mut self, commands: &[Command]) -> Vec<Payload> {
        let player = self.player;
        let mut out = Vec::new();
        let anchor = self.anchor();
        if anchor != self.sent_anchor {
            out.push(Payload::WindowSyncEvent { player, anchor });
            self.sent_anchor = anchor;
        }
        for c in commands {
            match *c {
                Command::Pose {
                    head,
                    controller_offset,
                    controller,
                } => {
                    self.head = head;
                    self.controller_offset = controller_offset;
                    self.controller = controller;
                    out.push(Payload::PoseUpdate {
                        player,
                        head,
                        controller_offset,
                        controller,
                    });
                }
                Command::Input(action) => {
                    if let Action::Release = action {
                        self.owned.clear();
                        self.release_mark = self.requests_sent;
                    }
                    out.push(Payload::InputEvent { player, action });
                }
                Command::RequestLock(object) => {
                    self.requests_sent += 1;
                    out.push(Payload::LockRequest {
                        player,
                        object,
                        request: self.requests_sent,
                    });
                }
                Command::WindowDistance(d) => {
                    if let Some(w) = self.window.as_mut() {
                        w.set_window_distance(d);
                    }
                }
            }
        }
        out
    }
}
