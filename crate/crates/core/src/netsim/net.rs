//! Reliable, ordered, delayed message links between the host and two clients.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{Orientation, Pose, Vec3};
use crate::rng::SplitMix64;
use crate::session::{Action, Held, PlayerId};
use crate::viewsync::WindowAnchor;
use crate::world::{ObjectId, SlotId};

use super::config::NetConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Host,
    Client1,
    Client2,
}

impl Endpoint {
    pub fn client(p: PlayerId) -> Endpoint {
        match p {
            PlayerId::One => Endpoint::Client1,
            PlayerId::Two => Endpoint::Client2,
        }
    }

    pub fn player(self) -> Option<PlayerId> {
        match self {
            Endpoint::Host => None,
            Endpoint::Client1 => Some(PlayerId::One),
            Endpoint::Client2 => Some(PlayerId::Two),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Endpoint::Host => "host",
            Endpoint::Client1 => "client1",
            Endpoint::Client2 => "client2",
        }
    }
}

/// Replicated view of one player, host to clients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerSnapshot {
    pub head: Pose,
    pub controller: Pose,
    pub held: Option<Held>,
    pub shuttled: bool,
    pub highlighted: Option<ObjectId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenyReason {
    Locked,
    Placed,
    NotSelected,
    AlreadyHolding,
    UnknownObject,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    /// Client to host: tracked head orientation and controller pose relative
    /// to the head position, which only the host moves.
    PoseUpdate {
        player: PlayerId,
        head: Orientation,
        controller_offset: Vec3,
        controller: Orientation,
    },
    InputEvent {
        player: PlayerId,
        action: Action,
    },
    LockRequest {
        player: PlayerId,
        object: ObjectId,
        request: u64,
    },
    LockGrant {
        player: PlayerId,
        object: ObjectId,
        request: u64,
    },
    LockDeny {
        player: PlayerId,
        object: ObjectId,
        request: u64,
        reason: DenyReason,
        owner: Option<PlayerId>,
    },
    ObjectState {
        object: ObjectId,
        position: Vec3,
        holder: Option<PlayerId>,
    },
    /// A cube entered a slot. Carries no correctness.
    PlacementEvent {
        object: ObjectId,
        slot: SlotId,
    },
    /// Client to host: the window the player aims through.
    WindowSyncEvent {
        player: PlayerId,
        anchor: Option<WindowAnchor>,
    },
    /// Host to clients: replicated player state.
    PlayerState {
        player: PlayerId,
        state: PlayerSnapshot,
    },
}

impl Payload {
    pub fn name(&self) -> &'static str {
        match self {
            Payload::PoseUpdate { .. } => "pose_update",
            Payload::InputEvent { .. } => "input_event",
            Payload::LockRequest { .. } => "lock_request",
            Payload::LockGrant { .. } => "lock_grant",
            Payload::LockDeny { .. } => "lock_deny",
            Payload::ObjectState { .. } => "object_state",
            Payload::PlacementEvent { .. } => "placement_event",
            Payload::WindowSyncEvent { .. } => "window_sync_event",
            Payload::PlayerState { .. } => "player_state",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetMessage {
    pub src: Endpoint,
    pub dst: Endpoint,
    /// Global send order.
    pub seq: u64,
    pub send_tick: u64,
    pub deliver_tick: u64,
    pub payload: Payload,
}

/// Whole ticks needed to cover `delay_us` at `tick_hz`, never less than one.
pub fn quantize_delay(delay_us: u64, tick_hz: u32) -> u64 {
    let scaled = delay_us as u128 * tick_hz as u128;
    (scaled.div_ceil(1_000_000) as u64).max(1)
}

#[derive(Debug, Clone)]
struct Link {
    latency_us: u64,
    jitter_us: u64,
    rng: SplitMix64,
    last_deliver: u64,
}

impl Link {
    fn delay_ticks(&mut self, tick_hz: u32) -> u64 {
        let jitter = if self.jitter_us == 0 {
            0
        } else {
            self.rng.below(self.jitter_us + 1)
        };
        quantize_delay(self.latency_us + jitter, tick_hz)
    }
}

fn to_us(ms: f64) -> u64 {
    (ms * 1000.0).round() as u64
}

/// Host-centred star: client 1 shares the host's machine (zero latency,
/// still one tick), client 2 is remote.
#[derive(Debug, Clone)]
pub struct Network {
    tick_hz: u32,
    links: BTreeMap<(Endpoint, Endpoint), Link>,
    in_flight: BTreeMap<(u64, Endpoint, Endpoint, u64), NetMessage>,
    next_seq: u64,
}

impl Network {
    pub fn new(config: &NetConfig, tick_hz: u32) -> Self {
        let mut links = BTreeMap::new();
        let pairs = [
            (Endpoint::Host, Endpoint::Client1, false),
            (Endpoint::Client1, Endpoint::Host, false),
            (Endpoint::Host, Endpoint::Client2, true),
            (Endpoint::Client2, Endpoint::Host, true),
        ];
        for (stream, (src, dst, remote)) in pairs.into_iter().enumerate() {
            let (latency_us, jitter_us) = if remote {
                (to_us(config.latency_ms), to_us(config.jitter_ms))
            } else {
                (0, 0)
            };
            links.insert(
                (src, dst),
                Link {
                    latency_us,
                    jitter_us,
                    rng: SplitMix64::derive(config.seed, stream as u64),
                    last_deliver: 0,
                },
            );
        }
        Network {
            tick_hz,
            links,
            in_flight: BTreeMap::new(),
            next_seq: 0,
        }
    }

    /// Queues a message; returns its delivery tick.
    ///
    /// # Panics
    /// If `src → dst` is not a link of the star.
    pub fn send(&mut self, src: Endpoint, dst: Endpoint, payload: Payload, now: u64) -> u64 {
        let hz = self.tick_hz;
        let link = self
            .links
            .get_mut(&(src, dst))
            .unwrap_or_else(|| panic!("no link {} -> {}", src.as_str(), dst.as_str()));
        let deliver_tick = (now + link.delay_ticks(hz)).max(link.last_deliver);
        link.last_deliver = deliver_tick;
        let seq = self.next_seq;
        self.next_seq += 1;
        let msg = NetMessage {
            src,
            dst,
            seq,
            send_tick: now,
            deliver_tick,
            payload,
        };
        self.in_flight.insert((deliver_tick, src, dst, seq), msg);
        deliver_tick
    }

    /// Removes and returns every message due at or before `now`, in
    /// delivery-tick, source, destination, send order.
    pub fn take_due(&mut self, now: u64) -> Vec<NetMessage> {
        let mut out = Vec::new();
        while let Some(entry) = self.in_flight.first_entry() {
            if entry.key().0 > now {
                break;
            }
            out.push(entry.remove());
        }
        out
    }

    pub fn in_flight(&self) -> impl Iterator<Item = &NetMessage> {
        self.in_flight.values()
    }

    pub fn drain(&mut self) -> Vec<NetMessage> {
        std::mem::take(&mut self.in_flight).into_values().collect()
    }

    pub fn messages_sent(&self) -> u64 {
        self.next_seq
    }
}
