//! Scripted collaborators. Each agent sees only its own client's replicated
//! state, acts through the same commands a player would issue, and talks to
//! its partner over an instant "voice" channel that carries no world state.
//!
//! Tick costs stand in for human perception and motor time. They are
//! engineering parameters, not measurements.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::{ray_aabb_intersect, Aabb, Frustum, Orientation, Ray, Vec3};
use crate::netsim::{ClientState, Command, Driver, SessionConfig, SessionLog, SimError, Simulation};
use crate::rng::SplitMix64;
use crate::session::{Action, Frame, PlayerId};
use crate::viewsync::Variant;
use crate::world::{Complexity, ObjectId, SlotId, TangramId, CUBE_SIDE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    /// Split the targets and work alone.
    Divide,
    /// Split the targets, share sightings and pass cubes through the window.
    Window,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Divide => "divide",
            AgentKind::Window => "window",
        }
    }

    /// The policy a variant is normally paired with.
    pub fn default_for(variant: Variant) -> AgentKind {
        if variant == Variant::Baseline {
            AgentKind::Divide
        } else {
            AgentKind::Window
        }
    }
}

impl FromStr for AgentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "divide" => Ok(AgentKind::Divide),
            "window" => Ok(AgentKind::Window),
            other => Err(format!("unknown policy '{other}'")),
        }
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentPolicy {
    pub kind: AgentKind,
    /// Delay before reacting to a partner or pressing a button.
    pub reaction_ticks: u32,
    /// Time to read one tangram, on a cube or a hint.
    pub recognition_ticks: u32,
    pub seed: u64,
}

impl AgentPolicy {
    pub fn new(kind: AgentKind, seed: u64) -> Self {
        AgentPolicy {
            kind,
            reaction_ticks: 10,
            recognition_ticks: 25,
            seed,
        }
    }
}

/// Remaining behavioral constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentTuning {
    /// Planar distance within which a tangram can be read in one's own space.
    pub recognition_range: f64,
    /// Camera depth within which a tangram can be read through the window.
    pub window_range: f64,
    /// Planar distance within which a distance grab is attempted without moving.
    pub grab_range: f64,
    /// Usable controller distance from the head.
    pub reach: f64,
    pub teleport_aim_ticks: u64,
    pub disorientation_ticks: u64,
    pub aim_ticks: u64,
    pub window_aim_ticks: u64,
    pub place_ticks: u64,
    /// Wait for the window picture to reach the host before aiming through it.
    pub settle_ticks: u64,
    /// How many target hints an agent keeps in mind at once.
    pub working_set: usize,
    /// How many recent cube sightings an agent remembers.
    pub memory: usize,
    pub misrecognition: f64,
    pub timeout_ticks: u64,
    /// How long a cube that could not be grabbed is ignored.
    pub retry_ticks: u64,
}

impl Default for AgentTuning {
    fn default() -> Self {
        AgentTuning {
            recognition_range: 1.5,
            window_range: 1.8,
            grab_range: 2.0,
            reach: 0.6,
            teleport_aim_ticks: 50,
            disorientation_ticks: 25,
            aim_ticks: 15,
            window_aim_ticks: 30,
            place_ticks: 20,
            settle_ticks: 8,
            working_set: 1,
            memory: 3,
            misrecognition: 0.05,
            timeout_ticks: 150,
            retry_ticks: 500,
        }
    }
}

const CONTROLLER_OFFSETS: [Vec3; 7] = [
    Vec3 { x: 0.0, y: -0.3, z: 0.0 },
    Vec3 { x: 0.25, y: -0.3, z: 0.0 },
    Vec3 { x: -0.25, y: -0.3, z: 0.0 },
    Vec3 { x: 0.0, y: -0.3, z: 0.25 },
    Vec3 { x: 0.0, y: -0.3, z: -0.25 },
    Vec3 { x: 0.0, y: -0.1, z: 0.0 },
    Vec3 { x: 0.0, y: -0.5, z: 0.0 },
];

/// Out-of-band talk between the two agents.
#[derive(Debug, Clone, Default)]
struct Voice {
    /// Tick at which each player asked the partner to hold still.
    hold_request: [Option<u64>; 2],
    /// Whether the partner has acknowledged each player's request.
    hold_ack: [bool; 2],
    /// Sightings addressed to each player, with the tick they are heard.
    tips: [Vec<(ObjectId, TangramId, u64)>; 2],
    /// Hints each player is currently looking for.
    wants: [Vec<TangramId>; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Fetch {
    cube: ObjectId,
    /// What the agent believes the cube shows.
    tangram: TangramId,
    slot: SlotId,
    via_window: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum State {
    Decide,
    Wait {
        until: u64,
        interruptible: bool,
        next: Box<State>,
    },
    FinishInspect {
        cube: ObjectId,
    },
    Teleport {
        target: Vec3,
        next: Box<State>,
    },
    AwaitTeleport {
        target: Vec3,
        since: u64,
        next: Box<State>,
    },
    RequestHold {
        fetch: Fetch,
    },
    AwaitHold {
        fetch: Fetch,
        since: u64,
    },
    ShuttleIn {
        fetch: Fetch,
    },
    AwaitShuttleIn {
        fetch: Fetch,
        since: u64,
    },
    AwaitWindowReady {
        fetch: Fetch,
        since: u64,
        ready_at: Option<u64>,
    },
    Grab {
        fetch: Fetch,
    },
    AwaitGrab {
        fetch: Fetch,
        request: u64,
        since: u64,
    },
    AwaitTransfer {
        fetch: Fetch,
        since: u64,
    },
    Carry {
        fetch: Fetch,
        teleports: u32,
    },
    Release {
        fetch: Fetch,
    },
    AwaitRelease {
        since: u64,
    },
    Cleanup {
        since: u64,
        release_sent: bool,
        shuttle_sent: bool,
    },
}

impl State {
    fn wait(until: u64, interruptible: bool, next: State) -> State {
        State::Wait {
            until,
            interruptible,
            next: Box::new(next),
        }
    }

    fn cleanup(tick: u64) -> State {
        State::Cleanup {
            since: tick,
            release_sent: false,
            shuttle_sent: false,
        }
    }
}

#[derive(Debug, Clone)]
struct Agent {
    player: PlayerId,
    policy: AgentPolicy,
    tuning: AgentTuning,
    rng: SplitMix64,
    /// Target slots in work order; rotated when a search pass fails.
    assigned: VecDeque<SlotId>,
    working: Vec<SlotId>,
    memory: VecDeque<(ObjectId, TangramId)>,
    tips: BTreeMap<ObjectId, TangramId>,
    checked: BTreeSet<ObjectId>,
    skip_until: BTreeMap<ObjectId, u64>,
    state: State,
    holding_for_partner: Option<u64>,
    hint_count: u32,
}

fn look(from: Vec3, to: Vec3, fallback: Orientation) -> Orientation {
    Orientation::looking_along(to - from).unwrap_or(fallback)
}

/// Nearest replicated cube hit by `ray` at or beyond `min_t`.
fn first_hit(client: &ClientState, ray: &Ray, min_t: f64) -> Option<ObjectId> {
    let mut best: Option<(ObjectId, f64)> = None;
    for c in &client.cubes {
        let Ok(b) = Aabb::cube(c.position, CUBE_SIDE) else { continue };
        if let Some(t) = ray_aabb_intersect(ray, &b) {
            if t >= min_t && best.is_none_or(|(_, bt)| t < bt) {
                best = Some((c.id, t));
            }
        }
    }
    best.map(|(id, _)| id)
}

fn visible_in(camera: &Frustum, client: &ClientState, cube: ObjectId, range: f64) -> bool {
    let pos = client.cubes[cube.index()].position;
    if !camera.contains(pos) {
        return false;
    }
    let (_, _, depth) = camera.to_camera(pos);
    if depth > range {
        return false;
    }
    match camera.project(pos) {
        Some((u, v)) if (0.03..=0.97).contains(&u) && (0.03..=0.97).contains(&v) => {}
        _ => return false,
    }
    let Ok(ray) = Ray::new(camera.apex.position, pos - camera.apex.position) else {
        return false;
    };
    first_hit(client, &ray, camera.near()) == Some(cube)
}

fn room_point(client: &ClientState, x: f64, z: f64) -> Vec3 {
    let m = 0.3;
    Vec3::new(
        x.clamp(m, client.room.width - m),
        0.0,
        z.clamp(m, client.room.depth - m),
    )
}

impl Agent {
    fn new(player: PlayerId, policy: AgentPolicy, tuning: AgentTuning, client: &ClientState, complexity: Complexity) -> Self {
        let assigned = assign_slots(player, client, complexity);
        Agent {
            player,
            policy,
            tuning,
            rng: SplitMix64::new(policy.seed),
            assigned: assigned.into(),
            working: Vec::new(),
            memory: VecDeque::new(),
            tips: BTreeMap::new(),
            checked: BTreeSet::new(),
            skip_until: BTreeMap::new(),
            state: State::Decide,
            holding_for_partner: None,
            hint_count: 0,
        }
    }

    fn shares(&self) -> bool {
        self.policy.kind == AgentKind::Window
    }

    fn sees_window(&self, client: &ClientState) -> bool {
        self.shares() && client.window.is_some()
    }

    fn uses_window(&self, client: &ClientState) -> bool {
        self.sees_window(client) && client.variant.has_interactive_window()
    }

    fn needs_hold(&self, client: &ClientState) -> bool {
        matches!(client.variant, Variant::TeamPortal | Variant::TeamPortalPlus)
    }

    fn reaction(&self) -> u64 {
        self.policy.reaction_ticks as u64
    }

    fn recognition(&self) -> u64 {
        self.policy.recognition_ticks as u64
    }

    fn interruptible(&self) -> bool {
        matches!(
            self.state,
            State::Decide
                | State::FinishInspect { .. }
                | State::RequestHold { .. }
                | State::Wait {
                    interruptible: true,
                    ..
                }
        )
    }

    fn act(&mut self, client: &ClientState, voice: &mut Voice, tick: u64) -> Vec<Command> {
        let me = self.player.index();
        let partner = self.player.partner().index();

        // Two simultaneous hold requests: player one keeps theirs.
        if let State::AwaitHold { fetch, .. } = self.state {
            if voice.hold_request[partner].is_some() && self.player == PlayerId::Two {
                voice.hold_request[me] = None;
                voice.hold_ack[me] = false;
                self.tips.insert(fetch.cube, fetch.tangram);
                self.state = State::Decide;
            }
        }

        match voice.hold_request[partner] {
            Some(since) => {
                if self.holding_for_partner.is_none() && self.interruptible() && tick >= since + self.reaction() {
                    self.holding_for_partner = Some(tick);
                    voice.hold_ack[partner] = true;
                }
                if self.holding_for_partner.is_some() {
                    return Vec::new();
                }
            }
            None => {
                if let Some(start) = self.holding_for_partner.take() {
                    if let State::Wait { until, .. } = &mut self.state {
                        *until += tick - start;
                    }
                }
            }
        }

        let mut out = Vec::new();
        // Bounded so a run of instant transitions cannot spin forever.
        for _ in 0..8 {
            let state = std::mem::replace(&mut self.state, State::Decide);
            let (next, done) = self.advance(state, client, voice, tick, &mut out);
            self.state = next;
            if done {
                break;
            }
        }
        out
    }

    /// Runs one state. Returns the next state and whether to stop for this tick.
    fn advance(
        &mut self,
        state: State,
        client: &ClientState,
        voice: &mut Voice,
        tick: u64,
        out: &mut Vec<Command>,
    ) -> (State, bool) {
        let t = &self.tuning;
        let me = self.player.index();
        let head = client.own.head.position;
        match state {
            State::Decide => (self.decide(client, voice, tick, out), true),
            State::Wait {
                until,
                interruptible,
                next,
            } => {
                if tick >= until {
                    (*next, false)
                } else {
                    (
                        State::Wait {
                            until,
                            interruptible,
                            next,
                        },
                        true,
                    )
                }
            }
            State::FinishInspect { cube } => {
                self.finish_inspect(cube, client, voice, tick);
                (State::Decide, false)
            }
            State::Teleport { target, next } => {
                out.push(Command::Input(Action::Teleport { target }));
                (
                    State::AwaitTeleport {
                        target,
                        since: tick,
                        next,
                    },
                    true,
                )
            }
            State::AwaitTeleport { target, since, next } => {
                if (head.x - target.x).abs() < 1e-9 && (head.z - target.z).abs() < 1e-9 {
                    (State::wait(tick + t.disorientation_ticks, true, *next), true)
                } else if tick > since + t.timeout_ticks {
                    (State::cleanup(tick), false)
                } else {
                    (State::AwaitTeleport { target, since, next }, true)
                }
            }
            State::RequestHold { fetch } => {
                voice.hold_request[me] = Some(tick);
                voice.hold_ack[me] = false;
                (State::AwaitHold { fetch, since: tick }, true)
            }
            State::AwaitHold { fetch, since } => {
                if voice.hold_ack[me] {
                    (State::wait(tick + self.reaction(), false, State::ShuttleIn { fetch }), false)
                } else if tick > since + 4 * t.timeout_ticks {
                    (State::cleanup(tick), false)
                } else {
                    (State::AwaitHold { fetch, since }, true)
                }
            }
            State::ShuttleIn { fetch } => {
                if client.own.shuttled {
                    return (
                        State::AwaitWindowReady {
                            fetch,
                            since: tick,
                            ready_at: None,
                        },
                        false,
                    );
                }
                out.push(Command::Input(Action::Shuttle));
                (State::AwaitShuttleIn { fetch, since: tick }, true)
            }
            State::AwaitShuttleIn { fetch, since } => {
                if client.own.shuttled {
                    (
                        State::AwaitWindowReady {
                            fetch,
                            since: tick,
                            ready_at: None,
                        },
                        true,
                    )
                } else if tick > since + t.timeout_ticks {
                    (State::cleanup(tick), false)
                } else {
                    (State::AwaitShuttleIn { fetch, since }, true)
                }
            }
            State::AwaitWindowReady { fetch, since, ready_at } => {
                let Some(w) = client.window.as_ref() else {
                    return (State::cleanup(tick), false);
                };
                if tick > since + t.timeout_ticks {
                    self.skip(fetch.cube, tick);
                    return (State::cleanup(tick), false);
                }
                let ready = match client.variant {
                    Variant::SnapTeamPortalPlus => w.frozen,
                    Variant::DropTeamPortalPlus => w.secondary.is_some(),
                    _ => w.interpolation.is_none(),
                };
                match (ready, ready_at) {
                    (false, _) => (
                        State::AwaitWindowReady {
                            fetch,
                            since,
                            ready_at: None,
                        },
                        true,
                    ),
                    (true, None) => (
                        State::AwaitWindowReady {
                            fetch,
                            since,
                            ready_at: Some(tick + t.settle_ticks),
                        },
                        true,
                    ),
                    (true, Some(at)) if tick < at => (
                        State::AwaitWindowReady {
                            fetch,
                            since,
                            ready_at,
                        },
                        true,
                    ),
                    (true, Some(_)) => {
                        let camera = w.anchor().camera;
                        if self.grabbable(client, fetch.cube) && visible_in(&camera, client, fetch.cube, f64::INFINITY) {
                            (State::wait(tick + t.window_aim_ticks, false, State::Grab { fetch }), false)
                        } else {
                            self.skip(fetch.cube, tick);
                            (State::cleanup(tick), false)
                        }
                    }
                }
            }
            State::Grab { fetch } => {
                if !self.grabbable(client, fetch.cube) {
                    return (State::cleanup(tick), false);
                }
                let aim = if fetch.via_window {
                    self.window_aim(client, fetch.cube)
                } else {
                    self.own_aim(client, fetch.cube)
                };
                let Some(cmd) = aim else {
                    self.skip(fetch.cube, tick);
                    return (State::cleanup(tick), false);
                };
                out.push(cmd);
                out.push(Command::RequestLock(fetch.cube));
                (
                    State::AwaitGrab {
                        fetch,
                        request: client.requests_sent() + 1,
                        since: tick,
                    },
                    true,
                )
            }
            State::AwaitGrab { fetch, request, since } => {
                if client.own.held.is_some_and(|h| h.object == fetch.cube) {
                    if fetch.via_window {
                        out.push(Command::Input(Action::Transfer));
                        return (State::AwaitTransfer { fetch, since: tick }, true);
                    }
                    return (State::Carry { fetch, teleports: 0 }, false);
                }
                let denied = client
                    .last_reply
                    .is_some_and(|r| r.request == request && !r.granted);
                if denied || tick > since + t.timeout_ticks {
                    self.skip(fetch.cube, tick);
                    return (State::cleanup(tick), false);
                }
                (State::AwaitGrab { fetch, request, since }, true)
            }
            State::AwaitTransfer { fetch, since } => {
                if client.own.held.is_some_and(|h| h.frame == Frame::Own) {
                    voice.hold_request[me] = None;
                    voice.hold_ack[me] = false;
                    (State::Carry { fetch, teleports: 0 }, false)
                } else if tick > since + t.timeout_ticks {
                    (State::cleanup(tick), false)
                } else {
                    (State::AwaitTransfer { fetch, since }, true)
                }
            }
            State::Carry { fetch, teleports } => self.carry(fetch, teleports, client, tick, out),
            State::Release { fetch } => {
                let _ = fetch;
                out.push(Command::Input(Action::Release));
                (State::AwaitRelease { since: tick }, true)
            }
            State::AwaitRelease { since } => {
                if client.own.held.is_none() {
                    if client.own.shuttled {
                        (State::cleanup(tick), false)
                    } else {
                        (State::Decide, true)
                    }
                } else if tick > since + t.timeout_ticks {
                    (State::cleanup(tick), false)
                } else {
                    (State::AwaitRelease { since }, true)
                }
            }
            State::Cleanup {
                since,
                mut release_sent,
                mut shuttle_sent,
            } => {
                voice.hold_request[me] = None;
                voice.hold_ack[me] = false;
                if tick > since + t.timeout_ticks {
                    return (State::Decide, true);
                }
                if client.own.held.is_some() {
                    if !release_sent {
                        // Point up and away from the stacks before letting go.
                        let offset = CONTROLLER_OFFSETS[0];
                        out.push(Command::Pose {
                            head: client.head,
                            controller_offset: offset,
                            controller: Orientation::new(client.head.yaw(), 80.0),
                        });
                        out.push(Command::Input(Action::Release));
                        release_sent = true;
                    }
                } else if client.own.shuttled {
                    if !shuttle_sent {
                        out.push(Command::Input(Action::Shuttle));
                        shuttle_sent = true;
                    }
                } else {
                    return (State::Decide, true);
                }
                (
                    State::Cleanup {
                        since,
                        release_sent,
                        shuttle_sent,
                    },
                    true,
                )
            }
        }
    }

    fn skip(&mut self, cube: ObjectId, tick: u64) {
        self.skip_until.insert(cube, tick + self.tuning.retry_ticks);
    }

    fn grabbable(&self, client: &ClientState, cube: ObjectId) -> bool {
        let c = &client.cubes[cube.index()];
        c.placed_in.is_none() && c.holder.is_none()
    }

    fn available(&self, client: &ClientState, cube: ObjectId, tick: u64) -> bool {
        self.grabbable(client, cube) && self.skip_until.get(&cube).is_none_or(|&t| tick >= t)
    }

    /// Pose command pointing the controller straight at `cube`, trying a few
    /// hand positions to get a clear line.
    fn own_aim(&self, client: &ClientState, cube: ObjectId) -> Option<Command> {
        let head = client.own.head.position;
        let target = client.cubes[cube.index()].position;
        for offset in CONTROLLER_OFFSETS {
            let c = head + offset;
            let Ok(ray) = Ray::new(c, target - c) else { continue };
            if first_hit(client, &ray, 0.0) == Some(cube) {
                return Some(Command::Pose {
                    head: look(head, target, client.head),
                    controller_offset: offset,
                    controller: look(c, target, client.controller),
                });
            }
        }
        None
    }

    /// Pose command pointing through the window panel at `cube`.
    fn window_aim(&self, client: &ClientState, cube: ObjectId) -> Option<Command> {
        let anchor = client.anchor()?;
        let target = client.cubes[cube.index()].position;
        let (u, v) = anchor.camera.project(target)?;
        let panel = anchor.panel(&client.head_pose());
        let on_panel = panel.point_at(u, v);
        let offset = CONTROLLER_OFFSETS[0];
        let c = client.own.head.position + offset;
        Some(Command::Pose {
            head: client.head,
            controller_offset: offset,
            controller: look(c, on_panel, client.controller),
        })
    }

    fn hint(client: &ClientState, slot: SlotId) -> TangramId {
        client.slots[slot.index()].hint
    }

    fn refresh_working_set(&mut self, client: &ClientState, voice: &mut Voice) -> u32 {
        self.working.retain(|s| !client.slots[s.index()].filled);
        self.assigned.retain(|s| !client.slots[s.index()].filled);
        let mut new_hints = 0;
        for s in self.assigned.iter().copied().collect::<Vec<_>>() {
            if self.working.len() >= self.tuning.working_set {
                break;
            }
            if !self.working.contains(&s) {
                self.working.push(s);
                new_hints += 1;
            }
        }
        voice.wants[self.player.index()] = self.working.iter().map(|s| Self::hint(client, *s)).collect();
        new_hints
    }

    fn decide(&mut self, client: &ClientState, voice: &mut Voice, tick: u64, out: &mut Vec<Command>) -> State {
        let t = self.tuning;
        if client.own.held.is_some() || client.own.shuttled {
            return State::cleanup(tick);
        }
        let new_hints = self.refresh_working_set(client, voice);
        if new_hints > 0 {
            self.hint_count += new_hints;
            return State::wait(tick + new_hints as u64 * self.recognition(), true, State::Decide);
        }
        if self.working.is_empty() {
            return State::wait(tick + 50, true, State::Decide);
        }

        // Tips heard by now join the known sightings.
        let heard: Vec<_> = {
            let inbox = &mut voice.tips[self.player.index()];
            let (now, later): (Vec<_>, Vec<_>) = inbox.drain(..).partition(|&(_, _, at)| at <= tick);
            *inbox = later;
            now
        };
        for (cube, tangram, _) in heard {
            self.tips.insert(cube, tangram);
        }
        self.tips.retain(|c, _| client.cubes[c.index()].placed_in.is_none());

        if let Some(fetch) = self.known_target(client, tick) {
            return self.start_fetch(fetch, client, tick);
        }

        // Search: own surroundings first, then the partner's view.
        let head_pose = client.head_pose();
        let head = head_pose.position;
        let own_candidate = client
            .cubes
            .iter()
            .filter(|c| !self.checked.contains(&c.id) && self.available(client, c.id, tick))
            .map(|c| (c.id, c.position.planar_distance(head)))
            .filter(|&(_, d)| d <= t.recognition_range)
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        if let Some((cube, _)) = own_candidate {
            let target = client.cubes[cube.index()].position;
            let head_dir = look(head, target, client.head);
            if client.own.held.is_none() {
                out.push(Command::Pose {
                    head: head_dir,
                    controller_offset: CONTROLLER_OFFSETS[0],
                    controller: head_dir,
                });
            }
            return State::wait(tick + self.recognition(), true, State::FinishInspect { cube });
        }
        if self.sees_window(client) {
            let camera = client.window.as_ref().map(|w| w.displayed_camera);
            if let Some(camera) = camera {
                let window_candidate = client
                    .cubes
                    .iter()
                    .filter(|c| !self.checked.contains(&c.id) && self.available(client, c.id, tick))
                    .filter(|c| visible_in(&camera, client, c.id, t.window_range))
                    .map(|c| (c.id, camera.to_camera(c.position).2))
                    .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                if let Some((cube, _)) = window_candidate {
                    return State::wait(tick + self.recognition(), true, State::FinishInspect { cube });
                }
            }
        }

        // Nothing left to look at here: move to the richest scan point.
        let mut best: Option<(usize, f64, Vec3)> = None;
        for i in 0..4 {
            for j in 0..4 {
                let p = room_point(client, 0.75 + 1.5 * i as f64, 0.75 + 1.5 * j as f64);
                let count = client
                    .cubes
                    .iter()
                    .filter(|c| !self.checked.contains(&c.id) && self.available(client, c.id, tick))
                    .filter(|c| c.position.planar_distance(p) <= t.recognition_range)
                    .count();
                let d = p.planar_distance(head);
                let better = match best {
                    None => count > 0,
                    Some((bc, bd, _)) => count > bc || (count == bc && d < bd),
                };
                if better {
                    best = Some((count, d, p));
                }
            }
        }
        match best {
            Some((_, _, p)) => State::wait(
                tick + t.teleport_aim_ticks,
                true,
                State::Teleport {
                    target: p,
                    next: Box::new(State::Decide),
                },
            ),
            None => {
                // Full pass without success: start over with the next hints first.
                self.checked.clear();
                if let Some(first) = self.working.first().copied() {
                    self.working.remove(0);
                    if let Some(pos) = self.assigned.iter().position(|s| *s == first) {
                        self.assigned.remove(pos);
                        self.assigned.push_back(first);
                    }
                }
                State::wait(tick + self.reaction(), true, State::Decide)
            }
        }
    }

    fn known_target(&mut self, client: &ClientState, tick: u64) -> Option<Fetch> {
        for &slot in &self.working {
            let hint = Self::hint(client, slot);
            let from_tips = self.tips.iter().find(|(c, t)| **t == hint && self.available(client, **c, tick));
            let from_memory = self.memory.iter().find(|(c, t)| *t == hint && self.available(client, *c, tick));
            let cube = from_tips.map(|(c, _)| *c).or(from_memory.map(|(c, _)| *c));
            if let Some(cube) = cube {
                self.tips.remove(&cube);
                self.memory.retain(|(c, _)| *c != cube);
                return Some(Fetch {
                    cube,
                    tangram: hint,
                    slot,
                    via_window: false,
                });
            }
        }
        None
    }

    fn start_fetch(&mut self, mut fetch: Fetch, client: &ClientState, tick: u64) -> State {
        let t = self.tuning;
        let cube_pos = client.cubes[fetch.cube.index()].position;
        let head = client.own.head.position;
        let near = cube_pos.planar_distance(head) <= t.grab_range && self.own_aim(client, fetch.cube).is_some();
        if !near && self.uses_window(client) {
            if let Some(w) = client.window.as_ref() {
                if visible_in(&w.displayed_camera, client, fetch.cube, t.window_range) {
                    fetch.via_window = true;
                    let next = if self.needs_hold(client) {
                        State::RequestHold { fetch }
                    } else {
                        State::ShuttleIn { fetch }
                    };
                    return State::wait(tick + self.reaction(), false, next);
                }
            }
        }
        if near {
            return State::wait(tick + t.aim_ticks, false, State::Grab { fetch });
        }
        // Walk up to it: stand short of the cube on the side we come from.
        let away = Vec3::new(head.x - cube_pos.x, 0.0, head.z - cube_pos.z)
            .normalized()
            .unwrap_or(Vec3::new(1.0, 0.0, 0.0));
        let p = cube_pos + away * 0.7;
        let target = room_point(client, p.x, p.z);
        State::wait(
            tick + t.teleport_aim_ticks,
            false,
            State::Teleport {
                target,
                next: Box::new(State::wait(tick, false, State::Grab { fetch })),
            },
        )
    }

    fn finish_inspect(&mut self, cube: ObjectId, client: &ClientState, voice: &mut Voice, tick: u64) {
        self.checked.insert(cube);
        let truth = client.cubes[cube.index()].tangram;
        let n = client.cubes.len() as u64;
        let perceived = if n > 1 && self.rng.chance(self.tuning.misrecognition) {
            let other = self.rng.below(n - 1) as u32;
            TangramId(if other >= truth.0 { other + 1 } else { other })
        } else {
            truth
        };
        let mine = self.working.iter().any(|s| Self::hint(client, *s) == perceived);
        if mine {
            self.memory.push_front((cube, perceived));
            self.memory.truncate(self.tuning.memory);
            return;
        }
        let partner = self.player.partner().index();
        if self.shares() && voice.wants[partner].contains(&perceived) {
            let at = tick + self.reaction();
            voice.tips[partner].push((cube, perceived, at));
            return;
        }
        self.memory.push_front((cube, perceived));
        self.memory.truncate(self.tuning.memory);
    }

    fn carry(&mut self, fetch: Fetch, teleports: u32, client: &ClientState, tick: u64, out: &mut Vec<Command>) -> (State, bool) {
        let t = self.tuning;
        let Some(held) = client.own.held else {
            return (State::Decide, false);
        };
        if held.object != fetch.cube || client.slots[fetch.slot.index()].filled {
            return (State::cleanup(tick), false);
        }
        let slot = client.slots[fetch.slot.index()].position;
        let head = client.own.head.position;
        let gd = held.grab_distance;
        let span = head.distance(slot);
        if (span - gd).abs() <= t.reach && span > 1e-6 {
            let dir = (head - slot) / span;
            let c = slot + dir * gd;
            out.push(Command::Pose {
                head: look(head, slot, client.head),
                controller_offset: c - head,
                controller: look(c, slot, client.controller),
            });
            return (State::wait(tick + t.place_ticks, false, State::Release { fetch }), true);
        }
        if teleports >= 2 {
            return (State::cleanup(tick), false);
        }
        match self.stand_point(client, slot, gd, head) {
            Some(target) => (
                State::wait(
                    tick + t.teleport_aim_ticks,
                    false,
                    State::Teleport {
                        target,
                        next: Box::new(State::Carry {
                            fetch,
                            teleports: teleports + 1,
                        }),
                    },
                ),
                true,
            ),
            None => (State::cleanup(tick), false),
        }
    }

    /// A floor point from which the slot is exactly one grab distance from
    /// a comfortable controller position.
    fn stand_point(&self, client: &ClientState, slot: Vec3, gd: f64, head: Vec3) -> Option<Vec3> {
        let dy = head.y - slot.y;
        let want = gd + self.tuning.reach / 2.0;
        let planar = (want * want - dy * dy).max(0.0).sqrt().max(0.3);
        let area_center = client
            .areas
            .iter()
            .min_by(|a, b| a.center.distance(slot).total_cmp(&b.center.distance(slot)))
            .map(|a| a.center)
            .unwrap_or(slot);
        let room_center = Vec3::new(client.room.width / 2.0, 0.0, client.room.depth / 2.0);
        let mut dirs = vec![
            Vec3::new(slot.x - area_center.x, 0.0, slot.z - area_center.z),
            Vec3::new(head.x - slot.x, 0.0, head.z - slot.z),
            Vec3::new(room_center.x - slot.x, 0.0, room_center.z - slot.z),
        ];
        for k in 0..8 {
            let a = (k as f64 * 45.0).to_radians();
            dirs.push(Vec3::new(a.sin(), 0.0, a.cos()));
        }
        for d in dirs {
            let Some(d) = d.normalized() else { continue };
            let p = Vec3::new(slot.x + d.x * planar, 0.0, slot.z + d.z * planar);
            let q = room_point(client, p.x, p.z);
            if q == p {
                let span = Vec3::new(q.x, head.y, q.z).distance(slot);
                if (span - gd).abs() <= self.tuning.reach {
                    return Some(q);
                }
            }
        }
        None
    }
}

/// Splits the target slots between the players: by area on the complex
/// task, by side of the stack on the simple one.
fn assign_slots(player: PlayerId, client: &ClientState, complexity: Complexity) -> Vec<SlotId> {
    let mine = |s: &crate::netsim::ReplicaSlot| -> bool {
        match complexity {
            Complexity::Complex => {
                let first_half = s.area.index() < client.areas.len() / 2;
                first_half == (player == PlayerId::One)
            }
            Complexity::Simple => {
                let center = client.areas[s.area.index()].center;
                let dx = s.position.x - center.x;
                let dz = s.position.z - center.z;
                let near_side = dz < -1e-9 || (dz.abs() <= 1e-9 && dx < 0.0);
                near_side == (player == PlayerId::One)
            }
        }
    };
    client.slots.iter().filter(|s| mine(s)).map(|s| s.id).collect()
}

/// Both agents plus the channel they talk over.
#[derive(Debug, Clone)]
pub struct AgentPair {
    agents: [Agent; 2],
    voice: Voice,
}

impl AgentPair {
    pub fn new(sim: &Simulation, tuning: AgentTuning) -> Self {
        let cfg = sim.config();
        let agents = PlayerId::BOTH.map(|p| {
            Agent::new(
                p,
                cfg.policies[p.index()],
                tuning,
                sim.client(p),
                cfg.complexity,
            )
        });
        AgentPair {
            agents,
            voice: Voice::default(),
        }
    }
}

impl Driver for AgentPair {
    fn act(&mut self, player: PlayerId, client: &ClientState, tick: u64) -> Vec<Command> {
        self.agents[player.index()].act(client, &mut self.voice, tick)
    }
}

/// Runs a full session with both agents on their configured policies.
pub fn run_agents(config: SessionConfig) -> Result<SessionLog, SimError> {
    run_agents_with(config, AgentTuning::default())
}

pub fn run_agents_with(config: SessionConfig, tuning: AgentTuning) -> Result<SessionLog, SimError> {
    let sim = Simulation::new(config)?;
    let mut pair = AgentPair::new(&sim, tuning);
    Ok(sim.run_to_completion(&mut pair))
}
