//! Players, distance grab, teleport locomotion, shuttle/transfer through the
//! view window, and the object-ownership lock table.
//!
//! Everything here runs on the authoritative host. Operations validate their
//! preconditions and return a typed outcome the caller can log.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ray_aabb_intersect, Frustum, Lens, Panel, Pose, Ray, Vec3};
use crate::viewsync::{Variant, WindowAnchor};
use crate::world::{ObjectId, PlacementRecord, TaskWorld, WorldError, DEFAULT_SNAP_DISTANCE};

/// Depth cap when an object is pushed into the partner's view.
pub const MAX_TRANSFER_DEPTH: f64 = 2.0;
/// Depth floor for the same, keeping the object clear of the partner's near plane.
pub const MIN_TRANSFER_DEPTH: f64 = 0.5;
/// Window-coordinate inset for transferred objects so they land fully in view.
pub const TRANSFER_EDGE_MARGIN: f64 = 0.05;
/// Controller may sit at most this far from the head.
pub const ARM_REACH: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum PlayerId {
    One,
    Two,
}

impl PlayerId {
    pub const BOTH: [PlayerId; 2] = [PlayerId::One, PlayerId::Two];

    pub fn index(self) -> usize {
        match self {
            PlayerId::One => 0,
            PlayerId::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn partner(self) -> PlayerId {
        match self {
            PlayerId::One => PlayerId::Two,
            PlayerId::Two => PlayerId::One,
        }
    }
}

impl TryFrom<u8> for PlayerId {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            1 => Ok(PlayerId::One),
            2 => Ok(PlayerId::Two),
            other => Err(format!("player id must be 1 or 2, got {other}")),
        }
    }
}

impl From<PlayerId> for u8 {
    fn from(p: PlayerId) -> u8 {
        p.number()
    }
}

impl std::fmt::Display for PlayerId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Which space a held object follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Own,
    Window,
}

impl Frame {
    pub fn flipped(self) -> Frame {
        match self {
            Frame::Own => Frame::Window,
            Frame::Window => Frame::Own,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Held {
    pub object: ObjectId,
    pub grab_distance: f64,
    pub frame: Frame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerState {
    pub head: Pose,
    pub controller: Pose,
    pub held: Option<Held>,
    pub shuttled: bool,
    /// Window the player currently interacts through, as last reported by
    /// their client. Absent under Baseline.
    pub window: Option<WindowAnchor>,
}

impl PlayerState {
    pub fn standing_at(head: Pose) -> Self {
        PlayerState {
            head,
            controller: Pose::new(head.position + Vec3::new(0.0, -0.3, 0.0), head.orientation),
            held: None,
            shuttled: false,
            window: None,
        }
    }
}

/// Physical controller buttons. A (right hand) and X (left hand) are the
/// same logical shuttle/transfer button.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Button {
    A,
    X,
    Grab,
    GrabRelease,
    TeleportConfirm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ButtonEvent {
    pub player: PlayerId,
    pub button: Button,
    pub tick: u64,
}

/// Logical input actions, one per line of the input stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Select,
    Grab { object: ObjectId },
    Release,
    Teleport { target: Vec3 },
    Shuttle,
    Transfer,
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::Select => "select",
            Action::Grab { .. } => "grab",
            Action::Release => "release",
            Action::Teleport { .. } => "teleport",
            Action::Shuttle => "shuttle",
            Action::Transfer => "transfer",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("the variant has no interactive view window")]
    NoWindow,
    #[error("player is not holding an object")]
    NotHolding,
    #[error("player already holds an object")]
    AlreadyHolding,
    #[error("object is locked by player {0}")]
    LockDenied(PlayerId),
    #[error("object is already placed in a slot")]
    ObjectPlaced,
    #[error("object is not under the player's pointer")]
    NotSelected,
    #[error("teleport target is outside the floor")]
    OutOfBounds,
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LockEntry {
    pub owner: PlayerId,
    pub acquired_tick: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", content = "owner", rename_all = "snake_case")]
pub enum Acquire {
    Granted,
    Denied(PlayerId),
}

/// Object → owner locks. An entry exists iff the object is locked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OwnershipTable {
    entries: BTreeMap<ObjectId, LockEntry>,
    /// Optional lease length; `None` keeps locks until released.
    pub timeout_ticks: Option<u64>,
}

impl OwnershipTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Grants iff the object is free or already owned by `player`.
    /// Re-acquisition by the owner keeps the original `acquired_tick`.
    pub fn try_acquire(&mut self, object: ObjectId, player: PlayerId, tick: u64) -> Acquire {
        self.expire(tick);
        match self.entries.get(&object) {
            Some(entry) if entry.owner != player => Acquire::Denied(entry.owner),
            Some(_) => Acquire::Granted,
            None => {
                self.entries.insert(
                    object,
                    LockEntry {
                        owner: player,
                        acquired_tick: tick,
                    },
                );
                Acquire::Granted
            }
        }
    }

    /// Releases `object` if `player` owns it; returns whether a lock was dropped.
    pub fn release(&mut self, object: ObjectId, player: PlayerId) -> bool {
        match self.entries.get(&object) {
            Some(entry) if entry.owner == player => {
                self.entries.remove(&object);
                true
            }
            _ => false,
        }
    }

    pub fn owner(&self, object: ObjectId) -> Option<PlayerId> {
        self.entries.get(&object).map(|e| e.owner)
    }

    pub fn entry(&self, object: ObjectId) -> Option<&LockEntry> {
        self.entries.get(&object)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ObjectId, &LockEntry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn expire(&mut self, tick: u64) {
        if let Some(timeout) = self.timeout_ticks {
            self.entries
                .retain(|_, e| tick.saturating_sub(e.acquired_tick) < timeout);
        }
    }
}

/// Free-function form of [`OwnershipTable::try_acquire`].
pub fn try_acquire(table: &mut OwnershipTable, object: ObjectId, player: PlayerId, tick: u64) -> Acquire {
    table.try_acquire(object, player, tick)
}

/// Space a pointer ray is cast in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointerFrame {
    Own,
    Window { panel: Panel, camera: Frustum },
}

impl PointerFrame {
    /// The effective picking ray for a controller pose, if any.
    pub fn ray(&self, controller: &Pose) -> Option<Ray> {
        match self {
            PointerFrame::Own => Some(controller.ray()),
            PointerFrame::Window { panel, camera } => {
                let (u, v) = panel.intersect(&controller.ray())?;
                Some(camera.unproject(u, v))
            }
        }
    }
}

/// Nearest white cube hit by the pointer, with its hit distance along the
/// effective ray.
pub fn select_by_ray(frame: &PointerFrame, controller: &Pose, world: &TaskWorld) -> Option<(ObjectId, f64)> {
    let ray = frame.ray(controller)?;
    let (near, far) = match frame {
        PointerFrame::Own => (0.0, f64::INFINITY),
        PointerFrame::Window { camera, .. } => (camera.near(), camera.far()),
    };
    let mut best: Option<(ObjectId, f64)> = None;
    for cube in &world.cubes {
        if let Some(t) = ray_aabb_intersect(&ray, &cube.aabb()) {
            if t < near || t > far {
                continue;
            }
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some((cube.id, t));
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrabOutcome {
    pub object: ObjectId,
    pub grab_distance: f64,
    pub frame: Frame,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReleaseOutcome {
    pub object: ObjectId,
    pub position: Vec3,
    pub placement: Option<PlacementRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferOutcome {
    pub object: ObjectId,
    pub frame: Frame,
    pub position: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeleportOutcome {
    pub from: Vec3,
    pub to: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ShuttleOutcome {
    Toggled { shuttled: bool },
    Transferred(TransferOutcome),
}

/// Authoritative two-player session state.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub variant: Variant,
    pub world: TaskWorld,
    pub players: [PlayerState; 2],
    pub locks: OwnershipTable,
    pub highlighted: [Option<ObjectId>; 2],
    pub lens: Lens,
    pub snap_distance: f64,
}

impl Session {
    /// Players start on opposite sides of the room facing its center.
    pub fn new(variant: Variant, world: TaskWorld) -> Self {
        let room = world.room;
        let eye = 1.6;
        let p1 = Vec3::new(room.width / 2.0, eye, 0.6);
        let p2 = Vec3::new(room.width / 2.0, eye, room.depth - 0.6);
        let face = |from: Vec3| {
            let to = Vec3::new(room.width / 2.0, 1.0, room.depth / 2.0);
            crate::geometry::Orientation::looking_along(to - from).unwrap_or_default()
        };
        Session {
            variant,
            world,
            players: [
                PlayerState::standing_at(Pose::new(p1, face(p1))),
                PlayerState::standing_at(Pose::new(p2, face(p2))),
            ],
            locks: OwnershipTable::new(),
            highlighted: [None, None],
            lens: Lens::default(),
            snap_distance: DEFAULT_SNAP_DISTANCE,
        }
    }

    pub fn player(&self, p: PlayerId) -> &PlayerState {
        &self.players[p.index()]
    }

    pub fn player_mut(&mut self, p: PlayerId) -> &mut PlayerState {
        &mut self.players[p.index()]
    }

    /// Pointer frame implied by a held-object frame.
    pub fn frame_pointer(&self, p: PlayerId, frame: Frame) -> Option<PointerFrame> {
        match frame {
            Frame::Own => Some(PointerFrame::Own),
            Frame::Window => {
                let ps = self.player(p);
                let anchor = ps.window.as_ref()?;
                Some(PointerFrame::Window {
                    panel: anchor.panel(&ps.head),
                    camera: anchor.camera,
                })
            }
        }
    }

    /// Frame a fresh grab would use: the window while shuttled, else own.
    pub fn active_frame(&self, p: PlayerId) -> Frame {
        let ps = self.player(p);
        if ps.shuttled && ps.window.is_some() {
            Frame::Window
        } else {
            Frame::Own
        }
    }

    /// Recomputes and stores the player's highlighted object.
    pub fn select(&mut self, p: PlayerId) -> Option<(ObjectId, f64)> {
        let frame = self.active_frame(p);
        let hit = self
            .frame_pointer(p, frame)
            .and_then(|pf| select_by_ray(&pf, &self.player(p).controller, &self.world));
        self.highlighted[p.index()] = hit.map(|(id, _)| id);
        hit
    }

    /// Distance grab of the object currently under the player's pointer.
    pub fn grab(&mut self, p: PlayerId, object: ObjectId, tick: u64) -> Result<GrabOutcome, SessionError> {
        let cube = self.world.cube(object).ok_or(WorldError::UnknownObject(object))?;
        if cube.placed_in.is_some() {
            return Err(SessionError::ObjectPlaced);
        }
        if let Some(h) = self.player(p).held {
            if h.object != object {
                return Err(SessionError::AlreadyHolding);
            }
        }
        let hit = self.select(p);
        let grab_distance = match hit {
            Some((id, t)) if id == object => t,
            _ => return Err(SessionError::NotSelected),
        };
        if let Acquire::Denied(owner) = self.locks.try_acquire(object, p, tick) {
            return Err(SessionError::LockDenied(owner));
        }
        let frame = self.active_frame(p);
        let held = Held {
            object,
            grab_distance,
            frame,
        };
        self.player_mut(p).held = Some(held);
        Ok(GrabOutcome {
            object,
            grab_distance,
            frame,
        })
    }

    /// Moves the held object onto the player's pointer at the grab distance.
    /// Returns the new position when the object moved.
    pub fn follow_held(&mut self, p: PlayerId) -> Option<Vec3> {
        let held = self.player(p).held?;
        let pointer = self.frame_pointer(p, held.frame)?;
        let ray = pointer.ray(&self.player(p).controller)?;
        let target = self.world.room.clamp_object(ray.at(held.grab_distance));
        let cube = self.world.cube_mut(held.object)?;
        if cube.position == target {
            return None;
        }
        cube.position = target;
        Some(target)
    }

    /// Drops the held object: into the nearest empty slot within the snap
    /// distance, otherwise suspended where it is. The lock is released either way.
    pub fn release(&mut self, p: PlayerId) -> Result<ReleaseOutcome, SessionError> {
        let held = self.player(p).held.ok_or(SessionError::NotHolding)?;
        let position = self
            .world
            .cube(held.object)
            .ok_or(WorldError::UnknownObject(held.object))?
            .position;
        let placement = match self.world.nearest_slot(position, self.snap_distance) {
            Some(slot) => Some(self.world.place_cube(held.object, slot)?),
            None => None,
        };
        self.locks.release(held.object, p);
        self.player_mut(p).held = None;
        let position = self.world.cubes[held.object.index()].position;
        Ok(ReleaseOutcome {
            object: held.object,
            position,
            placement,
        })
    }

    /// Instant move to a floor point strictly inside the walls; head height is kept.
    pub fn teleport(&mut self, p: PlayerId, target: Vec3) -> Result<TeleportOutcome, SessionError> {
        if !target.is_finite() || !self.world.room.floor_contains(target.x, target.z) {
            return Err(SessionError::OutOfBounds);
        }
        let ps = self.player_mut(p);
        let from = ps.head.position;
        let to = Vec3::new(target.x, from.y, target.z);
        let delta = to - from;
        ps.head.position = to;
        ps.controller.position += delta;
        Ok(TeleportOutcome { from, to })
    }

    /// The A/X button. Flips shuttle mode, or the held object's frame when holding.
    pub fn shuttle_toggle(&mut self, p: PlayerId) -> Result<ShuttleOutcome, SessionError> {
        if !self.variant.has_interactive_window() {
            return Err(SessionError::NoWindow);
        }
        if self.player(p).held.is_some() {
            return self.transfer_held(p).map(ShuttleOutcome::Transferred);
        }
        let ps = self.player_mut(p);
        ps.shuttled = !ps.shuttled;
        Ok(ShuttleOutcome::Toggled {
            shuttled: ps.shuttled,
        })
    }

    /// Moves the held object between the player's own space and the
    /// partner's view. Lock ownership is untouched.
    pub fn transfer_held(&mut self, p: PlayerId) -> Result<TransferOutcome, SessionError> {
        if !self.variant.has_interactive_window() {
            return Err(SessionError::NoWindow);
        }
        let held = self.player(p).held.ok_or(SessionError::NotHolding)?;
        let ps = self.player(p).clone();
        let current = self.world.cubes[held.object.index()].position;
        let (position, grab_distance) = match held.frame {
            Frame::Own => {
                let anchor = ps.window.as_ref().ok_or(SessionError::NoWindow)?;
                let panel = anchor.panel(&ps.head);
                let (u, v) = panel.nearest_uv(&ps.controller.ray());
                let m = TRANSFER_EDGE_MARGIN;
                let ray = anchor.camera.unproject(u.clamp(m, 1.0 - m), v.clamp(m, 1.0 - m));
                let depth = current
                    .distance(anchor.camera.apex.position)
                    .clamp(MIN_TRANSFER_DEPTH, MAX_TRANSFER_DEPTH);
                (ray.at(depth), depth)
            }
            Frame::Window => (ps.controller.ray().at(held.grab_distance), held.grab_distance),
        };
        let position = self.world.room.clamp_object(position);
        let frame = held.frame.flipped();
        self.world.cubes[held.object.index()].position = position;
        self.player_mut(p).held = Some(Held {
            object: held.object,
            grab_distance,
            frame,
        });
        Ok(TransferOutcome {
            object: held.object,
            frame,
            position,
        })
    }

    /// Routes one logical action. Grabs go through lock arbitration.
    pub fn apply(&mut self, p: PlayerId, action: Action, tick: u64) -> Result<Applied, SessionError> {
        Ok(match action {
            Action::Select => Applied::Selected(self.select(p).map(|(id, _)| id)),
            Action::Grab { object } => Applied::Grabbed(self.grab(p, object, tick)?),
            Action::Release => Applied::Released(self.release(p)?),
            Action::Teleport { target } => Applied::Teleported(self.teleport(p, target)?),
            Action::Shuttle => match self.shuttle_toggle(p)? {
                ShuttleOutcome::Toggled { shuttled } => Applied::Shuttled { shuttled },
                ShuttleOutcome::Transferred(t) => Applied::Transferred(t),
            },
            Action::Transfer => Applied::Transferred(self.transfer_held(p)?),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Applied {
    Selected(Option<ObjectId>),
    Grabbed(GrabOutcome),
    Released(ReleaseOutcome),
    Teleported(TeleportOutcome),
    Shuttled { shuttled: bool },
    Transferred(TransferOutcome),
}
