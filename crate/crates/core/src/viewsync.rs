//! The partner-view window: which camera it shows, how that camera follows
//! the partner's head, and what is visible through it.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angular_difference, interpolate_pose, Frustum, Lens, Panel, Pose, Vec3};
use crate::session::PlayerId;
use crate::world::{ObjectId, SlotId, TaskWorld};

/// Angular size of the window in the owner's field of view (width, height).
pub const WINDOW_ANGULAR_SIZE: (f64, f64) = (40.0, 30.0);
pub const DEFAULT_WINDOW_DISTANCE: f64 = 1.0;
pub const MIN_WINDOW_DISTANCE: f64 = 0.5;
pub const MAX_WINDOW_DISTANCE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "shaview")]
    ShaView,
    #[serde(rename = "teamportal")]
    TeamPortal,
    #[serde(rename = "teamportal-plus")]
    TeamPortalPlus,
    #[serde(rename = "snap")]
    SnapTeamPortalPlus,
    #[serde(rename = "drop")]
    DropTeamPortalPlus,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Baseline,
        Variant::ShaView,
        Variant::TeamPortal,
        Variant::TeamPortalPlus,
        Variant::SnapTeamPortalPlus,
        Variant::DropTeamPortalPlus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::ShaView => "shaview",
            Variant::TeamPortal => "teamportal",
            Variant::TeamPortalPlus => "teamportal-plus",
            Variant::SnapTeamPortalPlus => "snap",
            Variant::DropTeamPortalPlus => "drop",
        }
    }

    /// Whether any partner-view window is shown.
    pub fn has_window(self) -> bool {
        self != Variant::Baseline
    }

    /// Whether the window supports shuttle and transfer.
    pub fn has_interactive_window(self) -> bool {
        !matches!(self, Variant::Baseline | Variant::ShaView)
    }

    /// Whether the displayed camera is gated by the sync thresholds.
    pub fn is_gated(self) -> bool {
        matches!(
            self,
            Variant::TeamPortalPlus | Variant::SnapTeamPortalPlus | Variant::DropTeamPortalPlus
        )
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown variant '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncPolicy {
    /// Meters; a sync fires when the partner moved strictly more than this.
    pub pos_threshold: f64,
    /// Degrees; same rule for rotation.
    pub rot_threshold: f64,
    pub interp_duration_s: f64,
}

impl Default for SyncPolicy {
    fn default() -> Self {
        SyncPolicy {
            pos_threshold: 0.10,
            rot_threshold: 5.0,
            interp_duration_s: 0.3,
        }
    }
}

impl SyncPolicy {
    pub fn interp_ticks(&self, tick_hz: f64) -> u64 {
        ((self.interp_duration_s * tick_hz).round() as u64).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Opacity {
    SemiTransparent,
    Opaque,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyncEventKind {
    FullSync,
    InterpStart,
    Freeze,
    Unfreeze,
    SpawnSecondary,
    DespawnSecondary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncEvent {
    pub tick: u64,
    pub kind: SyncEventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interpolation {
    pub from: Pose,
    pub to: Pose,
    pub start_tick: u64,
    pub ticks: u64,
}

impl Interpolation {
    fn pose_at(&self, tick: u64) -> (Pose, bool) {
        let elapsed = tick.saturating_sub(self.start_tick);
        if elapsed >= self.ticks {
            (self.to, true)
        } else {
            let t = elapsed as f64 / self.ticks as f64;
            (interpolate_pose(self.from, self.to, t), false)
        }
    }
}

/// What a player's client needs to draw and aim through its window; sent to
/// the host so it can resolve window-frame interactions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowAnchor {
    pub distance: f64,
    pub camera: Frustum,
    pub secondary: bool,
}

impl WindowAnchor {
    pub fn primary(distance: f64, camera: Frustum) -> Self {
        WindowAnchor {
            distance,
            camera,
            secondary: false,
        }
    }

    /// The panel in world space for an owner standing at `head`.
    pub fn panel(&self, head: &Pose) -> Panel {
        let p = Panel::facing(head, self.distance, WINDOW_ANGULAR_SIZE.0, WINDOW_ANGULAR_SIZE.1);
        if self.secondary {
            p.below()
        } else {
            p
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ViewSyncError {
    #[error("the variant has no view window")]
    NoWindow,
    #[error("no secondary window is open")]
    NoSecondaryWindow,
}

/// Client-side window state for one owner, tracking the partner's head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewWindowState {
    pub owner: PlayerId,
    pub variant: Variant,
    pub window_distance: f64,
    pub opacity: Opacity,
    pub live_camera: Frustum,
    pub displayed_camera: Frustum,
    pub last_synced: Pose,
    pub interpolation: Option<Interpolation>,
    pub frozen: bool,
    pub secondary: Option<Frustum>,
    pub shuttled: bool,
    lens: Lens,
}

impl ViewWindowState {
    pub fn new(owner: PlayerId, variant: Variant, partner_head: Pose, lens: Lens) -> Result<Self, ViewSyncError> {
        if !variant.has_window() {
            return Err(ViewSyncError::NoWindow);
        }
        let camera = lens.frustum(partner_head);
        Ok(ViewWindowState {
            owner,
            variant,
            window_distance: DEFAULT_WINDOW_DISTANCE,
            opacity: Opacity::SemiTransparent,
            live_camera: camera,
            displayed_camera: camera,
            last_synced: partner_head,
            interpolation: None,
            frozen: false,
            secondary: None,
            shuttled: false,
            lens,
        })
    }

    pub fn set_window_distance(&mut self, d: f64) {
        if d.is_finite() {
            self.window_distance = d.clamp(MIN_WINDOW_DISTANCE, MAX_WINDOW_DISTANCE);
        }
    }

    /// Advances the window by one tick given the partner's latest head pose
    /// and the owner's shuttle state.
    pub fn update(
        &mut self,
        partner_head: Pose,
        shuttled: bool,
        tick: u64,
        policy: &SyncPolicy,
        tick_hz: f64,
    ) -> Vec<SyncEvent> {
        let mut events = Vec::new();
        let entering = shuttled && !self.shuttled;
        let leaving = !shuttled && self.shuttled;
        self.shuttled = shuttled;
        self.live_camera = self.lens.frustum(partner_head);
        self.opacity = if shuttled && self.variant.has_interactive_window() {
            Opacity::Opaque
        } else {
            Opacity::SemiTransparent
        };
        let ticks = policy.interp_ticks(tick_hz);

        match self.variant {
            Variant::Baseline => {}
            Variant::ShaView | Variant::TeamPortal => {
                self.displayed_camera = self.live_camera;
                self.last_synced = partner_head;
            }
            Variant::TeamPortalPlus => {
                self.gate(partner_head, tick, policy, ticks, &mut events);
                self.advance(tick);
            }
            Variant::SnapTeamPortalPlus => {
                if entering {
                    self.frozen = true;
                    self.interpolation = None;
                    events.push(SyncEvent {
                        tick,
                        kind: SyncEventKind::Freeze,
                    });
                }
                if leaving {
                    self.frozen = false;
                    events.push(SyncEvent {
                        tick,
                        kind: SyncEventKind::Unfreeze,
                    });
                    if self.displayed_camera.apex != partner_head {
                        self.start_sync(partner_head, tick, ticks, &mut events);
                    } else {
                        self.last_synced = partner_head;
                    }
                } else if !self.frozen {
                    self.gate(partner_head, tick, policy, ticks, &mut events);
                }
                if !self.frozen {
                    self.advance(tick);
                }
            }
            Variant::DropTeamPortalPlus => {
                self.gate(partner_head, tick, policy, ticks, &mut events);
                self.advance(tick);
                if entering {
                    self.secondary = Some(self.displayed_camera);
                    events.push(SyncEvent {
                        tick,
                        kind: SyncEventKind::SpawnSecondary,
                    });
                }
                if leaving && self.secondary.take().is_some() {
                    events.push(SyncEvent {
                        tick,
                        kind: SyncEventKind::DespawnSecondary,
                    });
                }
            }
        }
        events
    }

    fn gate(&mut self, partner_head: Pose, tick: u64, policy: &SyncPolicy, ticks: u64, events: &mut Vec<SyncEvent>) {
        let moved = partner_head.position.distance(self.last_synced.position);
        let turned = angular_difference(partner_head.orientation, self.last_synced.orientation);
        if moved > policy.pos_threshold || turned > policy.rot_threshold {
            self.start_sync(partner_head, tick, ticks, events);
        }
    }

    fn start_sync(&mut self, target: Pose, tick: u64, ticks: u64, events: &mut Vec<SyncEvent>) {
        self.interpolation = Some(Interpolation {
            from: self.displayed_camera.apex,
            to: target,
            start_tick: tick,
            ticks,
        });
        self.last_synced = target;
        events.push(SyncEvent {
            tick,
            kind: SyncEventKind::FullSync,
        });
        events.push(SyncEvent {
            tick,
            kind: SyncEventKind::InterpStart,
        });
    }

    fn advance(&mut self, tick: u64) {
        if let Some(interp) = self.interpolation {
            let (pose, done) = interp.pose_at(tick);
            self.displayed_camera = self.lens.frustum(pose);
            if done {
                self.interpolation = None;
            }
        }
    }

    /// Number of windows on screen.
    pub fn window_count(&self) -> usize {
        1 + usize::from(self.secondary.is_some())
    }

    /// Camera that window-frame interaction goes through: the frozen copy in
    /// the secondary window while it exists, else the displayed camera.
    pub fn interaction_camera(&self) -> (Frustum, bool) {
        match self.secondary {
            Some(c) => (c, true),
            None => (self.displayed_camera, false),
        }
    }

    pub fn anchor(&self) -> WindowAnchor {
        let (camera, secondary) = self.interaction_camera();
        WindowAnchor {
            distance: self.window_distance,
            camera,
            secondary,
        }
    }

    pub fn contents<I>(&self, items: I, use_secondary: bool) -> Result<Vec<WindowItem>, ViewSyncError>
    where
        I: IntoIterator<Item = (WindowObject, Vec3)>,
    {
        let camera = if use_secondary {
            self.secondary.ok_or(ViewSyncError::NoSecondaryWindow)?
        } else {
            self.displayed_camera
        };
        Ok(visible_items(&camera, items))
    }
}

/// Free-function form of [`ViewWindowState::update`].
pub fn update_window(
    state: &mut ViewWindowState,
    partner_head: Pose,
    shuttled: bool,
    tick: u64,
    policy: &SyncPolicy,
    tick_hz: f64,
) -> Vec<SyncEvent> {
    state.update(partner_head, shuttled, tick, policy, tick_hz)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum WindowObject {
    Cube(ObjectId),
    Slot(SlotId),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowItem {
    pub object: WindowObject,
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

/// Every cube and slot of `world` as window candidates.
pub fn world_items(world: &TaskWorld) -> impl Iterator<Item = (WindowObject, Vec3)> + '_ {
    world
        .cubes
        .iter()
        .map(|c| (WindowObject::Cube(c.id), c.position))
        .chain(world.slots.iter().map(|s| (WindowObject::Slot(s.id), s.position)))
}

fn visible_items<I>(camera: &Frustum, items: I) -> Vec<WindowItem>
where
    I: IntoIterator<Item = (WindowObject, Vec3)>,
{
    let mut out: Vec<WindowItem> = items
        .into_iter()
        .filter(|(_, p)| camera.contains(*p))
        .filter_map(|(object, p)| {
            let (u, v) = camera.project(p)?;
            let depth = camera.to_camera(p).2;
            Some(WindowItem { object, u, v, depth })
        })
        .collect();
    out.sort_by(|a, b| a.depth.total_cmp(&b.depth).then(a.object.cmp(&b.object)));
    out
}

/// Objects visible through a window, nearest first.
pub fn window_contents(
    state: Option<&ViewWindowState>,
    world: &TaskWorld,
    use_secondary: bool,
) -> Result<Vec<WindowItem>, ViewSyncError> {
    let state = state.ok_or(ViewSyncError::NoWindow)?;
    state.contents(world_items(world), use_secondary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Orientation;
    use crate::world::{generate_task, Complexity};

    const HZ: f64 = 50.0;

    fn head(x: f64, yaw: f64) -> Pose {
        Pose::new(Vec3::new(x, 1.6, 1.0), Orientation::new(yaw, 0.0))
    }

    fn state(variant: Variant) -> ViewWindowState {
        ViewWindowState::new(PlayerId::One, variant, head(1.0, 0.0), Lens::default()).unwrap()
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.as_str().parse::<Variant>().unwrap(), v);
            let json = serde_json::to_string(&v).unwrap();
            assert_eq!(json, format!("\"{}\"", v.as_str()));
        }
        assert!("nope".parse::<Variant>().is_err());
    }

    #[test]
    fn baseline_has_no_window() {
        assert_eq!(
            ViewWindowState::new(PlayerId::One, Variant::Baseline, head(1.0, 0.0), Lens::default()),
            Err(ViewSyncError::NoWindow)
        );
        let w = generate_task(Complexity::Simple, 1).unwrap();
        assert_eq!(window_contents(None, &w, false), Err(ViewSyncError::NoWindow));
    }

    #[test]
    fn raw_variants_track_live() {
        for v in [Variant::ShaView, Variant::TeamPortal] {
            let mut s = state(v);
            let p = head(1.03, 1.0);
            assert!(s.update(p, false, 1, &SyncPolicy::default(), HZ).is_empty());
            assert_eq!(s.displayed_camera.apex, p);
        }
    }

    #[test]
    fn small_motion_is_filtered() {
        let mut s = state(Variant::TeamPortalPlus);
        let policy = SyncPolicy::default();
        let events = s.update(head(1.05, 4.0), false, 1, &policy, HZ);
        assert!(events.is_empty());
        assert_eq!(s.displayed_camera.apex, head(1.0, 0.0));
    }

    #[test]
    fn sync_converges_after_interp_duration() {
        let mut s = state(Variant::TeamPortalPlus);
        let policy = SyncPolicy::default();
        let target = head(1.5, 0.0);
        let events = s.update(target, false, 10, &policy, HZ);
        assert_eq!(
            events.iter().map(|e| e.kind).collect::<Vec<_>>(),
            vec![SyncEventKind::FullSync, SyncEventKind::InterpStart]
        );
        for t in 11..25 {
            s.update(target, false, t, &policy, HZ);
            assert_ne!(s.displayed_camera.apex, target);
        }
        s.update(target, false, 25, &policy, HZ);
        assert_eq!(s.displayed_camera.apex, target);
        assert!(s.interpolation.is_none());
    }

    #[test]
    fn snap_freezes_while_shuttled() {
        let mut s = state(Variant::SnapTeamPortalPlus);
        let policy = SyncPolicy::default();
        let ev = s.update(head(1.0, 0.0), true, 1, &policy, HZ);
        assert_eq!(ev[0].kind, SyncEventKind::Freeze);
        let frozen = s.displayed_camera;
        for t in 2..40 {
            s.update(head(1.0 + t as f64 * 0.1, t as f64 * 7.0), true, t, &policy, HZ);
            assert_eq!(s.displayed_camera, frozen);
        }
        let ev = s.update(head(2.0, 30.0), false, 40, &policy, HZ);
        let kinds: Vec<_> = ev.iter().map(|e| e.kind).collect();
        assert_eq!(kinds[0], SyncEventKind::Unfreeze);
        assert!(kinds.contains(&SyncEventKind::InterpStart));
    }

    #[test]
    fn drop_spawns_secondary() {
        let mut s = state(Variant::DropTeamPortalPlus);
        let policy = SyncPolicy::default();
        assert_eq!(s.window_count(), 1);
        s.update(head(1.0, 0.0), true, 1, &policy, HZ);
        assert_eq!(s.window_count(), 2);
        let copy = s.secondary.unwrap();
        s.update(head(2.0, 40.0), true, 2, &policy, HZ);
        assert_eq!(s.secondary.unwrap(), copy);
        assert!(s.anchor().secondary);
        s.update(head(2.0, 40.0), false, 3, &policy, HZ);
        assert_eq!(s.window_count(), 1);
        assert!(!s.anchor().secondary);
    }

    #[test]
    fn window_distance_is_clamped() {
        let mut s = state(Variant::TeamPortal);
        s.set_window_distance(5.0);
        assert_eq!(s.window_distance, MAX_WINDOW_DISTANCE);
        s.set_window_distance(0.1);
        assert_eq!(s.window_distance, MIN_WINDOW_DISTANCE);
    }

    #[test]
    fn contents_sorted_by_depth() {
        let w = generate_task(Complexity::Simple, 7).unwrap();
        let partner = Pose::new(Vec3::new(3.0, 1.6, 0.3), Orientation::new(0.0, -20.0));
        let s = ViewWindowState::new(PlayerId::One, Variant::TeamPortal, partner, Lens::default()).unwrap();
        let items = window_contents(Some(&s), &w, false).unwrap();
        assert!(!items.is_empty());
        assert!(items.windows(2).all(|p| p[0].depth <= p[1].depth));
        assert!(items.iter().any(|i| matches!(i.object, WindowObject::Slot(_))));
        assert_eq!(s.contents(world_items(&w), true), Err(ViewSyncError::NoSecondaryWindow));
    }
}
