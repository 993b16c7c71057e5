//! Tangram-matching task worlds: generation, placement and scoring.
//!
//! A world is a 6 m × 6 m room with one (simple) or four (complex) target
//! areas. Each area is a 3×3×3 stack of 10 cm cells whose vertical center
//! column is left empty, giving 24 slots. Every slot carries the hint of
//! exactly one white cube's tangram; cubes float at seeded random positions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, Vec3};
use crate::rng::SplitMix64;

pub const CUBE_SIDE: f64 = 0.10;
pub const SLOTS_PER_AREA: usize = 24;
/// Placement snaps to a slot whose center is within this distance.
pub const DEFAULT_SNAP_DISTANCE: f64 = 0.15;
/// No cube spawns closer than this to any target-area bounding box.
pub const EXCLUSION_MARGIN: f64 = 0.5;
pub const SPAWN_WALL_MARGIN: f64 = 0.20;
pub const SPAWN_FLOOR_CLEARANCE: f64 = 0.10;
pub const MAX_ATTEMPTS_PER_CUBE: u32 = 10_000;
/// Height of the center cell of every target stack.
pub const AREA_CENTER_HEIGHT: f64 = 1.0;
/// Spawned cubes keep at least this center-to-center gap so they never overlap.
pub const MIN_CUBE_SEPARATION: f64 = 0.15;

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// White cube identifier; doubles as the index into `TaskWorld::cubes`.
    ObjectId
);
id_type!(
    /// Target slot identifier, global across areas.
    SlotId
);
id_type!(AreaId);
id_type!(
    /// Opaque tangram pattern identifier, shown on all six faces of a cube.
    TangramId
);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("could not place cube {cube} after {attempts} attempts")]
    GenerationFailure { cube: usize, attempts: u32 },
    #[error("slot {0} is already occupied")]
    SlotOccupied(SlotId),
    #[error("cube {0} has already been placed")]
    CubeAlreadyPlaced(ObjectId),
    #[error("unknown object {0}")]
    UnknownObject(ObjectId),
    #[error("unknown slot {0}")]
    UnknownSlot(SlotId),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub width: f64,
    pub depth: f64,
    pub wall_height: f64,
}

impl Default for Room {
    fn default() -> Self {
        Room {
            width: 6.0,
            depth: 6.0,
            wall_height: 1.8,
        }
    }
}

impl Room {
    pub fn contains(&self, p: Vec3) -> bool {
        (0.0..=self.width).contains(&p.x)
            && (0.0..=self.wall_height).contains(&p.y)
            && (0.0..=self.depth).contains(&p.z)
    }

    /// True iff `(x, z)` is on the floor strictly inside the walls.
    pub fn floor_contains(&self, x: f64, z: f64) -> bool {
        x > 0.0 && x < self.width && z > 0.0 && z < self.depth
    }

    /// Clamps a point into the room, keeping a cube fully inside.
    pub fn clamp_object(&self, p: Vec3) -> Vec3 {
        let h = CUBE_SIDE / 2.0;
        Vec3::new(
            p.x.clamp(h, self.width - h),
            p.y.clamp(h, self.wall_height - h),
            p.z.clamp(h, self.depth - h),
        )
    }

    /// Lower and upper corners of the cube spawn volume.
    pub fn spawn_volume(&self) -> (Vec3, Vec3) {
        (
            Vec3::new(SPAWN_WALL_MARGIN, SPAWN_FLOOR_CLEARANCE, SPAWN_WALL_MARGIN),
            Vec3::new(
                self.width - SPAWN_WALL_MARGIN,
                self.wall_height - SPAWN_WALL_MARGIN,
                self.depth - SPAWN_WALL_MARGIN,
            ),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Complexity {
    Simple,
    Complex,
}

impl Complexity {
    pub fn area_count(self) -> usize {
        match self {
            Complexity::Simple => 1,
            Complexity::Complex => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Complexity::Simple => "simple",
            Complexity::Complex => "complex",
        }
    }
}

impl std::str::FromStr for Complexity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "simple" => Ok(Complexity::Simple),
            "complex" => Ok(Complexity::Complex),
            other => Err(format!("unknown task `{other}` (expected simple|complex)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhiteCube {
    pub id: ObjectId,
    pub tangram: TangramId,
    pub position: Vec3,
    pub placed_in: Option<SlotId>,
}

impl WhiteCube {
    pub fn aabb(&self) -> Aabb {
        Aabb::cube(self.position, CUBE_SIDE).expect("cube side is positive")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotState {
    Empty,
    Filled { object: ObjectId, correct: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotColor {
    LightBlue,
    OrangeRed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSlot {
    pub id: SlotId,
    pub area: AreaId,
    pub position: Vec3,
    pub hint: TangramId,
    pub state: SlotState,
}

impl TargetSlot {
    pub fn is_empty(&self) -> bool {
        self.state == SlotState::Empty
    }

    /// Any filled slot turns orange-red, whether or not the match is correct.
    pub fn color(&self) -> SlotColor {
        match self.state {
            SlotState::Empty => SlotColor::LightBlue,
            SlotState::Filled { .. } => SlotColor::OrangeRed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetArea {
    pub id: AreaId,
    pub center: Vec3,
    pub slots: Vec<SlotId>,
}

impl TargetArea {
    /// Bounding box of the 3×3×3 cell stack.
    pub fn bounds(&self) -> Aabb {
        Aabb::cube(self.center, 3.0 * CUBE_SIDE).expect("positive extent")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementRecord {
    pub object: ObjectId,
    pub slot: SlotId,
    pub tangram: TangramId,
    pub hint: TangramId,
    pub correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub placed: usize,
    pub matched: usize,
    /// `matched / placed`, absent when nothing has been placed.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskWorld {
    pub room: Room,
    pub complexity: Complexity,
    pub seed: u64,
    pub areas: Vec<TargetArea>,
    pub slots: Vec<TargetSlot>,
    pub cubes: Vec<WhiteCube>,
}

fn area_centers(room: &Room, complexity: Complexity) -> Vec<Vec3> {
    let y = AREA_CENTER_HEIGHT;
    match complexity {
        Complexity::Simple => vec![Vec3::new(room.width / 2.0, y, room.depth / 2.0)],
        Complexity::Complex => {
            let (a, b) = (room.width / 4.0, room.width * 3.0 / 4.0);
            let (c, d) = (room.depth / 4.0, room.depth * 3.0 / 4.0);
            vec![
                Vec3::new(a, y, c),
                Vec3::new(b, y, c),
                Vec3::new(b, y, d),
                Vec3::new(a, y, d),
            ]
        }
    }
}

/// Offsets of the 24 cells of a stack, layer by layer, skipping the center column.
fn cell_offsets() -> impl Iterator<Item = Vec3> {
    (0..3).flat_map(|layer| {
        (0..3).flat_map(move |ix| {
            (0..3).filter_map(move |iz| {
                if ix == 1 && iz == 1 {
                    None
                } else {
                    Some(Vec3::new(
                        (ix as f64 - 1.0) * CUBE_SIDE,
                        (layer as f64 - 1.0) * CUBE_SIDE,
                        (iz as f64 - 1.0) * CUBE_SIDE,
                    ))
                }
            })
        })
    })
}

/// Builds the deterministic world for `(complexity, seed)`.
pub fn generate_task(complexity: Complexity, seed: u64) -> Result<TaskWorld, WorldError> {
    let room = Room::default();
    let mut rng = SplitMix64::new(seed);
    let n_areas = complexity.area_count();
    let n_cubes = n_areas * SLOTS_PER_AREA;

    let mut tangrams: Vec<u32> = (0..n_cubes as u32).collect();
    rng.shuffle(&mut tangrams);

    let mut areas = Vec::with_capacity(n_areas);
    let mut slots = Vec::with_capacity(n_cubes);
    for (a, center) in area_centers(&room, complexity).into_iter().enumerate() {
        let pool_start = (a * SLOTS_PER_AREA) as u32;
        let mut hints: Vec<u32> = (pool_start..pool_start + SLOTS_PER_AREA as u32).collect();
        rng.shuffle(&mut hints);
        let mut ids = Vec::with_capacity(SLOTS_PER_AREA);
        for (offset, hint) in cell_offsets().zip(hints) {
            let id = SlotId(slots.len() as u32);
            ids.push(id);
            slots.push(TargetSlot {
                id,
                area: AreaId(a as u32),
                position: center + offset,
                hint: TangramId(hint),
                state: SlotState::Empty,
            });
        }
        areas.push(TargetArea {
            id: AreaId(a as u32),
            center,
            slots: ids,
        });
    }

    let exclusion: Vec<Aabb> = areas.iter().map(TargetArea::bounds).collect();
    let (lo, hi) = room.spawn_volume();
    let mut cubes: Vec<WhiteCube> = Vec::with_capacity(n_cubes);
    for (i, &tangram) in tangrams.iter().enumerate() {
        let mut placed = None;
        for _ in 0..MAX_ATTEMPTS_PER_CUBE {
            let p = Vec3::new(
                rng.range_f64(lo.x, hi.x),
                rng.range_f64(lo.y, hi.y),
                rng.range_f64(lo.z, hi.z),
            );
            let clear_of_areas = exclusion.iter().all(|b| b.distance_to(p) >= EXCLUSION_MARGIN);
            let clear_of_cubes = cubes
                .iter()
                .all(|c| c.position.distance(p) >= MIN_CUBE_SEPARATION);
            if clear_of_areas && clear_of_cubes {
                placed = Some(p);
                break;
            }
        }
        let position = placed.ok_or(WorldError::GenerationFailure {
            cube: i,
            attempts: MAX_ATTEMPTS_PER_CUBE,
        })?;
        cubes.push(WhiteCube {
            id: ObjectId(i as u32),
            tangram: TangramId(tangram),
            position,
            placed_in: None,
        });
    }

    Ok(TaskWorld {
        room,
        complexity,
        seed,
        areas,
        slots,
        cubes,
    })
}

impl TaskWorld {
    pub fn cube(&self, id: ObjectId) -> Option<&WhiteCube> {
        self.cubes.get(id.index())
    }

    pub fn cube_mut(&mut self, id: ObjectId) -> Option<&mut WhiteCube> {
        self.cubes.get_mut(id.index())
    }

    pub fn slot(&self, id: SlotId) -> Option<&TargetSlot> {
        self.slots.get(id.index())
    }

    /// Slot whose hint matches `tangram`, if any.
    pub fn slot_for_tangram(&self, tangram: TangramId) -> Option<&TargetSlot> {
        self.slots.iter().find(|s| s.hint == tangram)
    }

    pub fn is_complete(&self) -> bool {
        self.slots.iter().all(|s| !s.is_empty())
    }

    /// Nearest empty slot within `max_dist` of `position`; ties within 1e-9 m
    /// go to the lowest slot id.
    pub fn nearest_slot(&self, position: Vec3, max_dist: f64) -> Option<SlotId> {
        let mut best: Option<(SlotId, f64)> = None;
        for slot in self.slots.iter().filter(|s| s.is_empty()) {
            let d = slot.position.distance(position);
            if d > max_dist {
                continue;
            }
            match best {
                Some((_, bd)) if d >= bd - 1e-9 => {}
                _ => best = Some((slot.id, d)),
            }
        }
        best.map(|(id, _)| id)
    }

    /// Puts a cube into an empty slot. The slot turns orange-red regardless of
    /// correctness; correctness is only reported in the returned record.
    pub fn place_cube(&mut self, object: ObjectId, slot: SlotId) -> Result<PlacementRecord, WorldError> {
        let cube = self.cube(object).ok_or(WorldError::UnknownObject(object))?;
        let target = self.slot(slot).ok_or(WorldError::UnknownSlot(slot))?;
        if cube.placed_in.is_some() {
            return Err(WorldError::CubeAlreadyPlaced(object));
        }
        if !target.is_empty() {
            return Err(WorldError::SlotOccupied(slot));
        }
        let record = PlacementRecord {
            object,
            slot,
            tangram: cube.tangram,
            hint: target.hint,
            correct: cube.tangram == target.hint,
        };
        let position = target.position;
        self.slots[slot.index()].state = SlotState::Filled {
            object,
            correct: record.correct,
        };
        let cube = &mut self.cubes[object.index()];
        cube.placed_in = Some(slot);
        cube.position = position;
        Ok(record)
    }

    pub fn score(&self) -> Score {
        let mut placed = 0;
        let mut matched = 0;
        for slot in &self.slots {
            if let SlotState::Filled { correct, .. } = slot.state {
                placed += 1;
                matched += usize::from(correct);
            }
        }
        Score {
            placed,
            matched,
            accuracy: (placed > 0).then(|| matched as f64 / placed as f64),
        }
    }

    pub fn dump(&self) -> WorldDump {
        WorldDump {
            seed: self.seed,
            complexity: self.complexity,
            areas: self
                .areas
                .iter()
                .map(|a| AreaDump {
                    center: a.center,
                    slots: a
                        .slots
                        .iter()
                        .map(|&id| {
                            let s = &self.slots[id.index()];
                            SlotDump {
                                id,
                                pos: s.position,
                                hint: s.hint,
                            }
                        })
                        .collect(),
                })
                .collect(),
            cubes: self
                .cubes
                .iter()
                .map(|c| CubeDump {
                    id: c.id,
                    pos: c.position,
                    tangram: c.tangram,
                })
                .collect(),
        }
    }
}

/// JSON layout of a world: `{seed, complexity, areas: [{center, slots: [{id,
/// pos, hint}]}], cubes: [{id, pos, tangram}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldDump {
    pub seed: u64,
    pub complexity: Complexity,
    pub areas: Vec<AreaDump>,
    pub cubes: Vec<CubeDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaDump {
    pub center: Vec3,
    pub slots: Vec<SlotDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotDump {
    pub id: SlotId,
    pub pos: Vec3,
    pub hint: TangramId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeDump {
    pub id: ObjectId,
    pub pos: Vec3,
    pub tangram: TangramId,
}

impl WorldDump {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("world dump serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
