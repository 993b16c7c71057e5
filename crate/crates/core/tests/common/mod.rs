#![allow(dead_code)]

use portalsim::world::{Complexity, TaskWorld, CUBE_SIDE, EXCLUSION_MARGIN, SLOTS_PER_AREA};

/// Every generated-world invariant, checked from scratch. Returns the first
/// violation found.
pub fn world_violation(w: &TaskWorld) -> Option<String> {
    let n_areas = match w.complexity {
        Complexity::Simple => 1,
        Complexity::Complex => 4,
    };
    if w.areas.len() != n_areas {
        return Some(format!("{} areas", w.areas.len()));
    }
    if w.cubes.len() != 24 * n_areas || w.slots.len() != w.cubes.len() {
        return Some(format!("{} cubes, {} slots", w.cubes.len(), w.slots.len()));
    }
    for a in &w.areas {
        if a.slots.len() != SLOTS_PER_AREA {
            return Some(format!("area {} has {} slots", a.id, a.slots.len()));
        }
    }
    let lo = (0.20, 0.10, 0.20);
    let hi = (w.room.width - 0.20, w.room.wall_height - 0.20, w.room.depth - 0.20);
    for c in &w.cubes {
        let p = c.position;
        if !(lo.0..=hi.0).contains(&p.x) || !(lo.1..=hi.1).contains(&p.y) || !(lo.2..=hi.2).contains(&p.z) {
            return Some(format!("cube {} outside spawn volume at {:?}", c.id, p));
        }
        for a in &w.areas {
            // Distance from the point to the stack's bounding box.
            let h = 1.5 * CUBE_SIDE;
            let d = |v: f64, c: f64| ((v - c).abs() - h).max(0.0);
            let dist = (d(p.x, a.center.x).powi(2) + d(p.y, a.center.y).powi(2) + d(p.z, a.center.z).powi(2)).sqrt();
            if dist < EXCLUSION_MARGIN {
                return Some(format!("cube {} is {dist} m from area {}", c.id, a.id));
            }
        }
        if c.placed_in.is_some() {
            return Some(format!("cube {} starts placed", c.id));
        }
    }
    let mut tangrams: Vec<u32> = w.cubes.iter().map(|c| c.tangram.0).collect();
    let mut hints: Vec<u32> = w.slots.iter().map(|s| s.hint.0).collect();
    tangrams.sort_unstable();
    hints.sort_unstable();
    if tangrams != hints {
        return Some("hint set is not the tangram set".into());
    }
    if tangrams.windows(2).any(|p| p[0] == p[1]) {
        return Some("duplicate tangram".into());
    }
    None
}

/// Compensated summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

use portalsim::geometry::{Orientation, Vec3};
use portalsim::netsim::{ClientState, Command, Driver};
use portalsim::rng::SplitMix64;
use portalsim::session::{Action, PlayerId};
use portalsim::world::ObjectId;

/// Both players crowd a few cubes and hammer them with lock requests,
/// pointer moves and releases.
pub struct LockFuzz {
    rng: SplitMix64,
    hot: Vec<ObjectId>,
}

impl LockFuzz {
    pub fn new(seed: u64) -> Self {
        LockFuzz {
            rng: SplitMix64::new(seed),
            hot: Vec::new(),
        }
    }
}

impl Driver for LockFuzz {
    fn act(&mut self, _player: PlayerId, client: &ClientState, tick: u64) -> Vec<Command> {
        if self.hot.is_empty() {
            let center = Vec3::new(client.room.width / 2.0, 1.0, client.room.depth / 2.0);
            let mut by_distance: Vec<_> = client.cubes.iter().map(|c| (c.position.distance(center), c.id)).collect();
            by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            self.hot = by_distance.iter().take(3).map(|p| p.1).collect();
        }
        let focus = client.cubes[self.hot[0].index()].position;
        if tick == 0 {
            let a = self.rng.range_f64(0.0, std::f64::consts::TAU);
            let r = self.rng.range_f64(0.6, 1.2);
            let x = (focus.x + r * a.sin()).clamp(0.3, client.room.width - 0.3);
            let z = (focus.z + r * a.cos()).clamp(0.3, client.room.depth - 0.3);
            return vec![Command::Input(Action::Teleport {
                target: Vec3::new(x, 0.0, z),
            })];
        }
        let mut out = Vec::new();
        let target = self.hot[self.rng.below(self.hot.len() as u64) as usize];
        if self.rng.chance(0.4) {
            let head = client.own.head.position;
            let offset = Vec3::new(0.0, -0.3, 0.0);
            let at = client.cubes[target.index()].position;
            if let (Some(h), Some(c)) = (
                Orientation::looking_along(at - head),
                Orientation::looking_along(at - (head + offset)),
            ) {
                out.push(Command::Pose {
                    head: h,
                    controller_offset: offset,
                    controller: c,
                });
            }
        }
        if self.rng.chance(0.3) {
            out.push(Command::RequestLock(target));
        }
        if self.rng.chance(0.15) {
            out.push(Command::Input(Action::Release));
        }
        out
    }
}
