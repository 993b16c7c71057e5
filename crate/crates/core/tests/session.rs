use portalsim::geometry::{Orientation, Vec3};
use portalsim::session::*;
use portalsim::viewsync::{Variant, ViewWindowState};
use portalsim::world::{generate_task, Complexity, ObjectId};
use proptest::prelude::*;

const P1: PlayerId = PlayerId::One;
const P2: PlayerId = PlayerId::Two;

/// A simple-task session with every cube parked along the far wall near the
/// floor, clear of both players' forward rays.
fn staged(variant: Variant) -> Session {
    let mut w = generate_task(Complexity::Simple, 42).unwrap();
    for (i, c) in w.cubes.iter_mut().enumerate() {
        c.position = Vec3::new(0.3 + 0.2 * i as f64, 0.2, 3.0);
    }
    let mut s = Session::new(variant, w);
    for p in PlayerId::BOTH {
        let anchor = ViewWindowState::new(p, variant, s.player(p.partner()).head, s.lens)
            .ok()
            .map(|w| w.anchor());
        s.player_mut(p).window = anchor;
    }
    s
}

fn aim(s: &mut Session, p: PlayerId, target: Vec3) {
    let c = s.player(p).controller.position;
    s.player_mut(p).controller.orientation = Orientation::looking_along(target - c).unwrap();
}

fn put(s: &mut Session, o: u32, at: Vec3) {
    s.world.cubes[o as usize].position = at;
}

#[test]
fn selection_examples() {
    let mut s = staged(Variant::Baseline);
    let c = s.player(P1).controller.position;
    put(&mut s, 0, c + Vec3::new(0.0, 0.0, 1.5));
    aim(&mut s, P1, c + Vec3::new(0.0, 0.0, 1.0));
    assert_eq!(s.select(P1).map(|h| h.0), Some(ObjectId(0)));
    assert_eq!(s.highlighted[0], Some(ObjectId(0)));

    put(&mut s, 1, c + Vec3::new(0.0, 0.0, 0.8));
    assert_eq!(s.select(P1).map(|h| h.0), Some(ObjectId(1)));

    aim(&mut s, P1, c + Vec3::new(0.0, 1.0, 0.0));
    assert_eq!(s.select(P1), None);
    assert_eq!(s.highlighted[0], None);
}

#[test]
fn lock_examples() {
    let mut t = OwnershipTable::new();
    let o = ObjectId(7);
    assert_eq!(try_acquire(&mut t, o, P1, 1), Acquire::Granted);
    assert_eq!(try_acquire(&mut t, o, P2, 2), Acquire::Denied(P1));
    assert_eq!(try_acquire(&mut t, o, P1, 3), Acquire::Granted);
    assert_eq!(t.entry(o).unwrap().acquired_tick, 1);
}

#[test]
fn grab_examples() {
    let mut s = staged(Variant::Baseline);
    let c1 = s.player(P1).controller.position;
    let target = c1 + Vec3::new(0.0, 0.0, 1.5);
    put(&mut s, 0, target);
    aim(&mut s, P1, target);
    let g = s.grab(P1, ObjectId(0), 5).unwrap();
    assert!((g.grab_distance - 1.45).abs() < 1e-9);
    assert_eq!(s.locks.owner(ObjectId(0)), Some(P1));

    // The partner points at the same cube.
    aim(&mut s, P2, target);
    assert_eq!(s.grab(P2, ObjectId(0), 6), Err(SessionError::LockDenied(P1)));

    s.release(P1).unwrap();
    let slot = s.world.slots[0].id;
    let hint = s.world.slots[0].hint;
    let right = s.world.cubes.iter().find(|c| c.tangram == hint).unwrap().id;
    s.world.place_cube(right, slot).unwrap();
    let at = s.world.cubes[right.index()].position;
    aim(&mut s, P1, at);
    assert_eq!(s.grab(P1, right, 7), Err(SessionError::ObjectPlaced));
}

#[test]
fn held_cube_follows_the_ray() {
    let mut s = staged(Variant::Baseline);
    let c = s.player(P1).controller.position;
    put(&mut s, 0, c + Vec3::new(0.0, 0.0, 1.0));
    aim(&mut s, P1, c + Vec3::new(0.0, 0.0, 1.0));
    let g = s.grab(P1, ObjectId(0), 0).unwrap();
    for k in 0..20 {
        let yaw = -30.0 + 3.0 * k as f64;
        s.player_mut(P1).controller.orientation = Orientation::new(yaw, -10.0);
        s.follow_held(P1);
        let expect = s.player(P1).controller.ray().at(g.grab_distance);
        assert!(s.world.cubes[0].position.distance(expect) < 1e-12);
    }
}

#[test]
fn release_examples() {
    let mut s = staged(Variant::Baseline);
    assert_eq!(s.release(P1), Err(SessionError::NotHolding));

    // Carry the matching cube to 5 cm from its slot.
    let slot = s.world.slots[2].clone();
    let cube = s.world.cubes.iter().find(|c| c.tangram == slot.hint).unwrap().id;
    let stand = slot.position + Vec3::new(0.0, 0.0, -1.2);
    s.teleport(P1, Vec3::new(stand.x, 0.0, stand.z)).unwrap();
    let c = s.player(P1).controller.position;
    let drop_at = slot.position + Vec3::new(0.0, 0.05, 0.0);
    let dir = (drop_at - c).normalized().unwrap();
    put(&mut s, cube.0, c + dir * 0.6);
    aim(&mut s, P1, drop_at);
    s.grab(P1, cube, 0).unwrap();
    s.player_mut(P1).held.as_mut().unwrap().grab_distance = c.distance(drop_at);
    s.follow_held(P1);
    let r = s.release(P1).unwrap();
    let placement = r.placement.unwrap();
    assert!(placement.correct);
    assert_eq!(placement.slot, slot.id);
    assert_eq!(s.locks.owner(cube), None);

    // Open space: suspended where it was let go.
    let c = s.player(P1).controller.position;
    let free = c + Vec3::new(0.0, 0.0, -0.4);
    put(&mut s, 5, free);
    aim(&mut s, P1, free);
    s.grab(P1, ObjectId(5), 1).unwrap();
    let r = s.release(P1).unwrap();
    assert_eq!(r.placement, None);
    assert_eq!(s.world.cubes[5].position, free);
    assert_eq!(s.locks.owner(ObjectId(5)), None);
}

#[test]
fn teleport_examples() {
    let mut s = staged(Variant::Baseline);
    let before_world = s.world.clone();
    let t = s.teleport(P1, Vec3::new(3.0, 0.0, 3.0)).unwrap();
    assert_eq!(t.to, Vec3::new(3.0, 1.6, 3.0));
    assert_eq!(s.teleport(P1, Vec3::new(7.0, 0.0, 3.0)), Err(SessionError::OutOfBounds));
    assert_eq!(s.world, before_world);
}

#[test]
fn shuttle_examples() {
    let mut s = staged(Variant::TeamPortal);
    assert_eq!(s.shuttle_toggle(P1), Ok(ShuttleOutcome::Toggled { shuttled: true }));
    assert_eq!(s.shuttle_toggle(P1), Ok(ShuttleOutcome::Toggled { shuttled: false }));
    for v in [Variant::ShaView, Variant::Baseline] {
        let mut s = staged(v);
        assert_eq!(s.shuttle_toggle(P1), Err(SessionError::NoWindow));
    }
}

#[test]
fn transfer_into_partner_view_and_back() {
    let mut s = staged(Variant::TeamPortal);
    let c = s.player(P1).controller.position;
    let at = c + Vec3::new(0.0, 0.0, 0.9);
    put(&mut s, 0, at);
    aim(&mut s, P1, at);
    s.grab(P1, ObjectId(0), 0).unwrap();
    assert_eq!(s.transfer_held(P2), Err(SessionError::NotHolding));

    let t = s.transfer_held(P1).unwrap();
    assert_eq!(t.frame, Frame::Window);
    let camera = s.player(P1).window.unwrap().camera;
    assert!(camera.contains(t.position));
    assert_eq!(s.locks.owner(ObjectId(0)), Some(P1));

    let back = s.transfer_held(P1).unwrap();
    assert_eq!(back.frame, Frame::Own);
    assert_eq!(s.locks.owner(ObjectId(0)), Some(P1));
}

#[derive(Debug, Clone)]
enum Op {
    Aim(usize, u32),
    Grab(usize, u32),
    Release(usize),
    Teleport(usize, f64, f64),
    Shuttle(usize),
    Look(usize, f64, f64),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0usize..2, 0u32..24).prop_map(|(p, o)| Op::Aim(p, o)),
        (0usize..2, 0u32..24).prop_map(|(p, o)| Op::Grab(p, o)),
        (0usize..2).prop_map(Op::Release),
        (0usize..2, -1.0..7.0f64, -1.0..7.0f64).prop_map(|(p, x, z)| Op::Teleport(p, x, z)),
        (0usize..2).prop_map(Op::Shuttle),
        (0usize..2, 0.0..360.0f64, -60.0..60.0f64).prop_map(|(p, y, x)| Op::Look(p, y, x)),
    ]
}

fn player(i: usize) -> PlayerId {
    PlayerId::BOTH[i]
}

proptest! {
    #[test]
    fn session_invariants_under_random_ops(seed in any::<u64>(), ops in proptest::collection::vec(op(), 1..120)) {
        let mut s = Session::new(Variant::TeamPortal, generate_task(Complexity::Simple, seed).unwrap());
        for p in PlayerId::BOTH {
            let a = ViewWindowState::new(p, s.variant, s.player(p.partner()).head, s.lens).unwrap().anchor();
            s.player_mut(p).window = Some(a);
        }
        for (tick, op) in ops.into_iter().enumerate() {
            let tick = tick as u64;
            let placed_before: Vec<_> = s.world.cubes.iter().filter(|c| c.placed_in.is_some()).cloned().collect();
            let locks_before = s.locks.clone();
            let world_before = s.world.clone();
            match op {
                Op::Aim(p, o) => {
                    let at = s.world.cubes[o as usize].position;
                    let c = s.player(player(p)).controller.position;
                    if let Some(ori) = Orientation::looking_along(at - c) {
                        s.player_mut(player(p)).controller.orientation = ori;
                    }
                }
                Op::Grab(p, o) => {
                    let r = s.grab(player(p), ObjectId(o), tick);
                    if let Err(SessionError::LockDenied(owner)) = r {
                        prop_assert_eq!(owner, player(p).partner());
                    }
                }
                Op::Release(p) => { let _ = s.release(player(p)); }
                Op::Teleport(p, x, z) => {
                    let _ = s.teleport(player(p), Vec3::new(x, 0.0, z));
                    prop_assert_eq!(&s.locks, &locks_before);
                    prop_assert_eq!(&s.world, &world_before);
                }
                Op::Shuttle(p) => { let _ = s.shuttle_toggle(player(p)); }
                Op::Look(p, y, x) => {
                    s.player_mut(player(p)).controller.orientation = Orientation::new(y, x);
                }
            }
            for p in PlayerId::BOTH {
                s.follow_held(p);
            }

            // Exclusivity: one owner per object, and every holder owns its lock.
            let held: Vec<_> = PlayerId::BOTH.iter().filter_map(|p| s.player(*p).held.map(|h| (*p, h.object))).collect();
            if held.len() == 2 {
                prop_assert_ne!(held[0].1, held[1].1);
            }
            for (p, o) in &held {
                prop_assert_eq!(s.locks.owner(*o), Some(*p));
            }
            prop_assert_eq!(s.locks.len(), held.len());

            // Placed cubes never move or leave their slot.
            for c in placed_before {
                prop_assert_eq!(&s.world.cubes[c.id.index()], &c);
            }
            for p in PlayerId::BOTH {
                let head = s.player(p).head.position;
                prop_assert!(s.world.room.floor_contains(head.x, head.z));
            }
        }
    }

    #[test]
    fn lock_liveness(o in 0u32..96, first in 0usize..2, t in 0u64..1000) {
        let mut table = OwnershipTable::new();
        let a = player(first);
        prop_assert_eq!(table.try_acquire(ObjectId(o), a, t), Acquire::Granted);
        prop_assert!(table.release(ObjectId(o), a));
        prop_assert_eq!(table.try_acquire(ObjectId(o), a.partner(), t + 1), Acquire::Granted);
    }

    #[test]
    fn transfer_flips_frame_and_keeps_lock(yaw in 0.0..360.0f64, pitch in -40.0..40.0f64, flips in 1usize..6) {
        let mut s = staged(Variant::TeamPortalPlus);
        let c = s.player(P1).controller.position;
        let at = c + Vec3::new(0.0, 0.0, 0.9);
        put(&mut s, 0, at);
        aim(&mut s, P1, at);
        s.grab(P1, ObjectId(0), 0).unwrap();
        s.player_mut(P1).controller.orientation = Orientation::new(yaw, pitch);
        let mut frame = Frame::Own;
        for _ in 0..flips {
            let t = s.transfer_held(P1).unwrap();
            prop_assert_eq!(t.frame, frame.flipped());
            frame = t.frame;
            if frame == Frame::Window {
                let camera = s.player(P1).window.unwrap().camera;
                prop_assert!(camera.contains(t.position));
            }
            prop_assert_eq!(s.locks.owner(ObjectId(0)), Some(P1));
        }
    }
}
