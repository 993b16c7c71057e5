use portalsim::geometry::*;
use proptest::prelude::*;

fn yaw_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

fn spherical(yaw: f64, pitch: f64) -> (f64, f64, f64) {
    // Polar angle from +y, azimuth measured from +z toward +x.
    let theta = (90.0 - pitch).to_radians();
    let phi = yaw.to_radians();
    (theta.sin() * phi.sin(), theta.cos(), theta.sin() * phi.cos())
}

#[test]
fn direction_examples() {
    let f = direction_from(Orientation::new(0.0, 0.0));
    assert_eq!((f.x, f.y, f.z), (0.0, 0.0, 1.0));
    let f = direction_from(Orientation::new(90.0, 0.0));
    assert!((f.x - 1.0).abs() < 1e-15 && f.y.abs() < 1e-15 && f.z.abs() < 1e-15);
    let f = direction_from(Orientation::new(37.0, -12.0));
    let (x, y, z) = spherical(37.0, -12.0);
    assert!((f.x - x).abs() < 1e-9 && (f.y - y).abs() < 1e-9 && (f.z - z).abs() < 1e-9);
}

#[test]
fn angular_difference_examples() {
    let a = Orientation::new(12.0, 30.0);
    assert_eq!(angular_difference(a, a), 0.0);
    let d = angular_difference(Orientation::new(10.0, 0.0), Orientation::new(190.0, 0.0));
    assert!((d - 180.0).abs() < 1e-9);
}

#[test]
fn ray_box_examples() {
    let b = Aabb::cube(Vec3::new(0.0, 0.0, 5.0), 0.1).unwrap();
    let r = Ray::new(Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0)).unwrap();
    let t = ray_aabb_intersect(&r, &b).unwrap();
    assert!((t - 4.95).abs() < 1e-12);
    let back = Ray::new(Vec3::ZERO, Vec3::new(0.0, 0.0, -1.0)).unwrap();
    assert_eq!(ray_aabb_intersect(&back, &b), None);
}

fn inside(b: &Aabb, p: Vec3) -> bool {
    let (lo, hi) = (b.min(), b.max());
    (lo.x..=hi.x).contains(&p.x) && (lo.y..=hi.y).contains(&p.y) && (lo.z..=hi.z).contains(&p.z)
}

#[test]
fn oblique_ray_matches_marching() {
    let b = Aabb::new(Vec3::new(1.2, 0.7, 3.1), Vec3::new(0.2, 0.3, 0.15)).unwrap();
    let origin = Vec3::new(-0.5, -0.4, 0.2);
    let target = Vec3::new(1.25, 0.8, 3.05);
    let r = Ray::new(origin, target - origin).unwrap();
    let t = ray_aabb_intersect(&r, &b).unwrap();
    let max_t = 6.0;
    let steps = 1_000_000;
    let dt = max_t / steps as f64;
    let marched = (0..=steps).map(|i| i as f64 * dt).find(|&s| inside(&b, r.at(s))).unwrap();
    assert!((t - marched).abs() < 1e-4, "{t} vs {marched}");
}

#[test]
fn frustum_examples() {
    let apex = Pose::new(Vec3::new(1.0, 1.6, 1.0), Orientation::new(30.0, 0.0));
    let f = Frustum::with_default_lens(apex);
    let ahead = apex.position + apex.forward() * 2.0;
    assert!(frustum_contains(&f, ahead));
    assert!(!frustum_contains(&f, apex.position - apex.forward() * 2.0));
    let (u, v) = project_to_window(&f, ahead).unwrap();
    assert!((u - 0.5).abs() < 1e-12 && (v - 0.5).abs() < 1e-12);

    // Left boundary at mid-height, 3 m deep.
    let left = apex.position + apex.forward() * 3.0 - apex.orientation.right() * (3.0 * 50f64.to_radians().tan());
    let (u, v) = project_to_window(&f, left).unwrap();
    assert!(u.abs() < 1e-6 && (v - 0.5).abs() < 1e-9);

    let c = unproject_from_window(&f, 0.5, 0.5);
    assert!((c.direction() - apex.forward()).length() < 1e-12);
    let edge = unproject_from_window(&f, 0.0, 0.5);
    let angle = angular_difference(Orientation::looking_along(edge.direction()).unwrap(), apex.orientation);
    assert!((angle - 50.0).abs() < 1e-9);
}

#[test]
fn frustum_edge_matches_angle_oracle() {
    let apex = Pose::new(Vec3::ZERO, Orientation::new(0.0, 0.0));
    let f = Frustum::with_default_lens(apex);
    for deg in [49.9f64, 49.999, 50.001, 50.1] {
        let p = Vec3::new(deg.to_radians().tan() * 2.0, 0.0, 2.0);
        let oracle = p.x.atan2(p.z).to_degrees() <= 50.0;
        assert_eq!(f.contains(p), oracle, "{deg}");
    }
    for deg in [44.9f64, 45.1] {
        let p = Vec3::new(0.0, deg.to_radians().tan() * 2.0, 2.0);
        assert_eq!(f.contains(p), deg <= 45.0, "{deg}");
    }
}

#[test]
fn interpolation_examples() {
    let a = Pose::new(Vec3::new(0.0, 1.0, 0.0), Orientation::new(350.0, 0.0));
    let b = Pose::new(Vec3::new(2.0, 1.0, 4.0), Orientation::new(10.0, 0.0));
    assert_eq!(interpolate_pose(a, b, 0.0), a);
    assert_eq!(interpolate_pose(a, b, 1.0), b);
    let mid = interpolate_pose(a, b, 0.5);
    assert!(yaw_distance(mid.orientation.yaw(), 0.0) < 1e-9);
    // The long way round would land on yaw 180.
    assert!(yaw_distance(mid.orientation.yaw(), 180.0) > 179.0);
    assert!((mid.position - Vec3::new(1.0, 1.0, 2.0)).length() < 1e-12);
}

fn orientation() -> impl Strategy<Value = Orientation> {
    (0.0..360.0f64, -89.0..89.0f64).prop_map(|(y, p)| Orientation::new(y, p))
}

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #[test]
    fn direction_is_unit(o in orientation()) {
        prop_assert!((direction_from(o).length() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn normalization_is_idempotent(y in -1000.0..1000.0f64, p in -200.0..200.0f64) {
        let o = Orientation::new(y, p);
        prop_assert_eq!(Orientation::new(o.yaw(), o.pitch()), o);
        prop_assert!((0.0..360.0).contains(&o.yaw()));
        prop_assert!((-90.0..=90.0).contains(&o.pitch()));
    }

    #[test]
    fn angular_difference_oracle_and_metric(a in orientation(), b in orientation(), c in orientation()) {
        let dab = angular_difference(a, b);
        let oracle = direction_from(a).dot(direction_from(b)).clamp(-1.0, 1.0).acos().to_degrees();
        prop_assert!((dab - oracle).abs() < 1e-7);
        prop_assert!((dab - angular_difference(b, a)).abs() < 1e-12);
        prop_assert!((0.0..=180.0).contains(&dab));
        let dbc = angular_difference(b, c);
        let dac = angular_difference(a, c);
        prop_assert!(dac <= dab + dbc + 1e-6);
    }

    #[test]
    fn ray_hits_lie_on_surface(o in vec3(5.0), c in vec3(3.0), h in vec3(0.5), aim in vec3(0.4)) {
        let h = Vec3::new(h.x.abs() + 0.01, h.y.abs() + 0.01, h.z.abs() + 0.01);
        let b = Aabb::new(c, h).unwrap();
        prop_assume!(!inside(&b, o));
        let Ok(r) = Ray::new(o, c + aim - o) else { return Ok(()) };
        if let Some(t) = ray_aabb_intersect(&r, &b) {
            prop_assert!(t >= 0.0);
            let p = r.at(t);
            let d = p - c;
            let face = (d.x.abs() - h.x).abs().min((d.y.abs() - h.y).abs()).min((d.z.abs() - h.z).abs());
            prop_assert!(face < 1e-6);
            prop_assert!(d.x.abs() <= h.x + 1e-6 && d.y.abs() <= h.y + 1e-6 && d.z.abs() <= h.z + 1e-6);
        }
    }

    #[test]
    fn project_unproject_round_trip(apex in vec3(3.0), o in orientation(), u in 0.0..1.0f64, v in 0.0..1.0f64, depth in 0.1..15.0f64) {
        let f = Frustum::with_default_lens(Pose::new(apex, o));
        let ray = unproject_from_window(&f, u, v);
        let (_, _, unit_depth) = f.to_camera(ray.at(1.0));
        let p = ray.at(depth / unit_depth);
        prop_assume!(f.contains(p));
        let (pu, pv) = project_to_window(&f, p).unwrap();
        prop_assert!((pu - u).abs() < 1e-7 && (pv - v).abs() < 1e-7);
        let back = unproject_from_window(&f, pu, pv);
        let along = (p - back.origin).dot(back.direction());
        let miss = (p - back.at(along)).length();
        prop_assert!(miss < 1e-6);
    }

    #[test]
    fn interpolation_is_continuous(a in vec3(3.0), b in vec3(3.0), oa in orientation(), ob in orientation(), t in 0.0..0.9999f64) {
        let pa = Pose::new(a, oa);
        let pb = Pose::new(b, ob);
        prop_assume!(angular_difference(oa, ob) < 179.0);
        let p0 = interpolate_pose(pa, pb, t);
        let p1 = interpolate_pose(pa, pb, t + 1e-4);
        prop_assert!(p0.position.distance(p1.position) < 1e-3);
        prop_assert!(angular_difference(p0.orientation, p1.orientation) < 0.05);
    }
}
