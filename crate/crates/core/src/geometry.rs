//! Deterministic 3D math for head and controller poses, picking rays, view
//! frustums, window projection and pose interpolation.
//!
//! Conventions: meters and degrees throughout, `y` is up and the floor is the
//! x-z plane. A yaw of 0° looks down +z, a yaw of 90° looks down +x and a
//! positive pitch looks up. Roll is always zero.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("direction vector has zero or non-finite length")]
    DegenerateDirection,
    #[error("invalid frustum: {0}")]
    InvalidFrustum(&'static str),
    #[error("box half extents must be strictly positive and finite")]
    InvalidExtents,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const UP: Vec3 = Vec3::new(0.0, 1.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn length_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn length(self) -> f64 {
        self.length_squared().sqrt()
    }

    /// Unit vector in the same direction, or `None` for a zero/non-finite vector.
    pub fn normalized(self) -> Option<Vec3> {
        let len = self.length();
        if len > 0.0 && len.is_finite() {
            Some(self / len)
        } else {
            None
        }
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).length()
    }

    /// Distance in the floor (x-z) plane, ignoring height.
    pub fn planar_distance(self, other: Vec3) -> f64 {
        (self.x - other.x).hypot(self.z - other.z)
    }

    pub fn lerp(self, other: Vec3, t: f64) -> Vec3 {
        self + (other - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn abs(self) -> Vec3 {
        Vec3::new(self.x.abs(), self.y.abs(), self.z.abs())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, rhs: Vec3) {
        *self = *self + rhs;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        Vec3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, rhs: f64) -> Vec3 {
        Vec3::new(self.x / rhs, self.y / rhs, self.z / rhs)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

fn wrap_yaw(yaw: f64) -> f64 {
    let w = yaw.rem_euclid(360.0);
    // rem_euclid rounds tiny negatives up to exactly 360; `+ 0.0` folds -0.0.
    if w >= 360.0 {
        0.0
    } else {
        w + 0.0
    }
}

/// Head or controller heading. Yaw is kept in `[0, 360)`, pitch in `[-90, 90]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawOrientation")]
pub struct Orientation {
    yaw: f64,
    pitch: f64,
}

#[derive(Deserialize)]
struct RawOrientation {
    yaw: f64,
    pitch: f64,
}

impl From<RawOrientation> for Orientation {
    fn from(raw: RawOrientation) -> Self {
        Orientation::new(raw.yaw, raw.pitch)
    }
}

impl Default for Orientation {
    fn default() -> Self {
        Orientation { yaw: 0.0, pitch: 0.0 }
    }
}

impl Orientation {
    /// Builds a normalized orientation: yaw wraps, pitch clamps.
    pub fn new(yaw: f64, pitch: f64) -> Self {
        debug_assert!(yaw.is_finite() && pitch.is_finite());
        Orientation {
            yaw: wrap_yaw(yaw),
            pitch: pitch.clamp(-90.0, 90.0) + 0.0,
        }
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    /// The orientation whose forward vector is `dir`. Yaw is 0 when looking
    /// straight up or down.
    pub fn looking_along(dir: Vec3) -> Option<Self> {
        let d = dir.normalized()?;
        let yaw = d.x.atan2(d.z).to_degrees();
        let pitch = d.y.clamp(-1.0, 1.0).asin().to_degrees();
        Some(Orientation::new(yaw, pitch))
    }

    pub fn forward(&self) -> Vec3 {
        direction_from(*self)
    }

    /// Horizontal unit vector to the right of the forward direction.
    pub fn right(&self) -> Vec3 {
        let (sy, cy) = self.yaw.to_radians().sin_cos();
        Vec3::new(cy, 0.0, -sy)
    }

    /// Unit vector completing the (right, up, forward) basis.
    pub fn up(&self) -> Vec3 {
        let (sy, cy) = self.yaw.to_radians().sin_cos();
        let (sp, cp) = self.pitch.to_radians().sin_cos();
        Vec3::new(-sp * sy, cp, -sp * cy)
    }
}

/// Unit forward vector of an orientation; yaw 0, pitch 0 maps to +z.
pub fn direction_from(orientation: Orientation) -> Vec3 {
    let (sy, cy) = orientation.yaw.to_radians().sin_cos();
    let (sp, cp) = orientation.pitch.to_radians().sin_cos();
    Vec3::new(cp * sy, sp, cp * cy)
}

/// Angle in degrees, `[0, 180]`, between the forward vectors of `a` and `b`.
pub fn angular_difference(a: Orientation, b: Orientation) -> f64 {
    let fa = direction_from(a);
    let fb = direction_from(b);
    // atan2 form of the clamped-dot angle; exact zero for identical vectors.
    let cos = fa.dot(fb).clamp(-1.0, 1.0);
    let sin = fa.cross(fb).length();
    sin.atan2(cos).to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Orientation,
}

impl Pose {
    pub fn new(position: Vec3, orientation: Orientation) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn forward(&self) -> Vec3 {
        self.orientation.forward()
    }

    pub fn ray(&self) -> Ray {
        Ray {
            origin: self.position,
            direction: self.forward(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite()
    }
}

/// Linear position blend and shortest-arc blend of the viewing direction.
///
/// The direction is interpolated along the great circle between the two
/// forward vectors, so the swept angle grows linearly with `t`. Antipodal
/// directions fall back to a shortest-arc yaw blend with linear pitch.
pub fn interpolate_pose(from: Pose, to: Pose, t: f64) -> Pose {
    if t <= 0.0 {
        return from;
    }
    if t >= 1.0 {
        return to;
    }
    let position = from.position.lerp(to.position, t);
    let fa = from.forward();
    let fb = to.forward();
    let theta = fa.cross(fb).length().atan2(fa.dot(fb).clamp(-1.0, 1.0));
    let orientation = if theta < 1e-12 {
        from.orientation
    } else if std::f64::consts::PI - theta < 1e-9 {
        let dyaw = (to.orientation.yaw - from.orientation.yaw + 540.0).rem_euclid(360.0) - 180.0;
        Orientation::new(
            from.orientation.yaw + dyaw * t,
            from.orientation.pitch + (to.orientation.pitch - from.orientation.pitch) * t,
        )
    } else {
        let s = theta.sin();
        let dir = fa * (((1.0 - t) * theta).sin() / s) + fb * ((t * theta).sin() / s);
        Orientation::looking_along(dir).unwrap_or(from.orientation)
    };
    Pose {
        position,
        orientation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub origin: Vec3,
    direction: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self, GeometryError> {
        let direction = direction
            .normalized()
            .ok_or(GeometryError::DegenerateDirection)?;
        Ok(Ray { origin, direction })
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub center: Vec3,
    half_extents: Vec3,
}

impl Aabb {
    pub fn new(center: Vec3, half_extents: Vec3) -> Result<Self, GeometryError> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(half_extents.x) && ok(half_extents.y) && ok(half_extents.z)) {
            return Err(GeometryError::InvalidExtents);
        }
        Ok(Aabb {
            center,
            half_extents,
        })
    }

    /// Axis-aligned cube of the given side length.
    pub fn cube(center: Vec3, side: f64) -> Result<Self, GeometryError> {
        Aabb::new(center, Vec3::new(side / 2.0, side / 2.0, side / 2.0))
    }

    pub fn half_extents(&self) -> Vec3 {
        self.half_extents
    }

    pub fn min(&self) -> Vec3 {
        self.center - self.half_extents
    }

    pub fn max(&self) -> Vec3 {
        self.center + self.half_extents
    }

    /// Euclidean distance from `p` to the solid box (0 inside).
    pub fn distance_to(&self, p: Vec3) -> f64 {
        let d = (p - self.center).abs() - self.half_extents;
        Vec3::new(d.x.max(0.0), d.y.max(0.0), d.z.max(0.0)).length()
    }

    pub fn expanded(&self, margin: f64) -> Result<Aabb, GeometryError> {
        Aabb::new(
            self.center,
            self.half_extents + Vec3::new(margin, margin, margin),
        )
    }
}

/// Smallest `t >= 0` at which `ray` meets the surface of `aabb`.
///
/// A ray starting inside the box reports its exit distance.
pub fn ray_aabb_intersect(ray: &Ray, aabb: &Aabb) -> Option<f64> {
    let lo = aabb.min();
    let hi = aabb.max();
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for (o, d, l, h) in [
        (ray.origin.x, ray.direction.x, lo.x, hi.x),
        (ray.origin.y, ray.direction.y, lo.y, hi.y),
        (ray.origin.z, ray.direction.z, lo.z, hi.z),
    ] {
        if d == 0.0 {
            if o < l || o > h {
                return None;
            }
            continue;
        }
        let (t0, t1) = {
            let a = (l - o) / d;
            let b = (h - o) / d;
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        };
        t_near = t_near.max(t0);
        t_far = t_far.min(t1);
        if t_near > t_far {
            return None;
        }
    }
    if t_near >= 0.0 {
        Some(t_near)
    } else if t_far >= 0.0 {
        Some(t_far)
    } else {
        None
    }
}

/// Symmetric perspective view volume anchored at a head pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frustum {
    pub apex: Pose,
    horizontal_fov: f64,
    vertical_fov: f64,
    near: f64,
    far: f64,
}

/// Field-of-view and clip settings shared by every camera of a session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lens {
    pub horizontal_fov: f64,
    pub vertical_fov: f64,
    pub near: f64,
    pub far: f64,
}

impl Default for Lens {
    fn default() -> Self {
        Lens {
            horizontal_fov: 100.0,
            vertical_fov: 90.0,
            near: 0.05,
            far: 20.0,
        }
    }
}

impl Lens {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let fov_ok = |f: f64| f > 0.0 && f < 180.0;
        if !fov_ok(self.horizontal_fov) || !fov_ok(self.vertical_fov) {
            return Err(GeometryError::InvalidFrustum("fov must lie in (0, 180)"));
        }
        if !(self.near > 0.0 && self.far > self.near && self.far.is_finite()) {
            return Err(GeometryError::InvalidFrustum("need 0 < near < far"));
        }
        Ok(())
    }

    pub fn frustum(&self, apex: Pose) -> Frustum {
        Frustum {
            apex,
            horizontal_fov: self.horizontal_fov,
            vertical_fov: self.vertical_fov,
            near: self.near,
            far: self.far,
        }
    }
}

impl Frustum {
    pub fn new(
        apex: Pose,
        horizontal_fov: f64,
        vertical_fov: f64,
        near: f64,
        far: f64,
    ) -> Result<Self, GeometryError> {
        let lens = Lens {
            horizontal_fov,
            vertical_fov,
            near,
            far,
        };
        lens.validate()?;
        Ok(lens.frustum(apex))
    }

    pub fn with_default_lens(apex: Pose) -> Self {
        Lens::default().frustum(apex)
    }

    pub fn lens(&self) -> Lens {
        Lens {
            horizontal_fov: self.horizontal_fov,
            vertical_fov: self.vertical_fov,
            near: self.near,
            far: self.far,
        }
    }

    pub fn horizontal_fov(&self) -> f64 {
        self.horizontal_fov
    }

    pub fn vertical_fov(&self) -> f64 {
        self.vertical_fov
    }

    pub fn near(&self) -> f64 {
        self.near
    }

    pub fn far(&self) -> f64 {
        self.far
    }

    /// Camera-space coordinates `(right, up, depth)` of a world point.
    pub fn to_camera(&self, point: Vec3) -> (f64, f64, f64) {
        let o = self.apex.orientation;
        let rel = point - self.apex.position;
        (rel.dot(o.right()), rel.dot(o.up()), rel.dot(o.forward()))
    }

    fn half_tangents(&self) -> (f64, f64) {
        (
            (self.horizontal_fov / 2.0).to_radians().tan(),
            (self.vertical_fov / 2.0).to_radians().tan(),
        )
    }

    /// True iff `point` lies within the angular bounds and the depth range.
    pub fn contains(&self, point: Vec3) -> bool {
        let (x, y, depth) = self.to_camera(point);
        if depth < self.near || depth > self.far {
            return false;
        }
        let (th, tv) = self.half_tangents();
        x.abs() <= depth * th && y.abs() <= depth * tv
    }

    /// Normalized window coordinates of a contained point; the view center
    /// maps to `(0.5, 0.5)` and `v` grows upward.
    pub fn project(&self, point: Vec3) -> Option<(f64, f64)> {
        const EDGE_TOLERANCE: f64 = 1e-9;
        let (x, y, depth) = self.to_camera(point);
        if depth < self.near || depth > self.far {
            return None;
        }
        let (th, tv) = self.half_tangents();
        let u = 0.5 + 0.5 * x / (depth * th);
        let v = 0.5 + 0.5 * y / (depth * tv);
        let inside = |c: f64| (-EDGE_TOLERANCE..=1.0 + EDGE_TOLERANCE).contains(&c);
        if inside(u) && inside(v) {
            Some((u.clamp(0.0, 1.0), v.clamp(0.0, 1.0)))
        } else {
            None
        }
    }

    /// Ray from the apex through window point `(u, v)`.
    pub fn unproject(&self, u: f64, v: f64) -> Ray {
        let o = self.apex.orientation;
        let (th, tv) = self.half_tangents();
        let dir = o.forward() + o.right() * ((2.0 * u - 1.0) * th) + o.up() * ((2.0 * v - 1.0) * tv);
        Ray {
            origin: self.apex.position,
            direction: dir.normalized().expect("forward component keeps the direction nonzero"),
        }
    }
}

pub fn frustum_contains(frustum: &Frustum, point: Vec3) -> bool {
    frustum.contains(point)
}

pub fn project_to_window(frustum: &Frustum, point: Vec3) -> Option<(f64, f64)> {
    frustum.project(point)
}

pub fn unproject_from_window(frustum: &Frustum, u: f64, v: f64) -> Ray {
    frustum.unproject(u.clamp(0.0, 1.0), v.clamp(0.0, 1.0))
}

/// A flat rectangle floating in space, facing a viewer; the view window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub center: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    pub half_width: f64,
    pub half_height: f64,
}

impl Panel {
    /// Panel centered `distance` meters along the eye's view direction,
    /// spanning `width_deg` × `height_deg` of the eye's field of view.
    pub fn facing(eye: &Pose, distance: f64, width_deg: f64, height_deg: f64) -> Panel {
        let o = eye.orientation;
        Panel {
            center: eye.position + o.forward() * distance,
            right: o.right(),
            up: o.up(),
            half_width: distance * (width_deg / 2.0).to_radians().tan(),
            half_height: distance * (height_deg / 2.0).to_radians().tan(),
        }
    }

    /// The same panel moved down by one panel height.
    pub fn below(&self) -> Panel {
        Panel {
            center: self.center - self.up * (2.0 * self.half_height),
            ..*self
        }
    }

    /// Normal pointing away from the viewer.
    pub fn normal(&self) -> Vec3 {
        self.right.cross(self.up)
    }

    pub fn point_at(&self, u: f64, v: f64) -> Vec3 {
        self.center
            + self.right * ((2.0 * u - 1.0) * self.half_width)
            + self.up * ((2.0 * v - 1.0) * self.half_height)
    }

    fn uv_of(&self, p: Vec3) -> (f64, f64) {
        let local = p - self.center;
        (
            0.5 + local.dot(self.right) / (2.0 * self.half_width),
            0.5 + local.dot(self.up) / (2.0 * self.half_height),
        )
    }

    /// Window coordinates where `ray` crosses the panel, if it does.
    pub fn intersect(&self, ray: &Ray) -> Option<(f64, f64)> {
        let n = self.normal();
        let denom = ray.direction().dot(n);
        if denom.abs() < 1e-12 {
            return None;
        }
        let t = (self.center - ray.origin).dot(n) / denom;
        if t < 0.0 {
            return None;
        }
        let (u, v) = self.uv_of(ray.at(t));
        ((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v)).then_some((u, v))
    }

    /// Window coordinates of the panel point closest to `ray`, clamped to the
    /// panel's edges.
    pub fn nearest_uv(&self, ray: &Ray) -> (f64, f64) {
        let n = self.normal();
        let denom = ray.direction().dot(n);
        let t_plane = if denom.abs() < 1e-12 {
            -1.0
        } else {
            (self.center - ray.origin).dot(n) / denom
        };
        let p = if t_plane >= 0.0 {
            ray.at(t_plane)
        } else {
            // Closest approach of the ray to the panel center.
            let t = (self.center - ray.origin).dot(ray.direction()).max(0.0);
            ray.at(t)
        };
        let (u, v) = self.uv_of(p);
        (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(yaw: f64, pitch: f64) -> Orientation {
        Orientation::new(yaw, pitch)
    }

    #[test]
    fn forward_axes() {
        let f = direction_from(o(0.0, 0.0));
        assert_eq!(f, Vec3::new(0.0, 0.0, 1.0));
        let f = direction_from(o(90.0, 0.0));
        assert!((f - Vec3::new(1.0, 0.0, 0.0)).length() < 1e-12);
    }

    #[test]
    fn forward_matches_rotation_matrices() {
        // R_y(yaw) · R_x(-pitch) · (0, 0, 1), written out as explicit matrices.
        let (yaw, pitch) = (37f64.to_radians(), (-12f64).to_radians());
        let rx = [
            [1.0, 0.0, 0.0],
            [0.0, pitch.cos(), pitch.sin()],
            [0.0, -pitch.sin(), pitch.cos()],
        ];
        let ry = [
            [yaw.cos(), 0.0, yaw.sin()],
            [0.0, 1.0, 0.0],
            [-yaw.sin(), 0.0, yaw.cos()],
        ];
        let apply = |m: [[f64; 3]; 3], v: [f64; 3]| {
            [
                m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
                m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
                m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
            ]
        };
        let e = apply(ry, apply(rx, [0.0, 0.0, 1.0]));
        let f = direction_from(o(37.0, -12.0));
        assert!((f - Vec3::new(e[0], e[1], e[2])).length() < 1e-9);
    }

    #[test]
    fn normalization_is_idempotent() {
        for (y, p) in [(-10.0, 100.0), (725.0, -95.0), (-1e-18, 0.0), (360.0, 90.0)] {
            let a = o(y, p);
            let b = o(a.yaw(), a.pitch());
            assert_eq!(a, b);
            assert!((0.0..360.0).contains(&a.yaw()));
            assert!((-90.0..=90.0).contains(&a.pitch()));
        }
    }

    #[test]
    fn angular_difference_basics() {
        assert_eq!(angular_difference(o(12.0, 3.0), o(12.0, 3.0)), 0.0);
        assert!((angular_difference(o(10.0, 0.0), o(190.0, 0.0)) - 180.0).abs() < 1e-9);
        assert!((angular_difference(o(0.0, 0.0), o(90.0, 0.0)) - 90.0).abs() < 1e-9);
    }

    #[test]
    fn ray_box_axis_aligned() {
        let b = Aabb::cube(Vec3::new(0.0, 0.0, 5.0), 0.1).unwrap();
        let r = Ray::new(Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert!((ray_aabb_intersect(&r, &b).unwrap() - 4.95).abs() < 1e-12);
        let back = Ray::new(Vec3::ZERO, Vec3::new(0.0, 0.0, -1.0)).unwrap();
        assert_eq!(ray_aabb_intersect(&back, &b), None);
    }

    #[test]
    fn ray_from_inside_reports_exit() {
        let b = Aabb::cube(Vec3::ZERO, 1.0).unwrap();
        let r = Ray::new(Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert!((ray_aabb_intersect(&r, &b).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(Aabb::new(Vec3::ZERO, Vec3::new(0.1, 0.0, 0.1)).is_err());
        assert!(Ray::new(Vec3::ZERO, Vec3::ZERO).is_err());
        let p = Pose::default();
        assert!(Frustum::new(p, 180.0, 90.0, 0.05, 20.0).is_err());
        assert!(Frustum::new(p, 100.0, 90.0, 2.0, 1.0).is_err());
        assert!(Frustum::new(p, 100.0, 0.0, 0.05, 20.0).is_err());
    }

    #[test]
    fn frustum_on_axis_and_behind() {
        let f = Frustum::with_default_lens(Pose::new(Vec3::new(1.0, 1.5, 1.0), o(30.0, 0.0)));
        let ahead = f.apex.position + f.apex.forward() * 2.0;
        assert!(f.contains(ahead));
        let behind = f.apex.position - f.apex.forward() * 2.0;
        assert!(!f.contains(behind));
        let (u, v) = f.project(ahead).unwrap();
        assert!((u - 0.5).abs() < 1e-12 && (v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn left_boundary_projects_to_zero() {
        let f = Frustum::with_default_lens(Pose::new(Vec3::ZERO, o(0.0, 0.0)));
        let half = 50f64.to_radians();
        // Looking down +z with right = +x: the left edge has negative x.
        let p = Vec3::new(-half.tan() * 3.0, 0.0, 3.0);
        let (u, v) = f.project(p).unwrap();
        assert!(u.abs() < 1e-6);
        assert!((v - 0.5).abs() < 1e-9);
        let r = f.unproject(0.0, 0.5);
        let angle = r.direction().x.atan2(r.direction().z).to_degrees();
        assert!((angle + 50.0).abs() < 1e-9);
        let c = f.unproject(0.5, 0.5);
        assert!((c.direction() - f.apex.forward()).length() < 1e-12);
    }

    #[test]
    fn interpolation_endpoints_and_short_arc() {
        let a = Pose::new(Vec3::new(0.0, 1.0, 0.0), o(350.0, 0.0));
        let b = Pose::new(Vec3::new(2.0, 1.0, 0.0), o(10.0, 0.0));
        assert_eq!(interpolate_pose(a, b, 0.0), a);
        assert_eq!(interpolate_pose(a, b, 1.0), b);
        let mid = interpolate_pose(a, b, 0.5);
        let yaw = mid.orientation.yaw();
        assert!(yaw.min(360.0 - yaw) < 1e-9, "yaw {yaw}");
        assert!((mid.position.x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn antipodal_interpolation_is_defined() {
        let a = Pose::new(Vec3::ZERO, o(0.0, 0.0));
        let b = Pose::new(Vec3::ZERO, o(180.0, 0.0));
        let mid = interpolate_pose(a, b, 0.5);
        assert!((angular_difference(mid.orientation, a.orientation) - 90.0).abs() < 1e-9);
    }

    #[test]
    fn panel_round_trip() {
        let eye = Pose::new(Vec3::new(3.0, 1.6, 3.0), o(45.0, -10.0));
        let panel = Panel::facing(&eye, 1.0, 40.0, 30.0);
        let target = panel.point_at(0.2, 0.7);
        let ray = Ray::new(eye.position, target - eye.position).unwrap();
        let (u, v) = panel.intersect(&ray).unwrap();
        assert!((u - 0.2).abs() < 1e-9 && (v - 0.7).abs() < 1e-9);
        let away = Ray::new(eye.position, -eye.forward()).unwrap();
        assert_eq!(panel.intersect(&away), None);
        let (u, v) = panel.nearest_uv(&away);
        assert!((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v));
        let low = panel.below();
        assert!((low.center.distance(panel.center) - 2.0 * panel.half_height).abs() < 1e-12);
    }
}
