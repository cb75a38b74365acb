//! Vectors and rotations shared by every other module.
//!
//! Positions are meters in a right-handed, y-up world frame. Rotations are
//! unit quaternions internally and Euler angles in degrees at the JSON
//! boundary, using the Z-X-Y composition order common to game engines:
//! `R = Ry(y) · Rx(x) · Rz(z)`.

use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector3};

pub type Vec3 = Vector3<f64>;
pub type UnitVec3 = Unit<Vec3>;

/// Below this norm a vector is treated as zero when normalizing.
pub const NORM_EPS: f64 = 1e-12;

pub fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

pub fn is_finite(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Normalizes `v`, returning `None` for (near) zero or non-finite input.
pub fn try_unit(v: Vec3) -> Option<UnitVec3> {
    if !is_finite(&v) {
        return None;
    }
    Unit::try_new(v, NORM_EPS)
}

/// Any unit vector perpendicular to `v`.
pub fn any_perpendicular(v: &Vec3) -> UnitVec3 {
    let helper = if v.x.abs() <= v.y.abs() && v.x.abs() <= v.z.abs() {
        Vec3::x()
    } else if v.y.abs() <= v.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    Unit::new_normalize(v.cross(&helper))
}

/// Orthonormal pair spanning the plane with normal `n`.
pub fn plane_basis(n: &UnitVec3) -> (UnitVec3, UnitVec3) {
    let e1 = any_perpendicular(n);
    let e2 = Unit::new_normalize(n.cross(&e1));
    (e1, e2)
}

/// Angle between two directions in radians, in `[0, π]`.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    // atan2 form stays accurate near 0 and π where acos does not.
    a.cross(b).norm().atan2(a.dot(b))
}

/// A 3D rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(UnitQuaternion<f64>);

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation(UnitQuaternion::identity())
    }

    pub fn from_unit_quaternion(q: UnitQuaternion<f64>) -> Self {
        Rotation(q)
    }

    /// Builds a rotation from raw `(x, y, z, w)` components, normalizing.
    /// Returns `None` when the quaternion is zero or not finite.
    pub fn from_xyzw(x: f64, y: f64, z: f64, w: f64) -> Option<Self> {
        let q = Quaternion::new(w, x, y, z);
        if !q.coords.iter().all(|c| c.is_finite()) {
            return None;
        }
        UnitQuaternion::try_new(q, NORM_EPS).map(Rotation)
    }

    pub fn xyzw(&self) -> [f64; 4] {
        let q = self.0.quaternion();
        [q.i, q.j, q.k, q.w]
    }

    pub fn quaternion(&self) -> &UnitQuaternion<f64> {
        &self.0
    }

    pub fn from_axis_angle(axis: &UnitVec3, radians: f64) -> Self {
        Rotation(UnitQuaternion::from_axis_angle(axis, radians))
    }

    pub fn from_axis_angle_degrees(axis: &UnitVec3, degrees: f64) -> Self {
        Self::from_axis_angle(axis, degrees.to_radians())
    }

    /// Euler angles in degrees, applied z first, then x, then y.
    pub fn from_euler_degrees(e: [f64; 3]) -> Self {
        let qx = UnitQuaternion::from_axis_angle(&Vec3::x_axis(), e[0].to_radians());
        let qy = UnitQuaternion::from_axis_angle(&Vec3::y_axis(), e[1].to_radians());
        let qz = UnitQuaternion::from_axis_angle(&Vec3::z_axis(), e[2].to_radians());
        Rotation(qy * qx * qz)
    }

    /// Inverse of [`Rotation::from_euler_degrees`]. `x` lies in `[-90, 90]`,
    /// `y` and `z` in `[-180, 180]`. At gimbal lock `z` is reported as 0.
    pub fn to_euler_degrees(&self) -> [f64; 3] {
        let m = self.0.to_rotation_matrix();
        let m = m.matrix();
        let cos_x = m[(0, 2)].hypot(m[(2, 2)]);
        let x = (-m[(1, 2)]).atan2(cos_x);
        let (y, z) = if cos_x > 1e-9 {
            (m[(0, 2)].atan2(m[(2, 2)]), m[(1, 0)].atan2(m[(1, 1)]))
        } else {
            Self::locked_yaw(m)
        };
        [x.to_degrees(), y.to_degrees(), z.to_degrees()]
    }

    /// Yaw at gimbal lock with roll folded in (roll reported as zero).
    fn locked_yaw(m: &nalgebra::Matrix3<f64>) -> (f64, f64) {
        ((-m[(2, 0)]).atan2(m[(0, 0)]), 0.0)
    }

    /// Euler angles with the roll folded into yaw, as if at gimbal lock.
    pub(crate) fn to_euler_degrees_locked(self) -> [f64; 3] {
        let m = self.0.to_rotation_matrix();
        let m = m.matrix();
        let x = if m[(1, 2)] <= 0.0 { 90.0 } else { -90.0 };
        let (y, z) = Self::locked_yaw(m);
        [x, y.to_degrees(), z]
    }

    /// Shortest-arc rotation taking direction `from` onto direction `to`.
    ///
    /// Antiparallel inputs yield a half turn about an arbitrary perpendicular
    /// axis. Returns `None` when either input has zero length.
    pub fn between(from: &Vec3, to: &Vec3) -> Option<Self> {
        let a = try_unit(*from)?;
        let b = try_unit(*to)?;
        let d = a.dot(&b);
        if d < -1.0 + 1e-12 {
            let axis = any_perpendicular(&a);
            return Some(Self::from_axis_angle(&axis, std::f64::consts::PI));
        }
        let c = a.cross(&b);
        let q = Quaternion::new(1.0 + d, c.x, c.y, c.z);
        Some(Rotation(UnitQuaternion::new_normalize(q)))
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }

    pub fn inverse(&self) -> Rotation {
        Rotation(self.0.inverse())
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.0.transform_vector(v)
    }

    /// Rotation angle in radians, in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let w = self.0.quaternion().w.abs().min(1.0);
        let v = self.0.quaternion().imag().norm();
        2.0 * v.atan2(w)
    }

    /// Geodesic distance to `other` in radians: the smallest rotation that
    /// takes one orientation onto the other.
    pub fn angle_to(&self, other: &Rotation) -> f64 {
        self.inverse().compose(other).angle()
    }

    /// Local +z axis expressed in the world frame.
    pub fn forward(&self) -> Vec3 {
        self.rotate(&Vec3::z())
    }

    /// Local -y axis in the world frame: the facing direction of a palm joint.
    pub fn down(&self) -> Vec3 {
        self.rotate(&-Vec3::y())
    }

    /// The three local axes in the world frame, as columns x, y, z.
    pub fn axes(&self) -> [Vec3; 3] {
        [
            self.rotate(&Vec3::x()),
            self.rotate(&Vec3::y()),
            self.rotate(&Vec3::z()),
        ]
    }

    /// Spherical interpolation, `t` in `[0, 1]`.
    pub fn slerp(&self, other: &Rotation, t: f64) -> Rotation {
        Rotation(self.0.slerp(&other.0, t))
    }

    pub fn approx_eq(&self, other: &Rotation, tol_rad: f64) -> bool {
        self.angle_to(other) <= tol_rad
    }
}
