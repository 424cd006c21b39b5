//! Plücker spatial algebra, body coordinates, `[angular; linear]` ordering.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

pub type SpatialVec = Vector6<f64>;
pub type SpatialMat = Matrix6<f64>;

#[inline]
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

#[inline]
pub fn angular(v: &SpatialVec) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

#[inline]
pub fn linear(v: &SpatialVec) -> Vector3<f64> {
    Vector3::new(v[3], v[4], v[5])
}

#[inline]
pub fn spatial(ang: &Vector3<f64>, lin: &Vector3<f64>) -> SpatialVec {
    SpatialVec::new(ang.x, ang.y, ang.z, lin.x, lin.y, lin.z)
}

/// Motion transform into a frame rotated by `e` (new-from-old) whose origin
/// sits at `r` in old coordinates: `X = [E 0; -E r× E]`.
pub fn motion_transform(e: &Matrix3<f64>, r: &Vector3<f64>) -> SpatialMat {
    let mut x = SpatialMat::zeros();
    let erx = -e * skew(r);
    x.fixed_view_mut::<3, 3>(0, 0).copy_from(e);
    x.fixed_view_mut::<3, 3>(3, 3).copy_from(e);
    x.fixed_view_mut::<3, 3>(3, 0).copy_from(&erx);
    x
}

/// `v ×ₘ u`
#[inline]
pub fn cross_motion(v: &SpatialVec, u: &SpatialVec) -> SpatialVec {
    let (w, vl) = (angular(v), linear(v));
    let (uw, ul) = (angular(u), linear(u));
    spatial(&w.cross(&uw), &(w.cross(&ul) + vl.cross(&uw)))
}

/// `v ×f f`
#[inline]
pub fn cross_force(v: &SpatialVec, f: &SpatialVec) -> SpatialVec {
    let (w, vl) = (angular(v), linear(v));
    let (n, fl) = (angular(f), linear(f));
    spatial(&(w.cross(&n) + vl.cross(&fl)), &w.cross(&fl))
}

/// Spatial inertia about the frame origin of a body with mass `m`, CoM `c`
/// and rotational inertia `ic` about the CoM.
pub fn spatial_inertia(m: f64, c: &Vector3<f64>, ic: &Matrix3<f64>) -> SpatialMat {
    let cx = skew(c);
    let mut i = SpatialMat::zeros();
    i.fixed_view_mut::<3, 3>(0, 0).copy_from(&(ic + m * cx * cx.transpose()));
    i.fixed_view_mut::<3, 3>(0, 3).copy_from(&(m * cx));
    i.fixed_view_mut::<3, 3>(3, 0).copy_from(&(m * cx.transpose()));
    i.fixed_view_mut::<3, 3>(3, 3).copy_from(&(Matrix3::identity() * m));
    i
}

/// Spatial force at the frame origin equivalent to force `f` applied at
/// point `p` (both in the same frame) plus a free torque `n`.
#[inline]
pub fn force_at(p: &Vector3<f64>, f: &Vector3<f64>, n: &Vector3<f64>) -> SpatialVec {
    spatial(&(n + p.cross(f)), f)
}
