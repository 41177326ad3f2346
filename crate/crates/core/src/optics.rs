//! Geometric optics of a rotating wedge prism in front of a pinhole camera.
//!
//! Frame conventions, fixed once for the whole crate:
//! - The camera looks along `+z` (the optical axis `z_c`). Incoming light
//!   propagates toward the camera, so ray directions have a negative `z`
//!   component.
//! - The prism's flat face is perpendicular to `z_c`; the wedged face has
//!   normal `z_w`, tilted by the wedge angle `alpha` about the camera
//!   x-axis and then rotated to azimuth `theta` about `z_c`. Phase zero of
//!   `theta` is the wedge's steepest-descent direction; any hardware offset
//!   is absorbed by the calibrated phase bias.
//!
//! The full transmission model refracts twice (flat face, then wedged
//! face). The simplified model replaces both refractions with a single
//! rotation about `z_w x z_c`; the two agree exactly for rays coplanar
//! with `z_c` and `z_w`, and within ~2 px of reprojection error over a
//! 90 degree field of view for wedge angles up to 1 degree.

use nalgebra::{Rotation3, Unit, Vector3};
use thiserror::Error;

/// Tolerance on the unit-norm invariant of [`UnitVec3`].
pub const UNIT_TOL: f64 = 1e-9;
/// Tolerance on rotation-axis normalization.
pub const AXIS_TOL: f64 = 1e-6;
/// Below this cross-product magnitude two directions count as parallel.
pub const PARALLEL_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum OpticsError {
    #[error("total internal reflection: |sin| = {sine:.6} > 1")]
    TotalInternalReflection { sine: f64 },
    #[error("rotation axis is not unit length")]
    DegenerateAxis,
    #[error("degenerate geometry: wedge axis parallel to optical axis")]
    DegenerateGeometry,
    #[error("direction does not point into the camera")]
    BehindCamera,
    #[error("vector is not unit length (norm = {norm:.9})")]
    NotUnitLength { norm: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

/// A direction in 3-space, guaranteed unit-length to within [`UNIT_TOL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec3(Vector3<f64>);

impl UnitVec3 {
    /// Validates that `(x, y, z)` is unit length.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, OpticsError> {
        let v = Vector3::new(x, y, z);
        let norm = v.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(OpticsError::NotUnitLength { norm });
        }
        Ok(Self(v / norm))
    }

    /// Normalizes an arbitrary non-zero vector.
    pub fn normalize(v: Vector3<f64>) -> Result<Self, OpticsError> {
        let norm = v.norm();
        if norm < PARALLEL_TOL {
            return Err(OpticsError::DegenerateAxis);
        }
        Ok(Self(v / norm))
    }

    pub fn x_axis() -> Self {
        Self(Vector3::x())
    }

    pub fn y_axis() -> Self {
        Self(Vector3::y())
    }

    /// The optical axis `z_c`.
    pub fn z_axis() -> Self {
        Self(Vector3::z())
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.0.dot(&other.0)
    }

    /// Cross product; the result is generally not unit length.
    pub fn cross(&self, other: &Self) -> Vector3<f64> {
        self.0.cross(&other.0)
    }

    pub fn neg(&self) -> Self {
        Self(-self.0)
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    /// Rotates about a unit axis, renormalizing to keep the invariant tight.
    pub fn rotate_about(&self, axis: &UnitVec3, angle: f64) -> Self {
        let rot = Rotation3::from_axis_angle(&Unit::new_unchecked(axis.0), angle);
        let v = rot * self.0;
        Self(v / v.norm())
    }
}

/// Physical parameters of the wedge prism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrismConfig {
    /// Wedge tilt angle in radians (angle between `z_w` and `z_c`).
    pub alpha: f64,
    /// Refractive index of the prism material (air is taken as 1.0).
    pub n: f64,
    /// Rotation speed in revolutions per second.
    pub rotation_hz: f64,
}

impl PrismConfig {
    pub fn new(alpha: f64, n: f64, rotation_hz: f64) -> Result<Self, OpticsError> {
        if !(n > 1.0) {
            return Err(OpticsError::InvalidParameter("refractive index must be > 1"));
        }
        if !(alpha > 0.0 && alpha < 10f64.to_radians()) {
            return Err(OpticsError::InvalidParameter(
                "wedge angle must be in (0, 10 degrees)",
            ));
        }
        if !(rotation_hz >= 0.0) {
            return Err(OpticsError::InvalidParameter("rotation speed must be >= 0"));
        }
        Ok(Self { alpha, n, rotation_hz })
    }

    /// Encoder angle swept after `t` seconds of constant-speed rotation,
    /// wrapped to `[0, 2*pi)`.
    pub fn phase_at(&self, t_s: f64) -> f64 {
        (std::f64::consts::TAU * self.rotation_hz * t_s).rem_euclid(std::f64::consts::TAU)
    }
}

/// Pinhole camera intrinsics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, OpticsError> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(OpticsError::InvalidParameter("focal lengths must be > 0"));
        }
        if !(cx >= 0.0 && cx < width as f64) || !(cy >= 0.0 && cy < height as f64) {
            return Err(OpticsError::InvalidParameter(
                "principal point must lie inside the sensor",
            ));
        }
        Ok(Self { fx, fy, cx, cy, width, height })
    }
}

/// Refraction angle across a planar interface: `asin(n_from * sin(angle) / n_to)`.
///
/// The result carries the sign of the input. Fails when the interface is
/// past the critical angle.
pub fn snell_refract(incidence_angle: f64, n_from: f64, n_to: f64) -> Result<f64, OpticsError> {
    let sine = n_from * incidence_angle.sin() / n_to;
    if sine.abs() > 1.0 {
        return Err(OpticsError::TotalInternalReflection { sine });
    }
    Ok(sine.asin())
}

/// Rodrigues rotation of `v` about `axis` by `angle`.
///
/// `axis` must already be unit length to within [`AXIS_TOL`].
pub fn rotate_about_axis(
    v: &Vector3<f64>,
    axis: &Vector3<f64>,
    angle: f64,
) -> Result<Vector3<f64>, OpticsError> {
    if (axis.norm() - 1.0).abs() > AXIS_TOL {
        return Err(OpticsError::DegenerateAxis);
    }
    let rot = Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle);
    Ok(rot * v)
}

/// Wedge-face normal at azimuth `theta`: `R(z_c, theta) * R(x_c, alpha) * z_c`.
pub fn wedge_axis(theta: f64, alpha: f64) -> UnitVec3 {
    let (sin_a, cos_a) = alpha.sin_cos();
    let (sin_t, cos_t) = theta.sin_cos();
    // R(x, alpha) * z = (0, -sin a, cos a), then azimuth rotation about z.
    let v = Vector3::new(sin_a * sin_t, -sin_a * cos_t, cos_a);
    UnitVec3(v / v.norm())
}

/// Refracts `v` across a planar interface with (sign-agnostic) normal
/// `face_normal`, going from index `n_from` into `n_to`.
fn refract_at(
    v: &UnitVec3,
    face_normal: &UnitVec3,
    n_from: f64,
    n_to: f64,
) -> Result<UnitVec3, OpticsError> {
    let mut normal = face_normal.0;
    if v.0.dot(&normal) > 0.0 {
        normal = -normal;
    }
    let cross = v.0.cross(&normal);
    let sin_inc = cross.norm();
    if sin_inc < PARALLEL_TOL {
        // Normal incidence: no change of direction.
        return Ok(*v);
    }
    let phi_in = sin_inc.atan2(-v.0.dot(&normal));
    let phi_out = snell_refract(phi_in, n_from, n_to)?;
    let axis = UnitVec3(cross / sin_inc);
    Ok(v.rotate_about(&axis, phi_out - phi_in))
}

/// Full two-interface transmission through the wedge prism.
///
/// The ray first crosses the flat face (normal `z_c`, air into glass) and
/// then the wedged face (normal `z_w`, glass into air).
pub fn prism_transmit_full(
    v_in: &UnitVec3,
    z_w: &UnitVec3,
    n: f64,
) -> Result<UnitVec3, OpticsError> {
    let v_p = refract_at(v_in, &UnitVec3::z_axis(), 1.0, n)?;
    refract_at(&v_p, z_w, n, 1.0)
}

/// Simplified transmission: a single rotation by `delta` about the
/// normalized `z_w x z_c` axis.
pub fn prism_transmit_simplified(
    v_in: &UnitVec3,
    z_w: &UnitVec3,
    delta: f64,
) -> Result<UnitVec3, OpticsError> {
    let axis = z_w.cross(&UnitVec3::z_axis());
    let norm = axis.norm();
    if norm < PARALLEL_TOL {
        return Err(OpticsError::DegenerateGeometry);
    }
    Ok(v_in.rotate_about(&UnitVec3(axis / norm), delta))
}

/// The deflection angle of the full model expressed as a rotation about
/// `z_w x z_c`.
///
/// Exact whenever `v_in` is coplanar with `z_c` and `z_w` (in particular
/// for the central ray at any wedge azimuth); for other rays it is the
/// in-plane component of the deflection, which is what the simplified
/// model fits. A wedge axis parallel to the optical axis is a flat plate
/// and deflects nothing.
pub fn deviation_angle(v_in: &UnitVec3, z_w: &UnitVec3, n: f64) -> Result<f64, OpticsError> {
    let axis = z_w.cross(&UnitVec3::z_axis());
    let norm = axis.norm();
    if norm < PARALLEL_TOL {
        return Ok(0.0);
    }
    let axis = axis / norm;
    let v_out = prism_transmit_full(v_in, z_w, n)?;
    let p_in = v_in.0 - axis * v_in.0.dot(&axis);
    let p_out = v_out.0 - axis * v_out.0.dot(&axis);
    Ok(p_in.cross(&p_out).dot(&axis).atan2(p_in.dot(&p_out)))
}

/// Projects an incoming ray direction (negative `z` component) to sub-pixel
/// image coordinates.
pub fn project(v: &UnitVec3, k: &Intrinsics) -> Result<(f64, f64), OpticsError> {
    if v.z() >= 0.0 {
        return Err(OpticsError::BehindCamera);
    }
    Ok((k.fx * v.x() / v.z() + k.cx, k.fy * v.y() / v.z() + k.cy))
}

/// Unit incoming-ray direction through pixel `p`; inverse of [`project`].
pub fn backproject(p: (f64, f64), k: &Intrinsics) -> UnitVec3 {
    let v = Vector3::new(-(p.0 - k.cx) / k.fx, -(p.1 - k.cy) / k.fy, -1.0);
    UnitVec3(v / v.norm())
}
