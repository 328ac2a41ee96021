//! Camera footprint model: the overlap step distances between consecutive
//! view-poses and the signed viewing-distance deviation.
//!
//! The footprint is the flat rectangle the field of view cuts out of a plane
//! at the queried range. Stepping laterally by `2 * tan(alpha/2) * range *
//! (1 - gamma_h)` leaves exactly the `gamma_h` fraction of that rectangle
//! shared between consecutive views, and likewise vertically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::planner::EgoFrame;

/// Field-of-view angles and desired image overlaps of the onboard camera.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    /// Horizontal field of view, radians, in (0, pi).
    pub alpha: f64,
    /// Vertical field of view, radians, in (0, pi).
    pub beta: f64,
    /// Desired horizontal overlap fraction, in [0, 1].
    pub gamma_h: f64,
    /// Desired vertical overlap fraction, in [0, 1].
    pub gamma_v: f64,
}

impl CameraModel {
    pub fn new(alpha: f64, beta: f64, gamma_h: f64, gamma_v: f64) -> Result<Self> {
        let fov = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 && v < std::f64::consts::PI {
                Ok(())
            } else {
                Err(Error::validation(name, format!("field of view must be in (0, pi) rad, got {v}")))
            }
        };
        let overlap = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::validation(name, format!("overlap must be in [0, 1], got {v}")))
            }
        };
        fov("alpha", alpha)?;
        fov("beta", beta)?;
        overlap("gamma_h", gamma_h)?;
        overlap("gamma_v", gamma_v)?;
        Ok(CameraModel { alpha, beta, gamma_h, gamma_v })
    }
}

/// Lateral and vertical translation that realizes the desired overlaps at the
/// given viewing range. Full overlap (gamma = 1) degenerates to a zero step.
pub fn overlap_steps(camera: &CameraModel, range: f64) -> Result<(f64, f64)> {
    if !range.is_finite() || range < 0.0 {
        return Err(Error::InvalidRange(range));
    }
    let d_hov = 2.0 * (camera.alpha / 2.0).tan() * range * (1.0 - camera.gamma_h);
    let d_vov = 2.0 * (camera.beta / 2.0).tan() * range * (1.0 - camera.gamma_v);
    Ok((d_hov, d_vov))
}

/// Signed deviation from the desired standoff along the viewing direction:
/// positive means too far, negative too close.
pub fn view_distance_deviation(p_nn: Vec3, position: Vec3, d_view: f64) -> f64 {
    p_nn.distance(position) - d_view
}

/// The rectangle a camera footprint cuts out of a plane at `range`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FootprintRect {
    pub center: Vec3,
    pub half_width: f64,
    pub half_height: f64,
    /// Lateral and vertical spanning axes (the frame's nu_y and nu_z).
    pub axes: (Vec3, Vec3),
}

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Project the camera footprint along the frame's viewing axis.
pub fn project_footprint(
    pose: &Pose,
    frame: &EgoFrame,
    range: f64,
    camera: &CameraModel,
) -> Result<FootprintRect> {
    if !range.is_finite() || range < 0.0 {
        return Err(Error::InvalidRange(range));
    }
    frame.check_orthonormal(ORTHONORMAL_TOL).map_err(Error::DegenerateFrame)?;
    Ok(FootprintRect {
        center: pose.position + frame.nu_x * range,
        half_width: (camera.alpha / 2.0).tan() * range,
        half_height: (camera.beta / 2.0).tan() * range,
        axes: (frame.nu_y, frame.nu_z),
    })
}

/// Fraction of the narrower footprint shared along the lateral axis, in
/// [0, 1]. `b` is projected onto `a`'s axes, so slightly rotated pairs
/// compare on `a`'s plane.
pub fn lateral_overlap_fraction(a: &FootprintRect, b: &FootprintRect) -> f64 {
    let offset = (b.center - a.center).dot(a.axes.0);
    let b_half = b.half_width * b.axes.0.dot(a.axes.0).abs();
    let lo = (-a.half_width).max(offset - b_half);
    let hi = a.half_width.min(offset + b_half);
    let overlap = (hi - lo).max(0.0);
    let min_width = (2.0 * a.half_width).min(2.0 * b_half);
    if min_width <= 0.0 {
        return 0.0;
    }
    (overlap / min_width).clamp(0.0, 1.0)
}
