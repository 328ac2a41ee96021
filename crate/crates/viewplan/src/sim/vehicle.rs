//! First-order kinematic reference tracker standing in for a full tracking
//! controller: rate-limited translation toward the reference position and
//! shortest-arc, rate-limited yaw.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_difference, Pose};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleModel {
    pub max_speed: f64,
    pub max_yaw_rate: f64,
    pub tick_dt: f64,
}

impl Default for VehicleModel {
    fn default() -> Self {
        VehicleModel { max_speed: 2.0, max_yaw_rate: 0.6, tick_dt: 0.1 }
    }
}

impl VehicleModel {
    pub fn validated(self) -> Result<Self> {
        for (name, v) in [
            ("max_speed", self.max_speed),
            ("max_yaw_rate", self.max_yaw_rate),
            ("tick_dt", self.tick_dt),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(name, format!("must be > 0, got {v}")));
            }
        }
        Ok(self)
    }
}

/// Advance one tick toward `reference`, never overshooting in either
/// position or yaw.
pub fn vehicle_step(state: &Pose, reference: &Pose, vehicle: &VehicleModel) -> Pose {
    let to_target = reference.position - state.position;
    let distance = to_target.norm();
    let reach = vehicle.max_speed * vehicle.tick_dt;
    let position = if distance <= reach || distance == 0.0 {
        reference.position
    } else {
        state.position + to_target * (reach / distance)
    };

    let dyaw = angle_difference(state.yaw, reference.yaw);
    let max_turn = vehicle.max_yaw_rate * vehicle.tick_dt;
    let yaw = state.yaw + dyaw.clamp(-max_turn, max_turn);
    Pose::new(position, yaw)
}
