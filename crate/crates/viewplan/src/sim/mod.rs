//! Deterministic synthetic world: surfaces, ray-cast LiDAR, and a kinematic
//! reference tracker.

pub mod lidar;
pub mod mesh;
pub mod vehicle;

pub use lidar::{scan, scan_with_caster, LidarModel};
pub use mesh::{make_surface, recede_face, RayCaster, SurfaceKind, SurfaceMesh};
pub use vehicle::{vehicle_step, VehicleModel};
