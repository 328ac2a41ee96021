//! Scenario configs: the TOML schema, validation, and assembly into domain
//! types. A scenario is the CLI's unit of execution.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::footprint::CameraModel;
use crate::geometry::{Pose, Vec3};
use crate::io;
use crate::mission::{LandmarkRoute, LawnmowerConfig, MissionMode};
use crate::planner::PlannerConfig;
use crate::sim::lidar::LidarModel;
use crate::sim::mesh::{make_surface, recede_face, SurfaceKind, SurfaceMesh};
use crate::sim::vehicle::VehicleModel;

/// Where the world mesh comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum WorldSource {
    Generator(SurfaceKind),
    MeshFile(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldSpec {
    pub source: WorldSource,
    /// Rigid translation applied after loading, modeling a face that moved
    /// since the route was authored.
    pub recede: Option<(Vec3, f64)>,
    pub coverage_voxel_m: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MissionSpec {
    pub mode: MissionMode,
    pub transit_altitude: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub max_ticks: u64,
    pub seed: u64,
    pub start: Pose,
    /// Consecutive no-motion ticks tolerated before aborting.
    pub stall_ticks: u64,
    /// Size cap for the accumulated observed cloud written at mission end.
    pub cloud_limit: usize,
    pub output_dir: Option<PathBuf>,
}

/// A fully validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub world: WorldSpec,
    pub route: LandmarkRoute,
    pub camera: CameraModel,
    pub planner: PlannerConfig,
    pub lidar: LidarModel,
    pub vehicle: VehicleModel,
    pub mission: MissionSpec,
    pub run: RunSpec,
}

impl Scenario {
    /// Generate or load the world mesh and apply the recede directive.
    pub fn build_mesh(&self) -> Result<SurfaceMesh> {
        let mesh = match &self.world.source {
            WorldSource::Generator(kind) => make_surface(kind)?,
            WorldSource::MeshFile(path) => io::load_mesh(path)?,
        };
        Ok(match self.world.recede {
            Some((direction, distance)) => recede_face(&mesh, direction, distance),
            None => mesh,
        })
    }
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    world: WorldFile,
    route: RouteFile,
    camera: CameraFile,
    planner: PlannerFile,
    #[serde(default)]
    lidar: LidarModel,
    #[serde(default)]
    vehicle: VehicleModel,
    #[serde(default)]
    mission: MissionFile,
    run: RunFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorldFile {
    surface: Option<SurfaceKind>,
    mesh: Option<PathBuf>,
    recede: Option<RecedeFile>,
    #[serde(default = "default_voxel")]
    coverage_voxel_m: f64,
}

fn default_voxel() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecedeFile {
    direction: [f64; 3],
    distance: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RouteFile {
    landmarks: Vec<[f64; 3]>,
    locality_radius: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraFile {
    alpha_deg: f64,
    beta_deg: f64,
    gamma_h: f64,
    gamma_v: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlannerFile {
    d_view: f64,
    horizon: usize,
    degeneracy_cos_limit: Option<f64>,
    step_limit: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MissionFile {
    mode: Option<String>,
    transit_altitude: Option<f64>,
    lawnmower: Option<LawnmowerFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LawnmowerFile {
    #[serde(default)]
    boundary_margin: f64,
    altitude_band: (f64, f64),
    #[serde(default = "default_vertical_sign")]
    vertical_sign: f64,
    #[serde(default = "default_climb_tolerance")]
    climb_tolerance: f64,
}

fn default_vertical_sign() -> f64 {
    1.0
}

fn default_climb_tolerance() -> f64 {
    0.5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    max_ticks: u64,
    seed: u64,
    start: [f64; 3],
    #[serde(default)]
    start_yaw_deg: f64,
    #[serde(default = "default_stall_ticks")]
    stall_ticks: u64,
    #[serde(default = "default_cloud_limit")]
    cloud_limit: usize,
    output_dir: Option<PathBuf>,
}

fn default_stall_ticks() -> u64 {
    250
}

fn default_cloud_limit() -> usize {
    1_000_000
}

/// Parse and validate a scenario file. Referenced mesh paths are resolved
/// relative to the scenario file and must exist.
pub fn parse_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ScenarioFile = toml::from_str(&text).map_err(|e| {
        let line = e
            .span()
            .map(|span| text[..span.start.min(text.len())].lines().count().max(1))
            .unwrap_or(1);
        Error::parse(path, line, e.message().to_string())
    })?;
    scenario_from_file(file, path.parent().unwrap_or(Path::new(".")))
}

fn scenario_from_file(file: ScenarioFile, base: &Path) -> Result<Scenario> {
    let camera = CameraModel::new(
        file.camera.alpha_deg.to_radians(),
        file.camera.beta_deg.to_radians(),
        file.camera.gamma_h,
        file.camera.gamma_v,
    )?;

    let mut planner = PlannerConfig::new(file.planner.d_view, file.planner.horizon)?;
    if let Some(limit) = file.planner.degeneracy_cos_limit {
        planner.degeneracy_cos_limit = limit;
    }
    if let Some(limit) = file.planner.step_limit {
        planner.step_scale_limit = limit;
    }
    let planner = planner.validated()?;

    let locality_radius = match file.route.locality_radius {
        Some(r) => r,
        None => {
            // Keep landmark capture consistent with the lateral step size.
            let d_hov =
                2.0 * (camera.alpha / 2.0).tan() * planner.d_view * (1.0 - camera.gamma_h);
            let r = 0.75 * d_hov;
            if r <= 0.0 {
                return Err(Error::validation(
                    "locality_radius",
                    "required explicitly when gamma_h = 1 (zero lateral step)",
                ));
            }
            r
        }
    };
    let landmarks: Vec<Vec3> =
        file.route.landmarks.iter().map(|l| Vec3::new(l[0], l[1], l[2])).collect();
    let route = LandmarkRoute::new(landmarks, locality_radius)?;

    let world = {
        let source = match (file.world.surface, file.world.mesh) {
            (Some(kind), None) => WorldSource::Generator(kind),
            (None, Some(mesh)) => {
                let resolved = if mesh.is_absolute() { mesh } else { base.join(mesh) };
                if !resolved.exists() {
                    return Err(Error::validation(
                        "world.mesh",
                        format!("mesh file not found: {}", resolved.display()),
                    ));
                }
                WorldSource::MeshFile(resolved)
            }
            _ => {
                return Err(Error::validation(
                    "world",
                    "exactly one of 'surface' or 'mesh' must be set",
                ))
            }
        };
        let recede = match file.world.recede {
            Some(r) => {
                let direction = Vec3::new(r.direction[0], r.direction[1], r.direction[2]);
                if (direction.norm() - 1.0).abs() > 1e-6 {
                    return Err(Error::validation(
                        "world.recede.direction",
                        "must be a unit vector",
                    ));
                }
                if !(r.distance.is_finite() && r.distance >= 0.0) {
                    return Err(Error::validation("world.recede.distance", "must be >= 0"));
                }
                Some((direction, r.distance))
            }
            None => None,
        };
        if !(file.world.coverage_voxel_m.is_finite() && file.world.coverage_voxel_m > 0.0) {
            return Err(Error::validation("world.coverage_voxel_m", "must be > 0"));
        }
        WorldSpec { source, recede, coverage_voxel_m: file.world.coverage_voxel_m }
    };

    let mode = match file.mission.mode.as_deref() {
        None | Some("single-pass") => {
            if file.mission.lawnmower.is_some() {
                return Err(Error::validation(
                    "mission.lawnmower",
                    "lawnmower table given but mode is single-pass",
                ));
            }
            MissionMode::SinglePass
        }
        Some("lawnmower") => {
            let lm = file.mission.lawnmower.ok_or_else(|| {
                Error::validation("mission.lawnmower", "required when mode = \"lawnmower\"")
            })?;
            MissionMode::Lawnmower(
                LawnmowerConfig {
                    boundary_margin: lm.boundary_margin,
                    altitude_band: lm.altitude_band,
                    vertical_sign: lm.vertical_sign,
                    climb_tolerance: lm.climb_tolerance,
                }
                .validated()?,
            )
        }
        Some(other) => {
            return Err(Error::validation(
                "mission.mode",
                format!("unknown mode '{other}' (expected single-pass or lawnmower)"),
            ))
        }
    };

    if file.run.max_ticks == 0 {
        return Err(Error::validation("run.max_ticks", "must be >= 1"));
    }
    let start = Pose::new(
        Vec3::new(file.run.start[0], file.run.start[1], file.run.start[2]),
        file.run.start_yaw_deg.to_radians(),
    );
    if !start.position.is_finite() {
        return Err(Error::validation("run.start", "must be finite"));
    }

    Ok(Scenario {
        world,
        route,
        camera,
        planner,
        lidar: file.lidar.validated()?,
        vehicle: file.vehicle.validated()?,
        mission: MissionSpec { mode, transit_altitude: file.mission.transit_altitude },
        run: RunSpec {
            max_ticks: file.run.max_ticks,
            seed: file.run.seed,
            start,
            stall_ticks: file.run.stall_ticks.max(1),
            cloud_limit: file.run.cloud_limit.max(1),
            output_dir: file.run.output_dir,
        },
    })
}
