//! The reactive view-planning core.
//!
//! Each planning instant anchors a right-handed ego frame on the direction to
//! the nearest sensed surface point, corrects the standoff along it, steps
//! laterally or vertically to satisfy the overlap constraints, and re-aims
//! yaw at the surface from the new position. Predicting over a horizon
//! recursively treats each generated reference as the next localization
//! estimate against the same cloud snapshot.

use serde::{Deserialize, Serialize};

use crate::cloud::{KdIndex, PointCloud};
use crate::error::{Error, Result};
use crate::footprint::{overlap_steps, CameraModel};
use crate::geometry::{Pose, Vec3};
use crate::mission::{Mission, Phase};

/// Right-handed viewing frame: `nu_x` toward the surface, `nu_y` lateral
/// (horizontal by construction), `nu_z` completing the triad.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EgoFrame {
    pub nu_x: Vec3,
    pub nu_y: Vec3,
    pub nu_z: Vec3,
}

impl EgoFrame {
    /// Verify unit norms, pairwise orthogonality, and right-handedness.
    pub fn check_orthonormal(&self, tol: f64) -> std::result::Result<(), String> {
        let axes = [("nu_x", self.nu_x), ("nu_y", self.nu_y), ("nu_z", self.nu_z)];
        for (name, v) in axes {
            if (v.norm() - 1.0).abs() > tol {
                return Err(format!("{name} has norm {}", v.norm()));
            }
        }
        for ((na, a), (nb, b)) in
            [(axes[0], axes[1]), (axes[0], axes[2]), (axes[1], axes[2])]
        {
            if a.dot(b).abs() > tol {
                return Err(format!("{na} . {nb} = {}", a.dot(b)));
            }
        }
        let cross = self.nu_x.cross(self.nu_y);
        if (cross - self.nu_z).norm() > tol {
            return Err("frame is not right-handed".into());
        }
        Ok(())
    }
}

/// Build the ego frame for a position looking at `p_nn`.
///
/// Errors when the two points coincide or the view direction is within the
/// up-axis degeneracy cone (|cos angle to +Z| >= `degeneracy_cos_limit`),
/// where the lateral axis is undefined.
pub fn compute_frame(position: Vec3, p_nn: Vec3, degeneracy_cos_limit: f64) -> Result<EgoFrame> {
    let nu_x = (p_nn - position).normalized().ok_or(Error::CoincidentPoints)?;
    let cos_abs = nu_x.z.abs();
    if cos_abs >= degeneracy_cos_limit {
        return Err(Error::DegenerateViewDirection { cos_abs });
    }
    // UP x nu_x = (-nu_x.y, nu_x.x, 0): horizontal with z exactly zero.
    // Both products are renormalized so overlap displacements along them are
    // true metric distances even on inclined view directions.
    let nu_y = Vec3::UP.cross(nu_x).normalized().ok_or(Error::DegenerateViewDirection {
        cos_abs,
    })?;
    let nu_z = nu_x.cross(nu_y).normalized().ok_or(Error::DegenerateViewDirection { cos_abs })?;
    Ok(EgoFrame { nu_x, nu_y, nu_z })
}

/// Planner tuning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Desired standoff from the surface, meters.
    pub d_view: f64,
    /// Number of recursively predicted steps per planning instant.
    pub horizon_n: usize,
    /// |cos| threshold to +Z beyond which the frame is degenerate.
    pub degeneracy_cos_limit: f64,
    /// Maximum per-step translation; larger commands are rejected.
    pub step_scale_limit: f64,
}

impl PlannerConfig {
    /// Defaults: degeneracy limit 0.999, step limit `2 * d_view`.
    pub fn new(d_view: f64, horizon_n: usize) -> Result<Self> {
        PlannerConfig {
            d_view,
            horizon_n,
            degeneracy_cos_limit: 0.999,
            step_scale_limit: 2.0 * d_view,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.d_view.is_finite() && self.d_view > 0.0) {
            return Err(Error::validation("d_view", format!("must be > 0, got {}", self.d_view)));
        }
        if self.horizon_n < 1 {
            return Err(Error::validation("horizon_n", "must be >= 1"));
        }
        if !(self.degeneracy_cos_limit > 0.0 && self.degeneracy_cos_limit <= 1.0) {
            return Err(Error::validation("degeneracy_cos_limit", "must be in (0, 1]"));
        }
        if !(self.step_scale_limit.is_finite() && self.step_scale_limit > 0.0) {
            return Err(Error::validation("step_scale_limit", "must be > 0"));
        }
        Ok(self)
    }
}

/// How the overlap step is applied at one planning instant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepMode {
    /// Lateral sweep: the vertical overlap step is forced to zero.
    Horizontal,
    /// Row change: the lateral step is forced to zero for one tick.
    VerticalSwitch,
    /// No translation command; used while a row change is being tracked.
    Hold,
}

impl StepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            StepMode::Horizontal => "horizontal",
            StepMode::VerticalSwitch => "vertical-switch",
            StepMode::Hold => "hold",
        }
    }
}

/// Step mode plus the sweep directions the mission selected.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDirective {
    pub mode: StepMode,
    pub lateral_sign: f64,
    pub vertical_sign: f64,
}

/// One predicted view-pose and the quantities that produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanStep {
    pub pose: Pose,
    /// Nearest surface point re-evaluated at `pose` (it aims the yaw and
    /// seeds the next recursion step).
    pub p_nn: Vec3,
    pub d_insp: f64,
    pub d_hov_applied: f64,
    pub d_vov_applied: f64,
}

impl PlanStep {
    /// Standoff from the re-evaluated nearest point.
    pub fn nn_range(&self) -> f64 {
        self.p_nn.distance(self.pose.position)
    }
}

/// Generate the next reference view-pose from one localization estimate.
///
/// The position displaces along the frame at `odom`; yaw comes from the
/// viewing direction re-evaluated at the new position against the same
/// indexed cloud. Roll and pitch stay zero.
pub fn next_view_pose(
    odom: &Pose,
    p_nn: Vec3,
    d_insp: f64,
    d_hov: f64,
    d_vov: f64,
    cloud_index: &KdIndex,
    config: &PlannerConfig,
) -> Result<PlanStep> {
    let frame = compute_frame(odom.position, p_nn, config.degeneracy_cos_limit)?;
    let step = (d_insp * d_insp + d_hov * d_hov + d_vov * d_vov).sqrt();
    if !step.is_finite() || step > config.step_scale_limit {
        return Err(Error::StepTooLarge { step, limit: config.step_scale_limit });
    }
    let position =
        odom.position + frame.nu_x * d_insp + frame.nu_y * d_hov + frame.nu_z * d_vov;
    let nn = cloud_index.nearest_neighbor(position);
    let new_frame = compute_frame(position, nn.point, config.degeneracy_cos_limit)?;
    let yaw = new_frame.nu_x.y.atan2(new_frame.nu_x.x);
    Ok(PlanStep {
        pose: Pose::new(position, yaw),
        p_nn: nn.point,
        d_insp,
        d_hov_applied: d_hov,
        d_vov_applied: d_vov,
    })
}

/// A predicted inspection path; shorter than the horizon only when a
/// mid-horizon step failed.
#[derive(Clone, Debug)]
pub struct Prediction {
    pub steps: Vec<PlanStep>,
    /// Why the horizon was cut short, when it was.
    pub truncation: Option<String>,
}

/// Predict the inspection path over the configured horizon from one cloud
/// snapshot. Pure in all of its inputs.
pub fn predict_path(
    odom: &Pose,
    cloud: &PointCloud,
    config: &PlannerConfig,
    camera: &CameraModel,
    directive: StepDirective,
) -> Result<Prediction> {
    let index = KdIndex::build(cloud)?;
    predict_with_index(odom, &index, config, camera, directive)
}

/// As [`predict_path`], reusing a prebuilt index.
pub fn predict_with_index(
    odom: &Pose,
    index: &KdIndex,
    config: &PlannerConfig,
    camera: &CameraModel,
    directive: StepDirective,
) -> Result<Prediction> {
    let mut steps = Vec::with_capacity(config.horizon_n);
    let mut pose = *odom;
    let mut p_nn = index.nearest_neighbor(pose.position).point;
    let mut truncation = None;

    for k in 0..config.horizon_n {
        // Step magnitudes are recomputed from this step's own range, so the
        // constraint stays satisfied on curved faces.
        let range = p_nn.distance(pose.position);
        let (d_hov_mag, d_vov_mag) = overlap_steps(camera, range)?;
        let (d_insp, d_hov, d_vov) = match directive.mode {
            StepMode::Horizontal => {
                (range - config.d_view, directive.lateral_sign * d_hov_mag, 0.0)
            }
            StepMode::VerticalSwitch => {
                (range - config.d_view, 0.0, directive.vertical_sign * d_vov_mag)
            }
            StepMode::Hold => (0.0, 0.0, 0.0),
        };
        match next_view_pose(&pose, p_nn, d_insp, d_hov, d_vov, index, config) {
            Ok(step) => {
                pose = step.pose;
                p_nn = step.p_nn;
                steps.push(step);
            }
            Err(err) if k > 0 => {
                truncation = Some(err.to_string());
                break;
            }
            Err(err) => return Err(err),
        }
    }
    Ok(Prediction { steps, truncation })
}

/// Why a tick fell back to holding the previous reference, or why its
/// horizon is short.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Diagnostic {
    EmptyScan,
    Degenerate(String),
    TruncatedHorizon(String),
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::EmptyScan => write!(f, "empty-scan"),
            Diagnostic::Degenerate(why) => write!(f, "degenerate: {why}"),
            Diagnostic::TruncatedHorizon(why) => write!(f, "truncated-horizon: {why}"),
        }
    }
}

/// What a planning tick applied, for logging and mission bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AppliedStep {
    pub mode: StepMode,
    pub lateral_sign: f64,
    pub nn_range: f64,
    pub p_nn: Vec3,
    pub d_insp: f64,
    pub d_hov: f64,
    pub d_vov: f64,
}

/// Output of one planning tick.
#[derive(Clone, Debug)]
pub struct TickPlan {
    /// Reference fed to the tracking controller this tick.
    pub reference: Pose,
    /// Full predicted path, for logging; empty outside Inspect.
    pub predicted: Vec<PlanStep>,
    pub applied: Option<AppliedStep>,
    pub diagnostic: Option<Diagnostic>,
}

/// The per-tick planning state machine. Holds the last emitted reference so
/// sensor dropouts and degeneracies degrade to station-keeping.
#[derive(Clone, Debug)]
pub struct Planner {
    config: PlannerConfig,
    camera: CameraModel,
    last_reference: Option<Pose>,
}

impl Planner {
    pub fn new(config: PlannerConfig, camera: CameraModel) -> Self {
        Planner { config, camera, last_reference: None }
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    /// Run one planning instant: index the cloud, ask the mission for the
    /// step directive, predict the path, and emit the first step as the
    /// tracking reference. On empty scans or degeneracies the previous
    /// reference is held and a diagnostic raised.
    pub fn plan_tick(&mut self, odom: &Pose, cloud: &PointCloud, mission: &mut Mission) -> TickPlan {
        if mission.phase() != Phase::Inspect {
            let reference = mission.reference(odom);
            self.last_reference = Some(reference);
            return TickPlan { reference, predicted: Vec::new(), applied: None, diagnostic: None };
        }

        if cloud.is_empty() {
            return self.hold(odom, None, Some(Diagnostic::EmptyScan));
        }
        let index = match KdIndex::build(cloud) {
            Ok(index) => index,
            Err(_) => return self.hold(odom, None, Some(Diagnostic::EmptyScan)),
        };
        let nn = index.nearest_neighbor(odom.position);
        let frame = match compute_frame(odom.position, nn.point, self.config.degeneracy_cos_limit)
        {
            Ok(frame) => frame,
            Err(err) => {
                return self.hold(odom, None, Some(Diagnostic::Degenerate(err.to_string())))
            }
        };

        let Some(directive) = mission.select_step(odom, &frame) else {
            // The mission left Inspect during selection (band exhausted).
            let reference = mission.reference(odom);
            self.last_reference = Some(reference);
            return TickPlan { reference, predicted: Vec::new(), applied: None, diagnostic: None };
        };

        if directive.mode == StepMode::Hold {
            let applied = AppliedStep {
                mode: StepMode::Hold,
                lateral_sign: directive.lateral_sign,
                nn_range: nn.distance,
                p_nn: nn.point,
                d_insp: 0.0,
                d_hov: 0.0,
                d_vov: 0.0,
            };
            return self.hold(odom, Some(applied), None);
        }

        let prediction =
            match predict_with_index(odom, &index, &self.config, &self.camera, directive) {
                Ok(p) => p,
                Err(err) => {
                    return self.hold(odom, None, Some(Diagnostic::Degenerate(err.to_string())))
                }
            };
        let first = prediction.steps[0];
        let applied = AppliedStep {
            mode: directive.mode,
            lateral_sign: directive.lateral_sign,
            nn_range: nn.distance,
            p_nn: nn.point,
            d_insp: first.d_insp,
            d_hov: first.d_hov_applied,
            d_vov: first.d_vov_applied,
        };
        self.last_reference = Some(first.pose);
        TickPlan {
            reference: first.pose,
            predicted: prediction.steps,
            applied: Some(applied),
            diagnostic: prediction.truncation.map(Diagnostic::TruncatedHorizon),
        }
    }

    fn hold(
        &mut self,
        odom: &Pose,
        applied: Option<AppliedStep>,
        diagnostic: Option<Diagnostic>,
    ) -> TickPlan {
        let reference = self.last_reference.unwrap_or(*odom);
        self.last_reference = Some(reference);
        TickPlan { reference, predicted: Vec::new(), applied, diagnostic }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn wall_cloud(x: f64, y: (f64, f64), z: (f64, f64), spacing: f64) -> PointCloud {
        let mut points = Vec::new();
        let ny = ((y.1 - y.0) / spacing).round() as usize;
        let nz = ((z.1 - z.0) / spacing).round() as usize;
        for i in 0..=nz {
            for j in 0..=ny {
                points.push(Vec3::new(
                    x,
                    y.0 + j as f64 * spacing,
                    z.0 + i as f64 * spacing,
                ));
            }
        }
        PointCloud::new(points)
    }

    fn survey_camera() -> CameraModel {
        CameraModel::new(69.4f64.to_radians(), 45f64.to_radians(), 0.8, 0.8).unwrap()
    }

    fn horizontal() -> StepDirective {
        StepDirective { mode: StepMode::Horizontal, lateral_sign: 1.0, vertical_sign: 1.0 }
    }

    #[test]
    fn frame_axis_aligned_cases() {
        let f = compute_frame(Vec3::ZERO, Vec3::new(5.0, 0.0, 0.0), 0.999).unwrap();
        assert_eq!(f.nu_x, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(f.nu_y, Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(f.nu_z, Vec3::new(0.0, 0.0, 1.0));

        let f = compute_frame(Vec3::ZERO, Vec3::new(0.0, 5.0, 0.0), 0.999).unwrap();
        assert_eq!(f.nu_x, Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(f.nu_y, Vec3::new(-1.0, 0.0, 0.0));
        assert_eq!(f.nu_z, Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn frame_inclined_view_direction() {
        // Independent cross-product computation: nu_x = (0.6, 0, 0.8),
        // up x nu_x = (0, 0.6, 0) -> normalized (0, 1, 0),
        // nu_x x nu_y = (-0.8, 0, 0.6).
        let f = compute_frame(Vec3::ZERO, Vec3::new(3.0, 0.0, 4.0), 0.999).unwrap();
        assert_relative_eq!(f.nu_x.x, 0.6, epsilon = 1e-12);
        assert_relative_eq!(f.nu_x.z, 0.8, epsilon = 1e-12);
        assert_relative_eq!(f.nu_y.y, 1.0, epsilon = 1e-12);
        assert_relative_eq!(f.nu_z.x, -0.8, epsilon = 1e-12);
        assert_relative_eq!(f.nu_z.z, 0.6, epsilon = 1e-12);
        f.check_orthonormal(1e-9).unwrap();
    }

    #[test]
    fn frame_rejects_vertical_and_coincident() {
        assert!(matches!(
            compute_frame(Vec3::ZERO, Vec3::new(0.0, 0.0, 5.0), 0.999),
            Err(Error::DegenerateViewDirection { .. })
        ));
        assert!(matches!(
            compute_frame(Vec3::ZERO, Vec3::new(0.0, 0.0, -5.0), 0.999),
            Err(Error::DegenerateViewDirection { .. })
        ));
        assert!(matches!(
            compute_frame(Vec3::ZERO, Vec3::ZERO, 0.999),
            Err(Error::CoincidentPoints)
        ));
    }

    #[test]
    fn frame_nu_y_is_horizontal_exactly() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
        use rand::Rng;
        for _ in 0..1000 {
            let p = Vec3::new(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            );
            let q = p + Vec3::new(
                rng.random_range(1.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-5.0..5.0),
            );
            if let Ok(f) = compute_frame(p, q, 0.999) {
                assert_eq!(f.nu_y.z, 0.0);
                f.check_orthonormal(1e-9).unwrap();
            }
        }
    }

    #[test]
    fn zero_step_is_a_fixed_point_that_faces_the_surface() {
        let cloud = wall_cloud(20.0, (-10.0, 10.0), (0.0, 20.0), 0.5);
        let index = KdIndex::build(&cloud).unwrap();
        let config = PlannerConfig::new(20.0, 5).unwrap();
        let odom = Pose::new(Vec3::new(0.0, 0.0, 10.0), 1.0);
        let nn = index.nearest_neighbor(odom.position);
        let step = next_view_pose(&odom, nn.point, 0.0, 0.0, 0.0, &index, &config).unwrap();
        assert_eq!(step.pose.position, odom.position);
        assert_relative_eq!(step.pose.yaw, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn lateral_step_on_wall_keeps_range_and_yaw() {
        let cloud = wall_cloud(20.0, (-30.0, 30.0), (0.0, 20.0), 0.25);
        let index = KdIndex::build(&cloud).unwrap();
        let config = PlannerConfig::new(20.0, 5).unwrap();
        let camera = survey_camera();
        let odom = Pose::new(Vec3::new(0.0, 0.0, 10.0), 0.0);
        let nn = index.nearest_neighbor(odom.position);
        let (d_hov, _) = overlap_steps(&camera, nn.distance).unwrap();
        let step = next_view_pose(&odom, nn.point, 0.0, d_hov, 0.0, &index, &config).unwrap();
        assert_relative_eq!(step.pose.position.y, 5.5394626247451981, epsilon = 0.01);
        assert_relative_eq!(step.pose.position.x, 0.0, epsilon = 1e-9);
        assert_relative_eq!(step.pose.position.z, 10.0, epsilon = 1e-9);
        assert!(step.pose.yaw.abs() < 1f64.to_radians());
        assert_relative_eq!(step.nn_range(), 20.0, epsilon = 0.05);
    }

    #[test]
    fn standoff_correction_composes_with_planar_wall() {
        let cloud = wall_cloud(25.0, (-30.0, 30.0), (0.0, 20.0), 0.25);
        let index = KdIndex::build(&cloud).unwrap();
        let config = PlannerConfig::new(20.0, 5).unwrap();
        let odom = Pose::new(Vec3::new(0.0, 0.0, 10.0), 0.0);
        let nn = index.nearest_neighbor(odom.position);
        let d_insp = nn.distance - config.d_view;
        assert_relative_eq!(d_insp, 5.0, epsilon = 0.01);
        let step = next_view_pose(&odom, nn.point, d_insp, 0.0, 0.0, &index, &config).unwrap();
        assert_relative_eq!(step.pose.position.x, 5.0, epsilon = 0.01);
        assert_relative_eq!(step.nn_range(), 20.0, epsilon = 0.05);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let cloud = wall_cloud(200.0, (-5.0, 5.0), (5.0, 15.0), 1.0);
        let index = KdIndex::build(&cloud).unwrap();
        let config = PlannerConfig::new(20.0, 5).unwrap();
        let odom = Pose::new(Vec3::new(0.0, 0.0, 10.0), 0.0);
        let nn = index.nearest_neighbor(odom.position);
        let d_insp = nn.distance - config.d_view; // ~180 m >> 40 m limit
        let err =
            next_view_pose(&odom, nn.point, d_insp, 0.0, 0.0, &index, &config).unwrap_err();
        assert!(matches!(err, Error::StepTooLarge { .. }));
    }

    #[test]
    fn predict_path_walks_the_wall_uniformly() {
        let cloud = wall_cloud(20.0, (-30.0, 60.0), (0.0, 25.0), 0.25);
        let config = PlannerConfig::new(20.0, 5).unwrap();
        let camera = survey_camera();
        let odom = Pose::new(Vec3::new(0.0, 0.0, 10.0), 0.0);
        let prediction = predict_path(&odom, &cloud, &config, &camera, horizontal()).unwrap();
        assert_eq!(prediction.steps.len(), 5);
        assert!(prediction.truncation.is_none());
        let d_hov = 5.5394626247451981;
        for (k, step) in prediction.steps.iter().enumerate() {
            assert_relative_eq!(step.pose.position.y, (k + 1) as f64 * d_hov, epsilon = 0.2);
            assert_relative_eq!(step.pose.position.x, 0.0, epsilon = 0.2);
            assert_relative_eq!(step.pose.position.z, 10.0, epsilon = 0.2);
            assert!(step.pose.yaw.abs() < 1f64.to_radians());
            assert_relative_eq!(step.nn_range(), 20.0, epsilon = 0.2);
        }
    }

    #[test]
    fn horizon_one_equals_single_step() {
        let cloud = wall_cloud(20.0, (-30.0, 30.0), (0.0, 25.0), 0.25);
        let index = KdIndex::build(&cloud).unwrap();
        let mut config = PlannerConfig::new(20.0, 5).unwrap();
        config.horizon_n = 1;
        let camera = survey_camera();
        let odom = Pose::new(Vec3::new(0.0, 0.0, 10.0), 0.0);
        let prediction =
            predict_with_index(&odom, &index, &config, &camera, horizontal()).unwrap();
        assert_eq!(prediction.steps.len(), 1);

        let nn = index.nearest_neighbor(odom.position);
        let (d_hov, _) = overlap_steps(&camera, nn.distance).unwrap();
        let single = next_view_pose(
            &odom,
            nn.point,
            nn.distance - config.d_view,
            d_hov,
            0.0,
            &index,
            &config,
        )
        .unwrap();
        assert_eq!(prediction.steps[0], single);
    }

    #[test]
    fn prediction_truncates_when_leaving_cloud_support() {
        // A short wall: a few steps in, the commanded step exceeds the limit
        // because the nearest point is the far wall edge.
        let cloud = wall_cloud(20.0, (0.0, 8.0), (8.0, 12.0), 0.5);
        let config = PlannerConfig { step_scale_limit: 8.0, ..PlannerConfig::new(20.0, 8).unwrap() };
        let camera = survey_camera();
        let odom = Pose::new(Vec3::new(0.0, 0.0, 10.0), 0.0);
        let prediction = predict_path(&odom, &cloud, &config, &camera, horizontal()).unwrap();
        assert!(prediction.steps.len() < 8);
        assert!(prediction.truncation.is_some());
    }

    #[test]
    fn prediction_is_deterministic() {
        let cloud = wall_cloud(20.0, (-30.0, 60.0), (0.0, 25.0), 0.5);
        let config = PlannerConfig::new(20.0, 5).unwrap();
        let camera = survey_camera();
        let odom = Pose::new(Vec3::new(0.5, -2.0, 11.0), 0.3);
        let a = predict_path(&odom, &cloud, &config, &camera, horizontal()).unwrap();
        let b = predict_path(&odom, &cloud, &config, &camera, horizontal()).unwrap();
        assert_eq!(a.steps, b.steps);
    }

    #[test]
    fn predicted_yaw_faces_the_surface() {
        let cloud = wall_cloud(20.0, (-30.0, 60.0), (0.0, 25.0), 0.25);
        let config = PlannerConfig::new(20.0, 5).unwrap();
        let camera = survey_camera();
        let odom = Pose::new(Vec3::new(2.0, -5.0, 12.0), 0.0);
        let prediction = predict_path(&odom, &cloud, &config, &camera, horizontal()).unwrap();
        for step in &prediction.steps {
            let to_surface = step.p_nn - step.pose.position;
            let horiz = Vec3::new(to_surface.x, to_surface.y, 0.0);
            if let Some(dir) = horiz.normalized() {
                let heading = step.pose.heading();
                let angle = heading.dot(dir).clamp(-1.0, 1.0).acos();
                assert!(angle < 1e-6, "angle {angle}");
            }
        }
    }
}
