//! Mission executive: operator landmarks, locality-based advancement, sweep
//! selection with the vertical overlap switch, termination, and
//! return-to-start.
//!
//! Landmarks are advisory. During inspection they only decide the sweep
//! direction and measure progress; the flown references always come from the
//! planner reacting to the sensed surface.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::planner::{EgoFrame, StepDirective, StepMode, TickPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Transit,
    Inspect,
    ReturnHome,
    Done,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Transit => "transit",
            Phase::Inspect => "inspect",
            Phase::ReturnHome => "return-home",
            Phase::Done => "done",
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        match s {
            "transit" => Some(Phase::Transit),
            "inspect" => Some(Phase::Inspect),
            "return-home" => Some(Phase::ReturnHome),
            "done" => Some(Phase::Done),
            _ => None,
        }
    }
}

/// Operator waypoints plus the capture radius that counts as "passing
/// through the locality" of one.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkRoute {
    pub landmarks: Vec<Vec3>,
    pub locality_radius: f64,
}

impl LandmarkRoute {
    pub fn new(landmarks: Vec<Vec3>, locality_radius: f64) -> Result<Self> {
        if landmarks.is_empty() {
            return Err(Error::validation("landmarks", "route needs at least one landmark"));
        }
        if landmarks.iter().any(|l| !l.is_finite()) {
            return Err(Error::validation("landmarks", "landmarks must be finite"));
        }
        if !(locality_radius.is_finite() && locality_radius > 0.0) {
            return Err(Error::validation(
                "locality_radius",
                format!("must be > 0, got {locality_radius}"),
            ));
        }
        Ok(LandmarkRoute { landmarks, locality_radius })
    }
}

/// Lawnmower sweep settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawnmowerConfig {
    /// Extra lateral distance past the landmark chain end before switching.
    pub boundary_margin: f64,
    /// Altitude band (lo, hi); a boundary reached with the vehicle outside
    /// it ends the inspection instead of switching.
    pub altitude_band: (f64, f64),
    /// +1 climbs a row per switch, -1 descends.
    pub vertical_sign: f64,
    /// How close (in z, meters) the vehicle must get to a switch reference
    /// before lateral sweeping resumes.
    pub climb_tolerance: f64,
}

impl LawnmowerConfig {
    pub fn validated(self) -> Result<Self> {
        if !(self.boundary_margin.is_finite() && self.boundary_margin >= 0.0) {
            return Err(Error::validation("boundary_margin", "must be >= 0"));
        }
        if !(self.altitude_band.0.is_finite()
            && self.altitude_band.1.is_finite()
            && self.altitude_band.0 < self.altitude_band.1)
        {
            return Err(Error::validation("altitude_band", "must satisfy lo < hi"));
        }
        if self.vertical_sign != 1.0 && self.vertical_sign != -1.0 {
            return Err(Error::validation("vertical_sign", "must be +1 or -1"));
        }
        if !(self.climb_tolerance.is_finite() && self.climb_tolerance > 0.0) {
            return Err(Error::validation("climb_tolerance", "must be > 0"));
        }
        Ok(self)
    }
}

/// How the face is swept.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MissionMode {
    /// Track the landmark chain once (the default); never steps vertically.
    SinglePass,
    /// Serpentine between the chain ends, one vertical switch per boundary,
    /// until the altitude band is exhausted.
    Lawnmower(LawnmowerConfig),
}

/// Mutable mission state; one per run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MissionContext {
    pub phase: Phase,
    pub active_landmark: usize,
    pub sweep_sign: f64,
    pub start_pose: Pose,
    /// Step mode applied on the last planning tick.
    pub step_mode: StepMode,
    /// Target z of a vertical switch still being tracked.
    pub pending_climb: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Mission {
    route: LandmarkRoute,
    mode: MissionMode,
    /// Altitude for the transit reference; defaults to the first landmark's.
    transit_altitude: Option<f64>,
    ctx: MissionContext,
}

impl Mission {
    pub fn new(
        route: LandmarkRoute,
        mode: MissionMode,
        transit_altitude: Option<f64>,
        start_pose: Pose,
    ) -> Result<Self> {
        if let MissionMode::Lawnmower(cfg) = &mode {
            cfg.validated()?;
            if route.landmarks.len() < 2 {
                return Err(Error::validation(
                    "landmarks",
                    "lawnmower mode needs at least two landmarks for the sweep axis",
                ));
            }
            let a = route.landmarks[0];
            let b = *route.landmarks.last().unwrap();
            if Vec3::new(b.x - a.x, b.y - a.y, 0.0).norm() < 1e-9 {
                return Err(Error::validation(
                    "landmarks",
                    "lawnmower chain ends coincide horizontally",
                ));
            }
        }
        Ok(Mission {
            route,
            mode,
            transit_altitude,
            ctx: MissionContext {
                phase: Phase::Transit,
                active_landmark: 0,
                sweep_sign: 1.0,
                start_pose,
                step_mode: StepMode::Horizontal,
                pending_climb: None,
            },
        })
    }

    pub fn phase(&self) -> Phase {
        self.ctx.phase
    }

    pub fn context(&self) -> &MissionContext {
        &self.ctx
    }

    pub fn route(&self) -> &LandmarkRoute {
        &self.route
    }

    pub fn is_done(&self) -> bool {
        self.ctx.phase == Phase::Done
    }

    /// Advance past every landmark whose locality contains `position`.
    /// Reaching the first landmark starts inspection; in single-pass mode,
    /// reaching the last one terminates it.
    pub fn advance_landmarks(&mut self, position: Vec3) {
        if !matches!(self.ctx.phase, Phase::Transit | Phase::Inspect) {
            return;
        }
        loop {
            let landmark = self.route.landmarks[self.ctx.active_landmark];
            if position.distance(landmark) > self.route.locality_radius {
                break;
            }
            let at_last = self.ctx.active_landmark + 1 == self.route.landmarks.len();
            if at_last {
                if matches!(self.mode, MissionMode::SinglePass) {
                    self.ctx.phase = Phase::ReturnHome;
                }
                break;
            }
            self.ctx.active_landmark += 1;
            if self.ctx.phase == Phase::Transit {
                self.ctx.phase = Phase::Inspect;
            }
        }
    }

    /// Per-tick mission update: landmark advancement plus the
    /// return-home-arrival check.
    pub fn update(&mut self, position: Vec3) {
        self.advance_landmarks(position);
        if self.ctx.phase == Phase::ReturnHome
            && position.distance(self.ctx.start_pose.position) <= self.route.locality_radius
        {
            self.ctx.phase = Phase::Done;
        }
    }

    /// Reference pose for the phases the planner does not drive.
    pub fn reference(&self, current: &Pose) -> Pose {
        match self.ctx.phase {
            Phase::Transit => {
                let first = self.route.landmarks[0];
                let altitude = self.transit_altitude.unwrap_or(first.z);
                let target = Vec3::new(first.x, first.y, altitude);
                let toward = target - current.position;
                let yaw = if toward.x.hypot(toward.y) > 1e-9 {
                    toward.y.atan2(toward.x)
                } else {
                    current.yaw
                };
                Pose::new(target, yaw)
            }
            Phase::ReturnHome => self.ctx.start_pose,
            Phase::Inspect | Phase::Done => *current,
        }
    }

    /// Choose the step mode and sweep directions for an inspection tick.
    /// Returns `None` when the lawnmower altitude band is exhausted, which
    /// flips the mission to return-home.
    pub fn select_step(&mut self, pose: &Pose, frame: &EgoFrame) -> Option<StepDirective> {
        debug_assert_eq!(self.ctx.phase, Phase::Inspect);
        match self.mode {
            MissionMode::SinglePass => {
                let target = self.route.landmarks[self.ctx.active_landmark];
                Some(StepDirective {
                    mode: StepMode::Horizontal,
                    lateral_sign: lateral_sign_toward(target, pose.position, frame),
                    vertical_sign: 1.0,
                })
            }
            MissionMode::Lawnmower(cfg) => {
                if let Some(target_z) = self.ctx.pending_climb {
                    if (pose.position.z - target_z).abs() <= cfg.climb_tolerance {
                        self.ctx.pending_climb = None;
                    } else {
                        return Some(StepDirective {
                            mode: StepMode::Hold,
                            lateral_sign: self.ctx.sweep_sign,
                            vertical_sign: cfg.vertical_sign,
                        });
                    }
                }
                let (s, s_hi) = self.lateral_progress(pose.position);
                let beyond = if self.ctx.sweep_sign > 0.0 {
                    s > s_hi + cfg.boundary_margin
                } else {
                    s < -cfg.boundary_margin
                };
                if beyond {
                    let z = pose.position.z;
                    if z < cfg.altitude_band.0 || z > cfg.altitude_band.1 {
                        self.ctx.phase = Phase::ReturnHome;
                        return None;
                    }
                    return Some(StepDirective {
                        mode: StepMode::VerticalSwitch,
                        lateral_sign: self.ctx.sweep_sign,
                        vertical_sign: cfg.vertical_sign,
                    });
                }
                let target = if self.ctx.sweep_sign > 0.0 {
                    *self.route.landmarks.last().unwrap()
                } else {
                    self.route.landmarks[0]
                };
                Some(StepDirective {
                    mode: StepMode::Horizontal,
                    lateral_sign: lateral_sign_toward(target, pose.position, frame),
                    vertical_sign: cfg.vertical_sign,
                })
            }
        }
    }

    /// Record what the planning tick actually applied. A vertical switch
    /// reverts to horizontal stepping with the sweep sign negated and arms
    /// the climb toward the switch reference altitude.
    pub fn after_plan(&mut self, plan: &TickPlan) {
        if let Some(applied) = &plan.applied {
            self.ctx.step_mode = applied.mode;
            if applied.mode == StepMode::VerticalSwitch {
                self.ctx.sweep_sign = -self.ctx.sweep_sign;
                self.ctx.pending_climb = Some(plan.reference.position.z);
            }
        }
    }

    /// Progress along the horizontal chain axis: (s at `position`, s at the
    /// far chain end).
    fn lateral_progress(&self, position: Vec3) -> (f64, f64) {
        let a = self.route.landmarks[0];
        let b = *self.route.landmarks.last().unwrap();
        let axis = Vec3::new(b.x - a.x, b.y - a.y, 0.0);
        let len = axis.norm();
        let axis = axis * (1.0 / len);
        let rel = Vec3::new(position.x - a.x, position.y - a.y, 0.0);
        (rel.dot(axis), len)
    }
}

/// Sign of the lateral axis component pointing at `target`; exact zero
/// resolves to +1.
fn lateral_sign_toward(target: Vec3, position: Vec3, frame: &EgoFrame) -> f64 {
    if (target - position).dot(frame.nu_y) < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::compute_frame;

    fn single_pass(landmarks: Vec<Vec3>, radius: f64) -> Mission {
        let route = LandmarkRoute::new(landmarks, radius).unwrap();
        Mission::new(route, MissionMode::SinglePass, None, Pose::new(Vec3::ZERO, 0.0)).unwrap()
    }

    #[test]
    fn landmark_within_radius_advances() {
        let mut m = single_pass(
            vec![Vec3::new(0.0, 0.0, 10.0), Vec3::new(0.0, 20.0, 10.0), Vec3::new(0.0, 40.0, 10.0)],
            5.0,
        );
        m.advance_landmarks(Vec3::new(0.0, 3.0, 10.0));
        assert_eq!(m.context().active_landmark, 1);
        assert_eq!(m.phase(), Phase::Inspect);
    }

    #[test]
    fn overlapping_localities_advance_past_both() {
        let mut m = single_pass(
            vec![
                Vec3::new(0.0, 0.0, 10.0),
                Vec3::new(0.0, 2.0, 10.0),
                Vec3::new(0.0, 4.0, 10.0),
                Vec3::new(0.0, 40.0, 10.0),
            ],
            5.0,
        );
        m.advance_landmarks(Vec3::new(0.0, 1.0, 10.0));
        assert_eq!(m.context().active_landmark, 3);
    }

    #[test]
    fn last_landmark_triggers_return_home() {
        let mut m = single_pass(vec![Vec3::new(0.0, 0.0, 10.0), Vec3::new(0.0, 20.0, 10.0)], 5.0);
        m.advance_landmarks(Vec3::new(0.0, 1.0, 10.0));
        assert_eq!(m.phase(), Phase::Inspect);
        m.advance_landmarks(Vec3::new(0.0, 18.0, 10.0));
        assert_eq!(m.phase(), Phase::ReturnHome);
        assert_eq!(m.context().active_landmark, 1);
    }

    #[test]
    fn return_home_reference_is_start_pose_then_done() {
        let start = Pose::new(Vec3::new(1.0, 2.0, 3.0), 0.5);
        let route =
            LandmarkRoute::new(vec![Vec3::new(0.0, 0.0, 10.0), Vec3::new(0.0, 20.0, 10.0)], 5.0)
                .unwrap();
        let mut m = Mission::new(route, MissionMode::SinglePass, None, start).unwrap();
        m.advance_landmarks(Vec3::new(0.0, 0.0, 10.0));
        m.advance_landmarks(Vec3::new(0.0, 20.0, 10.0));
        assert_eq!(m.phase(), Phase::ReturnHome);
        assert_eq!(m.reference(&Pose::new(Vec3::ZERO, 0.0)), start);
        m.update(Vec3::new(1.0, 2.5, 3.0));
        assert_eq!(m.phase(), Phase::Done);
        let here = Pose::new(Vec3::new(9.0, 9.0, 9.0), 1.0);
        assert_eq!(m.reference(&here), here);
    }

    #[test]
    fn transit_reference_points_at_first_landmark() {
        let m = single_pass(vec![Vec3::new(0.0, 100.0, 10.0), Vec3::new(0.0, 140.0, 10.0)], 5.0);
        let current = Pose::new(Vec3::new(0.0, 0.0, 10.0), 0.0);
        let reference = m.reference(&current);
        assert_eq!(reference.position, Vec3::new(0.0, 100.0, 10.0));
        // Straight-line transit: the target sits on the segment and yaw
        // faces it.
        assert!((reference.yaw - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn lateral_sign_follows_active_landmark() {
        let mut m = single_pass(
            vec![Vec3::new(0.0, 0.0, 10.0), Vec3::new(0.0, 30.0, 10.0), Vec3::new(0.0, 60.0, 10.0)],
            5.0,
        );
        m.advance_landmarks(Vec3::new(0.0, 0.0, 10.0));
        let pose = Pose::new(Vec3::new(0.0, 10.0, 10.0), 0.0);
        let frame = compute_frame(pose.position, Vec3::new(20.0, 10.0, 10.0), 0.999).unwrap();
        // nu_y = +Y here; the next landmark is at larger y.
        let d = m.select_step(&pose, &frame).unwrap();
        assert_eq!(d.mode, StepMode::Horizontal);
        assert_eq!(d.lateral_sign, 1.0);

        // A landmark behind flips the sign.
        let pose = Pose::new(Vec3::new(0.0, 50.0, 10.0), 0.0);
        let frame = compute_frame(pose.position, Vec3::new(20.0, 50.0, 10.0), 0.999).unwrap();
        let mut m2 = single_pass(vec![Vec3::new(0.0, 40.0, 10.0)], 5.0);
        m2.ctx.phase = Phase::Inspect;
        let d = m2.select_step(&pose, &frame).unwrap();
        assert_eq!(d.lateral_sign, -1.0);
    }

    #[test]
    fn single_pass_never_steps_vertically() {
        let mut m = single_pass(
            vec![Vec3::new(0.0, 0.0, 10.0), Vec3::new(0.0, 200.0, 10.0)],
            5.0,
        );
        m.advance_landmarks(Vec3::new(0.0, 0.0, 10.0));
        for y in 0..100 {
            let pose = Pose::new(Vec3::new(0.0, 2.0 * y as f64, 10.0), 0.0);
            let frame =
                compute_frame(pose.position, pose.position + Vec3::new(20.0, 0.0, 0.0), 0.999)
                    .unwrap();
            let d = m.select_step(&pose, &frame).unwrap();
            assert_eq!(d.mode, StepMode::Horizontal);
        }
    }

    fn lawnmower(band: (f64, f64)) -> Mission {
        let route =
            LandmarkRoute::new(vec![Vec3::new(0.0, 0.0, 10.0), Vec3::new(0.0, 40.0, 10.0)], 5.0)
                .unwrap();
        let cfg = LawnmowerConfig {
            boundary_margin: 0.0,
            altitude_band: band,
            vertical_sign: 1.0,
            climb_tolerance: 0.5,
        };
        let mut m =
            Mission::new(route, MissionMode::Lawnmower(cfg), None, Pose::new(Vec3::ZERO, 0.0))
                .unwrap();
        m.ctx.phase = Phase::Inspect;
        m.ctx.active_landmark = 1;
        m
    }

    fn wall_frame(pose: &Pose) -> EgoFrame {
        compute_frame(pose.position, pose.position + Vec3::new(20.0, 0.0, 0.0), 0.999).unwrap()
    }

    #[test]
    fn lawnmower_switches_once_per_boundary_and_flips_sign() {
        let mut m = lawnmower((5.0, 30.0));
        // Inside the chain: horizontal.
        let pose = Pose::new(Vec3::new(0.0, 20.0, 10.0), 0.0);
        let d = m.select_step(&pose, &wall_frame(&pose)).unwrap();
        assert_eq!(d.mode, StepMode::Horizontal);

        // Past the far end: exactly one vertical switch.
        let pose = Pose::new(Vec3::new(0.0, 41.0, 10.0), 0.0);
        let d = m.select_step(&pose, &wall_frame(&pose)).unwrap();
        assert_eq!(d.mode, StepMode::VerticalSwitch);
        let plan = TickPlan {
            reference: Pose::new(Vec3::new(0.0, 41.0, 13.3), 0.0),
            predicted: Vec::new(),
            applied: Some(crate::planner::AppliedStep {
                mode: StepMode::VerticalSwitch,
                lateral_sign: 1.0,
                nn_range: 20.0,
                p_nn: Vec3::new(20.0, 41.0, 10.0),
                d_insp: 0.0,
                d_hov: 0.0,
                d_vov: 3.3,
            }),
            diagnostic: None,
        };
        m.after_plan(&plan);
        assert_eq!(m.context().sweep_sign, -1.0);

        // While climbing, hold; no second switch.
        let d = m.select_step(&pose, &wall_frame(&pose)).unwrap();
        assert_eq!(d.mode, StepMode::Hold);

        // Climb done: lateral sweeping resumes toward the chain start.
        let pose = Pose::new(Vec3::new(0.0, 41.0, 13.2), 0.0);
        let d = m.select_step(&pose, &wall_frame(&pose)).unwrap();
        assert_eq!(d.mode, StepMode::Horizontal);
        assert_eq!(d.lateral_sign, -1.0);
    }

    #[test]
    fn lawnmower_band_exhaustion_returns_home() {
        let mut m = lawnmower((5.0, 12.0));
        // Boundary reached above the band: mission over.
        let pose = Pose::new(Vec3::new(0.0, 41.0, 13.0), 0.0);
        assert!(m.select_step(&pose, &wall_frame(&pose)).is_none());
        assert_eq!(m.phase(), Phase::ReturnHome);
    }

    #[test]
    fn route_validation() {
        assert!(LandmarkRoute::new(vec![], 5.0).is_err());
        assert!(LandmarkRoute::new(vec![Vec3::ZERO], 0.0).is_err());
        let route = LandmarkRoute::new(vec![Vec3::ZERO], 5.0).unwrap();
        let cfg = LawnmowerConfig {
            boundary_margin: 0.0,
            altitude_band: (0.0, 10.0),
            vertical_sign: 1.0,
            climb_tolerance: 0.5,
        };
        assert!(Mission::new(
            route,
            MissionMode::Lawnmower(cfg),
            None,
            Pose::new(Vec3::ZERO, 0.0)
        )
        .is_err());
    }
}
