//! Quantitative evaluation: cloud-to-cloud error, voxel coverage of the
//! target surface, and aggregate mission reports recomputable from a run log
//! alone.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::cloud::{KdIndex, PointCloud};
use crate::error::{Error, Result};
use crate::footprint::{
    lateral_overlap_fraction, overlap_steps, project_footprint, CameraModel,
};
use crate::geometry::{Aabb, Vec3};
use crate::mission::Phase;
use crate::planner::compute_frame;
use crate::runlog::RunLog;
use crate::sim::mesh::SurfaceMesh;

/// Fixed-bin histogram of nearest-neighbor distances: 0.05 m bins up to
/// 2.0 m plus an overflow bucket, so reports stay comparable across runs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    pub bin_width: u64,
    pub counts: Vec<u64>,
    pub overflow: u64,
}

pub const HISTOGRAM_BIN_M: f64 = 0.05;
pub const HISTOGRAM_MAX_M: f64 = 2.0;
const HISTOGRAM_BINS: usize = 40;

impl DistanceHistogram {
    fn new() -> Self {
        DistanceHistogram {
            bin_width: (HISTOGRAM_BIN_M * 1000.0) as u64,
            counts: vec![0; HISTOGRAM_BINS],
            overflow: 0,
        }
    }

    fn add(&mut self, distance: f64) {
        let bin = (distance / HISTOGRAM_BIN_M).floor();
        if bin.is_finite() && (bin as usize) < HISTOGRAM_BINS {
            self.counts[bin as usize] += 1;
        } else {
            self.overflow += 1;
        }
    }

    /// CSV rows `bin_lo_m,bin_hi_m,count`, overflow last.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo_m,bin_hi_m,count\n");
        for (i, count) in self.counts.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{count}\n",
                i as f64 * HISTOGRAM_BIN_M,
                (i + 1) as f64 * HISTOGRAM_BIN_M
            ));
        }
        out.push_str(&format!("{HISTOGRAM_MAX_M},inf,{}\n", self.overflow));
        out
    }
}

/// Per-point nearest-neighbor comparison of a measured cloud against a
/// reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudToCloud {
    pub mean: f64,
    /// Mean of the distances at or below the 98th percentile, which damps
    /// fringe outliers.
    pub trimmed_mean: f64,
    pub max: f64,
    pub count: usize,
    pub histogram: DistanceHistogram,
}

/// Distance statistics measured -> reference (one NN distance per measured
/// point).
pub fn cloud_to_cloud(measured: &PointCloud, reference: &PointCloud) -> Result<CloudToCloud> {
    if measured.is_empty() || reference.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let index = KdIndex::build(reference)?;
    let mut histogram = DistanceHistogram::new();
    let mut distances = Vec::with_capacity(measured.len());
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for p in &measured.points {
        let d = index.nearest_neighbor(*p).distance;
        sum += d;
        max = max.max(d);
        histogram.add(d);
        distances.push(d);
    }
    let mean = sum / measured.len() as f64;
    distances.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let keep = ((distances.len() as f64 * 0.98).ceil() as usize).clamp(1, distances.len());
    let trimmed_mean = distances[..keep].iter().sum::<f64>() / keep as f64;
    Ok(CloudToCloud { mean, trimmed_mean, max, count: measured.len(), histogram })
}

type VoxelKey = (i64, i64, i64);

/// Voxelized ground-truth surface plus the subset observed so far.
///
/// Truth voxels are seeded by densely sampling the mesh triangles; scan
/// points mark their containing voxel observed, and points falling outside
/// the truth set are ignored so `observed` stays a subset of the surface.
#[derive(Clone, Debug)]
pub struct CoverageGrid {
    voxel_size: f64,
    truth: HashSet<VoxelKey>,
    observed: HashSet<VoxelKey>,
}

impl CoverageGrid {
    pub fn from_mesh(mesh: &SurfaceMesh, voxel_size: f64) -> Result<Self> {
        if !(voxel_size.is_finite() && voxel_size > 0.0) {
            return Err(Error::validation("voxel_size", "must be > 0"));
        }
        let mut truth = HashSet::new();
        let spacing = voxel_size / 3.0;
        for i in 0..mesh.triangles().len() {
            let [a, b, c] = mesh.triangle_vertices(i);
            let n = ((b - a).norm().max((c - a).norm()).max((c - b).norm()) / spacing).ceil()
                as usize;
            let n = n.max(1);
            for u in 0..=n {
                for v in 0..=(n - u) {
                    let p = a + (b - a) * (u as f64 / n as f64) + (c - a) * (v as f64 / n as f64);
                    truth.insert(key(p, voxel_size));
                }
            }
        }
        Ok(CoverageGrid { voxel_size, truth, observed: HashSet::new() })
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn truth_count(&self) -> usize {
        self.truth.len()
    }

    pub fn observed_count(&self) -> usize {
        self.observed.len()
    }

    /// Mark each scan point's voxel observed. Idempotent per voxel.
    pub fn update(&mut self, scan: &PointCloud) {
        for p in &scan.points {
            let k = key(*p, self.voxel_size);
            if self.truth.contains(&k) {
                self.observed.insert(k);
            }
        }
    }

    /// Observed fraction of the truth voxels whose centers fall inside the
    /// region of interest (the whole surface when `roi` is `None`).
    pub fn coverage_fraction(&self, roi: Option<&Aabb>) -> Result<f64> {
        let center = |k: &VoxelKey| {
            Vec3::new(
                (k.0 as f64 + 0.5) * self.voxel_size,
                (k.1 as f64 + 0.5) * self.voxel_size,
                (k.2 as f64 + 0.5) * self.voxel_size,
            )
        };
        let in_roi = |k: &VoxelKey| roi.map_or(true, |r| r.contains(center(k)));
        let truth = self.truth.iter().filter(|k| in_roi(k)).count();
        if truth == 0 {
            return Err(Error::EmptyRoi);
        }
        let observed = self.observed.iter().filter(|k| in_roi(k)).count();
        Ok(observed as f64 / truth as f64)
    }
}

fn key(p: Vec3, voxel: f64) -> VoxelKey {
    (
        (p.x / voxel).floor() as i64,
        (p.y / voxel).floor() as i64,
        (p.z / voxel).floor() as i64,
    )
}

/// Order statistics over a sample set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub p98: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn from_values(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut sorted: Vec<f64> = values.to_vec();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let rank = |q: f64| sorted[(((n as f64) * q).ceil() as usize).clamp(1, n) - 1];
        Some(Stats {
            count: n,
            mean: sorted.iter().sum::<f64>() / n as f64,
            median,
            p98: rank(0.98),
            min: sorted[0],
            max: sorted[n - 1],
        })
    }
}

/// Aggregate mission metrics, serialized as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ticks: u64,
    pub duration_s: f64,
    pub final_phase: String,
    pub completed: bool,
    pub path_length_m: f64,
    pub inspect_ticks: u64,
    /// Standoff (nearest-neighbor range) over inspect ticks with a surface
    /// fix, meters.
    pub standoff_m: Option<Stats>,
    /// |standoff - d_view| over the same ticks.
    pub standoff_error_m: Option<Stats>,
    /// Achieved lateral footprint overlap between consecutive capture poses.
    pub lateral_overlap: Option<Stats>,
    pub capture_count: usize,
    pub coverage_fraction: f64,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::validation("report", e.to_string()))
    }
}

/// Recompute every report metric from a log. Replaying a saved log yields
/// the same report as the original run.
pub fn run_report(log: &RunLog) -> Result<MetricsReport> {
    if log.records.is_empty() {
        return Err(Error::EmptyLog);
    }
    let camera = CameraModel::new(log.meta.alpha, log.meta.beta, log.meta.gamma_h, log.meta.gamma_v)?;

    let mut path_length = 0.0;
    for pair in log.records.windows(2) {
        path_length += pair[0].odom.position.distance(pair[1].odom.position);
    }

    let inspect: Vec<_> =
        log.records.iter().filter(|r| r.phase == Phase::Inspect).collect();
    let fixed: Vec<_> = inspect.iter().filter(|r| r.has_surface_fix()).collect();
    let standoffs: Vec<f64> = fixed.iter().map(|r| r.nn_range).collect();
    let errors: Vec<f64> = standoffs.iter().map(|r| (r - log.meta.d_view).abs()).collect();

    let overlaps = achieved_overlaps(log, &camera);
    let last = log.records.last().unwrap();

    Ok(MetricsReport {
        ticks: log.records.len() as u64,
        duration_s: log.records.len() as f64 * log.meta.tick_dt,
        final_phase: last.phase.as_str().to_string(),
        completed: last.phase == Phase::Done,
        path_length_m: path_length,
        inspect_ticks: inspect.len() as u64,
        standoff_m: Stats::from_values(&standoffs),
        standoff_error_m: Stats::from_values(&errors),
        lateral_overlap: Stats::from_values(&overlaps),
        capture_count: overlaps.len() + usize::from(!overlaps.is_empty()),
        coverage_fraction: last.coverage_fraction,
    })
}

/// Measure the overlap the flown path actually achieved.
///
/// Capture poses are decimated from the inspect-phase odometry trace: a new
/// capture triggers at the first tick whose lateral displacement from the
/// previous capture (along that capture's lateral axis) reaches the overlap
/// step for the capture's range. Footprints at consecutive captures are then
/// compared geometrically, so regulation errors show up as overlap errors.
fn achieved_overlaps(log: &RunLog, camera: &CameraModel) -> Vec<f64> {
    let mut overlaps = Vec::new();
    let mut capture: Option<(crate::geometry::Pose, Vec3, f64)> = None;
    for record in log.records.iter().filter(|r| r.phase == Phase::Inspect && r.has_surface_fix())
    {
        let pose = record.odom;
        let p_nn = record.nn_point;
        let range = record.nn_range;
        match capture {
            None => capture = Some((pose, p_nn, range)),
            Some((cap_pose, cap_nn, cap_range)) => {
                let Ok(cap_frame) = compute_frame(cap_pose.position, cap_nn, 0.999) else {
                    continue;
                };
                let Ok((d_hov, _)) = overlap_steps(camera, cap_range) else { continue };
                if d_hov <= 0.0 {
                    break;
                }
                let lateral = (pose.position - cap_pose.position).dot(cap_frame.nu_y).abs();
                if lateral < d_hov {
                    continue;
                }
                let Ok(frame) = compute_frame(pose.position, p_nn, 0.999) else { continue };
                let a = project_footprint(&cap_pose, &cap_frame, cap_range, camera);
                let b = project_footprint(&pose, &frame, range, camera);
                if let (Ok(a), Ok(b)) = (a, b) {
                    overlaps.push(lateral_overlap_fraction(&a, &b));
                }
                capture = Some((pose, p_nn, range));
            }
        }
    }
    overlaps
}
