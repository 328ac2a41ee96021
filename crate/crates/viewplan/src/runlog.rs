//! Per-tick mission log with CSV serialization.
//!
//! The file is self-contained: a `# key value` preamble carries the few
//! planner parameters metric recomputation needs, followed by one CSV row per
//! simulation tick. Floats use shortest round-trip formatting, so identical
//! runs serialize to identical bytes and reload losslessly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::mission::Phase;
use crate::planner::{PlanStep, StepMode};

/// Planner parameters embedded in the log for replay.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogMeta {
    pub d_view: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma_h: f64,
    pub gamma_v: f64,
    pub tick_dt: f64,
    pub seed: u64,
}

/// One simulation tick.
#[derive(Clone, Debug, PartialEq)]
pub struct TickRecord {
    pub tick: u64,
    pub time: f64,
    pub phase: Phase,
    pub active_landmark: usize,
    /// Step mode applied by the planner, when it planned.
    pub step_mode: Option<StepMode>,
    pub sweep_sign: f64,
    pub odom: Pose,
    pub reference: Pose,
    /// Nearest sensed surface point at the odometry position (NaN triple
    /// when the tick had no usable scan).
    pub nn_point: Vec3,
    pub nn_range: f64,
    pub d_insp: f64,
    pub d_hov: f64,
    pub d_vov: f64,
    pub coverage_fraction: f64,
    pub diagnostic: String,
    pub predicted: Vec<PlanStep>,
}

impl TickRecord {
    pub fn has_surface_fix(&self) -> bool {
        self.nn_range.is_finite() && self.nn_point.is_finite()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunLog {
    pub meta: LogMeta,
    pub records: Vec<TickRecord>,
}

const COLUMNS: [&str; 24] = [
    "tick",
    "time",
    "phase",
    "active_landmark",
    "step_mode",
    "sweep_sign",
    "odom_x",
    "odom_y",
    "odom_z",
    "odom_yaw",
    "ref_x",
    "ref_y",
    "ref_z",
    "ref_yaw",
    "nn_x",
    "nn_y",
    "nn_z",
    "nn_range",
    "d_insp",
    "d_hov",
    "d_vov",
    "coverage_fraction",
    "diagnostic",
    "predicted",
];

impl RunLog {
    pub fn new(meta: LogMeta) -> Self {
        RunLog { meta, records: Vec::new() }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let m = &self.meta;
        let _ = writeln!(out, "# viewplan-runlog v1");
        let _ = writeln!(out, "# d_view {}", m.d_view);
        let _ = writeln!(out, "# alpha {}", m.alpha);
        let _ = writeln!(out, "# beta {}", m.beta);
        let _ = writeln!(out, "# gamma_h {}", m.gamma_h);
        let _ = writeln!(out, "# gamma_v {}", m.gamma_v);
        let _ = writeln!(out, "# tick_dt {}", m.tick_dt);
        let _ = writeln!(out, "# seed {}", m.seed);

        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(COLUMNS).expect("in-memory write");
        for r in &self.records {
            let predicted = r
                .predicted
                .iter()
                .map(|s| {
                    format!(
                        "{} {} {} {} {} {} {} {} {} {}",
                        s.pose.position.x,
                        s.pose.position.y,
                        s.pose.position.z,
                        s.pose.yaw,
                        s.p_nn.x,
                        s.p_nn.y,
                        s.p_nn.z,
                        s.d_insp,
                        s.d_hov_applied,
                        s.d_vov_applied
                    )
                })
                .collect::<Vec<_>>()
                .join("|");
            writer
                .write_record([
                    r.tick.to_string(),
                    r.time.to_string(),
                    r.phase.as_str().to_string(),
                    r.active_landmark.to_string(),
                    r.step_mode.map_or("-".to_string(), |m| m.as_str().to_string()),
                    r.sweep_sign.to_string(),
                    r.odom.position.x.to_string(),
                    r.odom.position.y.to_string(),
                    r.odom.position.z.to_string(),
                    r.odom.yaw.to_string(),
                    r.reference.position.x.to_string(),
                    r.reference.position.y.to_string(),
                    r.reference.position.z.to_string(),
                    r.reference.yaw.to_string(),
                    r.nn_point.x.to_string(),
                    r.nn_point.y.to_string(),
                    r.nn_point.z.to_string(),
                    r.nn_range.to_string(),
                    r.d_insp.to_string(),
                    r.d_hov.to_string(),
                    r.d_vov.to_string(),
                    r.coverage_fraction.to_string(),
                    r.diagnostic.clone(),
                    predicted,
                ])
                .expect("in-memory write");
        }
        out.push_str(&String::from_utf8(writer.into_inner().expect("in-memory flush")).unwrap());
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, path)
    }

    pub fn from_csv_str(text: &str, origin: &Path) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::parse(origin, line, msg);

        let mut meta = std::collections::HashMap::new();
        let mut body_offset = 0;
        let mut body_start_byte = 0;
        for (i, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix('#') {
                let mut words = rest.split_whitespace();
                if let (Some(key), Some(value)) = (words.next(), words.next()) {
                    meta.insert(key.to_string(), value.to_string());
                }
                body_offset = i + 1;
                body_start_byte += line.len() + 1;
            } else {
                break;
            }
        }

        let get = |key: &str| -> Result<f64> {
            meta.get(key)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| perr(1, format!("missing or bad meta key '{key}'")))
        };
        let meta = LogMeta {
            d_view: get("d_view")?,
            alpha: get("alpha")?,
            beta: get("beta")?,
            gamma_h: get("gamma_h")?,
            gamma_v: get("gamma_v")?,
            tick_dt: get("tick_dt")?,
            seed: get("seed")? as u64,
        };

        let body = &text[body_start_byte.min(text.len())..];
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        {
            let headers = reader
                .headers()
                .map_err(|e| perr(body_offset + 1, e.to_string()))?;
            if headers.len() != COLUMNS.len() {
                return Err(perr(
                    body_offset + 1,
                    format!("expected {} columns, got {}", COLUMNS.len(), headers.len()),
                ));
            }
        }

        let mut records = Vec::new();
        for (row_idx, row) in reader.records().enumerate() {
            let line = body_offset + 2 + row_idx;
            let row = row.map_err(|e| perr(line, e.to_string()))?;
            if row.len() != COLUMNS.len() {
                return Err(perr(line, format!("row has {} of {} fields", row.len(), COLUMNS.len())));
            }
            let f = |idx: usize| -> Result<f64> {
                row[idx]
                    .parse()
                    .map_err(|_| perr(line, format!("bad float '{}' in {}", &row[idx], COLUMNS[idx])))
            };
            let phase = Phase::parse(&row[2])
                .ok_or_else(|| perr(line, format!("unknown phase '{}'", &row[2])))?;
            let step_mode = match &row[4] {
                "-" => None,
                "horizontal" => Some(StepMode::Horizontal),
                "vertical-switch" => Some(StepMode::VerticalSwitch),
                "hold" => Some(StepMode::Hold),
                other => return Err(perr(line, format!("unknown step mode '{other}'"))),
            };
            let predicted = parse_predicted(&row[23])
                .map_err(|msg| perr(line, format!("bad predicted field: {msg}")))?;
            records.push(TickRecord {
                tick: row[0].parse().map_err(|_| perr(line, "bad tick".into()))?,
                time: f(1)?,
                phase,
                active_landmark: row[3]
                    .parse()
                    .map_err(|_| perr(line, "bad active_landmark".into()))?,
                step_mode,
                sweep_sign: f(5)?,
                odom: Pose::new(Vec3::new(f(6)?, f(7)?, f(8)?), f(9)?),
                reference: Pose::new(Vec3::new(f(10)?, f(11)?, f(12)?), f(13)?),
                nn_point: Vec3::new(f(14)?, f(15)?, f(16)?),
                nn_range: f(17)?,
                d_insp: f(18)?,
                d_hov: f(19)?,
                d_vov: f(20)?,
                coverage_fraction: f(21)?,
                diagnostic: row[22].to_string(),
                predicted,
            });
        }
        if records.is_empty() {
            return Err(Error::EmptyLog);
        }
        Ok(RunLog { meta, records })
    }
}

fn parse_predicted(field: &str) -> std::result::Result<Vec<PlanStep>, String> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split('|')
        .map(|chunk| {
            let values: Vec<f64> = chunk
                .split_whitespace()
                .map(|w| w.parse().map_err(|_| format!("bad float '{w}'")))
                .collect::<std::result::Result<_, _>>()?;
            if values.len() != 10 {
                return Err(format!("expected 10 values per step, got {}", values.len()));
            }
            Ok(PlanStep {
                pose: Pose::new(Vec3::new(values[0], values[1], values[2]), values[3]),
                p_nn: Vec3::new(values[4], values[5], values[6]),
                d_insp: values[7],
                d_hov_applied: values[8],
                d_vov_applied: values[9],
            })
        })
        .collect()
}
