//! ASCII point-cloud and mesh file I/O.
//!
//! Clouds: ascii PLY (`element vertex` with x, y, z properties) and xyz-csv
//! (one `x,y,z` row per point, `#` comments). Meshes: the `v`/`f` OBJ subset
//! and ascii PLY with a face element. Floats are written with Rust's shortest
//! round-trip formatting, so save -> load is the identity on finite data.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::sim::mesh::SurfaceMesh;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudFormat {
    PlyAscii,
    XyzCsv,
}

impl CloudFormat {
    /// Infer from the file extension: `.ply` or `.xyz`/`.csv`.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("ply") => Ok(CloudFormat::PlyAscii),
            Some("xyz") | Some("csv") => Ok(CloudFormat::XyzCsv),
            other => Err(Error::validation(
                "cloud format",
                format!("cannot infer format from extension {other:?}"),
            )),
        }
    }
}

/// A loaded cloud plus how many non-finite rows were dropped.
#[derive(Clone, Debug)]
pub struct LoadedCloud {
    pub cloud: PointCloud,
    pub dropped: usize,
}

pub fn load_cloud(path: &Path, format: CloudFormat) -> Result<LoadedCloud> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        CloudFormat::PlyAscii => parse_ply_cloud(path, &text),
        CloudFormat::XyzCsv => parse_xyz_csv(path, &text),
    }
}

pub fn save_cloud(cloud: &PointCloud, path: &Path, format: CloudFormat) -> Result<()> {
    let mut out = String::new();
    match format {
        CloudFormat::PlyAscii => {
            write_ply_header(&mut out, cloud.len(), 0);
            for p in &cloud.points {
                let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
            }
        }
        CloudFormat::XyzCsv => {
            for p in &cloud.points {
                let _ = writeln!(out, "{},{},{}", p.x, p.y, p.z);
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn write_ply_header(out: &mut String, vertices: usize, faces: usize) {
    let _ = writeln!(out, "ply");
    let _ = writeln!(out, "format ascii 1.0");
    let _ = writeln!(out, "element vertex {vertices}");
    let _ = writeln!(out, "property float x");
    let _ = writeln!(out, "property float y");
    let _ = writeln!(out, "property float z");
    if faces > 0 {
        let _ = writeln!(out, "element face {faces}");
        let _ = writeln!(out, "property list uchar int vertex_indices");
    }
    let _ = writeln!(out, "end_header");
}

struct PlyHeader {
    vertex_count: usize,
    face_count: usize,
    /// Column positions of x, y, z among the vertex properties.
    xyz: [usize; 3],
    vertex_props: usize,
    body_start: usize,
}

fn parse_ply_header(path: &Path, lines: &[&str]) -> Result<PlyHeader> {
    let perr = |line: usize, msg: &str| Error::parse(path, line + 1, msg);
    if lines.first().map(|l| l.trim()) != Some("ply") {
        return Err(perr(0, "missing 'ply' magic"));
    }

    let mut vertex_count = None;
    let mut face_count = 0usize;
    let mut format_seen = false;
    let mut current_element: Option<String> = None;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut body_start = None;

    for (i, raw) in lines.iter().enumerate().skip(1) {
        let line = raw.trim();
        let mut words = line.split_whitespace();
        match words.next() {
            Some("comment") | Some("") | None => {}
            Some("format") => {
                if words.next() != Some("ascii") {
                    return Err(perr(i, "only 'format ascii 1.0' is supported"));
                }
                format_seen = true;
            }
            Some("element") => {
                let name = words.next().ok_or_else(|| perr(i, "element without a name"))?;
                let count: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| perr(i, "element without a count"))?;
                match name {
                    "vertex" => vertex_count = Some(count),
                    "face" => face_count = count,
                    _ => {}
                }
                current_element = Some(name.to_string());
            }
            Some("property") => {
                if current_element.as_deref() == Some("vertex") {
                    let name = words.next_back().unwrap_or_default();
                    vertex_props.push(name.to_string());
                }
            }
            Some("end_header") => {
                body_start = Some(i + 1);
                break;
            }
            Some(other) => {
                return Err(perr(i, &format!("unexpected header keyword '{other}'")));
            }
        }
    }

    let body_start = body_start.ok_or_else(|| perr(lines.len() - 1, "missing end_header"))?;
    if !format_seen {
        return Err(perr(0, "missing format line"));
    }
    let vertex_count =
        vertex_count.ok_or_else(|| perr(0, "missing 'element vertex' declaration"))?;
    let pos = |n: &str| vertex_props.iter().position(|p| p == n);
    let (x, y, z) = match (pos("x"), pos("y"), pos("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(perr(0, "vertex element lacks x, y, z properties")),
    };
    Ok(PlyHeader {
        vertex_count,
        face_count,
        xyz: [x, y, z],
        vertex_props: vertex_props.len(),
        body_start,
    })
}

fn parse_ply_vertices(
    path: &Path,
    lines: &[&str],
    header: &PlyHeader,
) -> Result<(Vec<Vec3>, usize, usize)> {
    let mut points = Vec::with_capacity(header.vertex_count);
    let mut dropped = 0;
    let mut line_no = header.body_start;
    let mut seen = 0;
    while seen < header.vertex_count {
        let raw = lines
            .get(line_no)
            .ok_or_else(|| Error::parse(path, line_no + 1, "unexpected end of vertex rows"))?;
        line_no += 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split_whitespace().collect();
        if fields.len() < header.vertex_props {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {} vertex fields, got {}", header.vertex_props, fields.len()),
            ));
        }
        let mut coord = [0.0f64; 3];
        for (slot, &col) in header.xyz.iter().enumerate() {
            coord[slot] = fields[col].parse::<f64>().map_err(|_| {
                Error::parse(path, line_no, format!("bad float '{}'", fields[col]))
            })?;
        }
        let p = Vec3::new(coord[0], coord[1], coord[2]);
        if p.is_finite() {
            points.push(p);
        } else {
            dropped += 1;
        }
        seen += 1;
    }
    Ok((points, dropped, line_no))
}

fn parse_ply_cloud(path: &Path, text: &str) -> Result<LoadedCloud> {
    let lines: Vec<&str> = text.lines().collect();
    let header = parse_ply_header(path, &lines)?;
    let (points, dropped, _) = parse_ply_vertices(path, &lines, &header)?;
    Ok(LoadedCloud { cloud: PointCloud::new(points), dropped })
}

fn parse_xyz_csv(path: &Path, text: &str) -> Result<LoadedCloud> {
    let mut points = Vec::new();
    let mut dropped = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                i + 1,
                format!("expected 3 comma-separated fields, got {}", fields.len()),
            ));
        }
        let mut coord = [0.0f64; 3];
        for (k, f) in fields.iter().enumerate() {
            coord[k] = f
                .parse::<f64>()
                .map_err(|_| Error::parse(path, i + 1, format!("bad float '{f}'")))?;
        }
        let p = Vec3::new(coord[0], coord[1], coord[2]);
        if p.is_finite() {
            points.push(p);
        } else {
            dropped += 1;
        }
    }
    Ok(LoadedCloud { cloud: PointCloud::new(points), dropped })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    PlyAscii,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("obj") => Ok(MeshFormat::Obj),
            Some("ply") => Ok(MeshFormat::PlyAscii),
            other => Err(Error::validation(
                "mesh format",
                format!("cannot infer format from extension {other:?}"),
            )),
        }
    }
}

pub fn load_mesh(path: &Path) -> Result<SurfaceMesh> {
    let format = MeshFormat::from_path(path)?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        MeshFormat::Obj => parse_obj(path, &text),
        MeshFormat::PlyAscii => parse_ply_mesh(path, &text),
    }
}

pub fn save_mesh(mesh: &SurfaceMesh, path: &Path) -> Result<()> {
    let format = MeshFormat::from_path(path)?;
    let mut out = String::new();
    match format {
        MeshFormat::Obj => {
            for v in mesh.vertices() {
                let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
            }
            for t in mesh.triangles() {
                let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
            }
        }
        MeshFormat::PlyAscii => {
            write_ply_header(&mut out, mesh.vertices().len(), mesh.triangles().len());
            for v in mesh.vertices() {
                let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
            }
            for t in mesh.triangles() {
                let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn parse_obj(path: &Path, text: &str) -> Result<SurfaceMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let mut words = line.split_whitespace();
        match words.next() {
            Some("v") => {
                let mut coord = [0.0f64; 3];
                for c in &mut coord {
                    let w = words
                        .next()
                        .ok_or_else(|| Error::parse(path, i + 1, "vertex with < 3 coordinates"))?;
                    *c = w
                        .parse()
                        .map_err(|_| Error::parse(path, i + 1, format!("bad float '{w}'")))?;
                }
                vertices.push(Vec3::new(coord[0], coord[1], coord[2]));
            }
            Some("f") => {
                let idx: Vec<u32> = words
                    .map(|w| {
                        let first = w.split('/').next().unwrap_or(w);
                        first
                            .parse::<i64>()
                            .ok()
                            .filter(|&v| v > 0)
                            .map(|v| (v - 1) as u32)
                            .ok_or_else(|| {
                                Error::parse(path, i + 1, format!("bad face index '{w}'"))
                            })
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::parse(path, i + 1, "face with < 3 vertices"));
                }
                // Fan triangulation for polygons.
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            // vn/vt/usemtl/comments and blanks are ignored.
            _ => {}
        }
    }
    SurfaceMesh::new(vertices, triangles)
}

fn parse_ply_mesh(path: &Path, text: &str) -> Result<SurfaceMesh> {
    let lines: Vec<&str> = text.lines().collect();
    let header = parse_ply_header(path, &lines)?;
    let (vertices, dropped, mut line_no) = parse_ply_vertices(path, &lines, &header)?;
    if dropped > 0 {
        return Err(Error::parse(path, line_no, "mesh vertices must be finite"));
    }
    let mut triangles = Vec::with_capacity(header.face_count);
    let mut seen = 0;
    while seen < header.face_count {
        let raw = lines
            .get(line_no)
            .ok_or_else(|| Error::parse(path, line_no + 1, "unexpected end of face rows"))?;
        line_no += 1;
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split_whitespace().collect();
        let count: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(path, line_no, "bad face vertex count"))?;
        if fields.len() != count + 1 {
            return Err(Error::parse(path, line_no, "face row length mismatch"));
        }
        let idx: Vec<u32> = fields[1..]
            .iter()
            .map(|w| {
                w.parse::<u32>()
                    .map_err(|_| Error::parse(path, line_no, format!("bad face index '{w}'")))
            })
            .collect::<Result<_>>()?;
        for k in 1..idx.len() - 1 {
            triangles.push([idx[0], idx[k], idx[k + 1]]);
        }
        seen += 1;
    }
    SurfaceMesh::new(vertices, triangles)
}
