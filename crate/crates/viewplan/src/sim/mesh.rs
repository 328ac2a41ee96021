//! Triangle-mesh surfaces: synthetic generators, rigid recession, and the
//! bounding-volume hierarchy used by the ray caster.
//!
//! Generated walls are quasi-vertical sheets in the world frame, built as a
//! cross-section polyline in the XY plane extruded along Z. Every generator is
//! fully deterministic given its parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};

/// Synthetic surface descriptions. Lengths in meters, angles in degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SurfaceKind {
    /// Vertical plane at `x`, spanning `y` and `z` ranges.
    Plane { x: f64, y: (f64, f64), z: (f64, f64), cell: f64 },
    /// Vertical wall whose x offset follows `base_x + amplitude * sin(2*pi*y / wavelength)`.
    SineWall {
        base_x: f64,
        amplitude: f64,
        wavelength: f64,
        y: (f64, f64),
        z: (f64, f64),
        cell: f64,
    },
    /// Two vertical walls sharing a vertical edge at `corner`. The first leg
    /// runs toward -Y into the corner; the second leaves it turned clockwise
    /// by `turn_deg` (90 makes the classic convex building corner).
    Corner { corner: (f64, f64), turn_deg: f64, leg: f64, z: (f64, f64), cell: f64 },
    /// Vertical wall with per-vertex x offsets on a regular (z-row, y-column)
    /// grid of `cell` spacing starting at `(y0, z0)`.
    Heightfield { base_x: f64, y0: f64, z0: f64, cell: f64, offsets: Vec<Vec<f64>> },
}

/// A triangle soup with optional provenance for test oracles.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    pub generator: Option<SurfaceKind>,
}

const DEGENERATE_AREA: f64 = 1e-12;

impl SurfaceMesh {
    /// Build a mesh from raw arrays, dropping zero-area triangles and
    /// rejecting out-of-range indices.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len() as u32;
        for (i, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::InvalidParams(format!(
                    "triangle {i} references vertex {} of {n}",
                    tri.iter().max().unwrap()
                )));
            }
        }
        if let Some(v) = vertices.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite vertex {v:?}")));
        }
        let triangles = triangles
            .into_iter()
            .filter(|t| {
                triangle_area(vertices[t[0] as usize], vertices[t[1] as usize], vertices[t[2] as usize])
                    > DEGENERATE_AREA
            })
            .collect();
        Ok(SurfaceMesh { vertices, triangles, generator: None })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn triangle_vertices(&self, i: usize) -> [Vec3; 3] {
        let t = self.triangles[i];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn bounds(&self) -> Option<Aabb> {
        Aabb::from_points(self.vertices.iter().copied())
    }
}

pub fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    (b - a).cross(c - a).norm() * 0.5
}

/// Translate every vertex by `direction * distance`; topology is unchanged.
pub fn recede_face(mesh: &SurfaceMesh, direction: Vec3, distance: f64) -> SurfaceMesh {
    let shift = direction * distance;
    SurfaceMesh {
        vertices: mesh.vertices.iter().map(|&v| v + shift).collect(),
        triangles: mesh.triangles.clone(),
        generator: mesh.generator.clone(),
    }
}

/// Generate a synthetic surface.
pub fn make_surface(kind: &SurfaceKind) -> Result<SurfaceMesh> {
    let mut mesh = match kind {
        SurfaceKind::Plane { x, y, z, cell } => {
            check_positive("cell", *cell)?;
            check_span("y", *y)?;
            check_span("z", *z)?;
            let path = sample_segment((*x, y.0), (*x, y.1), *cell);
            extrude_polyline(&path, *z, *cell)
        }
        SurfaceKind::SineWall { base_x, amplitude, wavelength, y, z, cell } => {
            check_positive("cell", *cell)?;
            check_positive("wavelength", *wavelength)?;
            check_span("y", *y)?;
            check_span("z", *z)?;
            if *amplitude < 0.0 {
                return Err(Error::InvalidParams("amplitude must be >= 0".into()));
            }
            let n = steps(y.1 - y.0, *cell);
            let path: Vec<(f64, f64)> = (0..=n)
                .map(|j| {
                    let yy = y.0 + (y.1 - y.0) * j as f64 / n as f64;
                    (base_x + amplitude * (std::f64::consts::TAU * yy / wavelength).sin(), yy)
                })
                .collect();
            extrude_polyline(&path, *z, *cell)
        }
        SurfaceKind::Corner { corner, turn_deg, leg, z, cell } => {
            check_positive("cell", *cell)?;
            check_positive("leg", *leg)?;
            check_span("z", *z)?;
            let turn = turn_deg.to_radians();
            // First leg approaches the corner heading +Y; the second leaves
            // it rotated clockwise by `turn`.
            let entry = (corner.0, corner.1 - leg);
            let exit_dir = (turn.sin(), turn.cos());
            let exit = (corner.0 + exit_dir.0 * leg, corner.1 + exit_dir.1 * leg);
            let mut path = sample_segment(entry, *corner, *cell);
            path.pop(); // corner vertex re-added by the second leg
            path.extend(sample_segment(*corner, exit, *cell));
            extrude_polyline(&path, *z, *cell)
        }
        SurfaceKind::Heightfield { base_x, y0, z0, cell, offsets } => {
            check_positive("cell", *cell)?;
            let rows = offsets.len();
            if rows < 2 || offsets[0].len() < 2 {
                return Err(Error::InvalidParams("heightfield grid must be at least 2x2".into()));
            }
            let cols = offsets[0].len();
            if offsets.iter().any(|r| r.len() != cols) {
                return Err(Error::InvalidParams("heightfield rows have unequal lengths".into()));
            }
            let mut vertices = Vec::with_capacity(rows * cols);
            for (i, row) in offsets.iter().enumerate() {
                for (j, h) in row.iter().enumerate() {
                    vertices.push(Vec3::new(
                        base_x + h,
                        y0 + j as f64 * cell,
                        z0 + i as f64 * cell,
                    ));
                }
            }
            let triangles = grid_triangles(rows, cols);
            SurfaceMesh { vertices, triangles, generator: None }
        }
    };
    if mesh.is_empty() {
        return Err(Error::InvalidParams("surface parameters produce an empty mesh".into()));
    }
    mesh.generator = Some(kind.clone());
    Ok(mesh)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} must be positive, got {v}")))
    }
}

fn check_span(name: &str, span: (f64, f64)) -> Result<()> {
    if span.0.is_finite() && span.1.is_finite() && span.1 > span.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name} range must satisfy lo < hi, got {span:?}")))
    }
}

fn steps(span: f64, cell: f64) -> usize {
    ((span / cell).ceil() as usize).max(1)
}

/// Points from `a` to `b` inclusive at roughly `cell` spacing.
fn sample_segment(a: (f64, f64), b: (f64, f64), cell: f64) -> Vec<(f64, f64)> {
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    let n = steps(len, cell);
    (0..=n)
        .map(|j| {
            let t = j as f64 / n as f64;
            (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t)
        })
        .collect()
}

/// Extrude an XY polyline along Z into a two-triangles-per-cell sheet.
fn extrude_polyline(path: &[(f64, f64)], z: (f64, f64), cell: f64) -> SurfaceMesh {
    let rows = steps(z.1 - z.0, cell) + 1;
    let cols = path.len();
    let mut vertices = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let zz = z.0 + (z.1 - z.0) * i as f64 / (rows - 1) as f64;
        for &(x, y) in path {
            vertices.push(Vec3::new(x, y, zz));
        }
    }
    SurfaceMesh { vertices, triangles: grid_triangles(rows, cols), generator: None }
}

fn grid_triangles(rows: usize, cols: usize) -> Vec<[u32; 3]> {
    let mut triangles = Vec::with_capacity((rows - 1) * (cols - 1) * 2);
    for i in 0..rows - 1 {
        for j in 0..cols - 1 {
            let a = (i * cols + j) as u32;
            let b = (i * cols + j + 1) as u32;
            let c = ((i + 1) * cols + j) as u32;
            let d = ((i + 1) * cols + j + 1) as u32;
            triangles.push([a, b, c]);
            triangles.push([c, b, d]);
        }
    }
    triangles
}

/// Moller-Trumbore ray/triangle intersection; returns the ray parameter `t`
/// (distance, for a unit direction) when it lies in `[0, t_max]`.
pub fn ray_triangle(origin: Vec3, dir: Vec3, tri: [Vec3; 3], t_max: f64) -> Option<f64> {
    const EPS: f64 = 1e-12;
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < EPS {
        return None;
    }
    let inv_det = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(p) * inv_det;
    if !(-EPS..=1.0 + EPS).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv_det;
    if v < -EPS || u + v > 1.0 + EPS {
        return None;
    }
    let t = e2.dot(q) * inv_det;
    if t >= 0.0 && t <= t_max {
        Some(t)
    } else {
        None
    }
}

struct BvhNode {
    aabb: Aabb,
    // Leaf when len > 0, inner otherwise.
    start: u32,
    len: u32,
    left: u32,
    right: u32,
}

/// Precomputed acceleration structure for repeated scans of one mesh.
pub struct RayCaster<'a> {
    mesh: &'a SurfaceMesh,
    nodes: Vec<BvhNode>,
    order: Vec<u32>,
    root: u32,
}

const BVH_LEAF: usize = 8;

impl<'a> RayCaster<'a> {
    pub fn new(mesh: &'a SurfaceMesh) -> Self {
        let centroids: Vec<Vec3> = (0..mesh.triangles.len())
            .map(|i| {
                let [a, b, c] = mesh.triangle_vertices(i);
                (a + b + c) * (1.0 / 3.0)
            })
            .collect();
        let boxes: Vec<Aabb> = (0..mesh.triangles.len())
            .map(|i| Aabb::from_points(mesh.triangle_vertices(i)).unwrap())
            .collect();
        let mut order: Vec<u32> = (0..mesh.triangles.len() as u32).collect();
        let mut nodes = Vec::new();
        let root = if order.is_empty() {
            nodes.push(BvhNode {
                aabb: Aabb::new(Vec3::ZERO, Vec3::ZERO),
                start: 0,
                len: 0,
                left: 0,
                right: 0,
            });
            0
        } else {
            build_bvh(&centroids, &boxes, &mut order, 0, mesh.triangles.len(), &mut nodes)
        };
        RayCaster { mesh, nodes, order, root: root as u32 }
    }

    pub fn mesh(&self) -> &SurfaceMesh {
        self.mesh
    }

    /// Distance to the nearest triangle hit within `t_max`, if any.
    /// `dir` must be unit length for the result to be metric.
    pub fn cast(&self, origin: Vec3, dir: Vec3, t_max: f64) -> Option<f64> {
        if self.mesh.is_empty() {
            return None;
        }
        let inv_dir = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best = t_max;
        let mut hit = false;
        self.cast_node(self.root, origin, dir, inv_dir, &mut best, &mut hit);
        hit.then_some(best)
    }

    fn cast_node(
        &self,
        node: u32,
        origin: Vec3,
        dir: Vec3,
        inv_dir: Vec3,
        best: &mut f64,
        hit: &mut bool,
    ) {
        let n = &self.nodes[node as usize];
        if !n.aabb.intersects_ray(origin, inv_dir, *best) {
            return;
        }
        if n.len > 0 {
            for &tri in &self.order[n.start as usize..(n.start + n.len) as usize] {
                if let Some(t) =
                    ray_triangle(origin, dir, self.mesh.triangle_vertices(tri as usize), *best)
                {
                    *best = t;
                    *hit = true;
                }
            }
        } else {
            self.cast_node(n.left, origin, dir, inv_dir, best, hit);
            self.cast_node(n.right, origin, dir, inv_dir, best, hit);
        }
    }
}

fn build_bvh(
    centroids: &[Vec3],
    boxes: &[Aabb],
    order: &mut [u32],
    start: usize,
    len: usize,
    nodes: &mut Vec<BvhNode>,
) -> usize {
    let slice = &mut order[start..start + len];
    let mut aabb = boxes[slice[0] as usize];
    for &i in slice.iter() {
        aabb = aabb.merge(&boxes[i as usize]);
    }
    if len <= BVH_LEAF {
        nodes.push(BvhNode { aabb, start: start as u32, len: len as u32, left: 0, right: 0 });
        return nodes.len() - 1;
    }

    let extent = aabb.max - aabb.min;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    let mid = len / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        let ca = centroids[a as usize].axis(axis);
        let cb = centroids[b as usize].axis(axis);
        ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
    });

    let placeholder = nodes.len();
    nodes.push(BvhNode { aabb, start: 0, len: 0, left: 0, right: 0 });
    let left = build_bvh(centroids, boxes, order, start, mid, nodes);
    let right = build_bvh(centroids, boxes, order, start + mid, len - mid, nodes);
    nodes[placeholder].left = left as u32;
    nodes[placeholder].right = right as u32;
    placeholder
}
