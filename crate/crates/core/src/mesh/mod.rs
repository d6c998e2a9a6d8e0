//! Polygonal meshes of planar domains.
//!
//! Cells are stored as counter-clockwise vertex loops. Edges are unique and
//! globally oriented from the lower to the higher vertex index; the `i`-th
//! edge of a cell joins loop vertices `i` and `i + 1`.

mod families;
mod io;
mod triangulate;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::{Point, Vector};

pub use families::{
    build_mesh, build_nonconvex_mesh, build_uniform_triangle_mesh, squares_per_side, MeshFamily,
};
pub use triangulate::triangulate_polygon;

/// A unique mesh edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints, lower vertex index first. This fixes the edge orientation
    /// used by edge polynomial bases.
    pub vertices: [usize; 2],
    /// First cell that references the edge.
    pub left: usize,
    /// Second cell, `None` on the domain boundary.
    pub right: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }
}

/// Per-cell geometric quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub area: f64,
    pub centroid: Point,
    /// Maximum pairwise vertex distance.
    pub diameter: f64,
}

#[derive(Debug, Clone)]
pub struct PolygonalMesh {
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    cell_edges: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    geometry: Vec<CellGeometry>,
}

impl PolygonalMesh {
    /// Builds a mesh from vertices and CCW cell loops, checking that every
    /// cell is a simple polygon of positive area and that the cells are
    /// conforming (each edge shared by at most two cells with opposite
    /// traversal directions).
    pub fn new(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }
        let mut geometry = Vec::with_capacity(cells.len());
        for (c, lp) in cells.iter().enumerate() {
            if lp.len() < 3 {
                return Err(Error::InvalidMesh(format!("cell {c} has fewer than 3 vertices")));
            }
            if let Some(&v) = lp.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("cell {c} references missing vertex {v}")));
            }
            let pts: Vec<Point> = lp.iter().map(|&v| vertices[v]).collect();
            let area = signed_area(&pts);
            let scale = diameter(&pts);
            if area.abs() <= 1e-14 * scale * scale || !area.is_finite() {
                return Err(Error::DegenerateCell { cell: c, area });
            }
            if area < 0.0 {
                return Err(Error::InvalidMesh(format!("cell {c} is not counter-clockwise")));
            }
            if !is_simple(&pts) {
                return Err(Error::InvalidMesh(format!("cell {c} is not a simple polygon")));
            }
            geometry.push(CellGeometry {
                area,
                centroid: centroid(&pts),
                diameter: scale,
            });
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        // direction of the first traversal, true when it runs lower -> higher
        let mut forward: Vec<bool> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, lp) in cells.iter().enumerate() {
            let m = lp.len();
            let mut ids = Vec::with_capacity(m);
            for i in 0..m {
                let (a, b) = (lp[i], lp[(i + 1) % m]);
                if a == b {
                    return Err(Error::InvalidMesh(format!("cell {c} repeats vertex {a}")));
                }
                let key = (a.min(b), a.max(b));
                let id = match lookup.get(&key) {
                    Some(&id) => {
                        let e = &mut edges[id];
                        if e.right.is_some() || e.left == c {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({}, {}) is shared by more than two cell sides",
                                key.0, key.1
                            )));
                        }
                        if forward[id] == (a < b) {
                            return Err(Error::InvalidMesh(format!(
                                "cells {} and {c} traverse edge ({}, {}) in the same direction",
                                e.left, key.0, key.1
                            )));
                        }
                        e.right = Some(c);
                        id
                    }
                    None => {
                        let id = edges.len();
                        edges.push(Edge {
                            vertices: [key.0, key.1],
                            left: c,
                            right: None,
                        });
                        forward.push(a < b);
                        lookup.insert(key, id);
                        id
                    }
                };
                ids.push(id);
            }
            cell_edges.push(ids);
        }

        Ok(Self {
            vertices,
            cells,
            cell_edges,
            edges,
            geometry,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    /// Vertex loop of a cell (CCW).
    pub fn cell(&self, cell: usize) -> &[usize] {
        &self.cells[cell]
    }

    /// Edge ids of a cell in loop order.
    pub fn cell_edges(&self, cell: usize) -> &[usize] {
        &self.cell_edges[cell]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, edge: usize) -> &Edge {
        &self.edges[edge]
    }

    pub fn geometry(&self, cell: usize) -> &CellGeometry {
        &self.geometry[cell]
    }

    pub fn cell_points(&self, cell: usize) -> Vec<Point> {
        self.cells[cell].iter().map(|&v| self.vertices[v]).collect()
    }

    /// Endpoints of an edge in its global orientation.
    pub fn edge_points(&self, edge: usize) -> (Point, Point) {
        let [a, b] = self.edges[edge].vertices;
        (self.vertices[a], self.vertices[b])
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let (a, b) = self.edge_points(edge);
        (b - a).norm()
    }

    /// Mesh size `h = max_T h_T`.
    pub fn mesh_size(&self) -> f64 {
        self.geometry.iter().map(|g| g.diameter).fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    pub fn max_edges_per_cell(&self) -> usize {
        self.cells.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Outward unit normal of the `local`-th edge of a cell.
    pub fn local_normal(&self, cell: usize, local: usize) -> Vector {
        let lp = &self.cells[cell];
        let a = self.vertices[lp[local]];
        let b = self.vertices[lp[(local + 1) % lp.len()]];
        let t = b - a;
        Vector::new(t.y, -t.x) / t.norm()
    }

    /// Outward unit normal of `edge` seen from `cell`.
    pub fn outward_normal(&self, cell: usize, edge: usize) -> Result<Vector> {
        let local = self.cell_edges[cell]
            .iter()
            .position(|&e| e == edge)
            .ok_or(Error::EdgeNotOnCell { cell, edge })?;
        Ok(self.local_normal(cell, local))
    }

    /// Splits a cell into triangles by ear clipping.
    pub fn triangulate_cell(&self, cell: usize) -> Result<Vec<[Point; 3]>> {
        let pts = self.cell_points(cell);
        let tris = triangulate_polygon(&pts).map_err(|e| match e {
            Error::DegenerateCell { area, .. } => Error::DegenerateCell { cell, area },
            other => other,
        })?;
        Ok(tris.into_iter().map(|[a, b, c]| [pts[a], pts[b], pts[c]]).collect())
    }

    /// Number of reflex (interior angle > π) vertices of a cell.
    pub fn reflex_vertex_count(&self, cell: usize) -> usize {
        reflex_vertices(&self.cell_points(cell)).len()
    }

    pub fn is_convex(&self) -> bool {
        (0..self.num_cells()).all(|c| self.reflex_vertex_count(c) == 0)
    }

    /// Index of the cell containing `p`, by a crossing-number test.
    pub fn locate(&self, p: &Point) -> Option<usize> {
        (0..self.num_cells()).find(|&c| point_in_polygon(p, &self.cell_points(c)))
    }

    /// Cell whose boundary is closest to `p`.
    pub fn nearest_cell(&self, p: &Point) -> usize {
        let mut best = (f64::INFINITY, 0);
        for c in 0..self.num_cells() {
            let pts = self.cell_points(c);
            let m = pts.len();
            for i in 0..m {
                let d = point_segment_distance(p, &pts[i], &pts[(i + 1) % m]);
                if d < best.0 {
                    best = (d, c);
                }
            }
        }
        best.1
    }
}

pub fn signed_area(pts: &[Point]) -> f64 {
    let m = pts.len();
    let mut s = 0.0;
    for i in 0..m {
        let (a, b) = (pts[i], pts[(i + 1) % m]);
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

pub fn centroid(pts: &[Point]) -> Point {
    let m = pts.len();
    let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
    // shift to the first vertex to limit cancellation
    let o = pts[0];
    for i in 0..m {
        let a = pts[i] - o;
        let b = pts[(i + 1) % m] - o;
        let w = a.x * b.y - b.x * a.y;
        a2 += w;
        cx += (a.x + b.x) * w;
        cy += (a.y + b.y) * w;
    }
    Point::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2))
}

pub fn diameter(pts: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max((pts[i] - pts[j]).norm());
        }
    }
    d
}

pub(crate) fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Loop positions of the reflex vertices of a CCW polygon.
pub fn reflex_vertices(pts: &[Point]) -> Vec<usize> {
    let m = pts.len();
    let scale = diameter(pts);
    (0..m)
        .filter(|&i| {
            let prev = &pts[(i + m - 1) % m];
            let next = &pts[(i + 1) % m];
            cross(prev, &pts[i], next) < -1e-12 * scale * scale
        })
        .collect()
}

fn segments_intersect(p1: &Point, p2: &Point, q1: &Point, q2: &Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: &Point, b: &Point, p: &Point, d: f64| {
        d == 0.0
            && p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// True when no two non-adjacent sides of the loop touch.
pub fn is_simple(pts: &[Point]) -> bool {
    let m = pts.len();
    for i in 0..m {
        for j in i + 1..m {
            if j == i + 1 || (i == 0 && j == m - 1) {
                continue;
            }
            if segments_intersect(&pts[i], &pts[(i + 1) % m], &pts[j], &pts[(j + 1) % m]) {
                return false;
            }
        }
    }
    // repeated vertices produce touching adjacent sides
    for i in 0..m {
        for j in i + 1..m {
            if pts[i] == pts[j] {
                return false;
            }
        }
    }
    true
}

pub fn point_in_polygon(p: &Point, pts: &[Point]) -> bool {
    let m = pts.len();
    let mut inside = false;
    let mut j = m - 1;
    for i in 0..m {
        let (a, b) = (&pts[i], &pts[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}
