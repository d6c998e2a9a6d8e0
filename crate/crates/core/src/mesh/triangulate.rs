use super::{cross, diameter, signed_area};
use crate::error::{Error, Result};
use crate::Point;

/// Ear-clipping triangulation of a simple CCW polygon.
///
/// Returns triangles as triples of loop positions. Collinear vertices are
/// dropped without emitting a zero-area triangle, so an `m`-gon without
/// collinear vertices yields exactly `m - 2` triangles.
pub fn triangulate_polygon(pts: &[Point]) -> Result<Vec<[usize; 3]>> {
    let area = signed_area(pts);
    let scale = diameter(pts);
    let tol = 1e-12 * scale * scale;
    if pts.len() < 3 || area.abs() <= tol || !area.is_finite() {
        return Err(Error::DegenerateCell { cell: 0, area });
    }
    if area < 0.0 {
        return Err(Error::InvalidMesh("polygon is not counter-clockwise".into()));
    }

    let mut ring: Vec<usize> = (0..pts.len()).collect();
    let mut tris = Vec::with_capacity(pts.len() - 2);
    while ring.len() > 3 {
        let m = ring.len();
        let mut clipped = false;
        for i in 0..m {
            let (ia, ib, ic) = (ring[(i + m - 1) % m], ring[i], ring[(i + 1) % m]);
            let (a, b, c) = (&pts[ia], &pts[ib], &pts[ic]);
            let turn = cross(a, b, c);
            if turn < -tol {
                continue;
            }
            if turn.abs() <= tol {
                // straight angle: removing b leaves the polygon unchanged
                ring.remove(i);
                clipped = true;
                break;
            }
            let blocked = ring.iter().any(|&j| {
                j != ia && j != ib && j != ic && {
                    let p = &pts[j];
                    p != a && p != b && p != c && in_triangle(p, a, b, c, tol)
                }
            });
            if !blocked {
                tris.push([ia, ib, ic]);
                ring.remove(i);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return Err(Error::InvalidMesh("ear clipping found no ear; polygon is not simple".into()));
        }
    }
    let (a, b, c) = (&pts[ring[0]], &pts[ring[1]], &pts[ring[2]]);
    if cross(a, b, c) > tol {
        tris.push([ring[0], ring[1], ring[2]]);
    }
    Ok(tris)
}

/// Closed-triangle membership for a CCW triangle.
fn in_triangle(p: &Point, a: &Point, b: &Point, c: &Point, tol: f64) -> bool {
    cross(a, b, p) >= -tol && cross(b, c, p) >= -tol && cross(c, a, p) >= -tol
}
