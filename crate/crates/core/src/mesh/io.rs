//! Plain-text mesh format:
//!
//! ```text
//! NV NC
//! x y          (NV lines)
//! m i1 ... im  (NC lines, 0-based CCW vertex indices)
//! ```

use std::fmt::Write as _;

use super::PolygonalMesh;
use crate::error::{Error, Result};
use crate::Point;

impl PolygonalMesh {
    /// Serializes the mesh. Coordinates use the shortest representation
    /// that parses back to the same `f64`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.num_vertices(), self.num_cells());
        for p in self.vertices() {
            let _ = writeln!(s, "{} {}", p.x, p.y);
        }
        for lp in self.cells() {
            let _ = write!(s, "{}", lp.len());
            for v in lp {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let perr = |line: usize, message: String| Error::Parse { line, message };

        let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty mesh file".into()))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| perr(ln, format!("bad header: {e}")))?;
        let [nv, nc] = nums[..] else {
            return Err(perr(ln, "header must be `NV NC`".into()));
        };

        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| perr(ln, "unexpected end of file in vertex block".into()))?;
            let xy: Vec<f64> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(ln, format!("bad coordinate: {e}")))?;
            let [x, y] = xy[..] else {
                return Err(perr(ln, "vertex line must be `x y`".into()));
            };
            vertices.push(Point::new(x, y));
        }

        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| perr(ln, "unexpected end of file in cell block".into()))?;
            let ids: Vec<usize> = l
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(ln, format!("bad index: {e}")))?;
            match ids.split_first() {
                Some((&m, rest)) if m == rest.len() => cells.push(rest.to_vec()),
                _ => return Err(perr(ln, "cell line must be `m i1 ... im`".into())),
            }
        }
        if let Some((ln, _)) = lines.next() {
            return Err(perr(ln, "trailing content after cell block".into()));
        }
        PolygonalMesh::new(vertices, cells)
    }
}
