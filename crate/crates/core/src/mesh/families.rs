use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::PolygonalMesh;
use crate::error::{Error, Result};
use crate::Point;

/// Mesh families of the unit square. Level `ℓ` always uses a
/// `2^(ℓ-1) × 2^(ℓ-1)` grid of squares, each subdivided according to the
/// family, so `h` halves from one level to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshFamily {
    /// Every square split by its lower-left to upper-right diagonal.
    Triangle,
    /// Every square cut into four hexagons by a cross whose arms are kinked
    /// (pinwheel), giving one reflex vertex per cell.
    CrossSplit,
    /// Every square cut into two pentagons along a zigzag diagonal.
    Zigzag,
    /// Every square cut into two L-shaped hexagons by a staircase; staircases
    /// are mirrored in alternate columns so neighbors match.
    LPair,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 4] = [
        MeshFamily::Triangle,
        MeshFamily::CrossSplit,
        MeshFamily::Zigzag,
        MeshFamily::LPair,
    ];
    pub const NONCONVEX: [MeshFamily; 3] =
        [MeshFamily::CrossSplit, MeshFamily::Zigzag, MeshFamily::LPair];

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::Triangle => "triangle",
            MeshFamily::CrossSplit => "cross-split",
            MeshFamily::Zigzag => "zigzag",
            MeshFamily::LPair => "l-pair",
        }
    }

    pub fn is_convex(self) -> bool {
        self == MeshFamily::Triangle
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "triangle" | "triangles" | "tri" => Ok(MeshFamily::Triangle),
            "crosssplit" | "cross" => Ok(MeshFamily::CrossSplit),
            "zigzag" => Ok(MeshFamily::Zigzag),
            "lpair" => Ok(MeshFamily::LPair),
            _ => Err(Error::UnknownFamily(s.to_string())),
        }
    }
}

/// Number of grid squares per side at a level.
pub fn squares_per_side(level: u32) -> Result<usize> {
    if level == 0 {
        return Err(Error::InvalidParameter("mesh level must be at least 1".into()));
    }
    if level > 20 {
        return Err(Error::InvalidParameter(format!("mesh level {level} is too large")));
    }
    Ok(1usize << (level - 1))
}

pub fn build_mesh(family: MeshFamily, level: u32) -> Result<PolygonalMesh> {
    match family {
        MeshFamily::Triangle => build_uniform_triangle_mesh(level),
        other => build_nonconvex_mesh(other, level),
    }
}

pub fn build_uniform_triangle_mesh(level: u32) -> Result<PolygonalMesh> {
    let n = squares_per_side(level)?;
    let h = 1.0 / n as f64;
    let vertices = (0..=n)
        .flat_map(|j| (0..=n).map(move |i| Point::new(i as f64 * h, j as f64 * h)))
        .collect();
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.push(vec![v00, v10, v11]);
            cells.push(vec![v00, v11, v01]);
        }
    }
    PolygonalMesh::new(vertices, cells)
}

const CROSS_KINK: f64 = 0.15;
const ZIGZAG_OFFSET: f64 = 0.1;
const STAIR_LOW: f64 = 1.0 / 3.0;
const STAIR_HIGH: f64 = 2.0 / 3.0;

/// Cells of one reference square `[0,1]²` for a family; `column` is the
/// square's column index (used by mirrored families).
fn reference_cells(family: MeshFamily, column: usize) -> Vec<Vec<[f64; 2]>> {
    match family {
        MeshFamily::Triangle => vec![
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
            vec![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        ],
        MeshFamily::CrossSplit => {
            let d = CROSS_KINK;
            let c = [0.5, 0.5];
            let (mb, mr, mt, ml) = ([0.5, 0.0], [1.0, 0.5], [0.5, 1.0], [0.0, 0.5]);
            let kb = [0.5 + d, 0.25];
            let kr = [0.75, 0.5 + d];
            let kt = [0.5 - d, 0.75];
            let kl = [0.25, 0.5 - d];
            vec![
                vec![[0.0, 0.0], mb, kb, c, kl, ml],
                vec![mb, [1.0, 0.0], mr, kr, c, kb],
                vec![c, kr, mr, [1.0, 1.0], mt, kt],
                vec![ml, kl, c, kt, mt, [0.0, 1.0]],
            ]
        }
        MeshFamily::Zigzag => {
            let e = ZIGZAG_OFFSET;
            let z1 = [1.0 / 3.0 + e, 1.0 / 3.0 - e];
            let z2 = [2.0 / 3.0 - e, 2.0 / 3.0 + e];
            vec![
                vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], z2, z1],
                vec![[0.0, 0.0], z1, z2, [1.0, 1.0], [0.0, 1.0]],
            ]
        }
        MeshFamily::LPair => {
            let (lo, hi, s) = (STAIR_LOW, STAIR_HIGH, 0.5);
            let cells = vec![
                vec![[0.0, 0.0], [1.0, 0.0], [1.0, lo], [s, lo], [s, hi], [0.0, hi]],
                vec![[0.0, hi], [s, hi], [s, lo], [1.0, lo], [1.0, 1.0], [0.0, 1.0]],
            ];
            if column % 2 == 0 {
                cells
            } else {
                cells
                    .into_iter()
                    .map(|c| c.into_iter().rev().map(|[x, y]| [1.0 - x, y]).collect())
                    .collect()
            }
        }
    }
}

/// Builds one of the non-convex families. Passing [`MeshFamily::Triangle`]
/// is rejected; use [`build_uniform_triangle_mesh`].
pub fn build_nonconvex_mesh(family: MeshFamily, level: u32) -> Result<PolygonalMesh> {
    if family.is_convex() {
        return Err(Error::InvalidParameter(format!(
            "`{family}` is not a non-convex mesh family"
        )));
    }
    let n = squares_per_side(level)?;
    let h = 1.0 / n as f64;
    let mut vertices: Vec<Point> = Vec::new();
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut cells = Vec::new();
    // coordinates are rationals with small denominators; snap to a fine
    // lattice to merge vertices shared by neighboring squares
    let key = |x: f64| (x * 3.0e9).round() as i64;
    for j in 0..n {
        for i in 0..n {
            for cell in reference_cells(family, i) {
                let lp = cell
                    .into_iter()
                    .map(|[x, y]| {
                        let p = Point::new((i as f64 + x) * h, (j as f64 + y) * h);
                        *index.entry((key(p.x), key(p.y))).or_insert_with(|| {
                            vertices.push(p);
                            vertices.len() - 1
                        })
                    })
                    .collect();
                cells.push(lp);
            }
        }
    }
    PolygonalMesh::new(vertices, cells)
}
