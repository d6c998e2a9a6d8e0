//! Quadrature on intervals, triangles, edges and polygonal cells.
//!
//! Triangle rules are collapsed (Duffy) tensor Gauss–Legendre rules, which
//! have positive weights and reach any requested polynomial exactness.
//! Polygon rules are composed from the triangles of an ear-clipping
//! triangulation, so non-convex cells need no special treatment.

use std::borrow::Cow;
use std::sync::OnceLock;

use crate::error::Result;
use crate::mesh::{triangulate_polygon, PolygonalMesh};
use crate::Point;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const CACHED_RULES: usize = 64;

impl GaussLegendre {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            // Chebyshev-like initial guess, refined by Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Rule for `n` points; rules below 64 points are computed once and shared.
    pub fn cached(n: usize) -> Cow<'static, GaussLegendre> {
        static CACHE: [OnceLock<GaussLegendre>; CACHED_RULES] =
            [const { OnceLock::new() }; CACHED_RULES];
        if n < CACHED_RULES {
            Cow::Borrowed(CACHE[n].get_or_init(|| GaussLegendre::new(n)))
        } else {
            Cow::Owned(GaussLegendre::new(n))
        }
    }

    /// Smallest rule exact for degree `exactness`.
    pub fn for_exactness(exactness: usize) -> Cow<'static, GaussLegendre> {
        Self::cached(exactness / 2 + 1)
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A 2D quadrature rule.
#[derive(Debug, Clone, Default)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub exactness: usize,
}

impl QuadratureRule {
    /// Collapsed Gauss rule on the triangle `(a, b, c)`.
    pub fn triangle(a: Point, b: Point, c: Point, exactness: usize) -> Self {
        let mut rule = Self {
            exactness,
            ..Self::default()
        };
        rule.push_triangle(&a, &b, &c);
        rule
    }

    fn push_triangle(&mut self, a: &Point, b: &Point, c: &Point) {
        // (u, v) ∈ [0,1]² ↦ a + u(b - a) + v(1 - u)(c - a), Jacobian 2|T|(1 - u);
        // the Jacobian raises the degree in u by one
        let gu = GaussLegendre::for_exactness(self.exactness + 1);
        let gv = GaussLegendre::for_exactness(self.exactness);
        let twice_area = ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs();
        let (ab, ac) = (b - a, c - a);
        for (xu, wu) in gu.nodes.iter().zip(&gu.weights) {
            let u = 0.5 * (xu + 1.0);
            for (xv, wv) in gv.nodes.iter().zip(&gv.weights) {
                let v = 0.5 * (xv + 1.0) * (1.0 - u);
                self.points.push(a + ab * u + ac * v);
                self.weights.push(0.25 * wu * wv * twice_area * (1.0 - u));
            }
        }
    }

    /// Rule on a simple CCW polygon, composed over its triangulation.
    pub fn polygon(pts: &[Point], exactness: usize) -> Result<Self> {
        let tris = triangulate_polygon(pts)?;
        let mut rule = Self {
            exactness,
            ..Self::default()
        };
        for [i, j, k] in tris {
            rule.push_triangle(&pts[i], &pts[j], &pts[k]);
        }
        Ok(rule)
    }

    /// Rule on a mesh cell, integrating polynomials of total degree
    /// `exactness` exactly.
    pub fn cell(mesh: &PolygonalMesh, cell: usize, exactness: usize) -> Result<Self> {
        let pts = mesh.cell_points(cell);
        Self::polygon(&pts, exactness).map_err(|e| match e {
            crate::Error::DegenerateCell { area, .. } => crate::Error::DegenerateCell { cell, area },
            other => other,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// Gauss rule on a straight segment. `params` are the reference
/// coordinates in `[-1, 1]`, `-1` at `start`.
#[derive(Debug, Clone)]
pub struct EdgeRule {
    pub points: Vec<Point>,
    pub params: Vec<f64>,
    /// Weights including the length factor `|e|/2`.
    pub weights: Vec<f64>,
}

impl EdgeRule {
    pub fn new(start: Point, end: Point, exactness: usize) -> Self {
        let g = GaussLegendre::for_exactness(exactness);
        let half = 0.5 * (end - start).norm();
        let mid = start + (end - start) * 0.5;
        let dir = (end - start) * 0.5;
        Self {
            points: g.nodes.iter().map(|&s| mid + dir * s).collect(),
            params: g.nodes.clone(),
            weights: g.weights.iter().map(|w| w * half).collect(),
        }
    }

    pub fn for_edge(mesh: &PolygonalMesh, edge: usize, exactness: usize) -> Self {
        let (a, b) = mesh.edge_points(edge);
        Self::new(a, b, exactness)
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}
