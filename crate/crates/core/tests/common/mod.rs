//! Independent oracles shared by the integration tests and the acceptance
//! runner. Nothing here calls the library's quadrature: integrals use a
//! Gauss–Legendre rule computed from scratch, collapsed onto signed fan
//! triangles, or Romberg extrapolation on edges.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sfwg::assembly::{assemble, load_vector, Discretization, DofMap};
use sfwg::errors::{discrete_h1_norm, energy_norm, l2_pressure_error, l2_velocity_error};
use sfwg::manufactured::{case_patch, case_s2d, CubicPressureFlow, ExactFields};
use sfwg::mesh::{build_mesh, MeshFamily};
use sfwg::polybasis::{edge_coupling, grad_div_coupling, Component, EdgeBasis, MonomialBasis};
use sfwg::projection::{project_cell, project_edge, project_velocity};
use sfwg::study::{solve_and_measure, GradDegree};
use sfwg::quadrature::{EdgeRule, QuadratureRule};
use sfwg::weak_ops::{weak_divergence_matrix, weak_gradient_matrix};
use sfwg::{CellField, LevelErrors, Point, PolygonalMesh, WeakField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`,
/// by Newton iteration on the three-term recurrence.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Signed integral over the triangle `(a, b, c)` through the collapsed
/// square `x = a + s(b − a) + st(c − b)` with an `n × n` Gauss product.
pub fn triangle_integral(f: &dyn Fn(&Point) -> f64, a: Point, b: Point, c: Point, n: usize) -> f64 {
    let g = gauss_legendre(n);
    let (ba, cb) = (b - a, c - b);
    let det = ba.x * cb.y - ba.y * cb.x;
    let mut sum = 0.0;
    for &(u, wu) in &g {
        let s = 0.5 * (u + 1.0);
        for &(v, wv) in &g {
            let t = 0.5 * (v + 1.0);
            let p = a + ba * s + cb * (s * t);
            sum += 0.25 * wu * wv * s * f(&p);
        }
    }
    sum * det
}

/// Integral over a simple polygon as a signed fan from the first vertex.
/// Valid for non-convex polygons because the signed pieces cancel outside.
pub fn polygon_integral(f: &dyn Fn(&Point) -> f64, pts: &[Point], n: usize) -> f64 {
    (1..pts.len() - 1)
        .map(|i| triangle_integral(f, pts[0], pts[i], pts[i + 1], n))
        .sum()
}

pub fn cell_integral(mesh: &PolygonalMesh, cell: usize, f: &dyn Fn(&Point) -> f64) -> f64 {
    polygon_integral(f, &mesh.cell_points(cell), 24)
}

/// Romberg extrapolation of the trapezoid rule on `[a, b]`.
pub fn romberg(f: &dyn Fn(f64) -> f64, a: f64, b: f64, levels: usize) -> f64 {
    let mut table: Vec<Vec<f64>> = Vec::new();
    let mut h = b - a;
    let mut trap = 0.5 * h * (f(a) + f(b));
    for m in 0..levels {
        if m > 0 {
            let panels = 1usize << (m - 1);
            h *= 0.5;
            let mid: f64 = (0..panels).map(|i| f(a + (2 * i + 1) as f64 * h)).sum();
            trap = 0.5 * trap + h * mid;
        }
        let mut row = vec![trap];
        for j in 1..=m {
            let q = 4f64.powi(j as i32);
            let v = (q * row[j - 1] - table[m - 1][j - 1]) / (q - 1.0);
            row.push(v);
        }
        table.push(row);
    }
    *table.last().unwrap().last().unwrap()
}

/// `∫_T x² = |T|/6 (x₁² + x₂² + x₃² + x₁x₂ + x₁x₃ + x₂x₃)`.
pub fn analytic_x_squared(t: &[Point; 3]) -> f64 {
    let area = 0.5 * ((t[1] - t[0]).x * (t[2] - t[0]).y - (t[1] - t[0]).y * (t[2] - t[0]).x);
    let (a, b, c) = (t[0].x, t[1].x, t[2].x);
    area / 6.0 * (a * a + b * b + c * c + a * b + a * c + b * c)
}

pub fn shoelace(pts: &[Point]) -> f64 {
    let n = pts.len();
    0.5 * (0..n)
        .map(|i| pts[i].x * pts[(i + 1) % n].y - pts[(i + 1) % n].x * pts[i].y)
        .sum::<f64>()
}

pub fn l_hexagon() -> PolygonalMesh {
    let v = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.5, 1.0), (0.5, 0.5), (0.0, 0.5)];
    PolygonalMesh::new(v.iter().map(|&(x, y)| Point::new(x, y)).collect(), vec![(0..6).collect()]).unwrap()
}

pub fn unit_square_cell() -> PolygonalMesh {
    let v = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
    PolygonalMesh::new(v.iter().map(|&(x, y)| Point::new(x, y)).collect(), vec![vec![0, 1, 2, 3]]).unwrap()
}

/// Smooth random field: sums of plane waves per component.
#[derive(Debug, Clone)]
pub struct Waves {
    terms: Vec<[f64; 4]>,
}

impl Waves {
    pub fn new(seed: u64, n: usize) -> Self {
        let mut r = rng(seed);
        Self {
            terms: (0..n)
                .map(|_| {
                    [
                        r.gen_range(-1.0..1.0),
                        r.gen_range(-3.0..3.0),
                        r.gen_range(-3.0..3.0),
                        r.gen_range(0.0..6.3),
                    ]
                })
                .collect(),
        }
    }

    pub fn value(&self, p: &Point) -> f64 {
        self.terms.iter().map(|[a, b, c, d]| a * (b * p.x + c * p.y + d).sin()).sum()
    }

    pub fn gradient(&self, p: &Point) -> [f64; 2] {
        self.terms.iter().fold([0.0, 0.0], |g, [a, b, c, d]| {
            let s = a * (b * p.x + c * p.y + d).cos();
            [g[0] + s * b, g[1] + s * c]
        })
    }
}

/// Random smooth vector field with its gradient.
#[derive(Debug, Clone)]
pub struct WaveField(pub Waves, pub Waves);

impl WaveField {
    pub fn new(seed: u64) -> Self {
        WaveField(Waves::new(seed, 4), Waves::new(seed + 1000, 4))
    }

    pub fn value(&self, p: &Point) -> [f64; 2] {
        [self.0.value(p), self.1.value(p)]
    }

    /// `[i][j] = ∂_j u_i`.
    pub fn gradient(&self, p: &Point) -> [[f64; 2]; 2] {
        [self.0.gradient(p), self.1.gradient(p)]
    }

    pub fn divergence(&self, p: &Point) -> f64 {
        self.0.gradient(p)[0] + self.1.gradient(p)[1]
    }
}

/// Weak field with uniform random coefficients; boundary edges zero when
/// `homogeneous`.
pub fn random_weak_field(mesh: &PolygonalMesh, k: usize, seed: u64, homogeneous: bool) -> WeakField {
    let mut r = rng(seed);
    let mut v = WeakField::zeros(mesh, k);
    for c in 0..mesh.num_cells() {
        for comp in 0..2 {
            v.interior_mut(c, comp).iter_mut().for_each(|x| *x = r.gen_range(-1.0..1.0));
        }
    }
    for e in 0..mesh.num_edges() {
        let zero = homogeneous && mesh.edge(e).is_boundary();
        for comp in 0..2 {
            v.edge_mut(e, comp)
                .iter_mut()
                .for_each(|x| *x = if zero { 0.0 } else { r.gen_range(-1.0..1.0) });
        }
    }
    v
}

/// Outcome of one reproduced example.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub ok: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, ok: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            ok,
            detail: detail.into(),
        }
    }

    fn close(name: &'static str, got: f64, want: f64, tol: f64) -> Self {
        let err = (got - want).abs();
        Self::new(name, err <= tol, format!("got {got:e}, want {want:e}, |diff| {err:e} (tol {tol:e})"))
    }
}

pub fn triangle_counts_by_enumeration() -> Check {
    let mut bad = Vec::new();
    for level in 1..=5 {
        let mesh = build_mesh(MeshFamily::Triangle, level).unwrap();
        let n = 1usize << (level - 1);
        let want = (2 * n * n, (n + 1) * (n + 1), 2 * n * (n + 1) + n * n);
        let got = (mesh.num_cells(), mesh.num_vertices(), mesh.num_edges());
        if got != want {
            bad.push(format!("level {level}: {got:?} vs {want:?}"));
        }
    }
    let l2 = build_mesh(MeshFamily::Triangle, 2).unwrap();
    let ok = bad.is_empty() && (l2.num_cells(), l2.num_vertices(), l2.num_edges()) == (8, 9, 16);
    Check::new("triangle mesh counts", ok, bad.join("; "))
}

/// Reflex vertices by the sign of consecutive edge cross products.
pub fn reflex_count(pts: &[Point]) -> usize {
    let n = pts.len();
    (0..n)
        .filter(|&i| {
            let (a, b, c) = (pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]);
            let (u, v) = (b - a, c - b);
            u.x * v.y - u.y * v.x < -1e-14
        })
        .count()
}

pub fn l_pair_reflex_vertices() -> Check {
    let mesh = build_mesh(MeshFamily::LPair, 1).unwrap();
    let counts: Vec<usize> = (0..mesh.num_cells()).map(|c| reflex_count(&mesh.cell_points(c))).collect();
    Check::new("L-pair level 1 reflex vertices", counts.iter().all(|&n| n == 1), format!("{counts:?}"))
}

pub fn l_hexagon_triangulation() -> Check {
    let mesh = l_hexagon();
    let tris = mesh.triangulate_cell(0).unwrap();
    let area: f64 = tris.iter().map(|t| shoelace(t)).sum();
    let ok = tris.len() == 4 && tris.iter().all(|t| shoelace(t) > 0.0) && (area - 0.75).abs() < 1e-12;
    Check::new("L-hexagon triangulation", ok, format!("{} triangles, area {area}", tris.len()))
}

pub fn l_hexagon_x_squared() -> Check {
    let mesh = l_hexagon();
    let tris = mesh.triangulate_cell(0).unwrap();
    let analytic: f64 = tris.iter().map(analytic_x_squared).sum();
    let brute = cell_integral(&mesh, 0, &|p| p.x * p.x);
    let rule = QuadratureRule::cell(&mesh, 0, 2).unwrap().integrate(|p| p.x * p.x);
    // unit square minus the square [0, ½] × [½, 1]
    let want = 1.0 / 3.0 - 1.0 / 48.0;
    let err = (analytic - want).abs().max((brute - want).abs()).max((rule - want).abs());
    Check::new(
        "∫x² over the L-hexagon",
        err < 1e-13,
        format!("analytic {analytic}, brute {brute}, rule {rule}"),
    )
}

pub fn unit_square_linear_mass() -> Check {
    let mesh = unit_square_cell();
    let basis = MonomialBasis::scaled_for_cell(&mesh, 0, 1);
    let mut m = DMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = cell_integral(&mesh, 0, &|p| basis.eval(p)[i] * basis.eval(p)[j]);
        }
    }
    let want = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0 / 24.0, 1.0 / 24.0]));
    let err = (&m - &want).abs().max();
    Check::new("unit-square linear mass", err < 1e-14, format!("max deviation {err:e}"))
}

/// `cᵀ C_x d` against `∫ p ∂_x q` evaluated pointwise with the oracle rule.
pub fn coupling_vs_independent_rule() -> Check {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for family in [MeshFamily::Triangle, MeshFamily::LPair, MeshFamily::CrossSplit] {
        let mesh = build_mesh(family, 2).unwrap();
        for (cell, k, deg) in [(0, 1, 2), (1, 2, 5), (2, 3, 4)] {
            for orth in [false, true] {
                let pick = |d| {
                    if orth {
                        MonomialBasis::for_cell(&mesh, cell, d)
                    } else {
                        MonomialBasis::scaled_for_cell(&mesh, cell, d)
                    }
                };
                let (trial, test) = (pick(k), pick(deg));
                let quad = QuadratureRule::cell(&mesh, cell, k + deg + 2).unwrap();
                let (cx, cy) = grad_div_coupling(&quad, &trial, &test);
                let c = DVector::from_fn(trial.dim(), |_, _| r.gen_range(-1.0..1.0));
                let d = DVector::from_fn(test.dim(), |_, _| r.gen_range(-1.0..1.0));
                let grad = |p: &Point| {
                    let (mut dx, mut dy) = (vec![0.0; test.dim()], vec![0.0; test.dim()]);
                    test.eval_grad_into(p, &mut dx, &mut dy);
                    let dot = |g: &[f64]| g.iter().zip(d.iter()).map(|(a, b)| a * b).sum::<f64>();
                    (dot(&dx), dot(&dy))
                };
                let ox = cell_integral(&mesh, cell, &|p| trial.evaluate(c.as_slice(), p) * grad(p).0);
                let oy = cell_integral(&mesh, cell, &|p| trial.evaluate(c.as_slice(), p) * grad(p).1);
                let (gx, gy) = ((c.transpose() * &cx * &d)[0], (c.transpose() * &cy * &d)[0]);
                let scale = 1.0 + ox.abs().max(oy.abs());
                worst = worst.max((gx - ox).abs() / scale).max((gy - oy).abs() / scale);
            }
        }
    }
    Check::new("gradient coupling vs independent rule", worst < 1e-12, format!("max rel diff {worst:e}"))
}

pub fn edge_coupling_vs_romberg() -> Check {
    let mut worst: f64 = 0.0;
    for family in [MeshFamily::Triangle, MeshFamily::Zigzag] {
        let mesh = build_mesh(family, 2).unwrap();
        let cell = 3;
        for (k, deg) in [(1, 2), (2, 5), (3, 4)] {
            let cb = MonomialBasis::for_cell(&mesh, cell, deg);
            for &e in mesh.cell_edges(cell) {
                let eb = EdgeBasis::for_edge(&mesh, e, k);
                let rule = EdgeRule::for_edge(&mesh, e, k + deg + 2);
                let n = mesh.outward_normal(cell, e).unwrap();
                let (a, b) = mesh.edge_points(e);
                let len = (b - a).norm();
                for comp in [Component::X, Component::Y] {
                    let m = edge_coupling(&rule, &eb, &cb, &n, comp);
                    for i in 0..eb.dim() {
                        for j in 0..cb.dim() {
                            let f = |t: f64| {
                                let p = a + (b - a) * t;
                                eb.eval(&p)[i] * cb.eval(&p)[j] * comp.of(&n) * len
                            };
                            let want = romberg(&f, 0.0, 1.0, 12);
                            worst = worst.max((m[(i, j)] - want).abs());
                        }
                    }
                }
            }
        }
    }
    Check::new("edge coupling vs Romberg", worst < 1e-12, format!("max diff {worst:e}"))
}

pub fn single_edge_weak_gradient() -> Check {
    let mut worst: f64 = 0.0;
    for mesh in [unit_square_cell(), l_hexagon()] {
        let area = mesh.geometry(0).area;
        for &e in mesh.cell_edges(0) {
            let mut v = WeakField::zeros(&mesh, 1);
            v.edge_mut(e, 0)[0] = 1.0;
            let g = weak_gradient_matrix(&mesh, 0, 1, 0).unwrap();
            let out = g.apply(&v.local_vector(&mesh, 0));
            let n = mesh.outward_normal(0, e).unwrap();
            let scale = mesh.edge_length(e) / area;
            worst = worst
                .max((out[0][0][0] - scale * n.x).abs())
                .max((out[0][1][0] - scale * n.y).abs())
                .max(out[1][0][0].abs())
                .max(out[1][1][0].abs());
        }
    }
    Check::new("single-edge trace weak gradient", worst < 1e-13, format!("max diff {worst:e}"))
}

pub fn normal_trace_divergence() -> Check {
    let mesh = unit_square_cell();
    let mut v = WeakField::zeros(&mesh, 1);
    for &e in mesh.cell_edges(0) {
        let n = mesh.outward_normal(0, e).unwrap();
        v.edge_mut(e, 0)[0] = n.x;
        v.edge_mut(e, 1)[0] = n.y;
    }
    let d = weak_divergence_matrix(&mesh, 0, 1).unwrap().apply(&v.local_vector(&mesh, 0));
    Check::close("normal trace weak divergence", d[0], 4.0, 1e-13)
}

/// Observed order of `‖f − Q₀f‖` for `f = sin(πx)sin(πy)`.
pub fn projection_decay(k: usize) -> (Vec<f64>, Vec<f64>) {
    let f = |p: &Point| (std::f64::consts::PI * p.x).sin() * (std::f64::consts::PI * p.y).sin();
    let errs: Vec<f64> = (3..=6)
        .map(|level| {
            let mesh = build_mesh(MeshFamily::Triangle, level).unwrap();
            (0..mesh.num_cells())
                .map(|c| {
                    let q = project_cell(&mesh, c, k, f).unwrap();
                    let basis = MonomialBasis::for_cell(&mesh, c, k);
                    cell_integral(&mesh, c, &|p| (f(p) - basis.evaluate(q.as_slice(), p)).powi(2))
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let orders = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    (errs, orders)
}

pub fn projection_decay_check() -> Check {
    let mut detail = Vec::new();
    let mut ok = true;
    for k in 1..=3 {
        let (_, orders) = projection_decay(k);
        ok &= orders.iter().all(|o| (o - (k + 1) as f64).abs() < 0.2);
        detail.push(format!("k={k}: {orders:.3?}"));
    }
    Check::new("cell projection decay", ok, detail.join("; "))
}

/// Least-squares fit in the edge's Legendre basis on equispaced samples.
pub fn edge_least_squares(mesh: &PolygonalMesh, e: usize, k: usize, f: &dyn Fn(&Point) -> f64, n: usize) -> DVector<f64> {
    let eb = EdgeBasis::for_edge(mesh, e, k);
    let (a, b) = mesh.edge_points(e);
    let mut v = DMatrix::zeros(n, k + 1);
    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        let p = a + (b - a) * ((i as f64 + 0.5) / n as f64);
        let beta = eb.eval(&p);
        for j in 0..=k {
            v[(i, j)] = beta[j];
        }
        rhs[i] = f(&p);
    }
    v.svd(true, true).solve(&rhs, 1e-14).unwrap()
}

pub fn edge_projection_vs_least_squares() -> Check {
    let mesh = build_mesh(MeshFamily::Triangle, 1).unwrap();
    let diag = (0..mesh.num_edges()).find(|&e| !mesh.edge(e).is_boundary()).unwrap();
    let f = |p: &Point| p.x;
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        let q = project_edge(&mesh, diag, k, f);
        let ls = edge_least_squares(&mesh, diag, k, &f, 1000);
        worst = worst.max((q - ls).abs().max());
    }
    Check::new("edge projection vs least squares", worst < 1e-10, format!("max diff {worst:e}"))
}

pub fn dof_count_two_triangles() -> Check {
    let mesh = build_mesh(MeshFamily::Triangle, 1).unwrap();
    let dofs = DofMap::new(&mesh, 1);
    let interior_edges = mesh.edges().iter().filter(|e| !e.is_boundary()).count();
    let want_v = mesh.num_cells() * 2 * 3 + interior_edges * 2 * 2;
    let got = (dofs.n_velocity(), dofs.n_pressure(), dofs.total());
    let ok = got == (want_v, mesh.num_cells(), want_v + mesh.num_cells() + 1) && got == (16, 2, 19);
    Check::new("DOF count on two triangles", ok, format!("{got:?}"))
}

/// Entries of the load vector against the oracle quadrature of `f · b_i`.
pub fn load_vector_vs_oracle() -> Check {
    let mut worst: f64 = 0.0;
    let w = WaveField::new(11);
    let mut r = rng(12);
    let a: Vec<f64> = (0..20).map(|_| r.gen_range(-1.0..1.0)).collect();
    // random cubic per component; with k = 1 the integrand has degree 4
    let cubic = move |p: &Point| {
        let m = [1.0, p.x, p.y, p.x * p.x, p.x * p.y, p.y * p.y, p.x.powi(3), p.x * p.x * p.y, p.x * p.y * p.y, p.y.powi(3)];
        let dot = |o: usize| m.iter().zip(&a[o..o + 10]).map(|(x, y)| x * y).sum::<f64>();
        [dot(0), dot(10)]
    };
    let cases: [(Box<dyn Fn(&Point) -> [f64; 2] + Sync>, bool, usize); 3] = [
        (Box::new(|_: &Point| [1.0, 0.0]), true, 0),
        (Box::new(cubic), false, 0),
        (Box::new(move |p: &Point| w.value(p)), false, 16),
    ];
    for (f, constant, bump) in &cases {
        for family in [MeshFamily::Triangle, MeshFamily::LPair] {
            let mesh = build_mesh(family, 2).unwrap();
            let disc = Discretization::new(1, 2, 1.0).unwrap().with_quad_bump(*bump);
            let dofs = DofMap::new(&mesh, 1);
            let load = load_vector(&mesh, &disc, f.as_ref()).unwrap();
            for c in 0..mesh.num_cells() {
                let basis = MonomialBasis::for_cell(&mesh, c, 1);
                for comp in 0..2 {
                    for i in 0..basis.dim() {
                        let want = cell_integral(&mesh, c, &|p| f(p)[comp] * basis.eval(p)[i]);
                        let got = load[dofs.velocity_interior(c, comp, i)];
                        worst = worst.max((got - want).abs());
                        if *constant && comp == 0 && i == 0 {
                            worst = worst.max((got - mesh.geometry(c).area).abs());
                        }
                    }
                }
            }
            let edges_zero = (dofs.n_interior_velocity()..dofs.n_velocity()).all(|i| load[i] == 0.0);
            if !edges_zero {
                worst = f64::INFINITY;
            }
        }
    }
    Check::new("load vector vs oracle", worst < 1e-10, format!("max diff {worst:e}"))
}

pub fn velocity_error_vs_oracle() -> Check {
    let mesh = build_mesh(MeshFamily::CrossSplit, 2).unwrap();
    let k = 2;
    let a = random_weak_field(&mesh, k, 3, false);
    let b = random_weak_field(&mesh, k, 4, false);
    let got = l2_velocity_error(&a, &b, &mesh).unwrap();
    let sum: f64 = (0..mesh.num_cells())
        .map(|c| {
            let basis = MonomialBasis::for_cell(&mesh, c, k);
            cell_integral(&mesh, c, &|p| {
                (0..2)
                    .map(|comp| (basis.evaluate(a.interior(c, comp), p) - basis.evaluate(b.interior(c, comp), p)).powi(2))
                    .sum()
            })
        })
        .sum();
    Check::close("velocity L2 error vs oracle", got, sum.sqrt(), 1e-11 * sum.sqrt())
}

pub fn energy_vs_assembled_form() -> Check {
    let mut worst: f64 = 0.0;
    for (family, k, r) in [(MeshFamily::Triangle, 1, 2), (MeshFamily::LPair, 2, 5), (MeshFamily::Zigzag, 1, 3)] {
        let mesh = build_mesh(family, 2).unwrap();
        let disc = Discretization::new(k, r, 0.7).unwrap();
        let (sys, dofs) = assemble(&mesh, &disc, &|_: &Point| [0.0, 0.0]).unwrap();
        let a = sys.velocity_block();
        for seed in 0..5 {
            let v = random_weak_field(&mesh, k, seed, true);
            let x = dofs.gather_velocity(&v).unwrap();
            let form = a.quadratic_form(&x);
            let e = energy_norm(&v, &mesh, &disc).unwrap();
            worst = worst.max((e * e - form).abs() / form);
        }
    }
    Check::new("energy norm vs assembled quadratic form", worst < 1e-10, format!("max rel diff {worst:e}"))
}

pub fn cubic_pressure_norm() -> Check {
    let mesh = build_mesh(MeshFamily::Triangle, 3).unwrap();
    let ph = CellField::zeros(mesh.num_cells(), 0, 1);
    let p = |x: &Point| CubicPressureFlow.pressure(x);
    let got = l2_pressure_error(&ph, &p, &mesh).unwrap();
    let brute: f64 = (0..mesh.num_cells()).map(|c| cell_integral(&mesh, c, &|x| p(x).powi(2))).sum();
    let want = (1.0f64 / 448.0).sqrt();
    let ok = (got - want).abs() < 1e-13 && (brute.sqrt() - want).abs() < 1e-13;
    Check::new("‖(x−½)³‖", ok, format!("got {got}, brute {}, want {want}", brute.sqrt()))
}

pub fn single_edge_h1_norm() -> Check {
    let mesh = unit_square_cell();
    let e = mesh.cell_edges(0)[0];
    let mut v = WeakField::zeros(&mesh, 1);
    v.edge_mut(e, 0)[0] = 1.0;
    let got = discrete_h1_norm(&v, &mesh, 0.0).unwrap();
    Check::close("discrete H1 norm of a unit edge trace", got, 2f64.powf(-0.25), 1e-14)
}

pub fn manufactured_fields() -> Check {
    let case = case_s2d(1.0);
    let mut r = rng(5);
    let mut div: f64 = 0.0;
    for _ in 0..20 {
        let p = Point::new(r.gen_range(0.0..1.0), r.gen_range(0.0..1.0));
        div = div.max(case.divergence(&p).abs());
    }
    let mut wall: f64 = 0.0;
    for i in 0..1000 {
        let t = i as f64 / 999.0;
        for p in [Point::new(t, 0.0), Point::new(t, 1.0), Point::new(0.0, t), Point::new(1.0, t)] {
            let u = case.velocity(&p);
            wall = wall.max(u[0].abs()).max(u[1].abs());
        }
    }
    let mesh = build_mesh(MeshFamily::Triangle, 2).unwrap();
    let mean: f64 = (0..mesh.num_cells()).map(|c| cell_integral(&mesh, c, &|p| case.pressure(p))).sum();
    let total_div: f64 = (0..mesh.num_cells()).map(|c| cell_integral(&mesh, c, &|p| case.divergence(p).abs())).sum();
    let pinned = case.velocity(&Point::new(0.5, 0.25))[0] + 3.0 / 64.0;
    // Laplacian against a five-point stencil
    let h = 1e-4;
    let mut lap: f64 = 0.0;
    for _ in 0..10 {
        let p = Point::new(r.gen_range(0.1..0.9), r.gen_range(0.1..0.9));
        let u = |dx: f64, dy: f64| case.velocity(&Point::new(p.x + dx, p.y + dy));
        let fd: Vec<f64> = (0..2)
            .map(|c| (u(h, 0.0)[c] + u(-h, 0.0)[c] + u(0.0, h)[c] + u(0.0, -h)[c] - 4.0 * u(0.0, 0.0)[c]) / (h * h))
            .collect();
        let exact = case.fields.velocity_laplacian(&p);
        lap = lap.max((fd[0] - exact[0]).abs()).max((fd[1] - exact[1]).abs());
    }
    let ok = div < 1e-14 && wall < 1e-13 && mean.abs() < 1e-12 && total_div < 1e-12 && pinned.abs() < 1e-16 && lap < 1e-4;
    Check::new(
        "manufactured velocity and pressure",
        ok,
        format!("div {div:e}, wall {wall:e}, mean p {mean:e}, ∫|div| {total_div:e}, pinned {pinned:e}, laplacian {lap:e}"),
    )
}

pub fn derived_checks() -> Vec<Check> {
    vec![
        triangle_counts_by_enumeration(),
        l_pair_reflex_vertices(),
        l_hexagon_triangulation(),
        l_hexagon_x_squared(),
        unit_square_linear_mass(),
        coupling_vs_independent_rule(),
        edge_coupling_vs_romberg(),
        single_edge_weak_gradient(),
        normal_trace_divergence(),
        projection_decay_check(),
        edge_projection_vs_least_squares(),
        dof_count_two_triangles(),
        load_vector_vs_oracle(),
        velocity_error_vs_oracle(),
        energy_vs_assembled_form(),
        cubic_pressure_norm(),
        single_edge_h1_norm(),
        manufactured_fields(),
    ]
}

/// Ratios `|||v||| / ‖v‖_{1,h}` over random homogeneous fields.
pub fn norm_ratio_interval(family: MeshFamily, level: u32, disc: &Discretization, samples: u64) -> (f64, f64) {
    let mesh = build_mesh(family, level).unwrap();
    (0..samples)
        .map(|s| {
            let v = random_weak_field(&mesh, disc.k, 1000 + s, true);
            energy_norm(&v, &mesh, disc).unwrap() / discrete_h1_norm(&v, &mesh, disc.kappa_inv).unwrap()
        })
        .fold((f64::MAX, f64::MIN), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// Largest coefficient gap in `∇_w·(Q_h u) = 𝒬^{k−1}(∇·u)` over all cells.
pub fn divergence_commuting_gap(mesh: &PolygonalMesh, k: usize, u: &WaveField) -> f64 {
    let qu = project_velocity(mesh, k, &|p: &Point| u.value(p)).unwrap();
    (0..mesh.num_cells())
        .map(|c| {
            let d = weak_divergence_matrix(mesh, c, k).unwrap().apply(&qu.local_vector(mesh, c));
            let q = project_cell(mesh, c, k - 1, |p| u.divergence(p)).unwrap();
            (d - q).abs().max()
        })
        .fold(0.0, f64::max)
}

/// Largest coefficient gap in `∇_w(Q_h u) = 𝒬_h(∇u)` with `∇_w` of degree `r`.
pub fn gradient_commuting_gap(mesh: &PolygonalMesh, k: usize, r: usize, u: &WaveField) -> f64 {
    let qu = project_velocity(mesh, k, &|p: &Point| u.value(p)).unwrap();
    (0..mesh.num_cells())
        .map(|c| {
            let g = weak_gradient_matrix(mesh, c, k, r).unwrap().apply(&qu.local_vector(mesh, c));
            let mut gap: f64 = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let q = project_cell(mesh, c, r, |p| u.gradient(p)[i][j]).unwrap();
                    gap = gap.max((&g[i][j] - q).abs().max());
                }
            }
            gap
        })
        .fold(0.0, f64::max)
}

/// Errors of the patch case `u = 0`, `p ∈ P_{k−1}` with the automatic `r`.
pub fn patch_errors(family: MeshFamily, level: u32, k: usize, kappa_inv: f64) -> (LevelErrors, f64) {
    let mesh = build_mesh(family, level).unwrap();
    let r = GradDegree::Auto.resolve(k, Some(family), &mesh);
    let disc = Discretization::new(k, r, kappa_inv).unwrap();
    let (sol, errors) = solve_and_measure(&mesh, &disc, &case_patch(k, kappa_inv)).unwrap();
    (errors, sol.velocity.max_abs())
}

/// `β_h`: square root of the second smallest eigenvalue of
/// `B A⁻¹ Bᵀ q = λ M_p q`; the smallest belongs to the constant pressure.
pub fn inf_sup_constant(family: MeshFamily, level: u32, k: usize, r: usize) -> f64 {
    let mesh = build_mesh(family, level).unwrap();
    let disc = Discretization::new(k, r, 1.0).unwrap();
    let (sys, dofs) = assemble(&mesh, &disc, &|_: &Point| [0.0, 0.0]).unwrap();
    let a = sys.velocity_block().to_dense();
    let b = sys.divergence_block().to_dense();
    let chol_a = a.cholesky().expect("velocity block is positive definite");
    let s = &b * chol_a.solve(&b.transpose());
    let np = dofs.pressure_dim();
    let mut mp = DMatrix::zeros(sys.n_pressure, sys.n_pressure);
    for c in 0..mesh.num_cells() {
        let ops = disc.cell_operators(&mesh, c).unwrap();
        let p0 = dofs.pressure(c, 0) - sys.n_velocity;
        mp.view_mut((p0, p0), (np, np)).copy_from(&ops.mass_p);
    }
    let l = mp.cholesky().unwrap().l();
    let li = l.clone().try_inverse().unwrap();
    let c = &li * s * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mut ev: Vec<f64> = c.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev[1].max(0.0).sqrt()
}
