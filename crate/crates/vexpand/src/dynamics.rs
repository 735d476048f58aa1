//! Smooth self-covering maps of the torus T^d (d = 1, 2) with exact forward
//! evaluation, differentials, Jacobians and preimage enumeration.
//!
//! Supported families keep preimages exactly enumerable: the circle factor is
//! either linear or a monotone lift solved by bracketed bisection plus Newton,
//! and skew products solve the fiber coordinate explicitly.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Node budget for iterated preimage trees.
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

const ROOT_TOL: f64 = 1e-13;

/// Reduce to the fundamental domain [0,1), snapping values within 1e-15 of 1
/// back to 0 so that point identity is stable under deduplication.
pub fn wrap_unit(x: f64) -> f64 {
    let y = x - x.floor();
    if y >= 1.0 - 1e-15 {
        0.0
    } else {
        y
    }
}

/// A point on the torus, coordinates reduced to [0,1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    dim: u8,
    c: [f64; 2],
}

impl Point {
    pub fn new1(x: f64) -> Self {
        Point {
            dim: 1,
            c: [wrap_unit(x), 0.0],
        }
    }

    pub fn new2(x: f64, y: f64) -> Self {
        Point {
            dim: 2,
            c: [wrap_unit(x), wrap_unit(y)],
        }
    }

    pub fn from_coords(coords: &[f64]) -> Self {
        match coords {
            [x] => Point::new1(*x),
            [x, y] => Point::new2(*x, *y),
            _ => panic!("torus dimension must be 1 or 2"),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[f64] {
        &self.c[..self.dim as usize]
    }

    pub fn x(&self) -> f64 {
        self.c[0]
    }

    pub fn y(&self) -> f64 {
        self.c[1]
    }

    /// Max-norm distance on the torus.
    pub fn torus_dist(&self, other: &Point) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| {
                let d = (a - b).abs();
                d.min(1.0 - d)
            })
            .fold(0.0, f64::max)
    }
}

/// Small dense matrix covering both the 1x1 and 2x2 cases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub dim: usize,
    pub a: [[f64; 2]; 2],
}

impl Mat2 {
    pub fn identity(dim: usize) -> Self {
        Mat2 {
            dim,
            a: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    pub fn new1(v: f64) -> Self {
        Mat2 {
            dim: 1,
            a: [[v, 0.0], [0.0, 1.0]],
        }
    }

    pub fn new2(a: [[f64; 2]; 2]) -> Self {
        Mat2 { dim: 2, a }
    }

    pub fn det(&self) -> f64 {
        if self.dim == 1 {
            self.a[0][0]
        } else {
            self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
        }
    }

    /// self * other (chain rule accumulation).
    pub fn mul(&self, other: &Mat2) -> Mat2 {
        debug_assert_eq!(self.dim, other.dim);
        if self.dim == 1 {
            return Mat2::new1(self.a[0][0] * other.a[0][0]);
        }
        let mut r = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = self.a[i][0] * other.a[0][j] + self.a[i][1] * other.a[1][j];
            }
        }
        Mat2::new2(r)
    }

    /// Transposed application: returns self^T v. This is the covector pull-back.
    pub fn transpose_apply(&self, v: [f64; 2]) -> [f64; 2] {
        if self.dim == 1 {
            [self.a[0][0] * v[0], 0.0]
        } else {
            [
                self.a[0][0] * v[0] + self.a[1][0] * v[1],
                self.a[0][1] * v[0] + self.a[1][1] * v[1],
            ]
        }
    }
}

/// Real trigonometric polynomial on the circle:
/// tau(x) = c0 + sum_j (cos_coeffs[j-1] cos(2 pi j x) + sin_coeffs[j-1] sin(2 pi j x)).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CirclePoly {
    pub c0: f64,
    #[serde(default)]
    pub cos_coeffs: Vec<f64>,
    #[serde(default)]
    pub sin_coeffs: Vec<f64>,
}

impl CirclePoly {
    pub fn value(&self, x: f64) -> f64 {
        let mut v = self.c0;
        let n = self.cos_coeffs.len().max(self.sin_coeffs.len());
        for j in 1..=n {
            let (s, c) = (2.0 * PI * j as f64 * x).sin_cos();
            if let Some(a) = self.cos_coeffs.get(j - 1) {
                v += a * c;
            }
            if let Some(b) = self.sin_coeffs.get(j - 1) {
                v += b * s;
            }
        }
        v
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let mut v = 0.0;
        let n = self.cos_coeffs.len().max(self.sin_coeffs.len());
        for j in 1..=n {
            let w = 2.0 * PI * j as f64;
            let (s, c) = (w * x).sin_cos();
            if let Some(a) = self.cos_coeffs.get(j - 1) {
                v += -a * w * s;
            }
            if let Some(b) = self.sin_coeffs.get(j - 1) {
                v += b * w * c;
            }
        }
        v
    }
}

/// A smooth covering map of T^1 or T^2 with non-vanishing Jacobian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TorusMap {
    /// x -> A x mod 1 with an integer matrix, |det A| >= 2.
    Linear { dim: u8, a: [[i64; 2]; 2] },
    /// x -> k x + eps sin(2 pi x) mod 1; requires k - 2 pi |eps| > 0.
    CircleExpand { k: u32, eps: f64 },
    /// (x, y) -> (m x, y + a cos(2 pi x)) mod 1.
    SkewCosine { m: u32, a: f64 },
    /// (x, y) -> (h(x), y + tau(x)) with h a CircleExpand factor.
    SkewGeneral { k: u32, eps: f64, tau: CirclePoly },
}

impl TorusMap {
    pub fn linear_1d(k: i64) -> Result<TorusMap> {
        if k.unsigned_abs() < 2 {
            return Err(Error::InvalidParameter(format!(
                "linear 1d factor must satisfy |k| >= 2, got {k}"
            )));
        }
        Ok(TorusMap::Linear {
            dim: 1,
            a: [[k, 0], [0, 1]],
        })
    }

    pub fn linear_2d(a: [[i64; 2]; 2]) -> Result<TorusMap> {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det.unsigned_abs() < 2 {
            return Err(Error::InvalidParameter(format!(
                "linear map must have |det A| >= 2, got det {det}"
            )));
        }
        Ok(TorusMap::Linear { dim: 2, a })
    }

    pub fn circle_expand(k: u32, eps: f64) -> Result<TorusMap> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!(
                "circle factor degree must be >= 2, got {k}"
            )));
        }
        if k as f64 - 2.0 * PI * eps.abs() <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "amplitude {eps} breaks monotonicity of the degree-{k} lift"
            )));
        }
        Ok(TorusMap::CircleExpand { k, eps })
    }

    pub fn skew_cosine(m: u32, a: f64) -> Result<TorusMap> {
        if m < 2 {
            return Err(Error::InvalidParameter(format!(
                "skew base degree must be >= 2, got {m}"
            )));
        }
        Ok(TorusMap::SkewCosine { m, a })
    }

    pub fn skew_general(k: u32, eps: f64, tau: CirclePoly) -> Result<TorusMap> {
        // Validate the circle factor the same way.
        TorusMap::circle_expand(k, eps)?;
        Ok(TorusMap::SkewGeneral { k, eps, tau })
    }

    /// The paper's non-expanding example on T^2: (x, y) -> (m x, y + m cos 2 pi x).
    pub fn example(m: u32) -> Result<TorusMap> {
        TorusMap::skew_cosine(m, m as f64)
    }

    /// Re-check the constructor preconditions; needed for values built by
    /// deserialization, which bypasses the constructors.
    pub fn validate(&self) -> Result<()> {
        match self {
            TorusMap::Linear { dim: 1, a } => TorusMap::linear_1d(a[0][0]).map(|_| ()),
            TorusMap::Linear { dim: 2, a } => TorusMap::linear_2d(*a).map(|_| ()),
            TorusMap::Linear { dim, .. } => Err(Error::InvalidParameter(format!(
                "linear map dimension must be 1 or 2, got {dim}"
            ))),
            TorusMap::CircleExpand { k, eps } => TorusMap::circle_expand(*k, *eps).map(|_| ()),
            TorusMap::SkewCosine { m, a } => TorusMap::skew_cosine(*m, *a).map(|_| ()),
            TorusMap::SkewGeneral { k, eps, tau } => {
                TorusMap::skew_general(*k, *eps, tau.clone()).map(|_| ())
            }
        }
    }
}

/// Common interface of a torus covering map and its finite compositions.
pub trait CoveringMap: Sync {
    fn dim(&self) -> usize;
    /// Mapping degree: the exact number of preimages of every point.
    fn degree(&self) -> usize;
    fn eval(&self, p: &Point) -> Point;
    fn differential(&self, p: &Point) -> Mat2;
    fn jacobian(&self, p: &Point) -> Result<f64> {
        let det = self.differential(p).det();
        if det.abs() < 1e-12 {
            return Err(Error::DegenerateJacobian {
                det,
                at: p.coords().to_vec(),
            });
        }
        Ok(det)
    }
    fn preimages(&self, q: &Point) -> Result<Vec<Point>>;
}

/// Solve H(x) = target on [0,1] for the strictly increasing lift
/// H(x) = k x + eps sin(2 pi x). Bisection brackets the root, Newton polishes.
fn circle_branch_root(k: u32, eps: f64, target: f64) -> Result<f64> {
    let h = |x: f64| k as f64 * x + eps * (2.0 * PI * x).sin();
    let dh = |x: f64| k as f64 + 2.0 * PI * eps * (2.0 * PI * x).cos();
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..52 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..8 {
        let r = h(x) - target;
        if r.abs() <= ROOT_TOL * k as f64 {
            break;
        }
        x -= r / dh(x);
        x = x.clamp(0.0, 1.0);
    }
    let residual = (h(x) - target).abs();
    if residual > ROOT_TOL * k as f64 {
        return Err(Error::RootFindFailure { target, residual });
    }
    Ok(x)
}

/// All x in [0,1) with (k x + eps sin 2 pi x) = qx mod 1, one per branch.
fn circle_preimages(k: u32, eps: f64, qx: f64) -> Result<Vec<f64>> {
    if eps == 0.0 {
        return Ok((0..k).map(|j| (qx + j as f64) / k as f64).collect());
    }
    (0..k)
        .map(|j| circle_branch_root(k, eps, qx + j as f64))
        .map(|r| r.map(wrap_unit))
        .collect()
}

impl CoveringMap for TorusMap {
    fn dim(&self) -> usize {
        match self {
            TorusMap::Linear { dim, .. } => *dim as usize,
            TorusMap::CircleExpand { .. } => 1,
            TorusMap::SkewCosine { .. } | TorusMap::SkewGeneral { .. } => 2,
        }
    }

    fn degree(&self) -> usize {
        match self {
            TorusMap::Linear { dim, a } => {
                let det = if *dim == 1 {
                    a[0][0]
                } else {
                    a[0][0] * a[1][1] - a[0][1] * a[1][0]
                };
                det.unsigned_abs() as usize
            }
            TorusMap::CircleExpand { k, .. } => *k as usize,
            TorusMap::SkewCosine { m, .. } => *m as usize,
            TorusMap::SkewGeneral { k, .. } => *k as usize,
        }
    }

    fn eval(&self, p: &Point) -> Point {
        match self {
            TorusMap::Linear { dim, a } => {
                if *dim == 1 {
                    Point::new1(a[0][0] as f64 * p.x())
                } else {
                    Point::new2(
                        a[0][0] as f64 * p.x() + a[0][1] as f64 * p.y(),
                        a[1][0] as f64 * p.x() + a[1][1] as f64 * p.y(),
                    )
                }
            }
            TorusMap::CircleExpand { k, eps } => {
                Point::new1(*k as f64 * p.x() + eps * (2.0 * PI * p.x()).sin())
            }
            TorusMap::SkewCosine { m, a } => Point::new2(
                *m as f64 * p.x(),
                p.y() + a * (2.0 * PI * p.x()).cos(),
            ),
            TorusMap::SkewGeneral { k, eps, tau } => Point::new2(
                *k as f64 * p.x() + eps * (2.0 * PI * p.x()).sin(),
                p.y() + tau.value(p.x()),
            ),
        }
    }

    fn differential(&self, p: &Point) -> Mat2 {
        match self {
            TorusMap::Linear { dim, a } => {
                if *dim == 1 {
                    Mat2::new1(a[0][0] as f64)
                } else {
                    Mat2::new2([
                        [a[0][0] as f64, a[0][1] as f64],
                        [a[1][0] as f64, a[1][1] as f64],
                    ])
                }
            }
            TorusMap::CircleExpand { k, eps } => {
                Mat2::new1(*k as f64 + 2.0 * PI * eps * (2.0 * PI * p.x()).cos())
            }
            TorusMap::SkewCosine { m, a } => Mat2::new2([
                [*m as f64, 0.0],
                [-2.0 * PI * a * (2.0 * PI * p.x()).sin(), 1.0],
            ]),
            TorusMap::SkewGeneral { k, eps, tau } => Mat2::new2([
                [
                    *k as f64 + 2.0 * PI * eps * (2.0 * PI * p.x()).cos(),
                    0.0,
                ],
                [tau.deriv(p.x()), 1.0],
            ]),
        }
    }

    fn preimages(&self, q: &Point) -> Result<Vec<Point>> {
        match self {
            TorusMap::Linear { dim, a } => {
                if *dim == 1 {
                    let k = a[0][0];
                    let deg = k.unsigned_abs();
                    Ok((0..deg)
                        .map(|j| Point::new1((q.x() + j as f64) / k as f64))
                        .collect())
                } else {
                    linear_preimages_2d(a, q)
                }
            }
            TorusMap::CircleExpand { k, eps } => Ok(circle_preimages(*k, *eps, q.x())?
                .into_iter()
                .map(Point::new1)
                .collect()),
            TorusMap::SkewCosine { m, a } => Ok((0..*m)
                .map(|j| {
                    let x = (q.x() + j as f64) / *m as f64;
                    Point::new2(x, q.y() - a * (2.0 * PI * x).cos())
                })
                .collect()),
            TorusMap::SkewGeneral { k, eps, tau } => {
                Ok(circle_preimages(*k, *eps, q.x())?
                    .into_iter()
                    .map(|x| Point::new2(x, q.y() - tau.value(x)))
                    .collect())
            }
        }
    }
}

/// Preimages of a 2d linear toral covering: p = A^{-1}(q + v) over the integer
/// translates v for which p lands in the fundamental domain.
fn linear_preimages_2d(a: &[[i64; 2]; 2], q: &Point) -> Result<Vec<Point>> {
    let det = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) as f64;
    let inv = [
        [a[1][1] as f64 / det, -a[0][1] as f64 / det],
        [-a[1][0] as f64 / det, a[0][0] as f64 / det],
    ];
    // v must lie in A [0,1)^2 - q; bound each component by the row's signed range.
    let row_range = |r: [i64; 2]| {
        let lo = r[0].min(0) + r[1].min(0) - 1;
        let hi = r[0].max(0) + r[1].max(0) + 1;
        (lo, hi)
    };
    let (lo0, hi0) = row_range(a[0]);
    let (lo1, hi1) = row_range(a[1]);
    let degree = det.abs() as usize;
    let mut out: Vec<Point> = Vec::with_capacity(degree);
    for v0 in lo0..=hi0 {
        for v1 in lo1..=hi1 {
            let t = [q.x() + v0 as f64, q.y() + v1 as f64];
            let p = Point::new2(
                inv[0][0] * t[0] + inv[0][1] * t[1],
                inv[1][0] * t[0] + inv[1][1] * t[1],
            );
            // keep exactly the translates that map back onto q
            let fwd = Point::new2(
                a[0][0] as f64 * p.x() + a[0][1] as f64 * p.y(),
                a[1][0] as f64 * p.x() + a[1][1] as f64 * p.y(),
            );
            if fwd.torus_dist(q) > 1e-9 {
                continue;
            }
            if out.iter().all(|o| o.torus_dist(&p) > 1e-9) {
                out.push(p);
            }
        }
    }
    if out.len() != degree {
        return Err(Error::InvalidParameter(format!(
            "linear preimage enumeration found {} points, expected {degree}",
            out.len()
        )));
    }
    Ok(out)
}

/// Composition f_0 ∘ f_1 ∘ ... ∘ f_{r-1} (the last factor is applied first).
#[derive(Clone, Debug)]
pub struct ComposedMap {
    factors: Vec<TorusMap>,
    node_budget: usize,
}

impl ComposedMap {
    pub fn new(factors: Vec<TorusMap>) -> Result<ComposedMap> {
        Self::with_budget(factors, DEFAULT_NODE_BUDGET)
    }

    pub fn with_budget(factors: Vec<TorusMap>, node_budget: usize) -> Result<ComposedMap> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter(
                "composition needs at least one factor".into(),
            ));
        }
        let dim = factors[0].dim();
        if factors.iter().any(|f| f.dim() != dim) {
            return Err(Error::InvalidParameter(
                "composition factors must share the torus dimension".into(),
            ));
        }
        let mut nodes: usize = 1;
        for f in &factors {
            nodes = nodes.saturating_mul(f.degree());
            if nodes > node_budget {
                return Err(Error::TreeOverflow {
                    nodes,
                    budget: node_budget,
                });
            }
        }
        Ok(ComposedMap {
            factors,
            node_budget,
        })
    }

    pub fn factors(&self) -> &[TorusMap] {
        &self.factors
    }
}

/// The n-th iterate of a map, sharing its interface; the preimage tree has
/// degree^n leaves and is capped by the node budget.
pub fn iterate(map: &TorusMap, n: usize) -> Result<ComposedMap> {
    iterate_with_budget(map, n, DEFAULT_NODE_BUDGET)
}

pub fn iterate_with_budget(map: &TorusMap, n: usize, budget: usize) -> Result<ComposedMap> {
    if n == 0 {
        return Err(Error::InvalidParameter("iterate requires n >= 1".into()));
    }
    ComposedMap::with_budget(vec![map.clone(); n], budget)
}

/// f ∘ g: apply g first, then f.
pub fn compose(f: &TorusMap, g: &TorusMap) -> Result<ComposedMap> {
    ComposedMap::new(vec![f.clone(), g.clone()])
}

impl CoveringMap for ComposedMap {
    fn dim(&self) -> usize {
        self.factors[0].dim()
    }

    fn degree(&self) -> usize {
        self.factors.iter().map(|f| f.degree()).product()
    }

    fn eval(&self, p: &Point) -> Point {
        let mut cur = *p;
        for f in self.factors.iter().rev() {
            cur = f.eval(&cur);
        }
        cur
    }

    fn differential(&self, p: &Point) -> Mat2 {
        let mut cur = *p;
        let mut d = Mat2::identity(self.dim());
        for f in self.factors.iter().rev() {
            d = f.differential(&cur).mul(&d);
            cur = f.eval(&cur);
        }
        d
    }

    fn preimages(&self, q: &Point) -> Result<Vec<Point>> {
        let mut pts = vec![*q];
        for f in &self.factors {
            let mut next = Vec::with_capacity(pts.len() * f.degree());
            for p in &pts {
                next.extend(f.preimages(p)?);
            }
            if next.len() > self.node_budget {
                return Err(Error::TreeOverflow {
                    nodes: next.len(),
                    budget: self.node_budget,
                });
            }
            pts = next;
        }
        Ok(pts)
    }
}
