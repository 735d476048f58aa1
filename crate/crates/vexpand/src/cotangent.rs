//! The covector pull-back cocycle and the preimage-averaged expansion weights.
//!
//! For a covering map f and a nonzero covector (q, xi), the weight
//! b^mu((q, xi); f) sums (|xi|/|eta_p|)^mu / |Jf(p)| over the preimages p of q,
//! where eta_p is the pull-back of xi by the transposed differential at p.
//! B^mu(f) is the supremum over all nonzero covectors; grid estimates of it are
//! lower bounds and refine monotonically.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::dynamics::{iterate, CoveringMap, Point, TorusMap};
use crate::error::{Error, Result};

/// A base point with a nonzero cotangent vector in flat coordinates.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Covector {
    pub base: Point,
    pub xi: [f64; 2],
}

impl Covector {
    pub fn new(base: Point, xi: [f64; 2]) -> Result<Covector> {
        if xi[0] == 0.0 && xi[1] == 0.0 {
            return Err(Error::InvalidParameter("covector must be nonzero".into()));
        }
        Ok(Covector { base, xi })
    }

    pub fn norm(&self) -> f64 {
        (self.xi[0] * self.xi[0] + self.xi[1] * self.xi[1]).sqrt()
    }

    pub fn normalized(&self) -> Covector {
        let n = self.norm();
        Covector {
            base: self.base,
            xi: [self.xi[0] / n, self.xi[1] / n],
        }
    }

    /// Unit covector at angle theta in [0, pi) on the projective fiber.
    pub fn from_angle(base: Point, theta: f64) -> Covector {
        if base.dim() == 1 {
            Covector { base, xi: [1.0, 0.0] }
        } else {
            Covector {
                base,
                xi: [theta.cos(), theta.sin()],
            }
        }
    }
}

/// eta = (D_p f)^T xi: the covector at p over the covector xi at f(p).
pub fn pullback_covector<M: CoveringMap>(map: &M, p: &Point, xi: [f64; 2]) -> [f64; 2] {
    map.differential(p).transpose_apply(xi)
}

/// Per-preimage data reused across direction sweeps: the transposed
/// differential and the reciprocal Jacobian.
#[derive(Clone, Copy, Debug)]
struct Frame {
    point: Point,
    d: [[f64; 2]; 2],
    inv_jac: f64,
}

fn frames_at<M: CoveringMap>(map: &M, q: &Point) -> Result<Vec<Frame>> {
    map.preimages(q)?
        .into_iter()
        .map(|p| {
            let jac = map.jacobian(&p)?;
            Ok(Frame {
                point: p,
                d: map.differential(&p).a,
                inv_jac: 1.0 / jac.abs(),
            })
        })
        .collect()
}

/// Accumulate b-values for unit covectors (cosv[t], sinv[t]) into `acc`.
/// The exponent is applied to |xi|/|eta| with |xi| = 1.
fn accumulate_b(frames: &[Frame], cosv: &[f64], sinv: &[f64], exponent: f64, acc: &mut [f64]) {
    acc.fill(0.0);
    for fr in frames {
        let (d00, d01) = (fr.d[0][0], fr.d[0][1]);
        let (d10, d11) = (fr.d[1][0], fr.d[1][1]);
        let w = fr.inv_jac;
        if exponent == 0.0 {
            for a in acc.iter_mut() {
                *a += w;
            }
        } else if exponent == 1.0 {
            for t in 0..acc.len() {
                let ex = d00 * cosv[t] + d10 * sinv[t];
                let ey = d01 * cosv[t] + d11 * sinv[t];
                acc[t] += w / (ex * ex + ey * ey).sqrt();
            }
        } else if exponent == 2.0 {
            for t in 0..acc.len() {
                let ex = d00 * cosv[t] + d10 * sinv[t];
                let ey = d01 * cosv[t] + d11 * sinv[t];
                acc[t] += w / (ex * ex + ey * ey);
            }
        } else {
            for t in 0..acc.len() {
                let ex = d00 * cosv[t] + d10 * sinv[t];
                let ey = d01 * cosv[t] + d11 * sinv[t];
                acc[t] += w * (ex * ex + ey * ey).powf(-0.5 * exponent);
            }
        }
    }
}

/// b^mu((q, xi); map): the preimage-averaged contraction weight.
pub fn b_mu<M: CoveringMap>(map: &M, mu: f64, cov: &Covector) -> Result<f64> {
    let xi_norm = cov.norm();
    if xi_norm == 0.0 {
        return Err(Error::InvalidParameter("covector must be nonzero".into()));
    }
    let frames = frames_at(map, &cov.base)?;
    let mut sum = 0.0;
    for fr in &frames {
        let eta = [
            fr.d[0][0] * cov.xi[0] + fr.d[1][0] * cov.xi[1],
            fr.d[0][1] * cov.xi[0] + fr.d[1][1] * cov.xi[1],
        ];
        let eta_norm = (eta[0] * eta[0] + eta[1] * eta[1]).sqrt();
        sum += (xi_norm / eta_norm).powf(mu) * fr.inv_jac;
    }
    Ok(sum)
}

/// Spatial and direction resolutions for grid suprema.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Samples per spatial axis; the second entry is ignored on T^1.
    pub base: [usize; 2],
    /// Direction samples on [0, pi); forced to 1 on T^1.
    pub directions: usize,
    /// When set, double all resolutions until the sup moves by < 1e-4.
    #[serde(default)]
    pub refine: bool,
    /// Sample budget for the refinement loop.
    #[serde(default = "default_max_samples")]
    pub max_samples: usize,
}

fn default_max_samples() -> usize {
    1 << 30
}

impl GridSpec {
    pub fn new(base: [usize; 2], directions: usize) -> GridSpec {
        GridSpec {
            base,
            directions,
            refine: false,
            max_samples: default_max_samples(),
        }
    }

    pub fn refined(mut self) -> GridSpec {
        self.refine = true;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.base[0] == 0 || (dim == 2 && self.base[1] == 0) || self.directions == 0 {
            return Err(Error::InvalidParameter(
                "grid resolutions must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RefinementStep {
    pub base: [usize; 2],
    pub directions: usize,
    pub value: f64,
}

/// Result of a grid supremum of b^mu over sampled covectors.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightEstimate {
    pub mu: f64,
    pub n: usize,
    pub value: f64,
    pub argmax: Covector,
    pub grid: RefinementStep,
    pub refinement_history: Vec<RefinementStep>,
}

fn direction_table(dim: usize, nd: usize) -> (Vec<f64>, Vec<f64>) {
    if dim == 1 {
        (vec![1.0], vec![0.0])
    } else {
        let (mut c, mut s) = (Vec::with_capacity(nd), Vec::with_capacity(nd));
        for t in 0..nd {
            let theta = PI * t as f64 / nd as f64;
            c.push(theta.cos());
            s.push(theta.sin());
        }
        (c, s)
    }
}

/// One full sweep over the product grid; returns (max value, argmax covector).
fn sup_single_grid<M: CoveringMap>(
    map: &M,
    exponent: f64,
    nx: usize,
    ny: usize,
    nd: usize,
) -> Result<(f64, Covector)> {
    let dim = map.dim();
    let (cosv, sinv) = direction_table(dim, nd);
    let nd = cosv.len();
    let n_base = if dim == 1 { nx } else { nx * ny };

    type Acc = (f64, usize, usize, Vec<f64>);
    let merge = |a: (f64, usize, usize), b: (f64, usize, usize)| {
        if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
            b
        } else {
            a
        }
    };

    let best = (0..n_base)
        .into_par_iter()
        .try_fold(
            || (f64::NEG_INFINITY, usize::MAX, usize::MAX, vec![0.0; nd]),
            |(mut bv, mut bb, mut bt, mut buf): Acc, ib| -> Result<Acc> {
                let q = if dim == 1 {
                    Point::new1(ib as f64 / nx as f64)
                } else {
                    Point::new2(
                        (ib % nx) as f64 / nx as f64,
                        (ib / nx) as f64 / ny as f64,
                    )
                };
                let frames = frames_at(map, &q)?;
                accumulate_b(&frames, &cosv, &sinv, exponent, &mut buf);
                for (t, v) in buf.iter().enumerate() {
                    if *v > bv {
                        bv = *v;
                        bb = ib;
                        bt = t;
                    }
                }
                Ok((bv, bb, bt, buf))
            },
        )
        .map(|r| r.map(|(v, b, t, _)| (v, b, t)))
        .try_reduce(
            || (f64::NEG_INFINITY, usize::MAX, usize::MAX),
            |a, b| Ok(merge(a, b)),
        )?;

    let (value, ib, it) = best;
    let q = if dim == 1 {
        Point::new1(ib as f64 / nx as f64)
    } else {
        Point::new2((ib % nx) as f64 / nx as f64, (ib / nx) as f64 / ny as f64)
    };
    let theta = if dim == 1 { 0.0 } else { PI * it as f64 / nd as f64 };
    Ok((value, Covector::from_angle(q, theta)))
}

const REFINE_TOL: f64 = 1e-4;

/// Grid supremum of b^mu over the given map (no iteration), with the optional
/// refinement loop. The sampled sup is a lower bound of the true sup.
pub fn weight_sup<M: CoveringMap>(map: &M, mu: f64, grid: &GridSpec) -> Result<WeightEstimate> {
    grid.validate(map.dim())?;
    let dim = map.dim();
    let (mut nx, mut ny) = (grid.base[0], if dim == 1 { 1 } else { grid.base[1] });
    let mut nd = if dim == 1 { 1 } else { grid.directions };

    let mut history = Vec::new();
    let (mut value, mut argmax) = sup_single_grid(map, mu, nx, ny, nd)?;
    history.push(RefinementStep {
        base: [nx, ny],
        directions: nd,
        value,
    });

    if grid.refine {
        let mut last_delta = f64::NAN;
        loop {
            let (nnx, nny, nnd) = (nx * 2, ny * if dim == 1 { 1 } else { 2 }, nd * 2);
            let samples = nnx
                .saturating_mul(nny)
                .saturating_mul(if dim == 1 { 1 } else { nnd });
            if samples > grid.max_samples {
                return Err(Error::GridBudgetExceeded {
                    budget: grid.max_samples,
                    last_delta,
                });
            }
            let (nv, na) = sup_single_grid(map, mu, nnx, nny, if dim == 1 { 1 } else { nnd })?;
            nx = nnx;
            ny = nny;
            nd = nnd;
            let delta = nv - value;
            last_delta = delta.abs();
            if nv > value {
                value = nv;
                argmax = na;
            }
            history.push(RefinementStep {
                base: [nx, ny],
                directions: nd,
                value,
            });
            if delta.abs() < REFINE_TOL {
                break;
            }
        }
    }

    Ok(WeightEstimate {
        mu,
        n: 1,
        value,
        argmax,
        grid: *history.last().unwrap(),
        refinement_history: history,
    })
}

/// Grid estimate of B^mu(f^n) over the exact depth-n preimage tree.
pub fn b_mu_sup(map: &TorusMap, mu: f64, n: usize, grid: &GridSpec) -> Result<WeightEstimate> {
    let it = iterate(map, n)?;
    let mut est = weight_sup(&it, mu, grid)?;
    est.n = n;
    Ok(est)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    VirtuallyExpanding,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub value: f64,
    pub root: f64,
}

/// Per-n estimates of B^{2 mu}(f^n), their n-th roots and the Fekete minimum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateEstimate {
    pub mu: f64,
    pub per_n: Vec<RatePoint>,
    pub fekete_min: f64,
    pub classification: Classification,
}

pub const FEKETE_MARGIN: f64 = 1e-6;

pub fn virtual_expansion_rate(
    map: &TorusMap,
    mu: f64,
    n_max: usize,
    grid: &GridSpec,
) -> Result<RateEstimate> {
    if n_max < 1 {
        return Err(Error::InvalidParameter("n_max must be >= 1".into()));
    }
    let mut per_n = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let est = b_mu_sup(map, 2.0 * mu, n, grid)?;
        per_n.push(RatePoint {
            n,
            value: est.value,
            root: est.value.powf(1.0 / n as f64),
        });
    }
    let fekete_min = per_n.iter().map(|p| p.root).fold(f64::INFINITY, f64::min);
    let classification = if fekete_min < 1.0 - FEKETE_MARGIN {
        Classification::VirtuallyExpanding
    } else {
        Classification::Inconclusive
    };
    Ok(RateEstimate {
        mu,
        per_n,
        fekete_min,
        classification,
    })
}

/// Level-by-level evaluation of b^mu((q, xi); f ∘ g): the f-level pulls back
/// the covector, each branch then weighs a full b^mu of g at the intermediate
/// covector. Equals b_mu of the composition up to rounding.
pub fn factorized_b(
    f: &TorusMap,
    g: &TorusMap,
    mu: f64,
    cov: &Covector,
) -> Result<f64> {
    if f.dim() != g.dim() {
        return Err(Error::InvalidParameter(
            "factor maps must share the torus dimension".into(),
        ));
    }
    let xi_norm = cov.norm();
    let frames = frames_at(f, &cov.base)?;
    let mut sum = 0.0;
    for fr in &frames {
        let eta = [
            fr.d[0][0] * cov.xi[0] + fr.d[1][0] * cov.xi[1],
            fr.d[0][1] * cov.xi[0] + fr.d[1][1] * cov.xi[1],
        ];
        let eta_norm = (eta[0] * eta[0] + eta[1] * eta[1]).sqrt();
        let inner = b_mu(g, mu, &Covector {
            base: fr.point,
            xi: eta,
        })?;
        sum += (xi_norm / eta_norm).powf(mu) * fr.inv_jac * inner;
    }
    Ok(sum)
}

/// Japanese bracket <s> = sqrt(1 + s^2).
pub fn bracket(s: f64) -> f64 {
    (1.0 + s * s).sqrt()
}

/// Default radial samples 2^j * 2 pi, j = 0..=16, for the generalized weight.
pub fn default_radii() -> Vec<f64> {
    (0..=16).map(|j| 2.0_f64.powi(j) * 2.0 * PI).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneralizedEstimate {
    pub value: f64,
    pub argmax_base: Point,
    pub argmax_theta: f64,
    /// None marks the homogeneous (infinite-radius) sample.
    pub argmax_radius: Option<f64>,
    /// Set when mu_func takes values <= 0 somewhere on the sample; the
    /// invariant-density corollary does not apply then.
    pub nonpositive_exponent: bool,
}

/// Supremum of the generalized weight with a direction-dependent exponent
/// mu_func(base, theta) on the projectivized cotangent bundle. Finite radii use
/// W(x, xi) = <|xi|>^mu; the symbolic infinite-radius sample replaces the
/// bracket by the plain norm (evaluated on unit covectors).
pub fn generalized_b_sup<F>(
    map: &TorusMap,
    mu_func: F,
    radii: &[f64],
    grid: &GridSpec,
) -> Result<GeneralizedEstimate>
where
    F: Fn(&Point, f64) -> f64 + Sync,
{
    grid.validate(map.dim())?;
    let dim = map.dim();
    let (nx, ny) = (grid.base[0], if dim == 1 { 1 } else { grid.base[1] });
    let nd = if dim == 1 { 1 } else { grid.directions };

    let mut best = (f64::NEG_INFINITY, Point::new1(0.0), 0.0, None);
    let mut nonpositive = false;

    for iy in 0..ny {
        for ix in 0..nx {
            let q = if dim == 1 {
                Point::new1(ix as f64 / nx as f64)
            } else {
                Point::new2(ix as f64 / nx as f64, iy as f64 / ny as f64)
            };
            let frames = frames_at(map, &q)?;
            for t in 0..nd {
                let theta = if dim == 1 { 0.0 } else { PI * t as f64 / nd as f64 };
                let xi_dir = if dim == 1 {
                    [1.0, 0.0]
                } else {
                    [theta.cos(), theta.sin()]
                };
                let mu_q = mu_func(&q, theta);
                if mu_q <= 0.0 {
                    nonpositive = true;
                }
                // finite radii
                for &r in radii {
                    let w_num = bracket(r).powf(mu_q);
                    let mut sum = 0.0;
                    for fr in &frames {
                        let eta = [
                            fr.d[0][0] * xi_dir[0] * r + fr.d[1][0] * xi_dir[1] * r,
                            fr.d[0][1] * xi_dir[0] * r + fr.d[1][1] * xi_dir[1] * r,
                        ];
                        let eta_norm = (eta[0] * eta[0] + eta[1] * eta[1]).sqrt();
                        let theta_eta = direction_angle(dim, eta);
                        let mu_p = mu_func(&fr.point, theta_eta);
                        if mu_p <= 0.0 {
                            nonpositive = true;
                        }
                        sum += w_num * fr.inv_jac / bracket(eta_norm).powf(mu_p);
                    }
                    if sum > best.0 {
                        best = (sum, q, theta, Some(r));
                    }
                }
                // homogeneous limit on the unit covector
                let mut sum = 0.0;
                for fr in &frames {
                    let eta = [
                        fr.d[0][0] * xi_dir[0] + fr.d[1][0] * xi_dir[1],
                        fr.d[0][1] * xi_dir[0] + fr.d[1][1] * xi_dir[1],
                    ];
                    let eta_norm = (eta[0] * eta[0] + eta[1] * eta[1]).sqrt();
                    let theta_eta = direction_angle(dim, eta);
                    let mu_p = mu_func(&fr.point, theta_eta);
                    if mu_p <= 0.0 {
                        nonpositive = true;
                    }
                    sum += fr.inv_jac / eta_norm.powf(mu_p);
                }
                if sum > best.0 {
                    best = (sum, q, theta, None);
                }
            }
        }
    }

    Ok(GeneralizedEstimate {
        value: best.0,
        argmax_base: best.1,
        argmax_theta: best.2,
        argmax_radius: best.3,
        nonpositive_exponent: nonpositive,
    })
}

fn direction_angle(dim: usize, v: [f64; 2]) -> f64 {
    if dim == 1 {
        return 0.0;
    }
    let mut a = v[1].atan2(v[0]);
    if a < 0.0 {
        a += PI;
    }
    if a >= PI {
        a -= PI;
    }
    a
}

// ---------------------------------------------------------------------------
// Appendix certifier for the example family (m x, y + m cos 2 pi x).
// ---------------------------------------------------------------------------

/// Aggregated certificate that B^mu < 1 on the sampled covectors of the
/// example map, following the cone decomposition of its preimages.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertReport {
    pub m: u32,
    pub mu: f64,
    /// (q_x samples, xi_x samples); xi is normalized to xi_y = 1.
    pub samples: [usize; 2],
    pub xi_x_range: [f64; 2],
    /// sqrt((1 + (2 pi)^2) / (1 + (4 pi)^2)): per-branch ratio cap on the cone.
    pub ratio_bound: f64,
    /// ((1 + (2 pi)^2) / (1 + (3 pi)^2))^(mu/2): cap on the total b^mu.
    pub total_bound: f64,
    pub max_cone_ratio: f64,
    pub min_cone_eta_x: f64,
    pub max_violator_count: usize,
    /// Empirical constant in (violator count) <= C sqrt(m).
    pub fitted_c: f64,
    pub max_total_b: f64,
    pub argmax_qx: f64,
    pub argmax_xi_x: f64,
    /// b^mu on the xi_y = 0 line; equals m^{-mu} exactly.
    pub xi_y_zero_value: f64,
    pub pass: bool,
}

const CERT_TOL: f64 = 1e-9;

/// Numeric rendering of the appendix argument for SkewCosine(m, m):
/// partitions each preimage fiber by the cone condition, checks the per-branch
/// ratio and |eta_x| bounds on the cone, counts the violators against C sqrt(m),
/// and checks the total b^mu against the closed-form cap at every sample.
pub fn appendix_certify(m: u32, mu: f64, grid: &GridSpec) -> Result<CertReport> {
    if m < 2 {
        return Err(Error::InvalidParameter("certifier requires m >= 2".into()));
    }
    let map = TorusMap::example(m)?;
    let mf = m as f64;
    let n_q = grid.base[0].max(1);
    let n_xi = grid.directions.max(1);
    let two_pi = 2.0 * PI;
    let xi_max = two_pi + 2.0;
    let ratio_bound = (1.0 + two_pi * two_pi).sqrt() / (1.0 + (4.0 * PI) * (4.0 * PI)).sqrt();
    let total_bound =
        ((1.0 + two_pi * two_pi) / (1.0 + (3.0 * PI) * (3.0 * PI))).powf(0.5 * mu);
    let cone_threshold = 5.0 * PI / mf;

    let mut max_cone_ratio = f64::NEG_INFINITY;
    let mut min_cone_eta = f64::INFINITY;
    let mut max_violators = 0usize;
    let mut max_total = f64::NEG_INFINITY;
    let mut arg = (0.0, 0.0);

    for iq in 0..n_q {
        let qx = iq as f64 / n_q as f64;
        // sin(2 pi x_j) at the m base preimages of qx
        let sins: Vec<f64> = (0..m)
            .map(|j| (two_pi * (qx + j as f64) / mf).sin())
            .collect();
        for ixi in 0..n_xi {
            let xix = -xi_max + 2.0 * xi_max * ixi as f64 / (n_xi - 1).max(1) as f64;
            let xi_norm2 = xix * xix + 1.0;
            let mut violators = 0usize;
            let mut total = 0.0;
            for s in &sins {
                // eta_x = m xi_x - 2 pi m sin(2 pi x_j) with xi_y = 1
                let t = xix - two_pi * s;
                let eta_x = mf * t;
                let ratio = (xi_norm2 / (eta_x * eta_x + 1.0)).sqrt();
                if t.abs() >= cone_threshold {
                    if eta_x.abs() < 5.0 * PI - CERT_TOL {
                        return Err(Error::CertFailed {
                            check: "|eta_x| >= 5 pi on the cone".into(),
                            qx,
                            xix,
                            value: eta_x.abs(),
                            bound: 5.0 * PI,
                        });
                    }
                    if ratio > ratio_bound + CERT_TOL {
                        return Err(Error::CertFailed {
                            check: "cone ratio |xi|/|eta| <= sqrt((1+(2pi)^2)/(1+(4pi)^2))"
                                .into(),
                            qx,
                            xix,
                            value: ratio,
                            bound: ratio_bound,
                        });
                    }
                    max_cone_ratio = max_cone_ratio.max(ratio);
                    min_cone_eta = min_cone_eta.min(eta_x.abs());
                } else {
                    violators += 1;
                }
                total += ratio.powf(mu) / mf;
            }
            if total >= total_bound {
                return Err(Error::CertFailed {
                    check: "total b^mu < ((1+(2pi)^2)/(1+(3pi)^2))^(mu/2)".into(),
                    qx,
                    xix,
                    value: total,
                    bound: total_bound,
                });
            }
            max_violators = max_violators.max(violators);
            if total > max_total {
                max_total = total;
                arg = (qx, xix);
            }
        }
    }

    // The xi_y = 0 line: every branch contracts by exactly 1/m.
    let xi_y_zero_value = b_mu(&map, mu, &Covector {
        base: Point::new2(0.13, 0.57),
        xi: [1.0, 0.0],
    })?;
    let expected = mf.powf(-mu);
    if (xi_y_zero_value - expected).abs() > 1e-12 * expected {
        return Err(Error::CertFailed {
            check: "xi_y = 0 line equals m^{-mu}".into(),
            qx: 0.13,
            xix: f64::INFINITY,
            value: xi_y_zero_value,
            bound: expected,
        });
    }

    let pass = max_total < total_bound && xi_y_zero_value < 1.0;
    Ok(CertReport {
        m,
        mu,
        samples: [n_q, n_xi],
        xi_x_range: [-xi_max, xi_max],
        ratio_bound,
        total_bound,
        max_cone_ratio,
        min_cone_eta_x: min_cone_eta,
        max_violator_count: max_violators,
        fitted_c: max_violators as f64 / mf.sqrt(),
        max_total_b: max_total,
        argmax_qx: arg.0,
        argmax_xi_x: arg.1,
        xi_y_zero_value,
        pass,
    })
}
