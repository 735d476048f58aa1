//! Independent cross-check machinery: closed-form Bessel entries for the skew
//! map's transfer matrix, Monte-Carlo Birkhoff histograms, and a brute-force
//! recomputation of the covector weight supremum that shares no code with the
//! optimized estimator.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::cotangent::Covector;
use crate::dynamics::{iterate, CoveringMap, Point, TorusMap};
use crate::error::{Error, Result};

/// Bessel function of the first kind J_n(z) to ~1e-12 absolute accuracy.
/// Power series for |z| <= 12, Miller's backward recurrence beyond.
pub fn bessel_jn(n: i64, z: f64) -> Result<f64> {
    if !z.is_finite() || z.abs() > 1e6 {
        return Err(Error::BesselRangeError { z });
    }
    // reduce to n >= 0, z >= 0 via J_{-n}(z) = (-1)^n J_n(z), J_n(-z) = (-1)^n J_n(z)
    let mut sign = 1.0;
    let (n, z) = {
        let mut n = n;
        let mut z = z;
        if n < 0 {
            n = -n;
            if n % 2 == 1 {
                sign = -sign;
            }
        }
        if z < 0.0 {
            z = -z;
            if n % 2 == 1 {
                sign = -sign;
            }
        }
        (n as usize, z)
    };
    if z == 0.0 {
        return Ok(if n == 0 { sign } else { 0.0 });
    }
    if z <= 12.0 {
        return Ok(sign * jn_series(n, z));
    }
    Ok(sign * jn_miller(n, z))
}

/// Alternating power series sum_m (-1)^m (z/2)^{n+2m} / (m! (n+m)!).
fn jn_series(n: usize, z: f64) -> f64 {
    let half = z / 2.0;
    // leading term (z/2)^n / n!
    let mut term = 1.0;
    for j in 1..=n {
        term *= half / j as f64;
    }
    let mut sum = term;
    let h2 = half * half;
    for m in 1..200 {
        term *= -h2 / (m as f64 * (n + m) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-30) {
            break;
        }
    }
    sum
}

/// Backward recurrence f_{k-1} = (2k/z) f_k - f_{k+1}, normalized by
/// J_0 + 2 sum_k J_{2k} = 1.
fn jn_miller(n: usize, z: f64) -> f64 {
    let start = ((z + 1.5 * z.sqrt() + n as f64) as usize + 40) & !1; // even
    let mut fp = 0.0f64; // f_{k+1}
    let mut fc = 1e-300f64; // f_k
    let mut norm = 0.0f64;
    let mut result = 0.0f64;
    for k in (0..=start).rev() {
        let fm = (2.0 * (k + 1) as f64 / z) * fc - fp;
        fp = fc;
        fc = fm;
        // fc now holds f_k
        if k == n {
            result = fc;
        }
        if k % 2 == 0 {
            norm += if k == 0 { fc } else { 2.0 * fc };
        }
        if fc.abs() > 1e250 {
            fp /= 1e250;
            fc /= 1e250;
            norm /= 1e250;
            result /= 1e250;
        }
    }
    result / norm
}

fn i_pow(n: i64) -> Complex64 {
    match n.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Closed-form Galerkin matrix for (x, y) -> (m x, y + a cos 2 pi x):
/// M[k][l] = delta_{k_y, l_y} i^{m k_x - l_x} J_{m k_x - l_x}(-2 pi a k_y),
/// by the Jacobi-Anger expansion of exp(-2 pi i k_y a cos 2 pi x).
pub fn bessel_matrix_oracle(m: u32, a: f64, cutoff: usize) -> Result<DMatrix<Complex64>> {
    let kk = cutoff as i64;
    let side = 2 * cutoff + 1;
    let nm = side * side;
    let idx = |kx: i64, ky: i64| (kx + kk) as usize * side + (ky + kk) as usize;
    let mut mat = DMatrix::from_element(nm, nm, Complex64::new(0.0, 0.0));
    for kx in -kk..=kk {
        for ky in -kk..=kk {
            let z = -2.0 * PI * a * ky as f64;
            for lx in -kk..=kk {
                let n = m as i64 * kx - lx;
                let j = bessel_jn(n, z)?;
                mat[(idx(kx, ky), idx(lx, ky))] = i_pow(n) * j;
            }
        }
    }
    Ok(mat)
}

/// Occupation histogram of Monte-Carlo orbits; `bins` cells per axis
/// (so bins^2 cells on T^2, indexed row-major by the x bin).
#[derive(Clone, Debug)]
pub struct Histogram {
    pub dim: usize,
    pub bins: usize,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    /// Piecewise-constant density values (cell mass divided by cell volume).
    pub fn density(&self) -> Vec<f64> {
        let cells = self.counts.len() as f64;
        self.counts
            .iter()
            .map(|&c| c as f64 / self.total as f64 * cells)
            .collect()
    }

    /// L^1 distance between this density and another piecewise-constant
    /// density given by its per-cell values on the same partition.
    pub fn l1_distance(&self, other_density: &[f64]) -> f64 {
        assert_eq!(other_density.len(), self.counts.len());
        let dens = self.density();
        dens.iter()
            .zip(other_density)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / self.counts.len() as f64
    }
}

/// splitmix64 finalizer: decorrelates per-orbit seeds derived from (seed, i).
fn mix_seed(seed: u64, i: u64) -> u64 {
    let mut z = seed ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Histogram of `n_orbits` independent orbits, each started uniformly at
/// random, run `burn_in` discarded steps then `n_iters` recorded steps.
/// Each orbit gets its own ChaCha8 stream keyed by (seed, orbit index), so the
/// result is identical regardless of thread count.
pub fn birkhoff_histogram(
    map: &TorusMap,
    n_orbits: usize,
    n_iters: usize,
    burn_in: usize,
    seed: u64,
    bins: usize,
) -> Result<Histogram> {
    if n_orbits == 0 || n_iters == 0 || bins == 0 {
        return Err(Error::InvalidParameter(
            "orbits, iterations and bins must be positive".into(),
        ));
    }
    let dim = map.dim();
    let n_cells = if dim == 1 { bins } else { bins * bins };
    let cell = |p: &Point| -> usize {
        let bx = ((p.x() * bins as f64) as usize).min(bins - 1);
        if dim == 1 {
            bx
        } else {
            let by = ((p.y() * bins as f64) as usize).min(bins - 1);
            bx * bins + by
        }
    };
    let counts = (0..n_orbits)
        .into_par_iter()
        .fold(
            || vec![0u64; n_cells],
            |mut acc, i| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
                let mut p = if dim == 1 {
                    Point::new1(rng.gen::<f64>())
                } else {
                    Point::new2(rng.gen::<f64>(), rng.gen::<f64>())
                };
                for _ in 0..burn_in {
                    p = map.eval(&p);
                }
                for _ in 0..n_iters {
                    acc[cell(&p)] += 1;
                    p = map.eval(&p);
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; n_cells],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    Ok(Histogram {
        dim,
        bins,
        counts,
        total: (n_orbits * n_iters) as u64,
    })
}

/// Weight of one covector under one map, written independently of the
/// optimized kernel: enumerate preimages, pull back through the transposed
/// differential, sum (|xi|/|eta|)^mu / |Jf|.
fn naive_b_mu<M: CoveringMap + ?Sized>(map: &M, mu: f64, cov: &Covector) -> Result<f64> {
    let xi_norm = cov.norm();
    let mut sum = 0.0;
    for p in map.preimages(&cov.base)? {
        let d = map.differential(&p);
        let eta = d.transpose_apply(cov.xi);
        let eta_norm = (eta[0] * eta[0] + eta[1] * eta[1]).sqrt();
        sum += (xi_norm / eta_norm).powf(mu) / map.jacobian(&p)?.abs();
    }
    Ok(sum)
}

/// Randomized supremum of b^mu(.; f^n) over uniformly random base points and
/// directions: a slow, direct re-derivation used to cross-check the
/// structured-grid estimator. The running max is non-decreasing in `samples`
/// and the result is deterministic given the seed.
pub fn dense_sup_crosscheck(
    map: &TorusMap,
    mu: f64,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be >= 1".into()));
    }
    let fname = iterate(map, n)?;
    let dim = map.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup = f64::NEG_INFINITY;
    for _ in 0..samples {
        let q = if dim == 1 {
            Point::new1(rng.gen::<f64>())
        } else {
            Point::new2(rng.gen::<f64>(), rng.gen::<f64>())
        };
        let xi = if dim == 1 {
            [1.0, 0.0]
        } else {
            let theta = PI * rng.gen::<f64>();
            [theta.cos(), theta.sin()]
        };
        let cov = Covector::new(q, xi)?;
        sup = sup.max(naive_b_mu(&fname, mu, &cov)?);
    }
    Ok(sup)
}
