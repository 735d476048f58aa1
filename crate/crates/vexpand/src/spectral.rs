//! Band-limited function space on the torus, the Sobolev norm with symbol
//! <|xi|>^mu, and the Fourier-Galerkin truncation of the Perron-Frobenius
//! operator Pu(q) = sum_{f(p)=q} u(p)/|Jf(p)|.
//!
//! Conventions: the Fourier mode k carries the covector xi = 2 pi k, matching
//! the cotangent cocycle; matrix entries are
//! M[k][l] = integral exp(2 pi i (l.p - k.f(p))) dp, computed by equispaced
//! tensor quadrature which is exact below the aliasing threshold.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::cotangent::{virtual_expansion_rate, GridSpec, RateEstimate};
use crate::dynamics::{CoveringMap, Point, TorusMap};
use crate::error::{Error, Result};

/// A band-limited function on T^d stored by Fourier coefficients over the
/// block |k_i| <= K.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    dim: usize,
    cutoff: usize,
    coeffs: Vec<Complex64>,
}

impl TrigPoly {
    pub fn zero(dim: usize, cutoff: usize) -> TrigPoly {
        let side = 2 * cutoff + 1;
        let len = if dim == 1 { side } else { side * side };
        TrigPoly {
            dim,
            cutoff,
            coeffs: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn constant(dim: usize, cutoff: usize, value: f64) -> TrigPoly {
        let mut u = TrigPoly::zero(dim, cutoff);
        *u.coeff_mut(&[0, 0][..dim]) = Complex64::new(value, 0.0);
        u
    }

    /// cos(2 pi k . x) as a real trig polynomial.
    pub fn cosine(dim: usize, cutoff: usize, mode: &[i64]) -> TrigPoly {
        let mut u = TrigPoly::zero(dim, cutoff);
        let half = Complex64::new(0.5, 0.0);
        *u.coeff_mut(mode) += half;
        let neg: Vec<i64> = mode.iter().map(|k| -k).collect();
        *u.coeff_mut(&neg) += half;
        u
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    fn index(&self, k: &[i64]) -> usize {
        let kk = self.cutoff as i64;
        debug_assert!(k.iter().all(|ki| ki.abs() <= kk));
        let side = 2 * self.cutoff + 1;
        if self.dim == 1 {
            (k[0] + kk) as usize
        } else {
            (k[0] + kk) as usize * side + (k[1] + kk) as usize
        }
    }

    /// Mode vector for a flat coefficient index (inverse of `index`).
    pub fn mode_of(&self, idx: usize) -> [i64; 2] {
        let kk = self.cutoff as i64;
        let side = 2 * self.cutoff + 1;
        if self.dim == 1 {
            [idx as i64 - kk, 0]
        } else {
            [(idx / side) as i64 - kk, (idx % side) as i64 - kk]
        }
    }

    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.coeffs[self.index(k)]
    }

    pub fn coeff_mut(&mut self, k: &[i64]) -> &mut Complex64 {
        let i = self.index(k);
        &mut self.coeffs[i]
    }

    pub fn from_vector(dim: usize, cutoff: usize, v: &DVector<Complex64>) -> TrigPoly {
        let mut u = TrigPoly::zero(dim, cutoff);
        assert_eq!(v.len(), u.coeffs.len());
        u.coeffs.copy_from_slice(v.as_slice());
        u
    }

    pub fn to_vector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.coeffs)
    }

    /// Pointwise evaluation sum_k c_k exp(2 pi i k . x).
    pub fn eval(&self, p: &Point) -> Complex64 {
        let kk = self.cutoff as i64;
        let mut sum = Complex64::new(0.0, 0.0);
        if self.dim == 1 {
            for k in -kk..=kk {
                let phase = 2.0 * PI * k as f64 * p.x();
                sum += self.coeff(&[k]) * Complex64::new(phase.cos(), phase.sin());
            }
        } else {
            for kx in -kk..=kk {
                for ky in -kk..=kk {
                    let phase = 2.0 * PI * (kx as f64 * p.x() + ky as f64 * p.y());
                    sum += self.coeff(&[kx, ky]) * Complex64::new(phase.cos(), phase.sin());
                }
            }
        }
        sum
    }

    /// Mean value, i.e. the k = 0 coefficient.
    pub fn mean(&self) -> Complex64 {
        self.coeff(&[0, 0][..self.dim])
    }

    /// Largest deviation from the conjugate symmetry c(-k) = conj(c(k)).
    pub fn reality_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.mode_of(i);
            let neg: Vec<i64> = k[..self.dim].iter().map(|v| -v).collect();
            let d = (self.coeff(&neg) - c.conj()).norm();
            worst = worst.max(d);
        }
        worst
    }

    /// Exact averages over a uniform bin decomposition, one per cell, using the
    /// closed-form integral of each mode over an interval.
    pub fn bin_averages(&self, bins: usize) -> Vec<f64> {
        let kk = self.cutoff as i64;
        // 1d mode-over-bin integrals: I[k][b] = bins * int_{b/bins}^{(b+1)/bins} e^{2 pi i k x} dx
        let axis: Vec<Vec<Complex64>> = (-kk..=kk)
            .map(|k| {
                (0..bins)
                    .map(|b| {
                        if k == 0 {
                            Complex64::new(1.0, 0.0)
                        } else {
                            let w = 2.0 * PI * k as f64;
                            let (a, c) = (b as f64 / bins as f64, (b + 1) as f64 / bins as f64);
                            let ea = Complex64::new(0.0, w * a).exp();
                            let ec = Complex64::new(0.0, w * c).exp();
                            (ec - ea) / Complex64::new(0.0, w) * bins as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let idx = |k: i64| (k + kk) as usize;
        if self.dim == 1 {
            (0..bins)
                .map(|b| {
                    let mut s = Complex64::new(0.0, 0.0);
                    for k in -kk..=kk {
                        s += self.coeff(&[k]) * axis[idx(k)][b];
                    }
                    s.re
                })
                .collect()
        } else {
            let mut out = Vec::with_capacity(bins * bins);
            for bx in 0..bins {
                for by in 0..bins {
                    let mut s = Complex64::new(0.0, 0.0);
                    for kx in -kk..=kk {
                        for ky in -kk..=kk {
                            s += self.coeff(&[kx, ky]) * axis[idx(kx)][bx] * axis[idx(ky)][by];
                        }
                    }
                    out.push(s.re);
                }
            }
            out
        }
    }

    /// Minimum of the real part over a uniform evaluation grid.
    pub fn min_on_grid(&self, per_axis: usize) -> f64 {
        let mut min = f64::INFINITY;
        if self.dim == 1 {
            for i in 0..per_axis {
                min = min.min(self.eval(&Point::new1(i as f64 / per_axis as f64)).re);
            }
        } else {
            for i in 0..per_axis {
                for j in 0..per_axis {
                    let p = Point::new2(i as f64 / per_axis as f64, j as f64 / per_axis as f64);
                    min = min.min(self.eval(&p).re);
                }
            }
        }
        min
    }
}

/// Squared Sobolev weight of mode k: 1 + <2 pi |k|>^{2 mu} with <s> = sqrt(1+s^2).
/// For mu < 0 the space is L^2, so the weight collapses to 1.
pub fn sobolev_weight_sq(mu: f64, k: &[i64]) -> f64 {
    if mu < 0.0 {
        return 1.0;
    }
    let norm2: f64 = k.iter().map(|ki| (*ki * *ki) as f64).sum();
    let s2 = 4.0 * PI * PI * norm2;
    1.0 + (1.0 + s2).powf(mu)
}

/// H^mu norm: sqrt(sum_k (1 + <2 pi |k|>^{2 mu}) |u_hat(k)|^2); plain L^2 for mu < 0.
pub fn h_mu_norm(u: &TrigPoly, mu: f64) -> f64 {
    let mut sum = 0.0;
    for (i, c) in u.coeffs().iter().enumerate() {
        let k = u.mode_of(i);
        sum += sobolev_weight_sq(mu, &k[..u.dim()]) * c.norm_sqr();
    }
    sum.sqrt()
}

/// The literal preimage sum Pu(q) = sum_{f(p)=q} u(p)/|Jf(p)|.
pub fn apply_p_pointwise<M, F>(map: &M, u: F, q: &Point) -> Result<Complex64>
where
    M: CoveringMap,
    F: Fn(&Point) -> Complex64,
{
    let mut sum = Complex64::new(0.0, 0.0);
    for p in map.preimages(q)? {
        sum += u(&p) / map.jacobian(&p)?.abs();
    }
    Ok(sum)
}

/// Fourier-Galerkin truncation of P at cutoff K.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    pub dim: usize,
    pub cutoff: usize,
    pub n_quad: usize,
    pub mat: DMatrix<Complex64>,
    /// Set when the requested quadrature size violates the oversampling rule.
    pub aliasing_risk: bool,
}

impl TransferMatrix {
    pub fn n_modes(&self) -> usize {
        self.mat.nrows()
    }

    pub fn apply(&self, u: &TrigPoly) -> TrigPoly {
        assert_eq!(u.dim(), self.dim);
        assert_eq!(u.cutoff(), self.cutoff);
        let v = &self.mat * u.to_vector();
        TrigPoly::from_vector(self.dim, self.cutoff, &v)
    }
}

/// Quadrature size needed so that equispaced sampling resolves the integrand
/// exp(2 pi i (l.p - k.f(p))) without aliasing: twice the linear stretch plus
/// the oscillatory bandwidth of any trigonometric amplitude terms.
pub fn required_quadrature(map: &TorusMap, cutoff: usize) -> usize {
    let k = cutoff as f64;
    let (stretch, amp_band) = match map {
        TorusMap::Linear { dim, a } => {
            let rows = if *dim == 1 { 1 } else { 2 };
            let max_row: i64 = (0..rows)
                .map(|i| a[i][0].abs() + a[i][1].abs())
                .max()
                .unwrap_or(1);
            (max_row as f64, 0.0)
        }
        TorusMap::CircleExpand { k: deg, eps } => (*deg as f64, eps.abs()),
        TorusMap::SkewCosine { m, a } => (*m as f64, a.abs()),
        TorusMap::SkewGeneral { k: deg, eps, tau } => {
            let tau_band: f64 = (1..=tau.cos_coeffs.len().max(tau.sin_coeffs.len()))
                .map(|j| {
                    let a = tau.cos_coeffs.get(j - 1).copied().unwrap_or(0.0).abs();
                    let b = tau.sin_coeffs.get(j - 1).copied().unwrap_or(0.0).abs();
                    j as f64 * (a + b)
                })
                .sum();
            (*deg as f64, eps.abs() + tau_band)
        }
    };
    // Bessel tails J_n(z) die for |n| > |z| + margin, z up to 2 pi * amp * K.
    let band = k * stretch + k + (2.0 * PI * amp_band * k).ceil() + 16.0;
    let need = (2 * band as usize + 8).max(2 * cutoff + 2);
    need.next_power_of_two()
}

fn fft_forward(planner: &mut FftPlanner<f64>, buf: &mut [Complex64]) {
    let fft = planner.plan_fft_forward(buf.len());
    fft.process(buf);
}

/// Assemble the Galerkin matrix by equispaced quadrature: each row is the FFT
/// of exp(-2 pi i k . f(x)) sampled on the shared grid.
pub fn assemble_transfer_matrix(
    map: &TorusMap,
    cutoff: usize,
    n_quad: Option<usize>,
) -> Result<TransferMatrix> {
    if cutoff == 0 {
        return Err(Error::InvalidParameter("cutoff must be >= 1".into()));
    }
    let dim = map.dim();
    let required = required_quadrature(map, cutoff);
    let n = n_quad.unwrap_or(required);
    let aliasing_risk = n < required;
    if n < 2 * cutoff + 2 {
        return Err(Error::InvalidParameter(format!(
            "quadrature size {n} cannot resolve cutoff {cutoff}"
        )));
    }
    let mut planner = FftPlanner::new();
    let side = 2 * cutoff + 1;
    let kk = cutoff as i64;
    let wrap = |l: i64| (-l).rem_euclid(n as i64) as usize;

    if dim == 1 {
        let dim_modes = side;
        let mut mat = DMatrix::from_element(dim_modes, dim_modes, Complex64::new(0.0, 0.0));
        let fx: Vec<f64> = (0..n)
            .map(|g| map.eval(&Point::new1(g as f64 / n as f64)).x())
            .collect();
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for k in -kk..=kk {
            for g in 0..n {
                let phase = -2.0 * PI * k as f64 * fx[g];
                buf[g] = Complex64::new(phase.cos(), phase.sin());
            }
            fft_forward(&mut planner, &mut buf);
            let row = (k + kk) as usize;
            for l in -kk..=kk {
                mat[(row, (l + kk) as usize)] = buf[wrap(l)] / n as f64;
            }
        }
        return Ok(TransferMatrix {
            dim,
            cutoff,
            n_quad: n,
            mat,
            aliasing_risk,
        });
    }

    // d = 2: grid index g = gx * n + gy, rows of the grid contiguous in gy.
    let dim_modes = side * side;
    let mut mat = DMatrix::from_element(dim_modes, dim_modes, Complex64::new(0.0, 0.0));
    let n2 = n * n;
    let mut fx = vec![0.0f64; n2];
    let mut fy = vec![0.0f64; n2];
    for gx in 0..n {
        for gy in 0..n {
            let p = Point::new2(gx as f64 / n as f64, gy as f64 / n as f64);
            let q = map.eval(&p);
            fx[gx * n + gy] = q.x();
            fy[gx * n + gy] = q.y();
        }
    }
    // one multiplication per kx step instead of a sin_cos pass per row
    let ax: Vec<Complex64> = fx
        .iter()
        .map(|v| {
            let phase = -2.0 * PI * v;
            Complex64::new(phase.cos(), phase.sin())
        })
        .collect();
    let ax_start: Vec<Complex64> = fx
        .iter()
        .map(|v| {
            let phase = 2.0 * PI * kk as f64 * v;
            Complex64::new(phase.cos(), phase.sin())
        })
        .collect();

    let mut cur = vec![Complex64::new(0.0, 0.0); n2];
    let mut work = vec![Complex64::new(0.0, 0.0); n2];
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for ky in -kk..=kk {
        for g in 0..n2 {
            let phase = -2.0 * PI * ky as f64 * fy[g];
            cur[g] = Complex64::new(phase.cos(), phase.sin()) * ax_start[g];
        }
        for kx in -kk..=kk {
            if kx > -kk {
                for g in 0..n2 {
                    cur[g] *= ax[g];
                }
            }
            work.copy_from_slice(&cur);
            // FFT along gy for every gx (contiguous rows)
            {
                let fft = planner.plan_fft_forward(n);
                for gx in 0..n {
                    fft.process(&mut work[gx * n..(gx + 1) * n]);
                }
            }
            let row = (kx + kk) as usize * side + (ky + kk) as usize;
            // for each needed gy frequency, FFT the gx column
            for ly in -kk..=kk {
                let ny = wrap(ly);
                for gx in 0..n {
                    col[gx] = work[gx * n + ny];
                }
                fft_forward(&mut planner, &mut col);
                for lx in -kk..=kk {
                    let val = col[wrap(lx)] / n2 as f64;
                    mat[(row, (lx + kk) as usize * side + (ly + kk) as usize)] = val;
                }
            }
        }
    }
    Ok(TransferMatrix {
        dim,
        cutoff,
        n_quad: n,
        mat,
        aliasing_risk,
    })
}

/// w(k) = sqrt(1 + <2 pi |k|>^{2 mu}) per flat coefficient index.
pub fn sobolev_weights(dim: usize, cutoff: usize, mu: f64) -> Vec<f64> {
    let probe = TrigPoly::zero(dim, cutoff);
    (0..probe.n_modes())
        .map(|i| {
            let k = probe.mode_of(i);
            sobolev_weight_sq(mu, &k[..dim]).sqrt()
        })
        .collect()
}

/// Similarity transform W M W^{-1} implementing the H^mu geometry; eigenvalues
/// are unchanged, truncation behavior is what the weighting controls.
pub fn weighted_matrix(tm: &TransferMatrix, mu: f64) -> DMatrix<Complex64> {
    let w = sobolev_weights(tm.dim, tm.cutoff, mu);
    let nm = tm.n_modes();
    DMatrix::from_fn(nm, nm, |i, j| tm.mat[(i, j)] * (w[i] / w[j]))
}

fn sort_eigenvalues(mut eigs: Vec<Complex64>) -> Vec<Complex64> {
    eigs.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap()
            .then(b.re.partial_cmp(&a.re).unwrap())
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    eigs
}

/// Eigenvalues of a matrix with at most one nonzero per row, read off the
/// functional graph row -> column: zeros off cycles, k-th roots of the entry
/// product on each k-cycle. QR iteration smears the eigenvalues of such
/// (mostly nilpotent) matrices by ~eps^{1/chain length}, so snapping the exact
/// sparsity pattern is both faster and far more accurate for the linear and
/// unperturbed-doubling families whose Galerkin matrices have this shape.
fn sparse_cycle_eigenvalues(m: &DMatrix<Complex64>) -> Option<Vec<Complex64>> {
    let n = m.nrows();
    let maxabs = m.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if maxabs == 0.0 {
        return Some(vec![Complex64::new(0.0, 0.0); n]);
    }
    let tol = 1e-13 * maxabs;
    let mut next: Vec<Option<(usize, Complex64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut hit = None;
        for j in 0..n {
            if m[(i, j)].norm() > tol {
                if hit.is_some() {
                    return None;
                }
                hit = Some((j, m[(i, j)]));
            }
        }
        next.push(hit);
    }
    let mut eigs = Vec::with_capacity(n);
    let mut state = vec![0u8; n]; // 0 new, 1 on current path, 2 done
    for s in 0..n {
        if state[s] != 0 {
            continue;
        }
        let mut path = vec![];
        let mut cur = s;
        loop {
            state[cur] = 1;
            path.push(cur);
            match next[cur] {
                Some((j, _)) if state[j] == 1 => {
                    let pos = path.iter().position(|&x| x == j).unwrap();
                    let cycle = &path[pos..];
                    let prod: Complex64 = cycle
                        .iter()
                        .map(|&i| next[i].unwrap().1)
                        .product();
                    let k = cycle.len();
                    let r = prod.norm().powf(1.0 / k as f64);
                    let base_arg = prod.arg() / k as f64;
                    for j2 in 0..k {
                        let theta = base_arg + 2.0 * PI * j2 as f64 / k as f64;
                        eigs.push(Complex64::from_polar(r, theta));
                    }
                    break;
                }
                Some((j, _)) if state[j] == 0 => {
                    cur = j;
                }
                _ => break, // dead end or already-processed node
            }
        }
        for &i in &path {
            state[i] = 2;
        }
    }
    eigs.resize(n, Complex64::new(0.0, 0.0));
    Some(eigs)
}

/// All eigenvalues of a general complex matrix, sorted by modulus then real part.
pub fn complex_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    if let Some(eigs) = sparse_cycle_eigenvalues(m) {
        return Ok(sort_eigenvalues(eigs));
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-14, 100_000)
        .ok_or(Error::EigenSolverFailure)?;
    let eigs = schur.eigenvalues().ok_or(Error::EigenSolverFailure)?;
    Ok(sort_eigenvalues(eigs.iter().copied().collect()))
}

/// Right eigenvector for an eigenvalue via shifted inverse iteration.
fn inverse_iteration(m: &DMatrix<Complex64>, lambda: Complex64) -> Result<DVector<Complex64>> {
    let n = m.nrows();
    let norm_scale = m.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
    let mut shift = lambda + Complex64::new(1e-10 * norm_scale, 1e-11 * norm_scale);
    for _attempt in 0..4 {
        let shifted = m - DMatrix::from_diagonal_element(n, n, shift);
        if let Some(lu) = Some(shifted.lu()) {
            let mut v = DVector::from_fn(n, |i, _| {
                Complex64::new(1.0 + (i as f64 * 0.7).sin() * 0.01, (i as f64 * 0.3).cos() * 0.01)
            });
            v /= Complex64::new(v.norm(), 0.0);
            let mut ok = true;
            for _ in 0..5 {
                match lu.solve(&v) {
                    Some(next) => {
                        let nn = next.norm();
                        if !nn.is_finite() || nn == 0.0 {
                            ok = false;
                            break;
                        }
                        v = next / Complex64::new(nn, 0.0);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                let residual = (m * &v - v.scale(1.0) * lambda).norm();
                if residual <= 1e-8 * norm_scale {
                    return Ok(v);
                }
            }
        }
        shift += Complex64::new(3e-9 * norm_scale, 1e-9 * norm_scale);
    }
    Err(Error::EigenSolverFailure)
}

/// Leading eigenvalues (by modulus, then real part) of the Sobolev-weighted
/// truncation, with right eigenvectors of the weighted matrix.
pub fn leading_spectrum(
    tm: &TransferMatrix,
    mu: f64,
    count: usize,
) -> Result<Vec<(Complex64, DVector<Complex64>)>> {
    if count > tm.n_modes() {
        return Err(Error::InvalidParameter(format!(
            "count {count} exceeds matrix dimension {}",
            tm.n_modes()
        )));
    }
    let wm = weighted_matrix(tm, mu);
    let eigs = complex_eigenvalues(&wm)?;
    eigs.into_iter()
        .take(count)
        .map(|lam| Ok((lam, inverse_iteration(&wm, lam)?)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct DensityResult {
    pub density: TrigPoly,
    pub eigenvalue: Complex64,
    /// Largest deviation from conjugate symmetry after normalization.
    pub imag_residual: f64,
    /// Minimum over a fine evaluation grid; truncation may ring slightly negative.
    pub min_grid_value: f64,
}

/// Invariant density: the eigenvector nearest eigenvalue 1, scaled to mean 1.
pub fn invariant_density(tm: &TransferMatrix) -> Result<DensityResult> {
    let eigs = complex_eigenvalues(&tm.mat)?;
    let one = Complex64::new(1.0, 0.0);
    let nearest = eigs
        .iter()
        .copied()
        .min_by(|a, b| (a - one).norm().partial_cmp(&(b - one).norm()).unwrap())
        .ok_or(Error::EigenSolverFailure)?;
    if (nearest - one).norm() > 1e-6 {
        return Err(Error::NoUnitEigenvalue { nearest });
    }
    let v = inverse_iteration(&tm.mat, nearest)?;
    let mut u = TrigPoly::from_vector(tm.dim, tm.cutoff, &v);
    let c0 = u.mean();
    if c0.norm() < 1e-12 {
        return Err(Error::NoUnitEigenvalue { nearest });
    }
    for c in u.coeffs.iter_mut() {
        *c /= c0;
    }
    let imag_residual = u.reality_residual();
    let min_grid_value = u.min_on_grid(if tm.dim == 1 { 1024 } else { 128 });
    Ok(DensityResult {
        density: u,
        eigenvalue: nearest,
        imag_residual,
        min_grid_value,
    })
}

/// Cesàro average (1/m) sum_{j<m} P^j u in the truncated space.
pub fn cesaro_average(tm: &TransferMatrix, u: &TrigPoly, m: usize) -> TrigPoly {
    assert!(m >= 1);
    let mut acc = u.to_vector();
    let mut cur = u.to_vector();
    for _ in 1..m {
        cur = &tm.mat * cur;
        acc += &cur;
    }
    acc /= Complex64::new(m as f64, 0.0);
    TrigPoly::from_vector(tm.dim, tm.cutoff, &acc)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassifiedEig {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    pub stable: bool,
}

/// Heuristic truncation-spectrum report: eigenvalues that persist across
/// consecutive cutoffs are "stable", the rest are "bulk"; the bulk radius is
/// compared against the bound sqrt(B^{2 mu}) from the weight estimates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EssRadiusReport {
    pub mu: f64,
    pub k_list: Vec<usize>,
    pub rate: RateEstimate,
    /// sqrt of the Fekete minimum of the B^{2 mu}(f^n) grid estimates.
    pub bound: f64,
    /// Eigenvalues at the largest cutoff with their stability classification.
    pub eigenvalues: Vec<ClassifiedEig>,
    pub stable_count: usize,
    pub bulk_radius: f64,
    /// True when every bulk eigenvalue stays below bound + 0.05.
    pub consistent: bool,
}

const STABLE_MOD_TOL: f64 = 1e-4;
const STABLE_POS_TOL: f64 = 1e-3;

pub fn essential_radius_report(
    map: &TorusMap,
    mu: f64,
    k_list: &[usize],
    n_max: usize,
    grid: &GridSpec,
) -> Result<EssRadiusReport> {
    if k_list.len() < 2 {
        return Err(Error::InvalidParameter(
            "essential-radius report needs at least two cutoffs".into(),
        ));
    }
    let rate = virtual_expansion_rate(map, mu, n_max, grid)?;
    let bound = rate.fekete_min.sqrt();

    let mut spectra: Vec<Vec<Complex64>> = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let tm = assemble_transfer_matrix(map, k, None)?;
        spectra.push(complex_eigenvalues(&weighted_matrix(&tm, mu))?);
    }

    // Chain matching: an eigenvalue of the final cutoff is stable when it can
    // be traced through every consecutive pair within the tolerances.
    let mut survivors: Vec<Complex64> = spectra[0].clone();
    for next in &spectra[1..] {
        survivors = survivors
            .iter()
            .filter_map(|e| {
                next.iter()
                    .copied()
                    .filter(|c| {
                        (c.norm() - e.norm()).abs() < STABLE_MOD_TOL
                            && (c - e).norm() < STABLE_POS_TOL
                    })
                    .min_by(|a, b| {
                        (a - e).norm().partial_cmp(&(b - e).norm()).unwrap()
                    })
            })
            .collect();
    }
    let last = spectra.last().unwrap();
    let eigenvalues: Vec<ClassifiedEig> = last
        .iter()
        .map(|e| {
            let stable = survivors.iter().any(|s| (s - e).norm() < 1e-12);
            ClassifiedEig {
                re: e.re,
                im: e.im,
                modulus: e.norm(),
                stable,
            }
        })
        .collect();
    let stable_count = eigenvalues.iter().filter(|e| e.stable).count();
    let bulk_radius = eigenvalues
        .iter()
        .filter(|e| !e.stable)
        .map(|e| e.modulus)
        .fold(0.0, f64::max);
    let consistent = bulk_radius <= bound + 0.05;
    Ok(EssRadiusReport {
        mu,
        k_list: k_list.to_vec(),
        rate,
        bound,
        eigenvalues,
        stable_count,
        bulk_radius,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn norms() {
        let u = TrigPoly::constant(1, 4, 1.0);
        assert_abs_diff_eq!(h_mu_norm(&u, 1.0), 2.0_f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(h_mu_norm(&u, 0.0), 2.0_f64.sqrt(), epsilon = 1e-14);

        let mut e = TrigPoly::zero(1, 4);
        *e.coeff_mut(&[1]) = Complex64::new(1.0, 0.0);
        let expect = (2.0 + 4.0 * PI * PI).sqrt();
        assert_abs_diff_eq!(h_mu_norm(&e, 1.0), expect, epsilon = 1e-12);
        // mu < 0 falls back to the plain L^2 norm
        assert_abs_diff_eq!(h_mu_norm(&e, -2.0), 1.0, epsilon = 1e-14);

        // H^0 norm squared is twice the L^2 norm squared
        let mut u = TrigPoly::zero(1, 3);
        *u.coeff_mut(&[0]) = Complex64::new(0.3, 0.0);
        *u.coeff_mut(&[2]) = Complex64::new(0.1, -0.4);
        *u.coeff_mut(&[-2]) = Complex64::new(0.1, 0.4);
        let l2: f64 = u.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert_abs_diff_eq!(h_mu_norm(&u, 0.0), 2.0_f64.sqrt() * l2, epsilon = 1e-13);

        // monotone in mu
        assert!(h_mu_norm(&u, 2.0) >= h_mu_norm(&u, 1.0));
        assert!(h_mu_norm(&u, 1.0) >= h_mu_norm(&u, 0.0));
    }

    #[test]
    fn pointwise_p_examples() {
        let f = TorusMap::skew_cosine(4, 2.0).unwrap();
        let one = |_: &Point| Complex64::new(1.0, 0.0);
        let v = apply_p_pointwise(&f, one, &Point::new2(0.37, 0.11)).unwrap();
        assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-13);

        let d = TorusMap::circle_expand(2, 0.0).unwrap();
        let cos1 = |p: &Point| Complex64::new((2.0 * PI * p.x()).cos(), 0.0);
        let v = apply_p_pointwise(&d, cos1, &Point::new1(0.23)).unwrap();
        assert_abs_diff_eq!(v.re, 0.0, epsilon = 1e-13);

        // (Pu)^(k) = u^(2k): P(cos 4 pi x) = cos 2 pi x
        let cos2 = |p: &Point| Complex64::new((4.0 * PI * p.x()).cos(), 0.0);
        for i in 0..8 {
            let q = Point::new1(i as f64 / 8.0 + 0.031);
            let v = apply_p_pointwise(&d, cos2, &q).unwrap();
            assert_abs_diff_eq!(v.re, (2.0 * PI * q.x()).cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn doubling_matrix_is_shift() {
        let d = TorusMap::circle_expand(2, 0.0).unwrap();
        let tm = assemble_transfer_matrix(&d, 4, None).unwrap();
        let kk = 4i64;
        for k in -kk..=kk {
            for l in -kk..=kk {
                let want = if l == 2 * k { 1.0 } else { 0.0 };
                let got = tm.mat[((k + kk) as usize, (l + kk) as usize)];
                assert_abs_diff_eq!(got.re, want, epsilon = 1e-12);
                assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn linear_matrix_is_permutation() {
        let a = TorusMap::linear_2d([[2, 1], [1, 2]]).unwrap();
        let tm = assemble_transfer_matrix(&a, 3, None).unwrap();
        let kk = 3i64;
        let side = 7usize;
        for kx in -kk..=kk {
            for ky in -kk..=kk {
                // A^T k
                let tx = 2 * kx + ky;
                let ty = kx + 2 * ky;
                for lx in -kk..=kk {
                    for ly in -kk..=kk {
                        let want = if lx == tx && ly == ty { 1.0 } else { 0.0 };
                        let row = (kx + kk) as usize * side + (ky + kk) as usize;
                        let colv = (lx + kk) as usize * side + (ly + kk) as usize;
                        let got = tm.mat[(row, colv)];
                        assert_abs_diff_eq!(got.re, want, epsilon = 1e-12);
                        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn matrix_invariants_all_families() {
        let maps = vec![
            TorusMap::linear_2d([[2, 0], [0, 3]]).unwrap(),
            TorusMap::circle_expand(2, 0.05).unwrap(),
            TorusMap::skew_cosine(3, 1.5).unwrap(),
        ];
        for map in maps {
            let tm = assemble_transfer_matrix(&map, 5, None).unwrap();
            let probe = TrigPoly::zero(tm.dim, tm.cutoff);
            let zero_row = probe.index(&[0, 0][..tm.dim]);
            for j in 0..tm.n_modes() {
                let want = if j == zero_row { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(tm.mat[(zero_row, j)].re, want, epsilon = 1e-10);
                assert_abs_diff_eq!(tm.mat[(zero_row, j)].im, 0.0, epsilon = 1e-10);
            }
            // reality: M[-k][-l] = conj(M[k][l])
            let nm = tm.n_modes();
            for i in 0..nm {
                for j in 0..nm {
                    let a = tm.mat[(i, j)];
                    let b = tm.mat[(nm - 1 - i, nm - 1 - j)];
                    assert!((a - b.conj()).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn matrix_matches_pointwise_p() {
        // random band-limited u with |k| <= K/2 so Pu is fully resolved
        let map = TorusMap::circle_expand(3, 0.04).unwrap();
        let k = 12usize;
        let tm = assemble_transfer_matrix(&map, k, None).unwrap();
        let mut u = TrigPoly::zero(1, k);
        let mut state = 88172645463325252u64;
        let mut rng = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for kmode in 1..=(k as i64 / 2) {
            let c = Complex64::new(rng(), rng());
            *u.coeff_mut(&[kmode]) = c;
            *u.coeff_mut(&[-kmode]) = c.conj();
        }
        *u.coeff_mut(&[0]) = Complex64::new(1.0, 0.0);
        let pu = tm.apply(&u);
        for i in 0..64 {
            let q = Point::new1((i as f64 + 0.5) / 64.0);
            let direct = apply_p_pointwise(&map, |p| u.eval(p), &q).unwrap();
            assert!((pu.eval(&q) - direct).norm() < 1e-8);
        }
        // mass conservation under the matrix
        assert!((pu.mean() - u.mean()).norm() < 1e-12);
        // reality preservation
        assert!(pu.reality_residual() < 1e-12);
    }

    #[test]
    fn doubling_spectrum_and_density() {
        let d = TorusMap::circle_expand(2, 0.0).unwrap();
        let tm = assemble_transfer_matrix(&d, 8, None).unwrap();
        let eigs = complex_eigenvalues(&weighted_matrix(&tm, 1.0)).unwrap();
        assert!((eigs[0] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        for e in &eigs[1..] {
            assert!(e.norm() < 1e-10, "unexpected eigenvalue {e}");
        }
        let dens = invariant_density(&tm).unwrap();
        for (i, c) in dens.density.coeffs().iter().enumerate() {
            let k = dens.density.mode_of(i);
            let want = if k[0] == 0 { 1.0 } else { 0.0 };
            assert!((c - Complex64::new(want, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn skew_density_is_constant() {
        let f = TorusMap::skew_cosine(3, 1.0).unwrap();
        let tm = assemble_transfer_matrix(&f, 4, None).unwrap();
        let dens = invariant_density(&tm).unwrap();
        assert!((dens.eigenvalue - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        for (i, c) in dens.density.coeffs().iter().enumerate() {
            let k = dens.density.mode_of(i);
            let want = if k[0] == 0 && k[1] == 0 { 1.0 } else { 0.0 };
            assert!((c - Complex64::new(want, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn spectral_radius_near_one_all_families() {
        let maps = vec![
            TorusMap::linear_2d([[2, 0], [0, 3]]).unwrap(),
            TorusMap::circle_expand(2, 0.05).unwrap(),
            TorusMap::skew_cosine(3, 1.5).unwrap(),
        ];
        for map in maps {
            let tm = assemble_transfer_matrix(&map, 8, None).unwrap();
            let eigs = complex_eigenvalues(&weighted_matrix(&tm, 1.0)).unwrap();
            assert!(
                (eigs[0].norm() - 1.0).abs() < 1e-6,
                "spectral radius {} for {map:?}",
                eigs[0].norm()
            );
        }
    }

    #[test]
    fn positivity_preserved_pointwise() {
        let map = TorusMap::circle_expand(2, 0.05).unwrap();
        // nonnegative test function 1 + cos(2 pi x)
        let u = |p: &Point| Complex64::new(1.0 + (2.0 * PI * p.x()).cos(), 0.0);
        for i in 0..128 {
            let q = Point::new1(i as f64 / 128.0);
            let v = apply_p_pointwise(&map, u, &q).unwrap();
            assert!(v.re >= -1e-10);
        }
    }

    #[test]
    fn cesaro_examples() {
        let d = TorusMap::circle_expand(2, 0.0).unwrap();
        let tm = assemble_transfer_matrix(&d, 8, None).unwrap();
        let u = TrigPoly::cosine(1, 8, &[1]);
        let avg = cesaro_average(&tm, &u, 100);
        // Pu = 0, so the average is u/100
        assert_abs_diff_eq!(
            h_mu_norm(&avg, 0.0),
            h_mu_norm(&u, 0.0) / 100.0,
            epsilon = 1e-14
        );

        let one = TrigPoly::constant(1, 8, 1.0);
        let avg = cesaro_average(&tm, &one, 17);
        assert!((avg.mean() - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        assert_abs_diff_eq!(h_mu_norm(&avg, 0.0), 2.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn cesaro_converges_to_projection() {
        let map = TorusMap::circle_expand(2, 0.05).unwrap();
        let tm = assemble_transfer_matrix(&map, 24, None).unwrap();
        // smoothed indicator-like function: mean 0.5 plus low harmonics
        let mut u = TrigPoly::constant(1, 24, 0.5);
        *u.coeff_mut(&[1]) = Complex64::new(0.2, 0.1);
        *u.coeff_mut(&[-1]) = Complex64::new(0.2, -0.1);
        *u.coeff_mut(&[3]) = Complex64::new(-0.05, 0.0);
        *u.coeff_mut(&[-3]) = Complex64::new(-0.05, 0.0);
        let dens = invariant_density(&tm).unwrap();
        // Cesàro averages converge at rate O(1/m)
        let m = 2000;
        let avg = cesaro_average(&tm, &u, m);
        let mut diff2 = 0.0;
        for (i, c) in avg.coeffs().iter().enumerate() {
            let k = avg.mode_of(i);
            let want = dens.density.coeff(&k[..1]) * Complex64::new(0.5, 0.0);
            diff2 += (c - want).norm_sqr();
        }
        assert!(
            diff2.sqrt() < 2.0 / m as f64,
            "coefficient distance {}",
            diff2.sqrt()
        );
    }

    #[test]
    fn essential_radius_doubling() {
        let d = TorusMap::circle_expand(2, 0.0).unwrap();
        let rep = essential_radius_report(&d, 1.0, &[8, 16], 1, &GridSpec::new([16, 1], 1))
            .unwrap();
        assert_abs_diff_eq!(rep.bound, 0.5, epsilon = 1e-10);
        let stable_big: Vec<_> = rep
            .eigenvalues
            .iter()
            .filter(|e| e.stable && e.modulus > 0.5)
            .collect();
        assert_eq!(stable_big.len(), 1);
        assert_abs_diff_eq!(stable_big[0].re, 1.0, epsilon = 1e-10);
        assert!(rep.bulk_radius < 1e-10);
        assert!(rep.consistent);
    }

    #[test]
    fn bin_averages_integrate_to_mean() {
        let mut u = TrigPoly::constant(1, 6, 1.0);
        *u.coeff_mut(&[2]) = Complex64::new(0.3, 0.1);
        *u.coeff_mut(&[-2]) = Complex64::new(0.3, -0.1);
        let avgs = u.bin_averages(16);
        let total: f64 = avgs.iter().sum::<f64>() / 16.0;
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn aliasing_flag() {
        let map = TorusMap::circle_expand(2, 0.0).unwrap();
        let tm = assemble_transfer_matrix(&map, 8, Some(32)).unwrap();
        assert!(tm.aliasing_risk);
        let tm = assemble_transfer_matrix(&map, 8, None).unwrap();
        assert!(!tm.aliasing_risk);
    }
}
