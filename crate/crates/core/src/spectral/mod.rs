//! Eigenpairs, resolvent probes, time evolution and the Helffer–Sjöstrand
//! functional calculus.

mod evolve;
mod hs;
mod resolvent;

pub use evolve::{evolve, evolve_with, EvolveResult};
pub use hs::{
    hnorm, hs_moment, hs_reconstruct, xi, xi_prime, BaseFunction, HsQuadrature, HsReconstruction,
    QuasiAnalyticExtension,
};
pub use resolvent::{resolvent_block_norm, ProbeStatus, ResolventContext, ResolventProbe};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::discretization::HamiltonianMatrix;
use crate::error::{Error, Result};
use crate::linalg::{count_below, sym_eigen, Lanczos, ShiftedSolver};

/// Size above which eigenproblems switch from dense to shift-invert Lanczos.
pub const DENSE_THRESHOLD: usize = 3000;

/// Size above which the lowest eigenvalue is computed iteratively.
pub const LOWEST_DENSE_THRESHOLD: usize = 256;

#[derive(Clone, Debug, Serialize)]
pub struct EigenWindowResult {
    pub interval: (f64, f64),
    pub values: Vec<f64>,
    /// Eigenvectors normalized in the `h^d`-weighted norm.
    pub vectors: Vec<Vec<f64>>,
    /// Weighted residuals `‖Hψ − Eψ‖`.
    pub residuals: Vec<f64>,
    /// More than `max_count` eigenvalues were in the window.
    pub truncated: bool,
    /// Node weight `h^d`.
    pub weight: f64,
}

impl EigenWindowResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `‖1_mask ψ_k‖²` in the weighted norm.
    pub fn mass(&self, k: usize, mask: &[bool]) -> f64 {
        self.weight
            * self.vectors[k]
                .iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(v, _)| v * v)
                .sum::<f64>()
    }
}

fn window_slack(h: &HamiltonianMatrix, a: f64, b: f64) -> f64 {
    1e-11 * h.matrix.inf_norm().max(a.abs()).max(b.abs()).max(1.0)
}

/// Weighted residual and normalization of a unit ℓ² vector.
fn finish_pair(h: &HamiltonianMatrix, value: f64, unit: Vec<f64>) -> (Vec<f64>, f64) {
    let w = h.weight();
    let mut hv = vec![0.0; unit.len()];
    h.matrix.matvec(&unit, &mut hv);
    let res: f64 = hv
        .iter()
        .zip(&unit)
        .map(|(a, b)| (a - value * b).powi(2))
        .sum::<f64>()
        .sqrt();
    let s = w.sqrt();
    (unit.into_iter().map(|v| v / s).collect(), res)
}

/// All eigenvalues of `H` in the closed window `[a, b]`, at most `max_count`
/// of them (the lowest ones), with eigenvectors.
pub fn eigs_window(h: &HamiltonianMatrix, window: (f64, f64), max_count: usize) -> Result<EigenWindowResult> {
    eigs_window_with(h, window, max_count, DENSE_THRESHOLD)
}

pub fn eigs_window_with(
    h: &HamiltonianMatrix,
    window: (f64, f64),
    max_count: usize,
    dense_threshold: usize,
) -> Result<EigenWindowResult> {
    let (a, b) = window;
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::InvalidArgument(format!("bad window [{a}, {b}]")));
    }
    let n = h.dim();
    let eps = window_slack(h, a, b);
    let mut pairs: Vec<(f64, Vec<f64>)> = if n <= dense_threshold {
        let (vals, vecs) = sym_eigen(h.matrix.to_dense());
        vals.iter()
            .enumerate()
            .filter(|(_, &v)| v >= a - eps && v <= b + eps)
            .map(|(k, &v)| (v, vecs.column(k).iter().copied().collect()))
            .collect()
    } else {
        let target = count_below(&h.matrix, b + eps) - count_below(&h.matrix, a - eps);
        shift_invert_window(h, a - eps, b + eps, target)?
    };
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let truncated = pairs.len() > max_count;
    pairs.truncate(max_count);
    let mut values = Vec::with_capacity(pairs.len());
    let mut vectors = Vec::with_capacity(pairs.len());
    let mut residuals = Vec::with_capacity(pairs.len());
    for (v, x) in pairs {
        let (psi, r) = finish_pair(h, v, x);
        values.push(v);
        vectors.push(psi);
        residuals.push(r);
    }
    Ok(EigenWindowResult {
        interval: window,
        values,
        vectors,
        residuals,
        truncated,
        weight: h.weight(),
    })
}

fn factor_near(h: &HamiltonianMatrix, sigma: f64, nudge: f64) -> Result<(f64, ShiftedSolver)> {
    let mut s = sigma;
    for _ in 0..8 {
        match ShiftedSolver::new(&h.matrix, s) {
            Ok(f) => return Ok((s, f)),
            Err(Error::Singular(_)) => s += nudge,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Singular(0))
}

fn shift_invert_window(h: &HamiltonianMatrix, a: f64, b: f64, target: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = h.dim();
    if target == 0 {
        return Ok(vec![]);
    }
    let (sigma, solver) = factor_near(h, 0.5 * (a + b), 1e-7 * (b - a + 1.0))?;
    let mut found: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut op = |x: &[f64], y: &mut [f64]| {
        y.copy_from_slice(x);
        solver.solve(y).expect("shifted solve");
    };
    let mut round = 0u64;
    while found.len() < target {
        let need = target - found.len();
        let cap = (n - found.len()).min(3 * need + 60);
        let deflate: Vec<Vec<f64>> = found.iter().map(|p| p.1.clone()).collect();
        let mut lz = Lanczos::new(n, deflate, 0x5eed ^ round);
        let mut new_pairs = Vec::new();
        while lz.len() < cap && !lz.exhausted() {
            lz.step(&mut op);
            if lz.len() % 10 != 0 && lz.len() < cap && !lz.exhausted() {
                continue;
            }
            new_pairs = lz
                .ritz()
                .into_iter()
                .filter(|r| r.value != 0.0)
                .filter(|r| {
                    let lam = sigma + 1.0 / r.value;
                    lam >= a && lam <= b && r.residual <= 1e-10 * r.value.abs()
                })
                .collect::<Vec<_>>();
            if new_pairs.len() >= need {
                break;
            }
        }
        if new_pairs.is_empty() {
            return Err(Error::NoConvergence {
                what: "shift-invert Lanczos window".into(),
                iterations: lz.len(),
                residual: f64::NAN,
            });
        }
        for r in new_pairs.into_iter().take(need) {
            found.push((sigma + 1.0 / r.value, lz.vector(&r.coeffs)));
        }
        round += 1;
    }
    Ok(found)
}

/// Smallest eigenvalue with a weighted-normalized eigenvector.
pub fn lowest_eigenpair(h: &HamiltonianMatrix) -> Result<(f64, Vec<f64>)> {
    let n = h.dim();
    if n <= LOWEST_DENSE_THRESHOLD {
        let (vals, vecs) = sym_eigen(h.matrix.to_dense());
        let v: Vec<f64> = vecs.column(0).iter().copied().collect();
        return Ok((vals[0], finish_pair(h, vals[0], v).0));
    }
    // bracket by inertia counts, then shift-invert just below
    let mut lo = h.matrix.gershgorin_lower();
    let mut hi = h
        .matrix
        .diagonal()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let scale = h.matrix.inf_norm().max(1.0);
    while hi - lo > 1e-6 * scale {
        let mid = 0.5 * (lo + hi);
        if count_below(&h.matrix, mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta = (hi - lo).max(1e-9 * scale);
    let (sigma, solver) = factor_near(h, lo - delta, -delta)?;
    let mut op = |x: &[f64], y: &mut [f64]| {
        y.copy_from_slice(x);
        solver.solve(y).expect("shifted solve");
    };
    let mut lz = Lanczos::new(n, vec![], 0x10e5);
    let mut last_res = f64::NAN;
    while !lz.exhausted() && lz.len() < n.min(400) {
        lz.step(&mut op);
        let ritz = lz.ritz();
        let top = ritz.last().expect("nonempty Krylov space");
        last_res = top.residual / top.value.abs();
        if top.residual <= 1e-13 * top.value.abs() || lz.exhausted() {
            let value = sigma + 1.0 / top.value;
            let v = lz.vector(&top.coeffs);
            return Ok((value, finish_pair(h, value, v).0));
        }
    }
    Err(Error::NoConvergence {
        what: "lowest eigenvalue".into(),
        iterations: lz.len(),
        residual: last_res,
    })
}

pub fn lowest_eigenvalue(h: &HamiltonianMatrix) -> Result<f64> {
    lowest_eigenpair(h).map(|p| p.0)
}

/// Number of eigenvalues strictly below `e`.
pub fn count_eigenvalues_below(h: &HamiltonianMatrix, e: f64) -> usize {
    count_below(&h.matrix, e)
}

/// Operator norm of a dense matrix.
pub(crate) fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().iter().fold(0.0f64, |a, &b| a.max(b))
}
