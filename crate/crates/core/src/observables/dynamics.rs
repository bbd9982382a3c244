use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{bracket, clusters, euclidean_distance};
use crate::discretization::{HamiltonianMatrix, Region};
use crate::error::{Error, Result};
use crate::spectral::eigs_window;

#[derive(Clone, Debug, Serialize)]
pub struct DynamicalMoment {
    pub b: f64,
    /// `Σ_{E ∈ σ ∩ I} ‖⟨X−x0⟩^{bd} P(E) χ_{x0}‖`.
    pub proxy: f64,
    /// `(t, ‖⟨X−x0⟩^{bd} e^{−itH} P(I) χ_{x0}‖)`.
    pub samples: Vec<(f64, f64)>,
    pub eigenvalues: usize,
    pub clusters: usize,
    pub empty: bool,
}

impl DynamicalMoment {
    pub fn proxy_dominates(&self, rel_tol: f64) -> bool {
        self.samples.iter().all(|s| s.1 <= self.proxy * (1.0 + rel_tol) + 1e-300)
    }
}

fn max_singular_value(m: DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().fold(0.0f64, |a, &b| a.max(b))
}

/// Time-uniform moment bound over the closed window `I` and its values on a time grid.
pub fn dynamical_moment(
    h: &HamiltonianMatrix,
    window: (f64, f64),
    b: f64,
    x0: &[f64],
    t_grid: &[f64],
) -> Result<DynamicalMoment> {
    if b < 0.0 {
        return Err(Error::InvalidArgument("moment exponent must be nonnegative".into()));
    }
    let grid = &h.grid;
    let eig = eigs_window(h, window, usize::MAX)?;
    let cols: Vec<usize> = grid
        .mask(&Region::unit_box(x0))
        .iter()
        .enumerate()
        .filter_map(|(i, &m)| m.then_some(i))
        .collect();
    if eig.is_empty() || cols.is_empty() {
        return Ok(DynamicalMoment {
            b,
            proxy: 0.0,
            samples: t_grid.iter().map(|&t| (t, 0.0)).collect(),
            eigenvalues: 0,
            clusters: 0,
            empty: true,
        });
    }
    let exp = b * grid.dim() as f64;
    let weight: Vec<f64> = grid.points().map(|p| bracket(euclidean_distance(grid, &p, x0)).powf(exp)).collect();
    let s = eig.weight.sqrt();
    let unit: Vec<Vec<f64>> = eig.vectors.iter().map(|v| v.iter().map(|x| x * s).collect()).collect();
    let n = grid.len();
    // ⟨X−x0⟩^{bd} u_k u_k^T restricted to the columns of χ_{x0}
    let term = |k: usize, phase: Complex64, acc: &mut DMatrix<Complex64>| {
        for (c, &j) in cols.iter().enumerate() {
            let f = phase * unit[k][j];
            for i in 0..n {
                acc[(i, c)] += f * (weight[i] * unit[k][i]);
            }
        }
    };
    let groups = clusters(&eig.values, 1e-9);
    let mut proxy = 0.0;
    for r in &groups {
        let mut acc = DMatrix::<Complex64>::zeros(n, cols.len());
        for k in r.clone() {
            term(k, Complex64::new(1.0, 0.0), &mut acc);
        }
        proxy += max_singular_value(acc);
    }
    let samples = t_grid
        .iter()
        .map(|&t| {
            let mut acc = DMatrix::<Complex64>::zeros(n, cols.len());
            for (k, &e) in eig.values.iter().enumerate() {
                term(k, Complex64::from_polar(1.0, -t * e), &mut acc);
            }
            (t, max_singular_value(acc))
        })
        .collect();
    Ok(DynamicalMoment {
        b,
        proxy,
        samples,
        eigenvalues: eig.len(),
        clusters: groups.len(),
        empty: false,
    })
}
