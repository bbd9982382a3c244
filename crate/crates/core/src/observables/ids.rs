use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::{assemble_hamiltonian, ModelSpec};
use crate::error::{Error, Result};
use crate::model::{sample_configuration, BoxSpec, SingleSiteDistribution};
use crate::spectral::count_eigenvalues_below;
use crate::stats::{isotonic_nondecreasing, least_squares, mean_and_se};

#[derive(Clone, Debug, Serialize)]
pub struct IdsCurve {
    pub energies: Vec<f64>,
    /// `N̂(E)`, after the isotonic pass when it was needed.
    pub values: Vec<f64>,
    pub se: Vec<f64>,
    pub n_samples: usize,
    /// `|Λ_L|`.
    pub volume: f64,
    pub isotonic_applied: bool,
}

impl IdsCurve {
    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }
}

/// `N̂(E)`: mean eigenvalue count `#{λ ≤ E}` of `H_{ω,Λ_L}` divided by `L^d`.
pub fn ids_estimate(
    dist: &SingleSiteDistribution,
    model: &ModelSpec,
    d: usize,
    l: f64,
    energies: &[f64],
    n_samples: usize,
    root_seed: u64,
) -> Result<IdsCurve> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    if energies.iter().any(|e| !e.is_finite()) || energies.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("energy grid must be finite and sorted".into()));
    }
    let b = BoxSpec::centered(d, l);
    let volume = b.volume();
    let counts = (0..n_samples as u64)
        .into_par_iter()
        .map(|trial| {
            let config = sample_configuration(dist, &b, None, root_seed, trial)?;
            let h = assemble_hamiltonian(&b, model, &config)?;
            Ok(energies
                .iter()
                .map(|&e| count_eigenvalues_below(&h, e + 1e-12 * e.abs().max(1.0)) as f64 / volume)
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut raw = Vec::with_capacity(energies.len());
    let mut se = Vec::with_capacity(energies.len());
    for k in 0..energies.len() {
        let col: Vec<f64> = counts.iter().map(|c| c[k]).collect();
        let (m, s) = mean_and_se(&col);
        raw.push(m);
        se.push(s);
    }
    let (values, isotonic_applied) = isotonic_nondecreasing(&raw);
    Ok(IdsCurve {
        energies: energies.to_vec(),
        values,
        se,
        n_samples,
        volume,
        isotonic_applied,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderFit {
    /// Slope of `log ΔN̂` against `log|log ΔE|`, an estimate of `−p̂d`.
    pub slope: Option<f64>,
    /// `exp(intercept)`.
    pub constant: Option<f64>,
    pub p_hat: Option<f64>,
    pub p_tilde: f64,
    pub pairs: usize,
}

/// Fits `N̂(E₂) − N̂(E₁) ≈ C·|log|E₂ − E₁||^{slope}` over grid pairs with
/// `0 < E₂ − E₁ ≤ 1/2` and positive increment.
pub fn log_holder_modulus(curve: &IdsCurve, p_tilde: f64, d: usize) -> HolderFit {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let e = &curve.energies;
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            let de = e[j] - e[i];
            let dn = curve.values[j] - curve.values[i];
            if de > 0.0 && de <= 0.5 && dn > 0.0 {
                xs.push(de.ln().abs().ln());
                ys.push(dn.ln());
            }
        }
    }
    let fit = least_squares(&xs, &ys);
    HolderFit {
        slope: fit.map(|f| f.0),
        constant: fit.map(|f| f.1.exp()),
        p_hat: fit.map(|f| -f.0 / d as f64),
        p_tilde,
        pairs: xs.len(),
    }
}
