use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::{assemble_hamiltonian, ModelSpec};
use crate::error::{Error, Result};
use crate::model::{sample_configuration, BoxSpec, SingleSiteDistribution};
use crate::spectral::lowest_eigenvalue;
use crate::stats::wilson_interval;

/// Initial-scale energy and rate `E_L`, `m_L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InitialScale {
    pub p: f64,
    pub d: usize,
    pub eps: f64,
    pub delta_plus: f64,
    /// `q̃ = max{q, 2}`.
    pub q_tilde: f64,
}

impl InitialScale {
    pub fn new(p: f64, d: usize, eps: f64, delta_plus: f64, q: f64) -> Result<Self> {
        if !(p > 0.0) || !(eps > 0.0 && eps <= 1.0) || d == 0 {
            return Err(Error::InvalidArgument(format!("need p > 0, 0 < ε ≤ 1, d ≥ 1 (p={p}, ε={eps}, d={d})")));
        }
        Ok(Self {
            p,
            d,
            eps,
            delta_plus,
            q_tilde: q.max(2.0),
        })
    }

    /// `E_L = ½((p+1)d log(L+δ₊+q̃))^{−(2+ε)/d}`.
    pub fn energy(&self, l: f64) -> Result<f64> {
        if !(l > 0.0) {
            return Err(Error::Scale(format!("scale must be positive, got {l}")));
        }
        let base = (self.p + 1.0) * self.d as f64 * (l + self.delta_plus + self.q_tilde).ln();
        Ok(0.5 * base.powf(-(2.0 + self.eps) / self.d as f64))
    }

    /// `m_L = ½√E_L`.
    pub fn rate(&self, l: f64) -> Result<f64> {
        Ok(0.5 * self.energy(l)?.sqrt())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InitialScaleResult {
    pub scale: f64,
    pub energy: f64,
    pub threshold: f64,
    pub n_samples: usize,
    pub successes: usize,
    pub phat: f64,
    pub lo: f64,
    pub hi: f64,
    pub target: f64,
    pub pass: bool,
    /// `λ_min` per trial, in trial order.
    pub lambda_min: Vec<f64>,
}

/// Empirical `P{λ_min(H_{ω,Λ_L(0)}) ≥ 2E_L}` against `1 − L^{−pd}`.
pub fn initial_scale_probability(
    dist: &SingleSiteDistribution,
    model: &ModelSpec,
    init: &InitialScale,
    l: f64,
    n_samples: usize,
    root_seed: u64,
) -> Result<InitialScaleResult> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let e = init.energy(l)?;
    let b = BoxSpec::centered(init.d, l);
    let lambda_min = (0..n_samples as u64)
        .into_par_iter()
        .map(|trial| {
            let config = sample_configuration(dist, &b, None, root_seed, trial)?;
            let h = assemble_hamiltonian(&b, model, &config)?;
            lowest_eigenvalue(&h)
        })
        .collect::<Result<Vec<f64>>>()?;
    let threshold = 2.0 * e;
    let successes = lambda_min.iter().filter(|&&v| v >= threshold).count();
    let (lo, hi) = wilson_interval(successes, n_samples, 1.96);
    let phat = successes as f64 / n_samples as f64;
    let target = 1.0 - l.powf(-init.p * init.d as f64);
    Ok(InitialScaleResult {
        scale: l,
        energy: e,
        threshold,
        n_samples,
        successes,
        phat,
        lo,
        hi,
        target,
        pass: phat >= target,
        lambda_min,
    })
}
