use serde::Serialize;

use crate::discretization::{assemble_hamiltonian, ModelSpec};
use crate::error::{Error, Result};
use crate::model::{BoxSpec, Configuration};
use crate::spectral::eigs_window;

#[derive(Clone, Debug, Serialize)]
pub struct ReducedSpectrum {
    /// `σ^{(I)}(H_{ω,Λ_L(x0)})`.
    pub full: Vec<f64>,
    pub reduced: Vec<f64>,
    /// `L_n = L^{ρ^n}`, `n = 1..=n1`.
    pub scales: Vec<f64>,
    /// `σ^{(I)}` of each nested box.
    pub nested: Vec<Vec<f64>>,
    pub thresholds: Vec<f64>,
}

fn spectrum_in(model: &ModelSpec, config: &Configuration, b: &BoxSpec, (a, c): (f64, f64)) -> Result<Vec<f64>> {
    let h = assemble_hamiltonian(b, model, config)?;
    let eig = eigs_window(&h, (a, c), usize::MAX)?;
    Ok(eig.values.into_iter().filter(|&e| a < e && e < c).collect())
}

/// Eigenvalues of `H_{ω,Λ_L(x0)}` in the open interval `I` lying within
/// `factor·e^{−m̂ L_n}` of `σ^{(I)}(H_{ω,Λ_{L_n}(x0)})` for every `n = 1..=n1`.
#[allow(clippy::too_many_arguments)]
pub fn reduced_spectrum(
    model: &ModelSpec,
    config: &Configuration,
    x0: &[f64],
    l: f64,
    interval: (f64, f64),
    rho: f64,
    n1: u32,
    hat_m: f64,
    factor: f64,
) -> Result<ReducedSpectrum> {
    let outer = BoxSpec::new(x0.to_vec(), l)?;
    let cfg = config.restrict(&outer);
    let full = spectrum_in(model, &cfg, &outer, interval)?;
    let min_side = 3.0 * model.grid.mesh();
    let mut scales = vec![];
    let mut nested = vec![];
    let mut thresholds = vec![];
    for n in 1..=n1 {
        let ln = l.powf(rho.powi(n as i32));
        if ln < min_side {
            return Err(Error::Scale(format!("nested box side {ln} is below three grid cells")));
        }
        let b = BoxSpec::new(x0.to_vec(), ln)?;
        nested.push(spectrum_in(model, &cfg.restrict(&b), &b, interval)?);
        thresholds.push(factor * (-hat_m * ln).exp());
        scales.push(ln);
    }
    let reduced = full
        .iter()
        .copied()
        .filter(|&e| {
            nested.iter().zip(&thresholds).all(|(sp, &t)| sp.iter().any(|&f| (e - f).abs() <= t))
        })
        .collect();
    Ok(ReducedSpectrum {
        full,
        reduced,
        scales,
        nested,
        thresholds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::GridSpec;
    use crate::model::{sample_configuration, SingleSiteDistribution, SiteProfile};

    fn setup() -> (ModelSpec, Configuration) {
        let model = ModelSpec::new(GridSpec::dirichlet(2), SiteProfile::indicator(1.0, 1.0));
        let b = BoxSpec::centered(1, 30.0);
        let dist = SingleSiteDistribution::Bernoulli { q: 0.5 };
        (model, sample_configuration(&dist, &b, None, 3, 0).unwrap())
    }

    #[test]
    fn trivial_cases() {
        let (model, cfg) = setup();
        let r = reduced_spectrum(&model, &cfg, &[0.0], 30.0, (0.0, 1.5), 0.8, 0, 0.1, 2.0).unwrap();
        assert_eq!(r.reduced, r.full);
        assert!(!r.full.is_empty());
        // threshold 2 exceeds the window width, nested spectra nonempty
        let r = reduced_spectrum(&model, &cfg, &[0.0], 30.0, (0.0, 1.5), 0.9, 1, 0.0, 2.0).unwrap();
        if !r.nested[0].is_empty() {
            assert_eq!(r.reduced, r.full);
        }
        assert!(reduced_spectrum(&model, &cfg, &[0.0], 30.0, (0.0, 1.5), 0.1, 3, 0.1, 2.0).is_err());
    }

    #[test]
    fn antitone_in_n1() {
        let (model, cfg) = setup();
        let mut prev: Option<Vec<f64>> = None;
        for n1 in 0..4 {
            let r = reduced_spectrum(&model, &cfg, &[0.0], 30.0, (0.0, 2.0), 0.9, n1, 0.05, 2.0).unwrap();
            if let Some(p) = &prev {
                assert!(r.reduced.iter().all(|e| p.contains(e)));
            }
            prev = Some(r.reduced);
        }
    }
}
