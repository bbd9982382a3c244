use serde::{Deserialize, Serialize};

use super::{clusters, w_annulus, w_point};
use crate::discretization::{assemble_hamiltonian, ModelSpec};
use crate::error::{Error, Result};
use crate::model::{BoxSpec, Configuration};
use crate::spectral::eigs_window;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DichotomyParams {
    pub big_m: f64,
    pub theta: f64,
    pub nu: f64,
    #[serde(default = "default_outer_factor")]
    pub outer_factor: f64,
    #[serde(default = "default_max_energies")]
    pub max_energies: usize,
}

fn default_outer_factor() -> f64 {
    3.0
}

fn default_max_energies() -> usize {
    64
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyRecord {
    pub energy: f64,
    pub multiplicity: usize,
    pub residual: f64,
    pub w_point: f64,
    pub w_annulus: f64,
    /// `W_{x0} ≤ e^{−ML^ϑ}`.
    pub point_branch: bool,
    /// `W_{x0,L} ≤ e^{−ML}`.
    pub annulus_branch: bool,
    pub product: f64,
    /// `e^{−½ML^ϑ}`.
    pub product_bound: f64,
    pub product_pass: bool,
    /// Product bound implied by whichever branch holds and the a priori caps.
    pub implied_bound: Option<f64>,
    pub implied_holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyResult {
    pub x0: Vec<f64>,
    pub scale: f64,
    pub outer_factor: f64,
    pub nu: f64,
    /// `𝕀_L`, or `None` when the margin swallows the interval.
    pub window: Option<(f64, f64)>,
    pub no_energy: bool,
    pub truncated: bool,
    pub records: Vec<DichotomyRecord>,
}

/// `𝕀_L = {E : dist(E, ℝ∖𝕀) > e^{−ML^ϑ}}` for `𝕀 = (a, b)`.
pub fn energy_window(interval: (f64, f64), big_m: f64, theta: f64, l: f64) -> Option<(f64, f64)> {
    let margin = (-big_m * l.powf(theta)).exp();
    let (lo, hi) = (interval.0 + margin, interval.1 - margin);
    (lo < hi).then_some((lo, hi))
}

/// Tests the two-branch alternative at `x0` for every eigenvalue of the
/// outer-box operator lying in `𝕀_L`.
pub fn dichotomy_check(
    model: &ModelSpec,
    config: &Configuration,
    x0: &[f64],
    l: f64,
    interval: (f64, f64),
    params: &DichotomyParams,
) -> Result<DichotomyResult> {
    let l_plus = 1001.0 * l / 500.0;
    if params.outer_factor * l < l_plus {
        return Err(Error::Geometry(format!(
            "outer box of side {} does not contain Λ_{{{l_plus}}}(x0)",
            params.outer_factor * l
        )));
    }
    let outer = BoxSpec::new(x0.to_vec(), params.outer_factor * l)?;
    let mut result = DichotomyResult {
        x0: x0.to_vec(),
        scale: l,
        outer_factor: params.outer_factor,
        nu: params.nu,
        window: energy_window(interval, params.big_m, params.theta, l),
        no_energy: true,
        truncated: false,
        records: vec![],
    };
    let Some(window) = result.window else {
        return Ok(result);
    };
    let h = assemble_hamiltonian(&outer, model, config)?;
    let eig = eigs_window(&h, window, params.max_energies)?;
    result.truncated = eig.truncated;
    let lt = l.powf(params.theta);
    let e_point = (-params.big_m * lt).exp();
    let e_annulus = (-params.big_m * l).exp();
    let product_bound = (-0.5 * params.big_m * lt).exp();
    let c = 2f64.powf(params.nu / 2.0);
    for r in clusters(&eig.values, 1e-9) {
        let span: Vec<&[f64]> = eig.vectors[r.clone()].iter().map(Vec::as_slice).collect();
        let wp = w_point(&h.grid, &span, x0, params.nu)?;
        let wa = w_annulus(&h.grid, &span, x0, l, params.nu)?;
        let point_branch = wp <= e_point;
        let annulus_branch = wa <= e_annulus;
        let product = wp * wa;
        let from_annulus = annulus_branch.then_some(c * e_annulus);
        let from_point = point_branch.then_some(c * l.powf(params.nu) * e_point);
        let implied_bound = match (from_annulus, from_point) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        result.records.push(DichotomyRecord {
            energy: eig.values[r.start..r.end].iter().sum::<f64>() / r.len() as f64,
            multiplicity: r.len(),
            residual: eig.residuals[r.clone()].iter().fold(0.0f64, |a, &b| a.max(b)),
            w_point: wp,
            w_annulus: wa,
            point_branch,
            annulus_branch,
            product,
            product_bound,
            product_pass: product <= product_bound,
            implied_bound,
            implied_holds: implied_bound.is_none_or(|b| product <= b * (1.0 + 1e-10)),
        });
    }
    result.no_energy = result.records.is_empty();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::GridSpec;
    use crate::model::SiteProfile;

    fn params(m: f64) -> DichotomyParams {
        DichotomyParams {
            big_m: m,
            theta: 0.9,
            nu: 1.0,
            outer_factor: 3.0,
            max_energies: 8,
        }
    }

    #[test]
    fn window_and_geometry() {
        let w = energy_window((0.0, 1.0), 1.0, 1.0, 10.0).unwrap();
        assert!((w.0 - (-10f64).exp()).abs() < 1e-18);
        assert!(energy_window((0.0, 1e-6), 0.1, 1.0, 10.0).is_none());
        let model = ModelSpec::new(GridSpec::dirichlet(4), SiteProfile::indicator(1.0, 1.0));
        let b = BoxSpec::centered(1, 20.0);
        let config = Configuration::constant(&b, 0.0);
        let mut p = params(0.1);
        p.outer_factor = 2.0;
        assert!(matches!(
            dichotomy_check(&model, &config, &[0.0], 10.0, (0.0, 1.0), &p),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn energy_below_spectrum_is_vacuous() {
        let model = ModelSpec::new(GridSpec::dirichlet(4), SiteProfile::indicator(1.0, 1.0));
        let b = BoxSpec::centered(1, 30.0);
        let config = Configuration::constant(&b, 0.0);
        let r = dichotomy_check(&model, &config, &[0.0], 10.0, (-1.5, -0.5), &params(0.1)).unwrap();
        assert!(r.no_energy && r.records.is_empty());
    }
}
