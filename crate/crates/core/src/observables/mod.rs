//! Localization observables measured on finite-volume eigenpairs.

mod center;
mod dichotomy;
mod dynamics;
mod fermi;
mod ids;
mod w;

pub use center::{localization_center, DecayFit, LocalizationCenter, MASS_FLOOR};
pub use dichotomy::{dichotomy_check, energy_window, DichotomyParams, DichotomyRecord, DichotomyResult};
pub use dynamics::{dynamical_moment, DynamicalMoment};
pub use fermi::{fermi_kernel_decay, FermiRow, FermiTable};
pub use ids::{ids_estimate, log_holder_modulus, HolderFit, IdsCurve};
pub use w::{
    annulus_cap, chain_bound, default_nu, point_cap, w_annulus, w_point, w_profile, WEntry, WProfile,
};

use std::collections::BTreeMap;

use crate::discretization::Grid;
use crate::model::{Site, GEOM_EPS};

/// `⟨r⟩ = (1 + r²)^{1/2}`.
pub fn bracket(r: f64) -> f64 {
    (1.0 + r * r).sqrt()
}

pub(crate) fn sup_distance(grid: &Grid, y: &[f64], x: &[f64]) -> f64 {
    grid.displacement(y, x).iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

pub(crate) fn euclidean_distance(grid: &Grid, y: &[f64], x: &[f64]) -> f64 {
    grid.displacement(y, x).iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Nodes of each open unit box `Λ_1(y)`, keyed by the integer point `y`.
/// Nodes on half-integer faces belong to no box.
pub(crate) fn unit_cells(grid: &Grid) -> BTreeMap<Site, Vec<usize>> {
    let mut cells: BTreeMap<Site, Vec<usize>> = BTreeMap::new();
    for (i, p) in grid.points().enumerate() {
        let y: Site = p.iter().map(|v| v.round() as i64).collect();
        if p.iter().zip(&y).all(|(v, &k)| (v - k as f64).abs() < 0.5 - GEOM_EPS) {
            cells.entry(y).or_default().push(i);
        }
    }
    cells
}

pub(crate) fn site_point(y: &[i64]) -> Vec<f64> {
    y.iter().map(|&k| k as f64).collect()
}

/// Groups sorted eigenvalues into clusters of numerically equal values.
pub(crate) fn clusters(values: &[f64], rel_tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len()
            || values[k] - values[k - 1] > rel_tol * values[k - 1].abs().max(1.0)
        {
            if k > start {
                out.push(start..k);
            }
            start = k;
        }
    }
    out
}
