use serde::Serialize;

use super::{site_point, sup_distance, unit_cells};
use crate::discretization::Grid;
use crate::error::{Error, Result};
use crate::model::Site;
use crate::stats::least_squares;

/// Unit-box masses at or below this are left out of decay fits.
pub const MASS_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    /// `−slope` of `log‖χ_x ψ‖` against distance.
    pub rate: Option<f64>,
    pub intercept: Option<f64>,
    /// `(distance, log-mass)` pairs entering the fit.
    pub points: Vec<(f64, f64)>,
    pub reliable: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalizationCenter {
    pub center: Site,
    /// `‖χ_center ψ‖ / ‖ψ‖`.
    pub max_mass: f64,
    /// All maximizers, lexicographically sorted; `center` is the first.
    pub ties: Vec<Site>,
    pub fit: DecayFit,
}

/// Fits `log m ≈ intercept − rate·r` over points with `m > MASS_FLOOR`.
pub(crate) fn decay_fit(samples: impl Iterator<Item = (f64, f64)>) -> DecayFit {
    let points: Vec<(f64, f64)> = samples.filter(|p| p.1 > MASS_FLOOR).map(|(r, m)| (r, m.ln())).collect();
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mut distinct = xs.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let spread = ys.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - ys.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let fit = least_squares(&xs, &ys);
    DecayFit {
        rate: fit.map(|f| -f.0),
        intercept: fit.map(|f| f.1),
        reliable: distinct.len() >= 3 && spread > 1e-9 && fit.is_some_and(|f| f.0 < 0.0),
        points,
    }
}

/// Lexicographically least integer point maximizing `‖χ_y ψ‖`, with a decay
/// fit around it.
pub fn localization_center(grid: &Grid, psi: &[f64]) -> Result<LocalizationCenter> {
    if psi.len() != grid.len() {
        return Err(Error::InvalidArgument("vector length does not match the grid".into()));
    }
    let total: f64 = psi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if total == 0.0 {
        return Err(Error::InvalidArgument("zero vector".into()));
    }
    let masses: Vec<(Site, f64)> = unit_cells(grid)
        .into_iter()
        .map(|(y, idx)| {
            let m = idx.iter().map(|&i| psi[i] * psi[i]).sum::<f64>().sqrt() / total;
            (y, m)
        })
        .collect();
    let best = masses.iter().fold(0.0f64, |a, p| a.max(p.1));
    if masses.is_empty() || best == 0.0 {
        return Err(Error::InvalidArgument("vector has no mass in any unit box".into()));
    }
    let ties: Vec<Site> = masses
        .iter()
        .filter(|p| p.1 >= best * (1.0 - 1e-12))
        .map(|p| p.0.clone())
        .collect();
    let center = ties[0].clone();
    let c = site_point(&center);
    let fit = decay_fit(masses.iter().map(|(y, m)| (sup_distance(grid, &site_point(y), &c), *m)));
    Ok(LocalizationCenter {
        center,
        max_mass: best,
        ties,
        fit,
    })
}
