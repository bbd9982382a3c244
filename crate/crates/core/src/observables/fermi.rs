use nalgebra::DMatrix;
use serde::Serialize;

use super::center::decay_fit;
use super::{site_point, sup_distance, unit_cells, DecayFit};
use crate::discretization::HamiltonianMatrix;
use crate::error::{Error, Result};
use crate::model::Site;
use crate::spectral::eigs_window;

#[derive(Clone, Debug, Serialize)]
pub struct FermiRow {
    pub target: Site,
    pub distance: f64,
    /// `‖χ_y P^{(E)} χ_{x0}‖_1`.
    pub trace_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FermiTable {
    pub energy: f64,
    pub x0: Site,
    pub theta: f64,
    /// `rank P^{(E)}`.
    pub rank: usize,
    pub rows: Vec<FermiRow>,
    /// Fit of `log‖χ_y P χ_{x0}‖_1` against `‖x0−y‖^ϑ`.
    pub fit: DecayFit,
}

fn nuclear_norm(m: DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().sum()
}

/// Trace norms of the unit-box blocks `χ_y P^{(E)} χ_{x0}` of the Fermi projection
/// `P^{(E)} = χ_{(−∞,E]}(H)`.
pub fn fermi_kernel_decay(h: &HamiltonianMatrix, energy: f64, x0: &[i64], theta: f64) -> Result<FermiTable> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("ϑ = {theta} outside (0, 1]")));
    }
    let grid = &h.grid;
    let cells = unit_cells(grid);
    let source = cells
        .get(x0)
        .ok_or_else(|| Error::Geometry(format!("Λ_1({x0:?}) holds no grid node")))?;
    let floor = h.matrix.gershgorin_lower() - 1.0;
    let eig = if energy < floor {
        None
    } else {
        Some(eigs_window(h, (floor, energy), usize::MAX)?)
    };
    let s = h.weight().sqrt();
    let unit: Vec<Vec<f64>> = eig
        .iter()
        .flat_map(|e| e.vectors.iter())
        .map(|v| v.iter().map(|x| x * s).collect())
        .collect();
    let xp = site_point(x0);
    let rows: Vec<FermiRow> = cells
        .iter()
        .map(|(y, target)| {
            let mut block = DMatrix::<f64>::zeros(target.len(), source.len());
            for u in &unit {
                for (c, &j) in source.iter().enumerate() {
                    for (r, &i) in target.iter().enumerate() {
                        block[(r, c)] += u[i] * u[j];
                    }
                }
            }
            FermiRow {
                target: y.clone(),
                distance: sup_distance(grid, &site_point(y), &xp),
                trace_norm: nuclear_norm(block),
            }
        })
        .collect();
    let fit = decay_fit(rows.iter().filter(|r| r.distance > 0.0).map(|r| (r.distance.powf(theta), r.trace_norm)));
    Ok(FermiTable {
        energy,
        x0: x0.to_vec(),
        theta,
        rank: unit.len(),
        rows,
        fit,
    })
}
