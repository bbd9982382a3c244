use nalgebra::DMatrix;
use serde::Serialize;

use crate::discretization::{from_potential, Grid, GridSpec, PeriodicPotential};
use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, sym_eigenvalues};
use crate::model::BoxSpec;

#[derive(Clone, Debug, Serialize)]
pub struct GapResult {
    pub window: (f64, f64),
    pub delta: f64,
    pub period: u32,
    pub scale: f64,
    /// Bottom of the periodic spectrum subtracted from `H_L`.
    pub shift: f64,
    /// `dim Ran χ_I(H_L)`.
    pub rank: usize,
    /// `λ_min` of `χ_I W_δ χ_I` on `Ran χ_I`; `None` for an empty window.
    pub gap: Option<f64>,
    pub delta_in_range: bool,
    /// `γ` at the supplied `m̂`.
    pub gamma: Option<f64>,
    /// `41^d γ² (1 + K₀)^{−1}`.
    pub theorem_bound: Option<f64>,
}

/// `W_δ(x) = Σ_{m ∈ qZ^d} 1_{B(0,δ/2)}(x − m)` at every node.
pub fn periodic_ball_weight(grid: &Grid, q: f64, delta: f64) -> Vec<f64> {
    let reach = (delta / (2.0 * q)).ceil() as i64 + 1;
    let r = delta / 2.0 - crate::model::GEOM_EPS;
    grid.points()
        .map(|p| {
            let base: Vec<i64> = p.iter().map(|x| (x / q).round() as i64).collect();
            let d = p.len();
            let span = (2 * reach + 1) as usize;
            let mut count = 0.0;
            for code in 0..span.pow(d as u32) {
                let mut c = code;
                let mut r2 = 0.0;
                for (a, &b) in base.iter().enumerate() {
                    let m = (b + (c % span) as i64 - reach) as f64 * q;
                    c /= span;
                    r2 += (p[a] - m).powi(2);
                }
                if r2.sqrt() < r {
                    count += 1.0;
                }
            }
            count
        })
        .collect()
}

/// Smallest eigenvalue of the compression of `W_δ` to the spectral subspace
/// `Ran χ_I(H_L)` of the torus operator `−Δ + V_per − inf σ`.
#[allow(clippy::too_many_arguments)]
pub fn periodic_projection_gap(
    v_per: &PeriodicPotential,
    d: usize,
    l: f64,
    points_per_unit: u32,
    window: (f64, f64),
    delta: f64,
    m_hat: Option<f64>,
) -> Result<GapResult> {
    let q = v_per.period();
    let qf = q as f64;
    let ratio = l / qf;
    if !(ratio >= 1.0 && (ratio - ratio.round()).abs() < 1e-9) {
        return Err(Error::Grid(format!("L = {l} is not a multiple of the period {q}")));
    }
    if !(delta > 0.0) || window.0 > window.1 {
        return Err(Error::InvalidArgument("need δ > 0 and a closed window".into()));
    }
    let region = BoxSpec::centered(d, l);
    let grid = Grid::new(&region, GridSpec::periodic(points_per_unit))?;
    let cell = Grid::new(&BoxSpec::new(vec![qf / 2.0; d], qf)?, GridSpec::periodic(points_per_unit))?;
    let cell_pot: Vec<f64> = cell.points().map(|p| v_per.value(&p)).collect();
    let shift = sym_eigenvalues(from_potential(cell, cell_pot).matrix.to_dense())[0];
    let pot: Vec<f64> = grid.points().map(|p| v_per.value(&p) - shift).collect();
    let wdelta = periodic_ball_weight(&grid, qf, delta);
    let h = from_potential(grid, pot);
    let (vals, vecs) = sym_eigen(h.matrix.to_dense());
    let slack = 1e-10 * window.1.abs().max(1.0);
    let cols: Vec<usize> = (0..vals.len())
        .filter(|&k| vals[k] >= window.0 - slack && vals[k] <= window.1 + slack)
        .collect();
    let (gamma, theorem_bound) = match m_hat {
        Some(m) => {
            let k0 = window.1 + v_per.sup_norm();
            let g2 = 0.5 * 41f64.powi(-(d as i32)) * qf.powf(-m * (1.0 + k0.powf(2.0 / 3.0)) * qf.powf(4.0 / 3.0));
            (Some(g2.sqrt()), Some(41f64.powi(d as i32) * g2 / (1.0 + k0)))
        }
        None => (None, None),
    };
    let gap = if cols.is_empty() {
        None
    } else {
        let u = DMatrix::from_fn(vals.len(), cols.len(), |i, j| vecs[(i, cols[j])]);
        let wu = DMatrix::from_fn(vals.len(), cols.len(), |i, j| wdelta[i] * u[(i, j)]);
        let c = u.transpose() * wu;
        let c = (&c + c.transpose()) * 0.5;
        sym_eigenvalues(c).into_iter().reduce(f64::min)
    };
    Ok(GapResult {
        window,
        delta,
        period: q,
        scale: l,
        shift,
        rank: cols.len(),
        gap,
        delta_in_range: delta <= qf,
        gamma,
        theorem_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_constant_mode_matches_closed_form() {
        let r = periodic_projection_gap(&PeriodicPotential::Zero, 1, 8.0, 8, (0.0, 0.5), 0.5, None).unwrap();
        assert_eq!(r.rank, 1);
        assert!((r.gap.unwrap() - 3.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn empty_window_and_bad_scale() {
        let r = periodic_projection_gap(&PeriodicPotential::Zero, 1, 8.0, 4, (-2.0, -1.0), 0.5, Some(1.0)).unwrap();
        assert!(r.gap.is_none() && r.rank == 0);
        assert!(r.gamma.unwrap() > 0.0);
        let v = PeriodicPotential::Cosine { amplitude: 1.0, period: 2 };
        assert!(periodic_projection_gap(&v, 1, 5.0, 4, (0.0, 1.0), 0.5, None).is_err());
    }

    #[test]
    fn covering_balls_give_unit_floor() {
        let v = PeriodicPotential::Cosine { amplitude: 0.5, period: 1 };
        let r = periodic_projection_gap(&v, 1, 6.0, 4, (0.0, 3.0), 1.2, None).unwrap();
        assert!(r.gap.unwrap() >= 1.0 - 1e-12);
        assert!(!r.delta_in_range);
    }
}
