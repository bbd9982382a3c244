use nalgebra::DMatrix;
use serde::Serialize;

use super::{bracket, sup_distance};
use crate::discretization::{Grid, Region};
use crate::error::{Error, Result};
use crate::linalg::sym_eigenvalues;

/// Smallest half-integer above `d/2`.
pub fn default_nu(d: usize) -> f64 {
    (d as f64 + 1.0) / 2.0
}

/// A priori bound `(5/4)^{ν/2}` on `W_x`.
pub fn point_cap(nu: f64) -> f64 {
    1.25f64.powf(nu / 2.0)
}

/// A priori bound `2^{ν/2} L^ν` on `W_{x,L}`.
pub fn annulus_cap(l: f64, nu: f64) -> f64 {
    2f64.powf(nu / 2.0) * l.powf(nu)
}

/// `2^{ν/2} ⟨y−x⟩^ν W_{x,L}`, the bound on `W_y` for `y` in the closed annulus `Λ̄_{2L,L}(x)`.
pub fn chain_bound(grid: &Grid, y: &[f64], x: &[f64], nu: f64, w_xl: f64) -> f64 {
    2f64.powf(nu / 2.0) * bracket(sup_distance(grid, y, x)).powf(nu) * w_xl
}

/// `sup_{ψ ∈ span} ‖1_mask ψ‖ / ‖T_{ν,x}^{-1} ψ‖`.
fn span_ratio(grid: &Grid, span: &[&[f64]], mask: &[bool], x: &[f64], nu: f64) -> f64 {
    let k = span.len();
    let tinv2: Vec<f64> = grid
        .points()
        .map(|p| bracket(sup_distance(grid, &p, x)).powf(-2.0 * nu))
        .collect();
    let mut a = DMatrix::<f64>::zeros(k, k);
    let mut b = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let (mut sa, mut sb) = (0.0, 0.0);
            for n in 0..grid.len() {
                let v = span[i][n] * span[j][n];
                if mask[n] {
                    sa += v;
                }
                sb += v * tinv2[n];
            }
            a[(i, j)] = sa;
            a[(j, i)] = sa;
            b[(i, j)] = sb;
            b[(j, i)] = sb;
        }
    }
    assert!(b.diagonal().iter().all(|&v| v > 0.0), "T^{{-1}}ψ vanished");
    if k == 1 {
        return (a[(0, 0)] / b[(0, 0)]).sqrt();
    }
    let l = b.cholesky().expect("eigenvectors are linearly independent").l();
    let linv = l.clone().try_inverse().expect("triangular factor is invertible");
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    sym_eigenvalues(c).into_iter().fold(0.0f64, f64::max).max(0.0).sqrt()
}

fn check_span(grid: &Grid, span: &[&[f64]], nu: f64) -> Result<()> {
    if span.is_empty() {
        return Err(Error::InvalidArgument("empty eigenspace".into()));
    }
    if span.iter().any(|v| v.len() != grid.len()) {
        return Err(Error::InvalidArgument("vector length does not match the grid".into()));
    }
    if nu <= grid.dim() as f64 / 2.0 {
        return Err(Error::InvalidArgument(format!("ν = {nu} must exceed d/2")));
    }
    Ok(())
}

/// `W_x` over the span of `span` (a single eigenvector or a degenerate eigenspace).
pub fn w_point(grid: &Grid, span: &[&[f64]], x: &[f64], nu: f64) -> Result<f64> {
    check_span(grid, span, nu)?;
    Ok(span_ratio(grid, span, &grid.mask(&Region::unit_box(x)), x, nu))
}

/// `W_{x,L}` with `χ_{x,L}` the indicator of `Λ_{2L+1,L−1}(x)`.
pub fn w_annulus(grid: &Grid, span: &[&[f64]], x: &[f64], l: f64, nu: f64) -> Result<f64> {
    check_span(grid, span, nu)?;
    if l < 2.0 {
        return Err(Error::Scale(format!("annulus scale {l} below 2")));
    }
    Ok(span_ratio(grid, span, &grid.mask(&Region::w_annulus(x, l)), x, nu))
}

#[derive(Clone, Debug, Serialize)]
pub struct WEntry {
    pub center: Vec<f64>,
    /// `None` for `W_x`, `Some(L)` for `W_{x,L}`.
    pub scale: Option<f64>,
    pub value: f64,
    pub cap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WProfile {
    pub energy: f64,
    pub nu: f64,
    pub multiplicity: usize,
    pub point: Vec<WEntry>,
    pub annulus: Vec<WEntry>,
}

impl WProfile {
    pub fn caps_hold(&self, rel_tol: f64) -> bool {
        self.point
            .iter()
            .chain(&self.annulus)
            .all(|e| e.value >= 0.0 && e.value <= e.cap * (1.0 + rel_tol))
    }
}

pub fn w_profile(
    grid: &Grid,
    energy: f64,
    span: &[&[f64]],
    probes: &[Vec<f64>],
    annuli: &[(Vec<f64>, f64)],
    nu: f64,
) -> Result<WProfile> {
    let point = probes
        .iter()
        .map(|x| {
            Ok(WEntry {
                center: x.clone(),
                scale: None,
                value: w_point(grid, span, x, nu)?,
                cap: point_cap(nu),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let annulus = annuli
        .iter()
        .map(|(x, l)| {
            Ok(WEntry {
                center: x.clone(),
                scale: Some(*l),
                value: w_annulus(grid, span, x, *l, nu)?,
                cap: annulus_cap(*l, nu),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WProfile {
        energy,
        nu,
        multiplicity: span.len(),
        point,
        annulus,
    })
}
