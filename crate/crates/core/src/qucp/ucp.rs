use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::{Boundary, HamiltonianMatrix, Region};
use crate::error::{Error, Result};
use crate::stats::{least_squares, slope_standard_error};

/// `Θ`, given as a region together with its Euclidean diameter.
#[derive(Clone, Debug)]
pub struct ThetaSet {
    pub region: Region,
}

impl ThetaSet {
    pub fn new(region: Region) -> Self {
        Self { region }
    }

    pub fn diameter(&self) -> f64 {
        match &self.region {
            Region::Box(b) => b.side * (b.dim() as f64).sqrt(),
            Region::Annulus(a) => a.outer * (a.center.len() as f64).sqrt(),
            Region::Ball { radius, .. } => 2.0 * radius,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UcpRecord {
    pub probe: Vec<f64>,
    pub delta: f64,
    /// `K = ‖V − E‖_∞`.
    pub k: f64,
    /// `R = dist(x, Θ)`.
    pub r: f64,
    /// `‖ψ_{x,δ}‖²`.
    pub local_mass: f64,
    /// `(29√d)^d ‖ζ‖²`.
    pub penalty: f64,
    pub lhs: f64,
    /// `‖ψ_Θ‖²`.
    pub rhs: f64,
    /// `log(−log(lhs/rhs)) / log R`, when defined.
    pub kappa: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct UcpResult {
    pub energy: f64,
    /// `‖Hψ − Eψ‖`.
    pub zeta_norm: f64,
    pub records: Vec<UcpRecord>,
    /// Slope of `log(−log(lhs/rhs))` against `log R`.
    pub kappa_hat: Option<f64>,
    pub kappa_band: Option<(f64, f64)>,
    pub c_hat: Option<f64>,
    /// Smallest `m` with `lhs/rhs ≥ R^{−m R^{4/3}}` at every defined probe.
    pub m_needed: Option<f64>,
    /// Smallest `‖ψ_{x,δ}‖ / ‖ψ‖` over admissible probes.
    pub min_local_ratio: Option<f64>,
}

impl UcpResult {
    /// Unique continuation floor: every admissible probe carries mass.
    pub fn floor_holds(&self, floor: f64) -> bool {
        self.min_local_ratio.is_none_or(|m| m > floor)
    }
}

fn ball_mask(h: &HamiltonianMatrix, x: &[f64], radius: f64) -> Vec<bool> {
    h.grid
        .points()
        .map(|p| {
            let r2: f64 = h.grid.displacement(&p, x).iter().map(|v| v * v).sum();
            r2.sqrt() < radius - crate::model::GEOM_EPS
        })
        .collect()
}

fn ball_inside(h: &HamiltonianMatrix, x: &[f64], radius: f64) -> bool {
    let b = &h.grid.region;
    match h.grid.spec.boundary {
        Boundary::Periodic => radius <= b.side / 2.0,
        Boundary::Dirichlet => b
            .center
            .iter()
            .zip(x)
            .all(|(c, xi)| (xi - c).abs() + radius <= b.side / 2.0 + 1e-12),
    }
}

/// Euclidean distance from `x` to the closure of `Θ`.
fn distance_to(h: &HamiltonianMatrix, theta: &ThetaSet, x: &[f64]) -> f64 {
    match &theta.region {
        Region::Box(b) => {
            let d = h.grid.displacement(x, &b.center);
            d.iter().map(|v| (v.abs() - b.side / 2.0).max(0.0).powi(2)).sum::<f64>().sqrt()
        }
        Region::Ball { center, radius } => {
            let d = h.grid.displacement(x, center);
            (d.iter().map(|v| v * v).sum::<f64>().sqrt() - radius).max(0.0)
        }
        Region::Annulus(_) => h
            .grid
            .points()
            .filter(|p| theta.region.contains(p))
            .map(|p| h.grid.displacement(&p, x).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min),
    }
}

/// Quantitative unique continuation records for `ψ` (weighted-normalized or not)
/// with `ζ = Hψ − Eψ`, in the penalized form with `(29√d)^d ‖ζ‖²`.
#[allow(clippy::too_many_arguments)]
pub fn qucp_verify(
    h: &HamiltonianMatrix,
    psi: &[f64],
    energy: f64,
    theta: &ThetaSet,
    delta: f64,
    d_bound: f64,
    probes: &[Vec<f64>],
) -> Result<UcpResult> {
    let n = h.dim();
    if psi.len() != n {
        return Err(Error::InvalidArgument("vector length does not match the grid".into()));
    }
    if !(delta > 0.0 && delta / 4.0 <= d_bound) {
        return Err(Error::InvalidArgument(format!("need 0 < δ/4 ≤ D, got δ = {delta}, D = {d_bound}")));
    }
    if theta.diameter() > d_bound + 1e-12 {
        return Err(Error::Geometry(format!("diam Θ = {} exceeds D = {d_bound}", theta.diameter())));
    }
    let w = h.weight();
    let mut hpsi = vec![0.0; n];
    h.matrix.matvec(psi, &mut hpsi);
    let zeta2 = w * hpsi.iter().zip(psi).map(|(a, b)| (a - energy * b).powi(2)).sum::<f64>();
    let total2 = w * psi.iter().map(|v| v * v).sum::<f64>();
    let k = h.potential.iter().fold(0.0f64, |a, v| a.max((v - energy).abs()));
    let dim = h.grid.dim() as f64;
    let penalty = (29.0 * dim.sqrt()).powf(dim) * zeta2;
    let theta_mask = h.grid.mask(&theta.region);
    let rhs = w * psi.iter().zip(&theta_mask).filter(|p| *p.1).map(|p| p.0 * p.0).sum::<f64>();
    if rhs <= 0.0 {
        return Err(Error::InvalidArgument("ψ vanishes on Θ".into()));
    }
    let records: Vec<UcpRecord> = probes
        .par_iter()
        .map(|x| {
            let r = distance_to(h, theta, x);
            let mut rec = UcpRecord {
                probe: x.clone(),
                delta,
                k,
                r,
                local_mass: f64::NAN,
                penalty,
                lhs: f64::NAN,
                rhs,
                kappa: None,
                skipped: None,
            };
            if !ball_inside(h, x, delta / 2.0) {
                rec.skipped = Some("B(x, δ/2) leaves the box".into());
                return rec;
            }
            if r < d_bound {
                rec.skipped = Some(format!("R = {r} below D = {d_bound}"));
                return rec;
            }
            let mask = ball_mask(h, x, delta / 2.0);
            rec.local_mass = w * psi.iter().zip(&mask).filter(|p| *p.1).map(|p| p.0 * p.0).sum::<f64>();
            rec.lhs = (1.0 + k) * rec.local_mass + penalty;
            let ratio = rec.lhs / rhs;
            if ratio > 0.0 && ratio < 1.0 && r > 1.0 {
                let y = (-ratio.ln()).ln();
                rec.kappa = Some(y / r.ln());
            }
            rec
        })
        .collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut m_needed: Option<f64> = None;
    for rec in &records {
        if rec.skipped.is_none() && rec.kappa.is_some() {
            let decay = -(rec.lhs / rec.rhs).ln();
            xs.push(rec.r.ln());
            ys.push(decay.ln());
            let m = decay / (rec.r.powf(4.0 / 3.0) * rec.r.ln());
            m_needed = Some(m_needed.map_or(m, |v| v.max(m)));
        }
    }
    let fit = least_squares(&xs, &ys);
    let se = slope_standard_error(&xs, &ys);
    let min_local_ratio = records
        .iter()
        .filter(|r| r.skipped.is_none())
        .map(|r| (r.local_mass / total2).sqrt())
        .reduce(f64::min);
    Ok(UcpResult {
        energy,
        zeta_norm: zeta2.sqrt(),
        kappa_hat: fit.map(|f| f.0),
        kappa_band: fit.zip(se).map(|(f, s)| (f.0 - 1.96 * s, f.0 + 1.96 * s)),
        c_hat: fit.map(|f| f.1.exp()),
        m_needed,
        min_local_ratio,
        records,
    })
}
