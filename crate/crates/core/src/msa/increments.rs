use serde::Serialize;

use crate::discretization::{assemble_hamiltonian, Grid, ModelSpec, Region};
use crate::error::{Error, Result};
use crate::linalg::sym_eigen;
use crate::model::{BoxSpec, Configuration, Site};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IncrementRecord {
    pub site: Site,
    pub index: usize,
    pub e0: f64,
    pub e1: f64,
    pub dt: f64,
    pub slope: f64,
    /// `u₋‖1_{Λ_{δ₋}(ζ)}ψ_n‖²`.
    pub lower: f64,
    /// `u₊‖1_{Λ_{δ₊}(ζ)}ψ_n‖²`.
    pub upper: f64,
    /// Distance from `E_n` to its nearest neighbour in the spectrum.
    pub gap: f64,
}

impl IncrementRecord {
    pub fn within(&self, tol: f64) -> bool {
        self.lower - tol <= self.slope && self.slope <= self.upper + tol
    }
}

/// Forward difference of the `index`-th eigenvalue (0-based) under
/// `t_ζ → t_ζ + dt` at a single site, with the mass sandwich at `t_ζ`.
pub fn eigenvalue_increment(
    model: &ModelSpec,
    config: &Configuration,
    b: &BoxSpec,
    site: &[i64],
    index: usize,
    dt: f64,
) -> Result<IncrementRecord> {
    let free = config.with_free_sites(&[site.to_vec()])?;
    let t0 = free
        .free_sites
        .as_ref()
        .and_then(|f| f.sites.iter().position(|s| s == site).map(|k| f.t[k]))
        .ok_or_else(|| Error::InvalidArgument(format!("{site:?} is not a site")))?;
    let t_all = free.free_sites.as_ref().map(|f| f.t.clone()).unwrap_or_default();
    let pos = free.free_sites.as_ref().unwrap().sites.iter().position(|s| s == site).unwrap();
    if t0 + dt > 1.0 {
        return Err(Error::InvalidArgument(format!("t + dt = {} exceeds 1", t0 + dt)));
    }
    let h0 = assemble_hamiltonian(b, model, &free)?;
    let mut t1 = t_all.clone();
    t1[pos] += dt;
    let h1 = assemble_hamiltonian(b, model, &free.with_free_values(&t1)?)?;
    let (v0, vecs) = sym_eigen(h0.matrix.to_dense());
    let (v1, _) = sym_eigen(h1.matrix.to_dense());
    if index >= v0.len() {
        return Err(Error::InvalidArgument(format!("index {index} exceeds the dimension {}", v0.len())));
    }
    let grid = Grid::new(b, model.grid)?;
    let zeta: Vec<f64> = site.iter().map(|&k| k as f64).collect();
    let mass = |delta: f64| {
        let mask = grid.mask(&Region::Box(BoxSpec {
            center: zeta.clone(),
            side: delta,
        }));
        // unit ℓ² eigenvectors: the weighted mass is the plain sum
        (0..vecs.nrows()).filter(|&i| mask[i]).map(|i| vecs[(i, index)].powi(2)).sum::<f64>()
    };
    let p = &model.profile;
    let gap = [index.checked_sub(1), Some(index + 1)]
        .into_iter()
        .flatten()
        .filter_map(|k| v0.get(k))
        .map(|e| (e - v0[index]).abs())
        .fold(f64::INFINITY, f64::min);
    Ok(IncrementRecord {
        site: site.to_vec(),
        index,
        e0: v0[index],
        e1: v1[index],
        dt,
        slope: (v1[index] - v0[index]) / dt,
        lower: p.u_minus * mass(p.delta_minus),
        upper: p.u_plus * mass(p.delta_plus),
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::GridSpec;
    use crate::model::SiteProfile;

    #[test]
    fn sandwich_on_a_small_box() {
        let model = ModelSpec::new(GridSpec::dirichlet(4), SiteProfile::indicator(1.0, 1.0));
        let b = BoxSpec::centered(1, 8.0);
        let cfg = Configuration::constant(&b, 0.3);
        for k in 0..3 {
            let r = eigenvalue_increment(&model, &cfg, &b, &[1], k, 1e-4).unwrap();
            assert!(r.slope >= 0.0);
            assert!(r.within(1e-3), "{r:?}");
        }
        assert!(eigenvalue_increment(&model, &cfg, &b, &[9], 0, 1e-4).is_err());
    }
}
