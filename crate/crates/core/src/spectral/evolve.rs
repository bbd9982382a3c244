use num_complex::Complex64;

use crate::discretization::HamiltonianMatrix;
use crate::error::{Error, Result};

use super::{eigs_window, EigenWindowResult};

#[derive(Clone, Debug)]
pub struct EvolveResult {
    pub time: f64,
    pub psi: Vec<Complex64>,
    /// `‖ψ0‖² − ‖Pψ0‖²` for the projection onto the computed eigenvectors.
    pub deficit: f64,
}

/// `e^{−itH}ψ0` from the full eigendecomposition.
pub fn evolve(h: &HamiltonianMatrix, psi0: &[f64], t: f64) -> Result<EvolveResult> {
    let lo = h.matrix.gershgorin_lower() - 1.0;
    let hi = h.matrix.inf_norm() + 1.0;
    let eig = eigs_window(h, (lo, hi), h.dim())?;
    evolve_with(&eig, psi0, t)
}

/// `Σ_n e^{−itE_n}⟨ψ_n, ψ0⟩ψ_n` over the eigenpairs in `eig`.
pub fn evolve_with(eig: &EigenWindowResult, psi0: &[f64], t: f64) -> Result<EvolveResult> {
    let w = eig.weight;
    let n = psi0.len();
    if eig.vectors.first().is_some_and(|v| v.len() != n) {
        return Err(Error::InvalidArgument("state dimension mismatch".into()));
    }
    let norm0: f64 = w * psi0.iter().map(|x| x * x).sum::<f64>();
    let mut psi = vec![Complex64::new(0.0, 0.0); n];
    let mut captured = 0.0;
    for (e, v) in eig.values.iter().zip(&eig.vectors) {
        let c = w * v.iter().zip(psi0).map(|(a, b)| a * b).sum::<f64>();
        captured += c * c;
        let phase = Complex64::from_polar(c, -t * e);
        for (p, x) in psi.iter_mut().zip(v) {
            *p += phase * x;
        }
    }
    Ok(EvolveResult {
        time: t,
        psi,
        deficit: (norm0 - captured).max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{assemble_hamiltonian, GridSpec, ModelSpec};
    use crate::model::{sample_configuration, BoxSpec, SingleSiteDistribution, SiteProfile};

    #[test]
    fn two_by_two_rotation() {
        let b = BoxSpec::new(vec![0.25], 1.0).unwrap();
        let m = ModelSpec::new(GridSpec::dirichlet(2), SiteProfile::indicator(1.0, 1.0));
        let h = assemble_hamiltonian(&b, &m, &crate::model::Configuration::constant(&b, 0.0)).unwrap();
        assert_eq!(h.dim(), 2);
        let s2 = 2f64.sqrt();
        let psi0 = [s2, 0.0];
        for t in [0.0, 0.1, 0.77] {
            let r = evolve(&h, &psi0, t).unwrap();
            let g = Complex64::from_polar(1.0, -8.0 * t);
            let a = g * (4.0 * t).cos() * s2;
            let c = g * Complex64::new(0.0, (4.0 * t).sin()) * s2;
            assert!((r.psi[0] - a).norm() < 1e-12 && (r.psi[1] - c).norm() < 1e-12);
        }
    }

    #[test]
    fn unitarity_and_identity_at_zero() {
        let b = BoxSpec::centered(1, 12.0);
        let m = ModelSpec::new(GridSpec::dirichlet(4), SiteProfile::indicator(1.0, 1.0));
        let dist = SingleSiteDistribution::Bernoulli { q: 0.5 };
        let c = sample_configuration(&dist, &b, None, 1, 0).unwrap();
        let h = assemble_hamiltonian(&b, &m, &c).unwrap();
        let n = h.dim();
        let w = h.weight();
        let raw: Vec<f64> = (0..n).map(|i| ((i * i) as f64).cos()).collect();
        let nr = (w * raw.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let psi0: Vec<f64> = raw.iter().map(|x| x / nr).collect();
        let r0 = evolve(&h, &psi0, 0.0).unwrap();
        for (a, b) in r0.psi.iter().zip(&psi0) {
            assert!((a.re - b).abs() < 1e-10 && a.im.abs() < 1e-10);
        }
        let r = evolve(&h, &psi0, 13.0).unwrap();
        let nt: f64 = w * r.psi.iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert!((nt - 1.0).abs() < 1e-10);
        assert!(r.deficit < 1e-10);
    }
}
