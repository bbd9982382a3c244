use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sym_eigen;
use crate::quadrature::CompositeRule;

/// Smooth base functions with closed-form derivatives of every order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseFunction {
    /// `height · exp(−(u − center)² / (2 width²))`.
    Gaussian { center: f64, width: f64, height: f64 },
}

impl BaseFunction {
    pub fn gaussian(center: f64, width: f64) -> Self {
        Self::Gaussian {
            center,
            width,
            height: 1.0,
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        self.derivative(0, u)
    }

    /// `g^{(r)}(u)`.
    pub fn derivative(&self, r: usize, u: f64) -> f64 {
        match *self {
            Self::Gaussian {
                center,
                width,
                height,
            } => {
                let x = (u - center) / width;
                // d^r/dx^r e^{−x²/2} = (−1)^r He_r(x) e^{−x²/2}
                let (mut h0, mut h1) = (1.0, x);
                let he = if r == 0 {
                    1.0
                } else {
                    for k in 1..r {
                        let h2 = x * h1 - k as f64 * h0;
                        h0 = h1;
                        h1 = h2;
                    }
                    h1
                };
                let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                height * sign * he * (-0.5 * x * x).exp() / width.powi(r as i32)
            }
        }
    }

    /// Interval outside of which every derivative up to moderate order is
    /// below double precision relative to the peak.
    pub fn effective_support(&self) -> (f64, f64) {
        match *self {
            Self::Gaussian { center, width, .. } => (center - 12.0 * width, center + 12.0 * width),
        }
    }
}

fn bump(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn bump_prime(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp() / (x * x)
    } else {
        0.0
    }
}

/// Fixed cutoff: 1 on `[−1, 1]`, 0 outside `[−2, 2]`, smooth in between.
pub fn xi(t: f64) -> f64 {
    let r = t.abs();
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let a = bump(2.0 - r);
        a / (a + bump(r - 1.0))
    }
}

pub fn xi_prime(t: f64) -> f64 {
    let r = t.abs();
    if r <= 1.0 || r >= 2.0 {
        return 0.0;
    }
    let a = bump(2.0 - r);
    let b = bump(r - 1.0);
    let da = -bump_prime(2.0 - r);
    let db = bump_prime(r - 1.0);
    let d = (da * (a + b) - a * (da + db)) / ((a + b) * (a + b));
    d * t.signum()
}

fn japanese(u: f64) -> f64 {
    (1.0 + u * u).sqrt()
}

/// `g̃_{n,a}(u + iv) = {Σ_{r≤n} g^{(r)}(u)(iv)^r / r!} ξ(av/⟨u⟩)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiAnalyticExtension {
    pub g: BaseFunction,
    pub order: usize,
    pub a: f64,
}

impl QuasiAnalyticExtension {
    pub fn new(g: BaseFunction, order: usize, a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidArgument("scale a must be positive".into()));
        }
        Ok(Self { g, order, a })
    }

    fn taylor(&self, u: f64, v: f64) -> Complex64 {
        let iv = Complex64::new(0.0, v);
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for r in 0..=self.order {
            if r > 0 {
                term = term * iv / r as f64;
            }
            sum += term * self.g.derivative(r, u);
        }
        sum
    }

    pub fn value(&self, u: f64, v: f64) -> Complex64 {
        self.taylor(u, v) * xi(self.a * v / japanese(u))
    }

    /// `∂_z̄ g̃` with `∂_z̄ = ∂_u + i∂_v`.
    pub fn dbar(&self, u: f64, v: f64) -> Complex64 {
        let n = self.order;
        let ju = japanese(u);
        let s = self.a * v / ju;
        let iv = Complex64::new(0.0, v);
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let head = iv.powu(n as u32) * (self.g.derivative(n + 1, u) / fact) * xi(s);
        let dxi = xi_prime(s);
        if dxi == 0.0 {
            return head;
        }
        let geom = Complex64::new(-self.a * v * u / (ju * ju * ju), self.a / ju);
        head + self.taylor(u, v) * dxi * geom
    }

    /// Half-height `2⟨u⟩/a` of the support strip above `u`.
    pub fn support_height(&self, u: f64) -> f64 {
        2.0 * japanese(u) / self.a
    }
}

/// Resolution of the 2-D quadrature: `u_panels` panels across the effective
/// support of `g`, `v_panels` panels on each of the four bands
/// `t = av/⟨u⟩ ∈ [−2,−1], [−1,0], [0,1], [1,2]`, Gauss–Legendre of `order`
/// points per panel and axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HsQuadrature {
    pub u_panels: usize,
    pub v_panels: usize,
    pub order: usize,
}

impl HsQuadrature {
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            u_panels: self.u_panels * factor,
            v_panels: self.v_panels * factor,
            order: self.order,
        }
    }
}

fn u_rule(ext: &QuasiAnalyticExtension, q: &HsQuadrature, lambda: Option<f64>) -> CompositeRule {
    let (lo, hi) = ext.g.effective_support();
    let mut nodes = vec![];
    let mut weights = vec![];
    let base = CompositeRule::new(0.0, 1.0, 1, q.order);
    let hpan = (hi - lo) / q.u_panels as f64;
    for p in 0..q.u_panels {
        let a = lo + p as f64 * hpan;
        let b = a + hpan;
        let mut cuts = vec![a];
        if let Some(l) = lambda.filter(|&l| l > a && l < b) {
            cuts.push(l);
        }
        cuts.push(b);
        for w in cuts.windows(2) {
            let len = w[1] - w[0];
            for (x, wt) in base.nodes.iter().zip(&base.weights) {
                nodes.push(w[0] + len * x);
                weights.push(len * wt);
            }
        }
    }
    CompositeRule { nodes, weights }
}

/// `(1/2π)∫∫ ∂_z̄g̃(z) (λ − z)⁻¹ du dv`.
fn scalar_hs(ext: &QuasiAnalyticExtension, q: &HsQuadrature, lambda: f64) -> Complex64 {
    let ur = u_rule(ext, q, Some(lambda));
    let tr = CompositeRule::with_breaks(&[-2.0, -1.0, 0.0, 1.0, 2.0], q.v_panels, q.order);
    let mut acc = Complex64::new(0.0, 0.0);
    for (&u, &wu) in ur.nodes.iter().zip(&ur.weights) {
        let scale = japanese(u) / ext.a;
        for (&t, &wt) in tr.nodes.iter().zip(&tr.weights) {
            let v = t * scale;
            let z = Complex64::new(u, v);
            acc += ext.dbar(u, v) / (lambda - z) * (wu * wt * scale);
        }
    }
    acc / (2.0 * PI)
}

#[derive(Clone, Debug)]
pub struct HsReconstruction {
    pub approx: DMatrix<f64>,
    pub exact: DMatrix<f64>,
    /// Operator-norm error `‖approx − g(K)‖` (imaginary parts included).
    pub error: f64,
    /// Difference to the half-resolution result exceeded `1e−3 · sup|g|`.
    pub accuracy_warning: bool,
}

/// `g(K) ≈ ∫ dg̃_{n,a}(z)(K − z)⁻¹` by 2-D quadrature over the support strip,
/// evaluated in the eigenbasis of `K`.
pub fn hs_reconstruct(ext: &QuasiAnalyticExtension, k: &DMatrix<f64>, q: &HsQuadrature) -> Result<HsReconstruction> {
    if k.nrows() != k.ncols() {
        return Err(Error::InvalidArgument("K must be square".into()));
    }
    if q.u_panels == 0 || q.v_panels == 0 || q.order == 0 {
        return Err(Error::InvalidArgument("empty quadrature".into()));
    }
    if !hnorm(&ext.g, ext.order, 0.0, 1.0).is_finite() {
        return Err(Error::InvalidArgument("base function norm is not finite".into()));
    }
    let (vals, vecs) = sym_eigen(k.clone());
    let mut approx_diag = Vec::with_capacity(vals.len());
    let mut err: f64 = 0.0;
    let mut drift: f64 = 0.0;
    let coarse = HsQuadrature {
        u_panels: (q.u_panels / 2).max(1),
        v_panels: (q.v_panels / 2).max(1),
        order: q.order,
    };
    for &l in &vals {
        let i = scalar_hs(ext, q, l);
        let c = scalar_hs(ext, &coarse, l);
        err = err.max((i - ext.g.value(l)).norm());
        drift = drift.max((i - c).norm());
        approx_diag.push(i.re);
    }
    let rebuild = |d: &[f64]| {
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d));
        &vecs * diag * vecs.transpose()
    };
    let exact_diag: Vec<f64> = vals.iter().map(|&l| ext.g.value(l)).collect();
    let peak = match ext.g {
        BaseFunction::Gaussian { height, .. } => height.abs(),
    };
    Ok(HsReconstruction {
        approx: rebuild(&approx_diag),
        exact: rebuild(&exact_diag),
        error: err,
        accuracy_warning: drift > 1e-3 * peak,
    })
}

/// `⦀g⦀_{n,s,a} = Σ_{r=0}^{n+1} a^{−(r−s−1)} ∫⟨u⟩^{r−s−1}|g^{(r)}(u)| du`.
pub fn hnorm(g: &BaseFunction, n: usize, s: f64, a: f64) -> f64 {
    let (lo, hi) = g.effective_support();
    let rule = CompositeRule::new(lo, hi, 600, 8);
    (0..=n + 1)
        .map(|r| {
            let e = r as f64 - s - 1.0;
            a.powf(-e) * rule.integrate(|u| japanese(u).powf(e) * g.derivative(r, u).abs())
        })
        .sum()
}

/// `∫ |dg̃_{n,a}(z)| |Im z|^{−(s+1)}` for `0 ≤ s < n`.
pub fn hs_moment(ext: &QuasiAnalyticExtension, s: f64, q: &HsQuadrature) -> Result<f64> {
    let n = ext.order as f64;
    if !(s >= 0.0 && s < n) {
        return Err(Error::InvalidArgument(format!("need 0 <= s < n, got s = {s}, n = {n}")));
    }
    // t = τ^m on [0, 1] tames |t|^{n−s−1} at the real axis
    let m = (2.0 / (n - s)).ceil().max(1.0);
    let ur = u_rule(ext, q, None);
    let inner = CompositeRule::new(0.0, 1.0, q.v_panels, q.order);
    let outer = CompositeRule::new(1.0, 2.0, q.v_panels, q.order);
    let mut acc = 0.0;
    for (&u, &wu) in ur.nodes.iter().zip(&ur.weights) {
        let scale = japanese(u) / ext.a;
        let mut f = |t: f64| {
            let v = t * scale;
            (ext.dbar(u, v).norm() + ext.dbar(u, -v).norm()) * v.abs().powf(-(s + 1.0)) * scale
        };
        let near: f64 = inner
            .nodes
            .iter()
            .zip(&inner.weights)
            .map(|(&tau, &w)| w * m * tau.powf(m - 1.0) * f(tau.powf(m)))
            .sum();
        let far = outer.integrate(&mut f);
        acc += wu * (near + far);
    }
    Ok(acc / (2.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ext(n: usize, a: f64) -> QuasiAnalyticExtension {
        QuasiAnalyticExtension::new(BaseFunction::gaussian(0.3, 0.7), n, a).unwrap()
    }

    #[test]
    fn gaussian_derivatives_match_finite_differences() {
        let g = BaseFunction::gaussian(0.3, 0.7);
        for r in 0..6 {
            for &u in &[-1.0, 0.1, 0.9, 2.2] {
                let h = 1e-5;
                let fd = (g.derivative(r, u + h) - g.derivative(r, u - h)) / (2.0 * h);
                assert!((fd - g.derivative(r + 1, u)).abs() < 1e-5 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn cutoff_properties() {
        assert_eq!(xi(0.5), 1.0);
        assert_eq!(xi(-1.0), 1.0);
        assert_eq!(xi(2.0), 0.0);
        assert_eq!(xi(-3.0), 0.0);
        for &t in &[1.2, 1.5, 1.9, -1.3] {
            let h = 1e-6;
            let fd = (xi(t + h) - xi(t - h)) / (2.0 * h);
            assert!((fd - xi_prime(t)).abs() < 1e-6);
            assert!((0.0..=1.0).contains(&xi(t)));
        }
    }

    #[test]
    fn extension_restricts_and_dbar_matches_differences() {
        let e = ext(3, 2.0);
        for &u in &[-0.5, 0.2, 1.4] {
            assert_eq!(e.value(u, 0.0).re, e.g.value(u));
            for &v in &[0.05, 0.3, 0.8] {
                let h = 1e-6;
                let du = (e.value(u + h, v) - e.value(u - h, v)) / (2.0 * h);
                let dv = (e.value(u, v + h) - e.value(u, v - h)) / (2.0 * h);
                let fd = du + Complex64::new(0.0, 1.0) * dv;
                assert!((fd - e.dbar(u, v)).norm() < 1e-6, "{u} {v}");
            }
        }
    }

    #[test]
    fn support_strip_scales_with_a() {
        let e1 = ext(2, 1.0);
        let e2 = ext(2, 2.0);
        for &u in &[0.0, 1.0, -3.0] {
            assert_eq!(e1.support_height(u), 2.0 * e2.support_height(u));
            let hgt = e2.support_height(u);
            assert_eq!(e2.value(u, hgt * 1.0001).norm(), 0.0);
        }
    }

    #[test]
    fn scalar_matrix_reconstruction() {
        let e = ext(3, 1.0);
        let k = DMatrix::identity(3, 3) * 0.45;
        let q = HsQuadrature {
            u_panels: 64,
            v_panels: 16,
            order: 8,
        };
        let r = hs_reconstruct(&e, &k, &q).unwrap();
        assert!(r.error < 1e-6, "{}", r.error);
        assert!((r.approx[(1, 1)] - e.g.value(0.45)).abs() < 1e-6);
        assert!(!r.accuracy_warning);
    }

    #[test]
    fn moment_bound_constant_is_stable() {
        let q = HsQuadrature {
            u_panels: 60,
            v_panels: 6,
            order: 8,
        };
        let n = 3;
        let s = 1.0;
        let g = BaseFunction::gaussian(0.3, 0.7);
        let base = hnorm(&g, n, 0.0, 1.0);
        let mut ratios = vec![];
        for a in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let e = QuasiAnalyticExtension::new(g.clone(), n, a).unwrap();
            let mom = hs_moment(&e, s, &q).unwrap();
            let bound = (a.powf(s + 1.0)).max(a.powf(s - n as f64)) * base;
            ratios.push(mom / bound);
            let finer = hs_moment(&e, s, &q.refined(2)).unwrap();
            assert!((finer - mom).abs() < 1e-3 * mom);
        }
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi < 10.0 && lo > 0.0, "{ratios:?}");
    }
}
