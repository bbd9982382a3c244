use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, CompositeRule};

fn integrand(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        -(-t).exp_m1() / t
    }
}

/// `∫₀^s (1 − e^{−t})/t dt`.
pub fn carleman_integral(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    adaptive_simpson(&integrand, 0.0, s, 1e-15 * s.max(1.0)).expect("smooth integrand")
}

/// `φ(s) = s·exp(−∫₀^s (1 − e^{−t})/t dt)`.
pub fn phi(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    s * (-carleman_integral(s)).exp()
}

/// `C₁ = exp ∫₀¹ (1 − e^{−t})/t dt`.
pub fn carleman_constant() -> f64 {
    carleman_integral(1.0).exp()
}

/// `w_ρ(x) = φ(|x|/ρ)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CarlemanWeight {
    pub rho: f64,
    pub c1: f64,
}

impl CarlemanWeight {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("ρ = {rho} must be positive")));
        }
        Ok(Self {
            rho,
            c1: carleman_constant(),
        })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        phi(x.iter().map(|v| v * v).sum::<f64>().sqrt() / self.rho)
    }

    /// `(|x|/(C₁ρ), |x|/ρ)`.
    pub fn sandwich(&self, x: &[f64]) -> (f64, f64) {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt() / self.rho;
        (r / self.c1, r)
    }
}

pub fn carleman_weight(x: &[f64], rho: f64) -> Result<f64> {
    Ok(CarlemanWeight::new(rho)?.value(x))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CarlemanRatio {
    pub alpha: f64,
    /// `α³ ∫ w_ρ^{−1−2α} f²`.
    pub lhs: f64,
    /// `ρ⁴ ∫ w_ρ^{2−2α} (Δf)²`.
    pub rhs: f64,
    pub ratio: f64,
}

/// Radial sample `f(x) = g(|x|)` given by `g`, `g'`, `g''`.
pub trait RadialSample {
    fn value(&self, r: f64) -> f64;
    fn d1(&self, r: f64) -> f64;
    fn d2(&self, r: f64) -> f64;
    /// Closed support interval in `r`.
    fn support(&self) -> (f64, f64);

    fn laplacian(&self, r: f64, d: usize) -> f64 {
        self.d2(r) + (d as f64 - 1.0) / r * self.d1(r)
    }
}

/// `g(r) = exp(−1/((r−a)(b−r)))` on `(a, b)`, zero elsewhere.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BumpAnnulus {
    pub inner: f64,
    pub outer: f64,
}

impl RadialSample for BumpAnnulus {
    fn value(&self, r: f64) -> f64 {
        let (a, b) = (self.inner, self.outer);
        if r <= a || r >= b {
            return 0.0;
        }
        (-1.0 / ((r - a) * (b - r))).exp()
    }

    fn d1(&self, r: f64) -> f64 {
        let (a, b) = (self.inner, self.outer);
        if r <= a || r >= b {
            return 0.0;
        }
        let q = (r - a) * (b - r);
        let dq = a + b - 2.0 * r;
        self.value(r) * dq / (q * q)
    }

    fn d2(&self, r: f64) -> f64 {
        let (a, b) = (self.inner, self.outer);
        if r <= a || r >= b {
            return 0.0;
        }
        let q = (r - a) * (b - r);
        let dq = a + b - 2.0 * r;
        let u = dq / (q * q);
        let du = (-2.0 * q * q - dq * 2.0 * q * dq) / q.powi(4);
        self.value(r) * (u * u + du)
    }

    fn support(&self) -> (f64, f64) {
        (self.inner, self.outer)
    }
}

fn sphere_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    let k = d as f64 / 2.0;
    2.0 * PI.powf(k) / gamma_half_integer(d)
}

/// `Γ(d/2)` for positive integer `d`.
fn gamma_half_integer(d: usize) -> f64 {
    let mut g = if d % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if d % 2 == 0 { 1.0 } else { 0.5 };
    while x < d as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Both sides of the Carleman inequality for a radial sample, integrated in
/// polar coordinates with `panels` Gauss–Legendre panels across the support.
pub fn carleman_ratio<S: RadialSample>(
    f: &S,
    d: usize,
    alpha: f64,
    rho: f64,
    panels: usize,
) -> Result<CarlemanRatio> {
    let (a, b) = f.support();
    if !(a > 0.0 && b < rho && a < b) {
        return Err(Error::InvalidArgument(format!(
            "support [{a}, {b}] is not inside B(0, {rho}) minus the origin"
        )));
    }
    if d == 0 || alpha <= 0.0 || panels == 0 {
        return Err(Error::InvalidArgument("need d ≥ 1, α > 0, panels ≥ 1".into()));
    }
    let rule = CompositeRule::new(a, b, panels, 8);
    let area = sphere_area(d);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (&r, &w) in rule.nodes.iter().zip(&rule.weights) {
        let jac = area * r.powi(d as i32 - 1) * w;
        let wr = phi(r / rho);
        // weights in log form keep large α finite
        let lw = wr.ln();
        let g = f.value(r);
        let lap = f.laplacian(r, d);
        lhs += jac * g * g * ((-1.0 - 2.0 * alpha) * lw).exp();
        rhs += jac * lap * lap * ((2.0 - 2.0 * alpha) * lw).exp();
    }
    let lhs = alpha.powi(3) * lhs;
    let rhs = rho.powi(4) * rhs;
    Ok(CarlemanRatio {
        alpha,
        lhs,
        rhs,
        ratio: lhs / rhs,
    })
}

/// Largest ratio over an `α` scan; any admissible `C₃` is at least this.
pub fn fit_c3(ratios: &[CarlemanRatio]) -> Option<f64> {
    ratios.iter().map(|r| r.ratio).filter(|r| r.is_finite()).reduce(f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_matches_series() {
        let mut s = 0.0;
        let mut fact = 1.0;
        for k in 1..30 {
            fact *= k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            s += sign / (k as f64 * fact);
        }
        assert!((carleman_integral(1.0) - s).abs() < 1e-12);
        let c1 = carleman_constant();
        assert!((c1 - s.exp()).abs() < 1e-10);
        assert!((c1 - 2.21800).abs() < 1e-4);
        assert!(0.75f64.exp() < c1 && c1 < std::f64::consts::E);
    }

    #[test]
    fn phi_increasing_from_zero() {
        assert_eq!(phi(0.0), 0.0);
        let vals: Vec<f64> = (1..=40).map(|k| phi(k as f64 * 0.1)).collect();
        assert!(vals.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(carleman_weight(&[0.0, 0.0], 2.0).unwrap(), 0.0);
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let f = BumpAnnulus { inner: 0.2, outer: 0.8 };
        let h = 1e-5;
        for &r in &[0.3, 0.5, 0.7] {
            let fd1 = (f.value(r + h) - f.value(r - h)) / (2.0 * h);
            let fd2 = (f.value(r + h) - 2.0 * f.value(r) + f.value(r - h)) / (h * h);
            assert!((fd1 - f.d1(r)).abs() < 1e-6 * f.d1(r).abs().max(1e-3));
            assert!((fd2 - f.d2(r)).abs() < 1e-3 * f.d2(r).abs().max(1e-3));
        }
    }

    #[test]
    fn ratio_support_and_homogeneity() {
        let f = BumpAnnulus { inner: 0.2, outer: 0.8 };
        assert!(carleman_ratio(&f, 2, 2.0, 0.5, 20).is_err());
        let a = carleman_ratio(&f, 2, 2.0, 1.0, 40).unwrap();
        let b = carleman_ratio(&f, 2, 2.0, 1.0, 80).unwrap();
        assert!(a.ratio.is_finite() && a.ratio > 0.0);
        assert!((a.ratio / b.ratio - 1.0).abs() < 0.02);
        assert!((sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
