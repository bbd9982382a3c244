//! One-dimensional quadrature rules.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss–Legendre rule: nodes and weights on `[a, b]` split into
/// `panels` equal panels.
#[derive(Clone, Debug)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        let hpan = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * hpan;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(lo + 0.5 * hpan * (xi + 1.0));
                weights.push(0.5 * hpan * wi);
            }
        }
        Self { nodes, weights }
    }

    /// Panels between consecutive breakpoints.
    pub fn with_breaks(breaks: &[f64], panels_per_segment: usize, order: usize) -> Self {
        let mut nodes = vec![];
        let mut weights = vec![];
        for pair in breaks.windows(2) {
            if pair[1] > pair[0] {
                let r = Self::new(pair[0], pair[1], panels_per_segment, order);
                nodes.extend(r.nodes);
                weights.extend(r.weights);
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

pub fn integrate_gl<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    CompositeRule::new(a, b, panels, order).integrate(f)
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if diff.abs() <= 15.0 * tol {
        return Ok(left + right + diff / 15.0);
    }
    if depth == 0 {
        return Err(Error::NoConvergence {
            what: "adaptive Simpson".into(),
            iterations: 50,
            residual: diff.abs(),
        });
    }
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}
