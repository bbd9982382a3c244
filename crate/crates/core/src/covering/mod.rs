//! Suitable ℓ-coverings of boxes and annuli, free-site abundance and the
//! site-percolation graph.
//!
//! All geometry is carried exactly: inputs are converted to rationals and
//! every coordinate is stored as an integer number of ticks of a common unit
//! `1/unit`, so that every identity check is a comparison of integers.

mod abundance;
mod identities;
mod percolation;

pub use abundance::{abundance_deficit, is_abundant};
pub use identities::{
    check_bdrycover_annulus, check_bdrycover_box, check_freeguarantee, check_nesting_annulus,
    check_nesting_box, check_nesting_sub_box, check_number_annulus, check_number_box, Violation,
};
pub use percolation::{bad_cluster, bad_cluster_union_find, PercolationGraph};

use std::collections::BTreeSet;
use std::io::Write;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnnulusSpec, BoxSpec};

pub type Q = Ratio<i64>;

/// Exact rational for a decimal-looking float (e.g. `0.1 → 1/10`).
pub fn rational(x: f64) -> Result<Q> {
    let q = Q::approximate_float(x)
        .ok_or_else(|| Error::Geometry(format!("{x} has no rational representation")))?;
    let back = *q.numer() as f64 / *q.denom() as f64;
    if (back - x).abs() > 1e-12 * x.abs().max(1.0) || *q.denom() > 1_000_000 {
        return Err(Error::Geometry(format!("{x} is not a short rational")));
    }
    Ok(q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParentRegion {
    Box(BoxSpec),
    Annulus(AnnulusSpec),
}

/// How α is chosen among the admissible values `X/(2ℓn) ∈ [3/5, 4/5]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaChoice {
    /// The maximal admissible α.
    #[default]
    Standard,
    /// α with the given denominator index `n`.
    Index(u64),
}

/// Admissible `n` for α = `x / (2ℓn)`, ascending (so α descending).
pub fn alpha_indices(x: Q, ell: Q) -> Vec<u64> {
    if x <= Q::zero() {
        return vec![];
    }
    // 3/5 ≤ x/(2ℓn) ≤ 4/5  ⇔  5x/(8ℓ) ≤ n ≤ 5x/(6ℓ)
    let lo = (x * Q::from(5) / (ell * Q::from(8))).ceil().to_integer().max(1);
    let hi = (x * Q::from(5) / (ell * Q::from(6))).floor().to_integer();
    (lo..=hi).map(|n| n as u64).collect()
}

pub fn alpha_of(x: Q, ell: Q, n: u64) -> Q {
    x / (ell * Q::from(2 * n as i64))
}

/// `α_{L,ℓ}`, the maximal admissible α for a box of side `L`.
pub fn alpha_box(l: f64, ell: f64) -> Result<Q> {
    let (l, ell) = (rational(l)?, rational(ell)?);
    let n = *alpha_indices(l - ell, ell)
        .first()
        .ok_or_else(|| Error::Geometry("no admissible alpha".into()))?;
    Ok(alpha_of(l - ell, ell, n))
}

/// Exact integer data of a covering.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactCovering {
    /// Ticks per unit length.
    pub unit: i64,
    pub origin: Vec<i64>,
    pub ell: i64,
    /// Side of the box, or outer side of the annulus.
    pub outer: i64,
    /// Inner side of the annulus.
    pub inner: Option<i64>,
    /// Lattice spacing αℓ.
    pub step: i64,
    /// Center offsets from the origin.
    pub offsets: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Covering {
    pub parent: ParentRegion,
    pub ell: f64,
    pub alpha: Q,
    pub n: u64,
    pub centers: Vec<Vec<f64>>,
    pub exact: ExactCovering,
}

fn lcm_all(qs: &[Q]) -> i64 {
    qs.iter().fold(1i64, |acc, q| acc.lcm(q.denom()))
}

fn to_ticks(q: Q, unit: i64) -> Result<i64> {
    let t = q * Q::from(unit);
    if !t.is_integer() {
        return Err(Error::Geometry("internal: tick conversion is not exact".into()));
    }
    let v = t.to_integer();
    if v.unsigned_abs() > 1 << 52 {
        return Err(Error::Geometry("coordinates too large for exact arithmetic".into()));
    }
    Ok(v)
}

fn unit_for(qs: &[Q], n: u64) -> Result<i64> {
    let base = lcm_all(qs) as i128 * 20 * n as i128;
    i64::try_from(base)
        .ok()
        .filter(|&u| u < 1 << 40)
        .ok_or_else(|| Error::Geometry("denominators too large for exact arithmetic".into()))
}

impl Covering {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.exact.origin.len()
    }

    fn finish(parent: ParentRegion, ell: f64, alpha: Q, n: u64, exact: ExactCovering) -> Self {
        let u = exact.unit as f64;
        let centers = exact
            .offsets
            .iter()
            .map(|o| {
                o.iter()
                    .zip(&exact.origin)
                    .map(|(a, b)| (a + b) as f64 / u)
                    .collect()
            })
            .collect();
        Self {
            parent,
            ell,
            alpha,
            n,
            centers,
            exact,
        }
    }

    /// CSV of centers; the header comment records α, ℓ and the parent.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let parent = match &self.parent {
            ParentRegion::Box(b) => format!("box center={:?} side={}", b.center, b.side),
            ParentRegion::Annulus(a) => {
                format!("annulus center={:?} inner={} outer={}", a.center, a.inner, a.outer)
            }
        };
        writeln!(w, "# alpha={} ell={} {}", self.alpha, self.ell, parent)?;
        let mut cw = csv::Writer::from_writer(w);
        let header: Vec<String> = (0..self.dim()).map(|j| format!("x{j}")).collect();
        cw.write_record(&header)?;
        for c in &self.centers {
            cw.write_record(c.iter().map(|v| format!("{v}")))?;
        }
        cw.flush()?;
        Ok(())
    }
}

/// Standard ℓ-covering of a box, `(x + αℓZ^d) ∩ Λ_L(x)` with maximal α.
pub fn standard_covering_box(b: &BoxSpec, ell: f64) -> Result<Covering> {
    suitable_covering_box(b, ell, AlphaChoice::Standard)
}

pub fn suitable_covering_box(b: &BoxSpec, ell: f64, choice: AlphaChoice) -> Result<Covering> {
    let l = rational(b.side)?;
    let lq = rational(ell)?;
    if !(lq > Q::zero()) || lq * Q::from(6) > l {
        return Err(Error::Geometry(format!(
            "need 0 < ell <= L/6, got ell = {ell}, L = {}",
            b.side
        )));
    }
    let idx = alpha_indices(l - lq, lq);
    let n = match choice {
        AlphaChoice::Standard => *idx
            .first()
            .expect("ell <= L/6 guarantees an admissible alpha"),
        AlphaChoice::Index(n) if idx.contains(&n) => n,
        AlphaChoice::Index(n) => {
            return Err(Error::Geometry(format!("alpha index {n} is not admissible")))
        }
    };
    let alpha = alpha_of(l - lq, lq, n);
    let xq: Vec<Q> = b.center.iter().map(|&c| rational(c)).collect::<Result<_>>()?;
    let mut all = xq.clone();
    all.extend([l, lq]);
    let unit = unit_for(&all, n)?;
    let step = to_ticks(alpha * lq, unit)?;
    let half = to_ticks(l / Q::from(2), unit)?;
    // |kαℓ| < L/2
    let kmax = (half - 1).div_euclid(step);
    let axis: Vec<i64> = (-kmax..=kmax).map(|k| k * step).collect();
    let offsets = product(&vec![axis; b.dim()]);
    let exact = ExactCovering {
        unit,
        origin: xq.iter().map(|&q| to_ticks(q, unit)).collect::<Result<_>>()?,
        ell: to_ticks(lq, unit)?,
        outer: to_ticks(l, unit)?,
        inner: None,
        step,
        offsets,
    };
    Ok(Covering::finish(ParentRegion::Box(b.clone()), ell, alpha, n, exact))
}

fn product(axes: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![vec![]];
    for ax in axes {
        let mut next = Vec::with_capacity(out.len() * ax.len());
        for p in &out {
            for &v in ax {
                let mut q = p.clone();
                q.push(v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// The offset set `𝕌_{L1,ℓ}` in ticks: vectors over
/// `{0, ±L1/2, ±(L1+ℓ)/2}` with at least one `±(L1+ℓ)/2` entry.
pub fn annulus_offsets(dim: usize, inner: i64, ell: i64) -> Vec<Vec<i64>> {
    let a = inner / 2;
    let b = (inner + ell) / 2;
    let vals = [0, a, -a, b, -b];
    product(&vec![vals.to_vec(); dim])
        .into_iter()
        .filter(|u| u.iter().any(|&v| v.abs() == b))
        .collect()
}

/// Standard ℓ-covering of the annulus `Λ_{L2,L1}(x)`: centers in
/// `x + 𝕌_{L1,ℓ} + αℓZ^d` whose boxes lie in the annulus, with
/// α = max admissible `(L2 − L1 − 2ℓ)/(2ℓn)`.
pub fn standard_covering_annulus(a: &AnnulusSpec, ell: f64) -> Result<Covering> {
    let l1 = rational(a.inner)?;
    let l2 = rational(a.outer)?;
    let lq = rational(ell)?;
    if !(lq > Q::zero()) || !(l1 > Q::zero()) || lq * Q::from(7) >= l2 - l1 {
        return Err(Error::Geometry(format!(
            "need 0 < ell < (L2 - L1)/7, got ell = {ell}, L1 = {}, L2 = {}",
            a.inner, a.outer
        )));
    }
    let x = l2 - l1 - lq * Q::from(2);
    let n = *alpha_indices(x, lq)
        .first()
        .expect("ell < (L2-L1)/7 guarantees an admissible alpha");
    let alpha = alpha_of(x, lq, n);
    let xq: Vec<Q> = a.center.iter().map(|&c| rational(c)).collect::<Result<_>>()?;
    let mut all = xq.clone();
    all.extend([l1, l2, lq]);
    let unit = unit_for(&all, n)?;
    let step = to_ticks(alpha * lq, unit)?;
    let (t1, t2, tl) = (to_ticks(l1, unit)?, to_ticks(l2, unit)?, to_ticks(lq, unit)?);
    let d = a.center.len();
    let mut set = BTreeSet::new();
    for u in annulus_offsets(d, t1, tl) {
        // per axis: o + kαℓ with the box inside the outer box on that axis
        let axes: Vec<Vec<i64>> = u
            .iter()
            .map(|&o| {
                let kmin = (-t2 / 2 + tl / 2 - o).div_euclid(step) - 1;
                let kmax = (t2 / 2 - tl / 2 - o).div_euclid(step) + 1;
                (kmin..=kmax)
                    .map(|k| o + k * step)
                    .filter(|r| r.abs() + tl / 2 <= t2 / 2)
                    .collect()
            })
            .collect();
        for r in product(&axes) {
            if r.iter().any(|v| v.abs() - tl / 2 >= t1 / 2) {
                set.insert(r);
            }
        }
    }
    let exact = ExactCovering {
        unit,
        origin: xq.iter().map(|&q| to_ticks(q, unit)).collect::<Result<_>>()?,
        ell: tl,
        outer: t2,
        inner: Some(t1),
        step,
        offsets: set.into_iter().collect(),
    };
    Ok(Covering::finish(ParentRegion::Annulus(a.clone()), ell, alpha, n, exact))
}

pub(crate) fn q_to_f64(q: Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
