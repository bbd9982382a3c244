//! Exact verification of the covering identities.
//!
//! Coordinates are integer ticks relative to the covering origin. Checks that
//! quantify over a continuum of points either reduce to one-dimensional
//! interval unions (when the relevant centers form a product set) or
//! enumerate one representative point per cell of the arrangement of all
//! thresholds at which the predicate can change; both are exact.

use std::collections::{BTreeSet, HashMap, HashSet};

use num_rational::Ratio;

use super::{alpha_indices, alpha_of, Covering, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub identity: &'static str,
    pub detail: String,
}

type Check = std::result::Result<(), Violation>;

fn fail(identity: &'static str, detail: String) -> Check {
    Err(Violation { identity, detail })
}

/// Per-axis sorted distinct values, if the point set is their full product.
fn product_axes(points: &[&Vec<i64>], dim: usize) -> Option<Vec<Vec<i64>>> {
    let axes: Vec<Vec<i64>> = (0..dim)
        .map(|j| {
            let s: BTreeSet<i64> = points.iter().map(|p| p[j]).collect();
            s.into_iter().collect()
        })
        .collect();
    let distinct: HashSet<&Vec<i64>> = points.iter().copied().collect();
    let size = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.len()))?;
    (size == distinct.len()).then_some(axes)
}

/// First uncovered point of `(c1, c2)` by the union of open intervals.
fn open_union_gap(mut iv: Vec<(i64, i64)>, c1: i64, c2: i64) -> Option<i64> {
    iv.sort();
    let mut cur = c1;
    let mut i = 0;
    // intervals starting at or before c1 cover (c1, b)
    let mut best = i64::MIN;
    while i < iv.len() && iv[i].0 <= c1 {
        best = best.max(iv[i].1);
        i += 1;
    }
    if best <= c1 {
        return Some(c1);
    }
    cur = cur.max(best);
    while cur < c2 {
        // cur itself must lie strictly inside some interval
        let mut next = cur;
        while i < iv.len() && iv[i].0 < cur {
            next = next.max(iv[i].1);
            i += 1;
        }
        if next <= cur {
            return Some(cur);
        }
        cur = next;
    }
    None
}

/// First uncovered point of `(c1, c2)` by the union of closed intervals;
/// the witness is reported as `cur` meaning "just above cur".
fn closed_union_gap(mut iv: Vec<(i64, i64)>, c1: i64, c2: i64) -> Option<i64> {
    iv.sort();
    let mut i = 0;
    let mut cur = c1;
    loop {
        let mut next = cur;
        while i < iv.len() && iv[i].0 <= cur {
            next = next.max(iv[i].1);
            i += 1;
        }
        if next >= c2 {
            return None;
        }
        if next <= cur {
            return Some(cur);
        }
        cur = next;
    }
}

/// Spatial hash of centers (doubled coordinates), bucket width `2ℓ`.
struct CenterIndex<'a> {
    centers: &'a [Vec<i64>],
    bucket: i64,
    map: HashMap<Vec<i64>, Vec<usize>>,
}

impl<'a> CenterIndex<'a> {
    fn new(centers: &'a [Vec<i64>], ell: i64) -> Self {
        let bucket = 2 * ell;
        let mut map: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (k, c) in centers.iter().enumerate() {
            let key: Vec<i64> = c.iter().map(|&v| (2 * v).div_euclid(bucket)).collect();
            map.entry(key).or_default().push(k);
        }
        Self {
            centers,
            bucket,
            map,
        }
    }

    /// Centers `r` (doubled `2r`) with `|2r_j − y_j| < half2` for all `j`,
    /// where `half2 ≤ bucket`.
    fn near(&self, y: &[i64], half2: i64, out: &mut Vec<usize>) {
        out.clear();
        let base: Vec<i64> = y.iter().map(|&v| v.div_euclid(self.bucket)).collect();
        let d = y.len();
        let mut off = vec![-1i64; d];
        loop {
            let key: Vec<i64> = base.iter().zip(&off).map(|(b, o)| b + o).collect();
            if let Some(ids) = self.map.get(&key) {
                for &k in ids {
                    if self.centers[k].iter().zip(y).all(|(&r, &v)| (2 * r - v).abs() < half2) {
                        out.push(k);
                    }
                }
            }
            let mut a = 0;
            while a < d && off[a] == 1 {
                off[a] = -1;
                a += 1;
            }
            if a == d {
                break;
            }
            off[a] += 1;
        }
    }
}

/// Representatives (doubled coordinates) of every cell of the threshold
/// arrangement on `[lo, hi]` (closed) or `(lo, hi)` (open).
fn representatives(mut thresholds: Vec<i64>, lo: i64, hi: i64, closed: bool) -> Vec<i64> {
    thresholds.push(lo);
    thresholds.push(hi);
    thresholds.retain(|&t| t >= lo && t <= hi);
    thresholds.sort_unstable();
    thresholds.dedup();
    let mut reps = Vec::with_capacity(2 * thresholds.len());
    for (k, &t) in thresholds.iter().enumerate() {
        if closed || (t != lo && t != hi) {
            reps.push(t);
        }
        if let Some(&u) = thresholds.get(k + 1) {
            // thresholds are even, so the midpoint is an integer
            reps.push((t + u).div_euclid(2));
        }
    }
    reps
}

fn for_each_cell<F: FnMut(&[i64]) -> bool>(axes: &[Vec<i64>], mut f: F) -> bool {
    let d = axes.len();
    if axes.iter().any(Vec::is_empty) {
        return true;
    }
    let mut idx = vec![0usize; d];
    let mut y: Vec<i64> = axes.iter().map(|a| a[0]).collect();
    loop {
        if !f(&y) {
            return false;
        }
        let mut a = d;
        loop {
            if a == 0 {
                return true;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < axes[a].len() {
                y[a] = axes[a][idx[a]];
                break;
            }
            idx[a] = 0;
            y[a] = axes[a][0];
        }
    }
}

/// Whether the union of the open boxes `Λ_ℓ(r)`, `r ∈ subset`, contains the
/// open box `∏(lo_j, hi_j)`; on failure returns an uncovered point.
fn union_covers_box(all: &[Vec<i64>], subset: &[usize], ell: i64, step: i64, lo: &[i64], hi: &[i64]) -> std::result::Result<(), String> {
    let d = lo.len();
    let half = ell / 2;
    let pts: Vec<&Vec<i64>> = subset.iter().map(|&k| &all[k]).collect();
    if let Some(axes) = product_axes(&pts, d) {
        for j in 0..d {
            let iv = axes[j].iter().map(|&v| (v - half, v + half)).collect();
            if let Some(g) = open_union_gap(iv, lo[j], hi[j]) {
                return Err(format!("axis {j} uncovered at tick {g}"));
            }
        }
        return Ok(());
    }
    // general position: merge each residue class that is a full run of the
    // lattice on every axis into one box, then sweep the axes in turn
    // (doubled coordinates)
    let boxes = merge_runs(&pts, ell, step);
    let refs: Vec<&Block> = boxes.iter().collect();
    let lo2: Vec<i64> = lo.iter().map(|v| 2 * v).collect();
    let hi2: Vec<i64> = hi.iter().map(|v| 2 * v).collect();
    let mut y = vec![0i64; d];
    match sweep_cover(&refs, 0, &lo2, &hi2, &mut y) {
        Some(w) => Err(format!("point {:?} (half-ticks) uncovered", w)),
        None => Ok(()),
    }
}

/// Open box in doubled coordinates.
struct Block {
    lo: Vec<i64>,
    hi: Vec<i64>,
}

fn merge_runs(pts: &[&Vec<i64>], ell: i64, step: i64) -> Vec<Block> {
    let single = |r: &Vec<i64>| Block {
        lo: r.iter().map(|v| 2 * v - ell).collect(),
        hi: r.iter().map(|v| 2 * v + ell).collect(),
    };
    if step <= 0 || step >= ell {
        return pts.iter().map(|r| single(r)).collect();
    }
    let mut groups: HashMap<Vec<i64>, Vec<&Vec<i64>>> = HashMap::new();
    for r in pts {
        groups.entry(r.iter().map(|v| v.rem_euclid(step)).collect()).or_default().push(r);
    }
    let mut out = vec![];
    for (_, g) in groups {
        let d = g[0].len();
        let runs = product_axes(&g, d).filter(|axes| {
            axes.iter().all(|ax| ax.windows(2).all(|w| w[1] - w[0] == step))
        });
        match runs {
            // consecutive boxes overlap since step < ℓ
            Some(axes) => out.push(Block {
                lo: axes.iter().map(|ax| 2 * ax[0] - ell).collect(),
                hi: axes.iter().map(|ax| 2 * ax[ax.len() - 1] + ell).collect(),
            }),
            None => out.extend(g.iter().map(|r| single(r))),
        }
    }
    out
}

fn sweep_cover(active: &[&Block], axis: usize, lo: &[i64], hi: &[i64], y: &mut Vec<i64>) -> Option<Vec<i64>> {
    let d = lo.len();
    if axis + 1 == d {
        let iv = active.iter().map(|b| (b.lo[axis], b.hi[axis])).collect();
        return open_union_gap(iv, lo[axis], hi[axis]).map(|g| {
            y[axis] = g;
            y.clone()
        });
    }
    let th: Vec<i64> = active.iter().flat_map(|b| [b.lo[axis], b.hi[axis]]).collect();
    let mut prev: Option<Vec<&Block>> = None;
    for t in representatives(th, lo[axis], hi[axis], false) {
        y[axis] = t;
        let next: Vec<&Block> = active.iter().copied().filter(|b| b.lo[axis] < t && t < b.hi[axis]).collect();
        // the slice problem depends only on the active set
        if prev.as_ref().is_some_and(|p| p.len() == next.len() && p.iter().zip(&next).all(|(a, b)| std::ptr::eq(*a, *b))) {
            continue;
        }
        if let Some(w) = sweep_cover(&next, axis + 1, lo, hi, y) {
            return Some(w);
        }
        prev = Some(next);
    }
    None
}

/// `Λ_L(x) = ∪_{r∈𝔾} Λ_ℓ(r)`: every box inside, union covers.
pub fn check_nesting_box(c: &Covering) -> Check {
    const ID: &str = "nestingproperty";
    let e = &c.exact;
    let (half_l, half) = (e.outer / 2, e.ell / 2);
    for r in &e.offsets {
        if r.iter().any(|&v| v.abs() + half > half_l) {
            return fail(ID, format!("box at offset {r:?} leaves the parent"));
        }
    }
    let d = c.dim();
    let all: Vec<usize> = (0..e.offsets.len()).collect();
    union_covers_box(&e.offsets, &all, e.ell, e.step, &vec![-half_l; d], &vec![half_l; d])
        .or_else(|w| fail(ID, w))
}

/// Closed interval of `y` for which `Λ_{ℓ/5}(y) ∩ (a, b) ⊂ (v − ℓ/2, v + ℓ/2)`;
/// all quantities doubled.
fn bdry_interval(v2: i64, ell: i64, a2: i64, b2: i64) -> (i64, i64) {
    let lo = if a2 >= v2 - ell { i64::MIN } else { v2 - 4 * ell / 5 };
    let hi = if b2 <= v2 + ell { i64::MAX } else { v2 + 4 * ell / 5 };
    (lo, hi)
}

/// For every `y ∈ Λ_L(x)` some `r` has `Λ_{ℓ/5}(y) ∩ Λ_L(x) ⊂ Λ_ℓ(r)`.
pub fn check_bdrycover_box(c: &Covering) -> Check {
    const ID: &str = "bdrycover";
    let e = &c.exact;
    let pts: Vec<&Vec<i64>> = e.offsets.iter().collect();
    let Some(axes) = product_axes(&pts, c.dim()) else {
        return fail(ID, "centers are not a lattice product".into());
    };
    let (a2, b2) = (-e.outer, e.outer);
    for (j, ax) in axes.iter().enumerate() {
        let iv = ax.iter().map(|&v| bdry_interval(2 * v, e.ell, a2, b2)).collect();
        if let Some(g) = closed_union_gap(iv, a2, b2) {
            return fail(ID, format!("axis {j}: no center serves y just above {g} half-ticks"));
        }
    }
    Ok(())
}

/// `Λ_{ℓ/5}(r) ∩ Λ_ℓ(r′) = ∅` for distinct `r, r′ ∈ x + αℓZ^d`.
pub fn check_freeguarantee(c: &Covering) -> Check {
    const ID: &str = "freeguarantee";
    let e = &c.exact;
    // distinct lattice points differ by a nonzero multiple of αℓ on some axis
    if 5 * e.step < 3 * e.ell {
        return fail(ID, format!("spacing {} below 3ℓ/5", e.step));
    }
    for r in &e.offsets {
        if r.iter().any(|v| v % e.step != 0) {
            return fail(ID, format!("center {r:?} is off the lattice"));
        }
    }
    for j in 0..c.dim() {
        let vals: BTreeSet<i64> = e.offsets.iter().map(|r| r[j]).collect();
        let v: Vec<i64> = vals.into_iter().collect();
        for w in v.windows(2) {
            // (r − ℓ/10, r + ℓ/10) and (r′ − ℓ/2, r′ + ℓ/2) are disjoint
            if 10 * (w[1] - w[0]) < 6 * e.ell {
                return fail(ID, format!("axis {j}: centers {} and {} too close", w[0], w[1]));
            }
        }
    }
    Ok(())
}

fn pow_ratio(q: Ratio<i128>, d: u32) -> Option<Ratio<i128>> {
    let n = q.numer().checked_pow(d)?;
    let m = q.denom().checked_pow(d)?;
    Some(Ratio::new(n, m))
}

/// `(L/ℓ)^d ≤ #𝔾 = ((L−ℓ)/(αℓ) + 1)^d ≤ (2L/ℓ)^d`.
pub fn check_number_box(c: &Covering) -> Check {
    const ID: &str = "number";
    let e = &c.exact;
    let d = c.dim() as u32;
    let count = e.offsets.len() as i128;
    if (e.outer - e.ell) % e.step != 0 {
        return fail(ID, "(L−ℓ)/(αℓ) is not an integer".into());
    }
    let per_axis = ((e.outer - e.ell) / e.step + 1) as i128;
    if per_axis.pow(d) != count {
        return fail(ID, format!("count {count} != {per_axis}^{d}"));
    }
    let ratio = Ratio::new(e.outer as i128, e.ell as i128);
    let (Some(lo), Some(hi)) = (pow_ratio(ratio, d), pow_ratio(ratio * 2, d)) else {
        return fail(ID, "overflow in bound".into());
    };
    let cq = Ratio::from_integer(count);
    if !(lo <= cq && cq <= hi) {
        return fail(ID, format!("count {count} outside [{lo}, {hi}]"));
    }
    Ok(())
}

/// For `y = x + αℓk` and `n′ ≥ 1`, the lattice points in `Λ_{(2n′α+1)ℓ}(y)`
/// cover it and form a suitable covering of it.
pub fn check_nesting_sub_box(c: &Covering, k: &[i64], n_sub: u64) -> Check {
    const ID: &str = "nesting";
    let e = &c.exact;
    let side = 2 * n_sub as i64 * e.step + e.ell;
    let y: Vec<i64> = k.iter().map(|&ki| ki * e.step).collect();
    let half_s = side / 2;
    let mut axes = vec![];
    for &yj in &y {
        let m = (half_s - 1).div_euclid(e.step) + 1;
        let vals: Vec<i64> = (-m..=m)
            .map(|t| yj + t * e.step)
            .filter(|&v| (v - yj).abs() < half_s)
            .collect();
        axes.push(vals);
    }
    let pts = super::product(&axes);
    for r in &pts {
        if r.iter().zip(&y).any(|(&v, &yj)| (v - yj).abs() + e.ell / 2 > half_s) {
            return fail(ID, format!("box at {r:?} leaves the sub-box"));
        }
    }
    let all: Vec<usize> = (0..pts.len()).collect();
    let lo: Vec<i64> = y.iter().map(|v| v - half_s).collect();
    let hi: Vec<i64> = y.iter().map(|v| v + half_s).collect();
    union_covers_box(&pts, &all, e.ell, e.step, &lo, &hi).or_else(|w| fail(ID, w))?;
    let s_q = Q::new(side, e.unit);
    let l_q = Q::new(e.ell, e.unit);
    let admissible = alpha_indices(s_q - l_q, l_q)
        .into_iter()
        .any(|m| alpha_of(s_q - l_q, l_q, m) == c.alpha);
    if !admissible {
        return fail(ID, format!("alpha {} not admissible for the sub-box", c.alpha));
    }
    Ok(())
}

fn annulus_parts(c: &Covering) -> (i64, i64, i64) {
    let e = &c.exact;
    (e.inner.expect("annulus covering"), e.outer, e.ell)
}

/// `Λ_{L2,L1}(x) = ∪_{r∈𝔾} Λ_ℓ(r)`.
pub fn check_nesting_annulus(c: &Covering) -> Check {
    const ID: &str = "nestingpropertyann";
    let e = &c.exact;
    let (t1, t2, tl) = annulus_parts(c);
    let d = c.dim();
    for r in &e.offsets {
        let inside_outer = r.iter().all(|&v| v.abs() + tl / 2 <= t2 / 2);
        let off_inner = r.iter().any(|&v| v.abs() - tl / 2 >= t1 / 2);
        if !(inside_outer && off_inner) {
            return fail(ID, format!("box at offset {r:?} leaves the annulus"));
        }
    }
    // the annulus is the union of the 2d slabs {±y_i > L1/2} of the outer box
    for i in 0..d {
        for s in [1i64, -1] {
            let subset: Vec<usize> = (0..e.offsets.len())
                .filter(|&k| s * e.offsets[k][i] - tl / 2 >= t1 / 2)
                .collect();
            let mut lo = vec![-t2 / 2; d];
            let mut hi = vec![t2 / 2; d];
            if s > 0 {
                lo[i] = t1 / 2;
            } else {
                hi[i] = -t1 / 2;
            }
            union_covers_box(&e.offsets, &subset, tl, e.step, &lo, &hi)
                .or_else(|w| fail(ID, format!("slab {i}{}: {w}", if s > 0 { "+" } else { "-" })))?;
        }
    }
    Ok(())
}

/// `#𝔾 ≤ (2L2/ℓ)^d #𝕌 ≤ (10L2/ℓ)^d`.
pub fn check_number_annulus(c: &Covering) -> Check {
    const ID: &str = "number22";
    let (_, t2, tl) = annulus_parts(c);
    let d = c.dim() as u32;
    let count = Ratio::from_integer(c.exact.offsets.len() as i128);
    let u = (5i128.pow(d) - 3i128.pow(d)) as i128;
    let ratio = Ratio::new(t2 as i128, tl as i128);
    let (Some(b1), Some(b2)) = (pow_ratio(ratio * 2, d), pow_ratio(ratio * 10, d)) else {
        return fail(ID, "overflow in bound".into());
    };
    let b1 = b1 * u;
    if !(count <= b1 && b1 <= b2) {
        return fail(ID, format!("count {count} vs bounds {b1}, {b2}"));
    }
    Ok(())
}

/// Annulus boundary predicate at a point `y` (half-ticks): some `r ∈ 𝔾` has
/// `Λ_{ℓ/5}(y) ∩ Λ_{L2,L1} ⊂ Λ_ℓ(r)`.
struct AnnulusBdry<'a> {
    index: CenterIndex<'a>,
    centers: &'a [Vec<i64>],
    /// Half-widths in half-ticks: inner, outer, covering box, small box.
    t1: i64,
    t2: i64,
    tl: i64,
    small: i64,
    buf: Vec<usize>,
}

impl<'a> AnnulusBdry<'a> {
    fn in_annulus(&self, y: &[i64]) -> bool {
        let m = y.iter().fold(0, |m, v| m.max(v.abs()));
        m > self.t1 && m < self.t2
    }

    fn holds(&mut self, y: &[i64]) -> bool {
        let d = y.len();
        let q: Vec<(i64, i64)> = y
            .iter()
            .map(|&v| ((v - self.small).max(-self.t2), (v + self.small).min(self.t2)))
            .collect();
        let in_k: Vec<bool> = q.iter().map(|&(a, b)| a >= -self.t1 && b <= self.t1).collect();
        let outside = in_k.iter().filter(|&&k| !k).count();
        let mut hull = Vec::with_capacity(d);
        for j in 0..d {
            let others_out = outside > usize::from(!in_k[j]);
            let (a, b) = q[j];
            let h = if others_out {
                (a, b)
            } else {
                match (a < -self.t1, b > self.t1) {
                    (true, true) => (a, b),
                    (false, true) => (a.max(self.t1), b),
                    (true, false) => (a, b.min(-self.t1)),
                    (false, false) => return true, // empty set, vacuous
                }
            };
            hull.push(h);
        }
        self.index.near(y, self.tl, &mut self.buf);
        let (centers, tl) = (self.centers, self.tl);
        self.buf.iter().any(|&k| {
            centers[k]
                .iter()
                .zip(&hull)
                .all(|(&r, &(a, b))| 2 * r - tl <= a && b <= 2 * r + tl)
        })
    }

    fn thresholds(&self, axis_vals: &BTreeSet<i64>) -> Vec<i64> {
        let (t1, t2, tl, s) = (self.t1, self.t2, self.tl, self.small);
        let mut th = vec![t1, -t1];
        for c in [t1, -t1, t2, -t2] {
            th.extend([c - s, c + s]);
        }
        for &r in axis_vals {
            for c in [2 * r - tl, 2 * r + tl] {
                th.extend([c - s, c + s]);
            }
        }
        th
    }
}

/// For every `y` in the annulus some `r ∈ 𝔾` has
/// `Λ_{ℓ/5}(y) ∩ Λ_{L2,L1}(x) ⊂ Λ_ℓ(r)`.
pub fn check_bdrycover_annulus(c: &Covering) -> Check {
    const ID: &str = "bdrycoverann";
    let e = &c.exact;
    let (t1, t2, tl) = annulus_parts(c);
    let d = c.dim();
    let mut p = AnnulusBdry {
        index: CenterIndex::new(&e.offsets, tl),
        centers: &e.offsets,
        t1,
        t2,
        tl,
        small: tl / 5,
        buf: vec![],
    };
    let report = |y: &[i64]| {
        let pt: Vec<String> = y
            .iter()
            .map(|&v| format!("{}", Ratio::new(v as i128, 2 * e.unit as i128)))
            .collect();
        format!("no covering box contains Λ_ℓ/5(y) ∩ annulus at y − x = ({})", pt.join(", "))
    };
    if d >= 2 {
        // next to an inner edge the intersection is L-shaped
        let mut y = vec![0i64; d];
        y[0] = t1 + tl / 10;
        y[1] = t1 - tl / 10;
        if p.in_annulus(&y) && !p.holds(&y) {
            return fail(ID, report(&y));
        }
    }
    let axis_vals: Vec<BTreeSet<i64>> = (0..d).map(|j| e.offsets.iter().map(|r| r[j]).collect()).collect();
    // far slabs: Λ_{ℓ/5}(y) misses the closed inner box
    for i in 0..d {
        for s in [1i64, -1] {
            let subset: Vec<&Vec<i64>> = e.offsets.iter().filter(|r| s * r[i] - tl / 2 >= t1 / 2).collect();
            let ranges: Vec<(i64, i64)> = (0..d)
                .map(|j| {
                    if j != i {
                        (-t2, t2)
                    } else if s > 0 {
                        (t1 + p.small, t2)
                    } else {
                        (-t2, -t1 - p.small)
                    }
                })
                .collect();
            let fast = product_axes(&subset, d).is_some_and(|axes| {
                axes.iter().zip(&ranges).all(|(ax, &(c1, c2))| {
                    let iv = ax.iter().map(|&v| bdry_interval(2 * v, tl, -t2, t2)).collect();
                    closed_union_gap(iv, c1, c2).is_none()
                })
            });
            if fast {
                continue;
            }
            let reps: Vec<Vec<i64>> = (0..d)
                .map(|j| representatives(p.thresholds(&axis_vals[j]), ranges[j].0, ranges[j].1, false))
                .collect();
            let mut witness = None;
            for_each_cell(&reps, |y| {
                if p.in_annulus(y) && !p.holds(y) {
                    witness = Some(y.to_vec());
                    return false;
                }
                true
            });
            if let Some(w) = witness {
                return fail(ID, report(&w));
            }
        }
    }
    // the shell within ℓ/10 of the inner box
    let r = t1 + p.small;
    let reps: Vec<Vec<i64>> = (0..d)
        .map(|j| representatives(p.thresholds(&axis_vals[j]), -r, r, true))
        .collect();
    let mut witness = None;
    for_each_cell(&reps, |y| {
        if p.in_annulus(y) && !p.holds(y) {
            witness = Some(y.to_vec());
            return false;
        }
        true
    });
    match witness {
        Some(w) => fail(ID, report(&w)),
        None => Ok(()),
    }
}
