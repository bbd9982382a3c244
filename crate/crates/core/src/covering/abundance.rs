//! Free-site abundance.
//!
//! The count `#(S ∩ Λ_{L/5}(c))` depends on `c` only through the integer
//! ranges `{k : |k_j − c_j| < L/10}`, which change only at `c_j = k ± L/10`.
//! Scanning those breakpoints, the midpoints between them and the ends of the
//! admissible center range `|c_j − x_j| ≤ 2L/5` visits every window that can
//! occur, so the minimum is exact.

use std::collections::BTreeSet;

use num_traits::ToPrimitive;

use super::{rational, Q};
use crate::error::{Error, Result};
use crate::model::{BoxSpec, Site};

/// Distinct integer ranges `[lo, hi]` covered by `(c − r, c + r)` as `c`
/// sweeps `[a, b]`.
fn axis_ranges(a: Q, b: Q, r: Q) -> Vec<(i64, i64)> {
    let range_of = |c: Q| {
        let lo = (c - r).floor().to_integer() + 1;
        let hi = (c + r).ceil().to_integer() - 1;
        (lo, hi)
    };
    let mut cands: BTreeSet<Q> = BTreeSet::new();
    cands.insert(a);
    cands.insert(b);
    let k0 = (a - r).floor().to_integer() - 1;
    let k1 = (b + r).ceil().to_integer() + 1;
    for k in k0..=k1 {
        for c in [Q::from(k) - r, Q::from(k) + r] {
            if c >= a && c <= b {
                cands.insert(c);
            }
        }
    }
    let pts: Vec<Q> = cands.into_iter().collect();
    let mut out: BTreeSet<(i64, i64)> = BTreeSet::new();
    for (i, &c) in pts.iter().enumerate() {
        out.insert(range_of(c));
        if let Some(&d) = pts.get(i + 1) {
            out.insert(range_of((c + d) / Q::from(2)));
        }
    }
    out.into_iter().collect()
}

/// `min_c #(S ∩ Λ_{L/5}(c)) − L^{(1−ς′)d}` over all `Λ_{L/5}(c) ⊂ Λ_L`.
pub fn abundance_deficit(sites: &[Site], b: &BoxSpec, sigma_prime: f64) -> Result<f64> {
    let d = b.dim();
    let l = rational(b.side)?;
    let r = l / Q::from(10);
    let reach = l * Q::from(2) / Q::from(5);
    let mut axes = Vec::with_capacity(d);
    let mut origin = Vec::with_capacity(d);
    let mut extent = Vec::with_capacity(d);
    for j in 0..d {
        let x = rational(b.center[j])?;
        let ranges = axis_ranges(x - reach, x + reach, r);
        let lo = ranges.iter().map(|p| p.0).min().unwrap_or(0);
        let hi = ranges.iter().map(|p| p.1).max().unwrap_or(-1);
        origin.push(lo);
        extent.push((hi - lo + 1).max(0) as usize);
        axes.push(ranges);
    }
    // d-dimensional prefix sums over the integer window [origin, origin + extent)
    let strides: Vec<usize> = (0..d).map(|j| extent[j + 1..].iter().map(|e| e + 1).product()).collect();
    let total: usize = extent.iter().map(|e| e + 1).product();
    let mut pre = vec![0i64; total];
    for s in sites {
        if s.len() != d {
            return Err(Error::InvalidArgument(format!("site {s:?} has wrong dimension")));
        }
        if !b.contains(&s.iter().map(|&v| v as f64).collect::<Vec<_>>()) {
            return Err(Error::InvalidArgument(format!("site {s:?} is outside the box")));
        }
        let mut idx = 0;
        let mut inside = true;
        for j in 0..d {
            let k = s[j] - origin[j];
            if k < 0 || k as usize >= extent[j] {
                inside = false;
                break;
            }
            idx += (k as usize + 1) * strides[j];
        }
        if inside {
            pre[idx] += 1;
        }
    }
    for j in 0..d {
        for i in 0..total {
            let c = (i / strides[j]) % (extent[j] + 1);
            if c > 0 {
                pre[i] += pre[i - strides[j]];
            }
        }
    }
    let query = |ranges: &[(i64, i64)]| -> i64 {
        if ranges.iter().any(|&(lo, hi)| lo > hi) {
            return 0;
        }
        let mut sum = 0;
        for mask in 0..(1usize << d) {
            let mut idx = 0;
            let mut sign = 1;
            for (j, &(lo, hi)) in ranges.iter().enumerate() {
                let v = if mask >> j & 1 == 1 {
                    sign = -sign;
                    lo - origin[j]
                } else {
                    hi - origin[j] + 1
                };
                idx += v as usize * strides[j];
            }
            sum += sign * pre[idx];
        }
        sum
    };
    let mut min = i64::MAX;
    let mut cur = vec![(0i64, 0i64); d];
    let mut pos = vec![0usize; d];
    'outer: loop {
        for j in 0..d {
            cur[j] = axes[j][pos[j]];
        }
        min = min.min(query(&cur));
        let mut a = d;
        loop {
            if a == 0 {
                break 'outer;
            }
            a -= 1;
            pos[a] += 1;
            if pos[a] < axes[a].len() {
                break;
            }
            pos[a] = 0;
        }
    }
    let threshold = b.side.powf((1.0 - sigma_prime) * d as f64);
    Ok(min.to_f64().unwrap_or(0.0) - threshold)
}

/// `#(S ∩ Λ_{L/5}) ≥ L^{(1−ς′)d}` for every `Λ_{L/5} ⊂ Λ_L`.
pub fn is_abundant(sites: &[Site], b: &BoxSpec, sigma_prime: f64) -> Result<bool> {
    Ok(abundance_deficit(sites, b, sigma_prime)? >= 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::lattice_sites;

    #[test]
    fn examples() {
        let b = BoxSpec::centered(1, 50.0);
        let all = lattice_sites(&b);
        assert!(is_abundant(&all, &b, 0.5).unwrap());
        let even: Vec<Site> = all.iter().filter(|s| s[0] % 2 == 0).cloned().collect();
        assert!(!is_abundant(&even, &b, 0.5).unwrap());
        assert!(!is_abundant(&[], &b, 0.5).unwrap());
        // a window of length 10 holds 9 or 10 integers; the minimum is 9
        let def = abundance_deficit(&all, &b, 0.5).unwrap();
        assert!((def - (9.0 - 50f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn matches_dense_scan_in_two_dimensions() {
        let b = BoxSpec::new(vec![0.3, -0.7], 17.0).unwrap();
        let all = lattice_sites(&b);
        let some: Vec<Site> = all.iter().filter(|s| (s[0] * 7 + s[1] * 3).rem_euclid(5) != 0).cloned().collect();
        let exact = abundance_deficit(&some, &b, 0.2).unwrap() + 17f64.powf(1.6);
        let mut brute = i64::MAX;
        let steps = 200;
        for i in 0..=steps {
            for j in 0..=steps {
                let c = [
                    0.3 - 6.8 + 13.6 * i as f64 / steps as f64,
                    -0.7 - 6.8 + 13.6 * j as f64 / steps as f64,
                ];
                let n = some
                    .iter()
                    .filter(|s| (s[0] as f64 - c[0]).abs() < 1.7 && (s[1] as f64 - c[1]).abs() < 1.7)
                    .count() as i64;
                brute = brute.min(n);
            }
        }
        assert!(exact as i64 <= brute);
        assert_eq!(exact.round() as i64, brute);
    }
}
