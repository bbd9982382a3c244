//! Sparse symmetric storage, banded factorizations, inertia counts and a
//! fully reorthogonalized Lanczos process.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Real symmetric matrix in CSR form, both triangles stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SymCsr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymCsr {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut trips: Vec<(usize, usize, f64)>) -> Self {
        trips.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(trips.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trips {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(j);
            vals.push(v);
            row_ptr[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `self + shift·I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut trips: Vec<_> = self.triplets().collect();
        trips.extend((0..self.n).map(|i| (i, i, shift)));
        Self::from_triplets(self.n, trips)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn bandwidth(&self) -> usize {
        self.triplets()
            .map(|(i, j, _)| i.abs_diff(j))
            .max()
            .unwrap_or(0)
    }

    /// Max absolute row sum, an upper bound for the spectral norm.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|e| e.1.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Gershgorin lower bound on the spectrum.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let mut d = 0.0;
                let mut off = 0.0;
                for (j, v) in self.row(i) {
                    if j == i {
                        d += v;
                    } else {
                        off += v.abs();
                    }
                }
                d - off
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.triplets()
            .all(|(i, j, v)| (v - self.get(j, i)).abs() <= tol * (1.0 + v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    /// Coordinate text format: a `%` header line, then `n n nnz`, then one
    /// 1-based `i j value` line per stored entry.
    pub fn to_triplet_text(&self) -> String {
        let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
        s.push_str(&format!("{} {} {}\n", self.n, self.n, self.nnz()));
        for (i, j, v) in self.triplets() {
            s.push_str(&format!("{} {} {:.17e}\n", i + 1, j + 1, v));
        }
        s
    }
}

/// LU factorization with partial pivoting of a banded matrix `A − shift·I`.
#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    width: usize,
    a: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn factor(m: &SymCsr, shift: f64) -> Result<Self> {
        let n = m.dim();
        let kl = m.bandwidth();
        let ku = kl;
        // row i stores columns i−kl ..= i+ku+kl
        let width = 2 * kl + ku + 1;
        let mut a = vec![0.0; n * width];
        let idx = |i: usize, j: usize| i * width + (j + kl - i);
        for (i, j, v) in m.triplets() {
            a[idx(i, j)] += v;
        }
        for i in 0..n {
            a[idx(i, i)] -= shift;
        }
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a[idx(k, k)].abs();
            for i in k + 1..=last {
                let v = a[idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[k] = p;
            if best == 0.0 {
                return Err(Error::Singular(k));
            }
            let jmax = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    a.swap(idx(k, j), idx(p, j));
                }
            }
            let pivot = a[idx(k, k)];
            for i in k + 1..=last {
                let l = a[idx(i, k)] / pivot;
                a[idx(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        a[idx(i, j)] -= l * a[idx(k, j)];
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            width,
            a,
            piv,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.width + (j + self.kl - i)]
    }

    /// Solves in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let kl = self.kl;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    b[i] -= self.at(i, k) * bk;
                }
            }
        }
        let reach = self.width - kl - 1;
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..=(i + reach).min(n - 1) {
                s -= self.at(i, j) * b[j];
            }
            b[i] = s / self.at(i, i);
        }
    }

    /// Smallest |U_ii|; a crude singularity indicator.
    pub fn min_pivot(&self) -> f64 {
        (0..self.n).map(|i| self.at(i, i).abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Entries above which banded storage is refused in favour of MINRES.
pub const BAND_STORAGE_LIMIT: usize = 40_000_000;

/// Solver for `(A − σ)x = b`: banded LU when the band fits in memory,
/// MINRES otherwise.
#[derive(Clone, Debug)]
pub enum ShiftedSolver {
    Band(BandLu),
    Minres { matrix: SymCsr, shift: f64, tol: f64, max_iter: usize },
}

impl ShiftedSolver {
    pub fn new(m: &SymCsr, shift: f64) -> Result<Self> {
        let b = m.bandwidth();
        if m.dim().saturating_mul(3 * b + 1) <= BAND_STORAGE_LIMIT {
            Ok(Self::Band(BandLu::factor(m, shift)?))
        } else {
            Ok(Self::Minres {
                matrix: m.clone(),
                shift,
                tol: 1e-12,
                max_iter: 20 * m.dim(),
            })
        }
    }

    pub fn is_direct(&self) -> bool {
        matches!(self, Self::Band(_))
    }

    /// Solves in place; returns the iteration count (0 for direct solves).
    pub fn solve(&self, b: &mut [f64]) -> Result<usize> {
        match self {
            Self::Band(lu) => {
                lu.solve(b);
                Ok(0)
            }
            Self::Minres {
                matrix,
                shift,
                tol,
                max_iter,
            } => {
                let (x, it) = minres(matrix, *shift, b, *tol, *max_iter)?;
                b.copy_from_slice(&x);
                Ok(it)
            }
        }
    }
}

/// MINRES (Paige–Saunders) for the symmetric, possibly indefinite system
/// `(A − σ)x = b`.
pub fn minres(a: &SymCsr, shift: f64, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = a.dim();
    let mut x = vec![0.0; n];
    let beta1 = norm2(b);
    if beta1 == 0.0 {
        return Ok((x, 0));
    }
    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut beta = beta1;
    let mut oldb = 0.0;
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut y = vec![0.0; n];
    for it in 1..=max_iter {
        let v: Vec<f64> = r2.iter().map(|t| t / beta).collect();
        a.matvec(&v, &mut y);
        axpy(-shift, &v, &mut y);
        if it >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        oldb = beta;
        beta = norm2(&r2);
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = (gbar * gbar + beta * beta).sqrt().max(f64::MIN_POSITIVE);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let w1 = std::mem::replace(&mut w2, w.clone());
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
        }
        axpy(phi, &w, &mut x);
        if phibar <= tol * beta1 || beta == 0.0 {
            return Ok((x, it));
        }
    }
    Err(Error::NoConvergence {
        what: "minres".into(),
        iterations: max_iter,
        residual: phibar / beta1,
    })
}

/// Number of eigenvalues of `m` strictly below `sigma`, from the inertia of a
/// banded LDLᵀ factorization of `m − σI` (Sylvester's law). For tridiagonal
/// matrices this is the Sturm count.
pub fn count_below(m: &SymCsr, sigma: f64) -> usize {
    let n = m.dim();
    let b = m.bandwidth();
    let w = b + 1;
    // lower band: row i, columns i−b ..= i
    let mut a = vec![0.0; n * w];
    let idx = |i: usize, j: usize| i * w + (j + b - i);
    for (i, j, v) in m.triplets() {
        if j <= i && i - j <= b {
            a[idx(i, j)] += v;
        }
    }
    for i in 0..n {
        a[idx(i, i)] -= sigma;
    }
    let tiny = f64::EPSILON * (m.inf_norm() + sigma.abs()).max(1.0);
    let mut neg = 0;
    let mut col = vec![0.0; b];
    for k in 0..n {
        let mut d = a[idx(k, k)];
        if d.abs() < tiny {
            d = tiny;
        }
        if d < 0.0 {
            neg += 1;
        }
        let last = (k + b).min(n - 1);
        for (t, i) in (k + 1..=last).enumerate() {
            col[t] = a[idx(i, k)];
        }
        for (ti, i) in (k + 1..=last).enumerate() {
            let ci = col[ti] / d;
            if ci == 0.0 {
                continue;
            }
            for (tj, j) in (k + 1..=i).enumerate() {
                a[idx(i, j)] -= ci * col[tj];
            }
        }
    }
    neg
}

/// Eigen-decomposition of a dense symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (values, vecs)
}

pub fn sym_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Ritz pair of a Lanczos run.
#[derive(Clone, Debug)]
pub struct RitzPair {
    pub value: f64,
    pub coeffs: Vec<f64>,
    /// `|β_m · y_m|`, the residual of the Ritz pair for the operator.
    pub residual: f64,
}

/// Lanczos process with full reorthogonalization, optionally deflated against
/// a set of orthonormal vectors.
pub struct Lanczos {
    n: usize,
    basis: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    deflate: Vec<Vec<f64>>,
    next: Option<Vec<f64>>,
    exhausted: bool,
}

impl Lanczos {
    pub fn new(n: usize, deflate: Vec<Vec<f64>>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut s = Self {
            n,
            basis: vec![],
            alpha: vec![],
            beta: vec![],
            deflate,
            next: None,
            exhausted: false,
        };
        s.orthogonalize(&mut v);
        let nv = norm2(&v);
        if nv < 1e-10 {
            s.exhausted = true;
        } else {
            v.iter_mut().for_each(|x| *x /= nv);
            s.next = Some(v);
        }
        s
    }

    fn orthogonalize(&self, w: &mut [f64]) {
        for _ in 0..2 {
            for q in self.deflate.iter().chain(&self.basis) {
                let c = dot(q, w);
                axpy(-c, q, w);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// True once the Krylov space is invariant or the dimension is exhausted.
    pub fn exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn step<F: FnMut(&[f64], &mut [f64])>(&mut self, op: &mut F) {
        let Some(v) = self.next.take() else {
            self.exhausted = true;
            return;
        };
        let mut w = vec![0.0; self.n];
        op(&v, &mut w);
        if let (Some(prev), Some(&b)) = (self.basis.last(), self.beta.last()) {
            axpy(-b, prev, &mut w);
        }
        let a = dot(&v, &w);
        axpy(-a, &v, &mut w);
        self.basis.push(v);
        self.alpha.push(a);
        self.orthogonalize(&mut w);
        let b = norm2(&w);
        let scale = self.alpha.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        self.beta.push(b);
        if b <= 1e-12 * scale || self.basis.len() + self.deflate.len() >= self.n {
            self.exhausted = true;
        } else {
            w.iter_mut().for_each(|x| *x /= b);
            self.next = Some(w);
        }
    }

    pub fn ritz(&self) -> Vec<RitzPair> {
        let m = self.basis.len();
        if m == 0 {
            return vec![];
        }
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = self.alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = self.beta[i];
                t[(i + 1, i)] = self.beta[i];
            }
        }
        let (vals, vecs) = sym_eigen(t);
        let bm = if self.exhausted { 0.0 } else { self.beta[m - 1] };
        vals.iter()
            .enumerate()
            .map(|(k, &value)| {
                let coeffs: Vec<f64> = vecs.column(k).iter().copied().collect();
                RitzPair {
                    value,
                    residual: (bm * coeffs[m - 1]).abs(),
                    coeffs,
                }
            })
            .collect()
    }

    pub fn vector(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (c, q) in coeffs.iter().zip(&self.basis) {
            axpy(*c, q, &mut x);
        }
        let nx = norm2(&x);
        if nx > 0.0 {
            x.iter_mut().for_each(|v| *v /= nx);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SymCsr {
        let mut t = vec![];
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SymCsr::from_triplets(n, t)
    }

    fn random_banded(n: usize, b: usize, seed: u64) -> SymCsr {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = vec![];
        for i in 0..n {
            t.push((i, i, rng.random::<f64>() * 4.0 - 2.0));
            for j in i + 1..(i + b + 1).min(n) {
                if rng.random::<f64>() < 0.6 {
                    let v = rng.random::<f64>() - 0.5;
                    t.push((i, j, v));
                    t.push((j, i, v));
                }
            }
        }
        SymCsr::from_triplets(n, t)
    }

    #[test]
    fn band_lu_matches_dense_solve() {
        for seed in 0..5 {
            let m = random_banded(40, 3, seed);
            let lu = BandLu::factor(&m, 0.3).unwrap();
            let mut b: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
            let rhs = b.clone();
            lu.solve(&mut b);
            let dense = m.to_dense() - DMatrix::identity(40, 40) * 0.3;
            let x = dense.lu().solve(&nalgebra::DVector::from_vec(rhs)).unwrap();
            for i in 0..40 {
                assert!((x[i] - b[i]).abs() < 1e-9 * (1.0 + x[i].abs()));
            }
        }
    }

    #[test]
    fn inertia_matches_dense_eigenvalues() {
        for seed in 0..5 {
            let m = random_banded(30, 2, seed + 10);
            let ev = sym_eigenvalues(m.to_dense());
            for sigma in [-1.5, -0.2, 0.0, 0.7, 1.9] {
                let expected = ev.iter().filter(|&&e| e < sigma).count();
                assert_eq!(count_below(&m, sigma), expected, "seed {seed} sigma {sigma}");
            }
        }
    }

    #[test]
    fn lanczos_finds_extremes() {
        let m = laplacian_1d(50);
        let mut lz = Lanczos::new(50, vec![], 1);
        let mut op = |x: &[f64], y: &mut [f64]| m.matvec(x, y);
        while !lz.exhausted() {
            lz.step(&mut op);
        }
        let r = lz.ritz();
        let exact_min = 2.0 - 2.0 * (std::f64::consts::PI / 51.0).cos();
        assert!((r[0].value - exact_min).abs() < 1e-10);
    }

    #[test]
    fn triplet_export_roundtrip_header() {
        let m = laplacian_1d(3);
        let txt = m.to_triplet_text();
        assert!(txt.lines().nth(1).unwrap() == "3 3 7");
        assert!(m.is_symmetric(0.0));
        assert_eq!(m.bandwidth(), 1);
    }

    #[test]
    fn minres_matches_band_lu() {
        let m = laplacian_1d(40);
        let b: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let (x, _) = minres(&m, 1.3, &b, 1e-13, 400).unwrap();
        let lu = BandLu::factor(&m, 1.3).unwrap();
        let mut y = b.clone();
        lu.solve(&mut y);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-8 * norm2(&y));
        }
    }
}
