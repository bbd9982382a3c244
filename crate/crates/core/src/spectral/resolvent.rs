use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::discretization::HamiltonianMatrix;
use crate::error::{Error, Result};
use crate::linalg::{norm2, Lanczos, ShiftedSolver};

use super::operator_norm;

/// Blocks whose smaller side has at most this many nodes are formed explicitly.
pub const EXPLICIT_BLOCK_LIMIT: usize = 256;
pub const POWER_TOL: f64 = 1e-6;
pub const POWER_MAX_ITER: usize = 200;
pub const GAP_TOL_FACTOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProbeStatus {
    Ok,
    Divergent,
    NoConvergence,
}

impl ProbeStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Ok => "OK",
            Self::Divergent => "DIVERGENT",
            Self::NoConvergence => "NO_CONVERGENCE",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolventProbe {
    pub energy: f64,
    pub source: String,
    pub target: String,
    /// `+∞` when divergent.
    pub norm: f64,
    pub status: ProbeStatus,
    pub iterations: usize,
    pub residual: f64,
}

impl ResolventProbe {
    pub fn csv_header() -> [&'static str; 7] {
        ["E", "x", "y", "norm", "status", "iterations", "residual"]
    }

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            format!("{}", self.energy),
            self.source.clone(),
            self.target.clone(),
            format!("{}", self.norm),
            self.status.as_str().to_string(),
            self.iterations.to_string(),
            format!("{:e}", self.residual),
        ]
    }
}

/// Block norm result without labels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockNorm {
    pub norm: f64,
    pub status: ProbeStatus,
    pub iterations: usize,
    pub residual: f64,
}

/// Factorization of `H − E` shared by many probes at one energy.
pub struct ResolventContext<'a> {
    h: &'a HamiltonianMatrix,
    energy: f64,
    solver: Option<ShiftedSolver>,
    gap_tol: f64,
    full: OnceLock<(f64, ProbeStatus)>,
}

impl<'a> ResolventContext<'a> {
    pub fn new(h: &'a HamiltonianMatrix, energy: f64) -> Result<Self> {
        let solver = match ShiftedSolver::new(&h.matrix, energy) {
            Ok(s) => Some(s),
            Err(Error::Singular(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            h,
            energy,
            solver,
            gap_tol: GAP_TOL_FACTOR * h.matrix.inf_norm().max(energy.abs()),
            full: OnceLock::new(),
        })
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn hamiltonian(&self) -> &HamiltonianMatrix {
        self.h
    }

    fn solve(&self, b: &mut [f64]) -> Result<usize> {
        match &self.solver {
            Some(s) => s.solve(b),
            None => Err(Error::Singular(0)),
        }
    }

    fn solve_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut r = vec![0.0; x.len()];
        self.h.matrix.matvec(x, &mut r);
        for i in 0..r.len() {
            r[i] -= self.energy * x[i] + b[i];
        }
        norm2(&r) / norm2(b).max(f64::MIN_POSITIVE)
    }

    /// `‖R(E)‖ = 1/dist(E, σ(H))` and whether `E` is within `gap_tol` of the
    /// spectrum.
    pub fn full_norm(&self) -> (f64, ProbeStatus) {
        *self.full.get_or_init(|| self.compute_full_norm())
    }

    fn compute_full_norm(&self) -> (f64, ProbeStatus) {
        if self.solver.is_none() {
            return (f64::INFINITY, ProbeStatus::Divergent);
        }
        let n = self.h.dim();
        let mut failed = false;
        let mut op = |x: &[f64], y: &mut [f64]| {
            y.copy_from_slice(x);
            if self.solve(y).is_err() {
                failed = true;
            }
        };
        let mut lz = Lanczos::new(n, vec![], 0xfeed);
        let mut best = 0.0;
        while !lz.exhausted() && lz.len() < n.min(300) {
            lz.step(&mut op);
            if lz.len() % 5 != 0 && !lz.exhausted() {
                continue;
            }
            let ritz = lz.ritz();
            let top = ritz
                .iter()
                .max_by(|a, b| a.value.abs().total_cmp(&b.value.abs()))
                .expect("nonempty");
            best = top.value.abs();
            if top.residual <= 1e-9 * best || lz.exhausted() {
                break;
            }
        }
        if failed || !best.is_finite() {
            return (f64::INFINITY, ProbeStatus::Divergent);
        }
        if 1.0 / best < self.gap_tol {
            (f64::INFINITY, ProbeStatus::Divergent)
        } else {
            (best, ProbeStatus::Ok)
        }
    }

    pub fn is_divergent(&self) -> bool {
        self.full_norm().1 == ProbeStatus::Divergent
    }

    /// Columns `R e_j` for the given node indices.
    pub fn columns(&self, idx: &[usize]) -> Result<Vec<Vec<f64>>> {
        let n = self.h.dim();
        idx.iter()
            .map(|&j| {
                let mut b = vec![0.0; n];
                b[j] = 1.0;
                self.solve(&mut b)?;
                Ok(b)
            })
            .collect()
    }

    /// `‖1_T R 1_S‖` given precomputed columns for the source nodes.
    pub fn block_norm_from_columns(cols: &[Vec<f64>], target: &[usize]) -> f64 {
        let m = DMatrix::from_fn(target.len(), cols.len(), |i, j| cols[j][target[i]]);
        operator_norm(&m)
    }

    /// `‖1_T (H − E)⁻¹ 1_S‖` for node index sets `S` (source), `T` (target).
    pub fn block_norm(&self, source: &[usize], target: &[usize]) -> Result<BlockNorm> {
        if source.is_empty() || target.is_empty() {
            return Err(Error::InvalidArgument("empty probe region".into()));
        }
        if self.is_divergent() {
            return Ok(BlockNorm {
                norm: f64::INFINITY,
                status: ProbeStatus::Divergent,
                iterations: 0,
                residual: 0.0,
            });
        }
        // R is symmetric, so the block and its transpose share the norm
        let (small, large) = if source.len() <= target.len() {
            (source, target)
        } else {
            (target, source)
        };
        if small.len() <= EXPLICIT_BLOCK_LIMIT {
            let n = self.h.dim();
            let mut residual: f64 = 0.0;
            let mut iterations = 0;
            let mut cols = Vec::with_capacity(small.len());
            for &j in small {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                let mut x = e.clone();
                iterations += self.solve(&mut x)?.max(1);
                residual = residual.max(self.solve_residual(&x, &e));
                cols.push(x);
            }
            return Ok(BlockNorm {
                norm: Self::block_norm_from_columns(&cols, large),
                status: ProbeStatus::Ok,
                iterations,
                residual,
            });
        }
        self.power_block_norm(source, target)
    }

    /// Lanczos on the block-normal operator `1_S R 1_T R 1_S` restricted to
    /// the source nodes; its top Ritz value is the squared block norm.
    fn power_block_norm(&self, source: &[usize], target: &[usize]) -> Result<BlockNorm> {
        let n = self.h.dim();
        let err = std::cell::RefCell::new(None);
        let mut op = |x: &[f64], out: &mut [f64]| {
            let mut y = vec![0.0; n];
            for (k, &j) in source.iter().enumerate() {
                y[j] = x[k];
            }
            if let Err(e) = self.solve(&mut y) {
                *err.borrow_mut() = Some(e);
                return;
            }
            let mut z = vec![0.0; n];
            for &i in target {
                z[i] = y[i];
            }
            if let Err(e) = self.solve(&mut z) {
                *err.borrow_mut() = Some(e);
                return;
            }
            for (k, &j) in source.iter().enumerate() {
                out[k] = z[j];
            }
        };
        let mut lz = Lanczos::new(source.len(), vec![], 0xb10c);
        let mut sigma2 = 0.0;
        let mut rel = f64::INFINITY;
        while !lz.exhausted() && lz.len() < POWER_MAX_ITER {
            lz.step(&mut op);
            if let Some(e) = err.borrow_mut().take() {
                return Err(e);
            }
            let ritz = lz.ritz();
            let top = ritz.last().expect("nonempty");
            let prev = sigma2;
            sigma2 = top.value.max(0.0);
            rel = if sigma2 > 0.0 { top.residual / sigma2 } else { 0.0 };
            if (rel < 1e-10 && (sigma2 - prev).abs() <= POWER_TOL * 1e-3 * sigma2) || lz.exhausted() || sigma2 == 0.0 {
                return Ok(BlockNorm {
                    norm: sigma2.sqrt(),
                    status: ProbeStatus::Ok,
                    iterations: lz.len(),
                    residual: rel,
                });
            }
        }
        Ok(BlockNorm {
            norm: sigma2.sqrt(),
            status: if rel < POWER_TOL { ProbeStatus::Ok } else { ProbeStatus::NoConvergence },
            iterations: lz.len(),
            residual: rel,
        })
    }
}

/// One-shot probe `‖χ_target (H − E)⁻¹ χ_source‖`.
pub fn resolvent_block_norm(
    h: &HamiltonianMatrix,
    energy: f64,
    source: &[usize],
    target: &[usize],
) -> Result<ResolventProbe> {
    let ctx = ResolventContext::new(h, energy)?;
    let b = ctx.block_norm(source, target)?;
    Ok(ResolventProbe {
        energy,
        source: format!("{} nodes", source.len()),
        target: format!("{} nodes", target.len()),
        norm: b.norm,
        status: b.status,
        iterations: b.iterations,
        residual: b.residual,
    })
}
