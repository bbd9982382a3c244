//! Finite-difference assembly of finite-volume operators
//! `H = −Δ_Λ + V_per + U + Σ_ζ ω_ζ u(· − ζ)` on a uniform grid.
//!
//! Grid points are the points of `hZ^d` inside the box, so lattice sites
//! always sit on grid nodes and nested boxes share nodes. Discrete norms carry
//! the weight `h^d`; the matrix itself is symmetric in both the plain and the
//! weighted inner product since the weight is uniform.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{sym_eigenvalues, SymCsr};
use crate::model::{AnnulusSpec, BoxSpec, Configuration, SiteProfile, GEOM_EPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Dirichlet,
    Periodic,
}

/// Mesh `h = 1 / points_per_unit`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub points_per_unit: u32,
    #[serde(default)]
    pub boundary: Boundary,
}

impl GridSpec {
    pub fn dirichlet(points_per_unit: u32) -> Self {
        Self {
            points_per_unit,
            boundary: Boundary::Dirichlet,
        }
    }

    pub fn periodic(points_per_unit: u32) -> Self {
        Self {
            points_per_unit,
            boundary: Boundary::Periodic,
        }
    }

    pub fn mesh(&self) -> f64 {
        1.0 / self.points_per_unit as f64
    }
}

fn near_integer(x: f64) -> Option<i64> {
    let r = x.round();
    ((x - r).abs() < 1e-9).then_some(r as i64)
}

/// Tensor grid over a box. Flat indices are lexicographic, last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub region: BoxSpec,
    pub spec: GridSpec,
    /// Integer node indices `k` (coordinate `k·h`) along each axis.
    axes: Vec<Vec<i64>>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    pub fn new(region: &BoxSpec, spec: GridSpec) -> Result<Self> {
        if spec.points_per_unit < 2 {
            return Err(Error::Grid("need at least 2 points per lattice unit".into()));
        }
        let n = spec.points_per_unit as f64;
        let half = region.side / 2.0;
        let mut axes = Vec::with_capacity(region.dim());
        for &c in &region.center {
            let axis: Vec<i64> = match spec.boundary {
                Boundary::Dirichlet => {
                    let lo = ((c - half) * n + 1e-9).floor() as i64;
                    let hi = ((c + half) * n - 1e-9).ceil() as i64;
                    (lo..=hi)
                        .filter(|&k| ((k as f64) / n - c).abs() < half - GEOM_EPS)
                        .collect()
                }
                Boundary::Periodic => {
                    let lo = near_integer((c - half) * n).ok_or_else(|| {
                        Error::Grid("periodic box corner is not a grid node".into())
                    })?;
                    let count = near_integer(region.side * n)
                        .ok_or_else(|| Error::Grid("periodic side is not a whole number of cells".into()))?;
                    (lo..lo + count).collect()
                }
            };
            if axis.is_empty() {
                return Err(Error::Grid("box contains no grid nodes".into()));
            }
            axes.push(axis);
        }
        let d = axes.len();
        let mut strides = vec![1usize; d];
        for a in (0..d.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * axes[a + 1].len();
        }
        let len = axes.iter().map(Vec::len).product();
        Ok(Self {
            region: region.clone(),
            spec,
            axes,
            strides,
            len,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn mesh(&self) -> f64 {
        self.spec.mesh()
    }

    /// `h^d`, the quadrature weight of one node.
    pub fn weight(&self) -> f64 {
        self.mesh().powi(self.dim() as i32)
    }

    pub fn axis_len(&self, a: usize) -> usize {
        self.axes[a].len()
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        self.strides.iter().zip(&self.axes).map(|(s, ax)| (idx / s) % ax.len()).collect()
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(m, s)| m * s).sum()
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let h = self.mesh();
        self.multi_index(idx)
            .iter()
            .zip(&self.axes)
            .map(|(&m, ax)| ax[m] as f64 * h)
            .collect()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len).map(|i| self.point(i))
    }

    /// Displacement `y − x` taking the torus into account for periodic grids.
    pub fn displacement(&self, y: &[f64], x: &[f64]) -> Vec<f64> {
        let periodic = self.spec.boundary == Boundary::Periodic;
        let l = self.region.side;
        y.iter()
            .zip(x)
            .map(|(a, b)| {
                let mut r = a - b;
                if periodic {
                    r -= l * (r / l).round();
                }
                r
            })
            .collect()
    }

    /// Mask of nodes inside `region` (open-set semantics).
    pub fn mask(&self, region: &Region) -> Vec<bool> {
        self.points().map(|p| region.contains(&p)).collect()
    }
}

/// Norm-tagged regions: boxes and annuli use the sup norm, balls the
/// Euclidean norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Box(BoxSpec),
    Annulus(AnnulusSpec),
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    /// `Λ_1(x)`.
    pub fn unit_box(x: &[f64]) -> Self {
        Region::Box(BoxSpec {
            center: x.to_vec(),
            side: 1.0,
        })
    }

    /// The annulus `Λ_{2L+1, L−1}(x)` carried by `χ_{x,L}`.
    pub fn w_annulus(x: &[f64], l: f64) -> Self {
        Region::Annulus(AnnulusSpec {
            center: x.to_vec(),
            inner: l - 1.0,
            outer: 2.0 * l + 1.0,
        })
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            Region::Box(b) => b.contains(y),
            Region::Annulus(a) => {
                if a.inner <= 0.0 {
                    // degenerate inner box: only the outer constraint remains
                    BoxSpec {
                        center: a.center.clone(),
                        side: a.outer,
                    }
                    .contains(y)
                } else {
                    a.contains(y)
                }
            }
            Region::Ball { center, radius } => {
                let r2: f64 = y.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                r2.sqrt() < radius - GEOM_EPS
            }
        }
    }
}

/// Diagonal 0/1 operator selecting the nodes of a region.
#[derive(Clone, Debug, PartialEq)]
pub struct Indicator {
    pub mask: Vec<bool>,
    /// Set when the region misses every node.
    pub empty_warning: bool,
}

impl Indicator {
    pub fn indices(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.mask)
            .map(|(x, &m)| if m { *x } else { 0.0 })
            .collect()
    }
}

pub fn indicator_operator(grid: &Grid, region: &Region) -> Indicator {
    let mask = grid.mask(region);
    let empty_warning = !mask.iter().any(|&m| m);
    Indicator {
        mask,
        empty_warning,
    }
}

/// `V_per`, periodic with respect to `period·Z^d`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PeriodicPotential {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude · Σ_i cos(2π x_i / period)`.
    Cosine {
        amplitude: f64,
        period: u32,
    },
}

impl PeriodicPotential {
    pub fn period(&self) -> u32 {
        match self {
            Self::Cosine { period, .. } => *period,
            _ => 1,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { value } => *value,
            Self::Cosine { amplitude, period } => {
                let q = *period as f64;
                amplitude * x.iter().map(|&xi| (2.0 * PI * xi / q).cos()).sum::<f64>()
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { value } => value.abs(),
            Self::Cosine { amplitude, .. } => amplitude.abs(),
        }
    }
}

/// Bounded background potential `U` with values in `[0, U_plus]`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackgroundPotential {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Gaussian {
        center: Vec<f64>,
        width: f64,
        height: f64,
    },
}

impl BackgroundPotential {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { value } => *value,
            Self::Gaussian {
                center,
                width,
                height,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                height * (-r2 / (2.0 * width * width)).exp()
            }
        }
    }
}

fn default_u_plus() -> f64 {
    f64::INFINITY
}

/// Everything about a finite-volume operator except the box and couplings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub grid: GridSpec,
    #[serde(default)]
    pub v_per: PeriodicPotential,
    #[serde(default)]
    pub background: BackgroundPotential,
    /// `U_+`; the background must stay within `[0, U_+]`.
    #[serde(default = "default_u_plus")]
    pub u_plus_bound: f64,
    pub profile: SiteProfile,
    /// Subtract the bottom of the spectrum of `−Δ + V_per`.
    #[serde(default)]
    pub auto_shift: bool,
}

impl ModelSpec {
    pub fn new(grid: GridSpec, profile: SiteProfile) -> Self {
        Self {
            grid,
            v_per: PeriodicPotential::Zero,
            background: BackgroundPotential::Zero,
            u_plus_bound: f64::INFINITY,
            profile,
            auto_shift: false,
        }
    }

    /// Bottom of the spectrum of the periodic operator `−Δ + V_per` on one
    /// period cell with periodic boundary conditions (the `k = 0` Bloch
    /// ground state), on this mesh.
    pub fn periodic_ground_energy(&self, dim: usize) -> Result<f64> {
        let q = self.v_per.period() as f64;
        let cell = BoxSpec {
            center: vec![q / 2.0; dim],
            side: q,
        };
        let grid = Grid::new(&cell, GridSpec::periodic(self.grid.points_per_unit))?;
        let pot: Vec<f64> = grid.points().map(|p| self.v_per.value(&p)).collect();
        let m = laplacian_plus(&grid, &pot);
        Ok(sym_eigenvalues(m.to_dense())[0])
    }
}

/// Assembled finite-volume operator.
#[derive(Clone, Debug)]
pub struct HamiltonianMatrix {
    pub matrix: SymCsr,
    pub grid: Grid,
    /// Total multiplicative potential at each node.
    pub potential: Vec<f64>,
    pub digest: String,
}

impl HamiltonianMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn weight(&self) -> f64 {
        self.grid.weight()
    }

    /// `H + c·I`.
    pub fn shifted(&self, c: f64) -> Self {
        let potential: Vec<f64> = self.potential.iter().map(|v| v + c).collect();
        let matrix = self.matrix.shifted(c);
        let digest = digest_of(&self.grid, &potential);
        Self {
            matrix,
            grid: self.grid.clone(),
            potential,
            digest,
        }
    }

    pub fn to_triplet_text(&self) -> String {
        self.matrix.to_triplet_text()
    }
}

fn laplacian_plus(grid: &Grid, potential: &[f64]) -> SymCsr {
    let h2 = grid.mesh() * grid.mesh();
    let d = grid.dim();
    let periodic = grid.spec.boundary == Boundary::Periodic;
    let mut trips = Vec::with_capacity(grid.len() * (2 * d + 1));
    for idx in 0..grid.len() {
        trips.push((idx, idx, 2.0 * d as f64 / h2 + potential[idx]));
        let mi = grid.multi_index(idx);
        for a in 0..d {
            let len = grid.axis_len(a);
            let mut nb = mi.clone();
            if mi[a] + 1 < len {
                nb[a] = mi[a] + 1;
            } else if periodic && len > 2 {
                nb[a] = 0;
            } else if periodic && len == 2 && mi[a] == 1 {
                nb[a] = 0;
            } else {
                continue;
            }
            let j = grid.flat_index(&nb);
            trips.push((idx, j, -1.0 / h2));
            trips.push((j, idx, -1.0 / h2));
        }
    }
    SymCsr::from_triplets(grid.len(), trips)
}

fn digest_of(grid: &Grid, potential: &[f64]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("{:?}|{:?}", grid.region, grid.spec).as_bytes());
    for v in potential {
        hasher.update(v.to_bits().to_le_bytes());
    }
    let out = hasher.finalize();
    out.iter().take(12).map(|b| format!("{b:02x}")).collect()
}

/// Potential `V_per + U + Σ_ζ c_ζ u(· − ζ)` sampled at the grid nodes.
pub fn potential_on_grid(grid: &Grid, model: &ModelSpec, config: &Configuration) -> Result<Vec<f64>> {
    model.profile.validate()?;
    let shift = if model.auto_shift {
        model.periodic_ground_energy(grid.dim())?
    } else {
        0.0
    };
    let mut pot = Vec::with_capacity(grid.len());
    for p in grid.points() {
        let u = model.background.value(&p);
        if !(u >= -1e-12 && u <= model.u_plus_bound + 1e-12) {
            return Err(Error::Potential(format!(
                "background U = {u} at {p:?} outside [0, {}]",
                model.u_plus_bound
            )));
        }
        pot.push(model.v_per.value(&p) - shift + u);
    }
    let reach = model.profile.reach();
    let h = grid.mesh();
    for (site, c) in config.couplings() {
        if c == 0.0 {
            continue;
        }
        let zeta: Vec<f64> = site.iter().map(|&k| k as f64).collect();
        if grid.spec.boundary == Boundary::Periodic {
            for (idx, p) in grid.points().enumerate() {
                let off = grid.displacement(&p, &zeta);
                pot[idx] += c * model.profile.value(&off);
            }
            continue;
        }
        // Dirichlet: visit only the nodes within reach of ζ
        let d = grid.dim();
        let mut ranges = Vec::with_capacity(d);
        for a in 0..d {
            let axis = &grid.axes[a];
            let first = axis[0];
            let lo = ((zeta[a] - reach) / h).floor() as i64 - first;
            let hi = ((zeta[a] + reach) / h).ceil() as i64 - first;
            let lo = lo.max(0) as usize;
            let hi = hi.min(axis.len() as i64 - 1);
            if hi < lo as i64 {
                ranges.clear();
                break;
            }
            ranges.push((lo, hi as usize));
        }
        if ranges.len() != d {
            continue;
        }
        let mut cur: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        'walk: loop {
            let idx = grid.flat_index(&cur);
            let p = grid.point(idx);
            let off: Vec<f64> = p.iter().zip(&zeta).map(|(a, b)| a - b).collect();
            pot[idx] += c * model.profile.value(&off);
            for a in (0..d).rev() {
                if cur[a] < ranges[a].1 {
                    cur[a] += 1;
                    for (b, r) in ranges.iter().enumerate().skip(a + 1) {
                        cur[b] = r.0;
                    }
                    continue 'walk;
                }
            }
            break;
        }
    }
    Ok(pot)
}

/// Assembles `H_{ω,t_S,Λ}` on the box.
pub fn assemble_hamiltonian(
    region: &BoxSpec,
    model: &ModelSpec,
    config: &Configuration,
) -> Result<HamiltonianMatrix> {
    if config.region.dim() != region.dim() || !config.region.is_inside(region) {
        return Err(Error::RegionMismatch(format!(
            "configuration region {:?} is not inside {:?}",
            config.region, region
        )));
    }
    let grid = Grid::new(region, model.grid)?;
    if model.grid.boundary == Boundary::Periodic {
        let q = model.v_per.period() as f64;
        if near_integer(region.side / q).is_none() {
            return Err(Error::Grid(format!(
                "periodic box side {} is not a multiple of the period {q}",
                region.side
            )));
        }
    }
    let potential = potential_on_grid(&grid, model, config)?;
    Ok(from_potential(grid, potential))
}

/// `−Δ + diag(potential)` on a prepared grid.
pub fn from_potential(grid: Grid, potential: Vec<f64>) -> HamiltonianMatrix {
    let matrix = laplacian_plus(&grid, &potential);
    let digest = digest_of(&grid, &potential);
    HamiltonianMatrix {
        matrix,
        grid,
        potential,
        digest,
    }
}

/// The free operator `−Δ_Λ` (plus `V_per + U` if requested) with no couplings.
pub fn assemble_free(region: &BoxSpec, model: &ModelSpec) -> Result<HamiltonianMatrix> {
    let config = Configuration::constant(region, 0.0);
    assemble_hamiltonian(region, model, &config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigenvalues;
    use crate::model::lattice_sites;

    fn free_model(n: u32) -> ModelSpec {
        ModelSpec::new(GridSpec::dirichlet(n), SiteProfile::indicator(1.0, 1.0))
    }

    #[test]
    fn tridiagonal_example() {
        let b = BoxSpec::centered(1, 2.0);
        let h = assemble_free(&b, &free_model(2)).unwrap();
        assert_eq!(h.dim(), 3);
        let m = h.matrix.to_dense();
        assert_eq!(m[(0, 0)], 8.0);
        assert_eq!(m[(0, 1)], -4.0);
        let ev = sym_eigenvalues(m);
        for (k, e) in ev.iter().enumerate() {
            let exact = 8.0 * (1.0 - ((k + 1) as f64 * PI / 4.0).cos());
            assert!((e - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coupling_equals_free() {
        let b = BoxSpec::centered(2, 4.0);
        let m = free_model(2);
        let c = Configuration::constant(&b, 0.0);
        let h = assemble_hamiltonian(&b, &m, &c).unwrap();
        let h0 = assemble_free(&b, &m).unwrap();
        assert_eq!(h.matrix, h0.matrix);
    }

    #[test]
    fn free_site_substitution() {
        let b = BoxSpec::centered(1, 6.0);
        let m = free_model(4);
        let base = Configuration::constant(&b, 0.3);
        let s = vec![vec![0], vec![1]];
        let with_free = base.with_free_sites(&s).unwrap().with_free_values(&[1.0, 1.0]).unwrap();
        let mut direct = base.clone();
        for (site, v) in direct.sites.iter().zip(direct.values.iter_mut()) {
            if s.contains(site) {
                *v = 1.0;
            }
        }
        let a = assemble_hamiltonian(&b, &m, &with_free).unwrap();
        let c = assemble_hamiltonian(&b, &m, &direct).unwrap();
        assert_eq!(a.matrix, c.matrix);
    }

    #[test]
    fn indicator_annulus_scan() {
        let b = BoxSpec::centered(1, 20.0);
        let grid = Grid::new(&b, GridSpec::dirichlet(4)).unwrap();
        let ind = indicator_operator(&grid, &Region::w_annulus(&[0.0], 4.0));
        for (p, m) in grid.points().zip(&ind.mask) {
            let r = p[0].abs();
            assert_eq!(*m, r > 1.5 && r < 4.5, "at {}", p[0]);
        }
        let whole = indicator_operator(&grid, &Region::Box(b.clone()));
        assert!(whole.mask.iter().all(|&m| m));
        let far = indicator_operator(&grid, &Region::unit_box(&[30.0]));
        assert!(far.empty_warning && far.count() == 0);
    }

    #[test]
    fn region_mismatch_and_range_errors() {
        let b = BoxSpec::centered(1, 4.0);
        let big = Configuration::constant(&BoxSpec::centered(1, 10.0), 0.0);
        assert!(matches!(
            assemble_hamiltonian(&b, &free_model(2), &big),
            Err(Error::RegionMismatch(_))
        ));
        let mut m = free_model(2);
        m.background = BackgroundPotential::Constant { value: 2.0 };
        m.u_plus_bound = 1.0;
        assert!(matches!(
            assemble_free(&b, &m),
            Err(Error::Potential(_))
        ));
        let mut p = free_model(2);
        p.grid.boundary = Boundary::Periodic;
        p.v_per = PeriodicPotential::Cosine {
            amplitude: 1.0,
            period: 3,
        };
        assert!(matches!(assemble_free(&BoxSpec::centered(1, 4.0), &p), Err(Error::Grid(_))));
    }

    #[test]
    fn sites_sit_on_nodes() {
        let b = BoxSpec::new(vec![0.5, -0.5], 5.0).unwrap();
        let grid = Grid::new(&b, GridSpec::dirichlet(4)).unwrap();
        let pts: Vec<Vec<f64>> = grid.points().collect();
        for s in lattice_sites(&b) {
            let p: Vec<f64> = s.iter().map(|&k| k as f64).collect();
            assert!(pts.contains(&p));
        }
    }

    #[test]
    fn coupling_raises_potential_on_unit_box() {
        let b = BoxSpec::centered(1, 4.0);
        let m = free_model(4);
        let mut c = Configuration::constant(&b, 0.0);
        c.values[1] = 1.0; // site 0
        let h = assemble_hamiltonian(&b, &m, &c).unwrap();
        for (p, v) in h.grid.points().zip(&h.potential) {
            let expect = if p[0].abs() < 0.5 { 1.0 } else { 0.0 };
            assert_eq!(*v, expect);
        }
    }

    #[test]
    fn periodic_auto_shift_removes_ground_energy() {
        let mut m = ModelSpec::new(GridSpec::periodic(4), SiteProfile::indicator(1.0, 1.0));
        m.v_per = PeriodicPotential::Cosine {
            amplitude: 0.8,
            period: 2,
        };
        let e0 = m.periodic_ground_energy(1).unwrap();
        assert!(e0 < 0.0);
        m.auto_shift = true;
        let h = assemble_free(&BoxSpec::new(vec![0.0], 8.0).unwrap(), &m).unwrap();
        let ev = sym_eigenvalues(h.matrix.to_dense());
        assert!(ev[0].abs() < 1e-9);
    }
}
