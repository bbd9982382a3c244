//! Probabilistic model: single-site laws, single-site potential profiles,
//! boxes and annuli, and reproducible lattice configurations.
//!
//! Site values are a pure function of `(root_seed, trial, site coordinates)`,
//! so a configuration sampled on a large box restricts exactly to the
//! configuration sampled on any sub-box with the same seeds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary slack for open-set membership tests, in lattice units.
pub const GEOM_EPS: f64 = 1e-9;

/// A point of the integer lattice.
pub type Site = Vec<i64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SingleSiteDistribution {
    /// Value 1 with probability `q`, value 0 otherwise.
    Bernoulli { q: f64 },
    Uniform01,
    /// Finitely many `(value, weight)` atoms.
    Atoms { atoms: Vec<(f64, f64)> },
    /// Convex combination `(weight, law)`.
    Mixture {
        components: Vec<(f64, SingleSiteDistribution)>,
    },
}

impl SingleSiteDistribution {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Bernoulli { q } => {
                if !(0.0..=1.0).contains(q) {
                    return Err(Error::Distribution(format!("bernoulli q={q} outside [0,1]")));
                }
            }
            Self::Uniform01 => {}
            Self::Atoms { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::Distribution("no atoms".into()));
                }
                for &(v, w) in atoms {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::Distribution(format!(
                            "atom at {v} outside the support interval [0,1]"
                        )));
                    }
                    if !(w >= 0.0) {
                        return Err(Error::Distribution(format!("negative weight {w}")));
                    }
                }
                check_total(atoms.iter().map(|a| a.1))?;
            }
            Self::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::Distribution("empty mixture".into()));
                }
                for (w, c) in components {
                    if !(*w >= 0.0) {
                        return Err(Error::Distribution(format!("negative weight {w}")));
                    }
                    c.validate()?;
                }
                check_total(components.iter().map(|c| c.0))?;
            }
        }
        Ok(())
    }

    /// Atoms with positive mass, or `None` when the law has a continuous part.
    fn atoms_with_mass(&self) -> Option<Vec<f64>> {
        match self {
            Self::Bernoulli { q } => {
                let mut v = Vec::new();
                if *q < 1.0 {
                    v.push(0.0);
                }
                if *q > 0.0 {
                    v.push(1.0);
                }
                Some(v)
            }
            Self::Uniform01 => None,
            Self::Atoms { atoms } => Some(
                atoms
                    .iter()
                    .filter(|a| a.1 > 0.0)
                    .map(|a| a.0)
                    .collect(),
            ),
            Self::Mixture { components } => {
                let mut out = Vec::new();
                for (w, c) in components {
                    if *w > 0.0 {
                        out.extend(c.atoms_with_mass()?);
                    }
                }
                Some(out)
            }
        }
    }

    /// True iff the support has at least two points.
    pub fn is_nondegenerate(&self) -> bool {
        match self.atoms_with_mass() {
            None => true,
            Some(mut pts) => {
                pts.sort_by(f64::total_cmp);
                pts.dedup();
                pts.len() >= 2
            }
        }
    }

    /// `{0,1} ⊆ supp μ ⊆ [0,1]`.
    pub fn is_normalized(&self) -> bool {
        if self.validate().is_err() {
            return false;
        }
        match self.atoms_with_mass() {
            None => {
                // continuous parts only come from Uniform01, whose support is [0,1]
                true
            }
            Some(pts) => pts.contains(&0.0) && pts.contains(&1.0),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Bernoulli { q } => *q,
            Self::Uniform01 => 0.5,
            Self::Atoms { atoms } => atoms.iter().map(|(v, w)| v * w).sum(),
            Self::Mixture { components } => components.iter().map(|(w, c)| w * c.mean()).sum(),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            Self::Bernoulli { q } => *q,
            Self::Uniform01 => 1.0 / 3.0,
            Self::Atoms { atoms } => atoms.iter().map(|(v, w)| v * v * w).sum(),
            Self::Mixture { components } => components
                .iter()
                .map(|(w, c)| w * c.second_moment())
                .sum(),
        }
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.second_moment() - m * m).max(0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Bernoulli { q } => {
                if rng.random::<f64>() < *q {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Uniform01 => rng.random::<f64>(),
            Self::Atoms { atoms } => {
                let idx = pick(rng.random::<f64>(), atoms.iter().map(|a| a.1));
                atoms[idx].0
            }
            Self::Mixture { components } => {
                let idx = pick(rng.random::<f64>(), components.iter().map(|c| c.0));
                components[idx].1.sample(rng)
            }
        }
    }
}

fn check_total(weights: impl Iterator<Item = f64>) -> Result<()> {
    let total: f64 = weights.sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Distribution(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

fn pick(u: f64, weights: impl Iterator<Item = f64>) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
        }
        acc += w;
        if u < acc && w > 0.0 {
            return i;
        }
    }
    last
}

/// μ(]−∞, t]).
pub fn distribution_cdf(dist: &SingleSiteDistribution, t: f64) -> f64 {
    match dist {
        SingleSiteDistribution::Bernoulli { q } => {
            if t < 0.0 {
                0.0
            } else if t < 1.0 {
                1.0 - q
            } else {
                1.0
            }
        }
        SingleSiteDistribution::Uniform01 => t.clamp(0.0, 1.0),
        SingleSiteDistribution::Atoms { atoms } => {
            atoms.iter().filter(|a| a.0 <= t).map(|a| a.1).sum()
        }
        SingleSiteDistribution::Mixture { components } => components
            .iter()
            .map(|(w, c)| w * distribution_cdf(c, t))
            .sum(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileShape {
    /// `u = u_plus · 1_{Λ_{δ+}(0)}`.
    #[default]
    Box,
    /// `u_plus` on `Λ_{δ−}(0)` and `u_minus` on the rest of `Λ_{δ+}(0)`.
    Stepped,
}

/// Single-site potential `u` with `u_minus·1_{Λ_{δ−}} ≤ u ≤ u_plus·1_{Λ_{δ+}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteProfile {
    pub u_minus: f64,
    pub delta_minus: f64,
    pub u_plus: f64,
    pub delta_plus: f64,
    #[serde(default)]
    pub shape: ProfileShape,
}

impl SiteProfile {
    /// The indicator-box profile `amplitude · 1_{Λ_δ(0)}`.
    pub fn indicator(amplitude: f64, delta: f64) -> Self {
        Self {
            u_minus: amplitude,
            delta_minus: delta,
            u_plus: amplitude,
            delta_plus: delta,
            shape: ProfileShape::Box,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_minus > 0.0 && self.u_minus <= self.u_plus) {
            return Err(Error::Profile(format!(
                "need 0 < u_minus <= u_plus, got {} and {}",
                self.u_minus, self.u_plus
            )));
        }
        if !(self.delta_minus > 0.0 && self.delta_minus <= self.delta_plus) {
            return Err(Error::Profile(format!(
                "need 0 < delta_minus <= delta_plus, got {} and {}",
                self.delta_minus, self.delta_plus
            )));
        }
        Ok(())
    }

    /// `u(offset)` where `offset = x − ζ`.
    pub fn value(&self, offset: &[f64]) -> f64 {
        let r = sup_norm(offset);
        match self.shape {
            ProfileShape::Box => {
                if r < self.delta_plus / 2.0 - GEOM_EPS {
                    self.u_plus
                } else {
                    0.0
                }
            }
            ProfileShape::Stepped => {
                if r < self.delta_minus / 2.0 - GEOM_EPS {
                    self.u_plus
                } else if r < self.delta_plus / 2.0 - GEOM_EPS {
                    self.u_minus
                } else {
                    0.0
                }
            }
        }
    }

    /// Radius (sup-norm) outside of which `u` vanishes.
    pub fn reach(&self) -> f64 {
        self.delta_plus / 2.0
    }
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Open box `Λ_L(x0) = x0 + ]−L/2, L/2[^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub center: Vec<f64>,
    pub side: f64,
}

impl BoxSpec {
    pub fn new(center: Vec<f64>, side: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::Geometry("dimension must be at least 1".into()));
        }
        if !(side > 0.0) {
            return Err(Error::Geometry(format!("box side {side} must be positive")));
        }
        Ok(Self { center, side })
    }

    pub fn centered(dim: usize, side: f64) -> Self {
        Self {
            center: vec![0.0; dim],
            side,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        let half = self.side / 2.0 - GEOM_EPS;
        y.iter().zip(&self.center).all(|(a, c)| (a - c).abs() < half)
    }

    /// `self ⊆ other` for open boxes.
    pub fn is_inside(&self, other: &BoxSpec) -> bool {
        self.center.iter().zip(&other.center).all(|(a, b)| {
            (a - b).abs() + self.side / 2.0 <= other.side / 2.0 + GEOM_EPS
        })
    }

    pub fn lattice_sites(&self) -> Vec<Site> {
        lattice_sites(self)
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }
}

/// Integer points strictly inside the open box, in lexicographic order.
pub fn lattice_sites(b: &BoxSpec) -> Vec<Site> {
    let half = b.side / 2.0;
    let ranges: Vec<(i64, i64)> = b
        .center
        .iter()
        .map(|&c| {
            let lo = (c - half + GEOM_EPS).floor() as i64 + 1;
            let hi = (c + half - GEOM_EPS).ceil() as i64 - 1;
            (lo, hi)
        })
        .collect();
    let mut out = Vec::new();
    if ranges.iter().any(|(lo, hi)| lo > hi) {
        return out;
    }
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        let p: Vec<f64> = cur.iter().map(|&k| k as f64).collect();
        if b.contains(&p) {
            out.push(cur.clone());
        }
        let mut axis = cur.len();
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if cur[axis] < ranges[axis].1 {
                cur[axis] += 1;
                for a in axis + 1..cur.len() {
                    cur[a] = ranges[a].0;
                }
                break;
            }
        }
    }
}

/// Open annulus `{y : L1/2 < ‖y−x0‖∞ < L2/2}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusSpec {
    pub center: Vec<f64>,
    pub inner: f64,
    pub outer: f64,
}

impl AnnulusSpec {
    pub fn new(center: Vec<f64>, inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < outer) {
            return Err(Error::Geometry(format!(
                "annulus needs 0 < inner < outer, got {inner}, {outer}"
            )));
        }
        Ok(Self {
            center,
            inner,
            outer,
        })
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        let r = y
            .iter()
            .zip(&self.center)
            .fold(0.0f64, |m, (a, c)| m.max((a - c).abs()));
        r > self.inner / 2.0 + GEOM_EPS && r < self.outer / 2.0 - GEOM_EPS
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeSites {
    pub sites: Vec<Site>,
    pub t: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedProvenance {
    pub root: u64,
    pub trial: u64,
}

/// A realization of the couplings on the lattice sites of a box.
///
/// `sites` and `values` exclude free sites; free-site couplings live in
/// `free_sites.t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub region: BoxSpec,
    pub sites: Vec<Site>,
    pub values: Vec<f64>,
    pub free_sites: Option<FreeSites>,
    pub seed: SeedProvenance,
    #[serde(default)]
    pub degenerate_warning: bool,
}

impl Configuration {
    /// A configuration with every coupling equal to `value`.
    pub fn constant(region: &BoxSpec, value: f64) -> Self {
        let sites = lattice_sites(region);
        let values = vec![value; sites.len()];
        Self {
            region: region.clone(),
            sites,
            values,
            free_sites: None,
            seed: SeedProvenance { root: 0, trial: 0 },
            degenerate_warning: true,
        }
    }

    /// All `(site, coupling)` pairs, free sites included with their `t` values.
    pub fn couplings(&self) -> impl Iterator<Item = (&Site, f64)> + '_ {
        let fixed = self.sites.iter().zip(self.values.iter().copied());
        let free = self
            .free_sites
            .iter()
            .flat_map(|f| f.sites.iter().zip(f.t.iter().copied()));
        fixed.chain(free)
    }

    pub fn coupling(&self, site: &[i64]) -> Option<f64> {
        self.couplings().find(|(s, _)| s.as_slice() == site).map(|c| c.1)
    }

    /// Same ω with the free-site couplings replaced by `t`.
    pub fn with_free_values(&self, t: &[f64]) -> Result<Self> {
        let Some(free) = &self.free_sites else {
            if t.is_empty() {
                return Ok(self.clone());
            }
            return Err(Error::InvalidArgument("configuration has no free sites".into()));
        };
        if free.sites.len() != t.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} free-site values, got {}",
                free.sites.len(),
                t.len()
            )));
        }
        if t.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("free-site values must lie in [0,1]".into()));
        }
        let mut out = self.clone();
        out.free_sites = Some(FreeSites {
            sites: free.sites.clone(),
            t: t.to_vec(),
        });
        Ok(out)
    }

    /// Declares `sites` free, moving their current couplings into `t_S`.
    pub fn with_free_sites(&self, free: &[Site]) -> Result<Self> {
        let mut out = self.clone();
        let mut fs = out.free_sites.take().unwrap_or(FreeSites {
            sites: vec![],
            t: vec![],
        });
        for s in free {
            let Some(pos) = out.sites.iter().position(|x| x == s) else {
                if fs.sites.contains(s) {
                    continue;
                }
                return Err(Error::InvalidArgument(format!("{s:?} is not a site of the box")));
            };
            out.sites.remove(pos);
            let v = out.values.remove(pos);
            fs.sites.push(s.clone());
            fs.t.push(v);
        }
        out.free_sites = Some(fs);
        Ok(out)
    }

    /// Restriction to the sites of a sub-box (free sites restricted too).
    pub fn restrict(&self, sub: &BoxSpec) -> Self {
        let keep = |s: &Site| sub.contains(&s.iter().map(|&k| k as f64).collect::<Vec<_>>());
        let mut sites = Vec::new();
        let mut values = Vec::new();
        for (s, v) in self.sites.iter().zip(&self.values) {
            if keep(s) {
                sites.push(s.clone());
                values.push(*v);
            }
        }
        let free_sites = self.free_sites.as_ref().map(|f| {
            let mut fs = FreeSites {
                sites: vec![],
                t: vec![],
            };
            for (s, t) in f.sites.iter().zip(&f.t) {
                if keep(s) {
                    fs.sites.push(s.clone());
                    fs.t.push(*t);
                }
            }
            fs
        });
        Self {
            region: sub.clone(),
            sites,
            values,
            free_sites,
            seed: self.seed,
            degenerate_warning: self.degenerate_warning,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based stream seed for one `(root, trial, site)` triple.
pub fn site_seed(root_seed: u64, trial: u64, site: &[i64]) -> u64 {
    let mut h = splitmix64(root_seed ^ 0x6d73_616c_6162_0001);
    h = splitmix64(h ^ trial);
    h = splitmix64(h ^ site.len() as u64);
    for &k in site {
        h = splitmix64(h ^ (k as u64));
    }
    h
}

/// Per-trial seed for auxiliary streams (free-site probes, subsampling).
pub fn stream_seed(root_seed: u64, trial: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(root_seed ^ tag.rotate_left(17)) ^ trial)
}

pub fn sample_configuration(
    dist: &SingleSiteDistribution,
    region: &BoxSpec,
    free_sites: Option<&[Site]>,
    root_seed: u64,
    trial: u64,
) -> Result<Configuration> {
    dist.validate()?;
    let all = lattice_sites(region);
    let mut sites = Vec::with_capacity(all.len());
    let mut values = Vec::with_capacity(all.len());
    let mut free = FreeSites {
        sites: vec![],
        t: vec![],
    };
    for s in all {
        if free_sites.is_some_and(|f| f.contains(&s)) {
            free.sites.push(s);
            free.t.push(0.0);
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(site_seed(root_seed, trial, &s));
        values.push(dist.sample(&mut rng));
        sites.push(s);
    }
    if let Some(f) = free_sites {
        if free.sites.len() != f.len() {
            return Err(Error::InvalidArgument("free sites must lie in the box".into()));
        }
    }
    Ok(Configuration {
        region: region.clone(),
        sites,
        values,
        free_sites: free_sites.map(|_| free),
        seed: SeedProvenance {
            root: root_seed,
            trial,
        },
        degenerate_warning: !dist.is_nondegenerate(),
    })
}
