use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::covering::standard_covering_box;
use crate::discretization::{assemble_hamiltonian, Grid, ModelSpec, Region};
use crate::error::{Error, Result};
use crate::model::{sup_norm, BoxSpec, Configuration, Site};
use crate::spectral::{ProbeStatus, ResolventContext};
use crate::stats::least_squares;

/// How the supremum over `t_S ∈ [0,1]^S` and over pairs is sampled.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoodnessPolicy {
    /// Random vertices of `[0,1]^S` probed besides all-zeros and all-ones.
    pub corner_probes: usize,
    /// Uniform interior draws.
    pub interior_probes: usize,
    pub pair_cap: usize,
    pub seed: u64,
    /// 1 for good, 2 for jgood.
    pub factor: f64,
}

impl Default for GoodnessPolicy {
    fn default() -> Self {
        Self {
            corner_probes: 8,
            interior_probes: 8,
            pair_cap: 4000,
            seed: 0,
            factor: 1.0,
        }
    }
}

impl GoodnessPolicy {
    pub fn jgood(mut self) -> Self {
        self.factor = 2.0;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairRecord {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub distance: f64,
    pub measured: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GoodnessReport {
    pub region: BoxSpec,
    pub energy: f64,
    pub m: f64,
    pub sigma: f64,
    pub factor: f64,
    pub free_sites: Vec<Site>,
    pub probes: usize,
    pub t_policy: String,
    /// Largest `‖R(E)‖` over the probes.
    pub resolvent_norm: f64,
    pub weg_bound: f64,
    pub weg_pass: bool,
    pub decay_pass: bool,
    /// Pair with the largest measured/bound ratio.
    pub worst_pair: Option<PairRecord>,
    pub pairs_checked: usize,
    pub pairs_total: usize,
    /// `−slope` of `log‖χ_x R χ_y‖` against `‖x−y‖`.
    pub m_fit: Option<f64>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// Centers `x0 + k`, `k ∈ Z^d`, of the unit boxes inside `Λ_L(x0)`.
pub fn unit_centers(b: &BoxSpec) -> Vec<Vec<f64>> {
    let kmax = ((b.side - 1.0) / 2.0 + 1e-9).floor().max(0.0) as i64;
    let d = b.dim();
    let mut out = vec![];
    let mut k = vec![-kmax; d];
    loop {
        out.push(b.center.iter().zip(&k).map(|(c, &ki)| c + ki as f64).collect());
        let mut a = d;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            if k[a] < kmax {
                k[a] += 1;
                break;
            }
            k[a] = -kmax;
        }
    }
}

fn free_probes(n: usize, policy: &GoodnessPolicy) -> Vec<Vec<f64>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let mut probes = vec![vec![0.0; n], vec![1.0; n]];
    for _ in 0..policy.corner_probes {
        probes.push((0..n).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect());
    }
    for _ in 0..policy.interior_probes {
        probes.push((0..n).map(|_| rng.random::<f64>()).collect());
    }
    probes
}

fn choose_pairs(centers: &[Vec<f64>], min_dist: f64, policy: &GoodnessPolicy) -> (Vec<(usize, usize, f64)>, usize) {
    let mut all = vec![];
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            let diff: Vec<f64> = centers[i].iter().zip(&centers[j]).map(|(a, b)| a - b).collect();
            let dist = sup_norm(&diff);
            if dist >= min_dist {
                all.push((i, j, dist));
            }
        }
    }
    let total = all.len();
    if total <= policy.pair_cap {
        return (all, total);
    }
    // extreme separations plus a uniform subsample of the rest
    all.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let head = policy.pair_cap / 2;
    let mut rest = all.split_off(head);
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed ^ 0x7061_6972);
    rest.shuffle(&mut rng);
    rest.truncate(policy.pair_cap - head);
    all.extend(rest);
    all.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    (all, total)
}

/// Evaluates the good-box criterion (or its `factor`-relaxed variant) for
/// `Λ = b` with free sites `S`.
#[allow(clippy::too_many_arguments)]
pub fn check_goodness(
    model: &ModelSpec,
    config: &Configuration,
    b: &BoxSpec,
    energy: f64,
    m: f64,
    sigma: f64,
    free: &[Site],
    policy: &GoodnessPolicy,
) -> Result<GoodnessReport> {
    let base = config.restrict(b);
    let base = if free.is_empty() { base } else { base.with_free_sites(free)? };
    let n_free = base.free_sites.as_ref().map_or(0, |f| f.sites.len());
    let probes = free_probes(n_free, policy);
    let l = b.side;
    let weg_bound = policy.factor * l.powf(1.0 - sigma).exp();
    let grid = Grid::new(b, model.grid)?;
    let centers = unit_centers(b);
    let nodes: Vec<Vec<usize>> = centers
        .iter()
        .map(|x| {
            let mask = grid.mask(&Region::unit_box(x));
            mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
        })
        .collect();
    let (pairs, pairs_total) = choose_pairs(&centers, l / 100.0, policy);
    let mut notes = vec![];
    if l < 100.0 * (model.profile.delta_plus + 1.0) {
        notes.push(format!("desk scale: L = {l} < 100(δ₊+1)"));
    }
    if n_free > 0 {
        notes.push("free-site supremum sampled at finitely many t_S".into());
    }
    let mut sources: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    sources.dedup();
    let mut measured = vec![0.0f64; pairs.len()];
    let mut resolvent_norm = 0.0f64;
    let mut indeterminate = false;
    let mut divergent = false;
    for t in &probes {
        let cfg = base.with_free_values(t)?;
        let h = assemble_hamiltonian(b, model, &cfg)?;
        let ctx = ResolventContext::new(&h, energy)?;
        let (norm, status) = ctx.full_norm();
        match status {
            ProbeStatus::Divergent => {
                divergent = true;
                resolvent_norm = f64::INFINITY;
                break;
            }
            ProbeStatus::NoConvergence => indeterminate = true,
            ProbeStatus::Ok => {}
        }
        resolvent_norm = resolvent_norm.max(norm);
        let per_source: Vec<Result<Vec<(usize, f64)>>> = sources
            .par_iter()
            .map(|&s| {
                let cols = ctx.columns(&nodes[s])?;
                Ok(pairs
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.0 == s)
                    .map(|(k, p)| (k, ResolventContext::block_norm_from_columns(&cols, &nodes[p.1])))
                    .collect())
            })
            .collect();
        for r in per_source {
            match r {
                Ok(v) => {
                    for (k, val) in v {
                        measured[k] = measured[k].max(val);
                    }
                }
                Err(Error::NoConvergence { .. }) => indeterminate = true,
                Err(e) => return Err(e),
            }
        }
    }
    let weg_pass = !divergent && resolvent_norm <= weg_bound;
    let mut worst: Option<(f64, PairRecord)> = None;
    let mut decay_pass = !divergent;
    if !divergent {
        for (k, &(i, j, dist)) in pairs.iter().enumerate() {
            let bound = policy.factor * (-m * dist).exp();
            let ratio = measured[k] / bound;
            if measured[k] > bound {
                decay_pass = false;
            }
            if worst.as_ref().is_none_or(|w| ratio > w.0) {
                worst = Some((
                    ratio,
                    PairRecord {
                        x: centers[i].clone(),
                        y: centers[j].clone(),
                        distance: dist,
                        measured: measured[k],
                        bound,
                    },
                ));
            }
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs
        .iter()
        .zip(&measured)
        .filter(|(_, &v)| v > 0.0 && v.is_finite())
        .map(|(p, v)| (p.2, v.ln()))
        .unzip();
    let m_fit = least_squares(&xs, &ys).map(|(s, _)| -s);
    let verdict = if weg_pass && decay_pass {
        if indeterminate {
            Verdict::Indeterminate
        } else {
            Verdict::Pass
        }
    } else {
        Verdict::Fail
    };
    Ok(GoodnessReport {
        region: b.clone(),
        energy,
        m,
        sigma,
        factor: policy.factor,
        free_sites: base.free_sites.map(|f| f.sites).unwrap_or_default(),
        probes: probes.len(),
        t_policy: format!(
            "zeros, ones, {} random corners, {} interior draws (seed {})",
            policy.corner_probes, policy.interior_probes, policy.seed
        ),
        resolvent_norm,
        weg_bound,
        weg_pass,
        decay_pass,
        worst_pair: worst.map(|w| w.1),
        pairs_checked: pairs.len(),
        pairs_total,
        m_fit,
        verdict,
        notes,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PgoodReport {
    pub ell: f64,
    pub boxes: usize,
    pub reports: Vec<GoodnessReport>,
    pub verdict: Verdict,
}

/// Every box of the standard `ℓ`-covering, `ℓ = L^{1/(1+η)}` rounded down to
/// the mesh, is good.
#[allow(clippy::too_many_arguments)]
pub fn check_pgood(
    model: &ModelSpec,
    config: &Configuration,
    b: &BoxSpec,
    energy: f64,
    m: f64,
    sigma: f64,
    eta: f64,
    policy: &GoodnessPolicy,
) -> Result<PgoodReport> {
    let n = model.grid.points_per_unit as f64;
    let ell = (b.side.powf(1.0 / (1.0 + eta)) * n).floor() / n;
    if ell <= 0.0 || ell > b.side / 6.0 {
        return Err(Error::Scale(format!(
            "ℓ = {ell} from L = {} and η = {eta} must lie in ]0, L/6]",
            b.side
        )));
    }
    let cover = standard_covering_box(b, ell)?;
    let mut reports = Vec::with_capacity(cover.len());
    let mut verdict = Verdict::Pass;
    for r in &cover.centers {
        let sub = BoxSpec::new(r.clone(), ell)?;
        let rep = check_goodness(model, config, &sub, energy, m, sigma, &[], policy)?;
        match rep.verdict {
            Verdict::Fail => verdict = Verdict::Fail,
            Verdict::Indeterminate if verdict == Verdict::Pass => verdict = Verdict::Indeterminate,
            _ => {}
        }
        reports.push(rep);
    }
    Ok(PgoodReport {
        ell,
        boxes: cover.len(),
        reports,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::GridSpec;
    use crate::model::SiteProfile;
    use crate::spectral::lowest_eigenvalue;

    fn model() -> ModelSpec {
        ModelSpec::new(GridSpec::dirichlet(4), SiteProfile::indicator(1.0, 1.0))
    }

    #[test]
    fn free_operator_below_spectrum_is_good() {
        let b = BoxSpec::centered(1, 12.0);
        let c = Configuration::constant(&b, 0.0);
        let r = check_goodness(&model(), &c, &b, -1.0, 0.5, 0.5, &[], &GoodnessPolicy::default()).unwrap();
        assert!(r.weg_pass && r.resolvent_norm <= 1.0 + 1e-9);
        assert!(r.decay_pass, "{:?}", r.worst_pair);
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.m_fit.unwrap() > 2.0 / 3.0);
        assert_eq!(r.probes, 1);
    }

    #[test]
    fn eigenvalue_energy_fails() {
        let b = BoxSpec::centered(1, 6.0);
        let c = Configuration::constant(&b, 0.0);
        let h = assemble_hamiltonian(&b, &model(), &c).unwrap();
        let e = lowest_eigenvalue(&h).unwrap();
        let r = check_goodness(&model(), &c, &b, e, 0.1, 0.5, &[], &GoodnessPolicy::default()).unwrap();
        assert!(!r.weg_pass);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn good_implies_jgood_and_free_sites_probe() {
        let b = BoxSpec::centered(1, 10.0);
        let c = Configuration::constant(&b, 1.0);
        let free = vec![vec![0], vec![2]];
        let p = GoodnessPolicy::default();
        let g = check_goodness(&model(), &c, &b, -0.5, 0.6, 0.5, &free, &p).unwrap();
        let j = check_goodness(&model(), &c, &b, -0.5, 0.6, 0.5, &free, &p.clone().jgood()).unwrap();
        assert_eq!(g.probes, 18);
        assert!(g.notes.iter().any(|n| n.contains("free-site")));
        if g.verdict == Verdict::Pass {
            assert_eq!(j.verdict, Verdict::Pass);
        }
        assert!((j.resolvent_norm - g.resolvent_norm).abs() < 1e-12);
    }

    #[test]
    fn pair_cap_subsamples() {
        let b = BoxSpec::centered(2, 9.0);
        let centers = unit_centers(&b);
        assert_eq!(centers.len(), 81);
        let p = GoodnessPolicy {
            pair_cap: 100,
            ..Default::default()
        };
        let (pairs, total) = choose_pairs(&centers, 0.09, &p);
        assert_eq!(total, 81 * 80 / 2);
        assert_eq!(pairs.len(), 100);
        assert!(pairs.iter().any(|q| (q.2 - 8.0).abs() < 1e-12));
    }

    #[test]
    fn pgood_scale_checks() {
        let b = BoxSpec::centered(1, 40.0);
        let c = Configuration::constant(&b, 0.0);
        let r = check_pgood(&model(), &c, &b, -1.0, 0.5, 0.5, 1.0, &GoodnessPolicy::default()).unwrap();
        assert!((r.ell - 6.25).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(check_pgood(&model(), &c, &b, -1.0, 0.5, 0.5, 0.1, &GoodnessPolicy::default()).is_err());
    }
}
