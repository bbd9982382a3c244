use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::goodness::{check_goodness, GoodnessPolicy, Verdict};
use crate::discretization::ModelSpec;
use crate::error::{Error, Result};
use crate::model::{sample_configuration, stream_seed, BoxSpec, SingleSiteDistribution};
use crate::stats::wilson_interval;

const POLICY_TAG: u64 = 0x676f_6f64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderRow {
    pub scale: f64,
    pub energy: f64,
    pub m: f64,
    pub n_samples: usize,
    pub good: usize,
    pub indeterminate: usize,
    pub phat: f64,
    pub lo: f64,
    pub hi: f64,
    pub target: f64,
    /// Pass iff the Wilson lower bound or the point estimate reaches the target.
    pub verdict: bool,
}

/// Monte Carlo estimate of `P{Λ_L(0) is (E,m,ς)-good}` against `1 − L^{−pd}`.
#[allow(clippy::too_many_arguments)]
pub fn goodness_probability(
    dist: &SingleSiteDistribution,
    model: &ModelSpec,
    d: usize,
    l: f64,
    energy: f64,
    m: f64,
    sigma: f64,
    p: f64,
    n_samples: usize,
    root_seed: u64,
    policy: &GoodnessPolicy,
) -> Result<LadderRow> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let b = BoxSpec::centered(d, l);
    let verdicts = (0..n_samples as u64)
        .into_par_iter()
        .map(|trial| {
            let config = sample_configuration(dist, &b, None, root_seed, trial)?;
            let pol = GoodnessPolicy {
                seed: stream_seed(root_seed, trial, POLICY_TAG),
                ..policy.clone()
            };
            Ok(check_goodness(model, &config, &b, energy, m, sigma, &[], &pol)?.verdict)
        })
        .collect::<Result<Vec<Verdict>>>()?;
    let good = verdicts.iter().filter(|v| **v == Verdict::Pass).count();
    let indeterminate = verdicts.iter().filter(|v| **v == Verdict::Indeterminate).count();
    let (lo, hi) = wilson_interval(good, n_samples, 1.96);
    let phat = good as f64 / n_samples as f64;
    let target = 1.0 - l.powf(-p * d as f64);
    Ok(LadderRow {
        scale: l,
        energy,
        m,
        n_samples,
        good,
        indeterminate,
        phat,
        lo,
        hi,
        target,
        verdict: lo >= target || phat >= target,
    })
}

/// How successive ladder scales are generated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LadderScales {
    /// `L_{k+1} = L_k^{1/ρ1}`, switching to doubling once a scale exceeds `budget`.
    Power { rho1: f64, budget: f64 },
    /// `L_k = ⌈L₀·2^k⌉`.
    Geometric,
}

pub fn ladder_scales(l0: f64, count: usize, mode: LadderScales) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut l = l0;
    for k in 0..count {
        match mode {
            LadderScales::Geometric => out.push((l0 * 2f64.powi(k as i32)).ceil()),
            LadderScales::Power { rho1, budget } => {
                out.push(l);
                let next = l.powf(1.0 / rho1);
                l = if next > budget { (2.0 * l).ceil() } else { next };
            }
        }
    }
    out
}

pub fn write_ladder_csv<W: Write>(rows: &[LadderRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["scale", "E", "m", "n", "good", "phat", "lo", "hi", "target", "verdict"])?;
    for r in rows {
        wr.write_record([
            r.scale.to_string(),
            r.energy.to_string(),
            r.m.to_string(),
            r.n_samples.to_string(),
            r.good.to_string(),
            r.phat.to_string(),
            r.lo.to_string(),
            r.hi.to_string(),
            r.target.to_string(),
            if r.verdict { "pass" } else { "fail" }.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::GridSpec;
    use crate::model::SiteProfile;

    fn model() -> ModelSpec {
        ModelSpec::new(GridSpec::dirichlet(2), SiteProfile::indicator(1.0, 1.0))
    }

    #[test]
    fn deterministic_extremes() {
        let one = SingleSiteDistribution::Bernoulli { q: 1.0 };
        let policy = GoodnessPolicy::default();
        let r = goodness_probability(&one, &model(), 1, 8.0, -0.5, 0.1, 0.5, 0.35, 5, 1, &policy).unwrap();
        assert_eq!((r.good, r.phat), (5, 1.0));
        // far too fast a decay rate for any box
        let r = goodness_probability(&one, &model(), 1, 8.0, 0.3, 50.0, 0.5, 0.35, 5, 1, &policy).unwrap();
        assert_eq!(r.good, 0);
        assert!(r.hi - r.lo <= 2.0 * 1.96 / (2.0 * 5f64.sqrt()) + 0.1);
    }

    #[test]
    fn reproducible() {
        let dist = SingleSiteDistribution::Bernoulli { q: 0.5 };
        let policy = GoodnessPolicy::default();
        let a = goodness_probability(&dist, &model(), 1, 10.0, 0.05, 0.05, 0.5, 0.35, 6, 9, &policy).unwrap();
        let b = goodness_probability(&dist, &model(), 1, 10.0, 0.05, 0.05, 0.5, 0.35, 6, 9, &policy).unwrap();
        assert_eq!(a, b);
        let mut buf = vec![];
        write_ladder_csv(&[a], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("scale,E,m,n,good,phat,lo,hi,target,verdict\n"));
    }

    #[test]
    fn scales() {
        assert_eq!(ladder_scales(10.0, 3, LadderScales::Geometric), vec![10.0, 20.0, 40.0]);
        let s = ladder_scales(10.0, 3, LadderScales::Power { rho1: 0.5, budget: 50.0 });
        assert_eq!(s, vec![10.0, 20.0, 40.0]);
        let s = ladder_scales(4.0, 3, LadderScales::Power { rho1: 0.5, budget: 1e9 });
        assert_eq!(s, vec![4.0, 16.0, 256.0]);
    }
}
