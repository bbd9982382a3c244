use proptest::prelude::*;

use msalab::covering::{
    bad_cluster, check_bdrycover_box, check_freeguarantee, check_nesting_box, check_nesting_sub_box, check_number_box,
    rational, standard_covering_box, PercolationGraph,
};
use msalab::discretization::{GridSpec, ModelSpec};
use msalab::model::{sample_configuration, BoxSpec, SingleSiteDistribution, SiteProfile};
use msalab::msa::{check_goodness, goodness_probability, reduced_spectrum, GoodnessPolicy, Verdict};

fn model(ppu: u32) -> ModelSpec {
    ModelSpec::new(GridSpec::dirichlet(ppu), SiteProfile::indicator(1.0, 1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn box_covering_identities(d in 1usize..=3, l4 in 24i64..=120, frac in 0.0f64..1.0, x4 in -40i64..=40) {
        let l = l4 as f64 / 4.0;
        let lo = (l / 16.0 * 4.0).ceil() as i64;
        let hi = (l / 6.0 * 4.0).floor() as i64;
        let ell = (lo + ((hi - lo) as f64 * frac) as i64) as f64 / 4.0;
        let b = BoxSpec::new(vec![x4 as f64 / 4.0; d], l).unwrap();
        let c = standard_covering_box(&b, ell).unwrap();
        prop_assert!(check_nesting_box(&c).is_ok());
        prop_assert!(check_bdrycover_box(&c).is_ok());
        prop_assert!(check_freeguarantee(&c).is_ok());
        prop_assert!(check_number_box(&c).is_ok());
        prop_assert!(check_nesting_sub_box(&c, &vec![0; d], 1).is_ok());
    }

    #[test]
    fn bad_cluster_grows_when_labels_flip(seed in any::<u64>(), flips in proptest::collection::vec(0usize..441, 1..20)) {
        let mut g = PercolationGraph::from_parts(vec![0.0, 0.0], 1.0, rational(0.75).unwrap(), 1, 10).unwrap();
        let mut s = seed;
        for v in 0..g.len() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            g.set_bad(v, (s >> 33) % 5 < 2);
        }
        let before = bad_cluster(&g);
        for f in flips {
            g.set_bad(f, true);
        }
        let after = bad_cluster(&g);
        prop_assert!(before.iter().all(|v| after.binary_search(v).is_ok()));
    }
}

#[test]
fn good_boxes_are_jgood_and_stable_under_small_energy_shifts() {
    let m = model(4);
    let b = BoxSpec::centered(1, 12.0);
    let dist = SingleSiteDistribution::Bernoulli { q: 0.5 };
    let mut good = 0;
    for trial in 0..12 {
        let cfg = sample_configuration(&dist, &b, None, 21, trial).unwrap();
        let pol = GoodnessPolicy::default();
        let rate = 0.3;
        let r = check_goodness(&m, &cfg, &b, 0.05, rate, 0.005, &[], &pol).unwrap();
        if r.verdict != Verdict::Pass {
            continue;
        }
        good += 1;
        let j = check_goodness(&m, &cfg, &b, 0.05, rate, 0.005, &[], &pol.clone().jgood()).unwrap();
        assert_eq!(j.verdict, Verdict::Pass);
        let tau = 0.5;
        assert!(rate >= 12f64.powf(-tau));
        let shift = (-2.0 * rate * 12.0).exp();
        for e in [0.05 - shift, 0.05 + shift] {
            let s = check_goodness(&m, &cfg, &b, e, rate, 0.005, &[], &pol.clone().jgood()).unwrap();
            assert_eq!(s.verdict, Verdict::Pass, "trial {trial}, E = {e}");
        }
    }
    assert!(good > 0);
}

#[test]
fn goodness_probability_is_reproducible() {
    let m = model(4);
    let dist = SingleSiteDistribution::Bernoulli { q: 0.5 };
    let pol = GoodnessPolicy::default();
    let a = goodness_probability(&dist, &m, 1, 12.0, 0.05, 0.3, 0.005, 0.35, 8, 4, &pol).unwrap();
    let b = goodness_probability(&dist, &m, 1, 12.0, 0.05, 0.3, 0.005, 0.35, 8, 4, &pol).unwrap();
    assert_eq!(a, b);
}

#[test]
fn reduced_spectrum_grows_with_threshold_factor() {
    let m = model(2);
    let b = BoxSpec::centered(1, 30.0);
    let dist = SingleSiteDistribution::Bernoulli { q: 0.5 };
    for trial in 0..5 {
        let cfg = sample_configuration(&dist, &b, None, 8, trial).unwrap();
        let mut prev: Vec<f64> = vec![];
        for factor in [0.01, 0.1, 1.0, 10.0] {
            let r = reduced_spectrum(&m, &cfg, &[0.0], 30.0, (0.0, 1.5), 0.9, 2, 0.05, factor).unwrap();
            assert!(prev.iter().all(|e| r.reduced.contains(e)));
            prev = r.reduced;
        }
    }
}
