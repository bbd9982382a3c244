use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind};
use super::manifest::{module_versions, sha256_hex, OutputFile, RunManifest};
use super::plotdata::{ids_plot, ladder_plot};
use crate::covering::{
    check_bdrycover_annulus, check_bdrycover_box, check_freeguarantee, check_nesting_annulus, check_nesting_box,
    check_number_annulus, check_number_box, standard_covering_annulus, standard_covering_box, Covering, Violation,
};
use crate::discretization::{assemble_hamiltonian, Region};
use crate::error::{Error, Result};
use crate::model::{sample_configuration, stream_seed, AnnulusSpec, BoxSpec};
use crate::msa::{
    goodness_probability, initial_scale_probability, ladder_scales, msa_constants, write_ladder_csv,
    GoodnessPolicy, InitialScale,
};
use crate::observables::{
    default_nu, dichotomy_check, dynamical_moment, ids_estimate, log_holder_modulus, DichotomyParams,
};
use crate::qucp::{periodic_projection_gap, qucp_verify, ThetaSet};
use crate::spectral::lowest_eigenpair;

const LADDER_TAG: u64 = 0x6c61_6464;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub workers: usize,
    pub seed_override: Option<u64>,
}

type Outputs = Vec<(String, Vec<u8>)>;

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(header)?;
    for r in rows {
        wr.write_record(r)?;
    }
    wr.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

fn buffer<F: FnOnce(&mut Vec<u8>) -> Result<()>>(f: F) -> Result<Vec<u8>> {
    let mut b = Vec::new();
    f(&mut b)?;
    Ok(b)
}

/// Parses and runs a config file, writing outputs and `manifest.json` into `opts.out_dir`.
pub fn run_experiment(config_path: &Path, opts: &RunOptions) -> Result<RunManifest> {
    let text = std::fs::read_to_string(config_path)?;
    let cfg = ExperimentConfig::from_toml_str(&text)?;
    run_config(&cfg, &text, opts)
}

pub fn run_config(cfg: &ExperimentConfig, config_text: &str, opts: &RunOptions) -> Result<RunManifest> {
    let start = Instant::now();
    let mut cfg = cfg.clone();
    if let Some(s) = opts.seed_override {
        cfg.root_seed = s;
    }
    let workers = opts.workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut outputs = pool.install(|| execute(&cfg))?;
    outputs.sort_by(|a, b| a.0.cmp(&b.0));
    std::fs::create_dir_all(&opts.out_dir)?;
    let mut files = Vec::with_capacity(outputs.len());
    for (name, bytes) in &outputs {
        std::fs::write(opts.out_dir.join(name), bytes)?;
        files.push(OutputFile {
            name: name.clone(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
    }
    let manifest = RunManifest {
        kind: cfg.kind.as_str().into(),
        config_sha256: sha256_hex(config_text.as_bytes()),
        root_seed: cfg.root_seed,
        code_version: env!("CARGO_PKG_VERSION").into(),
        module_versions: module_versions(),
        workers,
        solver: serde_json::to_value(&cfg.solver)?,
        files,
        wall_clock_ms: start.elapsed().as_millis(),
    };
    manifest.write(&opts.out_dir)?;
    Ok(manifest)
}

fn execute(cfg: &ExperimentConfig) -> Result<Outputs> {
    match cfg.kind {
        ExperimentKind::CoveringSuite => covering_suite(cfg),
        ExperimentKind::Constants => Ok(vec![("constants.json".into(), json_bytes(&msa_constants(cfg.params()?))?)]),
        ExperimentKind::InitialScale => initial_scale(cfg),
        ExperimentKind::GoodnessLadder => goodness_ladder(cfg),
        ExperimentKind::Dichotomy => dichotomy(cfg),
        ExperimentKind::Ids => ids(cfg),
        ExperimentKind::Dynamical => dynamical(cfg),
        ExperimentKind::Qucp => qucp(cfg),
        ExperimentKind::PeriodicGap => periodic_gap(cfg),
    }
}

fn identity_rows(
    parent: &str,
    d: usize,
    sizes: (f64, f64, f64),
    built: Result<Covering>,
    checks: &[(&str, fn(&Covering) -> std::result::Result<(), Violation>)],
) -> Vec<Vec<String>> {
    let head = |n: usize, id: &str, pass: &str, detail: String| {
        vec![
            parent.to_string(),
            d.to_string(),
            sizes.0.to_string(),
            sizes.1.to_string(),
            sizes.2.to_string(),
            n.to_string(),
            id.to_string(),
            pass.to_string(),
            detail,
        ]
    };
    match built {
        Err(e) => vec![head(0, "construct", "skipped", e.to_string())],
        Ok(c) => checks
            .par_iter()
            .map(|(name, f)| match f(&c) {
                Ok(()) => head(c.len(), name, "true", String::new()),
                Err(v) => head(c.len(), name, "false", v.detail),
            })
            .collect(),
    }
}

fn covering_suite(cfg: &ExperimentConfig) -> Result<Outputs> {
    let run = cfg.covering.as_ref().expect("validated");
    let mut rows = Vec::new();
    let box_checks: [(&str, fn(&Covering) -> _); 4] = [
        ("nesting", check_nesting_box),
        ("bdrycover", check_bdrycover_box),
        ("freeguarantee", check_freeguarantee),
        ("number", check_number_box),
    ];
    let annulus_checks: [(&str, fn(&Covering) -> _); 3] = [
        ("nesting", check_nesting_annulus),
        ("bdrycover", check_bdrycover_annulus),
        ("number", check_number_annulus),
    ];
    for &d in &run.dims {
        for &(l, ell) in &run.boxes {
            let built = standard_covering_box(&BoxSpec::centered(d, l), ell);
            rows.extend(identity_rows("box", d, (l, 0.0, ell), built, &box_checks));
        }
        for &(l1, l2, ell) in &run.annuli {
            let built = AnnulusSpec::new(vec![0.0; d], l1, l2).and_then(|a| standard_covering_annulus(&a, ell));
            rows.extend(identity_rows("annulus", d, (l2, l1, ell), built, &annulus_checks));
        }
    }
    let header = ["parent", "d", "L", "L_inner", "ell", "centers", "identity", "pass", "detail"];
    Ok(vec![("covering_suite.csv".into(), csv_bytes(&header, rows)?)])
}

fn initial_scale(cfg: &ExperimentConfig) -> Result<Outputs> {
    let run = cfg.initial.as_ref().expect("validated");
    let mb = cfg.model()?;
    let p = cfg.params()?;
    let model = mb.spec();
    let init = InitialScale::new(p.p, p.d, run.eps, mb.profile.delta_plus, model.v_per.period() as f64)?;
    let r = initial_scale_probability(&mb.dist, &model, &init, run.scale, run.n_samples, cfg.root_seed)?;
    let rows = r
        .lambda_min
        .iter()
        .enumerate()
        .map(|(k, v)| vec![k.to_string(), v.to_string(), (*v >= r.threshold).to_string()])
        .collect();
    Ok(vec![
        ("initial_scale.json".into(), json_bytes(&r)?),
        ("lambda_min.csv".into(), csv_bytes(&["trial", "lambda_min", "success"], rows)?),
    ])
}

fn policy(cfg: &ExperimentConfig) -> GoodnessPolicy {
    GoodnessPolicy {
        corner_probes: cfg.solver.corner_probes,
        interior_probes: cfg.solver.interior_probes,
        pair_cap: cfg.solver.pair_cap,
        seed: cfg.root_seed,
        ..GoodnessPolicy::default()
    }
}

fn goodness_ladder(cfg: &ExperimentConfig) -> Result<Outputs> {
    let run = cfg.ladder.as_ref().expect("validated");
    let mb = cfg.model()?;
    let p = cfg.params()?;
    let model = mb.spec();
    let pol = policy(cfg);
    let rows = ladder_scales(run.l0, run.count, run.scales)
        .into_iter()
        .enumerate()
        .map(|(k, l)| {
            let seed = stream_seed(cfg.root_seed, k as u64, LADDER_TAG);
            goodness_probability(&mb.dist, &model, p.d, l, run.energy, p.m, p.sigma, p.p, run.n_samples, seed, &pol)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![
        ("ladder.csv".into(), buffer(|b| write_ladder_csv(&rows, b))?),
        ("plot_ladder.csv".into(), buffer(|b| ladder_plot(&rows, b))?),
    ])
}

#[derive(Serialize)]
struct PassSummary {
    trials: usize,
    records: usize,
    no_energy_trials: usize,
    point_branch: usize,
    annulus_branch: usize,
    either_branch: usize,
    product_pass: usize,
    implied_consistent: usize,
}

fn dichotomy(cfg: &ExperimentConfig) -> Result<Outputs> {
    let run = cfg.dichotomy.as_ref().expect("validated");
    let mb = cfg.model()?;
    let d = cfg.dim()?;
    let model = mb.spec();
    let params = DichotomyParams {
        big_m: run.big_m,
        theta: run.theta,
        nu: run.nu.unwrap_or(default_nu(d)),
        outer_factor: cfg.solver.outer_factor,
        max_energies: cfg.solver.max_energies,
    };
    let outer = BoxSpec::centered(d, params.outer_factor * run.scale);
    let x0 = vec![0.0; d];
    let results = (0..run.n_samples as u64)
        .into_par_iter()
        .map(|trial| {
            let config = sample_configuration(&mb.dist, &outer, None, cfg.root_seed, trial)?;
            dichotomy_check(&model, &config, &x0, run.scale, run.interval, &params)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut s = PassSummary {
        trials: results.len(),
        records: 0,
        no_energy_trials: 0,
        point_branch: 0,
        annulus_branch: 0,
        either_branch: 0,
        product_pass: 0,
        implied_consistent: 0,
    };
    for (trial, r) in results.iter().enumerate() {
        s.no_energy_trials += r.no_energy as usize;
        for rec in &r.records {
            s.records += 1;
            s.point_branch += rec.point_branch as usize;
            s.annulus_branch += rec.annulus_branch as usize;
            s.either_branch += (rec.point_branch || rec.annulus_branch) as usize;
            s.product_pass += rec.product_pass as usize;
            s.implied_consistent += rec.implied_holds as usize;
            rows.push(vec![
                trial.to_string(),
                rec.energy.to_string(),
                rec.multiplicity.to_string(),
                rec.w_point.to_string(),
                rec.w_annulus.to_string(),
                rec.point_branch.to_string(),
                rec.annulus_branch.to_string(),
                rec.product.to_string(),
                rec.product_bound.to_string(),
                rec.product_pass.to_string(),
                rec.implied_holds.to_string(),
            ]);
        }
    }
    let header = [
        "trial",
        "E",
        "multiplicity",
        "W_x0",
        "W_x0_L",
        "point_branch",
        "annulus_branch",
        "product",
        "product_bound",
        "product_pass",
        "implied_consistent",
    ];
    Ok(vec![
        ("dichotomy.csv".into(), csv_bytes(&header, rows)?),
        ("dichotomy_summary.json".into(), json_bytes(&s)?),
    ])
}

fn ids(cfg: &ExperimentConfig) -> Result<Outputs> {
    let run = cfg.ids.as_ref().expect("validated");
    let mb = cfg.model()?;
    let d = cfg.dim()?;
    let curve = ids_estimate(&mb.dist, &mb.spec(), d, run.scale, &run.energies, run.n_samples, cfg.root_seed)?;
    let p_tilde = cfg.params.as_ref().map_or(f64::NAN, |p| p.p_tilde);
    let fit = log_holder_modulus(&curve, p_tilde, d);
    let rows = (0..curve.energies.len())
        .map(|k| {
            vec![
                curve.energies[k].to_string(),
                curve.values[k].to_string(),
                curve.se[k].to_string(),
                curve.n_samples.to_string(),
                curve.volume.to_string(),
            ]
        })
        .collect();
    #[derive(Serialize)]
    struct IdsSummary<'a> {
        isotonic_applied: bool,
        fit: &'a crate::observables::HolderFit,
    }
    Ok(vec![
        ("ids.csv".into(), csv_bytes(&["E", "N", "se", "n", "volume"], rows)?),
        (
            "ids_fit.json".into(),
            json_bytes(&IdsSummary {
                isotonic_applied: curve.isotonic_applied,
                fit: &fit,
            })?,
        ),
        ("plot_ids.csv".into(), buffer(|b| ids_plot(&curve, b))?),
    ])
}

fn dynamical(cfg: &ExperimentConfig) -> Result<Outputs> {
    let run = cfg.dynamical.as_ref().expect("validated");
    let mb = cfg.model()?;
    let d = cfg.dim()?;
    let model = mb.spec();
    let b = BoxSpec::centered(d, run.scale);
    let x0 = vec![0.0; d];
    let results = (0..run.n_samples as u64)
        .into_par_iter()
        .map(|trial| {
            let config = sample_configuration(&mb.dist, &b, None, cfg.root_seed, trial)?;
            let h = assemble_hamiltonian(&b, &model, &config)?;
            dynamical_moment(&h, run.window, run.b, &x0, &run.t_grid)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (trial, r) in results.iter().enumerate() {
        for (t, v) in &r.samples {
            rows.push(vec![
                trial.to_string(),
                t.to_string(),
                v.to_string(),
                r.proxy.to_string(),
                r.empty.to_string(),
            ]);
        }
    }
    Ok(vec![(
        "dynamical.csv".into(),
        csv_bytes(&["trial", "t", "moment", "proxy", "empty_window"], rows)?,
    )])
}

fn qucp(cfg: &ExperimentConfig) -> Result<Outputs> {
    let run = cfg.qucp.as_ref().expect("validated");
    let mb = cfg.model()?;
    let d = cfg.dim()?;
    let b = BoxSpec::centered(d, run.scale);
    let config = sample_configuration(&mb.dist, &b, None, cfg.root_seed, 0)?;
    let h = assemble_hamiltonian(&b, &mb.spec(), &config)?;
    let (e, psi) = lowest_eigenpair(&h)?;
    let theta = ThetaSet::new(Region::Box(BoxSpec::new(run.theta_center.clone(), run.theta_side)?));
    let probes: Vec<Vec<f64>> = run
        .probes
        .iter()
        .map(|&x| {
            let mut p = vec![0.0; d];
            p[0] = x;
            p
        })
        .collect();
    let r = qucp_verify(&h, &psi, e, &theta, run.delta, run.d_bound, &probes)?;
    let rows = r
        .records
        .iter()
        .map(|rec| {
            vec![
                rec.probe[0].to_string(),
                rec.r.to_string(),
                rec.local_mass.to_string(),
                rec.lhs.to_string(),
                rec.rhs.to_string(),
                rec.kappa.map_or(String::new(), |k| k.to_string()),
                rec.skipped.clone().unwrap_or_default(),
            ]
        })
        .collect();
    #[derive(Serialize)]
    struct QucpSummary {
        energy: f64,
        zeta_norm: f64,
        kappa_hat: Option<f64>,
        kappa_band: Option<(f64, f64)>,
        c_hat: Option<f64>,
        m_needed: Option<f64>,
        min_local_ratio: Option<f64>,
    }
    let s = QucpSummary {
        energy: r.energy,
        zeta_norm: r.zeta_norm,
        kappa_hat: r.kappa_hat,
        kappa_band: r.kappa_band,
        c_hat: r.c_hat,
        m_needed: r.m_needed,
        min_local_ratio: r.min_local_ratio,
    };
    Ok(vec![
        (
            "qucp.csv".into(),
            csv_bytes(&["x", "R", "local_mass", "lhs", "rhs", "kappa", "skipped"], rows)?,
        ),
        ("qucp.json".into(), json_bytes(&s)?),
    ])
}

fn periodic_gap(cfg: &ExperimentConfig) -> Result<Outputs> {
    let run = cfg.periodic_gap.as_ref().expect("validated");
    let mb = cfg.model()?;
    let d = cfg.dim()?;
    let results = run
        .deltas
        .par_iter()
        .map(|&delta| {
            periodic_projection_gap(&mb.v_per, d, run.scale, mb.grid.points_per_unit, run.window, delta, run.m_hat)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![("periodic_gap.json".into(), json_bytes(&results)?)])
}
