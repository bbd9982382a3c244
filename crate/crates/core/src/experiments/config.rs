use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discretization::{BackgroundPotential, GridSpec, ModelSpec, PeriodicPotential};
use crate::error::{Error, Result};
use crate::model::{SingleSiteDistribution, SiteProfile};
use crate::msa::{LadderScales, MsaInputs};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CoveringSuite,
    Constants,
    InitialScale,
    GoodnessLadder,
    Dichotomy,
    Ids,
    Dynamical,
    Qucp,
    PeriodicGap,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        Self::CoveringSuite,
        Self::Constants,
        Self::InitialScale,
        Self::GoodnessLadder,
        Self::Dichotomy,
        Self::Ids,
        Self::Dynamical,
        Self::Qucp,
        Self::PeriodicGap,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::CoveringSuite => "covering-suite",
            Self::Constants => "constants",
            Self::InitialScale => "initial-scale",
            Self::GoodnessLadder => "goodness-ladder",
            Self::Dichotomy => "dichotomy",
            Self::Ids => "ids",
            Self::Dynamical => "dynamical",
            Self::Qucp => "qucp",
            Self::PeriodicGap => "periodic-gap",
        }
    }
}

/// Random model: single-site law plus everything `ModelSpec` carries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub dist: SingleSiteDistribution,
    pub profile: SiteProfile,
    pub grid: GridSpec,
    #[serde(default)]
    pub v_per: PeriodicPotential,
    #[serde(default)]
    pub background: BackgroundPotential,
    #[serde(default)]
    pub u_plus_bound: Option<f64>,
    #[serde(default)]
    pub auto_shift: bool,
}

impl ModelBlock {
    pub fn spec(&self) -> ModelSpec {
        let mut m = ModelSpec::new(self.grid, self.profile.clone());
        m.v_per = self.v_per.clone();
        m.background = self.background.clone();
        if let Some(u) = self.u_plus_bound {
            m.u_plus_bound = u;
        }
        m.auto_shift = self.auto_shift;
        m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringRun {
    pub dims: Vec<usize>,
    /// `(L, ℓ)` pairs for box coverings.
    pub boxes: Vec<(f64, f64)>,
    /// `(L1, L2, ℓ)` triples for annulus coverings.
    #[serde(default)]
    pub annuli: Vec<(f64, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialRun {
    pub scale: f64,
    pub eps: f64,
    pub n_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderRun {
    pub l0: f64,
    pub count: usize,
    pub scales: LadderScales,
    pub energy: f64,
    pub n_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DichotomyRun {
    pub scale: f64,
    pub interval: (f64, f64),
    pub big_m: f64,
    pub theta: f64,
    pub n_samples: usize,
    #[serde(default)]
    pub nu: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdsRun {
    pub scale: f64,
    pub energies: Vec<f64>,
    pub n_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicalRun {
    pub scale: f64,
    pub window: (f64, f64),
    pub b: f64,
    pub t_grid: Vec<f64>,
    pub n_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QucpRun {
    pub scale: f64,
    pub delta: f64,
    pub d_bound: f64,
    /// `Θ = Λ_side(center)`.
    pub theta_center: Vec<f64>,
    pub theta_side: f64,
    /// Probes along the first axis, all other coordinates at the box center.
    pub probes: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapRun {
    pub scale: f64,
    pub window: (f64, f64),
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub m_hat: Option<f64>,
}

/// Solver knobs; the only settings with defaults. Echoed into the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub corner_probes: usize,
    pub interior_probes: usize,
    pub pair_cap: usize,
    pub max_energies: usize,
    pub outer_factor: f64,
}

impl Default for SolverBlock {
    fn default() -> Self {
        Self {
            corner_probes: 8,
            interior_probes: 8,
            pair_cap: 4000,
            max_energies: 64,
            outer_factor: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub root_seed: u64,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub model: Option<ModelBlock>,
    #[serde(default)]
    pub params: Option<MsaInputs>,
    #[serde(default)]
    pub covering: Option<CoveringRun>,
    #[serde(default)]
    pub initial: Option<InitialRun>,
    #[serde(default)]
    pub ladder: Option<LadderRun>,
    #[serde(default)]
    pub dichotomy: Option<DichotomyRun>,
    #[serde(default)]
    pub ids: Option<IdsRun>,
    #[serde(default)]
    pub dynamical: Option<DynamicalRun>,
    #[serde(default)]
    pub qucp: Option<QucpRun>,
    #[serde(default)]
    pub periodic_gap: Option<GapRun>,
    #[serde(default)]
    pub solver: SolverBlock,
}

fn need<'a, T>(v: &'a Option<T>, section: &str, kind: ExperimentKind) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::Config(format!("kind `{}` needs a [{section}] section", kind.as_str())))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn dim(&self) -> Result<usize> {
        match (self.d, &self.params) {
            (Some(d), _) => Ok(d),
            (None, Some(p)) => Ok(p.d),
            _ => Err(Error::Config("dimension `d` is not set".into())),
        }
    }

    pub fn model(&self) -> Result<&ModelBlock> {
        need(&self.model, "model", self.kind)
    }

    pub fn params(&self) -> Result<&MsaInputs> {
        need(&self.params, "params", self.kind)
    }

    /// Checks that the sections required by the experiment kind are present.
    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        let k = self.kind;
        match k {
            CoveringSuite => {
                need(&self.covering, "covering", k)?;
            }
            Constants => {
                self.params()?;
            }
            InitialScale => {
                self.model()?;
                self.params()?;
                need(&self.initial, "initial", k)?;
            }
            GoodnessLadder => {
                self.model()?;
                self.params()?;
                need(&self.ladder, "ladder", k)?;
            }
            Dichotomy => {
                self.model()?;
                self.dim()?;
                need(&self.dichotomy, "dichotomy", k)?;
            }
            Ids => {
                self.model()?;
                self.dim()?;
                need(&self.ids, "ids", k)?;
            }
            Dynamical => {
                self.model()?;
                self.dim()?;
                need(&self.dynamical, "dynamical", k)?;
            }
            Qucp => {
                self.model()?;
                self.dim()?;
                need(&self.qucp, "qucp", k)?;
            }
            PeriodicGap => {
                self.model()?;
                self.dim()?;
                need(&self.periodic_gap, "periodic_gap", k)?;
            }
        }
        if let Some(m) = &self.model {
            m.dist.validate()?;
            m.profile.validate()?;
        }
        Ok(())
    }
}
