//! Multiscale-analysis toolkit: parameter constraints, initial-scale
//! formulas, good-box verdicts, Monte Carlo goodness probabilities and
//! reduced spectra.

mod goodness;
mod increments;
mod initial;
mod params;
mod probability;
mod reduced;

pub use goodness::{
    check_goodness, check_pgood, unit_centers, GoodnessPolicy, GoodnessReport, PairRecord, PgoodReport,
    Verdict,
};
pub use increments::{eigenvalue_increment, IncrementRecord};
pub use initial::{initial_scale_probability, InitialScale, InitialScaleResult};
pub use params::{
    gamma_window, hat_n, minimal_n1, msa_constants, prho2n1_holds, rho1_window, rhos_holds, ConstraintVerdict,
    MsaInputs, MsaParams,
};
pub use probability::{goodness_probability, ladder_scales, write_ladder_csv, LadderRow, LadderScales};
pub use reduced::{reduced_spectrum, ReducedSpectrum};
