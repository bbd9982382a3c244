//! Carleman weight, quantitative unique continuation and the periodic
//! spectral-projection lower bound.

mod carleman;
mod periodic;
mod ucp;

pub use carleman::{
    carleman_constant, carleman_integral, carleman_ratio, carleman_weight, fit_c3, phi, BumpAnnulus,
    CarlemanRatio, CarlemanWeight, RadialSample,
};
pub use periodic::{periodic_ball_weight, periodic_projection_gap, GapResult};
pub use ucp::{qucp_verify, ThetaSet, UcpRecord, UcpResult};
