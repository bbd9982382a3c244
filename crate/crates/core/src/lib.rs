pub mod discretization;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod qucp;
pub mod quadrature;
pub mod covering;
pub mod msa;
pub mod observables;
pub mod spectral;
pub mod stats;
