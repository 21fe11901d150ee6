//! Valuation engine for sequencing coastal flood-adaptation investments.
//!
//! The pipeline: gauge records are reduced to annual statistics (`ingest`),
//! annual maximum surges get a generalized extreme value fit (`evt`), flood
//! losses are priced in closed form against the extreme-value tail (`loss`),
//! adaptation projects turn loss reductions into benefit flows (`adapt`), mean
//! sea level follows an arithmetic Brownian motion with a risk adjustment
//! (`dynamics`), and investment timing is solved as an American option on a
//! binomial lattice over the water-mark location parameter (`value`).
//!
//! Water levels are millimetres relative to a station datum; money is billions
//! of dollars; time is years.

pub mod adapt;
pub mod dynamics;
pub mod error;
pub mod evt;
pub mod ingest;
pub mod loss;
pub mod special;
pub mod value;

pub use adapt::{benefit_flow, combined_annual_benefit, Project, ProtectionState};
pub use dynamics::{
    alpha_distribution, risk_neutral_drift, simulate_paths, AbmParams, Measure, RiskAdjustment,
};
pub use error::{Error, Result};
pub use evt::{fit_mle, profile_loglik, GevFit, GevParams, ProfiledParam};
pub use ingest::{annual_stats, estimate_abm, parse_gauge_csv, AnnualStats, GaugeSeries};
pub use loss::{
    expected_damage, expected_damage_quadrature, premium, premium_capped, LossCurve, PremiumSpec,
    QuadraticLoss, StepLoss,
};
pub use value::{
    mc_project_value, npv, option_profile, option_value_sequence, option_value_single,
    project_value, select_pathway, BoundaryCurve, LatticeSpec, OptionProfile, PathwayChoice,
    StageValues, ValuationInputs, ValuationResult,
};
