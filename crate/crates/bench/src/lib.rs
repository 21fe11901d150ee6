//! Shared fixtures for the criterion benches: the NYC-calibrated baseline
//! hazard, loss curve, projects, and valuation inputs.

use floodopt_core::{
    AbmParams, GevParams, LossCurve, PremiumSpec, Project, ProtectionState, QuadraticLoss,
    RiskAdjustment, ValuationInputs,
};

pub const ALPHA0: f64 = 1642.0;
pub const THRESHOLD: f64 = 2506.0;

pub fn hazard() -> GevParams {
    GevParams::new(ALPHA0, 131.0, 0.27).unwrap()
}

pub fn curve() -> LossCurve {
    LossCurve::Quadratic(QuadraticLoss::from_threshold(0.0, 0.0393, THRESHOLD).unwrap())
}

pub fn proofing() -> Project {
    Project::new("proofing", 0.246, 610.0, 0.30).unwrap().with_benefit_scale(0.196299).unwrap()
}

pub fn dike() -> Project {
    Project::new("dike", 15.95, 1000.0, 1.0).unwrap()
}

pub fn base_state() -> ProtectionState {
    ProtectionState::new(THRESHOLD)
}

pub fn baseline_inputs() -> ValuationInputs {
    ValuationInputs::new(
        hazard(),
        curve(),
        PremiumSpec::new(0.03, 0.01).unwrap(),
        AbmParams::new(6.0, 25.0, ALPHA0).unwrap(),
        &RiskAdjustment::direct(0.15),
        0.04,
    )
    .unwrap()
}
