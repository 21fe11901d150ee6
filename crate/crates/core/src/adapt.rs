//! Adaptation projects and the annual benefit flows they generate.
//!
//! A project raises the protected crest from the base flood threshold u to
//! u + raise and removes a fraction of the losses that would have occurred
//! in the covered band. Protection is attributed by absolute crest height:
//! every installed project damps the loss bands below its own crest, so a
//! measure whose band is already fully covered by a taller one adds
//! nothing. The marginal benefit of an addition is the drop in residual
//! premium it causes.

use crate::error::{Error, Result};
use crate::evt::GevParams;
use crate::loss::{expected_damage, LossCurve, PremiumSpec};

/// One adaptation measure. `effectiveness` is the protected fraction of
/// band losses (1 for a hard barrier); `benefit_scale` is a calibration
/// multiplier on that fraction, kept separate so the physical parameter
/// stays recognizable in configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    pub name: String,
    pub cost: f64,
    pub raise: f64,
    pub effectiveness: f64,
    pub benefit_scale: f64,
}

impl Project {
    pub fn new(name: &str, cost: f64, raise: f64, effectiveness: f64) -> Result<Self> {
        // +inf is allowed: it prices a stage that is never worth building
        if cost.is_nan() || cost < 0.0 {
            return Err(Error::Domain(format!("project cost must be >= 0, got {cost}")));
        }
        if !(raise.is_finite() && raise > 0.0) {
            return Err(Error::Domain(format!("project raise must be > 0, got {raise}")));
        }
        if !(effectiveness > 0.0 && effectiveness <= 1.0) {
            return Err(Error::Domain(format!(
                "project effectiveness must lie in (0, 1], got {effectiveness}"
            )));
        }
        Ok(Self { name: name.to_string(), cost, raise, effectiveness, benefit_scale: 1.0 })
    }

    pub fn with_benefit_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Domain(format!("benefit scale must be > 0, got {scale}")));
        }
        if self.effectiveness * scale > 1.0 {
            return Err(Error::Domain(
                "scaled effectiveness exceeds 1; a band cannot be over-protected".into(),
            ));
        }
        self.benefit_scale = scale;
        Ok(self)
    }

    /// Protected fraction actually applied to covered bands.
    pub fn damping(&self) -> f64 {
        self.effectiveness * self.benefit_scale
    }
}

/// Base threshold plus the measures already in place, in installation
/// order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProtectionState {
    pub base_threshold: f64,
    pub installed: Vec<Project>,
}

impl ProtectionState {
    pub fn new(base_threshold: f64) -> Self {
        Self { base_threshold, installed: Vec::new() }
    }

    pub fn with(mut self, project: Project) -> Self {
        self.installed.push(project);
        self
    }
}

// Expected annual damage that survives the installed protection: the loss
// band between adjacent crests keeps the product of (1 - damping) over
// every project tall enough to cover it, and everything above the tallest
// crest is unprotected.
fn residual_damage(
    projects: &[Project],
    u: f64,
    dist: &GevParams,
    curve: &LossCurve,
) -> Result<f64> {
    let mut crests: Vec<f64> = vec![0.0];
    for p in projects {
        if !crests.iter().any(|c| (c - p.raise).abs() < 1e-9) {
            crests.push(p.raise);
        }
    }
    crests.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut total = 0.0;
    for w in crests.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mut factor = 1.0;
        for p in projects {
            if p.raise >= hi - 1e-9 {
                factor *= 1.0 - p.damping();
            }
        }
        total += factor
            * (expected_damage(u + lo, dist, curve)? - expected_damage(u + hi, dist, curve)?);
    }
    total += expected_damage(u + crests[crests.len() - 1], dist, curve)?;
    Ok(total)
}

/// Annual benefit flow of installing `next` on top of `state` at time t:
/// the residual-premium reduction it causes, including loading and
/// exposure growth.
pub fn benefit_flow(
    state: &ProtectionState,
    next: &Project,
    t: f64,
    dist: &GevParams,
    spec: &PremiumSpec,
    curve: &LossCurve,
) -> Result<f64> {
    let u = state.base_threshold;
    let before = residual_damage(&state.installed, u, dist, curve)?;
    let mut with_next: Vec<Project> = state.installed.clone();
    with_next.push(next.clone());
    let after = residual_damage(&with_next, u, dist, curve)?;
    let grow = (spec.exposure_growth * t).exp();
    // the difference is nonnegative by construction; guard the float dust
    Ok(((1.0 + spec.loading) * grow * (before - after)).max(0.0))
}

/// Total annual benefit of everything installed: the sum of each measure's
/// marginal flow in installation order, which telescopes to the full
/// premium reduction of the state.
pub fn combined_annual_benefit(
    state: &ProtectionState,
    t: f64,
    dist: &GevParams,
    spec: &PremiumSpec,
    curve: &LossCurve,
) -> Result<f64> {
    let mut partial = ProtectionState::new(state.base_threshold);
    let mut total = 0.0;
    for p in &state.installed {
        total += benefit_flow(&partial, p, t, dist, spec, curve)?;
        partial.installed.push(p.clone());
    }
    Ok(total)
}
