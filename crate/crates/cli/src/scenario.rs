//! Scenario files: TOML sections with defaults matching the New York City
//! case-study baseline, resolved into engine inputs.
//!
//! An empty file is a valid scenario and loads the full baseline; every
//! section and field can be overridden independently.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use floodopt_core::{
    fit_mle, AbmParams, Error, GevParams, LatticeSpec, LossCurve, PremiumSpec, Project,
    ProtectionState, QuadraticLoss, Result, RiskAdjustment, StepLoss, ValuationInputs,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScenarioFile {
    hazard: HazardSection,
    loss: LossSection,
    premium: PremiumSection,
    dynamics: DynamicsSection,
    discount: DiscountSection,
    lattice: LatticeSection,
    plot: PlotSection,
    projects: Vec<ProjectSection>,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            hazard: HazardSection::default(),
            loss: LossSection::default(),
            premium: PremiumSection::default(),
            dynamics: DynamicsSection::default(),
            discount: DiscountSection::default(),
            lattice: LatticeSection::default(),
            plot: PlotSection::default(),
            projects: default_projects(),
        }
    }
}

/// High-water-mark law at time zero. Either explicit GEV parameters or a
/// `fit_from` CSV of annual surge maxima; a fitted location is shifted by
/// `surge_offset_mm` (mean tide plus current mean sea level) onto the
/// station datum.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct HazardSection {
    location: f64,
    scale: f64,
    shape: f64,
    fit_from: Option<PathBuf>,
    surge_offset_mm: f64,
}

impl Default for HazardSection {
    fn default() -> Self {
        Self {
            location: 1642.0,
            scale: 131.0,
            shape: 0.27,
            fit_from: None,
            surge_offset_mm: 1200.0,
        }
    }
}

/// Loss curve in $B as a function of water level in mm. The quadratic kind
/// is a*x^2 + b*x + c above `threshold` with c pinned so the loss vanishes
/// there; the step kind is piecewise constant.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LossSection {
    kind: String,
    a: f64,
    b: f64,
    threshold: f64,
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl Default for LossSection {
    fn default() -> Self {
        Self {
            kind: "quadratic".into(),
            a: 0.0,
            b: 0.0393,
            threshold: 2506.0,
            breakpoints: Vec::new(),
            levels: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PremiumSection {
    loading: f64,
    exposure_growth: f64,
}

impl Default for PremiumSection {
    fn default() -> Self {
        Self { loading: 0.03, exposure_growth: 0.01 }
    }
}

/// Mean-sea-level dynamics and the drift adjustment used for pricing.
/// `theta` is the direct adjustment; alternatively give both
/// `market_price_of_risk` and `correlation` and theta is their product
/// with sigma. When nothing is set the baseline theta applies.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DynamicsSection {
    mu: f64,
    sigma: f64,
    theta: Option<f64>,
    market_price_of_risk: Option<f64>,
    correlation: Option<f64>,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self { mu: 6.0, sigma: 25.0, theta: None, market_price_of_risk: None, correlation: None }
    }
}

const BASELINE_THETA: f64 = 0.15;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DiscountSection {
    rate: f64,
}

impl Default for DiscountSection {
    fn default() -> Self {
        Self { rate: 0.04 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LatticeSection {
    dt: f64,
    horizon: f64,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self { dt: 0.25, horizon: 400.0 }
    }
}

/// Fixed datum offset between the location parameter (mm) and the water
/// levels shown on plot axes (m): level_m = (alpha_mm - offset_mm) / 1000.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PlotSection {
    offset_mm: f64,
}

impl Default for PlotSection {
    fn default() -> Self {
        Self { offset_mm: 367.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectSection {
    name: String,
    cost: f64,
    raise: f64,
    effectiveness: f64,
    #[serde(default = "unit_scale")]
    benefit_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

fn default_projects() -> Vec<ProjectSection> {
    vec![
        ProjectSection {
            name: "proofing".into(),
            cost: 0.246,
            raise: 610.0,
            effectiveness: 0.30,
            benefit_scale: 0.196299,
        },
        ProjectSection {
            name: "dike".into(),
            cost: 15.95,
            raise: 1000.0,
            effectiveness: 1.0,
            benefit_scale: 1.0,
        },
    ]
}

/// A fully validated scenario: every field has passed its component
/// constructor and the cross-field checks.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub dist: GevParams,
    pub curve: LossCurve,
    pub premium: PremiumSpec,
    pub abm: AbmParams,
    pub adjustment: RiskAdjustment,
    pub rate: f64,
    pub lattice: LatticeSpec,
    pub plot_offset_mm: f64,
    pub projects: Vec<Project>,
}

impl Scenario {
    pub fn inputs(&self) -> Result<ValuationInputs> {
        ValuationInputs::new(
            self.dist,
            self.curve.clone(),
            self.premium,
            self.abm,
            &self.adjustment,
            self.rate,
        )
    }

    /// Unprotected starting state: the loss curve's own threshold.
    pub fn base_state(&self) -> ProtectionState {
        ProtectionState::new(self.curve.threshold())
    }

    /// Water level (m) on plot axes for a location parameter (mm).
    pub fn plot_level_m(&self, alpha_mm: f64) -> f64 {
        (alpha_mm - self.plot_offset_mm) / 1000.0
    }
}

/// Load a scenario file, or the all-defaults baseline when `path` is None.
pub fn load_scenario(path: Option<&Path>) -> Result<Scenario> {
    let file = match path {
        None => ScenarioFile::default(),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("scenario: {e}")))?
        }
    };
    resolve(file)
}

fn section<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Config(format!("{name}: {e}")))
}

fn resolve(file: ScenarioFile) -> Result<Scenario> {
    let dist = match &file.hazard.fit_from {
        None => section(
            "hazard",
            GevParams::new(file.hazard.location, file.hazard.scale, file.hazard.shape),
        )?,
        Some(p) => {
            let maxima = read_maxima_csv(p)?;
            let fit = section("hazard.fit_from", fit_mle(&maxima))?;
            section(
                "hazard",
                GevParams::new(
                    fit.params.location + file.hazard.surge_offset_mm,
                    fit.params.scale,
                    fit.params.shape,
                ),
            )?
        }
    };

    let curve = match file.loss.kind.as_str() {
        "quadratic" => LossCurve::Quadratic(section(
            "loss",
            QuadraticLoss::from_threshold(file.loss.a, file.loss.b, file.loss.threshold),
        )?),
        "step" => LossCurve::Step(section(
            "loss",
            StepLoss::new(file.loss.breakpoints.clone(), file.loss.levels.clone()),
        )?),
        other => {
            return Err(Error::Config(format!(
                "loss.kind must be \"quadratic\" or \"step\", got \"{other}\""
            )))
        }
    };

    let premium =
        section("premium", PremiumSpec::new(file.premium.loading, file.premium.exposure_growth))?;
    if file.discount.rate <= file.premium.exposure_growth {
        return Err(Error::Config(format!(
            "discount.rate must satisfy r > gamma, got r = {} and gamma = {}",
            file.discount.rate, file.premium.exposure_growth
        )));
    }

    // the location process starts exactly at the hazard location
    let abm =
        section("dynamics", AbmParams::new(file.dynamics.mu, file.dynamics.sigma, dist.location))?;
    let d = &file.dynamics;
    let adjustment = match (d.theta, d.market_price_of_risk, d.correlation) {
        (None, None, None) => RiskAdjustment::direct(BASELINE_THETA),
        _ => RiskAdjustment {
            theta: d.theta,
            market_price_of_risk: d.market_price_of_risk,
            correlation: d.correlation,
        },
    };
    section("dynamics", adjustment.resolve(abm.sigma))?;

    let lattice = section("lattice", LatticeSpec::new(file.lattice.dt, file.lattice.horizon))?;
    if !file.plot.offset_mm.is_finite() {
        return Err(Error::Config("plot.offset_mm must be finite".into()));
    }

    let mut projects = Vec::with_capacity(file.projects.len());
    for p in &file.projects {
        let proj = section(
            "projects",
            Project::new(&p.name, p.cost, p.raise, p.effectiveness)
                .and_then(|pr| pr.with_benefit_scale(p.benefit_scale)),
        )?;
        if projects.iter().any(|q: &Project| q.name == proj.name) {
            return Err(Error::Config(format!("projects: duplicate name \"{}\"", proj.name)));
        }
        projects.push(proj);
    }

    Ok(Scenario {
        dist,
        curve,
        premium,
        abm,
        adjustment,
        rate: file.discount.rate,
        lattice,
        plot_offset_mm: file.plot.offset_mm,
        projects,
    })
}

/// Annual maxima from a CSV with a header naming a `max_surge_mm` column;
/// both the two-column fixture layout and the five-column output of the
/// `fit` subcommand parse.
fn read_maxima_csv(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read maxima {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Structure { line: 1, msg: "empty maxima file".into() })?;
    let col = header
        .split(',')
        .position(|c| c.trim() == "max_surge_mm")
        .ok_or_else(|| Error::Structure { line: 1, msg: "no max_surge_mm column".into() })?;
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let field = line.split(',').nth(col).ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: "row is short of the max_surge_mm column".into(),
        })?;
        let v: f64 = field.trim().parse().map_err(|e| Error::Parse {
            line: idx + 1,
            msg: format!("bad max_surge_mm value `{field}`: {e}"),
        })?;
        out.push(v);
    }
    Ok(out)
}
