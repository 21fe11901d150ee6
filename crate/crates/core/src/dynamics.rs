//! Mean-sea-level dynamics: arithmetic Brownian motion, market risk
//! adjustment, and the induced distribution of the high-water-mark location
//! parameter over time.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Arithmetic Brownian motion of the mean sea level: drift mu (mm/yr),
/// volatility sigma (mm/sqrt(yr)), started at the location alpha0 (mm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbmParams {
    pub mu: f64,
    pub sigma: f64,
    pub alpha0: f64,
}

impl AbmParams {
    pub fn new(mu: f64, sigma: f64, alpha0: f64) -> Result<Self> {
        if !(mu.is_finite() && alpha0.is_finite()) {
            return Err(Error::Domain("drift and starting location must be finite".into()));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Domain(format!("volatility must be >= 0, got {sigma}")));
        }
        Ok(Self { mu, sigma, alpha0 })
    }
}

/// Drift reduction turning the physical process into the risk-neutral one.
///
/// Either a direct theta (mm/yr) or a market price of risk and correlation
/// pair from which theta = phi * sigma * rho. When both are configured the
/// direct value governs; `derived` stays available so callers can report
/// the discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RiskAdjustment {
    pub theta: Option<f64>,
    pub market_price_of_risk: Option<f64>,
    pub correlation: Option<f64>,
}

impl RiskAdjustment {
    pub fn direct(theta: f64) -> Self {
        Self { theta: Some(theta), ..Default::default() }
    }

    pub fn capm(market_price_of_risk: f64, correlation: f64) -> Self {
        Self {
            theta: None,
            market_price_of_risk: Some(market_price_of_risk),
            correlation: Some(correlation),
        }
    }

    /// Theta implied by the market-price inputs, if they are present.
    pub fn derived(&self, sigma: f64) -> Option<f64> {
        match (self.market_price_of_risk, self.correlation) {
            (Some(phi), Some(rho)) => Some(phi * sigma * rho),
            _ => None,
        }
    }

    /// Effective theta: the direct value when given, the derived product
    /// otherwise.
    pub fn resolve(&self, sigma: f64) -> Result<f64> {
        let theta = match self.theta {
            Some(t) => t,
            None => self.derived(sigma).ok_or_else(|| {
                Error::Config(
                    "risk adjustment needs either theta or both market price of risk and correlation"
                        .into(),
                )
            })?,
        };
        if !theta.is_finite() {
            return Err(Error::Domain("theta must be finite".into()));
        }
        Ok(theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Physical,
    RiskNeutral,
}

/// Drift of the location process under the risk-neutral measure.
pub fn risk_neutral_drift(p: &AbmParams, adj: &RiskAdjustment) -> Result<f64> {
    Ok(p.mu - adj.resolve(p.sigma)?)
}

/// Mean and standard deviation of the location parameter at horizon T under
/// the chosen measure: Gaussian with linearly drifting mean and sqrt(T)
/// dispersion.
pub fn alpha_distribution(
    p: &AbmParams,
    adj: &RiskAdjustment,
    horizon: f64,
    measure: Measure,
) -> Result<(f64, f64)> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::Domain(format!("horizon must be >= 0, got {horizon}")));
    }
    let drift = match measure {
        Measure::Physical => p.mu,
        Measure::RiskNeutral => risk_neutral_drift(p, adj)?,
    };
    Ok((p.alpha0 + drift * horizon, p.sigma * horizon.sqrt()))
}

/// Simulate location paths on a fixed grid: row k of the result holds path
/// k sampled at 0, dt, 2dt, ..., n*dt with n = round(T/dt).
///
/// Increments are exact Gaussian draws, so there is no discretization bias
/// at any dt. Each path derives from its own counter-indexed stream of one
/// seeded generator: path k is reproducible from (seed, k) alone, and any
/// subset of paths can be generated independently.
pub fn simulate_paths(
    p: &AbmParams,
    adj: &RiskAdjustment,
    measure: Measure,
    horizon: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("dt must be > 0, got {dt}")));
    }
    if n_paths == 0 {
        return Err(Error::Domain("need at least one path".into()));
    }
    if !(horizon.is_finite() && horizon >= dt) {
        return Err(Error::Domain(format!("horizon must be >= dt, got {horizon}")));
    }
    let drift = match measure {
        Measure::Physical => p.mu,
        Measure::RiskNeutral => risk_neutral_drift(p, adj)?,
    };
    let n = (horizon / dt).round() as usize;
    let step_mean = drift * dt;
    let step_sd = p.sigma * dt.sqrt();

    let mut out = Vec::with_capacity(n_paths);
    for path in 0..n_paths {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path as u64);
        let mut row = Vec::with_capacity(n + 1);
        let mut alpha = p.alpha0;
        row.push(alpha);
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            alpha += step_mean + step_sd * z;
            row.push(alpha);
        }
        out.push(row);
    }
    Ok(out)
}
