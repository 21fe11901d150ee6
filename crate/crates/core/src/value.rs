//! Valuation engine: perpetual benefit value of a protection project on a
//! recombining binomial lattice, the option value of delaying the
//! investment, exercise boundaries, two-stage sequencing, and a Monte Carlo
//! cross-check of the lattice.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::adapt::{benefit_flow, Project, ProtectionState};
use crate::dynamics::{AbmParams, RiskAdjustment};
use crate::error::{Error, Result};
use crate::evt::GevParams;
use crate::loss::{LossCurve, PremiumSpec};
use crate::special::{GAUSS_HERMITE_20, GAUSS_LAGUERRE_20};

/// Exercise is declared where payoff >= continuation - this slack, so ties
/// at float precision land on the exercise side.
const BOUNDARY_TOL: f64 = 1e-12;

/// Path sampling interval of the Monte Carlo cross-check (years).
const MC_DT: f64 = 0.25;

/// Time discretization of the valuation lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    pub dt: f64,
    pub horizon: f64,
}

impl LatticeSpec {
    pub fn new(dt: f64, horizon: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("lattice dt must be > 0, got {dt}")));
        }
        if !(horizon.is_finite() && horizon >= dt) {
            return Err(Error::Config(format!("lattice horizon must be >= dt, got {horizon}")));
        }
        let n = (horizon / dt).round();
        if (n * dt - horizon).abs() > 1e-9 * horizon.max(1.0) {
            return Err(Error::Config(format!(
                "horizon {horizon} is not a whole number of steps of dt {dt}"
            )));
        }
        Ok(Self { dt, horizon })
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self { dt: 0.25, horizon: 400.0 }
    }
}

/// Everything the valuation needs about the world: the hazard distribution
/// at time zero, the loss curve, premium terms, the location dynamics, and
/// the discount rate. The risk adjustment is resolved once at construction.
#[derive(Debug, Clone)]
pub struct ValuationInputs {
    pub dist: GevParams,
    pub curve: LossCurve,
    pub premium: PremiumSpec,
    pub abm: AbmParams,
    pub theta: f64,
    pub rate: f64,
}

impl ValuationInputs {
    pub fn new(
        dist: GevParams,
        curve: LossCurve,
        premium: PremiumSpec,
        abm: AbmParams,
        adjustment: &RiskAdjustment,
        rate: f64,
    ) -> Result<Self> {
        if !rate.is_finite() {
            return Err(Error::Domain(format!("discount rate must be finite, got {rate}")));
        }
        if rate <= premium.exposure_growth {
            return Err(Error::Domain(format!(
                "discount rate {rate} must exceed exposure growth {}; the perpetual value diverges",
                premium.exposure_growth
            )));
        }
        if (dist.location - abm.alpha0).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "hazard location {} and process origin {} disagree",
                dist.location, abm.alpha0
            )));
        }
        let theta = adjustment.resolve(abm.sigma)?;
        if !(abm.mu - theta).is_finite() {
            return Err(Error::Domain("risk-neutral drift must be finite".into()));
        }
        Ok(Self { dist, curve, premium, abm, theta, rate })
    }

    /// Discount rate net of exposure growth; the growth factor of the
    /// benefit flow folds into the discounting of the flat t = 0 flow.
    pub fn net_discount(&self) -> f64 {
        self.rate - self.premium.exposure_growth
    }

    /// Drift of the location process under the pricing measure.
    pub fn drift(&self) -> f64 {
        self.abm.mu - self.theta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageValues {
    pub name: String,
    /// Value minus cost when the stage is built immediately.
    pub npv: f64,
    /// This stage's share of the option value.
    pub option_value: f64,
}

/// Smallest exercising location per time step; steps where no reachable
/// node exercises are omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub name: String,
    /// (time in years, location in mm)
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValuationResult {
    pub npv: f64,
    pub option_value: f64,
    pub stages: Vec<StageValues>,
    pub boundaries: Vec<BoundaryCurve>,
}

/// Time-zero lattice profiles over the location grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OptionProfile {
    pub alphas: Vec<f64>,
    pub value: Vec<f64>,
    pub option: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathwayChoice {
    /// One entry per build order: the project names in order and the full
    /// valuation of that order.
    pub evaluations: Vec<(Vec<String>, ValuationResult)>,
    pub selected: usize,
}

impl PathwayChoice {
    pub fn selected_order(&self) -> &[String] {
        &self.evaluations[self.selected].0
    }

    pub fn selected_result(&self) -> &ValuationResult {
        &self.evaluations[self.selected].1
    }
}

/// Recombining binomial tree for the location process: after i steps the
/// reachable nodes are root + m * dalpha with |m| <= i and m = i (mod 2);
/// the grid holds every node of the deepest step.
struct LatticeFrame {
    n: usize,
    dt: f64,
    dalpha: f64,
    p: f64,
    q: f64,
    df_value: f64,
    df_option: f64,
    rho: f64,
    nu: f64,
    alphas: Vec<f64>,
}

impl LatticeFrame {
    fn build(root: f64, inputs: &ValuationInputs, spec: &LatticeSpec) -> Result<Self> {
        let sigma = inputs.abm.sigma;
        if sigma <= 0.0 {
            return Err(Error::Domain(
                "lattice valuation needs sigma > 0; a zero-volatility world has no option to price"
                    .into(),
            ));
        }
        if !root.is_finite() {
            return Err(Error::Domain(format!("lattice root must be finite, got {root}")));
        }
        let n = spec.n_steps();
        let dt = spec.dt;
        let nu = inputs.drift();
        let dalpha = sigma * dt.sqrt();
        let p = 0.5 * (1.0 + nu * dt.sqrt() / sigma);
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!(
                "up-move probability {p} outside (0, 1); shrink dt or check the drift"
            )));
        }
        let rho = inputs.net_discount();
        let alphas = (0..=2 * n).map(|j| root + (j as f64 - n as f64) * dalpha).collect();
        Ok(Self {
            n,
            dt,
            dalpha,
            p,
            q: 1.0 - p,
            df_value: (-rho * dt).exp(),
            df_option: (-inputs.rate * dt).exp(),
            rho,
            nu,
            alphas,
        })
    }

    /// Benefit flow of `next` given `state`, tabulated over the grid at
    /// t = 0. Exposure growth is handled by discounting at the net rate.
    fn g_table(
        &self,
        state: &ProtectionState,
        next: &Project,
        inputs: &ValuationInputs,
    ) -> Result<Vec<f64>> {
        self.alphas
            .iter()
            .map(|&a| {
                benefit_flow(
                    state,
                    next,
                    0.0,
                    &inputs.dist.with_location(a),
                    &inputs.premium,
                    &inputs.curve,
                )
            })
            .collect()
    }

    /// Terminal closure: the remaining perpetual flow to first order in the
    /// drift, g/rho + nu g'/rho^2, with finite-difference gradients.
    fn terminal_value(&self, g: &[f64]) -> Vec<f64> {
        let m = g.len();
        let r2 = self.rho * self.rho;
        (0..m)
            .map(|j| {
                let grad = if j == 0 {
                    (g[1] - g[0]) / self.dalpha
                } else if j == m - 1 {
                    (g[m - 1] - g[m - 2]) / self.dalpha
                } else {
                    (g[j + 1] - g[j - 1]) / (2.0 * self.dalpha)
                };
                g[j] / self.rho + self.nu * grad / r2
            })
            .collect()
    }

    /// One backward step of the flow-accruing value; grid edges copy their
    /// neighbor (those nodes are unreachable from the root anyway).
    fn step_value(&self, g: &[f64], v: &[f64]) -> Vec<f64> {
        let m = v.len();
        let mut out = vec![0.0; m];
        for j in 1..m - 1 {
            out[j] = g[j] * self.dt + self.df_value * (self.p * v[j + 1] + self.q * v[j - 1]);
        }
        out[0] = out[1];
        out[m - 1] = out[m - 2];
        out
    }

    /// Discounted risk-neutral expectation of an option profile.
    fn continuation(&self, phi: &[f64]) -> Vec<f64> {
        let m = phi.len();
        let mut out = vec![0.0; m];
        for j in 1..m - 1 {
            out[j] = self.df_option * (self.p * phi[j + 1] + self.q * phi[j - 1]);
        }
        out[0] = out[1];
        out[m - 1] = out[m - 2];
        out
    }

    /// Smallest exercising location among the nodes reachable at step i.
    fn boundary(&self, i: usize, payoff: &[f64], cont: &[f64]) -> Option<f64> {
        let lo = self.n - i.min(self.n);
        let hi = self.n + i.min(self.n);
        (lo..=hi).find(|&j| payoff[j] >= cont[j] - BOUNDARY_TOL).map(|j| self.alphas[j])
    }

    fn root(&self) -> usize {
        self.n
    }

    fn boundary_points(&self, raw: &[Option<f64>]) -> Vec<(f64, f64)> {
        raw.iter().enumerate().filter_map(|(i, b)| b.map(|a| (i as f64 * self.dt, a))).collect()
    }
}

/// Present value at `alpha` of the benefit flow unlocked by building `next`
/// on top of `state` now, held forever.
pub fn project_value(
    alpha: f64,
    state: &ProtectionState,
    next: &Project,
    inputs: &ValuationInputs,
    spec: &LatticeSpec,
) -> Result<f64> {
    if inputs.abm.sigma == 0.0 {
        return deterministic_value(alpha, state, next, inputs, spec);
    }
    let frame = LatticeFrame::build(alpha, inputs, spec)?;
    let g = frame.g_table(state, next, inputs)?;
    let mut v = frame.terminal_value(&g);
    for _ in 0..frame.n {
        v = frame.step_value(&g, &v);
    }
    Ok(v[frame.root()])
}

/// Value of building now minus the cost of doing so.
pub fn npv(
    alpha: f64,
    state: &ProtectionState,
    next: &Project,
    inputs: &ValuationInputs,
    spec: &LatticeSpec,
) -> Result<f64> {
    Ok(project_value(alpha, state, next, inputs, spec)? - next.cost)
}

// Zero volatility: the location moves on the deterministic drift line, so
// the value is a plain discounted sum along it, same accrual convention and
// terminal closure as the lattice.
fn deterministic_value(
    alpha: f64,
    state: &ProtectionState,
    next: &Project,
    inputs: &ValuationInputs,
    spec: &LatticeSpec,
) -> Result<f64> {
    let g_at = |a: f64| {
        benefit_flow(
            state,
            next,
            0.0,
            &inputs.dist.with_location(a),
            &inputs.premium,
            &inputs.curve,
        )
    };
    let n = spec.n_steps();
    let dt = spec.dt;
    let rho = inputs.net_discount();
    let nu = inputs.drift();
    let a_end = alpha + nu * n as f64 * dt;
    let h = 1.0;
    let grad = (g_at(a_end + h)? - g_at(a_end - h)?) / (2.0 * h);
    let mut v = g_at(a_end)? / rho + nu * grad / (rho * rho);
    let df = (-rho * dt).exp();
    for i in (0..n).rev() {
        v = g_at(alpha + nu * i as f64 * dt)? * dt + df * v;
    }
    Ok(v)
}

fn single_stage(
    alpha: f64,
    state: &ProtectionState,
    next: &Project,
    inputs: &ValuationInputs,
    spec: &LatticeSpec,
) -> Result<(ValuationResult, OptionProfile)> {
    let frame = LatticeFrame::build(alpha, inputs, spec)?;
    let g = frame.g_table(state, next, inputs)?;
    let cost = next.cost;

    let mut v = frame.terminal_value(&g);
    let mut phi: Vec<f64> = v.iter().map(|&x| (x - cost).max(0.0)).collect();
    let mut raw_bounds = vec![None; frame.n];
    for i in (0..frame.n).rev() {
        v = frame.step_value(&g, &v);
        let cont = frame.continuation(&phi);
        let payoff: Vec<f64> = v.iter().map(|&x| x - cost).collect();
        raw_bounds[i] = frame.boundary(i, &payoff, &cont);
        phi = payoff.iter().zip(&cont).map(|(&a, &b)| a.max(b)).collect();
    }

    let k = frame.root();
    let stage_npv = v[k] - cost;
    let result = ValuationResult {
        npv: stage_npv,
        option_value: phi[k],
        stages: vec![StageValues { name: next.name.clone(), npv: stage_npv, option_value: phi[k] }],
        boundaries: vec![BoundaryCurve {
            name: next.name.clone(),
            points: frame.boundary_points(&raw_bounds),
        }],
    };
    let profile = OptionProfile { alphas: frame.alphas.clone(), value: v, option: phi };
    Ok((result, profile))
}

/// Option value of the right, never the obligation, to build `next` at any
/// time, rooted at `alpha`.
pub fn option_value_single(
    alpha: f64,
    state: &ProtectionState,
    next: &Project,
    inputs: &ValuationInputs,
    spec: &LatticeSpec,
) -> Result<ValuationResult> {
    Ok(single_stage(alpha, state, next, inputs, spec)?.0)
}

/// Time-zero value and option profiles over the whole grid, for inspection
/// and diagnostics.
pub fn option_profile(
    alpha: f64,
    state: &ProtectionState,
    next: &Project,
    inputs: &ValuationInputs,
    spec: &LatticeSpec,
) -> Result<OptionProfile> {
    Ok(single_stage(alpha, state, next, inputs, spec)?.1)
}

/// Value the compound right to build `order[0]` and, once it is in place,
/// `order[1]`. The first-stage exercise payoff carries the then-current
/// value of the second option; the reported split prices the first stage
/// with the embedded option zeroed out and assigns the remainder to the
/// second stage.
pub fn option_value_sequence(
    base: &ProtectionState,
    order: &[Project],
    inputs: &ValuationInputs,
    spec: &LatticeSpec,
) -> Result<ValuationResult> {
    if order.len() != 2 {
        return Err(Error::Config(format!(
            "sequencing is defined for exactly two projects, got {}",
            order.len()
        )));
    }
    let frame = LatticeFrame::build(inputs.abm.alpha0, inputs, spec)?;
    let first = &order[0];
    let second = &order[1];
    let g1 = frame.g_table(base, first, inputs)?;
    let with_first = base.clone().with(first.clone());
    let g2 = frame.g_table(&with_first, second, inputs)?;
    let (c1, c2) = (first.cost, second.cost);
    let n = frame.n;

    // both stages run backward in lockstep so the second-stage option at
    // step i is on hand when the first-stage payoff at step i needs it
    let mut v2 = frame.terminal_value(&g2);
    let mut phi2: Vec<f64> = v2.iter().map(|&x| (x - c2).max(0.0)).collect();
    let mut v1 = frame.terminal_value(&g1);
    let mut phi1: Vec<f64> = v1.iter().zip(&phi2).map(|(&x, &e)| (x - c1 + e).max(0.0)).collect();
    let mut phi1_bare: Vec<f64> = v1.iter().map(|&x| (x - c1).max(0.0)).collect();
    let mut raw1 = vec![None; n];
    let mut raw2 = vec![None; n];

    for i in (0..n).rev() {
        v2 = frame.step_value(&g2, &v2);
        let cont2 = frame.continuation(&phi2);
        let pay2: Vec<f64> = v2.iter().map(|&x| x - c2).collect();
        raw2[i] = frame.boundary(i, &pay2, &cont2);
        phi2 = pay2.iter().zip(&cont2).map(|(&a, &b)| a.max(b)).collect();

        v1 = frame.step_value(&g1, &v1);
        let cont1 = frame.continuation(&phi1);
        let pay1: Vec<f64> = v1.iter().zip(&phi2).map(|(&x, &e)| x - c1 + e).collect();
        raw1[i] = frame.boundary(i, &pay1, &cont1);
        phi1 = pay1.iter().zip(&cont1).map(|(&a, &b)| a.max(b)).collect();

        let cont_bare = frame.continuation(&phi1_bare);
        phi1_bare = v1.iter().zip(&cont_bare).map(|(&x, &b)| (x - c1).max(b)).collect();
    }

    let k = frame.root();
    let total = phi1[k];
    let first_share = phi1_bare[k];
    let npv1 = v1[k] - c1;
    let npv2 = v2[k] - c2;
    Ok(ValuationResult {
        npv: npv1 + npv2,
        option_value: total,
        stages: vec![
            StageValues { name: first.name.clone(), npv: npv1, option_value: first_share },
            StageValues { name: second.name.clone(), npv: npv2, option_value: total - first_share },
        ],
        boundaries: vec![
            BoundaryCurve { name: first.name.clone(), points: frame.boundary_points(&raw1) },
            BoundaryCurve { name: second.name.clone(), points: frame.boundary_points(&raw2) },
        ],
    })
}

/// Value every build order of the given projects and pick the one with the
/// highest compound option value; ties go to the cheaper first stage.
pub fn select_pathway(
    base: &ProtectionState,
    projects: &[Project],
    inputs: &ValuationInputs,
    spec: &LatticeSpec,
) -> Result<PathwayChoice> {
    if projects.len() != 2 {
        return Err(Error::Config(format!(
            "pathway selection is defined for exactly two projects, got {}",
            projects.len()
        )));
    }
    let mut evaluations = Vec::with_capacity(2);
    let mut first_costs = Vec::with_capacity(2);
    for ord in [[0usize, 1], [1, 0]] {
        let seq = [projects[ord[0]].clone(), projects[ord[1]].clone()];
        let names = vec![seq[0].name.clone(), seq[1].name.clone()];
        first_costs.push(seq[0].cost);
        evaluations.push((names, option_value_sequence(base, &seq, inputs, spec)?));
    }

    let scale = evaluations.iter().map(|e| e.1.option_value.abs()).fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    let mut selected = 0;
    for k in 1..evaluations.len() {
        let gap = evaluations[k].1.option_value - evaluations[selected].1.option_value;
        if gap > tol || (gap.abs() <= tol && first_costs[k] < first_costs[selected]) {
            selected = k;
        }
    }
    Ok(PathwayChoice { evaluations, selected })
}

/// Monte Carlo estimate of `project_value`, by a different route: exact
/// Gaussian path increments, per-path trapezoid of the discounted flow, and
/// a quadrature closure for everything past the horizon. Returns (mean,
/// standard error). Path k is generated from stream k of the seeded
/// generator, so any subset of paths is reproducible in isolation.
pub fn mc_project_value(
    alpha: f64,
    state: &ProtectionState,
    next: &Project,
    inputs: &ValuationInputs,
    horizon: f64,
    n_paths: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(horizon.is_finite() && horizon >= MC_DT) {
        return Err(Error::Domain(format!("MC horizon must be >= {MC_DT}, got {horizon}")));
    }
    if n_paths < 2 {
        return Err(Error::Domain("need at least two paths for a standard error".into()));
    }
    let rho = inputs.net_discount();
    let nu = inputs.drift();
    let sigma = inputs.abm.sigma;
    let n = (horizon / MC_DT).round().max(1.0) as usize;
    let t_end = n as f64 * MC_DT;

    // benefit flow on a 1 mm grid wide enough for +/- 8 sd excursions;
    // beyond it the flow is clamped flat (both ends decay toward zero)
    let spread = 8.0 * sigma * t_end.sqrt() + 100.0;
    let lo = alpha.min(alpha + nu * t_end) - spread;
    let hi = alpha.max(alpha + nu * t_end) + spread;
    let m = (hi - lo).ceil() as usize + 1;
    let g: Vec<f64> = (0..m)
        .map(|k| {
            benefit_flow(
                state,
                next,
                0.0,
                &inputs.dist.with_location(lo + k as f64),
                &inputs.premium,
                &inputs.curve,
            )
        })
        .collect::<Result<_>>()?;
    let g_at = |a: f64| -> f64 {
        let x = (a - lo).clamp(0.0, (m - 1) as f64);
        let k = (x.floor() as usize).min(m - 2);
        let f = x - k as f64;
        g[k] * (1.0 - f) + g[k + 1] * f
    };

    // discounted expected flow past the horizon, given the terminal
    // location: time by Laguerre (weight e^-y after tau = y/rho), location
    // by Hermite, tabulated coarsely and interpolated per path
    let tail_step = 25.0;
    let tm = ((hi - lo) / tail_step).ceil() as usize + 1;
    let tails: Vec<f64> = (0..tm)
        .map(|k| {
            let a0 = lo + k as f64 * tail_step;
            let mut acc = 0.0;
            for (y, wy) in GAUSS_LAGUERRE_20 {
                let tau = y / rho;
                let mean = a0 + nu * tau;
                let sd = sigma * tau.sqrt();
                let mut inner = 0.0;
                for (x, wx) in GAUSS_HERMITE_20 {
                    inner += wx * g_at(mean + std::f64::consts::SQRT_2 * sd * x);
                }
                acc += wy * inner / PI.sqrt();
            }
            acc / rho
        })
        .collect();
    let tail_at = |a: f64| -> f64 {
        let x = ((a - lo) / tail_step).clamp(0.0, (tm - 1) as f64);
        let k = (x.floor() as usize).min(tm - 2);
        let f = x - k as f64;
        tails[k] * (1.0 - f) + tails[k + 1] * f
    };

    let step_mean = nu * MC_DT;
    let step_sd = sigma * MC_DT.sqrt();
    let df_step = (-rho * MC_DT).exp();
    let mut totals = Vec::with_capacity(n_paths);
    for path in 0..n_paths {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path as u64);
        let mut a = alpha;
        let mut disc = 1.0;
        let mut acc = 0.5 * g_at(a) * MC_DT;
        for k in 1..=n {
            let z: f64 = StandardNormal.sample(&mut rng);
            a += step_mean + step_sd * z;
            disc *= df_step;
            let w = if k == n { 0.5 } else { 1.0 };
            acc += w * disc * g_at(a) * MC_DT;
        }
        acc += disc * tail_at(a);
        totals.push(acc);
    }
    let mean = totals.iter().sum::<f64>() / n_paths as f64;
    let var = totals.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n_paths as f64 - 1.0);
    Ok((mean, (var.max(0.0) / n_paths as f64).sqrt()))
}
