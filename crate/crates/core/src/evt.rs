//! Generalized extreme value distribution and maximum-likelihood fitting.
//!
//! Annual maximum surges follow a GEV law; the high-water-mark distribution is
//! the same law with its location raised to alpha = mean sea level + mean tide
//! + surge location. A single parameter struct serves both roles.

use crate::error::{Error, Result};

/// GEV parameter triple. `shape == 0.0` selects the Gumbel limit explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GevParams {
    /// Location, mm. Plays the role of alpha for the high-water-mark law.
    pub location: f64,
    /// Scale, mm. Strictly positive.
    pub scale: f64,
    /// Shape. Positive gives a heavy upper tail with finite lower endpoint.
    pub shape: f64,
}

impl GevParams {
    pub fn new(location: f64, scale: f64, shape: f64) -> Result<Self> {
        if !location.is_finite() || !scale.is_finite() || !shape.is_finite() {
            return Err(Error::Domain("GEV parameters must be finite".into()));
        }
        if scale <= 0.0 {
            return Err(Error::Domain(format!("GEV scale must be positive, got {scale}")));
        }
        Ok(Self { location, scale, shape })
    }

    /// Same shape and scale at a new location.
    pub fn with_location(&self, location: f64) -> Self {
        Self { location, ..*self }
    }

    /// Support endpoints (lower, upper). The finite one sits at
    /// location - scale/shape: a lower bound when shape > 0, an upper bound
    /// when shape < 0.
    pub fn support(&self) -> (f64, f64) {
        if self.shape > 0.0 {
            (self.location - self.scale / self.shape, f64::INFINITY)
        } else if self.shape < 0.0 {
            (f64::NEG_INFINITY, self.location - self.scale / self.shape)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
    }

    /// Distribution function H(x). Clamps to {0, 1} outside the support.
    pub fn cdf(&self, x: f64) -> f64 {
        debug_assert!(x.is_finite());
        let z = (x - self.location) / self.scale;
        if self.shape == 0.0 {
            return (-(-z).exp()).exp();
        }
        let t = 1.0 + self.shape * z;
        if t <= 0.0 {
            return if self.shape > 0.0 { 0.0 } else { 1.0 };
        }
        (-t.powf(-1.0 / self.shape)).exp()
    }

    /// Log density. Returns -inf outside the support.
    pub fn logpdf(&self, x: f64) -> f64 {
        debug_assert!(x.is_finite());
        let z = (x - self.location) / self.scale;
        if self.shape == 0.0 {
            return -self.scale.ln() - z - (-z).exp();
        }
        let t = 1.0 + self.shape * z;
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        -self.scale.ln() - (1.0 + 1.0 / self.shape) * t.ln() - t.powf(-1.0 / self.shape)
    }

    /// Quantile function, p in (0, 1).
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!(p > 0.0 && p < 1.0);
        let w = -p.ln();
        if self.shape == 0.0 {
            self.location - self.scale * w.ln()
        } else {
            self.location + self.scale * (w.powf(-self.shape) - 1.0) / self.shape
        }
    }

    /// Log-likelihood of a sample; -inf if any observation violates the
    /// support constraint.
    pub fn loglik(&self, sample: &[f64]) -> f64 {
        sample.iter().map(|&x| self.logpdf(x)).sum()
    }
}

/// Result of a maximum-likelihood fit.
#[derive(Debug, Clone, Copy)]
pub struct GevFit {
    pub params: GevParams,
    pub loglik: f64,
    /// False when the simplex search hit its iteration cap before shrinking
    /// below tolerance; the best point found is still reported.
    pub converged: bool,
}

/// Minimum sample size accepted by `fit_mle`.
pub const MIN_FIT_OBS: usize = 20;

const SHAPE_MIN: f64 = -0.5;
const SHAPE_MAX: f64 = 1.0;
const NM_MAX_ITER: usize = 2000;
const NM_TOL: f64 = 1e-8;

/// Fit GEV parameters by maximum likelihood.
///
/// Derivative-free simplex search over (location, ln scale, shape) from
/// Gumbel moment starts; the shape is confined to [-0.5, 1.0] where the MLE
/// is regular and loss moments exist.
pub fn fit_mle(maxima: &[f64]) -> Result<GevFit> {
    if maxima.len() < MIN_FIT_OBS {
        return Err(Error::InsufficientData(format!(
            "GEV fit needs at least {MIN_FIT_OBS} maxima, got {}",
            maxima.len()
        )));
    }
    if maxima.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite observation in GEV fit input".into()));
    }
    let n = maxima.len() as f64;
    let mean = maxima.iter().sum::<f64>() / n;
    let var = maxima.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    if std == 0.0 {
        return Err(Error::Degenerate("all observations identical".into()));
    }

    // Gumbel moment start
    let s0 = (6.0f64.sqrt() / std::f64::consts::PI) * std;
    let m0 = mean - 0.5772 * s0;
    let xi0 = 0.1;

    let nll = |theta: &[f64]| -> f64 {
        let (m, ln_s, xi) = (theta[0], theta[1], theta[2]);
        if !(SHAPE_MIN..=SHAPE_MAX).contains(&xi) {
            return f64::INFINITY;
        }
        let p = GevParams { location: m, scale: ln_s.exp(), shape: xi };
        let ll = p.loglik(maxima);
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    };

    let x0 = vec![m0, s0.ln(), xi0];
    let steps = vec![0.1 * s0, 0.1, 0.05];
    let out = nelder_mead(nll, x0, &steps, NM_MAX_ITER, NM_TOL);
    let params = GevParams::new(out.x[0], out.x[1].exp(), out.x[2])?;
    Ok(GevFit { params, loglik: -out.fx, converged: out.converged })
}

/// Profiled log-likelihood: hold one parameter at `at`, maximize over the
/// other two. Used for likelihood-ratio confidence regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfiledParam {
    Location,
    Scale,
    Shape,
}

pub fn profile_loglik(maxima: &[f64], param: ProfiledParam, at: f64) -> Result<f64> {
    if maxima.len() < MIN_FIT_OBS {
        return Err(Error::InsufficientData("profile likelihood needs a full sample".into()));
    }
    let n = maxima.len() as f64;
    let mean = maxima.iter().sum::<f64>() / n;
    let var = maxima.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt().max(1e-9);
    let s0 = (6.0f64.sqrt() / std::f64::consts::PI) * std;
    let m0 = mean - 0.5772 * s0;

    let assemble = move |free: &[f64]| -> (f64, f64, f64) {
        match param {
            ProfiledParam::Location => (at, free[0], free[1]),
            ProfiledParam::Scale => (free[0], at.ln(), free[1]),
            ProfiledParam::Shape => (free[0], free[1], at),
        }
    };
    let nll = |free: &[f64]| -> f64 {
        let (m, ln_s, xi) = assemble(free);
        if !(SHAPE_MIN..=SHAPE_MAX).contains(&xi) {
            return f64::INFINITY;
        }
        let p = GevParams { location: m, scale: ln_s.exp(), shape: xi };
        let ll = p.loglik(maxima);
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    };
    let (x0, steps) = match param {
        ProfiledParam::Location => (vec![s0.ln(), 0.1], vec![0.1, 0.05]),
        ProfiledParam::Scale => (vec![m0, 0.1], vec![0.1 * s0, 0.05]),
        ProfiledParam::Shape => (vec![m0, s0.ln()], vec![0.1 * s0, 0.1]),
    };
    let out = nelder_mead(nll, x0, &steps, NM_MAX_ITER, NM_TOL);
    Ok(-out.fx)
}

struct NmResult {
    x: Vec<f64>,
    fx: f64,
    converged: bool,
}

/// Nelder-Mead simplex minimization with standard coefficients.
/// Converges when the simplex diameter falls below `tol`.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: Vec<f64>,
    steps: &[f64],
    max_iter: usize,
    tol: f64,
) -> NmResult {
    let dim = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = f(&x0);
    simplex.push((x0.clone(), f0));
    for i in 0..dim {
        let mut xi = x0.clone();
        xi[i] += steps[i];
        let fx = f(&xi);
        simplex.push((xi, fx));
    }

    let mut converged = false;
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let diameter = (1..=dim)
            .map(|i| {
                simplex[i]
                    .0
                    .iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < tol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();

        let lerp = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
        };

        let refl = lerp(1.0);
        let f_refl = f(&refl);
        if f_refl < simplex[0].1 {
            let exp_pt = lerp(2.0);
            let f_exp = f(&exp_pt);
            simplex[dim] = if f_exp < f_refl { (exp_pt, f_exp) } else { (refl, f_refl) };
        } else if f_refl < simplex[dim - 1].1 {
            simplex[dim] = (refl, f_refl);
        } else {
            let contr = if f_refl < worst.1 { lerp(0.5) } else { lerp(-0.5) };
            let f_contr = f(&contr);
            if f_contr < worst.1.min(f_refl) {
                simplex[dim] = (contr, f_contr);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let xs: Vec<f64> =
                        v.0.iter().zip(&best).map(|(x, b)| b + 0.5 * (x - b)).collect();
                    let fs = f(&xs);
                    *v = (xs, fs);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (x, fx) = simplex.swap_remove(0);
    NmResult { x, fx, converged }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_close(got: f64, want: f64, rel: f64) {
        let tol = rel * want.abs().max(1e-300);
        assert!(got.is_finite() && (got - want).abs() <= tol, "got {got}, want {want}");
    }

    // 50-digit references for H(x)
    const CDF_GOLDENS: &[(f64, f64, f64, f64, f64)] = &[
        (2506.0, 1642.0, 131.0, 0.27, 0.97761071200160778),
        (1642.0, 1642.0, 131.0, 0.27, 0.36787944117144232),
        (2000.0, 1642.0, 131.0, 0.27, 0.87885270550905358),
        (3000.0, 1642.0, 131.0, 0.27, 0.99289509326129334),
        (2506.0, 1642.0, 131.0, 0.0, 0.99863432036891002),
        (1900.0, 1642.0, 131.0, -0.2, 0.92145749323684141),
        (2200.0, 1642.0, 131.0, -0.2, 0.99992877430355742),
    ];

    #[test]
    fn cdf_matches_references() {
        for &(x, m, s, xi, want) in CDF_GOLDENS {
            let p = GevParams::new(m, s, xi).unwrap();
            assert_close(p.cdf(x), want, 1e-14);
        }
    }

    #[test]
    fn cdf_at_location_is_inv_e() {
        for xi in [0.27, -0.2, 0.0, 0.8] {
            let p = GevParams::new(1642.0, 131.0, xi).unwrap();
            assert_close(p.cdf(1642.0), (-1.0f64).exp(), 1e-14);
        }
    }

    #[test]
    fn cdf_clamps_outside_support() {
        let heavy = GevParams::new(1642.0, 131.0, 0.27).unwrap();
        let (lo, _) = heavy.support();
        assert_eq!(heavy.cdf(lo - 1.0), 0.0);
        assert!(heavy.cdf(1200.0) < 1e-300); // inside support but deep in the left tail

        let bounded = GevParams::new(1642.0, 131.0, -0.2).unwrap();
        let (_, hi) = bounded.support();
        assert_eq!(bounded.cdf(hi + 1.0), 1.0);
        assert_eq!(bounded.cdf(hi), 1.0);
    }

    #[test]
    fn tail_probability_at_baseline() {
        let p = GevParams::new(1642.0, 131.0, 0.27).unwrap();
        let tail = 1.0 - p.cdf(2506.0);
        assert!((tail - 0.0223892879983922).abs() < 1e-14);
    }

    #[test]
    fn gumbel_logpdf_at_location() {
        let p = GevParams::new(500.0, 131.0, 0.0).unwrap();
        assert_close(p.logpdf(500.0), -(131.0f64.ln()) - 1.0, 1e-14);
    }

    #[test]
    fn logpdf_outside_support_is_neg_inf() {
        let p = GevParams::new(1642.0, 131.0, 0.27).unwrap();
        let (lo, _) = p.support();
        assert_eq!(p.logpdf(lo - 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn pdf_mass_matches_cdf_increment() {
        // Simpson integral of the density against the cdf difference,
        // checking the pdf is the derivative of the cdf to 1e-8.
        let p = GevParams::new(1642.0, 131.0, 0.27).unwrap();
        let (a, b) = (1300.0, 6000.0);
        let n = 200_000;
        let h = (b - a) / n as f64;
        let mut acc = p.logpdf(a).exp() + p.logpdf(b).exp();
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * p.logpdf(a + i as f64 * h).exp();
        }
        let integral = acc * h / 3.0;
        let mass = p.cdf(b) - p.cdf(a);
        assert!((integral - mass).abs() < 1e-8, "{integral} vs {mass}");
    }

    #[test]
    fn quantile_roundtrips() {
        for xi in [0.27, 0.0, -0.2] {
            let p = GevParams::new(1642.0, 131.0, xi).unwrap();
            for q in [1e-6, 0.01, 0.3, 0.5, 0.9, 0.999, 1.0 - 1e-9] {
                let x = p.quantile(q);
                assert!((p.cdf(x) - q).abs() < 1e-11, "xi={xi} q={q}");
            }
        }
    }

    #[test]
    fn gumbel_limit_is_continuous() {
        let gumbel = GevParams::new(1642.0, 131.0, 0.0).unwrap();
        let near = GevParams::new(1642.0, 131.0, 1e-9).unwrap();
        for x in [1200.0, 1642.0, 2000.0, 2506.0, 4000.0] {
            assert!((gumbel.cdf(x) - near.cdf(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GevParams::new(0.0, 0.0, 0.1).is_err());
        assert!(GevParams::new(0.0, -1.0, 0.1).is_err());
        assert!(GevParams::new(f64::NAN, 1.0, 0.1).is_err());
    }

    fn draw_sample(p: &GevParams, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| p.quantile(rng.gen_range(1e-12..1.0))).collect()
    }

    #[test]
    fn fit_recovers_simulated_parameters() {
        let truth = GevParams::new(1642.0, 131.0, 0.27).unwrap();
        let sample = draw_sample(&truth, 500, 42);
        let fit = fit_mle(&sample).unwrap();
        assert!(fit.converged);
        assert!((fit.params.location - truth.location).abs() < 20.0, "{:?}", fit.params);
        assert!((fit.params.scale - truth.scale).abs() < 15.0, "{:?}", fit.params);
        assert!((fit.params.shape - truth.shape).abs() < 0.09, "{:?}", fit.params);
        // the optimum cannot be worse than the moment start
        let n = sample.len() as f64;
        let mean = sample.iter().sum::<f64>() / n;
        let std = (sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let s0 = (6.0f64.sqrt() / std::f64::consts::PI) * std;
        let start = GevParams::new(mean - 0.5772 * s0, s0, 0.1).unwrap();
        assert!(fit.loglik >= start.loglik(&sample));
        // reported loglik matches an independent evaluation at the optimum
        assert_close(fit.loglik, fit.params.loglik(&sample), 1e-12);
    }

    #[test]
    fn fit_is_location_scale_equivariant() {
        let truth = GevParams::new(440.0, 130.0, 0.2).unwrap();
        let sample = draw_sample(&truth, 300, 7);
        let (a, b) = (2.5, 100.0);
        let scaled: Vec<f64> = sample.iter().map(|x| a * x + b).collect();
        let f1 = fit_mle(&sample).unwrap().params;
        let f2 = fit_mle(&scaled).unwrap().params;
        let rel = |got: f64, want: f64| (got - want).abs() / want.abs().max(1.0);
        assert!(rel(f2.location, a * f1.location + b) < 1e-4);
        assert!(rel(f2.scale, a * f1.scale) < 1e-4);
        assert!((f2.shape - f1.shape).abs() < 1e-4);
    }

    #[test]
    fn fit_rejects_small_and_degenerate_samples() {
        assert!(matches!(fit_mle(&[1.0; 5]), Err(Error::InsufficientData(_))));
        assert!(matches!(fit_mle(&[3.0; 40]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn profile_at_mle_matches_full_loglik() {
        let truth = GevParams::new(1642.0, 131.0, 0.27).unwrap();
        let sample = draw_sample(&truth, 200, 11);
        let fit = fit_mle(&sample).unwrap();
        for (param, at) in [
            (ProfiledParam::Location, fit.params.location),
            (ProfiledParam::Scale, fit.params.scale),
            (ProfiledParam::Shape, fit.params.shape),
        ] {
            let pl = profile_loglik(&sample, param, at).unwrap();
            // profiling at the MLE coordinates recovers the unconstrained optimum
            assert!((pl - fit.loglik).abs() < 1e-4, "{param:?}: {pl} vs {}", fit.loglik);
            // and can never exceed it
            assert!(pl <= fit.loglik + 1e-6);
        }
    }
}
