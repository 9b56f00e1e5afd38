//! Fitting the scaling law to observed `(mu, sigma, D, loss)` points.
//!
//! The objective is `sum rho(L(params, obs) - obs.test_loss)` minimized by
//! Nelder–Mead from a fixed grid of starting points. Internally the search
//! runs in a re-parameterized space where `E = exp(e')`, `alpha_D = exp(a')`
//! and the log of `D_c` is replaced by the log of the reducible loss term at
//! the centroid of the data. The last change removes most of the correlation
//! between `D_c` and the exponents, which the simplex otherwise struggles with.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::law::{LawForm, LawInput, LawParams};
use crate::math::{exp, ln, round, sqrt};
use crate::simplex::{self, NelderMeadOptions};
use crate::{Error, Result};

/// One fitting point: statistics of a trained subset and its measured loss.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Observation {
    pub mu: f64,
    pub sigma: f64,
    pub d_tokens: f64,
    pub test_loss: f64,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub tag: Option<String>,
}

impl Observation {
    pub fn new(mu: f64, sigma: f64, d_tokens: f64, test_loss: f64) -> Result<Self> {
        let obs = Self {
            mu,
            sigma,
            d_tokens,
            test_loss,
            tag: None,
        };
        obs.validate()?;
        Ok(obs)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.mu) && ok(self.sigma) && ok(self.d_tokens) && ok(self.test_loss) {
            Ok(())
        } else {
            Err(Error::InvalidObservation(
                "mu, sigma, d_tokens and test_loss must be positive and finite",
            ))
        }
    }

    pub fn input(&self) -> LawInput {
        LawInput {
            mu: self.mu,
            sigma: self.sigma,
            d_tokens: self.d_tokens,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<Observation>,
    pub val: Vec<Observation>,
}

/// Shuffles with `seed` and holds out `round(val_fraction * n)` points (at
/// least one) for validation.
pub fn split_observations(obs: &[Observation], val_fraction: f64, seed: u64) -> Result<Split> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::InvalidFraction(val_fraction));
    }
    let n = obs.len();
    let n_val = (round(val_fraction * n as f64) as usize).max(1);
    if n < 2 || n_val >= n {
        return Err(Error::TooFewObservations {
            need: n_val + 1,
            got: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (val_idx, train_idx) = order.split_at(n_val);
    Ok(Split {
        train: train_idx.iter().map(|&i| obs[i].clone()).collect(),
        val: val_idx.iter().map(|&i| obs[i].clone()).collect(),
    })
}

/// Per-residual penalty.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum FitLoss {
    #[default]
    Squared,
    Huber {
        delta: f64,
    },
}

impl FitLoss {
    fn rho(self, r: f64) -> f64 {
        match self {
            Self::Squared => r * r,
            Self::Huber { delta } => {
                let a = r.abs();
                if a <= delta {
                    0.5 * r * r
                } else {
                    delta * (a - 0.5 * delta)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitConfig {
    /// Use only the first `n` points of the restart grid.
    pub max_restarts: Option<usize>,
    /// Iteration cap of each simplex run.
    pub max_iter: usize,
    /// Simplex-size tolerance.
    pub tol: f64,
    pub loss: FitLoss,
    /// For the interaction law, fit the basic law first and add its optimum
    /// as an extra starting point.
    pub seed_from_basic: bool,
    /// Extra simplex runs restarted from the best point found.
    pub polish_rounds: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_restarts: None,
            max_iter: 2000,
            tol: 1e-10,
            loss: FitLoss::Squared,
            seed_from_basic: true,
            polish_rounds: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub params: LawParams,
    pub law_form: LawForm,
    pub objective: f64,
    pub train_rmse: f64,
    /// Filled in by [`FitResult::record_validation`].
    pub val_rmse: Option<f64>,
    pub band_coverage: Option<f64>,
    pub n_train: usize,
    pub n_val: usize,
    pub n_restarts_used: usize,
    /// Index of the start that produced the reported optimum.
    pub best_restart: usize,
    /// False when every simplex run stopped at the iteration cap.
    pub converged: bool,
}

impl FitResult {
    pub fn record_validation(&mut self, v: &Validation) {
        self.val_rmse = Some(v.val_rmse);
        self.band_coverage = Some(v.band_coverage);
        self.n_val = v.n_val;
    }
}

/// Outcome of one simplex run.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub index: usize,
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
}

/// Centered features of one observation.
#[derive(Debug, Clone, Copy)]
struct Features {
    x: LawInput,
    lmu: f64,
    lsigma: f64,
    ld: f64,
    mu_x: f64,
    sigma_x: f64,
    y: f64,
}

/// Reference point used to decorrelate the search coordinates.
#[derive(Debug, Clone, Copy)]
struct Centroid {
    lmu: f64,
    lsigma: f64,
    ld: f64,
    mu: f64,
    sigma: f64,
}

/// A prepared fitting problem. Restarts can be run in any order (or in
/// parallel) and reduced with [`Fitter::finish`].
#[derive(Debug, Clone)]
pub struct Fitter {
    form: LawForm,
    config: FitConfig,
    features: Vec<Features>,
    centroid: Centroid,
    starts: Vec<Vec<f64>>,
    n_train: usize,
}

const STEPS: [f64; 7] = [0.5, 0.5, 0.3, 0.1, 0.1, 0.1, 0.1];

impl Fitter {
    /// `seed` is an extra starting point placed first in the restart order.
    pub fn new(
        train: &[Observation],
        form: LawForm,
        config: &FitConfig,
        seed: Option<&LawParams>,
    ) -> Result<Self> {
        let need = form.n_params();
        if train.len() < need {
            return Err(Error::TooFewObservations {
                need,
                got: train.len(),
            });
        }
        for obs in train {
            obs.validate()?;
        }
        let n = train.len() as f64;
        let mean = |f: &dyn Fn(&Observation) -> f64| train.iter().map(f).sum::<f64>() / n;
        let centroid = Centroid {
            lmu: mean(&|o| ln(o.mu)),
            lsigma: mean(&|o| ln(o.sigma)),
            ld: mean(&|o| ln(o.d_tokens)),
            mu: mean(&|o| o.mu),
            sigma: mean(&|o| o.sigma),
        };
        let features = train
            .iter()
            .map(|o| {
                let (lmu, lsigma) = (ln(o.mu), ln(o.sigma));
                Features {
                    x: o.input(),
                    lmu: lmu - centroid.lmu,
                    lsigma: lsigma - centroid.lsigma,
                    ld: ln(o.d_tokens) - centroid.ld,
                    mu_x: (o.sigma * lmu - centroid.sigma * centroid.lmu) / centroid.sigma,
                    sigma_x: (o.mu * lsigma - centroid.mu * centroid.lsigma) / centroid.mu,
                    y: o.test_loss,
                }
            })
            .collect();

        let mut fitter = Self {
            form,
            config: *config,
            features,
            centroid,
            starts: Vec::new(),
            n_train: train.len(),
        };
        if let Some(p) = seed {
            fitter.starts.push(fitter.to_coords(p));
        }
        let loss_min = train
            .iter()
            .map(|o| o.test_loss)
            .fold(f64::INFINITY, f64::min);
        let grid = restart_grid(loss_min);
        let take = config.max_restarts.unwrap_or(grid.len()).max(1);
        for (e, d_c, alpha_d, alpha0, beta0) in grid.into_iter().take(take) {
            let p = RawPoint {
                e,
                d_c,
                alpha0,
                alpha1: 0.0,
                beta0,
                beta1: 0.0,
                alpha_d,
            };
            fitter.starts.push(fitter.raw_to_coords(&p));
        }
        Ok(fitter)
    }

    pub fn n_starts(&self) -> usize {
        self.starts.len()
    }

    pub fn form(&self) -> LawForm {
        self.form
    }

    /// Objective value at a parameter set.
    pub fn objective_at(&self, params: &LawParams) -> f64 {
        self.objective(&self.to_coords(params))
    }

    pub fn run_start(&self, index: usize) -> RestartOutcome {
        let m = self.local_search(&self.starts[index], 1.0);
        RestartOutcome {
            index,
            x: m.x,
            value: m.value,
            converged: m.converged,
        }
    }

    /// Picks the best outcome (lowest value, then lowest index), polishes it
    /// and assembles the result.
    pub fn finish(&self, outcomes: &[RestartOutcome]) -> Result<FitResult> {
        let best = outcomes
            .iter()
            .filter(|o| o.value.is_finite())
            .min_by(|a, b| a.value.total_cmp(&b.value).then(a.index.cmp(&b.index)))
            .ok_or(Error::FitFailed)?;
        let mut converged = outcomes.iter().any(|o| o.converged);
        let (mut x, mut value) = (best.x.clone(), best.value);
        for _ in 0..self.config.polish_rounds {
            let m = self.local_search(&x, 0.1);
            converged |= m.converged;
            let gained = value - m.value;
            if m.value < value {
                x = m.x;
                value = m.value;
            }
            if !(gained > 1e-15 * value) {
                break;
            }
        }
        let params = self.to_params(&x).ok_or(Error::FitFailed)?;
        let train_rmse = self.rmse(&params)?;
        Ok(FitResult {
            params,
            law_form: self.form,
            objective: value,
            train_rmse,
            val_rmse: None,
            band_coverage: None,
            n_train: self.n_train,
            n_val: 0,
            n_restarts_used: outcomes.len(),
            best_restart: best.index,
            converged,
        })
    }

    fn rmse(&self, params: &LawParams) -> Result<f64> {
        let mut sum = 0.0;
        for f in &self.features {
            let r = params.predict_loss(&f.x)? - f.y;
            sum += r * r;
        }
        Ok(sqrt(sum / self.features.len() as f64))
    }

    fn local_search(&self, x0: &[f64], step_scale: f64) -> simplex::Minimum {
        let dim = self.form.n_params();
        let steps: Vec<f64> = STEPS[..dim].iter().map(|s| s * step_scale).collect();
        let opts = NelderMeadOptions {
            max_iter: self.config.max_iter,
            tol: self.config.tol,
        };
        simplex::minimize(|z| self.objective(z), x0, &steps, &opts)
    }

    fn objective(&self, z: &[f64]) -> f64 {
        let e = exp(z[0]);
        let alpha_d = exp(z[2]);
        let (a1, b1) = if z.len() > 5 {
            (z[5], z[6])
        } else {
            (0.0, 0.0)
        };
        let loss = self.config.loss;
        let mut sum = 0.0;
        for f in &self.features {
            let t = z[1]
                - z[3] * f.lmu
                - z[4] * f.lsigma
                - alpha_d * f.ld
                - a1 * f.mu_x
                - b1 * f.sigma_x;
            sum += loss.rho(e + exp(t) - f.y);
        }
        if sum.is_finite() {
            sum
        } else {
            f64::INFINITY
        }
    }

    /// Search coordinates: `[ln E, c, ln aD, a0, b0, a1*sigma_ref, b1*mu_ref]`
    /// where `c` is the log of the reducible term at the centroid.
    fn raw_to_coords(&self, p: &RawPoint) -> Vec<f64> {
        let c = &self.centroid;
        let log_term = ln(p.d_c)
            - p.alpha0 * c.lmu
            - p.beta0 * c.lsigma
            - p.alpha_d * c.ld
            - p.alpha1 * c.sigma * c.lmu
            - p.beta1 * c.mu * c.lsigma;
        let mut z = vec![ln(p.e), log_term, ln(p.alpha_d), p.alpha0, p.beta0];
        if self.form == LawForm::Interaction {
            z.push(p.alpha1 * c.sigma);
            z.push(p.beta1 * c.mu);
        }
        z
    }

    fn to_coords(&self, p: &LawParams) -> Vec<f64> {
        let raw = RawPoint {
            // E = 0 has no log; start just above it
            e: p.e().max(1e-12),
            d_c: p.d_c(),
            alpha0: p.alpha0(),
            alpha1: if self.form == LawForm::Interaction {
                p.alpha1()
            } else {
                0.0
            },
            beta0: p.beta0(),
            beta1: if self.form == LawForm::Interaction {
                p.beta1()
            } else {
                0.0
            },
            alpha_d: p.alpha_d(),
        };
        self.raw_to_coords(&raw)
    }

    fn to_params(&self, z: &[f64]) -> Option<LawParams> {
        let c = &self.centroid;
        let e = exp(z[0]);
        let alpha_d = exp(z[2]);
        let (alpha0, beta0) = (z[3], z[4]);
        let (alpha1, beta1) = if z.len() > 5 {
            (z[5] / c.sigma, z[6] / c.mu)
        } else {
            (0.0, 0.0)
        };
        let log_dc = z[1]
            + alpha0 * c.lmu
            + beta0 * c.lsigma
            + alpha_d * c.ld
            + alpha1 * c.sigma * c.lmu
            + beta1 * c.mu * c.lsigma;
        let d_c = exp(log_dc);
        match self.form {
            LawForm::Basic => LawParams::basic(e, d_c, alpha0, beta0, alpha_d).ok(),
            LawForm::Interaction => {
                LawParams::interaction(e, d_c, alpha0, alpha1, beta0, beta1, alpha_d).ok()
            }
        }
    }
}

struct RawPoint {
    e: f64,
    d_c: f64,
    alpha0: f64,
    alpha1: f64,
    beta0: f64,
    beta1: f64,
    alpha_d: f64,
}

/// `(E, D_c, alpha_D, alpha0, beta0)` starting points, 162 in total.
fn restart_grid(loss_min: f64) -> Vec<(f64, f64, f64, f64, f64)> {
    let mut grid = Vec::with_capacity(162);
    for e in [loss_min, 1.0] {
        for d_c in [1.0, 1e2, 1e4] {
            for alpha_d in [0.1, 0.3, 0.5] {
                for alpha0 in [-0.2, 0.0, 0.2] {
                    for beta0 in [-0.2, 0.0, 0.2] {
                        grid.push((e, d_c, alpha_d, alpha0, beta0));
                    }
                }
            }
        }
    }
    grid
}

/// Fits `form` to `train`, running the restarts sequentially.
pub fn fit(train: &[Observation], form: LawForm, config: &FitConfig) -> Result<FitResult> {
    fit_with(train, form, config, &|f: &Fitter| {
        (0..f.n_starts()).map(|i| f.run_start(i)).collect()
    })
}

/// Like [`fit`], with a caller-supplied strategy for running the restarts.
/// The runner must return one outcome per start; their order does not matter.
pub fn fit_with(
    train: &[Observation],
    form: LawForm,
    config: &FitConfig,
    runner: &dyn Fn(&Fitter) -> Vec<RestartOutcome>,
) -> Result<FitResult> {
    let seed = if form == LawForm::Interaction && config.seed_from_basic {
        let basic = fit_with(train, LawForm::Basic, config, runner)?;
        Some(basic.params.to_interaction())
    } else {
        None
    };
    let fitter = Fitter::new(train, form, config, seed.as_ref())?;
    let outcomes = runner(&fitter);
    fitter.finish(&outcomes)
}

/// Band used to check validation points: the fitted law evaluated over a
/// range of `mu` values for `sigma` within `[sigma_lo, sigma_hi]`, widened by
/// `loss_margin` on both sides.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BandConfig {
    pub mu_center: f64,
    pub mu_half_width: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub loss_margin: f64,
}

impl Default for BandConfig {
    fn default() -> Self {
        Self {
            mu_center: 13.48,
            mu_half_width: 2.17,
            sigma_lo: 25.0,
            sigma_hi: 1600.0,
            loss_margin: 0.0,
        }
    }
}

impl BandConfig {
    fn validate(&self) -> Result<()> {
        let lo = self.mu_center - self.mu_half_width;
        if !(lo > 0.0 && self.mu_half_width >= 0.0 && self.mu_center.is_finite()) {
            return Err(Error::InvalidRange {
                lo,
                hi: self.mu_center + self.mu_half_width,
            });
        }
        if !(self.sigma_lo > 0.0 && self.sigma_lo <= self.sigma_hi && self.sigma_hi.is_finite()) {
            return Err(Error::InvalidRange {
                lo: self.sigma_lo,
                hi: self.sigma_hi,
            });
        }
        if !(self.loss_margin >= 0.0) {
            return Err(Error::InvalidInput("band margin must be non-negative"));
        }
        Ok(())
    }

    /// Lowest and highest predicted loss over the `mu` range at fixed
    /// `(sigma, D)`, before the margin is applied.
    pub fn envelope(&self, params: &LawParams, sigma: f64, d_tokens: f64) -> Result<(f64, f64)> {
        self.validate()?;
        let (lo, hi) = (
            self.mu_center - self.mu_half_width,
            self.mu_center + self.mu_half_width,
        );
        let mut candidates = vec![lo, hi];
        // the log-denominator (a0 + a1 s) ln mu + (b0 + b1 mu) ln s is
        // stationary in mu at mu* = -(a0 + a1 s) / (b1 ln s)
        let slope = params.beta1() * ln(sigma);
        if params.form() == LawForm::Interaction && slope != 0.0 {
            let stationary = -params.mu_exponent(sigma) / slope;
            if stationary > lo && stationary < hi {
                candidates.push(stationary);
            }
        }
        let mut out = (f64::INFINITY, f64::NEG_INFINITY);
        for mu in candidates {
            let l = params.predict_loss(&LawInput::new(mu, sigma, d_tokens)?)?;
            out = (out.0.min(l), out.1.max(l));
        }
        Ok(out)
    }

    /// Whether an observed loss falls inside the band at `(sigma, D)`.
    pub fn contains(&self, params: &LawParams, obs: &Observation) -> Result<bool> {
        if obs.sigma < self.sigma_lo || obs.sigma > self.sigma_hi {
            return Ok(false);
        }
        let (lo, hi) = self.envelope(params, obs.sigma, obs.d_tokens)?;
        // a few ulps of slack so points evaluated on the surface itself count
        let slack = 1e-12 * hi.abs();
        Ok(obs.test_loss >= lo - self.loss_margin - slack
            && obs.test_loss <= hi + self.loss_margin + slack)
    }

    /// The band over a log-spaced sweep of `n` sigma values.
    pub fn curve(&self, params: &LawParams, d_tokens: f64, n: usize) -> Result<Vec<BandPoint>> {
        self.validate()?;
        if n < 2 {
            return Err(Error::InvalidResolution(n));
        }
        let (a, b) = (ln(self.sigma_lo), ln(self.sigma_hi));
        (0..n)
            .map(|i| {
                let sigma = exp(a + (b - a) * i as f64 / (n - 1) as f64);
                let (lo, hi) = self.envelope(params, sigma, d_tokens)?;
                let center =
                    params.predict_loss(&LawInput::new(self.mu_center, sigma, d_tokens)?)?;
                Ok(BandPoint {
                    sigma,
                    loss_lo: lo - self.loss_margin,
                    loss_center: center,
                    loss_hi: hi + self.loss_margin,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BandPoint {
    pub sigma: f64,
    pub loss_lo: f64,
    pub loss_center: f64,
    pub loss_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Validation {
    pub val_rmse: f64,
    pub band_coverage: f64,
    pub n_val: usize,
}

/// RMSE of the fitted law on `val` and the fraction of points inside the band.
pub fn validate(result: &FitResult, val: &[Observation], band: &BandConfig) -> Result<Validation> {
    if val.is_empty() {
        return Err(Error::EmptyValidation);
    }
    let mut sq = 0.0;
    let mut inside = 0usize;
    for obs in val {
        obs.validate()?;
        let r = result.params.predict_loss(&obs.input())? - obs.test_loss;
        sq += r * r;
        inside += usize::from(band.contains(&result.params, obs)?);
    }
    let n = val.len() as f64;
    Ok(Validation {
        val_rmse: sqrt(sq / n),
        band_coverage: inside as f64 / n,
        n_val: val.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Residual {
    pub predicted: f64,
    pub residual: f64,
}

pub fn residuals(params: &LawParams, obs: &[Observation]) -> Result<Vec<Residual>> {
    obs.iter()
        .map(|o| {
            let predicted = params.predict_loss(&o.input())?;
            Ok(Residual {
                predicted,
                residual: o.test_loss - predicted,
            })
        })
        .collect()
}
