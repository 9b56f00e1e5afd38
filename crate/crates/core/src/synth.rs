//! Seeded synthetic data: observations drawn from a known law, scored corpora
//! with heavy-tailed perplexity, and the loss trajectories a law predicts for
//! selected subsets.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Zipf};

use crate::corpus::{Corpus, Document};
use crate::fit::Observation;
use crate::law::{LawInput, LawParams};
use crate::math::{exp, ln, round, sqrt};
use crate::select::{Method, SelectionManifest};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticSpec {
    pub truth: LawParams,
    pub mu_range: (f64, f64),
    pub sigma_range: (f64, f64),
    pub d_range: (f64, f64),
    pub n_obs: usize,
    /// Standard deviation of additive Gaussian noise on the loss.
    pub noise_tau: f64,
    pub seed: u64,
}

fn check_range(r: (f64, f64), what: &'static str) -> Result<()> {
    if r.0 > 0.0 && r.0 <= r.1 && r.1.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(what))
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        return lo;
    }
    exp(ln(lo) + rng.random::<f64>() * (ln(hi) - ln(lo)))
}

/// Samples `(mu, sigma, D)` log-uniformly and evaluates the true law plus noise.
pub fn generate_observations(spec: &SyntheticSpec) -> Result<Vec<Observation>> {
    check_range(spec.mu_range, "mu_range must be positive and ordered")?;
    check_range(spec.sigma_range, "sigma_range must be positive and ordered")?;
    check_range(spec.d_range, "d_range must be positive and ordered")?;
    if !(spec.noise_tau >= 0.0 && spec.noise_tau.is_finite()) {
        return Err(Error::InvalidSpec("noise_tau must be non-negative"));
    }
    if spec.n_obs == 0 {
        return Err(Error::InvalidSpec("n_obs must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_tau).map_err(|_| Error::InvalidSpec("noise_tau"))?;
    (0..spec.n_obs)
        .map(|i| {
            let mu = log_uniform(&mut rng, spec.mu_range);
            let sigma = log_uniform(&mut rng, spec.sigma_range);
            let d_tokens = log_uniform(&mut rng, spec.d_range);
            let clean = spec
                .truth
                .predict_loss(&LawInput::new(mu, sigma, d_tokens)?)?;
            let mut loss = clean + noise.sample(&mut rng);
            // keep losses positive; only reachable with noise comparable to the loss
            while loss <= 0.0 {
                loss = clean + noise.sample(&mut rng);
            }
            Ok(Observation {
                mu,
                sigma,
                d_tokens,
                test_loss: loss,
                tag: Some(format!("obs{i:05}")),
            })
        })
        .collect()
}

/// Distribution of per-document perplexity.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum PplLaw {
    LogNormal {
        log_mean: f64,
        log_std: f64,
    },
    /// Rank `r` in `1..=components` drawn with probability proportional to
    /// `r^-s`; the perplexity is then log-normal around
    /// `log_mean + (r - 1) * log_step`.
    ZipfMixture {
        s: f64,
        components: u32,
        log_mean: f64,
        log_step: f64,
        log_std: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticCorpusSpec {
    pub n_docs: usize,
    pub ppl_law: PplLaw,
    /// Median token count; counts are log-normal with log-std `token_spread`.
    pub token_median: f64,
    pub token_spread: f64,
    pub seed: u64,
}

pub fn generate_corpus(spec: &SyntheticCorpusSpec) -> Result<Corpus> {
    if spec.n_docs == 0 {
        return Err(Error::InvalidSpec("n_docs must be positive"));
    }
    if !(spec.token_median >= 1.0 && spec.token_spread >= 0.0) {
        return Err(Error::InvalidSpec(
            "token_median must be >= 1, token_spread >= 0",
        ));
    }
    let tokens = LogNormal::new(ln(spec.token_median), spec.token_spread)
        .map_err(|_| Error::InvalidSpec("token distribution"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draw_ppl: alloc::boxed::Box<dyn FnMut(&mut ChaCha8Rng) -> f64> = match spec.ppl_law {
        PplLaw::LogNormal { log_mean, log_std } => {
            let d = LogNormal::new(log_mean, log_std)
                .map_err(|_| Error::InvalidSpec("lognormal parameters"))?;
            alloc::boxed::Box::new(move |r| d.sample(r))
        }
        PplLaw::ZipfMixture {
            s,
            components,
            log_mean,
            log_step,
            log_std,
        } => {
            if components == 0 {
                return Err(Error::InvalidSpec("zipf mixture needs components"));
            }
            let rank =
                Zipf::new(components as f64, s).map_err(|_| Error::InvalidSpec("zipf exponent"))?;
            let base = Normal::new(0.0, log_std)
                .map_err(|_| Error::InvalidSpec("zipf component spread"))?;
            alloc::boxed::Box::new(move |r| {
                let k = rank.sample(r);
                exp(log_mean + (k - 1.0) * log_step + base.sample(r))
            })
        }
    };
    let docs = (0..spec.n_docs)
        .map(|i| {
            let n_tokens = round(tokens.sample(&mut rng)).max(1.0) as u64;
            let ppl = draw_ppl(&mut rng);
            Document::new(format!("doc{i:07}"), n_tokens, ppl)
        })
        .collect();
    Corpus::new(docs)
}

/// An interaction law whose loss has a stationary point at
/// `(mu_star, sigma_star)`: `alpha0` and `beta0` are solved from the
/// stationarity conditions given the interaction coefficients. Fails unless
/// that point is a strict local minimum of the loss.
#[allow(clippy::too_many_arguments)]
pub fn law_with_optimum(
    e: f64,
    d_c: f64,
    alpha_d: f64,
    alpha1: f64,
    beta1: f64,
    mu_star: f64,
    sigma_star: f64,
) -> Result<LawParams> {
    if !(mu_star > 0.0 && sigma_star > 0.0) {
        return Err(Error::InvalidSpec("optimum must be positive"));
    }
    let (lmu, lsigma) = (ln(mu_star), ln(sigma_star));
    // d/dmu: (a0 + a1 s)/mu + b1 ln s = 0 ; d/ds: a1 ln mu + (b0 + b1 mu)/s = 0
    let mu_exp = -beta1 * mu_star * lsigma;
    let sigma_exp = -alpha1 * sigma_star * lmu;
    let alpha0 = mu_exp - alpha1 * sigma_star;
    let beta0 = sigma_exp - beta1 * mu_star;
    // the log-denominator must have a strict maximum there
    let h_mm = -mu_exp / (mu_star * mu_star);
    let h_ss = -sigma_exp / (sigma_star * sigma_star);
    let h_ms = alpha1 / mu_star + beta1 / sigma_star;
    if !(h_mm < 0.0 && h_ss < 0.0 && h_mm * h_ss > h_ms * h_ms) {
        return Err(Error::InvalidSpec(
            "interaction coefficients do not give a minimum at the requested point",
        ));
    }
    LawParams::interaction(e, d_c, alpha0, alpha1, beta0, beta1, alpha_d)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CurvePoint {
    pub d_tokens: f64,
    pub loss: f64,
}

/// Loss the law predicts for one selected subset across a token schedule.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainingCurve {
    pub method: Method,
    pub mu: f64,
    pub sigma: f64,
    pub points: Vec<CurvePoint>,
}

impl TrainingCurve {
    pub fn final_loss(&self) -> Option<f64> {
        self.points.last().map(|p| p.loss)
    }
}

pub fn simulate_training_curves(
    truth: &LawParams,
    manifests: &[SelectionManifest],
    d_schedule: &[f64],
) -> Result<Vec<TrainingCurve>> {
    manifests
        .iter()
        .map(|m| {
            let (mu, var) = m.final_stats().ok_or(Error::DegenerateSubset)?;
            if !(var > 0.0) {
                return Err(Error::DegenerateSubset);
            }
            let sigma = sqrt(var);
            let points = d_schedule
                .iter()
                .map(|&d| {
                    Ok(CurvePoint {
                        d_tokens: d,
                        loss: truth.predict_loss(&LawInput::new(mu, sigma, d)?)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TrainingCurve {
                method: m.method,
                mu,
                sigma,
                points,
            })
        })
        .collect()
}
