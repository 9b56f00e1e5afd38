//! The perplexity-aware data scaling law.
//!
//! ```text
//! L(mu, sigma, D) = E + D_c / (mu^(a0 + a1*sigma) * sigma^(b0 + b1*mu) * D^aD)
//! ```
//!
//! `mu` is the mean and `sigma` the standard deviation of the subset's
//! per-document perplexity, `D` the number of training tokens. With
//! `a1 = b1 = 0` the law reduces to the basic form with constant exponents.
//! Everything is evaluated in log space.

use crate::math::{exp, ln, sqrt};
use crate::{Error, Result};

/// Which variant of the law a parameter set describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LawForm {
    /// Constant exponents: `a1 = b1 = 0`.
    Basic,
    /// Exponents that depend linearly on the other statistic.
    #[default]
    Interaction,
}

impl LawForm {
    /// Number of free parameters fitted for this form.
    pub fn n_params(self) -> usize {
        match self {
            Self::Basic => 5,
            Self::Interaction => 7,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Basic => "basic",
            Self::Interaction => "interaction",
        }
    }
}

/// Parameters of the scaling law. Construction enforces `E >= 0`, `D_c > 0`
/// and `alpha_D > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawParams", into = "RawParams"))]
pub struct LawParams {
    e: f64,
    d_c: f64,
    alpha0: f64,
    alpha1: f64,
    beta0: f64,
    beta1: f64,
    alpha_d: f64,
    form: LawForm,
}

impl LawParams {
    #[allow(clippy::too_many_arguments)]
    pub fn interaction(
        e: f64,
        d_c: f64,
        alpha0: f64,
        alpha1: f64,
        beta0: f64,
        beta1: f64,
        alpha_d: f64,
    ) -> Result<Self> {
        Self {
            e,
            d_c,
            alpha0,
            alpha1,
            beta0,
            beta1,
            alpha_d,
            form: LawForm::Interaction,
        }
        .validated()
    }

    pub fn basic(e: f64, d_c: f64, alpha0: f64, beta0: f64, alpha_d: f64) -> Result<Self> {
        Self {
            e,
            d_c,
            alpha0,
            alpha1: 0.0,
            beta0,
            beta1: 0.0,
            alpha_d,
            form: LawForm::Basic,
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        let finite = [
            ("alpha0", self.alpha0),
            ("alpha1", self.alpha1),
            ("beta0", self.beta0),
            ("beta1", self.beta1),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParam {
                    name,
                    reason: "must be finite",
                });
            }
        }
        if !(self.e.is_finite() && self.e >= 0.0) {
            return Err(Error::InvalidParam {
                name: "E",
                reason: "must be finite and non-negative",
            });
        }
        if !(self.d_c.is_finite() && self.d_c > 0.0) {
            return Err(Error::InvalidParam {
                name: "D_c",
                reason: "must be finite and positive",
            });
        }
        if !(self.alpha_d.is_finite() && self.alpha_d > 0.0) {
            return Err(Error::InvalidParam {
                name: "alphaD",
                reason: "must be finite and positive",
            });
        }
        if self.form == LawForm::Basic && (self.alpha1 != 0.0 || self.beta1 != 0.0) {
            return Err(Error::InvalidParam {
                name: "alpha1/beta1",
                reason: "must be zero for the basic law",
            });
        }
        Ok(self)
    }

    pub fn e(&self) -> f64 {
        self.e
    }
    pub fn d_c(&self) -> f64 {
        self.d_c
    }
    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }
    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }
    pub fn beta0(&self) -> f64 {
        self.beta0
    }
    pub fn beta1(&self) -> f64 {
        self.beta1
    }
    pub fn alpha_d(&self) -> f64 {
        self.alpha_d
    }
    pub fn form(&self) -> LawForm {
        self.form
    }

    /// The same parameters viewed as an interaction law.
    pub fn to_interaction(self) -> Self {
        Self {
            form: LawForm::Interaction,
            ..self
        }
    }

    /// Exponent of `mu`: `a0 + a1*sigma`.
    pub fn mu_exponent(&self, sigma: f64) -> f64 {
        match self.form {
            LawForm::Basic => self.alpha0,
            LawForm::Interaction => self.alpha0 + self.alpha1 * sigma,
        }
    }

    /// Exponent of `sigma`: `b0 + b1*mu`.
    pub fn sigma_exponent(&self, mu: f64) -> f64 {
        match self.form {
            LawForm::Basic => self.beta0,
            LawForm::Interaction => self.beta0 + self.beta1 * mu,
        }
    }

    /// `ln(D_c) - ln(denominator)`, the log of the reducible loss term.
    fn log_term(&self, x: &LawInput) -> Result<f64> {
        x.validate()?;
        let log_den = self.mu_exponent(x.sigma) * ln(x.mu)
            + self.sigma_exponent(x.mu) * ln(x.sigma)
            + self.alpha_d * ln(x.d_tokens);
        let t = ln(self.d_c) - log_den;
        if t.is_finite() {
            Ok(t)
        } else {
            Err(Error::Domain("scaling law exponent"))
        }
    }

    /// Predicted test loss.
    pub fn predict_loss(&self, x: &LawInput) -> Result<f64> {
        let term = exp(self.log_term(x)?);
        let loss = self.e + term;
        if loss.is_finite() {
            Ok(loss)
        } else {
            Err(Error::Domain("predicted loss"))
        }
    }

    /// Splits the denominator into independent, interaction and data-size
    /// factors.
    pub fn decompose(&self, x: &LawInput) -> Result<Decomposition> {
        x.validate()?;
        let (lmu, lsigma) = (ln(x.mu), ln(x.sigma));
        let (a1, b1) = match self.form {
            LawForm::Basic => (0.0, 0.0),
            LawForm::Interaction => (self.alpha1, self.beta1),
        };
        let d = Decomposition {
            independence: exp(self.alpha0 * lmu + self.beta0 * lsigma),
            interdependence: exp(a1 * x.sigma * lmu + b1 * x.mu * lsigma),
            size: exp(self.alpha_d * ln(x.d_tokens)),
        };
        let all_finite = [d.independence, d.interdependence, d.size]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if all_finite {
            Ok(d)
        } else {
            Err(Error::Domain("decomposition factor"))
        }
    }

    /// Partial derivatives of the loss in `mu` and `sigma` at fixed `D`.
    pub fn grad_loss(&self, x: &LawInput) -> Result<Gradient> {
        let term = exp(self.log_term(x)?);
        let (a1, b1) = match self.form {
            LawForm::Basic => (0.0, 0.0),
            LawForm::Interaction => (self.alpha1, self.beta1),
        };
        // d(log den)/d mu and d(log den)/d sigma
        let dmu = self.mu_exponent(x.sigma) / x.mu + b1 * ln(x.sigma);
        let dsigma = a1 * ln(x.mu) + self.sigma_exponent(x.mu) / x.sigma;
        let g = Gradient {
            d_mu: -term * dmu,
            d_sigma: -term * dsigma,
        };
        if g.d_mu.is_finite() && g.d_sigma.is_finite() {
            Ok(g)
        } else {
            Err(Error::Domain("loss gradient"))
        }
    }
}

/// Wire form of [`LawParams`].
#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
struct RawParams {
    #[serde(rename = "E")]
    e: f64,
    #[serde(rename = "D_c")]
    d_c: f64,
    alpha0: f64,
    #[serde(default)]
    alpha1: f64,
    beta0: f64,
    #[serde(default)]
    beta1: f64,
    #[serde(rename = "alphaD")]
    alpha_d: f64,
    #[serde(default)]
    law_form: LawForm,
}

#[cfg(feature = "serde")]
impl TryFrom<RawParams> for LawParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        Self {
            e: r.e,
            d_c: r.d_c,
            alpha0: r.alpha0,
            alpha1: r.alpha1,
            beta0: r.beta0,
            beta1: r.beta1,
            alpha_d: r.alpha_d,
            form: r.law_form,
        }
        .validated()
    }
}

#[cfg(feature = "serde")]
impl From<LawParams> for RawParams {
    fn from(p: LawParams) -> Self {
        Self {
            e: p.e,
            d_c: p.d_c,
            alpha0: p.alpha0,
            alpha1: p.alpha1,
            beta0: p.beta0,
            beta1: p.beta1,
            alpha_d: p.alpha_d,
            law_form: p.form,
        }
    }
}

/// A point `(mu, sigma, D)`; all strictly positive and finite.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LawInput {
    pub mu: f64,
    pub sigma: f64,
    pub d_tokens: f64,
}

impl LawInput {
    pub fn new(mu: f64, sigma: f64, d_tokens: f64) -> Result<Self> {
        let x = Self {
            mu,
            sigma,
            d_tokens,
        };
        x.validate()?;
        Ok(x)
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.mu) {
            Err(Error::InvalidInput("mu must be positive and finite"))
        } else if !ok(self.sigma) {
            Err(Error::InvalidInput("sigma must be positive and finite"))
        } else if !ok(self.d_tokens) {
            Err(Error::InvalidInput("d_tokens must be positive and finite"))
        } else {
            Ok(())
        }
    }
}

/// Factors of the law's denominator:
/// `independence = mu^a0 sigma^b0`, `interdependence = mu^(a1 sigma) sigma^(b1 mu)`,
/// `size = D^aD`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Decomposition {
    pub independence: f64,
    pub interdependence: f64,
    pub size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Gradient {
    pub d_mu: f64,
    pub d_sigma: f64,
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        sqrt(self.d_mu * self.d_mu + self.d_sigma * self.d_sigma)
    }
}
