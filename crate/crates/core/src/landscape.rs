//! The loss landscape over `(mu, sigma)` at a fixed token count.
//!
//! Grids are log-spaced along both axes. Descent runs projected gradient
//! descent in `(ln mu, ln sigma)` with a backtracking (Armijo) line search, so
//! every accepted step strictly lowers the loss and the iterate never leaves
//! the search box.

use alloc::vec::Vec;

use crate::fit::Observation;
use crate::law::{Gradient, LawInput, LawParams};
use crate::math::{exp, ln};
use crate::{Error, Result};

/// Axis-aligned box in `(mu, sigma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchBox {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
}

impl SearchBox {
    pub fn new(mu: (f64, f64), sigma: (f64, f64)) -> Result<Self> {
        let b = Self {
            mu_lo: mu.0,
            mu_hi: mu.1,
            sigma_lo: sigma.0,
            sigma_hi: sigma.1,
        };
        b.validate()?;
        Ok(b)
    }

    fn validate(&self) -> Result<()> {
        for (lo, hi) in [(self.mu_lo, self.mu_hi), (self.sigma_lo, self.sigma_hi)] {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::InvalidRange { lo, hi });
            }
        }
        Ok(())
    }

    /// Bounding box of the observations, widened by `expand` times its width
    /// on each side in log space. A degenerate axis is widened by the same
    /// factor around its single value.
    pub fn around_observations(obs: &[Observation], expand: f64) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::TooFewObservations { need: 1, got: 0 });
        }
        let span = |vals: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(ln(v)), b.max(ln(v)))
            });
            let pad = if hi > lo {
                expand * (hi - lo)
            } else {
                expand.max(1e-3)
            };
            (exp(lo - pad), exp(hi + pad))
        };
        let mu = span(&mut obs.iter().map(|o| o.mu));
        let sigma = span(&mut obs.iter().map(|o| o.sigma));
        Self::new(mu, sigma)
    }

    pub fn contains(&self, mu: f64, sigma: f64) -> bool {
        (self.mu_lo..=self.mu_hi).contains(&mu) && (self.sigma_lo..=self.sigma_hi).contains(&sigma)
    }

    fn log_bounds(&self) -> [(f64, f64); 2] {
        [
            (ln(self.mu_lo), ln(self.mu_hi)),
            (ln(self.sigma_lo), ln(self.sigma_hi)),
        ]
    }
}

/// Predicted loss on a log-spaced `(mu, sigma)` grid; `loss[i][j]` is at
/// `(mu_axis[i], sigma_axis[j])`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LandscapeGrid {
    pub mu_axis: Vec<f64>,
    pub sigma_axis: Vec<f64>,
    pub d_tokens: f64,
    pub loss: Vec<Vec<f64>>,
}

impl LandscapeGrid {
    /// Grid index of the smallest loss; ties go to the first in row-major order.
    pub fn argmin(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (i, row) in self.loss.iter().enumerate() {
            for (j, &l) in row.iter().enumerate() {
                if l < self.loss[best.0][best.1] {
                    best = (i, j);
                }
            }
        }
        best
    }

    pub fn min_loss(&self) -> f64 {
        let (i, j) = self.argmin();
        self.loss[i][j]
    }
}

fn log_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (ln(lo), ln(hi));
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => exp(a + (b - a) * i as f64 / (n - 1) as f64),
        })
        .collect()
}

pub fn evaluate_grid(
    params: &LawParams,
    bounds: &SearchBox,
    resolution: usize,
    d_tokens: f64,
) -> Result<LandscapeGrid> {
    bounds.validate()?;
    if resolution < 2 {
        return Err(Error::InvalidResolution(resolution));
    }
    let mu_axis = log_axis(bounds.mu_lo, bounds.mu_hi, resolution);
    let sigma_axis = log_axis(bounds.sigma_lo, bounds.sigma_hi, resolution);
    let loss = mu_axis
        .iter()
        .map(|&mu| {
            sigma_axis
                .iter()
                .map(|&sigma| params.predict_loss(&LawInput::new(mu, sigma, d_tokens)?))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LandscapeGrid {
        mu_axis,
        sigma_axis,
        d_tokens,
        loss,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DescentConfig {
    pub max_iter: usize,
    /// Stop once the projected gradient norm in `(mu, sigma)` falls below this.
    pub grad_tol: f64,
    /// Initial step length in log coordinates.
    pub initial_step: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
}

impl DescentConfig {
    /// Settings used by [`find_optimum`].
    pub fn optimum() -> Self {
        Self {
            max_iter: 10_000,
            grad_tol: 1e-8,
            initial_step: 1.0,
            armijo: 1e-4,
        }
    }
}

impl Default for DescentConfig {
    /// Settings used for descent paths.
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            ..Self::optimum()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathPoint {
    pub mu: f64,
    pub sigma: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimumReport {
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub d_tokens: f64,
    pub loss_at_opt: f64,
    /// Norm of the full gradient `(dL/dmu, dL/dsigma)` at the optimum.
    pub grad_norm: f64,
    /// True when a box constraint is active at the optimum.
    pub clamped: bool,
    pub iterations: usize,
}

struct Descent<'a> {
    params: &'a LawParams,
    bounds: [(f64, f64); 2],
    d_tokens: f64,
    cfg: DescentConfig,
}

struct State {
    u: [f64; 2],
    loss: f64,
    grad: Gradient,
}

impl Descent<'_> {
    fn eval(&self, u: [f64; 2]) -> Result<(f64, Gradient)> {
        let x = LawInput::new(exp(u[0]), exp(u[1]), self.d_tokens)?;
        Ok((self.params.predict_loss(&x)?, self.params.grad_loss(&x)?))
    }

    fn state(&self, u: [f64; 2]) -> Result<State> {
        let (loss, grad) = self.eval(u)?;
        Ok(State { u, loss, grad })
    }

    /// Gradient with respect to the log coordinates.
    fn log_grad(s: &State) -> [f64; 2] {
        [exp(s.u[0]) * s.grad.d_mu, exp(s.u[1]) * s.grad.d_sigma]
    }

    /// Which coordinates sit on a bound with the gradient pushing outward.
    fn active(&self, s: &State) -> [bool; 2] {
        let g = Self::log_grad(s);
        let mut out = [false; 2];
        for k in 0..2 {
            let (lo, hi) = self.bounds[k];
            out[k] = (s.u[k] <= lo && g[k] > 0.0) || (s.u[k] >= hi && g[k] < 0.0);
        }
        out
    }

    fn projected_norm(&self, s: &State) -> f64 {
        let active = self.active(s);
        let g = [s.grad.d_mu, s.grad.d_sigma];
        let sq: f64 = (0..2).filter(|&k| !active[k]).map(|k| g[k] * g[k]).sum();
        libm::sqrt(sq)
    }

    fn project(&self, u: [f64; 2]) -> [f64; 2] {
        [
            u[0].clamp(self.bounds[0].0, self.bounds[0].1),
            u[1].clamp(self.bounds[1].0, self.bounds[1].1),
        ]
    }

    /// Runs descent from `start`, calling `visit` on every accepted iterate
    /// (including the start).
    fn run(&self, start: [f64; 2], mut visit: impl FnMut(&State)) -> Result<(State, usize)> {
        let mut s = self.state(self.project(start))?;
        visit(&s);
        let mut step = self.cfg.initial_step;
        let mut iterations = 0;
        while iterations < self.cfg.max_iter && self.projected_norm(&s) >= self.cfg.grad_tol {
            let g = Self::log_grad(&s);
            let mut accepted = None;
            let mut t = step;
            while t > 1e-20 {
                let cand = self.project([s.u[0] - t * g[0], s.u[1] - t * g[1]]);
                let moved = [cand[0] - s.u[0], cand[1] - s.u[1]];
                if moved == [0.0, 0.0] {
                    break;
                }
                let decrease = -(g[0] * moved[0] + g[1] * moved[1]);
                let next = self.state(cand)?;
                if next.loss < s.loss && s.loss - next.loss >= self.cfg.armijo * decrease {
                    accepted = Some(next);
                    break;
                }
                t *= 0.5;
            }
            let Some(next) = accepted else {
                // no representable decrease left along the projected gradient
                break;
            };
            s = next;
            iterations += 1;
            visit(&s);
            step = (t * 2.0).min(1e6);
        }
        Ok((s, iterations))
    }
}

/// Scans a 64x64 grid, then refines its best point by projected gradient
/// descent. `clamped` reports whether a box constraint is active.
pub fn find_optimum(
    params: &LawParams,
    bounds: &SearchBox,
    d_tokens: f64,
) -> Result<OptimumReport> {
    let grid = evaluate_grid(params, bounds, 64, d_tokens)?;
    let (i, j) = grid.argmin();
    let descent = Descent {
        params,
        bounds: bounds.log_bounds(),
        d_tokens,
        cfg: DescentConfig::optimum(),
    };
    let start = [ln(grid.mu_axis[i]), ln(grid.sigma_axis[j])];
    let (s, iterations) = descent.run(start, |_| {})?;
    let clamped = descent.active(&s).iter().any(|&a| a);
    Ok(OptimumReport {
        mu_hat: exp(s.u[0]),
        sigma_hat: exp(s.u[1]),
        d_tokens,
        loss_at_opt: s.loss,
        grad_norm: s.grad.norm(),
        clamped,
        iterations,
    })
}

/// Projected gradient descent paths from each start. Loss is strictly
/// decreasing along every path.
pub fn descent_paths(
    params: &LawParams,
    bounds: &SearchBox,
    starts: &[(f64, f64)],
    d_tokens: f64,
    cfg: &DescentConfig,
) -> Result<Vec<Vec<PathPoint>>> {
    bounds.validate()?;
    let descent = Descent {
        params,
        bounds: bounds.log_bounds(),
        d_tokens,
        cfg: *cfg,
    };
    starts
        .iter()
        .map(|&(mu, sigma)| {
            if !bounds.contains(mu, sigma) {
                return Err(Error::StartOutsideBox { mu, sigma });
            }
            let mut path = Vec::new();
            descent.run([ln(mu), ln(sigma)], |s| {
                path.push(PathPoint {
                    mu: exp(s.u[0]),
                    sigma: exp(s.u[1]),
                    loss: s.loss,
                })
            })?;
            // the first point is the caller's start, not its exp(ln) round trip
            path[0].mu = mu;
            path[0].sigma = sigma;
            Ok(path)
        })
        .collect()
}
