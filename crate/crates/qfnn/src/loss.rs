//! Pinball loss, its smooth differentiable surrogate, and the elastic-net
//! regularized training cost.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::QuantileGrid;

/// Which network parameters the elastic-net penalty covers.
///
/// Output biases, the trend input bias and the phases are never shrunk;
/// frequencies are location parameters and are likewise excluded (pulling
/// them toward zero would drag every node to DC rather than sparsify).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegScope {
    /// The full amplitude matrix: sinusoid columns plus the trend column.
    #[default]
    Amplitudes,
    /// Sinusoid amplitude columns only; the trend column is left free.
    SinusoidAmplitudes,
    /// The amplitude matrix plus the trend input weight.
    AllWeights,
}

impl RegScope {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "amplitudes" => Ok(RegScope::Amplitudes),
            "sinusoids" => Ok(RegScope::SinusoidAmplitudes),
            "all-weights" => Ok(RegScope::AllWeights),
            other => Err(Error::invalid(format!(
                "unknown regularization scope {other:?} \
                 (expected amplitudes, sinusoids or all-weights)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RegScope::Amplitudes => "amplitudes",
            RegScope::SinusoidAmplitudes => "sinusoids",
            RegScope::AllWeights => "all-weights",
        }
    }
}

/// Smoothing, regularization strength and elastic-net mix for the training
/// cost.
#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    /// Smoothing width of the pinball surrogate.
    pub alpha: f64,
    /// Regularization strength.
    pub lambda: f64,
    /// Elastic-net L1 fraction: 1 is pure (smoothed) L1, 0 pure L2.
    pub mix: f64,
    /// Width of the pseudo-Huber surrogate for |w|.
    pub l1_epsilon: f64,
    /// Parameters the penalty covers.
    pub scope: RegScope,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            alpha: 0.01,
            lambda: 0.1,
            mix: 0.5,
            l1_epsilon: 1e-8,
            scope: RegScope::Amplitudes,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        if !(0.0..=1.0).contains(&self.mix) {
            return Err(Error::invalid(format!("mix must be in [0, 1], got {}", self.mix)));
        }
        if !(self.l1_epsilon > 0.0) || !self.l1_epsilon.is_finite() {
            return Err(Error::invalid(format!(
                "l1_epsilon must be positive, got {}",
                self.l1_epsilon
            )));
        }
        Ok(())
    }
}

/// Kahan compensated accumulator. Batch costs are summed with it in a fixed
/// sequential order so results are reproducible bit-for-bit.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Tilted absolute loss: `tau*u` above the quantile, `(tau-1)*u` below.
pub fn pinball(u: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(pinball_unchecked(u, tau))
}

#[inline]
pub(crate) fn pinball_unchecked(u: f64, tau: f64) -> f64 {
    if u >= 0.0 {
        tau * u
    } else {
        (tau - 1.0) * u
    }
}

/// Smooth surrogate `tau*u + alpha*ln(1 + exp(-u/alpha))`.
///
/// Exceeds the pinball loss by at most `alpha*ln 2` everywhere and converges
/// to it as alpha shrinks.
pub fn smooth_pinball(u: f64, tau: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(smooth_pinball_parts(u, tau, alpha).0)
}

/// d/du of `smooth_pinball`; lies in (tau-1, tau).
pub fn smooth_pinball_grad(u: f64, tau: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(smooth_pinball_parts(u, tau, alpha).1)
}

/// Value and derivative in one evaluation, sharing the single `exp`.
///
/// `|u|/alpha` routinely exceeds 700 at small alpha, so the softplus term is
/// rewritten on the negative branch as `-u/alpha + ln(1+exp(u/alpha))` to
/// keep the exponent non-positive.
#[inline]
pub(crate) fn smooth_pinball_parts(u: f64, tau: f64, alpha: f64) -> (f64, f64) {
    let z = u / alpha;
    if z >= 0.0 {
        let e = (-z).exp();
        let value = tau * u + alpha * e.ln_1p();
        let grad = tau - e / (1.0 + e);
        (value, grad)
    } else {
        let e = z.exp();
        let value = (tau - 1.0) * u + alpha * e.ln_1p();
        let grad = tau - 1.0 / (1.0 + e);
        (value, grad)
    }
}

/// Pseudo-Huber surrogate for |w|: zero at the origin, differentiable
/// everywhere, within `eps` of |w|.
#[inline]
pub(crate) fn smooth_abs(w: f64, eps: f64) -> f64 {
    (w * w + eps * eps).sqrt() - eps
}

#[inline]
pub(crate) fn smooth_abs_grad(w: f64, eps: f64) -> f64 {
    w / (w * w + eps * eps).sqrt()
}

/// `lambda * (mix * sum smooth_abs(w) + (1-mix) * sum w^2)`.
pub fn elastic_net_penalty(weights: &[f64], cfg: &LossConfig) -> f64 {
    if cfg.lambda == 0.0 {
        return 0.0;
    }
    let mut l1 = KahanSum::default();
    let mut l2 = KahanSum::default();
    for &w in weights {
        l1.add(smooth_abs(w, cfg.l1_epsilon));
        l2.add(w * w);
    }
    cfg.lambda * (cfg.mix * l1.value() + (1.0 - cfg.mix) * l2.value())
}

/// d/dw of the elastic-net penalty for a single weight.
#[inline]
pub(crate) fn elastic_net_grad(w: f64, cfg: &LossConfig) -> f64 {
    cfg.lambda * (cfg.mix * smooth_abs_grad(w, cfg.l1_epsilon) + 2.0 * (1.0 - cfg.mix) * w)
}

/// The training cost: smooth pinball averaged over all observations and
/// levels (residual convention `u = y_t - qhat_tm`), plus the elastic-net
/// penalty over `reg_weights`.
pub fn total_cost(
    y: &[f64],
    qhat: &Array2<f64>,
    grid: &QuantileGrid,
    reg_weights: &[f64],
    cfg: &LossConfig,
) -> Result<f64> {
    cfg.validate()?;
    if qhat.nrows() != y.len() || qhat.ncols() != grid.len() {
        return Err(Error::invalid(format!(
            "qhat is {}x{} but y has {} entries and the grid {} levels",
            qhat.nrows(),
            qhat.ncols(),
            y.len(),
            grid.len()
        )));
    }
    let taus = grid.taus();
    let mut sum = KahanSum::default();
    for (t, &yt) in y.iter().enumerate() {
        for (m, &tau) in taus.iter().enumerate() {
            let u = yt - qhat[[t, m]];
            sum.add(smooth_pinball_parts(u, tau, cfg.alpha).0);
        }
    }
    let cells = y.len() * grid.len();
    let mean = if cells == 0 { 0.0 } else { sum.value() / cells as f64 };
    Ok(mean + elastic_net_penalty(reg_weights, cfg))
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(format!("tau must be in (0, 1), got {tau}")));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}
