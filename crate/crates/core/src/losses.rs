//! EDL and IB-EDL training objectives, their gradients, and a small
//! evidential classifier trained by full-batch gradient descent.
//!
//! Per example with one-hot target `y` and concentrations `alpha`:
//!
//! - EDL: `mse(alpha, y) + lambda * KL(Dir(alpha_tilde) || Dir(1))`, where
//!   `alpha_tilde` resets the true class to 1.
//! - IB-EDL: latent `z = mu + s * sigma * eps` (`eps ~ N(0, 1)`), evidence
//!   `softplus(z)`, loss `mse(alpha, y) + beta * 0.5 * (|mu|^2 + |sigma|^2 -
//!   2 sum ln sigma)`. The MSE part is the EDL MSE applied to the sampled
//!   evidence; it stands in for the information-bottleneck MSE term.
//!
//! The MSE variance term defaults to `alpha_i (S - alpha_i) / (S^2 (S + 1))`,
//! the exact Dirichlet variance, so that the loss equals
//! `E_{p ~ Dir(alpha)} sum_i (y_i - p_i)^2`. [`MseVariance::Printed`] selects
//! the `S^2 (alpha_i + 1)` denominator for comparison.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dirichlet::DirichletState;
use crate::error::{Error, Result};
use crate::forge::{self, standard_normal, LabeledPoint};
use crate::special::{ln_gamma, psi, psi1};

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Softplus activation over raw logits.
pub fn softplus_evidence(logits: &[f64]) -> Result<Vec<f64>> {
    logits
        .iter()
        .enumerate()
        .map(|(index, &x)| {
            if x.is_nan() {
                Err(Error::NonFinite {
                    what: "logit",
                    index,
                })
            } else {
                Ok(softplus(x))
            }
        })
        .collect()
}

fn one_hot_index(y: &[f64], k: usize) -> Result<usize> {
    if y.len() != k {
        return Err(Error::LengthMismatch {
            what: "target vs classes",
            expected: k,
            found: y.len(),
        });
    }
    let mut hot = None;
    for (i, &v) in y.iter().enumerate() {
        if v == 1.0 {
            if hot.is_some() {
                return Err(Error::NotOneHot);
            }
            hot = Some(i);
        } else if v != 0.0 {
            return Err(Error::NotOneHot);
        }
    }
    hot.ok_or(Error::NotOneHot)
}

/// A one-hot vector of length `k` with a 1 at `label`.
pub fn one_hot(label: usize, k: usize) -> Vec<f64> {
    let mut y = vec![0.0; k];
    y[label] = 1.0;
    y
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MseVariance {
    /// `alpha_i (S - alpha_i) / (S^2 (S + 1))`.
    #[default]
    Expectation,
    /// `alpha_i (S - alpha_i) / (S^2 (alpha_i + 1))`.
    Printed,
}

/// EDL mean-squared error with the Dirichlet variance term.
pub fn edl_mse_loss(state: &DirichletState, y: &[f64]) -> Result<f64> {
    edl_mse_loss_with(state, y, MseVariance::Expectation)
}

pub fn edl_mse_loss_with(state: &DirichletState, y: &[f64], variance: MseVariance) -> Result<f64> {
    let label = one_hot_index(y, state.k())?;
    Ok(mse_for_label(
        state.alpha(),
        state.strength(),
        label,
        variance,
    ))
}

fn mse_for_label(alpha: &[f64], s: f64, label: usize, variance: MseVariance) -> f64 {
    alpha
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let y = if i == label { 1.0 } else { 0.0 };
            let p = a / s;
            let denom = match variance {
                MseVariance::Expectation => s * s * (s + 1.0),
                MseVariance::Printed => s * s * (a + 1.0),
            };
            (y - p) * (y - p) + a * (s - a) / denom
        })
        .sum()
}

/// `d mse / d alpha_j` for the expectation form.
fn mse_grad(alpha: &[f64], s: f64, label: usize, out: &mut [f64]) {
    let p: Vec<f64> = alpha.iter().map(|a| a / s).collect();
    let sum_p2: f64 = p.iter().map(|q| q * q).sum();
    let resid_dot_p: f64 = p
        .iter()
        .enumerate()
        .map(|(i, &q)| (if i == label { 1.0 } else { 0.0 } - q) * q)
        .sum();
    for (j, g) in out.iter_mut().enumerate() {
        let y = if j == label { 1.0 } else { 0.0 };
        let sq = -2.0 / s * ((y - p[j]) - resid_dot_p);
        let var =
            -2.0 * (p[j] - sum_p2) / (s * (s + 1.0)) - (1.0 - sum_p2) / ((s + 1.0) * (s + 1.0));
        *g = sq + var;
    }
}

/// `alpha_tilde = y + (1 - y) * alpha`: the true class is reset to 1.
pub fn adjusted_alpha(state: &DirichletState, y: &[f64]) -> Result<DirichletState> {
    let label = one_hot_index(y, state.k())?;
    Ok(DirichletState::from_valid_alpha(tilde(
        state.alpha(),
        label,
    )))
}

fn tilde(alpha: &[f64], label: usize) -> Vec<f64> {
    alpha
        .iter()
        .enumerate()
        .map(|(i, &a)| if i == label { 1.0 } else { a })
        .collect()
}

/// `KL(Dir(alpha) || Dir(1, ..., 1))`; every concentration must be `>= 1`.
pub fn kl_to_uniform(alpha: &[f64]) -> Result<f64> {
    let state = DirichletState::from_alpha(alpha.to_vec())?;
    Ok(kl_uniform(state.alpha(), state.strength()))
}

fn kl_uniform(alpha: &[f64], s: f64) -> f64 {
    let k = alpha.len() as f64;
    let psi_s = psi(s);
    let mut kl = ln_gamma(s) - ln_gamma(k);
    for &a in alpha {
        kl += -ln_gamma(a) + (a - 1.0) * (psi(a) - psi_s);
    }
    kl.max(0.0)
}

/// `d KL / d alpha_j = (alpha_j - 1) psi'(alpha_j) - (S - K) psi'(S)`.
fn kl_grad(alpha: &[f64], s: f64, out: &mut [f64]) {
    let k = alpha.len() as f64;
    let common = (s - k) * psi1(s);
    for (g, &a) in out.iter_mut().zip(alpha) {
        *g = (a - 1.0) * psi1(a) - common;
    }
}

/// `0.5 * (sum mu^2 + sum sigma^2 - 2 sum ln sigma)`.
///
/// This is the Gaussian KL to `N(0, I)` without its constant `-C/2`, so
/// its minimum over `sigma` (at `sigma = 1`) is `C/2` rather than 0.
pub fn ib_info_loss(mu: &[f64], sigma: &[f64]) -> Result<f64> {
    if mu.len() != sigma.len() {
        return Err(Error::LengthMismatch {
            what: "mu vs sigma",
            expected: mu.len(),
            found: sigma.len(),
        });
    }
    for (index, &s) in sigma.iter().enumerate() {
        if s.is_nan() || s <= 0.0 {
            return Err(Error::NonPositiveSigma { index, value: s });
        }
    }
    Ok(ib_info_unchecked(mu, sigma))
}

fn ib_info_unchecked(mu: &[f64], sigma: &[f64]) -> f64 {
    let mu2: f64 = mu.iter().map(|m| m * m).sum();
    let s2: f64 = sigma.iter().map(|s| s * s).sum();
    let logs: f64 = sigma.iter().map(|&s| libm::log(s)).sum();
    0.5 * (mu2 + s2 - 2.0 * logs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Edl,
    IbEdl,
}

/// Affine map `features -> K outputs`, weights stored row-major `K x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub dim: usize,
}

impl LinearHead {
    pub fn zeros(k: usize, dim: usize) -> Self {
        LinearHead {
            weights: vec![0.0; k * dim],
            bias: vec![0.0; k],
            dim,
        }
    }

    pub fn k(&self) -> usize {
        self.bias.len()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.bias
            .iter()
            .enumerate()
            .map(|(j, b)| {
                let row = &self.weights[j * self.dim..(j + 1) * self.dim];
                b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()
            })
            .collect()
    }

    /// `d/dW += scale * dout (x) x`, `d/db += scale * dout`.
    fn accumulate(&mut self, dout: &[f64], x: &[f64], scale: f64) {
        for (j, &d) in dout.iter().enumerate() {
            self.bias[j] += scale * d;
            let row = &mut self.weights[j * self.dim..(j + 1) * self.dim];
            for (w, xi) in row.iter_mut().zip(x) {
                *w += scale * d * xi;
            }
        }
    }

    fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Parameters of the toy evidential classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModelParams {
    /// Evidence logits (EDL) or latent means `mu` (IB-EDL).
    pub head: LinearHead,
    /// Pre-softplus `sigma` head; present exactly in IB-EDL mode.
    pub sigma_head: Option<LinearHead>,
    /// Noise multiplier used at evaluation time.
    pub sigma_mult: f64,
}

/// Gradient with the same layout as [`ToyModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient {
    pub head: LinearHead,
    pub sigma_head: Option<LinearHead>,
}

impl ParamGradient {
    pub fn to_flat(&self) -> Vec<f64> {
        flatten(&self.head, self.sigma_head.as_ref())
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.to_flat().iter().map(|g| g * g).sum())
    }
}

fn flatten(head: &LinearHead, sigma: Option<&LinearHead>) -> Vec<f64> {
    let mut v = Vec::with_capacity(head.len() + sigma.map_or(0, LinearHead::len));
    v.extend_from_slice(&head.weights);
    v.extend_from_slice(&head.bias);
    if let Some(s) = sigma {
        v.extend_from_slice(&s.weights);
        v.extend_from_slice(&s.bias);
    }
    v
}

impl ToyModelParams {
    pub fn zeros(mode: Mode, k: usize, dim: usize) -> Self {
        ToyModelParams {
            head: LinearHead::zeros(k, dim),
            sigma_head: (mode == Mode::IbEdl).then(|| LinearHead::zeros(k, dim)),
            sigma_mult: 0.0,
        }
    }

    /// Weights drawn from `N(0, scale^2)` on stream 2 of `seed`; biases zero.
    pub fn initialize(mode: Mode, k: usize, dim: usize, scale: f64, seed: u64) -> Self {
        let mut p = Self::zeros(mode, k, dim);
        let mut rng = forge::stream(seed, 2);
        for w in p.head.weights.iter_mut() {
            *w = scale * standard_normal(&mut rng);
        }
        if let Some(s) = p.sigma_head.as_mut() {
            for w in s.weights.iter_mut() {
                *w = scale * standard_normal(&mut rng);
            }
        }
        p
    }

    pub fn mode(&self) -> Mode {
        if self.sigma_head.is_some() {
            Mode::IbEdl
        } else {
            Mode::Edl
        }
    }

    pub fn k(&self) -> usize {
        self.head.k()
    }

    pub fn dim(&self) -> usize {
        self.head.dim
    }

    pub fn validate(&self) -> Result<()> {
        let (k, dim) = (self.k(), self.dim());
        if k < 2 {
            return Err(Error::TooFewClasses { found: k });
        }
        if self.head.weights.len() != k * dim {
            return Err(Error::LengthMismatch {
                what: "head weights",
                expected: k * dim,
                found: self.head.weights.len(),
            });
        }
        if let Some(s) = &self.sigma_head {
            if s.bias.len() != k || s.dim != dim || s.weights.len() != k * dim {
                return Err(Error::LengthMismatch {
                    what: "sigma head",
                    expected: k * dim,
                    found: s.weights.len(),
                });
            }
        }
        if !(self.sigma_mult.is_finite() && self.sigma_mult >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma_mult",
                detail: format!("{} must be finite and >= 0", self.sigma_mult),
            });
        }
        Ok(())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        flatten(&self.head, self.sigma_head.as_ref())
    }

    /// Overwrites all parameters from a vector in [`Self::to_flat`] order.
    pub fn set_flat(&mut self, flat: &[f64]) {
        let mut it = flat.iter().copied();
        let mut fill = |dst: &mut [f64]| dst.iter_mut().for_each(|d| *d = it.next().unwrap_or(*d));
        fill(&mut self.head.weights);
        fill(&mut self.head.bias);
        if let Some(s) = self.sigma_head.as_mut() {
            fill(&mut s.weights);
            fill(&mut s.bias);
        }
    }

    fn zero_gradient(&self) -> ParamGradient {
        ParamGradient {
            head: LinearHead::zeros(self.k(), self.dim()),
            sigma_head: self
                .sigma_head
                .as_ref()
                .map(|_| LinearHead::zeros(self.k(), self.dim())),
        }
    }

    fn step(&mut self, grad: &ParamGradient, lr: f64) {
        let mut flat = self.to_flat();
        for (p, g) in flat.iter_mut().zip(grad.to_flat()) {
            *p -= lr * g;
        }
        self.set_flat(&flat);
    }

    /// Dirichlet state for one feature vector at evaluation time (noise
    /// scaled by `sigma_mult`, drawn from stream 0 of `seed`).
    pub fn predict(&self, features: &[f64], seed: u64) -> DirichletState {
        let mut rng = forge::stream(seed, 0);
        let eps: Vec<f64> = (0..self.k()).map(|_| standard_normal(&mut rng)).collect();
        let fwd = self.forward(features, &eps, self.sigma_mult);
        DirichletState::from_valid_alpha(fwd.alpha)
    }

    fn forward(&self, x: &[f64], eps: &[f64], noise_scale: f64) -> Forward {
        let mu = self.head.apply(x);
        let (z, sigma_pre, sigma) = match &self.sigma_head {
            None => (mu.clone(), Vec::new(), Vec::new()),
            Some(h) => {
                let pre = h.apply(x);
                let sigma: Vec<f64> = pre.iter().map(|&p| softplus(p)).collect();
                let z = mu
                    .iter()
                    .zip(&sigma)
                    .zip(eps)
                    .map(|((m, s), e)| m + noise_scale * s * e)
                    .collect();
                (z, pre, sigma)
            }
        };
        let alpha = z.iter().map(|&v| softplus(v) + 1.0).collect();
        Forward {
            mu,
            z,
            sigma_pre,
            sigma,
            alpha,
        }
    }
}

struct Forward {
    mu: Vec<f64>,
    z: Vec<f64>,
    sigma_pre: Vec<f64>,
    sigma: Vec<f64>,
    alpha: Vec<f64>,
}

/// One labelled feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Phase {
    /// IB noise at full scale.
    #[default]
    Train,
    /// IB noise scaled by `sigma_mult`.
    Eval,
}

/// Weights and noise settings of the training objective. EDL mode ignores
/// `beta`, IB-EDL mode ignores `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub lambda: f64,
    pub beta: f64,
    pub seed: u64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub mse_term: f64,
    pub kl_term: f64,
    pub ib_info_term: Option<f64>,
    pub lambda_weight: f64,
    pub beta_weight: f64,
    pub total: f64,
}

fn check_batch(params: &ToyModelParams, batch: &[Example], obj: &Objective) -> Result<()> {
    params.validate()?;
    if batch.is_empty() {
        return Err(Error::Empty { what: "batch" });
    }
    for ex in batch {
        if ex.features.len() != params.dim() {
            return Err(Error::LengthMismatch {
                what: "features",
                expected: params.dim(),
                found: ex.features.len(),
            });
        }
        if ex.label >= params.k() {
            return Err(Error::IndexOutOfRange {
                what: "label",
                index: ex.label,
                len: params.k(),
            });
        }
    }
    for (name, v) in [("lambda", obj.lambda), ("beta", obj.beta)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidParameter {
                name,
                detail: format!("{v} must be finite and >= 0"),
            });
        }
    }
    Ok(())
}

/// Standard-normal noise for the whole batch: `K` draws per example in
/// batch order from stream 0 of `seed`. Empty in EDL mode.
fn batch_noise(params: &ToyModelParams, n: usize, seed: u64) -> Vec<f64> {
    if params.mode() == Mode::Edl {
        return Vec::new();
    }
    let mut rng = forge::stream(seed, 0);
    (0..n * params.k())
        .map(|_| standard_normal(&mut rng))
        .collect()
}

fn noise_scale(params: &ToyModelParams, phase: Phase) -> f64 {
    match phase {
        Phase::Train => 1.0,
        Phase::Eval => params.sigma_mult,
    }
}

/// Batch-mean loss.
pub fn total_loss(
    params: &ToyModelParams,
    batch: &[Example],
    obj: &Objective,
) -> Result<LossBreakdown> {
    check_batch(params, batch, obj)?;
    let k = params.k();
    let noise = batch_noise(params, batch.len(), obj.seed);
    let scale = noise_scale(params, obj.phase);
    let (mut mse, mut kl, mut info) = (0.0, 0.0, 0.0);
    for (n, ex) in batch.iter().enumerate() {
        let eps = noise.get(n * k..(n + 1) * k).unwrap_or(&[]);
        let f = params.forward(&ex.features, eps, scale);
        let s: f64 = f.alpha.iter().sum();
        mse += mse_for_label(&f.alpha, s, ex.label, MseVariance::Expectation);
        match params.mode() {
            Mode::Edl => {
                let t = tilde(&f.alpha, ex.label);
                let st = t.iter().sum();
                kl += kl_uniform(&t, st);
            }
            Mode::IbEdl => {
                info += ib_info_loss(&f.mu, &f.sigma)?;
            }
        }
    }
    let n = batch.len() as f64;
    let (mse, kl, info) = (mse / n, kl / n, info / n);
    Ok(match params.mode() {
        Mode::Edl => LossBreakdown {
            mse_term: mse,
            kl_term: kl,
            ib_info_term: None,
            lambda_weight: obj.lambda,
            beta_weight: obj.beta,
            total: mse + obj.lambda * kl,
        },
        Mode::IbEdl => LossBreakdown {
            mse_term: mse,
            kl_term: 0.0,
            ib_info_term: Some(info),
            lambda_weight: obj.lambda,
            beta_weight: obj.beta,
            total: mse + obj.beta * info,
        },
    })
}

/// Analytic gradient of [`total_loss`] with the IB noise fixed by the seed.
pub fn loss_gradient(
    params: &ToyModelParams,
    batch: &[Example],
    obj: &Objective,
) -> Result<ParamGradient> {
    check_batch(params, batch, obj)?;
    let k = params.k();
    let noise = batch_noise(params, batch.len(), obj.seed);
    let scale = noise_scale(params, obj.phase);
    let inv_n = 1.0 / batch.len() as f64;
    let mut grad = params.zero_gradient();
    let mut d_alpha = vec![0.0; k];
    let mut d_kl = vec![0.0; k];

    for (n, ex) in batch.iter().enumerate() {
        let eps = noise.get(n * k..(n + 1) * k).unwrap_or(&[]);
        let f = params.forward(&ex.features, eps, scale);
        let s: f64 = f.alpha.iter().sum();
        mse_grad(&f.alpha, s, ex.label, &mut d_alpha);
        if params.mode() == Mode::Edl && obj.lambda != 0.0 {
            let t = tilde(&f.alpha, ex.label);
            let st = t.iter().sum();
            kl_grad(&t, st, &mut d_kl);
            for (j, g) in d_alpha.iter_mut().enumerate() {
                if j != ex.label {
                    *g += obj.lambda * d_kl[j];
                }
            }
        }
        let d_z: Vec<f64> = d_alpha
            .iter()
            .zip(&f.z)
            .map(|(g, &z)| g * sigmoid(z))
            .collect();
        match params.mode() {
            Mode::Edl => grad.head.accumulate(&d_z, &ex.features, inv_n),
            Mode::IbEdl => {
                let d_mu: Vec<f64> = d_z
                    .iter()
                    .zip(&f.mu)
                    .map(|(dz, m)| dz + obj.beta * m)
                    .collect();
                let d_pre: Vec<f64> = (0..k)
                    .map(|j| {
                        let sig = f.sigma[j];
                        let d_sigma = d_z[j] * scale * eps[j] + obj.beta * (sig - 1.0 / sig);
                        d_sigma * sigmoid(f.sigma_pre[j])
                    })
                    .collect();
                grad.head.accumulate(&d_mu, &ex.features, inv_n);
                if let Some(h) = grad.sigma_head.as_mut() {
                    h.accumulate(&d_pre, &ex.features, inv_n);
                }
            }
        }
    }
    Ok(grad)
}

/// `lambda_t` as a function of the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSchedule {
    Constant(f64),
    /// `max * min(1, step / ramp_steps)`.
    Ramp {
        max: f64,
        ramp_steps: usize,
    },
}

impl LambdaSchedule {
    pub fn at(&self, step: usize) -> f64 {
        match *self {
            LambdaSchedule::Constant(l) => l,
            LambdaSchedule::Ramp { max, ramp_steps } => {
                if ramp_steps == 0 {
                    max
                } else {
                    max * (step as f64 / ramp_steps as f64).min(1.0)
                }
            }
        }
    }
}

/// Gaussian radial-basis features on a `grid x grid` lattice spanning the
/// bounding box of the training points, bandwidth equal to the mean lattice
/// spacing. Far from the data every feature vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfFeatures {
    pub centers: Vec<[f64; 2]>,
    pub bandwidth: f64,
}

impl RbfFeatures {
    pub fn fit(points: &[LabeledPoint], grid: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty { what: "points" });
        }
        if grid < 2 {
            return Err(Error::InvalidParameter {
                name: "grid",
                detail: format!("{grid} must be at least 2"),
            });
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for d in 0..2 {
                lo[d] = lo[d].min(p.x[d]);
                hi[d] = hi[d].max(p.x[d]);
            }
        }
        let step = [
            (hi[0] - lo[0]).max(1e-9) / (grid - 1) as f64,
            (hi[1] - lo[1]).max(1e-9) / (grid - 1) as f64,
        ];
        let mut centers = Vec::with_capacity(grid * grid);
        for i in 0..grid {
            for j in 0..grid {
                centers.push([lo[0] + i as f64 * step[0], lo[1] + j as f64 * step[1]]);
            }
        }
        Ok(RbfFeatures {
            centers,
            bandwidth: 0.5 * (step[0] + step[1]),
        })
    }

    pub fn dim(&self) -> usize {
        self.centers.len()
    }

    pub fn map(&self, x: [f64; 2]) -> Vec<f64> {
        let denom = 2.0 * self.bandwidth * self.bandwidth;
        self.centers
            .iter()
            .map(|c| {
                let d2 = (x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1]);
                libm::exp(-d2 / denom)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub steps: usize,
    pub learning_rate: f64,
    pub lambda: LambdaSchedule,
    pub beta: f64,
    pub seed: u64,
    /// Evaluation-time noise multiplier for IB-EDL.
    pub sigma_mult: f64,
    /// RBF lattice size per axis.
    pub grid: usize,
    /// Standard deviation of the initial weights.
    pub init_scale: f64,
    /// Far probes sit at this multiple of the data radius.
    pub probe_radius_factor: f64,
    pub probe_count: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Edl,
            steps: 500,
            learning_rate: 0.5,
            lambda: LambdaSchedule::Ramp {
                max: 1.0,
                ramp_steps: 100,
            },
            beta: 1e-3,
            seed: 42,
            sigma_mult: 0.0,
            grid: 5,
            init_scale: 0.01,
            probe_radius_factor: 10.0,
            probe_count: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub steps: usize,
    pub train_accuracy: f64,
    pub mean_id_vacuity: f64,
    pub mean_far_vacuity: f64,
    pub final_loss: LossBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub features: RbfFeatures,
    pub params: ToyModelParams,
    pub summary: TrainSummary,
}

impl TrainedModel {
    pub fn predict(&self, x: [f64; 2], seed: u64) -> DirichletState {
        self.params.predict(&self.features.map(x), seed)
    }
}

fn check_dataset(points: &[LabeledPoint]) -> Result<usize> {
    let k = points.iter().map(|p| p.label).max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(Error::TooFewClasses { found: k });
    }
    for class in 0..k {
        let n = points.iter().filter(|p| p.label == class).count();
        if n < 50 {
            return Err(Error::InvalidParameter {
                name: "dataset",
                detail: format!("class {class} has {n} points, at least 50 are required"),
            });
        }
    }
    Ok(k)
}

/// Points evenly spaced on a circle of `factor` times the data radius
/// around the data centroid.
pub fn far_probes(points: &[LabeledPoint], factor: f64, count: usize) -> Vec<[f64; 2]> {
    let n = points.len().max(1) as f64;
    let cx = points.iter().map(|p| p.x[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.x[1]).sum::<f64>() / n;
    let radius = points
        .iter()
        .map(|p| libm::hypot(p.x[0] - cx, p.x[1] - cy))
        .fold(0.0, f64::max);
    (0..count)
        .map(|i| {
            let t = core::f64::consts::TAU * i as f64 / count as f64;
            [
                cx + factor * radius * libm::cos(t),
                cy + factor * radius * libm::sin(t),
            ]
        })
        .collect()
}

/// Full-batch gradient descent with a constant learning rate. Step `t`
/// draws its IB noise from seed `config.seed + t`.
pub fn train_toy(config: &TrainConfig, dataset: &[LabeledPoint]) -> Result<TrainedModel> {
    let k = check_dataset(dataset)?;
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(Error::InvalidParameter {
            name: "learning_rate",
            detail: format!("{} must be positive", config.learning_rate),
        });
    }
    let features = RbfFeatures::fit(dataset, config.grid)?;
    let batch: Vec<Example> = dataset
        .iter()
        .map(|p| Example {
            features: features.map(p.x),
            label: p.label,
        })
        .collect();
    let mut params = ToyModelParams::initialize(
        config.mode,
        k,
        features.dim(),
        config.init_scale,
        config.seed,
    );
    params.sigma_mult = config.sigma_mult;

    for step in 0..config.steps {
        let obj = Objective {
            lambda: config.lambda.at(step),
            beta: config.beta,
            seed: config.seed.wrapping_add(step as u64),
            phase: Phase::Train,
        };
        let grad = loss_gradient(&params, &batch, &obj)?;
        if !grad.to_flat().iter().all(|g| g.is_finite()) {
            return Err(Error::Diverged { step });
        }
        params.step(&grad, config.learning_rate);
        let loss = total_loss(&params, &batch, &obj);
        if !matches!(loss, Ok(l) if l.total.is_finite()) {
            return Err(Error::Diverged { step });
        }
    }

    let eval = Objective {
        lambda: config.lambda.at(config.steps),
        beta: config.beta,
        seed: config.seed,
        phase: Phase::Eval,
    };
    let final_loss = total_loss(&params, &batch, &eval)?;
    let states: Vec<DirichletState> = batch
        .iter()
        .map(|ex| params.predict(&ex.features, config.seed))
        .collect();
    let hits = states
        .iter()
        .zip(&batch)
        .filter(|(s, ex)| s.argmax() == ex.label)
        .count();
    let mean_id_vacuity =
        states.iter().map(DirichletState::vacuity).sum::<f64>() / states.len() as f64;
    let probes = far_probes(
        dataset,
        config.probe_radius_factor,
        config.probe_count.max(1),
    );
    let mean_far_vacuity = probes
        .iter()
        .map(|&x| params.predict(&features.map(x), config.seed).vacuity())
        .sum::<f64>()
        / probes.len() as f64;

    Ok(TrainedModel {
        features,
        params,
        summary: TrainSummary {
            steps: config.steps,
            train_accuracy: hits as f64 / batch.len() as f64,
            mean_id_vacuity,
            mean_far_vacuity,
            final_loss,
        },
    })
}
