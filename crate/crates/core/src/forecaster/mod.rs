//! Probabilistic autoregressive forecaster.
//!
//! One gated recurrent cell reads all `N` variables at each step; a linear
//! head maps the hidden state (and the current input) to a Gaussian mean and
//! scale per variable. Training maximizes the likelihood of the horizon with
//! teacher forcing; prediction decodes the horizon by feeding back the
//! predicted means.

mod gru;

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::series::{MultivariateSeries, WindowSet};

use gru::{softplus, Layout};

pub const MODEL_FORMAT: &str = "gcause-forecaster/1";

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

fn nll(mu: f64, sigma: f64, z: f64) -> f64 {
    let d = (z - mu) / sigma;
    HALF_LN_2PI + sigma.ln() + 0.5 * d * d
}

/// Negative log density of `z` under `N(mu, sigma²)`.
pub fn nll_loss(mu: f64, sigma: f64, z: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Config(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    Ok(nll(mu, sigma, z))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecasterConfig {
    pub context: usize,
    pub horizon: usize,
    /// Hidden width; `None` means `max(16, 8·N)`.
    pub hidden: Option<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    /// Decoupled weight decay applied to every parameter at each step.
    pub weight_decay: f64,
    pub batch_size: usize,
    /// Stride of the training windows.
    pub train_stride: usize,
    pub min_sigma: f64,
    /// Share of the latest windows held out to pick the best epoch; zero
    /// keeps the parameters of the final epoch.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        Self {
            context: 24,
            horizon: 8,
            hidden: None,
            epochs: 50,
            learning_rate: 1e-2,
            clip_norm: 5.0,
            weight_decay: 0.0,
            batch_size: 32,
            train_stride: 1,
            min_sigma: 1e-3,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl ForecasterConfig {
    pub fn hidden_for(&self, n_vars: usize) -> usize {
        self.hidden.unwrap_or_else(|| (8 * n_vars).max(16))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.into()));
        if self.context < 1 || self.horizon < 1 {
            return fail("context and horizon must be at least 1");
        }
        if self.hidden == Some(0) {
            return fail("hidden size must be at least 1");
        }
        if !(self.learning_rate > 0.0) || !(self.clip_norm > 0.0) {
            return fail("learning_rate and clip_norm must be positive");
        }
        if !(self.min_sigma > 0.0) {
            return fail("min_sigma must be positive");
        }
        if !(self.weight_decay >= 0.0) {
            return fail("weight_decay must be non-negative");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return fail("validation_fraction must lie in [0, 1)");
        }
        if self.batch_size < 1 || self.train_stride < 1 {
            return fail("batch_size and train_stride must be at least 1");
        }
        Ok(())
    }
}

/// Per-step, per-variable predictive means and scales over a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveTrajectory {
    pub n_vars: usize,
    /// Row-major `horizon × n_vars`.
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl PredictiveTrajectory {
    pub fn horizon(&self) -> usize {
        self.mu.len() / self.n_vars
    }

    pub fn mu(&self, t: usize, j: usize) -> f64 {
        self.mu[t * self.n_vars + j]
    }

    pub fn sigma(&self, t: usize, j: usize) -> f64 {
        self.sigma[t * self.n_vars + j]
    }

    /// Predicted means of variable `j` across the horizon.
    pub fn mu_of(&self, j: usize) -> Vec<f64> {
        self.mu
            .iter()
            .skip(j)
            .step_by(self.n_vars)
            .copied()
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedForecaster {
    format: String,
    pub n_vars: usize,
    pub hidden: usize,
    pub context: usize,
    pub horizon: usize,
    pub min_sigma: f64,
    params: Vec<f64>,
    pub loss_trace: Vec<f64>,
    /// Mean held-out window NLL per epoch, empty without validation.
    #[serde(default)]
    pub validation_trace: Vec<f64>,
    /// Epoch (from 1) whose parameters were kept.
    #[serde(default)]
    pub best_epoch: Option<usize>,
}

impl TrainedForecaster {
    /// Untrained model with weights uniform on `±1/√fan_in` and zero biases.
    pub fn init(n_vars: usize, config: &ForecasterConfig) -> Result<Self> {
        config.validate()?;
        let hidden = config.hidden_for(n_vars);
        let lay = Layout::new(n_vars, hidden);
        let mut rng = rng::stream(config.seed, 10);
        let mut params = vec![0.0; lay.len()];
        let k_cell = 1.0 / (hidden as f64).sqrt();
        let k_head = 1.0 / (lay.head_in() as f64).sqrt();
        for g in 0..3 {
            for range in [lay.w(g), lay.u(g)] {
                for p in &mut params[range] {
                    *p = rng.random_range(-k_cell..k_cell);
                }
            }
        }
        for p in &mut params[lay.v()] {
            *p = rng.random_range(-k_head..k_head);
        }
        Ok(Self::from_params(n_vars, hidden, config, params))
    }

    fn from_params(
        n_vars: usize,
        hidden: usize,
        config: &ForecasterConfig,
        params: Vec<f64>,
    ) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            n_vars,
            hidden,
            context: config.context,
            horizon: config.horizon,
            min_sigma: config.min_sigma,
            params,
            loss_trace: Vec::new(),
            validation_trace: Vec::new(),
            best_epoch: None,
        }
    }

    /// Model with every parameter zero.
    pub fn zeros(n_vars: usize, config: &ForecasterConfig) -> Result<Self> {
        config.validate()?;
        let hidden = config.hidden_for(n_vars);
        let len = Layout::new(n_vars, hidden).len();
        Ok(Self::from_params(n_vars, hidden, config, vec![0.0; len]))
    }

    fn layout(&self) -> Layout {
        Layout::new(self.n_vars, self.hidden)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Output-head biases for the means.
    pub fn mu_bias(&self) -> &[f64] {
        &self.params[self.layout().c()][..self.n_vars]
    }

    /// Copy of the model that cannot see the given input variables: their
    /// columns in every input weight matrix are zeroed.
    pub fn without_inputs(&self, vars: &[usize]) -> Self {
        let mut out = self.clone();
        let lay = self.layout();
        let n = self.n_vars;
        for g in 0..3 {
            let w = &mut out.params[lay.w(g)];
            for row in w.chunks_exact_mut(n) {
                for &j in vars {
                    row[j] = 0.0;
                }
            }
        }
        let hs = self.hidden;
        for row in out.params[lay.v()].chunks_exact_mut(lay.head_in()) {
            for &j in vars {
                row[hs + j] = 0.0;
            }
        }
        out
    }

    /// Rolls the cell over `context` (row-major, `n_vars` wide) and decodes
    /// `horizon` steps, feeding each predicted mean back as the next input.
    pub fn predict(&self, context: &[f64], horizon: usize) -> Result<PredictiveTrajectory> {
        let n = self.n_vars;
        if context.is_empty() || !context.len().is_multiple_of(n) {
            return Err(Error::Shape(format!(
                "context of {} values is not a whole number of {n}-wide rows",
                context.len()
            )));
        }
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        let lay = self.layout();
        let p = &self.params;
        let mut h = vec![0.0; self.hidden];
        let mut x: Vec<f64> = Vec::new();
        for row in context.chunks_exact(n) {
            h = gru::cell(p, lay, row, &h).h;
            x = row.to_vec();
        }
        let mut mu_out = Vec::with_capacity(horizon * n);
        let mut sigma_out = Vec::with_capacity(horizon * n);
        for step in 0..horizon {
            if step > 0 {
                h = gru::cell(p, lay, &x, &h).h;
            }
            let (mu, raw) = gru::head(p, lay, &h, &x);
            sigma_out.extend(raw.iter().map(|&r| softplus(r) + self.min_sigma));
            mu_out.extend_from_slice(&mu);
            x = mu;
        }
        Ok(PredictiveTrajectory {
            n_vars: n,
            mu: mu_out,
            sigma: sigma_out,
        })
    }

    /// Teacher-forced NLL of one `(context + horizon) × n_vars` window and
    /// its gradient with respect to [`params`](Self::params).
    pub fn window_loss_and_grad(&self, rows: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_window(rows)?;
        let mut grad = vec![0.0; self.params.len()];
        let loss = gru::window_loss(
            &self.params,
            self.layout(),
            rows,
            self.context,
            self.horizon,
            self.min_sigma,
            Some(&mut grad),
        );
        Ok((loss, grad))
    }

    pub fn window_loss(&self, rows: &[f64]) -> Result<f64> {
        self.check_window(rows)?;
        Ok(gru::window_loss(
            &self.params,
            self.layout(),
            rows,
            self.context,
            self.horizon,
            self.min_sigma,
            None,
        ))
    }

    fn check_window(&self, rows: &[f64]) -> Result<()> {
        let expected = (self.context + self.horizon) * self.n_vars;
        if rows.len() != expected {
            return Err(Error::Shape(format!(
                "window has {} values, expected {expected}",
                rows.len()
            )));
        }
        Ok(())
    }

    /// Mean predictive NLL per horizon step and variable, decoding each
    /// window from its context.
    pub fn predictive_nll(&self, series: &MultivariateSeries, windows: &WindowSet) -> Result<f64> {
        let mut total = 0.0;
        for w in windows.iter() {
            let traj = self.predict(series.rows(w.context_range()), w.horizon)?;
            let target = series.rows(w.target_range());
            for (i, z) in target.iter().enumerate() {
                total += nll(traj.mu[i], traj.sigma[i], *z);
            }
        }
        Ok(total / (windows.len() * windows.horizon * self.n_vars) as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s)?;
        if model.format != MODEL_FORMAT {
            return Err(Error::Config(format!(
                "unknown model format {:?}",
                model.format
            )));
        }
        if model.params.len() != model.layout().len() {
            return Err(Error::Shape("parameter count does not match layout".into()));
        }
        Ok(model)
    }

    /// Loss trace as `epoch,loss` CSV.
    pub fn write_loss_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch,loss")?;
        for (epoch, loss) in self.loss_trace.iter().enumerate() {
            writeln!(w, "{},{}", epoch + 1, loss)?;
        }
        Ok(())
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], decay: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= self.lr
                * ((self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS) + decay * params[i]);
        }
    }
}

/// Cosine schedule from `base` in the first epoch down to `base / 100` in
/// the last.
fn annealed_rate(base: f64, epoch: usize, epochs: usize) -> f64 {
    let progress = if epochs > 1 {
        epoch as f64 / (epochs - 1) as f64
    } else {
        0.0
    };
    let floor = base / 100.0;
    floor + (base - floor) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
}

/// Fits a forecaster by mini-batch Adam on the mean window NLL.
///
/// The learning rate follows a cosine decay over the epochs. Window order is
/// reshuffled every epoch from `config.seed`; gradients are clipped to
/// `config.clip_norm` in global norm. The loss trace holds the mean training
/// window NLL of each epoch. With a validation fraction, the returned
/// parameters are those of the epoch with the lowest held-out NLL.
pub fn train(
    series: &MultivariateSeries,
    windows: &WindowSet,
    config: &ForecasterConfig,
) -> Result<TrainedForecaster> {
    config.validate()?;
    if windows.context != config.context || windows.horizon != config.horizon {
        return Err(Error::Config(format!(
            "windows are {}+{}, config expects {}+{}",
            windows.context, windows.horizon, config.context, config.horizon
        )));
    }
    if windows.is_empty() {
        return Err(Error::TooFewWindows(0));
    }
    if let Some(last) = windows.windows().last() {
        if last.full_range().end > series.len() {
            return Err(Error::Shape("windows extend past the series".into()));
        }
    }

    let (fit, held_out) = split_windows(windows, config.validation_fraction);
    let mut model = TrainedForecaster::init(series.n_vars(), config)?;
    let lay = model.layout();
    let mut adam = Adam::new(lay.len(), config.learning_rate);
    let mut shuffle_rng = rng::stream(config.seed, 11);
    let mut order = fit.clone();
    let mut grad = vec![0.0; lay.len()];
    let mut best: Option<(f64, Vec<f64>)> = None;

    for epoch in 0..config.epochs {
        adam.lr = annealed_rate(config.learning_rate, epoch, config.epochs);
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_loss = 0.0;
            for &wi in batch {
                let w = windows.windows()[wi];
                batch_loss += gru::window_loss(
                    &model.params,
                    lay,
                    series.rows(w.full_range()),
                    config.context,
                    config.horizon,
                    config.min_sigma,
                    Some(&mut grad),
                );
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFinite {
                    what: "loss",
                    epoch,
                });
            }
            epoch_loss += batch_loss;
            let scale = 1.0 / batch.len() as f64;
            let mut norm_sq = 0.0;
            for g in grad.iter_mut() {
                *g *= scale;
                norm_sq += *g * *g;
            }
            if !norm_sq.is_finite() {
                return Err(Error::NonFinite {
                    what: "gradient",
                    epoch,
                });
            }
            let norm = norm_sq.sqrt();
            if norm > config.clip_norm {
                let c = config.clip_norm / norm;
                grad.iter_mut().for_each(|g| *g *= c);
            }
            adam.step(&mut model.params, &grad, config.weight_decay);
        }
        model.loss_trace.push(epoch_loss / fit.len() as f64);

        if !held_out.is_empty() {
            let val = held_out
                .iter()
                .map(|&wi| {
                    let w = windows.windows()[wi];
                    gru::window_loss(
                        &model.params,
                        lay,
                        series.rows(w.full_range()),
                        config.context,
                        config.horizon,
                        config.min_sigma,
                        None,
                    )
                })
                .sum::<f64>()
                / held_out.len() as f64;
            model.validation_trace.push(val);
            if val.is_finite() && best.as_ref().is_none_or(|(b, _)| val < *b) {
                best = Some((val, model.params.clone()));
                model.best_epoch = Some(epoch + 1);
            }
        }
    }
    if let Some((_, params)) = best {
        model.params = params;
    }
    if model.params.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite {
            what: "parameter",
            epoch: config.epochs,
        });
    }
    Ok(model)
}

/// Splits window indices into a fitting set and the latest `fraction` of
/// windows. Fitting windows that overlap a held-out one are dropped. When
/// the series is too short for both sets, every window is used for fitting.
fn split_windows(windows: &WindowSet, fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let all: Vec<usize> = (0..windows.len()).collect();
    let n_val = (windows.len() as f64 * fraction).round() as usize;
    if n_val == 0 || n_val >= windows.len() {
        return (all, Vec::new());
    }
    let first_val = windows.len() - n_val;
    let start = windows.windows()[first_val].t0 - windows.context;
    let fit: Vec<usize> = all[..first_val]
        .iter()
        .copied()
        .filter(|&i| windows.windows()[i].full_range().end <= start)
        .collect();
    if fit.is_empty() {
        return (all, Vec::new());
    }
    (fit, all[first_val..].to_vec())
}

/// Largest `|g_a − g_fd| / max(1, |g_a|, |g_fd|)` over all parameters, where
/// `g_fd` is the central difference with the given step.
pub fn gradient_check_model(model: &TrainedForecaster, rows: &[f64], step: f64) -> Result<f64> {
    let (_, analytic) = model.window_loss_and_grad(rows)?;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for i in 0..analytic.len() {
        let orig = probe.params[i];
        probe.params[i] = orig + step;
        let plus = probe.window_loss(rows)?;
        probe.params[i] = orig - step;
        let minus = probe.window_loss(rows)?;
        probe.params[i] = orig;
        let fd = (plus - minus) / (2.0 * step);
        let a = analytic[i];
        worst = worst.max((a - fd).abs() / 1f64.max(a.abs()).max(fd.abs()));
    }
    Ok(worst)
}

/// Gradient check of a freshly initialized model on the first window of
/// `probe`.
pub fn gradient_check(
    config: &ForecasterConfig,
    probe: &MultivariateSeries,
    step: f64,
) -> Result<f64> {
    let model = TrainedForecaster::init(probe.n_vars(), config)?;
    let len = config.context + config.horizon;
    if probe.len() < len {
        return Err(Error::WindowTooLong {
            length: probe.len(),
            context: config.context,
            horizon: config.horizon,
        });
    }
    gradient_check_model(&model, probe.rows(0..len), step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::make_windows;

    fn tiny_config() -> ForecasterConfig {
        ForecasterConfig {
            context: 5,
            horizon: 3,
            hidden: Some(4),
            seed: 3,
            ..Default::default()
        }
    }

    fn probe(n: usize, len: usize) -> MultivariateSeries {
        let mut rng = rng::stream(99, 0);
        let rows: Vec<Vec<f64>> = (0..len)
            .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        MultivariateSeries::from_rows(&rows).unwrap()
    }

    #[test]
    fn nll_closed_forms() {
        assert!((nll_loss(0.0, 1.0, 0.0).unwrap() - 0.918_938_5).abs() < 1e-6);
        assert!((nll_loss(0.0, 1.0, 1.0).unwrap() - 1.418_938_5).abs() < 1e-6);
        assert!((nll_loss(2.0, 0.5, 2.0).unwrap() - 0.225_791_4).abs() < 1e-6);
        assert!(nll_loss(0.0, 0.0, 1.0).is_err());
        assert!(nll_loss(0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let err = gradient_check(&tiny_config(), &probe(3, 8), 1e-5).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn gradient_check_at_zero_parameters() {
        let model = TrainedForecaster::zeros(3, &tiny_config()).unwrap();
        let p = probe(3, 8);
        let err = gradient_check_model(&model, p.rows(0..8), 1e-5).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn coarse_step_is_less_accurate() {
        let mut model = TrainedForecaster::init(3, &tiny_config()).unwrap();
        // Larger weights make the curvature, and so the truncation error, visible.
        model.params_mut().iter_mut().for_each(|p| *p *= 4.0);
        let p = probe(3, 8);
        let fine = gradient_check_model(&model, p.rows(0..8), 1e-5).unwrap();
        let coarse = gradient_check_model(&model, p.rows(0..8), 1e-2).unwrap();
        assert!(coarse > fine, "coarse {coarse} fine {fine}");
    }

    #[test]
    fn zero_model_predicts_head_bias() {
        let cfg = ForecasterConfig {
            hidden: Some(5),
            ..Default::default()
        };
        let mut model = TrainedForecaster::zeros(2, &cfg).unwrap();
        let lay = model.layout();
        model.params_mut()[lay.c()].copy_from_slice(&[0.7, -1.5, 0.0, 0.0]);
        let traj = model.predict(&[1.0, 2.0, 3.0, 4.0], 4).unwrap();
        for t in 0..4 {
            assert_eq!(traj.mu(t, 0), 0.7);
            assert_eq!(traj.mu(t, 1), -1.5);
            assert!(traj.sigma(t, 0) >= cfg.min_sigma);
        }
    }

    #[test]
    fn first_predicted_step_matches_training_head() {
        let cfg = tiny_config();
        let model = TrainedForecaster::init(3, &cfg).unwrap();
        let p = probe(3, 8);
        let rows = p.rows(0..8);
        let traj = model.predict(p.rows(0..5), 1).unwrap();
        // The teacher-forced loss of a window whose horizon is one step is the
        // NLL under the one-step prediction.
        let one = TrainedForecaster {
            horizon: 1,
            ..model.clone()
        };
        let loss = one.window_loss(&rows[..6 * 3]).unwrap();
        let expected: f64 = (0..3)
            .map(|j| nll(traj.mu(0, j), traj.sigma(0, j), rows[15 + j]))
            .sum();
        assert!((loss - expected).abs() < 1e-12);
    }

    #[test]
    fn predict_shape_errors() {
        let model = TrainedForecaster::init(3, &tiny_config()).unwrap();
        assert!(model.predict(&[1.0, 2.0], 2).is_err());
        assert!(model.predict(&[1.0, 2.0, 3.0], 0).is_err());
    }

    #[test]
    fn training_is_deterministic_and_serializes() {
        let cfg = ForecasterConfig {
            epochs: 3,
            ..tiny_config()
        };
        let data = probe(3, 60);
        let windows = make_windows(60, 5, 3, 1).unwrap();
        let a = train(&data, &windows, &cfg).unwrap();
        let b = train(&data, &windows, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.loss_trace.len(), 3);
        let back = TrainedForecaster::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
        let mut csv = Vec::new();
        a.write_loss_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
    }

    #[test]
    fn train_rejects_mismatched_windows() {
        let data = probe(3, 60);
        let windows = make_windows(60, 6, 3, 1).unwrap();
        assert!(train(&data, &windows, &tiny_config()).is_err());
    }

    #[test]
    fn ablated_inputs_do_not_move_predictions() {
        let model = TrainedForecaster::init(3, &tiny_config())
            .unwrap()
            .without_inputs(&[1]);
        let p = probe(3, 5);
        let mut altered = p.values().to_vec();
        for t in 0..5 {
            altered[t * 3 + 1] += 10.0 * (t as f64 + 1.0);
        }
        let a = model.predict(p.values(), 3).unwrap();
        let b = model.predict(&altered, 3).unwrap();
        assert_eq!(a, b);
    }
}
