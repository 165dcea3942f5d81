//! Invariance testing of forecast residuals under group interventions.
//!
//! For an ordered group pair `(i, j)` the forecaster is run twice over the
//! same windows: once on the observed history and once with the history of
//! group `i` replaced by knockoffs. If the residual distribution of any
//! variable in group `j` shifts (two-sample KS test, Holm-corrected across
//! the variables of `j`), group `i` is declared a cause of group `j`.

mod holm;
mod ks;

use std::fmt;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecaster::{self, ForecasterConfig, TrainedForecaster};
use crate::knockoff::{self, KnockoffModel, SMethod, Shrinkage};
use crate::rng;
use crate::series::{
    make_windows, validate_partition, GroupPartition, MultivariateSeries, WindowSet,
};

pub use holm::holm_adjust;
pub use ks::{kolmogorov_q, ks_statistic, ks_two_sample, KsResult};

/// Below this many evaluation windows the KS test has little power.
pub const RECOMMENDED_WINDOWS: usize = 30;
pub const MIN_WINDOWS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Correction {
    /// Holm step-down across the variables of the target group.
    #[default]
    Holm,
    /// No correction: any raw p-value at or below α.
    AnyRaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InferenceConfig {
    pub alpha: f64,
    /// Floor on `|Z_t|` in the relative residual.
    pub eps: f64,
    pub knockoff_seed: u64,
    pub correction: Correction,
    /// Stride of the evaluation windows; `None` means the horizon, which
    /// makes the windows disjoint.
    pub window_stride: Option<usize>,
    pub shrinkage: Shrinkage,
    pub s_method: SMethod,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            eps: 1e-2,
            knockoff_seed: 0,
            correction: Correction::Holm,
            window_stride: None,
            shrinkage: Shrinkage::Auto,
            s_method: SMethod::SdpCoordinate,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha {} outside (0, 1)",
                self.alpha
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config("eps must be positive".into()));
        }
        if self.window_stride == Some(0) {
            return Err(Error::Config("window_stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Mean relative absolute error of one window,
/// `(1/T) Σ_t |Z_t − Ẑ_t| / max(|Z_t|, eps)`.
pub fn window_residual(actual: &[f64], predicted: &[f64], eps: f64) -> Result<f64> {
    if actual.len() != predicted.len() || actual.is_empty() {
        return Err(Error::Shape(format!(
            "{} actual values against {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::Config("eps must be positive".into()));
    }
    let total: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(z, p)| (z - p).abs() / z.abs().max(eps))
        .sum();
    Ok(total / actual.len() as f64)
}

/// One residual per window for each target variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub targets: Vec<usize>,
    /// `residuals[k][w]` is the residual of `targets[k]` in window `w`.
    pub residuals: Vec<Vec<f64>>,
    pub interventional: bool,
}

fn residuals_with<F>(
    model: &TrainedForecaster,
    series: &MultivariateSeries,
    windows: &WindowSet,
    targets: &[usize],
    eps: f64,
    mut context_for: F,
) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(usize, &[f64]) -> Vec<f64>,
{
    let n = series.n_vars();
    if model.n_vars != n {
        return Err(Error::Shape(format!(
            "model has {} variables, series has {n}",
            model.n_vars
        )));
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= n) {
        return Err(Error::Shape(format!("target variable {bad} out of range")));
    }
    let mut out = vec![Vec::with_capacity(windows.len()); targets.len()];
    for (wi, w) in windows.iter().enumerate() {
        let context = context_for(wi, series.rows(w.context_range()));
        let traj = model.predict(&context, w.horizon)?;
        let actual = series.rows(w.target_range());
        for (k, &j) in targets.iter().enumerate() {
            let obs: Vec<f64> = actual.iter().skip(j).step_by(n).copied().collect();
            out[k].push(window_residual(&obs, &traj.mu_of(j), eps)?);
        }
    }
    Ok(out)
}

/// Residuals of forecasts made from the observed history.
pub fn clean_residuals(
    model: &TrainedForecaster,
    series: &MultivariateSeries,
    windows: &WindowSet,
    targets: &[usize],
    eps: f64,
) -> Result<ResidualSample> {
    let residuals = residuals_with(model, series, windows, targets, eps, |_, ctx| ctx.to_vec())?;
    Ok(ResidualSample {
        targets: targets.to_vec(),
        residuals,
        interventional: false,
    })
}

/// Residuals of forecasts made after replacing the history of `source`
/// with knockoffs. Window `w` draws a fresh knockoff realization of its
/// context from the stream seeded with `seed + w`; only the `source`
/// columns are swapped in.
#[allow(clippy::too_many_arguments)]
pub fn interventional_residuals(
    model: &TrainedForecaster,
    series: &MultivariateSeries,
    windows: &WindowSet,
    source: &[usize],
    targets: &[usize],
    knockoffs: &KnockoffModel,
    seed: u64,
    eps: f64,
) -> Result<ResidualSample> {
    if let Some(v) = source.iter().find(|v| targets.contains(v)) {
        return Err(Error::Config(format!(
            "variable {v} is both intervened on and a target"
        )));
    }
    let n = series.n_vars();
    if knockoffs.n_vars() != n {
        return Err(Error::Shape(format!(
            "knockoff model has {} variables, series has {n}",
            knockoffs.n_vars()
        )));
    }
    let residuals = residuals_with(model, series, windows, targets, eps, |wi, ctx| {
        let mut rng = rng::stream(seed.wrapping_add(wi as u64), 4);
        let fake = knockoffs.sample_rows(ctx, &mut rng);
        let mut out = ctx.to_vec();
        for (row, fake_row) in out.chunks_exact_mut(n).zip(fake.chunks_exact(n)) {
            for &s in source {
                row[s] = fake_row[s];
            }
        }
        out
    })?;
    Ok(ResidualSample {
        targets: targets.to_vec(),
        residuals,
        interventional: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Causes,
    NotCauses,
}

/// Result of testing `src → dst`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDecision {
    pub src: String,
    pub dst: String,
    pub src_index: usize,
    pub dst_index: usize,
    /// Variables of the target group, in test order.
    pub targets: Vec<usize>,
    pub node_pvalues: Vec<f64>,
    pub adjusted: Vec<f64>,
    /// Scaled KS statistic per target variable.
    pub statistic: Vec<f64>,
    pub verdict: Verdict,
    #[serde(skip)]
    pub residuals: Option<(ResidualSample, ResidualSample)>,
}

/// Combined label of an unordered pair `(a, b)`, `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkLabel {
    #[serde(rename = "->")]
    Forward,
    #[serde(rename = "<-")]
    Backward,
    #[serde(rename = "<->")]
    Bidirectional,
    #[serde(rename = "none")]
    None,
}

impl LinkLabel {
    pub fn from_verdicts(forward: Verdict, backward: Verdict) -> Self {
        match (forward, backward) {
            (Verdict::Causes, Verdict::Causes) => Self::Bidirectional,
            (Verdict::Causes, Verdict::NotCauses) => Self::Forward,
            (Verdict::NotCauses, Verdict::Causes) => Self::Backward,
            (Verdict::NotCauses, Verdict::NotCauses) => Self::None,
        }
    }

    fn reversed(self) -> Self {
        match self {
            Self::Forward => Self::Backward,
            Self::Backward => Self::Forward,
            other => other,
        }
    }
}

impl fmt::Display for LinkLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Forward => "->",
            Self::Backward => "<-",
            Self::Bidirectional => "<->",
            Self::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: String,
    pub b: String,
    pub a_index: usize,
    pub b_index: usize,
    pub label: LinkLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionMatrix {
    pub groups: GroupPartition,
    pub alpha: f64,
    pub correction: Correction,
    pub windows: usize,
    pub pairs: Vec<PairDecision>,
    pub links: Vec<Link>,
}

impl DecisionMatrix {
    /// Assembles the matrix from directed decisions, one per ordered pair.
    pub fn from_pairs(
        groups: GroupPartition,
        config: &InferenceConfig,
        windows: usize,
        pairs: Vec<PairDecision>,
    ) -> Result<Self> {
        let g = groups.len();
        let verdict = |i: usize, j: usize| {
            pairs
                .iter()
                .find(|p| p.src_index == i && p.dst_index == j)
                .map(|p| p.verdict)
                .ok_or_else(|| Error::Config(format!("missing test {i} -> {j}")))
        };
        let mut links = Vec::new();
        for a in 0..g {
            for b in a + 1..g {
                links.push(Link {
                    a: groups.name(a).to_owned(),
                    b: groups.name(b).to_owned(),
                    a_index: a,
                    b_index: b,
                    label: LinkLabel::from_verdicts(verdict(a, b)?, verdict(b, a)?),
                });
            }
        }
        Ok(Self {
            groups,
            alpha: config.alpha,
            correction: config.correction,
            windows,
            pairs,
            links,
        })
    }

    /// Label of the pair seen from `i` towards `j`.
    pub fn label_between(&self, i: usize, j: usize) -> Option<LinkLabel> {
        self.links.iter().find_map(|l| {
            if (l.a_index, l.b_index) == (i, j) {
                Some(l.label)
            } else if (l.a_index, l.b_index) == (j, i) {
                Some(l.label.reversed())
            } else {
                None
            }
        })
    }

    pub fn partition(&self) -> &GroupPartition {
        &self.groups
    }
}

/// Knockoff seed of the ordered pair `(i, j)`.
pub fn pair_seed(base: u64, i: usize, j: usize) -> u64 {
    rng::mix(base ^ rng::mix(((i as u64) << 32) | j as u64))
}

/// Tests whether group `i` causes group `j`.
#[allow(clippy::too_many_arguments)]
pub fn test_group_edge(
    model: &TrainedForecaster,
    series: &MultivariateSeries,
    windows: &WindowSet,
    partition: &GroupPartition,
    i: usize,
    j: usize,
    knockoffs: &KnockoffModel,
    config: &InferenceConfig,
) -> Result<PairDecision> {
    if i == j {
        return Err(Error::Config(format!(
            "cannot test group {i} against itself"
        )));
    }
    if i >= partition.len() || j >= partition.len() {
        return Err(Error::Config(format!(
            "group index out of range in {i} -> {j}"
        )));
    }
    config.validate()?;
    let source = partition.members(i);
    let targets = partition.members(j);
    let clean = clean_residuals(model, series, windows, targets, config.eps)?;
    let seed = pair_seed(config.knockoff_seed, i, j);
    let intervened = interventional_residuals(
        model, series, windows, source, targets, knockoffs, seed, config.eps,
    )?;

    let mut node_pvalues = Vec::with_capacity(targets.len());
    let mut statistic = Vec::with_capacity(targets.len());
    for (r, r_tilde) in clean.residuals.iter().zip(&intervened.residuals) {
        let ks = ks_two_sample(r, r_tilde)?;
        node_pvalues.push(ks.p_value);
        statistic.push(ks.statistic);
    }
    let adjusted = match config.correction {
        Correction::Holm => holm_adjust(&node_pvalues),
        Correction::AnyRaw => node_pvalues.clone(),
    };
    let min_p = adjusted.iter().copied().fold(f64::INFINITY, f64::min);
    let verdict = if min_p <= config.alpha {
        Verdict::Causes
    } else {
        Verdict::NotCauses
    };
    Ok(PairDecision {
        src: partition.name(i).to_owned(),
        dst: partition.name(j).to_owned(),
        src_index: i,
        dst_index: j,
        targets: targets.to_vec(),
        node_pvalues,
        adjusted,
        statistic,
        verdict,
        residuals: Some((clean, intervened)),
    })
}

/// Evaluation windows for a series of length `len`.
pub fn evaluation_windows(
    len: usize,
    forecaster: &ForecasterConfig,
    inference: &InferenceConfig,
) -> Result<WindowSet> {
    let stride = inference.window_stride.unwrap_or(forecaster.horizon);
    make_windows(len, forecaster.context, forecaster.horizon, stride)
}

/// Runs every ordered pair test against an already trained forecaster and
/// fitted knockoff model. Pairs are tested on separate threads; each has its
/// own seed, so the result does not depend on scheduling.
pub fn discover_with(
    model: &TrainedForecaster,
    knockoffs: &KnockoffModel,
    series: &MultivariateSeries,
    windows: &WindowSet,
    partition: &GroupPartition,
    config: &InferenceConfig,
) -> Result<DecisionMatrix> {
    validate_partition(partition, series.n_vars())?;
    config.validate()?;
    if windows.len() < MIN_WINDOWS {
        return Err(Error::TooFewWindows(windows.len()));
    }
    let g = partition.len();
    let ordered: Vec<(usize, usize)> = (0..g)
        .flat_map(|i| (0..g).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let pairs = thread::scope(|scope| {
        let handles: Vec<_> = ordered
            .iter()
            .map(|&(i, j)| {
                scope.spawn(move || {
                    test_group_edge(model, series, windows, partition, i, j, knockoffs, config)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("pair test panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    DecisionMatrix::from_pairs(partition.clone(), config, windows.len(), pairs)
}

/// Whole pipeline on an already standardized series: train the forecaster
/// on all variables, fit knockoffs, test every ordered group pair.
pub fn discover(
    series: &MultivariateSeries,
    partition: &GroupPartition,
    forecaster_config: &ForecasterConfig,
    inference_config: &InferenceConfig,
) -> Result<DecisionMatrix> {
    validate_partition(partition, series.n_vars())?;
    inference_config.validate()?;
    let windows = evaluation_windows(series.len(), forecaster_config, inference_config)?;
    if windows.len() < MIN_WINDOWS {
        return Err(Error::TooFewWindows(windows.len()));
    }
    let train_windows = make_windows(
        series.len(),
        forecaster_config.context,
        forecaster_config.horizon,
        forecaster_config.train_stride,
    )?;
    let model = forecaster::train(series, &train_windows, forecaster_config)?;
    let knockoffs = knockoff::fit_gaussian(
        series,
        inference_config.shrinkage,
        inference_config.s_method,
    )?;
    discover_with(
        &model,
        &knockoffs,
        series,
        &windows,
        partition,
        inference_config,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_hand_values() {
        assert_eq!(
            window_residual(&[1.0, 2.0], &[1.0, 1.0], 1e-2).unwrap(),
            0.25
        );
        assert_eq!(
            window_residual(&[0.3, -2.0], &[0.3, -2.0], 1e-2).unwrap(),
            0.0
        );
        let r = window_residual(&[0.001], &[0.002], 0.01).unwrap();
        assert!((r - 0.1).abs() < 1e-15);
    }

    #[test]
    fn residual_errors() {
        assert!(window_residual(&[1.0], &[1.0, 2.0], 1e-2).is_err());
        assert!(window_residual(&[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn labels_combine_and_reverse() {
        use Verdict::*;
        assert_eq!(
            LinkLabel::from_verdicts(Causes, NotCauses),
            LinkLabel::Forward
        );
        assert_eq!(
            LinkLabel::from_verdicts(NotCauses, Causes),
            LinkLabel::Backward
        );
        assert_eq!(
            LinkLabel::from_verdicts(Causes, Causes),
            LinkLabel::Bidirectional
        );
        assert_eq!(
            LinkLabel::from_verdicts(NotCauses, NotCauses),
            LinkLabel::None
        );
        assert_eq!(LinkLabel::Forward.reversed(), LinkLabel::Backward);
        assert_eq!(
            serde_json::to_string(&LinkLabel::Bidirectional).unwrap(),
            "\"<->\""
        );
    }

    #[test]
    fn config_validation() {
        assert!(InferenceConfig {
            alpha: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(InferenceConfig {
            eps: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        InferenceConfig::default().validate().unwrap();
    }
}
