//! Ground-truth causal graphs over grouped variables and the nonlinear
//! lagged data model used for benchmarks:
//!
//! ```text
//! Z[t, j] = (1 / d_j) · Σ_{edges i → j with lag k}  c · f(Z[t − k, i])  +  η[t, j]
//! ```
//!
//! with `f` linear, quadratic or exponential, `d_j` the number of incoming
//! edges of `j` and `η` i.i.d. Gaussian noise. Averaging over the parents
//! keeps the linear part stable at any density, since the absolute
//! coefficients into each variable then sum to at most 0.8.

use std::fmt;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariance::{DecisionMatrix, LinkLabel};
use crate::rng;
use crate::series::{validate_partition, GroupPartition, MultivariateSeries};

/// Link functions are applied to the lagged value clamped to this range.
pub const ARG_CLAMP: f64 = 3.0;

/// Columns whose sample standard deviation exceeds this are rescaled to unit
/// variance after simulation.
pub const STD_GUARD: f64 = 10.0;

const COEF_MIN: f64 = 0.2;
const COEF_MAX: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkFunction {
    Linear,
    /// `c·x²`.
    Polynomial,
    /// `c·exp(x)`.
    Exponential,
}

impl LinkFunction {
    pub const ALL: [LinkFunction; 3] = [Self::Linear, Self::Polynomial, Self::Exponential];

    pub fn apply(self, coef: f64, x: f64) -> f64 {
        let x = x.clamp(-ARG_CLAMP, ARG_CLAMP);
        match self {
            Self::Linear => coef * x,
            Self::Polynomial => coef * x * x,
            Self::Exponential => coef * x.exp(),
        }
    }
}

impl fmt::Display for LinkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Polynomial => "polynomial",
            Self::Exponential => "exponential",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub lag: usize,
    pub f: LinkFunction,
    pub coef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalGraph {
    pub n_vars: usize,
    pub groups: GroupPartition,
    pub edges: Vec<Edge>,
    /// Group-level links `[cause, effect]`; empty for a null instance.
    pub direction: Vec<[usize; 2]>,
}

impl CausalGraph {
    pub fn max_lag(&self) -> usize {
        self.edges.iter().map(|e| e.lag).max().unwrap_or(0)
    }

    /// Edges whose source and target lie in different groups.
    pub fn cross_group_edges(&self) -> impl Iterator<Item = &Edge> {
        let group_of = self.groups.group_of();
        self.edges
            .iter()
            .filter(move |e| group_of[e.src] != group_of[e.dst])
    }

    /// Checks the structural invariants: index ranges, lag bounds, and that
    /// `direction` lists exactly the group pairs crossed by some edge.
    pub fn validate(&self, max_lag: usize) -> Result<()> {
        validate_partition(&self.groups, self.n_vars)?;
        for e in &self.edges {
            if e.src >= self.n_vars || e.dst >= self.n_vars {
                return Err(Error::Config(format!("edge {e:?} out of range")));
            }
            if e.lag == 0 || e.lag > max_lag {
                return Err(Error::Config(format!(
                    "edge {e:?} has lag outside 1..={max_lag}"
                )));
            }
        }
        let group_of = self.groups.group_of();
        let mut crossed: Vec<[usize; 2]> = self
            .cross_group_edges()
            .map(|e| [group_of[e.src], group_of[e.dst]])
            .collect();
        crossed.sort_unstable();
        crossed.dedup();
        let mut declared = self.direction.clone();
        declared.sort_unstable();
        if crossed != declared {
            return Err(Error::Config(format!(
                "declared group links {declared:?} do not match edges {crossed:?}"
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub length: usize,
    pub burn_in: usize,
    pub noise_std: f64,
    pub max_lag: usize,
    pub density: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            length: 1000,
            burn_in: 100,
            noise_std: 1.0,
            max_lag: 2,
            density: 0.5,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.into()));
        if self.length < 1 {
            return fail("length must be at least 1");
        }
        if self.max_lag < 1 {
            return fail("max_lag must be at least 1");
        }
        if self.burn_in < self.max_lag {
            return fail("burn_in must be at least max_lag");
        }
        if !(self.noise_std > 0.0 && self.noise_std.is_finite()) {
            return fail("noise_std must be positive");
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return fail("density must lie in (0, 1]");
        }
        Ok(())
    }
}

fn draw_edge(rng: &mut rng::Rng, src: usize, dst: usize, max_lag: usize) -> Edge {
    let lag = rng.random_range(1..=max_lag);
    let f = LinkFunction::ALL[rng.random_range(0..3)];
    let magnitude = rng.random_range(COEF_MIN..=COEF_MAX);
    let coef = if rng.random_bool(0.5) {
        magnitude
    } else {
        -magnitude
    };
    Edge {
        src,
        dst,
        lag,
        f,
        coef,
    }
}

/// Draws a random graph over `partition`.
///
/// With `direction = Some((cause, effect))` every (cause member, effect
/// member) pair gets an edge with probability `density`, and one is forced
/// if none was drawn. With `None` the groups are causally independent.
/// Within each group every ordered pair, self-loops included, gets an edge
/// with probability `density`.
pub fn sample_graph(
    partition: &GroupPartition,
    density: f64,
    direction: Option<(usize, usize)>,
    max_lag: usize,
    seed: u64,
) -> Result<CausalGraph> {
    let n_vars = partition.n_vars();
    validate_partition(partition, n_vars)?;
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Config("density must lie in (0, 1]".into()));
    }
    if max_lag < 1 {
        return Err(Error::Config("max_lag must be at least 1".into()));
    }
    let mut rng = rng::stream(seed, 1);
    let mut edges = Vec::new();

    for g in 0..partition.len() {
        for &src in partition.members(g) {
            for &dst in partition.members(g) {
                if rng.random_bool(density) {
                    edges.push(draw_edge(&mut rng, src, dst, max_lag));
                }
            }
        }
    }

    let mut declared = Vec::new();
    if let Some((cause, effect)) = direction {
        if cause == effect || cause >= partition.len() || effect >= partition.len() {
            return Err(Error::Config(format!(
                "invalid group direction {cause} -> {effect}"
            )));
        }
        let sources = partition.members(cause);
        let targets = partition.members(effect);
        let before = edges.len();
        for &src in sources {
            for &dst in targets {
                if rng.random_bool(density) {
                    edges.push(draw_edge(&mut rng, src, dst, max_lag));
                }
            }
        }
        if edges.len() == before {
            let src = sources[rng.random_range(0..sources.len())];
            let dst = targets[rng.random_range(0..targets.len())];
            edges.push(draw_edge(&mut rng, src, dst, max_lag));
        }
        declared.push([cause, effect]);
    }

    Ok(CausalGraph {
        n_vars,
        groups: partition.clone(),
        edges,
        direction: declared,
    })
}

/// Runs the lagged recursion for `burn_in + length` steps and returns the
/// last `length` rows. Each variable's drive is the mean of its incoming
/// link terms. Noise is drawn row by row, variable by variable, from
/// a single stream keyed by `config.seed`; the first `max_lag` rows are pure
/// noise.
pub fn simulate(graph: &CausalGraph, config: &SimConfig) -> Result<MultivariateSeries> {
    config.validate()?;
    if graph.max_lag() > config.max_lag {
        return Err(Error::Config(format!(
            "graph has lag {} beyond max_lag {}",
            graph.max_lag(),
            config.max_lag
        )));
    }
    let n = graph.n_vars;
    let total = config.burn_in + config.length;
    let noise = Normal::new(0.0, config.noise_std).expect("validated noise_std");
    let mut rng = rng::stream(config.seed, 2);

    let mut incoming: Vec<Vec<&Edge>> = vec![Vec::new(); n];
    for e in &graph.edges {
        incoming[e.dst].push(e);
    }

    let mut z = vec![0.0; total * n];
    for t in 0..total {
        for j in 0..n {
            let eta = noise.sample(&mut rng);
            let drive: f64 = if t >= config.max_lag && !incoming[j].is_empty() {
                incoming[j]
                    .iter()
                    .map(|e| e.f.apply(e.coef, z[(t - e.lag) * n + e.src]))
                    .sum::<f64>()
                    / incoming[j].len() as f64
            } else {
                0.0
            };
            let v = drive + eta;
            if !v.is_finite() {
                return Err(Error::Diverged { var: j, t });
            }
            z[t * n + j] = v;
        }
    }

    let mut values = z.split_off(config.burn_in * n);
    let len = config.length as f64;
    for j in 0..n {
        let col = values.iter().skip(j).step_by(n);
        let mean = col.clone().sum::<f64>() / len;
        let var = col.map(|v| (v - mean).powi(2)).sum::<f64>() / (len - 1.0).max(1.0);
        let sd = var.sqrt();
        if sd > STD_GUARD {
            for v in values.iter_mut().skip(j).step_by(n) {
                *v /= sd;
            }
        }
    }
    MultivariateSeries::new(values, (1..=n).map(|i| format!("Z{i}")).collect())
}

/// Largest share of rows a variable of an accepted instance may spend
/// beyond the link clamp. Past the clamp every link out of the variable is
/// constant, so its edges carry no signal.
pub const MAX_SATURATION: f64 = 0.05;

/// Graph draws tried by [`sample_instance`] before giving up.
pub const MAX_ATTEMPTS: usize = 1000;

/// A ground-truth graph with a simulated series of it.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub graph: CausalGraph,
    pub series: MultivariateSeries,
    /// Number of rejected graph draws before this one.
    pub rejected: usize,
}

/// Share of rows in which each variable lies beyond [`ARG_CLAMP`].
pub fn saturation(series: &MultivariateSeries) -> Vec<f64> {
    let len = series.len().max(1) as f64;
    (0..series.n_vars())
        .map(|j| {
            let beyond = series
                .values()
                .iter()
                .skip(j)
                .step_by(series.n_vars())
                .filter(|v| v.abs() > ARG_CLAMP)
                .count();
            beyond as f64 / len
        })
        .collect()
}

/// Samples a graph and simulates it, redrawing the graph while the series
/// diverges or any variable is saturated in more than [`MAX_SATURATION`] of
/// its rows. The first draw uses `config.seed` as the graph seed, so an
/// accepted first draw equals `sample_graph(.., config.seed)`; the noise
/// always comes from `config.seed`.
pub fn sample_instance(
    partition: &GroupPartition,
    direction: Option<(usize, usize)>,
    config: &SimConfig,
) -> Result<Instance> {
    config.validate()?;
    for attempt in 0..MAX_ATTEMPTS {
        let graph_seed = if attempt == 0 {
            config.seed
        } else {
            rng::mix(config.seed ^ ((attempt as u64) << 32))
        };
        let graph = sample_graph(
            partition,
            config.density,
            direction,
            config.max_lag,
            graph_seed,
        )?;
        let series = match simulate(&graph, config) {
            Ok(series) => series,
            Err(Error::Diverged { .. }) => continue,
            Err(e) => return Err(e),
        };
        if saturation(&series).iter().all(|&s| s <= MAX_SATURATION) {
            return Ok(Instance {
                graph,
                series,
                rejected: attempt,
            });
        }
    }
    Err(Error::Config(format!(
        "no non-degenerate graph in {MAX_ATTEMPTS} draws; lower the density or noise"
    )))
}

/// Fractions of tested links, Table-1 style.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Score {
    pub correct: f64,
    pub wrong: f64,
    pub no_inference: f64,
    pub tests: usize,
}

impl Score {
    /// Mean of several scores weighted by their test counts.
    pub fn aggregate(scores: &[Score]) -> Result<Score> {
        let tests: usize = scores.iter().map(|s| s.tests).sum();
        if tests == 0 {
            return Err(Error::Config("no scored tests to aggregate".into()));
        }
        let w = |f: fn(&Score) -> f64| {
            scores.iter().map(|s| f(s) * s.tests as f64).sum::<f64>() / tests as f64
        };
        Ok(Score {
            correct: w(|s| s.correct),
            wrong: w(|s| s.wrong),
            no_inference: w(|s| s.no_inference),
            tests,
        })
    }

    /// Fractions rounded to two decimals.
    pub fn rounded(&self) -> Score {
        let r = |v: f64| (v * 100.0).round() / 100.0;
        Score {
            correct: r(self.correct),
            wrong: r(self.wrong),
            no_inference: r(self.no_inference),
            tests: self.tests,
        }
    }
}

/// Scores every true group link `i → j` against the predicted label of the
/// pair: the same direction is correct, the reverse or a bidirectional claim
/// is wrong, and no link is "no inference".
pub fn score_decisions(predicted: &DecisionMatrix, truth: &CausalGraph) -> Result<Score> {
    let same = predicted.groups.len() == truth.groups.len()
        && (0..truth.groups.len()).all(|g| predicted.groups.members(g) == truth.groups.members(g));
    if !same {
        return Err(Error::PartitionMismatch);
    }
    if truth.direction.is_empty() {
        return Err(Error::Config(
            "ground truth declares no group link to score".into(),
        ));
    }
    let (mut correct, mut wrong, mut none) = (0usize, 0usize, 0usize);
    for &[cause, effect] in &truth.direction {
        match predicted.label_between(cause, effect) {
            Some(LinkLabel::Forward) => correct += 1,
            Some(LinkLabel::Backward | LinkLabel::Bidirectional) => wrong += 1,
            Some(LinkLabel::None) | None => none += 1,
        }
    }
    let total = truth.direction.len() as f64;
    Ok(Score {
        correct: correct as f64 / total,
        wrong: wrong as f64 / total,
        no_inference: none as f64 / total,
        tests: truth.direction.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> GroupPartition {
        GroupPartition::contiguous(&[2, 2]).unwrap()
    }

    #[test]
    fn full_density_saturates_cross_pairs() {
        let g = sample_graph(&two_by_two(), 1.0, Some((0, 1)), 2, 3).unwrap();
        let mut pairs: Vec<_> = g.cross_group_edges().map(|e| (e.src, e.dst)).collect();
        pairs.sort_unstable();
        assert_eq!(pairs, vec![(0, 2), (0, 3), (1, 2), (1, 3)]);
        g.validate(2).unwrap();
    }

    #[test]
    fn low_density_forces_a_cross_edge() {
        for seed in 0..200 {
            let g = sample_graph(&two_by_two(), 0.2, Some((0, 1)), 3, seed).unwrap();
            assert!(g.cross_group_edges().count() >= 1);
            assert!(g.cross_group_edges().all(|e| e.src < 2 && e.dst >= 2));
            g.validate(3).unwrap();
        }
    }

    #[test]
    fn null_graph_has_no_cross_edges() {
        let g = sample_graph(&two_by_two(), 1.0, None, 2, 1).unwrap();
        assert_eq!(g.cross_group_edges().count(), 0);
        assert!(g.direction.is_empty());
        g.validate(2).unwrap();
    }

    #[test]
    fn graph_is_deterministic() {
        let a = sample_graph(&two_by_two(), 0.5, Some((0, 1)), 2, 11).unwrap();
        let b = sample_graph(&two_by_two(), 0.5, Some((0, 1)), 2, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn edge_attributes_in_range() {
        let g = sample_graph(
            &GroupPartition::contiguous(&[3, 3]).unwrap(),
            1.0,
            Some((1, 0)),
            4,
            5,
        )
        .unwrap();
        for e in &g.edges {
            assert!((1..=4).contains(&e.lag));
            assert!((COEF_MIN..=COEF_MAX).contains(&e.coef.abs()));
        }
    }

    #[test]
    fn graph_json_shape() {
        let g = sample_graph(&two_by_two(), 1.0, Some((0, 1)), 1, 0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&g.to_json().unwrap()).unwrap();
        assert_eq!(v["n_vars"], 4);
        assert_eq!(v["direction"], serde_json::json!([[0, 1]]));
        let e = &v["edges"][0];
        for key in ["src", "dst", "lag", "f", "coef"] {
            assert!(e.get(key).is_some(), "missing {key}");
        }
        assert_eq!(CausalGraph::from_json(&g.to_json().unwrap()).unwrap(), g);
    }

    #[test]
    fn link_functions() {
        assert_eq!(LinkFunction::Linear.apply(0.5, 2.0), 1.0);
        assert_eq!(LinkFunction::Polynomial.apply(0.5, -2.0), 2.0);
        assert_eq!(LinkFunction::Exponential.apply(1.0, 10.0), 3.0f64.exp());
        assert_eq!(LinkFunction::Linear.apply(1.0, -10.0), -3.0);
    }

    #[test]
    fn sim_config_validation() {
        assert!(SimConfig {
            density: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            noise_std: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SimConfig {
            burn_in: 1,
            max_lag: 2,
            ..Default::default()
        }
        .validate()
        .is_err());
        SimConfig::default().validate().unwrap();
    }
}
