use gcause::invariance::{DecisionMatrix, InferenceConfig, PairDecision, Verdict};
use gcause::rng;
use gcause::synth::{
    sample_graph, sample_instance, saturation, score_decisions, simulate, CausalGraph, Edge,
    LinkFunction, SimConfig, MAX_SATURATION,
};
use gcause::GroupPartition;
use proptest::prelude::*;
use rand_distr::{Distribution, Normal};

fn pair_graph(edges: Vec<Edge>) -> CausalGraph {
    CausalGraph {
        n_vars: 2,
        groups: GroupPartition::contiguous(&[1, 1]).unwrap(),
        edges,
        direction: vec![[0, 1]],
    }
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (
        m,
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0),
    )
}

#[test]
fn empty_graph_is_white_noise() {
    let graph = CausalGraph {
        n_vars: 3,
        groups: GroupPartition::contiguous(&[1, 2]).unwrap(),
        edges: vec![],
        direction: vec![],
    };
    let cfg = SimConfig {
        length: 5000,
        noise_std: 0.5,
        seed: 1,
        ..Default::default()
    };
    let series = simulate(&graph, &cfg).unwrap();
    assert_eq!(series.len(), 5000);
    for j in 0..3 {
        let (m, v) = mean_var(&series.column(j));
        // Within 10% of the noise scale for the mean and of the variance.
        assert!(m.abs() < 0.1 * 0.5, "mean {m}");
        assert!((v - 0.25).abs() < 0.1 * 0.25, "var {v}");
    }
}

/// The recursion written out by hand for `Z2[t] = 0.5·Z1[t−1] + η`.
fn resimulate(cfg: &SimConfig) -> Vec<[f64; 2]> {
    let noise = Normal::new(0.0, cfg.noise_std).unwrap();
    let mut r = rng::stream(cfg.seed, 2);
    let mut z: Vec<[f64; 2]> = Vec::new();
    for t in 0..cfg.burn_in + cfg.length {
        let e1 = noise.sample(&mut r);
        let e2 = noise.sample(&mut r);
        let drive = if t >= cfg.max_lag {
            0.5 * z[t - 1][0]
        } else {
            0.0
        };
        z.push([e1, drive + e2]);
    }
    z.split_off(cfg.burn_in)
}

#[test]
fn single_linear_edge_matches_hand_recursion() {
    let graph = pair_graph(vec![Edge {
        src: 0,
        dst: 1,
        lag: 1,
        f: LinkFunction::Linear,
        coef: 0.5,
    }]);
    let cfg = SimConfig {
        length: 2000,
        noise_std: 0.1,
        seed: 7,
        ..Default::default()
    };
    let series = simulate(&graph, &cfg).unwrap();
    let expected = resimulate(&cfg);
    for (t, row) in expected.iter().enumerate() {
        assert_eq!(series.row(t), &row[..], "row {t}");
    }

    let z1 = series.column(0);
    let z2 = series.column(1);
    let (m1, v1) = mean_var(&z1[..z1.len() - 1]);
    let (m2, v2) = mean_var(&z2[1..]);
    let cov: f64 = z1[..z1.len() - 1]
        .iter()
        .zip(&z2[1..])
        .map(|(a, b)| (a - m1) * (b - m2))
        .sum::<f64>()
        / (z1.len() as f64 - 2.0);
    let corr = cov / (v1 * v2).sqrt();
    let predicted = 0.5 * v1.sqrt() / v2.sqrt();
    assert!(
        (corr - predicted).abs() < 0.05,
        "corr {corr}, predicted {predicted}"
    );
}

#[test]
fn simulation_is_deterministic() {
    let p = GroupPartition::contiguous(&[2, 3]).unwrap();
    let graph = sample_graph(&p, 0.6, Some((1, 0)), 2, 11).unwrap();
    let cfg = SimConfig {
        length: 300,
        seed: 11,
        ..Default::default()
    };
    let a = simulate(&graph, &cfg).unwrap();
    assert_eq!(a, simulate(&graph, &cfg).unwrap());
    let b = simulate(&graph, &SimConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a, b);
}

#[test]
fn graph_round_trips_through_json() {
    let p = GroupPartition::contiguous(&[2, 2]).unwrap();
    let graph = sample_graph(&p, 0.5, Some((0, 1)), 2, 3).unwrap();
    assert_eq!(
        CausalGraph::from_json(&graph.to_json().unwrap()).unwrap(),
        graph
    );
}

#[test]
fn cross_edge_count_tracks_density() {
    // With `m` admissible pairs each present with probability ρ and one
    // edge forced when none is drawn, E[count] = ρ·m + (1 − ρ)^m.
    let p = GroupPartition::contiguous(&[2, 3]).unwrap();
    let m = 6.0;
    let runs = 400;
    let mut previous = 0.0;
    for rho in [0.1, 0.3, 0.5, 0.8, 1.0] {
        let total: usize = (0..runs)
            .map(|seed| {
                let g = sample_graph(&p, rho, Some((0, 1)), 2, seed).unwrap();
                g.cross_group_edges().count()
            })
            .sum();
        let mean = total as f64 / runs as f64;
        let expected = rho * m + (1.0f64 - rho).powf(m);
        // Binomial standard error of the mean is at most sqrt(m/4/runs).
        let tol = 4.0 * (m * 0.25 / runs as f64).sqrt();
        assert!(
            (mean - expected).abs() < tol,
            "rho {rho}: mean {mean}, expected {expected}"
        );
        assert!(mean >= previous);
        previous = mean;
    }
}

#[test]
fn no_edges_run_from_effect_to_cause() {
    let p = GroupPartition::contiguous(&[2, 2, 1]).unwrap();
    let group_of = p.group_of();
    for seed in 0..200 {
        let g = sample_graph(&p, 0.7, Some((2, 0)), 2, seed).unwrap();
        for e in g.cross_group_edges() {
            assert_eq!((group_of[e.src], group_of[e.dst]), (2, 0));
        }
    }
}

#[test]
fn instances_are_unsaturated() {
    let p = GroupPartition::contiguous(&[2, 2]).unwrap();
    for density in [0.2, 0.5, 1.0] {
        for seed in 0..5 {
            let cfg = SimConfig {
                density,
                seed,
                ..Default::default()
            };
            let inst = sample_instance(&p, Some((0, 1)), &cfg).unwrap();
            assert!(saturation(&inst.series)
                .iter()
                .all(|&s| s <= MAX_SATURATION));
            assert_eq!(inst.series, simulate(&inst.graph, &cfg).unwrap());
            if inst.rejected == 0 {
                assert_eq!(
                    inst.graph,
                    sample_graph(&p, density, Some((0, 1)), 2, seed).unwrap()
                );
            }
        }
    }
}

fn decision(p: &GroupPartition, src: usize, dst: usize, verdict: Verdict) -> PairDecision {
    PairDecision {
        src: p.name(src).into(),
        dst: p.name(dst).into(),
        src_index: src,
        dst_index: dst,
        targets: p.members(dst).to_vec(),
        node_pvalues: vec![0.5; p.members(dst).len()],
        adjusted: vec![0.5; p.members(dst).len()],
        statistic: vec![0.0; p.members(dst).len()],
        verdict,
        residuals: None,
    }
}

fn matrix(p: &GroupPartition, forward: Verdict, backward: Verdict) -> DecisionMatrix {
    let pairs = vec![decision(p, 0, 1, forward), decision(p, 1, 0, backward)];
    DecisionMatrix::from_pairs(p.clone(), &InferenceConfig::default(), 10, pairs).unwrap()
}

#[test]
fn scoring_follows_the_declared_direction() {
    use Verdict::{Causes, NotCauses};
    let p = GroupPartition::contiguous(&[2, 2]).unwrap();
    let truth = sample_graph(&p, 0.5, Some((0, 1)), 2, 1).unwrap();
    let score = |f, b| score_decisions(&matrix(&p, f, b), &truth).unwrap();
    let s = score(Causes, NotCauses);
    assert_eq!((s.correct, s.wrong, s.no_inference), (1.0, 0.0, 0.0));
    let s = score(NotCauses, Causes);
    assert_eq!((s.correct, s.wrong, s.no_inference), (0.0, 1.0, 0.0));
    let s = score(Causes, Causes);
    assert_eq!((s.correct, s.wrong, s.no_inference), (0.0, 1.0, 0.0));
    let s = score(NotCauses, NotCauses);
    assert_eq!((s.correct, s.wrong, s.no_inference), (0.0, 0.0, 1.0));
}

#[test]
fn score_rejects_a_different_partition() {
    let truth = sample_graph(
        &GroupPartition::contiguous(&[2, 2]).unwrap(),
        0.5,
        Some((0, 1)),
        2,
        1,
    )
    .unwrap();
    let other = GroupPartition::contiguous(&[1, 3]).unwrap();
    let m = matrix(&other, Verdict::Causes, Verdict::NotCauses);
    assert!(score_decisions(&m, &truth).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 120, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn simulated_series_are_finite(
        sizes in prop::collection::vec(1usize..4, 2..4),
        density in 0.05f64..=1.0,
        noise in 0.05f64..3.0,
        max_lag in 1usize..4,
        seed in 0u64..1_000_000,
    ) {
        let p = GroupPartition::contiguous(&sizes).unwrap();
        let graph = sample_graph(&p, density, Some((0, 1)), max_lag, seed).unwrap();
        let cfg = SimConfig { length: 200, burn_in: 50, noise_std: noise, max_lag, density, seed };
        let series = simulate(&graph, &cfg).unwrap();
        prop_assert_eq!(series.len(), 200);
        prop_assert!(series.values().iter().all(|v| v.is_finite()));
    }
}
