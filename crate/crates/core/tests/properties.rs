use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use senergy_core::apps::opinion::{opinion_volume_report, simulate_opinion, OpinionSimConfig, SqueezePolicy};
use senergy_core::simulate::{drop_unresolvable_edges, random_graph};
use senergy_core::twist::leftmost_twist_step;
use senergy_core::*;

fn positions(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, 2..=max_n)
}

fn graph_for(n: usize, p: f64, seed: u64) -> StepGraph {
    random_graph(n, p, None, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn policy_of(kind: usize) -> Policy {
    match kind {
        0 => Policy::Midpoint,
        1 => Policy::Leftmost,
        2 => Policy::Rightmost,
        _ => Policy::UniformRandom,
    }
}

/// One valid averaging step from a random start.
fn random_step(p: &[f64], rho: f64, prob: f64, kind: usize, seed: u64) -> (Configuration, StepGraph, Configuration) {
    let x = Configuration::from_positions(p).unwrap();
    let g = drop_unresolvable_edges(graph_for(p.len(), prob, seed), &x, rho);
    let params = AveragingParams::new(rho, 0.0).unwrap();
    let y = apply_policy(&x, &g, &params, &policy_of(kind), &mut ChaCha8Rng::seed_from_u64(seed ^ 0xabc)).unwrap();
    (x, g, y)
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn union_pieces_are_sorted_disjoint_and_cover_edges(p in positions(12), prob in 0.0f64..1.0, seed: u64) {
        let x = Configuration::from_positions(&p).unwrap();
        let g = graph_for(p.len(), prob, seed);
        let pieces = interval_union(&g, &x);
        for w in pieces.windows(2) {
            prop_assert!(w[0].hi < w[1].lo);
        }
        for (i, j) in g.edges() {
            let (a, b) = (x.position_of(i), x.position_of(j));
            prop_assert!(pieces.iter().any(|iv| iv.lo <= a.min(b) && a.max(b) <= iv.hi));
        }
    }

    #[test]
    fn energy_nonincreasing_in_s(p in positions(12), prob in 0.0f64..1.0, seed: u64, s1 in 0.01f64..=1.0, s2 in 0.01f64..=1.0) {
        let x = Configuration::from_positions(&p).unwrap();
        let pieces = interval_union(&graph_for(p.len(), prob, seed), &x);
        let (lo, hi) = (s1.min(s2), s1.max(s2));
        prop_assert!(step_energy(&pieces, lo).unwrap() >= step_energy(&pieces, hi).unwrap());
    }

    #[test]
    fn policies_produce_exactly_valid_steps(
        p in positions(12),
        rho in prop::sample::select(vec![0.1, 0.25, 1.0 / 3.0, 0.5]),
        prob in 0.0f64..1.0,
        kind in 0usize..4,
        seed: u64,
    ) {
        let (x, g, y) = random_step(&p, rho, prob, kind, seed);
        let report = validate_averaging_step(&x, &g, &y, &AveragingParams::new(rho, 0.0).unwrap()).unwrap();
        prop_assert!(report.is_ok(), "{:?}", report);
        prop_assert!(y.positions().iter().all(|v| (0.0..=1.0).contains(v)));
        if kind == 0 {
            for rank in 0..x.n() {
                let (l, r) = neighbor_extremes(&g, &x, rank);
                let v = y.position_of(x.label(rank));
                prop_assert!(x.position(l) <= v && v <= x.position(r));
            }
        }
    }

    #[test]
    fn twist_intervals_nonempty_nested_and_leftmost_monotone(
        p in positions(12),
        rho in 0.001f64..=0.5,
        a in 0usize..12,
        b in 0usize..12,
    ) {
        let x = sorted(p);
        let n = x.len();
        let (u, v) = (a.min(b) % n, a.max(b) % n);
        prop_assume!(u < v);
        let step = TwistStep::new(u, v, rho).unwrap();
        for i in u..=v {
            let tau = twist_interval(&x, &step, i).unwrap();
            prop_assert!(tau.lo <= tau.hi + 1e-15);
            prop_assert!(x[u] - 1e-15 <= tau.lo && tau.hi <= x[v] + 1e-15);
        }
        let y = leftmost_twist_step(&x, &step).unwrap();
        prop_assert!(y.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn reduction_preserves_energy_and_fixes_outsiders(
        p in positions(10),
        rho in prop::sample::select(vec![0.1, 0.25, 0.5]),
        prob in 0.0f64..1.0,
        kind in 0usize..4,
        seed: u64,
    ) {
        let (x, g, y) = random_step(&p, rho, prob, kind, seed);
        let params = AveragingParams::new(rho, 0.0).unwrap();
        let subs = reduce_step(&x, &g, &y, &params).unwrap();
        let pieces = interval_union(&g, &x);
        for s in [0.25, 0.5, 1.0] {
            let whole = step_energy(&pieces, s).unwrap();
            let parts: f64 = subs.iter().map(|sub| twist_step_energy(&sub.before, &sub.step, s).unwrap()).sum();
            prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1e-300));
        }
        for sub in &subs {
            for k in (0..x.n()).filter(|&k| !sub.step.contains(k)) {
                prop_assert_eq!(sub.before[k], sub.after[k]);
            }
            let report = validate_twist_step(&sub.before, &sub.step, &sub.after, 1e-12).unwrap();
            prop_assert!(report.is_ok());
        }
    }

    #[test]
    fn ledger_is_sound_and_conserves(
        p in positions(8),
        rho in prop::sample::select(vec![0.1, 0.25, 0.5]),
        s in prop::sample::select(vec![0.25, 0.5, 1.0]),
        kind in 0usize..4,
        seed: u64,
    ) {
        let mut cfg = SimConfig::new(p.len(), rho, PolicyKind::ALL[kind], seed);
        cfg.initial = Some(p.clone());
        cfg.steps_cap = 200;
        let trace = simulate(&cfg).unwrap();
        let summary = certify_trace(&trace, s).unwrap();
        prop_assert!(summary.spent <= summary.injected * (1.0 + 1e-12));
        prop_assert!(summary.max_conservation_residual <= 1e-9);
        let cap = if p.len() > 2 {
            2.0 * (2.0 / (rho * s)).powi(p.len() as i32 - 1)
        } else {
            2.0 / (rho * s)
        };
        prop_assert!(summary.injected <= cap * (1.0 + 1e-12));
    }

    #[test]
    fn comm_count_obeys_markov_and_is_monotone(
        n in 2usize..=6,
        rho in prop::sample::select(vec![0.1, 0.25, 0.5]),
        kind in 0usize..5,
        seed: u64,
        s in 0.05f64..=1.0,
        e1 in 1e-6f64..1.0,
        e2 in 1e-6f64..1.0,
    ) {
        let mut cfg = SimConfig::new(n, rho, PolicyKind::ALL[kind], seed);
        cfg.steps_cap = 300;
        let trace = simulate(&cfg).unwrap();
        let energy = accumulate(&trace, &[s]).unwrap().totals[0];
        let (small, large) = (e1.min(e2), e1.max(e2));
        let c_small = comm_count(&trace, small).unwrap();
        let c_large = comm_count(&trace, large).unwrap();
        prop_assert!(c_large <= c_small);
        prop_assert!(c_small as f64 <= small.powf(-s) * energy * (1.0 + 1e-12));
    }

    #[test]
    fn report_partial_sums_nondecreasing(n in 2usize..=6, kind in 0usize..5, seed: u64) {
        let mut cfg = SimConfig::new(n, 0.25, PolicyKind::ALL[kind], seed);
        cfg.steps_cap = 200;
        let report = accumulate(&simulate(&cfg).unwrap(), &[0.5, 1.0]).unwrap();
        for sums in &report.partial_sums {
            prop_assert!(sums.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn opinion_axes_are_averaging_steps_and_holder_holds(
        n in 2usize..=6,
        d in 1usize..=3,
        alpha in prop::sample::select(vec![0.2, 0.5, 1.0]),
        policy in 0usize..3,
        seed: u64,
    ) {
        let mut cfg = OpinionSimConfig::new(n, d, alpha, SqueezePolicy::ALL[policy], seed);
        cfg.steps_cap = 200;
        let trace = simulate_opinion(&cfg).unwrap();
        prop_assert_eq!(trace.first_axis_violation(1e-12).unwrap(), None);
        let s = 1.0 / d as f64;
        let r = opinion_volume_report(&trace, s, 1e-3).unwrap();
        prop_assert!(r.volume_energy <= r.holder_rhs * (1.0 + 1e-12));
        prop_assert!(r.volume_energy <= r.bound);
    }
}
