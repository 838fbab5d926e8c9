mod common;

use std::collections::HashSet;

use common::*;
use lnsim::competition::optimal_base_fee_increment;
use lnsim::netstats::correlation::{spearman, weighted_kendall};
use lnsim::netstats::structure::{diameter, effective_diameter};
use lnsim::netstats::{barabasi_albert, erdos_renyi};
use lnsim::privacy::{lengthened_path, GaParams};
use lnsim::router::{RouteOptions, Router};
use lnsim::seeds::rng_from;
use lnsim::sim::{run_experiment, simulate_transactions, ExperimentOptions};
use lnsim::synth::{daily_snapshots, SynthConfig};
use lnsim::{edge_fee, BalanceState, FeePolicy, SimParams, Transaction};
use proptest::prelude::*;
use rand::Rng;

fn random_transactions<R: Rng>(rng: &mut R, n: usize, count: usize, amount: u64) -> Vec<Transaction> {
    (0..count)
        .map(|_| Transaction {
            sender: rng.gen_range(0..n),
            recipient: rng.gen_range(0..n),
            amount_sat: amount,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn payments_conserve_every_channel(seed in any::<u64>(), n in 2usize..12, amount in 1u64..200_000) {
        let mut rng = rng_from(seed);
        let g = random_graph(&mut rng, n, 2 * n);
        let mut state = BalanceState::init(&g, &mut rng);
        let total = state.total();
        let params = SimParams { amount_sat: amount, ..SimParams::default() };
        let txs = random_transactions(&mut rng, n, 200, amount);
        let mut router = Router::new();
        for tx in &txs {
            simulate_transactions(&g, &params, &mut state, std::slice::from_ref(tx), None, &mut router).unwrap();
            prop_assert!(state.is_conserved());
            prop_assert_eq!(state.total(), total);
        }
    }

    #[test]
    fn ignoring_depletion_never_loses_a_payment(seed in any::<u64>(), n in 2usize..12, amount in 1u64..200_000) {
        let mut rng = rng_from(seed);
        let g = random_graph(&mut rng, n, 2 * n);
        let initial = BalanceState::init(&g, &mut rng);
        let txs = random_transactions(&mut rng, n, 100, amount);
        let mut router = Router::new();
        let enforced = SimParams { amount_sat: amount, ..SimParams::default() };
        let optimistic = SimParams { ignore_depletion: true, ..enforced.clone() };
        let (_, a) = simulate_transactions(&g, &enforced, &mut initial.clone(), &txs, None, &mut router).unwrap();
        let (_, b) = simulate_transactions(&g, &optimistic, &mut initial.clone(), &txs, None, &mut router).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(!x.is_success() || y.is_success());
        }
    }

    #[test]
    fn fee_is_monotone_in_amount(base in 0u64..10_000_000, rate in 0u64..1_000_000, a in 1u64..1_000_000_000, d in 0u64..1_000_000) {
        let p = FeePolicy::new(base, rate);
        prop_assert!(edge_fee(&p, a) <= edge_fee(&p, a + d));
        prop_assert!(edge_fee(&p, a) >= base);
    }

    #[test]
    fn beta_star_dominates_every_candidate(deltas in prop::collection::vec(0u64..1_000_000, 0..60)) {
        let (beta, gain) = optimal_base_fee_increment(&deltas);
        prop_assert_eq!(gain, beta * deltas.iter().filter(|&&d| d >= beta).count() as u64);
        for &c in &deltas {
            prop_assert!(c * deltas.iter().filter(|&&d| d >= c).count() as u64 <= gain);
        }
    }

    #[test]
    fn weighted_kendall_is_bounded_and_symmetric(x in prop::collection::vec(0u32..20, 2..40), seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let xs: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|v| v + rng.gen_range(-5.0..5.0f64).round()).collect();
        if let Some(t) = weighted_kendall(&xs, &ys) {
            prop_assert!((-1.0..=1.0).contains(&t));
            let u = weighted_kendall(&ys, &xs).unwrap();
            prop_assert!((t - u).abs() < 1e-12);
        }
    }

    #[test]
    fn spearman_ignores_monotone_transforms(x in prop::collection::vec(-1e6f64..1e6, 3..50), y in prop::collection::vec(-1e6f64..1e6, 3..50)) {
        let n = x.len().min(y.len());
        let (x, y) = (&x[..n], &y[..n]);
        let cubed: Vec<f64> = x.iter().map(|v| v * v * v + 7.0).collect();
        match (spearman(x, y), spearman(&cubed, y)) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9),
            (a, b) => prop_assert_eq!(a, b),
        }
    }

    #[test]
    fn reference_graphs_have_requested_size(n in 2usize..60, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let max = n * (n - 1) / 2;
        let m = (frac * max as f64) as usize;
        let g = erdos_renyi(n, m, seed).unwrap();
        prop_assert_eq!((g.node_count(), g.edge_count()), (n, m));
        let k = 1 + m % 3;
        if n > k {
            let b = barabasi_albert(n, k, seed).unwrap();
            prop_assert_eq!(b.node_count(), n);
            prop_assert_eq!(b.edge_count(), k * (n - k));
        }
    }

    #[test]
    fn effective_diameter_is_at_most_diameter(seed in any::<u64>(), n in 2usize..40) {
        let max = n * (n - 1) / 2;
        let g = erdos_renyi(n, (seed as usize % max) + 1, seed).unwrap();
        if let (Some(e), Some(d)) = (effective_diameter(&g, 1), diameter(&g, 1)) {
            prop_assert!(e <= d as f64 + 1e-12 && e > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lengthened_paths_keep_the_contract(seed in any::<u64>(), n in 3usize..10, l in 1usize..6) {
        let mut rng = rng_from(seed);
        let g = random_graph(&mut rng, n, 3 * n);
        let state = BalanceState::init(&g, &mut rng);
        let opts = RouteOptions { amount_sat: 20_000, count_last_hop_fee: false, ignore_depletion: false, max_hops: 20 };
        let tx = Transaction { sender: 0, recipient: n - 1, amount_sat: 20_000 };
        let mut router = Router::new();
        let ga = GaParams { generations: 30, population_size: 20, ..GaParams::new(l, seed) };
        let base = router.cheapest_path(&g, &state, &tx, &opts, None);
        let out = lengthened_path(&g, &state, &tx, &opts, &ga, &mut router).unwrap();
        if out.is_success() {
            prop_assert_eq!(out.hop_count(), l);
            let nodes: HashSet<_> = out.path.iter().collect();
            prop_assert_eq!(nodes.len(), out.path.len());
            for &e in &out.edges {
                let edge = g.edge(e);
                prop_assert!(!edge.policy.disabled && state.balance(edge) >= 20_000);
            }
            prop_assert_eq!(oracle_path_cost(&g, &out.edges, 20_000, false), out.total_fee_msat as u128);
            prop_assert!(out.total_fee_msat >= base.total_fee_msat);
            if base.hop_count() == l {
                prop_assert_eq!(out.total_fee_msat, base.total_fee_msat);
            }
        }
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let params = SimParams {
        tau: 300,
        runs: 3,
        seed: 99,
        ..SimParams::default()
    };
    let (snaps, _) = daily_snapshots(&SynthConfig::default(), 2, 0.1, params.amount_sat);
    let run = |workers| {
        run_experiment(
            &snaps,
            &params,
            &ExperimentOptions {
                workers,
                ..Default::default()
            },
        )
        .unwrap()
    };
    assert_eq!(run(1), run(5));
}
