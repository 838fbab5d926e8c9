//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout. Set
//! `LNSIM_DATASET_DIR` to a directory holding `snapshots/`, `merchants.csv`
//! and `entities.csv` to enable the dataset reproduction check.

mod common;

use std::collections::HashSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::*;
use lnsim::competition::{fee_competition, group_report, optimal_base_fee_increment, rank_summaries, top_income_targets};
use lnsim::ingest::{self, EntityMap, LoadOptions};
use lnsim::netstats::structure::{cpd, transitivity, UndirectedGraph};
use lnsim::netstats::{brandes, densification_fit};
use lnsim::privacy::{lengthened_path, single_hop_from_stats, GaParams};
use lnsim::profitability::{annual_roi, economical_fee, entity_removal_failures};
use lnsim::router::{RouteOptions, Router};
use lnsim::seeds::rng_from;
use lnsim::sim::{run_experiment, AggregateResult, ExperimentOptions};
use lnsim::synth::{daily_snapshots, generate, write_dataset, SynthConfig};
use lnsim::{edge_fee, BalanceState, FeePolicy, SimParams, SnapshotGraph, Transaction};
use rand::Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

type Check = (&'static str, fn() -> Verdict);

fn main() {
    let checks: [Check; 10] = [
        ("fee arithmetic", fee_arithmetic),
        ("roi table algebra", roi_table),
        ("routing oracle", routing_oracle),
        ("balance conservation", conservation),
        ("beta* oracle", beta_oracle),
        ("determinism across workers", determinism),
        ("depletion dominance", depletion_dominance),
        ("fixed-length path contract", ga_contract),
        ("graph metric fixtures", graph_metrics),
        ("dataset reproduction", dataset),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let v = check();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match v {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("{tag}  {name}: {detail} [{secs:.2}s]");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

const MAX_AMOUNT: u64 = 4_000_000_000_000;

fn fee_arithmetic() -> Verdict {
    let mut rng = rng_from(0xfee);
    let mut bad = 0;
    for i in 0..1_000 {
        // Gossip fields are u32; amounts stop where the fee would leave u64.
        let (base, rate, amount) = match i {
            0 => (0, 0, 1),
            1 => (u32::MAX as u64, u32::MAX as u64, MAX_AMOUNT),
            _ => (
                rng.gen_range(0..=u32::MAX as u64),
                rng.gen_range(0..=u32::MAX as u64),
                rng.gen_range(1..=MAX_AMOUNT),
            ),
        };
        if edge_fee(&FeePolicy::new(base, rate), amount) as u128 != oracle_fee(base, rate, amount) {
            bad += 1;
        }
    }
    verdict(bad == 0, format!("1000 cases, {bad} mismatches"))
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn roi_table() -> Verdict {
    // (advertised fee, capacity sat, daily income) of two published rows.
    let roi = annual_roi(158_119.6, 969e6).unwrap() * 100.0;
    let (fee_r, ratio_r) = economical_fee(4_371.9, 969e6, 158_119.6, 0.05).unwrap();
    let (fee_l, ratio_l) = economical_fee(32.4, 53_686e6, 6_550.3, 0.05).unwrap();
    let errs = [
        rel(roi, 5.9557),
        rel(fee_r, 3_670.3),
        rel(ratio_r, 0.84),
        rel(ratio_l, 1_122.7),
        rel(fee_l, 36_388.7),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let ok = worst <= 0.001;
    verdict(
        ok,
        format!("roi {roi:.4}%, fees {fee_r:.1} / {fee_l:.1}, ratios {ratio_r:.4} / {ratio_l:.1}; worst rel err {worst:.2e}"),
    )
}

fn routing_oracle() -> Verdict {
    let mut rng = rng_from(0x60);
    let mut router = Router::new();
    let none = HashSet::new();
    let (mut pairs, mut bad) = (0, 0);
    for _ in 0..500 {
        let n = rng.gen_range(2..=10);
        let channels = rng.gen_range(1..=2 * n);
        let g = random_graph(&mut rng, n, channels);
        let state = BalanceState::init(&g, &mut rng);
        let opts = RouteOptions {
            amount_sat: rng.gen_range(1..=150_000),
            count_last_hop_fee: rng.gen_bool(0.2),
            ignore_depletion: rng.gen_bool(0.2),
            max_hops: if rng.gen_bool(0.3) { rng.gen_range(1..=n) } else { 20 },
        };
        let search = Search {
            graph: &g,
            state: &state,
            amount_sat: opts.amount_sat,
            count_last_hop_fee: opts.count_last_hop_fee,
            ignore_depletion: opts.ignore_depletion,
            max_hops: opts.max_hops,
            blocked: &none,
        };
        for s in 0..n {
            for t in 0..n {
                let tx = Transaction {
                    sender: s,
                    recipient: t,
                    amount_sat: opts.amount_sat,
                };
                let out = router.cheapest_path(&g, &state, &tx, &opts, None);
                pairs += 1;
                if out.is_success().then_some(out.total_fee_msat as u128) != search.cheapest_cost(&tx) {
                    bad += 1;
                }
            }
        }
    }
    verdict(bad == 0, format!("500 graphs, {pairs} ordered pairs, {bad} cost mismatches"))
}

fn conservation() -> Verdict {
    let mut rng = rng_from(0xc0);
    let mut fixtures: Vec<SnapshotGraph> = (0..4).map(|_| random_graph(&mut rng, 8, 16)).collect();
    fixtures.push(generate(&SynthConfig::default()).graph("synth", 0));
    let mut router = Router::new();
    let (mut steps, mut bad) = (0, 0);
    for (i, g) in fixtures.iter().enumerate() {
        let mut state = BalanceState::init(g, &mut rng);
        let total = state.total();
        let opts = RouteOptions {
            amount_sat: 0,
            count_last_hop_fee: false,
            ignore_depletion: i % 2 == 1,
            max_hops: 20,
        };
        for _ in 0..10_000 {
            let tx = Transaction {
                sender: rng.gen_range(0..g.node_count()),
                recipient: rng.gen_range(0..g.node_count()),
                amount_sat: rng.gen_range(1..=200_000),
            };
            let opts = RouteOptions {
                amount_sat: tx.amount_sat,
                ..opts
            };
            let out = router.cheapest_path(g, &state, &tx, &opts, None);
            if out.is_success() && state.apply_payment(g, &out.edges, tx.amount_sat, opts.ignore_depletion).is_err() {
                bad += 1;
            }
            steps += 1;
            if !state.is_conserved() || state.total() != total {
                bad += 1;
            }
        }
    }
    verdict(bad == 0, format!("{} fixtures, {steps} payment steps, {bad} violations", fixtures.len()))
}

fn beta_oracle() -> Verdict {
    let mut rng = rng_from(0xbe7a);
    let mut bad = 0;
    for _ in 0..1_000 {
        let len = rng.gen_range(0..40);
        let hi = *[5u64, 100, 3_000].get(rng.gen_range(0..3)).unwrap();
        let deltas: Vec<u64> = (0..len).map(|_| rng.gen_range(0..=hi)).collect();
        if optimal_base_fee_increment(&deltas) != brute_beta(&deltas) {
            bad += 1;
        }
    }
    verdict(bad == 0, format!("1000 delta lists, {bad} mismatches"))
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    write_dataset(&data, &SynthConfig { nodes: 300, ..SynthConfig::default() }, 3, 0.05).unwrap();
    let mut files = Vec::new();
    for workers in ["1", "8"] {
        let out = tmp.path().join(format!("w{workers}"));
        let status = Command::new(env!("CARGO_BIN_EXE_lnsim"))
            .args(["simulate", "--seed", "2024", "--workers", workers])
            .arg("--snapshots")
            .arg(data.join("snapshots.csv"))
            .arg("--merchants")
            .arg(data.join("merchants.csv"))
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        if !status.success() {
            return Verdict::Fail(format!("simulate exited with {status}"));
        }
        files.push(std::fs::read(out.join("node_stats.csv")).unwrap());
    }
    verdict(
        files[0] == files[1],
        format!(
            "default tau and runs on 3 synthetic days, workers 1 vs 8, node_stats.csv {} bytes, identical={}",
            files[0].len(),
            files[0] == files[1]
        ),
    )
}

fn keep(workers: usize) -> ExperimentOptions {
    ExperimentOptions {
        workers,
        keep_outcomes: true,
        ..Default::default()
    }
}

fn depletion_dominance() -> Verdict {
    let (mut cells, mut subset_bad) = (0, 0);
    let mut removal_cases = 0;
    let mut removal_bad = Vec::new();
    for fixture in 1..=6u64 {
        let cfg = SynthConfig {
            nodes: 150,
            seed: fixture,
            ..SynthConfig::default()
        };
        for seed in [1u64, 2, 3] {
            let params = SimParams {
                tau: 400,
                runs: 2,
                seed,
                ..SimParams::default()
            };
            let (snaps, net) = daily_snapshots(&cfg, 2, 0.05, params.amount_sat);
            let enforced = run_experiment(&snaps, &params, &keep(0)).unwrap();
            let optimistic = run_experiment(&snaps, &SimParams { ignore_depletion: true, ..params.clone() }, &keep(0)).unwrap();
            for (a, b) in enforced.cells.iter().zip(&optimistic.cells) {
                cells += 1;
                if a.outcomes.iter().zip(&b.outcomes).any(|(x, y)| x.is_success() && !y.is_success()) {
                    subset_bad += 1;
                }
            }
            let mut names = vec!["operator".to_string()];
            names.extend(top_names(&enforced, 3));
            let (baseline, rows) =
                entity_removal_failures(&snaps, &params, &net.entities, &names, &ExperimentOptions::default()).unwrap();
            let baseline = baseline.unwrap_or(0.0);
            for r in rows {
                removal_cases += 1;
                let f = r.failure_fraction.unwrap_or(0.0);
                if f < baseline {
                    removal_bad.push(format!("fixture {fixture} seed {seed} -{}: {f:.4} < {baseline:.4}", r.entity));
                }
            }
        }
    }
    let detail = format!(
        "{cells} cells, {subset_bad} with a success lost by ignoring depletion; {removal_cases} removals, {} below baseline{}",
        removal_bad.len(),
        if removal_bad.is_empty() { String::new() } else { format!(" ({})", removal_bad.join("; ")) }
    );
    verdict(subset_bad == 0 && removal_bad.is_empty(), detail)
}

fn top_names(agg: &AggregateResult, k: usize) -> Vec<String> {
    agg.income_ranking().into_iter().take(k).map(|(id, _)| id).collect()
}

fn ga_contract() -> Verdict {
    let g = generate(&SynthConfig::default()).graph("ga", 60_000);
    let mut rng = rng_from(0x6a);
    let state = BalanceState::init(&g, &mut rng);
    let opts = RouteOptions {
        amount_sat: 60_000,
        count_last_hop_fee: false,
        ignore_depletion: false,
        max_hops: 20,
    };
    let mut router = Router::new();
    let (mut pairs, mut found, mut bad) = (0, 0, Vec::new());
    while pairs < 200 {
        let tx = Transaction {
            sender: rng.gen_range(0..g.node_count()),
            recipient: rng.gen_range(0..g.node_count()),
            amount_sat: 60_000,
        };
        let base = router.cheapest_path(&g, &state, &tx, &opts, None);
        if !base.is_success() {
            continue;
        }
        pairs += 1;
        let target = if pairs % 4 == 0 { base.hop_count() } else { rng.gen_range(1..=6) };
        let ga = GaParams::new(target, pairs as u64);
        let out = lengthened_path(&g, &state, &tx, &opts, &ga, &mut router).unwrap();
        if !out.is_success() {
            if target == base.hop_count() {
                bad.push(format!("pair {pairs}: no path at baseline length"));
            }
            continue;
        }
        found += 1;
        let simple = out.path.iter().collect::<HashSet<_>>().len() == out.path.len();
        let feasible = out.edges.iter().all(|&e| {
            let edge = g.edge(e);
            !edge.policy.disabled && state.balance(edge) >= 60_000
        });
        let contiguous = out.edges.iter().enumerate().all(|(i, &e)| g.edge(e).src == out.path[i] && g.edge(e).trg == out.path[i + 1]);
        let cost_ok = oracle_path_cost(&g, &out.edges, 60_000, false) == out.total_fee_msat as u128
            && out.total_fee_msat >= base.total_fee_msat
            && (target != base.hop_count() || out.total_fee_msat == base.total_fee_msat);
        if !(simple && feasible && contiguous && out.hop_count() == target && cost_ok) {
            bad.push(format!("pair {pairs} L={target}"));
        }
    }
    verdict(bad.is_empty(), format!("{pairs} routable pairs, {found} paths found, {} contract violations {bad:?}", bad.len()))
}

fn graph_metrics() -> Verdict {
    let star = |n: usize| UndirectedGraph::from_edges(n, (1..n).map(|v| (0, v)));
    let complete = |n: usize| UndirectedGraph::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))));
    let mut failures = Vec::new();
    for n in 3..=30 {
        if (cpd(&star(n), 1).unwrap() - 1.0).abs() > 1e-12 {
            failures.push(format!("cpd star {n}"));
        }
        if cpd(&complete(n), 1).unwrap().abs() > 1e-12 {
            failures.push(format!("cpd complete {n}"));
        }
    }
    if transitivity(&complete(3)) != Some(1.0) {
        failures.push("transitivity triangle".into());
    }
    for (k, e, expected) in [(2u32, 3u32, 1.5), (3, 4, 4.0 / 3.0), (4, 5, 1.25)] {
        let series: Vec<(usize, usize)> = (2..12usize).map(|i| (i.pow(k), i.pow(e))).collect();
        let fit = densification_fit(&series).unwrap();
        if (fit.exponent - expected).abs() > 1e-9 {
            failures.push(format!("densification {expected}: {}", fit.exponent));
        }
    }
    let mut rng = rng_from(0xb7);
    for _ in 0..300 {
        let n = rng.gen_range(2..=8);
        let adj: Vec<Vec<usize>> = (0..n).map(|u| (0..n).filter(|&v| v != u && rng.gen_bool(0.35)).collect()).collect();
        let ok = brandes(&adj, 2).iter().zip(brute_betweenness(&adj)).all(|(a, b)| (a - b).abs() < 1e-9);
        if !ok {
            failures.push(format!("betweenness {adj:?}"));
        }
    }
    verdict(
        failures.is_empty(),
        format!("cpd stars/cliques 3..30, triangle, 3 planted exponents, 300 betweenness graphs; failures {failures:?}"),
    )
}

fn dataset() -> Verdict {
    let Some(dir) = std::env::var_os("LNSIM_DATASET_DIR") else {
        return Verdict::Skip("LNSIM_DATASET_DIR not set; published snapshots unavailable, non-reproducible here".into());
    };
    match reproduce(Path::new(&dir)) {
        Ok((ok, detail)) => verdict(ok, detail),
        Err(e) => Verdict::Fail(format!("could not evaluate: {e}")),
    }
}

const BIG_ENTITY: &str = "LNBIG.com";

fn reproduce(dir: &Path) -> lnsim::Result<(bool, String)> {
    let params = SimParams::default();
    let merchants = ingest::load_merchants(&dir.join("merchants.csv"))?;
    let entities: EntityMap = ingest::load_entities(&dir.join("entities.csv"))?;
    let snaps: Vec<SnapshotGraph> = ingest::load_snapshots(&dir.join("snapshots"), &LoadOptions::default())?
        .into_iter()
        .map(|g| g.with_merchants(&merchants))
        .collect();
    let opts = ExperimentOptions::default();
    let base = run_experiment(&snaps, &params, &opts)?;
    let big = base.mean_entity_stats(&entities).remove(BIG_ENTITY).unwrap_or_default();
    let income_ok = (5_000.0..=10_000.0).contains(&big.routing_income_sat);
    let traffic_ok = (200.0..=600.0).contains(&big.routing_traffic);

    let (failure, rows) = entity_removal_failures(&snaps, &params, &entities, &[BIG_ENTITY.to_string()], &opts)?;
    let failure = failure.unwrap_or(f64::NAN);
    let removed = rows[0].failure_fraction.unwrap_or(f64::NAN);
    let failure_ok = (failure - 0.3543).abs() <= 0.03 && (removed - 0.3822).abs() <= 0.03;

    let hop = |eps: f64| -> lnsim::Result<f64> {
        let p = SimParams {
            merchant_ratio: eps,
            ..params.clone()
        };
        let agg = if eps == params.merchant_ratio { base.clone() } else { run_experiment(&snaps, &p, &opts)? };
        Ok(single_hop_from_stats(&agg.path_stats()).all_successes.unwrap_or(f64::NAN))
    };
    let (h08, h10) = (hop(0.8)?, hop(1.0)?);
    let hop_ok = (h08 - 0.17).abs() <= 0.05 && (h10 - 0.37).abs() <= 0.05;

    let summaries = fee_competition(&snaps, &params, &entities, &top_income_targets(&base, 100), 0)?;
    let groups = group_report(&rank_summaries(&base, &summaries));
    let bands: Vec<f64> = groups.iter().take(4).map(|g| g.mean_failure_ratio.unwrap_or(0.0)).collect();
    let bands_ok = bands.iter().all(|&r| r >= 0.3);

    Ok((
        income_ok && traffic_ok && failure_ok && hop_ok && bands_ok,
        format!(
            "{BIG_ENTITY} income {:.0} sat traffic {:.0}; failure {failure:.4} removed {removed:.4}; single hop {h08:.3}/{h10:.3}; band failure ratios {bands:?}",
            big.routing_income_sat, big.routing_traffic
        ),
    ))
}
