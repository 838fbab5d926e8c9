use std::path::Path;
use std::process::{Command, Output};

use lnsim::synth::{write_dataset, SynthConfig};

fn lnsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lnsim")).args(args).output().unwrap()
}

fn dataset(dir: &Path) -> String {
    write_dataset(dir, &SynthConfig { nodes: 120, ..SynthConfig::default() }, 2, 0.05).unwrap();
    dir.display().to_string()
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn simulate_is_reproducible_across_workers() {
    let tmp = tempfile::tempdir().unwrap();
    let d = dataset(tmp.path());
    let snaps = format!("{d}/snapshots.csv");
    let merchants = format!("{d}/merchants.csv");
    let mut outs = Vec::new();
    for w in ["1", "3"] {
        let out = tmp.path().join(format!("w{w}"));
        let o = lnsim(&[
            "simulate", "--snapshots", &snaps, "--merchants", &merchants, "--seed", "5", "--tau", "400", "--runs", "3",
            "--workers", w, "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push(out);
    }
    for f in ["node_stats.csv", "summary.csv"] {
        assert_eq!(read(outs[0].join(f)), read(outs[1].join(f)));
    }
    let manifest: serde_json::Value = serde_json::from_str(&read(outs[0].join("manifest.json"))).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["complete"], true);
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn manifest_replays_a_generated_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let d = dataset(tmp.path());
    let a = tmp.path().join("a");
    let o = lnsim(&["simulate", "--snapshots", &format!("{d}/snapshots.csv"), "--tau", "200", "--runs", "2", "--out", a.to_str().unwrap()]);
    assert!(o.status.success());
    let manifest: serde_json::Value = serde_json::from_str(&read(a.join("manifest.json"))).unwrap();
    assert_eq!(manifest["seed_generated"], true);
    let b = tmp.path().join("b");
    let o = lnsim(&["--from-manifest", a.join("manifest.json").to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(a.join("node_stats.csv")), read(b.join("node_stats.csv")));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = dataset(tmp.path());
    let snaps = format!("{d}/snapshots.csv");
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();
    assert_eq!(lnsim(&["simulate", "--snapshots", &snaps, "--merchant-ratio", "1.5", "--out", out]).status.code(), Some(2));
    assert_eq!(lnsim(&["simulate", "--amount", "0", "--snapshots", &snaps, "--out", out]).status.code(), Some(2));
    assert_eq!(lnsim(&["simulate", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(lnsim(&["--help"]).status.code(), Some(0));

    let missing = lnsim(&["simulate", "--snapshots", "/definitely/missing.csv", "--out", out]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing.csv"));

    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "snapshot_id,channel_id,src,trg,capacity_sat,base_fee_msat,fee_rate_ppm,disabled\nd,c,a,b,x,0,0,0\n").unwrap();
    let o = lnsim(&["simulate", "--snapshots", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.csv:2:"));
}

#[test]
fn zero_volume_day_writes_empty_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let d = dataset(tmp.path());
    let out = tmp.path().join("o");
    let o = lnsim(&["simulate", "--snapshots", &format!("{d}/snapshots.csv"), "--tau", "0", "--runs", "1", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(read(out.join("node_stats.csv")).lines().count(), 1);
    assert!(read(out.join("summary.csv")).lines().skip(1).all(|l| l.contains(",0,0,")));
}

#[test]
fn every_analysis_writes_its_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let d = dataset(tmp.path());
    let common = [
        "--snapshots".to_string(),
        format!("{d}/snapshots.csv"),
        "--merchants".into(),
        format!("{d}/merchants.csv"),
        "--entities".into(),
        format!("{d}/entities.csv"),
        "--seed".into(),
        "3".into(),
        "--tau".into(),
        "150".into(),
        "--runs".into(),
        "2".into(),
    ];
    let cases: &[(&[&str], &[&str])] = &[
        (&["fee-competition", "--targets", "top:5,entity:operator"], &["removal.csv", "removal_groups.csv"]),
        (&["profitability"], &["entity_report.csv"]),
        (&["sweep", "--axis", "alpha", "--values", "20000,60000"], &["sweep_alpha.csv"]),
        (&["sweep", "--axis", "tau", "--values", "50,100"], &["sweep_tau.csv"]),
        (&["depletion-ratio"], &["depletion_ratio.csv"]),
        (&["entity-removal", "--remove", "operator"], &["entity_removal.csv"]),
        (
            &["privacy", "--lengths", "2,3", "--epsilons", "0.8,1.0", "--payments-per-day", "2", "--generations", "10", "--population", "10"],
            &["privacy.csv", "single_hop.csv", "plausibility.csv", "cost_vs_length.csv"],
        ),
        (
            &["graph-stats", "--reference", "--edge-stream", &format!("{d}/edge_stream.csv")],
            &["graph_metrics.csv", "locality.csv", "lifetimes.csv", "attachment.csv", "densification.csv"],
        ),
        (&["correlations"], &["correlations.csv"]),
    ];
    for (i, (args, files)) in cases.iter().enumerate() {
        let out = tmp.path().join(format!("o{i}"));
        let mut argv: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        argv.extend(common.iter().cloned());
        argv.extend(["--out".to_string(), out.display().to_string()]);
        let refs: Vec<&str> = argv.iter().map(String::as_str).collect();
        let o = lnsim(&refs);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        for f in *files {
            let text = read(out.join(f));
            assert!(text.lines().count() >= 2, "{f} of {args:?} is empty");
        }
        assert!(out.join("manifest.json").exists());
    }
}

#[test]
fn convert_roundtrips_a_gossip_dump() {
    let tmp = tempfile::tempdir().unwrap();
    let dump = tmp.path().join("g.json");
    std::fs::write(
        &dump,
        r#"{"nodes":[{"pub_key":"a"},{"pub_key":"b"},{"pub_key":"z"}],
            "edges":[{"channel_id":"1","node1_pub":"a","node2_pub":"b","capacity":"100000",
              "node1_policy":{"fee_base_msat":"1000","fee_rate_milli_msat":"1","disabled":false},
              "node2_policy":{"fee_base_msat":"0","fee_rate_milli_msat":"5","disabled":true}}]}"#,
    )
    .unwrap();
    let csv = tmp.path().join("g.csv");
    let o = lnsim(&["convert", "--input", dump.to_str().unwrap(), "--output", csv.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&csv);
    assert!(text.contains(",1,a,b,100000,1000,1,0"), "{text}");
    assert!(text.contains(",1,b,a,100000,0,5,1"), "{text}");
}
