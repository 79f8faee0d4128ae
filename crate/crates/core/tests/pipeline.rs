use std::fs;

use polybandit::analysis::{compute_gaps, gap_dependent_bound, gap_dependent_leading, gap_free_bound, CSV_HEADER};
use polybandit::environments::{make_flow_env, parse_ratings};
use polybandit::experiment::{run_experiment, ExperimentConfig, ExperimentSummary, RunOptions};
use polybandit::polymatroid::{parse_coverage_map, parse_edge_list};

// Reference values computed independently (double precision script).
const FLOW_16_15_05_FULL: f64 = 4310.465102132332;
const GAP_FREE_K3_L16_N1E4: f64 = 20189.69463212735;
const GAP_FREE_K3_L16_N2: f64 = 3434.083656275971;

#[test]
fn frozen_bound_values() {
    let (env, m) = make_flow_env(16, 1.5, 0.5).unwrap();
    let gaps = compute_gaps(&m, &env.learner_means()).unwrap();
    let bound = gap_dependent_bound(&gaps, 10_000).unwrap();
    assert!((bound.full - FLOW_16_15_05_FULL).abs() < 1e-6, "{}", bound.full);
    assert!((gap_free_bound(3.0, 16, 10_000).unwrap() - GAP_FREE_K3_L16_N1E4).abs() < 1e-6);
    assert!((gap_free_bound(3.0, 16, 2).unwrap() - GAP_FREE_K3_L16_N2).abs() < 1e-9);
}

#[test]
fn leading_term_matches_closed_form() {
    for (l, delta) in [(16, 0.5), (16, 0.25), (32, 0.5), (32, 0.25), (8, 0.1)] {
        for n in [10, 1000, 10_000] {
            let expected = l as f64 * 16.0 / delta * (n as f64).ln();
            let got: f64 = gap_dependent_leading(l, delta, n).unwrap();
            assert!((got - expected).abs() < 1e-9 * expected, "L={l} delta={delta} n={n}");
        }
    }
}

#[test]
fn input_parsers_reject_bad_lines() {
    assert!(parse_edge_list("0 1 3\n1 2 x\n").is_err());
    assert!(parse_edge_list("0 1 3\n1 0 4\n").is_err());
    assert!(parse_edge_list("0 0 3\n").is_err());
    assert!(parse_edge_list("# only comments\n").is_err());
    let g = parse_edge_list("0 1 3 # ms\n\n1 2 5\n").unwrap();
    assert_eq!(g.mean_latencies(), vec![3.0, 5.0]);

    assert!(parse_coverage_map("0 1\n0 2\n").is_err());
    assert!(parse_coverage_map("0 1\n2 0\n").is_err());
    let map = parse_coverage_map("1 0,2\n0 1\n").unwrap();
    assert_eq!(map.topics_of(1), &[0, 2]);
    assert_eq!(map.topic_count(), 3);

    assert!(parse_ratings("0 1\n0 1\n").is_err());
    assert!(parse_ratings("0 1 5\n").is_err());
    let r = parse_ratings("0 0\n1 2\n").unwrap();
    assert_eq!((r.user_count(), r.item_count()), (2, 3));
    assert!(r.watched(1, 2) && !r.watched(0, 2));
}

#[test]
fn run_writes_consistent_outputs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("net.txt"), "0 1 3\n1 2 5\n0 2 4\n2 3 1\n1 3 7\n").unwrap();
    let cfg_path = dir.path().join("latency.toml");
    fs::write(
        &cfg_path,
        "n = 120\nruns = 2\nbase_seed = 5\ntrace = \"log\"\npoints_per_decade = 4\noutput_dir = \"out\"\n\n\
         [environment]\nkind = \"latency\"\nedge_list = \"net.txt\"\ncap = 12.0\n\n\
         [[policies]]\nkind = \"opm\"\n\n[[policies]]\nkind = \"oracle\"\n",
    )
    .unwrap();
    let cfg = ExperimentConfig::load(&cfg_path).unwrap();
    let out = dir.path().join("results");
    let outcome = run_experiment(&cfg, &RunOptions::default(), Some(&out)).unwrap();

    let summary: ExperimentSummary =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary, outcome.summary);
    assert_eq!(summary.config_hash, cfg.hash());
    assert_eq!((summary.items, summary.rank), (5, 3.0));
    assert_eq!(summary.policies[1].regret.mean, 0.0);

    let csv = fs::read_to_string(out.join("opm").join("run_0001.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.last().unwrap()[0], "120");
    assert!(rows.iter().all(|r| r.len() == 5));
    let regrets: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(regrets.windows(2).all(|w| w[0] <= w[1]));

    // the written config reproduces the same hash
    let again = ExperimentConfig::from_toml(&fs::read_to_string(out.join("config.toml")).unwrap()).unwrap();
    assert_eq!(again.hash(), cfg.hash());
    assert!(fs::read_to_string(out.join("run.log")).unwrap().contains(&cfg.hash()));
}

#[test]
fn output_dir_does_not_change_the_hash() {
    let base = "n = 10\nruns = 1\n[environment]\nkind = \"flow\"\nL = 4\nK = 1.5\ndelta = 0.5\n[[policies]]\nkind = \"opm\"\n";
    let a = ExperimentConfig::from_toml(base).unwrap();
    let b = ExperimentConfig::from_toml(&format!("output_dir = \"elsewhere\"\n{base}")).unwrap();
    let c = ExperimentConfig::from_toml(&base.replace("n = 10", "n = 11")).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn shipped_configs_are_valid() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap();
            cfg.validate().unwrap();
            cfg.environment.build().unwrap();
            count += 1;
        }
    }
    assert!(count >= 4);
}
