//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use polybandit::analysis::{
    check_sequence_inequality, compute_gaps, decompose_episode, gap_dependent_bound, gap_dependent_leading,
    ReportRow,
};
use polybandit::bandit::{Learner, PolicyConfig};
use polybandit::environments::{make_uniform_bandit_env, stream_rng, Environment, Objective, StreamRng};
use polybandit::experiment::{
    execute, run_experiment, Diagnostics, EnvironmentSpec, ExperimentConfig, ExperimentOutcome, RunOptions,
    SyntheticGraph, SyntheticRatings, TraceMode,
};
use polybandit::polymatroid::{
    enumerate_vertices, greedy_max_basis, greedy_min_basis, make_coverage_polymatroid, make_graphic_matroid,
    make_paired_flow_polymatroid, make_partition_matroid, make_uniform_matroid, ranked_order, CoverageMap, Edge,
    GraphTopology, Polymatroid,
};

const SEED: u64 = 20150707;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn flow_config(l: usize, k: f64, delta: f64, n: u64, runs: u64, policies: Vec<PolicyConfig>) -> ExperimentConfig {
    ExperimentConfig {
        n,
        runs,
        base_seed: Some(SEED),
        trace: TraceMode::Log,
        points_per_decade: 10,
        output_dir: None,
        environment: EnvironmentSpec::Flow { l, k, delta },
        policies,
        diagnostics: Diagnostics::default(),
    }
}

fn row_at(rows: &[ReportRow], episode: u64) -> &ReportRow {
    rows.iter().find(|r| r.episode == episode).expect("checkpoint present")
}

/// Mean OPM regret at 10^3 and 10^4 episodes over 100 runs.
type FlowTable = BTreeMap<(usize, u64, u64), (f64, f64, f64, f64)>;

fn key(l: usize, k: f64, delta: f64) -> (usize, u64, u64) {
    (l, (k * 100.0) as u64, (delta * 100.0) as u64)
}

fn flow_table() -> FlowTable {
    let mut table = FlowTable::new();
    for l in [16, 32] {
        for k in [1.5, 3.0, 6.0] {
            for delta in [0.5, 0.25] {
                let cfg = flow_config(l, k, delta, 10_000, 100, vec![PolicyConfig::opm()]);
                let out = execute(&cfg, &RunOptions::default()).expect("flow experiment runs");
                let p = &out.policies[0];
                let r3 = row_at(&p.mean.rows, 1000).regret_cum;
                let summary = &out.summary.policies[0].regret;
                table.insert(key(l, k, delta), (r3, summary.mean, summary.stderr, out.summary.bounds.gap_dependent.unwrap()));
            }
        }
    }
    table
}

fn criterion_1(table: &FlowTable) -> Verdict {
    let targets = [(16, 1.5, 0.5, 329.1), (16, 6.0, 0.5, 373.3), (32, 3.0, 0.25, 1356.1)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (l, k, delta, target) in targets {
        let (_, mean, se, _) = table[&key(l, k, delta)];
        let rel = (mean - target) / target;
        pass &= rel.abs() <= 0.10;
        parts.push(format!("L={l} K={k} d={delta}: {mean:.1}±{se:.1} vs {target} ({:+.1}%)", rel * 100.0));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_2() -> Verdict {
    let targets = [(16, 0.5, 4716.0), (16, 0.25, 9431.0), (32, 0.5, 9431.0), (32, 0.25, 18863.0)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (l, delta, target) in targets {
        let v: f64 = gap_dependent_leading(l, delta, 10_000).unwrap();
        pass &= (v.round() - target).abs() <= 1.0;
        parts.push(format!("L={l} d={delta}: {v:.1}"));
    }
    // the same term from a built instance, via its smallest gap
    let (env, m) = polybandit::environments::make_flow_env(16, 1.5, 0.5).unwrap();
    let gaps = compute_gaps(&m, &env.learner_means()).unwrap();
    let from_instance: f64 = gap_dependent_bound(&gaps, 10_000).unwrap().leading;
    pass &= (from_instance.round() - 4716.0).abs() <= 1.0;
    verdict(pass, parts.join("; "))
}

fn criterion_3(table: &FlowTable) -> Verdict {
    let band = (10_000f64).ln() / (1000f64).ln() + 0.5;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let (mut bound_fail, mut growth_fail) = (0, 0);
    let mut growths = Vec::new();
    for (&(l, k, d), &(r3, r4, _, full)) in table {
        let delta = d as f64 / 100.0;
        let leading = gap_dependent_leading(l, delta, 10_000).unwrap();
        let ok = [leading, full].iter().all(|&bound| {
            let ratio = bound / r4;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            r4 < bound && (5.0..=30.0).contains(&ratio)
        });
        bound_fail += usize::from(!ok);
        let growth = r4 / r3;
        growth_fail += usize::from(growth > band);
        growths.push(format!("{l}/{}/{delta}:{growth:.2}", k as f64 / 100.0));
    }
    verdict(
        bound_fail == 0 && growth_fail == 0,
        format!(
            "bound/regret ratios in [{lo:.1}, {hi:.1}] ({bound_fail} of 12 out of range); R(1e4)/R(1e3) above {band:.2} in {growth_fail} of 12 [{}]",
            growths.join(" ")
        ),
    )
}

fn criterion_4(table: &FlowTable) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for l in [16, 32] {
        for delta in [0.5, 0.25] {
            let regrets: Vec<f64> = [1.5, 3.0, 6.0].iter().map(|&k| table[&key(l, k, delta)].1).collect();
            let hi = regrets.iter().cloned().fold(f64::MIN, f64::max);
            let lo = regrets.iter().cloned().fold(f64::MAX, f64::min);
            let spread = hi / lo - 1.0;
            pass &= spread < 0.25;
            parts.push(format!(
                "L={l} d={delta}: {:.0}/{:.0}/{:.0} ({:.0}%)",
                regrets[0],
                regrets[1],
                regrets[2],
                spread * 100.0
            ));
        }
    }
    verdict(pass, parts.join("; "))
}

fn random_polymatroid(rng: &mut StreamRng) -> (String, Polymatroid<f64>) {
    match rng.random_range(0..4) {
        0 => {
            let l = rng.random_range(1..=6);
            let k = rng.random_range(1..=l);
            (format!("uniform {l}/{k}"), make_uniform_matroid(l, k).unwrap())
        }
        1 => {
            let l = rng.random_range(1..=6);
            let blocks = rng.random_range(1..=l);
            let mut items: Vec<usize> = (0..l).collect();
            items.shuffle(rng);
            let mut parts = vec![Vec::new(); blocks];
            for (i, e) in items.into_iter().enumerate() {
                parts[if i < blocks { i } else { rng.random_range(0..blocks) }].push(e);
            }
            ("partition".into(), make_partition_matroid(&parts).unwrap())
        }
        2 => {
            let l = 2 * rng.random_range(1..=3);
            let q = rng.random_range(1..=l / 2);
            (format!("flow {l}/{q}"), make_paired_flow_polymatroid(l, 1.5 * q as f64).unwrap())
        }
        _ => {
            let l = rng.random_range(1..=6);
            let topics = rng.random_range(1..=4);
            let map: Vec<Vec<usize>> = (0..l)
                .map(|_| {
                    let mut ts: Vec<usize> = (0..topics).filter(|_| rng.random_bool(0.4)).collect();
                    if ts.is_empty() {
                        ts.push(rng.random_range(0..topics));
                    }
                    ts
                })
                .collect();
            let map = CoverageMap::new(map, topics).unwrap();
            ("coverage".into(), make_coverage_polymatroid(&map).unwrap())
        }
    }
}

fn random_weights(rng: &mut StreamRng, l: usize) -> Vec<f64> {
    // coarse grids produce ties
    let grid = [0u32, 3, 10][rng.random_range(0..3)];
    (0..l)
        .map(|_| {
            let u: f64 = rng.random();
            if grid == 0 {
                u
            } else {
                (u * grid as f64).floor() / grid as f64
            }
        })
        .collect()
}

fn criterion_5() -> Verdict {
    let mut rng = stream_rng(SEED, 5);
    let (mut max_err, mut min_err) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (_, m) = random_polymatroid(&mut rng);
        let w = random_weights(&mut rng, m.len());
        let vertices = enumerate_vertices(&m).unwrap();
        let best = vertices.iter().map(|v| v.value(&w)).fold(f64::MIN, f64::max);
        let worst = vertices.iter().map(|v| v.value(&w)).fold(f64::MAX, f64::min);
        max_err = max_err.max((greedy_max_basis(&m, &w).unwrap().value(&w) - best).abs());
        min_err = min_err.max((greedy_min_basis(&m, &w).unwrap().value(&w) - worst).abs());
    }
    verdict(
        max_err <= 1e-9 && min_err <= 1e-9,
        format!("1000 instances, max |greedy - best vertex| {max_err:.1e} (max), {min_err:.1e} (min)"),
    )
}

fn criterion_6() -> Verdict {
    let map = CoverageMap::new(vec![vec![0], vec![1], vec![0, 1]], 2).unwrap();
    let m = make_coverage_polymatroid::<f64>(&map).unwrap();
    let expected: [(&[usize], f64); 8] = [
        (&[], 0.0),
        (&[0], 1.0),
        (&[1], 1.0),
        (&[2], 2.0),
        (&[0, 1], 2.0),
        (&[0, 2], 2.0),
        (&[1, 2], 2.0),
        (&[0, 1, 2], 2.0),
    ];
    let values_ok = expected.iter().all(|(set, v)| m.eval(set) == *v);
    let x = greedy_max_basis(&m, &[0.8, 0.5, 0.6]).unwrap().x;
    verdict(values_ok && x == [1.0, 0.0, 1.0], format!("x* = {x:?}, rank values match: {values_ok}"))
}

fn random_graph(rng: &mut StreamRng) -> Polymatroid<f64> {
    let nodes = rng.random_range(3..=5);
    let mut pairs: Vec<(usize, usize)> = (0..nodes).flat_map(|u| (u + 1..nodes).map(move |v| (u, v))).collect();
    pairs.shuffle(rng);
    let take = rng.random_range(1..=pairs.len().min(8));
    let edges = pairs[..take]
        .iter()
        .map(|&(u, v)| Edge { u, v, mean_latency: 1.0 })
        .collect();
    make_graphic_matroid(&GraphTopology::new(nodes, edges).unwrap()).unwrap()
}

fn criterion_7() -> Verdict {
    let mut rng = stream_rng(SEED, 7);
    let mut violations = Vec::new();
    let mut with_scores = 0;
    for trial in 0..10_000 {
        let m = if trial % 5 == 4 { random_graph(&mut rng) } else { random_polymatroid(&mut rng).1 };
        let w_bar = random_weights(&mut rng, m.len());
        let gaps = compute_gaps(&m, &w_bar).unwrap();
        let result = if rng.random_bool(0.5) {
            let scores: Vec<f64> = (0..m.len()).map(|_| rng.random()).collect();
            with_scores += 1;
            decompose_episode(&m, &gaps, &ranked_order(&scores), Some(&scores))
        } else {
            let mut order: Vec<usize> = (0..m.len()).collect();
            order.shuffle(&mut rng);
            decompose_episode(&m, &gaps, &order, None)
        };
        if let Err(e) = result {
            violations.push(e.to_string());
        }
    }
    verdict(
        violations.is_empty(),
        format!(
            "10000 episodes ({with_scores} with optimism check), {} violations{}",
            violations.len(),
            violations.first().map(|v| format!(", first: {v}")).unwrap_or_default()
        ),
    )
}

fn criterion_8() -> Verdict {
    let mut rng = stream_rng(SEED, 8);
    let mut violations = 0;
    let mut tightest = 0.0f64;
    for _ in 0..10_000 {
        let k = rng.random_range(1..=50);
        let mut seq: Vec<f64> = (0..k).map(|_| rng.random_range(1e-3..1.0)).collect();
        seq.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let report = check_sequence_inequality(&seq).unwrap();
        tightest = tightest.max(report.lhs / report.rhs);
        violations += usize::from(!report.holds);
    }
    verdict(violations == 0, format!("10000 sequences, {violations} violations, max lhs/rhs {tightest:.3}"))
}

fn criterion_9() -> Verdict {
    let env = Environment::bernoulli(vec![0.8, 0.2], Objective::Maximize).unwrap();
    let m = make_uniform_matroid::<f64>(2, 1).unwrap();
    let n = 10_000;
    let mut worst_share = 1.0f64;
    for seed in 0..20 {
        let mut rng = stream_rng(SEED + seed, 0);
        let (mut learner, _) = Learner::new(
            &PolicyConfig::opm(),
            &m,
            env.mean_weights(),
            || env.sample(&mut rng),
            stream_rng(SEED + seed, 1),
        )
        .unwrap();
        let mut best = 0;
        for _ in 0..n {
            let w = env.sample(&mut rng);
            best += usize::from(learner.step(&m, &w).unwrap().basis.x[0] == 1.0);
        }
        worst_share = worst_share.min(best as f64 / n as f64);
    }
    let cfg = ExperimentConfig {
        n: 10_000,
        runs: 50,
        base_seed: Some(SEED),
        trace: TraceMode::Log,
        points_per_decade: 10,
        output_dir: None,
        environment: EnvironmentSpec::PartitionBandit { l: 8, k: 2, delta: 0.2 },
        policies: vec![PolicyConfig::opm(), PolicyConfig::epsilon_greedy(0.1)],
        diagnostics: Diagnostics::default(),
    };
    let out = execute(&cfg, &RunOptions::default()).unwrap();
    let (opm, eps) = (&out.summary.policies[0].regret, &out.summary.policies[1].regret);
    // sanity of the instance itself
    let _ = make_uniform_bandit_env::<f64>(2, 1, 0.3).unwrap();
    verdict(
        worst_share > 0.95 && opm.mean < eps.mean,
        format!(
            "two arms: worst seed picks the better arm {:.1}% of episodes; partition L=8 K=2 d=0.2: OPM {:.1}±{:.1} vs eps-greedy {:.1}±{:.1}",
            worst_share * 100.0,
            opm.mean,
            opm.stderr,
            eps.mean,
            eps.stderr
        ),
    )
}

fn three_policies(environment: EnvironmentSpec) -> ExperimentConfig {
    ExperimentConfig {
        n: 1000,
        runs: 20,
        base_seed: Some(SEED),
        trace: TraceMode::Log,
        points_per_decade: 10,
        output_dir: None,
        environment,
        policies: vec![PolicyConfig::oracle(), PolicyConfig::opm(), PolicyConfig::epsilon_greedy(0.1)],
        diagnostics: Diagnostics::default(),
    }
}

fn returns(out: &ExperimentOutcome) -> [f64; 3] {
    let p = &out.summary.policies;
    [p[0].return_per_step.mean, p[1].return_per_step.mean, p[2].return_per_step.mean]
}

fn end_to_end_with_files(dir: &Path) -> Result<(), String> {
    fs::write(dir.join("net.txt"), "# u v ms\n0 1 3\n1 2 5\n0 2 4\n2 3 1\n1 3 7\n").map_err(|e| e.to_string())?;
    fs::write(dir.join("ratings.txt"), "0 0\n0 2\n1 1\n2 0\n2 1\n3 3\n").map_err(|e| e.to_string())?;
    fs::write(dir.join("genres.txt"), "0 0\n1 1\n2 0,1\n3 2\n").map_err(|e| e.to_string())?;
    let configs = [
        ("latency.toml", "[environment]\nkind = \"latency\"\nedge_list = \"net.txt\"\ncap = 10.0\n"),
        (
            "coverage.toml",
            "[environment]\nkind = \"user_coverage\"\nratings = \"ratings.txt\"\ncoverage = \"genres.txt\"\n",
        ),
    ];
    for (name, env) in configs {
        let text = format!("n = 50\nruns = 2\nbase_seed = 1\n{env}\n[[policies]]\nkind = \"opm\"\n");
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| e.to_string())?;
        let cfg = ExperimentConfig::load(&path).map_err(|e| e.to_string())?;
        let out_dir = dir.join(name.trim_end_matches(".toml"));
        run_experiment(&cfg, &RunOptions::default(), Some(&out_dir)).map_err(|e| e.to_string())?;
        if !out_dir.join("opm").join("run_0001.csv").exists() {
            return Err(format!("{name}: missing run output"));
        }
    }
    Ok(())
}

fn criterion_10() -> Verdict {
    let latency = execute(
        &three_policies(EnvironmentSpec::Latency {
            edge_list: None,
            synthetic: Some(SyntheticGraph { nodes: 50, extra_edges: 60, max_latency: 20, seed: 1 }),
            cap: None,
        }),
        &RunOptions::default(),
    )
    .unwrap();
    let coverage = execute(
        &three_policies(EnvironmentSpec::UserCoverage {
            ratings: None,
            coverage: None,
            synthetic: Some(SyntheticRatings { users: 200, items: 40, topics: 8, seed: 1 }),
        }),
        &RunOptions::default(),
    )
    .unwrap();
    let [lo, lp, le] = returns(&latency);
    let [co, cp, ce] = returns(&coverage);
    // latency is a cost, coverage a return
    let latency_ok = lo <= lp && lp <= le;
    let coverage_ok = co >= cp && cp >= ce;
    let dir = tempfile::tempdir().unwrap();
    let files = end_to_end_with_files(dir.path());
    verdict(
        latency_ok && coverage_ok && files.is_ok(),
        format!(
            "latency cost oracle/OPM/eps {lo:.2}/{lp:.2}/{le:.2} ({}); coverage return {co:.3}/{cp:.3}/{ce:.3} ({}); data files: {}",
            if latency_ok { "ordered" } else { "not ordered" },
            if coverage_ok { "ordered" } else { "not ordered" },
            files.err().unwrap_or_else(|| "ok".into())
        ),
    )
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "run.log" {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                files.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn criterion_11() -> Verdict {
    let mut cfg = flow_config(
        16,
        3.0,
        0.5,
        2000,
        4,
        vec![PolicyConfig::opm(), PolicyConfig::epsilon_greedy(0.1), PolicyConfig::oracle()],
    );
    cfg.trace = TraceMode::All;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg, &RunOptions { jobs: Some(1), ..Default::default() }, Some(a.path())).unwrap();
    run_experiment(&cfg, &RunOptions { jobs: Some(3), ..Default::default() }, Some(b.path())).unwrap();
    let (fa, fb) = (read_tree(a.path()), read_tree(b.path()));
    let csvs = fa.keys().filter(|k| k.ends_with(".csv")).count();
    verdict(fa == fb && csvs == 15, format!("{} files compared ({csvs} CSV), identical: {}", fa.len(), fa == fb))
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, v: Verdict| {
        println!("criterion {id:>2} {name:<28} {} {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    };
    let table = flow_table();
    report(1, "flow regret targets", criterion_1(&table));
    report(2, "flow bound column", criterion_2());
    report(3, "bound dominance, log growth", criterion_3(&table));
    report(4, "insensitivity to K", criterion_4(&table));
    report(5, "greedy vs vertex oracle", criterion_5());
    report(6, "movie coverage example", criterion_6());
    report(7, "exchange decomposition", criterion_7());
    report(8, "sequence inequality", criterion_8());
    report(9, "bandit sanity", criterion_9());
    report(10, "synthetic oracle dominance", criterion_10());
    report(11, "determinism", criterion_11());
    println!("acceptance: {} of 11 criteria failed", failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
