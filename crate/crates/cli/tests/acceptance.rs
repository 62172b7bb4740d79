//! End-to-end acceptance checks, one test per criterion. Each test prints a
//! single `ACCEPTANCE <n> PASS|FAIL` line (written past the test harness's
//! output capture) and then asserts the result.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use clap::Parser;
use tempfile::TempDir;

use vcsim::{execute, Cli};
use vcsim_core::model::{task_cost, ClassMix, ExecutionPlan, Task};
use vcsim_core::policy::{split_task, PolicyConfig};
use vcsim_core::reliability::{
    build_chain, build_lut, escalation_prob, failure_cdf, monte_carlo_failure_cdf, mttf, quantile_with_doubling,
    ChainParams, ClassRange, Lut, DEFAULT_T_MTTR,
};
use vcsim_core::{Money, VuClass};

fn verdict(n: u32, pass: bool, detail: &str) {
    let line = format!("ACCEPTANCE {n:>2} {}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().write_all(line.as_bytes());
    assert!(pass, "criterion {n} failed: {detail}");
}

fn vcsim(out: &Path, args: &[&str]) {
    let mut argv = vec!["vcsim", "--out", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    execute(&Cli::try_parse_from(argv).unwrap()).unwrap();
}

fn csv_rows(path: &Path) -> Vec<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines.map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect()).collect()
}

fn num(row: &BTreeMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

/// LUT ranges of the base experiment.
fn base_ranges() -> Vec<ClassRange> {
    ClassRange::defaults_for(&ClassMix::default())
}

/// Full paired sweep at the base configuration, shared by criteria 9–12.
fn compare_dir() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        vcsim(dir.path(), &["compare", "--jobs", "2"]);
        dir
    })
    .path()
}

#[test]
fn c01_escalation_probability() {
    // (mean residency, t_mttr, n, j) with exact rational answers.
    let cases = [(120.0, 10, 3, 1, 1.0 / 7.0), (200.0, 5, 2, 0, 1.0 / 21.0), (200.0, 5, 2, 1, 1.0 / 41.0)];
    let worst = cases
        .iter()
        .map(|&(mean, t, n, j, want)| (escalation_prob(&ChainParams::new(n, mean, t), j).unwrap() - want).abs())
        .fold(0.0, f64::max);
    verdict(1, worst <= 1e-12, &format!("max |p_j - exact| = {worst:.2e} (tolerance 1e-12)"));
}

#[test]
fn c02_chain_well_formed() {
    let mut problems = Vec::new();
    for r in base_ranges() {
        for n in r.n_min..=r.n_max {
            let params = ChainParams::new(n, r.mean_residency_min, DEFAULT_T_MTTR);
            let chain = build_chain(params).unwrap();
            for i in 0..chain.state_count() {
                let sum: f64 = chain.row(i).iter().map(|&(_, p)| p).sum();
                if (sum - 1.0).abs() > 1e-12 {
                    problems.push(format!("{} n={n} row {i} sums to {sum}", r.class));
                }
            }
            let failed = chain.failed_index();
            if chain.transition(failed, failed) != 1.0 {
                problems.push(format!("{} n={n}: G_n not absorbing", r.class));
            }
            let cdf = failure_cdf(&chain, 50_000);
            if cdf.values[0] != 0.0 || cdf.values.windows(2).any(|w| w[1] < w[0]) {
                problems.push(format!("{} n={n}: F not monotone from 0", r.class));
            }
        }
    }
    verdict(2, problems.is_empty(), &format!("8 chains checked; issues: {problems:?}"));
}

#[test]
fn c03_absorption() {
    let chain = build_chain(ChainParams::new(3, 120.0, DEFAULT_T_MTTR)).unwrap();
    let f = *failure_cdf(&chain, 10_000_000).values.last().unwrap();
    verdict(3, f > 0.999, &format!("F_SRT,3(1e7 min) = {f:.6} (> 0.999)"));
}

#[test]
fn c04_monte_carlo_oracle() {
    let mut worst: (f64, String) = (0.0, String::new());
    let mut report = Vec::new();
    for r in base_ranges() {
        for n in r.n_min..=r.n_max {
            let params = ChainParams::new(n, r.mean_residency_min, DEFAULT_T_MTTR);
            let horizon = quantile_with_doubling(&params, 0.99).unwrap();
            let analytic = failure_cdf(&build_chain(params).unwrap(), horizon);
            let mc = monte_carlo_failure_cdf(&params, 100_000, horizon, 4).unwrap();
            let d = analytic.sup_distance(&mc);
            report.push(format!("{}{n}={d:.3}", r.class));
            if d > worst.0 {
                worst = (d, format!("{} n={n}", r.class));
            }
        }
    }
    verdict(
        4,
        worst.0 <= 0.02,
        &format!(
            "sup-norm analytic vs Monte-Carlo (1e5 trials) worst {:.3} at {} (tolerance 0.02); {}",
            worst.0,
            worst.1,
            report.join(" ")
        ),
    );
}

#[test]
fn c05_mttf_anchors() {
    let m = |n, mean| mttf(&ChainParams::new(n, mean, DEFAULT_T_MTTR)).unwrap() as f64;
    let (srt, mrt, lrt) = (m(3, 120.0), m(3, 200.0), m(3, 400.0));
    let checks = [
        ("SRT", srt, 1500.0, 2900.0),
        ("MRT", mrt, 10_000.0, 18_000.0),
        ("LRT", lrt, 117_200.0 * 0.6, 117_200.0 * 1.4),
    ];
    let detail: Vec<String> = checks
        .iter()
        .map(|(c, v, lo, hi)| format!("{c} {v} in [{lo}, {hi}]: {}", if (lo..=hi).contains(&v) { "ok" } else { "out" }))
        .collect();
    let pass = checks.iter().all(|(_, v, lo, hi)| (lo..=hi).contains(&v));
    verdict(5, pass, &format!("t_mttr = {DEFAULT_T_MTTR}; {}", detail.join("; ")));
}

fn example_task() -> Task {
    Task::new(0, 0, 2100, 100_000, Money::from_units(10_000)).unwrap()
}

#[test]
fn c06_mt99r_anchors() {
    let lut = build_lut(&base_ranges(), DEFAULT_T_MTTR, 0.01).unwrap();
    let m2 = lut.get(VuClass::Mrt, 2).unwrap();
    let m3 = lut.get(VuClass::Mrt, 3).unwrap();
    let cfg = PolicyConfig::default();
    let g = |avail| split_task(&example_task(), VuClass::Mrt, avail, &lut, &cfg, 0).map(|p| p.checkpoints);
    let g2 = g(2);
    let mut only3 = cfg.clone();
    only3.bounds[VuClass::Mrt.index()] = (3, 4);
    let g3 = split_task(&example_task(), VuClass::Mrt, 3, &lut, &only3, 0).map(|p| p.checkpoints);
    let pass = (200..=420).contains(&m2) && (500..=900).contains(&m3) && g2 == Some(7) && g3 == Some(3);
    verdict(
        6,
        pass,
        &format!("MT99R(MRT,2) = {m2} (want [200, 420]), MT99R(MRT,3) = {m3} (want [500, 900]), 2100-min task g = {g2:?} / {g3:?} (want 7 / 3)"),
    );
}

#[test]
fn c07_cost_arithmetic() {
    // MT99R values of the worked example: 300 min for two MRT VUs, 700 for three.
    let mut lut = Lut::new();
    for (n, m) in [(2, 300), (3, 700), (4, 1500)] {
        lut.insert(VuClass::Mrt, n, m, ChainParams::new(n, 200.0, DEFAULT_T_MTTR), 0.01);
    }
    let cfg = PolicyConfig::default();
    let two = split_task(&example_task(), VuClass::Mrt, 2, &lut, &cfg, 0).unwrap();
    let mut only3 = cfg.clone();
    only3.bounds[VuClass::Mrt.index()] = (3, 4);
    let three = split_task(&example_task(), VuClass::Mrt, 3, &lut, &only3, 0).unwrap();
    let cost = |p: &ExecutionPlan| task_cost(p.redundancy, p.checkpoints as u64 * p.checkpoint_len_min, cfg.k);
    let (c2, c3) = (cost(&two), cost(&three));
    let pass = (two.checkpoints, two.checkpoint_len_min, c2) == (7, 300, Money::from_units(4200))
        && (three.checkpoints, three.checkpoint_len_min, c3) == (3, 700, Money::from_units(6300));
    verdict(
        7,
        pass,
        &format!(
            "x=2: {}x{} min -> {c2}; x=3: {}x{} min -> {c3} (want 4200 and 6300)",
            two.checkpoints, two.checkpoint_len_min, three.checkpoints, three.checkpoint_len_min
        ),
    );
}

#[test]
fn c08_ordering_ranking() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("orderings.toml");
    fs::write(&cfg, "[run]\nreplications = 20\norderings = [\"EP\", \"RV\", \"RPE\", \"GUS\", \"EDD\", \"FCFS\"]\n")
        .unwrap();
    vcsim(dir.path(), &["run", "--config", cfg.to_str().unwrap()]);
    let rows = csv_rows(&dir.path().join("run_summary.csv"));
    let mean = |label: &str| num(rows.iter().find(|r| r["policy"] == label).unwrap(), "profit_mean");
    let ep = mean("proposed-EP");
    let weak = ["RV", "RPE", "GUS"].map(|h| (h, mean(&format!("proposed-{h}"))));
    let strict = ["EDD", "FCFS"].map(|h| (h, mean(&format!("proposed-{h}"))));
    let pass = weak.iter().all(|(_, m)| ep >= *m) && strict.iter().all(|(_, m)| ep > *m);
    let others: Vec<String> = weak.iter().chain(&strict).map(|(h, m)| format!("{h} {m:.0}")).collect();
    verdict(8, pass, &format!("20 seeds, mean profit EP {ep:.0} vs {}", others.join(", ")));
}

/// One week of daily occupancy histograms, roughly 70/20/10 short/medium/long.
fn histogram_trace() -> String {
    let mut out = String::from("date,stay_bucket_min_lo,stay_bucket_min_hi,count\n");
    for day in 1..=7 {
        for (lo, hi, count) in [(10, 60, 260), (60, 180, 740), (180, 360, 290), (360, 900, 140)] {
            out.push_str(&format!("2024-05-0{day},{lo},{hi},{count}\n"));
        }
    }
    out
}

#[test]
fn c09_proposed_beats_baseline() {
    let rows = csv_rows(&compare_dir().join("compare.csv"));
    let gain = num(&rows[0], "gain_pct");
    let runs = num(&rows[0], "runs");

    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("parking.csv"), histogram_trace()).unwrap();
    let cfg = dir.path().join("ingest.toml");
    fs::write(
        &cfg,
        "[workload]\nparking_trace = \"parking.csv\"\n[run]\nreplications = 20\nmodes = [\"proposed\", \"sota\"]\n",
    )
    .unwrap();
    vcsim(dir.path(), &["run", "--config", cfg.to_str().unwrap()]);
    let summary = csv_rows(&dir.path().join("run_summary.csv"));
    let mean = |label: &str| num(summary.iter().find(|r| r["policy"] == label).unwrap(), "profit_mean");
    let (p, s) = (mean("proposed-EP"), mean("sota-EP"));

    let pass = runs >= 20.0 && gain >= 10.0 && p > s;
    verdict(
        9,
        pass,
        &format!("{runs} paired seeds: proposed +{gain:.1}% over baseline (want >= 10%); ingested histogram trace: proposed {p:.0} vs baseline {s:.0}"),
    );
}

fn series(path: &Path, axis: &str, value: &str, filter: impl Fn(&BTreeMap<String, String>) -> bool) -> Vec<(f64, f64)> {
    csv_rows(path).iter().filter(|r| filter(r)).map(|r| (num(r, axis), num(r, value))).collect()
}

#[test]
fn c10_supply_and_scale_monotonicity() {
    let dir = compare_dir();
    let proposed = |r: &BTreeMap<String, String>| r["policy"] == "proposed-EP";
    let by_m = series(&dir.join("profit_vs_vus.csv"), "num_vus", "profit_mean", proposed);
    let by_n = series(&dir.join("profit_vs_tasks.csv"), "num_tasks", "profit_mean", proposed);
    let monotone = |s: &[(f64, f64)]| s.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1);
    let fmt = |s: &[(f64, f64)]| s.iter().map(|(x, y)| format!("{x}:{:.1}M", y / 1e6)).collect::<Vec<_>>().join(" ");
    let pass = by_m.len() == 5 && by_n.len() == 3 && monotone(&by_m) && monotone(&by_n);
    verdict(10, pass, &format!("profit vs M [{}]; profit vs N [{}]", fmt(&by_m), fmt(&by_n)));
}

#[test]
fn c11_residency_and_exec_trends() {
    let dir = compare_dir();
    let pct = "profit_pct_of_offered_mean";
    let exec: Vec<Vec<(f64, f64)>> = VuClass::ALL
        .iter()
        .map(|c| {
            series(&dir.join("profit_pct_vs_exec.csv"), "mean_exec_min", pct, |r| r["population"] == c.to_string())
        })
        .collect();
    let res: Vec<Vec<(f64, f64)>> = VuClass::ALL
        .iter()
        .map(|c| {
            series(&dir.join("profit_pct_vs_residency.csv"), "residency_multiplier", pct, |r| {
                r["population"] == c.to_string()
            })
        })
        .collect();
    let mixed =
        series(&dir.join("profit_pct_vs_residency.csv"), "residency_multiplier", pct, |r| r["population"] == "mixed");

    let decreasing = |s: &[(f64, f64)]| s.len() > 1 && s.windows(2).all(|w| w[0].1 > w[1].1);
    let increasing = |s: &[(f64, f64)]| s.len() > 1 && s.windows(2).all(|w| w[0].1 < w[1].1);
    let ordered = |s: &[Vec<(f64, f64)>]| (0..s[0].len()).all(|i| s[2][i].1 >= s[1][i].1 && s[1][i].1 >= s[0][i].1);
    let pass = exec.iter().all(|s| decreasing(s))
        && res.iter().all(|s| increasing(s))
        && increasing(&mixed)
        && ordered(&exec)
        && ordered(&res);
    let fmt = |s: &[(f64, f64)]| s.iter().map(|(_, y)| format!("{y:.1}")).collect::<Vec<_>>().join("/");
    let names = ["SRT", "MRT", "LRT"];
    let e: Vec<String> = exec.iter().zip(names).map(|(s, n)| format!("{n} {}", fmt(s))).collect();
    let r: Vec<String> = res.iter().zip(names).map(|(s, n)| format!("{n} {}", fmt(s))).collect();
    verdict(
        11,
        pass,
        &format!("profit% vs exec [{}]; vs residency [{}; mixed {}]", e.join(", "), r.join(", "), fmt(&mixed)),
    );
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn c12_compare_is_deterministic() {
    let first = files_under(compare_dir());
    let again = tempfile::tempdir().unwrap();
    vcsim(again.path(), &["compare", "--jobs", "1"]);
    let second = files_under(again.path());
    let differing: Vec<_> = first.keys().filter(|k| first.get(*k) != second.get(*k)).collect();
    let pass = !first.is_empty() && first.len() == second.len() && differing.is_empty();
    verdict(
        12,
        pass,
        &format!("{} output files, {} differ between --jobs 2 and --jobs 1", first.len(), differing.len()),
    );
}
