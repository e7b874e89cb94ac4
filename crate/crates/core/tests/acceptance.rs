//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.
//!
//! `cargo test -p mabsel-core --test acceptance`

mod common;

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mabsel::bandit::sample_beta;
use mabsel::engine::{audit_run, check_test_isolation, run_mabs, EngineConfig, EvalSets, RewardBaseline};
use mabsel::harness::{
    bandit_bench, prepare_split, run_experiment, split_mixed, split_target, BenchConfig, ExperimentConfig, Policy,
    SplitSpec,
};
use mabsel::learner::fit_ridge;
use mabsel::partition::build_cluster_set;
use mabsel::pool::{generate_synthetic, SyntheticConfig};
use mabsel::{PartitionSpec, SeedStreams};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, ContinuousCDF};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn beta_sampler() -> Check {
    let mut rng = SeedStreams::new(1).stream(0);
    let n = 100_000;
    let mut draws: Vec<f64> = (0..n).map(|_| sample_beta(2.0, 5.0, &mut rng).unwrap()).collect();
    draws.sort_by(f64::total_cmp);
    let cdf = Beta::new(2.0, 5.0).unwrap();
    let ks = draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf.cdf(x);
            (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs())
        })
        .fold(0.0, f64::max);

    let moments = |a: f64, b: f64, rng: &mut ChaCha8Rng| {
        let xs: Vec<f64> = (0..n).map(|_| sample_beta(a, b, rng).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        (mean, var)
    };
    let (m51, _) = moments(5.0, 1.0, &mut rng);
    let (_, v23) = moments(2.0, 3.0, &mut rng);
    let (m11, _) = moments(1.0, 1.0, &mut rng);
    ensure(
        ks < 0.01 && (m51 - 5.0 / 6.0).abs() < 0.01 && (v23 - 0.04).abs() < 0.005 && (m11 - 0.5).abs() < 0.01,
        format!("KS {ks:.4}; Beta(5,1) mean {m51:.4}; Beta(2,3) var {v23:.4}; Beta(1,1) mean {m11:.4}"),
    )
}

fn thompson_regret() -> Check {
    let rows = bandit_bench(&BenchConfig::new(vec![0.9, 0.5, 0.1], 2000, 50, 0)).map_err(|e| e.to_string())?;
    let ts = rows.iter().find(|r| r.policy == "thompson").unwrap();
    let eg = rows.iter().find(|r| r.policy.starts_with("epsilon_greedy")).unwrap();
    ensure(
        ts.best_arm_rate >= 0.70 && ts.mean_regret < eg.mean_regret,
        format!(
            "thompson best-arm rate {:.3}, regret {:.1}; epsilon-greedy regret {:.1}",
            ts.best_arm_rate, ts.mean_regret, eg.mean_regret
        ),
    )
}

fn ridge_oracle() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=50);
        let m = rng.random_range(1..=10);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-20.0..20.0)).collect();
        let lambda = rng.random_range(0.01..10.0);
        let x = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
        let model = fit_ridge(&x, &DVector::from_vec(y.clone()), lambda).map_err(|e| e.to_string())?;
        let (w, _) = common::oracle_ridge(&rows, &y, lambda);
        for (a, b) in model.weights.iter().zip(&w) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst < 1e-8, format!("max weight deviation {worst:.2e} over 100 instances"))
}

fn bookkeeping() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for run in 0..20u64 {
        let mut synth = SyntheticConfig::uniform(rng.random_range(2..5), rng.random_range(20..60), [20.0, 80.0], 0.3);
        synth.feature_dim = rng.random_range(2..12);
        let pool = generate_synthetic(&synth, run).map_err(|e| e.to_string())?;
        let ids = split_mixed(&pool, &common::wide_validation_split(), run).map_err(|e| e.to_string())?;
        let prep = prepare_split(&pool, &ids).map_err(|e| e.to_string())?;
        let specs = [
            PartitionSpec::new("dataset"),
            PartitionSpec::new("diagnosis"),
            PartitionSpec::with_eta("age", rng.random_range(1..9)),
        ];
        let mut cfg = EngineConfig::new(rng.random_range(1..=prep.hidden.len() + 5), rng.random_range(0.0..3.0), run);
        if run % 4 == 3 {
            cfg.reward_baseline = RewardBaseline::Previous;
        }

        let mut hidden = prep.hidden.clone();
        let mut cset = build_cluster_set(&hidden, &specs).map_err(|e| e.to_string())?;
        let with = run_mabs(&mut hidden, &mut cset, &prep.evals, &cfg).map_err(|e| e.to_string())?;
        audit_run(&with, &hidden, cfg.reward_baseline).map_err(|e| format!("run {run}: {e}"))?;
        cset.check_invariants(&hidden).map_err(|e| format!("run {run}: {e}"))?;
        if with.ledger.len() > cfg.budget {
            return Err(format!("run {run}: {} steps over budget {}", with.ledger.len(), cfg.budget));
        }

        let mut hidden = prep.hidden.clone();
        let mut cset = build_cluster_set(&hidden, &specs).map_err(|e| e.to_string())?;
        let no_test = EvalSets::new(prep.evals.validation.clone(), None);
        let without = run_mabs(&mut hidden, &mut cset, &no_test, &cfg).map_err(|e| e.to_string())?;
        check_test_isolation(&with, &without).map_err(|e| format!("run {run}: {e}"))?;
    }
    Ok("20 randomized runs: posteriors, consumption, budget and test isolation all consistent".into())
}

fn policies(names: &[&str]) -> Vec<Policy> {
    names.iter().map(|p| p.parse().unwrap()).collect()
}

fn headline() -> Check {
    let pool = common::headline_pool();
    let singles = ["mabs[dataset]", "mabs[sex]", "mabs[diagnosis]", "mabs[age]"];
    let mut names = vec!["random", "mabs"];
    names.extend(singles);
    let mut cfg = ExperimentConfig::new(policies(&names), 300);
    cfg.repeats = 20;
    cfg.split = common::wide_validation_split();
    cfg.checkpoint_interval = 50;
    let hidden = pool.len() - (pool.len() as f64 * 0.1).round() as usize - (pool.len() as f64 * 0.4).round() as usize;
    if hidden != 1200 {
        return Err(format!("hidden pool has {hidden} samples"));
    }
    let bundle = run_experiment(&pool, &cfg).map_err(|e| e.to_string())?;
    let at = |p: &str, t: usize| bundle.mean_test_at(p, t).unwrap();

    let mut detail = Vec::new();
    let mut ok = true;
    for t in [100, 200, 300] {
        let (m, r) = (at("mabs[dataset]", t), at("random", t));
        ok &= m > r;
        detail.push(format!("t={t}: mabs[dataset] {m:.4} vs random {r:.4}"));
    }
    let (best_name, best) = singles
        .iter()
        .map(|p| (*p, at(p, 300)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let all = at("mabs", 300);
    ok &= best - all <= 0.05;
    detail.push(format!("mabs(all) {all:.4} vs best single {best_name} {best:.4}"));
    ensure(ok, detail.join("; "))
}

fn null_safety() -> Check {
    let pool = common::null_pool();
    let mut cfg = ExperimentConfig::new(policies(&["random", "mabs", "mabs[dataset]"]), 300);
    cfg.repeats = 20;
    cfg.split = common::wide_validation_split();
    cfg.checkpoint_interval = 100;
    let bundle = run_experiment(&pool, &cfg).map_err(|e| e.to_string())?;
    let at = |p: &str| bundle.mean_test_at(p, 300).unwrap();
    let (r, all, ds) = (at("random"), at("mabs"), at("mabs[dataset]"));
    ensure(
        (all - r).abs() <= 0.03 && (ds - r).abs() <= 0.03,
        format!("random {r:.4}; mabs(all) {all:.4}; mabs[dataset] {ds:.4}"),
    )
}

fn split_arithmetic() -> Check {
    let mut synth = SyntheticConfig::uniform(4, 250, [20.0, 80.0], 0.0);
    synth.feature_dim = 2;
    let pool = generate_synthetic(&synth, 0).map_err(|e| e.to_string())?;
    let ids = split_mixed(&pool, &SplitSpec::default(), 0).map_err(|e| e.to_string())?;
    let sizes = (ids.validation.len(), ids.test.len(), ids.hidden.len());
    let all: HashSet<u64> = ids.validation.iter().chain(&ids.test).chain(&ids.hidden).copied().collect();
    if sizes != (20, 480, 500) || all.len() != 1000 {
        return Err(format!("mixed split sizes {sizes:?}, {} distinct ids", all.len()));
    }
    for target in ["ds0", "ds1", "ds2", "ds3"] {
        for seed in 0..5 {
            let ids = split_target(&pool, "dataset", target, 0.1, seed).map_err(|e| e.to_string())?;
            let j = pool.column_index("dataset").unwrap();
            let name = |id: &u64| pool.schema()[j].display_value(pool.meta(*id).unwrap()[j]);
            if ids.hidden.iter().any(|id| name(id) == target)
                || ids.validation.iter().chain(&ids.test).any(|id| name(id) != target)
            {
                return Err(format!("target {target} leaked (seed {seed})"));
            }
        }
    }
    Ok(format!("mixed split {sizes:?}; target splits keep the target out of the hidden pool"))
}

fn determinism() -> Check {
    let mut synth = common::headline_synthetic();
    for d in &mut synth.datasets {
        d.samples = 150;
    }
    let mut cfg = ExperimentConfig::new(policies(&["mabs", "mabs[dataset]", "random", "label_prior"]), 100);
    cfg.repeats = 4;
    cfg.base_seed = 17;
    cfg.split = common::wide_validation_split();
    let csv = || -> Result<Vec<u8>, String> {
        let pool = generate_synthetic(&synth, 5).map_err(|e| e.to_string())?;
        let bundle = run_experiment(&pool, &cfg).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        bundle.write_curves_csv(&mut buf).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    let (a, b) = (csv()?, csv()?);
    ensure(a == b && !a.is_empty(), format!("two runs wrote {} and {} bytes, identical: {}", a.len(), b.len(), a == b))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Check); 8] = [
        ("1 beta sampler", Duration::from_secs(5), beta_sampler),
        ("2 thompson regret", Duration::from_secs(30), thompson_regret),
        ("3 ridge oracle", Duration::from_secs(5), ridge_oracle),
        ("4 run bookkeeping", Duration::from_secs(30), bookkeeping),
        ("5 headline synthetic", Duration::from_secs(180), headline),
        ("6 uninformative metadata", Duration::from_secs(120), null_safety),
        ("7 split arithmetic", Duration::from_secs(1), split_arithmetic),
        ("8 determinism", Duration::from_secs(600), determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, limit, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; took {elapsed:.1?}, limit {limit:?}")),
            Err(d) => (false, d),
        };
        failed += usize::from(!pass);
        println!(
            "{} criterion {name} ({:.2}s): {detail}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
