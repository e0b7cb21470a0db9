//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test -p dtlab --test acceptance -- 3 7`.

use std::time::Instant;

use rand::Rng as _;

use dtlab::harness::{
    self, gen_junta, gen_monotone, gen_random_tree, measure_error, read_records, run_experiment,
    Cell, Family, Reference, RunOptions, COLUMNS,
};
use dtlab::influence::{estimate_influence, exact_influence, EstimationBudget};
use dtlab::learners::{
    learn_adaptive, learn_topk, prune_to_size, ExactReference, GreedSchedule, LearnerConfig,
    SearchStats,
};
use dtlab::rng::{mix, seeded};
use dtlab::{AccessMode, DecisionTree, Oracle, Restriction, Target, TruthTable};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn exact_error(h: &DecisionTree, o: &Oracle) -> f64 {
    measure_error(h, Reference::Oracle(o), 0, 0).unwrap()
}

/// Checks the subproblem bound for one run and returns whether it held.
fn within_bound(stats: &SearchStats, cfg: &LearnerConfig) -> bool {
    stats.subproblems_explored as f64 <= cfg.schedule.subproblem_bound(cfg.depth(), cfg.s).max(1.0)
}

fn tree_oracle(t: DecisionTree, n: usize, mode: AccessMode, noise: f64, seed: u64) -> Oracle {
    Oracle::new(Target::tree(t, n).unwrap(), mode, noise, seed).unwrap()
}

fn exhaustive_n4() -> Outcome {
    let cfg = LearnerConfig::new(16, 0.1)
        .with_schedule(GreedSchedule::Constant(4))
        .with_depth(4);
    let mut failures = 0;
    let mut bound = true;
    for bits in 0u32..1 << 16 {
        let f = TruthTable::from_fn(4, |x| bits >> x & 1 == 1).unwrap();
        let o = Oracle::new(Target::Table(f), AccessMode::Mq, 0.0, bits as u64).unwrap();
        let (h, stats) = learn_topk(&o, &cfg).unwrap();
        if exact_error(&h, &o) != 0.0 {
            failures += 1;
        }
        bound &= within_bound(&stats, &cfg);
    }
    outcome(
        failures == 0 && bound,
        format!("{failures} of 65536 functions on n=4 learned with nonzero error"),
    )
}

fn proper_accuracy() -> Outcome {
    let (n, s, eps) = (16, 16, 0.05);
    let cfg = LearnerConfig::new(s, eps).with_schedule(GreedSchedule::Polylog(2.0));
    assert_eq!(cfg.depth(), 9);
    let mut good = 0;
    let mut max_size = 0;
    let mut bound = true;
    for trial in 0..50u64 {
        let t = gen_random_tree(s, n, mix(2, trial)).unwrap();
        let o = tree_oracle(t, n, AccessMode::Mq, 0.0, trial);
        let (h, stats) = learn_topk(&o, &cfg.clone().with_seed(trial)).unwrap();
        if exact_error(&h, &o) <= eps {
            good += 1;
        }
        max_size = max_size.max(h.size());
        bound &= within_bound(&stats, &cfg);
    }
    outcome(
        good >= 45 && max_size <= s && bound,
        format!("{good}/50 trials with error <= {eps}; largest hypothesis {max_size} leaves"),
    )
}

fn junta_recovery() -> Outcome {
    let n = 128;
    let cfg = LearnerConfig::new(16, 0.1)
        .with_schedule(GreedSchedule::Constant(8))
        .with_depth(4);
    let mut good = 0;
    let mut bound = true;
    for trial in 0..30u64 {
        let t = gen_junta(4, n, mix(3, trial)).unwrap();
        let junta = t.support();
        let o = tree_oracle(t, n, AccessMode::Mq, 0.0, trial);
        let (h, stats) = learn_topk(&o, &cfg.clone().with_seed(trial)).unwrap();
        let err = harness::sampled_error(&h, &o, 20_000, trial).unwrap();
        if err == 0.0 && h.support().is_subset(&junta) {
            good += 1;
        }
        bound &= within_bound(&stats, &cfg);
    }
    outcome(
        good >= 27 && bound,
        format!("{good}/30 hidden 4-juntas on n=128 recovered exactly on their own support"),
    )
}

fn monotone_examples_only() -> Outcome {
    let n = 12;
    let base = LearnerConfig::new(16, 0.1).with_schedule(GreedSchedule::Constant(2));
    let mut good = 0;
    let mut gaps = Vec::new();
    for trial in 0..30u64 {
        let f = gen_monotone(n, mix(4, trial)).unwrap();
        let mq = Oracle::new(Target::Table(f.clone()), AccessMode::Mq, 0.0, trial).unwrap();
        let ex = Oracle::new(Target::Table(f), AccessMode::ExOnly, 0.0, trial).unwrap();
        let cfg = base.clone().with_seed(trial);
        let (hm, _) = learn_topk(&mq, &cfg).unwrap();
        let (he, _) = learn_topk(&ex, &cfg.with_mode(AccessMode::ExOnly)).unwrap();
        let gap = exact_error(&he, &ex) - exact_error(&hm, &mq);
        if gap <= 0.05 {
            good += 1;
        }
        gaps.push(gap);
    }
    let worst = gaps.iter().cloned().fold(f64::MIN, f64::max);
    outcome(
        good >= 24,
        format!("{good}/30 monotone targets with examples-only gap <= 0.05 (worst gap {worst:.4})"),
    )
}

fn agnostic_proxy() -> Outcome {
    let (n, s, eta) = (14, 16, 0.05);
    let cfg = LearnerConfig::new(s, 0.05).with_schedule(GreedSchedule::Constant(2));
    let mut good = 0;
    for trial in 0..30u64 {
        let t = gen_random_tree(s, n, mix(5, trial)).unwrap();
        let o = tree_oracle(t, n, AccessMode::Mq, eta, trial);
        let (h, _) = learn_topk(&o, &cfg.clone().with_seed(trial)).unwrap();
        if exact_error(&h, &o) <= eta + 0.05 {
            good += 1;
        }
    }
    outcome(
        good >= 24,
        format!("{good}/30 corrupted (eta={eta}) size-16 targets learned within eta + 0.05"),
    )
}

fn size64_schedules() -> Vec<(&'static str, GreedSchedule)> {
    vec![
        ("constant(2)", GreedSchedule::Constant(2)),
        ("two_phase(4,1)", GreedSchedule::two_phase(4, 1, 64)),
        ("polylog(0.5)", GreedSchedule::Polylog(0.5)),
    ]
}

fn subproblem_accounting() -> Outcome {
    let (n, s) = (16, 64);
    let mut runs = 0;
    let mut below = 0;
    let mut bound = true;
    for trial in 0..10u64 {
        let t = gen_random_tree(s, n, mix(6, trial)).unwrap();
        let o = tree_oracle(t, n, AccessMode::Mq, 0.0, trial);
        for (_, schedule) in size64_schedules() {
            let cfg = LearnerConfig::new(s, 0.1)
                .with_schedule(schedule)
                .with_depth(6)
                .with_seed(trial);
            let (_, stats) = learn_adaptive_or_topk(&o, &cfg);
            let product = cfg.schedule.subproblem_bound(cfg.depth(), s);
            runs += 1;
            if (stats.subproblems_explored as f64) < product {
                below += 1;
            }
            bound &= within_bound(&stats, &cfg);
        }
    }
    outcome(
        bound && 2 * below >= runs,
        format!("bound held on every run: {bound}; memoised count below the product in {below}/{runs} runs"),
    )
}

fn learn_adaptive_or_topk(o: &Oracle, cfg: &LearnerConfig) -> (DecisionTree, SearchStats) {
    match cfg.schedule {
        GreedSchedule::TwoPhase { .. } => learn_adaptive(o, cfg).unwrap(),
        _ => learn_topk(o, cfg).unwrap(),
    }
}

fn calibration() -> Outcome {
    let b = EstimationBudget::new(0.05, 0.01).unwrap();
    let mut violations = 0;
    for run in 0..200u64 {
        let mut r = seeded(mix(7, run));
        let n = r.gen_range(2..=12);
        let f = gen_random_tree(r.gen_range(1..=16).min(1 << n), n, run)
            .unwrap()
            .to_table(n)
            .unwrap();
        let exact = exact_influence(&f);
        let var = r.gen_range(0..n);
        let o = Oracle::new(Target::Table(f), AccessMode::Mq, 0.0, run).unwrap();
        let est = estimate_influence(&o, &Restriction::empty(), var, &b, &mut r).unwrap();
        if (est - exact.scores[var]).abs() > b.tau() {
            violations += 1;
        }
    }
    outcome(
        violations <= 4,
        format!("{violations}/200 estimates outside tau = 0.05"),
    )
}

/// Every pruning of `t`: each internal node either stays or becomes a leaf
/// with the majority label of its subcube.
fn all_prunings(t: &DecisionTree, f: &TruthTable, pi: Restriction) -> Vec<DecisionTree> {
    let collapsed = DecisionTree::Leaf(f.restrict(&pi).unwrap().bias() > 0.5);
    match t {
        DecisionTree::Leaf(_) => vec![t.clone()],
        DecisionTree::Node { var, zero, one } => {
            let zs = all_prunings(zero, f, pi.with(*var, false).unwrap());
            let os = all_prunings(one, f, pi.with(*var, true).unwrap());
            let mut out = vec![collapsed];
            for z in &zs {
                for o in &os {
                    out.push(DecisionTree::node(*var, z.clone(), o.clone()));
                }
            }
            out
        }
    }
}

fn pruning_optimality() -> Outcome {
    let n = 8;
    let mut mismatches = 0;
    let mut checks = 0;
    for trial in 0..100u64 {
        let mut r = seeded(mix(8, trial));
        let leaves = r.gen_range(1..=10);
        let t = gen_random_tree(leaves, n, trial).unwrap();
        // Reference: the tree's own function with a fifth of its bits flipped.
        let mut f = t.to_table(n).unwrap();
        for x in 0..f.len() {
            if r.gen_bool(0.2) {
                f.set(x, !f.get(x));
            }
        }
        let candidates = all_prunings(&t, &f, Restriction::empty());
        for s in 1..=leaves {
            let brute = candidates
                .iter()
                .filter(|p| p.size() <= s)
                .map(|p| p.to_table(n).unwrap().distance(&f).unwrap())
                .fold(f64::INFINITY, f64::min);
            let p = prune_to_size(&t, &mut ExactReference(&f), s).unwrap();
            let actual = p.tree.to_table(n).unwrap().distance(&f).unwrap();
            checks += 1;
            let valid = p.tree.size() <= s && candidates.contains(&p.tree);
            if !valid || (actual - brute).abs() > 1e-12 || (p.error - brute).abs() > 1e-12 {
                mismatches += 1;
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} mismatches over {checks} (tree, budget) pairs"),
    )
}

fn small_matrix() -> Vec<Cell> {
    let mut cells = Vec::new();
    for algo in ["greedy", "topk", "adaptive", "dp"] {
        let mut c = Cell::new(Family::Tree, 10, algo.parse().unwrap(), 0.1);
        c.s_target = Some(8);
        c.depth_cap = Some(5);
        cells.push(c);
    }
    let mut j = Cell::new(Family::Junta, 40, "topk".parse().unwrap(), 0.1);
    j.k_junta = Some(3);
    j.k1 = Some(3);
    cells.push(j);
    let mut m = Cell::new(Family::Monotone, 10, "topk".parse().unwrap(), 0.1);
    m.s_target = Some(8);
    m.k1 = Some(2);
    m.mode = AccessMode::ExOnly;
    cells.push(m);
    let mut noisy = Cell::new(Family::Tree, 12, "greedy".parse().unwrap(), 0.1);
    noisy.s_target = Some(8);
    noisy.noise = 0.05;
    cells.push(noisy);
    cells
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cells = small_matrix();
    let opts = RunOptions {
        omit_timing: true,
        resume: false,
    };
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let rows = run_experiment(&cells, 3, 42, &a, opts).unwrap();
    run_experiment(&cells, 3, 42, &b, opts).unwrap();
    let same = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();
    let complete = rows.len() == cells.len() * 3;
    outcome(
        same && complete,
        format!("{} rows; reruns byte-identical: {same}", rows.len()),
    )
}

fn schedule_sweep() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let mut cells = Vec::new();
    for (algo, k1, k2) in [
        ("topk", Some(2), None),
        ("adaptive", Some(4), Some(1)),
        ("topk", Some(6), None),
    ] {
        let mut c = Cell::new(Family::Tree, 16, algo.parse().unwrap(), 0.1);
        c.s_target = Some(64);
        c.k1 = k1;
        c.k2 = k2;
        c.depth_cap = Some(7);
        cells.push(c);
    }
    let trials = 3;
    let rows = run_experiment(&cells, trials, 10, &out, RunOptions::default()).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let header_ok = text.lines().next() == Some(COLUMNS.join(",").as_str());
    let reread = read_records(&out).unwrap();
    let well_formed = header_ok
        && reread == rows
        && rows.len() == cells.len() * trials
        && rows
            .iter()
            .all(|r| r.hyp_size <= 64 && r.subproblems >= 1 && (0.0..=1.0).contains(&r.err));
    let mut summary = String::new();
    for (i, c) in cells.iter().enumerate() {
        let mine: Vec<_> = rows.iter().skip(i * trials).take(trials).collect();
        let err = mine.iter().map(|r| r.err).sum::<f64>() / trials as f64;
        let subs = mine.iter().map(|r| r.subproblems).sum::<usize>() / trials;
        summary += &format!(
            " {}(k1={:?}): err {err:.4}, subproblems {subs};",
            c.algo.as_str(),
            c.k1
        );
    }
    outcome(
        well_formed,
        format!("{} rows, well-formed: {well_formed};{summary}", rows.len()),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("exhaustive correctness on n=4", exhaustive_n4),
        ("proper-learning accuracy", proper_accuracy),
        ("junta recovery", junta_recovery),
        ("monotone examples-only", monotone_examples_only),
        ("agnostic proxy", agnostic_proxy),
        ("subproblem accounting", subproblem_accounting),
        ("estimator calibration", calibration),
        ("pruning optimality", pruning_optimality),
        ("determinism", determinism),
        ("schedule sweep", schedule_sweep),
    ];
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .filter(|&i| (1..=criteria.len()).contains(&i))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !selected.is_empty() && !selected.contains(&(i + 1)) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {status} {name}: {} [{secs:.1}s]",
            i + 1,
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
