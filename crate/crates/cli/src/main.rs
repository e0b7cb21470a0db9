use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use dtlab::harness::{self, Reference, RunOptions};
use dtlab::influence::{
    estimate_influences, estimate_influences_monotone, exact_influence, EstimationBudget,
};
use dtlab::learners::{
    self, default_phase_split, dp, Algorithm, DpCandidates, GreedSchedule, LearnerConfig,
};
use dtlab::tree::{parse_tree_file, tree_file_string};
use dtlab::{rng, AccessMode, Oracle, Restriction, Target};

#[derive(Parser)]
#[command(
    name = "dtlab",
    version,
    about = "Learn decision trees from membership queries or random examples"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Tree,
    Junta,
    Monotone,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Greedy,
    Topk,
    Adaptive,
    Dp,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Greedy => Algorithm::Greedy,
            AlgoArg::Topk => Algorithm::Topk,
            AlgoArg::Adaptive => Algorithm::Adaptive,
            AlgoArg::Dp => Algorithm::Dp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Mq,
    Ex,
}

impl From<ModeArg> for AccessMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Mq => AccessMode::Mq,
            ModeArg::Ex => AccessMode::ExOnly,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a target function.
    Gen {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// Leaves of a random tree.
        #[arg(long)]
        s: Option<usize>,
        /// Relevant variables of a junta.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn a hypothesis tree for a target.
    Learn {
        #[arg(long)]
        target: PathBuf,
        #[arg(long, value_enum, default_value = "topk")]
        algo: AlgoArg,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        /// Candidates per level (first phase for adaptive). Default: ceil((log2 s)^2).
        #[arg(long)]
        k: Option<usize>,
        /// Second-phase candidates for adaptive.
        #[arg(long)]
        k2: Option<usize>,
        #[arg(long)]
        phase_split: Option<usize>,
        #[arg(long, default_value_t = 0)]
        lookahead: usize,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, value_enum, default_value = "mq")]
        mode: ModeArg,
        /// Fraction of labels the oracle corrupts.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error of a hypothesis against a target.
    Eval {
        #[arg(long)]
        hypothesis: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Samples when the target is too wide for exact evaluation.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Influence of each free variable under a restriction.
    Influence {
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value = "")]
        restriction: String,
        #[arg(long, default_value_t = 0.05)]
        tau: f64,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long, value_enum, default_value = "mq")]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Compute exactly from the truth table instead of estimating.
        #[arg(long)]
        exact: bool,
    },
    /// Run an experiment matrix and write one CSV row per trial.
    Bench {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Write wall_ms=0 so reruns are byte-identical.
        #[arg(long)]
        omit_timing: bool,
        /// Append to an existing output, skipping trials already written.
        #[arg(long)]
        resume: bool,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn load_target(path: &Path) -> Result<Target> {
    Target::parse(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Gen {
            family,
            s,
            k,
            n,
            seed,
            out,
        } => {
            let text = match family {
                FamilyArg::Tree => {
                    let Some(s) = s else {
                        bail!("--s is required for --family tree")
                    };
                    tree_file_string(n, &harness::gen_random_tree(s, n, seed)?)
                }
                FamilyArg::Junta => {
                    let Some(k) = k else {
                        bail!("--k is required for --family junta")
                    };
                    tree_file_string(n, &harness::gen_junta(k, n, seed)?)
                }
                FamilyArg::Monotone => harness::gen_monotone(n, seed)?.to_file_string(),
            };
            emit(out.as_deref(), &text)
        }
        Cmd::Learn {
            target,
            algo,
            s,
            eps,
            delta,
            k,
            k2,
            phase_split,
            lookahead,
            depth,
            mode,
            noise,
            seed,
            out,
        } => {
            let algo = Algorithm::from(algo);
            let polylog = GreedSchedule::Polylog(2.0);
            let schedule = match algo {
                Algorithm::Greedy => GreedSchedule::Constant(1),
                Algorithm::Topk | Algorithm::Dp => k.map_or(polylog, GreedSchedule::Constant),
                Algorithm::Adaptive => GreedSchedule::TwoPhase {
                    k1: k.unwrap_or_else(|| polylog.k_at(0, s)),
                    k2: k2.unwrap_or(1),
                    split: phase_split.unwrap_or_else(|| default_phase_split(s)),
                },
            };
            let mut cfg = LearnerConfig::new(s, eps)
                .with_delta(delta)
                .with_schedule(schedule)
                .with_lookahead(lookahead)
                .with_mode(mode.into())
                .with_seed(rng::mix(seed, 1));
            cfg.depth_cap = depth;
            if algo == Algorithm::Dp {
                cfg.depth_cap = Some(dp::dp_depth(&cfg));
            }
            let target = load_target(&target)?;
            let n = target.n();
            let o = Oracle::new(target, mode.into(), noise, rng::mix(seed, 2))?;
            let candidates = if k.is_some() {
                DpCandidates::TopInfluence
            } else {
                DpCandidates::All
            };
            let (h, stats) = learners::learn(algo, &o, &cfg, candidates)?;
            eprintln!(
                "size={} depth={} mq={} ex={} subproblems={} est_err={:.6} wall_ms={}",
                h.size(),
                h.depth(),
                stats.mq_count,
                stats.ex_count,
                stats.subproblems_explored,
                stats.estimated_error,
                stats.wall.as_millis()
            );
            emit(out.as_deref(), &tree_file_string(n, &h))
        }
        Cmd::Eval {
            hypothesis,
            target,
            samples,
            seed,
        } => {
            let target = load_target(&target)?;
            let (hn, h) = parse_tree_file(&read(&hypothesis)?)?;
            if let Some(hn) = hn {
                if hn != target.n() {
                    bail!("hypothesis has n={hn} but the target has n={}", target.n());
                }
            }
            let o = Oracle::new(target, AccessMode::Mq, 0.0, 0)?;
            let err = harness::measure_error(&h, Reference::Oracle(&o), samples, seed)?;
            println!("err={err}");
            Ok(())
        }
        Cmd::Influence {
            target,
            restriction,
            tau,
            delta,
            mode,
            seed,
            exact,
        } => {
            let target = load_target(&target)?;
            let pi: Restriction = restriction.parse()?;
            pi.check_within(target.n())?;
            let scores = if exact {
                let Some(f) = target.to_table() else {
                    bail!("--exact needs a target of at most 24 variables")
                };
                let mut inf = exact_influence(&f.restrict(&pi)?);
                let free = pi.free_vars(target.n());
                inf.vars = inf.vars.iter().map(|&j| free[j]).collect();
                inf
            } else {
                let b = EstimationBudget::new(tau, delta)?;
                let o = Oracle::new(target, mode.into(), 0.0, rng::mix(seed, 2))?;
                let mut r = rng::seeded(seed);
                match mode {
                    ModeArg::Mq => estimate_influences(&o, &pi, &b, &mut r)?,
                    ModeArg::Ex => estimate_influences_monotone(&o, &pi, &b, &mut r)?,
                }
            };
            for (v, s) in scores.vars.iter().zip(&scores.scores) {
                println!("x{v} {s:.6}");
            }
            Ok(())
        }
        Cmd::Bench {
            matrix,
            trials,
            seed,
            out,
            omit_timing,
            resume,
        } => {
            let cells = harness::read_matrix(&matrix)?;
            let rows = harness::run_experiment(
                &cells,
                trials,
                seed,
                &out,
                RunOptions {
                    omit_timing,
                    resume,
                },
            )?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
            Ok(())
        }
    }
}
