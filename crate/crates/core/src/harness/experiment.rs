//! Experiment matrices and their CSV output.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::harness::measure::{eval_samples, measure_error, Reference};
use crate::harness::targets::{TargetFamily, TargetSpec};
use crate::learners::dp::{dp_depth, DpCandidates};
use crate::learners::{default_phase_split, learn, Algorithm, GreedSchedule, LearnerConfig};
use crate::oracle::{AccessMode, Oracle};
use crate::rng;

pub const COLUMNS: [&str; 23] = [
    "family",
    "s_target",
    "n",
    "k_junta",
    "noise",
    "algo",
    "k1",
    "k2",
    "phase_split",
    "lookahead",
    "depth_cap",
    "eps",
    "delta",
    "mode",
    "seed",
    "trial",
    "err",
    "hyp_size",
    "hyp_depth",
    "mq_count",
    "ex_count",
    "subproblems",
    "wall_ms",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Tree,
    Junta,
    Monotone,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Tree => "tree",
            Family::Junta => "junta",
            Family::Monotone => "monotone",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(Family::Tree),
            "junta" => Ok(Family::Junta),
            "monotone" => Ok(Family::Monotone),
            _ => Err(invalid(format!("unknown family {s:?}"))),
        }
    }
}

/// One row of an experiment matrix. Empty optional fields take defaults:
/// `s_target` is `2^k_junta` for juntas, `k1` is the polylog schedule
/// `ceil((log2 s)^2)`, `k2` is 1, `phase_split`, `depth_cap` and `delta`
/// (0.01) take the learner defaults, and `lookahead` is 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub family: Family,
    pub s_target: Option<usize>,
    pub n: usize,
    pub k_junta: Option<usize>,
    #[serde(default)]
    pub noise: f64,
    pub algo: Algorithm,
    pub k1: Option<usize>,
    pub k2: Option<usize>,
    pub phase_split: Option<usize>,
    pub lookahead: Option<usize>,
    pub depth_cap: Option<usize>,
    pub eps: f64,
    pub delta: Option<f64>,
    pub mode: AccessMode,
}

impl Cell {
    pub fn new(family: Family, n: usize, algo: Algorithm, eps: f64) -> Self {
        Cell {
            family,
            s_target: None,
            n,
            k_junta: None,
            noise: 0.0,
            algo,
            k1: None,
            k2: None,
            phase_split: None,
            lookahead: None,
            depth_cap: None,
            eps,
            delta: None,
            mode: AccessMode::Mq,
        }
    }

    /// Size budget handed to the learner.
    pub fn s(&self) -> Result<usize> {
        match (self.s_target, self.family, self.k_junta) {
            (Some(s), _, _) => Ok(s),
            (None, Family::Junta, Some(k)) => Ok(1 << k),
            _ => Err(invalid("s_target is required for this family")),
        }
    }

    pub fn target_spec(&self, seed: u64) -> Result<TargetSpec> {
        let family = match self.family {
            Family::Tree => TargetFamily::RandomTree {
                s: self.s()?,
                n: self.n,
            },
            Family::Junta => TargetFamily::Junta {
                k: self
                    .k_junta
                    .ok_or_else(|| invalid("k_junta is required for juntas"))?,
                n: self.n,
            },
            Family::Monotone => TargetFamily::Monotone { n: self.n },
        };
        Ok(TargetSpec {
            family,
            noise: self.noise,
            seed,
        })
    }

    /// Learner configuration with every default made explicit.
    pub fn config(&self, seed: u64) -> Result<LearnerConfig> {
        let s = self.s()?;
        let polylog = GreedSchedule::Polylog(2.0).k_at(0, s);
        let schedule = match self.algo {
            Algorithm::Greedy => GreedSchedule::Constant(1),
            Algorithm::Topk | Algorithm::Dp => GreedSchedule::Constant(self.k1.unwrap_or(polylog)),
            Algorithm::Adaptive => GreedSchedule::TwoPhase {
                k1: self.k1.unwrap_or(polylog),
                k2: self.k2.unwrap_or(1),
                split: self.phase_split.unwrap_or_else(|| default_phase_split(s)),
            },
        };
        let mut cfg = LearnerConfig::new(s, self.eps)
            .with_schedule(schedule)
            .with_lookahead(self.lookahead.unwrap_or(0))
            .with_mode(self.mode)
            .with_seed(seed)
            .with_delta(self.delta.unwrap_or(0.01));
        cfg.depth_cap = self.depth_cap;
        let depth = match self.algo {
            Algorithm::Dp => dp_depth(&cfg),
            _ => cfg.depth(),
        };
        cfg = cfg.with_depth(depth);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub family: Family,
    pub s_target: usize,
    pub n: usize,
    pub k_junta: Option<usize>,
    pub noise: f64,
    pub algo: Algorithm,
    pub k1: usize,
    pub k2: Option<usize>,
    pub phase_split: Option<usize>,
    pub lookahead: usize,
    pub depth_cap: usize,
    pub eps: f64,
    pub delta: f64,
    pub mode: AccessMode,
    pub seed: u64,
    pub trial: usize,
    pub err: f64,
    pub hyp_size: usize,
    pub hyp_depth: usize,
    pub mq_count: u64,
    pub ex_count: u64,
    pub subproblems: usize,
    pub wall_ms: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Write `wall_ms = 0` so reruns are byte-identical.
    pub omit_timing: bool,
    /// Append to an existing output and skip trials already recorded.
    pub resume: bool,
}

/// Seed of trial `trial` of cell `cell` under `master`.
pub fn trial_seed(master: u64, cell: usize, trial: usize) -> u64 {
    rng::mix(rng::mix(master, cell as u64), trial as u64)
}

pub fn read_matrix(path: &Path) -> Result<Vec<Cell>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let cells = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<Cell>, _>>()?;
    Ok(cells)
}

pub fn parse_matrix(text: &str) -> Result<Vec<Cell>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let cells = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<Cell>, _>>()?;
    Ok(cells)
}

pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<ExperimentRecord>, _>>()?;
    Ok(rows)
}

/// Oracle and learner configuration of a trial. The target is drawn from
/// `seed`, and the learner, the corruption and evaluation get their own
/// streams derived from it.
pub fn trial_setup(cell: &Cell, seed: u64) -> Result<(Oracle, LearnerConfig)> {
    let target = cell.target_spec(seed)?.build()?;
    let cfg = cell.config(rng::mix(seed, 1))?;
    let o = Oracle::new(target, cell.mode, cell.noise, rng::mix(seed, 2))?;
    Ok((o, cfg))
}

/// Runs one trial with every seed derived from `seed`.
pub fn run_trial(
    cell: &Cell,
    trial: usize,
    seed: u64,
    opts: RunOptions,
) -> Result<ExperimentRecord> {
    let (o, cfg) = trial_setup(cell, seed)?;
    let start = Instant::now();
    let candidates = if cell.algo == Algorithm::Dp && cell.k1.is_some() {
        DpCandidates::TopInfluence
    } else {
        DpCandidates::All
    };
    let (h, stats) = learn(cell.algo, &o, &cfg, candidates)?;
    let wall = start.elapsed();
    let err = measure_error(
        &h,
        Reference::Oracle(&o),
        eval_samples(cell.eps)?,
        rng::mix(seed, 3),
    )?;
    let (mq_count, ex_count) = o.counts();
    let (k2, phase_split) = match cfg.schedule {
        GreedSchedule::TwoPhase { k2, split, .. } => (Some(k2), Some(split)),
        _ => (None, None),
    };
    Ok(ExperimentRecord {
        family: cell.family,
        s_target: cfg.s,
        n: cell.n,
        k_junta: cell.k_junta,
        noise: cell.noise,
        algo: cell.algo,
        k1: cfg.k_at(0),
        k2,
        phase_split,
        lookahead: cfg.lookahead,
        depth_cap: cfg.depth(),
        eps: cfg.eps,
        delta: cfg.delta,
        mode: cell.mode,
        seed,
        trial,
        err,
        hyp_size: h.size(),
        hyp_depth: h.depth(),
        mq_count,
        ex_count,
        subproblems: stats.subproblems_explored,
        wall_ms: if opts.omit_timing {
            0
        } else {
            wall.as_millis() as u64
        },
    })
}

fn existing_rows(path: &Path) -> Result<usize> {
    match File::open(path) {
        Ok(f) => {
            let lines = BufReader::new(f)
                .lines()
                .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
                .count();
            Ok(lines.saturating_sub(1))
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(0),
        Err(e) => Err(e.into()),
    }
}

/// Runs `trials` trials of every cell and writes one row per trial to `out`,
/// flushing after each cell. Trials within a cell run in parallel; rows are
/// written in (cell, trial) order. A cell whose trials fail is reported on
/// stderr and skipped. With `resume`, the number of rows already in `out`
/// determines how many leading (cell, trial) pairs are skipped.
pub fn run_experiment(
    cells: &[Cell],
    trials: usize,
    master_seed: u64,
    out: &Path,
    opts: RunOptions,
) -> Result<Vec<ExperimentRecord>> {
    let done = if opts.resume { existing_rows(out)? } else { 0 };
    let file = if opts.resume && done > 0 {
        OpenOptions::new().append(true).open(out)?
    } else {
        let mut f = File::create(out)?;
        writeln!(f, "{}", COLUMNS.join(","))?;
        f
    };
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    let mut all = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        let first = done.saturating_sub(ci * trials).min(trials);
        if first == trials {
            continue;
        }
        let rows: Result<Vec<ExperimentRecord>> = (first..trials)
            .into_par_iter()
            .map(|t| run_trial(cell, t, trial_seed(master_seed, ci, t), opts))
            .collect();
        match rows {
            Ok(rows) => {
                for r in &rows {
                    wtr.serialize(r)?;
                }
                wtr.flush()?;
                all.extend(rows);
            }
            Err(e) => eprintln!("cell {ci}: {e}"),
        }
    }
    Ok(all)
}
