//! Target generation, error measurement and experiment matrices.

pub mod experiment;
pub mod measure;
pub mod targets;

pub use experiment::{
    parse_matrix, read_matrix, read_records, run_experiment, run_trial, trial_seed, trial_setup,
    Cell, ExperimentRecord, Family, RunOptions, COLUMNS,
};
pub use measure::{eval_samples, measure_error, sampled_error, Reference};
pub use targets::{gen_junta, gen_monotone, gen_random_tree, TargetFamily, TargetSpec};
