//! Config-driven experiments: corpora, runners and reports.

pub mod config;
pub mod corpus;
pub mod experiments;
pub mod report;

pub use config::{parse_config, parse_config_str, parse_config_with_seed, ExperimentConfig, ExperimentId};
pub use corpus::Corpus;
pub use experiments::{
    build_symbol, certify, run_bmo_corollary, run_experiment, run_kernel_decay, run_lebesgue_bounds,
    run_linear_sharp, run_multilinear_sharp, run_trace, run_weighted,
};
pub use report::{fit_log_slope, CaseRecord, Check, RatioReport, SlopeFit, SlopeRecord, Verdict};
