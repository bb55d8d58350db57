//! chrF++ scoring and the evaluation runner.

pub mod chrf;
pub mod eval;

pub use chrf::{chrfpp_corpus, chrfpp_sentence, ChrfParams, ChrfStats, OrderStats};
pub use eval::{
    export_csv, lookup_reference, run_eval, summary_table, EvalOptions, ReferenceMatch, DEFAULT_PARALLELISM,
};
