//! Evidence retrieval: glossary entries by {1,2}-gram overlap with the
//! query tokens, translation memories by BM25 over their source side.

pub mod bm25;
pub mod glossary;

pub use bm25::{retrieve_tm, Bm25Params, IndexChange, TmIndex, TmMatch};
pub use glossary::{match_glossary, GlossaryIndex, GlossaryMatch};
