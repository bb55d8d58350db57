use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use super::chrf::{ChrfParams, ChrfStats};
use crate::pipeline::Engine;
use crate::store::{EntryId, EvalDataset, EvalItem, EvalRun, ItemResult, RunStatus, StoreError};

pub const DEFAULT_PARALLELISM: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceMatch {
    pub dataset_id: EntryId,
    pub item: EvalItem,
}

/// Finds the reference for `source_text` (exact match after trimming outer
/// whitespace). Datasets are searched in the order given; the first hit
/// wins.
pub fn lookup_reference(source_text: &str, datasets: &[EvalDataset]) -> Option<ReferenceMatch> {
    let needle = source_text.trim();
    datasets.iter().find_map(|ds| {
        ds.items
            .iter()
            .find(|item| item.source_text.trim() == needle)
            .map(|item| ReferenceMatch {
                dataset_id: ds.id,
                item: item.clone(),
            })
    })
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub params: ChrfParams,
    pub parallelism: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            params: ChrfParams::default(),
            parallelism: DEFAULT_PARALLELISM,
        }
    }
}

async fn score_item(engine: &Engine, item: &EvalItem, params: &ChrfParams) -> (ItemResult, Option<(ChrfStats, ChrfStats)>) {
    let mut result = ItemResult {
        index: item.index,
        source_text: item.source_text.clone(),
        reference_text: item.reference_text.clone(),
        mt_output: None,
        post_edited_output: None,
        chrfpp_mt: None,
        chrfpp_ape: None,
        error: None,
    };
    let translation = match engine.translate(&item.source_text).await {
        Ok(t) => t,
        Err(e) => {
            result.error = Some(e.to_string());
            return (result, None);
        }
    };
    result.mt_output = Some(translation.mt_text.clone());
    if translation.degraded {
        result.error = Some(
            translation
                .llm_error
                .unwrap_or_else(|| "post-editing failed".into()),
        );
        return (result, None);
    }
    let mt = ChrfStats::compute(&translation.mt_text, &item.reference_text, params);
    let ape = ChrfStats::compute(&translation.post_edited_text, &item.reference_text, params);
    result.chrfpp_mt = Some(mt.score(params.beta));
    result.chrfpp_ape = Some(ape.score(params.beta));
    result.post_edited_output = Some(translation.post_edited_text);
    (result, Some((mt, ape)))
}

/// Translates every item through the full pipeline and scores MT-only and
/// post-edited output against the references. Failed items are kept in
/// `per_item` with their error and left out of the corpus scores. The run is
/// persisted before returning.
pub async fn run_eval(
    engine: &Engine,
    dataset: &EvalDataset,
    run_id: Option<EntryId>,
    options: EvalOptions,
) -> Result<EvalRun, StoreError> {
    if dataset.items.is_empty() {
        return Err(StoreError::validation("dataset is empty"));
    }
    let store = engine.store();
    let id = run_id.unwrap_or_else(|| store.allocate_run_id());
    let started_at = store.clock().now();
    let params = options.params;

    let pending: Vec<_> = dataset
        .items
        .iter()
        .map(|item| score_item(engine, item, &params))
        .collect();
    let outcomes: Vec<_> = stream::iter(pending)
        .buffered(options.parallelism.max(1))
        .collect()
        .await;

    let mut mt_pool = ChrfStats::default();
    let mut ape_pool = ChrfStats::default();
    let mut per_item = Vec::with_capacity(outcomes.len());
    let mut scored = 0;
    for (result, stats) in outcomes {
        if let Some((mt, ape)) = stats {
            mt_pool.accumulate(&mt);
            ape_pool.accumulate(&ape);
            scored += 1;
        }
        per_item.push(result);
    }
    let failed = per_item.len() - scored;

    let run = EvalRun {
        id,
        dataset_id: dataset.id,
        status: if scored > 0 { RunStatus::Done } else { RunStatus::Failed },
        per_item,
        corpus_chrfpp_mt: (scored > 0).then(|| mt_pool.score(params.beta)),
        corpus_chrfpp_ape: (scored > 0).then(|| ape_pool.score(params.beta)),
        scored_items: scored,
        failed_items: failed,
        started_at,
        finished_at: Some(store.clock().now()),
        error: (scored == 0).then(|| "every item failed".to_string()),
    };
    store.save_run(&run)?;
    Ok(run)
}

fn fmt_score(score: Option<f64>) -> String {
    score.map(|s| format!("{s:.4}")).unwrap_or_default()
}

/// Per-item CSV: `index,source,mt,ape,chrfpp_mt,chrfpp_ape`.
pub fn export_csv(run: &EvalRun) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "source", "mt", "ape", "chrfpp_mt", "chrfpp_ape"])?;
    for item in &run.per_item {
        w.write_record([
            item.index.to_string(),
            item.source_text.clone(),
            item.mt_output.clone().unwrap_or_default(),
            item.post_edited_output.clone().unwrap_or_default(),
            fmt_score(item.chrfpp_mt),
            fmt_score(item.chrfpp_ape),
        ])?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// Two-row MT-only vs MT+APE summary table.
pub fn summary_table(run: &EvalRun) -> String {
    let show = |s: Option<f64>| s.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"));
    format!(
        "{:<16} {:>8}\n{:<16} {:>8}\n{:<16} {:>8}\n",
        "system",
        "chrF++",
        "MT only",
        show(run.corpus_chrfpp_mt),
        "MT + LLM APE",
        show(run.corpus_chrfpp_ape),
    )
}
