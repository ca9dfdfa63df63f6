//! Nearest-neighbor retrieval evaluation of learned features.
//!
//! A checkpoint is judged by how well its mean-pooled encoder features
//! organize the data: for each test sample, rank all training samples by
//! cosine distance and ask whether the test sample's class appears among the
//! k nearest. Reported for several k; by construction the accuracy is
//! non-decreasing in k.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curriculum::{CurriculumError, RunConfig};
use crate::nncore::{Matrix, ParamStore, RngState};
use crate::orderingnet::OrderingModel;
use crate::toydata::{generate, normalized_parts, Sample, TaskKind};

/// The k values reported by default.
pub const DEFAULT_KS: [usize; 5] = [1, 5, 10, 20, 50];

/// Top-k retrieval accuracies of one query split against one gallery split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    /// The k values, ascending.
    pub ks: Vec<usize>,
    /// `accuracy[i]` is the fraction of queries whose class appears among
    /// the `ks[i]` nearest gallery samples; non-decreasing.
    pub accuracy: Vec<f64>,
    pub n_query: usize,
    pub n_gallery: usize,
    pub query_split: String,
    pub gallery_split: String,
}

impl RetrievalReport {
    /// Plot-ready CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,accuracy\n");
        for (k, acc) in self.ks.iter().zip(&self.accuracy) {
            out.push_str(&format!("{k},{acc}\n"));
        }
        out
    }
}

fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        // A zero vector carries no direction; call it maximally distant.
        return 1.0;
    }
    1.0 - dot / (na * nb)
}

/// Ranks the gallery per query by cosine distance (ties broken toward the
/// smaller gallery index) and scores top-k class hits for each requested k.
pub fn retrieval_report(
    gallery: &Matrix,
    gallery_labels: &[u32],
    query: &Matrix,
    query_labels: &[u32],
    ks: &[usize],
) -> Result<RetrievalReport, CurriculumError> {
    if gallery.rows() == 0 || gallery.rows() != gallery_labels.len() {
        return Err(CurriculumError::NoRecords(format!(
            "gallery has {} feature rows for {} labels",
            gallery.rows(),
            gallery_labels.len()
        )));
    }
    if query.rows() == 0 || query.rows() != query_labels.len() {
        return Err(CurriculumError::NoRecords(format!(
            "query has {} feature rows for {} labels",
            query.rows(),
            query_labels.len()
        )));
    }

    let mut ks: Vec<usize> = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let max_k = ks.last().copied().unwrap_or(0).min(gallery.rows());

    let mut hits = vec![0usize; ks.len()];
    for (q, &label) in query_labels.iter().enumerate() {
        let mut order: Vec<(f64, usize)> = (0..gallery.rows())
            .map(|g| (cosine_distance(query.row(q), gallery.row(g)), g))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        // First rank at which the query's class appears, if within max_k.
        let first_hit = order[..max_k]
            .iter()
            .position(|&(_, g)| gallery_labels[g] == label);
        if let Some(rank) = first_hit {
            for (i, &k) in ks.iter().enumerate() {
                if rank < k {
                    hits[i] += 1;
                }
            }
        }
    }

    let n_query = query.rows();
    Ok(RetrievalReport {
        accuracy: hits.iter().map(|&h| h as f64 / n_query as f64).collect(),
        ks,
        n_query,
        n_gallery: gallery.rows(),
        query_split: String::new(),
        gallery_split: String::new(),
    })
}

/// Mean-pooled encoder features for a list of samples, one row per sample,
/// with the canonical (unpermuted, unjittered) parts as input.
pub fn split_features(
    model: &OrderingModel,
    store: &ParamStore,
    samples: &[Sample],
) -> (Matrix, Vec<u32>) {
    assert!(!samples.is_empty(), "feature extraction needs samples");
    let n_parts = samples[0].parts.len();
    let part_dim = samples[0].parts[0].len();
    let mut parts: Vec<Matrix> = (0..n_parts)
        .map(|_| Matrix::zeros(samples.len(), part_dim))
        .collect();
    for (row, sample) in samples.iter().enumerate() {
        for (p, values) in normalized_parts(sample).iter().enumerate() {
            parts[p].row_mut(row).copy_from_slice(values);
        }
    }
    let features = model.extract_features(store, &parts);
    let labels = samples.iter().map(|s| s.label).collect();
    (features, labels)
}

/// Loads a model checkpoint and scores test-against-train retrieval on the
/// given task's data, both regenerated from the config.
pub fn cmd_eval_nn(
    config: &RunConfig,
    checkpoint: &Path,
    task: TaskKind,
    ks: &[usize],
) -> Result<RetrievalReport, CurriculumError> {
    config.validate()?;
    let model = OrderingModel::new(config.model_config())?;
    let mut store = ParamStore::new();
    let mut rng = RngState::new(config.subsystem_seed("model-init"));
    model.register(&mut store, &mut rng)?;
    store.load_into(checkpoint)?;

    let dataset = generate(&config.data_spec(task))?;
    let (gallery, gallery_labels) = split_features(&model, &store, &dataset.train);
    let (query, query_labels) = split_features(&model, &store, &dataset.test);
    let mut report = retrieval_report(&gallery, &gallery_labels, &query, &query_labels, ks)?;
    report.query_split = "test".to_string();
    report.gallery_split = "train".to_string();
    Ok(report)
}
