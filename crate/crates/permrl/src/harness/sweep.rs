//! Validation-set-size sweep: how stable is the measured ordering error for
//! a given validation set size?
//!
//! For each requested size, `repeats` seeded subsets of the training split
//! are evaluated and the spread of the error estimate is reported. Subsets
//! are slices of one seeded shuffle, so they are disjoint while
//! `repeats · size` fits into the split and wrap around (eventually
//! coinciding) beyond that — at full size every subset is the whole split
//! and the spread collapses to zero.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curriculum::{validate, CurriculumError, ModelProbe, RunConfig};
use crate::nncore::{ParamStore, RngState};
use crate::orderingnet::OrderingModel;
use crate::permset::PermutationSet;
use crate::toydata::{generate, Sample, TaskKind};

/// Error spread of one (checkpoint, size) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub checkpoint: String,
    pub size: usize,
    pub repeats: usize,
    pub mean_error: f64,
    /// Population standard deviation over the repeats.
    pub std_error: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("checkpoint,size,repeats,mean_error,std_error\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.checkpoint, r.size, r.repeats, r.mean_error, r.std_error
        ));
    }
    out
}

fn subset<'a>(samples: &'a [Sample], order: &[usize], repeat: usize, size: usize) -> Vec<&'a Sample> {
    (0..size)
        .map(|i| &samples[order[(repeat * size + i) % order.len()]])
        .collect()
}

/// Evaluates every checkpoint on `repeats` seeded subsets per size and
/// reports mean ± std of the ordering error. Row count = |sizes| ×
/// checkpoints.
pub fn cmd_valsize_sweep(
    config: &RunConfig,
    checkpoints: &[&Path],
    task: TaskKind,
    sizes: &[usize],
    repeats: usize,
) -> Result<Vec<SweepRow>, CurriculumError> {
    config.validate()?;
    if checkpoints.is_empty() {
        return Err(CurriculumError::NoRecords(
            "valsize sweep needs at least one checkpoint".into(),
        ));
    }
    if sizes.is_empty() || repeats == 0 {
        return Err(CurriculumError::NoRecords(
            "valsize sweep needs nonempty sizes and repeats >= 1".into(),
        ));
    }

    let dataset = generate(&config.data_spec(task))?;
    for &size in sizes {
        if size == 0 || size > dataset.train.len() {
            return Err(CurriculumError::NoRecords(format!(
                "subset size {size} outside 1..={}",
                dataset.train.len()
            )));
        }
    }
    let perm_label = match task {
        TaskKind::Spatial => ("perms-spatial", config.grid * config.grid, config.spatial_perms),
        TaskKind::Temporal => ("perms-temporal", config.frames, config.temporal_perms),
    };
    let set = PermutationSet::generate(
        perm_label.1,
        perm_label.2,
        config.subsystem_seed(perm_label.0),
    )?;

    let mut order: Vec<usize> = (0..dataset.train.len()).collect();
    RngState::new(config.subsystem_seed("valsize-sweep")).shuffle(&mut order);

    let model = OrderingModel::new(config.model_config())?;
    let mut store = ParamStore::new();
    let mut rng = RngState::new(config.subsystem_seed("model-init"));
    model.register(&mut store, &mut rng)?;

    let mut rows = Vec::with_capacity(checkpoints.len() * sizes.len());
    for path in checkpoints {
        store.load_into(path)?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        for &size in sizes {
            let mut errors = Vec::with_capacity(repeats);
            for repeat in 0..repeats {
                let samples: Vec<Sample> = subset(&dataset.train, &order, repeat, size)
                    .into_iter()
                    .cloned()
                    .collect();
                let mut probe = ModelProbe::new(&model, &store, task);
                let state = validate(&mut probe, &samples, &set, task)?;
                errors.push(state.error);
            }
            let mean = errors.iter().sum::<f64>() / errors.len() as f64;
            let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
                / errors.len() as f64;
            rows.push(SweepRow {
                checkpoint: name.clone(),
                size,
                repeats,
                mean_error: mean,
                std_error: var.sqrt(),
            });
        }
    }
    Ok(rows)
}
