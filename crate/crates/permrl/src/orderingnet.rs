//! Dual-head ordering network.
//!
//! Both heads share one dense part encoder. The spatial head runs every tile
//! through a per-head projection, concatenates the projections in slot order,
//! and classifies which tile permutation was applied through one hidden
//! layer. The temporal head projects each frame, feeds the sequence through
//! an LSTM, and classifies the frame permutation from the final hidden
//! state. A dual training step accumulates both heads' gradients from the
//! same parameter state and applies a single Adam update, so the dual
//! gradient equals the sum of the two single-head gradients exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nncore::{
    cross_entropy_batch, sgd_step, softmax, Activation, DenseCache, DenseLayer, LstmCache,
    LstmLayer, Matrix, NncoreError, ParamStore, RngState,
};
use crate::toydata::PartsBatch;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Nncore(#[from] NncoreError),
}

/// Layer widths and head output sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Tiles per spatial sample.
    pub n_tiles: usize,
    /// Frames per temporal sample.
    pub n_frames: usize,
    /// Flattened tile length.
    pub tile_input_dim: usize,
    /// Flattened frame length; must equal `tile_input_dim` because the
    /// encoder is shared between the heads.
    pub frame_input_dim: usize,
    pub encoder_dim: usize,
    pub head_dim: usize,
    pub spatial_hidden_dim: usize,
    pub lstm_dim: usize,
    /// Spatial permutation-class count.
    pub n_spatial_classes: usize,
    /// Temporal permutation-class count.
    pub n_temporal_classes: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_tiles: 4,
            n_frames: 4,
            tile_input_dim: 64,
            frame_input_dim: 64,
            encoder_dim: 64,
            head_dim: 64,
            spatial_hidden_dim: 128,
            lstm_dim: 32,
            n_spatial_classes: 24,
            n_temporal_classes: 24,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut problems = Vec::new();
        for (name, v) in [
            ("n_tiles", self.n_tiles),
            ("n_frames", self.n_frames),
            ("tile_input_dim", self.tile_input_dim),
            ("frame_input_dim", self.frame_input_dim),
            ("encoder_dim", self.encoder_dim),
            ("head_dim", self.head_dim),
            ("spatial_hidden_dim", self.spatial_hidden_dim),
            ("lstm_dim", self.lstm_dim),
            ("n_spatial_classes", self.n_spatial_classes),
            ("n_temporal_classes", self.n_temporal_classes),
        ] {
            if v == 0 {
                problems.push(format!("{name} must be positive"));
            }
        }
        if self.n_tiles < 2 {
            problems.push("n_tiles must be >= 2".to_string());
        }
        if self.n_frames < 2 {
            problems.push("n_frames must be >= 2".to_string());
        }
        if self.tile_input_dim != self.frame_input_dim {
            problems.push(format!(
                "shared encoder requires equal part sizes, got tiles {} and frames {}",
                self.tile_input_dim, self.frame_input_dim
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ModelError::InvalidConfig(problems.join("; ")))
        }
    }
}

/// The dual-head network. Parameters live in a [`ParamStore`] owned by the
/// caller; this struct holds only the architecture.
#[derive(Debug, Clone)]
pub struct OrderingModel {
    config: ModelConfig,
    encoder: DenseLayer,
    spatial_head: DenseLayer,
    spatial_hidden: DenseLayer,
    spatial_cls: DenseLayer,
    temporal_head: DenseLayer,
    lstm: LstmLayer,
    temporal_cls: DenseLayer,
}

/// Everything needed to backpropagate one spatial forward pass.
pub struct SpatialCache {
    encoder: Vec<DenseCache>,
    head: Vec<DenseCache>,
    hidden: DenseCache,
    cls: DenseCache,
}

/// Everything needed to backpropagate one temporal forward pass.
pub struct TemporalCache {
    encoder: Vec<DenseCache>,
    head: Vec<DenseCache>,
    lstm: LstmCache,
    cls: DenseCache,
}

/// Mean losses of the heads that participated in a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualLosses {
    pub spatial: Option<f64>,
    pub temporal: Option<f64>,
}

impl OrderingModel {
    pub fn new(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let encoder = DenseLayer::new(
            "encoder",
            config.tile_input_dim,
            config.encoder_dim,
            Activation::Relu,
        );
        let spatial_head = DenseLayer::new(
            "spatial.head",
            config.encoder_dim,
            config.head_dim,
            Activation::Relu,
        );
        let spatial_hidden = DenseLayer::new(
            "spatial.hidden",
            config.n_tiles * config.head_dim,
            config.spatial_hidden_dim,
            Activation::Relu,
        );
        let spatial_cls = DenseLayer::new(
            "spatial.cls",
            config.spatial_hidden_dim,
            config.n_spatial_classes,
            Activation::Linear,
        );
        let temporal_head = DenseLayer::new(
            "temporal.head",
            config.encoder_dim,
            config.head_dim,
            Activation::Relu,
        );
        let lstm = LstmLayer::new("temporal.lstm", config.head_dim, config.lstm_dim);
        let temporal_cls = DenseLayer::new(
            "temporal.cls",
            config.lstm_dim,
            config.n_temporal_classes,
            Activation::Linear,
        );
        Ok(Self {
            config,
            encoder,
            spatial_head,
            spatial_hidden,
            spatial_cls,
            temporal_head,
            lstm,
            temporal_cls,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Registers all parameters in a fixed order (encoder, spatial head,
    /// temporal head); the order defines the checkpoint layout.
    pub fn register(&self, store: &mut ParamStore, rng: &mut RngState) -> Result<(), ModelError> {
        self.encoder.register(store, rng)?;
        self.spatial_head.register(store, rng)?;
        self.spatial_hidden.register(store, rng)?;
        self.spatial_cls.register(store, rng)?;
        self.temporal_head.register(store, rng)?;
        self.lstm.register(store, rng)?;
        self.temporal_cls.register(store, rng)?;
        Ok(())
    }

    /// Spatial logits for a batch of tile matrices (one B×dim matrix per
    /// tile slot).
    pub fn forward_spatial(&self, store: &ParamStore, tiles: &[Matrix]) -> (SpatialCache, Matrix) {
        assert_eq!(tiles.len(), self.config.n_tiles, "tile slot count");
        let encoder: Vec<DenseCache> =
            tiles.iter().map(|t| self.encoder.forward(store, t)).collect();
        let head: Vec<DenseCache> = encoder
            .iter()
            .map(|c| self.spatial_head.forward(store, &c.output))
            .collect();
        let concat = Matrix::concat_cols(&head.iter().map(|c| &c.output).collect::<Vec<_>>());
        let hidden = self.spatial_hidden.forward(store, &concat);
        let cls = self.spatial_cls.forward(store, &hidden.output);
        let logits = cls.output.clone();
        (
            SpatialCache {
                encoder,
                head,
                hidden,
                cls,
            },
            logits,
        )
    }

    /// Temporal logits for a batch of frame matrices (one B×dim matrix per
    /// time step).
    pub fn forward_temporal(
        &self,
        store: &ParamStore,
        frames: &[Matrix],
    ) -> (TemporalCache, Matrix) {
        assert_eq!(frames.len(), self.config.n_frames, "frame slot count");
        let encoder: Vec<DenseCache> =
            frames.iter().map(|f| self.encoder.forward(store, f)).collect();
        let head: Vec<DenseCache> = encoder
            .iter()
            .map(|c| self.temporal_head.forward(store, &c.output))
            .collect();
        let inputs: Vec<Matrix> = head.iter().map(|c| c.output.clone()).collect();
        let lstm = self.lstm.forward(store, &inputs);
        let cls = self.temporal_cls.forward(store, &lstm.final_hidden);
        let logits = cls.output.clone();
        (
            TemporalCache {
                encoder,
                head,
                lstm,
                cls,
            },
            logits,
        )
    }

    fn backward_spatial(&self, store: &mut ParamStore, cache: &SpatialCache, d_logits: &Matrix) {
        let d_hidden = self.spatial_cls.backward(store, &cache.cls, d_logits);
        let d_concat = self.spatial_hidden.backward(store, &cache.hidden, &d_hidden);
        let per_slot = d_concat.split_cols(self.config.n_tiles);
        for (slot, d_head_out) in per_slot.iter().enumerate() {
            let d_enc_out = self
                .spatial_head
                .backward(store, &cache.head[slot], d_head_out);
            self.encoder
                .backward(store, &cache.encoder[slot], &d_enc_out);
        }
    }

    fn backward_temporal(&self, store: &mut ParamStore, cache: &TemporalCache, d_logits: &Matrix) {
        let d_hidden = self.temporal_cls.backward(store, &cache.cls, d_logits);
        let d_inputs = self.lstm.backward(store, &cache.lstm, &d_hidden);
        for (slot, d_head_out) in d_inputs.iter().enumerate() {
            let d_enc_out = self
                .temporal_head
                .backward(store, &cache.head[slot], d_head_out);
            self.encoder
                .backward(store, &cache.encoder[slot], &d_enc_out);
        }
    }

    /// Forward + cross-entropy + backward for one spatial batch, adding
    /// gradients into the store. Returns the mean loss.
    pub fn spatial_loss_backward(&self, store: &mut ParamStore, batch: &PartsBatch) -> f64 {
        let (cache, logits) = self.forward_spatial(store, &batch.parts);
        let probs = softmax(&logits);
        let (loss, d_logits) = cross_entropy_batch(&probs, &batch.labels);
        self.backward_spatial(store, &cache, &d_logits);
        loss
    }

    /// Forward + cross-entropy + backward for one temporal batch, adding
    /// gradients into the store. Returns the mean loss.
    pub fn temporal_loss_backward(&self, store: &mut ParamStore, batch: &PartsBatch) -> f64 {
        let (cache, logits) = self.forward_temporal(store, &batch.parts);
        let probs = softmax(&logits);
        let (loss, d_logits) = cross_entropy_batch(&probs, &batch.labels);
        self.backward_temporal(store, &cache, &d_logits);
        loss
    }

    /// Leaves `store` holding the sum of the per-head gradients. Each head's
    /// gradient is computed into a zeroed buffer and the snapshots are added
    /// afterwards, so the combined gradient equals the elementwise sum of
    /// the gradients a single-head step would produce — exactly, not just up
    /// to rounding.
    pub fn accumulate_dual_grads(
        &self,
        store: &mut ParamStore,
        spatial: Option<&PartsBatch>,
        temporal: Option<&PartsBatch>,
    ) -> DualLosses {
        assert!(
            spatial.is_some() || temporal.is_some(),
            "a training step needs at least one batch"
        );
        store.zero_grads();
        let mut snapshots = Vec::new();
        let spatial_loss = spatial.map(|batch| {
            let loss = self.spatial_loss_backward(store, batch);
            snapshots.push(store.snapshot_grads());
            store.zero_grads();
            loss
        });
        let temporal_loss = temporal.map(|batch| {
            let loss = self.temporal_loss_backward(store, batch);
            snapshots.push(store.snapshot_grads());
            store.zero_grads();
            loss
        });
        for snapshot in &snapshots {
            store.accumulate_grads(snapshot);
        }
        DualLosses {
            spatial: spatial_loss,
            temporal: temporal_loss,
        }
    }

    /// One plain-SGD step on whichever batches are present. The ordering
    /// network deliberately avoids adaptive optimizers: per-parameter step
    /// normalization amplifies the small but consistently signed gradients
    /// that group-restricted batches put on absent classes, which lets a few
    /// narrow batches wipe out calibrated logits the uniform phase then has
    /// to re-learn. Plain SGD keeps those steps proportional to the actual
    /// gradient magnitude.
    pub fn train_step_dual(
        &self,
        store: &mut ParamStore,
        spatial: Option<&PartsBatch>,
        temporal: Option<&PartsBatch>,
        lr: f64,
    ) -> Result<DualLosses, ModelError> {
        let losses = self.accumulate_dual_grads(store, spatial, temporal);
        sgd_step(store, lr)?;
        Ok(losses)
    }

    /// Mean-pooled encoder output over a sample's parts: the representation
    /// used for retrieval evaluation. `parts` holds one B×dim matrix per
    /// part slot.
    pub fn extract_features(&self, store: &ParamStore, parts: &[Matrix]) -> Matrix {
        assert!(!parts.is_empty(), "feature extraction needs parts");
        let mut pooled = Matrix::zeros(parts[0].rows(), self.config.encoder_dim);
        for part in parts {
            let cache = self.encoder.forward(store, part);
            pooled.add_assign(&cache.output);
        }
        pooled.scale(1.0 / parts.len() as f64);
        pooled
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nncore::grad_check;
    use crate::permset::PermutationSet;
    use crate::toydata::{generate, make_permuted_batch, DatasetSpec};

    fn small_config() -> ModelConfig {
        ModelConfig {
            n_tiles: 4,
            n_frames: 4,
            tile_input_dim: 16,
            frame_input_dim: 16,
            encoder_dim: 12,
            head_dim: 10,
            spatial_hidden_dim: 14,
            lstm_dim: 8,
            n_spatial_classes: 6,
            n_temporal_classes: 6,
        }
    }

    fn setup(config: ModelConfig, seed: u64) -> (OrderingModel, ParamStore) {
        let model = OrderingModel::new(config).unwrap();
        let mut store = ParamStore::new();
        let mut rng = RngState::new(seed);
        model.register(&mut store, &mut rng).unwrap();
        (model, store)
    }

    fn random_parts(n: usize, batch: usize, dim: usize, rng: &mut RngState) -> Vec<Matrix> {
        (0..n)
            .map(|_| {
                let mut m = Matrix::zeros(batch, dim);
                for v in m.values_mut() {
                    *v = rng.uniform(-1.0, 1.0);
                }
                m
            })
            .collect()
    }

    #[test]
    fn logit_widths_match_class_counts() {
        let (model, store) = setup(small_config(), 3);
        let mut rng = RngState::new(9);
        let tiles = random_parts(4, 5, 16, &mut rng);
        let (_, s_logits) = model.forward_spatial(&store, &tiles);
        assert_eq!(s_logits.shape(), (5, 6));
        let frames = random_parts(4, 5, 16, &mut rng);
        let (_, t_logits) = model.forward_temporal(&store, &frames);
        assert_eq!(t_logits.shape(), (5, 6));
    }

    #[test]
    fn mismatched_part_sizes_are_rejected() {
        let config = ModelConfig {
            frame_input_dim: 32,
            ..small_config()
        };
        assert!(matches!(
            OrderingModel::new(config).unwrap_err(),
            ModelError::InvalidConfig(_)
        ));
    }

    #[test]
    fn untrained_argmax_frequencies_are_near_uniform_across_seeds() {
        // Any single initialization concentrates argmaxes on lucky classes
        // (ReLU features have positive mean, so each class gets a fixed
        // logit offset), but classes are exchangeable across seeds: the
        // seed-averaged share of every class must be close to 1/|Ψ|.
        let mut counts = vec![0usize; 24];
        let mut total = 0usize;
        for seed in 0..20u64 {
            let (model, store) = setup(ModelConfig::default(), 1000 + seed);
            let mut irng = RngState::new(2000 + seed);
            let tiles = random_parts(4, 500, 64, &mut irng);
            let (_, logits) = model.forward_spatial(&store, &tiles);
            for b in 0..500 {
                let row = logits.row(b);
                let argmax = row
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
                    .unwrap()
                    .0;
                counts[argmax] += 1;
                total += 1;
            }
        }
        let max_share = *counts.iter().max().unwrap() as f64 / total as f64;
        assert!(
            max_share < 5.0 / 24.0,
            "class share {max_share:.3} exceeds 5/24: initialization favors a class"
        );
        assert!(counts.iter().all(|&c| c > 0), "some class never wins");
    }

    #[test]
    fn encoder_receives_gradient_from_either_head_alone() {
        let (model, mut store) = setup(small_config(), 81);
        let mut rng = RngState::new(82);
        let spec = DatasetSpec {
            part_extent: 4,
            n_train: 8,
            n_val: 4,
            n_test: 4,
            ..DatasetSpec::spatial(10)
        };
        let sds = generate(&spec).unwrap();
        let tds = generate(&DatasetSpec {
            kind: crate::toydata::TaskKind::Temporal,
            ..spec
        })
        .unwrap();
        let set = PermutationSet::generate(4, 6, 43).unwrap();
        let assignments: Vec<(usize, usize)> =
            (0..8).map(|i| (i, rng.below(6) as usize)).collect();
        let sb = make_permuted_batch(&sds.train, &set, &assignments, None).unwrap();
        let tb = make_permuted_batch(&tds.train, &set, &assignments, None).unwrap();

        model.accumulate_dual_grads(&mut store, Some(&sb), None);
        assert!(store.grad("encoder.w").frobenius_norm() > 0.0);
        model.accumulate_dual_grads(&mut store, None, Some(&tb));
        assert!(store.grad("encoder.w").frobenius_norm() > 0.0);
    }

    #[test]
    fn dual_gradient_equals_sum_of_head_gradients_exactly() {
        let (model, mut store) = setup(small_config(), 21);
        let mut rng = RngState::new(22);
        let spec = DatasetSpec {
            part_extent: 4,
            n_train: 16,
            n_val: 4,
            n_test: 4,
            ..DatasetSpec::spatial(7)
        };
        let ds = generate(&spec).unwrap();
        let set = PermutationSet::generate(4, 6, 40).unwrap();
        let assignments: Vec<(usize, usize)> =
            (0..8).map(|i| (i, rng.below(6) as usize)).collect();
        let sb = make_permuted_batch(&ds.train, &set, &assignments, None).unwrap();
        let tds = generate(&DatasetSpec {
            kind: crate::toydata::TaskKind::Temporal,
            ..spec
        })
        .unwrap();
        let tb = make_permuted_batch(&tds.train, &set, &assignments, None).unwrap();

        model.accumulate_dual_grads(&mut store, Some(&sb), None);
        let g_spatial = store.snapshot_grads();
        model.accumulate_dual_grads(&mut store, None, Some(&tb));
        let g_temporal = store.snapshot_grads();
        model.accumulate_dual_grads(&mut store, Some(&sb), Some(&tb));
        let g_dual = store.snapshot_grads();

        for ((a, b), d) in g_spatial.iter().zip(&g_temporal).zip(&g_dual) {
            for ((x, y), z) in a.values().iter().zip(b.values()).zip(d.values()) {
                assert_eq!(x + y, *z, "dual gradient is not the exact sum");
            }
        }
    }

    #[test]
    fn losses_fall_during_joint_training() {
        let (model, mut store) = setup(small_config(), 31);
        let mut rng = RngState::new(32);
        let spec = DatasetSpec {
            part_extent: 4,
            n_train: 32,
            n_val: 4,
            n_test: 4,
            ..DatasetSpec::spatial(8)
        };
        let sds = generate(&spec).unwrap();
        let tds = generate(&DatasetSpec {
            kind: crate::toydata::TaskKind::Temporal,
            ..spec
        })
        .unwrap();
        let set = PermutationSet::generate(4, 6, 41).unwrap();
        let assignments: Vec<(usize, usize)> =
            (0..16).map(|i| (i, rng.below(6) as usize)).collect();
        let sb = make_permuted_batch(&sds.train, &set, &assignments, None).unwrap();
        let tb = make_permuted_batch(&tds.train, &set, &assignments, None).unwrap();

        let first = model
            .train_step_dual(&mut store, Some(&sb), Some(&tb), 0.5)
            .unwrap();
        let mut last = first;
        for _ in 0..99 {
            last = model
                .train_step_dual(&mut store, Some(&sb), Some(&tb), 0.5)
                .unwrap();
        }
        assert!(last.spatial.unwrap() < 0.5 * first.spatial.unwrap());
        assert!(last.temporal.unwrap() < 0.5 * first.temporal.unwrap());
    }

    #[test]
    fn model_memorizes_a_small_batch() {
        let (model, mut store) = setup(small_config(), 41);
        let mut rng = RngState::new(42);
        let spec = DatasetSpec {
            part_extent: 4,
            n_train: 16,
            n_val: 4,
            n_test: 4,
            ..DatasetSpec::spatial(9)
        };
        let ds = generate(&spec).unwrap();
        let set = PermutationSet::generate(4, 6, 42).unwrap();
        let assignments: Vec<(usize, usize)> =
            (0..16).map(|i| (i, rng.below(6) as usize)).collect();
        let batch = make_permuted_batch(&ds.train, &set, &assignments, None).unwrap();

        for _ in 0..300 {
            model
                .train_step_dual(&mut store, Some(&batch), None, 0.5)
                .unwrap();
        }
        let (_, logits) = model.forward_spatial(&store, &batch.parts);
        let correct = batch
            .labels
            .iter()
            .enumerate()
            .filter(|&(b, &label)| {
                let row = logits.row(b);
                let argmax = row
                    .iter()
                    .enumerate()
                    .max_by(|x, y| x.1.partial_cmp(y.1).unwrap().then(y.0.cmp(&x.0)))
                    .unwrap()
                    .0;
                argmax == label
            })
            .count();
        assert_eq!(correct, batch.labels.len(), "failed to memorize the batch");
    }

    #[test]
    fn temporal_head_uses_frame_order() {
        let (model, store) = setup(small_config(), 51);
        let mut rng = RngState::new(52);
        let frames = random_parts(4, 3, 16, &mut rng);
        let (_, forward_logits) = model.forward_temporal(&store, &frames);
        let reversed: Vec<Matrix> = frames.iter().rev().cloned().collect();
        let (_, reversed_logits) = model.forward_temporal(&store, &reversed);
        assert_ne!(forward_logits, reversed_logits);
    }

    #[test]
    fn feature_extraction_pools_over_parts() {
        let (model, store) = setup(small_config(), 61);
        let mut rng = RngState::new(62);
        let parts = random_parts(4, 3, 16, &mut rng);
        let pooled = model.extract_features(&store, &parts);
        assert_eq!(pooled.shape(), (3, 12));
        // Pooling must be order-invariant: shuffling parts leaves it unchanged.
        let shuffled = vec![
            parts[2].clone(),
            parts[0].clone(),
            parts[3].clone(),
            parts[1].clone(),
        ];
        let pooled_shuffled = model.extract_features(&store, &shuffled);
        for (a, b) in pooled.values().iter().zip(pooled_shuffled.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let config = ModelConfig {
            n_tiles: 4,
            n_frames: 3,
            tile_input_dim: 6,
            frame_input_dim: 6,
            encoder_dim: 5,
            head_dim: 4,
            spatial_hidden_dim: 5,
            lstm_dim: 4,
            n_spatial_classes: 4,
            n_temporal_classes: 4,
        };
        let (model, mut store) = setup(config, 71);
        let mut rng = RngState::new(72);
        let tiles = random_parts(4, 3, 6, &mut rng);
        let frames = random_parts(3, 3, 6, &mut rng);
        let s_labels = vec![0usize, 2, 3];
        let t_labels = vec![1usize, 1, 0];

        let report = grad_check(
            &mut store,
            |store, accumulate| {
                let (s_cache, s_logits) = model.forward_spatial(store, &tiles);
                let s_probs = softmax(&s_logits);
                let (s_loss, s_d) = cross_entropy_batch(&s_probs, &s_labels);
                let (t_cache, t_logits) = model.forward_temporal(store, &frames);
                let t_probs = softmax(&t_logits);
                let (t_loss, t_d) = cross_entropy_batch(&t_probs, &t_labels);
                if accumulate {
                    model.backward_spatial(store, &s_cache, &s_d);
                    model.backward_temporal(store, &t_cache, &t_d);
                }
                s_loss + t_loss
            },
            73,
        );
        assert!(
            report.passes(1e-4),
            "worst relative error {:.3e} in {:?}",
            report.max_rel_error,
            report
                .tensors
                .iter()
                .max_by(|a, b| a.max_rel_error.partial_cmp(&b.max_rel_error).unwrap())
                .map(|t| &t.tensor)
        );
    }
}
