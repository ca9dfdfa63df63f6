//! Synthetic datasets for the ordering tasks.
//!
//! Spatial samples are small grayscale images cut into an m×m grid of tiles;
//! each class renders a parametric global pattern (an oriented gradient plus
//! a phase-shifted ripple and placed blobs), so tile content correlates with
//! tile position without determining it. Temporal samples are short frame
//! sequences of a moving oriented blob whose direction and speed are
//! class-specific; a mild amplitude decay over time makes reversed sequences
//! distinguishable from forward ones in the raw data while being invisible
//! after per-part normalization.
//!
//! Values are stored raw in `[0, 1]`. Batch assembly permutes the parts of a
//! sample, optionally adds jitter noise, and then normalizes each part to
//! zero mean and unit maximum absolute value.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nncore::{Matrix, RngState};
use crate::permset::{PermSetError, PermutationSet};

/// Additive noise amplitude applied per element before normalization when
/// batch jitter is enabled.
pub const JITTER_AMPLITUDE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum ToyDataError {
    #[error("invalid dataset spec: {0}")]
    InvalidSpec(String),

    #[error("assignment {index} references sample {sample} but only {available} exist")]
    SampleOutOfRange {
        index: usize,
        sample: usize,
        available: usize,
    },

    #[error("assignment {index} references permutation {perm} but the set has {available}")]
    PermOutOfRange {
        index: usize,
        perm: usize,
        available: usize,
    },

    #[error("permutation length {perm} does not match parts per sample {parts}")]
    PartCountMismatch { perm: usize, parts: usize },

    #[error("dataset header at byte 0: {0}")]
    Header(String),

    #[error("dataset header is inconsistent: {0}")]
    HeaderMismatch(String),

    #[error("dataset payload at byte offset {offset}: expected {expected} bytes, found {found}")]
    Payload {
        offset: usize,
        expected: usize,
        found: usize,
    },

    #[error(transparent)]
    Perm(#[from] PermSetError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Spatial,
    Temporal,
}

impl TaskKind {
    pub fn label(&self) -> &'static str {
        match self {
            TaskKind::Spatial => "spatial",
            TaskKind::Temporal => "temporal",
        }
    }
}

/// Generation parameters for one dataset.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DatasetSpec {
    pub kind: TaskKind,
    /// Tiles per image side (spatial task).
    pub grid: usize,
    /// Frames per sequence (temporal task).
    pub frames: usize,
    /// Pixels per side of one tile or frame.
    pub part_extent: usize,
    pub n_classes: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn spatial(seed: u64) -> Self {
        Self {
            kind: TaskKind::Spatial,
            grid: 2,
            frames: 4,
            part_extent: 8,
            n_classes: 8,
            n_train: 2048,
            n_val: 100,
            n_test: 512,
            seed,
        }
    }

    pub fn temporal(seed: u64) -> Self {
        Self {
            kind: TaskKind::Temporal,
            ..Self::spatial(seed)
        }
    }

    /// Number of permutable parts: m·m tiles or u frames.
    pub fn parts_per_sample(&self) -> usize {
        match self.kind {
            TaskKind::Spatial => self.grid * self.grid,
            TaskKind::Temporal => self.frames,
        }
    }

    /// Flattened length of one part.
    pub fn part_dim(&self) -> usize {
        self.part_extent * self.part_extent
    }

    pub fn validate(&self) -> Result<(), ToyDataError> {
        let mut problems = Vec::new();
        match self.kind {
            TaskKind::Spatial if self.grid < 2 => {
                problems.push("spatial grid must be >= 2".to_string())
            }
            TaskKind::Temporal if self.frames < 2 => {
                problems.push("temporal frame count must be >= 2".to_string())
            }
            _ => {}
        }
        if self.part_extent < 2 {
            problems.push("part extent must be >= 2 pixels".to_string());
        }
        if self.n_classes < 1 {
            problems.push("need at least one class".to_string());
        }
        for (name, count) in [
            ("train", self.n_train),
            ("val", self.n_val),
            ("test", self.n_test),
        ] {
            if count < 1 {
                problems.push(format!("{name} split must hold at least one sample"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ToyDataError::InvalidSpec(problems.join("; ")))
        }
    }
}

/// One sample: a class label plus its parts (tiles in reading order or frames
/// in time order), raw values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub label: u32,
    pub parts: Vec<Vec<f32>>,
}

/// A generated dataset with train/val/test splits.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
}

/// A training batch: `parts[p]` is a B×part_dim matrix holding part slot `p`
/// (after permutation and normalization) of every sample; `labels[b]` is the
/// id of the permutation applied to row `b`.
#[derive(Debug, Clone)]
pub struct PartsBatch {
    pub parts: Vec<Matrix>,
    pub labels: Vec<usize>,
}

impl PartsBatch {
    pub fn batch_size(&self) -> usize {
        self.labels.len()
    }
}

/// Normalizes one part to zero mean and unit maximum absolute value.
/// A constant part maps to all zeros; the threshold below absorbs the
/// rounding residue mean subtraction leaves on exactly-constant input, which
/// would otherwise be amplified to full scale.
pub fn normalize_part(values: &[f64]) -> Vec<f64> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut out: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let max_abs = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs <= 1e-12 {
        out.fill(0.0);
    } else {
        for v in &mut out {
            *v /= max_abs;
        }
    }
    out
}

pub fn generate(spec: &DatasetSpec) -> Result<Dataset, ToyDataError> {
    spec.validate()?;
    match spec.kind {
        TaskKind::Spatial => Ok(gen_spatial(spec)),
        TaskKind::Temporal => Ok(gen_temporal(spec)),
    }
}

// ---------------------------------------------------------------------------
// Spatial generation
// ---------------------------------------------------------------------------

struct SpatialClass {
    theta: f64,
    freq: f64,
    grad_amp: f64,
    ripple_amp: f64,
    blob_centers: Vec<(f64, f64)>,
    blob_sigma: f64,
}

fn spatial_class_params(spec: &DatasetSpec, class: usize) -> SpatialClass {
    let mut rng = RngState::for_subsystem(spec.seed, &format!("spatial-class-{class}"));
    let theta = PI * (class as f64 + rng.uniform(0.0, 0.6)) / spec.n_classes as f64;
    let freq = rng.uniform(0.9, 1.7);
    let grad_amp = rng.uniform(0.25, 0.40);
    let ripple_amp = rng.uniform(0.16, 0.26);
    let n_blobs = 2 + class % 3;
    let blob_centers = (0..n_blobs)
        .map(|_| (rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85)))
        .collect();
    let blob_sigma = rng.uniform(0.09, 0.15);
    SpatialClass {
        theta,
        freq,
        grad_amp,
        ripple_amp,
        blob_centers,
        blob_sigma,
    }
}

fn render_spatial_sample(spec: &DatasetSpec, class: &SpatialClass, rng: &mut RngState) -> Vec<Vec<f32>> {
    let m = spec.grid;
    let e = spec.part_extent;
    let pixels = m * e;

    let phase = rng.uniform(0.0, 2.0 * PI);
    let theta = class.theta + rng.uniform(-0.06, 0.06);
    let blobs: Vec<(f64, f64, f64)> = class
        .blob_centers
        .iter()
        .map(|&(cx, cy)| {
            (
                cx + rng.uniform(-0.05, 0.05),
                cy + rng.uniform(-0.05, 0.05),
                rng.uniform(0.45, 0.85),
            )
        })
        .collect();

    let (sin_t, cos_t) = theta.sin_cos();
    let inv_two_sigma2 = 1.0 / (2.0 * class.blob_sigma * class.blob_sigma);

    // Render the full image, then cut into tiles in reading order.
    let mut image = vec![0f32; pixels * pixels];
    for py in 0..pixels {
        let y = (py as f64 + 0.5) / pixels as f64;
        for px in 0..pixels {
            let x = (px as f64 + 0.5) / pixels as f64;
            let u = (x - 0.5) * cos_t + (y - 0.5) * sin_t;
            let mut v = 0.5 + class.grad_amp * u
                + class.ripple_amp * (2.0 * PI * class.freq * u + phase).sin();
            for &(bx, by, amp) in &blobs {
                let dx = x - bx;
                let dy = y - by;
                v += amp * (-(dx * dx + dy * dy) * inv_two_sigma2).exp();
            }
            image[py * pixels + px] = v.clamp(0.0, 1.0) as f32;
        }
    }

    let mut parts = Vec::with_capacity(m * m);
    for ty in 0..m {
        for tx in 0..m {
            let mut tile = Vec::with_capacity(e * e);
            for dy in 0..e {
                let py = ty * e + dy;
                let row_start = py * pixels + tx * e;
                tile.extend_from_slice(&image[row_start..row_start + e]);
            }
            parts.push(tile);
        }
    }
    parts
}

fn gen_spatial(spec: &DatasetSpec) -> Dataset {
    let classes: Vec<SpatialClass> = (0..spec.n_classes)
        .map(|c| spatial_class_params(spec, c))
        .collect();
    let mut splits = Vec::with_capacity(3);
    for (split_name, count) in [
        ("train", spec.n_train),
        ("val", spec.n_val),
        ("test", spec.n_test),
    ] {
        let mut samples = Vec::with_capacity(count);
        for i in 0..count {
            let label = (i % spec.n_classes) as u32;
            let mut rng =
                RngState::for_subsystem(spec.seed, &format!("spatial-{split_name}-{i}"));
            let parts = render_spatial_sample(spec, &classes[label as usize], &mut rng);
            samples.push(Sample { label, parts });
        }
        splits.push(samples);
    }
    let test = splits.pop().unwrap();
    let val = splits.pop().unwrap();
    let train = splits.pop().unwrap();
    Dataset {
        spec: spec.clone(),
        train,
        val,
        test,
    }
}

// ---------------------------------------------------------------------------
// Temporal generation
// ---------------------------------------------------------------------------

struct TemporalClass {
    direction: f64,
    speed: f64,
    sigma_long: f64,
    sigma_short: f64,
    decay: f64,
}

fn temporal_class_params(spec: &DatasetSpec, class: usize) -> TemporalClass {
    let mut rng = RngState::for_subsystem(spec.seed, &format!("temporal-class-{class}"));
    let direction = 2.0 * PI * class as f64 / spec.n_classes as f64
        + rng.uniform(0.0, 2.0 * PI / (3.0 * spec.n_classes as f64));
    TemporalClass {
        direction,
        speed: rng.uniform(0.10, 0.16),
        sigma_long: rng.uniform(0.16, 0.22),
        sigma_short: rng.uniform(0.07, 0.10),
        decay: rng.uniform(0.04, 0.08),
    }
}

/// Displacement on the unit torus, folded into [-0.5, 0.5).
#[inline]
fn wrap(d: f64) -> f64 {
    let mut d = d % 1.0;
    if d < -0.5 {
        d += 1.0;
    } else if d >= 0.5 {
        d -= 1.0;
    }
    d
}

fn render_temporal_sample(
    spec: &DatasetSpec,
    class: &TemporalClass,
    rng: &mut RngState,
) -> Vec<Vec<f32>> {
    let e = spec.part_extent;
    let start = (rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9));
    let amp0 = rng.uniform(0.6, 0.9);
    let direction = class.direction + rng.uniform(-0.08, 0.08);
    let (sin_a, cos_a) = direction.sin_cos();
    let background = 0.08;

    let mut frames = Vec::with_capacity(spec.frames);
    for f in 0..spec.frames {
        let cx = (start.0 + f as f64 * class.speed * cos_a).rem_euclid(1.0);
        let cy = (start.1 + f as f64 * class.speed * sin_a).rem_euclid(1.0);
        let amp = amp0 * (1.0 - class.decay * f as f64);
        let mut frame = Vec::with_capacity(e * e);
        for py in 0..e {
            let y = (py as f64 + 0.5) / e as f64;
            for px in 0..e {
                let x = (px as f64 + 0.5) / e as f64;
                let dx = wrap(x - cx);
                let dy = wrap(y - cy);
                let long = dx * cos_a + dy * sin_a;
                let short = -dx * sin_a + dy * cos_a;
                let q = (long / class.sigma_long).powi(2) + (short / class.sigma_short).powi(2);
                let v = background + amp * (-q / 2.0).exp();
                frame.push(v.clamp(0.0, 1.0) as f32);
            }
        }
        frames.push(frame);
    }
    frames
}

fn gen_temporal(spec: &DatasetSpec) -> Dataset {
    let classes: Vec<TemporalClass> = (0..spec.n_classes)
        .map(|c| temporal_class_params(spec, c))
        .collect();
    let mut splits = Vec::with_capacity(3);
    for (split_name, count) in [
        ("train", spec.n_train),
        ("val", spec.n_val),
        ("test", spec.n_test),
    ] {
        let mut samples = Vec::with_capacity(count);
        for i in 0..count {
            let label = (i % spec.n_classes) as u32;
            let mut rng =
                RngState::for_subsystem(spec.seed, &format!("temporal-{split_name}-{i}"));
            let parts = render_temporal_sample(spec, &classes[label as usize], &mut rng);
            samples.push(Sample { label, parts });
        }
        splits.push(samples);
    }
    let test = splits.pop().unwrap();
    let val = splits.pop().unwrap();
    let train = splits.pop().unwrap();
    Dataset {
        spec: spec.clone(),
        train,
        val,
        test,
    }
}

// ---------------------------------------------------------------------------
// Batch assembly
// ---------------------------------------------------------------------------

/// Builds a training batch from `(sample id, permutation id)` assignments.
///
/// For each assignment the sample's parts are reordered by the permutation,
/// optionally jittered with per-element uniform noise of amplitude
/// [`JITTER_AMPLITUDE`] (drawn row by row, part by part, element by element),
/// and normalized per part. Labels are the permutation ids, in assignment
/// order. With jitter disabled the result is a pure function of its inputs.
pub fn make_permuted_batch(
    samples: &[Sample],
    set: &PermutationSet,
    assignments: &[(usize, usize)],
    mut jitter: Option<&mut RngState>,
) -> Result<PartsBatch, ToyDataError> {
    let batch = assignments.len();
    assert!(batch > 0, "empty batch");
    let n_parts = set.n();
    let part_dim = samples
        .first()
        .map(|s| s.parts.first().map(|p| p.len()).unwrap_or(0))
        .unwrap_or(0);

    let mut parts: Vec<Matrix> = (0..n_parts).map(|_| Matrix::zeros(batch, part_dim)).collect();
    let mut labels = Vec::with_capacity(batch);

    for (index, &(sample_id, perm_id)) in assignments.iter().enumerate() {
        let sample = samples
            .get(sample_id)
            .ok_or(ToyDataError::SampleOutOfRange {
                index,
                sample: sample_id,
                available: samples.len(),
            })?;
        if perm_id >= set.len() {
            return Err(ToyDataError::PermOutOfRange {
                index,
                perm: perm_id,
                available: set.len(),
            });
        }
        if sample.parts.len() != n_parts {
            return Err(ToyDataError::PartCountMismatch {
                perm: n_parts,
                parts: sample.parts.len(),
            });
        }
        let permuted = set.get(perm_id).apply(&sample.parts)?;
        for (p, part) in permuted.iter().enumerate() {
            let mut raw: Vec<f64> = part.iter().map(|&v| f64::from(v)).collect();
            if let Some(rng) = jitter.as_deref_mut() {
                for v in &mut raw {
                    *v += rng.uniform(-JITTER_AMPLITUDE, JITTER_AMPLITUDE);
                }
            }
            let normalized = normalize_part(&raw);
            parts[p].row_mut(index).copy_from_slice(&normalized);
        }
        labels.push(perm_id);
    }

    Ok(PartsBatch { parts, labels })
}

/// Normalized parts of a single sample in original order (no permutation, no
/// jitter) — the canonical model input for evaluation.
pub fn normalized_parts(sample: &Sample) -> Vec<Vec<f64>> {
    sample
        .parts
        .iter()
        .map(|p| {
            let raw: Vec<f64> = p.iter().map(|&v| f64::from(v)).collect();
            normalize_part(&raw)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Binary dataset files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    spec: DatasetSpec,
    parts_per_sample: usize,
    part_dim: usize,
}

impl Dataset {
    fn all_samples(&self) -> impl Iterator<Item = &Sample> {
        self.train.iter().chain(self.val.iter()).chain(self.test.iter())
    }

    pub fn total_samples(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    /// Serializes to the on-disk format: one JSON header line, the f32
    /// little-endian part payload (samples in train/val/test order, parts in
    /// original order), then one u32 little-endian label per sample.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = DatasetHeader {
            spec: self.spec.clone(),
            parts_per_sample: self.spec.parts_per_sample(),
            part_dim: self.spec.part_dim(),
        };
        let mut bytes = serde_json::to_vec(&header).expect("header serialization cannot fail");
        bytes.push(b'\n');
        for sample in self.all_samples() {
            for part in &sample.parts {
                for v in part {
                    bytes.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        for sample in self.all_samples() {
            bytes.extend_from_slice(&sample.label.to_le_bytes());
        }
        bytes
    }

    pub fn save(&self, path: &Path) -> Result<(), ToyDataError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ToyDataError> {
        let bytes = fs::read(path)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ToyDataError> {
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| ToyDataError::Header("missing header line".into()))?;
        let header: DatasetHeader = serde_json::from_slice(&bytes[..newline])
            .map_err(|e| ToyDataError::Header(e.to_string()))?;
        let spec = header.spec;
        spec.validate()?;
        if header.parts_per_sample != spec.parts_per_sample() {
            return Err(ToyDataError::HeaderMismatch(format!(
                "declared parts_per_sample {} but spec implies {}",
                header.parts_per_sample,
                spec.parts_per_sample()
            )));
        }
        if header.part_dim != spec.part_dim() {
            return Err(ToyDataError::HeaderMismatch(format!(
                "declared part_dim {} but spec implies {}",
                header.part_dim,
                spec.part_dim()
            )));
        }

        let total = spec.n_train + spec.n_val + spec.n_test;
        let values_per_sample = header.parts_per_sample * header.part_dim;
        let payload_offset = newline + 1;
        let expected_values = total * values_per_sample * 4;
        let expected_labels = total * 4;
        let found = bytes.len() - payload_offset;
        if found != expected_values + expected_labels {
            return Err(ToyDataError::Payload {
                offset: payload_offset,
                expected: expected_values + expected_labels,
                found,
            });
        }

        let mut offset = payload_offset;
        let read_f32 = |offset: &mut usize| {
            let mut raw = [0u8; 4];
            raw.copy_from_slice(&bytes[*offset..*offset + 4]);
            *offset += 4;
            f32::from_le_bytes(raw)
        };
        let mut samples = Vec::with_capacity(total);
        for _ in 0..total {
            let mut parts = Vec::with_capacity(header.parts_per_sample);
            for _ in 0..header.parts_per_sample {
                let mut part = Vec::with_capacity(header.part_dim);
                for _ in 0..header.part_dim {
                    part.push(read_f32(&mut offset));
                }
                parts.push(part);
            }
            samples.push(Sample { label: 0, parts });
        }
        for sample in &mut samples {
            let mut raw = [0u8; 4];
            raw.copy_from_slice(&bytes[offset..offset + 4]);
            offset += 4;
            sample.label = u32::from_le_bytes(raw);
        }

        let test = samples.split_off(spec.n_train + spec.n_val);
        let val = samples.split_off(spec.n_train);
        Ok(Dataset {
            spec,
            train: samples,
            val,
            test,
        })
    }
}
